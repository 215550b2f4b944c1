use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewMut2};

use super::cg::{block_cg, CgOptions, CgReport, LinearOperator};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;

/// The symmetric matrix `[[base, border], [borderᵀ, corner]]`.
///
/// `base` is `L_X` (t×t) and is shared, never copied; `border` (t×k) and
/// `corner` (k×k) are averages over `member_count` candidate items or
/// batches. The full `(t+k)²` matrix is only formed by [`to_dense`].
///
/// [`to_dense`]: BorderedKernel::to_dense
#[derive(Debug, Clone)]
pub struct BorderedKernel<'a> {
    base: ArrayView2<'a, f64>,
    border: Array2<f64>,
    corner: Array2<f64>,
    member_count: usize,
}

impl<'a> BorderedKernel<'a> {
    pub fn new(base: ArrayView2<'a, f64>, border: Array2<f64>, corner: Array2<f64>, member_count: usize) -> Result<Self> {
        let t = base.nrows();
        let k = corner.nrows();
        if base.ncols() != t || corner.ncols() != k || border.dim() != (t, k) || k == 0 {
            return Err(Error::Dimension(format!(
                "bordered kernel: base {:?}, border {:?}, corner {:?}",
                base.dim(),
                border.dim(),
                corner.dim()
            )));
        }
        Ok(Self { base, border, corner, member_count })
    }

    pub fn base(&self) -> ArrayView2<'a, f64> {
        self.base
    }
    pub fn border(&self) -> ArrayView2<'_, f64> {
        self.border.view()
    }
    pub fn corner(&self) -> ArrayView2<'_, f64> {
        self.corner.view()
    }
    pub fn member_count(&self) -> usize {
        self.member_count
    }
    /// Size of the base block.
    pub fn base_dim(&self) -> usize {
        self.base.nrows()
    }
    /// Number of bordering rows/columns.
    pub fn k(&self) -> usize {
        self.corner.nrows()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let t = self.base_dim();
        let n = t + self.k();
        let mut out = Array2::zeros((n, n));
        out.slice_mut(s![..t, ..t]).assign(&self.base);
        out.slice_mut(s![..t, t..]).assign(&self.border);
        out.slice_mut(s![t.., ..t]).assign(&self.border.t());
        out.slice_mut(s![t.., t..]).assign(&self.corner);
        out
    }

    /// Multiplies each row of `x` by this matrix, skipping the base block.
    fn apply_border_part(&self, x: ArrayView2<'_, f64>, mut y: ArrayViewMut2<'_, f64>) {
        let t = self.base_dim();
        let x_top = x.slice(s![.., ..t]);
        let x_bot = x.slice(s![.., t..]);
        {
            let mut y_top = y.slice_mut(s![.., ..t]);
            general_mat_mul(1.0, &x_bot, &self.border.t(), 1.0, &mut y_top);
        }
        let mut y_bot = y.slice_mut(s![.., t..]);
        general_mat_mul(1.0, &x_top, &self.border, 0.0, &mut y_bot);
        general_mat_mul(1.0, &x_bot, &self.corner.t(), 1.0, &mut y_bot);
    }
}

impl LinearOperator for BorderedKernel<'_> {
    fn dim(&self) -> usize {
        self.base_dim() + self.k()
    }

    fn apply_block(&self, x: ArrayView2<'_, f64>, mut y: ArrayViewMut2<'_, f64>) {
        let t = self.base_dim();
        {
            let x_top = x.slice(s![.., ..t]);
            let mut y_top = y.slice_mut(s![.., ..t]);
            general_mat_mul(1.0, &x_top, &self.base.t(), 0.0, &mut y_top);
        }
        self.apply_border_part(x, y);
    }

    fn diagonal(&self) -> Array1<f64> {
        let mut d = self.base.diag().to_vec();
        d.extend(self.corner.diag().iter());
        Array1::from(d)
    }
}

/// Averages the borders of `L_{X ∪ I}` over the candidate batches `members`.
///
/// Each member is an ordered list of `k` items outside `selected`; a
/// single-item candidate is a batch of length one. Column `c` of the border
/// is the mean of `L_{X, I[c]}` and the corner is the mean of `L_{I, I}`,
/// symmetrized.
pub fn border_average<'a, M: AsRef<[usize]>>(
    kernel: &KernelMatrix,
    base: ArrayView2<'a, f64>,
    selected: &[usize],
    members: &[M],
) -> Result<BorderedKernel<'a>> {
    let Some(first) = members.first() else {
        return Err(Error::Partition("cannot average an empty member list".into()));
    };
    let k = first.as_ref().len();
    if k == 0 {
        return Err(Error::Partition("members must contain at least one item".into()));
    }
    let t = selected.len();
    if base.dim() != (t, t) {
        return Err(Error::Dimension(format!("base is {:?}, selected set has {t} items", base.dim())));
    }
    let mut border = Array2::<f64>::zeros((t, k));
    let mut corner = Array2::<f64>::zeros((k, k));
    for member in members {
        let items = member.as_ref();
        if items.len() != k {
            return Err(Error::Partition(format!("member of size {} in a family of size {k}", items.len())));
        }
        for (c, &i) in items.iter().enumerate() {
            let row = kernel.row(i);
            for (r, &x) in selected.iter().enumerate() {
                border[[r, c]] += row[x];
            }
            for (a, &j) in items.iter().enumerate() {
                corner[[c, a]] += row[j];
            }
        }
    }
    let scale = 1.0 / members.len() as f64;
    border *= scale;
    corner *= scale;
    let sym = (&corner + &corner.t()) * 0.5;
    BorderedKernel::new(base, border, sym, members.len())
}

/// Last `k` columns of the inverse of the assembled bordered matrix, as a
/// `(t+k)×k` array, computed with `k` CG runs.
///
/// Non-converged runs are returned with `converged = false`; the caller
/// decides whether to fall back to a direct solve.
pub fn bordered_inverse_columns(bk: &BorderedKernel<'_>, opts: &CgOptions) -> Result<(Array2<f64>, Vec<CgReport>)> {
    let family = BorderedFamily::new(vec![bk.clone()])?;
    let (mut zs, reports) = family.inverse_columns(opts)?;
    Ok((zs.pop().expect("one member"), reports))
}

/// `⟨D, Mat(Z)⟩` where `D` is zero except for its last `k` rows and columns,
/// which hold `delta_border` (t×k) and `delta_corner` (k×k).
///
/// `Mat(Z)` has `Z` as its last `k` columns and `Zᵀ` as its last `k` rows,
/// with the shared k×k corner taken once as the symmetrized bottom block
/// of `Z`. Off-corner entries therefore count twice and corner entries once.
pub fn mat_inner_gain(delta_border: ArrayView2<'_, f64>, delta_corner: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>) -> Result<f64> {
    let (t, k) = delta_border.dim();
    if delta_corner.dim() != (k, k) || z.dim() != (t + k, k) {
        return Err(Error::Dimension(format!(
            "delta border {:?}, delta corner {:?}, Z {:?}",
            delta_border.dim(),
            delta_corner.dim(),
            z.dim()
        )));
    }
    let z_top = z.slice(s![..t, ..]);
    let z_bot = z.slice(s![t.., ..]);
    let mut top = 0.0;
    for (a, b) in delta_border.iter().zip(z_top.iter()) {
        top += a * b;
    }
    let mut corner = 0.0;
    for a in 0..k {
        for c in 0..k {
            corner += delta_corner[[a, c]] * 0.5 * (z_bot[[a, c]] + z_bot[[c, a]]);
        }
    }
    Ok(2.0 * top + corner)
}

/// Several bordered kernels over one shared base block.
///
/// Applying the family to a block of vectors, where every row belongs to one
/// member, costs a single product with the base plus small per-member
/// corrections. This is how the `p` partitions of one greedy iteration are
/// solved and estimated together.
#[derive(Debug, Clone)]
pub struct BorderedFamily<'a> {
    members: Vec<BorderedKernel<'a>>,
}

impl<'a> BorderedFamily<'a> {
    pub fn new(members: Vec<BorderedKernel<'a>>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::Partition("empty bordered family".into()));
        };
        let (t, k) = (first.base_dim(), first.k());
        for m in &members {
            if m.base_dim() != t || m.k() != k || m.base.as_ptr() != first.base.as_ptr() {
                return Err(Error::Dimension("bordered family members must share base and k".into()));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[BorderedKernel<'a>] {
        &self.members
    }
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }
    pub fn k(&self) -> usize {
        self.members[0].k()
    }

    /// `y.row(q) = M_{groups[q]} · x.row(q)`.
    pub fn apply_grouped(&self, groups: &[usize], x: ArrayView2<'_, f64>, mut y: ArrayViewMut2<'_, f64>) {
        let t = self.members[0].base_dim();
        {
            let x_top = x.slice(s![.., ..t]);
            let mut y_top = y.slice_mut(s![.., ..t]);
            general_mat_mul(1.0, &x_top, &self.members[0].base.t(), 0.0, &mut y_top);
        }
        let mut start = 0;
        while start < groups.len() {
            let g = groups[start];
            let mut end = start + 1;
            while end < groups.len() && groups[end] == g {
                end += 1;
            }
            let xs = x.slice(s![start..end, ..]);
            let ys = y.slice_mut(s![start..end, ..]);
            self.members[g].apply_border_part(xs, ys);
            start = end;
        }
    }

    /// Last `k` inverse columns of every member, solved as one block of
    /// `len() · k` CG systems.
    pub fn inverse_columns(&self, opts: &CgOptions) -> Result<(Vec<Array2<f64>>, Vec<CgReport>)> {
        let k = self.k();
        let n = self.dim();
        let t = n - k;
        let systems = self.len() * k;
        let mut rhs = Array2::<f64>::zeros((systems, n));
        let mut group_of = Vec::with_capacity(systems);
        for g in 0..self.len() {
            for c in 0..k {
                rhs[[g * k + c, t + c]] = 1.0;
                group_of.push(g);
            }
        }
        let diagonals = opts.jacobi.then(|| group_of.iter().map(|&g| self.members[g].diagonal()).collect::<Vec<_>>());
        let mut rows_groups = Vec::with_capacity(systems);
        let reports = block_cg(
            |rows, x, y| {
                rows_groups.clear();
                rows_groups.extend(rows.iter().map(|&q| group_of[q]));
                self.apply_grouped(&rows_groups, x, y)
            },
            n,
            rhs.view(),
            opts,
            diagonals.as_deref(),
        )?;
        let mut zs = Vec::with_capacity(self.len());
        for g in 0..self.len() {
            let mut z = Array2::<f64>::zeros((n, k));
            for c in 0..k {
                z.column_mut(c).assign(&reports[g * k + c].solution);
            }
            zs.push(z);
        }
        Ok((zs, reports))
    }
}

#[cfg(test)]
/// Dense `(t+k)×k` selector of the last `k` coordinates.
pub(crate) fn trailing_selector(t: usize, k: usize) -> Array2<f64> {
    let mut e = Array2::zeros((t + k, k));
    for c in 0..k {
        e[[t + c, c]] = 1.0;
    }
    e
}
