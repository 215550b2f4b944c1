//! Kernel files.
//!
//! Binary layout, little-endian: the magic `DPPK`, a `u32` version (1), the
//! dimension as `u64`, then `d·d` IEEE-754 doubles in row-major order. A
//! plain-text alternative holds `d` comma-separated rows of `d` numbers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::KernelMatrix;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DPPK";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn write_binary<W: Write>(kernel: &KernelMatrix, mut out: W) -> Result<()> {
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(kernel.dim() as u64).to_le_bytes())?;
    for v in kernel.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_binary(kernel: &KernelMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    write_binary(kernel, BufWriter::new(file))
}

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        reason: reason.into(),
    }
}

/// Parses the binary format and validates the matrix.
pub fn read_binary(bytes: &[u8]) -> Result<KernelMatrix> {
    if bytes.len() < 4 {
        return Err(format_err(bytes.len(), "file ends inside the magic bytes"));
    }
    if bytes[..4] != MAGIC {
        return Err(format_err(0, format!("bad magic {:?}, expected \"DPPK\"", &bytes[..4])));
    }
    if bytes.len() < 8 {
        return Err(format_err(bytes.len(), "file ends inside the version field"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(bytes.len(), "file ends inside the dimension field"));
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if dim == 0 {
        return Err(format_err(8, "dimension is zero"));
    }
    let expected = (dim as u128) * (dim as u128) * 8 + HEADER_LEN as u128;
    if (bytes.len() as u128) < expected {
        return Err(format_err(bytes.len(), format!("truncated: expected {expected} bytes for dimension {dim}")));
    }
    if (bytes.len() as u128) > expected {
        return Err(format_err(expected as usize, "trailing bytes after the matrix"));
    }
    let dim = dim as usize;
    let entries: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    KernelMatrix::from_row_major(dim, entries)
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<KernelMatrix> {
    read_binary(&fs::read(path)?)
}

/// Loads `d` lines of `d` comma-separated numbers.
pub fn load_csv(path: impl AsRef<Path>) -> Result<KernelMatrix> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let content = line.trim();
        if !content.is_empty() {
            let mut row = Vec::new();
            for field in content.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| format_err(offset, format!("cannot parse {:?} as a number", field.trim())))?;
                row.push(v);
            }
            rows.push(row);
        }
        offset += line.len();
    }
    let dim = rows.len();
    if dim == 0 {
        return Err(format_err(0, "empty CSV kernel"));
    }
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(Error::Dimension(format!("CSV row {r} has {} entries, expected {dim}", row.len())));
    }
    KernelMatrix::from_row_major(dim, rows.concat())
}

/// Loads a kernel, choosing the format from the extension (`.csv` or
/// `.txt` for text, anything else binary).
pub fn load_kernel(path: impl AsRef<Path>) -> Result<KernelMatrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("txt") => load_csv(path),
        _ => load_binary(path),
    }
}

/// Saves `kernel` to `path` in the binary format and loads it back.
pub fn kernel_io_roundtrip(kernel: &KernelMatrix, path: impl AsRef<Path>) -> Result<KernelMatrix> {
    save_binary(kernel, path.as_ref())?;
    load_binary(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes_of(k: &KernelMatrix) -> Vec<u8> {
        let mut buf = Vec::new();
        write_binary(k, &mut buf).unwrap();
        buf
    }

    #[test]
    fn identity_round_trip_is_bit_exact() {
        let k = KernelMatrix::identity(3);
        let buf = bytes_of(&k);
        assert_eq!(buf.len(), 16 + 9 * 8);
        assert_eq!(&buf[..4], b"DPPK");
        assert_eq!(read_binary(&buf).unwrap(), k);
    }

    #[test]
    fn wrong_magic_reports_offset_zero() {
        let mut buf = bytes_of(&KernelMatrix::identity(2));
        buf[0] = b'X';
        assert!(matches!(read_binary(&buf), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn bad_version_and_truncation() {
        let mut buf = bytes_of(&KernelMatrix::identity(2));
        buf[4] = 2;
        assert!(matches!(read_binary(&buf), Err(Error::Format { offset: 4, .. })));
        let buf = bytes_of(&KernelMatrix::identity(2));
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(read_binary(cut), Err(Error::Format { offset, .. }) if offset == cut.len() as u64));
        assert!(matches!(read_binary(&buf[..10]), Err(Error::Format { offset: 10, .. })));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_binary(&long), Err(Error::Format { offset, .. }) if offset == buf.len() as u64));
    }

    #[test]
    fn csv_loader() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.csv");
        fs::write(&p, "2, 0.5\n0.5, 1\n").unwrap();
        let k = load_kernel(&p).unwrap();
        assert_eq!(k.as_slice(), &[2.0, 0.5, 0.5, 1.0]);
        fs::write(&p, "2, x\n0.5, 1\n").unwrap();
        assert!(matches!(load_csv(&p), Err(Error::Format { offset: 0, .. })));
        fs::write(&p, "2, 0.5\n0.5\n").unwrap();
        assert!(matches!(load_csv(&p), Err(Error::Dimension(_))));
    }
}
