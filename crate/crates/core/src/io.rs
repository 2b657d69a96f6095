//! Matrix files.
//!
//! KLRM layout (all little-endian):
//!
//! | offset | size | field                   |
//! |--------|------|-------------------------|
//! | 0      | 4    | magic `b"KLRM"`         |
//! | 4      | 4    | version, `u32` (= 1)    |
//! | 8      | 8    | rows, `u64`             |
//! | 16     | 8    | cols, `u64`             |
//! | 24     | 8·rows·cols | row-major `f64` payload |
//!
//! CSV import accepts one matrix row per line, `#` comment lines, an
//! optional non-numeric header line, and at most [`CSV_MAX_ENTRIES`] entries.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linops::DenseMatrix;

pub const KLRM_MAGIC: [u8; 4] = *b"KLRM";
pub const KLRM_VERSION: u32 = 1;
pub const CSV_MAX_ENTRIES: usize = 1_000_000;

pub fn write_klrm<W: Write>(mut w: W, a: &DenseMatrix) -> Result<()> {
    w.write_all(&KLRM_MAGIC)?;
    w.write_all(&KLRM_VERSION.to_le_bytes())?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for x in a.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_klrm<R: Read>(mut r: R) -> Result<DenseMatrix> {
    let mut header = [0u8; 24];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated KLRM header".into()))?;
    if header[0..4] != KLRM_MAGIC {
        return Err(Error::Format("bad magic, not a KLRM file".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != KLRM_VERSION {
        return Err(Error::Format(format!("unsupported KLRM version {version}")));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let len = rows
        .checked_mul(cols)
        .and_then(|l| usize::try_from(l).ok())
        .ok_or_else(|| Error::Format(format!("KLRM shape {rows}x{cols} overflows")))?;
    let mut data = Vec::with_capacity(len);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format("truncated KLRM payload".into()))?;
        data.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after KLRM payload".into()));
    }
    DenseMatrix::new(rows as usize, cols as usize, data)
}

pub fn save_klrm(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    write_klrm(BufWriter::new(File::create(path)?), a)
}

pub fn load_klrm(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_klrm(BufReader::new(File::open(path)?))
}

pub fn read_csv_matrix<R: Read>(r: R) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut entries = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                entries += row.len();
                if entries > CSV_MAX_ENTRIES {
                    return Err(Error::Format(format!(
                        "CSV matrix exceeds {CSV_MAX_ENTRIES} entries; use the KLRM format"
                    )));
                }
                rows.push(row);
            }
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Format(format!("line {}: {e}", line + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Format("CSV contains no numeric rows".into()));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn load_csv_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_csv_matrix(BufReader::new(File::open(path)?))
}

pub fn write_csv_matrix<W: Write>(w: W, a: &DenseMatrix) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for i in 0..a.rows() {
        writer
            .write_record(a.row(i).iter().map(|x| format!("{x:e}")))
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads a matrix by extension: `.csv` as CSV, anything else as KLRM.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv_matrix(path),
        _ => load_klrm(path),
    }
}
