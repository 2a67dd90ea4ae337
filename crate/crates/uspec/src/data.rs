//! Dataset and labeling types plus their on-disk formats.
//!
//! Objects are identified by their row index (0..N-1) and are never
//! reordered by any operation. All values are finite f64; loaders reject
//! NaN/Inf up front so the numeric kernels never have to re-check.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense N x d matrix of objects, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer, rejecting empty shapes
    /// and non-finite entries.
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Value(format!("dataset shape {n}x{dim} is empty")));
        }
        if values.len() != n * dim {
            return Err(Error::Format(format!(
                "expected {} values for a {n}x{dim} dataset, got {}",
                n * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { n, dim, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Flat row-major view of all values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copies the given rows (in order) into a new dataset.
    pub fn gather(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Value("cannot gather zero rows".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Dataset::new(rows.len(), self.dim, values)
    }
}

/// Per-object cluster assignments with ids in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    labels: Vec<usize>,
    k: usize,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Value("labeling must cover at least one object".into()));
        }
        if k == 0 {
            return Err(Error::Value("cluster count must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Value(format!("label {bad} out of range 0..{k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

/// On-disk dataset encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Comma-separated UTF-8 text, '.' decimal point, optional header row.
    Csv,
    /// Little-endian binary: u64 N, u64 d, then N*d f64 values.
    F64Binary,
}

/// Loads a dataset from `path` in the given format.
///
/// CSV rows must all have the same column count; a non-numeric first row is
/// treated as a header and skipped. Non-finite values are rejected.
pub fn load_dataset<P: AsRef<Path>>(path: P, format: DataFormat) -> Result<Dataset> {
    match format {
        DataFormat::Csv => load_csv(path.as_ref()),
        DataFormat::F64Binary => load_binary(path.as_ref()),
    }
}

/// Writes a dataset to `path` in the given format.
///
/// The binary encoding round-trips bit-exactly through `load_dataset`; the
/// CSV encoding uses the shortest representation that parses back to the
/// same f64.
pub fn save_dataset<P: AsRef<Path>>(data: &Dataset, path: P, format: DataFormat) -> Result<()> {
    match format {
        DataFormat::Csv => save_csv(data, path.as_ref()),
        DataFormat::F64Binary => save_binary(data, path.as_ref()),
    }
}

fn load_csv(path: &Path) -> Result<Dataset> {
    let reader = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    let mut dim = None;
    let mut n = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.trim().parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if n == 0 && dim.is_none() => continue, // header row
            Err(_) => {
                return Err(Error::Format(format!(
                    "non-numeric cell on line {}",
                    lineno + 1
                )))
            }
        };
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Format(format!(
                    "ragged row on line {}: expected {} columns, got {}",
                    lineno + 1,
                    d,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend_from_slice(&row);
        n += 1;
    }
    let dim = dim.ok_or_else(|| Error::Format("no data rows".into()))?;
    Dataset::new(n, dim, values)
}

fn save_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..data.n() {
        let row = data.row(i);
        let mut line = String::new();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn load_binary(path: &Path) -> Result<Dataset> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::Format("truncated binary header".into()))?;
    let n = u64::from_le_bytes(header[0..8].try_into().unwrap()) as usize;
    let dim = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let count = n
        .checked_mul(dim)
        .ok_or_else(|| Error::Format("binary header overflows".into()))?;
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        reader
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("truncated binary payload".into()))?;
        values.push(f64::from_le_bytes(buf));
    }
    Dataset::new(n, dim, values)
}

fn save_binary(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(data.n() as u64).to_le_bytes())?;
    w.write_all(&(data.dim() as u64).to_le_bytes())?;
    for v in data.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one decimal label per line; line i holds the label of object i.
pub fn save_labels<P: AsRef<Path>>(labeling: &Labeling, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    for &l in labeling.as_slice() {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a label file written by [`save_labels`]; `k` is inferred as the
/// maximum label plus one.
pub fn load_labels<P: AsRef<Path>>(path: P) -> Result<Labeling> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let l: usize = trimmed
            .parse()
            .map_err(|_| Error::Format(format!("bad label on line {}", lineno + 1)))?;
        labels.push(l);
    }
    if labels.is_empty() {
        return Err(Error::Value("label file is empty".into()));
    }
    let k = labels.iter().max().unwrap() + 1;
    Labeling::new(labels, k)
}
