//! Observation matrices and their on-disk formats.
//!
//! Two formats are supported. CSV holds one observation per row with an
//! optional header line. The binary format is a 16-byte header of two
//! little-endian `u64` values `(n, p)` followed by `n * p` little-endian `f64`
//! entries in column-major order. Both round-trip bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An `n x p` matrix of observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two observations, got {}",
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::InvalidInput("data matrix has no columns".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry {bad}")));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Dimension.
    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    pub fn column_means(&self) -> DVector<f64> {
        let n = self.n() as f64;
        DVector::from_iterator(self.p(), self.values.column_iter().map(|c| c.sum() / n))
    }

    /// Rows minus the column means.
    pub fn centered(&self) -> DMatrix<f64> {
        let mean = self.column_means();
        let mut y = self.values.clone();
        for (j, mut col) in y.column_iter_mut().enumerate() {
            col.add_scalar_mut(-mean[j]);
        }
        y
    }

    /// Removes column `idx` and returns it alongside the remaining predictors.
    pub fn split_column(&self, idx: usize) -> Result<(DataMatrix, DVector<f64>)> {
        if idx >= self.p() {
            return Err(Error::InvalidInput(format!(
                "response column {idx} out of range for {} columns",
                self.p()
            )));
        }
        let response = self.values.column(idx).into_owned();
        let rest = self.values.clone().remove_column(idx);
        Ok((DataMatrix::new(rest)?, response))
    }

    pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("row {}: cannot parse {field:?}", line + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W, header: bool) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        if header {
            wtr.write_record((0..self.p()).map(|j| format!("x{}", j + 1)))?;
        }
        for i in 0..self.n() {
            // `{:?}` prints the shortest representation that parses back exactly.
            wtr.write_record(self.values.row(i).iter().map(|v| format!("{v:?}")))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut header = [0u8; 16];
        reader.read_exact(&mut header)?;
        let n = u64::from_le_bytes(header[..8].try_into().unwrap()) as usize;
        let p = u64::from_le_bytes(header[8..].try_into().unwrap()) as usize;
        let len = n
            .checked_mul(p)
            .ok_or_else(|| Error::Parse("binary header overflows".into()))?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != len * 8 {
            return Err(Error::Parse(format!(
                "binary payload has {} bytes, header promises {}",
                bytes.len(),
                len * 8
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(DMatrix::from_vec(n, p, data))
    }

    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&(self.n() as u64).to_le_bytes())?;
        writer.write_all(&(self.p() as u64).to_le_bytes())?;
        // nalgebra storage is column-major already.
        for v in self.values.as_slice() {
            writer.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Loads a file, choosing the binary reader for `.bin` extensions and CSV otherwise.
    pub fn load(path: &Path, has_header: bool) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Self::read_binary(reader),
            _ => Self::read_csv(reader, has_header),
        }
    }
}

/// Reads a vector stored as CSV, either one value per line or a single row.
pub fn read_vector_csv<R: Read>(reader: R) -> Result<DVector<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut values = Vec::new();
    for record in rdr.records() {
        for field in record?.iter().filter(|f| !f.is_empty()) {
            let v = field
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("cannot parse {field:?}")))?;
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::Parse("empty vector file".into()));
    }
    Ok(DVector::from_vec(values))
}
