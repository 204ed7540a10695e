use std::io::{Read, Write};
use std::ops::Range;

use crate::error::{Error, Result};

/// Named covariate columns aligned row-by-row with a count series.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    names: Vec<String>,
    values: Vec<f64>,
}

impl Covariates {
    /// `values` is row-major with one row per time step.
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let p = names.len();
        if p == 0 {
            if !values.is_empty() {
                return Err(Error::domain("covariate values without names"));
            }
        } else if !values.len().is_multiple_of(p) {
            return Err(Error::domain("covariate values are not a whole number of rows"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariate values must be finite"));
        }
        Ok(Self { names, values })
    }

    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Dimension {
                expected: names.len(),
                found: columns.len(),
            });
        }
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::domain("covariate columns have different lengths"));
        }
        let values = (0..rows)
            .flat_map(|t| columns.iter().map(move |c| c[t]))
            .collect();
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        if self.names.is_empty() {
            0
        } else {
            self.values.len() / self.names.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        let p = self.names.len();
        &self.values[t * p..(t + 1) * p]
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        let p = self.names.len();
        Self {
            names: self.names.clone(),
            values: self.values[range.start * p..range.end * p].to_vec(),
        }
    }

    /// Reorders/selects columns by name.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::format(format!("missing covariate column '{n}'")))
            })
            .collect::<Result<_>>()?;
        let values = (0..self.len())
            .flat_map(|t| idx.iter().map(move |&k| self.row(t)[k]))
            .collect();
        Self::new(names.to_vec(), values)
    }
}

/// A `T × n` array of non-negative counts with optional covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCountSeries {
    n: usize,
    counts: Vec<u64>,
    origin: i64,
    covariates: Option<Covariates>,
}

impl MultiCountSeries {
    /// `counts` is row-major (one row of `n` counts per time step); the first
    /// row has time index `origin`.
    pub fn new(n: usize, counts: Vec<u64>, origin: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("series dimension must be >= 1"));
        }
        if !counts.len().is_multiple_of(n) {
            return Err(Error::domain("counts are not a whole number of rows"));
        }
        Ok(Self {
            n,
            counts,
            origin,
            covariates: None,
        })
    }

    pub fn from_rows(rows: &[Vec<u64>], origin: i64) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(n, rows.concat(), origin)
    }

    pub fn with_covariates(mut self, covariates: Covariates) -> Result<Self> {
        if covariates.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: covariates.len(),
            });
        }
        self.covariates = Some(covariates);
        Ok(self)
    }

    pub fn without_covariates(mut self) -> Self {
        self.covariates = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// Time index of row `t`.
    pub fn time(&self, t: usize) -> i64 {
        self.origin + t as i64
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[u64] {
        &self.counts[t * self.n..(t + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.n)
    }

    pub fn column(&self, i: usize) -> Vec<u64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn column_mean(&self, i: usize) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.rows().map(|r| r[i] as f64).sum::<f64>() / self.len() as f64
    }

    pub fn covariates(&self) -> Option<&Covariates> {
        self.covariates.as_ref()
    }

    #[inline]
    pub fn covariate_row(&self, t: usize) -> Option<&[f64]> {
        self.covariates.as_ref().map(|c| c.row(t))
    }

    /// Rows `range`, keeping time indices.
    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            n: self.n,
            counts: self.counts[range.start * self.n..range.end * self.n].to_vec(),
            origin: self.time(range.start),
            covariates: self.covariates.as_ref().map(|c| c.slice(range)),
        }
    }

    /// Reads `t,x1,...,xn[,cov...]`. Columns named `x<k>` are counts and
    /// must appear as `x1..xn` in order; any other column after `t` is a
    /// covariate. Time indices must increase by one per row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("t") {
            return Err(Error::format("first CSV column must be 't'"));
        }
        let mut count_cols = Vec::new();
        let mut cov_cols = Vec::new();
        for (k, h) in headers.iter().enumerate().skip(1) {
            match h.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                Some(idx) => {
                    if idx != count_cols.len() + 1 {
                        return Err(Error::format(format!("unexpected count column '{h}'")));
                    }
                    count_cols.push(k);
                }
                None => cov_cols.push(k),
            }
        }
        let n = count_cols.len();
        if n == 0 {
            return Err(Error::format("no count columns x1..xn"));
        }
        let names: Vec<String> = cov_cols.iter().map(|&k| headers[k].to_string()).collect();

        let mut counts = Vec::new();
        let mut cov_values = Vec::new();
        let mut origin = None;
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row_no = line + 2;
            let t: i64 = record[0]
                .parse()
                .map_err(|_| Error::format(format!("row {row_no}: bad time index '{}'", &record[0])))?;
            let start = *origin.get_or_insert(t);
            if t != start + line as i64 {
                return Err(Error::format(format!(
                    "row {row_no}: time index {t} is not consecutive"
                )));
            }
            for &k in &count_cols {
                let field = &record[k];
                let v: u64 = field.parse().map_err(|_| {
                    Error::format(format!(
                        "row {row_no}: '{field}' in column {} is not a non-negative integer",
                        &headers[k]
                    ))
                })?;
                counts.push(v);
            }
            for &k in &cov_cols {
                let field = &record[k];
                let v: f64 = field.parse().map_err(|_| {
                    Error::format(format!("row {row_no}: bad covariate value '{field}'"))
                })?;
                cov_values.push(v);
            }
        }
        let series = Self::new(n, counts, origin.unwrap_or(1))?;
        if names.is_empty() {
            Ok(series)
        } else {
            series.with_covariates(Covariates::new(names, cov_values)?)
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n).map(|i| format!("x{i}")));
        if let Some(c) = &self.covariates {
            header.extend(c.names().iter().cloned());
        }
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut rec = vec![self.time(t).to_string()];
            rec.extend(self.row(t).iter().map(u64::to_string));
            if let Some(c) = &self.covariates {
                rec.extend(c.row(t).iter().map(f64::to_string));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
