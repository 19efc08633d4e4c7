//! Observational samples, query points and CSV ingestion.
//!
//! Input files are UTF-8, comma separated, with a header row naming the
//! covariate columns `x1..xd`, an optional binary treatment column `w` and
//! the response column `y`. Column order is free; names are not.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An observational sample: covariates, responses and an optional binary
/// treatment indicator. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    response: Vec<f64>,
    treatment: Option<Vec<u8>>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from row-major features.
    pub fn new(
        features: Vec<f64>,
        d: usize,
        response: Vec<f64>,
        treatment: Option<Vec<u8>>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Validation(
                "feature dimension must be at least 1".into(),
            ));
        }
        let n = response.len();
        if features.len() != n * d {
            return Err(Error::Validation(format!(
                "feature buffer has {} entries, expected n*d = {}*{}",
                features.len(),
                n,
                d
            )));
        }
        if n < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite feature at row {}, column x{}",
                pos / d,
                pos % d + 1
            )));
        }
        if let Some(pos) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite response at row {pos}"
            )));
        }
        if let Some(w) = &treatment {
            if w.len() != n {
                return Err(Error::Validation(format!(
                    "treatment has {} entries, expected {n}",
                    w.len()
                )));
            }
            if let Some(pos) = w.iter().position(|&v| v > 1) {
                return Err(Error::Validation(format!(
                    "treatment at row {pos} is {}, expected 0 or 1",
                    w[pos]
                )));
            }
            let treated = w.iter().filter(|&&v| v == 1).count();
            check_stratum("treated", treated)?;
            check_stratum("control", n - treated)?;
        }
        Ok(Self {
            features,
            response,
            treatment,
            n,
            d,
        })
    }

    /// Builds a dataset from a slice of rows.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Validation(format!(
                "row {i} has {} entries, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), d, response, None)
    }

    pub fn with_treatment(self, treatment: Vec<u8>) -> Result<Self> {
        Self::new(self.features, self.d, self.response, Some(treatment))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    /// Row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn treatment(&self) -> Option<&[u8]> {
        self.treatment.as_deref()
    }

    /// Values of covariate `j` (0-based) across all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Subset of rows, in the given order, without the treatment column.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        let response = idx.iter().map(|&i| self.response[i]).collect();
        Dataset::new(features, self.d, response, None)
    }

    /// Keeps only the listed covariate columns (0-based), in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.d) {
            return Err(Error::Usage(format!(
                "column index {bad} out of range for d = {}",
                self.d
            )));
        }
        let mut features = Vec::with_capacity(self.n * cols.len());
        for r in self.rows() {
            features.extend(cols.iter().map(|&c| r[c]));
        }
        Dataset::new(
            features,
            cols.len(),
            self.response.clone(),
            self.treatment.clone(),
        )
    }

    /// Copy with a transformed response vector.
    pub fn map_response(&self, f: impl Fn(f64) -> f64) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            self.d,
            self.response.iter().map(|&y| f(y)).collect(),
            self.treatment.clone(),
        )
    }
}

fn check_stratum(name: &str, count: usize) -> Result<()> {
    match count {
        0 => Err(Error::Validation(format!("{name} stratum empty"))),
        1 => Err(Error::Validation(format!(
            "{name} stratum has 1 observation, need at least 2"
        ))),
        _ => Ok(()),
    }
}

/// A point at which the regression function or treatment effect is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoint(Vec<f64>);

impl QueryPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Usage("query point has no coordinates".into()));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage(format!(
                "query point {coords:?} is not finite"
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.0.len() == d {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "query point has dimension {}, dataset has {d}",
                self.0.len()
            )))
        }
    }

    /// Projection onto the listed coordinates (0-based).
    pub fn select(&self, cols: &[usize]) -> Result<QueryPoint> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.0.len()) {
            return Err(Error::Usage(format!(
                "coordinate {bad} out of range for dimension {}",
                self.0.len()
            )));
        }
        QueryPoint::new(cols.iter().map(|&c| self.0[c]).collect())
    }
}

/// A dataset partitioned into its treated (`w = 1`) and control (`w = 0`)
/// strata. Row order inside each stratum follows the parent.
#[derive(Debug, Clone)]
pub struct StratifiedView {
    pub treated: Dataset,
    pub control: Dataset,
    /// Parent row index of every treated row, then every control row.
    pub parent_rows: Vec<usize>,
}

impl StratifiedView {
    /// Assembles a view from two separately sampled arms.
    pub fn from_arms(treated: Dataset, control: Dataset) -> Result<Self> {
        if treated.d() != control.d() {
            return Err(Error::Validation(format!(
                "treated arm has d = {}, control arm has d = {}",
                treated.d(),
                control.d()
            )));
        }
        let parent_rows = (0..treated.n() + control.n()).collect();
        Ok(Self {
            treated,
            control,
            parent_rows,
        })
    }

    /// Reassembles the parent dataset, undoing the partition.
    pub fn reconstruct(&self) -> Result<Dataset> {
        let n = self.parent_rows.len();
        let d = self.treated.d();
        let mut features = vec![0.0; n * d];
        let mut response = vec![0.0; n];
        let mut treatment = vec![0u8; n];
        let arms = [(&self.treated, 1u8), (&self.control, 0u8)];
        let mut k = 0;
        for (arm, w) in arms {
            for i in 0..arm.n() {
                let p = self.parent_rows[k];
                features[p * d..(p + 1) * d].copy_from_slice(arm.row(i));
                response[p] = arm.response()[i];
                treatment[p] = w;
                k += 1;
            }
        }
        Dataset::new(features, d, response, Some(treatment))
    }
}

/// Partitions a dataset by its treatment indicator.
pub fn split_by_treatment(data: &Dataset) -> Result<StratifiedView> {
    let w = data
        .treatment()
        .ok_or_else(|| Error::Usage("dataset has no treatment column".into()))?;
    let treated_rows: Vec<usize> = (0..data.n()).filter(|&i| w[i] == 1).collect();
    let control_rows: Vec<usize> = (0..data.n()).filter(|&i| w[i] == 0).collect();
    check_stratum("treated", treated_rows.len())?;
    check_stratum("control", control_rows.len())?;
    let treated = data.select_rows(&treated_rows)?;
    let control = data.select_rows(&control_rows)?;
    let mut parent_rows = treated_rows;
    parent_rows.extend(control_rows);
    Ok(StratifiedView {
        treated,
        control,
        parent_rows,
    })
}

#[derive(Debug, Clone, Copy)]
enum Column {
    Feature(usize),
    Treatment,
    Response,
}

fn parse_header(header: &csv::StringRecord) -> Result<(Vec<Column>, usize, bool)> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut layout = Vec::with_capacity(header.len());
    let mut max_feature = 0;
    for (pos, raw) in header.iter().enumerate() {
        let name = raw.trim();
        if seen.insert(name.to_string(), pos).is_some() {
            return Err(Error::Validation(format!("duplicate column '{name}'")));
        }
        let col = match name {
            "y" => Column::Response,
            "w" => Column::Treatment,
            _ => {
                let idx = name
                    .strip_prefix('x')
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&j| j >= 1)
                    .ok_or_else(|| {
                        Error::Validation(format!(
                            "unexpected column '{name}', expected x1..xd, w or y"
                        ))
                    })?;
                max_feature = max_feature.max(idx);
                Column::Feature(idx - 1)
            }
        };
        layout.push(col);
    }
    if !seen.contains_key("y") {
        return Err(Error::Validation("missing response column 'y'".into()));
    }
    if max_feature == 0 {
        return Err(Error::Validation("no covariate columns x1..xd".into()));
    }
    if let Some(j) = (1..=max_feature).find(|j| !seen.contains_key(&format!("x{j}"))) {
        return Err(Error::Validation(format!(
            "covariate columns must be x1..x{max_feature}; x{j} is missing"
        )));
    }
    Ok((layout, max_feature, seen.contains_key("w")))
}

/// Reads a dataset from CSV text. Rows keep file order.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let (layout, d, has_w) = parse_header(&header)?;

    let mut features = Vec::new();
    let mut response = Vec::new();
    let mut treatment = has_w.then(Vec::new);
    let mut row_buf = vec![0.0; d];

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row + 1;
        let mut y = 0.0;
        let mut w = 0u8;
        for (pos, col) in layout.iter().enumerate() {
            let name = header[pos].trim();
            let cell = record.get(pos).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Ingest {
                    row,
                    column: name.to_string(),
                    reason: "missing value".into(),
                });
            }
            let value: f64 = cell.parse().map_err(|_| Error::Ingest {
                row,
                column: name.to_string(),
                reason: format!("'{cell}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Ingest {
                    row,
                    column: name.to_string(),
                    reason: format!("'{cell}' is not finite"),
                });
            }
            match *col {
                Column::Feature(j) => row_buf[j] = value,
                Column::Response => y = value,
                Column::Treatment => {
                    w = if value == 0.0 {
                        0
                    } else if value == 1.0 {
                        1
                    } else {
                        return Err(Error::Validation(format!(
                            "row {row}: treatment value {cell} is not 0 or 1"
                        )));
                    }
                }
            }
        }
        if record.len() > layout.len() {
            return Err(Error::Ingest {
                row,
                column: format!("#{}", layout.len() + 1),
                reason: "extra field".into(),
            });
        }
        features.extend_from_slice(&row_buf);
        response.push(y);
        if let Some(t) = treatment.as_mut() {
            t.push(w);
        }
    }

    if response.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 data rows, found {}",
            response.len()
        )));
    }
    Dataset::new(features, d, response, treatment)
}

/// Reads a dataset from a CSV file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(std::io::BufReader::new(file))
}

/// Writes a dataset as CSV with columns `x1..xd[,w],y`. Floats are written
/// in shortest round-trip form, so reading the file back is lossless.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    if data.treatment().is_some() {
        header.push("w".into());
    }
    header.push("y".into());
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.row(i).iter().map(f64::to_string).collect();
        if let Some(w) = data.treatment() {
            rec.push(w[i].to_string());
        }
        rec.push(data.response()[i].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv(data, std::io::BufWriter::new(file))
}
