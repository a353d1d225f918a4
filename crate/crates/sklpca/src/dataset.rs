//! Longitudinal dataset container and CSV interchange.
//!
//! A dataset is `n` rows sorted by `(subject, time)`: a feature matrix
//! `X` (n x p), an outcome vector `Y`, a time column used as the
//! within-subject ordering key, and the subject grouping. The CSV schema
//! is `subject_id,time,y,f0..f{p-1}` with full-precision reals, so a
//! write/read round trip reproduces every stored value bit for bit.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hsic::GroupIndex;

/// Clustered repeated-measure data with complete cases only.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct LongitudinalDataset {
    groups: GroupIndex,
    features: Array2<f64>,
    outcomes: Vec<f64>,
    time: Vec<f64>,
}

impl LongitudinalDataset {
    /// Validates and assembles a dataset whose rows are already sorted by
    /// `(subject, time)` with the grouping describing contiguous blocks.
    ///
    /// # Errors
    /// Row-count mismatches, non-finite values, or within-subject times
    /// that fail to increase strictly.
    pub fn new(
        groups: GroupIndex,
        features: Array2<f64>,
        outcomes: Vec<f64>,
        time: Vec<f64>,
    ) -> Result<Self> {
        let n = groups.n_total();
        if features.nrows() != n || outcomes.len() != n || time.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "groups cover {} rows; features/outcomes/time have {}/{}/{}",
                n,
                features.nrows(),
                outcomes.len(),
                time.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::DimensionMismatch(
                "dataset needs at least one feature column".into(),
            ));
        }
        if features.iter().any(|v| !v.is_finite())
            || outcomes.iter().any(|v| !v.is_finite())
            || time.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidConfig(
                "dataset contains non-finite values".into(),
            ));
        }
        for s in 0..groups.num_subjects() {
            let r = groups.range(s);
            for i in r.start + 1..r.end {
                if time[i] <= time[i - 1] {
                    return Err(Error::InvalidConfig(format!(
                        "times for subject {:?} are not strictly increasing at row {}",
                        groups.subject_id(s),
                        i
                    )));
                }
            }
        }
        Ok(LongitudinalDataset {
            groups,
            features,
            outcomes,
            time,
        })
    }

    pub fn groups(&self) -> &GroupIndex {
        &self.groups
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    /// Number of rows n.
    pub fn n(&self) -> usize {
        self.groups.n_total()
    }

    /// Number of feature columns p.
    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    /// Number of subjects m.
    pub fn num_subjects(&self) -> usize {
        self.groups.num_subjects()
    }

    /// Feature block of one subject as an owned matrix.
    pub fn subject_features(&self, i: usize) -> Array2<f64> {
        self.features
            .slice(ndarray::s![self.groups.range(i), ..])
            .to_owned()
    }

    /// Outcome slice of one subject.
    pub fn subject_outcomes(&self, i: usize) -> &[f64] {
        &self.outcomes[self.groups.range(i)]
    }

    /// New dataset keeping only the given feature columns (ascending,
    /// deduplicated order preserved as given).
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidConfig(
                "feature selection must keep at least one column".into(),
            ));
        }
        for &c in columns {
            if c >= self.p() {
                return Err(Error::DimensionMismatch(format!(
                    "feature column {} out of range (p = {})",
                    c,
                    self.p()
                )));
            }
        }
        let mut out = Array2::<f64>::zeros((self.n(), columns.len()));
        for (k, &c) in columns.iter().enumerate() {
            out.column_mut(k).assign(&self.features.column(c));
        }
        LongitudinalDataset::new(
            self.groups.clone(),
            out,
            self.outcomes.clone(),
            self.time.clone(),
        )
    }

    /// New dataset keeping only the given rows (indices must remain sorted
    /// by subject block and time; subjects reduced below two rows are
    /// rejected by group validation).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut labels = Vec::with_capacity(rows.len());
        let mut features = Array2::<f64>::zeros((rows.len(), self.p()));
        let mut outcomes = Vec::with_capacity(rows.len());
        let mut time = Vec::with_capacity(rows.len());
        for (k, &r) in rows.iter().enumerate() {
            if r >= self.n() {
                return Err(Error::DimensionMismatch(format!(
                    "row {} out of range (n = {})",
                    r,
                    self.n()
                )));
            }
            let subject = self
                .groups
                .boundaries()
                .iter()
                .find(|b| r >= b.start && r < b.start + b.count)
                .expect("row is covered by a subject range");
            labels.push(subject.subject_id.clone());
            features.row_mut(k).assign(&self.features.row(r));
            outcomes.push(self.outcomes[r]);
            time.push(self.time[r]);
        }
        let groups = GroupIndex::from_labels(&labels)?;
        LongitudinalDataset::new(groups, features, outcomes, time)
    }
}

/// Outcome of a CSV load: the dataset plus any normalization notices
/// (currently only "input was unsorted and has been sorted").
#[derive(Debug)]
pub struct CsvLoad {
    pub dataset: LongitudinalDataset,
    pub notices: Vec<String>,
}

/// Reads a dataset from the CSV interchange schema.
///
/// Header must be exactly `subject_id,time,y,f0,f1,...` with the feature
/// columns contiguously numbered from zero. Rows may arrive unsorted; they
/// are sorted by `(subject_id, time)` with a notice. Duplicate
/// `(subject, time)` pairs and unparsable or missing cells are errors
/// naming the line.
pub fn load_csv(path: &Path) -> Result<CsvLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 4 || cols[0] != "subject_id" || cols[1] != "time" || cols[2] != "y" {
        return Err(Error::Parse(format!(
            "{}: header must start with subject_id,time,y followed by feature columns",
            path.display()
        )));
    }
    let p = cols.len() - 3;
    for (k, name) in cols.iter().skip(3).enumerate() {
        let want = format!("f{}", k);
        if *name != want {
            return Err(Error::Parse(format!(
                "{}: feature column {} is named {:?}, expected {:?}",
                path.display(),
                k + 4,
                name,
                want
            )));
        }
    }

    struct Row {
        subject: String,
        time: f64,
        y: f64,
        features: Vec<f64>,
        line: u64,
    }

    let mut rows: Vec<Row> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?;
        let line = record
            .position()
            .map(|pos| pos.line())
            .unwrap_or(rows.len() as u64 + 2);
        if record.len() != cols.len() {
            return Err(Error::Parse(format!(
                "{}: line {}: expected {} cells, found {}",
                path.display(),
                line,
                cols.len(),
                record.len()
            )));
        }
        let parse_cell = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            if raw.trim().is_empty() {
                return Err(Error::Parse(format!(
                    "{}: line {}: missing value in column {:?}",
                    path.display(),
                    line,
                    name
                )));
            }
            raw.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "{}: line {}: column {:?} is not numeric: {:?}",
                    path.display(),
                    line,
                    name,
                    raw
                ))
            })
        };
        let subject = record.get(0).unwrap_or("").trim().to_string();
        if subject.is_empty() {
            return Err(Error::Parse(format!(
                "{}: line {}: missing subject_id",
                path.display(),
                line
            )));
        }
        let time = parse_cell(1, "time")?;
        let y = parse_cell(2, "y")?;
        let mut features = Vec::with_capacity(p);
        for k in 0..p {
            features.push(parse_cell(k + 3, &format!("f{}", k))?);
        }
        rows.push(Row {
            subject,
            time,
            y,
            features,
            line,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no data rows",
            path.display()
        )));
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    let sorted = order.is_sorted_by(|&a, &b| {
        (rows[a].subject.as_str(), rows[a].time) <= (rows[b].subject.as_str(), rows[b].time)
    });
    order.sort_by(|&a, &b| {
        rows[a]
            .subject
            .cmp(&rows[b].subject)
            .then(rows[a].time.total_cmp(&rows[b].time))
    });
    let mut notices = Vec::new();
    if !sorted {
        notices.push("input rows were not sorted by (subject, time); sorted on load".into());
    }
    for pair in order.windows(2) {
        let (a, b) = (&rows[pair[0]], &rows[pair[1]]);
        if a.subject == b.subject && a.time == b.time {
            return Err(Error::Parse(format!(
                "{}: line {}: duplicate (subject, time) = ({:?}, {})",
                path.display(),
                b.line,
                b.subject,
                b.time
            )));
        }
    }

    let n = rows.len();
    let mut features = Array2::<f64>::zeros((n, p));
    let mut outcomes = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        let row = &rows[idx];
        for (j, &v) in row.features.iter().enumerate() {
            features[(k, j)] = v;
        }
        outcomes.push(row.y);
        time.push(row.time);
        labels.push(row.subject.clone());
    }
    let groups = GroupIndex::from_labels(&labels)?;
    let dataset = LongitudinalDataset::new(groups, features, outcomes, time)?;
    Ok(CsvLoad { dataset, notices })
}

/// Writes a dataset in the CSV interchange schema with shortest
/// round-trip decimal formatting (bit-exact on reload).
pub fn write_csv(dataset: &LongitudinalDataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write!(out, "subject_id,time,y")?;
    for k in 0..dataset.p() {
        write!(out, ",f{}", k)?;
    }
    writeln!(out)?;
    let groups = dataset.groups();
    for s in 0..groups.num_subjects() {
        for row in groups.range(s) {
            write!(
                out,
                "{},{},{}",
                groups.subject_id(s),
                dataset.time()[row],
                dataset.outcomes()[row]
            )?;
            for j in 0..dataset.p() {
                write!(out, ",{}", dataset.features()[(row, j)])?;
            }
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}
