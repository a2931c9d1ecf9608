//! Multilabel datasets: libsvm-style and CSV files, seeded splits and
//! per-column standardization.
//!
//! libsvm multilabel lines read `l1,l2,… idx:val idx:val …` with 0-based
//! label indices and 1-based feature indices. Lines starting with `#` and
//! blank lines are skipped. Files ending in `.gz` (or starting with the gzip
//! magic bytes) are decompressed on the fly.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use qs_core::{Observation, Subset};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: label {label} is out of range for m = {m}")]
    LabelOutOfRange { line: usize, label: usize, m: usize },
    #[error("line {line}: feature index {index} is out of range for d = {d}")]
    FeatureOutOfRange { line: usize, index: usize, d: usize },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    #[default]
    LibsvmMultilabel,
    Csv,
}

/// A sparse feature row: strictly increasing 0-based indices.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct MultilabelDataset {
    pub name: String,
    pub d: usize,
    pub m: usize,
    pub features: Vec<SparseRow>,
    pub labels: Vec<Subset>,
}

/// Known sizes; missing ones are inferred from the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub m: Option<usize>,
    pub d: Option<usize>,
}

impl MultilabelDataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        for &(j, v) in &self.features[i] {
            x[j] = v;
        }
        x
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.dense_row(i)).collect()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.labels.iter().cloned().map(Observation::Subset).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            d: self.d,
            m: self.m,
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Builds a dataset from dense rows, dropping zero entries.
    pub fn from_dense(name: &str, m: usize, x: &[Vec<f64>], labels: Vec<Subset>) -> Result<Self> {
        if x.len() != labels.len() {
            return Err(DataError::Invalid(format!("{} feature rows but {} label sets", x.len(), labels.len())));
        }
        let d = x.first().map_or(0, |r| r.len());
        if x.iter().any(|r| r.len() != d) {
            return Err(DataError::Invalid("feature rows have different lengths".into()));
        }
        if labels.iter().any(|s| s.m() != m) {
            return Err(DataError::Invalid(format!("label sets must have width {m}")));
        }
        let features = x
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
            .collect();
        Ok(Self {
            name: name.to_string(),
            d,
            m,
            features,
            labels,
        })
    }
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = File::open(path).map_err(io_err)?;
    let mut magic = [0u8; 2];
    let got = file.read(&mut magic).map_err(io_err)?;
    drop(file);
    let file = File::open(path).map_err(io_err)?;
    if got == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn dataset_name(path: &Path) -> String {
    let mut name = path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    if let Some(stripped) = name.strip_suffix(".gz") {
        name = stripped.to_string();
    }
    match name.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem.to_string(),
        _ => name,
    }
}

pub fn parse_multilabel(path: &Path, format: DataFormat, opts: ParseOptions) -> Result<MultilabelDataset> {
    let reader = open(path)?;
    let mut ds = match format {
        DataFormat::LibsvmMultilabel => parse_libsvm(reader, opts),
        DataFormat::Csv => parse_csv(reader, opts),
    }
    .map_err(|e| match e {
        DataError::Io { source, .. } => DataError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })?;
    ds.name = dataset_name(path);
    Ok(ds)
}

fn parse_labels(field: &str, line: usize) -> Result<Vec<usize>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| DataError::Parse {
                line,
                msg: format!("bad label `{t}`"),
            })
        })
        .collect()
}

/// Parses libsvm multilabel text from any reader.
pub fn parse_libsvm<R: BufRead>(reader: R, opts: ParseOptions) -> Result<MultilabelDataset> {
    let mut raw_labels: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut features: Vec<SparseRow> = Vec::new();
    let mut max_label = None;
    let mut max_feature = 0usize;
    for (k, text) in reader.lines().enumerate() {
        let line = k + 1;
        let text = text.map_err(|source| DataError::Io {
            path: String::from("<input>"),
            source,
        })?;
        let body = text.trim_end();
        if body.trim().is_empty() || body.trim_start().starts_with('#') {
            continue;
        }
        // an empty label field shows up as a leading blank
        let (label_field, rest) = if body.starts_with(char::is_whitespace) {
            ("", body.trim_start())
        } else {
            match body.split_once(char::is_whitespace) {
                Some((l, r)) if !l.contains(':') => (l, r),
                Some(_) => ("", body),
                None if body.contains(':') => ("", body),
                None => (body, ""),
            }
        };
        let labels = parse_labels(label_field, line)?;
        for &l in &labels {
            max_label = Some(max_label.map_or(l, |m: usize| m.max(l)));
        }
        let mut row: SparseRow = Vec::new();
        let mut last_index = 0usize;
        for tok in rest.split_whitespace() {
            let (i, v) = tok.split_once(':').ok_or_else(|| DataError::Parse {
                line,
                msg: format!("expected idx:val, got `{tok}`"),
            })?;
            let i: usize = i.parse().map_err(|_| DataError::Parse {
                line,
                msg: format!("bad feature index `{i}`"),
            })?;
            if i == 0 {
                return Err(DataError::Parse {
                    line,
                    msg: "feature indices are 1-based".into(),
                });
            }
            let v: f64 = v.parse().map_err(|_| DataError::Parse {
                line,
                msg: format!("bad feature value `{v}`"),
            })?;
            if i <= last_index {
                return Err(DataError::Parse {
                    line,
                    msg: "feature indices must be strictly increasing".into(),
                });
            }
            last_index = i;
            max_feature = max_feature.max(i);
            if v != 0.0 {
                row.push((i - 1, v));
            }
        }
        raw_labels.push((line, labels));
        features.push(row);
    }
    let m = match opts.m {
        Some(m) => m,
        None => max_label.map_or(0, |l| l + 1),
    };
    let d = match opts.d {
        Some(d) => {
            if max_feature > d {
                let line = features
                    .iter()
                    .zip(&raw_labels)
                    .find(|(r, _)| r.last().is_some_and(|&(j, _)| j >= d))
                    .map_or(0, |(_, (l, _))| *l);
                return Err(DataError::FeatureOutOfRange {
                    line,
                    index: max_feature,
                    d,
                });
            }
            d
        }
        None => max_feature,
    };
    let mut labels = Vec::with_capacity(raw_labels.len());
    for (line, ls) in raw_labels {
        let mut s = Subset::empty(m);
        for l in ls {
            if l >= m {
                return Err(DataError::LabelOutOfRange { line, label: l, m });
            }
            s.set(l, true);
        }
        labels.push(s);
    }
    Ok(MultilabelDataset {
        name: String::new(),
        d,
        m,
        features,
        labels,
    })
}

/// CSV with a header row: columns `y0..y{m-1}` (0/1) followed by the features.
pub fn parse_csv<R: Read>(reader: R, opts: ParseOptions) -> Result<MultilabelDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| DataError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let m_header = header.iter().take_while(|h| h.starts_with('y') && h[1..].parse::<usize>().is_ok()).count();
    let m = opts.m.unwrap_or(m_header);
    if m > header.len() {
        return Err(DataError::Parse {
            line: 1,
            msg: format!("header has {} columns, fewer than m = {m}", header.len()),
        });
    }
    let d = header.len() - m;
    if let Some(want) = opts.d {
        if want != d {
            return Err(DataError::Parse {
                line: 1,
                msg: format!("header has {d} feature columns, expected {want}"),
            });
        }
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != m + d {
            return Err(DataError::Parse {
                line,
                msg: format!("expected {} fields, found {}", m + d, rec.len()),
            });
        }
        let mut bits = Vec::with_capacity(m);
        for (j, f) in rec.iter().take(m).enumerate() {
            bits.push(match f {
                "0" => false,
                "1" => true,
                _ => {
                    return Err(DataError::Parse {
                        line,
                        msg: format!("label column y{j} must be 0 or 1, got `{f}`"),
                    })
                }
            });
        }
        let mut row = SparseRow::new();
        for (j, f) in rec.iter().skip(m).enumerate() {
            let v: f64 = f.parse().map_err(|_| DataError::Parse {
                line,
                msg: format!("bad feature value `{f}`"),
            })?;
            if v != 0.0 {
                row.push((j, v));
            }
        }
        labels.push(Subset::new(bits));
        features.push(row);
    }
    Ok(MultilabelDataset {
        name: String::new(),
        d,
        m,
        features,
        labels,
    })
}

pub fn write_libsvm<W: Write>(ds: &MultilabelDataset, mut w: W) -> io::Result<()> {
    for (row, s) in ds.features.iter().zip(&ds.labels) {
        let labels: Vec<String> = s.ones().map(|j| j.to_string()).collect();
        write!(w, "{}", labels.join(","))?;
        for &(j, v) in row {
            // `{:?}` prints the shortest representation that parses back exactly
            write!(w, " {}:{:?}", j + 1, v)?;
        }
        if row.is_empty() && s.ones().next().is_none() && ds.d > 0 {
            // a blank line would be skipped on the way back in
            write!(w, " 1:0.0")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(ds: &MultilabelDataset, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let to_err = |e: csv::Error| DataError::Invalid(e.to_string());
    let header: Vec<String> =
        (0..ds.m).map(|j| format!("y{j}")).chain((0..ds.d).map(|j| format!("x{j}"))).collect();
    wr.write_record(&header).map_err(to_err)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.labels[i].bits().iter().map(|&b| if b { "1" } else { "0" }.to_string()).collect();
        rec.extend(ds.dense_row(i).iter().map(|v| format!("{v:?}")));
        wr.write_record(&rec).map_err(to_err)?;
    }
    wr.flush().map_err(|e| DataError::Invalid(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle into train/val/test. Validation and test sizes are the
/// rounded fractions; the remainder goes to training.
pub fn split(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (a, b, c) = fractions;
    for f in [a, b, c] {
        if !(0.0..=1.0).contains(&f) {
            return Err(DataError::Invalid(format!("split fraction {f} is outside [0, 1]")));
        }
    }
    if ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(DataError::Invalid(format!("split fractions sum to {}, not 1", a + b + c)));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (b * n as f64).round() as usize;
    let n_test = ((c * n as f64).round() as usize).min(n - n_val);
    let n_train = n - n_val - n_test;
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(Split { train: idx, val, test })
}

/// Per-column mean and standard deviation from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Self { mean, std }
    }

    /// Constant columns map to zero.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn libsvm_line_example() {
        let ds = parse_libsvm("0,2 1:0.5 3:1.0\n".as_bytes(), ParseOptions { m: Some(3), d: Some(4) }).unwrap();
        assert_eq!(ds.labels[0].to_bit_string(), "101");
        assert_eq!(ds.dense_row(0), vec![0.5, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_label_field() {
        let ds = parse_libsvm(" 1:1.0\n1:2.0\n".as_bytes(), ParseOptions { m: Some(2), d: None }).unwrap();
        assert_eq!(ds.n(), 2);
        assert!(ds.labels.iter().all(|s| s.is_empty()));
        assert_eq!(ds.d, 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "# header\n0 1:1\n\n5 1:1\n";
        match parse_libsvm(text.as_bytes(), ParseOptions { m: Some(3), d: None }) {
            Err(DataError::LabelOutOfRange { line: 4, label: 5, m: 3 }) => {}
            other => panic!("{other:?}"),
        }
        match parse_libsvm("0 1:x\n".as_bytes(), ParseOptions::default()) {
            Err(DataError::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_sizes() {
        let s = split(10, (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        assert_eq!(s, split(10, (0.6, 0.2, 0.2), 1).unwrap());
        assert!(split(10, (0.7, 0.2, 0.2), 1).is_err());
        assert!(split(10, (1.2, -0.1, -0.1), 1).is_err());
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let rows = vec![vec![3.0, 1.0], vec![3.0, -1.0]];
        let t = Standardizer::fit(&rows);
        assert_eq!(t.apply_all(&rows), vec![vec![0.0, 1.0], vec![0.0, -1.0]]);
    }
}
