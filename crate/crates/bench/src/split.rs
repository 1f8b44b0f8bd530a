//! Seeded holdout split of a labeled tabular dataset.
//!
//! Output layout under the destination directory:
//!
//! ```text
//! agent_train/<file>      training rows, all columns
//! holdout_inputs/<file>   holdout rows without the label column
//! holdout_labels.csv      <id column>,<label column> for the holdout rows
//! ```
//!
//! Without an id column, a `row_id` column holding the zero-based source row
//! index is prepended to the holdout inputs and used as the label key.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const TRAIN_DIR: &str = "agent_train";
pub const HOLDOUT_INPUTS_DIR: &str = "holdout_inputs";
pub const HOLDOUT_LABELS: &str = "holdout_labels.csv";
pub const ROW_ID: &str = "row_id";

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("format error: {0}")]
    Format(String),
    #[error("I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed table {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone)]
pub struct SplitOptions {
    /// Share of rows moved to the holdout set, strictly between 0 and 1.
    pub fraction: f64,
    pub seed: u64,
    /// Label column; defaults to the last column.
    pub label: Option<String>,
    /// Row key column; defaults to a synthesized `row_id`.
    pub id: Option<String>,
    /// Table to split when the directory holds several.
    pub file: Option<String>,
}

impl SplitOptions {
    pub fn new(fraction: f64, seed: u64) -> Self {
        Self {
            fraction,
            seed,
            label: None,
            id: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitOutput {
    pub source: PathBuf,
    pub train: PathBuf,
    pub holdout_inputs: PathBuf,
    pub holdout_labels: PathBuf,
    pub label_column: String,
    pub id_column: String,
    pub train_rows: usize,
    pub holdout_rows: usize,
}

fn is_tabular(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("csv" | "tsv")
    )
}

fn pick_table(dir: &Path, wanted: Option<&str>) -> Result<PathBuf, SplitError> {
    if let Some(name) = wanted {
        let path = dir.join(name);
        return if path.is_file() {
            Ok(path)
        } else {
            Err(SplitError::Format(format!("{} does not exist", path.display())))
        };
    }
    let entries = fs::read_dir(dir).map_err(|source| SplitError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut tables: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_tabular(p))
        .collect();
    tables.sort();
    match tables.len() {
        0 => Err(SplitError::Format(format!("no .csv or .tsv file in {}", dir.display()))),
        1 => Ok(tables.remove(0)),
        _ => Err(SplitError::Format(format!(
            "{} holds {} tables; choose one explicitly",
            dir.display(),
            tables.len()
        ))),
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, SplitError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| SplitError::Format(format!("no column named {name:?}")))
}

/// Partitions the dataset's rows with a seeded shuffle. Holdout size is
/// `round(rows * fraction)` and both parts must be non-empty.
pub fn split_holdout(
    data_dir: &Path,
    out_dir: &Path,
    opts: &SplitOptions,
) -> Result<SplitOutput, SplitError> {
    if !(opts.fraction > 0.0 && opts.fraction < 1.0) {
        return Err(SplitError::Format(format!(
            "fraction must be strictly between 0 and 1, got {}",
            opts.fraction
        )));
    }
    let source = pick_table(data_dir, opts.file.as_deref())?;
    let delimiter = if source.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv")) {
        b'\t'
    } else {
        b','
    };
    let csv_err = |source_err| SplitError::Csv {
        path: source.clone(),
        source: source_err,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_path(&source)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.len() < 2 {
        return Err(SplitError::Format("table needs at least two columns".into()));
    }
    let rows: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;

    let label_idx = match &opts.label {
        Some(name) => column(&headers, name)?,
        None => headers.len() - 1,
    };
    let id_idx = opts.id.as_deref().map(|n| column(&headers, n)).transpose()?;
    if id_idx == Some(label_idx) {
        return Err(SplitError::Format("id and label columns must differ".into()));
    }

    let holdout_n = (rows.len() as f64 * opts.fraction).round() as usize;
    if holdout_n == 0 || holdout_n >= rows.len() {
        return Err(SplitError::Format(format!(
            "fraction {} of {} rows leaves an empty split",
            opts.fraction,
            rows.len()
        )));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let mut holdout: Vec<usize> = order[..holdout_n].to_vec();
    let mut train: Vec<usize> = order[holdout_n..].to_vec();
    holdout.sort_unstable();
    train.sort_unstable();

    let file_name = source.file_name().expect("file has a name");
    let train_path = out_dir.join(TRAIN_DIR).join(file_name);
    let inputs_path = out_dir.join(HOLDOUT_INPUTS_DIR).join(file_name);
    let labels_path = out_dir.join(HOLDOUT_LABELS);
    for dir in [TRAIN_DIR, HOLDOUT_INPUTS_DIR] {
        let dir = out_dir.join(dir);
        fs::create_dir_all(&dir).map_err(|source| SplitError::Io { path: dir, source })?;
    }

    let writer = |path: &Path, delim: u8| {
        csv::WriterBuilder::new()
            .delimiter(delim)
            .from_path(path)
            .map_err(|source| SplitError::Csv {
                path: path.to_path_buf(),
                source,
            })
    };
    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SplitError::Csv { path, source }
    };

    let mut w = writer(&train_path, delimiter)?;
    w.write_record(&headers).map_err(wrap(&train_path))?;
    for &i in &train {
        w.write_record(&rows[i]).map_err(wrap(&train_path))?;
    }
    w.flush().map_err(|source| SplitError::Io {
        path: train_path.clone(),
        source,
    })?;

    let id_name = id_idx.map_or(ROW_ID.to_string(), |i| headers[i].to_string());
    let mut inputs = writer(&inputs_path, delimiter)?;
    let mut labels = writer(&labels_path, b',')?;
    let keep = |rec: &csv::StringRecord| -> Vec<String> {
        rec.iter()
            .enumerate()
            .filter(|&(j, _)| j != label_idx)
            .map(|(_, v)| v.to_string())
            .collect()
    };
    let mut header_row = keep(&headers);
    if id_idx.is_none() {
        header_row.insert(0, ROW_ID.to_string());
    }
    inputs.write_record(&header_row).map_err(wrap(&inputs_path))?;
    labels
        .write_record([id_name.as_str(), &headers[label_idx]])
        .map_err(wrap(&labels_path))?;
    for &i in &holdout {
        let row = &rows[i];
        let mut values = keep(row);
        let key = match id_idx {
            Some(j) => row[j].to_string(),
            None => {
                values.insert(0, i.to_string());
                i.to_string()
            }
        };
        inputs.write_record(&values).map_err(wrap(&inputs_path))?;
        labels
            .write_record([key.as_str(), &row[label_idx]])
            .map_err(wrap(&labels_path))?;
    }
    for (w, path) in [(&mut inputs, &inputs_path), (&mut labels, &labels_path)] {
        w.flush().map_err(|source| SplitError::Io {
            path: path.clone(),
            source,
        })?;
    }

    Ok(SplitOutput {
        train: train_path,
        holdout_inputs: inputs_path,
        holdout_labels: labels_path,
        label_column: headers[label_idx].to_string(),
        id_column: id_name,
        train_rows: train.len(),
        holdout_rows: holdout.len(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn dataset(rows: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("id,x,y\n");
        for i in 0..rows {
            text.push_str(&format!("r{i},{},{}\n", i * 2, i % 3));
        }
        fs::write(dir.path().join("train.csv"), text).unwrap();
        dir
    }

    fn ids(path: &Path, col: usize) -> Vec<String> {
        let mut r = csv::Reader::from_path(path).unwrap();
        r.records().map(|rec| rec.unwrap()[col].to_string()).collect()
    }

    #[test]
    fn eighty_twenty_partition() {
        let data = dataset(100);
        let out = tempfile::tempdir().unwrap();
        let mut opts = SplitOptions::new(0.2, 7);
        opts.id = Some("id".into());
        let res = split_holdout(data.path(), out.path(), &opts).unwrap();
        assert_eq!((res.train_rows, res.holdout_rows), (80, 20));
        assert_eq!(res.label_column, "y");

        let train: BTreeSet<_> = ids(&res.train, 0).into_iter().collect();
        let hold: BTreeSet<_> = ids(&res.holdout_inputs, 0).into_iter().collect();
        assert!(train.is_disjoint(&hold));
        let all: BTreeSet<_> = (0..100).map(|i| format!("r{i}")).collect();
        assert_eq!(train.union(&hold).cloned().collect::<BTreeSet<_>>(), all);

        let header = fs::read_to_string(&res.holdout_inputs).unwrap();
        assert!(header.starts_with("id,x\n"));
        assert_eq!(ids(&res.holdout_labels, 0), ids(&res.holdout_inputs, 0));
    }

    #[test]
    fn same_seed_same_split() {
        let data = dataset(50);
        let (a, b, c) = (
            tempfile::tempdir().unwrap(),
            tempfile::tempdir().unwrap(),
            tempfile::tempdir().unwrap(),
        );
        let opts = SplitOptions::new(0.3, 11);
        let ra = split_holdout(data.path(), a.path(), &opts).unwrap();
        let rb = split_holdout(data.path(), b.path(), &opts).unwrap();
        assert_eq!(fs::read(&ra.holdout_labels).unwrap(), fs::read(&rb.holdout_labels).unwrap());
        assert_eq!(fs::read(&ra.train).unwrap(), fs::read(&rb.train).unwrap());
        let rc = split_holdout(data.path(), c.path(), &SplitOptions::new(0.3, 12)).unwrap();
        assert_ne!(fs::read(&ra.holdout_labels).unwrap(), fs::read(&rc.holdout_labels).unwrap());
    }

    #[test]
    fn synthesized_row_ids() {
        let data = dataset(10);
        let out = tempfile::tempdir().unwrap();
        let res = split_holdout(data.path(), out.path(), &SplitOptions::new(0.5, 1)).unwrap();
        assert_eq!(res.id_column, ROW_ID);
        let text = fs::read_to_string(&res.holdout_inputs).unwrap();
        assert!(text.starts_with("row_id,id,x\n"));
    }

    #[test]
    fn bad_fractions_and_inputs() {
        let data = dataset(10);
        let out = tempfile::tempdir().unwrap();
        for f in [0.0, 1.0, -0.5, f64::NAN, 0.01] {
            assert!(matches!(
                split_holdout(data.path(), out.path(), &SplitOptions::new(f, 1)),
                Err(SplitError::Format(_))
            ));
        }
        let mut opts = SplitOptions::new(0.5, 1);
        opts.label = Some("missing".into());
        assert!(split_holdout(data.path(), out.path(), &opts).is_err());
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            split_holdout(empty.path(), out.path(), &SplitOptions::new(0.5, 1)),
            Err(SplitError::Format(_))
        ));
    }
}
