//! CSV and JSON file formats.
//!
//! Row numbers in errors count data rows from 1; a header line is not counted.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rmdgraph_core::curve::AveragedPoint;
use rmdgraph_core::graph::{Edge, Graph, GraphMeta};
use rmdgraph_core::rank::{RankParams, RankVector};
use rmdgraph_core::select::DeltaCurve;
use rmdgraph_core::ssl::LabelSet;
use rmdgraph_core::{Dataset, Partition};

use crate::error::{Error, Result};

/// `graph.csv` → `graph.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::format(path, e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a CSV with a header line; rows are written verbatim.
fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let file = create(path)?;
    let mut w = csv::WriterBuilder::new().from_writer(file);
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Raw records of a CSV file, with the header (if any) split off.
struct Table {
    path: PathBuf,
    header: Option<Vec<String>>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// A first line with any non-numeric field is treated as a header.
    fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::format(path, format!("{other:?}")),
            })?;
        let mut records = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::row(path, i + 1, e.to_string()))?;
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            records.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
        }
        if records.is_empty() {
            return Err(Error::format(path, "file is empty"));
        }
        let header = records[0]
            .iter()
            .any(|f| f.parse::<f64>().is_err())
            .then(|| records.remove(0));
        if records.is_empty() {
            return Err(Error::format(path, "no data rows"));
        }
        Ok(Self {
            path: path.to_owned(),
            header,
            rows: records,
        })
    }

    fn width(&self) -> usize {
        self.header.as_ref().map_or(self.rows[0].len(), Vec::len)
    }

    fn check_widths(&self) -> Result<()> {
        let width = self.width();
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != width {
                return Err(self.err(i, format!("expected {width} columns, got {}", r.len())));
            }
        }
        Ok(())
    }

    fn err(&self, index: usize, message: impl Into<String>) -> Error {
        Error::row(&self.path, index + 1, message)
    }

    fn float(&self, index: usize, col: usize) -> Result<f64> {
        let field = &self.rows[index][col];
        field
            .parse()
            .map_err(|_| self.err(index, format!("column {}: cannot parse {field:?} as a number", col + 1)))
    }

    fn optional_float(&self, index: usize, col: usize) -> Result<Option<f64>> {
        if self.rows[index][col].is_empty() {
            Ok(None)
        } else {
            self.float(index, col).map(Some)
        }
    }

    fn index(&self, index: usize, col: usize) -> Result<usize> {
        let field = &self.rows[index][col];
        field.parse().map_err(|_| {
            self.err(index, format!("column {}: cannot parse {field:?} as a non-negative integer", col + 1))
        })
    }

    /// Reads `(index, value)` pairs and checks that every index is below `n`
    /// and appears at most once.
    fn index_pairs(&self, n: Option<usize>) -> Result<Vec<(usize, usize)>> {
        self.check_widths()?;
        if self.width() != 2 {
            return Err(Error::format(&self.path, "expected two columns"));
        }
        let mut pairs = Vec::with_capacity(self.rows.len());
        for i in 0..self.rows.len() {
            pairs.push((self.index(i, 0)?, self.index(i, 1)?));
        }
        let limit = n.unwrap_or(pairs.len());
        let mut seen = vec![false; limit];
        for (row, &(idx, _)) in pairs.iter().enumerate() {
            if idx >= limit {
                return Err(self.err(row, format!("index {idx} out of range for n={limit}")));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(self.err(row, format!("index {idx} appears twice")));
            }
        }
        Ok(pairs)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Loads a dataset. Labels are read from a final header column named `label`.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let table = Table::read(path)?;
    table.check_widths()?;
    let has_labels = table
        .header
        .as_ref()
        .and_then(|h| h.last())
        .is_some_and(|c| c.eq_ignore_ascii_case("label"));
    let d = table.width() - usize::from(has_labels);
    if d == 0 {
        return Err(Error::format(path, "no feature columns"));
    }
    let mut points = Vec::with_capacity(table.rows.len() * d);
    let mut labels = Vec::new();
    for i in 0..table.rows.len() {
        for col in 0..d {
            let v = table.float(i, col)?;
            if !v.is_finite() {
                return Err(table.err(i, format!("column {}: non-finite value", col + 1)));
            }
            points.push(v);
        }
        if has_labels {
            labels.push(table.index(i, d)?);
        }
    }
    let name = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Ok(Dataset::new(points, d, has_labels.then_some(labels), name)?)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    if data.labels().is_some() {
        header.push("label".into());
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header,
        data.rows().enumerate().map(|(i, row)| {
            let mut r: Vec<String> = row.iter().copied().map(num).collect();
            if let Some(l) = data.labels() {
                r.push(l[i].to_string());
            }
            r
        }),
    )
}

/// Writes `index,rank,statistic` plus a JSON sidecar with the rank parameters.
/// A point that never took part in a resample has an empty statistic.
pub fn write_ranks(path: &Path, ranks: &RankVector) -> Result<()> {
    write_csv(
        path,
        &["index", "rank", "statistic"],
        ranks.ranks.iter().zip(&ranks.statistic).enumerate().map(|(i, (r, s))| {
            vec![i.to_string(), num(*r), opt(s.is_finite().then_some(*s))]
        }),
    )?;
    write_json(&sidecar_path(path), &ranks.params)
}

pub fn read_ranks(path: &Path) -> Result<RankVector> {
    let table = Table::read(path)?;
    table.check_widths()?;
    if table.width() != 3 {
        return Err(Error::format(path, "expected columns index,rank,statistic"));
    }
    let mut ranks = Vec::with_capacity(table.rows.len());
    let mut statistic = Vec::with_capacity(table.rows.len());
    for i in 0..table.rows.len() {
        if table.index(i, 0)? != i {
            return Err(table.err(i, format!("expected index {i}")));
        }
        ranks.push(table.float(i, 1)?);
        statistic.push(table.optional_float(i, 2)?.unwrap_or(f64::NAN));
    }
    let params: RankParams = read_json(&sidecar_path(path))?;
    Ok(RankVector::from_ranks(ranks, statistic, params)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphSidecar {
    n: usize,
    #[serde(flatten)]
    meta: GraphMeta,
}

/// Writes the `u,v,weight` edge list and a JSON sidecar holding `n` and the
/// builder parameters.
pub fn write_graph(path: &Path, graph: &Graph) -> Result<()> {
    write_csv(
        path,
        &["u", "v", "weight"],
        graph
            .edges()
            .iter()
            .map(|e| vec![e.u.to_string(), e.v.to_string(), num(e.weight)]),
    )?;
    write_json(
        &sidecar_path(path),
        &GraphSidecar {
            n: graph.n(),
            meta: graph.meta().clone(),
        },
    )
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    let side: GraphSidecar = read_json(&sidecar_path(path))?;
    let mut edges = Vec::new();
    // An edgeless graph is written as a bare header, which reads as empty.
    let table = match Table::read(path) {
        Ok(t) => Some(t),
        Err(Error::Format { .. }) => None,
        Err(e) => return Err(e),
    };
    if let Some(table) = table {
        table.check_widths()?;
        if table.width() != 3 {
            return Err(Error::format(path, "expected columns u,v,weight"));
        }
        for i in 0..table.rows.len() {
            edges.push(Edge {
                u: table.index(i, 0)?,
                v: table.index(i, 1)?,
                weight: table.float(i, 2)?,
            });
        }
    }
    Ok(Graph::new(side.n, edges, side.meta)?)
}

/// `index,cluster` rows in index order.
pub fn write_partition(path: &Path, partition: &Partition) -> Result<()> {
    write_csv(
        path,
        &["index", "cluster"],
        partition
            .assignment()
            .iter()
            .enumerate()
            .map(|(i, c)| vec![i.to_string(), c.to_string()]),
    )
}

/// Reads a partition; every index `0..n` must appear once, and `K` is one
/// more than the largest cluster id.
pub fn read_partition(path: &Path) -> Result<Partition> {
    let pairs = Table::read(path)?.index_pairs(None)?;
    let mut assignment = vec![0; pairs.len()];
    for &(i, c) in &pairs {
        assignment[i] = c;
    }
    let k = assignment.iter().copied().max().unwrap_or(0) + 1;
    Ok(Partition::new(assignment, k)?)
}

pub fn write_labels(path: &Path, labels: &LabelSet) -> Result<()> {
    write_csv(
        path,
        &["index", "class"],
        labels
            .pairs()
            .iter()
            .map(|(i, c)| vec![i.to_string(), c.to_string()]),
    )
}

/// Reads `index,class` rows for a graph of `n` nodes; `K` is one more than the
/// largest class id.
pub fn read_labels(path: &Path, n: usize) -> Result<LabelSet> {
    let pairs = Table::read(path)?.index_pairs(Some(n))?;
    let k = pairs.iter().map(|&(_, c)| c).max().unwrap_or(0) + 1;
    Ok(LabelSet::new(pairs, k, n)?)
}

/// Averaged cut-position sweep. Degenerate rows keep empty values and are
/// flagged in the last column.
pub fn write_cut_curve(path: &Path, curve: &[AveragedPoint]) -> Result<()> {
    write_csv(
        path,
        &["position", "cut", "ratiocut", "valid_runs", "degenerate"],
        curve.iter().map(|p| {
            let ok = !p.is_degenerate();
            vec![
                num(p.position),
                opt(ok.then_some(p.cut)),
                opt(ok.then_some(p.ratio_cut)),
                p.valid_runs.to_string(),
                u8::from(!ok).to_string(),
            ]
        }),
    )
}

/// `δ`-sweep rows; infeasible `δ` values keep empty fields.
pub fn write_delta_curve(path: &Path, curve: &DeltaCurve) -> Result<()> {
    write_csv(
        path,
        &["delta", "cut", "position", "lambda", "min_fraction"],
        curve.points.iter().map(|p| {
            vec![
                num(p.delta),
                opt(p.cut),
                opt(p.position),
                opt(p.lambda),
                opt(p.min_fraction),
            ]
        }),
    )
}

/// Parses a comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> std::result::Result<Vec<T>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("cannot parse {s:?}")))
        .collect()
}
