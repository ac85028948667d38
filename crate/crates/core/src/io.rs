//! CSV and JSON formats for responses, parameters, traces and reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value re-parses bit-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, IrtError, Result};
use crate::model::{AbilityParameters, ItemParameters, ResponseMatrix};
use crate::solver::FitTrace;

/// How binary responses are spelled in files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelFormat {
    /// `-1` / `+1`.
    #[default]
    #[serde(rename = "pm1")]
    PlusMinusOne,
    /// `0` / `1`, with 0 read as -1.
    #[serde(rename = "01")]
    ZeroOne,
}

impl FromStr for LabelFormat {
    type Err = IrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pm1" => Ok(Self::PlusMinusOne),
            "01" => Ok(Self::ZeroOne),
            other => Err(invalid(format!("unknown label format {other:?} (expected pm1 or 01)"))),
        }
    }
}

impl LabelFormat {
    fn parse(self, field: &str) -> Result<i8> {
        match (self, field.trim()) {
            (Self::PlusMinusOne, "1" | "+1") | (Self::ZeroOne, "1") => Ok(1),
            (Self::PlusMinusOne, "-1") | (Self::ZeroOne, "0") => Ok(-1),
            (_, other) => Err(invalid(format!("label {other:?} is not valid for {self:?}"))),
        }
    }

    fn write(self, y: i8) -> &'static str {
        match (self, y) {
            (_, 1) => "1",
            (Self::PlusMinusOne, _) => "-1",
            (Self::ZeroOne, _) => "0",
        }
    }
}

/// Layout of a response file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseLayout {
    /// `item,examinee,y`, one cell per line.
    #[default]
    Long,
    /// Header `item,<examinee ids>`, then one line per item.
    Dense,
}

fn csv_err(e: csv::Error) -> IrtError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => IrtError::Io { path: "<stream>".into(), source: e },
        other => invalid(format!("csv: {other:?}")),
    }
}

fn flush<W: Write>(w: &mut csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| IrtError::Io { path: "<stream>".into(), source: e })
}

fn parse_num<T: FromStr>(field: Option<&str>, what: &str, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let f = field.ok_or_else(|| invalid(format!("line {line}: missing {what}")))?;
    f.trim().parse().map_err(|e| invalid(format!("line {line}: bad {what} {f:?}: {e}")))
}

pub fn write_responses<W: Write>(out: W, y: &ResponseMatrix, layout: ResponseLayout, labels: LabelFormat) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match layout {
        ResponseLayout::Long => {
            w.write_record(["item", "examinee", "y"]).map_err(csv_err)?;
            for i in 0..y.items() {
                for (j, &v) in y.item_row(i).iter().enumerate() {
                    w.write_record([i.to_string().as_str(), j.to_string().as_str(), labels.write(v)]).map_err(csv_err)?;
                }
            }
        }
        ResponseLayout::Dense => {
            let header: Vec<String> = std::iter::once("item".to_string()).chain((0..y.examinees()).map(|j| j.to_string())).collect();
            w.write_record(&header).map_err(csv_err)?;
            for i in 0..y.items() {
                let row: Vec<&str> = y.item_row(i).iter().map(|&v| labels.write(v)).collect();
                let id = i.to_string();
                w.write_record(std::iter::once(id.as_str()).chain(row)).map_err(csv_err)?;
            }
        }
    }
    flush(&mut w)
}

/// Reads either layout; the header decides which.
pub fn read_responses<R: Read>(input: R, labels: LabelFormat) -> Result<ResponseMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols == ["item", "examinee", "y"] {
        read_long(rdr, labels)
    } else if cols.first() == Some(&"item") && cols.len() >= 2 {
        read_dense(rdr, cols.len() - 1, labels)
    } else {
        Err(invalid(format!("unrecognized response header {cols:?}")))
    }
}

fn read_long<R: Read>(mut rdr: csv::Reader<R>, labels: LabelFormat) -> Result<ResponseMatrix> {
    let mut cells = Vec::new();
    let (mut m, mut n) = (0usize, 0usize);
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let i: usize = parse_num(rec.get(0), "item", line)?;
        let j: usize = parse_num(rec.get(1), "examinee", line)?;
        let v = labels.parse(rec.get(2).ok_or_else(|| invalid(format!("line {line}: missing y")))?)?;
        m = m.max(i + 1);
        n = n.max(j + 1);
        cells.push((i, j, v));
    }
    let mut data = vec![0i8; m * n];
    for (i, j, v) in cells {
        let slot = &mut data[i * n + j];
        if *slot != 0 {
            return Err(invalid(format!("cell ({i}, {j}) appears twice")));
        }
        *slot = v;
    }
    if let Some(p) = data.iter().position(|&v| v == 0) {
        return Err(invalid(format!("cell ({}, {}) is missing", p / n, p % n)));
    }
    ResponseMatrix::new(m, n, data)
}

fn read_dense<R: Read>(mut rdr: csv::Reader<R>, n: usize, labels: LabelFormat) -> Result<ResponseMatrix> {
    let mut data = Vec::new();
    let mut m = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != n + 1 {
            let line = rec.position().map_or(0, |p| p.line());
            return Err(invalid(format!("line {line}: expected {} fields, found {}", n + 1, rec.len())));
        }
        for f in rec.iter().skip(1) {
            data.push(labels.parse(f)?);
        }
        m += 1;
    }
    ResponseMatrix::new(m, n, data)
}

pub fn write_items<W: Write>(out: W, items: &ItemParameters) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["item", "a", "b", "c"]).map_err(csv_err)?;
    for i in 0..items.len() {
        w.write_record([i.to_string(), items.a[i].to_string(), items.b[i].to_string(), items.c[i].to_string()]).map_err(csv_err)?;
    }
    flush(&mut w)
}

pub fn read_items<R: Read>(input: R) -> Result<ItemParameters> {
    let mut rdr = csv::Reader::from_reader(input);
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let i: usize = parse_num(rec.get(0), "item", line)?;
        if i != a.len() {
            return Err(invalid(format!("line {line}: items must be listed in order, expected {}", a.len())));
        }
        a.push(parse_num(rec.get(1), "a", line)?);
        b.push(parse_num(rec.get(2), "b", line)?);
        c.push(parse_num(rec.get(3), "c", line)?);
    }
    ItemParameters::new(a, b, c)
}

pub fn write_abilities<W: Write>(out: W, abilities: &AbilityParameters) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["examinee", "theta"]).map_err(csv_err)?;
    for (j, t) in abilities.theta.iter().enumerate() {
        w.write_record([j.to_string(), t.to_string()]).map_err(csv_err)?;
    }
    flush(&mut w)
}

pub fn read_abilities<R: Read>(input: R) -> Result<AbilityParameters> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut theta = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let j: usize = parse_num(rec.get(0), "examinee", line)?;
        if j != theta.len() {
            return Err(invalid(format!("line {line}: examinees must be listed in order, expected {}", theta.len())));
        }
        theta.push(parse_num(rec.get(1), "theta", line)?);
    }
    AbilityParameters::new(theta)
}

/// `iteration,objective[,full_objective]`; row 0 is the starting point.
pub fn write_trace<W: Write>(out: W, trace: &FitTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let full = !trace.full_objectives.is_empty();
    if full {
        w.write_record(["iteration", "objective", "full_objective"]).map_err(csv_err)?;
    } else {
        w.write_record(["iteration", "objective"]).map_err(csv_err)?;
    }
    for (t, f) in trace.objectives.iter().enumerate() {
        let mut rec = vec![t.to_string(), f.to_string()];
        if let Some(g) = trace.full_objectives.get(t) {
            rec.push(g.to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    flush(&mut w)
}

/// Item parameter pairs `(full, other)` for bias plots.
pub fn write_item_pairs<W: Write>(out: W, full: &ItemParameters, other: &ItemParameters) -> Result<()> {
    if full.len() != other.len() {
        return Err(IrtError::DimensionMismatch("item parameter sets differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["item", "a_full", "a_core", "b_full", "b_core", "c_full", "c_core"]).map_err(csv_err)?;
    for i in 0..full.len() {
        let rec = [i as f64, full.a[i], other.a[i], full.b[i], other.b[i], full.c[i], other.c[i]];
        w.write_record(rec.iter().enumerate().map(|(k, v)| if k == 0 { i.to_string() } else { v.to_string() })).map_err(csv_err)?;
    }
    flush(&mut w)
}

/// Ability pairs `(theta_full, theta_core)` for density plots.
pub fn write_theta_pairs<W: Write>(out: W, full: &AbilityParameters, other: &AbilityParameters) -> Result<()> {
    if full.len() != other.len() {
        return Err(IrtError::DimensionMismatch("ability vectors differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["examinee", "theta_full", "theta_core"]).map_err(csv_err)?;
    for j in 0..full.len() {
        w.write_record([j.to_string(), full.theta[j].to_string(), other.theta[j].to_string()]).map_err(csv_err)?;
    }
    flush(&mut w)
}

/// Attaches `path` to stream and parse errors.
fn at_path(path: &Path, e: IrtError) -> IrtError {
    match e {
        IrtError::Io { source, .. } => IrtError::Io { path: path.to_path_buf(), source },
        IrtError::InvalidArgument(message) => IrtError::Parse { path: path.to_path_buf(), message },
        other => other,
    }
}

/// Opens `path` for reading and runs `f` on it.
pub fn read_file<T>(path: &Path, f: impl FnOnce(BufReader<File>) -> Result<T>) -> Result<T> {
    let file = File::open(path).map_err(|source| IrtError::Io { path: path.to_path_buf(), source })?;
    f(BufReader::new(file)).map_err(|e| at_path(path, e))
}

/// Creates `path` (and missing parent directories) and runs `f` on it.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let io = |source| IrtError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    f(&mut w).map_err(|e| at_path(path, e))?;
    w.flush().map_err(io)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| invalid(format!("json: {e}")))?;
        w.write_all(b"\n").map_err(|source| IrtError::Io { path: "<stream>".into(), source })
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    read_file(path, |r| serde_json::from_reader(r).map_err(|e| invalid(format!("json: {e}"))))
}
