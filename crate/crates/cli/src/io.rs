//! Plain-text artifact files: dataset and coreset CSVs, JSON documents and
//! the metrics tables. Floats are written in shortest round-trip form, so a
//! write-then-read cycle reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{bail, Context, Result};
use outlier_coreset::{Coreset, Origin, PointSet};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Contents of a dataset or coreset CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub points: PointSet,
    pub weights: Option<Vec<f64>>,
    pub origin: Option<Vec<Origin>>,
    pub source: Option<Vec<usize>>,
}

enum Column {
    Feature,
    Response,
    Weight,
    Origin,
    Source,
}

fn classify(name: &str, features_seen: usize) -> Option<Column> {
    match name {
        "y" => Some(Column::Response),
        "w" => Some(Column::Weight),
        "origin" => Some(Column::Origin),
        "src" => Some(Column::Source),
        _ => {
            let j: usize = name.strip_prefix('x')?.parse().ok()?;
            (j == features_seen + 1).then_some(Column::Feature)
        }
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let headers = rdr
        .headers()
        .with_context(|| format!("{}: cannot read header", path.display()))?
        .clone();
    let mut kinds = Vec::new();
    let mut features = 0;
    let mut response = false;
    for (c, name) in headers.iter().enumerate() {
        let kind = classify(name, features).with_context(|| {
            format!(
                "{}: column {} has unexpected name {name:?}; expected x1..xd, y, w, origin or src in order",
                path.display(),
                c + 1
            )
        })?;
        match kind {
            Column::Feature if response => {
                bail!("{}: feature column {name} after y", path.display())
            }
            Column::Feature => features += 1,
            Column::Response if response => bail!("{}: duplicate y column", path.display()),
            Column::Response => response = true,
            _ => {}
        }
        kinds.push(kind);
    }
    let has = |want: fn(&Column) -> bool| kinds.iter().any(want);
    let d = features + usize::from(response);
    if d == 0 {
        bail!("{}: no x1.. or y columns", path.display());
    }
    let mut coords = Vec::new();
    let mut weights = has(|k| matches!(k, Column::Weight)).then(Vec::new);
    let mut origin = has(|k| matches!(k, Column::Origin)).then(Vec::new);
    let mut source = has(|k| matches!(k, Column::Source)).then(Vec::new);
    for (r, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record.position().map_or(r + 2, |p| p.line() as usize);
        let at = |c: usize| {
            format!(
                "{}: line {line}, column {} ({})",
                path.display(),
                c + 1,
                &headers[c]
            )
        };
        let mut response_value = None;
        for (c, (kind, field)) in kinds.iter().zip(record.iter()).enumerate() {
            match kind {
                Column::Feature | Column::Response | Column::Weight => {
                    let v: f64 = field.parse().with_context(|| {
                        format!("{}: cannot parse {field:?} as a number", at(c))
                    })?;
                    if !v.is_finite() {
                        bail!("{}: value {field} is not finite", at(c));
                    }
                    match kind {
                        Column::Feature => coords.push(v),
                        Column::Response => response_value = Some(v),
                        _ => {
                            if v < 0.0 {
                                bail!("{}: negative weight {v}", at(c));
                            }
                            weights.as_mut().expect("weight column").push(v)
                        }
                    }
                }
                Column::Origin => origin
                    .as_mut()
                    .expect("origin column")
                    .push(field.parse().with_context(|| at(c))?),
                Column::Source => source.as_mut().expect("src column").push(
                    field
                        .parse()
                        .with_context(|| format!("{}: bad row index {field:?}", at(c)))?,
                ),
            }
        }
        if record.len() != kinds.len() {
            bail!(
                "{}: line {line} has {} fields, expected {}",
                path.display(),
                record.len(),
                kinds.len()
            );
        }
        if let Some(y) = response_value {
            coords.push(y);
        }
    }
    if coords.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let points =
        PointSet::new(d, coords, response).with_context(|| format!("{}", path.display()))?;
    Ok(Table {
        points,
        weights,
        origin,
        source,
    })
}

pub fn header(points: &PointSet) -> Vec<String> {
    let mut h: Vec<String> = (1..=points.feature_dim())
        .map(|j| format!("x{j}"))
        .collect();
    if points.has_response() {
        h.push("y".into());
    }
    h
}

pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header(points))?;
    for row in points.rows() {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coreset(path: &Path, core: &Coreset) -> Result<()> {
    let mut w = writer(path)?;
    let points = core.data().points();
    let mut h = header(points);
    h.extend(["w", "origin", "src"].map(String::from));
    w.write_record(h)?;
    for (i, row) in points.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(core.data().weights()[i].to_string());
        rec.push(core.origin()[i].to_string());
        rec.push(core.source()[i].to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for r in rdr.deserialize() {
        out.push(r.with_context(|| format!("{}: bad row", path.display()))?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f))
        .with_context(|| format!("cannot parse {}", path.display()))
}
