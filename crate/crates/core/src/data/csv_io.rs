use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{MessError, Result};
use crate::estimate::IdEstimate;
use crate::points::PointSet;

/// Reads a numeric CSV, one point per row. Errors carry the 1-based line and
/// column of the offending field.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut dim = None;
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(MessError::Parse {
                    row: line,
                    col: record.len().min(d) + 1,
                    msg: format!("expected {d} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| MessError::Parse {
                row: line,
                col: j + 1,
                msg: format!("not a number: `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(MessError::Parse {
                    row: line,
                    col: j + 1,
                    msg: format!("non-finite value `{field}`"),
                });
            }
            data.push(v);
        }
    }
    match dim {
        Some(d) => PointSet::from_flat(d, data),
        None => Err(MessError::Parse {
            row: 0,
            col: 0,
            msg: "no data rows".into(),
        }),
    }
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<PointSet> {
    read_csv(File::open(path)?, has_header)
}

/// Writes points with shortest round-trip float formatting, so reading the
/// file back yields bit-identical values.
pub fn write_points_csv<W: Write>(writer: W, points: &PointSet, header: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if header {
        w.write_record((0..points.dim()).map(|j| format!("x{j}")))?;
    }
    for row in points.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_points_csv(path: impl AsRef<Path>, points: &PointSet, header: bool) -> Result<()> {
    write_points_csv(File::create(path)?, points, header)
}

/// Columns `point_id,estimate,estimator,k`. Degenerate estimates are written
/// as `inf`.
pub fn write_estimates_csv<W: Write>(writer: W, estimates: &[IdEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["point_id", "estimate", "estimator", "k"])?;
    for e in estimates {
        w.write_record([
            e.point.to_string(),
            e.value.to_string(),
            e.estimator.name().to_string(),
            e.k.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_estimates_csv(path: impl AsRef<Path>, estimates: &[IdEstimate]) -> Result<()> {
    write_estimates_csv(File::create(path)?, estimates)
}
