//! Plain-text formats for clouds, traces and audit tables.
//!
//! Every float is written with Rust's `{}` formatting, the shortest decimal
//! that parses back to the same `f64`, so writing is deterministic and
//! reading a file back is lossless. Infinite deaths are written as `inf`.

use std::fmt::Write as _;

use crate::engine::MergeEvent;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::spectral::SpectralAuditRow;
use crate::topology::{Dendrogram, PersistenceDiagram, PersistencePoint};

pub const MERGES_HEADER: &str = "step,survivor,absorbed";
pub const DIAGNOSTICS_HEADER: &str = "step,epsilon,diameter,lambda2,hausdorff_to_prev";
pub const DIAGRAM_HEADER: &str = "birth,death,dim,essential";
pub const BARCODE_HEADER: &str = "id,birth,death";
pub const LINKAGE_HEADER: &str = "merge_index,left_ref,right_ref,height,size";
pub const ACTIVITY_HEADER: &str = "step,activity";

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: '{field}' is not a number")))
}

fn parse_usize(field: &str, line: usize) -> Result<usize> {
    field.parse().map_err(|_| {
        Error::Parse(format!(
            "line {line}: '{field}' is not a nonnegative integer"
        ))
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Data lines of a text table: blank and `#` lines dropped, with 1-based
/// line numbers kept for error messages.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    header: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l == header => Ok(()),
        Some((n, l)) => Err(Error::Parse(format!(
            "line {n}: expected header '{header}', found '{l}'"
        ))),
        None => Err(Error::Parse(format!("missing header '{header}'"))),
    }
}

/// Reads a cloud: one point per line, comma or whitespace separated. A
/// first line that is not numeric is taken as a header and skipped.
pub fn parse_cloud(text: &str) -> Result<PointCloud> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, (n, line)) in data_lines(text).enumerate() {
        let fields = split_fields(line);
        if k == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let row = fields
            .iter()
            .map(|f| parse_f64(f, n))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {n}: {} columns, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no points found".into()));
    }
    PointCloud::from_rows(&rows)
}

/// Headerless CSV, one point per line.
pub fn format_cloud(x: &PointCloud) -> String {
    let mut out = String::new();
    for row in x.rows() {
        let fields: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn snapshot_header(dim: usize) -> String {
    let mut h = String::from("id,multiplicity");
    for k in 0..dim {
        let _ = write!(h, ",x{k}");
    }
    h
}

/// Snapshot with ids and multiplicities: `id,multiplicity,x0,...`.
pub fn format_snapshot(x: &PointCloud) -> String {
    let mut out = snapshot_header(x.dim());
    out.push('\n');
    for (i, row) in x.rows().enumerate() {
        let _ = write!(out, "{},{}", x.ids()[i], x.multiplicity()[i]);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<PointCloud> {
    let mut lines = data_lines(text);
    let (n, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    let dim = split_fields(header).len().saturating_sub(2);
    if dim == 0 || header != snapshot_header(dim) {
        return Err(Error::Parse(format!(
            "line {n}: bad snapshot header '{header}'"
        )));
    }
    let (mut coords, mut ids, mut mult) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines {
        let f = split_fields(line);
        if f.len() != dim + 2 {
            return Err(Error::Parse(format!(
                "line {n}: {} columns, expected {}",
                f.len(),
                dim + 2
            )));
        }
        ids.push(parse_usize(f[0], n)?);
        mult.push(parse_usize(f[1], n)?);
        for v in &f[2..] {
            coords.push(parse_f64(v, n)?);
        }
    }
    PointCloud::with_identity(coords, dim, ids, mult)
}

pub fn format_merges(merges: &[MergeEvent]) -> String {
    let mut out = format!("{MERGES_HEADER}\n");
    for m in merges {
        let _ = writeln!(out, "{},{},{}", m.step, m.survivor, m.absorbed);
    }
    out
}

pub fn parse_merges(text: &str) -> Result<Vec<MergeEvent>> {
    let mut lines = data_lines(text);
    expect_header(&mut lines, MERGES_HEADER)?;
    lines
        .map(|(n, line)| {
            let f = split_fields(line);
            if f.len() != 3 {
                return Err(Error::Parse(format!("line {n}: expected 3 columns")));
            }
            Ok(MergeEvent {
                step: parse_usize(f[0], n)?,
                survivor: parse_usize(f[1], n)?,
                absorbed: parse_usize(f[2], n)?,
            })
        })
        .collect()
}

/// Per-snapshot diagnostics. `lambda2` is absent when the spectrum was not
/// computed; `hausdorff_to_prev` is absent for the first snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub epsilon: f64,
    pub diameter: f64,
    pub lambda2: Option<f64>,
    pub hausdorff_to_prev: Option<f64>,
}

pub fn format_diagnostics(rows: &[DiagnosticsRow]) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.step,
            r.epsilon,
            r.diameter,
            opt(r.lambda2),
            opt(r.hausdorff_to_prev)
        );
    }
    out
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = data_lines(text);
    expect_header(&mut lines, DIAGNOSTICS_HEADER)?;
    lines
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("line {n}: expected 5 columns")));
            }
            let optional = |s: &str| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse_f64(s, n).map(Some)
                }
            };
            Ok(DiagnosticsRow {
                step: parse_usize(f[0], n)?,
                epsilon: parse_f64(f[1], n)?,
                diameter: parse_f64(f[2], n)?,
                lambda2: optional(f[3])?,
                hausdorff_to_prev: optional(f[4])?,
            })
        })
        .collect()
}

pub fn format_diagram(d: &PersistenceDiagram) -> String {
    let mut out = format!("{DIAGRAM_HEADER}\n");
    for p in &d.points {
        let _ = writeln!(out, "{},{},{},{}", p.birth, p.death, p.dim, p.essential);
    }
    out
}

pub fn parse_diagram(text: &str) -> Result<PersistenceDiagram> {
    let mut lines = data_lines(text);
    expect_header(&mut lines, DIAGRAM_HEADER)?;
    let points = lines
        .map(|(n, line)| {
            let f = split_fields(line);
            if f.len() != 4 {
                return Err(Error::Parse(format!("line {n}: expected 4 columns")));
            }
            let essential = f[3]
                .parse()
                .map_err(|_| Error::Parse(format!("line {n}: '{}' is not a boolean", f[3])))?;
            Ok(PersistencePoint {
                birth: parse_f64(f[0], n)?,
                death: parse_f64(f[1], n)?,
                dim: parse_usize(f[2], n)?,
                essential,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PersistenceDiagram::new(points))
}

/// Bars of dimension `dim`, numbered in diagram order.
pub fn format_barcode(d: &PersistenceDiagram, dim: usize) -> String {
    let mut out = format!("{BARCODE_HEADER}\n");
    for (i, p) in d.points.iter().filter(|p| p.dim == dim).enumerate() {
        let _ = writeln!(out, "{i},{},{}", p.birth, p.death);
    }
    out
}

pub fn format_linkage(d: &Dendrogram) -> String {
    let mut out = format!("{LINKAGE_HEADER}\n");
    for (k, m) in d.merges.iter().enumerate() {
        let _ = writeln!(out, "{k},{},{},{},{}", m.left, m.right, m.height, m.size);
    }
    out
}

pub fn format_activity(curve: &[(usize, f64)]) -> String {
    let mut out = format!("{ACTIVITY_HEADER}\n");
    for (t, v) in curve {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

pub fn spectral_header(dim: usize) -> String {
    let mut h = String::from("step,lambda2,lambda2_bound");
    for k in 0..dim {
        let _ = write!(h, ",observed_h_norm_{k},bound_rhs_{k}");
    }
    h.push_str(",degree_delta");
    h
}

pub fn format_spectral(rows: &[SpectralAuditRow], dim: usize) -> String {
    let mut out = spectral_header(dim);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{}", r.step, r.lambda2, opt(r.lambda2_bound));
        for (o, b) in r.observed.iter().zip(&r.bound) {
            let _ = write!(out, ",{o},{b}");
        }
        let _ = writeln!(out, ",{}", opt(r.degree_delta));
    }
    out
}
