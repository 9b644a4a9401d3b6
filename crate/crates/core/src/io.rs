//! Serialization: CSV for numbers, JSON for metadata, SVG heatmaps.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a CSV
//! back yields bit-identical values and reruns produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use crate::classical::ProbTrajectory;
use crate::error::{Error, Result};
use crate::sweeps::{Axis, PhaseGrid};
use crate::trajectory::Trajectory;

/// Corner cell of a grid CSV: `axis1\axis2`.
const CORNER_SEPARATOR: char = '\\';

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// `t,<name>` rows.
pub fn trajectory_csv(traj: &Trajectory, name: &str) -> String {
    let mut rows = vec![vec!["t".to_string(), name.to_string()]];
    rows.extend(traj.iter().map(|(t, v)| vec![fmt_f64(t), fmt_f64(v)]));
    csv_string(rows)
}

/// `t,p1,p2,p3` rows, plus `se1,se2,se3` for Monte Carlo paths.
pub fn prob_trajectory_csv(traj: &ProbTrajectory, std_err: Option<&[[f64; 3]]>) -> String {
    let mut header: Vec<String> = ["t", "p1", "p2", "p3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if std_err.is_some() {
        header.extend(["se1", "se2", "se3"].iter().map(|s| s.to_string()));
    }
    let mut rows = vec![header];
    for (k, (t, p)) in traj.times().iter().zip(traj.states()).enumerate() {
        let mut row = vec![fmt_f64(*t)];
        row.extend(p.as_array().iter().map(|&x| fmt_f64(x)));
        if let Some(se) = std_err {
            row.extend(se[k].iter().map(|&x| fmt_f64(x)));
        }
        rows.push(row);
    }
    csv_string(rows)
}

/// Header row holds `axis1\axis2` followed by the axis2 values; each later
/// row starts with its axis1 value. Missing cells are empty.
pub fn grid_csv(grid: &PhaseGrid) -> String {
    let mut header = vec![format!(
        "{}{CORNER_SEPARATOR}{}",
        grid.axis1.name, grid.axis2.name
    )];
    header.extend(grid.axis2.values.iter().map(|&v| fmt_f64(v)));
    let mut rows = vec![header];
    for (i, &a) in grid.axis1.values.iter().enumerate() {
        let mut row = vec![fmt_f64(a)];
        row.extend(
            grid.row(i)
                .into_iter()
                .map(|v| v.map(fmt_f64).unwrap_or_default()),
        );
        rows.push(row);
    }
    csv_string(rows)
}

fn parse_f64(field: &str, origin: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(origin, format!("line {line}: `{field}` is not a number")))
}

fn read_records(text: &str, origin: &str) -> Result<Vec<csv::StringRecord>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(origin, e.to_string()))
}

/// Reads a grid written by [`grid_csv`]; `meta` is attached as-is.
pub fn read_grid_csv(text: &str, meta: Map<String, Value>, origin: &str) -> Result<PhaseGrid> {
    let records = read_records(text, origin)?;
    let (header, body) = records
        .split_first()
        .ok_or_else(|| Error::parse(origin, "empty grid file"))?;
    let corner = header.get(0).unwrap_or_default();
    let (name1, name2) = corner.split_once(CORNER_SEPARATOR).ok_or_else(|| {
        Error::parse(
            origin,
            format!("corner cell `{corner}` lacks `axis1\\axis2`"),
        )
    })?;
    let axis2 = header
        .iter()
        .skip(1)
        .map(|f| parse_f64(f, origin, 1))
        .collect::<Result<Vec<_>>>()?;
    let mut axis1 = Vec::with_capacity(body.len());
    let mut values = Vec::with_capacity(body.len() * axis2.len());
    for (r, rec) in body.iter().enumerate() {
        let line = r + 2;
        if rec.len() != axis2.len() + 1 {
            return Err(Error::parse(
                origin,
                format!(
                    "line {line}: expected {} fields, got {}",
                    axis2.len() + 1,
                    rec.len()
                ),
            ));
        }
        axis1.push(parse_f64(&rec[0], origin, line)?);
        for f in rec.iter().skip(1) {
            values.push(if f.trim().is_empty() {
                None
            } else {
                Some(parse_f64(f, origin, line)?)
            });
        }
    }
    PhaseGrid::new(
        Axis::new(name1, axis1),
        Axis::new(name2, axis2),
        values,
        meta,
    )
}

/// Reads a two-column `(t, I)` trace; a non-numeric first row is a header.
pub fn read_trace_csv(text: &str, origin: &str) -> Result<Trajectory> {
    let records = read_records(text, origin)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        if rec.len() < 2 {
            return Err(Error::parse(
                origin,
                format!("line {}: expected two columns", r + 1),
            ));
        }
        if r == 0 && rec[0].trim().parse::<f64>().is_err() {
            continue;
        }
        times.push(parse_f64(&rec[0], origin, r + 1)?);
        values.push(parse_f64(&rec[1], origin, r + 1)?);
    }
    Trajectory::new(times, values).map_err(|e| Error::parse(origin, e.to_string()))
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

const PALETTE: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

/// Linear colour scale over `[0, 1]`.
pub fn color(u: f64) -> String {
    let u = if u.is_finite() {
        u.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = u * (PALETTE.len() - 1) as f64;
    let k = (x.floor() as usize).min(PALETTE.len() - 2);
    let f = x - k as f64;
    let (a, b) = (PALETTE[k], PALETTE[k + 1]);
    let c = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

fn label(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e-3 && x.abs() < 1e4 {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Heatmap with `axis2` horizontal and `axis1` increasing upwards. Each grid
/// cell is one `rect.cell`; missing cells are drawn grey.
pub fn grid_svg(grid: &PhaseGrid, title: &str) -> String {
    const CELL: usize = 12;
    const LEFT: usize = 70;
    const TOP: usize = 30;
    const BOTTOM: usize = 50;
    const BAR: usize = 90;
    let (n1, n2) = grid.shape();
    let width = LEFT + n2 * CELL + BAR;
    let height = TOP + n1 * CELL + BOTTOM;
    let (lo, hi) = grid.finite_range().unwrap_or((0.0, 1.0));
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="12">{}</text>"#,
        LEFT + n2 * CELL / 2,
        escape(title)
    );
    for i in 0..n1 {
        let y = TOP + (n1 - 1 - i) * CELL;
        for j in 0..n2 {
            let x = LEFT + j * CELL;
            let fill = match grid.get(i, j) {
                Some(v) => color((v - lo) / span),
                None => "#d0d0d0".into(),
            };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#
            );
        }
    }
    let tick_step = |n: usize| (n / 6).max(1);
    for i in (0..n1).step_by(tick_step(n1)) {
        let y = TOP + (n1 - 1 - i) * CELL + CELL / 2 + 3;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
            LEFT - 4,
            label(grid.axis1.values[i])
        );
    }
    for j in (0..n2).step_by(tick_step(n2)) {
        let x = LEFT + j * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + n1 * CELL + 14,
            label(grid.axis2.values[j])
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + n2 * CELL / 2,
        TOP + n1 * CELL + 34,
        escape(&grid.axis2.name)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        TOP + n1 * CELL / 2,
        TOP + n1 * CELL / 2,
        escape(&grid.axis1.name)
    );

    let bar_x = LEFT + n2 * CELL + 20;
    let bar_h = n1 * CELL;
    let _ = writeln!(
        s,
        r#"<defs><linearGradient id="colorbar" x1="0" y1="1" x2="0" y2="0">"#
    );
    for k in 0..PALETTE.len() {
        let u = k as f64 / (PALETTE.len() - 1) as f64;
        let _ = writeln!(s, r#"<stop offset="{u}" stop-color="{}"/>"#, color(u));
    }
    let _ = writeln!(s, "</linearGradient></defs>");
    let _ = writeln!(
        s,
        r#"<rect class="colorbar" x="{bar_x}" y="{TOP}" width="12" height="{bar_h}" fill="url(#colorbar)"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">{}</text>"#,
        bar_x + 16,
        TOP + 8,
        label(hi)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">{}</text>"#,
        bar_x + 16,
        TOP + bar_h,
        label(lo)
    );
    s.push_str("</svg>\n");
    s
}
