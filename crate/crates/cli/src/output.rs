//! Dataset container and its CSV/JSON renderings.
//!
//! Both formats render floats in shortest round-trip decimal form, so a
//! written value parses back to the identical bits. CSV lines beginning
//! with '#' are comments; the last comment line names the columns.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};

use serde::Serialize;

/// One table cell: a number or a short label (used by spa-demo rows).
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(&'static str),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Num(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Text(s) => out.push_str(s),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Text(s) => serde_json::Value::String((*s).to_string()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

/// A rendered run: comment block, column names, rows.
#[derive(Debug)]
pub struct Dataset {
    /// Comment lines for the file header (without the leading "# ").
    pub comments: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Dataset { comments: Vec::new(), columns, rows: Vec::new() }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "# {}", self.columns.join(","));
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(',');
                }
                cell.render(&mut out);
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, spec: &impl Serialize) -> serde_json::Value {
        serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "spec": serde_json::to_value(spec).expect("RunSpec serializes"),
            "comments": self.comments,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| {
                serde_json::Value::Array(r.iter().map(Cell::to_json).collect())
            }).collect::<Vec<_>>(),
        })
    }

    /// Numeric view of one column (labels and nulls become NaN).
    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match r[idx] {
                Cell::Num(v) => v,
                Cell::Text(_) => f64::NAN,
            })
            .collect()
    }
}

/// Write text to a file, or to stdout when the path is "-".
pub fn write_text(path: &str, text: &str) -> io::Result<()> {
    if path == "-" {
        io::stdout().write_all(text.as_bytes())
    } else {
        fs::write(path, text)
    }
}

/// Parsed numeric rows of a reference CSV (comment lines skipped).
pub fn parse_reference_csv(text: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>, _> = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>().map_err(|_| {
                    format!("reference line {}: cannot parse {f:?} as a number", lineno + 1)
                })
            })
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err("reference file holds no data rows".to_string());
    }
    Ok(rows)
}

/// Per-column maximum absolute relative deviation of `got` vs `reference`.
///
/// The grids (first columns) must agree to 1e-12 relative; a shape mismatch
/// or grid mismatch is an Err. Non-finite cells on either side count as a
/// deviation of infinity unless both sides are non-finite.
pub fn compare_to_reference(
    got: &Dataset,
    reference: &[Vec<f64>],
) -> Result<Vec<(String, f64)>, String> {
    if reference.len() != got.rows.len() {
        return Err(format!(
            "reference has {} data rows, this run produced {}",
            reference.len(),
            got.rows.len()
        ));
    }
    let ncols = got.columns.len();
    if reference.iter().any(|r| r.len() != ncols) {
        return Err(format!("reference rows must have {ncols} columns"));
    }
    let grid = got.column(0);
    for (i, (g, r)) in grid.iter().zip(reference.iter().map(|r| r[0])).enumerate() {
        if (g - r).abs() > 1e-12 * g.abs().max(r.abs()) {
            return Err(format!(
                "grid mismatch at data row {}: {g} vs reference {r}",
                i + 1
            ));
        }
    }
    let mut out = Vec::with_capacity(ncols);
    for c in 0..ncols {
        let col = got.column(c);
        let mut worst = 0.0f64;
        for (g, r) in col.iter().zip(reference.iter().map(|r| r[c])) {
            let dev = if g.is_finite() && r.is_finite() {
                (g - r).abs() / g.abs().max(r.abs()).max(1e-300)
            } else if g.is_finite() != r.is_finite() {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(dev);
        }
        out.push((got.columns[c].to_string(), worst));
    }
    Ok(out)
}
