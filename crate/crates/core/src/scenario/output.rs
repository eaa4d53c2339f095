//! CSV tables and JSON summaries written by the scenario runners.
//!
//! CSV files are UTF-8, comma separated, with a single header line. Numbers
//! use the shortest representation that round-trips, switching to
//! scientific notation outside `[1e-5, 1e15)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MarketParams, TypeDistribution};
use crate::sim::Equilibrium;

pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-5..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::invalid(
                "table",
                format!("row has {} cells, header has {}", row.len(), self.header.len()),
            ));
        }
        if let Some((index, &value)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses a numeric CSV produced by [`Table::to_csv`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::invalid("csv", "missing header"))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut t = Table::new(header);
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid("csv", format!("bad number `{c}` on data line {}", i + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            t.push(row)?;
        }
        Ok(t)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn per_class(names: &[&str], k: usize) -> Vec<String> {
    let mut out = Vec::new();
    for name in names {
        for i in 1..=k {
            out.push(format!("{name}_{i}"));
        }
    }
    out
}

/// Columns of `equilibrium.csv` (class suffixes are 1-based).
pub fn equilibrium_header(eq: &Equilibrium, k: usize) -> Vec<String> {
    let mut h: Vec<String> = vec!["t".into(), "zbar".into()];
    match eq {
        Equilibrium::Exponential(_) => {
            h.push("mean_consumption".into());
            h.extend(per_class(&["pi_star", "c_star_at_mean_wealth"], k));
        }
        Equilibrium::Power(_) => {
            h.extend(per_class(&["pi_star", "c_star_fraction", "spending_rate", "mean_wealth"], k));
        }
    }
    h
}

pub fn equilibrium_table(eq: &Equilibrium, dist: &TypeDistribution, params: &MarketParams) -> Result<Table> {
    let k = dist.len();
    let grid = *eq.grid();
    let t = grid.nodes();
    let z = eq.zbar().values();
    let mut table = Table::new(equilibrium_header(eq, k));
    match eq {
        Equilibrium::Exponential(e) => {
            let mean_c = e.mean_consumption_path(dist, params)?;
            let paths: Vec<_> = dist.classes.iter().map(|c| e.class_paths(c, params)).collect();
            for j in 0..t.len() {
                let mut row = vec![t[j], z[j], mean_c[j]];
                row.extend(paths.iter().map(|p| p.pi_star[j]));
                row.extend(paths.iter().map(|p| p.mean_wealth[j] / p.time_to_go[j] + p.intercept[j]));
                table.push(row)?;
            }
        }
        Equilibrium::Power(e) => {
            let paths: Vec<_> = dist.classes.iter().map(|c| e.class_paths(c, params)).collect();
            for j in 0..t.len() {
                let mut row = vec![t[j], z[j]];
                row.extend(paths.iter().map(|p| p.pi_star));
                row.extend(paths.iter().map(|p| p.c_star[j]));
                row.extend(paths.iter().map(|p| p.c_star[j] * p.mean_wealth[j]));
                row.extend(paths.iter().map(|p| p.mean_wealth[j]));
                table.push(row)?;
            }
        }
    }
    Ok(table)
}

/// Machine-readable failure record written as `error.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        let field = match e {
            Error::InvalidParameter { field, .. } => Some(field.clone()),
            _ => None,
        };
        let mut message = String::new();
        let _ = write!(message, "{e}");
        Self { error: e.kind().to_string(), message, field }
    }
}
