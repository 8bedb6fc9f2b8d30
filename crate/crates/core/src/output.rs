//! CSV and whitespace plot-data writers with stable headers.
//!
//! Floats are written with 17 significant digits so a value round-trips.

use std::fmt::Display;

use crate::error::{Error, Result};

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A column-ordered table that renders to CSV or gnuplot-style data.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One cell of a row being built.
pub enum Cell {
    F(f64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl Cell {
    pub fn text(v: impl Display) -> Self {
        Cell::S(v.to_string())
    }

    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_float(*x),
            Cell::S(s) => s.clone(),
        }
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row.iter().map(Cell::render).collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Whitespace-separated columns with a `#` header; blank line between
    /// blocks whenever the first column changes, as gnuplot's pm3d expects.
    pub fn to_plot_data(&self) -> String {
        let mut out = format!("# {}\n", self.header.join(" "));
        let mut prev: Option<&str> = None;
        for r in &self.rows {
            if prev.is_some_and(|p| p != r[0]) {
                out.push('\n');
            }
            prev = Some(&r[0]);
            let cells: Vec<String> =
                r.iter().map(|c| if c.is_empty() { "-".into() } else { c.replace(' ', "_") }).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -7.6164e-4, 1.0 / 3.0, 1e300, 0.0] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_quotes_and_plot_blocks() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0.into(), Cell::text("x,y")]);
        t.push(vec![2.0.into(), Cell::text("")]);
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("a,b\n"));
        assert!(csv.contains("\"x,y\""));
        let plot = t.to_plot_data();
        assert_eq!(plot.lines().filter(|l| l.is_empty()).count(), 1);
    }
}
