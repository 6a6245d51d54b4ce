use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::I(i)
    }
}

impl From<i32> for Cell {
    fn from(i: i32) -> Self {
        Cell::I(i.into())
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::I(i as i64)
    }
}

/// One data series, written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table `{}`", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Header line, then one line per row; floats in round-trip
    /// scientific notation.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::F(x) => write!(s, "{x:.16e}"),
                    Cell::I(n) => write!(s, "{n}"),
                }
                .unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(self.file_name());
        fs::write(&path, self.to_csv()).with_context(|| format!("writing {}", path.display()))
    }
}
