//! CSV tables and whitespace-delimited plot data.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Numeric columns only, `#`-prefixed header; other cells are dropped.
    pub fn plot(&self, columns: &[usize]) -> String {
        let mut out = format!(
            "# {}\n",
            columns
                .iter()
                .map(|&c| self.header[c].as_str())
                .collect::<Vec<_>>()
                .join(" ")
        );
        for r in &self.rows {
            let cells: Vec<&str> = columns.iter().map(|&c| r[c].as_str()).collect();
            if cells.iter().all(|c| !c.is_empty()) {
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

pub fn write_to(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Sends the CSV to `path` or stdout, and the human report to whichever stream the CSV does not use.
pub struct Sink<'a> {
    pub csv_path: Option<&'a Path>,
}

impl Sink<'_> {
    pub fn report(&self, line: &str) {
        if self.csv_path.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }

    pub fn emit(&self, table: &Table) -> Result<(), CliError> {
        match self.csv_path {
            Some(p) => write_to(p, &table.csv()),
            None => {
                print!("{}", table.csv());
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(num(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn csv_and_plot_layout() {
        let mut t = Table::new(["x", "y", "status"]);
        t.push(vec![num(1.0), num(2.0), "ok".into()]);
        t.push(vec![num(3.0), String::new(), "failed".into()]);
        assert_eq!(t.csv().lines().next(), Some("x,y,status"));
        assert_eq!(t.csv().lines().count(), 3);
        let p = t.plot(&[0, 1]);
        assert_eq!(p.lines().count(), 2);
        assert!(p.starts_with("# x y\n"));
    }
}
