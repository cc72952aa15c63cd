//! Plot-ready CSV tables and run manifests.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::Config;
use crate::error::CliResult;
use crate::io::write_text;

/// A column-per-trace table. Missing values are written as empty cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_text(path, &self.to_csv())
    }
}

pub enum Cell {
    Int(usize),
    Num(f64),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // shortest representation that parses back to the same f64
            Cell::Num(v) => write!(f, "{v:?}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::output::Cell::from($x)),*]
    };
}

/// Everything needed to rerun a command plus what it produced.
pub struct Manifest {
    pub command: &'static str,
    pub config: Config,
    pub timings: Vec<(&'static str, f64)>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, config: Config) -> Self {
        Self {
            command,
            config,
            timings: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Comment lines carry version, timings and results; the rest is the
    /// effective configuration, so the file can be passed back via `--config`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# soupdil {} {}", env!("CARGO_PKG_VERSION"), self.command);
        for (name, secs) in &self.timings {
            let _ = writeln!(s, "# seconds.{name}={secs:.6}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        s.push_str(&self.config.to_text());
        s
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_text(path, &self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["iter", "objective", "psnr_db"]);
        t.push(row![1usize, 0.1 + 0.2, None::<f64>]);
        t.push(row![2usize, 3.0, Some(1e-300)]);
        assert_eq!(t.to_csv(), "iter,objective,psnr_db\n1,0.30000000000000004,\n2,3.0,1e-300\n");
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn manifest_reloads_as_config() {
        let mut cfg = Config::new();
        cfg.set("learn.lambda", "69");
        let mut m = Manifest::new("learn", cfg.clone());
        m.timings.push(("total", 1.5));
        m.notes.push("final_nsre_pct=3.2".into());
        assert_eq!(Config::parse(&m.to_text()).unwrap(), cfg);
    }
}
