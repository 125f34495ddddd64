//! Artifact files: CSV with 17 significant digits and versioned JSON.

use serde_json::Value;
use std::io;
use std::path::{Path, PathBuf};

pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// `{:.16e}` is locale-independent and round-trips every f64.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            w.write_record(&fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Output directory that remembers what was written.
pub struct Sink {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn text(&mut self, name: &str, body: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn table(&mut self, name: &str, t: &Table) -> io::Result<()> {
        self.text(name, &t.to_csv())
    }

    /// Pretty JSON with `schema: 1` added at the top level.
    pub fn json(&mut self, name: &str, mut v: Value) -> io::Result<()> {
        if let Value::Object(map) = &mut v {
            map.insert("schema".into(), Value::from(1));
        }
        let mut body = serde_json::to_string_pretty(&v).map_err(io::Error::other)?;
        body.push('\n');
        self.text(name, &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            prop_assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_quotes_text_cells() {
        let mut t = Table::new(&["x", "note"]);
        t.push(vec![1.5.into(), "a, b".into()]);
        assert_eq!(t.to_csv(), "x,note\n1.5000000000000000e0,\"a, b\"\n");
    }
}
