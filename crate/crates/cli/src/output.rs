use crate::error::{io_err, Result};
use std::path::{Path, PathBuf};

/// Plot-ready rows plus a JSON document with the full reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: serde_json::Value,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            json: serde_json::Value::Null,
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of one column across all rows.
    pub fn values(&self, name: &str) -> Vec<&str> {
        match self.column(name) {
            Some(c) => self.rows.iter().map(|r| r[c].as_str()).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(io_err("<csv buffer>"))?;
        Ok(w.into_inner().expect("flushed writer"))
    }

    /// Writes `<name>.csv` and `<name>.json` under `dir` and returns both
    /// paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&csv_path, self.to_csv()?).map_err(io_err(&csv_path))?;
        let json_path = dir.join(format!("{}.json", self.name));
        let mut text = serde_json::to_string_pretty(&self.json).expect("json value serializes");
        text.push('\n');
        std::fs::write(&json_path, text).map_err(io_err(&json_path))?;
        Ok((csv_path, json_path))
    }
}

pub(crate) fn f(x: f64) -> String {
    format!("{x:.6}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_quotes() {
        let mut t = Table::new("t", &["a", "b"]);
        t.rows.push(vec!["1".into(), "x,y".into()]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1,\"x,y\"\n");
        assert_eq!(t.values("b"), vec!["x,y"]);
    }

    #[test]
    fn writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::new("demo", &["a"]);
        let (c, j) = t.write(dir.path()).unwrap();
        assert!(c.exists() && j.exists());
    }
}
