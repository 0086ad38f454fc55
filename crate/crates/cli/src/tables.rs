//! CSV output with one header line and 17 significant digits per float.

use std::path::Path;

use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let err = |e| CliError::csv(path, e);
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let err = |e| CliError::csv(path, e);
        let mut r = csv::Reader::from_path(path).map_err(err)?;
        let header = r.headers().map_err(err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn float(&self, path: &Path, row: usize, col: usize) -> Result<f64, CliError> {
        let cell = &self.rows[row][col];
        cell.parse()
            .map_err(|_| CliError::table(path, format!("row {}: `{cell}` is not a number", row + 1)))
    }

    /// Every value of column `name`, in row order.
    pub fn float_column(&self, path: &Path, name: &str) -> Result<Vec<f64>, CliError> {
        let c = self
            .column_index(name)
            .ok_or_else(|| CliError::table(path, format!("no column `{name}`")))?;
        (0..self.rows.len()).map(|r| self.float(path, r, c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let vals = [0.1, -1.0 / 3.0, 1e-300, f64::MAX, 0.0, 2.5e-17, f64::INFINITY];
        let mut t = Table::new(["v"]);
        for v in vals {
            t.push(vec![fmt_f64(v)]);
        }
        t.write(&path).unwrap();
        let back = Table::read(&path).unwrap().float_column(&path, "v").unwrap();
        assert_eq!(back, vals);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("v"));
    }
}
