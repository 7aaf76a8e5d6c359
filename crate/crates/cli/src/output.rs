//! Numeric CSV tables.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

/// A named table of `f64` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, header: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == header)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Write `table` as CSV. Values use the shortest representation that reads
/// back to the same `f64`.
pub fn write_csv<W: Write>(table: &Table, w: W) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(&table.headers)?;
    for row in &table.rows {
        if row.len() != table.headers.len() {
            return Err(CliError::Output(format!(
                "row of {} values under {} headers in {}",
                row.len(),
                table.headers.len(),
                table.name
            )));
        }
        wtr.write_record(row.iter().map(|x| x.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parse a CSV written by [`write_csv`].
pub fn read_csv<R: Read>(name: &str, r: R) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.is_empty() || headers.iter().any(|h| h.is_empty()) {
        return Err(CliError::Output("empty column header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(CliError::Output(format!(
                "record {} has {} fields, expected {}",
                i + 1,
                rec.len(),
                headers.len()
            )));
        }
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Output(format!("record {}: bad number {f:?}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table {
        name: name.to_string(),
        headers,
        rows,
    })
}

/// Write every table into `dir`, returning the created paths.
pub fn write_outputs(dir: &Path, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(tables.len());
    for t in tables {
        let path = dir.join(t.file_name());
        let f = fs::File::create(&path)?;
        write_csv(t, std::io::BufWriter::new(f))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Gnuplot script plotting every column of each table against the first.
pub fn plot_script(tables: &[Table]) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    for t in tables {
        if t.headers.len() < 2 {
            continue;
        }
        s.push_str(&format!("set title '{}'\nplot ", t.name));
        let curves: Vec<String> = (2..=t.headers.len())
            .map(|c| format!("'{}' using 1:{c} with lines", t.file_name()))
            .collect();
        s.push_str(&curves.join(", \\\n     "));
        s.push_str("\npause -1\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("e", &["x", "v"]);
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,v\n");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = "a,b\n1,2\n3\n";
        assert!(read_csv("r", text.as_bytes()).is_err());
        assert!(read_csv("r", "a,b\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn plot_script_references_csvs() {
        let mut t = Table::new("snapshot", &["x", "v", "sigma"]);
        t.push(vec![0.0, 1.0, 2.0]);
        let s = plot_script(&[t]);
        assert!(s.contains("'snapshot.csv' using 1:3"));
    }
}
