//! Plot-ready tables: a `# key: value` metadata block followed by a CSV
//! section with a header row.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no data points to write")]
    Empty,
    #[error("row {row} has {got} fields, header has {want}")]
    Ragged { row: usize, got: usize, want: usize },
    #[error("metadata line {line} is not `# key: value`")]
    Metadata { line: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlotData {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl PlotData {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), PlotError> {
        if self.rows.is_empty() {
            return Err(PlotError::Empty);
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(PlotError::Ragged {
                    row: i,
                    got: row.len(),
                    want: self.columns.len(),
                });
            }
        }
        let io = |source| PlotError::Io {
            path: "<writer>".into(),
            source,
        };
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}").map_err(io)?;
        }
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(&self.columns)?;
        for row in &self.rows {
            wtr.write_record(row)?;
        }
        wtr.flush().map_err(io)
    }

    pub fn read<R: Read>(input: R) -> Result<Self, PlotError> {
        let mut reader = BufReader::new(input);
        let mut metadata = Vec::new();
        let mut line_no = 0;
        loop {
            let buf = reader.fill_buf().map_err(|source| PlotError::Io {
                path: "<reader>".into(),
                source,
            })?;
            if buf.first() != Some(&b'#') {
                break;
            }
            let mut line = String::new();
            reader.read_line(&mut line).map_err(|source| PlotError::Io {
                path: "<reader>".into(),
                source,
            })?;
            line_no += 1;
            let body = line.trim_end_matches(['\n', '\r']);
            let (k, v) = body
                .strip_prefix("# ")
                .and_then(|rest| rest.split_once(": "))
                .ok_or(PlotError::Metadata { line: line_no })?;
            metadata.push((k.to_string(), v.to_string()));
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let columns = rdr.headers()?.iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        Ok(Self {
            metadata,
            columns,
            rows,
        })
    }
}

/// Writes `points` to `path` as a metadata block plus CSV data.
pub fn emit_plot_data(points: &PlotData, path: impl AsRef<Path>) -> Result<(), PlotError> {
    let path = path.as_ref();
    if points.rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let mut buf = Vec::new();
    points.write(&mut buf)?;
    std::fs::write(path, buf).map_err(|source| PlotError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_plot_data(path: impl AsRef<Path>) -> Result<PlotData, PlotError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| PlotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    PlotData::read(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PlotData {
        let mut p = PlotData::new(&["tiers", "speedup_vs_2d"]);
        p.meta("command", "sweep-tiers");
        p.meta("note", "a: b");
        p.push(vec!["1".into(), "1.000".into()]);
        p
    }

    #[test]
    fn one_point_one_row() {
        let mut buf = Vec::new();
        sample().write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# command: sweep-tiers\n# note: a: b\ntiers,speedup_vs_2d\n1,1.000\n");
    }

    #[test]
    fn round_trip() {
        let mut p = sample();
        p.push(vec!["2".into(), "quoted, value".into()]);
        let mut buf = Vec::new();
        p.write(&mut buf).unwrap();
        assert_eq!(PlotData::read(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn empty_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let p = PlotData::new(&["a"]);
        assert!(matches!(emit_plot_data(&p, &path), Err(PlotError::Empty)));
        assert!(!path.exists());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let mut p = PlotData::new(&["a", "b"]);
        p.push(vec!["1".into()]);
        assert!(matches!(p.write(Vec::new()), Err(PlotError::Ragged { .. })));
    }

    #[test]
    fn bad_metadata() {
        let err = PlotData::read("#oops\na\n1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, PlotError::Metadata { line: 1 }));
    }
}
