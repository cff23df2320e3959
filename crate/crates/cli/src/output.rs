use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Rows of JSON scalars under named columns.
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "{}", self.headers.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .headers
                        .iter()
                        .zip(row)
                        .map(|(h, v)| (h.to_string(), v.clone()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// A float as JSON; non-finite values become null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| match path {
        Some(p) => CliError::io(p, e),
        None => CliError::io(Path::new("<stdout>"), e),
    }
}

pub fn write_table(table: &Table, format: Format, path: Option<&PathBuf>) -> Result<(), CliError> {
    let path = path.map(|p| p.as_path());
    let mut w = open(path)?;
    let res = match format {
        Format::Csv => table.write_csv(&mut w),
        Format::Json => serde_json::to_writer_pretty(&mut w, &table.to_json())
            .map_err(io::Error::from)
            .and_then(|_| writeln!(w)),
    };
    res.and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn write_json(value: &Value, path: Option<&PathBuf>) -> Result<(), CliError> {
    let path = path.map(|p| p.as_path());
    let mut w = open(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(io::Error::from)
        .and_then(|_| writeln!(w))
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

/// A summary goes to its own file when asked, otherwise to stderr.
pub fn write_summary(value: &Value, path: Option<&PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) => write_json(value, Some(p)),
        None => {
            eprintln!(
                "{}",
                serde_json::to_string(value).expect("summary serializes")
            );
            Ok(())
        }
    }
}
