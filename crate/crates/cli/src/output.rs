//! Tabular output as CSV or a versioned JSON document.

use std::io::Write;

use mlg_core::export::{fmt_f64, Conventions, SCHEMA};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Write `table` in the configured format; `extra` is merged into the JSON document.
pub fn emit(command: &str, config: &RunConfig, table: &Table, extra: Option<(&str, Value)>) -> std::io::Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    match config.format {
        Format::Csv => table.write_csv(&mut buf)?,
        Format::Json => {
            let mut doc = json!({
                "schema": SCHEMA,
                "command": command,
                "config": config,
                "conventions": Conventions::new(config.dwell.to_string()),
                "columns": table.columns,
                "rows": table.rows,
            });
            if let Some((key, value)) = extra {
                doc[key] = value;
            }
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
    }
    match &config.output {
        Some(path) => std::fs::write(path, buf),
        None => std::io::stdout().lock().write_all(&buf),
    }
}
