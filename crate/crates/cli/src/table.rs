//! CSV tables with fixed float formatting.

use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    /// Floats joined with `;` in one field.
    Floats(Vec<f64>),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Rounds to 6 significant digits, then prints the shortest decimal that
/// reads back as the rounded value. `raw` skips the rounding.
pub fn format_float(v: f64, raw: bool) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let v = if raw {
        v
    } else {
        format!("{v:.5e}").parse::<f64>().expect("formatted float parses")
    };
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs();
    if !(1e-4..1e15).contains(&mag) {
        return format!("{v:e}");
    }
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Writes tables one after another, separated by a blank line.
pub fn write_tables<W: Write>(out: W, tables: &[Table], raw: bool) -> std::io::Result<()> {
    let mut out = out;
    for (i, table) in tables.iter().enumerate() {
        if i > 0 {
            out.write_all(b"\n")?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Float(v) => format_float(*v, raw),
                Cell::Int(v) => v.to_string(),
                Cell::Floats(vs) => vs
                    .iter()
                    .map(|v| format_float(*v, raw))
                    .collect::<Vec<_>>()
                    .join(";"),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            }))?;
        }
        w.flush()?;
    }
    out.flush()
}
