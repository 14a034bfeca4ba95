//! The one output contract: a named table with a `#`-prefixed metadata
//! preamble, rendered as CSV.
//!
//! Every table carries, in its metadata, the complete parameter set needed
//! to re-run the command that produced it, and rendering is deterministic
//! down to the byte: fixed key order, fixed row order, fixed number
//! formatting (twelve significant digits, `.` decimal separator), `\n`
//! line endings, no timestamps.

use std::fmt::Write as _;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    /// Rendered as an empty field.
    Empty,
}

/// A schema-named table plus its reproduction metadata.
#[derive(Debug, Clone)]
pub struct OutputTable {
    schema: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    metadata: Vec<(String, String)>,
}

impl OutputTable {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        Self {
            schema: schema.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row arity must match the schema");
        self.rows.push(row);
    }

    #[cfg(test)]
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# schema={}", self.schema).unwrap();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let rendered: Vec<String> = row.iter().map(render_cell).collect();
            writeln!(out, "{}", rendered.join(",")).unwrap();
        }
        out
    }
}

fn render_cell(cell: &Cell) -> String {
    match cell {
        Cell::Float(v) => fmt_sig(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

/// Twelve significant digits, plain decimal where readable, scientific for
/// extreme magnitudes, trailing zeros trimmed.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let precision = (11 - exp).max(0) as usize;
        trim_trailing_zeros(format!("{v:.precision$}"))
    } else {
        format!("{v:.11e}")
    }
}

fn trim_trailing_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.25), "0.25");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-0.125), "-0.125");
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(0.2758620689655172), "0.275862068966");
        assert_eq!(fmt_sig(0.0001), "0.0001");
        assert_eq!(fmt_sig(1e-7), "1.00000000000e-7");
        assert_eq!(fmt_sig(1.5e20), "1.50000000000e20");
        assert_eq!(fmt_sig(3.0e-9), "3.00000000000e-9");
    }

    #[test]
    fn csv_layout() {
        let mut t = OutputTable::new("demo", &["a", "b"]);
        t.meta("seed", 42);
        t.push_row(vec![Cell::Float(0.5), Cell::Text("x".into())]);
        t.push_row(vec![Cell::Int(3), Cell::Empty]);
        assert_eq!(t.to_csv(), "# schema=demo\n# seed=42\na,b\n0.5,x\n3,\n");
        assert_eq!(t.row_count(), 2);
    }

    #[test]
    #[should_panic(expected = "row arity")]
    fn arity_is_enforced() {
        let mut t = OutputTable::new("demo", &["a", "b"]);
        t.push_row(vec![Cell::Int(1)]);
    }
}
