//! Comment-headed numeric tables.
//!
//! ```text
//! # columns: t/tau_c, P[1/ns]; normalization=...; params=ef=1keV de=1eV
//! # any further comment lines
//! 1.0000000000000000e-3,0.0000000000000000e0
//! ```
//!
//! Floats carry 17 significant digits, so a file round-trips every value
//! bit for bit and identical inputs give identical bytes.

use std::fmt::Write as _;

use serde::Serialize;

/// A table with its header metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    /// Column labels, units in brackets.
    pub columns: Vec<String>,
    /// What the data integrate or sum to, in words.
    pub normalization: String,
    /// Resolved parameters, in order.
    pub params: Vec<(String, String)>,
    /// Extra comment lines, without the leading `#`.
    pub comments: Vec<String>,
    /// Numeric rows, each as long as `columns`.
    pub rows: Vec<Vec<f64>>,
}

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    /// Empty table with the given columns.
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            normalization: "none".into(),
            params: Vec::new(),
            comments: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Append a row. Panics on a length mismatch.
    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row length");
        self.rows.push(row);
    }

    /// Header line, starting with `#`.
    pub fn header(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!(
            "# columns: {}; normalization={}; params={}",
            self.columns.join(", "),
            self.normalization,
            params.join(" ")
        )
    }

    /// CSV text.
    pub fn to_csv(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|&x| fmt_f64(x)).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// Same content as a JSON object; non-finite values become `null`.
    pub fn to_json(&self) -> serde_json::Result<String> {
        let params: serde_json::Map<String, serde_json::Value> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), v.clone().into()))
            .collect();
        let v = serde_json::json!({
            "columns": self.columns,
            "normalization": self.normalization,
            "params": params,
            "comments": self.comments,
            "rows": self.rows,
        });
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }
}

/// Header line, comment lines and rows of a parsed table.
pub type ParsedTable = (String, Vec<String>, Vec<Vec<f64>>);

/// Parse a table written by [`Table::to_csv`] back into its header line,
/// comment lines and rows.
pub fn parse_csv(text: &str) -> Result<ParsedTable, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty table")?.to_string();
    if !header.starts_with("# columns: ") {
        return Err("missing column header".into());
    }
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim_start().to_string());
            continue;
        }
        let row = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", i + 2))?;
        rows.push(row);
    }
    Ok((header, comments, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut t = Table::new(["x", "y[ns]"]);
        t.normalization = "sum=1".into();
        t.params.push(("a".into(), "1ns".into()));
        t.comments.push("note".into());
        t.push(vec![0.1, 2.0]);
        assert_eq!(
            t.to_csv(),
            "# columns: x, y[ns]; normalization=sum=1; params=a=1ns\n# note\n\
             1.0000000000000001e-1,2.0000000000000000e0\n"
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let mut t = Table::new(["v"]);
        let xs = [std::f64::consts::PI, 1e-300, -2.5e17, 0.0, 1.0 / 3.0];
        for x in xs {
            t.push(vec![x]);
        }
        let (_, _, rows) = parse_csv(&t.to_csv()).unwrap();
        for (r, x) in rows.iter().zip(xs) {
            assert_eq!(r[0].to_bits(), x.to_bits());
        }
    }

    #[test]
    fn json_nulls_non_finite() {
        let mut t = Table::new(["v"]);
        t.push(vec![f64::NAN]);
        assert!(t.to_json().unwrap().contains("null"));
    }
}
