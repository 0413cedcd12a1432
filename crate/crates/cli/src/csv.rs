//! CSV tables: header line, comma separated, LF endings, 12 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use mixshor_core::experiments::{MixSweepRow, NoiseSweepRow, StageReport};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Stage,
    Noise,
    Mix,
    Baseline,
    OracleCheck,
}

impl Schema {
    pub fn header(&self) -> &'static [&'static str] {
        match self {
            Self::Stage => &["stage", "kind", "avg_logneg", "mixedness"],
            Self::Noise => &["prob", "successes", "runs", "rate"],
            Self::Mix => &["epsilon", "success_prob", "avg_entanglement"],
            Self::Baseline => &["n", "a", "order", "random_baseline"],
            Self::OracleCheck => &["kind", "max_deviation"],
        }
    }
}

/// Homogeneous rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.schema.header().len(), "row width");
        self.rows.push(row);
    }

    pub fn stages(reports: &[StageReport]) -> Self {
        let mut t = Self::new(Schema::Stage);
        for r in reports {
            t.push(vec![
                r.stage.to_string(),
                r.kind.to_string(),
                format_real(r.avg_logneg),
                format_real(r.mixedness),
            ]);
        }
        t
    }

    pub fn noise(rows: &[NoiseSweepRow]) -> Self {
        let mut t = Self::new(Schema::Noise);
        for r in rows {
            t.push(vec![
                format_real(r.prob),
                r.successes.to_string(),
                r.runs.to_string(),
                format_real(r.rate()),
            ]);
        }
        t
    }

    pub fn mix(rows: &[MixSweepRow]) -> Self {
        let mut t = Self::new(Schema::Mix);
        for r in rows {
            t.push(vec![
                format_real(r.epsilon),
                format_real(r.success_prob),
                format_real(r.avg_entanglement),
            ]);
        }
        t
    }

    pub fn render(&self) -> String {
        let mut out = self.schema.header().join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Twelve significant digits, trailing zeros dropped. Very large or small
/// magnitudes switch to exponent notation.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exponent) {
        let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = trim_zeros(&s);
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the table to `path`, or to stdout when `path` is `None`.
pub fn write_csv(table: &Table, path: Option<&Path>) -> io::Result<()> {
    let text = table.render();
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_real(15f64.log2()), "3.90689059561");
        assert_eq!(format_real(-2.5), "-2.5");
        assert_eq!(format_real(1.0e-7), "1e-7");
        assert_eq!(format_real(0.1 + 0.2), "0.3");
    }

    #[test]
    fn headers() {
        assert_eq!(
            Table::stages(&[]).render(),
            "stage,kind,avg_logneg,mixedness\n"
        );
        assert_eq!(Table::noise(&[]).render(), "prob,successes,runs,rate\n");
        assert_eq!(
            Table::mix(&[]).render(),
            "epsilon,success_prob,avg_entanglement\n"
        );
    }

    #[test]
    fn noise_rows() {
        let row = NoiseSweepRow {
            prob: 0.05,
            successes: 3,
            runs: 8,
        };
        assert_eq!(
            Table::noise(&[row]).render(),
            "prob,successes,runs,rate\n0.05,3,8,0.375\n"
        );
    }
}
