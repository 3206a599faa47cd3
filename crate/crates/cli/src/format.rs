//! Locale-free CSV rendering.

use std::fmt::Write as _;

pub const SIG_DIGITS: usize = 12;

/// Fixed scientific notation with 12 significant digits, e.g.
/// `-1.23456789012e+03`; infinities and NaN map to sentinels.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "NAN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "INF".into() } else { "NEGINF".into() };
    }
    let s = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    // -0.0 prints as "-0.00000000000e0"; keep the sign, it is deterministic
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// CSV table with a fixed header; every cell is pre-rendered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(
            row.into_iter()
                .map(|c| match c {
                    Cell::Num(v) => sci(v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(t) => t,
                })
                .collect(),
        );
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_examples() {
        assert_eq!(sci(1.0), "1.00000000000e+00");
        assert_eq!(sci(-1234.5), "-1.23450000000e+03");
        assert_eq!(sci(1e-300), "1.00000000000e-300");
        assert_eq!(sci(f64::NEG_INFINITY), "NEGINF");
        assert_eq!(sci(0.0), "0.00000000000e+00");
    }

    #[test]
    fn table_renders_header_and_rows() {
        let mut t = Table::new(&["n", "d"]);
        t.push(vec![3usize.into(), 0.5.into()]);
        assert_eq!(t.render(), "n,d\n3,5.00000000000e-01\n");
    }

    proptest! {
        #[test]
        fn twelve_significant_digits_round_trip(x in -1e300f64..1e300) {
            let s = sci(x);
            let back: f64 = s.parse().unwrap();
            prop_assert!((back - x).abs() <= 5e-12 * x.abs());
            let digits = s.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
            prop_assert_eq!(digits.len(), SIG_DIGITS);
        }
    }
}
