//! Plain comma-separated input and locale-independent numeric output.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::CliError;

/// A fully numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// `n x cols.len()` matrix of the named columns, in the given order.
    pub fn matrix(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), cols.len(), |i, j| self.rows[i][cols[j]])
    }
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&bytes, &path.display().to_string())
}

pub fn parse_table(bytes: &[u8], label: &str) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{label}: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().any(String::is_empty) {
        return Err(CliError::Input(format!("{label}: empty column name in header")));
    }
    for (k, h) in headers.iter().enumerate() {
        if headers[..k].contains(h) {
            return Err(CliError::Input(format!("{label}: duplicate column '{h}'")));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{label}: {e}")))?;
        let line = i + 2;
        let row = rec
            .iter()
            .zip(&headers)
            .map(|(field, name)| {
                if field.is_empty() {
                    return Err(CliError::Input(format!("{label}: missing value in column '{name}' on line {line}")));
                }
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(CliError::Input(format!(
                        "{label}: non-numeric or non-finite value '{field}' in column '{name}' on line {line}"
                    ))),
                }
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{label}: no data rows")));
    }
    Ok(Table { headers, rows })
}

/// `%g`-style formatting with `sig` significant digits; never locale dependent.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt6(x: f64) -> String {
    fmt_sig(x, 6)
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

/// Writes rows of already formatted cells as CSV.
pub fn write_csv<W: Write>(out: W, headers: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Never).from_writer(out);
    w.write_record(headers).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(1.0), "1");
        assert_eq!(fmt6(-2.5), "-2.5");
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(123456.7), "123457");
        assert_eq!(fmt6(1234567.0), "1.23457e6");
        assert_eq!(fmt6(9.9999996), "10");
        assert_eq!(fmt6(1e-5), "0.00001");
        assert_eq!(fmt6(1.5e-7), "1.5e-7");
        assert_eq!(fmt6(0.869_485_1), "0.869485");
        assert_eq!(fmt6(f64::NAN), "NaN");
    }

    #[test]
    fn parses_numeric_table() {
        let t = parse_table(b"y,a, b\n1,2,3\n4.5,-1e-3,0\n", "t").unwrap();
        assert_eq!(t.headers, ["y", "a", "b"]);
        assert_eq!(t.rows[1], [4.5, -0.001, 0.0]);
        assert_eq!(t.column_index("b"), Some(2));
    }

    #[test]
    fn rejects_bad_tables() {
        for bad in [
            &b"y,a\n1,\n"[..],
            b"y,a\n1,NA\n",
            b"y,a\n1,2,3\n",
            b"y,a\n1,\"2,5\"\n",
            b"y,y\n1,2\n",
            b"y,a\n",
            b"y,a\n1,nan\n",
        ] {
            assert!(matches!(parse_table(bad, "t"), Err(CliError::Input(_))), "{:?}", String::from_utf8_lossy(bad));
        }
    }
}
