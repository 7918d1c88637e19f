//! Table and report writers. Every file starts with the tool name and
//! version; floats use six significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const TOOL: &str = "fentropy";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `%g` with six significant digits. Ties round half to even on the exact
/// binary value.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// File-system-safe form of an identifier.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub struct Table {
    command: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(command: &'static str, header: &[&'static str]) -> Self {
        Table {
            command,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| CliError::Internal(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| CliError::Internal(e.to_string()))?;
        }
        let body = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        let body = String::from_utf8(body).map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(format!("# {TOOL} {VERSION} {}\n{body}", self.command))
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        write_file(dir, name, &self.render()?)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    data: &'a T,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, command: &str, data: &T) -> Result<PathBuf, CliError> {
    let doc = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        data,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(dir, name, &(text + "\n"))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(-0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(2.302585092994046), "2.30259");
        assert_eq!(fmt_g(4.374911676688687), "4.37491");
        assert_eq!(fmt_g(0.8), "0.8");
        assert_eq!(fmt_g(-0.5), "-0.5");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g(999999.5), "1e+06");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.00001234567), "1.23457e-05");
        assert_eq!(fmt_g(f64::INFINITY), "inf");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn ties_round_half_even() {
        // exactly representable midpoints
        assert_eq!(fmt_g(1234565.0), "1.23456e+06");
        assert_eq!(fmt_g(1234575.0), "1.23458e+06");
        assert_eq!(fmt_g(0.125), "0.125");
        assert_eq!(fmt_g(100.0625), "100.062");
        assert_eq!(fmt_g(100.1875), "100.188");
        // just above the midpoint
        assert_eq!(fmt_g(10.0000625), "10.0001");
    }

    #[test]
    fn table_has_version_line() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let text = t.render().unwrap();
        assert_eq!(text, format!("# fentropy {VERSION} demo\na,b\n1,\"x,y\"\n"));
    }
}
