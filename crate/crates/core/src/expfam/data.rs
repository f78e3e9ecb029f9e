//! Plain-text observation files: one value per line, `#` comments, blank
//! lines ignored.

use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_data(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: f64 = line
            .parse()
            .map_err(|_| Error::invalid(format!("line {}: `{line}` is not a number", lineno + 1)))?;
        if !x.is_finite() {
            return Err(Error::invalid(format!("line {}: `{line}` is not finite", lineno + 1)));
        }
        out.push(x);
    }
    Ok(out)
}

pub fn read_data_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_data(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blanks_and_exponents() {
        let xs = parse_data("# header\n1.5\n\n  2e-1 \n#x\n-3E2\n").unwrap();
        assert_eq!(xs, vec![1.5, 0.2, -300.0]);
    }

    #[test]
    fn bad_lines_report_line_number() {
        let err = parse_data("1\nabc\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_data("inf\n").is_err());
        assert!(parse_data("NaN\n").is_err());
    }
}
