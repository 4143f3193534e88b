//! Plain-text curve files: one point per line, comma-separated coordinates.
//! Blank lines and `#` comments are skipped. The first point fixes the
//! dimension.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Curve;

/// Parses the curve file format. Line numbers in errors are 1-based.
pub fn parse_curve(text: &str) -> Result<Curve> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let mut count = 0;
        for field in line.split(',') {
            let field = field.trim();
            let x: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("not a number: {field:?}")))?;
            if !x.is_finite() {
                return Err(parse_err(format!("non-finite coordinate {field:?}")));
            }
            coords.push(x);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(parse_err(format!("expected {d} coordinates, found {count}")));
            }
            Some(_) => {}
        }
    }
    match dim {
        None => Err(Error::EmptyCurve),
        Some(d) => Curve::from_flat(d, coords),
    }
}

/// Renders a curve in the format read by [`parse_curve`].
pub fn format_curve(c: &Curve) -> String {
    let mut out = String::new();
    for p in c.points() {
        let fields: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = Curve::from_xy(&[(0.5, -1.0), (3.0, 1e-7)]).unwrap();
        assert_eq!(parse_curve(&format_curve(&c)).unwrap(), c);
    }

    #[test]
    fn comments_and_blanks() {
        let c = parse_curve("# header\n\n1, 2\n3,4 # trailing\n").unwrap();
        assert_eq!(c.flat(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(c.dim(), 2);
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(
            parse_curve("1,2\n\nx,3\n").unwrap_err(),
            Error::Parse { line: 3, message: "not a number: \"x\"".into() }
        );
        assert!(matches!(parse_curve("1,2\n1,2,3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_curve("1,nan\n"), Err(Error::Parse { line: 1, .. })));
        assert_eq!(parse_curve("# nothing\n"), Err(Error::EmptyCurve));
    }
}
