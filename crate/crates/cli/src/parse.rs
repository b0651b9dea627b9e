use aip_core::rational::spiral_points;
use aip_core::C64;

/// Parses `x`, `yi`, `x+yi`, `x-yi` (also with `j`). Exponents are allowed.
pub fn parse_complex(s: &str) -> Option<C64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return s.parse().ok().map(|re| C64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse().ok()?,
    };
    Some(C64::new(re, im))
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointSpec {
    List(Vec<C64>),
    Count(usize),
}

pub fn parse_points(s: &str) -> Option<PointSpec> {
    match s.trim().parse::<usize>() {
        Ok(0) => return Some(PointSpec::List(vec![C64::new(0.0, 0.0)])),
        Ok(n) => return Some(PointSpec::Count(n)),
        Err(_) => {}
    }
    s.split([',', ';']).map(parse_complex).collect::<Option<Vec<_>>>().map(PointSpec::List)
}

impl PointSpec {
    /// Sample points of the disk of radius 0.9 for a count.
    pub fn points(&self, seed: u64) -> Vec<C64> {
        match self {
            PointSpec::List(v) => v.clone(),
            PointSpec::Count(n) => spiral_points(*n, 0.9, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let c = |re, im| Some(C64::new(re, im));
        assert_eq!(parse_complex("0.5"), c(0.5, 0.0));
        assert_eq!(parse_complex("-2i"), c(0.0, -2.0));
        assert_eq!(parse_complex("i"), c(0.0, 1.0));
        assert_eq!(parse_complex("0.3-0.2i"), c(0.3, -0.2));
        assert_eq!(parse_complex("-1e-3+2.5e1j"), c(-1e-3, 25.0));
        assert_eq!(parse_complex("1 - i"), c(1.0, -1.0));
        assert_eq!(parse_complex("abc"), None);
    }

    #[test]
    fn point_lists() {
        assert_eq!(parse_points("12"), Some(PointSpec::Count(12)));
        assert_eq!(parse_points("0"), Some(PointSpec::List(vec![C64::new(0.0, 0.0)])));
        assert_eq!(parse_points("0,0.5i"), Some(PointSpec::List(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.5)])));
        assert_eq!(parse_points("0,x"), None);
    }
}
