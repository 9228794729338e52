//! Angle literals such as `0.314`, `pi`, `-pi/2`, `3pi/10` or `3*pi/10`,
//! plus inclusive integer ranges and linear angle grids.

use std::f64::consts::PI;

/// Parses an angle in radians.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty angle".into());
    }
    let token = s.find("pi").map(|at| (at, 2)).or_else(|| s.find('π').map(|at| (at, 'π'.len_utf8())));
    let value = match token {
        Some((at, token_len)) => {
            let head = s[..at].trim_end_matches('*');
            let tail = &s[at + token_len..];
            let coef = match head {
                "" | "+" => 1.0,
                "-" => -1.0,
                h => parse_number(h)?,
            };
            let scale = if tail.is_empty() {
                1.0
            } else if let Some(d) = tail.strip_prefix('/') {
                1.0 / parse_number(d)?
            } else if let Some(m) = tail.strip_prefix('*') {
                parse_number(m)?
            } else {
                return Err(format!("cannot parse angle '{text}'"));
            };
            coef * PI * scale
        }
        None => match s.split_once('/') {
            Some((a, b)) => parse_number(a)? / parse_number(b)?,
            None => parse_number(&s)?,
        },
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("angle '{text}' is not finite"))
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("'{s}' is not a number"))
}

/// Parses `a..b` or `a..=b` (both inclusive) or a single integer.
pub fn parse_range(text: &str) -> Result<Vec<usize>, String> {
    let s = text.trim();
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad range start in '{text}'"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad range end in '{text}'"))?;
    if hi < lo {
        return Err(format!("empty range '{text}'"));
    }
    Ok((lo..=hi).collect())
}

/// Parses `from:to:count` into `count` evenly spaced angles including both
/// ends.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("grid '{text}' is not of the form from:to:count"));
    };
    let (a, b) = (parse_angle(a)?, parse_angle(b)?);
    let n: usize = n.trim().parse().map_err(|_| format!("bad grid count in '{text}'"))?;
    match n {
        0 => Err(format!("grid '{text}' has no points")),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}
