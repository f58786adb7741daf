//! Angle arguments: raw radians, or multiples of pi via a `pi` suffix
//! (`1.6pi`, `pi`, `-0.5pi`).

use anyhow::{bail, Context, Result};

pub fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some(mult) = t.strip_suffix("pi") {
        let factor = if mult.is_empty() || mult == "+" {
            1.0
        } else if mult == "-" {
            -1.0
        } else {
            mult.parse::<f64>()
                .with_context(|| format!("bad pi multiple in angle '{text}'"))?
        };
        return Ok(factor * std::f64::consts::PI);
    }
    t.parse::<f64>()
        .with_context(|| format!("bad angle '{text}' (radians or '<x>pi')"))
}

/// `start:end`, both sides in angle syntax.
pub fn parse_range(text: &str) -> Result<(f64, f64)> {
    let Some((a, b)) = text.split_once(':') else {
        bail!("range '{text}' must look like 'start:end', e.g. '0:2pi'");
    };
    let start = parse_angle(a)?;
    let end = parse_angle(b)?;
    if !start.is_finite() || !end.is_finite() || end < start {
        bail!("range '{text}' must be finite with end >= start");
    }
    Ok((start, end))
}

/// `points` evenly spaced angles over [start, end], endpoints included.
pub fn grid(range: (f64, f64), points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![range.0];
    }
    (0..points)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_pi_suffix_and_radians() {
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert!((parse_angle("1.6pi").unwrap() - 1.6 * PI).abs() < 1e-15);
        assert!((parse_angle("pi").unwrap() - PI).abs() < 1e-15);
        assert!((parse_angle("-0.5pi").unwrap() + 0.5 * PI).abs() < 1e-15);
        assert!((parse_angle("2.5").unwrap() - 2.5).abs() < 1e-15);
        assert!(parse_angle("xpi").is_err());
        assert!(parse_angle("").is_err());
    }

    #[test]
    fn parses_ranges_and_builds_grids() {
        let r = parse_range("0:2pi").unwrap();
        assert_eq!(r.0, 0.0);
        assert!((r.1 - 2.0 * PI).abs() < 1e-15);
        assert!(parse_range("1:0").is_err());
        assert!(parse_range("nope").is_err());

        let g = grid((0.0, 2.0 * PI), 31);
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 0.0);
        assert!((g[30] - 2.0 * PI).abs() < 1e-15);
        assert!((g[24] - 1.6 * PI).abs() < 1e-12);

        assert_eq!(grid((0.0, 0.0), 1), vec![0.0]);
    }
}
