//! Position streams (regular grids and point files) and CSV output.

use std::fmt::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PointsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("grid bounds and counts must all have length {0}")]
    GridArity(usize),
}

/// Points of a regular grid from `lo` to `hi` inclusive; axis 0 varies fastest.
pub fn grid_points(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Vec<Vec<f64>>, PointsError> {
    let d = lo.len();
    if hi.len() != d || counts.len() != d || counts.iter().any(|&c| c == 0) {
        return Err(PointsError::GridArity(d));
    }
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut c = flat;
        let mut p = Vec::with_capacity(d);
        for a in 0..d {
            let i = c % counts[a];
            c /= counts[a];
            let t = if counts[a] == 1 { 0.0 } else { i as f64 / (counts[a] - 1) as f64 };
            p.push(lo[a] + (hi[a] - lo[a]) * t);
        }
        out.push(p);
    }
    Ok(out)
}

/// One whitespace-separated point per line; blank lines and `#` comments skipped.
pub fn parse_points(text: &str, dim: usize) -> Result<Vec<Vec<f64>>, PointsError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| PointsError::Parse { line: n + 1, msg: e.to_string() })?;
        if p.len() != dim {
            return Err(PointsError::Parse { line: n + 1, msg: format!("expected {dim} coordinates, found {}", p.len()) });
        }
        out.push(p);
    }
    Ok(out)
}

/// CSV with the position columns followed by the flattened output components.
pub fn to_csv(names: &[String], positions: &[Vec<f64>], values: &[Vec<f64>]) -> String {
    let d = positions.first().map_or(0, Vec::len);
    let mut s = String::new();
    let mut header: Vec<String> = (0..d).map(|a| format!("p{a}")).collect();
    header.extend(names.iter().cloned());
    let _ = writeln!(s, "{}", header.join(","));
    for (p, v) in positions.iter().zip(values) {
        let row: Vec<String> = p.iter().chain(v).map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_axis0_fastest() {
        let g = grid_points(&[0.0, 0.0], &[1.0, 2.0], &[2, 3]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![1.0, 0.0]);
        assert_eq!(g[2], vec![0.0, 1.0]);
        assert_eq!(g[5], vec![1.0, 2.0]);
    }

    #[test]
    fn points_file() {
        let p = parse_points("# header\n1 2\n\n3.5 4 # c\n", 2).unwrap();
        assert_eq!(p, vec![vec![1.0, 2.0], vec![3.5, 4.0]]);
        assert!(matches!(parse_points("1 2 3\n", 2), Err(PointsError::Parse { line: 1, .. })));
    }
}
