//! Bit-channel reliability orders.
//!
//! Every order here is a permutation of `0..N` listed from least to most
//! reliable, with 0-based indices. Files use 1-based indices, one per line.

use std::path::Path;

use super::CodebookError;

const NR_SEQUENCE: &str = include_str!("../../data/nr_reliability_1024.txt");

/// The 5G NR polar reliability order restricted to a length-`n` code.
pub fn nr_reliability(n: usize) -> Result<Vec<usize>, CodebookError> {
    if !n.is_power_of_two() || n > 1024 {
        return Err(CodebookError::BadLength(n));
    }
    let order = NR_SEQUENCE
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<usize>().expect("bundled sequence is numeric") - 1)
        .filter(|&i| i < n)
        .collect();
    Ok(order)
}

/// Parses a 1-based reliability listing.
pub fn parse_reliability(text: &str, n: usize) -> Result<Vec<usize>, CodebookError> {
    let mut order = Vec::with_capacity(n);
    for (line_no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: usize = t.parse().map_err(|_| CodebookError::BadReliabilityLine {
            line: line_no + 1,
            text: t.to_string(),
        })?;
        if v == 0 {
            return Err(CodebookError::BadReliabilityLine {
                line: line_no + 1,
                text: t.to_string(),
            });
        }
        order.push(v - 1);
    }
    validate_order(&order, n)?;
    Ok(order)
}

pub fn read_reliability(path: &Path, n: usize) -> Result<Vec<usize>, CodebookError> {
    let text = std::fs::read_to_string(path).map_err(|e| CodebookError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_reliability(&text, n)
}

pub(crate) fn validate_order(order: &[usize], n: usize) -> Result<(), CodebookError> {
    if order.len() != n {
        return Err(CodebookError::NotPermutation(format!(
            "expected {n} entries, found {}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(CodebookError::NotPermutation(format!(
                "index {} repeated or out of range",
                i + 1
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < 10.0 {
        (-0.4527 * x.powf(0.86) + 0.0218).exp()
    } else {
        (std::f64::consts::PI / x).sqrt() * (-x / 4.0).exp() * (1.0 - 10.0 / (7.0 * x))
    }
}

fn phi_inv(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while phi(hi) > y {
        hi *= 2.0;
        if hi > 1e6 {
            return hi;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gaussian-approximation construction at a design noise level.
///
/// Each bit channel is ranked by its mean LLR, ties going to the lower index.
pub fn gaussian_approximation(n: usize, sigma: f64) -> Result<Vec<usize>, CodebookError> {
    if !n.is_power_of_two() || !(2..=1 << 16).contains(&n) {
        return Err(CodebookError::BadLength(n));
    }
    let stages = n.trailing_zeros();
    let mut mean = vec![2.0 / (sigma * sigma); 1];
    for _ in 0..stages {
        let mut next = Vec::with_capacity(mean.len() * 2);
        for &m in &mean {
            let p = phi(m);
            next.push(phi_inv(1.0 - (1.0 - p) * (1.0 - p)));
            next.push(2.0 * m);
        }
        mean = next;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mean[a].total_cmp(&mean[b]));
    Ok(order)
}
