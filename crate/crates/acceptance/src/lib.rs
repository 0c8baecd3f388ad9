//! Helpers for comparing simulated frame-error-rate curves.

/// Eb/N0 at which a reference curve reaches `fer`, by linear interpolation of
/// `log10(FER)` against Eb/N0. Outside the sampled range the nearest segment
/// is extended. Points with zero FER are ignored.
pub fn ebno_at_fer(curve: &[(f64, f64)], fer: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(e, f)| (e, f.log10()))
        .collect();
    if pts.len() < 2 || fer <= 0.0 {
        return None;
    }
    let target = fer.log10();
    let seg = pts
        .windows(2)
        .position(|w| (w[0].1 >= target && target >= w[1].1) || (w[0].1 <= target && target <= w[1].1))
        .unwrap_or(if target > pts[0].1 { 0 } else { pts.len() - 2 });
    let (a, b) = (pts[seg], pts[seg + 1]);
    if a.1 == b.1 {
        return Some(a.0);
    }
    Some(a.0 + (target - a.1) * (b.0 - a.0) / (b.1 - a.1))
}

/// Largest horizontal distance in dB from the points of `curve` to `reference`.
pub fn horizontal_gap(curve: &[(f64, f64)], reference: &[(f64, f64)]) -> Option<f64> {
    curve
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(e, f)| ebno_at_fer(reference, f).map(|r| (e - r).abs()))
        .try_fold(0.0f64, |acc, g| g.map(|g| acc.max(g)))
}
