//! Extrapolation of sampled values to a zero step size.

/// Observed convergence order from three samples at steps `h0 > h1 > h2`
/// in geometric progression: `log(|v2 − v1| / |v1 − v0|) / log(h2 / h1)`.
/// `None` when the differences vanish.
pub fn estimate_order(h: [f64; 3], v: [&[f64]; 3]) -> Option<f64> {
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let d1 = diff(v[1], v[0]);
    let d2 = diff(v[2], v[1]);
    if d1 <= 0.0 || d2 <= 0.0 {
        return None;
    }
    let _ = h[0];
    Some((d2 / d1).ln() / (h[2] / h[1]).ln())
}

/// Snap an observed order to the nearest rational with denominator ≤ 4 when
/// it lies within `0.1`; otherwise return it unchanged.
pub fn snap_order(p: f64) -> f64 {
    let mut best = (f64::INFINITY, p);
    for den in 1..=4 {
        let cand = (p * den as f64).round() / den as f64;
        let err = (cand - p).abs();
        if err < best.0 && cand > 0.0 {
            best = (err, cand);
        }
    }
    if best.0 <= 0.1 {
        best.1
    } else {
        p
    }
}

/// Value at `t = 0` of the polynomial interpolating `(t_i, y_i)`
/// (Neville's scheme), applied componentwise.
pub fn neville_at_zero(t: &[f64], y: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(t.len(), y.len(), "one sample per abscissa");
    assert!(!t.is_empty(), "at least one sample");
    let mut p: Vec<Vec<f64>> = y.to_vec();
    let n = t.len();
    for level in 1..n {
        for i in 0..n - level {
            let j = i + level;
            let (ti, tj) = (t[i], t[j]);
            p[i] = p[i]
                .iter()
                .zip(&p[i + 1])
                .map(|(a, b)| (tj * a - ti * b) / (tj - ti))
                .collect();
        }
    }
    p.swap_remove(0)
}
