use std::sync::Arc;

use super::extrapolate::{estimate_order, neville_at_zero, snap_order};
use super::{cluster_points, BlowupFiber, ChainDiagnostics, FiberDiagnostics, FiberPoint, CLUSTER_RADIUS};
use crate::expr::{eval_jet, parse_with, Expr, VarRef, Vars, REAL_CHECK_TOL};
use crate::linalg::{qr_least_squares, RMat};
use crate::par::Execution;
use crate::{Error, Result, C64};

/// Angular samples per circle in [`curve_fiber`].
pub const CURVE_SAMPLES: usize = 720;

/// A real plane curve `f(x, y) = 0`.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub vars: Arc<Vars>,
    pub f: Expr,
    /// `[(x_min, x_max), (y_min, y_max)]`.
    pub search_box: [(f64, f64); 2],
    /// Residual below which `f = ∇f = 0` counts as solved.
    pub tol: f64,
}

impl CurveSpec {
    /// Curve in the variables `x, y` over the box `[-1, 1]²`.
    pub fn new(f: &str) -> Result<Self> {
        Self::with_vars(f, &["x", "y"])
    }

    pub fn with_vars<S: AsRef<str>>(f: &str, names: &[S]) -> Result<Self> {
        let vars = Arc::new(Vars::new(names)?);
        if vars.len() != 2 {
            return Err(Error::Invalid(format!(
                "a plane curve needs 2 variables, got {}",
                vars.len()
            )));
        }
        let f = parse_with(f, &vars)?;
        Ok(CurveSpec {
            vars,
            f,
            search_box: [(-1.0, 1.0), (-1.0, 1.0)],
            tol: 1e-10,
        })
    }

    pub fn with_box(mut self, x: (f64, f64), y: (f64, f64)) -> Self {
        self.search_box = [x, y];
        self
    }

    /// Failures of the structural checks (empty when valid).
    pub fn validate(&self) -> Vec<String> {
        let mut failures = Vec::new();
        // real coefficients: f is real on a fixed scatter of real points
        let real = (0..16).all(|i| {
            let t = i as f64;
            let p = [
                C64::new((1.3 * t).sin() * 2.0, 0.0),
                C64::new((0.7 * t + 0.4).cos() * 2.0, 0.0),
            ];
            self.f
                .eval(&p)
                .is_ok_and(|v| v.im.abs() <= REAL_CHECK_TOL * v.norm().max(1.0))
        });
        if !real {
            failures.push("f is not real-valued on real points".into());
        }
        for (name, (lo, hi)) in self.vars.names().iter().zip(&self.search_box) {
            if !(lo < hi) {
                failures.push(format!("search box for {name} is empty"));
            }
        }
        failures
    }

    pub fn eval(&self, p: [f64; 2]) -> Result<f64> {
        Ok(self.f.eval(&[C64::new(p[0], 0.0), C64::new(p[1], 0.0)])?.re)
    }

    /// `(f, f_x, f_y)` and, when `second`, the real Hessian.
    fn derivatives(&self, p: [f64; 2], second: bool) -> Result<(f64, [f64; 2], [[f64; 2]; 2])> {
        let order = if second { 2 } else { 1 };
        let jet = eval_jet(&self.f, &[C64::new(p[0], 0.0), C64::new(p[1], 0.0)], order)?;
        // ∂/∂x_j = ∂/∂z_j + ∂/∂z̄_j on the real slice
        let grad = [0, 1].map(|j| (jet.partial_of(&[VarRef::z(j)]) + jet.partial_of(&[VarRef::zbar(j)])).re);
        let mut hess = [[0.0; 2]; 2];
        if second {
            for (j, row) in hess.iter_mut().enumerate() {
                for (k, entry) in row.iter_mut().enumerate() {
                    let mut s = C64::new(0.0, 0.0);
                    for a in [VarRef::z(j), VarRef::zbar(j)] {
                        for b in [VarRef::z(k), VarRef::zbar(k)] {
                            s += jet.partial_of(&[a, b]);
                        }
                    }
                    *entry = s.re;
                }
            }
        }
        Ok((jet.value().re, grad, hess))
    }

    fn in_box(&self, p: [f64; 2]) -> bool {
        let slack = 1e-9;
        p.iter()
            .zip(&self.search_box)
            .all(|(x, (lo, hi))| *x >= lo - slack && *x <= hi + slack)
    }
}

/// Singular points of the curve (`f = f_x = f_y = 0`) inside its box.
pub fn curve_singularities(c: &CurveSpec) -> Result<Vec<[f64; 2]>> {
    const GRID: usize = 21;
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..GRID)
            .map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
            .collect()
    };
    let (xs, ys) = (axis(c.search_box[0]), axis(c.search_box[1]));
    let mut found: Vec<[f64; 2]> = Vec::new();
    for &x in &xs {
        for &y in &ys {
            if let Some(p) = refine_singular(c, [x, y])? {
                found.push(p);
            }
        }
    }
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for p in found {
        if kept
            .iter()
            .all(|k| ((k[0] - p[0]).powi(2) + (k[1] - p[1]).powi(2)).sqrt() > 1e-6)
        {
            kept.push(p);
        }
    }
    Ok(kept)
}

fn refine_singular(c: &CurveSpec, seed: [f64; 2]) -> Result<Option<[f64; 2]>> {
    let residual = |p: [f64; 2]| -> Result<(Vec<f64>, RMat)> {
        let (v, g, h) = c.derivatives(p, true)?;
        let r = vec![v, g[0], g[1]];
        let j = RMat::from_rows(&[vec![g[0], g[1]], h[0].to_vec(), h[1].to_vec()]);
        Ok((r, j))
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut p = seed;
    let (mut r, mut j) = residual(p)?;
    let mut res = norm(&r);
    for _ in 0..200 {
        if res == 0.0 {
            break;
        }
        let Ok(step) = qr_least_squares(&j, &r, 1e-15) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..20 {
            let cand = [p[0] - t * step[0], p[1] - t * step[1]];
            let (cr, cj) = residual(cand)?;
            let cres = norm(&cr);
            if cres < res {
                accepted = Some((cand, cr, cj, cres));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cr, cj, cres)) = accepted else { break };
        let stalled = cres > 0.99 * res;
        p = cand;
        r = cr;
        j = cj;
        res = cres;
        if stalled {
            break;
        }
    }
    Ok((res <= c.tol && c.in_box(p)).then_some(p))
}

/// Gauss map `(f_y : −f_x)` at a smooth point of the curve.
pub fn curve_gauss(c: &CurveSpec, p: [f64; 2]) -> Result<FiberPoint> {
    let (_, g, _) = c.derivatives(p, false)?;
    let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if !(norm > 1e-14) {
        return Err(Error::Singular(format!("gradient vanishes at ({}, {})", p[0], p[1])));
    }
    Ok(FiberPoint::from_real(&[g[1], -g[0]]).expect("nonzero gradient"))
}

/// `1e-2` halved six times, down to `1.5625e-4`.
pub fn default_curve_ladder() -> Vec<f64> {
    (0..7).map(|k| 1e-2 / f64::powi(2.0, k)).collect()
}

/// Angles in `[0, 2π)` where the curve meets the circle of radius `eps`.
fn circle_roots(c: &CurveSpec, s: [f64; 2], eps: f64) -> Result<Vec<f64>> {
    let tau = std::f64::consts::TAU;
    let g = |theta: f64| c.eval([s[0] + eps * theta.cos(), s[1] + eps * theta.sin()]);
    let thetas: Vec<f64> = (0..=CURVE_SAMPLES)
        .map(|i| tau * i as f64 / CURVE_SAMPLES as f64)
        .collect();
    let vals: Vec<f64> = thetas.iter().map(|t| g(*t)).collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for i in 0..CURVE_SAMPLES {
        let (mut a, mut b) = (thetas[i], thetas[i + 1]);
        let (mut fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            let fm = g(m)?;
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        roots.push(0.5 * (a + b));
    }
    // merge collisions
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for r in roots {
        if merged.last().is_none_or(|l| r - l > 1e-9) {
            merged.push(r);
        }
    }
    if merged.len() > 1 && merged[0] + tau - merged[merged.len() - 1] <= 1e-9 {
        merged.pop();
    }
    Ok(merged)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let d = (a - b).rem_euclid(tau);
    d.min(tau - d)
}

struct Chain {
    angles: Vec<f64>,
    values: Vec<[f64; 2]>,
}

/// Limit tangent directions of the curve over `s`.
pub fn curve_fiber(c: &CurveSpec, s: [f64; 2], ladder: &[f64], exec: Execution) -> Result<BlowupFiber> {
    if ladder.is_empty() {
        return Err(Error::Invalid("empty epsilon ladder".into()));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) || ladder.iter().any(|e| !(*e >= 1e-6)) {
        return Err(Error::Invalid(
            "epsilon ladder must be strictly decreasing and >= 1e-6".into(),
        ));
    }
    let levels: Vec<Vec<f64>> = exec
        .map(ladder, |&eps| circle_roots(c, s, eps))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut diagnostics = FiberDiagnostics {
        ladder: ladder.to_vec(),
        roots_per_level: levels.iter().map(Vec::len).collect(),
        ..Default::default()
    };
    let base = vec![C64::new(s[0], 0.0), C64::new(s[1], 0.0)];
    if levels.iter().all(Vec::is_empty) {
        diagnostics
            .warnings
            .push("no curve points on any circle: isolated real point, empty fiber".into());
        return Ok(BlowupFiber {
            base,
            points: Vec::new(),
            diagnostics,
        });
    }
    let gauss_at = |eps: f64, theta: f64| -> Result<[f64; 2]> {
        let p = curve_gauss(c, [s[0] + eps * theta.cos(), s[1] + eps * theta.sin()])?;
        Ok([p.coords[0].re, p.coords[1].re])
    };

    // follow every root of the coarsest populated level down the ladder
    let start = levels.iter().position(|l| !l.is_empty()).expect("some level has roots");
    let mut chains: Vec<Chain> = levels[start]
        .iter()
        .map(|&a| {
            Ok(Chain {
                angles: vec![a],
                values: vec![gauss_at(ladder[start], a)?],
            })
        })
        .collect::<Result<_>>()?;
    for (lvl, roots) in levels.iter().enumerate().skip(start + 1) {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, ch) in chains.iter().enumerate() {
            if ch.angles.len() != lvl - start {
                continue;
            }
            let last = *ch.angles.last().expect("chains are nonempty");
            for (ri, &r) in roots.iter().enumerate() {
                pairs.push((angle_gap(last, r), ci, ri));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut used_c, mut used_r) = (vec![false; chains.len()], vec![false; roots.len()]);
        for (_, ci, ri) in pairs {
            if used_c[ci] || used_r[ri] {
                continue;
            }
            used_c[ci] = true;
            used_r[ri] = true;
            let v = gauss_at(ladder[lvl], roots[ri])?;
            chains[ci].angles.push(roots[ri]);
            chains[ci].values.push(v);
        }
        if used_r.iter().any(|u| !u) {
            diagnostics.warnings.push(format!(
                "{} unmatched roots at eps = {:e}",
                used_r.iter().filter(|u| !**u).count(),
                ladder[lvl]
            ));
        }
    }

    let mut limits = Vec::new();
    for ch in &chains {
        let k = ch.values.len();
        let eps: Vec<f64> = ladder[start..start + k].to_vec();
        let finest = ch.values[k - 1];
        // branch vectors are only defined up to sign; align with the finest
        let aligned: Vec<Vec<f64>> = ch
            .values
            .iter()
            .map(|v| {
                let sgn = if v[0] * finest[0] + v[1] * finest[1] < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                vec![sgn * v[0], sgn * v[1]]
            })
            .collect();
        let (limit, order) = extrapolate_chain(&eps, &aligned);
        let point =
            FiberPoint::from_real(&limit).ok_or_else(|| Error::Internal("zero extrapolated direction".into()))?;
        let finest_point = FiberPoint::from_real(&aligned[k - 1]).expect("unit vector");
        diagnostics.chains.push(ChainDiagnostics {
            levels: k,
            order,
            correction: point.distance(&finest_point),
            limit: point.clone(),
            samples: (0..k)
                .map(|i| (eps[i], ch.angles[i], [aligned[i][0], aligned[i][1]]))
                .collect(),
        });
        limits.push(point);
    }
    let points = cluster_points(&limits, CLUSTER_RADIUS)
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    Ok(BlowupFiber {
        base,
        points,
        diagnostics,
    })
}

/// Extrapolate samples `v(ε_i)` to `ε → 0`. The order `p` of the leading
/// error term is estimated from the three finest samples and snapped to a
/// small rational; the limit is then the value at `t = 0` of the polynomial
/// in `t = ε^p` through the finest (up to five) samples.
fn extrapolate_chain(eps: &[f64], values: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let k = values.len();
    if k < 2 {
        return (values[k - 1].clone(), 0.0);
    }
    let order = if k >= 3 {
        estimate_order(
            [eps[k - 3], eps[k - 2], eps[k - 1]],
            [&values[k - 3], &values[k - 2], &values[k - 1]],
        )
        .map(snap_order)
    } else {
        Some(1.0)
    };
    let Some(p) = order.filter(|p| p.is_finite() && *p > 0.0) else {
        // converged to rounding: nothing to extrapolate
        return (values[k - 1].clone(), 0.0);
    };
    let used = k.min(5);
    let t: Vec<f64> = eps[k - used..].iter().map(|e| e.powf(p)).collect();
    (neville_at_zero(&t, &values[k - used..]), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_points() {
        for f in ["y^2 - x^3 - x^2", "y^2 - x^3"] {
            let s = curve_singularities(&CurveSpec::new(f).unwrap()).unwrap();
            assert_eq!(s.len(), 1, "{f}: {s:?}");
            assert!(s[0][0].abs() < 1e-8 && s[0][1].abs() < 1e-8);
        }
        assert!(curve_singularities(&CurveSpec::new("y - x^2").unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn gauss_map() {
        let node = CurveSpec::new("y^2 - x^3 - x^2").unwrap();
        let (x, y) = (0.3, (0.3f64.powi(3) + 0.09).sqrt());
        let g = curve_gauss(&node, [x, y]).unwrap();
        let want = FiberPoint::from_real(&[2.0 * y, 2.0 * x + 3.0 * x * x]).unwrap();
        assert!(g.distance(&want) < 1e-14);
        let par = CurveSpec::new("y - x^2").unwrap();
        assert_eq!(
            curve_gauss(&par, [0.0, 0.0]).unwrap(),
            FiberPoint::from_real(&[1.0, 0.0]).unwrap()
        );
        assert!(curve_gauss(&node, [0.0, 0.0]).is_err());
    }

    #[test]
    fn node_fiber() {
        let node = CurveSpec::new("y^2 - x^3 - x^2").unwrap();
        let f = curve_fiber(&node, [0.0, 0.0], &default_curve_ladder(), Execution::Sequential).unwrap();
        assert_eq!(f.points.len(), 2, "{:?}", f.points);
        let r = 0.5f64.sqrt();
        assert!(f.points[0].distance(&FiberPoint::from_real(&[r, -r]).unwrap()) < 1e-6);
        assert!(f.points[1].distance(&FiberPoint::from_real(&[r, r]).unwrap()) < 1e-6);
    }

    #[test]
    fn cusp_fiber() {
        let cusp = CurveSpec::new("y^2 - x^3").unwrap();
        let f = curve_fiber(&cusp, [0.0, 0.0], &default_curve_ladder(), Execution::Sequential).unwrap();
        assert_eq!(f.points.len(), 1, "{f:?}");
        assert!(f.points[0].distance(&FiberPoint::from_real(&[1.0, 0.0]).unwrap()) < 1e-6);
        assert!(f.diagnostics.chains.iter().all(|c| (c.order - 0.5).abs() < 1e-12));
    }

    #[test]
    fn smooth_and_isolated_points() {
        let par = CurveSpec::new("y - x^2").unwrap();
        let f = curve_fiber(&par, [0.0, 0.0], &default_curve_ladder(), Execution::Sequential).unwrap();
        assert_eq!(f.points.len(), 1);
        assert!(f.points[0].distance(&curve_gauss(&par, [0.0, 0.0]).unwrap()) < 1e-9);

        let iso = CurveSpec::new("x^2 + y^2").unwrap();
        let f = curve_fiber(&iso, [0.0, 0.0], &default_curve_ladder(), Execution::Sequential).unwrap();
        assert!(f.points.is_empty());
        assert!(!f.diagnostics.warnings.is_empty());
    }

    #[test]
    fn bad_ladder() {
        let par = CurveSpec::new("y - x^2").unwrap();
        assert!(curve_fiber(&par, [0.0, 0.0], &[1e-3, 1e-2], Execution::Sequential).is_err());
        assert!(curve_fiber(&par, [0.0, 0.0], &[1e-3, 1e-7], Execution::Sequential).is_err());
    }
}
