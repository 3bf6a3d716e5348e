//! The submanifold `X = {ρ₁ = 0} ∩ {ρ₂ = 0} ⊂ Cⁿ⁺²`: specs, validation,
//! first/second-order derivative bundles, projection onto `X`, tangent frames
//! and local graph charts.

mod chart;
mod project;

use std::sync::Arc;

pub use chart::{graph_chart, graph_chart_with, Chart, ChartKind};
pub use project::{project_to_x, tangent_frame, NEWTON_MAX_ITER, NEWTON_TOL};

use crate::expr::{eval_jet, is_real_valued, parse_with, Expr, VarRef, Vars, REAL_CHECK_TOL, REAL_CHECK_TRIALS};
use crate::linalg::{rank, CMat, CVec, RMat};
use crate::{Error, Result, C64};

/// Numerical tolerances attached to a spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum `|ρ_m|` for a point to count as lying on `X`.
    pub on_surface: f64,
    /// Relative threshold for rank decisions.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            on_surface: 1e-9,
            rank: 1e-8,
        }
    }
}

/// Complex rectangle `[re_min, re_max] × i[im_min, im_max]` for one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Rect {
            re: (re_min, re_max),
            im: (im_min, im_max),
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.re.0 <= self.re.1 && self.im.0 <= self.im.1)
            || [self.re.0, self.re.1, self.im.0, self.im.1]
                .iter()
                .any(|x| !x.is_finite())
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re.0 - slack && z.re <= self.re.1 + slack && z.im >= self.im.0 - slack && z.im <= self.im.1 + slack
    }
}

/// Search box: one rectangle per ambient variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox(pub Vec<Rect>);

impl SearchBox {
    /// The cube `[-r, r]` in every real coordinate.
    pub fn cube(nvars: usize, r: f64) -> Self {
        SearchBox(vec![Rect::new(-r, r, -r, r); nvars])
    }

    pub fn contains(&self, p: &[C64], slack: f64) -> bool {
        p.len() == self.0.len() && self.0.iter().zip(p).all(|(r, z)| r.contains(*z, slack))
    }

    /// Largest side length, used as a length scale.
    pub fn diameter(&self) -> f64 {
        self.0
            .iter()
            .map(|r| (r.re.1 - r.re.0).max(r.im.1 - r.im.0))
            .fold(0.0, f64::max)
    }

    /// Uniform grid with `per_dim` points along each real coordinate, in
    /// lexicographic order.
    pub fn grid(&self, per_dim: usize) -> Vec<Vec<C64>> {
        let axes: Vec<Vec<f64>> = self
            .0
            .iter()
            .flat_map(|r| [r.re, r.im])
            .map(|(lo, hi)| {
                if per_dim <= 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..per_dim)
                        .map(|i| lo + (hi - lo) * i as f64 / (per_dim - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    axis.iter().map(move |&x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|xs| xs.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
            .collect()
    }
}

/// A codimension-two submanifold given by two real defining functions.
#[derive(Debug, Clone)]
pub struct ManifoldSpec {
    pub n: usize,
    pub vars: Arc<Vars>,
    pub rho: [Expr; 2],
    pub search_box: SearchBox,
    pub tol: Tolerances,
}

impl ManifoldSpec {
    /// Parse both defining functions over the named variables, with the
    /// default box `[-1, 1]` in every real coordinate and default tolerances.
    pub fn new<S: AsRef<str>>(n: usize, names: &[S], rho1: &str, rho2: &str) -> Result<Self> {
        let vars = Arc::new(Vars::new(names)?);
        let rho = [parse_with(rho1, &vars)?, parse_with(rho2, &vars)?];
        let search_box = SearchBox::cube(vars.len(), 1.0);
        Ok(ManifoldSpec {
            n,
            vars,
            rho,
            search_box,
            tol: Tolerances::default(),
        })
    }

    pub fn with_box(mut self, search_box: SearchBox) -> Self {
        self.search_box = search_box;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// Ambient complex dimension.
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    /// `(ρ₁(p), ρ₂(p))`, real parts.
    pub fn values(&self, p: &[C64]) -> Result<[f64; 2]> {
        Ok([self.rho[0].eval(p)?.re, self.rho[1].eval(p)?.re])
    }

    /// `max |ρ_m(p)|`.
    pub fn residual(&self, p: &[C64]) -> Result<f64> {
        let v = self.values(p)?;
        Ok(v[0].abs().max(v[1].abs()))
    }

    /// Derivatives of both defining functions at `p` up to `order` (1 or 2).
    pub fn pair_jet(&self, p: &[C64], order: usize) -> Result<PairJet> {
        PairJet::at(self, p, order)
    }

    /// Wrap `p` as a surface point without moving it.
    pub fn surface_point(&self, p: &[C64]) -> Result<SurfacePoint> {
        let jet = self.pair_jet(p, 1)?;
        Ok(SurfacePoint {
            coords: CVec(p.to_vec()),
            residual: jet.residual(),
            regular: jet.is_regular(self.tol.rank)?,
        })
    }
}

/// Outcome of [`validate`]; the spec is accepted iff there are no failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check the structural invariants of a spec. Failures are reported as data.
pub fn validate(spec: &ManifoldSpec) -> ValidationReport {
    let mut failures = Vec::new();
    if spec.vars.len() != spec.n + 2 {
        failures.push(format!(
            "dimension mismatch: n = {} needs {} variables, got {}",
            spec.n,
            spec.n + 2,
            spec.vars.len()
        ));
    }
    for (m, rho) in spec.rho.iter().enumerate() {
        if !is_real_valued(rho, REAL_CHECK_TRIALS, REAL_CHECK_TOL) {
            failures.push(format!("rho{} is not real-valued", m + 1));
        }
    }
    if spec.search_box.0.len() != spec.vars.len() {
        failures.push(format!(
            "search box has {} ranges for {} variables",
            spec.search_box.0.len(),
            spec.vars.len()
        ));
    }
    for (name, r) in spec.vars.names().iter().zip(&spec.search_box.0) {
        if r.is_empty() {
            failures.push(format!("search box for {name} is empty"));
        }
    }
    if !(spec.tol.on_surface > 0.0 && spec.tol.rank > 0.0) {
        failures.push("tolerances must be positive".into());
    }
    ValidationReport { failures }
}

/// A validated point of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub coords: CVec,
    /// `max(|ρ₁|, |ρ₂|)` at `coords`.
    pub residual: f64,
    /// Whether the real Jacobian of `(ρ₁, ρ₂)` has rank 2.
    pub regular: bool,
}

/// Values and Wirtinger derivatives of `(ρ₁, ρ₂)` at one point.
#[derive(Debug, Clone)]
pub struct PairJet {
    pub value: [f64; 2],
    /// `∂ρ_m/∂z_j`.
    pub dz: [CVec; 2],
    /// `∂²ρ_m/∂z_j∂z̄_k` (present for order ≥ 2).
    pub mixed: Option<[CMat; 2]>,
    /// `∂²ρ_m/∂z_j∂z_k` (present for order ≥ 2).
    pub hol: Option<[CMat; 2]>,
}

impl PairJet {
    fn at(spec: &ManifoldSpec, p: &[C64], order: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::Invalid(format!("pair jet order must be 1 or 2, got {order}")));
        }
        let d = spec.dim();
        let jets = [eval_jet(&spec.rho[0], p, order)?, eval_jet(&spec.rho[1], p, order)?];
        let value = [jets[0].value().re, jets[1].value().re];
        let dz = [0, 1].map(|m| CVec((0..d).map(|j| jets[m].partial_of(&[VarRef::z(j)])).collect()));
        let (mixed, hol) = if order >= 2 {
            let mixed =
                [0, 1].map(|m| CMat::from_fn(d, d, |j, k| jets[m].partial_of(&[VarRef::z(j), VarRef::zbar(k)])));
            let hol = [0, 1].map(|m| CMat::from_fn(d, d, |j, k| jets[m].partial_of(&[VarRef::z(j), VarRef::z(k)])));
            (Some(mixed), Some(hol))
        } else {
            (None, None)
        };
        Ok(PairJet { value, dz, mixed, hol })
    }

    pub fn dim(&self) -> usize {
        self.dz[0].dim()
    }

    pub fn residual(&self) -> f64 {
        self.value[0].abs().max(self.value[1].abs())
    }

    /// Real gradient of `ρ_m` as a complex vector: `dρ_m(v) = ⟨v, g⟩_R`.
    pub fn real_gradient(&self, m: usize) -> CVec {
        self.dz[m].conj().scale(C64::new(2.0, 0.0))
    }

    /// `dρ_m(v) = 2 Re Σ_j (∂ρ_m/∂z_j) v_j`.
    pub fn differential(&self, m: usize, v: &CVec) -> f64 {
        2.0 * self.dz[m].0.iter().zip(&v.0).map(|(a, x)| a * x).sum::<C64>().re
    }

    /// `∂ρ_m(v) = Σ_j (∂ρ_m/∂z_j) v_j` for a type-(1,0) vector `v`.
    pub fn holomorphic_pairing(&self, m: usize, v: &CVec) -> C64 {
        self.dz[m].0.iter().zip(&v.0).map(|(a, x)| a * x).sum()
    }

    /// `2 × 2N` real Jacobian in the block layout `(Re z, Im z)`.
    pub fn real_jacobian(&self) -> RMat {
        let rows = [self.real_gradient(0).to_real(), self.real_gradient(1).to_real()];
        RMat::from_rows(&rows)
    }

    /// Rank-2 test on the row-normalized real Jacobian.
    pub fn is_regular(&self, rank_tol: f64) -> Result<bool> {
        let j = self.real_jacobian();
        let normalized = RMat::from_fn(2, j.cols(), |i, k| {
            let norm: f64 = j.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                j[(i, k)] / norm
            } else {
                0.0
            }
        });
        Ok(rank(&normalized, rank_tol)? == 2)
    }

    /// Directional derivative of the coefficient vector `∂ρ_m/∂z` along the
    /// real ambient direction `v`. Needs order 2.
    pub fn dz_derivative(&self, m: usize, v: &CVec) -> Result<CVec> {
        let (mixed, hol) = match (&self.mixed, &self.hol) {
            (Some(a), Some(b)) => (&a[m], &b[m]),
            _ => return Err(Error::Internal("second derivatives were not computed".into())),
        };
        let d = self.dim();
        Ok(CVec(
            (0..d)
                .map(|j| (0..d).map(|k| hol[(j, k)] * v[k] + mixed[(j, k)] * v[k].conj()).sum())
                .collect(),
        ))
    }

    /// Sine of the angle between `∂ρ₁` and `∂ρ₂`: `|a∧b| / (|a||b|)`.
    /// Zero exactly at complex jump points.
    pub fn wedge_sine(&self) -> f64 {
        let (a, b) = (&self.dz[0], &self.dz[1]);
        let (na, nb) = (a.norm(), b.norm());
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..a.dim() {
            for j in i + 1..a.dim() {
                s += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
            }
        }
        s.sqrt() / (na * nb)
    }
}

/// Real Gram–Schmidt of the two real gradients: returns the orthonormal
/// normals and the lower-triangular `O` with `(ν₁, ν₂) = O·(g₁, g₂)`, so that
/// `ρ' = O ρ` has orthonormal gradients.
pub fn orthonormal_normals(jet: &PairJet) -> Result<([CVec; 2], [[f64; 2]; 2])> {
    let g1 = jet.real_gradient(0);
    let g2 = jet.real_gradient(1);
    let n1 = g1.norm();
    if n1 == 0.0 {
        return Err(Error::NotRegular);
    }
    let e1 = g1.scale(C64::new(1.0 / n1, 0.0));
    let proj = crate::linalg::real_dot(&g2, &e1);
    let r = g2.sub(&e1.scale(C64::new(proj, 0.0)));
    let n2 = r.norm();
    if n2 <= 1e-12 * g2.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotRegular);
    }
    let e2 = r.scale(C64::new(1.0 / n2, 0.0));
    // e1 = g1/n1, e2 = (g2 − proj·g1/n1)/n2
    let o = [[1.0 / n1, 0.0], [-proj / (n1 * n2), 1.0 / n2]];
    Ok(([e1, e2], o))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> ManifoldSpec {
        ManifoldSpec::new(0, &["z", "w"], "re(w - conj(z)^2)", "im(w - conj(z)^2)").unwrap()
    }

    #[test]
    fn validation_cases() {
        assert!(validate(&graph()).accepted());
        let bad = ManifoldSpec::new(0, &["z", "w"], "z", "im(w)").unwrap();
        let r = validate(&bad);
        assert!(!r.accepted());
        assert!(r.failures[0].contains("rho1"));
        let wrong_n = ManifoldSpec::new(1, &["z", "w"], "re(w)", "im(w)").unwrap();
        assert!(validate(&wrong_n).failures[0].contains("dimension"));
        let empty = graph().with_box(SearchBox(vec![
            Rect::new(1.0, 0.0, 0.0, 1.0),
            Rect::new(0.0, 1.0, 0.0, 1.0),
        ]));
        assert!(!validate(&empty).accepted());
    }

    #[test]
    fn grid_is_lexicographic() {
        let b = SearchBox(vec![Rect::new(0.0, 1.0, -1.0, 1.0)]);
        let g = b.grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![C64::new(0.0, -1.0)]);
        assert_eq!(g[1], vec![C64::new(0.0, 0.0)]);
        assert_eq!(g[8], vec![C64::new(1.0, 1.0)]);
    }

    #[test]
    fn wedge_sine_on_graph() {
        let s = graph();
        let at0 = s.pair_jet(&[C64::new(0.0, 0.0); 2], 1).unwrap();
        assert!(at0.wedge_sine() < 1e-15);
        let off = s.pair_jet(&[C64::new(0.5, 0.0), C64::new(0.25, 0.0)], 1).unwrap();
        assert!(off.wedge_sine() > 0.1);
    }

    #[test]
    fn normals_are_orthonormal() {
        let s = graph();
        let jet = s.pair_jet(&[C64::new(0.3, -0.2), C64::new(0.05, 0.12)], 1).unwrap();
        let ([e1, e2], o) = orthonormal_normals(&jet).unwrap();
        assert!((e1.norm() - 1.0).abs() < 1e-14 && (e2.norm() - 1.0).abs() < 1e-14);
        assert!(crate::linalg::real_dot(&e1, &e2).abs() < 1e-14);
        let rebuilt = jet
            .real_gradient(0)
            .scale(C64::new(o[1][0], 0.0))
            .add(&jet.real_gradient(1).scale(C64::new(o[1][1], 0.0)));
        assert!(rebuilt.sub(&e2).norm() < 1e-14);
    }
}
