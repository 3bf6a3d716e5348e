//! Complex tangent spaces, complex jump points, the dual Gauss map in
//! Plücker coordinates, the transversality certificate, and the Levi form
//! with its Mizner determinant polynomial.

mod levi;
mod plucker;

pub use levi::{
    gauge_transform, levi_form, levi_form_with_reference, levi_on_blowup, mizner_poly, nondegenerate, LeviBase,
    LeviPair, MiznerPoly, Nondegeneracy,
};
pub use plucker::{gauss_plucker, signed_index, transversality, PhiMap, PluckerPoint};

use crate::linalg::{gram_schmidt, wedge, CVec, RMat, TwoForm};
use crate::manifold::{project_to_x, ManifoldSpec, PairJet, SurfacePoint, NEWTON_MAX_ITER};
use crate::par::Execution;
use crate::{linalg, Result, C64};

/// `H^{1,0}_p`: type-(1,0) vectors annihilated by `∂ρ₁` and `∂ρ₂`.
#[derive(Debug, Clone)]
pub struct ComplexTangent {
    pub base: SurfacePoint,
    pub basis: Vec<CVec>,
    pub cdim: usize,
}

/// Orthonormal basis of `{v : Σ_j a_j v_j = 0 for every a in rows}`.
fn annihilator(rows: &[&CVec], dim: usize) -> Vec<CVec> {
    let conj: Vec<CVec> = rows.iter().filter_map(|r| r.conj().normalized()).collect();
    let row_basis = gram_schmidt(&[], &conj, conj.len(), 0.0);
    let candidates: Vec<CVec> = (0..dim).map(|k| CVec::basis(dim, k)).collect();
    gram_schmidt(&row_basis, &candidates, dim - row_basis.len(), 1e-6)
}

/// Complex tangent space at `p`. Its dimension is decided by the same
/// relative wedge test as [`is_jump`] with the spec's rank tolerance.
pub fn complex_tangent(spec: &ManifoldSpec, p: &SurfacePoint) -> Result<ComplexTangent> {
    let jet = spec.pair_jet(&p.coords.0, 1)?;
    let d = spec.dim();
    let basis = if jet.wedge_sine() <= spec.tol.rank {
        let dominant = if jet.dz[0].norm() >= jet.dz[1].norm() {
            &jet.dz[0]
        } else {
            &jet.dz[1]
        };
        annihilator(&[dominant], d)
    } else {
        annihilator(&[&jet.dz[0], &jet.dz[1]], d)
    };
    Ok(ComplexTangent {
        base: p.clone(),
        cdim: basis.len(),
        basis,
    })
}

/// The (2,0)-form `∂ρ₁ ∧ ∂ρ₂` at `p` together with its norm.
pub fn jump_indicator(spec: &ManifoldSpec, p: &SurfacePoint) -> Result<(TwoForm, f64)> {
    let jet = spec.pair_jet(&p.coords.0, 1)?;
    let form = wedge(&jet.dz[0], &jet.dz[1])?;
    let norm = form.norm();
    Ok((form, norm))
}

/// `|∂ρ₁ ∧ ∂ρ₂| ≤ tol·|∂ρ₁||∂ρ₂|`.
pub fn is_jump(spec: &ManifoldSpec, p: &SurfacePoint, tol: f64) -> Result<bool> {
    Ok(spec.pair_jet(&p.coords.0, 1)?.wedge_sine() <= tol)
}

/// Rank of the row-normalized `[∂ρ₁; ∂ρ₂]`; an elimination-based detector
/// independent of the wedge.
pub fn derivative_rank(spec: &ManifoldSpec, p: &SurfacePoint, tol: f64) -> Result<usize> {
    let jet = spec.pair_jet(&p.coords.0, 1)?;
    let rows: Vec<Vec<C64>> = jet
        .dz
        .iter()
        .map(|r| r.normalized().map(|v| v.0).unwrap_or_else(|| r.0.clone()))
        .collect();
    linalg::rank(&linalg::CMat::from_rows(&rows), tol)
}

/// A located complex jump point with its transversality data.
#[derive(Debug, Clone)]
pub struct JumpPoint {
    pub point: SurfacePoint,
    /// Relative wedge norm `|∂ρ₁∧∂ρ₂| / (|∂ρ₁||∂ρ₂|)`.
    pub wedge_norm: f64,
    pub transverse: bool,
    /// Real Jacobian of `Φ` at the base, rows `(Re Φ, Im Φ)`.
    pub jacobian: RMat,
    pub det: f64,
    /// `sign(det)` when transverse, otherwise zero.
    pub index: i32,
    /// Ratio of smallest to largest elimination pivot of the Jacobian.
    pub condition: f64,
}

impl JumpPoint {
    /// Jump record without transversality data yet.
    pub fn new(spec: &ManifoldSpec, point: SurfacePoint) -> Result<Self> {
        let wedge_norm = spec.pair_jet(&point.coords.0, 1)?.wedge_sine();
        let m = 2 * spec.n + 2;
        Ok(JumpPoint {
            point,
            wedge_norm,
            transverse: false,
            jacobian: RMat::zeros(m, m),
            det: 0.0,
            index: 0,
            condition: 0.0,
        })
    }
}

/// Options for [`find_jumps`].
#[derive(Debug, Clone, Copy)]
pub struct JumpSearch {
    pub grid_per_dim: usize,
    /// Upper bound on the number of seeds; the per-dimension count is
    /// reduced until the grid fits.
    pub max_seeds: usize,
    /// Relative wedge tolerance for accepting a jump.
    pub tol: f64,
    pub execution: Execution,
}

impl Default for JumpSearch {
    fn default() -> Self {
        JumpSearch {
            grid_per_dim: 17,
            max_seeds: 1024,
            tol: 1e-8,
            execution: Execution::default(),
        }
    }
}

impl JumpSearch {
    /// Grid points per real dimension after applying the seed cap.
    pub fn effective_grid(&self, real_dims: usize) -> usize {
        let mut g = self.grid_per_dim.max(1);
        while g > 1 && (g as f64).powi(real_dims as i32) > self.max_seeds as f64 {
            g -= 1;
        }
        g
    }
}

/// Radius within which located jumps are merged.
pub const JUMP_DEDUP_RADIUS: f64 = 1e-6;

fn index_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect()
}

/// Residual vector `(ρ₁, ρ₂, Re λ_ab, Im λ_ab)`.
fn augmented_residual(jet: &PairJet) -> Vec<f64> {
    let mut r = vec![jet.value[0], jet.value[1]];
    let (a1, a2) = (&jet.dz[0], &jet.dz[1]);
    for (a, b) in index_pairs(jet.dim()) {
        let l = a1[a] * a2[b] - a1[b] * a2[a];
        r.push(l.re);
        r.push(l.im);
    }
    r
}

/// Real Jacobian of [`augmented_residual`]; needs a second-order jet.
fn augmented_jacobian(jet: &PairJet) -> Result<RMat> {
    let d = jet.dim();
    let pairs = index_pairs(d);
    let (a1, a2) = (&jet.dz[0], &jet.dz[1]);
    let rows = 2 + 2 * pairs.len();
    let mut j = RMat::zeros(rows, 2 * d);
    for col in 0..2 * d {
        let mut e = vec![0.0; 2 * d];
        e[col] = 1.0;
        let v = CVec::from_real(&e);
        j[(0, col)] = jet.differential(0, &v);
        j[(1, col)] = jet.differential(1, &v);
        let (da1, da2) = (jet.dz_derivative(0, &v)?, jet.dz_derivative(1, &v)?);
        for (i, &(a, b)) in pairs.iter().enumerate() {
            let dl = da1[a] * a2[b] + a1[a] * da2[b] - da1[b] * a2[a] - a1[b] * da2[a];
            j[(2 + 2 * i, col)] = dl.re;
            j[(3 + 2 * i, col)] = dl.im;
        }
    }
    Ok(j)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Refine a seed towards a zero of the augmented residual.
fn refine_jump(spec: &ManifoldSpec, seed: &[C64], tol: f64) -> Option<SurfacePoint> {
    let start = project_to_x(spec, seed, NEWTON_MAX_ITER).ok()?;
    let mut x = start.coords;
    let mut r = augmented_residual(&spec.pair_jet(&x.0, 1).ok()?);
    let mut res = max_abs(&r);
    for _ in 0..200 {
        if res == 0.0 {
            break;
        }
        let j = augmented_jacobian(&spec.pair_jet(&x.0, 2).ok()?).ok()?;
        let step = CVec::from_real(&linalg::qr_least_squares(&j, &r, 1e-15).ok()?);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..20 {
            let cand = x.sub(&step.scale(C64::new(t, 0.0)));
            let cr = augmented_residual(&spec.pair_jet(&cand.0, 1).ok()?);
            let cres = max_abs(&cr);
            if cres < res {
                accepted = Some((cand, cr, cres));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cr, cres)) = accepted else { break };
        // multiple roots converge linearly; anything slower is a stall
        let stalled = cres > 0.99 * res;
        x = cand;
        r = cr;
        res = cres;
        if stalled {
            break;
        }
    }
    let p = project_to_x(spec, &x.0, NEWTON_MAX_ITER).ok()?;
    if !p.regular || !spec.search_box.contains(&p.coords.0, 1e-9) {
        return None;
    }
    let sine = spec.pair_jet(&p.coords.0, 1).ok()?.wedge_sine();
    (sine <= tol).then_some(p)
}

/// Locate the complex jump points of `X` inside the spec's search box and
/// attach transversality data. The result is sorted lexicographically by
/// coordinates.
pub fn find_jumps(spec: &ManifoldSpec, opts: &JumpSearch) -> Result<Vec<JumpPoint>> {
    let g = opts.effective_grid(2 * spec.dim());
    let seeds = spec.search_box.grid(g);
    let found: Vec<SurfacePoint> = opts
        .execution
        .map(&seeds, |s| refine_jump(spec, s, opts.tol))
        .into_iter()
        .flatten()
        .collect();
    let mut sorted = found;
    sorted.sort_by(|a, b| lex_cmp(&a.coords, &b.coords));
    let mut kept: Vec<SurfacePoint> = Vec::new();
    for p in sorted {
        if kept.iter().all(|k| k.coords.sub(&p.coords).norm() > JUMP_DEDUP_RADIUS) {
            kept.push(p);
        }
    }
    kept.into_iter()
        .map(|p| {
            let j = JumpPoint::new(spec, p)?;
            transversality(spec, &j)
        })
        .collect()
}

fn lex_cmp(a: &CVec, b: &CVec) -> std::cmp::Ordering {
    for (x, y) in a.0.iter().zip(&b.0) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}
