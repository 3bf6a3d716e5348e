//! Nash blow-up fibers: limiting tangent directions of plane curves over
//! singular points, and the CR-Nash fiber over a transverse jump point
//! together with its linear model.

mod cr;
mod curve;
mod extrapolate;

pub use cr::{
    cr_fiber_sample, cr_linear_model, fiber_surjectivity_check, linearization_remainder, CrFiberSample, LinearModel,
    DEFAULT_CR_LADDER,
};
pub use curve::{curve_fiber, curve_gauss, curve_singularities, default_curve_ladder, CurveSpec, CURVE_SAMPLES};
pub use extrapolate::{estimate_order, neville_at_zero, snap_order};

use crate::linalg::CVec;
use crate::C64;

/// Clustering radius for fiber points (Fubini–Study distance).
pub const CLUSTER_RADIUS: f64 = 1e-3;

/// A point of a projective space, normalized to unit norm with the first
/// significant coordinate real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberPoint {
    pub coords: Vec<C64>,
}

impl FiberPoint {
    /// Canonical representative of the line through `v`; `None` for `v = 0`.
    pub fn new(v: &[C64]) -> Option<Self> {
        let n = CVec(v.to_vec()).norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        let anchor = v
            .iter()
            .find(|z| z.norm() > 1e-8 * n)
            .expect("nonzero vector has a significant entry");
        let phase = anchor.conj() / anchor.norm();
        Some(FiberPoint {
            coords: v.iter().map(|z| z * phase / n).collect(),
        })
    }

    pub fn from_real(v: &[f64]) -> Option<Self> {
        Self::new(&v.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Fubini–Study distance `arccos |⟨a, b⟩|` in radians.
    pub fn distance(&self, other: &FiberPoint) -> f64 {
        projective_distance(&self.coords, &other.coords)
    }
}

/// Fubini–Study distance between the lines through `a` and `b`.
pub fn projective_distance(a: &[C64], b: &[C64]) -> f64 {
    let (va, vb) = (CVec(a.to_vec()), CVec(b.to_vec()));
    let denom = va.norm() * vb.norm();
    if denom == 0.0 {
        return f64::INFINITY;
    }
    let overlap = va.dot(&vb);
    let c = (overlap.norm() / denom).min(1.0);
    // acos loses precision near 1; take the sine from the rejection of b from a
    let a_hat = va.scale(C64::new(1.0 / va.norm(), 0.0));
    let along = a_hat.scale(vb.dot(&a_hat));
    let s = (vb.sub(&along).norm() / vb.norm()).min(1.0);
    s.atan2(c)
}

/// Greedy clustering within `radius`; cluster centers are the canonicalized
/// phase-aligned averages of their members. Output is sorted by coordinates.
pub fn cluster_points(points: &[FiberPoint], radius: f64) -> Vec<(FiberPoint, usize)> {
    let mut clusters: Vec<(Vec<FiberPoint>, FiberPoint)> = Vec::new();
    for p in points {
        match clusters.iter_mut().find(|(_, c)| c.distance(p) <= radius) {
            Some((members, center)) => {
                members.push(p.clone());
                *center = average(members);
            }
            None => clusters.push((vec![p.clone()], p.clone())),
        }
    }
    let mut out: Vec<(FiberPoint, usize)> = clusters.into_iter().map(|(m, c)| (c, m.len())).collect();
    out.sort_by(|a, b| cmp_coords(&a.0.coords, &b.0.coords));
    out
}

fn average(members: &[FiberPoint]) -> FiberPoint {
    let reference = &members[0];
    let d = reference.dim();
    let mut sum = vec![C64::new(0.0, 0.0); d];
    for m in members {
        let overlap = CVec(reference.coords.clone()).dot(&CVec(m.coords.clone()));
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for (s, z) in sum.iter_mut().zip(&m.coords) {
            *s += z * phase;
        }
    }
    FiberPoint::new(&sum).unwrap_or_else(|| reference.clone())
}

/// Lexicographic order on coordinates quantized to `1e-9`, so that points
/// differing only by rounding sort by their later coordinates.
pub(crate) fn cmp_coords(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    let q = |x: f64| (x * 1e9).round();
    for (x, y) in a.iter().zip(b) {
        let o = q(x.re).total_cmp(&q(y.re)).then(q(x.im).total_cmp(&q(y.im)));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// A computed fiber with extrapolation diagnostics.
#[derive(Debug, Clone)]
pub struct BlowupFiber {
    pub base: Vec<C64>,
    pub points: Vec<FiberPoint>,
    pub diagnostics: FiberDiagnostics,
}

#[derive(Debug, Clone, Default)]
pub struct FiberDiagnostics {
    pub ladder: Vec<f64>,
    /// Number of curve points found on each circle.
    pub roots_per_level: Vec<usize>,
    pub chains: Vec<ChainDiagnostics>,
    pub warnings: Vec<String>,
}

/// One branch followed across the ladder.
#[derive(Debug, Clone)]
pub struct ChainDiagnostics {
    /// Number of ladder levels the chain reached.
    pub levels: usize,
    /// Convergence order used for extrapolation.
    pub order: f64,
    /// Distance between the extrapolated limit and the finest sample.
    pub correction: f64,
    pub limit: FiberPoint,
    /// `(ε, angle on the circle, sign-aligned Gauss vector)` per level.
    pub samples: Vec<(f64, f64, [f64; 2])>,
}
