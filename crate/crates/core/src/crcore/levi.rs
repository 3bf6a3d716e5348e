//! Levi form of `X`, its extension to the blow-up over a jump point, the
//! Mizner polynomial `det(xL₁ + yL₂)` and its gauge behaviour.

use super::{complex_tangent, JumpPoint, PhiMap};
use crate::linalg::{det, gram_schmidt, rank, solve, unitary_complete, CMat, CVec, HermMat, RMat};
use crate::manifold::{orthonormal_normals, ManifoldSpec, PairJet, SurfacePoint};
use crate::{Error, Result, C64};

/// Where a Levi pair was computed.
#[derive(Debug, Clone)]
pub enum LeviBase {
    /// A non-jump point of `X`.
    Point(SurfacePoint),
    /// A point of the blow-up fiber over a jump point.
    Fiber { point: SurfacePoint, direction: Vec<C64> },
    /// Matrices supplied directly.
    Matrices,
}

/// The two Hermitian Levi matrices in a frame of `H^{1,0}`.
#[derive(Debug, Clone)]
pub struct LeviPair {
    pub base: LeviBase,
    pub l: [HermMat; 2],
    /// Frame of `H^{1,0}` the matrices refer to (empty for bare matrices).
    pub h_frame: Vec<CVec>,
    /// Orthonormal real normals `(∇ρ'₁, ∇ρ'₂)`.
    pub normal_frame: Vec<CVec>,
}

impl LeviPair {
    /// Pair from bare matrices, checked Hermitian.
    pub fn from_matrices(l1: CMat, l2: CMat) -> Result<Self> {
        if l1.rows() != l2.rows() {
            return Err(Error::Dimension {
                expected: l1.rows(),
                got: l2.rows(),
            });
        }
        Ok(LeviPair {
            base: LeviBase::Matrices,
            l: [HermMat::new(l1)?, HermMat::new(l2)?],
            h_frame: Vec::new(),
            normal_frame: Vec::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.l[0].size()
    }

    /// `max(‖L₁‖, ‖L₂‖)` in the Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.l[0].matrix().frobenius().max(self.l[1].matrix().frobenius())
    }
}

/// `L_m[a,b] = Σ_{j,k} ∂²ρ'_m/∂z_j∂z̄_k (v_a)_j conj((v_b)_k)` with `ρ' = Oρ`.
fn contract(jet: &PairJet, o: [[f64; 2]; 2], frame: &[CVec]) -> Result<[HermMat; 2]> {
    let Some(mixed) = &jet.mixed else {
        return Err(Error::Internal("missing second derivatives".into()));
    };
    let n = frame.len();
    let mut out = Vec::with_capacity(2);
    for row in o {
        let h = mixed[0]
            .scale(C64::new(row[0], 0.0))
            .add(&mixed[1].scale(C64::new(row[1], 0.0)));
        let m = CMat::from_fn(n, n, |a, b| {
            let va = &frame[a];
            let vb = &frame[b];
            let mut s = C64::new(0.0, 0.0);
            for j in 0..h.rows() {
                for k in 0..h.cols() {
                    s += h[(j, k)] * va[j] * vb[k].conj();
                }
            }
            s
        });
        out.push(HermMat::symmetrized(&m)?);
    }
    let l2 = out.pop().expect("two matrices");
    let l1 = out.pop().expect("two matrices");
    Ok([l1, l2])
}

fn check_not_jump(spec: &ManifoldSpec, p: &SurfacePoint, jet: &PairJet) -> Result<()> {
    if !p.regular {
        return Err(Error::NotRegular);
    }
    if jet.wedge_sine() <= spec.tol.rank {
        return Err(Error::JumpPoint(
            "the Levi form is not defined at a complex jump point; use levi_on_blowup with a fiber direction".into(),
        ));
    }
    Ok(())
}

/// Levi pair at a non-jump regular point in the orthonormal frame of
/// [`complex_tangent`].
pub fn levi_form(spec: &ManifoldSpec, p: &SurfacePoint) -> Result<LeviPair> {
    let jet = spec.pair_jet(&p.coords.0, 2)?;
    check_not_jump(spec, p, &jet)?;
    let frame = complex_tangent(spec, p)?.basis;
    finish(spec, p, &jet, frame, LeviBase::Point(p.clone()))
}

/// Levi pair in the frame obtained by projecting `reference` onto
/// `H^{1,0}_p` and orthonormalizing in order. Keeps frames comparable
/// between nearby points.
pub fn levi_form_with_reference(spec: &ManifoldSpec, p: &SurfacePoint, reference: &[CVec]) -> Result<LeviPair> {
    let jet = spec.pair_jet(&p.coords.0, 2)?;
    check_not_jump(spec, p, &jet)?;
    let h = complex_tangent(spec, p)?.basis;
    let projected: Vec<CVec> = reference
        .iter()
        .map(|r| {
            h.iter()
                .fold(CVec::zeros(r.dim()), |acc, v| acc.add(&v.scale(r.dot(v))))
        })
        .collect();
    let frame = gram_schmidt(&[], &projected, h.len(), 1e-8);
    if frame.len() != h.len() {
        return Err(Error::Invalid(format!(
            "reference vectors span only {} of {} complex tangent directions",
            frame.len(),
            h.len()
        )));
    }
    finish(spec, p, &jet, frame, LeviBase::Point(p.clone()))
}

fn finish(spec: &ManifoldSpec, p: &SurfacePoint, jet: &PairJet, frame: Vec<CVec>, base: LeviBase) -> Result<LeviPair> {
    let (normals, o) = orthonormal_normals(jet)?;
    let l = contract(jet, o, &frame)?;
    debug_assert_eq!(p.coords.dim(), spec.dim());
    Ok(LeviPair {
        base,
        l,
        h_frame: frame,
        normal_frame: normals.to_vec(),
    })
}

/// Frame of the limiting `H^{1,0}` over a jump point for the fiber point
/// `direction ∈ Pⁿ`: the vectors `Σ_k c_k U_k` with `Σ_k c_k d_k = 0`, where
/// `U` is the chart's unitary frame.
pub fn blowup_frame(phi: &PhiMap, direction: &[C64]) -> Result<Vec<CVec>> {
    let n1 = phi.components();
    if direction.len() != n1 {
        return Err(Error::Dimension {
            expected: n1,
            got: direction.len(),
        });
    }
    let d = CVec(direction.to_vec())
        .normalized()
        .ok_or_else(|| Error::Invalid("fiber direction is zero".into()))?;
    let c = unitary_complete(&d.conj())?;
    let u = phi.chart.unitary();
    Ok((0..n1 - 1)
        .map(|a| (0..n1).fold(CVec::zeros(u.rows()), |acc, k| acc.add(&u.col(k).scale(c[(k, a)]))))
        .collect())
}

/// Levi pair at the fiber point `direction` of the blow-up over a transverse
/// jump.
pub fn levi_on_blowup(spec: &ManifoldSpec, j: &JumpPoint, direction: &[C64]) -> Result<LeviPair> {
    if !j.transverse {
        return Err(Error::NotTransverse);
    }
    let phi = PhiMap::at_jump(spec, &j.point)?;
    let frame = blowup_frame(&phi, direction)?;
    let jet = spec.pair_jet(&j.point.coords.0, 2)?;
    let base = LeviBase::Fiber {
        point: j.point.clone(),
        direction: direction.to_vec(),
    };
    finish(spec, &j.point, &jet, frame, base)
}

/// Coefficients `c_0..c_n` of `P(x, y) = Σ_j c_j x^{n−j} y^j = det(xL₁ + yL₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MiznerPoly {
    pub coeffs: Vec<f64>,
    /// Largest imaginary part seen among the sampled determinants.
    pub imag_residue: f64,
}

impl MiznerPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let n = self.degree() as i32;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * x.powi(n - j as i32) * y.powi(j as i32))
            .sum()
    }

    /// Coefficient vector scaled to unit Euclidean norm, or `None` for the
    /// zero polynomial.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let norm = self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        (norm > 0.0).then(|| self.coeffs.iter().map(|c| c / norm).collect())
    }
}

/// Interpolate `det(xL₁ + yL₂)` at the angles `θ_j = jπ/(n+1)`.
pub fn mizner_poly(l: &LeviPair) -> Result<MiznerPoly> {
    let n = l.size();
    if n == 0 {
        return Ok(MiznerPoly {
            coeffs: vec![1.0],
            imag_residue: 0.0,
        });
    }
    let (l1, l2) = (l.l[0].matrix(), l.l[1].matrix());
    let angles: Vec<f64> = (0..=n)
        .map(|j| j as f64 * std::f64::consts::PI / (n + 1) as f64)
        .collect();
    let mut imag_residue: f64 = 0.0;
    let values: Vec<f64> = angles
        .iter()
        .map(|t| {
            let m = l1.scale(C64::new(t.cos(), 0.0)).add(&l2.scale(C64::new(t.sin(), 0.0)));
            let v = det(&m);
            imag_residue = imag_residue.max(v.im.abs());
            v.re
        })
        .collect();
    let vander = RMat::from_fn(n + 1, n + 1, |j, k| {
        angles[j].cos().powi((n - k) as i32) * angles[j].sin().powi(k as i32)
    });
    let coeffs = solve(&vander, &values).map_err(|e| Error::Internal(format!("Mizner interpolation: {e}")))?;
    Ok(MiznerPoly { coeffs, imag_residue })
}

/// Change of frame `L_m ← g†L_m g`; the frame becomes `F·conj(g)`.
pub fn gauge_transform(l: &LeviPair, g: &CMat) -> Result<LeviPair> {
    let n = l.size();
    if g.rows() != n || g.cols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: g.rows(),
        });
    }
    let scale = g.max_abs();
    if n > 0 && det(g).norm() <= 1e-12 * scale.powi(n as i32) {
        return Err(Error::Singular("gauge matrix".into()));
    }
    let gh = g.adjoint();
    let l1 = HermMat::symmetrized(&gh.matmul(l.l[0].matrix()).matmul(g))?;
    let l2 = HermMat::symmetrized(&gh.matmul(l.l[1].matrix()).matmul(g))?;
    let h_frame = if l.h_frame.len() == n && n > 0 {
        (0..n)
            .map(|b| {
                (0..n).fold(CVec::zeros(l.h_frame[0].dim()), |acc, a| {
                    acc.add(&l.h_frame[a].scale(g[(a, b)].conj()))
                })
            })
            .collect()
    } else {
        l.h_frame.clone()
    };
    Ok(LeviPair {
        base: l.base.clone(),
        l: [l1, l2],
        h_frame,
        normal_frame: l.normal_frame.clone(),
    })
}

/// Nondegeneracy flags of a Levi pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nondegeneracy {
    pub independent: bool,
    pub common_kernel: bool,
    pub nondegenerate: bool,
}

/// `L₁, L₂` linearly independent and without a common nonzero kernel vector.
pub fn nondegenerate(l: &LeviPair, tol: f64) -> Result<Nondegeneracy> {
    let n = l.size();
    if n == 0 {
        return Ok(Nondegeneracy {
            independent: false,
            common_kernel: false,
            nondegenerate: false,
        });
    }
    let flat = RMat::from_fn(2, 2 * n * n, |m, k| {
        let z = l.l[m].matrix().as_slice()[k % (n * n)];
        if k < n * n {
            z.re
        } else {
            z.im
        }
    });
    let independent = rank(&flat, tol)? == 2;
    let stacked = CMat::from_fn(2 * n, n, |i, j| l.l[i / n].matrix()[(i % n, j)]);
    let common_kernel = rank(&stacked, tol)? < n;
    Ok(Nondegeneracy {
        independent,
        common_kernel,
        nondegenerate: independent && !common_kernel,
    })
}
