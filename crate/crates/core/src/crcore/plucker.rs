//! Plücker coordinates of the conormal plane and the transversality map.

use super::JumpPoint;
use crate::linalg::{det, pivot_magnitudes, CMat, CVec, RMat};
use crate::manifold::{graph_chart_with, orthonormal_normals, Chart, ChartKind, ManifoldSpec, SurfacePoint};
use crate::{Error, Result, C64};

/// The four `u`-blocks of the Plücker image of `span(dρ₁, dρ₂)` in a unitary
/// frame, with the `(N, N̄)` minor gauged to `(1 1; i −i)`.
#[derive(Debug, Clone)]
pub struct PluckerPoint {
    /// `u_{k,N}`.
    pub u_hol: Vec<C64>,
    /// `u_{k,N̄}`.
    pub u_mixed1: Vec<C64>,
    /// `u_{k̄,N}`.
    pub u_mixed2: Vec<C64>,
    /// `u_{k̄,N̄}`.
    pub u_anti: Vec<C64>,
    /// Real 2×2 mix `T` applied to `(dρ₁, dρ₂)` to reach the gauge.
    pub gauge: [[f64; 2]; 2],
    /// Frame the coordinates refer to (columns are the `ζ` directions).
    pub frame: CMat,
}

impl PluckerPoint {
    /// Largest violation of `u_anti = conj(u_hol)`, `u_mixed2 = conj(u_mixed1)`.
    pub fn conjugation_defect(&self) -> f64 {
        let pairs = self
            .u_hol
            .iter()
            .zip(&self.u_anti)
            .chain(self.u_mixed1.iter().zip(&self.u_mixed2));
        pairs.map(|(a, b)| (a.conj() - b).norm()).fold(0.0, f64::max)
    }
}

/// Plücker `u`-coordinates of the conormal plane at `p` in `frame`.
pub fn gauss_plucker(spec: &ManifoldSpec, frame: &CMat, p: &SurfacePoint) -> Result<PluckerPoint> {
    let d = spec.dim();
    if frame.rows() != d || frame.cols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: frame.cols(),
        });
    }
    let jet = spec.pair_jet(&p.coords.0, 1)?;
    let alpha: [Vec<C64>; 2] = [0, 1].map(|m| (0..d).map(|k| jet.holomorphic_pairing(m, &frame.col(k))).collect());
    let (a, b) = (alpha[0][d - 1], alpha[1][d - 1]);
    let det_m = a * b.conj() - a.conj() * b;
    if det_m.norm() <= 1e-12 * a.norm() * b.norm() || a.norm() * b.norm() == 0.0 {
        return Err(Error::GaugeSingular);
    }
    // T = G·M⁻¹ with M = [[a, ā], [b, b̄]], G = [[1, 1], [i, −i]]
    let i = C64::new(0.0, 1.0);
    let minv = [[b.conj() / det_m, -a.conj() / det_m], [-b / det_m, a / det_m]];
    let g = [[C64::new(1.0, 0.0), C64::new(1.0, 0.0)], [i, -i]];
    let t = [0, 1].map(|r| [0, 1].map(|c| g[r][0] * minv[0][c] + g[r][1] * minv[1][c]));
    let scale = t.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if t.iter().flatten().any(|z| z.im.abs() > 1e-10 * scale) {
        return Err(Error::Internal("Plücker gauge matrix is not real".into()));
    }
    let gauge = t.map(|row| row.map(|z| z.re));
    let r = |m: usize, k: usize, bar: bool| {
        let v = |mm: usize| if bar { alpha[mm][k].conj() } else { alpha[mm][k] };
        v(0) * gauge[m][0] + v(1) * gauge[m][1]
    };
    let n1 = d - 1;
    Ok(PluckerPoint {
        u_hol: (0..n1).map(|k| i * r(0, k, false) - r(1, k, false)).collect(),
        u_mixed1: (0..n1).map(|k| -i * r(0, k, false) - r(1, k, false)).collect(),
        u_mixed2: (0..n1).map(|k| i * r(0, k, true) - r(1, k, true)).collect(),
        u_anti: (0..n1).map(|k| -i * r(0, k, true) - r(1, k, true)).collect(),
        gauge,
        frame: frame.clone(),
    })
}

/// `Φ(u) = (λ'_{k,N})_{k<N}` evaluated on the complex chart at a jump point,
/// where `λ'` are the coefficients of `∂ρ'₁ ∧ ∂ρ'₂` in the chart's unitary
/// frame and `ρ' = Oρ` has orthonormal real gradients at the base. `Φ`
/// agrees with the Plücker block `u_hol` up to a nonzero real factor.
#[derive(Debug, Clone)]
pub struct PhiMap {
    pub chart: Chart,
    /// Fixed real mix `O` from the base point.
    pub mix: [[f64; 2]; 2],
}

impl PhiMap {
    pub fn at_jump(spec: &ManifoldSpec, point: &SurfacePoint) -> Result<Self> {
        let chart = graph_chart_with(spec, point, ChartKind::Complex)?;
        let jet = spec.pair_jet(&point.coords.0, 1)?;
        let (_, mix) = orthonormal_normals(&jet)?;
        Ok(PhiMap { chart, mix })
    }

    /// Number of complex components, `n + 1`.
    pub fn components(&self) -> usize {
        self.chart.spec().dim() - 1
    }

    fn mixed(&self, v: [&CVec; 2]) -> [CVec; 2] {
        let o = self.mix;
        [0, 1].map(|m| {
            v[0].scale(C64::new(o[m][0], 0.0))
                .add(&v[1].scale(C64::new(o[m][1], 0.0)))
        })
    }

    fn frame_coeffs(&self, a: &CVec) -> Vec<C64> {
        let u = self.chart.unitary();
        (0..u.cols())
            .map(|k| (0..u.rows()).map(|j| a[j] * u[(j, k)]).sum())
            .collect()
    }

    /// `Φ` at the chart point over `u`.
    pub fn eval(&self, u: &[f64]) -> Result<Vec<C64>> {
        let p = self.chart.eval(u)?;
        self.eval_at(&p.coords.0)
    }

    /// `Φ` at an arbitrary ambient point (no chart solve).
    pub fn eval_at(&self, p: &[C64]) -> Result<Vec<C64>> {
        let jet = self.chart.spec().pair_jet(p, 1)?;
        let a = self.mixed([&jet.dz[0], &jet.dz[1]]);
        let (al1, al2) = (self.frame_coeffs(&a[0]), self.frame_coeffs(&a[1]));
        let nn = al1.len() - 1;
        Ok((0..nn).map(|k| al1[k] * al2[nn] - al1[nn] * al2[k]).collect())
    }

    /// Real Jacobian of `u ↦ Φ(chart(u))`, rows `(Re Φ_k, Im Φ_k)`.
    pub fn jacobian(&self, u: &[f64]) -> Result<RMat> {
        let p = self.chart.eval(u)?;
        let tm = self.chart.tangent_map(u)?;
        let jet = self.chart.spec().pair_jet(&p.coords.0, 2)?;
        let a = self.mixed([&jet.dz[0], &jet.dz[1]]);
        let (al1, al2) = (self.frame_coeffs(&a[0]), self.frame_coeffs(&a[1]));
        let nn = al1.len() - 1;
        let mut jac = RMat::zeros(2 * nn, tm.len());
        for (col, v) in tm.iter().enumerate() {
            let da = [jet.dz_derivative(0, v)?, jet.dz_derivative(1, v)?];
            let da = self.mixed([&da[0], &da[1]]);
            let (d1, d2) = (self.frame_coeffs(&da[0]), self.frame_coeffs(&da[1]));
            for k in 0..nn {
                let dphi = d1[k] * al2[nn] + al1[k] * d2[nn] - d1[nn] * al2[k] - al1[nn] * d2[k];
                jac[(k, col)] = dphi.re;
                jac[(nn + k, col)] = dphi.im;
            }
        }
        Ok(jac)
    }

    /// Derivative scale of `Φ` at the base: `|∂ρ'|·|∂²ρ'|`, floored by
    /// `|∂ρ'|²/diam` so that a vanishing Hessian does not shrink it to zero.
    pub fn reference_scale(&self) -> Result<f64> {
        let spec = self.chart.spec();
        let jet = spec.pair_jet(&self.chart.base.coords.0, 2)?;
        let a = self.mixed([&jet.dz[0], &jet.dz[1]]);
        let first = a[0].norm().max(a[1].norm());
        let (Some(mixed), Some(hol)) = (&jet.mixed, &jet.hol) else {
            return Err(Error::Internal("missing second derivatives".into()));
        };
        let o = self.mix;
        let mut second: f64 = 0.0;
        for om in &o {
            let h = mixed[0]
                .scale(C64::new(om[0], 0.0))
                .add(&mixed[1].scale(C64::new(om[1], 0.0)));
            let g = hol[0]
                .scale(C64::new(om[0], 0.0))
                .add(&hol[1].scale(C64::new(om[1], 0.0)));
            second = second.max(h.max_abs()).max(g.max_abs());
        }
        let diam = spec.search_box.diameter().max(f64::MIN_POSITIVE);
        Ok((first * second).max(first * first / diam))
    }
}

/// Fill in the transversality certificate of a jump point: the real
/// Jacobian of `Φ` at the base, its determinant, sign and conditioning.
pub fn transversality(spec: &ManifoldSpec, j: &JumpPoint) -> Result<JumpPoint> {
    let phi = PhiMap::at_jump(spec, &j.point)?;
    let m = phi.chart.param_dim();
    let jacobian = phi.jacobian(&vec![0.0; m])?;
    let d = det(&jacobian);
    let piv = pivot_magnitudes(&jacobian);
    let largest = piv.iter().cloned().fold(0.0, f64::max);
    let smallest = piv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if largest > 0.0 { smallest / largest } else { 0.0 };
    let scale = phi.reference_scale()?;
    let transverse = d.abs() > spec.tol.rank * scale.powi(m as i32) && d.abs() > 0.0;
    let index = if transverse { d.signum() as i32 } else { 0 };
    Ok(JumpPoint {
        point: j.point.clone(),
        wedge_norm: j.wedge_norm,
        transverse,
        jacobian,
        det: d,
        index,
        condition,
    })
}

/// Local signed intersection index of a transverse jump.
pub fn signed_index(j: &JumpPoint) -> Result<i32> {
    if j.transverse {
        Ok(j.index)
    } else {
        Err(Error::NotTransverse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_complete;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn graph(f: &str) -> ManifoldSpec {
        ManifoldSpec::new(0, &["z", "w"], &format!("re(w - ({f}))"), &format!("im(w - ({f}))")).unwrap()
    }

    fn jump_at_origin(s: &ManifoldSpec) -> JumpPoint {
        let p = s.surface_point(&vec![c(0., 0.); s.dim()]).unwrap();
        transversality(s, &JumpPoint::new(s, p).unwrap()).unwrap()
    }

    #[test]
    fn square_graph_is_transverse() {
        let j = jump_at_origin(&graph("conj(z)^2"));
        let expect = [[0.0, -1.0], [1.0, 0.0]];
        for (r, row) in expect.iter().enumerate() {
            for (k, e) in row.iter().enumerate() {
                assert!((j.jacobian[(r, k)] - e).abs() < 1e-12);
            }
        }
        assert!((j.det - 1.0).abs() < 1e-12);
        assert!(j.transverse);
        assert_eq!(signed_index(&j).unwrap(), 1);
    }

    #[test]
    fn cube_graph_is_not_transverse() {
        let j = jump_at_origin(&graph("conj(z)^3"));
        assert!(j.jacobian.max_abs() < 1e-12);
        assert!(!j.transverse);
        assert!(matches!(signed_index(&j), Err(Error::NotTransverse)));
    }

    #[test]
    fn phi_matches_indicator_off_base() {
        let s = graph("conj(z)^2");
        let p = s.surface_point(&[c(0., 0.), c(0., 0.)]).unwrap();
        let phi = PhiMap::at_jump(&s, &p).unwrap();
        for t in [0.1, -0.3] {
            let v = phi.eval(&[t, 0.5 * t]).unwrap();
            assert!((v[0] - c(0., 1.) * c(t, 0.5 * t)).norm() < 1e-12);
        }
    }

    #[test]
    fn plucker_vanishes_on_normal_form() {
        let s = ManifoldSpec::new(0, &["z", "w"], "w + conj(w)", "i*(w - conj(w))").unwrap();
        let p = s.surface_point(&[c(0.3, 0.2), c(0., 0.)]).unwrap();
        let pl = gauss_plucker(&s, &CMat::identity(2), &p).unwrap();
        for b in [&pl.u_hol, &pl.u_mixed1, &pl.u_mixed2, &pl.u_anti] {
            assert!(b.iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn plucker_near_origin_is_proportional_to_z() {
        let s = graph("conj(z)^2");
        let frame = unitary_complete(&CVec::basis(2, 1)).unwrap();
        let z0 = c(0.01, 0.02);
        let pl = gauss_plucker(&s, &frame, &s.surface_point(&[z0, z0.conj() * z0.conj()]).unwrap()).unwrap();
        let z1 = 2.0 * z0;
        let pl2 = gauss_plucker(&s, &frame, &s.surface_point(&[z1, z1.conj() * z1.conj()]).unwrap()).unwrap();
        assert!((pl2.u_hol[0] / pl.u_hol[0] - c(2., 0.)).norm() < 1e-3);
        assert!(pl.conjugation_defect() < 1e-12);
    }

    #[test]
    fn singular_gauge() {
        // dρ₂ = 2·dρ₁ in the last slot: real-proportional minor
        let s = ManifoldSpec::new(0, &["z", "w"], "re(w)", "2*re(w) + im(z)").unwrap();
        let p = s.surface_point(&[c(0., 0.), c(0., 0.)]).unwrap();
        assert!(matches!(
            gauss_plucker(&s, &CMat::identity(2), &p),
            Err(Error::GaugeSingular)
        ));
    }
}
