use super::project::{tangent_frame, NEWTON_MAX_ITER, NEWTON_TOL};
use super::{orthonormal_normals, ManifoldSpec, PairJet, SurfacePoint};
use crate::linalg::{solve, unitary_complete, CMat, CVec, RMat};
use crate::{Error, Result, C64};

/// How the chart's parameter directions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// Unitary frame aligned with the complex normal; parameters are
    /// `(Re ζ₁..Re ζ_{n+1}, Im ζ₁..Im ζ_{n+1})`. Used at jump points.
    Complex,
    /// Real orthonormal tangent frame with real orthonormal normals.
    Real,
}

/// Local graph chart of `X` over its tangent directions at a base point.
#[derive(Debug, Clone)]
pub struct Chart {
    pub base: SurfacePoint,
    pub kind: ChartKind,
    spec: ManifoldSpec,
    unitary: CMat,
    tangent: Vec<CVec>,
    normals: [CVec; 2],
    mix: Option<[[f64; 2]; 2]>,
}

/// Chart at `p`: complex frame when `p` is a jump point (to the spec's rank
/// tolerance), real frame otherwise.
pub fn graph_chart(spec: &ManifoldSpec, p: &SurfacePoint) -> Result<Chart> {
    let jet = spec.pair_jet(&p.coords.0, 1)?;
    let kind = if jet.wedge_sine() <= spec.tol.rank {
        ChartKind::Complex
    } else {
        ChartKind::Real
    };
    graph_chart_with(spec, p, kind)
}

pub fn graph_chart_with(spec: &ManifoldSpec, p: &SurfacePoint, kind: ChartKind) -> Result<Chart> {
    if !p.regular {
        return Err(Error::NotRegular);
    }
    let jet = spec.pair_jet(&p.coords.0, 1)?;
    let nu = jet.dz[0].conj().normalized().ok_or(Error::NotRegular)?;
    let unitary = unitary_complete(&nu)?;
    let d = spec.dim();
    let (tangent, normals, mix) = match kind {
        ChartKind::Complex => {
            let cols: Vec<CVec> = (0..d - 1).map(|k| unitary.col(k)).collect();
            let i = C64::new(0.0, 1.0);
            let mut tangent = cols.clone();
            tangent.extend(cols.iter().map(|v| v.scale(i)));
            let alpha = [jet.holomorphic_pairing(0, &nu), jet.holomorphic_pairing(1, &nu)];
            let x = RMat::from_rows(&[vec![alpha[0].re, alpha[0].im], vec![alpha[1].re, alpha[1].im]]);
            let xdet = x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)];
            let scale = alpha[0].norm() * alpha[1].norm();
            if xdet.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Singular("normal-form mixing matrix".into()));
            }
            let t = [
                [x[(1, 1)] / xdet, -x[(0, 1)] / xdet],
                [-x[(1, 0)] / xdet, x[(0, 0)] / xdet],
            ];
            (tangent, [nu.clone(), nu.scale(i)], Some(t))
        }
        ChartKind::Real => {
            let tangent = tangent_frame(spec, p)?.iter().map(|v| CVec::from_real(v)).collect();
            let (normals, _) = orthonormal_normals(&jet)?;
            (tangent, normals, None)
        }
    };
    let chart = Chart {
        base: p.clone(),
        kind,
        spec: spec.clone(),
        unitary,
        tangent,
        normals,
        mix,
    };
    // fail early when the fiber solve is ill-posed at the base
    chart.fiber_matrix(&jet)?;
    Ok(chart)
}

impl Chart {
    /// Number of real parameters, `2n + 2`.
    pub fn param_dim(&self) -> usize {
        self.tangent.len()
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    /// Unitary frame whose last column is the normalized complex normal `ν`.
    pub fn unitary(&self) -> &CMat {
        &self.unitary
    }

    /// Ambient real directions attached to each parameter.
    pub fn tangent(&self) -> &[CVec] {
        &self.tangent
    }

    /// The two real fiber directions solved for by Newton.
    pub fn normals(&self) -> &[CVec; 2] {
        &self.normals
    }

    /// Real 2×2 mix `T` with `Tρ` in normal form at the base (complex charts).
    pub fn mix(&self) -> Option<[[f64; 2]; 2]> {
        self.mix
    }

    fn offset(&self, u: &[f64]) -> Result<CVec> {
        if u.len() != self.param_dim() {
            return Err(Error::Dimension {
                expected: self.param_dim(),
                got: u.len(),
            });
        }
        let mut p = self.base.coords.clone();
        for (ui, v) in u.iter().zip(&self.tangent) {
            p = p.add(&v.scale(C64::new(*ui, 0.0)));
        }
        Ok(p)
    }

    fn fiber_matrix(&self, jet: &PairJet) -> Result<RMat> {
        let k = RMat::from_fn(2, 2, |m, a| jet.differential(m, &self.normals[a]));
        let scale = k.max_abs();
        let det = k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)];
        if !(det.abs() > 1e-12 * scale * scale) {
            return Err(Error::Singular("chart fiber Jacobian".into()));
        }
        Ok(k)
    }

    /// Point of `X` over parameter `u`, solving `(ρ₁, ρ₂) = 0` along the two
    /// normal directions by damped Newton.
    pub fn eval(&self, u: &[f64]) -> Result<SurfacePoint> {
        let start = self.offset(u)?;
        let point = |y: [f64; 2]| {
            start
                .add(&self.normals[0].scale(C64::new(y[0], 0.0)))
                .add(&self.normals[1].scale(C64::new(y[1], 0.0)))
        };
        let mut y = [0.0, 0.0];
        let mut p = start.clone();
        let mut jet = self.spec.pair_jet(&p.0, 1)?;
        let mut res = jet.residual();
        let mut iterations = 0;
        while res > NEWTON_TOL && iterations < NEWTON_MAX_ITER {
            iterations += 1;
            let k = match self.fiber_matrix(&jet) {
                Ok(k) => k,
                Err(_) => break,
            };
            let step = solve(&k, &jet.value)?;
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand = [y[0] - t * step[0], y[1] - t * step[1]];
                let q = point(cand);
                let qjet = self.spec.pair_jet(&q.0, 1)?;
                if qjet.residual() < res {
                    accepted = Some((cand, q, qjet));
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some((cand, q, qjet)) => {
                    y = cand;
                    p = q;
                    res = qjet.residual();
                    jet = qjet;
                }
                None => break,
            }
        }
        if res <= self.spec.tol.on_surface {
            Ok(SurfacePoint {
                regular: jet.is_regular(self.spec.tol.rank)?,
                coords: p,
                residual: res,
            })
        } else {
            Err(Error::NoConvergence {
                iterations,
                residual: res,
                last: p.0,
            })
        }
    }

    /// Ambient real derivative of the chart along each parameter at `u`.
    pub fn tangent_map(&self, u: &[f64]) -> Result<Vec<CVec>> {
        let p = self.eval(u)?;
        let jet = self.spec.pair_jet(&p.coords.0, 1)?;
        let k = self.fiber_matrix(&jet)?;
        self.tangent
            .iter()
            .map(|v| {
                let rhs = [jet.differential(0, v), jet.differential(1, v)];
                let y = solve(&k, &rhs)?;
                Ok(v.sub(&self.normals[0].scale(C64::new(y[0], 0.0)))
                    .sub(&self.normals[1].scale(C64::new(y[1], 0.0))))
            })
            .collect()
    }

    /// Deviation of the mixed first-order jets at the base from the normal
    /// form `(dζ + dζ̄, i(dζ − dζ̄))` in the unitary frame, with `ζ` the last
    /// frame coordinate. `None` for real charts.
    pub fn normal_form_residual(&self) -> Result<Option<f64>> {
        let Some(t) = self.mix else { return Ok(None) };
        let jet = self.spec.pair_jet(&self.base.coords.0, 1)?;
        let d = self.spec.dim();
        let mut worst: f64 = 0.0;
        for k in 0..d {
            let col = self.unitary.col(k);
            let alpha = [jet.holomorphic_pairing(0, &col), jet.holomorphic_pairing(1, &col)];
            let mixed = [0, 1].map(|m| alpha[0] * t[m][0] + alpha[1] * t[m][1]);
            let target = if k + 1 == d {
                [C64::new(1.0, 0.0), C64::new(0.0, 1.0)]
            } else {
                [C64::new(0.0, 0.0); 2]
            };
            for m in 0..2 {
                worst = worst.max((mixed[m] - target[m]).norm());
            }
        }
        Ok(Some(worst))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn graph_chart_reproduces_closed_form() {
        let s = ManifoldSpec::new(0, &["z", "w"], "re(w - conj(z)^2)", "im(w - conj(z)^2)").unwrap();
        let p = s.surface_point(&[c(0., 0.), c(0., 0.)]).unwrap();
        let ch = graph_chart(&s, &p).unwrap();
        assert_eq!(ch.kind, ChartKind::Complex);
        assert_eq!(ch.eval(&[0.0, 0.0]).unwrap().coords, p.coords);
        let q = ch.eval(&[0.5, 0.0]).unwrap();
        assert!((q.coords[0] - c(0.5, 0.)).norm() < 1e-12);
        assert!((q.coords[1] - c(0.25, 0.)).norm() < 1e-12);
        assert!(ch.normal_form_residual().unwrap().unwrap() < 1e-12);
    }

    #[test]
    fn real_chart_off_jump() {
        let s = ManifoldSpec::new(0, &["z", "w"], "re(w - conj(z))", "im(w - conj(z))").unwrap();
        let p = s.surface_point(&[c(0.2, 0.1), c(0.2, -0.1)]).unwrap();
        let ch = graph_chart(&s, &p).unwrap();
        assert_eq!(ch.kind, ChartKind::Real);
        let q = ch.eval(&[0.3, -0.4]).unwrap();
        assert!(q.residual < 1e-12);
        assert!(ch.normal_form_residual().unwrap().is_none());
    }

    #[test]
    fn tangent_map_at_base_is_tangent() {
        let s = ManifoldSpec::new(0, &["z", "w"], "re(w - conj(z)^2)", "im(w - conj(z)^2)").unwrap();
        let p = s.surface_point(&[c(0., 0.), c(0., 0.)]).unwrap();
        let ch = graph_chart(&s, &p).unwrap();
        let u = [0.3, 0.2];
        let tm = ch.tangent_map(&u).unwrap();
        let at = ch.eval(&u).unwrap();
        let jet = s.pair_jet(&at.coords.0, 1).unwrap();
        for v in &tm {
            assert!(jet.differential(0, v).abs() < 1e-12 && jet.differential(1, v).abs() < 1e-12);
        }
    }
}
