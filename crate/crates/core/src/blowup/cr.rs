use super::extrapolate::neville_at_zero;
use super::FiberPoint;
use crate::crcore::{JumpPoint, PhiMap};
use crate::linalg::{det, solve, CVec, RMat};
use crate::manifold::ManifoldSpec;
use crate::{Error, Result, C64};

/// Default chart-parameter ladder for [`cr_fiber_sample`].
pub const DEFAULT_CR_LADDER: [f64; 5] = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];

/// Limit of `[Φ(chart(t·dir))]` as `t → 0`.
#[derive(Debug, Clone)]
pub struct CrFiberSample {
    pub point: FiberPoint,
    pub ladder: Vec<f64>,
    /// Projectivized sample at each ladder level.
    pub samples: Vec<FiberPoint>,
    /// Fubini–Study distance from the limit to the finest sample.
    pub correction: f64,
}

/// The linearization `A = DΦ(0)` at a jump point.
#[derive(Debug, Clone)]
pub struct LinearModel {
    /// Real `(2n+2) × (2n+2)` matrix, rows `(Re Φ_k, Im Φ_k)`.
    pub a: RMat,
    pub det: f64,
    /// `A` invertible, certifying that the blow-up is smooth over the jump.
    pub smooth: bool,
}

impl LinearModel {
    /// Number of complex components of `Φ`.
    pub fn components(&self) -> usize {
        self.a.rows() / 2
    }

    /// Complex vector `A·dir`.
    pub fn apply(&self, dir: &[f64]) -> Vec<C64> {
        let v = self.a.matvec(dir);
        let m = self.components();
        (0..m).map(|k| C64::new(v[k], v[m + k])).collect()
    }

    /// Predicted fiber point `[A·dir]`; `None` when `A·dir = 0`.
    pub fn fiber(&self, dir: &[f64]) -> Option<FiberPoint> {
        FiberPoint::new(&self.apply(dir))
    }
}

fn check_dir(phi: &PhiMap, dir: &[f64]) -> Result<()> {
    let m = phi.chart.param_dim();
    if dir.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: dir.len(),
        });
    }
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("direction must have unit length, got {norm}")));
    }
    Ok(())
}

fn scaled(dir: &[f64], t: f64) -> Vec<f64> {
    dir.iter().map(|x| t * x).collect()
}

/// Sample `Φ` along the chart ray `t·dir` over the ladder and extrapolate the
/// projectivized values to `t = 0`.
pub fn cr_fiber_sample(spec: &ManifoldSpec, j: &JumpPoint, dir: &[f64], ladder: &[f64]) -> Result<CrFiberSample> {
    if !j.transverse {
        return Err(Error::NotTransverse);
    }
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] >= w[0]) || ladder.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Invalid(
            "ladder must be nonempty, positive and strictly decreasing".into(),
        ));
    }
    let phi = PhiMap::at_jump(spec, &j.point)?;
    check_dir(&phi, dir)?;
    if phi.components() == 1 {
        let one = FiberPoint::new(&[C64::new(1.0, 0.0)]).expect("nonzero");
        return Ok(CrFiberSample {
            point: one.clone(),
            ladder: ladder.to_vec(),
            samples: vec![one; ladder.len()],
            correction: 0.0,
        });
    }
    let scale = phi.reference_scale()?;
    let mut raw = Vec::with_capacity(ladder.len());
    for &t in ladder {
        let v = CVec(phi.eval(&scaled(dir, t))?);
        // Φ vanishes to first order; below this floor the samples are noise
        if !(v.norm() > 1e-12 * scale * t) {
            return Err(Error::NotTransverse);
        }
        raw.push(v.normalized().expect("nonzero sample"));
    }
    let finest = raw.last().expect("nonempty ladder").clone();
    // remove the free phase: ⟨v, finest⟩ real positive
    let aligned: Vec<CVec> = raw
        .iter()
        .map(|v| {
            let o = v.dot(&finest);
            v.scale(o.conj() / o.norm())
        })
        .collect();
    let m = finest.dim();
    let as_real = |v: &CVec| -> Vec<f64> { v.0.iter().map(|z| z.re).chain(v.0.iter().map(|z| z.im)).collect() };
    let ys: Vec<Vec<f64>> = aligned.iter().map(as_real).collect();
    let limit = neville_at_zero(ladder, &ys);
    let limit: Vec<C64> = (0..m).map(|k| C64::new(limit[k], limit[m + k])).collect();
    let point = FiberPoint::new(&limit).ok_or_else(|| Error::Internal("extrapolated fiber vector vanished".into()))?;
    let samples: Vec<FiberPoint> = raw
        .iter()
        .map(|v| FiberPoint::new(&v.0).expect("unit vector"))
        .collect();
    let correction = point.distance(samples.last().expect("nonempty"));
    Ok(CrFiberSample {
        point,
        ladder: ladder.to_vec(),
        samples,
        correction,
    })
}

/// The linear model `dir ↦ [A·dir]` with its smoothness certificate.
pub fn cr_linear_model(spec: &ManifoldSpec, j: &JumpPoint) -> Result<LinearModel> {
    let j = crate::crcore::transversality(spec, j)?;
    Ok(LinearModel {
        a: j.jacobian,
        det: j.det,
        smooth: j.transverse,
    })
}

/// For each target find `dir` with `[A·dir] = target` and confirm the forward
/// image to `1e-8`. Vacuously true for `n = 0`.
pub fn fiber_surjectivity_check(a: &RMat, targets: &[FiberPoint]) -> Result<bool> {
    let m = a.rows() / 2;
    if m <= 1 {
        return Ok(true);
    }
    if a.rows() != a.cols() {
        return Err(Error::Dimension {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    if det(a) == 0.0 {
        return Err(Error::Singular("linear model is not invertible".into()));
    }
    let model = LinearModel {
        a: a.clone(),
        det: det(a),
        smooth: true,
    };
    for target in targets {
        if target.dim() != m {
            return Err(Error::Dimension {
                expected: m,
                got: target.dim(),
            });
        }
        let rhs: Vec<f64> = target
            .coords
            .iter()
            .map(|z| z.re)
            .chain(target.coords.iter().map(|z| z.im))
            .collect();
        let dir = solve(a, &rhs)?;
        let hit = model.fiber(&dir).is_some_and(|p| p.distance(target) <= 1e-8);
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Empirical constant `C` in `|Φ(chart(t·dir)) − t·A·dir| ≤ C·t²`: the
/// largest ratio over the given parameters.
pub fn linearization_remainder(spec: &ManifoldSpec, j: &JumpPoint, dir: &[f64], ts: &[f64]) -> Result<f64> {
    let phi = PhiMap::at_jump(spec, &j.point)?;
    check_dir(&phi, dir)?;
    let model = cr_linear_model(spec, j)?;
    let lin = CVec(model.apply(dir));
    let mut worst: f64 = 0.0;
    for &t in ts {
        if !(t > 0.0) {
            return Err(Error::Invalid("parameters must be positive".into()));
        }
        let v = CVec(phi.eval(&scaled(dir, t))?);
        let r = v.sub(&lin.scale(C64::new(t, 0.0))).norm();
        worst = worst.max(r / (t * t));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crcore::{find_jumps, JumpSearch};

    fn graph(n: usize, vars: &[&str], f: &str) -> ManifoldSpec {
        let w = vars.last().unwrap();
        ManifoldSpec::new(n, vars, &format!("re({w} - ({f}))"), &format!("im({w} - ({f}))")).unwrap()
    }

    fn jump(spec: &ManifoldSpec) -> JumpPoint {
        let mut js = find_jumps(spec, &JumpSearch::default()).unwrap();
        assert_eq!(js.len(), 1);
        js.remove(0)
    }

    #[test]
    fn n0_fiber_is_a_point() {
        let spec = graph(0, &["z", "w"], "conj(z)^2");
        let j = jump(&spec);
        let s = cr_fiber_sample(&spec, &j, &[0.6, 0.8], &DEFAULT_CR_LADDER).unwrap();
        assert_eq!(s.point.coords, vec![C64::new(1.0, 0.0)]);
        let model = cr_linear_model(&spec, &j).unwrap();
        assert!(model.smooth);
        // multiplication by ±i as a real 2×2 map
        let a = &model.a;
        assert!(a[(0, 0)].abs() < 1e-10 && a[(1, 1)].abs() < 1e-10);
        assert!((a[(1, 0)].abs() - 1.0).abs() < 1e-8 && (a[(0, 1)] + a[(1, 0)]).abs() < 1e-10);
        assert!(fiber_surjectivity_check(a, &[]).unwrap());
    }

    #[test]
    fn cubic_is_not_smooth() {
        let spec = graph(0, &["z", "w"], "conj(z)^3");
        let j = jump(&spec);
        let model = cr_linear_model(&spec, &j).unwrap();
        assert!(!model.smooth);
        assert!(model.a.max_abs() < 1e-8);
        assert!(matches!(
            cr_fiber_sample(&spec, &j, &[1.0, 0.0], &DEFAULT_CR_LADDER),
            Err(Error::NotTransverse)
        ));
    }

    #[test]
    fn n1_samples_match_model() {
        let spec = graph(1, &["z1", "z2", "w"], "conj(z1)^2 + conj(z2)^2");
        let j = jump(&spec);
        let model = cr_linear_model(&spec, &j).unwrap();
        assert!(model.smooth);
        let r = 0.5f64.sqrt();
        for dir in [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [r, r, 0.0, 0.0],
            [0.5, -0.5, 0.5, 0.5],
        ] {
            let s = cr_fiber_sample(&spec, &j, &dir, &DEFAULT_CR_LADDER).unwrap();
            let want = model.fiber(&dir).unwrap();
            assert!(s.point.distance(&want) < 1e-6, "{dir:?}: {:?} vs {:?}", s.point, want);
            let c = linearization_remainder(&spec, &j, &dir, &DEFAULT_CR_LADDER).unwrap();
            assert!(c.is_finite() && c < 1e3, "{c}");
        }
        let targets: Vec<FiberPoint> = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [r, 0.0, 0.0, r]]
            .iter()
            .map(|v| FiberPoint::new(&[C64::new(v[0], v[2]), C64::new(v[1], v[3])]).unwrap())
            .collect();
        assert!(fiber_surjectivity_check(&model.a, &targets).unwrap());
    }

    #[test]
    fn surjectivity_on_model() {
        // A = i·I on C²
        let mut a = RMat::zeros(4, 4);
        for k in 0..2 {
            a[(k, 2 + k)] = -1.0;
            a[(2 + k, k)] = 1.0;
        }
        let c = |re, im| C64::new(re, im);
        let targets: Vec<FiberPoint> = [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 1.)]]
            .iter()
            .map(|v| FiberPoint::new(v).unwrap())
            .collect();
        assert!(fiber_surjectivity_check(&a, &targets).unwrap());
        assert!(fiber_surjectivity_check(&RMat::zeros(4, 4), &targets).is_err());
    }

    #[test]
    fn rejects_bad_direction() {
        let spec = graph(0, &["z", "w"], "conj(z)^2");
        let j = jump(&spec);
        assert!(cr_fiber_sample(&spec, &j, &[1.0, 1.0], &DEFAULT_CR_LADDER).is_err());
        assert!(cr_fiber_sample(&spec, &j, &[1.0], &DEFAULT_CR_LADDER).is_err());
    }
}
