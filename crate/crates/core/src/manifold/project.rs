use super::{ManifoldSpec, SurfacePoint};
use crate::linalg::{min_norm_solve, rank, real_kernel, CVec};
use crate::{Error, Result, C64};

/// Default Newton iteration cap.
pub const NEWTON_MAX_ITER: usize = 50;
/// Residual at which Newton iterations stop early.
pub const NEWTON_TOL: f64 = 1e-12;

const MAX_HALVINGS: usize = 40;

/// Gauss–Newton projection of `q` onto `X` using minimum-norm steps
/// `Δ = −Jᵀ(JJᵀ)⁻¹F`, halving the step while the residual increases.
pub fn project_to_x(spec: &ManifoldSpec, q: &[C64], max_iter: usize) -> Result<SurfacePoint> {
    if q.len() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: q.len(),
        });
    }
    if !q.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Invalid("projection start point is not finite".into()));
    }
    let mut x = CVec(q.to_vec());
    let mut jet = spec.pair_jet(&x.0, 1)?;
    let mut res = jet.residual();
    let mut iterations = 0;
    while res > NEWTON_TOL && iterations < max_iter {
        iterations += 1;
        let step = match min_norm_solve(&jet.real_jacobian(), &jet.value) {
            Ok(s) => CVec::from_real(&s),
            Err(_) => break,
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = x.sub(&step.scale(C64::new(t, 0.0)));
            let cand_jet = spec.pair_jet(&cand.0, 1)?;
            let r = cand_jet.residual();
            if r.is_finite() && r < res {
                accepted = Some((cand, cand_jet, r));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((c, j, r)) => {
                x = c;
                jet = j;
                res = r;
            }
            None => break,
        }
    }
    if res <= spec.tol.on_surface {
        Ok(SurfacePoint {
            regular: jet.is_regular(spec.tol.rank)?,
            coords: x,
            residual: res,
        })
    } else {
        Err(Error::NoConvergence {
            iterations,
            residual: res,
            last: x.0,
        })
    }
}

/// Orthonormal real basis of `T_pX = ker(dρ₁) ∩ ker(dρ₂)`, as vectors in
/// `R^{2N}` with block layout `(Re z, Im z)`.
pub fn tangent_frame(spec: &ManifoldSpec, p: &SurfacePoint) -> Result<Vec<Vec<f64>>> {
    let jet = spec.pair_jet(&p.coords.0, 1)?;
    if !jet.is_regular(spec.tol.rank)? {
        return Err(Error::NotRegular);
    }
    let j = jet.real_jacobian();
    let scale = j.max_abs();
    let normalized = j.scale(1.0 / scale);
    debug_assert_eq!(rank(&normalized, spec.tol.rank)?, 2);
    let frame = real_kernel(&normalized, spec.tol.rank);
    if frame.len() != 2 * spec.dim() - 2 {
        return Err(Error::Internal(format!(
            "tangent frame has {} vectors, expected {}",
            frame.len(),
            2 * spec.dim() - 2
        )));
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn graph() -> ManifoldSpec {
        ManifoldSpec::new(0, &["z", "w"], "re(w - conj(z)^2)", "im(w - conj(z)^2)").unwrap()
    }

    #[test]
    fn point_on_x_is_fixed() {
        let p = project_to_x(&graph(), &[c(0.5, 0.0), c(0.25, 0.0)], 50).unwrap();
        assert_eq!(p.coords.0, vec![c(0.5, 0.0), c(0.25, 0.0)]);
        assert_eq!(p.residual, 0.0);
        assert!(p.regular);
    }

    #[test]
    fn nearby_point_converges() {
        let p = project_to_x(&graph(), &[c(0.5, 0.0), c(0.3, 0.0)], 50).unwrap();
        assert!(p.residual < 1e-10);
        let (z, w) = (p.coords[0], p.coords[1]);
        assert!((w - z.conj() * z.conj()).norm() < 1e-10);
        assert!((z - c(0.5, 0.0)).norm() < 0.1);
    }

    #[test]
    fn empty_surface_does_not_converge() {
        let s = ManifoldSpec::new(0, &["z", "w"], "z*conj(z) + 1", "im(w)").unwrap();
        match project_to_x(&s, &[c(5.0, 5.0), c(0.0, 3.0)], 20) {
            Err(Error::NoConvergence { last, residual, .. }) => {
                assert_eq!(last.len(), 2);
                assert!(residual >= 1.0 - 1e-12);
            }
            other => panic!("expected no convergence, got {other:?}"),
        }
    }

    #[test]
    fn tangent_frame_at_origin_is_z_plane() {
        let s = graph();
        let p = s.surface_point(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let f = tangent_frame(&s, &p).unwrap();
        assert_eq!(f.len(), 2);
        for v in &f {
            // layout (Re z, Re w, Im z, Im w)
            assert!(v[1].abs() < 1e-12 && v[3].abs() < 1e-12);
        }
    }

    #[test]
    fn non_regular_frame_errors() {
        let s = ManifoldSpec::new(0, &["z", "w"], "re(w)", "2*re(w)").unwrap();
        let p = s.surface_point(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(!p.regular);
        assert!(matches!(tangent_frame(&s, &p), Err(Error::NotRegular)));
    }
}
