use super::CMat;
use crate::{Error, Result, C64};

/// Complex 2-form on `C^d`, storing only `λ_ab` for `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    dim: usize,
    coeffs: Vec<C64>,
}

impl TwoForm {
    pub fn zeros(dim: usize) -> Self {
        TwoForm {
            dim,
            coeffs: vec![C64::new(0.0, 0.0); dim * dim.saturating_sub(1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.dim);
        // row-major over the strict upper triangle
        a * (2 * self.dim - a - 1) / 2 + (b - a - 1)
    }

    /// `λ_ab` for any ordered pair, with `λ_ba = −λ_ab` and `λ_aa = 0`.
    pub fn get(&self, a: usize, b: usize) -> C64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.coeffs[self.slot(a, b)],
            Greater => -self.coeffs[self.slot(b, a)],
            Equal => C64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, a: usize, b: usize, value: C64) {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => {
                let s = self.slot(a, b);
                self.coeffs[s] = value;
            }
            Greater => {
                let s = self.slot(b, a);
                self.coeffs[s] = -value;
            }
            Equal => panic!("diagonal of a 2-form is identically zero"),
        }
    }

    /// Frobenius norm over the stored `a < b` entries.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(a, b, λ_ab)` for all `a < b`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |a| (a + 1..self.dim).map(move |b| (a, b, self.get(a, b))))
    }
}

/// Hermitian matrix (checked on construction to `1e-10` relative).
#[derive(Debug, Clone, PartialEq)]
pub struct HermMat(CMat);

impl HermMat {
    pub const TOL: f64 = 1e-10;

    pub fn new(m: CMat) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        let dev = m.sub(&m.adjoint()).max_abs();
        if dev > Self::TOL * m.max_abs().max(1.0) {
            return Err(Error::Invalid(format!("matrix is not Hermitian (deviation {dev:.3e})")));
        }
        Ok(HermMat(m))
    }

    /// Average `M` with `M†` to remove rounding asymmetry.
    pub fn symmetrized(m: &CMat) -> Result<Self> {
        let avg = m.add(&m.adjoint()).scale(C64::new(0.5, 0.0));
        let dev = m.sub(&m.adjoint()).max_abs();
        if dev > Self::TOL * m.max_abs().max(1.0) {
            return Err(Error::Internal(format!(
                "Levi matrix failed the Hermitian check (deviation {dev:.3e})"
            )));
        }
        Ok(HermMat(avg))
    }

    pub fn zeros(n: usize) -> Self {
        HermMat(CMat::zeros(n, n))
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }
}
