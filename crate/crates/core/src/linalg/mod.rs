//! Small dense linear algebra over `f64` and `Complex64`.
//!
//! Sizes here are desk scale (a few dozen rows at most), so everything is
//! plain row-major storage with textbook pivoted elimination.

mod forms;
mod mat;

pub use forms::{HermMat, TwoForm};
pub use mat::{CMat, Mat, RMat, Scalar};

use crate::{Error, Result, C64};

/// Default relative pivot tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Complex vector newtype.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec(pub Vec<C64>);

impl CVec {
    pub fn zeros(d: usize) -> Self {
        CVec(vec![C64::new(0.0, 0.0); d])
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hermitian product `Σ a_j conj(b_j)`.
    pub fn dot(&self, other: &CVec) -> C64 {
        hdot(&self.0, &other.0)
    }

    pub fn scale(&self, s: C64) -> CVec {
        CVec(self.0.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, other: &CVec) -> CVec {
        CVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &CVec) -> CVec {
        CVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn conj(&self) -> CVec {
        CVec(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn normalized(&self) -> Option<CVec> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Real coordinates in block layout `(Re z₁..Re z_d, Im z₁..Im z_d)`.
    pub fn to_real(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.0.iter().map(|z| z.re).collect();
        out.extend(self.0.iter().map(|z| z.im));
        out
    }

    /// Inverse of [`CVec::to_real`].
    pub fn from_real(x: &[f64]) -> CVec {
        let d = x.len() / 2;
        CVec((0..d).map(|j| C64::new(x[j], x[d + j])).collect())
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

pub(crate) fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Real inner product of two complex vectors viewed in `R^{2d}`.
pub fn real_dot(a: &CVec, b: &CVec) -> f64 {
    hdot(&a.0, &b.0).re
}

/// `u ∧ v` with `λ_ab = u_a v_b − u_b v_a`.
pub fn wedge(u: &CVec, v: &CVec) -> Result<TwoForm> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    let d = u.dim();
    let mut form = TwoForm::zeros(d);
    for a in 0..d {
        for b in a + 1..d {
            form.set(a, b, u[a] * v[b] - u[b] * v[a]);
        }
    }
    Ok(form)
}

/// Magnitudes of the pivots of complete-pivoting elimination, in the order
/// they were eliminated.
pub fn pivot_magnitudes<T: Scalar>(m: &Mat<T>) -> Vec<f64> {
    let mut a = m.clone();
    let (rows, cols) = (a.rows(), a.cols());
    let mut pivots = Vec::new();
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    for _ in 0..rows.min(cols) {
        let mut best = (0usize, 0usize, -1.0f64);
        for i in (0..rows).filter(|&i| !row_used[i]) {
            for j in (0..cols).filter(|&j| !col_used[j]) {
                let v = a[(i, j)].modulus();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (pi, pj, mag) = best;
        if mag <= 0.0 {
            pivots.push(0.0);
            continue;
        }
        pivots.push(mag);
        row_used[pi] = true;
        col_used[pj] = true;
        let p = a[(pi, pj)];
        for i in (0..rows).filter(|&i| !row_used[i]) {
            let f = a[(i, pj)] / p;
            if f.modulus() == 0.0 {
                continue;
            }
            for j in 0..cols {
                let sub = f * a[(pi, j)];
                a[(i, j)] = a[(i, j)] - sub;
            }
        }
    }
    pivots
}

/// Numerical rank: pivots larger than `tol` times the largest pivot.
pub fn rank<T: Scalar>(m: &Mat<T>, tol: f64) -> Result<usize> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Invalid("rank of an empty matrix".into()));
    }
    if tol <= 0.0 {
        return Err(Error::Invalid("rank tolerance must be positive".into()));
    }
    let piv = pivot_magnitudes(m);
    let largest = piv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(piv.iter().filter(|&&p| p > tol * largest).count())
}

struct Lu<T: Scalar> {
    a: Mat<T>,
    perm: Vec<usize>,
    sign: f64,
    min_pivot: f64,
}

fn lu<T: Scalar>(m: &Mat<T>) -> Lu<T> {
    assert_eq!(m.rows(), m.cols(), "LU of a non-square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|i| (i, a[(i, k)].modulus()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        min_pivot = min_pivot.min(mag);
        if mag == 0.0 {
            continue;
        }
        if p != k {
            a.swap_rows(p, k);
            perm.swap(p, k);
            sign = -sign;
        }
        let piv = a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            a[(i, k)] = f;
            for j in k + 1..n {
                let sub = f * a[(k, j)];
                a[(i, j)] = a[(i, j)] - sub;
            }
        }
    }
    if n == 0 {
        min_pivot = 1.0;
    }
    Lu {
        a,
        perm,
        sign,
        min_pivot,
    }
}

/// Determinant via partial-pivoting elimination. Empty matrices have
/// determinant one.
pub fn det<T: Scalar>(m: &Mat<T>) -> T {
    let f = lu(m);
    let mut d = T::from_f64(f.sign);
    for k in 0..m.rows() {
        d = d * f.a[(k, k)];
    }
    d
}

/// Solve a square system `A x = b`.
pub fn solve<T: Scalar>(m: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let n = m.rows();
    if m.cols() != n || b.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    let f = lu(m);
    let scale = m.max_abs();
    if f.min_pivot <= 1e-14 * scale || scale == 0.0 {
        return Err(Error::Singular(format!(
            "pivot {:.3e} against scale {:.3e}",
            f.min_pivot, scale
        )));
    }
    let mut y: Vec<T> = f.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for k in 0..i {
            let sub = f.a[(i, k)] * y[k];
            y[i] = y[i] - sub;
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let sub = f.a[(i, k)] * y[k];
            y[i] = y[i] - sub;
        }
        y[i] = y[i] / f.a[(i, i)];
    }
    Ok(y)
}

/// Least-squares minimizer of `|A x − b|₂` through the normal equations,
/// with a ridge of `1e-12·trace(AᵀA)` when they are near singular.
pub fn least_squares(a: &RMat, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows() != b.len() {
        return Err(Error::Dimension {
            expected: a.rows(),
            got: b.len(),
        });
    }
    if a.rows() < a.cols() {
        return Err(Error::Invalid(format!(
            "least squares needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    for j in 0..a.cols() {
        if (0..a.rows()).all(|i| a[(i, j)] == 0.0) {
            return Err(Error::Singular(format!("column {j} is identically zero")));
        }
    }
    let at = a.transpose();
    let mut ata = at.matmul(a);
    let atb = at.matvec(b);
    let trace: f64 = (0..ata.rows()).map(|i| ata[(i, i)]).sum();
    if let Ok(x) = solve_checked(&ata, &atb, trace) {
        return Ok(x);
    }
    let ridge = 1e-12 * trace;
    for i in 0..ata.rows() {
        ata[(i, i)] += ridge;
    }
    solve(&ata, &atb)
}

/// Solve only when the elimination is comfortably nonsingular relative to
/// `scale`; used to decide whether the ridge is needed.
fn solve_checked(m: &RMat, b: &[f64], scale: f64) -> Result<Vec<f64>> {
    let f = lu(m);
    if f.min_pivot <= 1e-10 * scale {
        return Err(Error::Singular("near-singular normal equations".into()));
    }
    solve(m, b)
}

/// Least squares through column-pivoted Householder QR. Columns whose
/// pivot falls below `rcond` times the largest pivot are dropped (their
/// unknowns set to zero), which keeps steps well defined on rank-deficient
/// systems without squaring the condition number.
pub fn qr_least_squares(a: &RMat, b: &[f64], rcond: f64) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if m != b.len() {
        return Err(Error::Dimension {
            expected: m,
            got: b.len(),
        });
    }
    if m < n {
        return Err(Error::Invalid(format!("least squares needs rows >= cols, got {m}x{n}")));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| (0..m).map(|i| r[(i, j)].powi(2)).sum()).collect();
    let mut rank = 0;
    let mut first = 0.0;
    for k in 0..n {
        let (p, best) = (k..n)
            .map(|j| (j, norms[j]))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if p != k {
            for i in 0..m {
                let t = r[(i, k)];
                r[(i, k)] = r[(i, p)];
                r[(i, p)] = t;
            }
            norms.swap(k, p);
            perm.swap(k, p);
        }
        let alpha = (k..m).map(|i| r[(i, k)].powi(2)).sum::<f64>().sqrt();
        if k == 0 {
            first = alpha;
        }
        if alpha == 0.0 || alpha <= rcond * first || best <= 0.0 {
            break;
        }
        let sign = if r[(k, k)] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                r[(i, j)] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * y[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            y[i] -= f * v[i - k];
        }
        for (j, nj) in norms.iter_mut().enumerate().skip(k + 1) {
            *nj = (k + 1..m).map(|i| r[(i, j)].powi(2)).sum();
        }
        rank += 1;
    }
    if rank == 0 {
        return Err(Error::Singular("least-squares matrix is zero".into()));
    }
    let mut z = vec![0.0; n];
    for k in (0..rank).rev() {
        let s: f64 = (k + 1..rank).map(|j| r[(k, j)] * z[j]).sum();
        z[k] = (y[k] - s) / r[(k, k)];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = z[k];
    }
    Ok(x)
}

/// Minimum-norm solution of an underdetermined full-row-rank real system.
pub fn min_norm_solve(a: &RMat, b: &[f64]) -> Result<Vec<f64>> {
    let at = a.transpose();
    let aat = a.matmul(&at);
    let y = solve(&aat, b)?;
    Ok(at.matvec(&y))
}

/// Orthonormalize `candidates` against `fixed` (assumed orthonormal) and each
/// other with twice-iterated Gram–Schmidt, dropping vectors whose residual
/// norm falls below `drop_tol`, until `want` vectors are collected.
pub fn gram_schmidt(fixed: &[CVec], candidates: &[CVec], want: usize, drop_tol: f64) -> Vec<CVec> {
    let mut basis: Vec<CVec> = fixed.to_vec();
    let mut out = Vec::new();
    for c in candidates {
        if out.len() == want {
            break;
        }
        let mut r = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let coeff = r.dot(q);
                r = r.sub(&q.scale(coeff));
            }
        }
        if r.norm() > drop_tol {
            let q = r.normalized().expect("nonzero residual");
            basis.push(q.clone());
            out.push(q);
        }
    }
    out
}

/// Unitary `d×d` matrix whose last column is `v/|v|`. The remaining columns
/// come from Gram–Schmidt over the standard basis in ascending order, so an
/// already-aligned `v = e_d` yields the identity.
pub fn unitary_complete(v: &CVec) -> Result<CMat> {
    let d = v.dim();
    let vhat = v
        .normalized()
        .ok_or_else(|| Error::Invalid("unitary completion of a zero vector".into()))?;
    let candidates: Vec<CVec> = (0..d).map(|k| CVec::basis(d, k)).collect();
    let rest = gram_schmidt(std::slice::from_ref(&vhat), &candidates, d - 1, 1e-6);
    if rest.len() != d - 1 {
        return Err(Error::Internal("unitary completion lost a direction".into()));
    }
    let mut cols = rest;
    cols.push(vhat);
    Ok(CMat::from_cols(&cols))
}

/// Orthonormal basis of `{x : Σ_j a_j x_j = 0 for every row a}`, i.e. the
/// Hermitian complement of the conjugated rows.
pub fn complex_kernel(rows: &[CVec], rank_tol: f64) -> Vec<CVec> {
    let d = rows.first().map(CVec::dim).unwrap_or(0);
    let conj_rows: Vec<CVec> = rows.iter().map(CVec::conj).collect();
    let scale = conj_rows.iter().map(CVec::norm).fold(0.0, f64::max);
    let row_basis = gram_schmidt(&[], &conj_rows, rows.len(), rank_tol * scale.max(f64::MIN_POSITIVE));
    let candidates: Vec<CVec> = (0..d).map(|k| CVec::basis(d, k)).collect();
    gram_schmidt(&row_basis, &candidates, d - row_basis.len(), 1e-6)
}

/// Orthonormal basis of the kernel of a real matrix (as vectors in `R^cols`).
pub fn real_kernel(a: &RMat, rank_tol: f64) -> Vec<Vec<f64>> {
    let rows: Vec<CVec> = (0..a.rows())
        .map(|i| CVec((0..a.cols()).map(|j| C64::new(a[(i, j)], 0.0)).collect()))
        .collect();
    complex_kernel(&rows, rank_tol)
        .into_iter()
        .map(|v| v.0.iter().map(|z| z.re).collect())
        .collect()
}
