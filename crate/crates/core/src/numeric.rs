//! Dense complex linear-algebra primitives shared by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`; matrix
//! equality throughout the crate means operator-norm distance within
//! [`Tolerance::eq_tol`], and positivity allows an eigenvalue slack of
//! [`Tolerance::psd_tol`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Uniform notion of "equal" and "positive" used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Operator-norm slack for matrix equality.
    pub eq_tol: f64,
    /// Eigenvalue slack for positive semidefiniteness.
    pub psd_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eq_tol: 1e-8,
            psd_tol: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(eq_tol: f64, psd_tol: f64) -> Result<Self> {
        if !(0.0 < psd_tol && psd_tol <= eq_tol && eq_tol < 1.0) {
            return Err(Error::Domain(format!(
                "tolerances must satisfy 0 < psd_tol <= eq_tol < 1, got eq={eq_tol}, psd={psd_tol}"
            )));
        }
        Ok(Tolerance { eq_tol, psd_tol })
    }
}

/// Relative singular-value threshold for all rank decisions.
pub const RANK_RTOL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Matrix unit e_{ij} in M_n.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = cr(1.0);
    m
}

/// Column-stacking vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for an `r x c` target.
pub fn unvec(v: &CVec, r: usize, c: usize) -> CMat {
    assert_eq!(v.len(), r * c, "unvec: length mismatch");
    CMat::from_column_slice(r, c, v.as_slice())
}

/// Hilbert–Schmidt inner product tr(a* b).
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Singular values of `m` in descending order, computed as the square roots
/// of the eigenvalues of the smaller of the two Gram matrices.  This routes
/// through the symmetric eigensolver, which converges reliably on complex
/// input.
fn gram_singular_values(m: &CMat) -> Vec<f64> {
    let gram = if m.nrows() >= m.ncols() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    let gram = (&gram + gram.adjoint()) * cr(0.5);
    let eig = nalgebra::SymmetricEigen::try_new(gram, 1e-15, 100_000)
        .expect("gram_singular_values: symmetric QR iteration did not converge");
    let mut sv: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Largest singular value; 0 for an empty matrix.
pub fn operator_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    gram_singular_values(a).first().copied().unwrap_or(0.0)
}

/// Operator-norm distance.
pub fn op_dist(a: &CMat, b: &CMat) -> f64 {
    operator_norm(&(a - b))
}

/// Eigen-decomposition of a self-adjoint matrix, eigenvalues ascending and
/// eigenvector columns permuted to match.
pub fn hermitian_eig(h: &CMat, tol: &Tolerance) -> Result<(Vec<f64>, CMat)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::Domain("hermitian_eig: matrix not square".into()));
    }
    let dev = op_dist(h, &h.adjoint());
    let scale = 1.0 + operator_norm(h);
    if dev > tol.eq_tol * scale {
        return Err(Error::Domain(format!(
            "hermitian_eig: input not self-adjoint (deviation {dev:.3e})"
        )));
    }
    let hs = (h + h.adjoint()) * cr(0.5);
    let eig = nalgebra::SymmetricEigen::try_new(hs, 1e-14, 100_000).ok_or_else(|| {
        Error::Numeric("hermitian_eig: QR iteration did not converge within 100000 steps".into())
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut u = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        u.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((vals, u))
}

/// Smallest eigenvalue of a self-adjoint matrix with a witness eigenvector.
pub fn min_eig_with_vec(h: &CMat, tol: &Tolerance) -> Result<(f64, CVec)> {
    let (vals, u) = hermitian_eig(h, tol)?;
    Ok((vals[0], u.column(0).into_owned()))
}

/// True when the self-adjoint matrix has no eigenvalue below `-psd_tol`.
pub fn psd_check(h: &CMat, tol: &Tolerance) -> Result<bool> {
    let (min, _) = min_eig_with_vec(h, tol)?;
    Ok(min >= -tol.psd_tol)
}

/// Householder QR with column pivoting.  The rank-revealing workhorse for
/// spans and kernels: Q is unitary to machine precision by construction,
/// unlike the iterative complex SVD, whose singular vectors can leak a
/// relative 1e-3 out of the column space on clustered singular values.
fn pivoted_qr(
    m: &CMat,
) -> nalgebra::ColPivQR<C64, nalgebra::Dyn, nalgebra::Dyn> {
    m.clone().col_piv_qr()
}

/// Magnitudes of the diagonal of R; non-increasing thanks to pivoting, and
/// within a factor sqrt(min(rows, cols)) of the singular values.
fn qr_diag(qr: &nalgebra::ColPivQR<C64, nalgebra::Dyn, nalgebra::Dyn>) -> Vec<f64> {
    let r = qr.r();
    (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].norm())
        .collect()
}

/// Orthonormal basis of the numerical kernel {v : Lv = 0}, where pivot
/// magnitudes at or below `rel_tol * sigma_max` count as zero.
pub fn nullspace(l: &CMat, rel_tol: f64) -> Vec<CVec> {
    nullspace_with_floor(l, rel_tol, 0.0)
}

/// Like [`nullspace`], but the rank cutoff is `rel_tol * max(sigma_max,
/// floor)`.  Use a floor of 1 when the input is built from normalized data
/// and an all-roundoff matrix must count as zero.
pub fn nullspace_with_floor(l: &CMat, rel_tol: f64, floor: f64) -> Vec<CVec> {
    let n = l.ncols();
    if n == 0 {
        return vec![];
    }
    // QR of L*: the leading columns of Q span range(L*), the rest span its
    // orthogonal complement = ker(L).  Pad with zero columns so Q is square.
    let adj = l.adjoint();
    let work = if adj.ncols() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (n, adj.ncols())).copy_from(&adj);
        p
    } else {
        adj
    };
    let qr = pivoted_qr(&work);
    let diag = qr_diag(&qr);
    let sigma_max = diag.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max.max(floor);
    let rank = diag.iter().filter(|&&d| d > cutoff).count();
    let q = qr.q();
    (rank..n).map(|i| q.column(i).into_owned()).collect()
}

/// Orthonormal basis (rank-revealing QR) of the span of the given vectors.
pub fn orthonormal_span(vectors: &[CVec], rel_tol: f64) -> Vec<CVec> {
    if vectors.is_empty() || vectors[0].is_empty() {
        return vec![];
    }
    let dim = vectors[0].len();
    let mut m = CMat::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        assert_eq!(v.len(), dim, "orthonormal_span: dimension mismatch");
        m.set_column(j, v);
    }
    let qr = pivoted_qr(&m);
    let diag = qr_diag(&qr);
    let sigma_max = diag.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return vec![];
    }
    let q = qr.q();
    diag.iter()
        .enumerate()
        .filter(|(_, &d)| d > rel_tol * sigma_max)
        .map(|(i, _)| q.column(i).into_owned())
        .collect()
}

/// Numerical rank at the crate-wide relative threshold.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = gram_singular_values(m);
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * sigma_max).count()
}

/// Inverse square root of a positive definite self-adjoint matrix.
pub fn inv_sqrt(h: &CMat, tol: &Tolerance) -> Result<CMat> {
    let (vals, u) = hermitian_eig(h, tol)?;
    if vals[0] <= tol.psd_tol {
        return Err(Error::Numeric(format!(
            "inv_sqrt: matrix not positive definite (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&v| cr(1.0 / v.sqrt())),
    ));
    Ok(&u * d * u.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn eig_diagonal() {
        let h = CMat::from_diagonal(&CVec::from_vec(vec![cr(3.0), cr(1.0)]));
        let (vals, u) = hermitian_eig(&h, &t()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        // Columns of a permutation are unit vectors.
        assert!(op_dist(&(&u * u.adjoint()), &eye(2)) < 1e-12);
    }

    #[test]
    fn eig_zero_matrix() {
        let (vals, u) = hermitian_eig(&zeros(3, 3), &t()).unwrap();
        assert!(vals.iter().all(|&v| v.abs() < 1e-14));
        assert!(op_dist(&(&u * u.adjoint()), &eye(3)) < 1e-12);
    }

    #[test]
    fn eig_pauli_x() {
        // [[0,1],[1,0]]: characteristic polynomial gives exactly -1, 1.
        let h = matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0);
        let (vals, _) = hermitian_eig(&h, &t()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = matrix_unit(2, 0, 1);
        assert!(hermitian_eig(&m, &t()).is_err());
    }

    #[test]
    fn nullspace_cases() {
        assert!(nullspace(&eye(3), RANK_RTOL).is_empty());
        assert_eq!(nullspace(&zeros(2, 2), RANK_RTOL).len(), 2);
        let p = matrix_unit(2, 0, 0);
        let ns = nullspace(&p, RANK_RTOL);
        assert_eq!(ns.len(), 1);
        assert!(ns[0][0].norm() < 1e-12 && (ns[0][1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_wide_matrix() {
        // 1x3 row [1,0,0]: kernel is 2-dimensional.
        let mut l = zeros(1, 3);
        l[(0, 0)] = cr(1.0);
        let ns = nullspace(&l, RANK_RTOL);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(v[0].norm() < 1e-12);
        }
    }

    #[test]
    fn operator_norm_cases() {
        assert!((operator_norm(&eye(4)) - 1.0).abs() < 1e-12);
        let d = CMat::from_diagonal(&CVec::from_vec(vec![cr(2.0), cr(-3.0)]));
        assert!((operator_norm(&d) - 3.0).abs() < 1e-12);
        // [[0,2],[0,0]] has singular values {2, 0}.
        let m = matrix_unit(2, 0, 1) * cr(2.0);
        assert!((operator_norm(&m) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psd_check_cases() {
        assert!(psd_check(&eye(2), &t()).unwrap());
        assert!(!psd_check(&(eye(2) * cr(-1.0)), &t()).unwrap());
        // [[1,2],[2,1]] has min eigenvalue -1.
        let m = eye(2) + (matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0)) * cr(2.0);
        assert!(!psd_check(&m, &t()).unwrap());
        let (min, _) = min_eig_with_vec(&m, &t()).unwrap();
        assert!((min + 1.0).abs() < 1e-12);
    }

    #[test]
    fn inv_sqrt_roundtrip() {
        let a = CMat::from_fn(3, 3, |i, j| c(0.3 * (i + 2 * j) as f64, 0.1 * i as f64));
        let h = &a * a.adjoint() + eye(3);
        let s = inv_sqrt(&h, &t()).unwrap();
        assert!(op_dist(&(&s * &h * &s), &eye(3)) < 1e-10);
    }

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        (&a + a.adjoint()) * cr(0.5)
    }

    proptest! {
        #[test]
        fn eig_reconstructs(seed in 0u64..500, n in 1usize..=12) {
            let h = random_hermitian(n, seed);
            let (vals, u) = hermitian_eig(&h, &t()).unwrap();
            let d = CMat::from_diagonal(&CVec::from_iterator(n, vals.iter().map(|&v| cr(v))));
            let rec = &u * d * u.adjoint();
            prop_assert!(op_dist(&h, &rec) <= 1e-10 * (1.0 + operator_norm(&h)));
            prop_assert!(op_dist(&(u.adjoint() * &u), &eye(n)) <= 1e-10);
        }

        #[test]
        fn nullspace_orthogonal_to_rowspace(seed in 0u64..200, n in 2usize..=6) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Rank-deficient by construction: one column duplicated.
            let mut l = CMat::from_fn(n, n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let c0 = l.column(0).into_owned();
            l.set_column(n - 1, &c0);
            let ns = nullspace(&l, RANK_RTOL);
            prop_assert!(!ns.is_empty());
            for v in &ns {
                let w = CVec::from_fn(n, |_i, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
                let lhs = (l.adjoint() * &w).adjoint() * v;
                prop_assert!(lhs[(0, 0)].norm() <= 1e-9 * (1.0 + operator_norm(&l)));
            }
        }

        #[test]
        fn operator_norm_submultiplicative(sa in 0u64..200, sb in 0u64..200, n in 1usize..=6) {
            let a = random_hermitian(n, sa);
            let b = random_hermitian(n, sb.wrapping_add(10_000));
            let lhs = operator_norm(&(&a * &b));
            prop_assert!(lhs <= operator_norm(&a) * operator_norm(&b) + 1e-9);
        }
    }
}
