//! Completely positive maps between matrix algebras, carried in three
//! interconvertible forms: Kraus family, Choi matrix and superoperator.
//!
//! The superoperator (acting on column-stacked matrices) is the canonical
//! internal form; Choi and Kraus data are derived from it.  A map phi is CP
//! exactly when its Choi matrix sum_ij e_ij (x) phi(e_ij) is positive
//! semidefinite, and unital when phi(I) = I.

use serde::{Deserialize, Serialize};

use crate::matalg::{generated_star_algebra, OperatorSystem, StarAlgebra};
use crate::numeric::{
    self, cr, eye, hermitian_eig, matrix_unit, min_eig_with_vec, nullspace, op_dist, unvec,
    vec_of, CMat, CVec, Tolerance, RANK_RTOL,
};
use crate::{Error, Result};

/// A linear map M_in -> M_out on matrices.
#[derive(Debug, Clone)]
pub struct ChannelMap {
    pub in_dim: usize,
    pub out_dim: usize,
    /// out^2 x in^2 matrix acting on column-stacked inputs.
    pub superop: CMat,
    /// Choi matrix sum_ij e_ij (x) phi(e_ij), computed eagerly.
    pub choi: CMat,
    /// Kraus family, present when the map was built from one.
    pub kraus: Option<Vec<CMat>>,
}

/// Certified verdict of [`ChannelMap::is_ucp`].
#[derive(Debug, Clone)]
pub struct UcpVerdict {
    pub cp: bool,
    pub unital: bool,
    /// Violating (eigenvalue, eigenvector) of the Choi matrix when not CP.
    pub cp_witness: Option<(f64, CVec)>,
    pub unital_residual: f64,
}

impl UcpVerdict {
    pub fn is_ucp(&self) -> bool {
        self.cp && self.unital
    }
}

fn choi_from_superop(in_dim: usize, out_dim: usize, superop: &CMat) -> CMat {
    let mut choi = numeric::zeros(in_dim * out_dim, in_dim * out_dim);
    for i in 0..in_dim {
        for j in 0..in_dim {
            let col = superop.column(j * in_dim + i).into_owned();
            let block = unvec(&col, out_dim, out_dim);
            choi.view_mut((i * out_dim, j * out_dim), (out_dim, out_dim))
                .copy_from(&block);
        }
    }
    choi
}

impl ChannelMap {
    pub fn from_superop(in_dim: usize, out_dim: usize, superop: CMat) -> Result<Self> {
        if superop.nrows() != out_dim * out_dim || superop.ncols() != in_dim * in_dim {
            return Err(Error::Domain("superoperator has wrong shape".into()));
        }
        let choi = choi_from_superop(in_dim, out_dim, &superop);
        Ok(ChannelMap {
            in_dim,
            out_dim,
            superop,
            choi,
            kraus: None,
        })
    }

    pub fn from_kraus(kraus: &[CMat]) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Domain("empty Kraus family".into()));
        }
        let out_dim = kraus[0].nrows();
        let in_dim = kraus[0].ncols();
        let mut superop = numeric::zeros(out_dim * out_dim, in_dim * in_dim);
        for k in kraus {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::Domain("Kraus operators have mixed shapes".into()));
            }
            superop += numeric::kron(&k.map(|z| z.conj()), k);
        }
        let mut m = Self::from_superop(in_dim, out_dim, superop)?;
        m.kraus = Some(kraus.to_vec());
        Ok(m)
    }

    pub fn from_choi(in_dim: usize, out_dim: usize, choi: &CMat) -> Result<Self> {
        let d = in_dim * out_dim;
        if choi.nrows() != d || choi.ncols() != d {
            return Err(Error::Domain("Choi matrix has wrong shape".into()));
        }
        let mut superop = numeric::zeros(out_dim * out_dim, in_dim * in_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let block = choi.view((i * out_dim, j * out_dim), (out_dim, out_dim));
                let v = CVec::from_column_slice(block.clone_owned().as_slice());
                superop.set_column(j * in_dim + i, &v);
            }
        }
        Self::from_superop(in_dim, out_dim, superop)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_superop(n, n, eye(n * n)).expect("identity superoperator")
    }

    pub fn is_square(&self) -> bool {
        self.in_dim == self.out_dim
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.in_dim, "apply: dimension mismatch");
        assert_eq!(x.ncols(), self.in_dim, "apply: dimension mismatch");
        unvec(&(&self.superop * vec_of(x)), self.out_dim, self.out_dim)
    }

    pub fn compose(later: &ChannelMap, first: &ChannelMap) -> Result<ChannelMap> {
        if later.in_dim != first.out_dim {
            return Err(Error::Domain("compose: dimension mismatch".into()));
        }
        ChannelMap::from_superop(first.in_dim, later.out_dim, &later.superop * &first.superop)
    }

    pub fn power(&self, k: usize) -> Result<ChannelMap> {
        if !self.is_square() {
            return Err(Error::Domain("power requires a square channel".into()));
        }
        let mut s = eye(self.in_dim * self.in_dim);
        for _ in 0..k {
            s = &self.superop * s;
        }
        ChannelMap::from_superop(self.in_dim, self.in_dim, s)
    }

    /// CP and unitality certificates.
    pub fn is_ucp(&self, tol: &Tolerance) -> Result<UcpVerdict> {
        let (min, vec) = min_eig_with_vec(&self.choi, tol)?;
        let cp = min >= -tol.psd_tol;
        let unital_residual = if self.is_square() {
            op_dist(&self.apply(&eye(self.in_dim)), &eye(self.out_dim))
        } else {
            op_dist(&self.apply(&eye(self.in_dim)), &eye(self.out_dim))
        };
        Ok(UcpVerdict {
            cp,
            unital: unital_residual <= tol.eq_tol,
            cp_witness: if cp { None } else { Some((min, vec)) },
            unital_residual,
        })
    }

    /// Kraus family recovered from the Choi eigendecomposition.
    pub fn kraus_of(&self, tol: &Tolerance) -> Result<Vec<CMat>> {
        let (vals, u) = hermitian_eig(&self.choi, tol)?;
        let scale = vals.iter().cloned().fold(0.0, f64::max).max(1.0);
        let mut kraus = Vec::new();
        for (idx, &v) in vals.iter().enumerate() {
            if v < -tol.psd_tol * scale {
                return Err(Error::Domain(format!(
                    "kraus_of: map is not CP (Choi eigenvalue {v:.3e})"
                )));
            }
            if v > RANK_RTOL * scale {
                let col = u.column(idx);
                let mut k = numeric::zeros(self.out_dim, self.in_dim);
                for i in 0..self.in_dim {
                    for r in 0..self.out_dim {
                        k[(r, i)] = col[i * self.out_dim + r] * cr(v.sqrt());
                    }
                }
                kraus.push(k);
            }
        }
        Ok(kraus)
    }

    /// Schwarz defect phi(x* x) - phi(x)* phi(x), PSD for any UCP map.
    pub fn schwarz_defect(&self, x: &CMat, tol: &Tolerance) -> Result<CMat> {
        if !self.is_ucp(tol)?.is_ucp() {
            return Err(Error::Domain("schwarz_defect requires a UCP map".into()));
        }
        let px = self.apply(x);
        Ok(self.apply(&(x.adjoint() * x)) - px.adjoint() * px)
    }

    /// Superoperator-norm distance to another map.
    pub fn distance(&self, other: &ChannelMap) -> f64 {
        op_dist(&self.superop, &other.superop)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.is_square() && op_dist(&self.superop, &eye(self.in_dim * self.in_dim)) <= tol
    }
}

/// Multiplicative domain of a UCP map: the largest set on which the map is
/// a homomorphism.  `domain` restricts the search to a subspace (defaulting
/// to all of M_n); `codomain_idempotent`, when given, replaces the codomain
/// product xy by P(xy) — used for maps into a Choi–Effros algebra carried
/// by a UCP idempotent P.
pub fn multiplicative_domain(
    phi: &ChannelMap,
    domain: Option<&OperatorSystem>,
    codomain_idempotent: Option<&ChannelMap>,
    tol: &Tolerance,
) -> Result<StarAlgebra> {
    if !phi.is_square() {
        return Err(Error::Domain(
            "multiplicative_domain requires matching dimensions".into(),
        ));
    }
    let n = phi.in_dim;
    if !phi.is_ucp(tol)?.is_ucp() {
        return Err(Error::Domain("multiplicative_domain requires a UCP map".into()));
    }
    let full;
    let basis: &[CMat] = match domain {
        Some(d) => &d.basis,
        None => {
            full = crate::matalg::full_matrix_algebra(n).basis;
            &full
        }
    };
    let post = |m: &CMat| -> CMat {
        match codomain_idempotent {
            Some(p) => p.apply(m),
            None => m.clone(),
        }
    };
    let d = basis.len();
    let nn = n * n;
    // For a = sum_m c_m b_m the conditions
    //   phi(a b_j) - P(phi(a) phi(b_j)) = 0,  phi(b_j a) - P(phi(b_j) phi(a)) = 0
    // are linear in the coordinates c.
    let mut m = numeric::zeros(2 * d * nn, d);
    for (col, bm) in basis.iter().enumerate() {
        let pbm = phi.apply(bm);
        for (j, bj) in basis.iter().enumerate() {
            let pbj = phi.apply(bj);
            let left = phi.apply(&(bm * bj)) - post(&(&pbm * &pbj));
            let right = phi.apply(&(bj * bm)) - post(&(&pbj * &pbm));
            m.view_mut((2 * j * nn, col), (nn, 1)).copy_from(&vec_of(&left));
            m.view_mut(((2 * j + 1) * nn, col), (nn, 1))
                .copy_from(&vec_of(&right));
        }
    }
    let coords = nullspace(&m, RANK_RTOL);
    let mats: Vec<CMat> = coords
        .iter()
        .map(|c| {
            let mut x = numeric::zeros(n, n);
            for (k, b) in basis.iter().enumerate() {
                x += b * c[k];
            }
            x
        })
        .collect();
    let algebra = StarAlgebra {
        ambient_dim: n,
        basis: mats,
        unit: eye(n),
    };
    // The result must be a unital *-subalgebra; anything else means the
    // tolerances mangled the rank decisions.
    let regenerated = generated_star_algebra(n, &algebra.basis)?;
    if regenerated.dim() != algebra.dim() {
        return Err(Error::Consistency(format!(
            "multiplicative domain is not an algebra (dim {} regenerates to {})",
            algebra.dim(),
            regenerated.dim()
        )));
    }
    algebra.verify(tol).map_err(|e| {
        Error::Consistency(format!("multiplicative domain failed algebra axioms: {e}"))
    })?;
    Ok(algebra)
}

/// Wire format for channels: Kraus family or Choi matrix with complex
/// entries encoded as [re, im] pairs in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<Vec<Vec<[f64; 2]>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choi: Option<Vec<Vec<[f64; 2]>>>,
}

fn rows_to_mat(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Domain("empty matrix in channel file".into()));
    }
    let c = rows[0].len();
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Domain("ragged matrix in channel file".into()));
    }
    Ok(CMat::from_fn(r, c, |i, j| {
        numeric::c(rows[i][j][0], rows[i][j][1])
    }))
}

fn mat_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

impl ChannelJson {
    pub fn to_channel(&self) -> Result<ChannelMap> {
        match (&self.kraus, &self.choi) {
            (Some(ks), _) => {
                let mats: Vec<CMat> = ks
                    .iter()
                    .map(|rows| rows_to_mat(rows))
                    .collect::<Result<_>>()?;
                if mats.iter().any(|k| k.nrows() != self.dim || k.ncols() != self.dim) {
                    return Err(Error::Domain("Kraus dimension differs from dim".into()));
                }
                ChannelMap::from_kraus(&mats)
            }
            (None, Some(choi)) => {
                let c = rows_to_mat(choi)?;
                ChannelMap::from_choi(self.dim, self.dim, &c)
            }
            (None, None) => Err(Error::Domain("channel file carries neither kraus nor choi".into())),
        }
    }

    pub fn from_channel(m: &ChannelMap) -> Self {
        ChannelJson {
            dim: m.in_dim,
            kraus: m
                .kraus
                .as_ref()
                .map(|ks| ks.iter().map(mat_to_rows).collect()),
            choi: Some(mat_to_rows(&m.choi)),
        }
    }
}

/// The pinching (conditional expectation) onto the diagonal of M_n.
pub fn diagonal_pinching(n: usize) -> ChannelMap {
    let kraus: Vec<CMat> = (0..n).map(|i| matrix_unit(n, i, i)).collect();
    ChannelMap::from_kraus(&kraus).expect("pinching Kraus family")
}

/// x -> u* x u for a unitary u.
pub fn unitary_conjugation(u: &CMat) -> Result<ChannelMap> {
    let n = u.nrows();
    if op_dist(&(u.adjoint() * u), &eye(n)) > 1e-10 {
        return Err(Error::Domain("unitary_conjugation: matrix is not unitary".into()));
    }
    ChannelMap::from_kraus(&[u.adjoint()])
}

/// Depolarizing map x -> (1-t) x + t tr(x)/n I.
pub fn depolarizing(n: usize, t: f64) -> ChannelMap {
    let nn = n * n;
    let mut superop = eye(nn) * cr(1.0 - t);
    let id_vec = vec_of(&eye(n));
    let tr_row = id_vec.adjoint();
    superop += (&id_vec * tr_row) * cr(t / n as f64);
    ChannelMap::from_superop(n, n, superop).expect("depolarizing superoperator")
}

/// Left-normalize a Kraus family so that sum K K* = I, making the induced
/// map unital.
pub fn unitalize_kraus(kraus: &[CMat], tol: &Tolerance) -> Result<Vec<CMat>> {
    let n = kraus[0].nrows();
    let mut s = numeric::zeros(n, n);
    for k in kraus {
        s += k * k.adjoint();
    }
    let corr = numeric::inv_sqrt(&s, tol)?;
    Ok(kraus.iter().map(|k| &corr * k).collect())
}

/// Largest-magnitude entry of the superoperator difference; cheap distance
/// used in diagnostics.
pub fn max_entry_distance(a: &ChannelMap, b: &ChannelMap) -> f64 {
    (&a.superop - &b.superop)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
