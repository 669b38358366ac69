//! Finite-dimensional operator systems and *-subalgebras of a matrix
//! algebra: generation, block (Wedderburn) structure, ideal lattice,
//! quotients and irreducibility.
//!
//! Every subspace is stored as an orthonormal (Hilbert–Schmidt) spanning
//! family; rank decisions use the crate-wide relative singular-value
//! threshold so dimensions are plain integers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::{
    self, cr, eye, hermitian_eig, hs_inner, matrix_unit, nullspace, op_dist, operator_norm,
    orthonormal_span, unvec, vec_of, CMat, CVec, Tolerance, RANK_RTOL,
};
use crate::{Error, Result};

/// Seed for the generic central elements used in block extraction.
const BLOCK_SEED: u64 = 0x5eed_b10c;
/// Eigenvalue-collision threshold for generic-element grouping.
const COLLISION_TOL: f64 = 1e-6;
/// Re-sample the generic element until central values differ by this much.
const GROUP_SEPARATION_MIN: f64 = 5e-2;
const MAX_GENERIC_RETRIES: usize = 32;

/// A self-adjoint unital subspace of M_n, stored by an orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorSystem {
    pub ambient_dim: usize,
    pub basis: Vec<CMat>,
}

impl OperatorSystem {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of `m` in the orthonormal basis.
    pub fn coords(&self, m: &CMat) -> Vec<numeric::C64> {
        self.basis.iter().map(|b| hs_inner(b, m)).collect()
    }

    /// Orthogonal projection of `m` onto the span.
    pub fn project(&self, m: &CMat) -> CMat {
        let mut p = numeric::zeros(self.ambient_dim, self.ambient_dim);
        for b in &self.basis {
            p += b * hs_inner(b, m);
        }
        p
    }

    /// Operator-norm distance of `m` from the span.
    pub fn residual(&self, m: &CMat) -> f64 {
        op_dist(m, &self.project(m))
    }

    pub fn contains(&self, m: &CMat, tol: &Tolerance) -> bool {
        self.residual(m) <= tol.eq_tol * (1.0 + operator_norm(m))
    }

    /// Checks the operator-system axioms: identity in the span and adjoint
    /// closure, both within `eq_tol`.
    pub fn verify(&self, tol: &Tolerance) -> Result<()> {
        let n = self.ambient_dim;
        if !self.contains(&eye(n), tol) {
            return Err(Error::Consistency(
                "operator system does not contain the identity".into(),
            ));
        }
        for b in &self.basis {
            if !self.contains(&b.adjoint(), tol) {
                return Err(Error::Consistency(
                    "operator system not closed under adjoint".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A finite-dimensional *-subalgebra of M_n with the ambient identity as unit.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    pub ambient_dim: usize,
    pub basis: Vec<CMat>,
    pub unit: CMat,
}

/// Minimal central projections and per-block data of a [`StarAlgebra`].
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub central_projections: Vec<CMat>,
    pub block_dims: Vec<usize>,
    /// Isometries V_i (n x d_i) with x -> V_i* x V_i a unital *-isomorphism
    /// of the i-th central block onto M_{d_i}.
    pub block_isometries: Vec<CMat>,
}

impl BlockStructure {
    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Total dimension of the represented block-sum algebra.
    pub fn algebra_dim(&self) -> usize {
        self.block_dims.iter().map(|d| d * d).sum()
    }

    /// Image of `x` under the *-isomorphism onto the block-sum algebra,
    /// returned as one block-diagonal matrix of size sum(d_i).
    pub fn realize(&self, x: &CMat) -> CMat {
        let total: usize = self.block_dims.iter().sum();
        let mut out = numeric::zeros(total, total);
        let mut off = 0;
        for (d, v) in self.block_dims.iter().zip(&self.block_isometries) {
            let blk = v.adjoint() * x * v;
            out.view_mut((off, off), (*d, *d)).copy_from(&blk);
            off += d;
        }
        out
    }
}

/// An ideal of a [`StarAlgebra`], given by a subset of its central blocks.
#[derive(Debug, Clone)]
pub struct Ideal {
    pub block_indices: Vec<usize>,
    /// Sum of the selected minimal central projections.
    pub projection: CMat,
    pub basis: Vec<CMat>,
}

impl Ideal {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }
}

/// The quotient map pi : B -> B/J realized as compression to the
/// complementary central range.
#[derive(Debug, Clone)]
pub struct IdealQuotient {
    pub parent: StarAlgebra,
    pub ideal: Ideal,
    /// Orthonormal basis of range(1 - p_J), as an n x r isometry.
    pub isometry: CMat,
    /// The quotient algebra, represented in M_r (empty when J = B).
    pub quotient: StarAlgebra,
}

impl IdealQuotient {
    /// pi(x) = Q* x Q.  Multiplicative on the parent because p_J is central.
    pub fn apply(&self, x: &CMat) -> CMat {
        self.isometry.adjoint() * x * &self.isometry
    }

    /// Block section sigma : B/J -> B with pi o sigma = id.
    pub fn section(&self, y: &CMat) -> CMat {
        &self.isometry * y * self.isometry.adjoint()
    }

    /// True in the degenerate case J = B, where pi = 0.
    pub fn is_zero(&self) -> bool {
        self.quotient.ambient_dim == 0
    }
}

fn mats_to_vecs(ms: &[CMat]) -> Vec<CVec> {
    ms.iter().map(vec_of).collect()
}

fn vecs_to_mats(vs: &[CVec], n: usize) -> Vec<CMat> {
    vs.iter().map(|v| unvec(v, n, n)).collect()
}

fn check_common_dim(generators: &[CMat]) -> Result<usize> {
    let mut dim = None;
    for g in generators {
        if g.nrows() != g.ncols() {
            return Err(Error::Domain("generator not square".into()));
        }
        match dim {
            None => dim = Some(g.nrows()),
            Some(d) if d != g.nrows() => {
                return Err(Error::Domain("generators have mixed ambient dimensions".into()))
            }
            _ => {}
        }
    }
    dim.ok_or_else(|| Error::Domain("ambient dimension required for empty generator set".into()))
}

/// Smallest self-adjoint unital subspace containing the generators.
pub fn operator_system_span(ambient_dim: usize, generators: &[CMat]) -> Result<OperatorSystem> {
    if !generators.is_empty() {
        let d = check_common_dim(generators)?;
        if d != ambient_dim {
            return Err(Error::Domain("generator dimension differs from ambient".into()));
        }
    }
    let mut span = vec![eye(ambient_dim)];
    for g in generators {
        span.push(g.clone());
        span.push(g.adjoint());
    }
    let basis = vecs_to_mats(&orthonormal_span(&mats_to_vecs(&span), RANK_RTOL), ambient_dim);
    Ok(OperatorSystem {
        ambient_dim,
        basis,
    })
}

/// The unital C*-subalgebra of M_n generated by the given matrices:
/// iterate span <- span + span*span (with adjoints) until the dimension
/// stabilizes.  Terminates because the dimension is capped by n^2.
pub fn generated_star_algebra(ambient_dim: usize, generators: &[CMat]) -> Result<StarAlgebra> {
    let system = operator_system_span(ambient_dim, generators)?;
    let n = ambient_dim;
    let mut basis = system.basis;
    loop {
        let dim = basis.len();
        if dim == n * n {
            break;
        }
        let mut next: Vec<CVec> = mats_to_vecs(&basis);
        for a in &basis {
            for b in &basis {
                next.push(vec_of(&(a * b)));
            }
        }
        let new_basis = vecs_to_mats(&orthonormal_span(&next, RANK_RTOL), n);
        if new_basis.len() == dim {
            break;
        }
        basis = new_basis;
    }
    Ok(StarAlgebra {
        ambient_dim: n,
        basis,
        unit: eye(n),
    })
}

impl StarAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn as_system(&self) -> OperatorSystem {
        OperatorSystem {
            ambient_dim: self.ambient_dim,
            basis: self.basis.clone(),
        }
    }

    pub fn contains(&self, m: &CMat, tol: &Tolerance) -> bool {
        self.as_system().contains(m, tol)
    }

    /// Checks closure under product and adjoint, and that the unit acts as
    /// the identity on the span.
    pub fn verify(&self, tol: &Tolerance) -> Result<()> {
        let sys = self.as_system();
        sys.verify(tol)?;
        for a in &self.basis {
            if !sys.contains(&(a * a.adjoint()), tol) || !sys.contains(&(&self.unit * a), tol) {
                return Err(Error::Consistency("not closed under multiplication".into()));
            }
            if op_dist(&(&self.unit * a), a) > tol.eq_tol * (1.0 + operator_norm(a)) {
                return Err(Error::Consistency("unit does not act as identity".into()));
            }
            for b in &self.basis {
                if !sys.contains(&(a * b), tol) {
                    return Err(Error::Consistency("not closed under multiplication".into()));
                }
            }
        }
        Ok(())
    }

    /// Basis of the center {x in B : xb = bx for all b}, as coordinates
    /// turned back into matrices.
    fn center_basis(&self) -> Vec<CMat> {
        let n = self.ambient_dim;
        let d = self.dim();
        let mut m = numeric::zeros(d * n * n, d);
        for (j, bj) in self.basis.iter().enumerate() {
            for (k, bk) in self.basis.iter().enumerate() {
                let comm = vec_of(&(bj * bk - bk * bj));
                m.view_mut((k * n * n, j), (n * n, 1)).copy_from(&comm);
            }
        }
        // The basis is HS-orthonormal, so the natural scale of the
        // commutator map is 1; an all-roundoff matrix means a commutative
        // algebra, not a trivial center.
        numeric::nullspace_with_floor(&m, RANK_RTOL, 1.0)
            .iter()
            .map(|cvec| {
                let mut x = numeric::zeros(n, n);
                for (j, bj) in self.basis.iter().enumerate() {
                    x += bj * cvec[j];
                }
                x
            })
            .collect()
    }

    /// Minimal central projections, block dimensions and explicit block
    /// isomorphisms.  A generic self-adjoint central element is sampled from
    /// a fixed seed; on eigenvalue collision within 1e-6 it is re-sampled.
    pub fn block_decomposition(&self, tol: &Tolerance) -> Result<BlockStructure> {
        let n = self.ambient_dim;
        let center = self.center_basis();
        let num_blocks = {
            // Complex dimension of the center = number of blocks.
            orthonormal_span(&mats_to_vecs(&center), RANK_RTOL).len()
        };
        if num_blocks == 0 {
            return Err(Error::Numeric("center computation returned zero".into()));
        }
        // Real spanning family for the self-adjoint part of the center.
        let herm: Vec<CMat> = center
            .iter()
            .flat_map(|z| {
                [
                    (z + z.adjoint()) * cr(0.5),
                    (z - z.adjoint()) * numeric::c(0.0, -0.5),
                ]
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(BLOCK_SEED);
        let mut projections: Option<Vec<CMat>> = None;
        for _ in 0..MAX_GENERIC_RETRIES {
            let mut z = numeric::zeros(n, n);
            for h in &herm {
                z += h * cr(rng.gen::<f64>() - 0.5);
            }
            let (vals, _) = hermitian_eig(&z, tol)?;
            // Group eigenvalues; each group is one central value.
            let mut groups: Vec<(f64, usize)> = Vec::new();
            for &v in &vals {
                match groups.last_mut() {
                    Some((rep, count)) if (v - *rep).abs() <= COLLISION_TOL => *count += 1,
                    _ => groups.push((v, 1)),
                }
            }
            if groups.len() != num_blocks {
                continue; // collision: re-randomize
            }
            // Well-separated groups keep the interpolation below conditioned.
            let min_sep = groups
                .windows(2)
                .map(|w| w[1].0 - w[0].0)
                .fold(f64::INFINITY, f64::min);
            if num_blocks > 1 && min_sep < GROUP_SEPARATION_MIN {
                continue;
            }
            // Spectral projections as Lagrange polynomials in z: this stays
            // inside the algebra by construction and avoids eigenvectors,
            // which degenerate eigenvalues render unreliable.
            let ps: Vec<CMat> = groups
                .iter()
                .enumerate()
                .map(|(gi, &(vi, _))| {
                    let mut p = eye(n);
                    for (gj, &(vj, _)) in groups.iter().enumerate() {
                        if gi != gj {
                            p = p * (&z - eye(n) * cr(vj)) * cr(1.0 / (vi - vj));
                        }
                    }
                    p
                })
                .collect();
            projections = Some(ps);
            break;
        }
        let mut ps = projections.ok_or_else(|| {
            Error::Numeric("could not separate central spectrum after bounded retries".into())
        })?;
        // Deterministic ordering: by first diagonal index carrying the block.
        ps.sort_by_key(|p| {
            (0..n)
                .find(|&i| p[(i, i)].re > 0.5 / n as f64)
                .unwrap_or(n)
        });
        // Verify the projection family.
        let sum: CMat = ps.iter().fold(numeric::zeros(n, n), |acc, p| acc + p);
        if op_dist(&sum, &self.unit) > tol.eq_tol * (1.0 + n as f64) {
            return Err(Error::Consistency(
                "central projections do not sum to the unit".into(),
            ));
        }
        let sys = self.as_system();
        for p in &ps {
            let idem = op_dist(&(p * p), p);
            let span = sys.residual(p);
            if idem > tol.eq_tol || !sys.contains(p, tol) {
                return Err(Error::Consistency(format!(
                    "extracted central projection is not an idempotent of the algebra \
                     (idempotence {idem:.3e}, span residual {span:.3e})"
                )));
            }
        }
        // Block dimensions: dim(p B p) = d^2.
        let mut block_dims = Vec::new();
        for p in &ps {
            let compressed: Vec<CVec> = self.basis.iter().map(|b| vec_of(&(p * b * p))).collect();
            let sq = orthonormal_span(&compressed, RANK_RTOL).len();
            let d = (sq as f64).sqrt().round() as usize;
            if d * d != sq {
                return Err(Error::Consistency(format!(
                    "block has non-square dimension {sq}"
                )));
            }
            block_dims.push(d);
        }
        if block_dims.iter().map(|d| d * d).sum::<usize>() != self.dim() {
            return Err(Error::Consistency(
                "block dimensions do not account for the algebra dimension".into(),
            ));
        }
        // Explicit isometries onto M_{d_i}.
        let mut block_isometries = Vec::new();
        for (p, &d) in ps.iter().zip(&block_dims) {
            block_isometries.push(self.block_isometry(p, d, tol, &mut rng)?);
        }
        let bs = BlockStructure {
            central_projections: ps,
            block_dims,
            block_isometries,
        };
        self.verify_realization(&bs, tol)?;
        Ok(bs)
    }

    /// Isometry V with x -> V* x V a *-isomorphism of p B p onto M_d.
    /// The multiplicity space is split off with a minimal projection of the
    /// commutant of the compressed algebra.
    fn block_isometry(
        &self,
        p: &CMat,
        d: usize,
        tol: &Tolerance,
        rng: &mut ChaCha8Rng,
    ) -> Result<CMat> {
        let n = self.ambient_dim;
        let (vals, u) = hermitian_eig(p, tol)?;
        let range_idx: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
        let r = range_idx.len();
        let mut q = numeric::zeros(n, r);
        for (k, &i) in range_idx.iter().enumerate() {
            q.set_column(k, &u.column(i));
        }
        if r == d {
            return Ok(q); // multiplicity one
        }
        // Commutant of the compressed algebra inside M_r.
        let compressed: Vec<CMat> = self.basis.iter().map(|b| q.adjoint() * b * &q).collect();
        let mut m = numeric::zeros(compressed.len() * r * r, r * r);
        for (k, a) in compressed.iter().enumerate() {
            // x -> ax - xa as a superoperator on vec(x).
            let sup = numeric::kron(&eye(r), a) - numeric::kron(&a.transpose(), &eye(r));
            m.view_mut((k * r * r, 0), (r * r, r * r)).copy_from(&sup);
        }
        let comm = nullspace(&m, RANK_RTOL);
        for _ in 0..MAX_GENERIC_RETRIES {
            let mut z = numeric::zeros(r, r);
            for v in &comm {
                let x = unvec(v, r, r);
                z += (&x + x.adjoint()) * cr(rng.gen::<f64>() - 0.5);
                z += (&x - x.adjoint()) * numeric::c(0.0, rng.gen::<f64>() - 0.5);
            }
            let (vals, w) = hermitian_eig(&z, tol)?;
            // Eigengroup of the smallest eigenvalue; generically rank d.
            let lo = vals[0];
            let idx: Vec<usize> = (0..r).filter(|&i| vals[i] - lo <= COLLISION_TOL).collect();
            if idx.len() != d {
                continue;
            }
            let mut v = numeric::zeros(n, d);
            for (k, &i) in idx.iter().enumerate() {
                v.set_column(k, &(&q * w.column(i)));
            }
            return Ok(v);
        }
        Err(Error::Numeric(
            "could not extract a minimal commutant projection after bounded retries".into(),
        ))
    }

    fn verify_realization(&self, bs: &BlockStructure, tol: &Tolerance) -> Result<()> {
        let scale = 1.0 + self.basis.iter().map(operator_norm).fold(0.0, f64::max);
        for a in &self.basis {
            for b in &self.basis {
                let lhs = bs.realize(&(a * b));
                let rhs = bs.realize(a) * bs.realize(b);
                if op_dist(&lhs, &rhs) > tol.eq_tol * scale * scale {
                    return Err(Error::Consistency(
                        "block realization is not multiplicative".into(),
                    ));
                }
            }
            if op_dist(&bs.realize(&a.adjoint()), &bs.realize(a).adjoint()) > tol.eq_tol * scale {
                return Err(Error::Consistency(
                    "block realization is not *-preserving".into(),
                ));
            }
        }
        let total: usize = bs.block_dims.iter().sum();
        if op_dist(&bs.realize(&self.unit), &eye(total)) > tol.eq_tol * (1.0 + total as f64) {
            return Err(Error::Consistency("block realization is not unital".into()));
        }
        Ok(())
    }

    /// The ideal spanned by the selected central blocks.
    pub fn ideal_from_blocks(
        &self,
        bs: &BlockStructure,
        block_indices: &[usize],
    ) -> Result<Ideal> {
        let n = self.ambient_dim;
        let mut projection = numeric::zeros(n, n);
        for &i in block_indices {
            if i >= bs.num_blocks() {
                return Err(Error::Domain(format!("block index {i} out of range")));
            }
            projection += &bs.central_projections[i];
        }
        let vecs: Vec<CVec> = self.basis.iter().map(|b| vec_of(&(&projection * b))).collect();
        let basis = vecs_to_mats(&orthonormal_span(&vecs, RANK_RTOL), n);
        Ok(Ideal {
            block_indices: block_indices.to_vec(),
            projection,
            basis,
        })
    }

    /// All 2^k block-sum ideals (including 0 and B).
    pub fn list_ideals(&self, bs: &BlockStructure) -> Result<Vec<Ideal>> {
        let k = bs.num_blocks();
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0u32..(1 << k) {
            let idx: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
            out.push(self.ideal_from_blocks(bs, &idx)?);
        }
        Ok(out)
    }

    pub fn is_simple(&self, tol: &Tolerance) -> Result<bool> {
        Ok(self.block_decomposition(tol)?.num_blocks() == 1)
    }

    /// Checks that the span of `J` absorbs multiplication by the algebra.
    pub fn is_ideal(&self, j: &Ideal, tol: &Tolerance) -> bool {
        let jsys = OperatorSystem {
            ambient_dim: self.ambient_dim,
            basis: j.basis.clone(),
        };
        self.basis.iter().all(|b| {
            j.basis
                .iter()
                .all(|g| jsys.contains(&(b * g), tol) && jsys.contains(&(g * b), tol))
        })
    }

    /// Essentiality test: {x in B : xJ = 0} = {0}.
    pub fn is_essential_ideal(&self, j: &Ideal, tol: &Tolerance) -> Result<bool> {
        if !self.is_ideal(j, tol) {
            return Err(Error::Domain("given subspace is not an ideal".into()));
        }
        if j.is_zero() {
            return Ok(false);
        }
        let n = self.ambient_dim;
        let d = self.dim();
        // Right multiplication by each ideal basis element, restricted to B.
        let mut m = numeric::zeros(j.dim() * n * n, d);
        for (jb, g) in j.basis.iter().enumerate() {
            for (col, b) in self.basis.iter().enumerate() {
                let prod = vec_of(&(b * g));
                m.view_mut((jb * n * n, col), (n * n, 1)).copy_from(&prod);
            }
        }
        Ok(nullspace(&m, RANK_RTOL).is_empty())
    }

    /// Commutant of B inside the full matrix algebra equals the scalars.
    pub fn is_irreducible(&self) -> bool {
        let n = self.ambient_dim;
        let mut m = numeric::zeros(self.dim() * n * n, n * n);
        for (k, b) in self.basis.iter().enumerate() {
            let sup = numeric::kron(&eye(n), b) - numeric::kron(&b.transpose(), &eye(n));
            m.view_mut((k * n * n, 0), (n * n, n * n)).copy_from(&sup);
        }
        nullspace(&m, RANK_RTOL).len() == 1
    }

    /// The quotient B -> B/J as compression to the complementary central
    /// range.  J = B yields the zero algebra with pi = 0, flagged via
    /// [`IdealQuotient::is_zero`].
    pub fn quotient(&self, j: &Ideal, tol: &Tolerance) -> Result<IdealQuotient> {
        if !self.is_ideal(j, tol) {
            return Err(Error::Domain("quotient requires an ideal".into()));
        }
        let n = self.ambient_dim;
        let comp = &self.unit - &j.projection;
        let (vals, u) = hermitian_eig(&comp, tol)?;
        let range_idx: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
        let r = range_idx.len();
        let mut q = numeric::zeros(n, r);
        for (k, &i) in range_idx.iter().enumerate() {
            q.set_column(k, &u.column(i));
        }
        let qbasis = if r == 0 {
            vec![]
        } else {
            let images: Vec<CVec> = self
                .basis
                .iter()
                .map(|b| vec_of(&(q.adjoint() * b * &q)))
                .collect();
            vecs_to_mats(&orthonormal_span(&images, RANK_RTOL), r)
        };
        let quotient = StarAlgebra {
            ambient_dim: r,
            basis: qbasis,
            unit: eye(r),
        };
        let iq = IdealQuotient {
            parent: self.clone(),
            ideal: j.clone(),
            isometry: q,
            quotient,
        };
        // pi must be a unital *-homomorphism with kernel J.
        if !iq.is_zero() {
            let scale = 1.0 + self.basis.iter().map(operator_norm).fold(0.0, f64::max);
            for a in &self.basis {
                for b in &self.basis {
                    let dev = op_dist(&iq.apply(&(a * b)), &(iq.apply(a) * iq.apply(b)));
                    if dev > tol.eq_tol * scale * scale {
                        return Err(Error::Consistency(
                            "quotient map failed multiplicativity check".into(),
                        ));
                    }
                }
            }
        }
        Ok(iq)
    }
}

/// Intersection of two subspaces of M_n given by orthonormal bases,
/// returned as an orthonormal basis of matrices.
pub fn subspace_intersection(a: &OperatorSystem, b: &OperatorSystem) -> Vec<CMat> {
    assert_eq!(a.ambient_dim, b.ambient_dim);
    let n = a.ambient_dim;
    let nn = n * n;
    let proj = |sys: &OperatorSystem| -> CMat {
        let mut p = numeric::zeros(nn, nn);
        for m in &sys.basis {
            let v = vec_of(m);
            p += &v * v.adjoint();
        }
        p
    };
    let mut stacked = numeric::zeros(2 * nn, nn);
    stacked
        .view_mut((0, 0), (nn, nn))
        .copy_from(&(eye(nn) - proj(a)));
    stacked
        .view_mut((nn, 0), (nn, nn))
        .copy_from(&(eye(nn) - proj(b)));
    nullspace(&stacked, RANK_RTOL)
        .iter()
        .map(|v| unvec(v, n, n))
        .collect()
}

/// Convenience: the diagonal subalgebra of M_n.
pub fn diagonal_algebra(n: usize) -> StarAlgebra {
    StarAlgebra {
        ambient_dim: n,
        basis: (0..n).map(|i| matrix_unit(n, i, i)).collect(),
        unit: eye(n),
    }
}

/// Convenience: the full matrix algebra M_n with its matrix-unit basis.
pub fn full_matrix_algebra(n: usize) -> StarAlgebra {
    let mut basis = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            basis.push(matrix_unit(n, i, j));
        }
    }
    StarAlgebra {
        ambient_dim: n,
        basis,
        unit: eye(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn t() -> Tolerance {
        Tolerance::default()
    }

    /// Independent span-dimension oracle: Gram matrix rank of the raw family.
    fn span_dim_oracle(mats: &[CMat]) -> usize {
        let vs = mats_to_vecs(mats);
        let dim = vs[0].len();
        let mut m = numeric::zeros(dim, vs.len());
        for (j, v) in vs.iter().enumerate() {
            m.set_column(j, v);
        }
        numeric::rank(&m, RANK_RTOL)
    }

    #[test]
    fn span_empty_gives_scalars() {
        let s = operator_system_span(2, &[]).unwrap();
        assert_eq!(s.dim(), 1);
        s.verify(&t()).unwrap();
    }

    #[test]
    fn span_of_e12() {
        let g = matrix_unit(2, 0, 1);
        let s = operator_system_span(2, &[g.clone()]).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(span_dim_oracle(&[eye(2), g.clone(), g.adjoint()]), 3);
        assert!(s.contains(&g.adjoint(), &t()));
        s.verify(&t()).unwrap();
    }

    #[test]
    fn span_of_diag_is_diagonals() {
        let g = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(-1.0)]));
        let s = operator_system_span(2, &[g.clone()]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(span_dim_oracle(&[eye(2), g.clone(), g.adjoint()]), 2);
        assert!(s.contains(&matrix_unit(2, 0, 0), &t()));
        assert!(!s.contains(&matrix_unit(2, 0, 1), &t()));
    }

    /// Brute-force word enumeration up to the given length, with identity.
    fn word_span_dim(n: usize, gens: &[CMat], max_len: usize) -> usize {
        let mut letters: Vec<CMat> = gens.to_vec();
        letters.extend(gens.iter().map(|g| g.adjoint()));
        let mut words = vec![eye(n)];
        let mut frontier = vec![eye(n)];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for l in &letters {
                    next.push(w * l);
                }
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        span_dim_oracle(&words)
    }

    #[test]
    fn generated_by_identity_is_scalars() {
        let b = generated_star_algebra(3, &[eye(3)]).unwrap();
        assert_eq!(b.dim(), 1);
        b.verify(&t()).unwrap();
    }

    #[test]
    fn generated_by_e12_is_full() {
        let g = matrix_unit(2, 0, 1);
        let b = generated_star_algebra(2, &[g.clone()]).unwrap();
        assert_eq!(b.dim(), 4);
        assert_eq!(word_span_dim(2, &[g], 4), 4);
        b.verify(&t()).unwrap();
    }

    #[test]
    fn generated_by_diag_unitary_is_diagonal() {
        let g = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), numeric::c(0.0, 1.0)]));
        let b = generated_star_algebra(2, &[g.clone()]).unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(word_span_dim(2, &[g], 4), 2);
    }

    #[test]
    fn blocks_of_full_matrix_algebra() {
        let b = full_matrix_algebra(2);
        let bs = b.block_decomposition(&t()).unwrap();
        assert_eq!(bs.block_dims, vec![2]);
        assert!(b.is_simple(&t()).unwrap());
    }

    #[test]
    fn blocks_of_diagonal_algebra() {
        let b = diagonal_algebra(2);
        let bs = b.block_decomposition(&t()).unwrap();
        assert_eq!(bs.block_dims, vec![1, 1]);
        // Commutant oracle: a diagonal algebra in M_2 is its own commutant,
        // so the minimal central projections are the diagonal matrix units.
        for (p, unit_idx) in bs.central_projections.iter().zip([0usize, 1]) {
            assert!(op_dist(p, &matrix_unit(2, unit_idx, unit_idx)) < 1e-8);
        }
    }

    /// M_2 + C embedded block-diagonally in M_3.
    fn m2_plus_c() -> StarAlgebra {
        let mut basis = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                basis.push(matrix_unit(3, i, j));
            }
        }
        basis.push(matrix_unit(3, 2, 2));
        StarAlgebra {
            ambient_dim: 3,
            basis,
            unit: eye(3),
        }
    }

    #[test]
    fn blocks_of_m2_plus_c() {
        let b = m2_plus_c();
        let bs = b.block_decomposition(&t()).unwrap();
        assert_eq!(bs.block_dims, vec![2, 1]);
        // Explicit-projection oracle.
        let p1 = matrix_unit(3, 0, 0) + matrix_unit(3, 1, 1);
        let p2 = matrix_unit(3, 2, 2);
        assert!(op_dist(&bs.central_projections[0], &p1) < 1e-8);
        assert!(op_dist(&bs.central_projections[1], &p2) < 1e-8);
    }

    #[test]
    fn ideals_and_essentiality() {
        let b = full_matrix_algebra(2);
        let bs = b.block_decomposition(&t()).unwrap();
        let ideals = b.list_ideals(&bs).unwrap();
        assert_eq!(ideals.len(), 2);
        let whole = &ideals[1];
        assert!(b.is_essential_ideal(whole, &t()).unwrap());
        assert!(b.is_simple(&t()).unwrap());

        let b = m2_plus_c();
        let bs = b.block_decomposition(&t()).unwrap();
        // J = M_2 + 0 is annihilated by (0, 1), hence not essential.
        let j = b.ideal_from_blocks(&bs, &[0]).unwrap();
        assert_eq!(j.dim(), 4);
        assert!(!b.is_essential_ideal(&j, &t()).unwrap());
        // Direct annihilator oracle: (0,1) kills J.
        let x = matrix_unit(3, 2, 2);
        for g in &j.basis {
            assert!(operator_norm(&(&x * g)) < 1e-12);
        }
        // J = B is essential but B is not simple.
        let whole = b.ideal_from_blocks(&bs, &[0, 1]).unwrap();
        assert!(b.is_essential_ideal(&whole, &t()).unwrap());
        assert!(!b.is_simple(&t()).unwrap());
    }

    #[test]
    fn non_ideal_rejected() {
        let b = full_matrix_algebra(2);
        let j = Ideal {
            block_indices: vec![],
            projection: matrix_unit(2, 0, 0),
            basis: vec![matrix_unit(2, 0, 0)],
        };
        assert!(b.is_essential_ideal(&j, &t()).is_err());
    }

    #[test]
    fn irreducibility() {
        assert!(full_matrix_algebra(2).is_irreducible());
        assert!(!diagonal_algebra(2).is_irreducible());
        // Scalars in M_3.
        let scalars = generated_star_algebra(3, &[]).unwrap();
        assert!(!scalars.is_irreducible());
    }

    #[test]
    fn quotient_m2_plus_c_by_m2() {
        let b = m2_plus_c();
        let bs = b.block_decomposition(&t()).unwrap();
        let j = b.ideal_from_blocks(&bs, &[0]).unwrap();
        let q = b.quotient(&j, &t()).unwrap();
        assert!(!q.is_zero());
        // Block-deletion oracle: the quotient is the scalar block.
        assert_eq!(q.quotient.ambient_dim, 1);
        assert_eq!(q.quotient.dim(), 1);
        // Kernel contains J.
        for g in &j.basis {
            assert!(operator_norm(&q.apply(g)) < 1e-10);
        }
    }

    #[test]
    fn quotient_by_whole_algebra_is_zero() {
        let b = full_matrix_algebra(2);
        let bs = b.block_decomposition(&t()).unwrap();
        let j = b.ideal_from_blocks(&bs, &[0]).unwrap();
        let q = b.quotient(&j, &t()).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn quotient_by_zero_is_identity() {
        let b = m2_plus_c();
        let bs = b.block_decomposition(&t()).unwrap();
        let j = b.ideal_from_blocks(&bs, &[]).unwrap();
        let q = b.quotient(&j, &t()).unwrap();
        for g in &b.basis {
            assert!(op_dist(&q.section(&q.apply(g)), g) < 1e-10);
        }
    }

    #[test]
    fn subspace_intersection_diagonals() {
        let a = operator_system_span(2, &[matrix_unit(2, 0, 1)]).unwrap();
        let b = diagonal_algebra(2).as_system();
        let inter = subspace_intersection(&a, &b);
        // span{I, e12, e21} meets the diagonals in the scalars.
        assert_eq!(inter.len(), 1);
    }

    fn random_algebra(n: usize, gens: usize, seed: u64) -> StarAlgebra {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<CMat> = (0..gens)
            .map(|_| {
                CMat::from_fn(n, n, |_, _| {
                    numeric::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                })
            })
            .collect();
        generated_star_algebra(n, &g).unwrap()
    }

    /// A seeded block-diagonal algebra with random block pattern.
    fn random_block_algebra(seed: u64) -> StarAlgebra {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb10c);
        let patterns: [&[usize]; 4] = [&[2, 1], &[1, 1], &[2, 2], &[1, 1, 2]];
        let dims = patterns[rng.gen_range(0..patterns.len())];
        let n: usize = dims.iter().sum();
        let mut basis = Vec::new();
        let mut off = 0;
        for &d in dims {
            for i in 0..d {
                for j in 0..d {
                    basis.push(matrix_unit(n, off + i, off + j));
                }
            }
            off += d;
        }
        StarAlgebra {
            ambient_dim: n,
            basis,
            unit: eye(n),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn generation_is_idempotent(seed in 0u64..100, n in 2usize..=4) {
            let b = random_algebra(n, 1, seed);
            let again = generated_star_algebra(n, &b.basis).unwrap();
            prop_assert_eq!(b.dim(), again.dim());
        }

        #[test]
        fn block_dims_square_sum(seed in 0u64..100) {
            let b = random_block_algebra(seed);
            let bs = b.block_decomposition(&t()).unwrap();
            let sq: usize = bs.block_dims.iter().map(|d| d * d).sum();
            prop_assert_eq!(sq, b.dim());
        }

        #[test]
        fn ideals_absorb(seed in 0u64..50) {
            let b = random_block_algebra(seed);
            let bs = b.block_decomposition(&t()).unwrap();
            for j in b.list_ideals(&bs).unwrap() {
                prop_assert!(b.is_ideal(&j, &t()));
            }
        }

        #[test]
        fn quotient_section_consistency(seed in 0u64..50) {
            let b = random_block_algebra(seed);
            let bs = b.block_decomposition(&t()).unwrap();
            let j = b.ideal_from_blocks(&bs, &[0]).unwrap();
            let q = b.quotient(&j, &t()).unwrap();
            if !q.is_zero() {
                for g in &b.basis {
                    let pi_g = q.apply(g);
                    prop_assert!(op_dist(&q.apply(&q.section(&pi_g)), &pi_g) < 1e-8);
                }
            }
        }
    }
}
