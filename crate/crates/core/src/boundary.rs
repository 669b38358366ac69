//! Fixed-point systems of UCP maps, the ergodic projection onto them, the
//! Choi–Effros product making the fixed points a C*-algebra, and the
//! symbol homomorphism on the multiplicative domain.
//!
//! The ergodic idempotent is computed twice: a spectral projection of the
//! superoperator onto its eigenvalue-1 eigenspace (primary), and a Cesàro
//! average of channel powers accelerated by repeated doubling
//! (cross-check).  The two must agree within `eq_tol`; their residuals are
//! recorded in the provenance.

use serde::Serialize;

use crate::cpmap::{multiplicative_domain, ChannelMap};
use crate::matalg::{subspace_intersection, OperatorSystem, StarAlgebra};
use crate::numeric::{
    self, cr, eye, inv_sqrt, min_eig_with_vec, nullspace, op_dist, operator_norm,
    orthonormal_span, unvec, vec_of, CMat, CVec, Tolerance, RANK_RTOL,
};
use crate::{Error, Result};

/// The operator system of fixed points {x : phi(x) = x}.
#[derive(Debug, Clone)]
pub struct FixedPointSystem {
    pub system: OperatorSystem,
}

impl FixedPointSystem {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }
}

/// How the ergodic idempotent was obtained and how well it checks out.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicProvenance {
    /// Cesàro doubling steps performed.
    pub cesaro_iterations: usize,
    /// Successive Cesàro differences, one per doubling step.
    pub cesaro_residuals: Vec<f64>,
    /// Distance between the spectral and Cesàro constructions.
    pub method_agreement: f64,
    /// || phi o psi - psi || and || psi o phi - psi ||.
    pub eq1_residual: f64,
    /// max over fixed-point basis of || psi(b) - b ||.
    pub eq2_residual: f64,
    /// || psi^2 - psi ||.
    pub idempotence_residual: f64,
}

/// The UCP idempotent from M_n onto the fixed points of a UCP map.
#[derive(Debug, Clone)]
pub struct ErgodicProjection {
    pub psi: ChannelMap,
    pub provenance: ErgodicProvenance,
}

const CESARO_MAX_DOUBLINGS: usize = 80;

pub fn fixed_point_system(phi: &ChannelMap, tol: &Tolerance) -> Result<FixedPointSystem> {
    require_ucp(phi, tol)?;
    let n = phi.in_dim;
    let kernel = nullspace(&(&phi.superop - eye(n * n)), RANK_RTOL);
    if kernel.is_empty() {
        return Err(Error::Consistency(
            "UCP map has no fixed points; the identity must be fixed".into(),
        ));
    }
    let system = OperatorSystem {
        ambient_dim: n,
        basis: kernel.iter().map(|v| unvec(v, n, n)).collect(),
    };
    system.verify(tol)?;
    for b in &system.basis {
        if op_dist(&phi.apply(b), b) > tol.eq_tol * (1.0 + operator_norm(b)) {
            return Err(Error::Consistency("fixed-point basis element moves under phi".into()));
        }
    }
    Ok(FixedPointSystem { system })
}

fn require_ucp(phi: &ChannelMap, tol: &Tolerance) -> Result<()> {
    if !phi.is_square() {
        return Err(Error::Domain("square channel required".into()));
    }
    let v = phi.is_ucp(tol)?;
    if !v.is_ucp() {
        return Err(Error::Domain(format!(
            "channel is not UCP (cp: {}, unital residual {:.3e})",
            v.cp, v.unital_residual
        )));
    }
    Ok(())
}

/// Spectral projection of the superoperator onto ker(S - I) along
/// range(S - I).  For a UCP map the peripheral spectrum is semisimple, so
/// these two subspaces are complementary; anything else is flagged.
fn spectral_projection(phi: &ChannelMap) -> Result<CMat> {
    let nn = phi.in_dim * phi.in_dim;
    let shifted = &phi.superop - eye(nn);
    let kernel = nullspace(&shifted, RANK_RTOL);
    let cols: Vec<CVec> = (0..nn).map(|j| shifted.column(j).into_owned()).collect();
    let range = orthonormal_span(&cols, RANK_RTOL);
    if kernel.len() + range.len() != nn {
        return Err(Error::Consistency(format!(
            "eigenvalue 1 of the superoperator is not semisimple (kernel {}, range {})",
            kernel.len(),
            range.len()
        )));
    }
    let mut basis = CMat::zeros(nn, nn);
    for (j, v) in kernel.iter().chain(range.iter()).enumerate() {
        basis.set_column(j, v);
    }
    let inv = basis.clone().lu().try_inverse().ok_or_else(|| {
        Error::Numeric("kernel/range basis of the superoperator is singular".into())
    })?;
    let mut selector = CMat::zeros(nn, nn);
    for i in 0..kernel.len() {
        selector[(i, i)] = cr(1.0);
    }
    Ok(basis * selector * inv)
}

/// Cesàro averages over 2^k channel powers via the doubling identity
/// A_{k+1} = (I + S^{2^k})/2 * A_k, stopping when successive averages
/// differ by at most `eq_tol / 10`.
fn cesaro_projection(phi: &ChannelMap, tol: &Tolerance) -> Result<(CMat, usize, Vec<f64>)> {
    let nn = phi.in_dim * phi.in_dim;
    let mut avg = eye(nn);
    let mut pow = phi.superop.clone();
    let mut residuals = Vec::new();
    // Repeated squaring amplifies rounding error doubly fast once the powers
    // have settled, so successive residuals eventually turn around and grow.
    // Keep the best iterate and stop as soon as the turnaround is clear.
    let mut best = avg.clone();
    let mut best_res = f64::INFINITY;
    let mut best_iter = 0;
    for k in 0..CESARO_MAX_DOUBLINGS {
        let next = (eye(nn) + &pow) * avg.clone() * cr(0.5);
        let diff = op_dist(&next, &avg);
        residuals.push(diff);
        avg = next;
        if diff < best_res {
            best_res = diff;
            best = avg.clone();
            best_iter = k + 1;
        }
        if diff <= tol.eq_tol / 10.0 {
            return Ok((avg, k + 1, residuals));
        }
        // Peripheral spectrum makes the residuals oscillate, with dips a
        // handful of doublings apart, so stop only after a long stretch
        // without improvement or on outright divergence.
        if !diff.is_finite() || diff > 1e6 || k + 1 - best_iter >= 16 {
            break;
        }
        pow = &pow * &pow;
    }
    // The doubling floor leaves a mostly transverse (non-idempotent) error,
    // which the Newton iteration P <- 3P^2 - 2P^3 removes quadratically.
    if best_res.is_finite() && best_res < 1e-2 {
        for _ in 0..3 {
            let sq = &best * &best;
            let next = &sq * cr(3.0) - sq * &best * cr(2.0);
            let moved = op_dist(&next, &best);
            best = next;
            if moved <= 1e-15 {
                break;
            }
        }
    }
    // Quality is judged by invariance under the channel, which does not
    // reference the spectral construction.
    let inv = op_dist(&(&phi.superop * &best), &best).max(op_dist(&(&best * &phi.superop), &best));
    if inv <= 10.0 * tol.eq_tol {
        return Ok((best, best_iter, residuals));
    }
    Err(Error::Numeric(format!(
        "Cesàro averages did not settle after {} doublings (best residual {best_res:.3e}, invariance {inv:.3e})",
        residuals.len()
    )))
}

pub fn ergodic_projection(phi: &ChannelMap, tol: &Tolerance) -> Result<ErgodicProjection> {
    require_ucp(phi, tol)?;
    let n = phi.in_dim;
    let spectral = spectral_projection(phi)?;
    let (cesaro, iters, residuals) = cesaro_projection(phi, tol)?;
    let agreement = op_dist(&spectral, &cesaro);
    // The Cesàro iterate carries an intrinsic error on the order of its best
    // successive residual, so the cross-check tolerance must not be tighter.
    let cesaro_floor = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
    if agreement > tol.eq_tol.max(10.0 * cesaro_floor) {
        return Err(Error::Consistency(format!(
            "spectral and Cesàro projections disagree by {agreement:.3e}"
        )));
    }
    let psi = ChannelMap::from_superop(n, n, spectral)?;
    let eq1 = op_dist(&(&phi.superop * &psi.superop), &psi.superop)
        .max(op_dist(&(&psi.superop * &phi.superop), &psi.superop));
    let fixed = fixed_point_system(phi, tol)?;
    let eq2 = fixed
        .system
        .basis
        .iter()
        .map(|b| op_dist(&psi.apply(b), b))
        .fold(0.0, f64::max);
    let idem = op_dist(&(&psi.superop * &psi.superop), &psi.superop);
    let v = psi.is_ucp(tol)?;
    if !v.is_ucp() {
        return Err(Error::Consistency(
            "ergodic projection failed its own UCP certificate".into(),
        ));
    }
    let scale = tol.eq_tol * 10.0;
    if eq1 > scale || eq2 > scale || idem > scale {
        return Err(Error::Consistency(format!(
            "ergodic projection residuals too large (eq1 {eq1:.3e}, eq2 {eq2:.3e}, idem {idem:.3e})"
        )));
    }
    Ok(ErgodicProjection {
        psi,
        provenance: ErgodicProvenance {
            cesaro_iterations: iters,
            cesaro_residuals: residuals,
            method_agreement: agreement,
            eq1_residual: eq1,
            eq2_residual: eq2,
            idempotence_residual: idem,
        },
    })
}

/// x o y := psi(xy) for x, y in the range of psi.
pub fn choi_effros_product(
    psi: &ChannelMap,
    x: &CMat,
    y: &CMat,
    tol: &Tolerance,
) -> Result<CMat> {
    for (name, m) in [("x", x), ("y", y)] {
        if op_dist(&psi.apply(m), m) > tol.eq_tol * (1.0 + operator_norm(m)) {
            return Err(Error::Domain(format!(
                "choi_effros_product: operand {name} is not in the range of psi"
            )));
        }
    }
    Ok(psi.apply(&(x * y)))
}

/// The fixed-point system with the Choi–Effros product, together with a
/// faithful realization as a block-sum matrix algebra.
#[derive(Debug, Clone)]
pub struct PoissonBoundaryAlgebra {
    pub fixed: FixedPointSystem,
    pub ergodic: ErgodicProjection,
    /// Structure constants: coords of psi(b_i b_j) in the fixed basis.
    pub structure: Vec<Vec<Vec<numeric::C64>>>,
    /// Left-multiplication matrices in a trace-orthonormal basis; a faithful
    /// *-representation of the boundary on its own coordinate space.
    left_regular: Vec<CMat>,
    /// Block structure of the represented algebra.
    pub blocks: crate::matalg::BlockStructure,
}

impl PoissonBoundaryAlgebra {
    pub fn dim(&self) -> usize {
        self.fixed.dim()
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.blocks.block_dims
    }

    /// The left-regular matrix of an element of the fixed-point system.
    fn left_matrix(&self, x: &CMat) -> CMat {
        let coords = self.fixed.system.coords(x);
        let d = self.dim();
        let mut l = CMat::zeros(d, d);
        for (i, c) in coords.iter().enumerate() {
            l += &self.left_regular[i] * *c;
        }
        l
    }

    /// *-isomorphism of (M^phi, o) onto the block-sum matrix algebra.
    pub fn realize(&self, x: &CMat) -> CMat {
        self.blocks.realize(&self.left_matrix(x))
    }

    /// Realization of a k x k matrix over the boundary, entry by entry.
    pub fn realize_block(&self, entries: &[Vec<CMat>]) -> CMat {
        let k = entries.len();
        let d: usize = self.blocks.block_dims.iter().sum();
        let mut out = CMat::zeros(k * d, k * d);
        for (p, row) in entries.iter().enumerate() {
            for (q, x) in row.iter().enumerate() {
                out.view_mut((p * d, q * d), (d, d)).copy_from(&self.realize(x));
            }
        }
        out
    }
}

pub fn boundary_algebra(phi: &ChannelMap, tol: &Tolerance) -> Result<PoissonBoundaryAlgebra> {
    let ergodic = ergodic_projection(phi, tol)?;
    let fixed = fixed_point_system(phi, tol)?;
    let psi = ergodic.psi.clone();
    let psi = &psi;
    let d = fixed.dim();
    let basis = &fixed.system.basis;

    // Structure constants of x o y = psi(xy), with a residual check that the
    // products land back in the fixed-point span.
    let mut structure = vec![vec![Vec::new(); d]; d];
    for i in 0..d {
        for j in 0..d {
            let prod = psi.apply(&(&basis[i] * &basis[j]));
            let res = fixed.system.residual(&prod);
            if res > tol.eq_tol * (1.0 + operator_norm(&prod)) {
                return Err(Error::Consistency(format!(
                    "Choi–Effros product leaves the fixed-point span (residual {res:.3e})"
                )));
            }
            structure[i][j] = fixed.system.coords(&prod);
        }
    }

    // C*-axioms on the basis: associativity and involution compatibility.
    let scale = 1.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let ij = psi.apply(&(&basis[i] * &basis[j]));
                let jk = psi.apply(&(&basis[j] * &basis[k]));
                let lhs = psi.apply(&(ij * &basis[k]));
                let rhs = psi.apply(&(&basis[i] * jk));
                if op_dist(&lhs, &rhs) > 1e-7 * (1.0 + scale) {
                    return Err(Error::Consistency(
                        "Choi–Effros product failed associativity".into(),
                    ));
                }
            }
            let star_lhs = psi.apply(&(&basis[i] * &basis[j])).adjoint();
            let star_rhs = psi.apply(&(basis[j].adjoint() * basis[i].adjoint()));
            if op_dist(&star_lhs, &star_rhs) > 1e-7 {
                return Err(Error::Consistency(
                    "Choi–Effros product failed involution compatibility".into(),
                ));
            }
        }
    }

    // Faithful trace tau = trace of left multiplication; Gram matrix of
    // tau(x* o y) must be positive definite for a C*-algebra.
    let left_in_fixed_basis: Vec<CMat> = (0..d)
        .map(|i| {
            let mut l = CMat::zeros(d, d);
            for j in 0..d {
                for k in 0..d {
                    l[(k, j)] = structure[i][j][k];
                }
            }
            l
        })
        .collect();
    let tau = |x: &CMat| -> numeric::C64 {
        let coords = fixed.system.coords(x);
        let mut t = cr(0.0);
        for (i, c) in coords.iter().enumerate() {
            t += left_in_fixed_basis[i].trace() * *c;
        }
        t
    };
    let mut gram = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            gram[(i, j)] = tau(&psi.apply(&(basis[i].adjoint() * &basis[j])));
        }
    }
    let gram = (&gram + gram.adjoint()) * cr(0.5);
    let ginv_sqrt = inv_sqrt(&gram, tol).map_err(|e| {
        Error::Consistency(format!("Choi–Effros trace form is not positive definite: {e}"))
    })?;
    let gsqrt = ginv_sqrt.clone().lu().try_inverse().ok_or_else(|| {
        Error::Numeric("Gram square root is singular".into())
    })?;

    // In the tau-orthonormal basis the left-regular representation is a
    // *-representation: conjugate the coordinate matrices accordingly.
    let left_regular: Vec<CMat> = left_in_fixed_basis
        .iter()
        .map(|l| &gsqrt * l * &ginv_sqrt)
        .collect();

    // The represented algebra, fed to the block machinery.
    let rep_mats: Vec<CMat> = left_regular.clone();
    let rep_vecs: Vec<CVec> = rep_mats.iter().map(vec_of).collect();
    let rep_basis: Vec<CMat> = orthonormal_span(&rep_vecs, RANK_RTOL)
        .iter()
        .map(|v| unvec(v, d, d))
        .collect();
    if rep_basis.len() != d {
        return Err(Error::Consistency(format!(
            "left-regular representation is not faithful ({} of {d} dimensions)",
            rep_basis.len()
        )));
    }
    let rep_algebra = StarAlgebra {
        ambient_dim: d,
        basis: rep_basis,
        unit: eye(d),
    };
    rep_algebra.verify(tol).map_err(|e| {
        Error::Consistency(format!("represented boundary is not a *-algebra: {e}"))
    })?;
    let blocks = rep_algebra.block_decomposition(tol)?;
    if blocks.algebra_dim() != d {
        return Err(Error::Consistency(
            "boundary block dimensions do not sum to the fixed-point dimension".into(),
        ));
    }

    let out = PoissonBoundaryAlgebra {
        fixed,
        ergodic,
        structure,
        left_regular,
        blocks,
    };
    certify_realization(&out, psi, tol)?;
    Ok(out)
}

/// The realization must be a unital *-homomorphism for the Choi–Effros
/// product, verified on all basis pairs.
fn certify_realization(
    b: &PoissonBoundaryAlgebra,
    psi: &ChannelMap,
    tol: &Tolerance,
) -> Result<()> {
    let basis = &b.fixed.system.basis;
    let n = b.fixed.system.ambient_dim;
    for x in basis {
        for y in basis {
            let prod = psi.apply(&(x * y));
            let dev = op_dist(&b.realize(&prod), &(b.realize(x) * b.realize(y)));
            if dev > 1e-7 {
                return Err(Error::Consistency(format!(
                    "boundary realization not multiplicative (deviation {dev:.3e})"
                )));
            }
        }
        let dev = op_dist(&b.realize(&x.adjoint()), &b.realize(x).adjoint());
        if dev > 1e-7 {
            return Err(Error::Consistency(
                "boundary realization not *-preserving".into(),
            ));
        }
    }
    let total: usize = b.blocks.block_dims.iter().sum();
    if op_dist(&b.realize(&eye(n)), &eye(total)) > tol.eq_tol * (1.0 + total as f64) {
        return Err(Error::Consistency("boundary realization not unital".into()));
    }
    Ok(())
}

/// The symbol homomorphism rho = psi restricted to C = B n mult(psi),
/// with its kernel and the semisplit certificate.
#[derive(Debug, Clone)]
pub struct SymbolMap {
    /// mult(psi) inside the ambient matrix algebra.
    pub mult_domain: StarAlgebra,
    /// C = B n mult(psi).
    pub domain: StarAlgebra,
    /// Basis of Ker(rho) = C n Ker(psi).
    pub kernel_basis: Vec<CMat>,
    /// max residual of psi(xy) = psi(psi(x) psi(y)) over basis pairs of C.
    pub homomorphism_residual: f64,
    /// max residual of rho(b) = b over the basis of M^phi n B.
    pub semisplit_residual: f64,
    /// Claim: fixed points lie in mult(psi).
    pub fixed_in_mult_residual: f64,
    /// Claim: phi maps mult(psi) into itself.
    pub mult_invariance_residual: f64,
}

pub fn symbol_map(b: &StarAlgebra, phi: &ChannelMap, tol: &Tolerance) -> Result<SymbolMap> {
    require_ucp(phi, tol)?;
    let n = phi.in_dim;
    if b.ambient_dim != n {
        return Err(Error::Domain("algebra and channel dimensions differ".into()));
    }
    for g in &b.basis {
        if !b.contains(&phi.apply(g), tol) {
            return Err(Error::Domain("phi does not map B into itself".into()));
        }
    }
    let ergodic = ergodic_projection(phi, tol)?;
    let psi = &ergodic.psi;
    let fixed = fixed_point_system(phi, tol)?;

    // Multiplicative domain of psi as a map into the Choi–Effros algebra.
    let mult = multiplicative_domain(psi, None, Some(psi), tol)?;
    let mult_sys = mult.as_system();

    // Claim checks: M^phi subset of mult(psi), phi(mult(psi)) subset of it.
    let fixed_in_mult = fixed
        .system
        .basis
        .iter()
        .map(|x| mult_sys.residual(x))
        .fold(0.0, f64::max);
    let mult_invariance = mult
        .basis
        .iter()
        .map(|y| mult_sys.residual(&phi.apply(y)))
        .fold(0.0, f64::max);
    if fixed_in_mult > 1e-7 || mult_invariance > 1e-7 {
        return Err(Error::Consistency(format!(
            "multiplicative-domain claims failed (fixed-in-mult {fixed_in_mult:.3e}, invariance {mult_invariance:.3e})"
        )));
    }

    // C = B n mult(psi), as a *-algebra.
    let inter = subspace_intersection(&b.as_system(), &mult_sys);
    let domain = StarAlgebra {
        ambient_dim: n,
        basis: inter,
        unit: eye(n),
    };
    domain.verify(tol).map_err(|e| {
        Error::Consistency(format!("B n mult(psi) failed the algebra axioms: {e}"))
    })?;

    // rho is a *-homomorphism into the boundary.
    let mut hom_res: f64 = 0.0;
    for x in &domain.basis {
        for y in &domain.basis {
            let lhs = psi.apply(&(x * y));
            let rhs = psi.apply(&(psi.apply(x) * psi.apply(y)));
            hom_res = hom_res.max(op_dist(&lhs, &rhs));
        }
    }
    if hom_res > 1e-7 {
        return Err(Error::Consistency(format!(
            "rho failed multiplicativity on C (residual {hom_res:.3e})"
        )));
    }

    // Kernel of rho: elements of C annihilated by psi.
    let dc = domain.dim();
    let kernel_basis = if dc == 0 {
        vec![]
    } else {
        let nn = n * n;
        let mut m = CMat::zeros(nn, dc);
        for (j, cb) in domain.basis.iter().enumerate() {
            m.set_column(j, &vec_of(&psi.apply(cb)));
        }
        nullspace(&m, RANK_RTOL)
            .iter()
            .map(|coef| {
                let mut x = numeric::zeros(n, n);
                for (j, cb) in domain.basis.iter().enumerate() {
                    x += cb * coef[j];
                }
                x
            })
            .collect()
    };

    // Semisplit certificate: rho restricted to M^phi n B is the identity.
    let fixed_in_b = subspace_intersection(&fixed.system, &b.as_system());
    let semisplit = fixed_in_b
        .iter()
        .map(|x| op_dist(&psi.apply(x), x))
        .fold(0.0, f64::max);

    Ok(SymbolMap {
        mult_domain: mult,
        domain,
        kernel_basis,
        homomorphism_residual: hom_res,
        semisplit_residual: semisplit,
        fixed_in_mult_residual: fixed_in_mult,
        mult_invariance_residual: mult_invariance,
    })
}

/// JSON summary of a boundary analysis, as emitted by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryReport {
    pub ambient_dim: usize,
    pub fixed_point_dim: usize,
    pub boundary_blocks: Vec<usize>,
    pub ergodic: ErgodicProvenance,
    pub mult_domain_dim: usize,
    pub symbol_domain_dim: usize,
    pub symbol_kernel_dim: usize,
    pub homomorphism_residual: f64,
    pub semisplit_residual: f64,
    pub fixed_in_mult_residual: f64,
    pub mult_invariance_residual: f64,
}

/// Run the full boundary pipeline for a channel on the ambient algebra.
pub fn analyze(phi: &ChannelMap, tol: &Tolerance) -> Result<(PoissonBoundaryAlgebra, SymbolMap, BoundaryReport)> {
    let algebra = boundary_algebra(phi, tol)?;
    let ambient = crate::matalg::full_matrix_algebra(phi.in_dim);
    let sym = symbol_map(&ambient, phi, tol)?;
    let report = BoundaryReport {
        ambient_dim: phi.in_dim,
        fixed_point_dim: algebra.dim(),
        boundary_blocks: algebra.block_dims().to_vec(),
        ergodic: algebra.ergodic.provenance.clone(),
        mult_domain_dim: sym.mult_domain.dim(),
        symbol_domain_dim: sym.domain.dim(),
        symbol_kernel_dim: sym.kernel_basis.len(),
        homomorphism_residual: sym.homomorphism_residual,
        semisplit_residual: sym.semisplit_residual,
        fixed_in_mult_residual: sym.fixed_in_mult_residual,
        mult_invariance_residual: sym.mult_invariance_residual,
    };
    Ok((algebra, sym, report))
}

/// Smallest ambient eigenvalue of a self-adjoint k x k matrix over M_n
/// given entry-wise; used by the complete-order-isomorphism checks.
pub fn block_min_eig(entries: &[Vec<CMat>], tol: &Tolerance) -> Result<f64> {
    let k = entries.len();
    let n = entries[0][0].nrows();
    let mut big = CMat::zeros(k * n, k * n);
    for (p, row) in entries.iter().enumerate() {
        for (q, x) in row.iter().enumerate() {
            big.view_mut((p * n, q * n), (n, n)).copy_from(x);
        }
    }
    let (min, _) = min_eig_with_vec(&big, tol)?;
    Ok(min)
}
