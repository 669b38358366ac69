//! Semidefinite feasibility for UCP interpolation problems.
//!
//! Everything reduces to one primitive: is the intersection of the cone of
//! PSD Hermitian matrices with an affine subspace non-empty?  We solve it
//! with alternating projections — eigenvalue clipping against the cone,
//! a precomputed least-squares step against the affine part — declaring
//! infeasibility when the gap between the two projections stalls at a
//! positive value.  On top of that sit existence of UCP maps with
//! prescribed values (Choi-matrix constraints), uniqueness certification by
//! probing linear functionals, and the complete-isometry test for
//! compressions of operator systems.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpmap::ChannelMap;
use crate::matalg::OperatorSystem;
use crate::numeric::{
    c, cr, eye, hermitian_eig, kron, matrix_unit, orthonormal_span, vec_of, CMat, Tolerance,
    RANK_RTOL,
};
use crate::{Error, Result};

pub type RVec = DVector<f64>;
pub type RMat = DMatrix<f64>;

/// Knobs for the feasibility solver and the uniqueness probes.
#[derive(Debug, Clone)]
pub struct SdpOptions {
    /// Gap below which a point counts as feasible.
    pub feas_tol: f64,
    /// Two-sided movement below which an interpolation problem counts as
    /// uniquely solvable.
    pub unique_tol: f64,
    /// Iteration budget per feasibility solve.
    pub max_iter: usize,
    /// Iterations between stall checks.
    pub stall_window: usize,
    /// Seed for the random uniqueness probes.
    pub seed: u64,
    /// Stop measuring movements once some probe certifies a gap this
    /// large (None = measure every probe).
    pub stop_gap: Option<f64>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            feas_tol: 1e-7,
            unique_tol: 1e-5,
            max_iter: 200_000,
            stall_window: 1_000,
            seed: 0x0cf1_57a7,
            stop_gap: None,
        }
    }
}

/// Outcome of a feasibility solve.
#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(CMat),
    Infeasible { gap: f64 },
    Inconclusive { gap: f64 },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn is_conclusive(&self) -> bool {
        !matches!(self, Feasibility::Inconclusive { .. })
    }
}

/// Real coordinates of a Hermitian `side x side` matrix in an orthonormal
/// basis (diagonal units, then sqrt-2-scaled real and imaginary parts of
/// each upper off-diagonal entry).  The Frobenius inner product becomes the
/// Euclidean one, so projections can be done on real vectors.
pub fn herm_encode(x: &CMat) -> RVec {
    let m = x.nrows();
    let s2 = 2f64.sqrt();
    let mut v = RVec::zeros(m * m);
    let mut t = 0;
    for i in 0..m {
        v[t] = x[(i, i)].re;
        t += 1;
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = (x[(i, j)] + x[(j, i)].conj()) * 0.5;
            v[t] = s2 * avg.re;
            v[t + 1] = s2 * avg.im;
            t += 2;
        }
    }
    v
}

/// Inverse of [`herm_encode`].
pub fn herm_decode(v: &RVec, side: usize) -> CMat {
    let s2 = 2f64.sqrt();
    let mut x = CMat::zeros(side, side);
    let mut t = 0;
    for i in 0..side {
        x[(i, i)] = cr(v[t]);
        t += 1;
    }
    for i in 0..side {
        for j in (i + 1)..side {
            let e = c(v[t] / s2, v[t + 1] / s2);
            x[(i, j)] = e;
            x[(j, i)] = e.conj();
            t += 2;
        }
    }
    x
}

/// {X Hermitian PSD : <F_r, X> = c_r}, constraints stored as real rows in
/// the [`herm_encode`] coordinates.
#[derive(Debug, Clone)]
pub struct AffineSpectrahedron {
    pub side: usize,
    rows: Vec<RVec>,
    rhs: Vec<f64>,
}

impl AffineSpectrahedron {
    pub fn new(side: usize) -> Self {
        AffineSpectrahedron {
            side,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Adds tr(F* X) = value.  F may be arbitrary; the constraint splits
    /// into rows for its Hermitian and anti-Hermitian parts, and all-zero
    /// rows with non-zero target make the set empty immediately.
    pub fn constrain(&mut self, f: &CMat, value: crate::numeric::C64) {
        let h = (f + f.adjoint()) * cr(0.5);
        let k = (f - f.adjoint()) * c(0.0, -0.5);
        for (part, target) in [(h, value.re), (k, -value.im)] {
            let row = herm_encode(&part);
            if row.norm() > 1e-14 || target.abs() > 1e-14 {
                self.rows.push(row);
                self.rhs.push(target);
            }
        }
    }

    /// Adds the real-linear constraint <F, X> = value for Hermitian F.
    pub fn constrain_hermitian(&mut self, f: &CMat, value: f64) {
        self.rows.push(herm_encode(f));
        self.rhs.push(value);
    }

    fn assemble(&self) -> (RMat, RVec) {
        let q = self.side * self.side;
        let p = self.rows.len();
        let mut a = RMat::zeros(p, q);
        for (i, r) in self.rows.iter().enumerate() {
            a.row_mut(i).copy_from(&r.transpose());
        }
        (a, RVec::from_vec(self.rhs.clone()))
    }

    /// Alternating projections between the affine part and the PSD cone.
    /// `warm` seeds the iteration, e.g. with a known feasible point.
    pub fn solve(&self, opts: &SdpOptions, warm: Option<&CMat>) -> Result<Feasibility> {
        let tol = Tolerance::default();
        if self.rows.is_empty() {
            let start = warm.cloned().unwrap_or_else(|| eye(self.side));
            return Ok(Feasibility::Feasible(psd_part(&start, &tol)?));
        }
        let (a, b) = self.assemble();
        let svd = a.clone().svd(true, true);
        let z0 = svd
            .solve(&b, 1e-12)
            .map_err(|e| Error::Numeric(format!("affine least-squares failed: {e}")))?;
        let affine_residual = (&a * &z0 - &b).norm();
        if affine_residual > 1e-8 * (1.0 + b.norm()) {
            return Ok(Feasibility::Infeasible {
                gap: affine_residual,
            });
        }
        let mut x = warm.map(herm_encode).unwrap_or_else(|| z0.clone());
        let mut checkpoint = f64::INFINITY;
        let mut gap = f64::INFINITY;
        for it in 0..opts.max_iter {
            let residual = &a * &x - &b;
            let corr = svd
                .solve(&residual, 1e-12)
                .map_err(|e| Error::Numeric(format!("affine projection failed: {e}")))?;
            let y = &x - corr;
            let z = herm_encode(&psd_part(&herm_decode(&y, self.side), &tol)?);
            gap = (&y - &z).norm();
            if gap <= opts.feas_tol {
                return Ok(Feasibility::Feasible(herm_decode(&z, self.side)));
            }
            if it % opts.stall_window == 0 {
                if it > 0 && gap > checkpoint * 0.99 && gap > 2.0 * opts.feas_tol {
                    return Ok(Feasibility::Infeasible { gap });
                }
                checkpoint = gap;
            }
            x = z;
        }
        Ok(Feasibility::Inconclusive { gap })
    }
}

/// Nearest PSD matrix: clip negative eigenvalues of the Hermitian part.
fn psd_part(x: &CMat, tol: &Tolerance) -> Result<CMat> {
    let h = (x + x.adjoint()) * cr(0.5);
    let (vals, u) = hermitian_eig(&h, tol)?;
    let m = h.nrows();
    let mut out = CMat::zeros(m, m);
    for (i, &v) in vals.iter().enumerate() {
        if v > 0.0 {
            let col = u.column(i);
            out += (col * col.adjoint()) * cr(v);
        }
    }
    Ok(out)
}

/// Feasible Choi matrices of UCP maps M_r -> M_n sending x_t to y_t.
/// The Choi matrix lives in M_r (x) M_n; unitality is included.
pub fn ucp_interpolation(r: usize, n: usize, pairs: &[(CMat, CMat)]) -> Result<AffineSpectrahedron> {
    if r == 0 || n == 0 {
        return Err(Error::Domain("ucp_interpolation needs positive dimensions".into()));
    }
    let mut s = AffineSpectrahedron::new(r * n);
    let add_map_constraint = |x: &CMat, y: &CMat, s: &mut AffineSpectrahedron| {
        for p in 0..n {
            for q in 0..n {
                let f = kron(&x.conjugate(), &matrix_unit(n, p, q));
                s.constrain(&f, y[(p, q)]);
            }
        }
    };
    add_map_constraint(&eye(r), &eye(n), &mut s);
    for (x, y) in pairs {
        if x.nrows() != r || y.nrows() != n {
            return Err(Error::Domain("interpolation pair has wrong dimensions".into()));
        }
        add_map_constraint(x, y, &mut s);
    }
    Ok(s)
}

/// Evaluates the channel encoded by a Choi matrix in M_r (x) M_n.
pub fn channel_of_choi(choi: &CMat, r: usize, n: usize) -> Result<ChannelMap> {
    ChannelMap::from_choi(r, n, choi)
}

/// Uniqueness certificate for a feasible interpolation problem.
#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// All probes certified two-sided movement at most `unique_tol`.
    pub unique: bool,
    /// Largest certified movement (sup - inf lower bound) over all probes.
    pub max_gap_lower: f64,
    /// Upper bound on every probe gap, when all probes were conclusive
    /// and none moved.
    pub max_gap_upper: Option<f64>,
    pub probes: usize,
    pub inconclusive_probes: usize,
}

const RANDOM_PROBES: usize = 16;

/// Real nullspace of the span of `rows` (each of length `q`), with an
/// absolute floor of 1 on the rank cutoff scale.
fn real_nullspace(rows: &[RVec], q: usize) -> Vec<RVec> {
    if rows.is_empty() {
        return (0..q)
            .map(|i| {
                let mut v = RVec::zeros(q);
                v[i] = 1.0;
                v
            })
            .collect();
    }
    // Pad with zero rows so the thin SVD returns a full V.
    let p = rows.len().max(q);
    let mut a = RMat::zeros(p, q);
    for (i, r) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&r.transpose());
    }
    real_nullspace_mat(a)
}

fn real_nullspace_mat(a: RMat) -> Vec<RVec> {
    let q = a.ncols();
    let a = if a.nrows() < q {
        let mut p = RMat::zeros(q, q);
        p.view_mut((0, 0), (a.nrows(), q)).copy_from(&a);
        p
    } else {
        a
    };
    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().expect("SVD v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut out = Vec::new();
    for i in 0..vt.nrows() {
        let sv = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if sv <= 1e-10 * smax.max(1.0) {
            out.push(vt.row(i).transpose());
        }
    }
    out
}

/// Lower bound on how far the level of the functional `f` can move from
/// `v0` in the `sign` direction over the feasible set, by bisection on the
/// level constraint.  Resolution is coarse (1e-3 absolute, 2% relative):
/// the method is only used where movement is macroscopic.
fn measure_movement(
    spectra: &AffineSpectrahedron,
    base: &CMat,
    f: &CMat,
    v0: f64,
    sign: f64,
    opts: &SdpOptions,
) -> (f64, bool) {
    let trace_bound = base.trace().re.abs() + 1.0;
    let mut lo = 0.0f64;
    let mut hi = 2.0 * f.norm() * trace_bound + 1.0;
    let mut warm = base.clone();
    let mut inconclusive = false;
    while hi - lo > (1e-3f64).max(0.02 * lo) {
        let mid = 0.5 * (lo + hi);
        let mut s = spectra.clone();
        s.constrain_hermitian(f, v0 + sign * mid);
        match s.solve(opts, Some(&warm)) {
            Ok(Feasibility::Feasible(p)) => {
                lo = mid;
                warm = p;
            }
            Ok(Feasibility::Infeasible { .. }) => hi = mid,
            Ok(Feasibility::Inconclusive { .. }) | Err(_) => {
                inconclusive = true;
                break;
            }
        }
    }
    (lo, inconclusive)
}

/// Decides whether the feasible set is a single point and, if not, how far
/// linear functionals move over it.
///
/// Uniqueness is certified by first-order rigidity at a known feasible
/// point C: the set is a singleton iff no Hermitian direction D satisfies
/// all affine constraints homogeneously (A D = 0) while its compression to
/// ker(C) is PSD and non-zero.  Restricting to the span of the constraint
/// kernel, that is one PSD feasibility problem at unit scale (trace of the
/// compression pinned to 1), which the alternating-projection solver
/// classifies robustly.  When a direction exists, the movement of that
/// direction, every Choi coordinate, and seeded random functionals is
/// bounded from below by bisection on level constraints.
pub fn interpolation_uniqueness(
    spectra: &AffineSpectrahedron,
    known: Option<&CMat>,
    opts: &SdpOptions,
) -> Result<UniquenessReport> {
    let side = spectra.side;
    let tol = Tolerance::default();
    let base = match known {
        Some(p) => p.clone(),
        None => match spectra.solve(opts, None)? {
            Feasibility::Feasible(p) => p,
            Feasibility::Infeasible { gap } => {
                return Err(Error::Domain(format!(
                    "uniqueness probe on an infeasible problem (gap {gap:.3e})"
                )))
            }
            Feasibility::Inconclusive { gap } => {
                return Err(Error::Numeric(format!(
                    "base feasibility solve inconclusive (gap {gap:.3e})"
                )))
            }
        },
    };

    // Directions compatible with the affine constraints.
    let kernel = real_nullspace(&spectra.rows, side * side);
    if kernel.is_empty() {
        return Ok(UniquenessReport {
            unique: true,
            max_gap_lower: 0.0,
            max_gap_upper: Some(opts.unique_tol),
            probes: 0,
            inconclusive_probes: 0,
        });
    }
    let dirs: Vec<CMat> = kernel.iter().map(|v| herm_decode(v, side)).collect();

    // Split the variable space along ker(base).
    let (vals, u) = hermitian_eig(&base, &tol)?;
    let vmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let kernel_cols: Vec<usize> = (0..side)
        .filter(|&i| vals[i] <= 1e-5 * vmax.max(1.0))
        .collect();
    let s = kernel_cols.len();

    let primary: CMat = if s == 0 {
        // Full-rank feasible point: any constraint-kernel direction
        // immediately yields a second feasible point.
        let d = &dirs[0];
        d * cr(1.0 / d.norm())
    } else {
        let mut q = CMat::zeros(side, s);
        for (k, &i) in kernel_cols.iter().enumerate() {
            q.set_column(k, &u.column(i));
        }
        // A direction supported entirely on range(base) also breaks
        // uniqueness (base +/- epsilon D stay PSD): look for a kernel
        // combination whose leakage out of the range vanishes.
        let range_proj = eye(side) - &q * q.adjoint();
        let mut leak = RMat::zeros(side * side, dirs.len());
        for (k, d) in dirs.iter().enumerate() {
            let l = d - &range_proj * d * &range_proj;
            leak.column_mut(k).copy_from(&herm_encode(&l));
        }
        let interior = real_nullspace_mat(leak);
        if let Some(y) = interior.first() {
            let mut d = CMat::zeros(side, side);
            for (k, dk) in dirs.iter().enumerate() {
                d += dk * cr(y[k]);
            }
            let norm = d.norm();
            if norm > 1e-9 {
                return measure_all(spectra, &base, d * cr(1.0 / norm), opts);
            }
        }
        // Compressions of the candidate directions to ker(base).
        let compressed: Vec<RVec> = dirs
            .iter()
            .map(|d| herm_encode(&(q.adjoint() * d * &q)))
            .collect();
        // The rigidity problem: a unit-trace PSD matrix inside their span.
        let complement = real_nullspace(&compressed, s * s);
        let mut rig = AffineSpectrahedron::new(s);
        rig.constrain_hermitian(&eye(s), 1.0);
        for g in &complement {
            rig.constrain_hermitian(&herm_decode(g, s), 0.0);
        }
        match rig.solve(opts, None)? {
            Feasibility::Infeasible { .. } => {
                return Ok(UniquenessReport {
                    unique: true,
                    max_gap_lower: 0.0,
                    max_gap_upper: Some(opts.unique_tol),
                    probes: dirs.len(),
                    inconclusive_probes: 0,
                });
            }
            Feasibility::Inconclusive { .. } => {
                return Ok(UniquenessReport {
                    unique: false,
                    max_gap_lower: 0.0,
                    max_gap_upper: None,
                    probes: dirs.len(),
                    inconclusive_probes: 1,
                });
            }
            Feasibility::Feasible(m) => {
                // Lift the witness back to a full direction by least squares
                // on the compressed coordinates.
                let target = herm_encode(&m);
                let mut e = RMat::zeros(s * s, compressed.len());
                for (k, v) in compressed.iter().enumerate() {
                    e.column_mut(k).copy_from(v);
                }
                let y = e
                    .svd(true, true)
                    .solve(&target, 1e-12)
                    .map_err(|err| Error::Numeric(format!("direction lift failed: {err}")))?;
                let mut d = CMat::zeros(side, side);
                for (k, dk) in dirs.iter().enumerate() {
                    d += dk * cr(y[k]);
                }
                let norm = d.norm();
                if norm < 1e-12 {
                    dirs[0].clone() * cr(1.0 / dirs[0].norm())
                } else {
                    d * cr(1.0 / norm)
                }
            }
        }
    };

    // Non-unique (or full-rank) branch: measure movements at unit scale.
    measure_all(spectra, &base, primary, opts)
}

/// Movement measurement for a known-non-unique problem: the witness
/// direction, every Choi coordinate, and seeded random functionals.
fn measure_all(
    spectra: &AffineSpectrahedron,
    base: &CMat,
    primary: CMat,
    opts: &SdpOptions,
) -> Result<UniquenessReport> {
    let side = spectra.side;
    let mut probes: Vec<CMat> = vec![primary];
    for t in 0..side * side {
        let mut v = RVec::zeros(side * side);
        v[t] = 1.0;
        probes.push(herm_decode(&v, side));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..RANDOM_PROBES {
        let mut g = CMat::zeros(side, side);
        for i in 0..side {
            for j in 0..side {
                g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let h = (&g + g.adjoint()) * cr(0.5);
        let norm = h.norm();
        probes.push(h * cr(1.0 / norm));
    }
    let base_enc = herm_encode(base);
    let measure = |f: &CMat| {
        let v0 = herm_encode(f).dot(&base_enc);
        let (up, inc_up) = measure_movement(spectra, base, f, v0, 1.0, opts);
        let (down, inc_down) = measure_movement(spectra, base, f, v0, -1.0, opts);
        (up + down, inc_up || inc_down)
    };
    // The witness direction usually realizes a macroscopic gap on its own;
    // honor the early-stop threshold before sweeping the full probe set.
    let first = measure(&probes[0]);
    if let Some(stop) = opts.stop_gap {
        if first.0 >= stop {
            return Ok(UniquenessReport {
                unique: false,
                max_gap_lower: first.0,
                max_gap_upper: None,
                probes: 1,
                inconclusive_probes: usize::from(first.1),
            });
        }
    }
    let outcomes: Vec<(f64, bool)> = crate::par::map_collect(&probes[1..], |f| measure(f));
    let max_gap_lower = outcomes
        .iter()
        .map(|o| o.0)
        .fold(first.0, f64::max);
    let inconclusive_probes =
        outcomes.iter().filter(|o| o.1).count() + usize::from(first.1);
    Ok(UniquenessReport {
        unique: false,
        max_gap_lower,
        max_gap_upper: None,
        probes: probes.len(),
        inconclusive_probes,
    })
}

/// Verdict of the complete-isometry test for a UCP map restricted to an
/// operator system.
#[derive(Debug, Clone)]
pub struct CiVerdict {
    /// The map is injective on the system.
    pub injective: bool,
    /// Feasibility of a UCP left inverse on the image.
    pub extension: Feasibility,
}

impl CiVerdict {
    /// Some(true/false) when conclusive, None when the solver gave up.
    pub fn is_completely_isometric(&self) -> Option<bool> {
        if !self.injective {
            return Some(false);
        }
        match self.extension {
            Feasibility::Feasible(_) => Some(true),
            Feasibility::Infeasible { .. } => Some(false),
            Feasibility::Inconclusive { .. } => None,
        }
    }
}

/// A unital map on an operator system is completely isometric exactly when
/// it is injective and its inverse extends to a UCP map on the codomain;
/// the latter is the interpolation problem pi(s) -> s.
pub fn is_completely_isometric(
    system: &OperatorSystem,
    pi: &ChannelMap,
    opts: &SdpOptions,
) -> Result<CiVerdict> {
    if pi.in_dim != system.ambient_dim {
        return Err(Error::Domain("system and map dimensions differ".into()));
    }
    if pi.out_dim == 0 {
        return Err(Error::Domain(
            "zero codomain; handle degenerate quotients before the SDP".into(),
        ));
    }
    let images: Vec<CMat> = system.basis.iter().map(|s| pi.apply(s)).collect();
    let image_vecs: Vec<_> = images.iter().map(vec_of).collect();
    let injective = orthonormal_span(&image_vecs, RANK_RTOL).len() == system.dim();
    if !injective {
        return Ok(CiVerdict {
            injective: false,
            extension: Feasibility::Infeasible { gap: f64::INFINITY },
        });
    }
    let pairs: Vec<(CMat, CMat)> = images
        .into_iter()
        .zip(system.basis.iter().cloned())
        .collect();
    let spectra = ucp_interpolation(pi.out_dim, system.ambient_dim, &pairs)?;
    let extension = spectra.solve(opts, None)?;
    Ok(CiVerdict {
        injective: true,
        extension,
    })
}
