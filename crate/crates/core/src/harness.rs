//! End-to-end verification pipelines: the rigidity theorem for UCP maps
//! with a simple essential ideal inside the algebra generated by the fixed
//! points, its corollaries for simple algebras, the finite-dimensional
//! boundary-representation statement, seeded random instance generation,
//! and batch reporting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::fixed_point_system;
use crate::cpmap::{unitalize_kraus, unitary_conjugation, ChannelJson, ChannelMap};
use crate::matalg::{
    full_matrix_algebra, generated_star_algebra, operator_system_span, subspace_intersection,
    Ideal, OperatorSystem, StarAlgebra,
};
use crate::numeric::{
    c, cr, eye, hermitian_eig, matrix_unit, op_dist, CMat, Tolerance,
};
use crate::sdp::{
    interpolation_uniqueness, is_completely_isometric, ucp_interpolation, SdpOptions,
};
use crate::{Error, Result};

/// A triple (B, phi, optional ideal J) to feed the rigidity theorem.
#[derive(Debug, Clone)]
pub struct TheoremInstance {
    pub algebra: StarAlgebra,
    pub channel: ChannelMap,
    pub ideal: Option<Ideal>,
}

/// Overall classification of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    /// Hypotheses hold and the predicted equivalence checks out.
    Consistent,
    /// Hypotheses fail; the theorem is silent, facts are recorded.
    HypothesisViolated,
    /// An SDP subproblem gave up; no claim either way.
    Inconclusive,
    /// A counter-witness to the theorem — must never occur.
    ConsistencyFailure,
}

/// Threshold on the superoperator distance below which a channel counts as
/// the identity (well separated from sampling noise).
pub fn identity_threshold(tol: &Tolerance) -> f64 {
    100.0 * tol.eq_tol
}

/// Facts and verdict for one instance of the rigidity theorem.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremVerdict {
    pub ambient_dim: usize,
    pub algebra_dim: usize,
    /// dim of B^phi = fixed points inside B.
    pub fixed_dim: usize,
    /// dim of C*(B^phi).
    pub generated_dim: usize,
    pub ideal_given: bool,
    pub ideal_simple: Option<bool>,
    pub ideal_essential: Option<bool>,
    pub ideal_in_generated: Option<bool>,
    pub hypotheses_hold: bool,
    pub phi_distance_from_identity: f64,
    /// Item (i): phi is the identity.
    pub phi_is_identity: bool,
    /// Item (ii): the quotient map is not completely isometric on B^phi.
    pub quotient_not_completely_isometric: Option<bool>,
    pub status: VerdictStatus,
}

fn require_instance(inst: &TheoremInstance, tol: &Tolerance) -> Result<()> {
    let v = inst.channel.is_ucp(tol)?;
    if !v.is_ucp() {
        return Err(Error::Domain("instance channel is not UCP".into()));
    }
    if inst.channel.in_dim != inst.algebra.ambient_dim {
        return Err(Error::Domain("algebra and channel dimensions differ".into()));
    }
    for b in &inst.algebra.basis {
        if !inst.algebra.contains(&inst.channel.apply(b), tol) {
            return Err(Error::Domain("phi does not map B into itself".into()));
        }
    }
    if let Some(j) = &inst.ideal {
        if !inst.algebra.is_ideal(j, tol) {
            return Err(Error::Domain("given subspace is not an ideal of B".into()));
        }
    }
    Ok(())
}

/// Fixed points of the channel inside B, as an operator system.
pub fn algebra_fixed_points(inst: &TheoremInstance, tol: &Tolerance) -> Result<OperatorSystem> {
    let fixed = fixed_point_system(&inst.channel, tol)?;
    let basis = subspace_intersection(&fixed.system, &inst.algebra.as_system());
    Ok(OperatorSystem {
        ambient_dim: inst.algebra.ambient_dim,
        basis,
    })
}

/// Theorem: given a simple essential ideal J of B contained in C*(B^phi),
/// phi = id holds iff the quotient map B -> B/J fails to be completely
/// isometric on B^phi.  Hypotheses are evaluated first; when they fail the
/// facts are recorded and the verdict is `HypothesisViolated`.
pub fn check_theorem(
    inst: &TheoremInstance,
    tol: &Tolerance,
    opts: &SdpOptions,
) -> Result<TheoremVerdict> {
    require_instance(inst, tol)?;
    let n = inst.algebra.ambient_dim;
    let bphi = algebra_fixed_points(inst, tol)?;
    let generated = generated_star_algebra(n, &bphi.basis)?;
    let gen_sys = generated.as_system();

    let (ideal_simple, ideal_essential, ideal_in_generated) = match &inst.ideal {
        None => (None, None, None),
        Some(j) => {
            let simple = !j.is_zero() && j.block_indices.len() == 1;
            let essential = inst.algebra.is_essential_ideal(j, tol)?;
            let contained = j
                .basis
                .iter()
                .all(|g| gen_sys.contains(g, tol));
            (Some(simple), Some(essential), Some(contained))
        }
    };
    let hypotheses_hold = matches!(
        (ideal_simple, ideal_essential, ideal_in_generated),
        (Some(true), Some(true), Some(true))
    );

    let phi_distance = inst.channel.distance(&ChannelMap::identity(n));
    let phi_is_identity = phi_distance <= identity_threshold(tol);

    let not_ci = match &inst.ideal {
        None => None,
        Some(j) => {
            let q = inst.algebra.quotient(j, tol)?;
            if q.is_zero() {
                // Degenerate rule: the zero quotient annihilates the
                // nonzero system B^phi.
                Some(bphi.dim() > 0)
            } else {
                let pi = ChannelMap::from_kraus(&[q.isometry.adjoint()])?;
                is_completely_isometric(&bphi, &pi, opts)?
                    .is_completely_isometric()
                    .map(|ci| !ci)
            }
        }
    };

    let status = if !hypotheses_hold {
        VerdictStatus::HypothesisViolated
    } else {
        match not_ci {
            None => VerdictStatus::Inconclusive,
            Some(nii) => {
                if phi_is_identity == nii {
                    VerdictStatus::Consistent
                } else {
                    VerdictStatus::ConsistencyFailure
                }
            }
        }
    };

    Ok(TheoremVerdict {
        ambient_dim: n,
        algebra_dim: inst.algebra.dim(),
        fixed_dim: bphi.dim(),
        generated_dim: generated.dim(),
        ideal_given: inst.ideal.is_some(),
        ideal_simple,
        ideal_essential,
        ideal_in_generated,
        hypotheses_hold,
        phi_distance_from_identity: phi_distance,
        phi_is_identity,
        quotient_not_completely_isometric: not_ci,
        status,
    })
}

/// Verdict for the simple-algebra corollary: C*(B^phi) = B forces phi = id.
#[derive(Debug, Clone, Serialize)]
pub struct Corollary31Verdict {
    pub ambient_dim: usize,
    pub algebra_dim: usize,
    pub fixed_dim: usize,
    pub generated_dim: usize,
    /// C*(B^phi) = B.
    pub antecedent: bool,
    pub phi_distance_from_identity: f64,
    pub phi_is_identity: bool,
    pub status: VerdictStatus,
}

pub fn check_corollary31(
    algebra: &StarAlgebra,
    phi: &ChannelMap,
    tol: &Tolerance,
) -> Result<Corollary31Verdict> {
    if !algebra.is_simple(tol)? {
        return Err(Error::Domain(
            "corollary needs a simple algebra; use check_theorem instead".into(),
        ));
    }
    let inst = TheoremInstance {
        algebra: algebra.clone(),
        channel: phi.clone(),
        ideal: None,
    };
    require_instance(&inst, tol)?;
    let bphi = algebra_fixed_points(&inst, tol)?;
    let generated = generated_star_algebra(algebra.ambient_dim, &bphi.basis)?;
    let antecedent = generated.dim() == algebra.dim();
    let phi_distance = phi.distance(&ChannelMap::identity(phi.in_dim));
    let phi_is_identity = phi_distance <= identity_threshold(tol);
    let status = if antecedent && !phi_is_identity {
        VerdictStatus::ConsistencyFailure
    } else {
        VerdictStatus::Consistent
    };
    Ok(Corollary31Verdict {
        ambient_dim: algebra.ambient_dim,
        algebra_dim: algebra.dim(),
        fixed_dim: bphi.dim(),
        generated_dim: generated.dim(),
        antecedent,
        phi_distance_from_identity: phi_distance,
        phi_is_identity,
        status,
    })
}

/// Verdict for the two-channel corollary: UCP maps between simple algebras
/// whose compositions fix generating sets are mutually inverse
/// *-isomorphisms.
#[derive(Debug, Clone, Serialize)]
pub struct Corollary32Verdict {
    pub composition_21_distance: f64,
    pub composition_12_distance: f64,
    pub multiplicativity_residual: f64,
    /// max over sampled unitaries u of || phi2(phi1(u))* phi2(phi1(u)) - I ||.
    pub unitary_defect: f64,
    pub status: VerdictStatus,
}

pub fn check_corollary32(
    phi1: &ChannelMap,
    phi2: &ChannelMap,
    gens1: &[CMat],
    gens2: &[CMat],
    tol: &Tolerance,
) -> Result<Corollary32Verdict> {
    for (name, phi) in [("phi1", phi1), ("phi2", phi2)] {
        if !phi.is_ucp(tol)?.is_ucp() {
            return Err(Error::Domain(format!("{name} is not UCP")));
        }
    }
    if phi1.in_dim != phi2.out_dim || phi1.out_dim != phi2.in_dim {
        return Err(Error::Domain("channel dimensions do not compose".into()));
    }
    let b1 = generated_star_algebra(phi1.in_dim, gens1)?;
    let b2 = generated_star_algebra(phi2.in_dim, gens2)?;
    if !b1.is_simple(tol)? || !b2.is_simple(tol)? {
        return Err(Error::Domain("both algebras must be simple".into()));
    }
    let comp21 = ChannelMap::compose(phi2, phi1)?;
    let comp12 = ChannelMap::compose(phi1, phi2)?;
    for (comp, gens) in [(&comp21, gens1), (&comp12, gens2)] {
        for g in gens {
            if op_dist(&comp.apply(g), g) > tol.eq_tol * (1.0 + crate::numeric::operator_norm(g)) {
                return Err(Error::Domain(
                    "composition does not fix the generating set".into(),
                ));
            }
        }
    }
    let d21 = comp21.distance(&ChannelMap::identity(phi1.in_dim));
    let d12 = comp12.distance(&ChannelMap::identity(phi2.in_dim));
    let mut mult_res: f64 = 0.0;
    for x in &b1.basis {
        for y in &b1.basis {
            mult_res = mult_res.max(op_dist(
                &phi1.apply(&(x * y)),
                &(phi1.apply(x) * phi1.apply(y)),
            ));
        }
    }
    // Schwarz argument trace: the compositions send unitaries to
    // isometries, hence to unitaries in finite dimensions.
    let mut rng = ChaCha8Rng::seed_from_u64(0x3254_u64);
    let mut unitary_defect: f64 = 0.0;
    for _ in 0..4 {
        let h = random_hermitian(&mut rng, phi1.in_dim);
        let u = expi(&h, tol)?;
        let v = phi2.apply(&phi1.apply(&u));
        unitary_defect = unitary_defect.max(op_dist(&(v.adjoint() * &v), &eye(phi1.in_dim)));
    }
    let thr = identity_threshold(tol);
    let status = if d21 <= thr && d12 <= thr && mult_res <= thr && unitary_defect <= thr {
        VerdictStatus::Consistent
    } else {
        VerdictStatus::ConsistencyFailure
    };
    Ok(Corollary32Verdict {
        composition_21_distance: d21,
        composition_12_distance: d12,
        multiplicativity_residual: mult_res,
        unitary_defect,
        status,
    })
}

/// Verdict for the finite-dimensional boundary-representation statement:
/// when the generators generate the full matrix algebra irreducibly, the
/// identity representation admits a unique UCP extension from the span.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRepVerdict {
    pub ambient_dim: usize,
    pub system_dim: usize,
    pub generated_dim: usize,
    pub generates_full_algebra: bool,
    pub irreducible: bool,
    pub unique_extension: bool,
    pub uniqueness_gap_lower: f64,
    pub uniqueness_gap_upper: Option<f64>,
    pub inconclusive_probes: usize,
    pub status: VerdictStatus,
}

pub fn boundary_representation_check(
    generators: &[CMat],
    tol: &Tolerance,
    opts: &SdpOptions,
) -> Result<BoundaryRepVerdict> {
    if generators.is_empty() {
        return Err(Error::Domain("no generators given".into()));
    }
    let n = generators[0].nrows();
    let system = operator_system_span(n, generators)?;
    let generated = generated_star_algebra(n, generators)?;
    let generates_full = generated.dim() == n * n;
    let irreducible = generated.is_irreducible();
    let pairs: Vec<(CMat, CMat)> = system
        .basis
        .iter()
        .map(|s| (s.clone(), s.clone()))
        .collect();
    let spectra = ucp_interpolation(n, n, &pairs)?;
    let id_choi = ChannelMap::identity(n).choi.clone();
    let uniq = interpolation_uniqueness(&spectra, Some(&id_choi), opts)?;
    let _ = identity_threshold(tol);
    let status = if !(generates_full && irreducible) {
        VerdictStatus::HypothesisViolated
    } else if uniq.unique {
        VerdictStatus::Consistent
    } else if uniq.inconclusive_probes > 0 && uniq.max_gap_lower < opts.unique_tol {
        VerdictStatus::Inconclusive
    } else {
        VerdictStatus::ConsistencyFailure
    };
    Ok(BoundaryRepVerdict {
        ambient_dim: n,
        system_dim: system.dim(),
        generated_dim: generated.dim(),
        generates_full_algebra: generates_full,
        irreducible,
        unique_extension: uniq.unique,
        uniqueness_gap_lower: uniq.max_gap_lower,
        uniqueness_gap_upper: uniq.max_gap_upper,
        inconclusive_probes: uniq.inconclusive_probes,
        status,
    })
}

/// Instance generation profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    RandomKrausUcp,
    UnitaryConjugation,
    Pinching,
    SimpleB,
    BlockB,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-kraus-ucp" => Ok(Profile::RandomKrausUcp),
            "unitary-conjugation" => Ok(Profile::UnitaryConjugation),
            "pinching" => Ok(Profile::Pinching),
            "simple-B" | "simple-b" => Ok(Profile::SimpleB),
            "block-B" | "block-b" => Ok(Profile::BlockB),
            other => Err(Error::Domain(format!("unknown profile '{other}'"))),
        }
    }
}

fn random_complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    m
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let g = random_complex_matrix(rng, n, n);
    (&g + g.adjoint()) * cr(0.5)
}

/// exp(iH) for Hermitian H.
fn expi(h: &CMat, tol: &Tolerance) -> Result<CMat> {
    let (vals, u) = hermitian_eig(h, tol)?;
    let n = h.nrows();
    let mut out = CMat::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        let col = u.column(i);
        out += (col * col.adjoint()) * c(v.cos(), v.sin());
    }
    Ok(out)
}

/// Haar-ish random unitary from the QR factorization of a random matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let qr = random_complex_matrix(rng, n, n).qr();
    qr.q()
}

/// Block-diagonal matrix algebra with the given block dimensions.
pub fn block_diagonal_algebra(dims: &[usize]) -> StarAlgebra {
    let n: usize = dims.iter().sum();
    let mut basis = Vec::new();
    let mut offset = 0;
    for &d in dims {
        for i in 0..d {
            for j in 0..d {
                basis.push(matrix_unit(n, offset + i, offset + j));
            }
        }
        offset += d;
    }
    StarAlgebra {
        ambient_dim: n,
        basis,
        unit: eye(n),
    }
}

fn block_patterns(n: usize) -> Vec<Vec<usize>> {
    match n {
        2 => vec![vec![1, 1]],
        3 => vec![vec![2, 1], vec![1, 1, 1]],
        4 => vec![vec![2, 2], vec![3, 1], vec![2, 1, 1]],
        _ => vec![vec![n - 1, 1]],
    }
}

/// Deterministic instance from a seed and profile.  All randomness flows
/// through one ChaCha8 stream keyed by the seed and the profile tag.
pub fn random_instance(seed: u64, profile: Profile, n: usize, tol: &Tolerance) -> Result<TheoremInstance> {
    if n < 2 {
        return Err(Error::Domain("instances need ambient dimension >= 2".into()));
    }
    let tag = match profile {
        Profile::RandomKrausUcp => 1u64,
        Profile::UnitaryConjugation => 2,
        Profile::Pinching => 3,
        Profile::SimpleB => 4,
        Profile::BlockB => 5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ tag);
    match profile {
        Profile::RandomKrausUcp | Profile::SimpleB => {
            let algebra = full_matrix_algebra(n);
            let num_kraus = if profile == Profile::SimpleB {
                rng.gen_range(1..=2)
            } else {
                rng.gen_range(2..=4)
            };
            let raw: Vec<CMat> = (0..num_kraus)
                .map(|_| random_complex_matrix(&mut rng, n, n))
                .collect();
            let kraus = unitalize_kraus(&raw, tol)?;
            let channel = ChannelMap::from_kraus(&kraus)?;
            let bs = algebra.block_decomposition(tol)?;
            let ideal = algebra.ideal_from_blocks(&bs, &[0])?;
            Ok(TheoremInstance {
                algebra,
                channel,
                ideal: Some(ideal),
            })
        }
        Profile::UnitaryConjugation => {
            let algebra = full_matrix_algebra(n);
            let u = random_unitary(&mut rng, n);
            let channel = unitary_conjugation(&u)?;
            let bs = algebra.block_decomposition(tol)?;
            let ideal = algebra.ideal_from_blocks(&bs, &[0])?;
            Ok(TheoremInstance {
                algebra,
                channel,
                ideal: Some(ideal),
            })
        }
        Profile::Pinching => {
            let algebra = full_matrix_algebra(n);
            let patterns = block_patterns(n);
            let dims = patterns[rng.gen_range(0..patterns.len())].clone();
            let u = random_unitary(&mut rng, n);
            let mut kraus = Vec::new();
            let mut offset = 0;
            for &d in &dims {
                let mut p = CMat::zeros(n, n);
                for i in 0..d {
                    p[(offset + i, offset + i)] = cr(1.0);
                }
                kraus.push(&u * p * u.adjoint());
                offset += d;
            }
            let channel = ChannelMap::from_kraus(&kraus)?;
            let bs = algebra.block_decomposition(tol)?;
            let ideal = algebra.ideal_from_blocks(&bs, &[0])?;
            Ok(TheoremInstance {
                algebra,
                channel,
                ideal: Some(ideal),
            })
        }
        Profile::BlockB => {
            let patterns = block_patterns(n);
            let dims = patterns[rng.gen_range(0..patterns.len())].clone();
            let algebra = block_diagonal_algebra(&dims);
            // Kraus operators sampled inside B keep phi(B) inside B, and the
            // unitalization correction stays in B as well.
            let num_kraus = rng.gen_range(2..=3);
            let raw: Vec<CMat> = (0..num_kraus)
                .map(|_| {
                    let mut k = CMat::zeros(n, n);
                    for b in &algebra.basis {
                        k += b * c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                    }
                    k
                })
                .collect();
            let kraus = unitalize_kraus(&raw, tol)?;
            let channel = ChannelMap::from_kraus(&kraus)?;
            let bs = algebra.block_decomposition(tol)?;
            let k = bs.num_blocks();
            let mask = rng.gen_range(1..(1u32 << k));
            let idx: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
            let ideal = algebra.ideal_from_blocks(&bs, &idx)?;
            Ok(TheoremInstance {
                algebra,
                channel,
                ideal: Some(ideal),
            })
        }
    }
}

/// The M_2 (+) C instance phi(x (+) c) = x (+) tr(x)/2: the algebra is
/// generated by its fixed points yet phi is far from the identity, and no
/// simple essential ideal exists — the hypotheses of the theorem are sharp.
pub fn m2_plus_c_instance() -> Result<TheoremInstance> {
    let algebra = block_diagonal_algebra(&[2, 1]);
    let p1 = matrix_unit(3, 0, 0) + matrix_unit(3, 1, 1);
    let k1 = matrix_unit(3, 2, 0) * cr(1.0 / 2f64.sqrt());
    let k2 = matrix_unit(3, 2, 1) * cr(1.0 / 2f64.sqrt());
    let channel = ChannelMap::from_kraus(&[p1, k1, k2])?;
    Ok(TheoremInstance {
        algebra,
        channel,
        ideal: None,
    })
}

/// Facts about the counter-instance, checked against the theorem's sharpness.
#[derive(Debug, Clone, Serialize)]
pub struct CounterInstanceReport {
    pub generated_equals_algebra: bool,
    pub phi_distance_from_identity: f64,
    pub simple_essential_ideal_exists: bool,
    pub status: VerdictStatus,
}

pub fn m2_plus_c_report(tol: &Tolerance) -> Result<CounterInstanceReport> {
    let inst = m2_plus_c_instance()?;
    require_instance(&inst, tol)?;
    let bphi = algebra_fixed_points(&inst, tol)?;
    let generated = generated_star_algebra(3, &bphi.basis)?;
    let generated_equals = generated.dim() == inst.algebra.dim();
    let phi_distance = inst.channel.distance(&ChannelMap::identity(3));
    let bs = inst.algebra.block_decomposition(tol)?;
    let mut exists = false;
    for j in inst.algebra.list_ideals(&bs)? {
        if j.is_zero() {
            continue;
        }
        let simple = j.block_indices.len() == 1;
        let essential = inst.algebra.is_essential_ideal(&j, tol)?;
        if simple && essential {
            exists = true;
        }
    }
    // The sharpness certificate: antecedent of the simple-algebra corollary
    // holds, phi is far from the identity, and no hypothesis of the theorem
    // can be satisfied.
    let status = if generated_equals
        && phi_distance >= 0.5
        && !exists
    {
        VerdictStatus::Consistent
    } else {
        VerdictStatus::ConsistencyFailure
    };
    Ok(CounterInstanceReport {
        generated_equals_algebra: generated_equals,
        phi_distance_from_identity: phi_distance,
        simple_essential_ideal_exists: exists,
        status,
    })
}

/// Aggregate of a batch run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub consistent: usize,
    pub hypothesis_violated: usize,
    pub inconclusive: usize,
    pub consistency_failures: usize,
    pub max_phi_distance_among_identities: f64,
}

impl SuiteSummary {
    pub fn from_verdicts(verdicts: &[TheoremVerdict]) -> Self {
        let count = |s: VerdictStatus| verdicts.iter().filter(|v| v.status == s).count();
        SuiteSummary {
            total: verdicts.len(),
            consistent: count(VerdictStatus::Consistent),
            hypothesis_violated: count(VerdictStatus::HypothesisViolated),
            inconclusive: count(VerdictStatus::Inconclusive),
            consistency_failures: count(VerdictStatus::ConsistencyFailure),
            max_phi_distance_among_identities: verdicts
                .iter()
                .filter(|v| v.phi_is_identity)
                .map(|v| v.phi_distance_from_identity)
                .fold(0.0, f64::max),
        }
    }
}

/// Verifies one seeded instance per entry of `seeds`, in parallel.
pub fn verify_batch(
    seeds: &[u64],
    profile: Profile,
    n: usize,
    tol: &Tolerance,
    opts: &SdpOptions,
) -> Result<Vec<TheoremVerdict>> {
    let results = crate::par::map_collect(seeds, |&seed| {
        random_instance(seed, profile, n, tol).and_then(|inst| check_theorem(&inst, tol, opts))
    });
    results.into_iter().collect()
}

/// Wire format for instances: block dimensions of B (None = full matrix
/// algebra), the channel, and the ideal as central block indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceJson {
    pub algebra_blocks: Option<Vec<usize>>,
    pub channel: ChannelJson,
    pub ideal_blocks: Option<Vec<usize>>,
}

impl InstanceJson {
    pub fn to_instance(&self, tol: &Tolerance) -> Result<TheoremInstance> {
        let channel = self.channel.to_channel()?;
        let n = channel.in_dim;
        let algebra = match &self.algebra_blocks {
            None => full_matrix_algebra(n),
            Some(dims) => {
                if dims.iter().sum::<usize>() != n {
                    return Err(Error::Domain(
                        "algebra block dimensions do not sum to the channel dimension".into(),
                    ));
                }
                block_diagonal_algebra(dims)
            }
        };
        let ideal = match &self.ideal_blocks {
            None => None,
            Some(idx) => {
                let bs = algebra.block_decomposition(tol)?;
                Some(algebra.ideal_from_blocks(&bs, idx)?)
            }
        };
        Ok(TheoremInstance {
            algebra,
            channel,
            ideal,
        })
    }

    pub fn from_instance(inst: &TheoremInstance, tol: &Tolerance) -> Result<Self> {
        let bs = inst.algebra.block_decomposition(tol)?;
        let n = inst.algebra.ambient_dim;
        let full = bs.num_blocks() == 1 && inst.algebra.dim() == n * n;
        Ok(InstanceJson {
            algebra_blocks: if full {
                None
            } else {
                Some(bs.block_dims.clone())
            },
            channel: ChannelJson::from_channel(&inst.channel),
            ideal_blocks: inst.ideal.as_ref().map(|j| j.block_indices.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmap::depolarizing;
    use crate::numeric::{vec_of, zeros};
    use nalgebra::DVector;

    fn t() -> Tolerance {
        Tolerance::default()
    }

    fn opts() -> SdpOptions {
        SdpOptions::default()
    }

    fn full_instance(n: usize, channel: ChannelMap, whole_ideal: bool) -> TheoremInstance {
        let algebra = full_matrix_algebra(n);
        let ideal = if whole_ideal {
            let bs = algebra.block_decomposition(&t()).unwrap();
            Some(algebra.ideal_from_blocks(&bs, &[0]).unwrap())
        } else {
            None
        };
        TheoremInstance {
            algebra,
            channel,
            ideal,
        }
    }

    #[test]
    fn theorem_identity_instance_consistent() {
        let inst = full_instance(2, ChannelMap::identity(2), true);
        let v = check_theorem(&inst, &t(), &opts()).unwrap();
        assert!(v.hypotheses_hold);
        assert!(v.phi_is_identity);
        assert_eq!(v.quotient_not_completely_isometric, Some(true));
        assert_eq!(v.status, VerdictStatus::Consistent);
    }

    #[test]
    fn theorem_conjugation_hypothesis_violated() {
        let u = CMat::from_diagonal(&DVector::from_vec(vec![cr(1.0), c(0.0, 1.0)]));
        let inst = full_instance(2, unitary_conjugation(&u).unwrap(), true);
        let v = check_theorem(&inst, &t(), &opts()).unwrap();
        // C*(B^phi) is the diagonal algebra, so J = M_2 is not contained.
        assert_eq!(v.generated_dim, 2);
        assert_eq!(v.ideal_in_generated, Some(false));
        assert_eq!(v.status, VerdictStatus::HypothesisViolated);
        assert!(!v.phi_is_identity);
    }

    #[test]
    fn corollary31_branches() {
        let b3 = full_matrix_algebra(3);
        let v = check_corollary31(&b3, &ChannelMap::identity(3), &t()).unwrap();
        assert!(v.antecedent && v.phi_is_identity);
        assert_eq!(v.status, VerdictStatus::Consistent);

        let b2 = full_matrix_algebra(2);
        let v = check_corollary31(&b2, &depolarizing(2, 0.5), &t()).unwrap();
        assert!(!v.antecedent);
        assert_eq!(v.generated_dim, 1);
        assert_eq!(v.status, VerdictStatus::Consistent);

        let u = CMat::from_diagonal(&DVector::from_vec(vec![cr(1.0), c(0.0, 1.0)]));
        let v = check_corollary31(&b2, &unitary_conjugation(&u).unwrap(), &t()).unwrap();
        assert!(!v.antecedent);
        assert_eq!(v.status, VerdictStatus::Consistent);

        // Non-simple algebras are rejected.
        let nonsimple = block_diagonal_algebra(&[1, 1]);
        assert!(check_corollary31(&nonsimple, &ChannelMap::identity(2), &t()).is_err());
    }

    #[test]
    fn corollary32_conjugation_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_unitary(&mut rng, 3);
        let phi1 = unitary_conjugation(&u).unwrap();
        let phi2 = unitary_conjugation(&u.adjoint()).unwrap();
        let gens: Vec<CMat> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| matrix_unit(3, i, j))
            .collect();
        let v = check_corollary32(&phi1, &phi2, &gens, &gens, &t()).unwrap();
        assert_eq!(v.status, VerdictStatus::Consistent);
        assert!(v.composition_21_distance < 1e-9);
        assert!(v.unitary_defect < 1e-9);
    }

    #[test]
    fn corollary32_rejects_transpose() {
        // The transpose superoperator is the swap; it is unital but not CP.
        let n = 2;
        let mut swap = zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let src = vec_of(&matrix_unit(n, i, j));
                let dst = vec_of(&matrix_unit(n, j, i));
                for (k, entry) in dst.iter().enumerate() {
                    for (l, s) in src.iter().enumerate() {
                        swap[(k, l)] += entry * s.conj();
                    }
                }
            }
        }
        let transpose = ChannelMap::from_superop(n, n, swap).unwrap();
        let gens = vec![matrix_unit(2, 0, 1)];
        assert!(check_corollary32(&transpose, &transpose, &gens, &gens, &t()).is_err());
    }

    #[test]
    fn boundary_rep_full_basis_pinned() {
        let gens: Vec<CMat> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| matrix_unit(2, i, j))
            .collect();
        let v = boundary_representation_check(&gens, &t(), &opts()).unwrap();
        assert_eq!(v.status, VerdictStatus::Consistent);
        assert!(v.unique_extension);
    }

    #[test]
    fn boundary_rep_reducible_generator() {
        let gens = vec![CMat::from_diagonal(&DVector::from_vec(vec![
            cr(1.0),
            cr(-1.0),
        ]))];
        let v = boundary_representation_check(&gens, &t(), &opts()).unwrap();
        assert_eq!(v.status, VerdictStatus::HypothesisViolated);
        assert!(!v.generates_full_algebra);
        assert!(v.uniqueness_gap_lower >= 0.5, "gap {}", v.uniqueness_gap_lower);
    }

    #[test]
    fn random_instances_are_deterministic_and_ucp() {
        for profile in [
            Profile::RandomKrausUcp,
            Profile::UnitaryConjugation,
            Profile::Pinching,
            Profile::SimpleB,
            Profile::BlockB,
        ] {
            let a = random_instance(42, profile, 3, &t()).unwrap();
            let b = random_instance(42, profile, 3, &t()).unwrap();
            assert_eq!(
                op_dist(&a.channel.superop, &b.channel.superop),
                0.0,
                "profile {profile:?} not deterministic"
            );
            assert!(a.channel.is_ucp(&t()).unwrap().is_ucp(), "{profile:?}");
            for g in &a.algebra.basis {
                assert!(
                    a.algebra.contains(&a.channel.apply(g), &t()),
                    "{profile:?} channel leaves B"
                );
            }
        }
    }

    #[test]
    fn counter_instance_brute_force_oracle() {
        // Independent oracle: build the superoperator entrywise from the
        // definition phi(x) = p1 x p1 + tr(p1 x p1)/2 e_22 and compare.
        let inst = m2_plus_c_instance().unwrap();
        let p1 = matrix_unit(3, 0, 0) + matrix_unit(3, 1, 1);
        let e22 = matrix_unit(3, 2, 2);
        let mut sup = zeros(9, 9);
        for i in 0..3 {
            for j in 0..3 {
                let x = matrix_unit(3, i, j);
                let compressed = &p1 * &x * &p1;
                let image = &compressed + &e22 * (compressed.trace() * cr(0.5));
                sup.set_column(i * 3 + j, &vec_of(&image));
            }
        }
        // Column-stacking: vec(e_ij) occupies column j*3+i.
        let mut oracle = zeros(9, 9);
        for i in 0..3 {
            for j in 0..3 {
                let x = matrix_unit(3, i, j);
                let compressed = &p1 * &x * &p1;
                let image = &compressed + &e22 * (compressed.trace() * cr(0.5));
                oracle.set_column(j * 3 + i, &vec_of(&image));
            }
        }
        assert!(op_dist(&inst.channel.superop, &oracle) < 1e-12);

        let report = m2_plus_c_report(&t()).unwrap();
        assert_eq!(report.status, VerdictStatus::Consistent);
        assert!(report.generated_equals_algebra);
        assert!(report.phi_distance_from_identity >= 0.5);
        assert!(!report.simple_essential_ideal_exists);
        let _ = sup;
    }

    #[test]
    fn theorem_on_counter_instance_is_silent() {
        // With any ideal attached, the hypotheses must fail.
        let base = m2_plus_c_instance().unwrap();
        let bs = base.algebra.block_decomposition(&t()).unwrap();
        for j in base.algebra.list_ideals(&bs).unwrap() {
            if j.is_zero() {
                continue;
            }
            let inst = TheoremInstance {
                ideal: Some(j),
                ..base.clone()
            };
            let v = check_theorem(&inst, &t(), &opts()).unwrap();
            assert_ne!(v.status, VerdictStatus::ConsistencyFailure);
            assert!(!v.hypotheses_hold);
        }
    }

    #[test]
    fn small_batch_has_no_failures() {
        let seeds: Vec<u64> = (0..20).collect();
        let verdicts = verify_batch(&seeds, Profile::SimpleB, 3, &t(), &opts()).unwrap();
        let summary = SuiteSummary::from_verdicts(&verdicts);
        assert_eq!(summary.consistency_failures, 0);
        assert_eq!(summary.total, 20);
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = random_instance(7, Profile::BlockB, 3, &t()).unwrap();
        let wire = InstanceJson::from_instance(&inst, &t()).unwrap();
        let text = serde_json::to_string(&wire).unwrap();
        let back: InstanceJson = serde_json::from_str(&text).unwrap();
        let inst2 = back.to_instance(&t()).unwrap();
        assert!(op_dist(&inst.channel.superop, &inst2.channel.superop) < 1e-9);
        assert_eq!(inst.algebra.dim(), inst2.algebra.dim());
        assert_eq!(
            inst.ideal.as_ref().map(|j| j.dim()),
            inst2.ideal.as_ref().map(|j| j.dim())
        );
    }
}
