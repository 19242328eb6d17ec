//! No-signaling analysis of bipartite pre- and post-selected ensembles.
//!
//! Alice and Bob may each perform one von Neumann measurement in any
//! direction, or none. An ensemble forbids signaling when each party's
//! marginal is independent of whether, and along which direction, the other
//! party measures. Three families pass: product/product pairs, pairs of
//! maximally entangled states, and "swapped" pairs whose final state carries
//! the initial Schmidt amplitudes in reverse order.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abl::{
    joint_local_abl, sequential_abl, EventSequence, MeasurementFamily, PrePostEnsemble,
};
use crate::error::{Error, Result};
use crate::presets;
use crate::qstate::{
    angle_distance, schmidt_decompose, tensor, wrap_angle, MeasurementDirection, PureState, Spin,
    Unitary2, C64,
};

/// Structural tolerance used by [`classify`] unless the caller overrides it.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Scan deviations above this count as a demonstrated signal.
pub const SIGNAL_THRESHOLD: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn index(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
        }
    }

    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

fn require_bipartite(ens: &PrePostEnsemble) -> Result<()> {
    if ens.num_parties() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected a two-party ensemble, got {} parties",
            ens.num_parties()
        )));
    }
    Ok(())
}

/// Probability that `party` finds spin up along `own_dir`, with the other
/// party idle (`None`) or measuring along the given direction.
pub fn marginal(
    ens: &PrePostEnsemble,
    party: Party,
    own_dir: &MeasurementDirection,
    other: Option<&MeasurementDirection>,
) -> Result<f64> {
    require_bipartite(ens)?;
    let mut assign = [None, None];
    assign[party.index()] = Some(*own_dir);
    assign[party.other().index()] = other.copied();
    let dist = joint_local_abl(ens, &assign)?;
    // With both measuring, slot order is party order.
    let slot = if other.is_some() { party.index() } else { 0 };
    Ok(dist.marginal(slot, Spin::Up.symbol()))
}

/// Largest pairwise gap among the marginals with the other party idle,
/// measuring along `other_dirs[0]`, or along `other_dirs[1]`.
pub fn no_signal_deviation(
    ens: &PrePostEnsemble,
    party: Party,
    own_dir: &MeasurementDirection,
    other_dirs: [&MeasurementDirection; 2],
) -> Result<f64> {
    let idle = marginal(ens, party, own_dir, None)?;
    let m1 = marginal(ens, party, own_dir, Some(other_dirs[0]))?;
    let m2 = marginal(ens, party, own_dir, Some(other_dirs[1]))?;
    Ok((idle - m1)
        .abs()
        .max((idle - m2).abs())
        .max((m1 - m2).abs()))
}

/// Result of a randomized search for signaling.
#[derive(Clone, Debug, Serialize)]
pub struct SignalReport {
    pub max_deviation: f64,
    pub party: Option<Party>,
    pub own_direction: Option<MeasurementDirection>,
    pub other_directions: Option<[MeasurementDirection; 2]>,
    pub samples: usize,
    /// Samples whose post-selection was impossible for the drawn settings.
    pub skipped: usize,
    pub seed: u64,
}

impl SignalReport {
    pub fn signals(&self) -> bool {
        self.max_deviation > SIGNAL_THRESHOLD
    }
}

/// Per-sample generator: stream `index` of the ChaCha8 generator seeded by
/// `seed`, so results do not depend on how samples are split across threads.
pub(crate) fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Maximum [`no_signal_deviation`] over `samples` random settings. Each
/// sample draws a party and three directions uniformly on the sphere.
pub fn scan_no_signaling(ens: &PrePostEnsemble, samples: usize, seed: u64) -> Result<SignalReport> {
    require_bipartite(ens)?;
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "scan needs at least one sample".into(),
        ));
    }
    let results: Vec<Option<(f64, Party, [MeasurementDirection; 3])>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let party = if rand::Rng::gen_bool(&mut rng, 0.5) {
                Party::A
            } else {
                Party::B
            };
            let own = MeasurementDirection::random(&mut rng);
            let o1 = MeasurementDirection::random(&mut rng);
            let o2 = MeasurementDirection::random(&mut rng);
            no_signal_deviation(ens, party, &own, [&o1, &o2])
                .ok()
                .map(|d| (d, party, [own, o1, o2]))
        })
        .collect();
    let mut report = SignalReport {
        max_deviation: 0.0,
        party: None,
        own_direction: None,
        other_directions: None,
        samples,
        skipped: 0,
        seed,
    };
    for r in results {
        match r {
            None => report.skipped += 1,
            Some((d, party, dirs)) => {
                if report.party.is_none() || d > report.max_deviation {
                    report.max_deviation = d;
                    report.party = Some(party);
                    report.own_direction = Some(dirs[0]);
                    report.other_directions = Some([dirs[1], dirs[2]]);
                }
            }
        }
    }
    Ok(report)
}

/// Products `p_k = p·p̂` and phase differences `α_k = α − α̂` for the four
/// joint outcomes in the order 1 = (i, j), 2 = (i, j̃), 3 = (ĩ, j), 4 = (ĩ, j̃),
/// where `i`/`ĩ` are Alice's up/down along `basis[0]` and `j`/`j̃` Bob's along
/// `basis[1]`.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionQuantities {
    pub p: [f64; 4],
    pub alpha: [f64; 4],
    /// `p_{ij} = |⟨ij|ψᵢ⟩|²`, same order.
    pub initial_probs: [f64; 4],
    /// `p̂_{ij} = |⟨ij|ψ_f⟩|²`, same order.
    pub final_probs: [f64; 4],
    pub basis: [MeasurementDirection; 2],
}

impl ConditionQuantities {
    /// `d_nm = 2√(p_n p_m) cos(α_n − α_m)`, 1-based indices.
    pub fn interference(&self, n: usize, m: usize) -> f64 {
        let (pn, pm) = (self.p[n - 1], self.p[m - 1]);
        2.0 * (pn * pm).sqrt() * (self.alpha[n - 1] - self.alpha[m - 1]).cos()
    }

    /// Residuals of the two no-signaling conditions (Alice's, then Bob's).
    pub fn residuals(&self) -> [f64; 2] {
        let [p1, p2, p3, p4] = self.p;
        let [a1, a2, a3, a4] = self.alpha;
        [
            ((p1 + p2) * (p3 * p4).sqrt() * (a3 - a4).cos()
                - (p3 + p4) * (p1 * p2).sqrt() * (a1 - a2).cos())
            .abs(),
            ((p1 + p3) * (p2 * p4).sqrt() * (a2 - a4).cos()
                - (p2 + p4) * (p1 * p3).sqrt() * (a1 - a3).cos())
            .abs(),
        ]
    }

    /// Alice's single-party probability for `i`, rebuilt from the quantities.
    pub fn alice_marginal(&self) -> f64 {
        let [p1, p2, p3, p4] = self.p;
        let (d12, d34) = (self.interference(1, 2), self.interference(3, 4));
        (p1 + p2 + d12) / (p1 + p2 + p3 + p4 + d12 + d34)
    }
}

pub fn condition_quantities(
    ens: &PrePostEnsemble,
    basis_i: &MeasurementDirection,
    basis_j: &MeasurementDirection,
) -> Result<ConditionQuantities> {
    require_bipartite(ens)?;
    let mut p = [0.0; 4];
    let mut alpha = [0.0; 4];
    let mut initial_probs = [0.0; 4];
    let mut final_probs = [0.0; 4];
    let outcomes = [
        (Spin::Up, Spin::Up),
        (Spin::Up, Spin::Down),
        (Spin::Down, Spin::Up),
        (Spin::Down, Spin::Down),
    ];
    for (k, (si, sj)) in outcomes.into_iter().enumerate() {
        let ket = tensor(&PureState::spin(basis_i, si), &PureState::spin(basis_j, sj));
        let a = ket.inner(ens.initial());
        let a_hat = ket.inner(ens.final_state());
        initial_probs[k] = a.norm_sqr();
        final_probs[k] = a_hat.norm_sqr();
        // conj(⟨k|ψ_f⟩)⟨k|ψᵢ⟩ has modulus √p_k and argument α_k; it is
        // independent of the phase convention of |k⟩.
        let z = a_hat.conj() * a;
        p[k] = z.norm_sqr();
        alpha[k] = if z.norm() > 0.0 {
            wrap_angle(z.arg())
        } else {
            0.0
        };
    }
    Ok(ConditionQuantities {
        p,
        alpha,
        initial_probs,
        final_probs,
        basis: [*basis_i, *basis_j],
    })
}

/// Which factors of the general solution vanish for a set of quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BranchFlags {
    /// `p₃ − p₂ = 0`
    pub p3_equals_p2: bool,
    /// `p₁ + p₄ = 0`
    pub p1_plus_p4_zero: bool,
    /// `p₁p₄ − p₂p₃ = 0`
    pub product_factor_zero: bool,
    /// `α₁ + α₄ = α₂ + α₃ (mod 2π)`
    pub phase_sum: bool,
    /// `α₂ = α₃` and `α₁ = α₄ (mod 2π)`
    pub phase_pairs: bool,
    /// `p₁ = p₄ = 0`; reported only, never used for classification.
    pub degenerate: bool,
}

impl BranchFlags {
    /// Some amplitude factor vanishes and some phase branch holds.
    pub fn any_branch(&self) -> bool {
        (self.p3_equals_p2 || self.p1_plus_p4_zero || self.product_factor_zero)
            && (self.phase_sum || self.phase_pairs)
    }
}

pub fn check_solution_branch(q: &ConditionQuantities, tol: f64) -> BranchFlags {
    let [p1, p2, p3, p4] = q.p;
    let [a1, a2, a3, a4] = q.alpha;
    BranchFlags {
        p3_equals_p2: (p3 - p2).abs() <= tol,
        p1_plus_p4_zero: (p1 + p4).abs() <= tol,
        product_factor_zero: (p1 * p4 - p2 * p3).abs() <= tol,
        phase_sum: angle_distance(a1 + a4, a2 + a3) <= tol,
        phase_pairs: angle_distance(a2, a3) <= tol && angle_distance(a1, a4) <= tol,
        degenerate: p1.abs() <= tol && p4.abs() <= tol,
    }
}

/// The no-signaling family an ensemble was recognized as.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "class")]
pub enum ClassLabel {
    ProductProduct,
    MaxEntangledPair,
    /// `|ψᵢ⟩ = √α|a₀b₀⟩ + e^{iθ}√(1−α)|a₁b₁⟩` with the swapped final state,
    /// normalized so that `α ≤ 1/2`. Bases hold `a₀, a₁` and `b₀, b₁` as
    /// columns.
    SwappedPair {
        alpha: f64,
        theta: f64,
        basis_a: Unitary2,
        basis_b: Unitary2,
    },
    Uncertified,
}

impl ClassLabel {
    pub fn name(&self) -> &'static str {
        match self {
            ClassLabel::ProductProduct => "ProductProduct",
            ClassLabel::MaxEntangledPair => "MaxEntangledPair",
            ClassLabel::SwappedPair { .. } => "SwappedPair",
            ClassLabel::Uncertified => "Uncertified",
        }
    }

    pub fn is_causal(&self) -> bool {
        !matches!(self, ClassLabel::Uncertified)
    }
}

fn coefficient(state: &PureState, a: [C64; 2], b: [C64; 2]) -> C64 {
    let ket = tensor(&PureState::single(a), &PureState::single(b));
    ket.inner(state)
}

/// Constructive classification from the Schmidt forms of both states.
pub fn classify(ens: &PrePostEnsemble, tol: f64) -> Result<ClassLabel> {
    require_bipartite(ens)?;
    let si = schmidt_decompose(ens.initial())?;
    let sf = schmidt_decompose(ens.final_state())?;

    if si.coefficients[1] <= tol && sf.coefficients[1] <= tol {
        return Ok(ClassLabel::ProductProduct);
    }
    let maximal = |c: [f64; 2]| c.iter().all(|x| (x - FRAC_1_SQRT_2).abs() <= tol);
    if maximal(si.coefficients) && maximal(sf.coefficients) {
        return Ok(ClassLabel::MaxEntangledPair);
    }
    if si.coefficients[1] <= tol || maximal(si.coefficients) {
        // Schmidt basis of ψᵢ is either irrelevant or not unique.
        return Ok(ClassLabel::Uncertified);
    }

    let (a, b) = (&si.basis_a, &si.basis_b);
    let c = |k: usize, l: usize, s: &PureState| coefficient(s, a.column(k), b.column(l));
    let c00 = c(0, 0, ens.initial());
    let c11 = c(1, 1, ens.initial());
    let d00 = c(0, 0, ens.final_state());
    let d11 = c(1, 1, ens.final_state());
    let cross = c(0, 1, ens.final_state())
        .norm()
        .max(c(1, 0, ens.final_state()).norm());
    let [s0, s1] = si.coefficients;
    let swapped_magnitudes =
        cross <= tol && (d00.norm() - s1).abs() <= tol && (d11.norm() - s0).abs() <= tol;
    if !swapped_magnitudes {
        return Ok(ClassLabel::Uncertified);
    }
    let rel_initial = (c11 / c00).arg();
    let rel_final = (d11 / d00).arg();
    if angle_distance(rel_initial, rel_final) > tol {
        return Ok(ClassLabel::Uncertified);
    }
    // Reorder so the smaller Schmidt weight comes first.
    let swap_cols = |u: &Unitary2| {
        Unitary2::from_matrix_unchecked([
            [u.entries()[0][1], u.entries()[0][0]],
            [u.entries()[1][1], u.entries()[1][0]],
        ])
    };
    Ok(ClassLabel::SwappedPair {
        alpha: s1 * s1,
        theta: wrap_angle(c00.arg() - c11.arg()),
        basis_a: swap_cols(a),
        basis_b: swap_cols(b),
    })
}

/// Bob's marginals with and without Alice's conditional flip, plus the
/// largest shift a bare local rotation by Alice causes on a swapped pair.
#[derive(Clone, Debug, Serialize)]
pub struct UnitaryAttackDemo {
    /// `P_B(↓_z)` when Alice measures z and flips her spin on "down".
    pub with_flip: f64,
    /// `P_B(↓_z)` when Alice measures z and leaves her spin alone.
    pub without_flip: f64,
    pub swapped: SwappedRotationShift,
}

#[derive(Clone, Debug, Serialize)]
pub struct SwappedRotationShift {
    pub alpha: f64,
    pub theta: f64,
    /// Bob's up probability with no action by Alice.
    pub baseline: f64,
    pub max_shift: f64,
    pub rotation: MeasurementDirection,
    pub bob_direction: MeasurementDirection,
}

pub fn unitary_attack_demo() -> Result<UnitaryAttackDemo> {
    let singlet = presets::singlet();
    let ens = PrePostEnsemble::new(singlet.clone(), singlet)?;
    let z = MeasurementDirection::z();
    let alice_z = MeasurementFamily::local(2, 0, &z)?;
    let bob_z = MeasurementFamily::local(2, 1, &z)?;

    let flipped = EventSequence::new()
        .measure("A", alice_z.clone())?
        .conditional_unitary("A", "d", 0, Unitary2::pauli_x())?
        .measure("B", bob_z.clone())?;
    let plain = EventSequence::new()
        .measure("A", alice_z)?
        .measure("B", bob_z)?;
    let with_flip = sequential_abl(&ens, &flipped)?.marginal(1, "d");
    let without_flip = sequential_abl(&ens, &plain)?.marginal(1, "d");

    let (alpha, theta) = (0.3, 0.4);
    let swapped = presets::swapped_z(alpha, theta)?;
    let mut best: Option<(f64, MeasurementDirection, MeasurementDirection)> = None;
    let mut baseline = f64::NAN;
    for bw in 0..=4 {
        for bp in 0..4 {
            let bob = MeasurementDirection::from_angles(bw as f64 * PI / 4.0, bp as f64 * PI / 2.0);
            let base = marginal(&swapped, Party::B, &bob, None)?;
            if baseline.is_nan() {
                baseline = base;
            }
            for rw in 1..8 {
                for rp in 0..4 {
                    let rot = MeasurementDirection::from_angles(
                        rw as f64 * TAU / 8.0,
                        rp as f64 * PI / 2.0,
                    );
                    let seq = EventSequence::new()
                        .unitary(0, rot.unitary())?
                        .measure("B", MeasurementFamily::local(2, 1, &bob)?)?;
                    let Ok(dist) = sequential_abl(&swapped, &seq) else {
                        continue;
                    };
                    let shift = (dist.marginal(0, "u") - base).abs();
                    if best.is_none_or(|(s, _, _)| shift > s) {
                        best = Some((shift, rot, bob));
                    }
                }
            }
        }
    }
    let (max_shift, rotation, bob_direction) = best.expect("grid is nonempty");
    Ok(UnitaryAttackDemo {
        with_flip,
        without_flip,
        swapped: SwappedRotationShift {
            alpha,
            theta,
            baseline,
            max_shift,
            rotation,
            bob_direction,
        },
    })
}

/// Alice's statistics on the three-party GHZ ensemble, alone and with Bob
/// measuring x.
#[derive(Clone, Debug, Serialize)]
pub struct GhzDemo {
    /// `P_A(↓_z)` with Bob and Clare idle.
    pub alice_down_alone: f64,
    /// `P_A(↑_z)` with Bob measuring x.
    pub alice_up_with_bob_x: f64,
    pub alone: crate::abl::OutcomeDistribution,
    pub with_bob_x: crate::abl::OutcomeDistribution,
}

pub fn ghz_demo() -> Result<GhzDemo> {
    let ens = presets::ghz3();
    let z = MeasurementDirection::z();
    let x = MeasurementDirection::x();
    let alone = joint_local_abl(&ens, &[Some(z), None, None])?;
    let with_bob_x = joint_local_abl(&ens, &[Some(z), Some(x), None])?;
    Ok(GhzDemo {
        alice_down_alone: alone.marginal(0, "d"),
        alice_up_with_bob_x: with_bob_x.marginal(0, "u"),
        alone,
        with_bob_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_unitary(rng: &mut ChaCha8Rng) -> Unitary2 {
        let d = MeasurementDirection::random(rng);
        let g = rng.gen_range(0.0..TAU);
        // extra phase on the second column keeps it unitary but non-SU(2)
        let u = d.unitary();
        let e = C64::from_polar(1.0, g);
        Unitary2::from_matrix_unchecked([
            [u.entries()[0][0], u.entries()[0][1] * e],
            [u.entries()[1][0], u.entries()[1][1] * e],
        ])
    }

    pub(crate) fn random_class2(rng: &mut ChaCha8Rng) -> PrePostEnsemble {
        let bases = [
            random_unitary(rng),
            random_unitary(rng),
            random_unitary(rng),
            random_unitary(rng),
        ];
        presets::max_entangled_pair(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU), &bases)
    }

    pub(crate) fn random_class3(rng: &mut ChaCha8Rng) -> (f64, PrePostEnsemble) {
        let alpha = rng.gen_range(0.02..0.48);
        let ens = presets::swapped_pair(
            alpha,
            rng.gen_range(0.0..TAU),
            &random_unitary(rng),
            &random_unitary(rng),
        )
        .unwrap();
        (alpha, ens)
    }

    pub(crate) fn random_class1(rng: &mut ChaCha8Rng) -> PrePostEnsemble {
        let mut one = || PureState::spin(&MeasurementDirection::random(rng), Spin::Up);
        let i = tensor(&one(), &one());
        let f = tensor(&one(), &one());
        PrePostEnsemble::new(i, f).unwrap()
    }

    #[test]
    fn single_party_marginal_is_half_on_entangled_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let d = MeasurementDirection::random(&mut rng);
            let party = if rng.gen_bool(0.5) {
                Party::A
            } else {
                Party::B
            };
            let c2 = random_class2(&mut rng);
            assert!((marginal(&c2, party, &d, None).unwrap() - 0.5).abs() < 1e-10);
            let (_, c3) = random_class3(&mut rng);
            assert!((marginal(&c3, party, &d, None).unwrap() - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn singlet_xy_marginals() {
        let ens = presets::singlet_xy();
        let x = MeasurementDirection::x();
        let y = MeasurementDirection::y();
        // P_B(↑ₓ) = 0 alone, 1/2 with Alice on y
        assert!(marginal(&ens, Party::B, &x, None).unwrap().abs() < 1e-12);
        assert!((marginal(&ens, Party::B, &x, Some(&y)).unwrap() - 0.5).abs() < 1e-12);
        let dev = no_signal_deviation(&ens, Party::B, &x, [&y, &y]).unwrap();
        assert!((dev - 0.5).abs() < 1e-12);
    }

    #[test]
    fn causal_classes_have_zero_deviation() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..100 {
            let ensembles = [
                random_class1(&mut rng),
                random_class2(&mut rng),
                random_class3(&mut rng).1,
            ];
            for ens in &ensembles {
                let party = if rng.gen_bool(0.5) {
                    Party::A
                } else {
                    Party::B
                };
                let own = MeasurementDirection::random(&mut rng);
                let o1 = MeasurementDirection::random(&mut rng);
                let o2 = MeasurementDirection::random(&mut rng);
                let dev = no_signal_deviation(ens, party, &own, [&o1, &o2]).unwrap();
                assert!(dev < 1e-9, "deviation {dev}");
            }
        }
    }

    #[test]
    fn equal_partially_entangled_pair_signals() {
        let report = scan_no_signaling(&presets::equal_pair(0.9), 2000, 5).unwrap();
        assert!(report.max_deviation > SIGNAL_THRESHOLD, "{report:?}");
    }

    #[test]
    fn scan_is_deterministic_and_validates() {
        let ens = presets::equal_pair(0.9);
        let a = scan_no_signaling(&ens, 500, 99).unwrap();
        let b = scan_no_signaling(&ens, 500, 99).unwrap();
        assert_eq!(a.max_deviation.to_bits(), b.max_deviation.to_bits());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(scan_no_signaling(&ens, 0, 1).is_err());
    }

    #[test]
    fn scan_of_product_pair_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let r = scan_no_signaling(&random_class1(&mut rng), 2000, 3).unwrap();
        assert!(r.max_deviation < 1e-12);
    }

    #[test]
    fn maximal_initial_with_random_final_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let initial = crate::qstate::bell_basis()[0].clone();
        let amps = (0..4)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let fin = PureState::normalized(2, amps).unwrap();
        let s = schmidt_decompose(&fin).unwrap();
        assert!(s.coefficients[0] - s.coefficients[1] > 1e-3);
        let r = scan_no_signaling(&PrePostEnsemble::new(initial, fin).unwrap(), 2000, 4).unwrap();
        assert!(r.max_deviation > SIGNAL_THRESHOLD);
    }

    #[test]
    fn quantities_for_product_in_z() {
        let uu = presets::product(&[PureState::up(), PureState::up()]);
        let ens = PrePostEnsemble::new(uu.clone(), uu).unwrap();
        let z = MeasurementDirection::z();
        let q = condition_quantities(&ens, &z, &z).unwrap();
        assert_eq!(q.p, [1.0, 0.0, 0.0, 0.0]);
        let flags = check_solution_branch(&q, 1e-9);
        assert!(flags.product_factor_zero);
    }

    #[test]
    fn residuals_vanish_on_causal_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..1000 {
            let ens = match rng.gen_range(0..3) {
                0 => random_class1(&mut rng),
                1 => random_class2(&mut rng),
                _ => random_class3(&mut rng).1,
            };
            let bi = MeasurementDirection::random(&mut rng);
            let bj = MeasurementDirection::random(&mut rng);
            let q = condition_quantities(&ens, &bi, &bj).unwrap();
            let [r1, r2] = q.residuals();
            assert!(r1 < 1e-10 && r2 < 1e-10, "{r1} {r2}");
        }
    }

    #[test]
    fn residuals_detect_non_causal_ensembles() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for ens in [
            presets::equal_pair(0.9),
            presets::equal_pair(0.3),
            presets::singlet_xy(),
        ] {
            let worst = (0..200)
                .map(|_| {
                    let q = condition_quantities(
                        &ens,
                        &MeasurementDirection::random(&mut rng),
                        &MeasurementDirection::random(&mut rng),
                    )
                    .unwrap();
                    let [a, b] = q.residuals();
                    a.max(b)
                })
                .fold(0.0, f64::max);
            assert!(worst > 1e-3);
        }
    }

    #[test]
    fn quantities_rebuild_the_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..100 {
            let ens = presets::equal_pair(rng.gen_range(0.05..0.95));
            let bi = MeasurementDirection::random(&mut rng);
            let bj = MeasurementDirection::random(&mut rng);
            let q = condition_quantities(&ens, &bi, &bj).unwrap();
            let direct = marginal(&ens, Party::A, &bi, None).unwrap();
            assert!((q.alice_marginal() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn branches_per_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        for _ in 0..200 {
            let bi = MeasurementDirection::random(&mut rng);
            let bj = MeasurementDirection::random(&mut rng);

            // Generic maximally entangled pairs satisfy the sum branch and
            // swapped pairs the pairwise one; equal states satisfy both.
            let q = condition_quantities(&random_class2(&mut rng), &bi, &bj).unwrap();
            let f = check_solution_branch(&q, 1e-9);
            assert!(f.p3_equals_p2 && f.phase_sum, "{q:?}");
            assert!((q.p[0] - q.p[3]).abs() < 1e-9);

            let s = crate::qstate::bell_basis()[rng.gen_range(0..4)].clone();
            let equal = PrePostEnsemble::new(s.clone(), s).unwrap();
            let q = condition_quantities(&equal, &bi, &bj).unwrap();
            let f = check_solution_branch(&q, 1e-9);
            assert!(f.p3_equals_p2 && f.phase_pairs && f.phase_sum, "{q:?}");

            let q = condition_quantities(&random_class3(&mut rng).1, &bi, &bj).unwrap();
            let f = check_solution_branch(&q, 1e-9);
            assert!(f.p3_equals_p2 && f.phase_pairs, "{q:?}");
            assert!((q.p[0] - q.p[3]).abs() < 1e-9);

            let q = condition_quantities(&random_class1(&mut rng), &bi, &bj).unwrap();
            let f = check_solution_branch(&q, 1e-9);
            assert!(f.product_factor_zero && f.phase_sum);
            assert!(f.any_branch());
        }
    }

    #[test]
    fn classify_examples() {
        assert!(matches!(
            classify(&presets::pr_box_pair(), CLASSIFY_TOL).unwrap(),
            ClassLabel::MaxEntangledPair
        ));
        match classify(&presets::swapped_z(0.3, 0.4).unwrap(), CLASSIFY_TOL).unwrap() {
            ClassLabel::SwappedPair { alpha, .. } => assert!((alpha - 0.3).abs() < 1e-12),
            other => panic!("got {other:?}"),
        }
        let s = presets::equal_pair(0.3);
        assert!(matches!(
            classify(&s, CLASSIFY_TOL).unwrap(),
            ClassLabel::Uncertified
        ));
        assert!(matches!(
            classify(&presets::singlet_xy(), CLASSIFY_TOL).unwrap(),
            ClassLabel::Uncertified
        ));
    }

    #[test]
    fn classify_recovers_constructed_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        for _ in 0..100 {
            let c1 = random_class1(&mut rng);
            assert!(matches!(
                classify(&c1, CLASSIFY_TOL).unwrap(),
                ClassLabel::ProductProduct
            ));
            let c2 = random_class2(&mut rng);
            assert!(matches!(
                classify(&c2, CLASSIFY_TOL).unwrap(),
                ClassLabel::MaxEntangledPair
            ));
            let (alpha, c3) = random_class3(&mut rng);
            match classify(&c3, CLASSIFY_TOL).unwrap() {
                ClassLabel::SwappedPair {
                    alpha: a,
                    theta,
                    basis_a,
                    basis_b,
                } => {
                    assert!((a - alpha).abs() < 1e-9);
                    let rebuilt = presets::swapped_pair(a, theta, &basis_a, &basis_b).unwrap();
                    assert!(rebuilt.initial().phase_distance(c3.initial()) < 1e-9);
                    assert!(rebuilt.final_state().phase_distance(c3.final_state()) < 1e-9);
                }
                other => panic!("got {other:?}"),
            }
            // global phases on either state change nothing
            let g = PrePostEnsemble::new(
                c3.initial().with_global_phase(rng.gen_range(0.0..TAU)),
                c3.final_state().with_global_phase(rng.gen_range(0.0..TAU)),
            )
            .unwrap();
            assert_eq!(classify(&g, CLASSIFY_TOL).unwrap().name(), "SwappedPair");
        }
    }

    #[test]
    fn swapped_with_wrong_phase_is_uncertified() {
        let a = 0.3f64;
        let i = presets::schmidt_state(
            C64::new(a.sqrt(), 0.0),
            C64::from_polar((1.0 - a).sqrt(), 0.4),
            &Unitary2::identity(),
            &Unitary2::identity(),
        );
        let f = presets::schmidt_state(
            C64::new((1.0 - a).sqrt(), 0.0),
            C64::from_polar(a.sqrt(), -0.4),
            &Unitary2::identity(),
            &Unitary2::identity(),
        );
        let ens = PrePostEnsemble::new(i, f).unwrap();
        assert!(matches!(
            classify(&ens, CLASSIFY_TOL).unwrap(),
            ClassLabel::Uncertified
        ));
        let r = scan_no_signaling(&ens, 2000, 8).unwrap();
        assert!(r.signals());
    }

    #[test]
    fn unitary_attack() {
        let demo = unitary_attack_demo().unwrap();
        assert!((demo.with_flip - 1.0).abs() < 1e-12);
        assert!((demo.without_flip - 0.5).abs() < 1e-12);
        assert!((demo.swapped.baseline - 0.5).abs() < 1e-12);
        assert!(demo.swapped.max_shift > 0.01);
    }

    #[test]
    fn ghz_signals() {
        let demo = ghz_demo().unwrap();
        assert!(demo.alice_down_alone.abs() < 1e-12);
        assert!((demo.alice_up_with_bob_x - 0.5).abs() < 1e-12);
        assert!((demo.alone.total() - 1.0).abs() < 1e-12);
        assert!((demo.with_bob_x.total() - 1.0).abs() < 1e-12);
    }
}
