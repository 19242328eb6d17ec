//! Entanglement swapping on a pair of bipartite ensembles.
//!
//! Alice shares one ensemble with Bob and Clare shares another with Bob.
//! Bob measures his two particles in an entangled basis and then applies a
//! unitary to the particle he shares with Clare. Each of Bob's outcomes
//! leaves Alice and Clare with a conditional pre- and post-selected
//! ensemble.
//!
//! Parties of the doubled ensemble are ordered (Alice, Bob₁, Bob₂, Clare).

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::Serialize;

use crate::abl::{
    condition_on_outcome, sequential_abl, EventSequence, MeasurementFamily, PrePostEnsemble,
};
use crate::chsh::{maximize_chsh, ChshConfig, ChshReport};
use crate::error::{Error, Result};
use crate::nosignal::{classify, scan_no_signaling, ClassLabel, SignalReport, CLASSIFY_TOL};
use crate::qstate::{
    bell_basis, tensor, MeasurementDirection, PureState, Spin, Unitary2, BELL_LABELS, C64,
};

pub const ALICE: usize = 0;
pub const BOB_1: usize = 1;
pub const BOB_2: usize = 2;
pub const CLARE: usize = 3;

/// Tolerance on the orthonormality of a measurement basis.
pub const BASIS_TOL: f64 = 1e-10;

/// Tensor product of two bipartite ensembles, (Alice, Bob₁) then (Bob₂, Clare).
pub fn build_double_ensemble(
    ens_ab: &PrePostEnsemble,
    ens_bc: &PrePostEnsemble,
) -> Result<PrePostEnsemble> {
    for e in [ens_ab, ens_bc] {
        if e.num_parties() != 2 {
            return Err(Error::InvalidArgument(format!(
                "swapping needs two-party ensembles, got {} parties",
                e.num_parties()
            )));
        }
    }
    PrePostEnsemble::new(
        tensor(ens_ab.initial(), ens_bc.initial()),
        tensor(ens_ab.final_state(), ens_bc.final_state()),
    )
}

/// Four labelled orthonormal two-party states.
#[derive(Clone, Debug)]
pub struct MeasurementBasis {
    states: Vec<(String, PureState)>,
}

impl MeasurementBasis {
    pub fn new(states: Vec<(String, PureState)>) -> Result<Self> {
        if states.len() != 4 || states.iter().any(|(_, s)| s.num_parties() != 2) {
            return Err(Error::InvalidArgument(
                "a basis needs four two-party states".into(),
            ));
        }
        for (i, (_, a)) in states.iter().enumerate() {
            for (j, (_, b)) in states.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (a.inner(b) - C64::new(want, 0.0)).norm() > BASIS_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "basis states {i} and {j} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Self { states })
    }

    pub fn bell() -> Self {
        Self {
            states: BELL_LABELS
                .iter()
                .map(|l| l.to_string())
                .zip(bell_basis())
                .collect(),
        }
    }

    /// `cos η|↑↑⟩ + sin η|↓↓⟩`, `sin η|↑↑⟩ − cos η|↓↓⟩`,
    /// `cos η|↑↓⟩ + sin η|↓↑⟩`, `sin η|↑↓⟩ − cos η|↓↑⟩`, labelled `m1`–`m4`.
    pub fn non_maximal(eta: f64) -> Self {
        let (c, s) = (C64::new(eta.cos(), 0.0), C64::new(eta.sin(), 0.0));
        let z = C64::new(0.0, 0.0);
        let mk = |a: [C64; 4]| PureState::normalized(2, a.to_vec()).expect("unit vector");
        Self {
            states: vec![
                ("m1".into(), mk([c, z, z, s])),
                ("m2".into(), mk([s, z, z, -c])),
                ("m3".into(), mk([z, c, s, z])),
                ("m4".into(), mk([z, s, -c, z])),
            ],
        }
    }

    /// Separate spin measurements on each of Bob's particles.
    pub fn local_product(d1: &MeasurementDirection, d2: &MeasurementDirection) -> Self {
        let mut states = Vec::with_capacity(4);
        for s1 in Spin::BOTH {
            for s2 in Spin::BOTH {
                states.push((
                    format!("{}{}", s1.symbol(), s2.symbol()),
                    tensor(&PureState::spin(d1, s1), &PureState::spin(d2, s2)),
                ));
            }
        }
        Self { states }
    }

    pub fn states(&self) -> &[(String, PureState)] {
        &self.states
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SwapConfig {
    pub chsh: ChshConfig,
    pub scan_samples: usize,
    pub scan_seed: u64,
}

impl Default for SwapConfig {
    fn default() -> Self {
        Self {
            chsh: ChshConfig::default(),
            scan_samples: 1000,
            scan_seed: 0,
        }
    }
}

/// One of Bob's outcomes. Outcomes that cannot occur carry probability 0
/// and no conditional ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct SwapOutcomeReport {
    pub label: String,
    pub probability: f64,
    pub conditional: Option<PrePostEnsemble>,
    pub class: Option<ClassLabel>,
    pub chsh: Option<ChshReport>,
    pub scan: Option<SignalReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SwapReport {
    pub outcomes: Vec<SwapOutcomeReport>,
    pub total_probability: f64,
}

fn outcome_probabilities(
    double: &PrePostEnsemble,
    basis: &MeasurementBasis,
    post_unitary: Option<&Unitary2>,
) -> Result<Vec<f64>> {
    let family = MeasurementFamily::two_party_basis(4, [BOB_1, BOB_2], basis.states())?;
    let mut seq = EventSequence::new().measure("bob", family)?;
    if let Some(u) = post_unitary {
        seq = seq.unitary(BOB_2, *u)?;
    }
    let dist = sequential_abl(double, &seq)?;
    Ok(basis
        .states()
        .iter()
        .map(|(l, _)| dist.probability(&[l.as_str()]))
        .collect())
}

/// Conditional Alice–Clare ensemble for outcome `state`, or `None` when the
/// outcome is impossible.
fn conditional(
    double: &PrePostEnsemble,
    state: &PureState,
    post_unitary: Option<&Unitary2>,
) -> Result<Option<PrePostEnsemble>> {
    match condition_on_outcome(
        double,
        [BOB_1, BOB_2],
        state,
        post_unitary.map(|u| (BOB_2, *u)),
    ) {
        Ok(e) => Ok(Some(e)),
        Err(Error::ZeroBranch(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs the swapping protocol and analyses every outcome branch.
pub fn swap_protocol(
    ens_ab: &PrePostEnsemble,
    ens_bc: &PrePostEnsemble,
    basis: &MeasurementBasis,
    post_unitary: Option<&Unitary2>,
    config: &SwapConfig,
) -> Result<SwapReport> {
    let double = build_double_ensemble(ens_ab, ens_bc)?;
    let probs = outcome_probabilities(&double, basis, post_unitary)?;
    let outcomes = basis
        .states()
        .par_iter()
        .zip(probs.par_iter())
        .map(
            |((label, state), &probability)| -> Result<SwapOutcomeReport> {
                let cond = if probability > 0.0 {
                    conditional(&double, state, post_unitary)?
                } else {
                    None
                };
                let (class, chsh, scan) = match &cond {
                    Some(e) => (
                        Some(classify(e, CLASSIFY_TOL)?),
                        Some(maximize_chsh(e, &config.chsh)?),
                        Some(scan_no_signaling(e, config.scan_samples, config.scan_seed)?),
                    ),
                    None => (None, None, None),
                };
                Ok(SwapOutcomeReport {
                    label: label.clone(),
                    probability: if cond.is_some() { probability } else { 0.0 },
                    conditional: cond,
                    class,
                    chsh,
                    scan,
                })
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let total_probability = outcomes.iter().map(|o| o.probability).sum();
    Ok(SwapReport {
        outcomes,
        total_probability,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackOutcome {
    pub label: String,
    pub probability: f64,
    pub class: Option<ClassLabel>,
    pub scan: Option<SignalReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub eta: f64,
    /// Scan with the largest deviation over all possible outcomes.
    pub worst: SignalReport,
    pub worst_label: String,
    pub outcomes: Vec<AttackOutcome>,
}

/// Swapping through the partially entangled basis of [`MeasurementBasis::non_maximal`],
/// followed by a Hadamard on Bob₂, with a no-signaling scan on each branch.
pub fn non_maximal_attack(
    ens_ab: &PrePostEnsemble,
    ens_bc: &PrePostEnsemble,
    eta: f64,
    samples: usize,
    seed: u64,
) -> Result<AttackReport> {
    if !(eta > 0.0 && eta < 2.0 * FRAC_PI_4) {
        return Err(Error::InvalidArgument(format!(
            "eta must lie in (0, π/2), got {eta}"
        )));
    }
    if (eta - FRAC_PI_4).abs() < 1e-12 {
        return Err(Error::InvalidArgument("eta = π/4 is the Bell basis".into()));
    }
    let double = build_double_ensemble(ens_ab, ens_bc)?;
    let basis = MeasurementBasis::non_maximal(eta);
    let h = Unitary2::hadamard();
    let probs = outcome_probabilities(&double, &basis, Some(&h))?;
    let outcomes = basis
        .states()
        .par_iter()
        .zip(probs.par_iter())
        .map(|((label, state), &probability)| -> Result<AttackOutcome> {
            let cond = if probability > 0.0 {
                conditional(&double, state, Some(&h))?
            } else {
                None
            };
            let (class, scan) = match &cond {
                Some(e) => (
                    Some(classify(e, CLASSIFY_TOL)?),
                    Some(scan_no_signaling(e, samples, seed)?),
                ),
                None => (None, None),
            };
            Ok(AttackOutcome {
                label: label.clone(),
                probability: if cond.is_some() { probability } else { 0.0 },
                class,
                scan,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (worst_label, worst) = outcomes
        .iter()
        .filter_map(|o| o.scan.as_ref().map(|s| (o.label.clone(), s.clone())))
        .fold(None::<(String, SignalReport)>, |acc, c| match acc {
            Some(a) if a.1.max_deviation >= c.1.max_deviation => Some(a),
            _ => Some(c),
        })
        .ok_or(Error::DegeneratePostSelection(0.0))?;
    Ok(AttackReport {
        eta,
        worst,
        worst_label,
        outcomes,
    })
}
