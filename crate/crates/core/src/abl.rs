//! ABL probabilities for pre- and post-selected ensembles.
//!
//! For an ensemble `(|ψᵢ⟩, ⟨ψ_f|)` and a complete orthogonal family of
//! projectors `{Pₙ}`, the probability of outcome `n` at an intermediate time is
//!
//! ```text
//! P(n) = |⟨ψ_f|Pₙ|ψᵢ⟩|² / Σₖ |⟨ψ_f|Pₖ|ψᵢ⟩|²
//! ```
//!
//! Ordered chains of unitaries and measurements generalize this: each outcome
//! string carries the amplitude `⟨ψ_f|E_k⋯E_1|ψᵢ⟩` and the weights are
//! normalized over all complete outcome strings.

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qstate::{
    self, apply_single, check_party, inner, outer, party_bit, MeasurementDirection, Operator,
    PureState, Spin, Unitary2, C64, STRUCTURE_TOL,
};

/// Total unnormalized weight below which post-selection counts as impossible.
pub const DEGENERATE_WEIGHT: f64 = 1e-24;

/// Normalized probabilities below this are clamped to zero.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// Branch norm below which conditioning is refused.
pub const ZERO_BRANCH_NORM: f64 = 1e-12;

/// Initial state plus final state. The final state is stored as a ket; the
/// bra `⟨ψ_f|` is its conjugate transpose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsemble")]
pub struct PrePostEnsemble {
    initial: PureState,
    #[serde(rename = "final")]
    final_state: PureState,
}

#[derive(Deserialize)]
struct RawEnsemble {
    initial: PureState,
    #[serde(rename = "final")]
    final_state: PureState,
}

impl TryFrom<RawEnsemble> for PrePostEnsemble {
    type Error = Error;

    fn try_from(raw: RawEnsemble) -> Result<Self> {
        PrePostEnsemble::new(raw.initial, raw.final_state)
    }
}

impl PrePostEnsemble {
    pub fn new(initial: PureState, final_state: PureState) -> Result<Self> {
        if initial.num_parties() != final_state.num_parties() {
            return Err(Error::InvalidState(format!(
                "initial has {} parties, final has {}",
                initial.num_parties(),
                final_state.num_parties()
            )));
        }
        Ok(Self {
            initial,
            final_state,
        })
    }

    pub fn initial(&self) -> &PureState {
        &self.initial
    }

    pub fn final_state(&self) -> &PureState {
        &self.final_state
    }

    pub fn num_parties(&self) -> usize {
        self.initial.num_parties()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A complete family of orthogonal projectors with one label per outcome.
#[derive(Clone, Debug)]
pub struct MeasurementFamily {
    num_parties: usize,
    outcomes: Vec<(String, Operator)>,
}

impl MeasurementFamily {
    /// Checks that the projectors are idempotent and sum to the identity.
    pub fn new(num_parties: usize, outcomes: Vec<(String, Operator)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidArgument("empty measurement family".into()));
        }
        let mut sum = Operator::zeros(num_parties);
        for (label, p) in &outcomes {
            if p.num_parties() != num_parties {
                return Err(Error::InvalidArgument(format!(
                    "projector {label:?} acts on {} parties, family on {num_parties}",
                    p.num_parties()
                )));
            }
            if p.mul(p).max_distance(p) > 1e-10 || p.dagger().max_distance(p) > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "operator {label:?} is not an orthogonal projector"
                )));
            }
            sum = sum.add(p);
        }
        let err = sum.max_distance(&Operator::identity(num_parties));
        if err > STRUCTURE_TOL {
            return Err(Error::InvalidArgument(format!(
                "projectors do not resolve the identity (deviation {err:e})"
            )));
        }
        Ok(Self {
            num_parties,
            outcomes,
        })
    }

    /// Up/down along `d` on one party, labelled `"u"` / `"d"`.
    pub fn local(num_parties: usize, party: usize, d: &MeasurementDirection) -> Result<Self> {
        let outcomes = Spin::BOTH
            .iter()
            .map(|&s| {
                Ok((
                    s.symbol().to_string(),
                    qstate::local_projector(num_parties, party, d, s)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(num_parties, outcomes)
    }

    /// Product family over every party with `Some` direction. Labels
    /// concatenate the per-party symbols in party order.
    pub fn product(assignments: &[Option<MeasurementDirection>]) -> Result<Self> {
        let n = assignments.len();
        let measured: Vec<(usize, MeasurementDirection)> = assignments
            .iter()
            .enumerate()
            .filter_map(|(k, d)| d.map(|d| (k, d)))
            .collect();
        if measured.is_empty() {
            return Err(Error::InvalidArgument("no party measures".into()));
        }
        let mut outcomes = Vec::with_capacity(1 << measured.len());
        for combo in spin_combinations(measured.len()) {
            let mut op = Operator::identity(n);
            let mut label = String::new();
            for (&(k, d), s) in measured.iter().zip(&combo) {
                op = op.mul(&qstate::local_projector(n, k, &d, *s)?);
                label.push_str(s.symbol());
            }
            outcomes.push((label, op));
        }
        Self::new(n, outcomes)
    }

    /// Projectors onto the given orthonormal two-party states, acting on
    /// `parties` (in that order).
    pub fn two_party_basis(
        num_parties: usize,
        parties: [usize; 2],
        basis: &[(String, PureState)],
    ) -> Result<Self> {
        let outcomes = basis
            .iter()
            .map(|(label, s)| {
                if s.num_parties() != 2 {
                    return Err(Error::InvalidArgument(format!(
                        "basis state {label:?} is not a two-party state"
                    )));
                }
                Ok((
                    label.clone(),
                    Operator::embed(num_parties, &parties, &Operator::projector(s))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(num_parties, outcomes)
    }

    /// Bell measurement on two parties, labelled `phi+`, `phi-`, `psi+`, `psi-`.
    pub fn bell(num_parties: usize, parties: [usize; 2]) -> Result<Self> {
        let basis: Vec<(String, PureState)> = qstate::BELL_LABELS
            .iter()
            .zip(qstate::bell_basis())
            .map(|(l, s)| (l.to_string(), s))
            .collect();
        Self::two_party_basis(num_parties, parties, &basis)
    }

    pub fn num_parties(&self) -> usize {
        self.num_parties
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn outcomes(&self) -> &[(String, Operator)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

fn spin_combinations(count: usize) -> Vec<Vec<Spin>> {
    (0..1usize << count)
        .map(|mask| {
            (0..count)
                .map(|i| {
                    if mask & (1 << (count - 1 - i)) == 0 {
                        Spin::Up
                    } else {
                        Spin::Down
                    }
                })
                .collect()
        })
        .collect()
}

/// Probabilities keyed by outcome tuples, in enumeration order.
///
/// Keys join the per-slot symbols; single-character symbols are concatenated
/// (`"ud"`), longer ones are comma-separated (`"phi+,u"`).
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    entries: Vec<(Vec<String>, f64)>,
}

impl OutcomeDistribution {
    fn from_weights(entries: Vec<(Vec<String>, f64)>) -> Result<Self> {
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if !(total >= DEGENERATE_WEIGHT) {
            return Err(Error::DegeneratePostSelection(total));
        }
        let mut entries: Vec<(Vec<String>, f64)> = entries
            .into_iter()
            .map(|(k, w)| {
                let p = w / total;
                (k, if p < PROBABILITY_FLOOR { 0.0 } else { p })
            })
            .collect();
        let renorm: f64 = entries.iter().map(|(_, p)| p).sum();
        for (_, p) in &mut entries {
            *p /= renorm;
        }
        Ok(Self { entries })
    }

    pub fn key_of(outcome: &[String]) -> String {
        if outcome.iter().all(|s| s.chars().count() == 1) {
            outcome.concat()
        } else {
            outcome.join(",")
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], f64)> {
        self.entries.iter().map(|(k, p)| (k.as_slice(), *p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Probability of an outcome key such as `"ud"`; zero for unknown keys.
    pub fn get(&self, key: &str) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| Self::key_of(k) == key)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn probability(&self, outcome: &[&str]) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| k.iter().map(String::as_str).eq(outcome.iter().copied()))
            .map_or(0.0, |(_, p)| *p)
    }

    /// Probability that slot `slot` shows `symbol`.
    pub fn marginal(&self, slot: usize, symbol: &str) -> f64 {
        self.entries
            .iter()
            .filter(|(k, _)| k.get(slot).map(String::as_str) == Some(symbol))
            .map(|(_, p)| p)
            .sum()
    }

    /// Distribution of the remaining slots given `slot = symbol`.
    pub fn conditional(&self, slot: usize, symbol: &str) -> Result<OutcomeDistribution> {
        let entries = self
            .entries
            .iter()
            .filter(|(k, _)| k.get(slot).map(String::as_str) == Some(symbol))
            .map(|(k, p)| {
                let mut rest = k.clone();
                rest.remove(slot);
                (rest, *p)
            })
            .collect();
        Self::from_weights(entries)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

impl Serialize for OutcomeDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (k, p) in &self.entries {
            map.serialize_entry(&Self::key_of(k), p)?;
        }
        map.end()
    }
}

/// ABL distribution for one complete projector family.
pub fn abl_distribution(
    ens: &PrePostEnsemble,
    family: &MeasurementFamily,
) -> Result<OutcomeDistribution> {
    if family.num_parties() != ens.num_parties() {
        return Err(Error::InvalidArgument(format!(
            "family acts on {} parties, ensemble has {}",
            family.num_parties(),
            ens.num_parties()
        )));
    }
    let initial = ens.initial().amplitudes();
    let final_ = ens.final_state().amplitudes();
    let weights = family
        .outcomes()
        .iter()
        .map(|(label, p)| {
            let amp = inner(final_, &p.apply(initial));
            (vec![label.clone()], amp.norm_sqr())
        })
        .collect();
    OutcomeDistribution::from_weights(weights)
}

/// Joint ABL statistics when each party either measures along its direction
/// or stays idle. Outcome tuples cover measuring parties only, in party order.
pub fn joint_local_abl(
    ens: &PrePostEnsemble,
    assignments: &[Option<MeasurementDirection>],
) -> Result<OutcomeDistribution> {
    let n = ens.num_parties();
    if assignments.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} assignments for {n} parties",
            assignments.len()
        )));
    }
    let measured: Vec<(usize, [[C64; 2]; 2], [[C64; 2]; 2])> = assignments
        .iter()
        .enumerate()
        .filter_map(|(k, d)| {
            d.map(|d| {
                (
                    k,
                    outer(&d.eigenket(Spin::Up)),
                    outer(&d.eigenket(Spin::Down)),
                )
            })
        })
        .collect();
    if measured.is_empty() {
        return Err(Error::InvalidArgument("no party measures".into()));
    }
    let initial = ens.initial().amplitudes();
    let final_ = ens.final_state().amplitudes();
    let mut weights = Vec::with_capacity(1 << measured.len());
    let mut buf = initial.to_vec();
    for combo in spin_combinations(measured.len()) {
        buf.copy_from_slice(initial);
        for ((k, up, down), s) in measured.iter().zip(&combo) {
            let m = if *s == Spin::Up { up } else { down };
            apply_single(&mut buf, n, *k, m);
        }
        let amp = inner(final_, &buf);
        weights.push((
            combo.iter().map(|s| s.symbol().to_string()).collect(),
            amp.norm_sqr(),
        ));
    }
    OutcomeDistribution::from_weights(weights)
}

/// One intermediate-time event.
#[derive(Clone, Debug)]
pub enum Event {
    Unitary {
        party: usize,
        unitary: Unitary2,
    },
    Measure {
        label: String,
        family: MeasurementFamily,
    },
    /// Applies `unitary` to `party` only in branches where the earlier
    /// measurement `on` produced `outcome`.
    ConditionalUnitary {
        on: String,
        outcome: String,
        party: usize,
        unitary: Unitary2,
    },
}

/// Ordered list of events between pre- and post-selection.
#[derive(Clone, Debug, Default)]
pub struct EventSequence {
    events: Vec<Event>,
}

impl EventSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events(events: Vec<Event>) -> Result<Self> {
        let mut seq = Self::new();
        for e in events {
            seq = seq.push(e)?;
        }
        Ok(seq)
    }

    pub fn push(mut self, event: Event) -> Result<Self> {
        match &event {
            Event::Measure { label, .. } => {
                if self.measure_labels().any(|l| l == label) {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate measurement label {label:?}"
                    )));
                }
            }
            Event::ConditionalUnitary { on, outcome, .. } => {
                let family = self.events.iter().find_map(|e| match e {
                    Event::Measure { label, family } if label == on => Some(family),
                    _ => None,
                });
                match family {
                    None => {
                        return Err(Error::InvalidArgument(format!(
                            "conditional unitary refers to unknown measurement {on:?}"
                        )))
                    }
                    Some(f) if !f.labels().any(|l| l == outcome) => {
                        return Err(Error::InvalidArgument(format!(
                            "measurement {on:?} has no outcome {outcome:?}"
                        )))
                    }
                    Some(_) => {}
                }
            }
            Event::Unitary { .. } => {}
        }
        self.events.push(event);
        Ok(self)
    }

    pub fn unitary(self, party: usize, unitary: Unitary2) -> Result<Self> {
        self.push(Event::Unitary { party, unitary })
    }

    pub fn measure(self, label: impl Into<String>, family: MeasurementFamily) -> Result<Self> {
        self.push(Event::Measure {
            label: label.into(),
            family,
        })
    }

    pub fn conditional_unitary(
        self,
        on: impl Into<String>,
        outcome: impl Into<String>,
        party: usize,
        unitary: Unitary2,
    ) -> Result<Self> {
        self.push(Event::ConditionalUnitary {
            on: on.into(),
            outcome: outcome.into(),
            party,
            unitary,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn measure_labels(&self) -> impl Iterator<Item = &str> {
        self.events.iter().filter_map(|e| match e {
            Event::Measure { label, .. } => Some(label.as_str()),
            _ => None,
        })
    }

    /// Position of a measurement within the outcome tuples.
    pub fn slot_of(&self, label: &str) -> Option<usize> {
        self.measure_labels().position(|l| l == label)
    }

    fn validate_for(&self, num_parties: usize) -> Result<()> {
        for e in &self.events {
            match e {
                Event::Unitary { party, .. } | Event::ConditionalUnitary { party, .. } => {
                    check_party(num_parties, *party)?
                }
                Event::Measure { family, .. } => {
                    if family.num_parties() != num_parties {
                        return Err(Error::InvalidArgument(format!(
                            "measurement family acts on {} parties, ensemble has {num_parties}",
                            family.num_parties()
                        )));
                    }
                }
            }
        }
        if self.measure_labels().next().is_none() {
            return Err(Error::InvalidArgument(
                "event sequence contains no measurement".into(),
            ));
        }
        Ok(())
    }
}

/// ABL statistics of an ordered event chain. Outcome tuples carry one symbol
/// per `Measure` event, in sequence order.
pub fn sequential_abl(ens: &PrePostEnsemble, seq: &EventSequence) -> Result<OutcomeDistribution> {
    let n = ens.num_parties();
    seq.validate_for(n)?;
    let mut weights = Vec::new();
    let mut path: Vec<(String, String)> = Vec::new();
    walk(
        seq.events(),
        n,
        ens.initial().amplitudes().to_vec(),
        ens.final_state().amplitudes(),
        &mut path,
        &mut weights,
    );
    OutcomeDistribution::from_weights(weights)
}

fn walk(
    events: &[Event],
    n: usize,
    state: Vec<C64>,
    final_: &[C64],
    path: &mut Vec<(String, String)>,
    out: &mut Vec<(Vec<String>, f64)>,
) {
    let Some((event, rest)) = events.split_first() else {
        let amp = inner(final_, &state);
        out.push((
            path.iter().map(|(_, o)| o.clone()).collect(),
            amp.norm_sqr(),
        ));
        return;
    };
    match event {
        Event::Unitary { party, unitary } => {
            let mut s = state;
            apply_single(&mut s, n, *party, unitary.entries());
            walk(rest, n, s, final_, path, out);
        }
        Event::ConditionalUnitary {
            on,
            outcome,
            party,
            unitary,
        } => {
            let mut s = state;
            if path.iter().any(|(l, o)| l == on && o == outcome) {
                apply_single(&mut s, n, *party, unitary.entries());
            }
            walk(rest, n, s, final_, path, out);
        }
        Event::Measure { label, family } => {
            for (outcome, p) in family.outcomes() {
                path.push((label.clone(), outcome.clone()));
                walk(rest, n, p.apply(&state), final_, path, out);
                path.pop();
            }
        }
    }
}

/// `(⟨bra|_{parties} ⊗ I)|state⟩` over the remaining parties, in increasing
/// party order.
pub(crate) fn partial_inner(
    state: &[C64],
    n: usize,
    parties: [usize; 2],
    bra: &PureState,
) -> Vec<C64> {
    let rest: Vec<usize> = (0..n).filter(|k| !parties.contains(k)).collect();
    let b = bra.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); 1 << rest.len()];
    for (i, amp) in state.iter().enumerate() {
        let bit = |k: usize| usize::from(i & party_bit(n, k) != 0);
        let sub = (bit(parties[0]) << 1) | bit(parties[1]);
        let r = rest.iter().fold(0, |acc, &k| (acc << 1) | bit(k));
        out[r] += b[sub].conj() * amp;
    }
    out
}

/// Conditions a four-party ensemble on a two-party outcome `bell_outcome`
/// observed on `bob_particles`, optionally followed by `post_unitary` on one
/// of those particles. Returns the ensemble of the two remaining parties.
///
/// The effective initial state is `⟨b|ψᵢ⟩` and the effective final ket is
/// `⟨U b|ψ_f⟩`, each normalized.
pub fn condition_on_outcome(
    ens4: &PrePostEnsemble,
    bob_particles: [usize; 2],
    bell_outcome: &PureState,
    post_unitary: Option<(usize, Unitary2)>,
) -> Result<PrePostEnsemble> {
    let n = ens4.num_parties();
    if n != 4 {
        return Err(Error::InvalidArgument(format!(
            "conditioning expects a 4-party ensemble, got {n}"
        )));
    }
    for &k in &bob_particles {
        check_party(n, k)?;
    }
    if bob_particles[0] == bob_particles[1] {
        return Err(Error::InvalidArgument(
            "Bob's particles must be distinct".into(),
        ));
    }
    if bell_outcome.num_parties() != 2 {
        return Err(Error::InvalidArgument(
            "outcome must be a two-party state".into(),
        ));
    }
    let adjusted = match post_unitary {
        None => bell_outcome.clone(),
        Some((party, u)) => {
            let slot = bob_particles
                .iter()
                .position(|&b| b == party)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                    "post-measurement unitary targets party {party}, not one of Bob's particles"
                ))
                })?;
            bell_outcome.apply_local(slot, &u)?
        }
    };
    let init = partial_inner(ens4.initial().amplitudes(), n, bob_particles, bell_outcome);
    let fin = partial_inner(ens4.final_state().amplitudes(), n, bob_particles, &adjusted);
    let norm = |v: &[C64]| v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for v in [&init, &fin] {
        let nv = norm(v);
        if nv < ZERO_BRANCH_NORM {
            return Err(Error::ZeroBranch(nv));
        }
    }
    PrePostEnsemble::new(
        PureState::normalized(2, init)?,
        PureState::normalized(2, fin)?,
    )
}

/// JSON form of one event. Measurements are either a direction on a single
/// party or a named basis (`"bell"`) on two parties.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventSpec {
    Unitary {
        party: usize,
        matrix: Unitary2,
    },
    Measure {
        label: String,
        parties: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<MeasurementDirection>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<String>,
    },
    ConditionalUnitary {
        on: String,
        outcome: String,
        party: usize,
        matrix: Unitary2,
    },
}

impl EventSequence {
    /// Builds a sequence from its JSON array form for an `num_parties` system.
    pub fn from_specs(num_parties: usize, specs: &[EventSpec]) -> Result<Self> {
        let mut seq = EventSequence::new();
        for spec in specs {
            seq = match spec {
                EventSpec::Unitary { party, matrix } => seq.unitary(*party, *matrix)?,
                EventSpec::ConditionalUnitary {
                    on,
                    outcome,
                    party,
                    matrix,
                } => seq.conditional_unitary(on.clone(), outcome.clone(), *party, *matrix)?,
                EventSpec::Measure {
                    label,
                    parties,
                    direction,
                    basis,
                } => {
                    let family = match (parties.as_slice(), direction, basis.as_deref()) {
                        ([k], Some(d), None) => MeasurementFamily::local(num_parties, *k, d)?,
                        ([a, b], None, Some("bell")) => {
                            MeasurementFamily::bell(num_parties, [*a, *b])?
                        }
                        _ => {
                            return Err(Error::InvalidArgument(format!(
                                "measurement {label:?}: expected one party with a direction or two parties with basis \"bell\""
                            )))
                        }
                    };
                    seq.measure(label.clone(), family)?
                }
            };
        }
        Ok(seq)
    }

    pub fn from_json(num_parties: usize, s: &str) -> Result<Self> {
        let specs: Vec<EventSpec> = serde_json::from_str(s)?;
        Self::from_specs(num_parties, &specs)
    }
}
