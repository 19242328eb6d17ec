//! Named ensembles used throughout the examples, tests and CLI.
//!
//! Party order is left to right in every ket. Four-party ensembles are
//! ordered (Alice, Bob₁, Bob₂, Clare).

use std::f64::consts::FRAC_1_SQRT_2;

use crate::abl::PrePostEnsemble;
use crate::error::{Error, Result};
use crate::qstate::{tensor, Axis, PureState, Spin, Unitary2, C64};

/// Tensor product of single-party states, left to right.
pub fn product(states: &[PureState]) -> PureState {
    let (first, rest) = states.split_first().expect("at least one factor");
    rest.iter().fold(first.clone(), |acc, s| tensor(&acc, s))
}

fn ax(a: Axis, s: Spin) -> PureState {
    PureState::axis(a, s)
}

fn combine(c0: C64, t0: &PureState, c1: C64, t1: &PureState) -> PureState {
    let amps = t0
        .amplitudes()
        .iter()
        .zip(t1.amplitudes())
        .map(|(a, b)| c0 * a + c1 * b)
        .collect();
    PureState::normalized(t0.num_parties(), amps).expect("nonzero superposition")
}

/// `c₀|a₀⟩|b₀⟩ + c₁|a₁⟩|b₁⟩` with `aₖ`, `bₖ` the columns of the local bases.
pub fn schmidt_state(c0: C64, c1: C64, basis_a: &Unitary2, basis_b: &Unitary2) -> PureState {
    let t0 = tensor(
        &PureState::single(basis_a.column(0)),
        &PureState::single(basis_b.column(0)),
    );
    let t1 = tensor(
        &PureState::single(basis_a.column(1)),
        &PureState::single(basis_b.column(1)),
    );
    combine(c0, &t0, c1, &t1)
}

/// Singlet `(|↑↓⟩ − |↓↑⟩)/√2`.
pub fn singlet() -> PureState {
    let h = FRAC_1_SQRT_2;
    PureState::new(
        2,
        vec![
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
    .expect("normalized")
}

/// Singlet pre-selected, `⟨↑ₓ|⟨↑ᵧ|` post-selected.
pub fn singlet_xy() -> PrePostEnsemble {
    PrePostEnsemble::new(
        singlet(),
        product(&[ax(Axis::X, Spin::Up), ax(Axis::Y, Spin::Up)]),
    )
    .expect("two-party ensemble")
}

/// Both states maximally entangled:
/// `|ψᵢ⟩ = (|a₀b₀⟩ + e^{iθᵢ}|a₁b₁⟩)/√2`, `⟨ψ_f| = (⟨c₀d₀| + e^{−iθ_f}⟨c₁d₁|)/√2`.
///
/// `bases` are `[a, b, c, d]`.
pub fn max_entangled_pair(theta_i: f64, theta_f: f64, bases: &[Unitary2; 4]) -> PrePostEnsemble {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let initial = schmidt_state(
        h,
        C64::from_polar(FRAC_1_SQRT_2, theta_i),
        &bases[0],
        &bases[1],
    );
    let final_ = schmidt_state(
        h,
        C64::from_polar(FRAC_1_SQRT_2, theta_f),
        &bases[2],
        &bases[3],
    );
    PrePostEnsemble::new(initial, final_).expect("two-party ensemble")
}

/// Equal states with swapped amplitudes:
/// `|ψᵢ⟩ = √α|a₀b₀⟩ + e^{iθ}√(1−α)|a₁b₁⟩`, `⟨ψ_f| = √(1−α)⟨a₀b₀| + e^{−iθ}√α⟨a₁b₁|`.
pub fn swapped_pair(
    alpha: f64,
    theta: f64,
    basis_a: &Unitary2,
    basis_b: &Unitary2,
) -> Result<PrePostEnsemble> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let initial = schmidt_state(
        C64::new(alpha.sqrt(), 0.0),
        C64::from_polar((1.0 - alpha).sqrt(), theta),
        basis_a,
        basis_b,
    );
    let final_ = schmidt_state(
        C64::new((1.0 - alpha).sqrt(), 0.0),
        C64::from_polar(alpha.sqrt(), theta),
        basis_a,
        basis_b,
    );
    PrePostEnsemble::new(initial, final_)
}

/// [`swapped_pair`] in the computational basis.
pub fn swapped_z(alpha: f64, theta: f64) -> Result<PrePostEnsemble> {
    swapped_pair(alpha, theta, &Unitary2::identity(), &Unitary2::identity())
}

/// `|ψᵢ⟩ = |ψ_f⟩ = √α|↑↑⟩ + √(1−α)|↓↓⟩`: equal, not swapped.
pub fn equal_pair(alpha: f64) -> PrePostEnsemble {
    let s = schmidt_state(
        C64::new(alpha.sqrt(), 0.0),
        C64::new((1.0 - alpha).sqrt(), 0.0),
        &Unitary2::identity(),
        &Unitary2::identity(),
    );
    PrePostEnsemble::new(s.clone(), s).expect("two-party ensemble")
}

/// `|ψᵢ⟩ = (|↑↑⟩ + |↓↓⟩)/√2`, `⟨ψ_f| = (⟨↑_z|⟨↑ₓ| − ⟨↓_z|⟨↓ₓ|)/√2`.
pub fn pr_box_pair() -> PrePostEnsemble {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let initial = combine(
        h,
        &product(&[ax(Axis::Z, Spin::Up), ax(Axis::Z, Spin::Up)]),
        h,
        &product(&[ax(Axis::Z, Spin::Down), ax(Axis::Z, Spin::Down)]),
    );
    let final_ = combine(
        h,
        &product(&[ax(Axis::Z, Spin::Up), ax(Axis::X, Spin::Up)]),
        -h,
        &product(&[ax(Axis::Z, Spin::Down), ax(Axis::X, Spin::Down)]),
    );
    PrePostEnsemble::new(initial, final_).expect("two-party ensemble")
}

/// Three-party GHZ ensemble: `(|↑ᵧ↑ᵧ↑ᵧ⟩ + |↓ᵧ↓ᵧ↓ᵧ⟩)/√2` pre-selected,
/// `(⟨↑ₓ↑ₓ↑ₓ| − ⟨↓ₓ↓ₓ↓ₓ|)/√2` post-selected.
pub fn ghz3() -> PrePostEnsemble {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let triple = |a, s| product(&[ax(a, s), ax(a, s), ax(a, s)]);
    let initial = combine(
        h,
        &triple(Axis::Y, Spin::Up),
        h,
        &triple(Axis::Y, Spin::Down),
    );
    let final_ = combine(
        h,
        &triple(Axis::X, Spin::Up),
        -h,
        &triple(Axis::X, Spin::Down),
    );
    PrePostEnsemble::new(initial, final_).expect("three-party ensemble")
}

/// Two copies of [`pr_box_pair`], ordered (Alice, Bob₁) ⊗ (Bob₂, Clare).
pub fn swap_double() -> PrePostEnsemble {
    let e = pr_box_pair();
    PrePostEnsemble::new(
        tensor(e.initial(), e.initial()),
        tensor(e.final_state(), e.final_state()),
    )
    .expect("four-party ensemble")
}

/// A generic maximally entangled pair with distinct, non-aligned bases.
pub fn generic_max_entangled() -> PrePostEnsemble {
    let rot = |w: f64, p: f64| crate::qstate::MeasurementDirection::from_angles(w, p).unitary();
    max_entangled_pair(
        0.7,
        -1.3,
        &[rot(0.4, 1.1), rot(2.0, 0.3), rot(1.2, 4.0), rot(2.9, 5.5)],
    )
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &[
    "singlet-xy",
    "eq2-generic",
    "eq3-swapped(ALPHA,THETA)",
    "eq9",
    "equal(ALPHA)",
    "ghz3",
    "ghz4",
    "swap-double",
];

/// Looks up a preset by name. Parameterized presets take numeric arguments in
/// parentheses, e.g. `eq3-swapped(0.3,0.4)`.
pub fn by_name(name: &str) -> Result<PrePostEnsemble> {
    let (base, args) = match name.split_once('(') {
        Some((b, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| {
                Error::InvalidArgument(format!("unterminated preset arguments in {name:?}"))
            })?;
            let args = inner
                .split(',')
                .map(|a| {
                    a.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!("bad preset argument {a:?} in {name:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (b, args)
        }
        None => (name, Vec::new()),
    };
    match (base, args.as_slice()) {
        ("singlet-xy", []) => Ok(singlet_xy()),
        ("eq2-generic", []) => Ok(generic_max_entangled()),
        ("eq3-swapped", [alpha, theta]) => swapped_z(*alpha, *theta),
        ("eq3-swapped", [alpha]) => swapped_z(*alpha, 0.0),
        ("eq9", []) => Ok(pr_box_pair()),
        ("equal", [alpha]) if (0.0..=1.0).contains(alpha) => Ok(equal_pair(*alpha)),
        ("ghz3", []) | ("ghz4", []) => Ok(ghz3()),
        ("swap-double", []) => Ok(swap_double()),
        _ => Err(Error::InvalidArgument(format!(
            "unknown preset {name:?}; known: {}",
            NAMES.join(", ")
        ))),
    }
}
