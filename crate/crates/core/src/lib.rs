//! Pre- and post-selected ensembles of spin-½ particles.
//!
//! An ensemble is fixed by an initial state `|ψᵢ⟩` and a final state
//! `⟨ψ_f|`; the probabilities of intermediate measurements follow the ABL
//! rule. This crate computes those probabilities ([`abl`]), decides which
//! bipartite ensembles forbid signaling ([`nosignal`]), maximizes the CHSH
//! expression over local measurement directions ([`chsh`]) and runs
//! entanglement swapping on doubled ensembles ([`swapping`]).
//!
//! Runnable walkthroughs live in `examples/`; the `prbox` binary exposes the
//! same operations as scriptable subcommands ([`cli`]).

pub mod abl;
pub mod chsh;
pub mod cli;
pub mod error;
pub mod nosignal;
pub mod optimize;
pub mod presets;
pub mod qstate;
pub mod swapping;

pub use abl::{
    abl_distribution, condition_on_outcome, joint_local_abl, sequential_abl, Event, EventSequence,
    MeasurementFamily, OutcomeDistribution, PrePostEnsemble,
};
pub use chsh::{
    chsh_value, correlation, d_alpha, maximize_chsh, pr_game, swapped_correlation_closed_form,
    ChshConfig, ChshReport, ChshSettings, DAlphaPoint, PrMapping,
};
pub use error::{Error, Result};
pub use nosignal::{classify, marginal, no_signal_deviation, scan_no_signaling, ClassLabel, Party};
pub use qstate::{
    bell_basis, direction_unitary, local_projector, schmidt_decompose, tensor, Axis,
    MeasurementDirection, PureState, Spin, Unitary2,
};
