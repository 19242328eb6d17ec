//! Correlations, the CHSH functional and PR-box checks on bipartite
//! ensembles.
//!
//! Outcomes map to `±1` with up = `+1`. The CHSH value is
//! `|C(A,B) − C(A,B′) + C(A′,B) + C(A′,B′)|`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abl::{joint_local_abl, PrePostEnsemble, DEGENERATE_WEIGHT};
use crate::error::{Error, Result};
use crate::nosignal::{classify, sample_rng, ClassLabel, CLASSIFY_TOL};
use crate::optimize::{bracketed_max, coordinate_grid_pass, pattern_search};
use crate::presets;
use crate::qstate::{angle_distance, MeasurementDirection, Spin, C64};

/// Pattern search stops once its step falls below this.
pub const REFINE_MIN_STEP: f64 = 1e-7;

/// Tolerance of the scalar search over `d`.
pub const D_TOL: f64 = 1e-6;

fn require_bipartite(ens: &PrePostEnsemble) -> Result<()> {
    if ens.num_parties() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected a two-party ensemble, got {} parties",
            ens.num_parties()
        )));
    }
    Ok(())
}

/// `C(A,B) = P(↑↑) + P(↓↓) − P(↑↓) − P(↓↑)` under both measuring.
pub fn correlation(
    ens: &PrePostEnsemble,
    dir_a: &MeasurementDirection,
    dir_b: &MeasurementDirection,
) -> Result<f64> {
    require_bipartite(ens)?;
    let dist = joint_local_abl(ens, &[Some(*dir_a), Some(*dir_b)])?;
    Ok(dist.get("uu") + dist.get("dd") - dist.get("ud") - dist.get("du"))
}

/// Joint probabilities `[↑↑, ↑↓, ↓↑, ↓↓]`, or `None` when the
/// post-selection is impossible for these settings.
fn joint_probs(
    init: &[C64],
    fin: &[C64],
    a: &[[C64; 2]; 2],
    b: &[[C64; 2]; 2],
) -> Option<[f64; 4]> {
    let mut w = [0.0; 4];
    for s in 0..2 {
        for t in 0..2 {
            let mut ki = C64::new(0.0, 0.0);
            let mut kf = C64::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    let k = (a[s][i] * b[t][j]).conj();
                    ki += k * init[2 * i + j];
                    kf += k * fin[2 * i + j];
                }
            }
            w[2 * s + t] = (kf.conj() * ki).norm_sqr();
        }
    }
    let total: f64 = w.iter().sum();
    if !(total >= DEGENERATE_WEIGHT) {
        return None;
    }
    Some(w.map(|x| x / total))
}

fn kets(d: &MeasurementDirection) -> [[C64; 2]; 2] {
    [d.eigenket(Spin::Up), d.eigenket(Spin::Down)]
}

fn fast_correlation(
    init: &[C64],
    fin: &[C64],
    a: &[[C64; 2]; 2],
    b: &[[C64; 2]; 2],
) -> Option<f64> {
    joint_probs(init, fin, a, b).map(|p| p[0] + p[3] - p[1] - p[2])
}

/// Measurement settings `A, A′` for Alice and `B, B′` for Bob.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshSettings {
    pub a: MeasurementDirection,
    pub a_prime: MeasurementDirection,
    pub b: MeasurementDirection,
    pub b_prime: MeasurementDirection,
}

impl ChshSettings {
    /// From eight angles `(ω, φ)` in the order A, A′, B, B′.
    pub fn from_angles(x: &[f64]) -> Self {
        let d = |i: usize| MeasurementDirection::from_angles(x[2 * i], x[2 * i + 1]);
        Self {
            a: d(0),
            a_prime: d(1),
            b: d(2),
            b_prime: d(3),
        }
    }

    pub fn folded(&self) -> Self {
        Self {
            a: self.a.folded(),
            a_prime: self.a_prime.folded(),
            b: self.b.folded(),
            b_prime: self.b_prime.folded(),
        }
    }

    pub fn as_array(&self) -> [MeasurementDirection; 4] {
        [self.a, self.a_prime, self.b, self.b_prime]
    }
}

pub fn chsh_value(ens: &PrePostEnsemble, s: &ChshSettings) -> Result<f64> {
    let c = |x, y| correlation(ens, x, y);
    Ok(
        (c(&s.a, &s.b)? - c(&s.a, &s.b_prime)? + c(&s.a_prime, &s.b)? + c(&s.a_prime, &s.b_prime)?)
            .abs(),
    )
}

fn fast_chsh(init: &[C64], fin: &[C64], s: &ChshSettings) -> Option<f64> {
    let [a, a2, b, b2] = s.as_array().map(|d| kets(&d));
    let c = |x, y| fast_correlation(init, fin, x, y);
    Some((c(&a, &b)? - c(&a, &b2)? + c(&a2, &b)? + c(&a2, &b2)?).abs())
}

/// Closed-form correlation on the computational-basis swapped pair
/// `√α|↑↑⟩ + e^{iθ}√(1−α)|↓↓⟩` with final ket `√(1−α)|↑↑⟩ + e^{iθ}√α|↓↓⟩`.
pub fn swapped_correlation_closed_form(
    alpha: f64,
    theta: f64,
    omega_a: f64,
    phi_a: f64,
    omega_b: f64,
    phi_b: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let x = alpha - alpha * alpha;
    let sx = x.sqrt();
    let phi = phi_a + phi_b;
    let (ca, cb) = (omega_a.cos(), omega_b.cos());
    let (sa, sb) = (omega_a.sin(), omega_b.sin());
    let num = 16.0 * x * ca * cb + 8.0 * sx * (phi - theta).cos() * sa * sb;
    let den = x * (3.0 + (2.0 * omega_a).cos()) * (3.0 + (2.0 * omega_b).cos())
        + 2.0 * (1.0 + 2.0 * x * (2.0 * phi - 2.0 * theta).cos()) * sa * sa * sb * sb
        + 2.0 * sx * (phi - theta).cos() * (2.0 * omega_a).sin() * (2.0 * omega_b).sin();
    Ok(num / den)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChshConfig {
    /// Points per angle in the coarse grids.
    pub grid_per_angle: usize,
    /// Iteration cap for each pattern search.
    pub refine_iters: usize,
    pub seed: u64,
    /// Seeded random starting points for the full eight-angle search.
    pub starts: usize,
    /// Coordinate grid passes applied to each start before refinement.
    pub sweeps: usize,
    /// Seed the search from the reduced swapped-pair grid when it applies.
    pub swapped_reduction: bool,
}

impl Default for ChshConfig {
    fn default() -> Self {
        Self {
            grid_per_angle: 24,
            refine_iters: 2000,
            seed: 0,
            starts: 8,
            sweeps: 2,
            swapped_reduction: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerInfo {
    pub grid_per_angle: usize,
    pub refine_iters: usize,
    pub starts: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub swapped_reduction_used: bool,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChshReport {
    /// CHSH value at the reported directions.
    pub value: f64,
    pub directions: ChshSettings,
    pub optimizer: OptimizerInfo,
    pub ensemble_class: ClassLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Relative phase `θ` when the ensemble is a swapped pair written in the
/// computational basis.
fn computational_swapped_theta(ens: &PrePostEnsemble) -> Option<f64> {
    let i = ens.initial().amplitudes();
    let f = ens.final_state().amplitudes();
    let tol = CLASSIFY_TOL;
    let off = |v: &[C64]| v[1].norm().max(v[2].norm());
    if off(i) > tol || off(f) > tol || i[0].norm() < tol || i[3].norm() < tol {
        return None;
    }
    let theta = (i[3] / i[0]).arg();
    let swapped = (f[0].norm() - i[3].norm()).abs() <= tol
        && (f[3].norm() - i[0].norm()).abs() <= tol
        && angle_distance((f[3] / f[0]).arg(), theta) <= tol;
    swapped.then_some(theta)
}

struct Candidate {
    x: Vec<f64>,
    value: f64,
    converged: bool,
    evaluations: usize,
}

/// Searches the eight measurement angles for the largest CHSH value.
pub fn maximize_chsh(ens: &PrePostEnsemble, config: &ChshConfig) -> Result<ChshReport> {
    require_bipartite(ens)?;
    if config.grid_per_angle == 0 {
        return Err(Error::InvalidArgument(
            "grid_per_angle must be positive".into(),
        ));
    }
    let class = classify(ens, CLASSIFY_TOL)?;
    let init = ens.initial().amplitudes();
    let fin = ens.final_state().amplitudes();
    let objective = |x: &[f64]| {
        fast_chsh(init, fin, &ChshSettings::from_angles(x)).unwrap_or(f64::NEG_INFINITY)
    };
    let g = config.grid_per_angle;
    let step0 = TAU / g as f64;

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    let reduction = if config.swapped_reduction {
        computational_swapped_theta(ens)
    } else {
        None
    };
    if let Some(theta) = reduction {
        let grid = |k: usize| TAU * k as f64 / g as f64;
        let best = (0..g * g)
            .into_par_iter()
            .map(|ab| {
                let (wa, wa2) = (grid(ab / g), grid(ab % g));
                let mut local: Option<(f64, Vec<f64>)> = None;
                for bb in 0..g * g {
                    let x = vec![wa, 0.0, wa2, 0.0, grid(bb / g), theta, grid(bb % g), theta];
                    let v = objective(&x);
                    if local.as_ref().is_none_or(|(lv, _)| v > *lv) {
                        local = Some((v, x));
                    }
                }
                local.expect("grid is nonempty")
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(None::<(f64, Vec<f64>)>, |acc, c| match acc {
                Some(a) if a.0 >= c.0 => Some(a),
                _ => Some(c),
            })
            .expect("grid is nonempty");
        seeds.push(best.1);
    }
    for s in 0..config.starts {
        let mut rng = sample_rng(config.seed, s as u64);
        seeds.push((0..8).map(|_| rng.gen_range(0.0..TAU)).collect());
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one start".into()));
    }

    let candidates: Vec<Candidate> = seeds
        .par_iter()
        .enumerate()
        .map(|(idx, x0)| {
            let mut x = x0.clone();
            let mut value = objective(&x);
            let mut evaluations = 1;
            // The reduced-grid seed is already grid-optimal in its subspace.
            let sweeps = if reduction.is_some() && idx == 0 {
                0
            } else {
                config.sweeps
            };
            for _ in 0..sweeps {
                evaluations += coordinate_grid_pass(&objective, &mut x, &mut value, g);
            }
            let r = pattern_search(objective, &x, step0, REFINE_MIN_STEP, config.refine_iters);
            Candidate {
                x: r.x,
                value: r.value,
                converged: r.converged,
                evaluations: evaluations + r.evaluations,
            }
        })
        .collect();
    let evaluations = candidates.iter().map(|c| c.evaluations).sum();
    let best = candidates
        .into_iter()
        .fold(None::<Candidate>, |acc, c| match acc {
            Some(a) if a.value >= c.value => Some(a),
            _ => Some(c),
        })
        .expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::DegeneratePostSelection(0.0));
    }

    let directions = ChshSettings::from_angles(&best.x).folded();
    let value = fast_chsh(init, fin, &directions).ok_or(Error::DegeneratePostSelection(0.0))?;
    let warning = (!class.is_causal()).then(|| {
        "ensemble is not certified causal; value may reflect signaling statistics".to_string()
    });
    Ok(ChshReport {
        value,
        directions,
        optimizer: OptimizerInfo {
            grid_per_angle: g,
            refine_iters: config.refine_iters,
            starts: config.starts,
            sweeps: config.sweeps,
            seed: config.seed,
            swapped_reduction_used: reduction.is_some(),
            converged: best.converged,
            evaluations,
        },
        ensemble_class: class,
        warning,
    })
}

/// Settings parameterized by `d`: `ω_A = 3π/2`, `ω_A′ = π`,
/// `ω_B = π + πd/4`, `ω_B′ = π − πd/4`, `φ_A = φ_A′ = 0`, `φ_B = φ_B′ = θ`.
pub fn family_settings(d: f64, theta: f64) -> ChshSettings {
    ChshSettings::from_angles(&[
        1.5 * PI,
        0.0,
        PI,
        0.0,
        PI + PI * d / 4.0,
        theta,
        PI - PI * d / 4.0,
        theta,
    ])
}

#[derive(Clone, Debug, Serialize)]
pub struct DAlphaPoint {
    pub alpha: f64,
    pub d: f64,
    /// Best CHSH value along the one-parameter family.
    pub b_max: f64,
    /// Unconstrained [`maximize_chsh`] value on the same ensemble.
    pub unconstrained: f64,
    pub converged: bool,
}

/// Optimal `d` for the swapped pair of weight `alpha` (with `θ = 0`).
pub fn d_alpha(alpha: f64, config: &ChshConfig) -> Result<DAlphaPoint> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in the open interval (0, 1), got {alpha}"
        )));
    }
    let ens = presets::swapped_z(alpha, 0.0)?;
    let init = ens.initial().amplitudes();
    let fin = ens.final_state().amplitudes();
    let f = |d: f64| fast_chsh(init, fin, &family_settings(d, 0.0)).unwrap_or(f64::NEG_INFINITY);
    let (d, b_max) = bracketed_max(f, 0.0, 1.0, 101, D_TOL);
    let report = maximize_chsh(&ens, config)?;
    Ok(DAlphaPoint {
        alpha,
        d,
        b_max,
        unconstrained: report.value,
        converged: report.optimizer.converged,
    })
}

/// Directions used for each input bit: `alice[x]`, `bob[y]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PrMapping {
    pub alice: [MeasurementDirection; 2],
    pub bob: [MeasurementDirection; 2],
}

impl PrMapping {
    /// Alice: `x = 0 → z`, `x = 1 → x`. Bob: `y = 0 → x`, `y = 1 → z`.
    pub fn standard() -> Self {
        let (z, x) = (MeasurementDirection::z(), MeasurementDirection::x());
        Self {
            alice: [z, x],
            bob: [x, z],
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PrPair {
    pub x: u8,
    pub y: u8,
    /// Probability mass on outcomes with `a ⊕ b = x·y`.
    pub success: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrGameReport {
    pub pairs: [PrPair; 4],
    pub min_success: f64,
    pub mean_success: f64,
}

/// Exact success probabilities of the PR game, with spin up read as bit 1.
pub fn pr_game(ens: &PrePostEnsemble, mapping: &PrMapping) -> Result<PrGameReport> {
    require_bipartite(ens)?;
    let mut pairs = [PrPair {
        x: 0,
        y: 0,
        success: 0.0,
    }; 4];
    for x in 0..2u8 {
        for y in 0..2u8 {
            let dist = joint_local_abl(
                ens,
                &[
                    Some(mapping.alice[x as usize]),
                    Some(mapping.bob[y as usize]),
                ],
            )?;
            let mut success = 0.0;
            for sa in Spin::BOTH {
                for sb in Spin::BOTH {
                    // up is bit 1
                    let (a, b) = (1 - sa.bit(), 1 - sb.bit());
                    if a ^ b == x & y {
                        success += dist.probability(&[sa.symbol(), sb.symbol()]);
                    }
                }
            }
            pairs[(2 * x + y) as usize] = PrPair { x, y, success };
        }
    }
    let min_success = pairs
        .iter()
        .map(|p| p.success)
        .fold(f64::INFINITY, f64::min);
    let mean_success = pairs.iter().map(|p| p.success).sum::<f64>() / 4.0;
    Ok(PrGameReport {
        pairs,
        min_success,
        mean_success,
    })
}
