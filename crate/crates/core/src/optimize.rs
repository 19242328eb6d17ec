//! Derivative-free maximizers for small, periodic angle spaces.

use serde::Serialize;

/// Gains below this are treated as rounding noise, so flat directions
/// cannot stall the step schedule.
const MIN_GAIN: f64 = 1e-14;

/// Outcome of a compass (pattern) search.
#[derive(Clone, Debug, Serialize)]
pub struct PatternResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub final_step: f64,
    pub converged: bool,
}

/// Compass search maximizing `f` from `x0`.
///
/// Each iteration polls `x ± step·eᵢ` for every coordinate and moves to the
/// best improvement beyond rounding noise; without one the step is halved. Stops once the
/// step drops below `min_step` (converged) or after `max_iters` polls.
/// The returned value never falls below `f(x0)`.
pub fn pattern_search<F>(
    f: F,
    x0: &[f64],
    step0: f64,
    min_step: f64,
    max_iters: usize,
) -> PatternResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut value = f(&x);
    let mut evaluations = 1;
    let mut step = step0;
    let mut iterations = 0;
    let mut trial = x.clone();
    while step >= min_step && iterations < max_iters {
        iterations += 1;
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[i] += sign * step;
                let v = f(&trial);
                evaluations += 1;
                if v > value + MIN_GAIN * (1.0 + value.abs())
                    && best.is_none_or(|(_, _, bv)| v > bv)
                {
                    best = Some((i, sign, v));
                }
            }
        }
        match best {
            Some((i, sign, v)) => {
                x[i] += sign * step;
                value = v;
            }
            None => step *= 0.5,
        }
    }
    PatternResult {
        x,
        value,
        iterations,
        evaluations,
        final_step: step,
        converged: step < min_step,
    }
}

/// One cyclic pass of per-coordinate grid scans over `[0, 2π)`.
///
/// For each coordinate in turn, evaluates `points` equally spaced values and
/// keeps the best (the current value wins ties, then the lowest grid index).
pub fn coordinate_grid_pass<F>(f: &F, x: &mut [f64], value: &mut f64, points: usize) -> usize
where
    F: Fn(&[f64]) -> f64,
{
    let mut evaluations = 0;
    let mut trial = x.to_vec();
    for i in 0..x.len() {
        trial.copy_from_slice(x);
        for g in 0..points {
            trial[i] = std::f64::consts::TAU * g as f64 / points as f64;
            let v = f(&trial);
            evaluations += 1;
            if v > *value {
                *value = v;
                x[i] = trial[i];
            }
        }
    }
    evaluations
}

/// Maximizes a scalar function on `[lo, hi]`: a uniform scan over `scan`
/// points brackets the best cell, then golden-section search narrows it to
/// width `tol`. Returns `(argmax, max)`.
pub fn bracketed_max<F>(f: F, lo: f64, hi: f64, scan: usize, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let scan = scan.max(2);
    let h = (hi - lo) / (scan - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..scan {
        let v = f(lo + h * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = (lo + h * (best_i as f64 - 1.0)).max(lo);
    let mut b = (lo + h * (best_i as f64 + 1.0)).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [
        (lo + h * best_i as f64, best_v),
        (mid, f(mid)),
        (a, f(a)),
        (b, f(b)),
    ];
    candidates
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, c| {
            if c.1 > acc.1 {
                c
            } else {
                acc
            }
        })
}
