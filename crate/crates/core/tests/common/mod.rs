#![allow(dead_code)]

use std::f64::consts::TAU;

use prbox::presets;
use prbox::qstate::C64;
use prbox::{tensor, MeasurementDirection, PrePostEnsemble, PureState, Spin, Unitary2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random local basis: a direction unitary with an extra phase on its
/// second column.
pub fn random_unitary(rng: &mut ChaCha8Rng) -> Unitary2 {
    let u = MeasurementDirection::random(rng).unitary();
    let e = C64::from_polar(1.0, rng.gen_range(0.0..TAU));
    let m = u.entries();
    Unitary2::new([[m[0][0], m[0][1] * e], [m[1][0], m[1][1] * e]]).unwrap()
}

pub fn random_spinor(rng: &mut ChaCha8Rng) -> PureState {
    PureState::spin(&MeasurementDirection::random(rng), Spin::Up)
}

pub fn random_product_pair(rng: &mut ChaCha8Rng) -> PrePostEnsemble {
    let i = tensor(&random_spinor(rng), &random_spinor(rng));
    let f = tensor(&random_spinor(rng), &random_spinor(rng));
    PrePostEnsemble::new(i, f).unwrap()
}

pub fn random_max_entangled_pair(rng: &mut ChaCha8Rng) -> PrePostEnsemble {
    let bases = [
        random_unitary(rng),
        random_unitary(rng),
        random_unitary(rng),
        random_unitary(rng),
    ];
    presets::max_entangled_pair(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU), &bases)
}

pub fn random_swapped_pair(rng: &mut ChaCha8Rng) -> PrePostEnsemble {
    let alpha = rng.gen_range(0.02..0.98);
    let theta = rng.gen_range(0.0..TAU);
    let (a, b) = (random_unitary(rng), random_unitary(rng));
    presets::swapped_pair(alpha, theta, &a, &b).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, num_parties: usize) -> PureState {
    let amps = (0..1usize << num_parties)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    PureState::normalized(num_parties, amps).unwrap()
}
