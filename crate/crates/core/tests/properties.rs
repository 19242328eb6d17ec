mod common;

use prbox::chsh::{family_settings, ChshConfig};
use prbox::qstate::C64;
use prbox::{
    chsh_value, classify, d_alpha, joint_local_abl, marginal, no_signal_deviation, presets,
    ChshSettings, Error, MeasurementDirection, Party, PrePostEnsemble, PureState, Spin,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct Kronecker-product evaluation of the two-party ABL weights,
/// in the order `[uu, ud, du, dd]`.
fn brute_force_abl(
    ens: &PrePostEnsemble,
    a: &MeasurementDirection,
    b: &MeasurementDirection,
) -> [f64; 4] {
    let i = ens.initial().amplitudes();
    let f = ens.final_state().amplitudes();
    let mut w = [0.0; 4];
    for (n, (sa, sb)) in [
        (Spin::Up, Spin::Up),
        (Spin::Up, Spin::Down),
        (Spin::Down, Spin::Up),
        (Spin::Down, Spin::Down),
    ]
    .into_iter()
    .enumerate()
    {
        let ka = a.eigenket(sa);
        let kb = b.eigenket(sb);
        let ket = [ka[0] * kb[0], ka[0] * kb[1], ka[1] * kb[0], ka[1] * kb[1]];
        let to_i: C64 = (0..4).map(|k| ket[k].conj() * i[k]).sum();
        let from_f: C64 = (0..4).map(|k| f[k].conj() * ket[k]).sum();
        w[n] = (from_f * to_i).norm_sqr();
    }
    let total: f64 = w.iter().sum();
    w.map(|x| x / total)
}

fn swap_parties(s: &PureState) -> PureState {
    let a = s.amplitudes();
    PureState::new(2, vec![a[0], a[2], a[1], a[3]]).unwrap()
}

fn random_ensemble(seed: u64) -> PrePostEnsemble {
    let mut r = rng(seed);
    let i = common::random_state(&mut r, 2);
    let f = common::random_state(&mut r, 2);
    PrePostEnsemble::new(i, f).unwrap()
}

fn random_dirs(seed: u64, n: usize) -> Vec<MeasurementDirection> {
    let mut r = rng(seed ^ 0x9e37_79b9);
    (0..n)
        .map(|_| MeasurementDirection::random(&mut r))
        .collect()
}

fn class_sampler(seed: u64, class: u8) -> PrePostEnsemble {
    let mut r = rng(seed);
    match class {
        0 => common::random_product_pair(&mut r),
        1 => common::random_max_entangled_pair(&mut r),
        _ => common::random_swapped_pair(&mut r),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn abl_matches_kronecker_oracle(seed in any::<u64>()) {
        let ens = random_ensemble(seed);
        let d = random_dirs(seed, 2);
        let dist = joint_local_abl(&ens, &[Some(d[0]), Some(d[1])]).unwrap();
        let oracle = brute_force_abl(&ens, &d[0], &d[1]);
        for (key, want) in ["uu", "ud", "du", "dd"].iter().zip(oracle) {
            prop_assert!((dist.get(key) - want).abs() < 1e-10, "{key}: {} vs {want}", dist.get(key));
        }
    }

    #[test]
    fn abl_is_normalized(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let ens = PrePostEnsemble::new(common::random_state(&mut r, n), common::random_state(&mut r, n)).unwrap();
        let dirs = random_dirs(seed, n);
        let assign: Vec<_> = dirs.iter().enumerate().map(|(k, d)| (k % 2 == 0 || n == 1).then_some(*d)).collect();
        let dist = joint_local_abl(&ens, &assign).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-12);
        prop_assert!(dist.iter().all(|(_, p)| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn relabeling_parties_transposes_statistics(seed in any::<u64>()) {
        let ens = random_ensemble(seed);
        let swapped = PrePostEnsemble::new(swap_parties(ens.initial()), swap_parties(ens.final_state())).unwrap();
        let d = random_dirs(seed, 2);
        let p = joint_local_abl(&ens, &[Some(d[0]), Some(d[1])]).unwrap();
        let q = joint_local_abl(&swapped, &[Some(d[1]), Some(d[0])]).unwrap();
        for (k, t) in [("uu", "uu"), ("ud", "du"), ("du", "ud"), ("dd", "dd")] {
            prop_assert!((p.get(k) - q.get(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn global_phases_do_not_change_statistics(seed in any::<u64>(), g1 in 0.0..6.3f64, g2 in 0.0..6.3f64) {
        let ens = random_ensemble(seed);
        let shifted = PrePostEnsemble::new(ens.initial().with_global_phase(g1), ens.final_state().with_global_phase(g2)).unwrap();
        let d = random_dirs(seed, 2);
        let p = joint_local_abl(&ens, &[Some(d[0]), Some(d[1])]).unwrap();
        let q = joint_local_abl(&shifted, &[Some(d[0]), Some(d[1])]).unwrap();
        for k in ["uu", "ud", "du", "dd"] {
            prop_assert!((p.get(k) - q.get(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn chsh_never_exceeds_four(seed in any::<u64>()) {
        let ens = random_ensemble(seed);
        let d = random_dirs(seed, 4);
        let s = ChshSettings { a: d[0], a_prime: d[1], b: d[2], b_prime: d[3] };
        match chsh_value(&ens, &s) {
            Ok(v) => prop_assert!((0.0..=4.0 + 1e-12).contains(&v), "B = {v}"),
            Err(Error::DegeneratePostSelection(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn causal_classes_have_unbiased_single_marginals(seed in any::<u64>(), class in 1u8..=2, alice in any::<bool>()) {
        let ens = class_sampler(seed, class);
        let d = random_dirs(seed, 1);
        let party = if alice { Party::A } else { Party::B };
        let m = marginal(&ens, party, &d[0], None).unwrap();
        prop_assert!((m - 0.5).abs() < 1e-10, "marginal {m}");
    }

    #[test]
    fn causal_classes_forbid_signaling(seed in any::<u64>(), class in 0u8..=2, alice in any::<bool>()) {
        let ens = class_sampler(seed, class);
        let d = random_dirs(seed, 3);
        let party = if alice { Party::A } else { Party::B };
        let dev = no_signal_deviation(&ens, party, &d[0], [&d[1], &d[2]]).unwrap();
        prop_assert!(dev < 1e-9, "deviation {dev}");
    }

    #[test]
    fn classification_ignores_global_phase(seed in any::<u64>(), class in 0u8..=2, g in 0.0..6.3f64) {
        let ens = class_sampler(seed, class);
        let shifted = PrePostEnsemble::new(ens.initial().with_global_phase(g), ens.final_state().clone()).unwrap();
        let a = classify(&ens, 1e-8).unwrap();
        let b = classify(&shifted, 1e-8).unwrap();
        prop_assert_eq!(a.name(), b.name());
        prop_assert!(a.is_causal());
    }

    #[test]
    fn family_value_matches_closed_form(alpha in 0.02..0.98f64, d in 0.0..1.0f64, theta in 0.0..6.3f64) {
        use std::f64::consts::PI;
        let ens = presets::swapped_z(alpha, theta).unwrap();
        let b = chsh_value(&ens, &family_settings(d, theta)).unwrap();
        let c = |wa: f64, wb: f64| prbox::swapped_correlation_closed_form(alpha, theta, wa, 0.0, wb, theta).unwrap();
        let (a, a2, b1, b2) = (1.5 * PI, PI, PI + PI * d / 4.0, PI - PI * d / 4.0);
        let want = (c(a, b1) - c(a, b2) + c(a2, b1) + c(a2, b2)).abs();
        prop_assert!((b - want).abs() < 1e-10, "{b} vs {want}");
        prop_assert!(b <= 4.0 + 1e-12);
    }
}

#[test]
fn family_optimum_tracks_unconstrained_optimum() {
    let cfg = ChshConfig::default();
    for alpha in [0.5, 0.3, 0.2, 0.1, 0.05] {
        let p = d_alpha(alpha, &cfg).unwrap();
        assert!(
            (p.b_max - p.unconstrained).abs() < 5e-3,
            "alpha {alpha}: family {} vs unconstrained {}",
            p.b_max,
            p.unconstrained
        );
        assert!(p.unconstrained >= p.b_max - 1e-9);
    }
}
