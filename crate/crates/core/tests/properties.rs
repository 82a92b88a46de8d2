mod common;

use num_rational::Ratio;
use proptest::prelude::*;

use cdqs_core::channel::{choi_from_kraus, identity_channel, kraus_from_choi, QuantumChannel};
use cdqs_core::protocol::decoupling_check;
use cdqs_core::reductions::{l2_closed_form, l2_distinguisher_exact, l2_distinguisher_probability};
use cdqs_core::sdp::diamond_norm_channels;
use cdqs_core::tensor::{fidelity, random_density, rng_from_seed, trace_distance, ComplexMatrix};
use cdqs_core::transforms::{qss_2of2, qss_2of3, SharingScheme};
use common::{apply_via_choi, random_channel};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn choi_kraus_round_trip(d_in in 1usize..5, d_out in 1usize..5, rank in 1usize..5, seed in any::<u64>()) {
        let ch = random_channel(d_in, d_out, rank, seed);
        let choi = choi_from_kraus(ch.kraus(), d_in, d_out);
        let back = kraus_from_choi(&choi, d_in, d_out);
        prop_assert!(back.len() <= d_in * d_out);
        let again = choi_from_kraus(&back, d_in, d_out);
        prop_assert!((&again - &choi).norm() < 1e-10);

        let rebuilt = QuantumChannel::from_choi(choi.clone(), ch.in_dims().clone(), ch.out_dims().clone()).unwrap();
        let rho = random_density(d_in, d_in, &mut rng_from_seed(seed ^ 1));
        let direct = ch.apply(&rho).unwrap();
        prop_assert!((&direct - apply_via_choi(&choi, &rho, d_out)).norm() < 1e-10);
        prop_assert!((&direct - rebuilt.apply(&rho).unwrap()).norm() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fuchs_van_de_graaf(d in 2usize..7, r1 in 1usize..7, r2 in 1usize..7, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density(d, r1.min(d), &mut rng);
        let sigma = random_density(d, r2.min(d), &mut rng);
        let t = 0.5 * trace_distance(&rho, &sigma).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!(1.0 - f.sqrt() <= t + 1e-9, "t = {}, f = {}", t, f);
        prop_assert!(t <= (1.0 - f).max(0.0).sqrt() + 1e-9, "t = {}, f = {}", t, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn decoupling_sandwich(d_out in 2usize..5, rank in 1usize..4, seed in any::<u64>()) {
        let ch = random_channel(2, d_out, rank, seed);
        let c = decoupling_check(&ch).unwrap();
        prop_assert!(c.eps_lb <= c.eps_ub + 1e-7);
        prop_assert!(c.lhs <= c.mid + 1e-7, "{:?}", c);
        prop_assert!(c.mid_lb <= c.rhs + 1e-7, "{:?}", c);
        prop_assert!(c.mid_lb <= c.mid + 1e-7);
    }
}

fn authorized_recover(s: &SharingScheme) {
    let d = s.encoder.d_in();
    for (shares, rec) in &s.reconstructors {
        let end = s.encoder.trace_output(shares).unwrap().then(rec).unwrap();
        let err = diamond_norm_channels(&end, &identity_channel(d)).unwrap();
        assert!(err.value <= 1e-7, "shares {shares:?}: {err:?}");
    }
}

/// Output of a single share, for a random input and for the maximally mixed one.
fn single_share_outputs(s: &SharingScheme, share: usize, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    let d = s.encoder.d_in();
    let view = s.encoder.trace_output(&[share]).unwrap();
    let rho = random_density(d, d, &mut rng_from_seed(seed));
    let mixed = ComplexMatrix::identity(d, d) / cdqs_core::tensor::cr(d as f64);
    (view.apply(&rho).unwrap(), view.apply(&mixed).unwrap())
}

#[test]
fn qss_authorized_sets_recover() {
    authorized_recover(&qss_2of2().unwrap());
    authorized_recover(&qss_2of3().unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn qss_unauthorized_sets_learn_nothing(seed in any::<u64>()) {
        let two = qss_2of2().unwrap();
        let three = qss_2of3().unwrap();
        for (s, share) in [(&two, 0), (&two, 1), (&three, 0), (&three, 1), (&three, 2)] {
            let (a, b) = single_share_outputs(s, share, seed);
            prop_assert!((&a - &b).norm() < 1e-10, "share {}", share);
        }
    }

    #[test]
    fn l2_identity_is_exact(w0 in proptest::collection::vec(0i128..20, 1..9), shift in 0usize..8, seed in 0i128..20) {
        let n = w0.len();
        let w1: Vec<i128> = (0..n).map(|i| (w0[(i + shift) % n] + seed * (i as i128 % 3)) % 23).collect();
        prop_assume!(w0.iter().sum::<i128>() > 0 && w1.iter().sum::<i128>() > 0);
        let norm = |w: &[i128]| {
            let total: i128 = w.iter().sum();
            w.iter().map(|&x| Ratio::new(x, total)).collect::<Vec<_>>()
        };
        let (d0, d1) = (norm(&w0), norm(&w1));
        let l2: Ratio<i128> = d0.iter().zip(&d1).map(|(a, b)| (a - b) * (a - b)).sum();
        let expected = Ratio::new(1, 2) + l2 / 8;
        prop_assert_eq!(l2_distinguisher_exact(&d0, &d1), expected);
        prop_assert_eq!(l2_distinguisher_probability(&d0, &d1), expected);
        prop_assert_eq!(l2_closed_form(&d0, &d1), expected);
    }
}
