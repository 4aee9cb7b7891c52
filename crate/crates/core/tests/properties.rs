use infostab::apps::{auth_bounds, brute_force_attack, counterexample_message, wiretap_sweep, AuthScenario, WiretapScenario};
use infostab::harness::{fmt_f64, parse_config};
use infostab::prob::{Channel, Pmf};
use infostab::spectrum::{Slicing, SpectrumSource};
use infostab::types::Caps;
use infostab::verify::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn random_auth(seed: u64) -> AuthScenario {
    let mut rng = stream_rng(seed, 0);
    let n = rng.gen_range(1..=3);
    let nk = rng.gen_range(1..=3);
    let nm = rng.gen_range(1..=2);
    let ws = Channel::random(&mut rng, 2, 2, 1.0);
    let wi = Channel::random(&mut rng, 2, 2, 1.0);
    let seq = |rng: &mut rand_chacha::ChaCha8Rng| (0..n).map(|_| rng.gen_range(0..2u32)).collect::<Vec<u32>>();
    let encoder = (0..nm).map(|_| (0..nk).map(|_| seq(&mut rng)).collect()).collect();
    let sets = (0..nk).map(|_| (0..rng.gen_range(1..=2)).map(|_| seq(&mut rng)).collect()).collect();
    let key = Pmf::random(&mut rng, nk, 1.0);
    AuthScenario::new(ws, wi, n, key, Pmf::uniform(nm), encoder, sets).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn slices_partition_the_mass(weights in prop::collection::vec(0.01f64..1.0, 2..12), lambda in 0.2f64..2.0, t in 1u32..8) {
        let p = Pmf::from_weights(&weights).unwrap();
        let src = SpectrumSource::from_pmf(&p);
        let sl = Slicing::build(&src, lambda, t).unwrap();
        prop_assert_eq!(sl.membership_violations(&src), 0);
        let total: f64 = sl.slices().iter().map(|s| s.mass).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for c in sl.cardinality_checks() {
            prop_assert!(c.lower_holds && c.upper_holds, "{:?}", c);
        }
        let etas: Vec<f64> = sl.slices().iter().map(|s| s.eta).collect();
        prop_assert!(etas.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn counterexample_entropy_is_closed_form(n in 1usize..200, c in 0.01f64..1.0) {
        let law = counterexample_message(n, c);
        let expect = 0.75 * (4.0f64 / 3.0).log2()
            + 0.25 * (2.0 * n as f64 * c + 2.0);
        prop_assert!((law.entropy() - expect).abs() < 1e-9 * expect.max(1.0));
        prop_assert!((law.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fmt_f64_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let back: f64 = fmt_f64(v).parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn config_hash_ignores_threads(seed in any::<u64>(), eps in 0.05f64..0.5, threads in 1usize..8) {
        let s = seed.to_string();
        let e = eps.to_string();
        let t = threads.to_string();
        let a = parse_config(["specinfo", "net", "--eps", e.as_str(), "--seed", s.as_str()]).unwrap();
        let b = parse_config(["specinfo", "--threads", t.as_str(), "--out", "/tmp/x", "net", "--eps", e.as_str(), "--seed", s.as_str()]).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        prop_assert_eq!(a.canonical_json(), b.canonical_json());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimal_attack_dominates_every_strategy(seed in any::<u64>()) {
        let s = random_auth(seed);
        let a = brute_force_attack(&s).unwrap();
        prop_assert!(a.dominates);
        for st in &a.strategies {
            prop_assert!(st.success <= a.success + 1e-12, "{} {} > {}", st.name, st.success, a.success);
        }
        prop_assert!(a.success > 0.0 && a.success <= 1.0 + 1e-12);
    }

    #[test]
    fn auth_bounds_hold(seed in any::<u64>()) {
        let r = auth_bounds(&random_auth(seed), &Caps::default()).unwrap();
        prop_assert!(r.ok());
    }

    #[test]
    fn wiretap_sweep_is_monotone(p in 0.0f64..0.2, q in 0.1f64..0.5, seed in any::<u64>()) {
        let s = WiretapScenario::with_sizes(Channel::bsc(p).unwrap(), Channel::bsc(q).unwrap(), 2, 2).unwrap();
        let ells = [0.0, 0.05, 0.2, 0.5];
        let est = wiretap_sweep(&s, &ells, 3, 1e-7, seed, 1).unwrap();
        prop_assert!(est.windows(2).all(|w| w[0].value <= w[1].value + 1e-12));
        for e in &est {
            prop_assert!(e.value >= -1e-12 && e.value <= 1.0 + 1e-9);
        }
    }
}
