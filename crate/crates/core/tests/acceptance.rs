//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS or FAIL line, even when an earlier one fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use infostab::apps::{
    auth_bounds, channel_capacity, counterexample_message, dmc_necessary_condition, wiretap_c, wiretap_sweep, AuthScenario, DmcScenario,
    WiretapScenario,
};
use infostab::harness::run_with_args;
use infostab::prob::{binary_entropy, Channel, Pmf};
use infostab::spectrum::{default_t, image_ratio_check, min_quasi_image, verify_slice_union, Slicing, SpectrumAtom, SpectrumSource, Uniqueness};
use infostab::stabilizer::{build_net, net_gap};
use infostab::types::Caps;
use infostab::verify::{construction_suite, lemma_suite, stream_rng, Status};
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Slice membership and cardinality sandwiches on random pmfs.
fn slice_laws() -> Outcome {
    let mut violations = 0;
    for i in 0..1000u64 {
        let mut rng = stream_rng(1, i);
        let k = rng.gen_range(2..=64);
        let conc = *[0.1, 0.5, 1.0, 10.0].choose(&mut rng).unwrap();
        let p = Pmf::random(&mut rng, k, conc);
        let lambda = rng.gen_range(0.1..=4.0);
        let src = SpectrumSource::from_pmf(&p);
        let sl = Slicing::build(&src, lambda, default_t(lambda, 1, k)).unwrap();
        violations += sl.membership_violations(&src);
        violations += sl.cardinality_checks().iter().filter(|c| !(c.lower_holds && c.upper_holds)).count();
    }
    outcome(violations == 0, format!("1000 pmfs, {violations} violations"))
}

/// Smallest number of atoms with mass at least `eta`, by trying every subset.
fn exhaustive_min(p: &[f64], eta: f64) -> u32 {
    let k = p.len();
    (0u32..1 << k)
        .filter(|mask| (0..k).filter(|i| mask >> i & 1 == 1).map(|i| p[i]).sum::<f64>() >= eta)
        .map(|mask| mask.count_ones())
        .min()
        .unwrap()
}

/// Greedy quasi-image cardinality against exhaustive search, and the
/// slice-union certificate on tie-free instances.
fn quasi_images() -> Outcome {
    let mut mismatches = 0;
    let mut cert_failures = 0;
    let mut tie_free = 0;
    for i in 0..500u64 {
        let mut rng = stream_rng(2, i);
        let k = rng.gen_range(1..=12);
        let conc = *[0.2, 1.0, 5.0].choose(&mut rng).unwrap();
        let p = Pmf::random(&mut rng, k, conc);
        let eta = (rng.gen_range(0.01..=1.0) * p.probs().iter().sum::<f64>()).min(1.0);
        let atoms: Vec<SpectrumAtom> = p.probs().iter().map(|&q| SpectrumAtom { h: -q.log2(), log2_count: 0.0, mass: q }).collect();
        let greedy = min_quasi_image(&atoms, eta).unwrap().card() as u32;
        if greedy != exhaustive_min(p.probs(), eta) {
            mismatches += 1;
        }
        let lambda = rng.gen_range(0.1..=2.0);
        let sl = Slicing::build(&SpectrumSource::from_pmf(&p), lambda, default_t(lambda, 1, k.max(2))).unwrap();
        for s in 0..=sl.t() {
            let c = verify_slice_union(&atoms, &sl, s).unwrap();
            if c.uniqueness == Uniqueness::Unique {
                tie_free += 1;
                if !(c.is_minimum && c.upper_holds && c.lower_holds) {
                    cert_failures += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0 && cert_failures == 0,
        format!("500 instances, {mismatches} cardinality mismatches, {cert_failures} certificate failures over {tie_free} tie-free unions"),
    )
}

fn lemma_oracles() -> Outcome {
    let suites = lemma_suite(1, threads()).unwrap();
    let detail = suites.iter().map(|s| format!("{}: {} checks, {} violations", s.name, s.checks, s.violations)).collect::<Vec<_>>().join("; ");
    outcome(suites.iter().all(|s| s.ok()), detail)
}

fn image_ratios() -> Outcome {
    let caps = Caps::default();
    let mut violations = 0;
    let mut saturated = 0;
    for i in 0..100u64 {
        let mut rng = stream_rng(1, 4 << 32 | i);
        let n = rng.gen_range(2..=10);
        let size = rng.gen_range(1..=8usize.min(1 << n));
        let (a, b) = (rng.gen_range(0.02..=0.45), rng.gen_range(0.02..=0.45));
        let w = Channel::new(vec![vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        let alpha = rng.gen_range(0.05..=0.95);
        let beta = rng.gen_range(0.01..=(1.0 - alpha));
        let mut set: Vec<Vec<u32>> = Vec::new();
        while set.len() < size {
            let x: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            if !set.contains(&x) {
                set.push(x);
            }
        }
        let r = image_ratio_check(&set, &w, n, alpha, beta, &caps).unwrap();
        saturated += r.tau_saturated as usize;
        if !(r.lower_holds && r.upper_holds) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("100 instances, {violations} violations, {saturated} with saturated tau"))
}

fn verdict<'a>(r: &'a infostab::verify::StabilityReport, name: &str) -> Option<&'a infostab::verify::Verdict> {
    r.verdicts.iter().find(|v| v.name == name)
}

fn stable_subset(r: &infostab::verify::StabilityReport) -> Outcome {
    let floor = (50.0f64 / 8.0).log2() / 50.0;
    let (Some(m), Some(d)) = (verdict(r, "stable subset mass"), verdict(r, "stable subset deviation")) else {
        return outcome(false, "verdicts missing");
    };
    let ok = m.measured >= floor && m.status == Status::Pass && d.status == Status::Pass && d.bound == 3.0 * (-7.5f64).exp2();
    outcome(ok, format!("p_X(A†) = {:.6} >= {floor:.6}; deviation {:.3e} < {:.3e}", m.measured, d.measured, d.bound))
}

fn partition_residual(r: &infostab::verify::StabilityReport) -> Outcome {
    let bound = (-(24.0 / 50.0) * (50.0f64 / 8.0).log2()).exp2();
    let Some(res) = verdict(r, "partition residual") else {
        return outcome(false, "verdict missing");
    };
    let floor = (50.0f64 / 8.0).log2() / 50.0;
    let carves: Vec<_> = r.verdicts.iter().filter(|v| v.name.starts_with("carve ")).collect();
    let carves_ok = carves.iter().all(|v| v.measured >= floor && v.status == Status::Pass);
    let ok = res.measured < bound && (res.bound - bound).abs() < 1e-15 && carves_ok;
    outcome(ok, format!("p_V(0) = {:.3e} < {bound:.6}; {} carves each >= {floor:.6}", res.measured, carves.len()))
}

fn message_stabilizer(r: &infostab::verify::StabilityReport) -> Outcome {
    let Some(cov) = verdict(r, "message 0 coverage") else {
        return outcome(false, "verdict missing");
    };
    let devs: Vec<_> = r.verdicts.iter().filter(|v| v.name.starts_with("message 0 label")).collect();
    let ok = cov.measured >= 1.0 - 1.0 / 32.0 && cov.status == Status::Pass && !devs.is_empty() && devs.iter().all(|v| v.measured == 0.0);
    outcome(ok, format!("stable mass {:.6} >= {:.6}; {} labels with deviation 0", cov.measured, 1.0 - 1.0 / 32.0, devs.len()))
}

fn net_gaps() -> Outcome {
    let net = build_net(0.2, 2, 2, &Caps::default()).unwrap();
    let mut worst = 0.0f64;
    let mut violations = 0;
    for i in 0..10_000u64 {
        let mut rng = stream_rng(8, i);
        let conc = *[0.1, 1.0, 10.0].choose(&mut rng).unwrap();
        let w = Channel::random(&mut rng, 2, 2, conc);
        let g = net_gap(&w, &net.nearest(&w).unwrap());
        worst = worst.max(g);
        violations += (g > 0.1) as usize;
    }
    let ok = violations == 0 && net.cardinality <= net.cardinality_bound;
    outcome(ok, format!("|net| = {} <= {:.3e}; max gap {worst:.4} bits, {violations} above 0.1", net.cardinality, net.cardinality_bound))
}

fn dmc_counterexample() -> Outcome {
    let w = Channel::bsc(0.1).unwrap();
    let closed = 1.0 - binary_entropy(0.1);
    let cap = channel_capacity(&w, 1e-12).unwrap().capacity;
    let r = dmc_necessary_condition(&DmcScenario {
        channel: w,
        message: counterexample_message(64, closed),
        n: 64,
        capacity: closed,
        zeta: 0.02,
        delta: 0.0,
    })
    .unwrap();
    let ok = (cap - closed).abs() < 1e-9 && r.lhs == 0.25 && r.entropy_rate < closed;
    outcome(ok, format!("lhs = {}, H(M)/n = {:.4} < C = {closed:.4}", r.lhs, r.entropy_rate))
}

fn wiretap() -> Outcome {
    let main = Channel::bsc(0.05).unwrap();
    let eve = main.then(&Channel::bsc(1.0 / 6.0).unwrap()).unwrap();
    let s = WiretapScenario::new(main, eve).unwrap();
    let target = binary_entropy(0.2) - binary_entropy(0.05);
    let c0 = wiretap_c(&s, 0.0, 32, 1e-9, 1, threads(), None).unwrap().value;
    let ells: Vec<f64> = (0..=6).map(|k| k as f64 * 0.05).collect();
    let sweep = wiretap_sweep(&s, &ells, 32, 1e-9, 1, threads()).unwrap();
    let monotone = sweep.windows(2).all(|p| p[1].value >= p[0].value);
    let ok = (c0 - target).abs() < 5e-3 && monotone;
    let values = sweep.iter().map(|e| format!("{:.4}", e.value)).collect::<Vec<_>>().join(", ");
    outcome(ok, format!("c(0) = {c0:.6} vs {target:.6}; c over 0..0.3: [{values}]"))
}

fn random_auth(i: u64) -> AuthScenario {
    let mut rng = stream_rng(11, i);
    let n = rng.gen_range(1..=4);
    let nk = rng.gen_range(1..=4);
    let nm = rng.gen_range(1..=2);
    let ws = Channel::random(&mut rng, 2, 2, 1.0);
    let wi = Channel::random(&mut rng, 2, 2, 1.0);
    let seq = |rng: &mut rand_chacha::ChaCha8Rng| (0..n).map(|_| rng.gen_range(0..2u32)).collect::<Vec<u32>>();
    let encoder = (0..nm).map(|_| (0..nk).map(|_| seq(&mut rng)).collect()).collect();
    let sets = (0..nk).map(|_| (0..rng.gen_range(1..=3)).map(|_| seq(&mut rng)).collect()).collect();
    let key = if rng.gen_bool(0.5) { Pmf::uniform(nk) } else { Pmf::random(&mut rng, nk, 1.0) };
    AuthScenario::new(ws, wi, n, key, Pmf::uniform(nm), encoder, sets).unwrap()
}

fn authentication() -> Outcome {
    let mut failures = 0;
    let mut min_slack = f64::INFINITY;
    let mut bound1_defined = 0;
    for i in 0..50 {
        let r = auth_bounds(&random_auth(i), &Caps::default()).unwrap();
        failures += !r.ok() as usize;
        bound1_defined += r.bound1.is_some() as usize;
        for s in [r.slack1, r.slack2].into_iter().flatten() {
            min_slack = min_slack.min(s);
        }
    }
    outcome(
        failures == 0,
        format!("50 scenarios, {failures} violations, min slack {min_slack:.4}, first bound defined on {bound1_defined}"),
    )
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p: PathBuf| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let runs: Vec<Vec<String>> = vec![
        vec!["stabilize".into(), "--channel".into(), data("bsc01.json"), "--n".into(), "50".into(), "--alpha".into(), "0.15".into(), "--zeta".into(), "25".into()],
        vec!["auth".into(), "--ws".into(), data("bsc01.json"), "--wi".into(), data("bsc03.json"), "--scenario".into(), data("auth3.json"), "--n".into(), "3".into(), "--brute-force".into()],
        vec!["dmc-converse".into(), "--channel".into(), data("bsc01.json"), "--message".into(), "counterexample".into(), "--n".into(), "64".into(), "--zeta".into(), "0.02".into()],
        vec!["spectrum".into(), "--pmf".into(), data("skewed.json"), "--lambda".into(), "0.5".into(), "--n".into(), "8".into()],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        let outputs: Vec<_> = (0..2)
            .map(|k| {
                let dir = tempfile::tempdir().unwrap();
                let mut full = vec!["specinfo".to_string(), "--out".into(), dir.path().display().to_string(), "--threads".into(), (k + 1).to_string()];
                full.extend(args.iter().cloned());
                let code = run_with_args(full, &mut std::io::sink(), &mut std::io::sink());
                (code, read_dir(dir.path()))
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].0 != 0 || outputs[0].1.is_empty() {
            differing.push(args[0].clone());
        }
    }
    outcome(differing.is_empty(), format!("{} subcommands rerun; differing: {differing:?}", runs.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, title: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = limit.map_or(true, |l| took <= l);
        let ok = o.ok && in_time;
        failed += !ok as usize;
        let limit_note = limit.map_or(String::new(), |l| format!(" (limit {} s)", l.as_secs()));
        println!(
            "acceptance {id:>2} {}: {title}: {} [{:.2} s{limit_note}]",
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    report(1, "slice laws", secs(10), &mut slice_laws);
    report(2, "minimum quasi-images", secs(60), &mut quasi_images);
    report(3, "lemma oracles", None, &mut lemma_oracles);
    report(4, "image-ratio sandwich", secs(300), &mut image_ratios);
    let start = Instant::now();
    let constructions = construction_suite().unwrap();
    let built = start.elapsed();
    report(5, "stable subset", secs(30), &mut || {
        let mut o = stable_subset(&constructions);
        o.detail.push_str(&format!("; constructions built in {:.2} s", built.as_secs_f64()));
        o.ok &= built <= Duration::from_secs(30);
        o
    });
    report(6, "partition residual", None, &mut || partition_residual(&constructions));
    report(7, "message stabilizer", None, &mut || message_stabilizer(&constructions));
    report(8, "channel net", secs(30), &mut net_gaps);
    report(9, "dmc counterexample", None, &mut dmc_counterexample);
    report(10, "wiretap closed form and monotonicity", secs(60), &mut wiretap);
    report(11, "authentication", secs(120), &mut authentication);
    report(12, "determinism", None, &mut determinism);
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
