use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::{fmt_f64, Command, ExperimentConfig, MetricArg, Report, SuiteKind, Table};
use crate::apps::{
    auth_bounds, channel_capacity, counterexample_message, dmc_necessary_condition, wiretap_bounds, wiretap_sweep, AuthScenarioFile,
    DmcScenario, MessageLaw, Metric, WiretapScenario,
};
use crate::error::{Error, Result};
use crate::prob::{Channel, ChannelFile, Pmf, PmfFile};
use crate::spectrum::{default_t, min_quasi_image, Slicing, SpectrumSource};
use crate::stabilizer::{build_net, build_stable_subset, carve_partition, net_gap, net_threshold_n, StableParams};
use crate::types::{ChannelModel, JointSource};
use crate::verify::{
    construction_suite, daco_entropy_suite, dacosupport_suite, lemma_suite, olalt_suite, only_lemma_suite, par_map, run_report,
    stream_rng, Construction, StabilityReport, Status, SuiteResult, Verdict,
};

fn load_channel(p: &Path) -> Result<Channel> {
    ChannelFile::parse(&fs::read_to_string(p)?)
}

fn load_pmf(p: &Path) -> Result<Pmf> {
    PmfFile::parse(&fs::read_to_string(p)?)
}

fn value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn verdict_table(name: &str, verdicts: &[Verdict]) -> Table {
    let mut t = Table::new(name, &["name", "formula", "measured", "relation", "bound", "status", "note"]);
    for v in verdicts {
        t.push(vec![
            v.name.clone(),
            v.formula.clone(),
            fmt_f64(v.measured),
            label(&v.relation),
            fmt_f64(v.bound),
            label(&v.status),
            v.note.clone().unwrap_or_default(),
        ]);
    }
    t
}

/// Runs one validated configuration.
pub fn execute(cfg: &ExperimentConfig) -> Result<Report> {
    let name = cfg.command.name().to_string();
    let mut report = match &cfg.command {
        Command::Spectrum { pmf, lambda, t, n, eta } => spectrum(cfg, &load_pmf(pmf)?, *lambda, *t, *n, *eta)?,
        Command::Stabilize { channel, input, n, alpha, zeta } => {
            let w = load_channel(channel)?;
            let p = match input {
                Some(path) => load_pmf(path)?,
                None => Pmf::uniform(w.inputs()),
            };
            stabilize(cfg, &w, &p, *n, *alpha, *zeta)?
        }
        Command::Net { eps, nx, ny, samples } => net(cfg, *eps, *nx, *ny, *samples)?,
        Command::Verify { suite, instances } => verify(cfg, *suite, *instances)?,
        Command::DmcConverse { channel, message, n, zeta, delta } => {
            let w = load_channel(channel)?;
            let cap = channel_capacity(&w, 1e-10)?;
            let law = match message {
                Some(path) => MessageLaw::explicit(load_pmf(path)?.probs())?,
                None => counterexample_message(*n, cap.capacity),
            };
            let r = dmc_necessary_condition(&DmcScenario {
                channel: w,
                message: law,
                n: *n,
                capacity: cap.capacity,
                zeta: *zeta,
                delta: *delta,
            })?;
            Report {
                body: json!({"message": if message.is_some() { "file" } else { "counterexample" }, "condition": value(&r)?, "capacity_input": cap.input.probs()}),
                ..Default::default()
            }
        }
        Command::Wiretap { main, eve, delta, ell, metric, restarts, tol, n, sweep } => {
            let s = WiretapScenario::new(load_channel(main)?, load_channel(eve)?)?;
            let m = match metric {
                MetricArg::Weak => Metric::WeakLeakage,
                MetricArg::Variational => Metric::Variational,
            };
            let bound = wiretap_bounds(&s, m, *delta, *ell, *n, *restarts, *tol, cfg.seed, cfg.threads)?;
            let mut body = json!({"t_size": s.t_size, "v_size": s.v_size, "bound": value(&bound)?});
            let mut tables = Vec::new();
            if let Some(ells) = sweep {
                let mut sorted = ells.clone();
                sorted.sort_by(f64::total_cmp);
                let est = wiretap_sweep(&s, &sorted, *restarts, *tol, cfg.seed, cfg.threads)?;
                let mut t = Table::new("sweep", &["ell", "c", "i_yv", "i_yv_t", "i_zv_t"]);
                for e in &est {
                    let x = &e.solution;
                    t.push(vec![fmt_f64(e.ell), fmt_f64(e.value), fmt_f64(x.i_yv), fmt_f64(x.i_yv_t), fmt_f64(x.i_zv_t)]);
                }
                body["sweep"] = est.iter().map(|e| json!({"ell": e.ell, "c": e.value})).collect();
                tables.push(t);
            }
            Report { body, tables, ..Default::default() }
        }
        Command::Auth { ws, wi, scenario, n, brute_force } => {
            let file = AuthScenarioFile::parse(&fs::read_to_string(scenario)?)?;
            if file.n != *n {
                return Err(Error::precondition(format!("scenario file has n = {}, command line has n = {n}", file.n)));
            }
            let s = file.into_scenario(load_channel(ws)?, load_channel(wi)?)?;
            let r = auth_bounds(&s, &cfg.caps)?;
            let mut rows = Table::new("bounds", &["bound", "u", "p_u", "w", "accept", "eligible", "main", "order", "slack"]);
            for row in &r.rows {
                rows.push(vec![
                    row.bound.to_string(),
                    format!("{:?}", row.u),
                    fmt_f64(row.p_u),
                    row.w.clone(),
                    fmt_f64(row.accept),
                    row.eligible.to_string(),
                    fmt_f64(row.main),
                    fmt_f64(r.order),
                    fmt_f64(row.main + r.order - r.beta),
                ]);
            }
            let mut tables = vec![rows];
            let mut body = value(&r)?;
            if let Value::Object(o) = &mut body {
                o.remove("rows");
                if !brute_force {
                    o.remove("attack");
                }
            }
            if *brute_force {
                let mut t = Table::new("strategies", &["strategy", "success", "exponent"]);
                t.push(vec!["optimal".into(), fmt_f64(r.attack.success), fmt_f64(r.attack.beta)]);
                for st in &r.attack.strategies {
                    t.push(vec![st.name.clone(), fmt_f64(st.success), fmt_f64(-st.success.log2())]);
                }
                tables.push(t);
            }
            Report { body, tables, verification_failed: !r.ok(), ..Default::default() }
        }
        Command::Capacity { channel, tol } => {
            let c = channel_capacity(&load_channel(channel)?, *tol)?;
            Report { body: value(&c)?, ..Default::default() }
        }
    };
    report.name = name;
    Ok(report)
}

fn spectrum(cfg: &ExperimentConfig, p: &Pmf, lambda: f64, t: Option<u32>, n: Option<usize>, eta: Option<f64>) -> Result<Report> {
    let (source, blocklength) = match n {
        Some(n) => {
            let src = JointSource::iid(n, p, &cfg.caps)?;
            (SpectrumSource::from_classes(&src.x_marginal(), src.space()), n)
        }
        None => (SpectrumSource::from_pmf(p), 1),
    };
    let t = t.unwrap_or_else(|| default_t(lambda, blocklength, p.len()));
    let slicing = Slicing::build(&source, lambda, t)?;
    let mut table = Table::new("slices", &["s", "lambda_s", "count", "log2_count", "mass", "eta"]);
    for sl in slicing.slices() {
        table.push(vec![
            sl.s.to_string(),
            fmt_f64(sl.s as f64 * lambda),
            fmt_f64(sl.log2_card.exp2()),
            fmt_f64(sl.log2_card),
            fmt_f64(sl.mass),
            fmt_f64(sl.eta),
        ]);
    }
    let checks = slicing.cardinality_checks();
    let mut body = json!({
        "n": blocklength,
        "lambda": lambda,
        "t": t,
        "membership_violations": slicing.membership_violations(&source),
        "cardinality_violations": checks.iter().filter(|c| !(c.lower_holds && c.upper_holds)).count(),
        "slices": value(&slicing.slices())?,
        "cardinality_checks": value(&checks)?,
    });
    if let (Some(eta), Some(atoms)) = (eta, source.atoms()) {
        let q = min_quasi_image(atoms, eta)?;
        body["quasi_image"] = json!({"eta": eta, "log2_card": q.log2_card, "mass": q.mass});
    }
    let failed = body["membership_violations"] != 0 || body["cardinality_violations"] != 0;
    Ok(Report { body, tables: vec![table], verification_failed: failed, ..Default::default() })
}

fn stabilize(cfg: &ExperimentConfig, w: &Channel, p: &Pmf, n: usize, alpha: f64, zeta: Option<usize>) -> Result<Report> {
    if p.len() != w.inputs() {
        return Err(Error::precondition("input pmf and channel disagree on the input alphabet"));
    }
    let src = JointSource::iid(n, p, &cfg.caps)?;
    let model = ChannelModel::new(src.space(), w, &cfg.caps)?;
    let params = StableParams::new(n, w.outputs(), alpha, cfg.unsafe_ok)?;
    let subset = build_stable_subset(&model, &src.x_marginal(), &params)?;
    let mut report = run_report(&Construction::Subset(&subset));
    let mut body = json!({"subset": value(&subset)?});
    if let Some(z) = zeta {
        let part = carve_partition(&src, &model, &params, z)?;
        report.extend(run_report(&Construction::Partition(&part)));
        body["partition"] = value(&part)?;
    }
    report.instance = format!("{}, n={n}, alpha={alpha}", w.name());
    Ok(stability(report, body))
}

fn stability(report: StabilityReport, mut body: Value) -> Report {
    let failed = report.failures() > 0;
    let table = verdict_table("verdicts", &report.verdicts);
    body["summary"] = json!({
        "instance": report.instance,
        "in_range": report.in_range,
        "pass": report.count(Status::Pass),
        "vacuous": report.count(Status::VacuousPass),
        "fail": report.count(Status::Fail),
        "indeterminate": report.count(Status::Indeterminate),
    });
    body["constants"] = report.constants.iter().map(|(k, v)| json!({"name": k, "value": v})).collect();
    body["verdicts"] = serde_json::to_value(&report.verdicts).unwrap_or(Value::Null);
    Report { body, tables: vec![table], verification_failed: failed, ..Default::default() }
}

fn net(cfg: &ExperimentConfig, eps: f64, nx: usize, ny: usize, samples: usize) -> Result<Report> {
    let net = build_net(eps, nx, ny, &cfg.caps)?;
    let idx: Vec<usize> = (0..samples).collect();
    let gaps = par_map(&idx, cfg.threads, |i, _| -> Result<f64> {
        let mut rng = stream_rng(cfg.seed, i as u64);
        let w = Channel::random(&mut rng, nx, ny, 1.0);
        Ok(net_gap(&w, &net.nearest(&w)?))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let limit = eps / 2.0;
    let violations = gaps.iter().filter(|g| **g > limit).count();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let mut table = Table::new("gaps", &["sample", "gap"]);
    for (i, g) in gaps.iter().enumerate() {
        table.push(vec![i.to_string(), fmt_f64(*g)]);
    }
    let card_ok = net.cardinality <= net.cardinality_bound;
    let body = json!({
        "eps": eps,
        "eps_tilde": net.eps_tilde,
        "nx": nx,
        "ny": ny,
        "grid_rows": net.rows.len(),
        "cardinality": net.cardinality,
        "cardinality_bound": net.cardinality_bound,
        "cardinality_ok": card_ok,
        "samples": samples,
        "gap_limit": limit,
        "max_gap": max_gap,
        "violations": violations,
        "threshold_n": net_threshold_n(eps, nx, ny),
    });
    Ok(Report { body, tables: vec![table], verification_failed: violations > 0 || !card_ok, ..Default::default() })
}

fn verify(cfg: &ExperimentConfig, suite: SuiteKind, instances: Option<usize>) -> Result<Report> {
    let mut suites: Vec<SuiteResult> = Vec::new();
    if suite != SuiteKind::Constructions {
        suites = match instances {
            None => lemma_suite(cfg.seed, cfg.threads)?,
            Some(k) => vec![
                daco_entropy_suite(cfg.seed, k, cfg.threads)?,
                only_lemma_suite(cfg.seed, k, cfg.threads)?,
                olalt_suite(cfg.seed, k, cfg.threads)?,
                dacosupport_suite(cfg.seed, k, cfg.threads)?,
            ],
        };
    }
    let mut table = Table::new("suites", &["suite", "instances", "checks", "pass", "vacuous", "fail", "indeterminate"]);
    for s in &suites {
        table.push(vec![
            s.name.clone(),
            s.instances.to_string(),
            s.checks.to_string(),
            s.passes.to_string(),
            s.vacuous.to_string(),
            s.violations.to_string(),
            s.indeterminate.to_string(),
        ]);
    }
    let lemma_failed = suites.iter().any(|s| !s.ok());
    let mut body = json!({"suites": value(&suites)?});
    let mut tables = vec![table];
    let mut failed = lemma_failed;
    if suite != SuiteKind::Lemmas {
        let r = stability(construction_suite()?, json!({}));
        failed |= r.verification_failed;
        body["constructions"] = r.body;
        tables.extend(r.tables);
    }
    Ok(Report { body, tables, verification_failed: failed, ..Default::default() })
}
