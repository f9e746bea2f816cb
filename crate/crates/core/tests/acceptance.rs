//! Acceptance gate. Run with `cargo test -p sqpc-core --test acceptance`.
//! Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use sqpc_core::adversaries::DoubleCnotEve;
use sqpc_core::harness::{
    aggregate, equation_suite, estimate_detection_curve, render_report, run_experiment, run_trial,
    run_trials, Attack, ExperimentSpec, ReportFormat, SecretPolicy,
};
use sqpc_core::improved::{qubit_efficiency, run_improved_session, Efficiency, ImprovedConfig};
use sqpc_core::jiang::{run_session, SessionConfig};
use sqpc_core::kernel::{Amplitude, AMPLITUDE_TOLERANCE};
use sqpc_core::{
    BellState, BitString, ChannelTap, ComparisonOutcome, ProtocolKind, QubitRef, SimRng,
    StateVector,
};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict, u64);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(elapsed: Duration, budget: Duration, v: Verdict) -> Verdict {
    let timed = |d: String| {
        format!(
            "{d} [{:.2}s of {}s]",
            elapsed.as_secs_f64(),
            budget.as_secs()
        )
    };
    match v {
        Ok(d) if elapsed <= budget => Ok(timed(d)),
        Ok(d) => Err(timed(format!("{d}; over time budget"))),
        Err(d) => Err(timed(d)),
    }
}

fn in_band(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn spec(
    scenario: ProtocolKind,
    attack: Attack,
    secret_len: usize,
    trials: usize,
    seed: u64,
) -> ExperimentSpec {
    ExperimentSpec {
        secret_len,
        trials,
        seed,
        ..ExperimentSpec::new(scenario, attack)
    }
}

fn equation_suite_exact() -> Verdict {
    let checks = equation_suite();
    let failed: Vec<_> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    check(
        failed.is_empty() && checks.len() == 5,
        format!(
            "{}/{} amplitude checks pass; failed {failed:?}",
            checks.len() - failed.len(),
            checks.len()
        ),
    )
}

fn silent_ctrl_restoration() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for (i, state) in BellState::ALL.into_iter().enumerate() {
        let (mut checked, mut mismatches, mut aborts) = (0, 0, 0);
        let mut seed = 1000 * i as u64;
        let zeros = BitString::zeros(16);
        while checked < 10_000 {
            let config = SessionConfig::new(16, seed).with_point_mass(state);
            let mut taps: Vec<Box<dyn ChannelTap>> = vec![Box::new(DoubleCnotEve::on_both())];
            let out = run_session(&config, &zeros, &zeros, &zeros, &mut taps)
                .map_err(|e| e.to_string())?;
            checked += out.transcript.ctrl_checked;
            mismatches += out.transcript.ctrl_mismatches;
            aborts += out.transcript.outcome.is_aborted() as usize;
            seed += 1;
        }
        ok &= mismatches == 0 && aborts == 0;
        details.push(format!("{state}: {mismatches} mismatches in {checked}"));
    }
    check(ok, details.join(", "))
}

fn half_leak_double_cnot() -> Verdict {
    let stats = run_experiment(&spec(
        ProtocolKind::Jiang,
        Attack::DoubleCnot,
        32,
        10_000,
        3,
    ))
    .map_err(|e| e.to_string())?;
    let m = |k: &str| stats.metrics[k].mean;
    let (indicator, leak, acc, aborted) = (
        m("sift_indicator_rate"),
        m("leak_fraction"),
        m("leak_accuracy"),
        m("aborted"),
    );
    check(
        in_band(indicator, 0.48, 0.52) && in_band(leak, 0.48, 0.52) && acc == 1.0 && aborted == 0.0,
        format!("indicator {indicator:.4}, leak {leak:.4}, accuracy {acc}, abort rate {aborted}"),
    )
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Every way to pick `l` SIFT positions out of `2l`, as bitmasks.
fn balanced_arrangements(l: usize) -> Vec<u32> {
    (0u32..1 << (2 * l))
        .filter(|m| m.count_ones() as usize == l)
        .collect()
}

fn malicious_agent() -> Verdict {
    let stats = run_experiment(&spec(
        ProtocolKind::Jiang,
        Attack::MaliciousAgent,
        32,
        10_000,
        4,
    ))
    .map_err(|e| e.to_string())?;
    let m = |k: &str| stats.metrics[k].mean;
    let (frac, acc, detected) = (
        m("inferred_fraction"),
        m("inferred_accuracy"),
        m("detected"),
    );
    let main_ok = in_band(frac, 0.48, 0.52) && acc == 1.0 && detected == 0.0;

    // L = 2: the agent learns one victim bit per position both parties SIFT.
    let arrangements = balanced_arrangements(2);
    let mut oracle = [0.0f64; 3];
    for a in &arrangements {
        for b in &arrangements {
            oracle[(a & b).count_ones() as usize] += 1.0;
        }
    }
    let total = (arrangements.len() * arrangements.len()) as f64;
    assert_eq!(total, binomial(4, 2).powi(2));
    oracle.iter_mut().for_each(|p| *p /= total);
    let oracle_mean: f64 = oracle
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 / 2.0 * p)
        .sum();

    let n = 20_000;
    let trials = run_trials(&spec(ProtocolKind::Jiang, Attack::MaliciousAgent, 2, n, 44))
        .map_err(|e| e.to_string())?;
    let mut counts = [0usize; 3];
    for t in &trials {
        counts[(t.inferred_fraction * 2.0).round() as usize] += 1;
    }
    let mut small_ok = (oracle_mean - 0.5).abs() < 1e-12;
    for k in 0..3 {
        let p = oracle[k];
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        small_ok &= (counts[k] as f64 / n as f64 - p).abs() <= 4.0 * sigma;
    }
    small_ok &= trials
        .iter()
        .all(|t| !t.detected && t.inferred_accuracy.is_none_or(|a| a == 1.0));
    check(
        main_ok && small_ok,
        format!(
            "L=32 fraction {frac:.4}, accuracy {acc}, detection {detected}; L=2 enumerated \
             overlap distribution {oracle:.4?} (mean {oracle_mean}), sampled {counts:?} of {n}"
        ),
    )
}

fn honest_correctness() -> Verdict {
    let mut rng = SimRng::seed_from(5);
    let mut wrong = [0usize; 2];
    let mut aborts = [0usize; 2];
    let mut equal_cases = [0usize; 2];
    for trial in 0..1000u64 {
        let len = 1 + (rng.uniform() * 16.0) as usize;
        let a = BitString::random(len, &mut rng);
        let b = if rng.coin() {
            a.clone()
        } else {
            BitString::random(len, &mut rng)
        };
        let key = BitString::random(len, &mut rng);
        let expected = ComparisonOutcome::expected_for(&a, &b);
        let outcomes = [
            run_session(&SessionConfig::new(len, trial), &a, &b, &key, &mut [])
                .map_err(|e| e.to_string())?
                .transcript
                .outcome,
            run_improved_session(&ImprovedConfig::new(len, trial), &a, &b, &key, &mut [])
                .map_err(|e| e.to_string())?
                .transcript
                .outcome,
        ];
        for (i, o) in outcomes.iter().enumerate() {
            wrong[i] += (*o != expected) as usize;
            aborts[i] += o.is_aborted() as usize;
            equal_cases[i] += (a == b) as usize;
        }
    }
    check(
        wrong == [0, 0] && aborts == [0, 0],
        format!(
            "jiang {} wrong / {} aborts, improved {} wrong / {} aborts over 1000 triples ({} equal)",
            wrong[0], aborts[0], wrong[1], aborts[1], equal_cases[0]
        ),
    )
}

fn improved_immunity() -> Verdict {
    let stats = run_experiment(&spec(
        ProtocolKind::Improved,
        Attack::DoubleCnot,
        32,
        10_000,
        6,
    ))
    .map_err(|e| e.to_string())?;
    let ones = stats.metrics["ancilla_ones"];
    let (leak, aborted) = (
        stats.metrics["leak_fraction"].mean,
        stats.metrics["aborted"].mean,
    );
    let mid = run_experiment(&spec(
        ProtocolKind::Improved,
        Attack::DoubleCnotMidflight,
        32,
        10_000,
        66,
    ))
    .map_err(|e| e.to_string())?;
    let rate = mid.metrics["probed_check_mismatch_rate"].mean;
    check(
        ones.mean == 0.0 && ones.count == 10_000 && leak == 0.0 && aborted == 0.0 && in_band(rate, 0.47, 0.53),
        format!(
            "ancilla ones {} over {} trials, leak {leak}, abort rate {aborted}; midflight X-check mismatch {rate:.4}",
            ones.mean * ones.count as f64,
            ones.count
        ),
    )
}

fn blocking_curve() -> Verdict {
    let base = spec(ProtocolKind::Improved, Attack::Blocking, 32, 10_000, 7);
    let points = estimate_detection_curve(&base, &[1, 2, 4, 8]).map_err(|e| e.to_string())?;
    let mut ok = points.len() == 4;
    let mut details = Vec::new();
    for p in &points {
        let expected = 1.0 - 0.5f64.powi(p.k as i32);
        let sigma = (expected * (1.0 - expected) / p.trials as f64).sqrt();
        let z = (p.detection_rate - expected) / sigma;
        ok &= p.trials == 10_000 && z.abs() <= 3.0;
        details.push(format!(
            "k={} {:.4} vs {expected:.4} ({z:+.2} sigma)",
            p.k, p.detection_rate
        ));
    }
    check(ok, details.join(", "))
}

fn efficiency() -> Verdict {
    let j = qubit_efficiency(ProtocolKind::Jiang);
    let i = qubit_efficiency(ProtocolKind::Improved);
    let reported: Vec<f64> = [ProtocolKind::Jiang, ProtocolKind::Improved]
        .into_iter()
        .map(|s| run_experiment(&spec(s, Attack::None, 4, 10, 8)).map(|r| r.qubit_efficiency))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let exact = |n, d| Efficiency {
        numerator: n,
        denominator: d,
    };
    check(
        j == exact(1, 2) && i == exact(1, 4) && reported == [0.5, 0.25],
        format!(
            "jiang {}/{}, improved {}/{}, reported {reported:?}",
            j.numerator, j.denominator, i.numerator, i.denominator
        ),
    )
}

fn random_state(n: usize, rng: &mut SimRng) -> StateVector {
    let raw: Vec<Amplitude> = (0..1 << n)
        .map(|_| Amplitude::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0))
        .collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).expect("normalized")
}

fn distinct_pair(n: usize, rng: &mut SimRng) -> (QubitRef, QubitRef) {
    let picked = rng.subset(n, 2);
    if rng.coin() {
        (QubitRef(picked[0]), QubitRef(picked[1]))
    } else {
        (QubitRef(picked[1]), QubitRef(picked[0]))
    }
}

fn kernel_properties() -> Verdict {
    let mut rng = SimRng::seed_from(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 2 + (rng.uniform() * 3.0) as usize;
        let mut sv = random_state(n, &mut rng);
        for _ in 0..20 {
            let q = QubitRef((rng.uniform() * n as f64) as usize);
            let op = (rng.uniform() * 5.0) as usize;
            let r = match op {
                0 => {
                    let (c, t) = distinct_pair(n, &mut rng);
                    sv.apply_cnot(c, t)
                }
                1 => sv.apply_hadamard(q),
                2 => sv.measure_z(q, &mut rng).map(drop),
                3 => sv.measure_x(q, &mut rng).map(drop),
                _ => {
                    let (a, b) = distinct_pair(n, &mut rng);
                    sv.measure_bell(a, b, &mut rng).map(drop)
                }
            };
            r.map_err(|e| e.to_string())?;
            worst = worst.max((sv.norm_sqr() - 1.0).abs());
        }
    }
    let norm_ok = worst <= AMPLITUDE_TOLERANCE;

    let samples = 100_000;
    let mut worst_z = 0.0f64;
    for s in 0..50 {
        let n = 1 + s % 3;
        let state = random_state(n, &mut rng);
        let mut counts = vec![0usize; 1 << n];
        for _ in 0..samples {
            let mut sv = state.clone();
            let mut label = 0;
            for q in 0..n {
                label = (label << 1)
                    | sv.measure_z(QubitRef(q), &mut rng)
                        .map_err(|e| e.to_string())? as usize;
            }
            counts[label] += 1;
        }
        for (label, &c) in counts.iter().enumerate() {
            let p = state.amplitudes()[label].norm_sqr();
            let sigma = (p * (1.0 - p) / samples as f64).sqrt().max(1e-12);
            worst_z = worst_z.max((c as f64 / samples as f64 - p).abs() / sigma);
        }
    }
    check(
        norm_ok && worst_z <= 4.0,
        format!("max |norm - 1| = {worst:.2e} over 1000x20 ops; max Born deviation {worst_z:.2} sigma over 50 states"),
    )
}

fn determinism() -> Verdict {
    let specs = [
        spec(ProtocolKind::Jiang, Attack::DoubleCnot, 8, 500, 10),
        spec(ProtocolKind::Jiang, Attack::InterceptResendZ, 8, 500, 11),
        ExperimentSpec {
            secrets: SecretPolicy::Independent,
            ..spec(ProtocolKind::Improved, Attack::MaliciousAgent, 8, 500, 12)
        },
        spec(ProtocolKind::Improved, Attack::Blocking, 4, 500, 13),
    ];
    for s in &specs {
        for format in [ReportFormat::Json, ReportFormat::Csv] {
            let render = || {
                run_experiment(s)
                    .and_then(|r| render_report(&r, format))
                    .map_err(|e| e.to_string())
            };
            if render()?.into_bytes() != render()?.into_bytes() {
                return Err(format!(
                    "{} / {} report differs on re-run",
                    s.scenario, s.attack
                ));
            }
        }
        let serial: Vec<_> = (0..s.trials as u64)
            .map(|i| run_trial(s, i))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let serial =
            render_report(&aggregate(s, &serial), ReportFormat::Json).map_err(|e| e.to_string())?;
        let parallel = render_report(
            &run_experiment(s).map_err(|e| e.to_string())?,
            ReportFormat::Json,
        )
        .map_err(|e| e.to_string())?;
        if serial != parallel {
            return Err(format!(
                "{} / {} serial and parallel aggregates differ",
                s.scenario, s.attack
            ));
        }
    }
    Ok(format!(
        "{} specs byte-identical in json and csv, serial == parallel",
        specs.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("equation suite", equation_suite_exact, 1),
        ("silent CTRL restoration", silent_ctrl_restoration, 30),
        ("double C-NOT 50% leak", half_leak_double_cnot, 60),
        ("malicious agent", malicious_agent, 60),
        ("honest correctness", honest_correctness, 30),
        ("improved immunity to double C-NOT", improved_immunity, 60),
        ("blocking detection curve", blocking_curve, 60),
        ("efficiency accounting", efficiency, 10),
        ("kernel properties", kernel_properties, 120),
        ("determinism", determinism, 60),
    ];
    let mut results = BTreeMap::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let v = within_budget(start.elapsed(), Duration::from_secs(*budget), v);
        match &v {
            Ok(d) => println!("criterion {:>2} PASS {name}: {d}", i + 1),
            Err(d) => println!("criterion {:>2} FAIL {name}: {d}", i + 1),
        }
        results.insert(i + 1, v.is_ok());
    }
    let passed = results.values().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
