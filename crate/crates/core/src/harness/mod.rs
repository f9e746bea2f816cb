//! Monte Carlo experiment runner.
//!
//! Every trial gets its own seed, `derive_seed(master, trial_index)`, so
//! results do not depend on how trials are scheduled across threads.

mod equations;
mod report;
mod stats;

pub use equations::{equation_suite, EquationCheck};
pub use report::{
    emit_curve, emit_report, render_curve, render_report, JsonReport, ReportFormat, SCHEMA_VERSION,
};
pub use stats::{Accumulator, MetricStats, Z_95};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversaries::{
    BlockingAttacker, DoubleCnotEve, InterceptPlan, InterceptResendZ, MaliciousAgent,
};
use crate::bits::BitString;
use crate::error::HarnessError;
use crate::improved::{qubit_efficiency, run_improved_session, ImprovedConfig};
use crate::jiang::{run_session, PositionResult, SessionConfig};
use crate::kernel::{derive_seed, BellState, SimRng};
use crate::session::{ComparisonOutcome, ModePolicy, Participant, ProtocolKind};
use crate::tap::{AttackReport, ChannelTap, Transit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    None,
    DoubleCnot,
    DoubleCnotMidflight,
    MaliciousAgent,
    Blocking,
    InterceptResendZ,
}

impl Attack {
    pub fn as_str(self) -> &'static str {
        match self {
            Attack::None => "none",
            Attack::DoubleCnot => "double-cnot",
            Attack::DoubleCnotMidflight => "double-cnot-midflight",
            Attack::MaliciousAgent => "malicious-agent",
            Attack::Blocking => "blocking",
            Attack::InterceptResendZ => "intercept-resend-z",
        }
    }

    fn is_double_cnot(self) -> bool {
        matches!(self, Attack::DoubleCnot | Attack::DoubleCnotMidflight)
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attack {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Attack::None,
            Attack::DoubleCnot,
            Attack::DoubleCnotMidflight,
            Attack::MaliciousAgent,
            Attack::Blocking,
            Attack::InterceptResendZ,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
        .ok_or_else(|| format!("unknown attack {s:?}"))
    }
}

/// How the pair of secrets is drawn for each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecretPolicy {
    /// Equal secrets in half the trials, independent ones otherwise.
    #[default]
    Mixed,
    Equal,
    Independent,
}

impl FromStr for SecretPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixed" => Ok(SecretPolicy::Mixed),
            "equal" => Ok(SecretPolicy::Equal),
            "independent" => Ok(SecretPolicy::Independent),
            other => Err(format!("unknown secret policy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ProtocolKind,
    pub attack: Attack,
    #[serde(rename = "L")]
    pub secret_len: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode_policy: ModePolicy,
    pub error_threshold: f64,
    /// Participant whose channel is attacked (the victim of a malicious agent).
    pub target: Participant,
    /// Attack both participants' channels (outside attackers only).
    pub attack_both: bool,
    /// Attack a uniformly random subset of this many positions instead of all.
    pub attacked_positions: Option<usize>,
    pub secrets: SecretPolicy,
    /// Prepare every Bell pair in this state (Jiang only); uniform otherwise.
    pub bell_state: Option<BellState>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ProtocolKind::Jiang,
            attack: Attack::None,
            secret_len: 32,
            trials: 10_000,
            seed: 0,
            mode_policy: ModePolicy::Balanced,
            error_threshold: 0.0,
            target: Participant::Alice,
            attack_both: false,
            attacked_positions: None,
            secrets: SecretPolicy::Mixed,
            bell_state: None,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> HarnessError {
    HarnessError::InvalidSpec {
        field,
        reason: reason.into(),
    }
}

impl ExperimentSpec {
    pub fn new(scenario: ProtocolKind, attack: Attack) -> Self {
        Self {
            scenario,
            attack,
            ..Self::default()
        }
    }

    /// Positions each participant receives.
    pub fn positions_per_participant(&self) -> usize {
        self.secret_len * self.scenario.qubits_per_secret_bit() as usize
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.secret_len == 0 {
            return Err(invalid("L", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.error_threshold) {
            return Err(invalid(
                "threshold",
                format!("{} is outside [0, 1]", self.error_threshold),
            ));
        }
        if let Some(m) = self.attacked_positions {
            if m > self.positions_per_participant() {
                return Err(invalid(
                    "attacked_positions",
                    format!(
                        "{m} exceeds the {} positions per participant",
                        self.positions_per_participant()
                    ),
                ));
            }
            if self.attack == Attack::None {
                return Err(invalid("attacked_positions", "requires an attack"));
            }
        }
        if self.attack_both
            && !matches!(
                self.attack,
                Attack::DoubleCnot | Attack::DoubleCnotMidflight | Attack::InterceptResendZ
            )
        {
            return Err(invalid(
                "attack_both",
                format!("not supported for attack {}", self.attack),
            ));
        }
        if self.bell_state.is_some() && self.scenario != ProtocolKind::Jiang {
            return Err(invalid(
                "bell_state",
                "only the jiang scenario prepares Bell pairs",
            ));
        }
        Ok(())
    }

    fn victims(&self) -> Vec<Participant> {
        if self.attack_both {
            Participant::BOTH.to_vec()
        } else {
            vec![self.target]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub outcome: ComparisonOutcome,
    /// Outcome equals the honest answer for this trial's secrets.
    pub correct: bool,
    pub aborted: bool,
    pub detected: bool,
    /// Quantum-carried bits learned, as a fraction of `L` per victim.
    pub leak_fraction: f64,
    pub leak_accuracy: Option<f64>,
    /// Secret (or secret-xor-key) bits inferred, as a fraction of `L` per victim.
    pub inferred_fraction: f64,
    pub inferred_accuracy: Option<f64>,
    pub sift_indicator_rate: Option<f64>,
    pub ancilla_ones: Option<usize>,
    /// Mismatch rate over verification checks touching a probed position.
    pub probed_check_mismatch_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats {
    pub spec: ExperimentSpec,
    pub metrics: BTreeMap<String, MetricStats>,
    pub qubit_efficiency: f64,
    pub timing: Option<RunTiming>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTiming {
    pub started_at: String,
    pub elapsed_ms: u64,
}

fn attacked_subset(spec: &ExperimentSpec, rng: &mut SimRng) -> Option<BTreeSet<usize>> {
    spec.attacked_positions.map(|m| {
        rng.subset(spec.positions_per_participant(), m)
            .into_iter()
            .collect()
    })
}

fn build_taps(
    spec: &ExperimentSpec,
    key: &BitString,
    rng: &mut SimRng,
) -> Vec<Box<dyn ChannelTap>> {
    let subset = attacked_subset(spec, rng);
    let tap: Box<dyn ChannelTap> = match spec.attack {
        Attack::None => return Vec::new(),
        Attack::DoubleCnot | Attack::DoubleCnotMidflight => {
            let mut eve = if spec.attack_both {
                DoubleCnotEve::on_both()
            } else {
                DoubleCnotEve::new(spec.target)
            };
            if spec.attack == Attack::DoubleCnotMidflight {
                eve = eve.midflight();
            }
            if let Some(s) = subset {
                eve = eve.with_positions(s);
            }
            Box::new(eve)
        }
        Attack::MaliciousAgent => {
            let mut agent = MaliciousAgent::new(spec.target.other(), key.clone());
            if let Some(s) = subset {
                agent = agent.with_plan(InterceptPlan::Positions(s));
            }
            Box::new(agent)
        }
        Attack::Blocking => {
            let mut b = BlockingAttacker::new(spec.target);
            if let Some(s) = subset {
                b = b.with_positions(s);
            }
            Box::new(b)
        }
        Attack::InterceptResendZ => {
            let mut t = if spec.attack_both {
                InterceptResendZ::on_both()
            } else {
                InterceptResendZ::new(spec.target)
            };
            if let Some(s) = subset {
                t = t.with_positions(s);
            }
            Box::new(t)
        }
    };
    vec![tap]
}

/// One verification check: the transits it covers and whether it failed.
type Check = (Vec<Transit>, bool);

/// Runs trial `index` of `spec` in isolation.
pub fn run_trial(spec: &ExperimentSpec, index: u64) -> Result<TrialResult, HarnessError> {
    let trial_seed = derive_seed(spec.seed, index);
    let mut setup = SimRng::seed_from(derive_seed(trial_seed, u64::MAX));
    let len = spec.secret_len;
    let secret_a = BitString::random(len, &mut setup);
    let secret_b = match spec.secrets {
        SecretPolicy::Equal => secret_a.clone(),
        SecretPolicy::Independent => BitString::random(len, &mut setup),
        SecretPolicy::Mixed => {
            if setup.coin() {
                secret_a.clone()
            } else {
                BitString::random(len, &mut setup)
            }
        }
    };
    let key = BitString::random(len, &mut setup);
    let mut taps = build_taps(spec, &key, &mut setup);

    let (outcome, reports, checks): (ComparisonOutcome, Vec<AttackReport>, Vec<Check>) =
        match spec.scenario {
            ProtocolKind::Jiang => {
                let mut config = SessionConfig::new(len, trial_seed);
                config.mode_policy = spec.mode_policy;
                config.error_threshold = spec.error_threshold;
                if let Some(b) = spec.bell_state {
                    config = config.with_point_mass(b);
                }
                let out = run_session(&config, &secret_a, &secret_b, &key, &mut taps)?;
                let checks = out
                    .transcript
                    .results
                    .iter()
                    .enumerate()
                    .filter_map(|(pos, r)| match r {
                        PositionResult::Bell { mismatch, .. } => Some((
                            Participant::BOTH
                                .iter()
                                .map(|&p| Transit::new(p, pos))
                                .collect(),
                            *mismatch,
                        )),
                        PositionResult::Sift { .. } => None,
                    })
                    .collect();
                (out.transcript.outcome, out.reports, checks)
            }
            ProtocolKind::Improved => {
                let mut config = ImprovedConfig::new(len, trial_seed);
                config.mode_policy = spec.mode_policy;
                config.error_threshold = spec.error_threshold;
                let out = run_improved_session(&config, &secret_a, &secret_b, &key, &mut taps)?;
                let checks = Participant::BOTH
                    .iter()
                    .flat_map(|&p| {
                        out.transcript.x_checks[p.index()]
                            .iter()
                            .map(move |c| (vec![Transit::new(p, c.position)], c.mismatch))
                    })
                    .collect();
                (out.transcript.outcome, out.reports, checks)
            }
        };

    let expected = ComparisonOutcome::expected_for(&secret_a, &secret_b);
    let mut result = TrialResult {
        outcome,
        correct: outcome == expected,
        aborted: outcome.is_aborted(),
        detected: outcome.is_detection(),
        leak_fraction: 0.0,
        leak_accuracy: None,
        inferred_fraction: 0.0,
        inferred_accuracy: None,
        sift_indicator_rate: None,
        ancilla_ones: None,
        probed_check_mismatch_rate: None,
    };
    if let Some(report) = reports.first() {
        let victims = spec.victims();
        let denom = (len * victims.len()) as f64;
        let learned: usize = victims.iter().map(|&v| report.learned_count(v)).sum();
        let inferred: usize = victims.iter().map(|&v| report.inferred_count(v)).sum();
        result.leak_fraction = learned as f64 / denom;
        result.inferred_fraction = inferred as f64 / denom;
        result.leak_accuracy = report.learned_accuracy;
        result.inferred_accuracy = report.inferred_accuracy;
        if spec.attack.is_double_cnot() {
            result.ancilla_ones = Some(report.indicator_hits);
            if report.indicator_trials > 0 && spec.attack == Attack::DoubleCnot {
                result.sift_indicator_rate =
                    Some(report.indicator_hits as f64 / report.indicator_trials as f64);
            }
        }
        let probed: BTreeSet<Transit> = report.positions_probed.iter().copied().collect();
        let touched: Vec<bool> = checks
            .iter()
            .filter(|(ts, _)| ts.iter().any(|t| probed.contains(t)))
            .map(|(_, m)| *m)
            .collect();
        if !touched.is_empty() {
            let failed = touched.iter().filter(|m| **m).count();
            result.probed_check_mismatch_rate = Some(failed as f64 / touched.len() as f64);
        }
    }
    Ok(result)
}

/// Folds trial results, in index order, into per-metric statistics.
pub fn aggregate(spec: &ExperimentSpec, trials: &[TrialResult]) -> AggregateStats {
    let mut acc: BTreeMap<&'static str, Accumulator> = BTreeMap::new();
    let mut push = |name: &'static str, x: Option<f64>| {
        if let Some(x) = x {
            acc.entry(name).or_default().push(x);
        }
    };
    for t in trials {
        push("correct", Some(t.correct as u8 as f64));
        push("aborted", Some(t.aborted as u8 as f64));
        push("detected", Some(t.detected as u8 as f64));
        if spec.attack != Attack::None {
            push("leak_fraction", Some(t.leak_fraction));
            push("leak_accuracy", t.leak_accuracy);
            push("inferred_fraction", Some(t.inferred_fraction));
            push("inferred_accuracy", t.inferred_accuracy);
        }
        push("sift_indicator_rate", t.sift_indicator_rate);
        push("ancilla_ones", t.ancilla_ones.map(|c| c as f64));
        push("probed_check_mismatch_rate", t.probed_check_mismatch_rate);
    }
    AggregateStats {
        spec: spec.clone(),
        metrics: acc
            .into_iter()
            .filter_map(|(k, a)| a.finish().map(|s| (k.to_string(), s)))
            .collect(),
        qubit_efficiency: qubit_efficiency(spec.scenario).value(),
        timing: None,
    }
}

/// Runs every trial (in parallel) and returns the individual results in index order.
pub fn run_trials(spec: &ExperimentSpec) -> Result<Vec<TrialResult>, HarnessError> {
    spec.validate()?;
    (0..spec.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(spec, i))
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<AggregateStats, HarnessError> {
    let trials = run_trials(spec)?;
    Ok(aggregate(spec, &trials))
}

/// [`run_experiment`] plus wall-clock start time and duration.
pub fn run_experiment_timed(spec: &ExperimentSpec) -> Result<AggregateStats, HarnessError> {
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let clock = Instant::now();
    let mut stats = run_experiment(spec)?;
    stats.timing = Some(RunTiming {
        started_at,
        elapsed_ms: clock.elapsed().as_millis() as u64,
    });
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Attacked-position count.
    pub k: usize,
    pub detection_rate: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Detection rate as a function of how many positions are attacked.
///
/// Blocking: `k` is the number of the victim's disclosed bits that were
/// blocked. The attacker blocks every return of a session with `L = k`, so
/// exactly `k` disclosed bits are hit. Malicious agent: `k` is the number of
/// the victim's returns it Z-reads, chosen uniformly among the `4L`.
pub fn estimate_detection_curve(
    spec: &ExperimentSpec,
    attacked_counts: &[usize],
) -> Result<Vec<CurvePoint>, HarnessError> {
    if spec.scenario != ProtocolKind::Improved {
        return Err(invalid(
            "scenario",
            "detection curves need the improved scenario",
        ));
    }
    if !matches!(spec.attack, Attack::Blocking | Attack::MaliciousAgent) {
        return Err(invalid(
            "attack",
            "detection curves need blocking or malicious-agent",
        ));
    }
    spec.validate()?;
    attacked_counts
        .iter()
        .map(|&k| {
            let mut point = ExperimentSpec {
                seed: derive_seed(spec.seed, k as u64),
                ..spec.clone()
            };
            match (spec.attack, k) {
                (_, 0) => {
                    point.attack = Attack::None;
                    point.attacked_positions = None;
                }
                (Attack::Blocking, _) => {
                    point.secret_len = k;
                    point.attacked_positions = None;
                }
                _ => point.attacked_positions = Some(k),
            }
            point.validate()?;
            let stats = run_experiment(&point)?;
            let d = stats.metrics["detected"];
            Ok(CurvePoint {
                k,
                detection_rate: d.mean,
                std_error: d.std_error,
                trials: d.count,
            })
        })
        .collect()
}
