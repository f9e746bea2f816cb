//! Jiang's first semi-quantum private comparison protocol.
//!
//! The third party sends one half of each of `2L` Bell pairs to each
//! participant. A participant either reflects the half (CTRL) or discards it
//! and sends back `|m>` for its next message bit (SIFT). CTRL-CTRL positions
//! are Bell-checked; SIFT returns are read in Z and the recovered messages are
//! XORed together with the published masks.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{KernelError, ProtocolError};
use crate::kernel::{prepare_bell, prepare_z, BellState, QubitRef, SimRng, StateVector};
use crate::session::{
    choose_modes, tp_compare, AbortReason, ComparisonOutcome, Mode, ModePolicy, ModeSequence,
    Participant, ProtocolKind,
};
use crate::tap::{self, AttackReport, ChannelTap, GroundTruth, PublicRecord, Transit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub secret_len: usize,
    /// Preparation weights indexed by [`BellState::index`].
    pub bell_weights: [f64; 4],
    pub error_threshold: f64,
    pub mode_policy: ModePolicy,
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(secret_len: usize, seed: u64) -> Self {
        Self {
            secret_len,
            bell_weights: [0.25; 4],
            error_threshold: 0.0,
            mode_policy: ModePolicy::Balanced,
            seed,
        }
    }

    pub fn with_point_mass(mut self, state: BellState) -> Self {
        self.bell_weights = [0.0; 4];
        self.bell_weights[state.index()] = 1.0;
        self
    }

    pub fn positions(&self) -> usize {
        2 * self.secret_len
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.secret_len == 0 {
            return Err(invalid("secret_len", "must be at least 1"));
        }
        if self.bell_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid(
                "bell_weights",
                "weights must be finite and non-negative",
            ));
        }
        let total: f64 = self.bell_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "bell_weights",
                format!("weights sum to {total}, not 1"),
            ));
        }
        check_threshold(self.error_threshold)
    }
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> ProtocolError {
    ProtocolError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn check_threshold(t: f64) -> Result<(), ProtocolError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(invalid("error_threshold", format!("{t} is outside [0, 1]")))
    }
}

/// Wires of one position, indexed by [`Participant::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct WireMap {
    /// Sent by the third party.
    pub outbound: [QubitRef; 2],
    /// Arrived at the participant.
    pub delivered: [QubitRef; 2],
    /// Arrived back at the third party.
    pub returned: [QubitRef; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub position: usize,
    pub prepared: BellState,
    pub register: StateVector,
    pub wires: WireMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionResult {
    /// Both reflected: Bell measurement of the two returns.
    Bell { outcome: BellState, mismatch: bool },
    /// At least one SIFT: Z reads of the SIFT returns only.
    Sift { reads: [Option<bool>; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    pub pairs: Vec<PairRecord>,
    pub modes: [ModeSequence; 2],
    /// Empty if the session aborted before measurement.
    pub results: Vec<PositionResult>,
    pub ctrl_checked: usize,
    pub ctrl_mismatches: usize,
    /// Message bits as read by the third party.
    pub tp_messages: [BitString; 2],
    pub published_r: [Option<BitString>; 2],
    /// Prefix of `M_T` computed before the scan stopped.
    pub m_t: BitString,
    pub outcome: ComparisonOutcome,
}

impl SessionTranscript {
    pub fn outcome(&self) -> ComparisonOutcome {
        self.outcome
    }
}

#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub transcript: SessionTranscript,
    pub reports: Vec<AttackReport>,
}

/// `M = Secret ^ R ^ K_AB`.
pub fn derive_message(
    secret: &BitString,
    r: &BitString,
    key: &BitString,
) -> Result<BitString, ProtocolError> {
    secret.xor(r)?.xor(key)
}

pub fn tp_prepare_pairs(config: &SessionConfig, rng: &mut SimRng) -> Vec<PairRecord> {
    (0..config.positions())
        .map(|position| {
            let prepared = BellState::ALL[rng.weighted_index(&config.bell_weights)];
            let halves = [QubitRef(0), QubitRef(1)];
            PairRecord {
                position,
                prepared,
                register: prepare_bell(prepared),
                wires: WireMap {
                    outbound: halves,
                    delivered: halves,
                    returned: halves,
                },
            }
        })
        .collect()
}

/// CTRL reflects `incoming`. SIFT leaves `incoming` in the register untouched
/// (the discarded particle) and returns a fresh `|message_bit>`.
pub fn participant_respond(
    mode: Mode,
    register: &mut StateVector,
    incoming: QubitRef,
    message_bit: Option<bool>,
) -> Result<QubitRef, ProtocolError> {
    match mode {
        Mode::Ctrl => {
            register.qubit(incoming.index())?;
            Ok(incoming)
        }
        Mode::Sift => {
            let bit = message_bit.ok_or(ProtocolError::MissingMessageBit)?;
            Ok(register.adjoin(&prepare_z(bit))?)
        }
    }
}

pub fn tp_resolve_position(
    record: &mut PairRecord,
    modes: [Mode; 2],
    rng: &mut SimRng,
) -> Result<PositionResult, KernelError> {
    let [a, b] = record.wires.returned;
    if modes == [Mode::Ctrl, Mode::Ctrl] {
        let outcome = record.register.measure_bell(a, b, rng)?;
        return Ok(PositionResult::Bell {
            outcome,
            mismatch: outcome != record.prepared,
        });
    }
    let mut reads = [None, None];
    for p in Participant::BOTH {
        if modes[p.index()] == Mode::Sift {
            let wire = record.wires.returned[p.index()];
            reads[p.index()] = Some(record.register.measure_z(wire, rng)?);
        }
    }
    Ok(PositionResult::Sift { reads })
}

/// Bit each participant sends back at each position: message bit `i` at its
/// `i`-th SIFT position, a random bit at surplus SIFT positions.
fn sift_payloads(modes: &ModeSequence, message: &BitString, rng: &mut SimRng) -> Vec<Option<bool>> {
    let mut rank = 0;
    modes
        .modes()
        .iter()
        .map(|mode| match mode {
            Mode::Ctrl => None,
            Mode::Sift => {
                let bit = message.get(rank).unwrap_or_else(|| rng.coin());
                rank += 1;
                Some(bit)
            }
        })
        .collect()
}

/// Message slot of each position: the rank among SIFT positions, if below `L`.
pub(crate) fn rank_slots(
    sift_positions: &[usize],
    len: usize,
    secret_len: usize,
) -> Vec<Option<usize>> {
    let mut slots = vec![None; len];
    for (rank, &p) in sift_positions.iter().enumerate().take(secret_len) {
        slots[p] = Some(rank);
    }
    slots
}

pub fn run_session(
    config: &SessionConfig,
    secret_a: &BitString,
    secret_b: &BitString,
    key: &BitString,
    taps: &mut [Box<dyn ChannelTap>],
) -> Result<SessionOutput, ProtocolError> {
    config.validate()?;
    let len = config.secret_len;
    for s in [secret_a, secret_b, key] {
        s.expect_len(len)?;
    }
    let secrets = [secret_a.clone(), secret_b.clone()];
    let mut rng = SimRng::seed_from(config.seed);

    let r = [
        BitString::random(len, &mut rng),
        BitString::random(len, &mut rng),
    ];
    let messages = [
        derive_message(secret_a, &r[0], key)?,
        derive_message(secret_b, &r[1], key)?,
    ];

    // Step 1
    let mut pairs = tp_prepare_pairs(config, &mut rng);
    let positions = pairs.len();
    let modes = [
        choose_modes(positions, len, config.mode_policy, &mut rng),
        choose_modes(positions, len, config.mode_policy, &mut rng),
    ];
    for t in taps.iter_mut() {
        if let Some(p) = t.insider() {
            t.observe_own_modes(&modes[p.index()]);
        }
    }
    for pair in &mut pairs {
        for p in Participant::BOTH {
            let transit = Transit::new(p, pair.position);
            let wire = pair.wires.outbound[p.index()];
            pair.wires.delivered[p.index()] =
                tap::forward(taps, transit, &mut pair.register, &mut rng, wire)?;
        }
    }

    // Step 2
    let payloads = [
        sift_payloads(&modes[0], &messages[0], &mut rng),
        sift_payloads(&modes[1], &messages[1], &mut rng),
    ];
    for p in Participant::BOTH {
        for pair in &mut pairs {
            let i = pair.position;
            pair.wires.returned[p.index()] = participant_respond(
                modes[p.index()].get(i),
                &mut pair.register,
                pair.wires.delivered[p.index()],
                payloads[p.index()][i],
            )?;
        }
    }
    for pair in &mut pairs {
        for p in Participant::BOTH {
            let transit = Transit::new(p, pair.position);
            let wire = pair.wires.returned[p.index()];
            pair.wires.returned[p.index()] =
                tap::ret(taps, transit, &mut pair.register, &mut rng, wire)?;
        }
    }

    // Step 3: receipt confirmed, modes declared.
    let sift_positions = [modes[0].sift_positions(), modes[1].sift_positions()];
    let slots = [
        rank_slots(&sift_positions[0], positions, len),
        rank_slots(&sift_positions[1], positions, len),
    ];

    let mut transcript = SessionTranscript {
        config: config.clone(),
        pairs: Vec::new(),
        modes: modes.clone(),
        results: Vec::new(),
        ctrl_checked: 0,
        ctrl_mismatches: 0,
        tp_messages: [BitString::default(), BitString::default()],
        published_r: [None, None],
        m_t: BitString::default(),
        outcome: ComparisonOutcome::Aborted {
            reason: AbortReason::InsufficientSift,
        },
    };

    if sift_positions.iter().all(|s| s.len() >= len) {
        // Step 4
        for pair in &mut pairs {
            let i = pair.position;
            let result = tp_resolve_position(pair, [modes[0].get(i), modes[1].get(i)], &mut rng)?;
            if let PositionResult::Bell { mismatch, .. } = result {
                transcript.ctrl_checked += 1;
                transcript.ctrl_mismatches += mismatch as usize;
            }
            transcript.results.push(result);
        }
        for p in Participant::BOTH {
            transcript.tp_messages[p.index()] = sift_positions[p.index()][..len]
                .iter()
                .map(|&pos| match transcript.results[pos] {
                    PositionResult::Sift { reads } => reads[p.index()].expect("SIFT read"),
                    PositionResult::Bell { .. } => unreachable!("SIFT position Bell-measured"),
                })
                .collect();
        }

        // Step 5
        let rate = if transcript.ctrl_checked == 0 {
            0.0
        } else {
            transcript.ctrl_mismatches as f64 / transcript.ctrl_checked as f64
        };
        if rate > config.error_threshold {
            transcript.outcome = ComparisonOutcome::Aborted {
                reason: AbortReason::EavesdropperDetected,
            };
        } else {
            // Step 6
            transcript.published_r = [Some(r[0].clone()), Some(r[1].clone())];
            let cmp = tp_compare(
                &transcript.tp_messages[0],
                &transcript.tp_messages[1],
                &r[0],
                &r[1],
            )?;
            transcript.m_t = cmp.computed;
            transcript.outcome = cmp.outcome;
        }
    }
    transcript.pairs = pairs;

    let public = PublicRecord {
        protocol: ProtocolKind::Jiang,
        secret_len: len,
        modes,
        slots,
        companions: transcript.published_r.clone(),
    };
    let truth = GroundTruth {
        carried: [Some(messages[0].clone()), Some(messages[1].clone())],
        secrets,
        key: key.clone(),
    };
    let reports = tap::finalize_all(taps, &public, &truth, transcript.outcome.is_detection());
    Ok(SessionOutput {
        transcript,
        reports,
    })
}
