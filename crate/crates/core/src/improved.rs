//! Single-photon measure-resend variant.
//!
//! Each participant receives `4L` photons in random X eigenstates. CTRL
//! reflects; SIFT measures in Z and resends the outcome, so the `2L` SIFT
//! outcomes form the participant's random string `R`. The third party
//! X-checks every CTRL photon, the participants disclose `L` of their `R`
//! bits for a consistency check, and the remaining `L` bits mask the
//! published messages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{KernelError, ProtocolError};
use crate::jiang::{check_threshold, invalid};
use crate::kernel::{prepare_x, prepare_z, QubitRef, Sign, SimRng, StateVector};
use crate::session::{
    choose_modes, tp_compare, AbortReason, ComparisonOutcome, Mode, ModePolicy, ModeSequence,
    Participant, ProtocolKind,
};
use crate::tap::{self, AttackReport, ChannelTap, GroundTruth, PublicRecord, Transit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovedConfig {
    pub secret_len: usize,
    pub error_threshold: f64,
    pub mode_policy: ModePolicy,
    pub seed: u64,
}

impl ImprovedConfig {
    pub fn new(secret_len: usize, seed: u64) -> Self {
        Self {
            secret_len,
            error_threshold: 0.0,
            mode_policy: ModePolicy::Balanced,
            seed,
        }
    }

    pub fn photons_total(&self) -> usize {
        8 * self.secret_len
    }

    pub fn photons_per_participant(&self) -> usize {
        4 * self.secret_len
    }

    /// Length of each participant's `R`.
    pub fn sift_count(&self) -> usize {
        2 * self.secret_len
    }

    pub fn check_count(&self) -> usize {
        self.secret_len
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.secret_len == 0 {
            return Err(invalid("secret_len", "must be at least 1"));
        }
        check_threshold(self.error_threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonRecord {
    pub owner: Participant,
    pub position: usize,
    pub prepared: Sign,
    pub register: StateVector,
    /// Wire that arrived at the participant.
    pub delivered: QubitRef,
    /// Wire that arrived back at the third party.
    pub returned: QubitRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckDisclosure {
    pub positions: Vec<usize>,
    pub values: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XCheck {
    pub position: usize,
    pub outcome: Sign,
    pub mismatch: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovedTranscript {
    pub config: ImprovedConfig,
    pub photons: [Vec<PhotonRecord>; 2],
    pub modes: [ModeSequence; 2],
    pub x_checks: [Vec<XCheck>; 2],
    /// Third party's Z reads of every returned SIFT photon, by position.
    pub tp_z_reads: [BTreeMap<usize, bool>; 2],
    pub disclosures: [Option<CheckDisclosure>; 2],
    pub disclosure_mismatches: usize,
    pub published_m: [Option<BitString>; 2],
    /// Masks the third party reconstructed from its own Z reads.
    pub tp_masks: [BitString; 2],
    pub m_t: BitString,
    pub outcome: ComparisonOutcome,
}

impl ImprovedTranscript {
    pub fn ctrl_mismatches(&self) -> usize {
        self.x_checks
            .iter()
            .flatten()
            .filter(|c| c.mismatch)
            .count()
    }

    pub fn ctrl_checked(&self) -> usize {
        self.x_checks.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ImprovedOutput {
    pub transcript: ImprovedTranscript,
    pub reports: Vec<AttackReport>,
}

pub fn tp_prepare_photons(config: &ImprovedConfig, rng: &mut SimRng) -> [Vec<PhotonRecord>; 2] {
    Participant::BOTH.map(|owner| {
        (0..config.photons_per_participant())
            .map(|position| {
                let prepared = Sign::from_bit(rng.coin());
                PhotonRecord {
                    owner,
                    position,
                    prepared,
                    register: prepare_x(prepared),
                    delivered: QubitRef(0),
                    returned: QubitRef(0),
                }
            })
            .collect()
    })
}

/// Z-measures the incoming photon and sends back a fresh copy of the outcome.
pub fn sift_measure_resend(
    register: &mut StateVector,
    incoming: QubitRef,
    rng: &mut SimRng,
) -> Result<(bool, QubitRef), KernelError> {
    let r = register.measure_z(incoming, rng)?;
    let outgoing = register.adjoin(&prepare_z(r))?;
    Ok((r, outgoing))
}

/// X-measures every returned CTRL photon and compares with the prepared sign.
pub fn tp_check_ctrl_x(
    photons: &mut [PhotonRecord],
    modes: &ModeSequence,
    rng: &mut SimRng,
) -> Result<Vec<XCheck>, KernelError> {
    photons
        .iter_mut()
        .filter(|p| modes.get(p.position) == Mode::Ctrl)
        .map(|p| {
            let outcome = p.register.measure_x(p.returned, rng)?;
            Ok(XCheck {
                position: p.position,
                outcome,
                mismatch: outcome != p.prepared,
            })
        })
        .collect()
}

/// Publishes a uniformly random half of the `R` positions with their bits.
pub fn disclose_half_r(
    r_positions: &[usize],
    r_bits: &[bool],
    rng: &mut SimRng,
) -> CheckDisclosure {
    let picked = rng.subset(r_positions.len(), r_positions.len() / 2);
    CheckDisclosure {
        positions: picked.iter().map(|&i| r_positions[i]).collect(),
        values: picked.iter().map(|&i| r_bits[i]).collect(),
    }
}

/// Disclosed bits that disagree with the third party's own reads.
pub fn tp_verify_disclosure(
    disclosure: &CheckDisclosure,
    tp_z_reads: &BTreeMap<usize, bool>,
) -> usize {
    disclosure
        .positions
        .iter()
        .zip(&disclosure.values)
        .filter(|(p, v)| tp_z_reads.get(p) != Some(v))
        .count()
}

/// `M = Secret ^ mask ^ K_AB`.
pub fn derive_improved_message(
    secret: &BitString,
    mask: &BitString,
    key: &BitString,
) -> Result<BitString, ProtocolError> {
    secret.xor(mask)?.xor(key)
}

/// Compared secret bits per qubit delivered to one participant, as a reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Efficiency {
    pub numerator: u64,
    pub denominator: u64,
}

impl Efficiency {
    pub fn new(compared_bits: u64, qubits: u64) -> Self {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(compared_bits, qubits).max(1);
        Self {
            numerator: compared_bits / g,
            denominator: qubits / g,
        }
    }

    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

pub fn qubit_efficiency(protocol: ProtocolKind) -> Efficiency {
    Efficiency::new(1, protocol.qubits_per_secret_bit())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn run_improved_session(
    config: &ImprovedConfig,
    secret_a: &BitString,
    secret_b: &BitString,
    key: &BitString,
    taps: &mut [Box<dyn ChannelTap>],
) -> Result<ImprovedOutput, ProtocolError> {
    config.validate()?;
    let len = config.secret_len;
    for s in [secret_a, secret_b, key] {
        s.expect_len(len)?;
    }
    let secrets = [secret_a.clone(), secret_b.clone()];
    let per_participant = config.photons_per_participant();
    let mut rng = SimRng::seed_from(config.seed);

    let mut photons = tp_prepare_photons(config, &mut rng);
    let modes = [
        choose_modes(
            per_participant,
            config.sift_count(),
            config.mode_policy,
            &mut rng,
        ),
        choose_modes(
            per_participant,
            config.sift_count(),
            config.mode_policy,
            &mut rng,
        ),
    ];
    for t in taps.iter_mut() {
        if let Some(p) = t.insider() {
            t.observe_own_modes(&modes[p.index()]);
        }
    }

    for p in Participant::BOTH {
        for ph in &mut photons[p.index()] {
            let transit = Transit::new(p, ph.position);
            ph.delivered = tap::forward(taps, transit, &mut ph.register, &mut rng, QubitRef(0))?;
        }
    }

    // Participants' measured SIFT outcomes, by position.
    let mut measured: [BTreeMap<usize, bool>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for p in Participant::BOTH {
        for ph in &mut photons[p.index()] {
            ph.returned = match modes[p.index()].get(ph.position) {
                Mode::Ctrl => ph.delivered,
                Mode::Sift => {
                    let (r, out) = sift_measure_resend(&mut ph.register, ph.delivered, &mut rng)?;
                    measured[p.index()].insert(ph.position, r);
                    out
                }
            };
        }
    }
    for p in Participant::BOTH {
        for ph in &mut photons[p.index()] {
            let transit = Transit::new(p, ph.position);
            ph.returned = tap::ret(taps, transit, &mut ph.register, &mut rng, ph.returned)?;
        }
    }

    // Receipt confirmed, modes declared. R is the first 2L SIFT outcomes.
    let r_positions: [Vec<usize>; 2] = [0, 1].map(|i| {
        modes[i]
            .sift_positions()
            .into_iter()
            .take(config.sift_count())
            .collect()
    });

    let mut transcript = ImprovedTranscript {
        config: config.clone(),
        photons: [Vec::new(), Vec::new()],
        modes: modes.clone(),
        x_checks: [Vec::new(), Vec::new()],
        tp_z_reads: [BTreeMap::new(), BTreeMap::new()],
        disclosures: [None, None],
        disclosure_mismatches: 0,
        published_m: [None, None],
        tp_masks: [BitString::default(), BitString::default()],
        m_t: BitString::default(),
        outcome: ComparisonOutcome::Aborted {
            reason: AbortReason::InsufficientSift,
        },
    };
    let mut masks: [Option<BitString>; 2] = [None, None];
    let mut slots = [vec![None; per_participant], vec![None; per_participant]];

    if r_positions.iter().all(|r| r.len() == config.sift_count()) {
        for p in Participant::BOTH {
            let i = p.index();
            transcript.x_checks[i] = tp_check_ctrl_x(&mut photons[i], &modes[i], &mut rng)?;
            for ph in &mut photons[i] {
                if modes[i].get(ph.position) == Mode::Sift {
                    let bit = ph.register.measure_z(ph.returned, &mut rng)?;
                    transcript.tp_z_reads[i].insert(ph.position, bit);
                }
            }
        }

        let ctrl_rate = ratio(transcript.ctrl_mismatches(), transcript.ctrl_checked());
        if ctrl_rate > config.error_threshold {
            transcript.outcome = ComparisonOutcome::Aborted {
                reason: AbortReason::EavesdropperDetected,
            };
        } else {
            let mut disclosed_total = 0;
            for p in Participant::BOTH {
                let i = p.index();
                let r_bits: Vec<bool> = r_positions[i].iter().map(|pos| measured[i][pos]).collect();
                let d = disclose_half_r(&r_positions[i], &r_bits, &mut rng);
                transcript.disclosure_mismatches +=
                    tp_verify_disclosure(&d, &transcript.tp_z_reads[i]);
                disclosed_total += d.positions.len();

                let mask_positions: Vec<usize> = r_positions[i]
                    .iter()
                    .copied()
                    .filter(|pos| !d.positions.contains(pos))
                    .collect();
                for (slot, &pos) in mask_positions.iter().enumerate() {
                    slots[i][pos] = Some(slot);
                }
                masks[i] = Some(mask_positions.iter().map(|pos| measured[i][pos]).collect());
                transcript.tp_masks[i] = mask_positions
                    .iter()
                    .map(|pos| transcript.tp_z_reads[i][pos])
                    .collect();
                transcript.disclosures[i] = Some(d);
            }

            if ratio(transcript.disclosure_mismatches, disclosed_total) > config.error_threshold {
                transcript.outcome = ComparisonOutcome::Aborted {
                    reason: AbortReason::DisclosureMismatch,
                };
            } else {
                let m = [
                    derive_improved_message(secret_a, masks[0].as_ref().expect("mask"), key)?,
                    derive_improved_message(secret_b, masks[1].as_ref().expect("mask"), key)?,
                ];
                let cmp = tp_compare(
                    &m[0],
                    &m[1],
                    &transcript.tp_masks[0],
                    &transcript.tp_masks[1],
                )?;
                transcript.m_t = cmp.computed;
                transcript.outcome = cmp.outcome;
                transcript.published_m = m.map(Some);
            }
        }
    }
    transcript.photons = photons;

    let public = PublicRecord {
        protocol: ProtocolKind::Improved,
        secret_len: len,
        modes,
        slots,
        companions: transcript.published_m.clone(),
    };
    let truth = GroundTruth {
        carried: masks,
        secrets,
        key: key.clone(),
    };
    let reports = tap::finalize_all(taps, &public, &truth, transcript.outcome.is_detection());
    Ok(ImprovedOutput {
        transcript,
        reports,
    })
}
