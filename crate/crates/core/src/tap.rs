//! Adversary contract for the quantum channels.
//!
//! A tap sees each qubit transit through a [`Lab`], which exposes kernel
//! operations but never the amplitudes. Everything an attacker knows comes
//! from its own measurement outcomes and the classical values published
//! during the session ([`PublicRecord`]).

use std::collections::BTreeMap;

use crate::bits::BitString;
use crate::error::KernelError;
use crate::kernel::{prepare_x, prepare_z, QubitRef, Sign, SimRng, StateVector};
use crate::session::{ModeSequence, Participant, ProtocolKind};

/// One qubit passing between the third party and a participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transit {
    pub participant: Participant,
    pub position: usize,
}

impl Transit {
    pub fn new(participant: Participant, position: usize) -> Self {
        Self {
            participant,
            position,
        }
    }
}

/// Measurement-only access to one position's register.
pub struct Lab<'a> {
    register: &'a mut StateVector,
    rng: &'a mut SimRng,
}

impl<'a> Lab<'a> {
    pub fn new(register: &'a mut StateVector, rng: &'a mut SimRng) -> Self {
        Self { register, rng }
    }

    /// Adjoins a fresh `|bit>` qubit and returns it.
    pub fn fresh_z(&mut self, bit: bool) -> Result<QubitRef, KernelError> {
        self.register.adjoin(&prepare_z(bit))
    }

    pub fn fresh_x(&mut self, sign: Sign) -> Result<QubitRef, KernelError> {
        self.register.adjoin(&prepare_x(sign))
    }

    pub fn cnot(&mut self, control: QubitRef, target: QubitRef) -> Result<(), KernelError> {
        self.register.apply_cnot(control, target)
    }

    pub fn hadamard(&mut self, q: QubitRef) -> Result<(), KernelError> {
        self.register.apply_hadamard(q)
    }

    pub fn measure_z(&mut self, q: QubitRef) -> Result<bool, KernelError> {
        self.register.measure_z(q, self.rng)
    }

    pub fn measure_x(&mut self, q: QubitRef) -> Result<Sign, KernelError> {
        self.register.measure_x(q, self.rng)
    }

    /// Randomness for the attacker's own classical choices.
    pub fn rng(&mut self) -> &mut SimRng {
        self.rng
    }
}

/// Classical information that is public once the session ends.
#[derive(Debug, Clone)]
pub struct PublicRecord {
    pub protocol: ProtocolKind,
    pub secret_len: usize,
    /// Declared modes, indexed by [`Participant::index`].
    pub modes: [ModeSequence; 2],
    /// Message slot carried by each position's returned qubit, if any.
    pub slots: [Vec<Option<usize>>; 2],
    /// The published classical string that, XORed with the quantum-carried
    /// bits, yields `Secret ^ K_AB`: `R_i` for Jiang's protocol, `M_i` for the
    /// improved one. Absent if the session aborted before publication.
    pub companions: [Option<BitString>; 2],
}

impl PublicRecord {
    pub fn slot(&self, transit: Transit) -> Option<usize> {
        self.slots[transit.participant.index()]
            .get(transit.position)
            .copied()
            .flatten()
    }

    pub fn companion_bit(&self, participant: Participant, slot: usize) -> Option<bool> {
        self.companions[participant.index()]
            .as_ref()
            .and_then(|c| c.get(slot))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inference {
    /// Inferred bits are `Secret ^ K_AB` (attacker lacks the key).
    SecretXorKey,
    /// Inferred bits are plain secret bits (attacker holds the key).
    Secret,
}

/// What each party actually held, for scoring a report after the fact.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Bits carried by returned qubits, by slot: `M_i` (Jiang) or the mask (improved).
    pub carried: [Option<BitString>; 2],
    pub secrets: [BitString; 2],
    pub key: BitString,
}

#[derive(Debug, Clone)]
pub struct AttackReport {
    pub attacker: &'static str,
    pub positions_probed: Vec<Transit>,
    /// Ancilla-1 events of a double C-NOT attacker.
    pub indicator_hits: usize,
    /// Probed positions the target declared SIFT.
    pub indicator_trials: usize,
    /// Quantum-carried bits learned, keyed by (victim, slot).
    pub learned: BTreeMap<(Participant, usize), bool>,
    pub inferred: BTreeMap<(Participant, usize), bool>,
    pub inference: Inference,
    pub learned_accuracy: Option<f64>,
    pub inferred_accuracy: Option<f64>,
    pub detected: bool,
}

impl AttackReport {
    pub fn empty(attacker: &'static str, inference: Inference) -> Self {
        Self {
            attacker,
            positions_probed: Vec::new(),
            indicator_hits: 0,
            indicator_trials: 0,
            learned: BTreeMap::new(),
            inferred: BTreeMap::new(),
            inference,
            learned_accuracy: None,
            inferred_accuracy: None,
            detected: false,
        }
    }

    pub fn learned_count(&self, victim: Participant) -> usize {
        self.learned.keys().filter(|(p, _)| *p == victim).count()
    }

    pub fn inferred_count(&self, victim: Participant) -> usize {
        self.inferred.keys().filter(|(p, _)| *p == victim).count()
    }

    /// Fills accuracies against the real values and records detection.
    pub fn score(&mut self, truth: &GroundTruth, detected: bool) {
        self.detected = detected;
        self.learned_accuracy = accuracy(&self.learned, |p, slot| {
            truth.carried[p.index()].as_ref().and_then(|c| c.get(slot))
        });
        let inference = self.inference;
        self.inferred_accuracy = accuracy(&self.inferred, |p, slot| {
            let secret = truth.secrets[p.index()].get(slot)?;
            match inference {
                Inference::Secret => Some(secret),
                Inference::SecretXorKey => Some(secret ^ truth.key.get(slot)?),
            }
        });
    }
}

fn accuracy(
    bits: &BTreeMap<(Participant, usize), bool>,
    truth: impl Fn(Participant, usize) -> Option<bool>,
) -> Option<f64> {
    if bits.is_empty() {
        return None;
    }
    let correct = bits
        .iter()
        .filter(|((p, slot), bit)| truth(*p, *slot) == Some(**bit))
        .count();
    Some(correct as f64 / bits.len() as f64)
}

/// Hooks on every forward (third party to participant) and return transit.
pub trait ChannelTap: Send {
    fn name(&self) -> &'static str;

    /// A participant acting as the attacker, if any. Insiders are told their own modes.
    fn insider(&self) -> Option<Participant> {
        None
    }

    fn observe_own_modes(&mut self, _modes: &ModeSequence) {}

    fn on_forward(
        &mut self,
        _transit: Transit,
        _lab: &mut Lab<'_>,
        wire: QubitRef,
    ) -> Result<QubitRef, KernelError> {
        Ok(wire)
    }

    fn on_return(
        &mut self,
        _transit: Transit,
        _lab: &mut Lab<'_>,
        wire: QubitRef,
    ) -> Result<QubitRef, KernelError> {
        Ok(wire)
    }

    /// Post-protocol inference from public values.
    fn finalize(&mut self, public: &PublicRecord) -> AttackReport;
}

pub type TapSet = Vec<Box<dyn ChannelTap>>;

pub(crate) fn forward(
    taps: &mut [Box<dyn ChannelTap>],
    transit: Transit,
    register: &mut StateVector,
    rng: &mut SimRng,
    mut wire: QubitRef,
) -> Result<QubitRef, KernelError> {
    let mut lab = Lab::new(register, rng);
    for t in taps.iter_mut() {
        wire = t.on_forward(transit, &mut lab, wire)?;
    }
    Ok(wire)
}

pub(crate) fn ret(
    taps: &mut [Box<dyn ChannelTap>],
    transit: Transit,
    register: &mut StateVector,
    rng: &mut SimRng,
    mut wire: QubitRef,
) -> Result<QubitRef, KernelError> {
    let mut lab = Lab::new(register, rng);
    for t in taps.iter_mut() {
        wire = t.on_return(transit, &mut lab, wire)?;
    }
    Ok(wire)
}

pub(crate) fn finalize_all(
    taps: &mut [Box<dyn ChannelTap>],
    public: &PublicRecord,
    truth: &GroundTruth,
    detected: bool,
) -> Vec<AttackReport> {
    taps.iter_mut()
        .map(|t| {
            let mut report = t.finalize(public);
            report.score(truth, detected);
            report
        })
        .collect()
}
