//! Channel attackers: double C-NOT eavesdropper, malicious participant,
//! blocking attacker, and a naive Z intercept-resend baseline.

use std::collections::{BTreeMap, BTreeSet};

use crate::bits::BitString;
use crate::error::KernelError;
use crate::kernel::{QubitRef, Sign};
use crate::session::{Mode, ModeSequence, Participant};
use crate::tap::{AttackReport, ChannelTap, Inference, Lab, PublicRecord, Transit};

/// Which positions an attacker touches. `None` means all of them.
pub type PositionFilter = Option<BTreeSet<usize>>;

fn selected(filter: &PositionFilter, position: usize) -> bool {
    filter.as_ref().is_none_or(|s| s.contains(&position))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveEvent {
    pub transit: Transit,
    /// Ancilla read after the second C-NOT.
    pub ancilla_bit: bool,
    /// Z read of the returned qubit, taken only when the ancilla read 1.
    pub data_bit: Option<bool>,
    /// Ancilla read between the two C-NOTs (mid-flight variant only).
    pub midflight_bit: Option<bool>,
}

/// Outside eavesdropper: C-NOT onto a `|0>` ancilla on the way out, C-NOT
/// again on the way back, then read the ancilla. A 1 marks a qubit that was
/// replaced, i.e. a SIFT position, whose returned qubit is then read in Z.
#[derive(Debug, Clone)]
pub struct DoubleCnotEve {
    targets: Vec<Participant>,
    positions: PositionFilter,
    midflight: bool,
    ancillas: BTreeMap<Transit, QubitRef>,
    midflight_bits: BTreeMap<Transit, bool>,
    events: Vec<EveEvent>,
}

impl DoubleCnotEve {
    pub fn new(target: Participant) -> Self {
        Self::on(vec![target])
    }

    pub fn on_both() -> Self {
        Self::on(Participant::BOTH.to_vec())
    }

    fn on(targets: Vec<Participant>) -> Self {
        Self {
            targets,
            positions: None,
            midflight: false,
            ancillas: BTreeMap::new(),
            midflight_bits: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    /// Read the ancilla between the two C-NOTs as well.
    pub fn midflight(mut self) -> Self {
        self.midflight = true;
        self
    }

    pub fn with_positions(mut self, positions: BTreeSet<usize>) -> Self {
        self.positions = Some(positions);
        self
    }

    pub fn events(&self) -> &[EveEvent] {
        &self.events
    }
}

impl ChannelTap for DoubleCnotEve {
    fn name(&self) -> &'static str {
        if self.midflight {
            "double-cnot-midflight"
        } else {
            "double-cnot"
        }
    }

    fn on_forward(
        &mut self,
        transit: Transit,
        lab: &mut Lab<'_>,
        wire: QubitRef,
    ) -> Result<QubitRef, KernelError> {
        if !self.targets.contains(&transit.participant)
            || !selected(&self.positions, transit.position)
        {
            return Ok(wire);
        }
        let ancilla = lab.fresh_z(false)?;
        lab.cnot(wire, ancilla)?;
        if self.midflight {
            self.midflight_bits.insert(transit, lab.measure_z(ancilla)?);
        }
        self.ancillas.insert(transit, ancilla);
        Ok(wire)
    }

    fn on_return(
        &mut self,
        transit: Transit,
        lab: &mut Lab<'_>,
        wire: QubitRef,
    ) -> Result<QubitRef, KernelError> {
        let Some(&ancilla) = self.ancillas.get(&transit) else {
            return Ok(wire);
        };
        lab.cnot(wire, ancilla)?;
        let ancilla_bit = lab.measure_z(ancilla)?;
        // ancilla 0: leave the data qubit alone
        let data_bit = if ancilla_bit {
            Some(lab.measure_z(wire)?)
        } else {
            None
        };
        self.events.push(EveEvent {
            transit,
            ancilla_bit,
            data_bit,
            midflight_bit: self.midflight_bits.get(&transit).copied(),
        });
        Ok(wire)
    }

    fn finalize(&mut self, public: &PublicRecord) -> AttackReport {
        let mut report = AttackReport::empty(self.name(), Inference::SecretXorKey);
        report.positions_probed = self.ancillas.keys().copied().collect();
        for e in &self.events {
            let declared = public.modes[e.transit.participant.index()].get(e.transit.position);
            if declared == Mode::Sift {
                report.indicator_trials += 1;
            }
            if e.ancilla_bit {
                report.indicator_hits += 1;
            }
            let (Some(bit), Some(slot)) = (e.data_bit, public.slot(e.transit)) else {
                continue;
            };
            let victim = e.transit.participant;
            report.learned.insert((victim, slot), bit);
            if let Some(c) = public.companion_bit(victim, slot) {
                report.inferred.insert((victim, slot), bit ^ c);
            }
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterceptPlan {
    /// Intercept the victim's return wherever the agent itself chose SIFT.
    OwnSift,
    /// Intercept a fixed set of the victim's return positions.
    Positions(BTreeSet<usize>),
}

/// A participant that Z-reads the other participant's returned qubits and
/// resends a freshly prepared copy of the observed eigenstate.
#[derive(Debug, Clone)]
pub struct MaliciousAgent {
    identity: Participant,
    key: BitString,
    plan: InterceptPlan,
    own_modes: Option<ModeSequence>,
    intercepted: BTreeMap<usize, bool>,
}

impl MaliciousAgent {
    pub fn new(identity: Participant, key: BitString) -> Self {
        Self {
            identity,
            key,
            plan: InterceptPlan::OwnSift,
            own_modes: None,
            intercepted: BTreeMap::new(),
        }
    }

    pub fn with_plan(mut self, plan: InterceptPlan) -> Self {
        self.plan = plan;
        self
    }

    pub fn victim(&self) -> Participant {
        self.identity.other()
    }

    pub fn intercepted(&self) -> &BTreeMap<usize, bool> {
        &self.intercepted
    }

    fn intercepts(&self, position: usize) -> bool {
        match &self.plan {
            InterceptPlan::OwnSift => self
                .own_modes
                .as_ref()
                .is_some_and(|m| m.get(position) == Mode::Sift),
            InterceptPlan::Positions(set) => set.contains(&position),
        }
    }
}

impl ChannelTap for MaliciousAgent {
    fn name(&self) -> &'static str {
        "malicious-agent"
    }

    fn insider(&self) -> Option<Participant> {
        Some(self.identity)
    }

    fn observe_own_modes(&mut self, modes: &ModeSequence) {
        self.own_modes = Some(modes.clone());
    }

    fn on_return(
        &mut self,
        transit: Transit,
        lab: &mut Lab<'_>,
        wire: QubitRef,
    ) -> Result<QubitRef, KernelError> {
        if transit.participant != self.victim() || !self.intercepts(transit.position) {
            return Ok(wire);
        }
        let bit = lab.measure_z(wire)?;
        self.intercepted.insert(transit.position, bit);
        lab.fresh_z(bit)
    }

    fn finalize(&mut self, public: &PublicRecord) -> AttackReport {
        let victim = self.victim();
        let mut report = AttackReport::empty(self.name(), Inference::Secret);
        for (&position, &bit) in &self.intercepted {
            let transit = Transit::new(victim, position);
            report.positions_probed.push(transit);
            // victim CTRL positions carry nothing
            let Some(slot) = public.slot(transit) else {
                continue;
            };
            report.learned.insert((victim, slot), bit);
            if let (Some(c), Some(k)) = (public.companion_bit(victim, slot), self.key.get(slot)) {
                report.inferred.insert((victim, slot), bit ^ c ^ k);
            }
        }
        report
    }
}

/// X-measures the target's returned qubits in place.
#[derive(Debug, Clone)]
pub struct BlockingAttacker {
    target: Participant,
    positions: PositionFilter,
    outcomes: BTreeMap<usize, Sign>,
}

impl BlockingAttacker {
    pub fn new(target: Participant) -> Self {
        Self {
            target,
            positions: None,
            outcomes: BTreeMap::new(),
        }
    }

    pub fn with_positions(mut self, positions: BTreeSet<usize>) -> Self {
        self.positions = Some(positions);
        self
    }

    pub fn outcomes(&self) -> &BTreeMap<usize, Sign> {
        &self.outcomes
    }
}

impl ChannelTap for BlockingAttacker {
    fn name(&self) -> &'static str {
        "blocking"
    }

    fn on_return(
        &mut self,
        transit: Transit,
        lab: &mut Lab<'_>,
        wire: QubitRef,
    ) -> Result<QubitRef, KernelError> {
        if transit.participant == self.target && selected(&self.positions, transit.position) {
            let sign = lab.measure_x(wire)?;
            self.outcomes.insert(transit.position, sign);
        }
        Ok(wire)
    }

    fn finalize(&mut self, _public: &PublicRecord) -> AttackReport {
        let mut report = AttackReport::empty(self.name(), Inference::SecretXorKey);
        report.positions_probed = self
            .outcomes
            .keys()
            .map(|&p| Transit::new(self.target, p))
            .collect();
        report
    }
}

/// Z-measures every forward qubit of the target and lets the collapsed
/// eigenstate continue.
#[derive(Debug, Clone)]
pub struct InterceptResendZ {
    targets: Vec<Participant>,
    positions: PositionFilter,
    reads: BTreeMap<Transit, bool>,
}

impl InterceptResendZ {
    pub fn new(target: Participant) -> Self {
        Self {
            targets: vec![target],
            positions: None,
            reads: BTreeMap::new(),
        }
    }

    pub fn on_both() -> Self {
        Self {
            targets: Participant::BOTH.to_vec(),
            ..Self::new(Participant::Alice)
        }
    }

    pub fn with_positions(mut self, positions: BTreeSet<usize>) -> Self {
        self.positions = Some(positions);
        self
    }
}

impl ChannelTap for InterceptResendZ {
    fn name(&self) -> &'static str {
        "intercept-resend-z"
    }

    fn on_forward(
        &mut self,
        transit: Transit,
        lab: &mut Lab<'_>,
        wire: QubitRef,
    ) -> Result<QubitRef, KernelError> {
        if self.targets.contains(&transit.participant)
            && selected(&self.positions, transit.position)
        {
            self.reads.insert(transit, lab.measure_z(wire)?);
        }
        Ok(wire)
    }

    fn finalize(&mut self, _public: &PublicRecord) -> AttackReport {
        let mut report = AttackReport::empty(self.name(), Inference::SecretXorKey);
        report.positions_probed = self.reads.keys().copied().collect();
        report
    }
}
