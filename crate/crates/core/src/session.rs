//! Vocabulary shared by both comparison protocols: parties, modes, and the
//! third party's XOR comparison.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::ProtocolError;
use crate::kernel::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Participant {
    Alice,
    Bob,
}

impl Participant {
    pub const BOTH: [Participant; 2] = [Participant::Alice, Participant::Bob];

    pub fn index(self) -> usize {
        match self {
            Participant::Alice => 0,
            Participant::Bob => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Participant::Alice => Participant::Bob,
            Participant::Bob => Participant::Alice,
        }
    }
}

impl fmt::Display for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Participant::Alice => "alice",
            Participant::Bob => "bob",
        })
    }
}

impl FromStr for Participant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "alice" | "a" => Ok(Participant::Alice),
            "bob" | "b" => Ok(Participant::Bob),
            other => Err(format!(
                "unknown participant {other:?} (expected alice|bob)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Reflect the received qubit.
    Ctrl,
    /// Replace the received qubit with a Z-basis one.
    Sift,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeSequence(Vec<Mode>);

impl ModeSequence {
    pub fn new(modes: Vec<Mode>) -> Self {
        Self(modes)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, position: usize) -> Mode {
        self.0[position]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.0
    }

    /// SIFT positions in ascending order.
    pub fn sift_positions(&self) -> Vec<usize> {
        self.positions(Mode::Sift)
    }

    pub fn ctrl_positions(&self) -> Vec<usize> {
        self.positions(Mode::Ctrl)
    }

    pub fn sift_count(&self) -> usize {
        self.0.iter().filter(|m| **m == Mode::Sift).count()
    }

    fn positions(&self, mode: Mode) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, m)| (*m == mode).then_some(i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModePolicy {
    /// Exactly the required number of SIFT positions, uniformly arranged.
    #[default]
    Balanced,
    /// Fair coin per position.
    IndependentCoin,
}

impl FromStr for ModePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "balanced" => Ok(ModePolicy::Balanced),
            "coin" | "independent-coin" => Ok(ModePolicy::IndependentCoin),
            other => Err(format!(
                "unknown mode policy {other:?} (expected balanced|coin)"
            )),
        }
    }
}

/// Draws a mode for each of `len` positions. Under `Balanced` exactly
/// `sift_target` of them are SIFT.
pub fn choose_modes(
    len: usize,
    sift_target: usize,
    policy: ModePolicy,
    rng: &mut SimRng,
) -> ModeSequence {
    match policy {
        ModePolicy::Balanced => {
            let mut modes = vec![Mode::Ctrl; len];
            for p in rng.subset(len, sift_target.min(len)) {
                modes[p] = Mode::Sift;
            }
            ModeSequence(modes)
        }
        ModePolicy::IndependentCoin => ModeSequence(
            (0..len)
                .map(|_| if rng.coin() { Mode::Sift } else { Mode::Ctrl })
                .collect(),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbortReason {
    EavesdropperDetected,
    InsufficientSift,
    DisclosureMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComparisonOutcome {
    Equal,
    NotEqual { first_diff_index: usize },
    Aborted { reason: AbortReason },
}

impl ComparisonOutcome {
    /// Aborted because a check caught tampering.
    pub fn is_detection(&self) -> bool {
        matches!(
            self,
            ComparisonOutcome::Aborted {
                reason: AbortReason::EavesdropperDetected | AbortReason::DisclosureMismatch
            }
        )
    }

    pub fn is_aborted(&self) -> bool {
        matches!(self, ComparisonOutcome::Aborted { .. })
    }

    /// What the third party announces to the participants.
    pub fn announcement(&self) -> Option<bool> {
        match self {
            ComparisonOutcome::Equal => Some(true),
            ComparisonOutcome::NotEqual { .. } => Some(false),
            ComparisonOutcome::Aborted { .. } => None,
        }
    }

    /// The outcome an honest run must produce for these secrets.
    pub fn expected_for(secret_a: &BitString, secret_b: &BitString) -> Self {
        match secret_a.first_difference(secret_b) {
            None => ComparisonOutcome::Equal,
            Some(i) => ComparisonOutcome::NotEqual {
                first_diff_index: i,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub outcome: ComparisonOutcome,
    /// The prefix of `M_A ^ M_B ^ mask_A ^ mask_B` actually computed before the scan stopped.
    pub computed: BitString,
}

/// Bit-by-bit XOR scan that stops at the first 1.
pub fn tp_compare(
    m_a: &BitString,
    m_b: &BitString,
    mask_a: &BitString,
    mask_b: &BitString,
) -> Result<Comparison, ProtocolError> {
    let len = m_a.len();
    for s in [m_b, mask_a, mask_b] {
        s.expect_len(len)?;
    }
    let mut computed = BitString::default();
    for i in 0..len {
        let bit = m_a.bits()[i] ^ m_b.bits()[i] ^ mask_a.bits()[i] ^ mask_b.bits()[i];
        computed.push(bit);
        if bit {
            return Ok(Comparison {
                outcome: ComparisonOutcome::NotEqual {
                    first_diff_index: i,
                },
                computed,
            });
        }
    }
    Ok(Comparison {
        outcome: ComparisonOutcome::Equal,
        computed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Jiang,
    Improved,
}

impl ProtocolKind {
    /// Qubits one participant receives per compared secret bit.
    pub fn qubits_per_secret_bit(self) -> u64 {
        match self {
            ProtocolKind::Jiang => 2,
            ProtocolKind::Improved => 4,
        }
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jiang" => Ok(ProtocolKind::Jiang),
            "improved" => Ok(ProtocolKind::Improved),
            other => Err(format!(
                "unknown scenario {other:?} (expected jiang|improved)"
            )),
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Jiang => "jiang",
            ProtocolKind::Improved => "improved",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn compare_identical_inputs_is_equal() {
        let x = bs("0101");
        let c = tp_compare(&x, &x, &x, &x).unwrap();
        assert_eq!(c.outcome, ComparisonOutcome::Equal);
        assert_eq!(c.computed, bs("0000"));
    }

    #[test]
    fn compare_stops_at_first_one() {
        // M_T = 0100 here; the scan must stop after index 1.
        let c = tp_compare(&bs("0100"), &bs("0000"), &bs("0000"), &bs("0000")).unwrap();
        assert_eq!(
            c.outcome,
            ComparisonOutcome::NotEqual {
                first_diff_index: 1
            }
        );
        assert_eq!(c.computed, bs("01"));
    }

    #[test]
    fn compare_rejects_length_mismatch() {
        assert!(tp_compare(&bs("01"), &bs("010"), &bs("01"), &bs("01")).is_err());
    }

    #[test]
    fn balanced_modes_have_exact_sift_count() {
        let mut rng = SimRng::seed_from(2);
        let m = choose_modes(8, 4, ModePolicy::Balanced, &mut rng);
        assert_eq!(m.len(), 8);
        assert_eq!(m.sift_count(), 4);
    }

    #[test]
    fn coin_modes_frequency() {
        let mut rng = SimRng::seed_from(3);
        let m = choose_modes(10_000, 0, ModePolicy::IndependentCoin, &mut rng);
        let f = m.sift_count() as f64 / 1e4;
        assert!((f - 0.5).abs() <= 0.015, "{f}");
    }

    #[test]
    fn modes_are_deterministic_per_seed() {
        let a = choose_modes(64, 32, ModePolicy::Balanced, &mut SimRng::seed_from(77));
        let b = choose_modes(64, 32, ModePolicy::Balanced, &mut SimRng::seed_from(77));
        assert_eq!(a, b);
    }
}
