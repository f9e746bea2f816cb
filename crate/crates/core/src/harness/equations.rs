//! Exact-amplitude checks of the double C-NOT state evolution on a `|phi+>`
//! pair, built from kernel operations only.
//!
//! Protocol register layout: `A` (Alice's half, retained when she SIFTs),
//! `B`, `E` (Eve's ancilla), `F` (the fresh qubit Alice sends back).

use crate::error::KernelError;
use crate::kernel::{
    amplitudes_close, prepare_bell, prepare_z, BellState, QubitRef, StateVector,
    AMPLITUDE_TOLERANCE,
};

const A: QubitRef = QubitRef(0);
const B: QubitRef = QubitRef(1);
const E: QubitRef = QubitRef(2);
const F: QubitRef = QubitRef(3);

#[derive(Debug, Clone, PartialEq)]
pub struct EquationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Equal superposition of the listed basis labels.
fn superposition(num_qubits: usize, labels: &[usize]) -> StateVector {
    let mut v = vec![0.0; 1 << num_qubits];
    for &l in labels {
        v[l] = 1.0;
    }
    StateVector::from_real(&v).expect("valid superposition")
}

/// Probability of the Z-read event `event`, by enumeration over basis labels.
/// The closure receives a lookup from qubit to its bit in the label.
fn probability(sv: &StateVector, event: impl Fn(&dyn Fn(QubitRef) -> bool) -> bool) -> f64 {
    let n = sv.num_qubits();
    sv.amplitudes()
        .iter()
        .enumerate()
        .filter(|(label, _)| event(&|q: QubitRef| (label >> (n - 1 - q.index())) & 1 == 1))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn disagreement(sv: &StateVector, x: QubitRef, y: QubitRef) -> f64 {
    probability(sv, |z| z(x) != z(y))
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= AMPLITUDE_TOLERANCE
}

/// `|phi+>_{AB}` with Eve's ancilla after the forward C-NOT.
fn forward_tapped() -> Result<StateVector, KernelError> {
    let mut sv = prepare_bell(BellState::PhiPlus);
    let e = sv.adjoin(&prepare_z(false))?;
    debug_assert_eq!(e, E);
    sv.apply_cnot(A, E)?;
    Ok(sv)
}

fn check_forward() -> Result<EquationCheck, KernelError> {
    let sv = forward_tapped()?;
    let aeb = sv.permuted(&[0, 2, 1])?;
    let passed = amplitudes_close(
        &aeb,
        &superposition(3, &[0b000, 0b111]),
        AMPLITUDE_TOLERANCE,
    )?;
    Ok(EquationCheck {
        name: "forward-cnot-entangles-ancilla",
        passed,
        detail: "(|0A 0E 0B> + |1A 1E 1B>)/sqrt2".into(),
    })
}

fn check_ctrl_restore() -> Result<EquationCheck, KernelError> {
    let mut sv = forward_tapped()?;
    sv.apply_cnot(A, E)?;
    let restored = amplitudes_close(&sv, &superposition(3, &[0b000, 0b110]), AMPLITUDE_TOLERANCE)?;
    let ancilla_zero = near(sv.probability_one(E)?, 0.0);
    let bell_ok = near(
        sv.bell_probabilities(A, B)?[BellState::PhiPlus.index()],
        1.0,
    );
    Ok(EquationCheck {
        name: "ctrl-return-restores-pair",
        passed: restored && ancilla_zero && bell_ok,
        detail: format!(
            "(|0A 0B> + |1A 1B>)/sqrt2 x |0E>: amplitudes {restored}, ancilla |0> {ancilla_zero}, Bell check {bell_ok}"
        ),
    })
}

fn check_discard_correlation() -> Result<EquationCheck, KernelError> {
    let mut sv = forward_tapped()?;
    sv.adjoin(&prepare_z(false))?;
    let eb = disagreement(&sv, E, B);
    let p_b = sv.probability_one(B)?;
    Ok(EquationCheck {
        name: "sift-discard-leaves-eve-bob-correlated",
        passed: near(eb, 0.0) && near(p_b, 0.5),
        detail: format!("P(E != B) = {eb:.3e}, P(B = 1) = {p_b}"),
    })
}

fn check_resend(bit: bool) -> Result<EquationCheck, KernelError> {
    // Retained-qubit register (A, B, E, F).
    let mut sv = forward_tapped()?;
    let f = sv.adjoin(&prepare_z(bit))?;
    debug_assert_eq!(f, F);
    sv.apply_cnot(F, E)?;
    let full_labels: &[usize] = if bit {
        &[0b0011, 0b1101]
    } else {
        &[0b0000, 0b1110]
    };
    let full = amplitudes_close(&sv, &superposition(4, full_labels), AMPLITUDE_TOLERANCE)?;
    let p_e = sv.probability_one(E)?;
    // whenever the ancilla flags, the returned qubit reads the sent bit
    let flag_reads_bit = near(probability(&sv, |z| z(E) && z(F) != bit), 0.0);

    // Pure-pair picture: |phi+>_{EB} with Alice's fresh |m> as control, shown as (A, E, B).
    let mut pure = prepare_bell(BellState::PhiPlus);
    let fresh = pure.adjoin(&prepare_z(bit))?;
    pure.apply_cnot(fresh, QubitRef(0))?;
    let aeb = pure.permuted(&[2, 0, 1])?;
    let pure_labels: &[usize] = if bit {
        &[0b110, 0b101]
    } else {
        &[0b000, 0b011]
    };
    let literal = amplitudes_close(&aeb, &superposition(3, pure_labels), AMPLITUDE_TOLERANCE)?;

    let (name, detail) = if bit {
        ("sift-resend-one", "(|1A 1E 0B> + |1A 0E 1B>)/sqrt2")
    } else {
        ("sift-resend-zero", "(|0A 0E 0B> + |0A 1E 1B>)/sqrt2")
    };
    Ok(EquationCheck {
        name,
        passed: full && literal && near(p_e, 0.5) && flag_reads_bit,
        detail: format!(
            "{detail}: retained register {full}, pure pair {literal}, P(E = 1) = {p_e}"
        ),
    })
}

type Check = fn() -> Result<EquationCheck, KernelError>;

pub fn equation_suite() -> Vec<EquationCheck> {
    let checks: [(&'static str, Check); 5] = [
        ("forward-cnot-entangles-ancilla", check_forward),
        ("ctrl-return-restores-pair", check_ctrl_restore),
        (
            "sift-discard-leaves-eve-bob-correlated",
            check_discard_correlation,
        ),
        ("sift-resend-zero", || check_resend(false)),
        ("sift-resend-one", || check_resend(true)),
    ];
    checks
        .into_iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| EquationCheck {
                name,
                passed: false,
                detail: format!("kernel error: {e}"),
            })
        })
        .collect()
}
