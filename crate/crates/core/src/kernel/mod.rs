//! Exact pure-state simulation of small qubit registers.
//!
//! Basis labels put qubit 0 in the most significant bit, so `|q0 q1 .. qn-1>`
//! is amplitude index `q0 * 2^(n-1) + .. + qn-1`.

mod rng;

pub use rng::{derive_seed, SimRng};

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::KernelError;

pub type Amplitude = Complex64;

pub const MAX_QUBITS: usize = 8;

/// Tolerance for normalization and amplitude comparisons.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-9;

/// Index of one qubit inside a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitRef(pub usize);

impl QubitRef {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for QubitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellState::PhiPlus => 0,
            BellState::PhiMinus => 1,
            BellState::PsiPlus => 2,
            BellState::PsiMinus => 3,
        }
    }

    /// Outcome of the Z reads after the CNOT-then-H rotation into the computational basis.
    fn from_rotated_bits(first: bool, second: bool) -> Self {
        match (first, second) {
            (false, false) => BellState::PhiPlus,
            (true, false) => BellState::PhiMinus,
            (false, true) => BellState::PsiPlus,
            (true, true) => BellState::PsiMinus,
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        };
        f.write_str(s)
    }
}

/// X-basis outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Dense amplitude vector over at most [`MAX_QUBITS`] qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// Computational basis state `|label>`.
    pub fn basis(num_qubits: usize, label: usize) -> Result<Self, KernelError> {
        check_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        if label >= dim {
            return Err(KernelError::OutOfBounds {
                index: label,
                num_qubits,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[label] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Amplitude>) -> Result<Self, KernelError> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(KernelError::InvalidLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(KernelError::InvalidLength(len));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(KernelError::NonFinite);
        }
        let sv = Self { num_qubits, amps };
        let n = sv.norm_sqr();
        if (n - 1.0).abs() > AMPLITUDE_TOLERANCE {
            return Err(KernelError::NotNormalized(n));
        }
        Ok(sv)
    }

    /// Real amplitudes, normalized on the way in.
    pub fn from_real(values: &[f64]) -> Result<Self, KernelError> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self::from_amplitudes(
            values
                .iter()
                .map(|v| Complex64::new(v / norm, 0.0))
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude, KernelError> {
        self.same_dims(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn qubit(&self, index: usize) -> Result<QubitRef, KernelError> {
        self.check(QubitRef(index))?;
        Ok(QubitRef(index))
    }

    /// Reorders qubits: qubit `j` of the result is qubit `order[j]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<StateVector, KernelError> {
        let n = self.num_qubits;
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(KernelError::DimensionMismatch {
                left: n,
                right: order.len(),
            });
        }
        for &q in order {
            self.check(QubitRef(q))?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(KernelError::Aliased(q));
            }
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (label, a) in self.amps.iter().enumerate() {
            let new_label = order.iter().enumerate().fold(0, |acc, (j, &q)| {
                let bit = (label >> (n - 1 - q)) & 1;
                acc | (bit << (n - 1 - j))
            });
            amps[new_label] = *a;
        }
        Ok(StateVector {
            num_qubits: n,
            amps,
        })
    }

    /// Appends `other`'s qubits after this register's and returns the first new qubit.
    pub fn adjoin(&mut self, other: &StateVector) -> Result<QubitRef, KernelError> {
        let first = QubitRef(self.num_qubits);
        *self = tensor(self, other)?;
        Ok(first)
    }

    pub fn apply_cnot(&mut self, control: QubitRef, target: QubitRef) -> Result<(), KernelError> {
        self.check(control)?;
        self.check(target)?;
        if control == target {
            return Err(KernelError::Aliased(control.0));
        }
        let cm = self.mask(control);
        let tm = self.mask(target);
        for i in 0..self.amps.len() {
            // visit each swapped pair once, from its target-bit-0 member
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    pub fn apply_hadamard(&mut self, q: QubitRef) -> Result<(), KernelError> {
        self.check(q)?;
        let m = self.mask(q);
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let a = self.amps[i];
                let b = self.amps[i | m];
                self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                self.amps[i | m] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    /// Exact probability that a Z read of `q` yields 1.
    pub fn probability_one(&self, q: QubitRef) -> Result<f64, KernelError> {
        self.check(q)?;
        let (_, p1) = self.branch_weights(q);
        Ok(p1)
    }

    /// Exact Bell-projector probabilities on `(q1, q2)`, indexed by [`BellState::index`].
    pub fn bell_probabilities(&self, q1: QubitRef, q2: QubitRef) -> Result<[f64; 4], KernelError> {
        let mut rotated = self.clone();
        rotated.rotate_bell_to_z(q1, q2)?;
        let m1 = rotated.mask(q1);
        let m2 = rotated.mask(q2);
        let mut probs = [0.0; 4];
        for (i, a) in rotated.amps.iter().enumerate() {
            let bell = BellState::from_rotated_bits(i & m1 != 0, i & m2 != 0);
            probs[bell.index()] += a.norm_sqr();
        }
        Ok(probs)
    }

    pub fn measure_z(&mut self, q: QubitRef, rng: &mut SimRng) -> Result<bool, KernelError> {
        self.check(q)?;
        let (p0, p1) = self.branch_weights(q);
        let outcome = rng.uniform() * (p0 + p1) < p1;
        self.collapse(q, outcome, if outcome { p1 } else { p0 });
        Ok(outcome)
    }

    pub fn measure_x(&mut self, q: QubitRef, rng: &mut SimRng) -> Result<Sign, KernelError> {
        self.apply_hadamard(q)?;
        let bit = self.measure_z(q, rng)?;
        self.apply_hadamard(q)?;
        Ok(Sign::from_bit(bit))
    }

    /// Projective Bell measurement; the pair is left in the observed Bell state.
    pub fn measure_bell(
        &mut self,
        q1: QubitRef,
        q2: QubitRef,
        rng: &mut SimRng,
    ) -> Result<BellState, KernelError> {
        self.rotate_bell_to_z(q1, q2)?;
        let first = self.measure_z(q1, rng)?;
        let second = self.measure_z(q2, rng)?;
        self.apply_hadamard(q1)?;
        self.apply_cnot(q1, q2)?;
        Ok(BellState::from_rotated_bits(first, second))
    }

    fn rotate_bell_to_z(&mut self, q1: QubitRef, q2: QubitRef) -> Result<(), KernelError> {
        self.apply_cnot(q1, q2)?;
        self.apply_hadamard(q1)
    }

    fn branch_weights(&self, q: QubitRef) -> (f64, f64) {
        let m = self.mask(q);
        self.amps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(p0, p1), (i, a)| {
                if i & m == 0 {
                    (p0 + a.norm_sqr(), p1)
                } else {
                    (p0, p1 + a.norm_sqr())
                }
            })
    }

    fn collapse(&mut self, q: QubitRef, outcome: bool, weight: f64) {
        let m = self.mask(q);
        let scale = weight.sqrt().recip();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & m != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn mask(&self, q: QubitRef) -> usize {
        1 << (self.num_qubits - 1 - q.0)
    }

    fn check(&self, q: QubitRef) -> Result<(), KernelError> {
        if q.0 < self.num_qubits {
            Ok(())
        } else {
            Err(KernelError::OutOfBounds {
                index: q.0,
                num_qubits: self.num_qubits,
            })
        }
    }

    fn same_dims(&self, other: &StateVector) -> Result<(), KernelError> {
        if self.num_qubits == other.num_qubits {
            Ok(())
        } else {
            Err(KernelError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            })
        }
    }
}

fn check_size(num_qubits: usize) -> Result<(), KernelError> {
    if num_qubits == 0 {
        Err(KernelError::InvalidLength(1))
    } else if num_qubits > MAX_QUBITS {
        Err(KernelError::RegisterOverflow {
            requested: num_qubits,
            max: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}

pub fn prepare_bell(state: BellState) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let real = match state {
        BellState::PhiPlus => [h, 0.0, 0.0, h],
        BellState::PhiMinus => [h, 0.0, 0.0, -h],
        BellState::PsiPlus => [0.0, h, h, 0.0],
        BellState::PsiMinus => [0.0, h, -h, 0.0],
    };
    StateVector {
        num_qubits: 2,
        amps: real.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
    }
}

pub fn prepare_z(bit: bool) -> StateVector {
    StateVector::basis(1, bit as usize).expect("single-qubit basis state")
}

pub fn prepare_x(sign: Sign) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let second = match sign {
        Sign::Plus => h,
        Sign::Minus => -h,
    };
    StateVector {
        num_qubits: 1,
        amps: vec![Complex64::new(h, 0.0), Complex64::new(second, 0.0)],
    }
}

/// Kronecker product; qubits of `a` come first.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector, KernelError> {
    let num_qubits = a.num_qubits + b.num_qubits;
    if num_qubits > MAX_QUBITS {
        return Err(KernelError::RegisterOverflow {
            requested: num_qubits,
            max: MAX_QUBITS,
        });
    }
    let amps = a
        .amps
        .iter()
        .flat_map(|x| b.amps.iter().map(move |y| x * y))
        .collect();
    Ok(StateVector { num_qubits, amps })
}

/// Entrywise comparison up to one global phase.
pub fn amplitudes_close(
    sv: &StateVector,
    expected: &StateVector,
    tol: f64,
) -> Result<bool, KernelError> {
    sv.same_dims(expected)?;
    let overlap = expected.inner(sv)?;
    let phase = if overlap.norm() > 1e-12 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(sv
        .amps
        .iter()
        .zip(&expected.amps)
        .all(|(a, b)| (a - phase * b).norm() <= tol))
}
