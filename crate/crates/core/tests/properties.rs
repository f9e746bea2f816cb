use proptest::prelude::*;

use sqpc_core::harness::{estimate_detection_curve, Attack, ExperimentSpec};
use sqpc_core::improved::{derive_improved_message, run_improved_session, ImprovedConfig};
use sqpc_core::jiang::{derive_message, run_session, SessionConfig};
use sqpc_core::kernel::{Amplitude, AMPLITUDE_TOLERANCE};
use sqpc_core::{BitString, ComparisonOutcome, ModePolicy, ProtocolKind, QubitRef, StateVector};

fn bits(len: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), len).prop_map(BitString::new)
}

fn triple() -> impl Strategy<Value = (BitString, BitString, BitString, bool)> {
    (1usize..12).prop_flat_map(|len| (bits(len), bits(len), bits(len), any::<bool>()))
}

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| {
            v.iter().any(|(re, im)| re.abs() + im.abs() > 1e-3)
        })
        .prop_map(|v| {
            let raw: Vec<Amplitude> = v
                .into_iter()
                .map(|(re, im)| Amplitude::new(re, im))
                .collect();
            let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            StateVector::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).unwrap()
        })
}

#[derive(Debug, Clone)]
enum Gate {
    Cnot(usize, usize),
    Hadamard(usize),
}

fn gates(n: usize) -> impl Strategy<Value = Vec<Gate>> {
    let gate = prop_oneof![
        (0..n, 1..n).prop_map(move |(c, d)| Gate::Cnot(c, (c + d) % n)),
        (0..n).prop_map(Gate::Hadamard),
    ];
    prop::collection::vec(gate, 0..20)
}

fn apply(sv: &mut StateVector, gates: &[Gate]) {
    for g in gates {
        match *g {
            Gate::Cnot(c, t) => sv.apply_cnot(QubitRef(c), QubitRef(t)).unwrap(),
            Gate::Hadamard(q) => sv.apply_hadamard(QubitRef(q)).unwrap(),
        }
    }
}

fn policy() -> impl Strategy<Value = ModePolicy> {
    prop_oneof![
        Just(ModePolicy::Balanced),
        Just(ModePolicy::IndependentCoin)
    ]
}

proptest! {
    #[test]
    fn message_derivation_is_an_involution((s, r, k, _) in triple()) {
        let m = derive_message(&s, &r, &k).unwrap();
        prop_assert_eq!(derive_message(&m, &r, &k).unwrap(), s.clone());
        prop_assert_eq!(derive_improved_message(&m, &r, &k).unwrap(), s);
    }

    #[test]
    fn gates_preserve_inner_products(
        (a, b, gs) in (2usize..5).prop_flat_map(|n| (state(n), state(n), gates(n)))
    ) {
        let before = a.inner(&b).unwrap();
        let (mut a2, mut b2) = (a.clone(), b.clone());
        apply(&mut a2, &gs);
        apply(&mut b2, &gs);
        prop_assert!((a2.norm_sqr() - 1.0).abs() <= AMPLITUDE_TOLERANCE);
        prop_assert!((a2.inner(&b2).unwrap() - before).norm() <= AMPLITUDE_TOLERANCE);
    }

    #[test]
    fn bell_probabilities_are_complete(
        (sv, q1, d) in (2usize..5).prop_flat_map(|n| (state(n), 0..n, 1..n))
    ) {
        let n = sv.num_qubits();
        let p = sv.bell_probabilities(QubitRef(q1), QubitRef((q1 + d) % n)).unwrap();
        prop_assert!(p.iter().all(|&x| x >= -AMPLITUDE_TOLERANCE));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= AMPLITUDE_TOLERANCE);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn honest_jiang_sessions_compare_correctly(
        (a, b, key, same) in triple(), seed in any::<u64>(), mode_policy in policy()
    ) {
        let b = if same { a.clone() } else { b };
        let config = SessionConfig { mode_policy, ..SessionConfig::new(a.len(), seed) };
        let t = run_session(&config, &a, &b, &key, &mut []).unwrap().transcript;
        if mode_policy == ModePolicy::Balanced {
            prop_assert_eq!(t.outcome, ComparisonOutcome::expected_for(&a, &b));
        }
        prop_assert!(!t.outcome.is_detection());
        if !t.outcome.is_aborted() {
            prop_assert_eq!(t.outcome, ComparisonOutcome::expected_for(&a, &b));
            let diff = a.xor(&b).unwrap();
            prop_assert!(t.m_t.len() <= diff.len());
            prop_assert!(t.m_t.iter().zip(diff.iter()).all(|(x, y)| x == y));
            for (i, s) in [&a, &b].into_iter().enumerate() {
                let r = t.published_r[i].as_ref().unwrap();
                prop_assert_eq!(t.tp_messages[i].xor(r).unwrap(), s.xor(&key).unwrap());
            }
        }
    }

    #[test]
    fn honest_improved_sessions_compare_correctly(
        (a, b, key, same) in triple(), seed in any::<u64>(), mode_policy in policy()
    ) {
        let b = if same { a.clone() } else { b };
        let config = ImprovedConfig { mode_policy, ..ImprovedConfig::new(a.len(), seed) };
        let t = run_improved_session(&config, &a, &b, &key, &mut []).unwrap().transcript;
        if mode_policy == ModePolicy::Balanced {
            prop_assert_eq!(t.outcome, ComparisonOutcome::expected_for(&a, &b));
        }
        prop_assert!(!t.outcome.is_detection());
        if !t.outcome.is_aborted() {
            prop_assert_eq!(t.outcome, ComparisonOutcome::expected_for(&a, &b));
            let diff = a.xor(&b).unwrap();
            prop_assert!(t.m_t.iter().zip(diff.iter()).all(|(x, y)| x == y));
            for (i, s) in [&a, &b].into_iter().enumerate() {
                let m = t.published_m[i].as_ref().unwrap();
                prop_assert_eq!(m.xor(&t.tp_masks[i]).unwrap(), s.xor(&key).unwrap());
            }
        }
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Z-reading `k` of the victim's 8 returns: each CTRL photon hit flips its X check
/// with probability 1/2, SIFT photons are already Z states.
fn undetected_probability(k: u64) -> f64 {
    let (total, ctrl) = (8, 4);
    (0..=k.min(ctrl))
        .map(|j| {
            binomial(ctrl, j) * binomial(total - ctrl, k - j) / binomial(total, k)
                * 0.5f64.powi(j as i32)
        })
        .sum()
}

#[test]
fn malicious_agent_detection_follows_hypergeometric_law() {
    let spec = ExperimentSpec {
        secret_len: 2,
        trials: 20_000,
        seed: 21,
        ..ExperimentSpec::new(ProtocolKind::Improved, Attack::MaliciousAgent)
    };
    let counts: Vec<usize> = (0..=8).collect();
    for p in estimate_detection_curve(&spec, &counts).unwrap() {
        let expected = 1.0 - undetected_probability(p.k as u64);
        let sigma = (expected * (1.0 - expected) / p.trials as f64).sqrt();
        assert!(
            (p.detection_rate - expected).abs() <= 4.0 * sigma + 1e-12,
            "k={}: {} vs {expected}",
            p.k,
            p.detection_rate
        );
    }
}
