use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mixshor_core::densemat::{
    apply_local_gate, apply_unitary, kron, partial_trace, partial_transpose, ComplexMatrix,
    DensityMatrix,
};
use mixshor_core::entanglement::{log_negativity, Bipartition};
use mixshor_core::noise::{dephase_qubit, depolarize_qubit};
use mixshor_core::numtheory::{convergents, gcd, mod_pow, multiplicative_order};
use mixshor_core::random::{random_density_matrix, random_unitary};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full operator for `gate` on `targets`, assembled entry by entry.
fn embed(gate: &ComplexMatrix, targets: &[usize], m: usize) -> ComplexMatrix {
    let d = 1 << m;
    let rest: Vec<usize> = (0..m).filter(|q| !targets.contains(q)).collect();
    let bit = |i: usize, q: usize| (i >> (m - 1 - q)) & 1;
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            if rest.iter().any(|&q| bit(i, q) != bit(j, q)) {
                continue;
            }
            let local = |x: usize| targets.iter().fold(0, |acc, &q| acc << 1 | bit(x, q));
            out[(i, j)] = gate[(local(i), local(j))];
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_gate_matches_embedded_operator(seed in any::<u64>(), m in 1usize..=4, pick in any::<u64>()) {
        let mut r = rng(seed);
        let rho = random_density_matrix(&mut r, m, 2);
        let k = 1 + (pick as usize % m.min(2));
        let first = (pick as usize / 7) % m;
        let targets: Vec<usize> = (0..k).map(|i| (first + i * 3) % m).collect();
        prop_assume!(targets.len() == 1 || targets[0] != targets[1]);
        let gate = random_unitary(&mut r, 1 << k);
        let fast = apply_local_gate(&rho, &gate, &targets).unwrap();
        let full = apply_unitary(&rho, &embed(&gate, &targets, m)).unwrap();
        prop_assert!(fast.matrix().max_abs_diff(full.matrix()) < 1e-12);
    }

    #[test]
    fn kron_is_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_unitary(&mut r, 2);
        let b = random_unitary(&mut r, 4);
        let c = random_unitary(&mut r, 2);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-14);
    }

    #[test]
    fn complement_partial_transposes_are_transposes(seed in any::<u64>(), mask in 1u64..7) {
        let mut r = rng(seed);
        let rho = random_density_matrix(&mut r, 3, 3);
        let p = Bipartition::from_mask(3, mask).unwrap();
        let a = partial_transpose(&rho, &p.subset()).unwrap();
        let b = partial_transpose(&rho, &p.complement()).unwrap();
        prop_assert!(a.transpose().max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn negativity_is_invariant_under_local_unitaries(seed in any::<u64>(), mask in 1u64..7) {
        let mut r = rng(seed);
        let rho = random_density_matrix(&mut r, 3, 2);
        let p = Bipartition::from_mask(3, mask).unwrap();
        let mut rotated = rho.clone();
        for q in 0..3 {
            rotated = apply_local_gate(&rotated, &random_unitary(&mut r, 2), &[q]).unwrap();
        }
        let a = log_negativity(&rho, &p).unwrap();
        let b = log_negativity(&rotated, &p).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn channels_are_unital_and_trace_preserving(seed in any::<u64>(), q in 0usize..3) {
        let mut r = rng(seed);
        let rho = random_density_matrix(&mut r, 3, 4);
        let id = DensityMatrix::maximally_mixed(3);
        for channel in [dephase_qubit, depolarize_qubit] {
            prop_assert!(channel(&id, q).unwrap().matrix().max_abs_diff(id.matrix()) < 1e-15);
            let out = channel(&rho, q).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-12);
            prop_assert!(out.validate().is_ok());
        }
    }

    #[test]
    fn dephasing_is_idempotent(seed in any::<u64>(), q in 0usize..3) {
        let rho = random_density_matrix(&mut rng(seed), 3, 3);
        let once = dephase_qubit(&rho, q).unwrap();
        let twice = dephase_qubit(&once, q).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn channels_on_distinct_qubits_commute(seed in any::<u64>(), q in 0usize..3, shift in 1usize..3) {
        let rho = random_density_matrix(&mut rng(seed), 3, 3);
        let p = (q + shift) % 3;
        let a = depolarize_qubit(&dephase_qubit(&rho, q).unwrap(), p).unwrap();
        let b = dephase_qubit(&depolarize_qubit(&rho, p).unwrap(), q).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
    }

    #[test]
    fn depolarized_qubit_is_maximally_mixed(seed in any::<u64>(), q in 0usize..3) {
        let rho = random_density_matrix(&mut rng(seed), 3, 2);
        let out = depolarize_qubit(&rho, q).unwrap();
        let others: Vec<usize> = (0..3).filter(|&k| k != q).collect();
        let reduced = partial_trace(&out, &others).unwrap();
        let half = ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0));
        prop_assert!(reduced.matrix().max_abs_diff(&half) < 1e-14);
    }

    #[test]
    fn order_is_least_exponent(n in 2u64..200, a in 1u64..200) {
        prop_assume!(gcd(a, n) == 1);
        let r = multiplicative_order(a, n).unwrap();
        prop_assert_eq!(mod_pow(a, r, n), 1 % n);
        for k in 1..r {
            prop_assert_ne!(mod_pow(a, k, n), 1 % n);
        }
    }

    #[test]
    fn convergents_end_at_reduced_fraction(t_bits in 1u32..12, c_raw in any::<u64>()) {
        let t = 1u64 << t_bits;
        let c = c_raw % t;
        let conv = convergents(c, t);
        let last = conv.last().unwrap();
        let g = gcd(c, t);
        prop_assert_eq!((last.numerator(), last.denominator()), (c / g, t / g));
        // denominators never decrease and grow strictly after the second term
        for (k, w) in conv.windows(2).enumerate() {
            prop_assert!(w[1].denominator() >= w[0].denominator());
            if k >= 1 {
                prop_assert!(w[1].denominator() > w[0].denominator());
            }
        }
        for f in &conv {
            prop_assert!(f.value() <= 1.0);
        }
    }
}
