//! Acceptance checks. Runs as a plain binary (no libtest harness) so each
//! criterion reports a single PASS/FAIL line; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixshor_core::circuit::{reference_distribution, InitialStateKind};
use mixshor_core::densemat::{
    apply_local_gate, apply_unitary, gates, kron, partial_trace, permute_basis, ComplexMatrix,
    DensityMatrix, HERMITIAN_TOL, PSD_TOL, STATE_TOL,
};
use mixshor_core::entanglement::{bipartitions, log_negativity, Bipartition};
use mixshor_core::experiments::{
    ensemble_profile, entanglement_crossing, entanglement_vanishes, monte_carlo_sweep, pearson,
    random_baseline, run_tree, success_probability_exact, tree_profile, TreeOptions,
    CROSSING_GRID_STEP,
};
use mixshor_core::noise::{
    dephase_qubit, depolarize_qubit, noise_pass, NoiseConfig, NoiseKind, TrajectoryRng,
};
use mixshor_core::numtheory::{coprime_list, multiplicative_order, permutation_cycles};
use mixshor_core::random::{random_density_matrix, random_unitary};
use mixshor_core::{build_instance, ShorInstance};

const RUNS: u64 = 1000;
const SEED: u64 = 7;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn inst(n: u64, a: u64) -> ShorInstance {
    build_instance(n, a).expect("valid instance")
}

fn binomial_sigma(p: f64, runs: u64) -> f64 {
    (p * (1.0 - p) / runs as f64).sqrt()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [9u64, 10, 14, 15] {
        for a in coprime_list(n) {
            let i = inst(n, a);
            for kind in [InitialStateKind::Pure, InitialStateKind::MixedN] {
                let tree = run_tree(&i, kind, 0.0, TreeOptions::distribution_only()).unwrap();
                let reference = reference_distribution(&i, kind);
                for (x, y) in tree.leaf_distribution.iter().zip(&reference) {
                    worst = worst.max((x - y).abs());
                }
                count += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-9 && elapsed < Duration::from_secs(120),
        format!("{count} cases, max deviation {worst:.3e}, {elapsed:.1?}"),
    )
}

fn period_oracles() -> Outcome {
    let r15 = multiplicative_order(2, 15).unwrap();
    let r21 = multiplicative_order(2, 21).unwrap();
    let in_four = permutation_cycles(2, 15, 4)
        .unwrap()
        .elements_in_cycles_of_length(4);
    outcome(
        r15 == 4 && r21 == 6 && in_four >= 8,
        format!("order(2,15)={r15}, order(2,21)={r21}, elements in 4-cycles={in_four}"),
    )
}

fn exact_success() -> Outcome {
    let i = inst(15, 2);
    let pure = success_probability_exact(&i, InitialStateKind::Pure, 0.0).unwrap();
    let mixed = success_probability_exact(&i, InitialStateKind::MixedN, 0.0).unwrap();
    let bound = 8.0 / 15.0 * 0.5;
    outcome(
        (pure - 0.5).abs() <= 1e-9 && mixed >= bound - 1e-9,
        format!("pure {pure:.12}, mixed-n {mixed:.12} (bound {bound:.6})"),
    )
}

fn pure_entangled_below_half(i: &ShorInstance) -> (bool, f64) {
    let steps = (0.5 / CROSSING_GRID_STEP).round() as usize;
    let all_entangled = (0..steps).all(|k| {
        !entanglement_vanishes(i, InitialStateKind::Pure, k as f64 * CROSSING_GRID_STEP).unwrap()
    });
    let opts = TreeOptions {
        entanglement: true,
        ..TreeOptions::distribution_only()
    };
    let at_half = run_tree(i, InitialStateKind::Pure, 0.5, opts)
        .unwrap()
        .whole_run_entanglement();
    (all_entangled && at_half < 1e-9, at_half)
}

fn epsilon_crossings() -> Outcome {
    let targets = [(15u64, 0.37, 0.42), (21, 0.44, 0.49)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (n, lo, hi) in targets {
        let i = inst(n, 2);
        let mut matched = Vec::new();
        for kind in [InitialStateKind::MixedN, InitialStateKind::MixedFull] {
            let eps = entanglement_crossing(&i, kind).unwrap();
            let label = eps.map_or("none".to_string(), |e| format!("{e:.4}"));
            detail.push(format!("N={n} {kind} {label}"));
            if eps.is_some_and(|e| (lo..=hi).contains(&e)) {
                matched.push(kind.as_str());
            }
        }
        if matched.is_empty() {
            pass = false;
            detail.push(format!("N={n} no variant in [{lo}, {hi}]"));
        } else {
            detail.push(format!("N={n} matched by {}", matched.join("+")));
        }
        let (pure_ok, at_half) = pure_entangled_below_half(&i);
        pass &= pure_ok;
        detail.push(format!(
            "N={n} pure entangled below 1/2: {pure_ok} (at 1/2: {at_half:.1e})"
        ));
    }
    outcome(pass, detail.join("; "))
}

fn noise_plateau() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();

    let i15 = inst(15, 2);
    let target = success_probability_exact(&i15, InitialStateKind::MixedN, 0.0).unwrap();
    let mut any_kind = false;
    for nk in [NoiseKind::Measurement, NoiseKind::Pauli] {
        let rows = monte_carlo_sweep(
            &i15,
            InitialStateKind::Pure,
            nk,
            &[0.2, 0.4],
            RUNS,
            true,
            SEED,
        )
        .unwrap();
        let ok = rows
            .iter()
            .all(|r| (r.rate() - target).abs() <= 3.0 * r.sigma());
        any_kind |= ok;
        let rates: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.rate())).collect();
        detail.push(format!(
            "N=15 {nk} rates [{}] {}",
            rates.join(", "),
            if ok { "ok" } else { "off" }
        ));
    }
    detail.push(format!("N=15 mixed-n exact {target:.4}"));
    pass &= any_kind;

    let i21 = inst(21, 2);
    let target = success_probability_exact(&i21, InitialStateKind::MixedN, 0.0).unwrap();
    for nk in [NoiseKind::Measurement, NoiseKind::Pauli] {
        let row = monte_carlo_sweep(&i21, InitialStateKind::Pure, nk, &[0.4], RUNS, true, SEED)
            .unwrap()[0];
        let ok = row.rate() < target - 3.0 * row.sigma();
        pass &= ok;
        detail.push(format!(
            "N=21 {nk} rate {:.3} vs mixed-n {target:.4} {}",
            row.rate(),
            if ok { "below" } else { "not below" }
        ));
    }
    outcome(pass, detail.join("; "))
}

fn noise_degradation() -> Outcome {
    let probs: Vec<f64> = (0..=10).map(|k| k as f64 * 0.05).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [15u64, 21] {
        let i = inst(n, 2);
        let baseline = random_baseline(&i);
        for nk in [NoiseKind::Measurement, NoiseKind::Pauli] {
            let rows = monte_carlo_sweep(&i, InitialStateKind::Pure, nk, &probs, RUNS, false, SEED)
                .unwrap();
            let monotone = rows.windows(2).all(|w| {
                let slack = 3.0 * (w[0].sigma().powi(2) + w[1].sigma().powi(2)).sqrt();
                w[1].rate() <= w[0].rate() + slack
            });
            let last = rows.last().unwrap().rate();
            let near_random = (last - baseline).abs() <= 4.0 * binomial_sigma(baseline, RUNS);
            pass &= monotone && near_random;
            detail.push(format!(
                "N={n} {nk}: non-increasing {monotone}, rate at 0.5 {last:.3} vs random {baseline:.4} {}",
                if near_random { "ok" } else { "off" }
            ));
        }
    }
    outcome(pass, detail.join("; "))
}

fn profile_shape() -> Outcome {
    let reports = ensemble_profile(4, InitialStateKind::MixedN).unwrap();
    let e: Vec<f64> = reports.iter().map(|r| r.avg_logneg).collect();
    let s: Vec<f64> = reports.iter().map(|r| r.mixedness).collect();
    let rho = pearson(&e, &s);
    let q = e.len() / 4;
    let first = e[..q].iter().sum::<f64>() / q as f64;
    let last = e[e.len() - q..].iter().sum::<f64>() / q as f64;
    outcome(
        rho > 0.8 && last > first,
        format!("pearson {rho:.4}, first quarter {first:.4}, last quarter {last:.4}"),
    )
}

fn state_ok(rho: &DensityMatrix) -> bool {
    (rho.trace() - 1.0).abs() <= STATE_TOL
        && rho.matrix().hermiticity_error() <= HERMITIAN_TOL
        && rho.validate().is_ok()
}

fn random_targets(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<usize> {
    let mut qs: Vec<usize> = (0..m).collect();
    for i in 0..k {
        let j = rng.random_range(i..m);
        qs.swap(i, j);
    }
    qs.truncate(k);
    qs
}

fn random_permutation(rng: &mut ChaCha8Rng, d: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

/// Post-measurement state of qubit `q` for outcome `bit`, and its probability.
fn measure_qubit(rho: &DensityMatrix, q: usize, bit: u8) -> (f64, Option<DensityMatrix>) {
    let m = rho.qubits();
    let mut proj = ComplexMatrix::identity(1);
    for k in 0..m {
        let local = if k == q {
            gates::projector(bit)
        } else {
            ComplexMatrix::identity(2)
        };
        proj = kron(&proj, &local);
    }
    let out = proj.matmul(rho.matrix()).unwrap().matmul(&proj).unwrap();
    let p = out.trace().re;
    if p < 1e-12 {
        return (p, None);
    }
    let state = DensityMatrix::new(out.scale(Complex64::new(1.0 / p, 0.0))).unwrap();
    (p, Some(state))
}

fn invariant_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();

    for trial in 0..1000 {
        let m = rng.random_range(1..=4);
        let rank = rng.random_range(1..=(1 << m));
        let rho = random_density_matrix(&mut rng, m, rank);
        let d = 1 << m;
        let q = rng.random_range(0..m);
        let k = rng.random_range(1..=m.min(2));
        let targets = random_targets(&mut rng, m, k);
        let sigma = random_density_matrix(&mut rng, 1, 2);
        let config = NoiseConfig::new(
            if trial % 2 == 0 {
                NoiseKind::Pauli
            } else {
                NoiseKind::Measurement
            },
            rng.random::<f64>(),
            false,
            trial,
        )
        .unwrap();
        let mut traj = TrajectoryRng::new(trial, 0);
        let mut results: Vec<(&str, DensityMatrix)> = vec![
            (
                "unitary",
                apply_unitary(&rho, &random_unitary(&mut rng, d)).unwrap(),
            ),
            (
                "local gate",
                apply_local_gate(&rho, &random_unitary(&mut rng, 1 << k), &targets).unwrap(),
            ),
            (
                "permutation",
                permute_basis(&rho, &random_permutation(&mut rng, d)).unwrap(),
            ),
            ("tensor", rho.tensor(&sigma)),
            ("dephase", dephase_qubit(&rho, q).unwrap()),
            ("depolarize", depolarize_qubit(&rho, q).unwrap()),
            (
                "noise pass",
                noise_pass(&rho, &config, trial as usize, &mut traj).unwrap(),
            ),
        ];
        if m > 1 {
            results.push(("partial trace", partial_trace(&rho, &targets[..1]).unwrap()));
        }
        for (name, out) in &results {
            if !state_ok(out) {
                failures.push(format!("{name} trial {trial}"));
            }
        }
    }

    let mut worst_sym = 0.0f64;
    let mut worst_lu = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(2..=4);
        let rank = rng.random_range(1..=3);
        let rho = random_density_matrix(&mut rng, m, rank);
        let parts = bipartitions(m).unwrap();
        let p = parts[rng.random_range(0..parts.len())];
        let a = log_negativity(&rho, &p).unwrap();
        let flipped = Bipartition::new(m, &p.complement()).unwrap();
        worst_sym = worst_sym.max((a - log_negativity(&rho, &flipped).unwrap()).abs());
        let mut local = rho.clone();
        for q in 0..m {
            local = apply_local_gate(&local, &random_unitary(&mut rng, 2), &[q]).unwrap();
        }
        worst_lu = worst_lu.max((a - log_negativity(&local, &p).unwrap()).abs());
    }
    if worst_sym > 1e-9 {
        failures.push(format!("complement symmetry {worst_sym:.2e}"));
    }
    if worst_lu > 1e-9 {
        failures.push(format!("local unitary invariance {worst_lu:.2e}"));
    }

    let mut worst_gain = f64::NEG_INFINITY;
    for _ in 0..200 {
        let rank = rng.random_range(1..=4);
        let rho = random_density_matrix(&mut rng, 4, rank);
        let parts = bipartitions(4).unwrap();
        let p = parts[rng.random_range(0..parts.len())];
        let q = rng.random_range(0..4);
        let before = log_negativity(&rho, &p).unwrap();
        let mut after = 0.0;
        for bit in [0u8, 1] {
            if let (prob, Some(post)) = measure_qubit(&rho, q, bit) {
                after += prob * log_negativity(&post, &p).unwrap();
            }
        }
        worst_gain = worst_gain.max(after - before);
    }
    if worst_gain > 1e-9 {
        failures.push(format!("measurement monotonicity gain {worst_gain:.2e}"));
    }

    let detail = format!(
        "8000 state ops, complement {worst_sym:.1e}, local unitary {worst_lu:.1e}, max measurement gain {worst_gain:.1e}, PSD tol {PSD_TOL:e}"
    );
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(
            false,
            format!("{detail}; failures: {}", failures.join(", ")),
        )
    }
}

fn performance() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (n, limit) in [
        (15u64, Duration::from_secs(60)),
        (21, Duration::from_secs(600)),
    ] {
        let i = inst(n, 2);
        for kind in InitialStateKind::ALL {
            let start = Instant::now();
            let tree = tree_profile(&i, kind, 0.0, None).unwrap();
            let elapsed = start.elapsed();
            assert_eq!(tree.reports.len(), 2 * i.stages());
            pass &= elapsed < limit;
            detail.push(format!("N={n} {kind} {elapsed:.1?}"));
        }
    }
    outcome(pass, detail.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Check; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("period oracles", period_oracles),
        ("exact success probabilities", exact_success),
        ("epsilon crossings", epsilon_crossings),
        ("noise plateau", noise_plateau),
        ("noise degradation", noise_degradation),
        ("profile shape", profile_shape),
        ("invariant suite", invariant_suite),
        ("performance envelope", performance),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [{status}] {name}: {} ({:.1?})",
            k + 1,
            result.detail,
            start.elapsed()
        );
        if !result.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
