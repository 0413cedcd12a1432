use mixshor_core::build_instance;
use mixshor_core::circuit::{reference_distribution, InitialStateKind};
use mixshor_core::experiments::{
    level_mass, mix_sweep, monte_carlo_sweep, run_tree, success_probability_exact, SamplePoint,
    TreeOptions,
};
use mixshor_core::noise::NoiseKind;

#[test]
fn branch_mass_is_conserved_at_every_depth() {
    let inst = build_instance(21, 2).unwrap();
    let opts = TreeOptions {
        record_nodes: true,
        ..TreeOptions::distribution_only()
    };
    let tree = run_tree(&inst, InitialStateKind::Pure, 0.1, opts).unwrap();
    for s in 0..inst.stages() {
        for kind in [SamplePoint::PostGate, SamplePoint::PostMeasure] {
            assert!(
                (level_mass(&tree.nodes, s, kind) - 1.0).abs() < 1e-9,
                "stage {s} {kind}"
            );
        }
    }
    assert!((tree.leaf_distribution.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn weighted_averages_match_explicit_products() {
    let inst = build_instance(15, 7).unwrap();
    let opts = TreeOptions {
        record_nodes: true,
        ..TreeOptions::full()
    };
    let tree = run_tree(&inst, InitialStateKind::MixedN, 0.2, opts).unwrap();
    for report in &tree.reports {
        let (mut e, mut s) = (0.0, 0.0);
        for node in tree
            .nodes
            .iter()
            .filter(|n| n.stage == report.stage && n.kind == report.kind)
        {
            let weight: f64 = node.cond_probs.iter().product();
            e += weight * node.avg_logneg;
            s += weight * node.mixedness;
        }
        assert!((e - report.avg_logneg).abs() < 1e-12);
        assert!((s - report.mixedness).abs() < 1e-12);
    }
}

#[test]
fn tree_agrees_with_reference_for_21() {
    let inst = build_instance(21, 2).unwrap();
    let tree = run_tree(
        &inst,
        InitialStateKind::Pure,
        0.0,
        TreeOptions::distribution_only(),
    )
    .unwrap();
    let reference = reference_distribution(&inst, InitialStateKind::Pure);
    let worst = tree
        .leaf_distribution
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn monte_carlo_matches_exact_success() {
    let inst = build_instance(15, 2).unwrap();
    for kind in [InitialStateKind::Pure, InitialStateKind::MixedN] {
        let exact = success_probability_exact(&inst, kind, 0.0).unwrap();
        let row =
            monte_carlo_sweep(&inst, kind, NoiseKind::None, &[0.0], 10_000, false, 3).unwrap()[0];
        let sigma = (exact * (1.0 - exact) / 10_000.0).sqrt();
        assert!(
            (row.rate() - exact).abs() <= 4.0 * sigma,
            "{kind}: {} vs {exact}",
            row.rate()
        );
    }
}

#[test]
fn success_degrades_with_control_mixing() {
    let inst = build_instance(15, 2).unwrap();
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.05).collect();
    for kind in [InitialStateKind::Pure, InitialStateKind::MixedN] {
        let rows = mix_sweep(&inst, kind, &grid).unwrap();
        for w in rows.windows(2) {
            assert!(
                w[1].success_prob <= w[0].success_prob + 1e-12,
                "{kind} at {}",
                w[1].epsilon
            );
        }
        assert!(rows.last().unwrap().avg_entanglement < rows[0].avg_entanglement);
    }
}
