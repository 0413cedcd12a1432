//! Experiment drivers: exact branch enumeration, ensemble averages,
//! Monte Carlo noise sweeps and control-mixing sweeps.

use std::fmt;

use rayon::prelude::*;

use crate::circuit::{
    build_instance, collapse_control, control_probabilities, initial_state, initial_state_mixed,
    measure_control, outcome_value, reprepare_control, stage_gates, ComputerState,
    InitialStateKind, ShorInstance, StagePlan,
};
use crate::entanglement::{mixedness, partition_log_negativities, Bipartition, ZERO_ENTANGLEMENT};
use crate::error::{Error, Result};
use crate::noise::{noise_pass_in_place, DrawPurpose, NoiseConfig, NoiseKind, TrajectoryRng};
use crate::numtheory::{coprime_list, extract_period, semiprime_list};

/// Largest register the exact enumerator accepts.
pub const MAX_TREE_QUBITS: usize = 7;
/// Grid step of the entanglement-crossing scan.
pub const CROSSING_GRID_STEP: f64 = 0.002;
/// Bisection resolution of the entanglement-crossing search.
pub const CROSSING_RESOLUTION: f64 = 1e-4;

/// Where in a stage a sample is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplePoint {
    /// After the stage's gates, before measurement.
    PostGate,
    /// After the control measurement.
    PostMeasure,
}

impl SamplePoint {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PostGate => "post_gate",
            Self::PostMeasure => "post_measure",
        }
    }
}

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Probability-weighted averages at one sampling point.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: usize,
    pub kind: SamplePoint,
    pub avg_logneg: f64,
    pub mixedness: f64,
    /// Weighted per-partition values, when requested.
    pub partitions: Option<Vec<(Bipartition, f64)>>,
}

/// A live branch of the measurement tree.
#[derive(Debug, Clone)]
pub struct BranchNode {
    pub state: ComputerState,
    pub path_prob: f64,
    /// Outcome probabilities along the path, one per measurement.
    pub cond_probs: Vec<f64>,
}

/// Per-branch record kept when `TreeOptions::record_nodes` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub stage: usize,
    pub kind: SamplePoint,
    pub bits: Vec<u8>,
    pub path_prob: f64,
    pub cond_probs: Vec<f64>,
    pub avg_logneg: f64,
    pub mixedness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    pub entanglement: bool,
    pub mixedness: bool,
    pub per_partition: bool,
    pub record_nodes: bool,
    /// Stop once the whole-run average entanglement is known to reach this.
    pub abort_above: Option<f64>,
}

impl TreeOptions {
    /// Outcome distribution only.
    pub fn distribution_only() -> Self {
        Self {
            entanglement: false,
            mixedness: false,
            per_partition: false,
            record_nodes: false,
            abort_above: None,
        }
    }

    pub fn full() -> Self {
        Self {
            entanglement: true,
            mixedness: true,
            ..Self::distribution_only()
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeResult {
    pub reports: Vec<StageReport>,
    /// Probability of each outcome `c`; empty when the run was aborted.
    pub leaf_distribution: Vec<f64>,
    pub nodes: Vec<NodeRecord>,
    pub aborted: bool,
}

impl TreeResult {
    /// Mean of `avg_logneg` over all sampling points.
    pub fn whole_run_entanglement(&self) -> f64 {
        if self.reports.is_empty() {
            return 0.0;
        }
        self.reports.iter().map(|r| r.avg_logneg).sum::<f64>() / self.reports.len() as f64
    }
}

struct NodeMetrics {
    avg_logneg: f64,
    mixedness: f64,
    partitions: Option<Vec<(Bipartition, f64)>>,
}

fn node_metrics(state: &ComputerState, opts: &TreeOptions) -> Result<NodeMetrics> {
    let (avg, partitions) = if opts.entanglement {
        let values = partition_log_negativities(state.rho())?;
        let avg = values.iter().map(|(_, v)| v).sum::<f64>() / values.len() as f64;
        (avg, opts.per_partition.then_some(values))
    } else {
        (0.0, None)
    };
    Ok(NodeMetrics {
        avg_logneg: avg,
        mixedness: if opts.mixedness {
            mixedness(state.rho())
        } else {
            0.0
        },
        partitions,
    })
}

/// Evaluates all nodes at one sampling point and folds them in node order.
fn sample(
    nodes: &[BranchNode],
    stage: usize,
    kind: SamplePoint,
    opts: &TreeOptions,
    records: &mut Vec<NodeRecord>,
) -> Result<StageReport> {
    let metrics: Vec<NodeMetrics> = if opts.entanglement || opts.mixedness {
        nodes
            .par_iter()
            .map(|n| node_metrics(&n.state, opts))
            .collect::<Result<_>>()?
    } else {
        nodes
            .iter()
            .map(|_| NodeMetrics {
                avg_logneg: 0.0,
                mixedness: 0.0,
                partitions: None,
            })
            .collect()
    };
    let mut avg = 0.0;
    let mut mix = 0.0;
    let mut parts: Option<Vec<(Bipartition, f64)>> = None;
    for (node, m) in nodes.iter().zip(&metrics) {
        avg += node.path_prob * m.avg_logneg;
        mix += node.path_prob * m.mixedness;
        if let Some(values) = &m.partitions {
            let acc = parts.get_or_insert_with(|| values.iter().map(|(p, _)| (*p, 0.0)).collect());
            for (slot, (_, v)) in acc.iter_mut().zip(values) {
                slot.1 += node.path_prob * v;
            }
        }
        if opts.record_nodes {
            records.push(NodeRecord {
                stage,
                kind,
                bits: node.state.bits().to_vec(),
                path_prob: node.path_prob,
                cond_probs: node.cond_probs.clone(),
                avg_logneg: m.avg_logneg,
                mixedness: m.mixedness,
            });
        }
    }
    Ok(StageReport {
        stage,
        kind,
        avg_logneg: avg,
        mixedness: mix,
        partitions: parts,
    })
}

/// Exact enumeration of every measurement branch (noise-free), with
/// probability-weighted metrics at the 2L sampling points.
pub fn run_tree(
    inst: &ShorInstance,
    kind: InitialStateKind,
    epsilon: f64,
    opts: TreeOptions,
) -> Result<TreeResult> {
    if inst.total_qubits() > MAX_TREE_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: inst.total_qubits(),
            limit: MAX_TREE_QUBITS,
        });
    }
    let plan = StagePlan::new(inst);
    let stages = inst.stages();
    let mut level = vec![BranchNode {
        state: initial_state_mixed(inst, kind, epsilon)?,
        path_prob: 1.0,
        cond_probs: Vec::new(),
    }];
    let mut reports = Vec::with_capacity(2 * stages);
    let mut records = Vec::new();
    let mut running = 0.0;
    let points = (2 * stages) as f64;

    for s in 0..stages {
        level = level
            .into_par_iter()
            .map(|mut node| -> Result<BranchNode> {
                for gate in stage_gates(inst, s, node.state.bits())? {
                    plan.apply(node.state.rho_mut(), gate)?;
                }
                Ok(node)
            })
            .collect::<Result<_>>()?;
        let report = sample(&level, s, SamplePoint::PostGate, &opts, &mut records)?;
        running += report.avg_logneg / points;
        reports.push(report);
        if opts.abort_above.is_some_and(|limit| running >= limit) {
            return Ok(aborted(reports, records));
        }

        let children: Vec<Vec<BranchNode>> = level
            .into_par_iter()
            .map(|node| -> Result<Vec<BranchNode>> {
                let split = measure_control(&node.state)?;
                Ok(split
                    .branches()
                    .into_iter()
                    .filter_map(|(_, branch)| {
                        let state = branch.state?;
                        let mut cond_probs = node.cond_probs.clone();
                        cond_probs.push(branch.probability);
                        Some(BranchNode {
                            state,
                            path_prob: node.path_prob * branch.probability,
                            cond_probs,
                        })
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        level = children.into_iter().flatten().collect();
        let report = sample(&level, s, SamplePoint::PostMeasure, &opts, &mut records)?;
        running += report.avg_logneg / points;
        reports.push(report);
        if opts.abort_above.is_some_and(|limit| running >= limit) {
            return Ok(aborted(reports, records));
        }

        if s + 1 < stages {
            level = level
                .into_par_iter()
                .map(|mut node| -> Result<BranchNode> {
                    node.state = reprepare_control(&node.state, epsilon)?;
                    Ok(node)
                })
                .collect::<Result<_>>()?;
        }
    }

    let mut dist = vec![0.0; inst.outcomes() as usize];
    for node in &level {
        dist[node.state.outcome() as usize] += node.path_prob;
    }
    Ok(TreeResult {
        reports,
        leaf_distribution: dist,
        nodes: records,
        aborted: false,
    })
}

fn aborted(reports: Vec<StageReport>, nodes: Vec<NodeRecord>) -> TreeResult {
    TreeResult {
        reports,
        leaf_distribution: Vec::new(),
        nodes,
        aborted: true,
    }
}

/// Stage-by-stage entanglement and mixedness profile from the exact tree.
pub fn tree_profile(
    inst: &ShorInstance,
    kind: InitialStateKind,
    epsilon: f64,
    noise: Option<&NoiseConfig>,
) -> Result<TreeResult> {
    if noise.is_some_and(|n| n.kind != NoiseKind::None && n.prob > 0.0) {
        return Err(Error::OutOfRange(
            "tree mode is noise-free; use the Monte Carlo sweep for noise".into(),
        ));
    }
    run_tree(inst, kind, epsilon, TreeOptions::full())
}

/// Total probability of outcomes from which the true order is extracted.
pub fn success_mass(inst: &ShorInstance, distribution: &[f64]) -> f64 {
    let t = inst.outcomes();
    distribution
        .iter()
        .enumerate()
        .filter(|(c, _)| {
            extract_period(*c as u64, t, inst.modulus(), inst.base()) == Some(inst.order())
        })
        .map(|(_, p)| p)
        .sum()
}

/// Fraction of all `t` outcomes that yield the true order.
pub fn random_baseline(inst: &ShorInstance) -> f64 {
    let t = inst.outcomes();
    let hits = (0..t)
        .filter(|&c| extract_period(c, t, inst.modulus(), inst.base()) == Some(inst.order()))
        .count();
    hits as f64 / t as f64
}

/// Exact (tree-enumerated, noise-free) probability of finding the order.
pub fn success_probability_exact(
    inst: &ShorInstance,
    kind: InitialStateKind,
    epsilon: f64,
) -> Result<f64> {
    let tree = run_tree(inst, kind, epsilon, TreeOptions::distribution_only())?;
    Ok(success_mass(inst, &tree.leaf_distribution))
}

/// Every `(N, a)` with `N` a semiprime of `bits` binary digits.
pub fn ensemble_instances(bits: u32) -> Result<Vec<ShorInstance>> {
    if !(4..=5).contains(&bits) {
        return Err(Error::OutOfRange(format!(
            "ensemble bits {bits} not in {{4, 5}}"
        )));
    }
    let mut out = Vec::new();
    for n in semiprime_list(bits) {
        for a in coprime_list(n) {
            out.push(build_instance(n, a)?);
        }
    }
    Ok(out)
}

/// Unweighted mean of `tree_profile` (epsilon 0) over the ensemble.
pub fn ensemble_profile(bits: u32, kind: InitialStateKind) -> Result<Vec<StageReport>> {
    let instances = ensemble_instances(bits)?;
    let mut acc: Option<Vec<StageReport>> = None;
    for inst in &instances {
        let reports = tree_profile(inst, kind, 0.0, None)?.reports;
        match &mut acc {
            None => acc = Some(reports),
            Some(sum) => {
                for (s, r) in sum.iter_mut().zip(&reports) {
                    s.avg_logneg += r.avg_logneg;
                    s.mixedness += r.mixedness;
                }
            }
        }
    }
    let count = instances.len() as f64;
    Ok(acc
        .unwrap_or_default()
        .into_iter()
        .map(|mut r| {
            r.avg_logneg /= count;
            r.mixedness /= count;
            r
        })
        .collect())
}

/// Success counts for one noise probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSweepRow {
    pub prob: f64,
    pub successes: u64,
    pub runs: u64,
}

impl NoiseSweepRow {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }

    /// Binomial standard error of the rate.
    pub fn sigma(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.runs as f64).sqrt()
    }
}

/// One sampled trajectory; returns the measured outcome `c`.
pub fn run_trajectory(
    inst: &ShorInstance,
    kind: InitialStateKind,
    noise: &NoiseConfig,
    run: u64,
) -> Result<u64> {
    let plan = StagePlan::new(inst);
    let mut rng = TrajectoryRng::new(noise.seed, run);
    let mut state = initial_state(inst, kind);
    let mut gate_index = 0;
    for s in 0..inst.stages() {
        for gate in stage_gates(inst, s, state.bits())? {
            plan.apply(state.rho_mut(), gate)?;
            noise_pass_in_place(state.rho_mut(), noise, gate_index, &mut rng)?;
            gate_index += 1;
        }
        let (p0, p1) = control_probabilities(state.rho());
        let p0 = p0 / (p0 + p1);
        let u = rng.uniform(DrawPurpose::Measurement, s, 0);
        let bit = if u < p0 { 0 } else { 1 };
        let mut bits = state.bits().to_vec();
        bits.push(bit);
        state = ComputerState::new(collapse_control(state.rho(), bit), s + 1, bits)?;
        if s + 1 < inst.stages() {
            state = reprepare_control(&state, 0.0)?;
        }
    }
    Ok(outcome_value(state.bits()))
}

/// Monte Carlo success counts over a grid of noise probabilities.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_sweep(
    inst: &ShorInstance,
    kind: InitialStateKind,
    noise_kind: NoiseKind,
    probs: &[f64],
    runs: u64,
    exclude_control: bool,
    seed: u64,
) -> Result<Vec<NoiseSweepRow>> {
    if runs == 0 {
        return Err(Error::OutOfRange("runs must be at least 1".into()));
    }
    let t = inst.outcomes();
    probs
        .iter()
        .map(|&prob| {
            let config = NoiseConfig::new(noise_kind, prob, exclude_control, seed)?;
            let hits: Vec<bool> = (0..runs)
                .into_par_iter()
                .map(|run| {
                    let c = run_trajectory(inst, kind, &config, run)?;
                    Ok(extract_period(c, t, inst.modulus(), inst.base()) == Some(inst.order()))
                })
                .collect::<Result<_>>()?;
            Ok(NoiseSweepRow {
                prob,
                successes: hits.iter().filter(|&&h| h).count() as u64,
                runs,
            })
        })
        .collect()
}

/// Exact success probability and whole-run entanglement for one epsilon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSweepRow {
    pub epsilon: f64,
    pub success_prob: f64,
    pub avg_entanglement: f64,
}

pub fn mix_sweep(
    inst: &ShorInstance,
    kind: InitialStateKind,
    epsilons: &[f64],
) -> Result<Vec<MixSweepRow>> {
    let opts = TreeOptions {
        entanglement: true,
        ..TreeOptions::distribution_only()
    };
    epsilons
        .iter()
        .map(|&epsilon| {
            let tree = run_tree(inst, kind, epsilon, opts)?;
            Ok(MixSweepRow {
                epsilon,
                success_prob: success_mass(inst, &tree.leaf_distribution),
                avg_entanglement: tree.whole_run_entanglement(),
            })
        })
        .collect()
}

/// Whether the whole-run average entanglement at `epsilon` is below the
/// zero threshold. Stops enumerating as soon as the threshold is reached.
pub fn entanglement_vanishes(
    inst: &ShorInstance,
    kind: InitialStateKind,
    epsilon: f64,
) -> Result<bool> {
    let opts = TreeOptions {
        entanglement: true,
        abort_above: Some(ZERO_ENTANGLEMENT),
        ..TreeOptions::distribution_only()
    };
    let tree = run_tree(inst, kind, epsilon, opts)?;
    Ok(!tree.aborted && tree.whole_run_entanglement() < ZERO_ENTANGLEMENT)
}

/// Smallest epsilon at which the whole-run entanglement vanishes: the first
/// grid point (step 0.002) below threshold, refined by bisection to 1e-4.
pub fn entanglement_crossing(inst: &ShorInstance, kind: InitialStateKind) -> Result<Option<f64>> {
    let steps = (0.5 / CROSSING_GRID_STEP).round() as usize;
    let mut first_below = None;
    for k in 0..=steps {
        let eps = (k as f64 * CROSSING_GRID_STEP).min(0.5);
        if entanglement_vanishes(inst, kind, eps)? {
            first_below = Some(k);
            break;
        }
    }
    let Some(k) = first_below else {
        return Ok(None);
    };
    if k == 0 {
        return Ok(Some(0.0));
    }
    let mut lo = (k - 1) as f64 * CROSSING_GRID_STEP;
    let mut hi = (k as f64 * CROSSING_GRID_STEP).min(0.5);
    while hi - lo > CROSSING_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if entanglement_vanishes(inst, kind, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Pearson correlation coefficient of two equally long series.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Branch probabilities at each depth sum to one (up to pruned mass).
pub fn level_mass(nodes: &[NodeRecord], stage: usize, kind: SamplePoint) -> f64 {
    nodes
        .iter()
        .filter(|n| n.stage == stage && n.kind == kind)
        .map(|n| n.path_prob)
        .sum()
}
