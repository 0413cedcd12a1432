//! The recycled single-control-qubit period-finding circuit.
//!
//! Register layout: qubit 0 is the control, qubits `1..=n` hold the work
//! register integer `b` with qubit 1 as its most significant bit. Stage `s`
//! applies the controlled multiplication by `a^(2^(L-1-s)) mod N`, the phase
//! correction built from earlier outcomes, and a Hadamard on the control;
//! the measured bit `m_s` carries weight `2^s` in the outcome `c`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::densemat::{
    apply_local_gate_in_place, gates, permute_basis_unchecked, ComplexMatrix, DensityMatrix, ONE,
};
use crate::error::{Error, Result};
use crate::numtheory::{gcd, is_prime, mod_pow, multiplicative_order, semiprime_factors};

pub const CONTROL: usize = 0;
pub const MIN_MODULUS: u64 = 6;
pub const MAX_MODULUS: u64 = 31;
/// Branches whose probability falls below this are dropped.
pub const DEAD_BRANCH: f64 = 1e-14;

/// Static description of one period-finding problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShorInstance {
    modulus: u64,
    base: u64,
    work_qubits: usize,
    stages: usize,
    order: u64,
    factors: Option<(u64, u64)>,
}

impl ShorInstance {
    /// The number to factor, `N`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The coprime base `a`.
    pub fn base(&self) -> u64 {
        self.base
    }

    /// `n = ceil(log2 N)`.
    pub fn work_qubits(&self) -> usize {
        self.work_qubits
    }

    /// Control plus work register.
    pub fn total_qubits(&self) -> usize {
        self.work_qubits + 1
    }

    /// `L = 2n` control stages.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Number of possible outcomes, `t = 2^L`.
    pub fn outcomes(&self) -> u64 {
        1 << self.stages
    }

    /// True multiplicative order `r` of `a` modulo `N`.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn factors(&self) -> Option<(u64, u64)> {
        self.factors
    }

    /// `a^(2^x) mod N`, by repeated squaring.
    pub fn multiplier(&self, x: usize) -> u64 {
        (0..x).fold(self.base % self.modulus, |acc, _| acc * acc % self.modulus)
    }

    /// Multiplier used at stage `s`, i.e. exponent index `L - 1 - s`.
    pub fn stage_multiplier(&self, s: usize) -> u64 {
        self.multiplier(self.stages - 1 - s)
    }
}

pub fn build_instance(modulus: u64, base: u64) -> Result<ShorInstance> {
    if !(MIN_MODULUS..=MAX_MODULUS).contains(&modulus) {
        return Err(Error::OutOfRange(format!(
            "N = {modulus} outside [{MIN_MODULUS}, {MAX_MODULUS}]"
        )));
    }
    if is_prime(modulus) {
        return Err(Error::PrimeModulus(modulus));
    }
    if !(2..modulus).contains(&base) {
        return Err(Error::OutOfRange(format!("a = {base} outside [2, N-1]")));
    }
    if gcd(base, modulus) != 1 {
        return Err(Error::NotCoprime {
            a: base,
            n: modulus,
        });
    }
    let work_qubits = (64 - (modulus - 1).leading_zeros()) as usize;
    Ok(ShorInstance {
        modulus,
        base,
        work_qubits,
        stages: 2 * work_qubits,
        order: multiplicative_order(base, modulus)?,
        factors: semiprime_factors(modulus),
    })
}

/// Initial state of the work register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialStateKind {
    /// The basis state `|1>`.
    Pure,
    /// Uniform mixture of `|b>` for `b < N`.
    MixedN,
    /// Maximally mixed over all `2^n` basis states.
    MixedFull,
}

impl InitialStateKind {
    pub const ALL: [InitialStateKind; 3] = [Self::Pure, Self::MixedN, Self::MixedFull];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pure => "pure",
            Self::MixedN => "mixed-n",
            Self::MixedFull => "mixed-full",
        }
    }
}

impl fmt::Display for InitialStateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitialStateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(Self::Pure),
            "mixed-n" | "mixed" => Ok(Self::MixedN),
            "mixed-full" => Ok(Self::MixedFull),
            other => Err(Error::OutOfRange(format!("unknown state kind '{other}'"))),
        }
    }
}

/// Probability of each work-register basis state at preparation.
pub fn work_distribution(inst: &ShorInstance, kind: InitialStateKind) -> Vec<f64> {
    let size = 1usize << inst.work_qubits;
    let n = inst.modulus as usize;
    (0..size)
        .map(|b| match kind {
            InitialStateKind::Pure => (b == 1) as u8 as f64,
            InitialStateKind::MixedN => {
                if b < n {
                    1.0 / n as f64
                } else {
                    0.0
                }
            }
            InitialStateKind::MixedFull => 1.0 / size as f64,
        })
        .collect()
}

/// Register state between stages, with the measurement history.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputerState {
    rho: DensityMatrix,
    stage: usize,
    bits: Vec<u8>,
}

impl ComputerState {
    pub fn new(rho: DensityMatrix, stage: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != stage {
            return Err(Error::OutOfRange(format!(
                "{} bits recorded at stage {stage}",
                bits.len()
            )));
        }
        Ok(Self { rho, stage, bits })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub(crate) fn rho_mut(&mut self) -> &mut DensityMatrix {
        &mut self.rho
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `c = sum 2^s m_s` over the recorded bits.
    pub fn outcome(&self) -> u64 {
        outcome_value(&self.bits)
    }
}

pub fn outcome_value(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (s, &m)| acc | ((m as u64) << s))
}

/// Control qubit in `|+><+|`, work register per `kind`.
pub fn initial_state(inst: &ShorInstance, kind: InitialStateKind) -> ComputerState {
    initial_state_mixed(inst, kind, 0.0).expect("epsilon 0 is valid")
}

/// Control qubit in `(1-eps)|+><+| + eps|-><-|`, work register per `kind`.
pub fn initial_state_mixed(
    inst: &ShorInstance,
    kind: InitialStateKind,
    epsilon: f64,
) -> Result<ComputerState> {
    check_epsilon(epsilon)?;
    let work = work_distribution(inst, kind);
    let mut probs = work.clone();
    probs.extend(std::iter::repeat_n(0.0, work.len()));
    let mut rho = DensityMatrix::from_probabilities(&probs)?;
    prepare_control(&mut rho, epsilon)?;
    Ok(ComputerState {
        rho,
        stage: 0,
        bits: Vec::new(),
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::OutOfRange(format!(
            "epsilon {epsilon} outside [0, 0.5]"
        )));
    }
    Ok(())
}

/// Mixes a control qubit sitting in `|0>` with its flipped copy, then
/// applies the Hadamard.
fn prepare_control(rho: &mut DensityMatrix, epsilon: f64) -> Result<()> {
    if epsilon > 0.0 {
        let mut flipped = rho.clone();
        apply_local_gate_in_place(&mut flipped, &gates::pauli_x(), &[CONTROL])?;
        let keep = 1.0 - epsilon;
        for (z, f) in rho
            .matrix_mut()
            .data_mut()
            .iter_mut()
            .zip(flipped.matrix().data())
        {
            *z = *z * keep + *f * epsilon;
        }
    }
    apply_local_gate_in_place(rho, &gates::hadamard(), &[CONTROL])
}

/// Basis permutation of the controlled multiplication by `a^(2^x) mod N`.
pub fn modmult_permutation(inst: &ShorInstance, x: usize) -> Vec<usize> {
    let mult = inst.multiplier(x) as usize;
    let half = 1usize << inst.work_qubits;
    let n = inst.modulus as usize;
    (0..2 * half)
        .map(|i| {
            let b = i % half;
            if i >= half && b < n {
                half + mult * b % n
            } else {
                i
            }
        })
        .collect()
}

/// Dense permutation matrix of the controlled multiplication by
/// `a^(2^x) mod N` (identity on control 0 and on `b >= N`).
pub fn controlled_modmult_unitary(inst: &ShorInstance, x: usize) -> Result<ComplexMatrix> {
    if x >= inst.stages {
        return Err(Error::OutOfRange(format!(
            "exponent index {x} >= L = {}",
            inst.stages
        )));
    }
    let perm = modmult_permutation(inst, x);
    let mut u = ComplexMatrix::zeros(perm.len());
    for (i, &p) in perm.iter().enumerate() {
        u[(p, i)] = ONE;
    }
    Ok(u)
}

/// Phase removed from the control at stage `s`:
/// `sum_{k=2}^{s+1} m_{s+1-k} / 2^k`, in turns.
pub fn phase_correction_angle(bits: &[u8], s: usize) -> Result<f64> {
    if bits.len() < s {
        return Err(Error::OutOfRange(format!(
            "stage {s} needs {s} bits, have {}",
            bits.len()
        )));
    }
    Ok((2..=s + 1)
        .map(|k| bits[s + 1 - k] as f64 / (1u64 << k) as f64)
        .sum())
}

/// One displayed gate of a stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StageGate {
    /// Controlled multiplication by `a^(2^exponent_index) mod N`.
    ModMult {
        exponent_index: usize,
    },
    /// `diag(1, exp(-2 pi i theta))` on the control.
    PhaseCorrection {
        theta: f64,
    },
    Hadamard,
}

/// Gates of stage `s` in application order. Stage 0 has no phase
/// correction; every later stage has one, even when its angle is zero.
pub fn stage_gates(inst: &ShorInstance, s: usize, bits: &[u8]) -> Result<Vec<StageGate>> {
    if s >= inst.stages {
        return Err(Error::OutOfRange(format!(
            "stage {s} >= L = {}",
            inst.stages
        )));
    }
    let mut out = vec![StageGate::ModMult {
        exponent_index: inst.stages - 1 - s,
    }];
    if s > 0 {
        out.push(StageGate::PhaseCorrection {
            theta: phase_correction_angle(bits, s)?,
        });
    }
    out.push(StageGate::Hadamard);
    Ok(out)
}

/// Precomputed permutations for every stage of an instance.
#[derive(Debug, Clone)]
pub struct StagePlan {
    perms: Vec<Vec<usize>>,
}

impl StagePlan {
    pub fn new(inst: &ShorInstance) -> Self {
        Self {
            perms: (0..inst.stages)
                .map(|x| modmult_permutation(inst, x))
                .collect(),
        }
    }

    pub fn apply(&self, rho: &mut DensityMatrix, gate: StageGate) -> Result<()> {
        match gate {
            StageGate::ModMult { exponent_index } => {
                let perm = self
                    .perms
                    .get(exponent_index)
                    .ok_or_else(|| Error::OutOfRange(format!("exponent index {exponent_index}")))?;
                *rho = permute_basis_unchecked(rho, perm);
                Ok(())
            }
            StageGate::PhaseCorrection { theta } => {
                if theta == 0.0 {
                    return Ok(());
                }
                apply_phase_on_control(rho, theta);
                Ok(())
            }
            StageGate::Hadamard => apply_local_gate_in_place(rho, &gates::hadamard(), &[CONTROL]),
        }
    }
}

/// `diag(1, e^{-2 pi i theta})` on qubit 0: scales the off-diagonal blocks.
fn apply_phase_on_control(rho: &mut DensityMatrix, theta: f64) {
    let d = rho.dim();
    let half = d / 2;
    let phi = Complex64::from_polar(1.0, -2.0 * PI * theta);
    let data = rho.matrix_mut().data_mut();
    for i in 0..half {
        for j in half..d {
            data[i * d + j] *= phi.conj();
            data[j * d + i] *= phi;
        }
    }
}

/// Applies the gates of stage `s` (no measurement).
pub fn run_stage_gates(
    state: &ComputerState,
    s: usize,
    inst: &ShorInstance,
) -> Result<ComputerState> {
    if state.stage != s || s >= inst.stages {
        return Err(Error::OutOfRange(format!(
            "stage {s} requested for state at stage {} (L = {})",
            state.stage, inst.stages
        )));
    }
    let plan = StagePlan::new(inst);
    let mut out = state.clone();
    for gate in stage_gates(inst, s, &state.bits)? {
        plan.apply(&mut out.rho, gate)?;
    }
    Ok(out)
}

/// One outcome of a control measurement. `state` is `None` for a dead branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub state: Option<ComputerState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSplit {
    pub zero: Branch,
    pub one: Branch,
}

impl MeasurementSplit {
    pub fn branches(self) -> [(u8, Branch); 2] {
        [(0, self.zero), (1, self.one)]
    }
}

/// Probabilities `(p0, p1)` of measuring the control qubit.
pub fn control_probabilities(rho: &DensityMatrix) -> (f64, f64) {
    let d = rho.dim();
    let half = d / 2;
    let m = rho.matrix();
    let p0: f64 = (0..half).map(|i| m[(i, i)].re).sum();
    let p1: f64 = (half..d).map(|i| m[(i, i)].re).sum();
    (p0.max(0.0), p1.max(0.0))
}

/// Collapses the control onto `bit` and renormalizes.
pub(crate) fn collapse_control(rho: &DensityMatrix, bit: u8) -> DensityMatrix {
    let d = rho.dim();
    let half = d / 2;
    let keep = |i: usize| (i >= half) == (bit == 1);
    let mut out = rho.clone();
    let data = out.matrix_mut().data_mut();
    for i in 0..d {
        for j in 0..d {
            if !(keep(i) && keep(j)) {
                data[i * d + j] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out.renormalize();
    out.hermitize();
    out
}

/// Projective measurement of the control in the computational basis.
pub fn measure_control(state: &ComputerState) -> Result<MeasurementSplit> {
    let (p0, p1) = control_probabilities(&state.rho);
    let total = p0 + p1;
    if total.is_nan() || total <= DEAD_BRANCH {
        return Err(Error::CorruptState);
    }
    let (p0, p1) = (p0 / total, p1 / total);
    let make = |bit: u8, p: f64| -> Branch {
        if p < DEAD_BRANCH {
            return Branch {
                probability: p,
                state: None,
            };
        }
        let mut bits = state.bits.clone();
        bits.push(bit);
        Branch {
            probability: p,
            state: Some(ComputerState {
                rho: collapse_control(&state.rho, bit),
                stage: state.stage + 1,
                bits,
            }),
        }
    };
    Ok(MeasurementSplit {
        zero: make(0, p0),
        one: make(1, p1),
    })
}

/// Resets a measured control qubit to `|0>` (flipping if needed), mixes in
/// the flipped state with weight `epsilon`, then applies the Hadamard.
pub fn reprepare_control(state: &ComputerState, epsilon: f64) -> Result<ComputerState> {
    check_epsilon(epsilon)?;
    let (p0, p1) = control_probabilities(&state.rho);
    if p0.min(p1) > 1e-12 {
        return Err(Error::InvalidState(
            "control qubit is not in a computational basis state".into(),
        ));
    }
    let mut out = state.clone();
    if p1 > p0 {
        apply_local_gate_in_place(&mut out.rho, &gates::pauli_x(), &[CONTROL])?;
    }
    prepare_control(&mut out.rho, epsilon)?;
    Ok(out)
}

/// Outcome distribution of the full multi-control-qubit algorithm,
/// evaluated directly from the closed-form final state. Each initial work
/// value `b0` contributes `sum_y |(1/t) sum_{x: b0 a^x = y} e^{-2 pi i x c / t}|^2`.
pub fn reference_distribution(inst: &ShorInstance, kind: InitialStateKind) -> Vec<f64> {
    let t = inst.outcomes() as usize;
    let n = inst.modulus;
    let roots: Vec<Complex64> = (0..t)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / t as f64))
        .collect();
    let mut dist = vec![0.0; t];
    for (b0, &w) in work_distribution(inst, kind).iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        // value of b0 * a^x mod N for each x (b0 >= N is left fixed)
        let values: Vec<u64> = (0..t as u64)
            .map(|x| {
                if (b0 as u64) < n {
                    (b0 as u64) * mod_pow(inst.base, x, n) % n
                } else {
                    b0 as u64
                }
            })
            .collect();
        let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
        for (x, &v) in values.iter().enumerate() {
            match groups.iter_mut().find(|(y, _)| *y == v) {
                Some((_, xs)) => xs.push(x),
                None => groups.push((v, vec![x])),
            }
        }
        for (c, slot) in dist.iter_mut().enumerate() {
            let mut p = 0.0;
            for (_, xs) in &groups {
                let amp: Complex64 = xs.iter().map(|&x| roots[x * c % t]).sum();
                p += (amp / t as f64).norm_sqr();
            }
            *slot += w * p;
        }
    }
    dist
}
