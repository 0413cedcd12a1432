//! Stochastic per-qubit noise: nonselective measurement (dephasing) and
//! uniformly random Pauli operations (depolarizing).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::CONTROL;
use crate::densemat::{apply_local_gate_in_place, gates, DensityMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    None,
    Measurement,
    Pauli,
}

impl NoiseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Measurement => "measurement",
            Self::Pauli => "pauli",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "measurement" | "measure" => Ok(Self::Measurement),
            "pauli" => Ok(Self::Pauli),
            other => Err(Error::OutOfRange(format!("unknown noise kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    /// Probability of a noise event per qubit per gate.
    pub prob: f64,
    pub exclude_control: bool,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(kind: NoiseKind, prob: f64, exclude_control: bool, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::OutOfRange(format!(
                "noise probability {prob} outside [0, 1]"
            )));
        }
        Ok(Self {
            kind,
            prob,
            exclude_control,
            seed,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::None,
            prob: 0.0,
            exclude_control: false,
            seed: 0,
        }
    }
}

fn check_qubit(rho: &DensityMatrix, q: usize) -> Result<()> {
    if q >= rho.qubits() {
        return Err(Error::QubitOutOfRange {
            index: q,
            qubits: rho.qubits(),
        });
    }
    Ok(())
}

/// `P0 rho P0 + P1 rho P1` on qubit `q`.
pub fn dephase_qubit(rho: &DensityMatrix, q: usize) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    dephase_in_place(&mut out, q)?;
    Ok(out)
}

pub(crate) fn dephase_in_place(rho: &mut DensityMatrix, q: usize) -> Result<()> {
    check_qubit(rho, q)?;
    let d = rho.dim();
    let bit = 1usize << (rho.qubits() - 1 - q);
    let data = rho.matrix_mut().data_mut();
    for i in 0..d {
        for j in 0..d {
            if (i ^ j) & bit != 0 {
                data[i * d + j] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(())
}

/// `(rho + X rho X + Y rho Y + Z rho Z) / 4` on qubit `q`.
pub fn depolarize_qubit(rho: &DensityMatrix, q: usize) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    depolarize_in_place(&mut out, q)?;
    Ok(out)
}

pub(crate) fn depolarize_in_place(rho: &mut DensityMatrix, q: usize) -> Result<()> {
    check_qubit(rho, q)?;
    let mut acc = rho.matrix().clone();
    for pauli in [gates::pauli_x(), gates::pauli_y(), gates::pauli_z()] {
        let mut term = rho.clone();
        apply_local_gate_in_place(&mut term, &pauli, &[q])?;
        acc = acc.add(term.matrix())?;
    }
    *rho = DensityMatrix::from_matrix_unchecked(acc.scale(Complex64::new(0.25, 0.0)));
    rho.hermitize();
    Ok(())
}

/// What a random draw is used for; part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum DrawPurpose {
    NoiseEvent = 0,
    Measurement = 1,
}

/// Counter-based random stream for one trajectory. Every draw is keyed by
/// `(seed, run, purpose, gate, qubit)`, so results do not depend on the
/// order in which trajectories are scheduled.
#[derive(Debug, Clone)]
pub struct TrajectoryRng {
    rng: ChaCha8Rng,
}

impl TrajectoryRng {
    const MAX_QUBITS: u128 = 64;

    pub fn new(seed: u64, run: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&run.to_le_bytes());
        Self {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self, purpose: DrawPurpose, gate: usize, qubit: usize) -> f64 {
        self.rng.set_stream(purpose as u64);
        // one f64 consumes two 32-bit words
        self.rng
            .set_word_pos(2 * (gate as u128 * Self::MAX_QUBITS + qubit as u128));
        self.rng.random::<f64>()
    }
}

/// One noise opportunity after gate `gate_index`: each eligible qubit
/// suffers an event with probability `config.prob`; an event applies the
/// full channel mixture.
pub fn noise_pass(
    rho: &DensityMatrix,
    config: &NoiseConfig,
    gate_index: usize,
    rng: &mut TrajectoryRng,
) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    noise_pass_in_place(&mut out, config, gate_index, rng)?;
    Ok(out)
}

pub(crate) fn noise_pass_in_place(
    rho: &mut DensityMatrix,
    config: &NoiseConfig,
    gate_index: usize,
    rng: &mut TrajectoryRng,
) -> Result<()> {
    if config.kind == NoiseKind::None || config.prob == 0.0 {
        return Ok(());
    }
    for q in 0..rho.qubits() {
        if config.exclude_control && q == CONTROL {
            continue;
        }
        if rng.uniform(DrawPurpose::NoiseEvent, gate_index, q) >= config.prob {
            continue;
        }
        match config.kind {
            NoiseKind::Measurement => dephase_in_place(rho, q)?,
            NoiseKind::Pauli => depolarize_in_place(rho, q)?,
            NoiseKind::None => {}
        }
    }
    Ok(())
}
