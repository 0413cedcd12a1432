//! Logarithmic negativity over bipartitions of a qubit register.

use std::collections::HashMap;
use std::fmt;

use crate::densemat::{
    hermitian_eigenvalues, partial_trace, partial_transpose_mask, trace_norm_hermitian,
    von_neumann_entropy, DensityMatrix,
};
use crate::error::{Error, Result};

/// Log-negativities below this count as zero.
pub const ZERO_ENTANGLEMENT: f64 = 1e-10;

/// A split of the register into `subset` and its complement. Canonical
/// form keeps qubit 0 out of `subset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    qubits: usize,
    /// Bit `q` set when qubit `q` belongs to the subset.
    subset: u64,
}

impl Bipartition {
    /// Canonicalizes any nonempty proper subset of `0..qubits`.
    pub fn new(qubits: usize, subset: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &q in subset {
            if q >= qubits {
                return Err(Error::QubitOutOfRange { index: q, qubits });
            }
            mask |= 1 << q;
        }
        Self::from_mask(qubits, mask)
    }

    pub fn from_mask(qubits: usize, mask: u64) -> Result<Self> {
        let full = (1u64 << qubits) - 1;
        if mask == 0 || mask & full == full || mask & !full != 0 {
            return Err(Error::ImproperSubset);
        }
        let subset = if mask & 1 == 1 { full & !mask } else { mask };
        Ok(Self { qubits, subset })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn mask(&self) -> u64 {
        self.subset
    }

    pub fn subset(&self) -> Vec<usize> {
        (0..self.qubits)
            .filter(|q| self.subset >> q & 1 == 1)
            .collect()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.qubits)
            .filter(|q| self.subset >> q & 1 == 0)
            .collect()
    }

    /// Mask in global basis-index space (qubit 0 is the top bit).
    fn index_mask(&self) -> usize {
        (0..self.qubits)
            .filter(|q| self.subset >> q & 1 == 1)
            .fold(0, |acc, q| acc | 1 << (self.qubits - 1 - q))
    }
}

impl fmt::Display for Bipartition {
    /// One-based labels, the side holding qubit 0 first (e.g. `1/234`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |qs: Vec<usize>| -> String { qs.iter().map(|q| (q + 1).to_string()).collect() };
        write!(f, "{}/{}", side(self.complement()), side(self.subset()))
    }
}

/// All canonical bipartitions of an `m`-qubit register (`2^(m-1) - 1` of them).
pub fn bipartitions(qubits: usize) -> Result<Vec<Bipartition>> {
    if !(2..=63).contains(&qubits) {
        return Err(Error::OutOfRange(format!(
            "bipartitions need at least 2 qubits, got {qubits}"
        )));
    }
    Ok((1..1u64 << (qubits - 1))
        .map(|half| Bipartition {
            qubits,
            subset: half << 1,
        })
        .collect())
}

fn check_partition(rho: &DensityMatrix, partition: &Bipartition) -> Result<()> {
    if partition.qubits != rho.qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.qubits(),
            found: partition.qubits,
        });
    }
    Ok(())
}

fn log_negativity_mask(rho: &DensityMatrix, index_mask: usize) -> f64 {
    let pt = partial_transpose_mask(rho.matrix(), index_mask);
    let norm = trace_norm_hermitian(&pt).expect("partial transpose of a state is Hermitian");
    let value = norm.log2();
    if value.abs() < ZERO_ENTANGLEMENT {
        0.0
    } else {
        value.max(0.0)
    }
}

/// `log2 || rho^{T_S} ||_1`, clamped to zero below `1e-10`.
pub fn log_negativity(rho: &DensityMatrix, partition: &Bipartition) -> Result<f64> {
    check_partition(rho, partition)?;
    Ok(log_negativity_mask(rho, partition.index_mask()))
}

/// True iff the smallest eigenvalue of the partial transpose is `>= -tol`.
pub fn is_ppt(rho: &DensityMatrix, partition: &Bipartition, tol: f64) -> Result<bool> {
    check_partition(rho, partition)?;
    let pt = partial_transpose_mask(rho.matrix(), partition.index_mask());
    Ok(hermitian_eigenvalues(&pt)?.min() >= -tol)
}

/// Qubits in an exact computational-basis product factor: every row and
/// column belonging to the other value of the qubit is identically zero.
fn basis_product_qubits(rho: &DensityMatrix) -> Vec<usize> {
    let m = rho.qubits();
    let d = rho.dim();
    let data = rho.matrix().data();
    (0..m)
        .filter(|&q| {
            let bit = 1usize << (m - 1 - q);
            [0usize, bit].iter().any(|&empty| {
                (0..d).filter(|i| i & bit == empty).all(|i| {
                    data[i * d..(i + 1) * d]
                        .iter()
                        .all(|z| z.re == 0.0 && z.im == 0.0)
                })
            })
        })
        .collect()
}

/// Log-negativity for every canonical bipartition, in `bipartitions` order.
///
/// Qubits that factor out as exact basis states are traced away first; a
/// split is then evaluated on the remaining qubits only, and is zero when
/// one side keeps none of them.
pub fn partition_log_negativities(rho: &DensityMatrix) -> Result<Vec<(Bipartition, f64)>> {
    let m = rho.qubits();
    let parts = bipartitions(m)?;
    let product = basis_product_qubits(rho);
    let remaining: Vec<usize> = (0..m).filter(|q| !product.contains(q)).collect();
    if remaining.len() < 2 {
        return Ok(parts.into_iter().map(|p| (p, 0.0)).collect());
    }
    let reduced = if product.is_empty() {
        rho.clone()
    } else {
        partial_trace(rho, &product)?
    };
    let r = remaining.len();
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        let mut local = 0u64;
        for (k, &q) in remaining.iter().enumerate() {
            if p.subset >> q & 1 == 1 {
                local |= 1 << k;
            }
        }
        let full = (1u64 << r) - 1;
        if local == 0 || local == full {
            out.push((p, 0.0));
            continue;
        }
        let key = if local & 1 == 1 { full & !local } else { local };
        let value = *cache.entry(key).or_insert_with(|| {
            let index_mask = (0..r)
                .filter(|k| key >> k & 1 == 1)
                .fold(0usize, |acc, k| acc | 1 << (r - 1 - k));
            log_negativity_mask(&reduced, index_mask)
        });
        out.push((p, value));
    }
    Ok(out)
}

/// Unweighted mean of the log-negativity over all canonical bipartitions.
pub fn average_log_negativity(rho: &DensityMatrix) -> Result<f64> {
    let values = partition_log_negativities(rho)?;
    Ok(values.iter().map(|(_, v)| v).sum::<f64>() / values.len() as f64)
}

/// Von Neumann entropy of the whole register, in bits.
pub fn mixedness(rho: &DensityMatrix) -> f64 {
    von_neumann_entropy(rho)
}
