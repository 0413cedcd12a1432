//! Random states and unitaries for tests, property checks and benchmarks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::densemat::{ComplexMatrix, DensityMatrix, ZERO};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary (Gram-Schmidt on a complex Ginibre matrix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    let mut m = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    m
}

/// Random normalized pure state vector.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Random density matrix `G G† / Tr` with `G` a `2^qubits x rank` Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    qubits: usize,
    rank: usize,
) -> DensityMatrix {
    let dim = 1 << qubits;
    let g: Vec<Complex64> = (0..dim * rank).map(|_| gaussian(rng)).collect();
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut s = ZERO;
            for k in 0..rank {
                s += g[i * rank + k] * g[j * rank + k].conj();
            }
            m[(i, j)] = s;
        }
    }
    let tr = m.trace().re;
    let mut m = m.scale(Complex64::new(1.0 / tr, 0.0));
    m.hermitize();
    DensityMatrix::new(m).expect("Ginibre construction yields a valid state")
}
