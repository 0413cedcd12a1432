//! Integer routines: modular powers, multiplicative orders, continued
//! fractions and the cycle structure of modular multiplication.

use std::fmt;

use crate::error::{Error, Result};

pub fn gcd(x: u64, y: u64) -> u64 {
    num_integer::gcd(x, y)
}

/// `a^e mod n` by square-and-multiply.
pub fn mod_pow(a: u64, mut e: u64, n: u64) -> u64 {
    let n128 = n as u128;
    let mut base = (a % n) as u128;
    let mut acc: u128 = 1 % n128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % n128;
        }
        base = base * base % n128;
        e >>= 1;
    }
    acc as u64
}

fn require_coprime(a: u64, n: u64) -> Result<()> {
    if gcd(a, n) != 1 {
        return Err(Error::NotCoprime { a, n });
    }
    Ok(())
}

/// Least `r >= 1` with `a^r = 1 (mod n)`, found by direct iteration.
pub fn multiplicative_order(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("modulus {n} < 2")));
    }
    require_coprime(a, n)?;
    let a = a % n;
    let mut x = a;
    let mut r = 1;
    while x != 1 % n {
        x = x * a % n;
        r += 1;
    }
    Ok(r)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factors with multiplicity, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        while n.is_multiple_of(d) {
            out.push(d);
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `(p, q)` with `p <= q` when `n` is a product of exactly two primes.
pub fn semiprime_factors(n: u64) -> Option<(u64, u64)> {
    match prime_factors(n).as_slice() {
        &[p, q] => Some((p, q)),
        _ => None,
    }
}

/// Nonnegative rational in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    numerator: u64,
    denominator: u64,
}

impl Fraction {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::OutOfRange("zero denominator".into()));
        }
        let g = gcd(numerator, denominator);
        Ok(Self {
            numerator: numerator / g,
            denominator: denominator / g,
        })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Convergents of `c / t` from its Euclidean continued-fraction expansion.
/// The last convergent is `c / t` reduced; `c = 0` yields `[0/1]`.
pub fn convergents(c: u64, t: u64) -> Vec<Fraction> {
    assert!(t > 0, "denominator must be positive");
    let (mut num, mut den) = (c, t);
    // h_{k-1}, h_{k-2} and k_{k-1}, k_{k-2}
    let (mut h1, mut h2) = (1u64, 0u64);
    let (mut k1, mut k2) = (0u64, 1u64);
    let mut out = Vec::new();
    loop {
        let q = num / den;
        let h = q * h1 + h2;
        let k = q * k1 + k2;
        out.push(Fraction {
            numerator: h,
            denominator: k,
        });
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
        let rem = num % den;
        if rem == 0 {
            break;
        }
        (num, den) = (den, rem);
    }
    out
}

/// Period candidate from a measured `c`: the convergent of `c / t` with the
/// largest denominator `k < n`, accepted only if `a^k = 1 (mod n)`.
pub fn extract_period(c: u64, t: u64, n: u64, a: u64) -> Option<u64> {
    let k = convergents(c, t)
        .into_iter()
        .map(|f| f.denominator)
        .filter(|&k| k < n)
        .max()?;
    (mod_pow(a, k, n) == 1).then_some(k)
}

/// Orbits of `b -> a*b mod n` on `0..2^bits`, with `b >= n` fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDecomposition {
    cycles: Vec<Vec<u64>>,
}

impl CycleDecomposition {
    pub fn cycles(&self) -> &[Vec<u64>] {
        &self.cycles
    }

    pub fn cycle_containing(&self, b: u64) -> Option<&[u64]> {
        self.cycles
            .iter()
            .find(|c| c.contains(&b))
            .map(|c| c.as_slice())
    }

    /// Number of elements lying in cycles of exactly this length.
    pub fn elements_in_cycles_of_length(&self, len: usize) -> usize {
        self.cycles
            .iter()
            .filter(|c| c.len() == len)
            .map(|c| c.len())
            .sum()
    }

    pub fn total_len(&self) -> usize {
        self.cycles.iter().map(|c| c.len()).sum()
    }
}

pub fn permutation_cycles(a: u64, n: u64, bits: u32) -> Result<CycleDecomposition> {
    require_coprime(a, n)?;
    let size = 1u64 << bits;
    if size < n {
        return Err(Error::OutOfRange(format!("2^{bits} < {n}")));
    }
    let mut seen = vec![false; size as usize];
    let mut cycles = Vec::new();
    for start in 0..size {
        if seen[start as usize] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start as usize] = true;
        if start < n {
            let mut b = a * start % n;
            while b != start {
                seen[b as usize] = true;
                cycle.push(b);
                b = a * b % n;
            }
        }
        cycles.push(cycle);
    }
    Ok(CycleDecomposition { cycles })
}

/// Integers with exactly `bits` binary digits that are products of two
/// (not necessarily distinct) primes.
pub fn semiprime_list(bits: u32) -> Vec<u64> {
    let lo = 1u64 << (bits - 1);
    let hi = 1u64 << bits;
    (lo..hi)
        .filter(|&n| semiprime_factors(n).is_some())
        .collect()
}

/// All `a` in `[2, n-1]` coprime to `n`.
pub fn coprime_list(n: u64) -> Vec<u64> {
    (2..n).filter(|&a| gcd(a, n) == 1).collect()
}

/// `gcd(a^(r/2) +- 1, n)` when `r` is even; nontrivial factors only.
pub fn factors_from_period(a: u64, r: u64, n: u64) -> Vec<u64> {
    if !r.is_multiple_of(2) {
        return Vec::new();
    }
    let half = mod_pow(a, r / 2, n);
    let mut out: Vec<u64> = [gcd(half + 1, n), gcd((half + n - 1) % n, n)]
        .into_iter()
        .filter(|&f| f != 1 && f != n)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
