//! The remainder recursion `k_{i+1} = n mod k_i` and the resulting verdict
//! on whether every surjective rank-k projector self-map is a Wigner form.

use std::fmt;

use crate::{Error, Result};

/// Outcome of running the recursion to its last nonzero element `k_*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `k_* = 1`: every surjective self-map of rank-k projectors is `U·U†` or `U(·)ᵗU†`.
    Conclusive,
    /// The question reduces to rank-`k_*` projectors with `k_* | n`, `k_* > 1`.
    ReducesToDivisor(usize),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Conclusive => write!(f, "Conclusive"),
            Verdict::ReducesToDivisor(d) => write!(f, "ReducesToDivisor({d})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KSequence {
    pub n: usize,
    /// Strictly decreasing, starting at `k`; the terminal 0 is not stored.
    pub ks: Vec<usize>,
    pub k_star: usize,
    pub verdict: Verdict,
}

pub fn compute_sequence(n: usize, k: usize) -> Result<KSequence> {
    if k == 0 || k >= n {
        return Err(Error::InvalidRank { n, k });
    }
    let mut ks = vec![k];
    let mut current = k;
    loop {
        let next = n % current;
        if next == 0 {
            break;
        }
        ks.push(next);
        current = next;
    }
    let k_star = current;
    let verdict = if k_star == 1 {
        Verdict::Conclusive
    } else {
        Verdict::ReducesToDivisor(k_star)
    };
    Ok(KSequence {
        n,
        ks,
        k_star,
        verdict,
    })
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `gcd(n, k)` divides every element of the sequence.
pub fn divisor_invariant_check(n: usize, k: usize) -> Result<bool> {
    let seq = compute_sequence(n, k)?;
    let g = gcd(n, k);
    Ok(seq.ks.iter().all(|&ki| ki % g == 0))
}
