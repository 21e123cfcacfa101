//! Constructors for the named maps: unitary and antiunitary conjugations,
//! the reduction map, the `n = 2k` involution and the Breuer-Hall map.

use nalgebra::{DMatrix, DVector};

use crate::operator_space::{seeded_rng, haar_unitary_with, unitarity_deviation, HermitianMatrix, Projector};
use crate::superop::Superoperator;
use crate::{Error, Result, C64};

/// Unitarity / antisymmetry tolerance for constructor inputs.
pub const UNITARY_TOL: f64 = 1e-9;

/// `X -> U X U†`, or `X -> U Xᵗ U†` when `transpose` is set.
pub fn wigner_map(u: &DMatrix<C64>, transpose: bool) -> Result<Superoperator> {
    if u.nrows() != u.ncols() {
        return Err(Error::NotSquare(u.nrows(), u.ncols()));
    }
    let dev = unitarity_deviation(u);
    if !(dev <= UNITARY_TOL) {
        return Err(Error::NotUnitary(dev));
    }
    Superoperator::from_fn(u.nrows(), |x| {
        if transpose {
            x.transpose().conjugate_by(u)
        } else {
            x.conjugate_by(u)
        }
    })
}

/// Transposition in the standard basis: `+1` on identity, diagonal and
/// symmetric coordinates, `−1` on antisymmetric ones.
pub fn transposition_map(n: usize) -> Result<Superoperator> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let d = n * n;
    let sym = n + n * (n - 1) / 2;
    let diag = DVector::from_fn(d, |i, _| if i < sym { 1.0 } else { -1.0 });
    Superoperator::new(n, DMatrix::from_diagonal(&diag))
}

/// `X -> (1/k)·I·Tr X − X`.
pub fn reduction_map(n: usize, k: usize) -> Result<Superoperator> {
    if k == 0 || k >= n {
        return Err(Error::InvalidRank { n, k });
    }
    // I = √n·B_0 and Tr X = √n·c_0
    let d = n * n;
    let mut m = -DMatrix::<f64>::identity(d, d);
    m[(0, 0)] += n as f64 / k as f64;
    Superoperator::new(n, m)
}

/// The reduction map at `n = 2k`, which sends rank-k projectors to rank-k
/// projectors and squares to the identity.
pub fn involution_map(k: usize) -> Result<Superoperator> {
    if k == 0 {
        return Err(Error::InvalidRank { n: 0, k });
    }
    reduction_map(2 * k, k)
}

/// The standard symplectic form `[[0, I], [−I, 0]]` of size `2·n_half`.
pub fn symplectic_unitary(n_half: usize) -> DMatrix<C64> {
    let d = 2 * n_half;
    DMatrix::from_fn(d, d, |r, c| {
        if c == r + n_half {
            C64::new(1.0, 0.0)
        } else if r == c + n_half {
            C64::new(-1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `V J Vᵗ` for Haar `V`: antisymmetric and unitary.
pub fn random_antisymmetric_unitary(n_half: usize, seed: u64) -> DMatrix<C64> {
    let v = haar_unitary_with(2 * n_half, &mut seeded_rng(seed));
    &v * symplectic_unitary(n_half) * v.transpose()
}

/// `X -> (I·Tr X − X − U Xᵗ U†) / (2(n_half − 1))` on dimension `2·n_half`.
pub fn breuer_hall_map(n_half: usize, u: &DMatrix<C64>) -> Result<Superoperator> {
    if n_half < 2 {
        return Err(Error::InvalidDimension(2 * n_half));
    }
    let dim = 2 * n_half;
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.nrows(),
        });
    }
    let antisym = (u.transpose() + u).norm();
    if !(antisym <= UNITARY_TOL) {
        return Err(Error::NotAntisymmetric(antisym));
    }
    let w = wigner_map(u, true)?;
    let d = dim * dim;
    let mut m = -DMatrix::<f64>::identity(d, d) - w.matrix();
    m[(0, 0)] += dim as f64;
    m /= 2.0 * (n_half as f64 - 1.0);
    Superoperator::new(dim, m)
}

/// The `n/k` coordinate-block projectors `Σ_{j<k} |e_{ik+j}⟩⟨e_{ik+j}|`.
pub fn standard_block_family(n: usize, k: usize) -> Result<Vec<Projector>> {
    if k == 0 || k > n {
        return Err(Error::InvalidRank { n, k });
    }
    if !n.is_multiple_of(k) {
        return Err(Error::NotADivisor { n, k });
    }
    Ok((0..n / k)
        .map(|i| {
            let frame = DMatrix::from_fn(n, k, |r, c| {
                if r == i * k + c {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            Projector::from_frame(&frame)
        })
        .collect())
}

/// `Σ_i Q_i` helper used by block checks.
pub(crate) fn sum_of(ms: &[HermitianMatrix]) -> Option<HermitianMatrix> {
    let mut it = ms.iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, m| &acc + m))
}
