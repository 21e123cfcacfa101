//! Hermitian matrices, the canonical orthonormal Hermitian basis, projectors
//! and seeded sampling.
//!
//! The real vector space of `n x n` Hermitian matrices has dimension `n²`. It
//! is coordinatised by the ordered basis
//!
//! 1. `I/√n`,
//! 2. diagonal elements `D_l = (Σ_{m<l} |m⟩⟨m| − l|l⟩⟨l|)/√(l(l+1))`, `l = 1..n−1`,
//! 3. symmetric elements `S_ij = (|i⟩⟨j| + |j⟩⟨i|)/√2`, `i < j` in lexicographic order,
//! 4. antisymmetric elements `A_ij = i(|i⟩⟨j| − |j⟩⟨i|)/√2`, same order.
//!
//! The basis is orthonormal for the Hilbert-Schmidt product `⟨X, Y⟩ = Tr(XY)`,
//! so coordinates are inner products and superoperator duals are transposes.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result, C64};

/// Default tolerance for projector classification.
pub const PROJECTOR_TOL: f64 = 1e-9;

/// Hermiticity tolerance applied to construction inputs (relative to the largest entry).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// An `n x n` complex Hermitian matrix.
///
/// Stored entries are exactly Hermitian: constructors that accept arbitrary
/// complex input replace it by its Hermitian part after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Validates `m` as Hermitian within [`HERMITIAN_TOL`] and stores its Hermitian part.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let deviation = hermiticity_deviation(&m);
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        if deviation > tol * scale {
            return Err(Error::NotHermitian(deviation));
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(M + M†)/2` for any square `M`.
    pub fn hermitian_part(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let entries = DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        Self { entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let entries = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self { entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Transposition in the standard basis (equal to entrywise conjugation).
    pub fn transpose(&self) -> Self {
        Self {
            entries: self.entries.transpose(),
        }
    }

    /// `U X U†`.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Self {
        Self::hermitian_part(&(u * &self.entries * u.adjoint()))
    }

    /// Eigenvalues sorted in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    /// Eigenvalues in descending order with the matching eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = SymmetricEigen::new(self.entries.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }
}

fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        HermitianMatrix {
            entries: self.entries.map(|z| z * rhs),
        }
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix {
            entries: -&self.entries,
        }
    }
}

/// A rank-k orthogonal projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: HermitianMatrix,
    rank: usize,
}

impl Projector {
    /// Validates `matrix` as a projector within `tol`.
    pub fn new(matrix: HermitianMatrix, tol: f64) -> Result<Self> {
        let rank = projector_rank(&matrix, tol)?;
        if rank == 0 {
            return Err(Error::InvalidRank {
                n: matrix.dim(),
                k: 0,
            });
        }
        Ok(Self { matrix, rank })
    }

    /// `F F†` for a matrix `F` with orthonormal columns.
    pub fn from_frame(frame: &DMatrix<C64>) -> Self {
        Self {
            matrix: HermitianMatrix::hermitian_part(&(frame * frame.adjoint())),
            rank: frame.ncols(),
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// The ordered orthonormal Hermitian basis of dimension `n`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    n: usize,
    elements: Vec<HermitianMatrix>,
}

impl HermitianBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Number of off-diagonal pairs `i < j`.
fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Iterates `(i, j)` with `i < j` in lexicographic order.
fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Builds the canonical ordered basis.
pub fn hermitian_basis(n: usize) -> Result<HermitianBasis> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let zero = C64::new(0.0, 0.0);
    let mut elements = Vec::with_capacity(n * n);
    elements.push(&HermitianMatrix::identity(n) * (1.0 / (n as f64).sqrt()));
    for l in 1..n {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; n];
        for d in diag.iter_mut().take(l) {
            *d = 1.0 / norm;
        }
        diag[l] = -(l as f64) / norm;
        elements.push(HermitianMatrix::from_real_diagonal(&diag));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (i, j) in pairs(n) {
        let mut m = DMatrix::from_element(n, n, zero);
        m[(i, j)] = C64::new(s, 0.0);
        m[(j, i)] = C64::new(s, 0.0);
        elements.push(HermitianMatrix { entries: m });
    }
    for (i, j) in pairs(n) {
        let mut m = DMatrix::from_element(n, n, zero);
        m[(i, j)] = C64::new(0.0, s);
        m[(j, i)] = C64::new(0.0, -s);
        elements.push(HermitianMatrix { entries: m });
    }
    Ok(HermitianBasis { n, elements })
}

/// Coordinates `⟨B_a, X⟩` of a Hermitian matrix in the canonical basis.
pub fn coordinates(x: &HermitianMatrix) -> DVector<f64> {
    coordinates_of_matrix(x.matrix())
}

/// Coordinates of the Hermitian part of an arbitrary square matrix,
/// i.e. `Re Tr(B_a M)`.
pub fn coordinates_of_matrix(m: &DMatrix<C64>) -> DVector<f64> {
    let n = m.nrows();
    let p = pair_count(n);
    let mut c = DVector::zeros(n * n);
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    c[0] = diag.iter().sum::<f64>() / (n as f64).sqrt();
    let mut prefix = 0.0;
    for l in 1..n {
        prefix += diag[l - 1];
        c[l] = (prefix - l as f64 * diag[l]) / ((l * (l + 1)) as f64).sqrt();
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (idx, (i, j)) in pairs(n).enumerate() {
        c[n + idx] = (m[(i, j)].re + m[(j, i)].re) * s;
        c[n + p + idx] = (m[(i, j)].im - m[(j, i)].im) * s;
    }
    c
}

/// Inverse of [`coordinates`]: `Σ_a c_a B_a`.
pub fn from_coordinates(n: usize, c: &[f64]) -> Result<HermitianMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if c.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: c.len(),
        });
    }
    let p = pair_count(n);
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    // d_m = c_0/√n − c_m·m/√(m(m+1)) + Σ_{l>m} c_l/√(l(l+1))
    let mut suffix = 0.0;
    for idx in (0..n).rev() {
        let own = if idx > 0 {
            -c[idx] * idx as f64 / ((idx * (idx + 1)) as f64).sqrt()
        } else {
            0.0
        };
        m[(idx, idx)] = C64::new(c[0] / (n as f64).sqrt() + own + suffix, 0.0);
        if idx > 0 {
            suffix += c[idx] / ((idx * (idx + 1)) as f64).sqrt();
        }
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (idx, (i, j)) in pairs(n).enumerate() {
        let z = C64::new(c[n + idx] * s, c[n + p + idx] * s);
        m[(i, j)] = z;
        m[(j, i)] = z.conj();
    }
    Ok(HermitianMatrix { entries: m })
}

/// Classifies `x` as a projector: every eigenvalue must lie within `tol` of 0 or 1;
/// returns the number of eigenvalues above 1/2.
pub fn projector_rank(x: &HermitianMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let mut rank = 0;
    for lambda in x.eigenvalues() {
        let distance = lambda.abs().min((lambda - 1.0).abs());
        if distance > tol {
            return Err(Error::NotAProjector {
                eigenvalue: lambda,
                distance,
            });
        }
        if lambda > 0.5 {
            rank += 1;
        }
    }
    Ok(rank)
}

/// Largest deviation of the spectrum of `y` from that of a rank-k projector
/// (top k eigenvalues compared to 1, the rest to 0).
pub fn projector_spectral_deviation(y: &HermitianMatrix, k: usize) -> f64 {
    y.eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &l)| if i < k { (l - 1.0).abs() } else { l.abs() })
        .fold(0.0, f64::max)
}

/// Hilbert-Schmidt product `Tr(XY)`.
pub fn hs_inner(x: &HermitianMatrix, y: &HermitianMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let n = x.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (x.entries[(i, j)] * y.entries[(j, i)]).re;
        }
    }
    Ok(acc)
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(x: &HermitianMatrix) -> f64 {
    x.eigenvalues().iter().map(|l| l.abs()).sum()
}

/// Deterministic generator used for every sampling routine.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `rows x cols` matrix with i.i.d. standard complex Gaussian entries (`E|z|² = 1`).
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed `n x k` frame: Gaussian columns, orthonormalised by QR
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_frame<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<C64> {
    let g = complex_gaussian(n, k, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..k {
        let d = r[(c, c)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            for row in 0..n {
                q[(row, c)] *= phase;
            }
        }
    }
    q
}

pub fn haar_unitary_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    haar_frame(n, n, rng)
}

/// Haar-random `n x n` unitary, deterministic in `seed`.
pub fn haar_unitary(n: usize, seed: u64) -> Result<DMatrix<C64>> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(haar_unitary_with(n, &mut seeded_rng(seed)))
}

pub fn random_projector_with<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Projector> {
    if k == 0 || k > n {
        return Err(Error::InvalidRank { n, k });
    }
    Ok(Projector::from_frame(&haar_frame(n, k, rng)))
}

/// Haar-distributed rank-k projector, deterministic in `(n, k, seed)`.
pub fn random_projector(n: usize, k: usize, seed: u64) -> Result<Projector> {
    random_projector_with(n, k, &mut seeded_rng(seed))
}

/// Hermitian matrix with i.i.d. standard Gaussian basis coordinates.
pub fn random_hermitian_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let c: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    from_coordinates(n, &c).expect("coordinate count matches dimension")
}

pub fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
    random_hermitian_with(n, &mut seeded_rng(seed))
}

/// `‖U†U − I‖_F`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n)).norm()
}
