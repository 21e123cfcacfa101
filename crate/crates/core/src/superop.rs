//! Linear maps on Hermitian space as real `n² x n²` matrices in the
//! canonical Hermitian basis.

use nalgebra::{DMatrix, DVector};

use crate::operator_space::{self, coordinates, from_coordinates, HermitianMatrix};
use crate::{Error, Result, C64};

/// Relative tolerance used by [`Superoperator::inverse`] when none is supplied.
pub const INVERSE_RTOL: f64 = 1e-10;

/// A real-linear map on `n x n` Hermitian matrices.
///
/// Column `a` of `matrix` holds the coordinates of the image of basis element `B_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n: usize,
    matrix: DMatrix<f64>,
}

impl Superoperator {
    pub fn new(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if matrix.nrows() != n * n || matrix.ncols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: if matrix.nrows() != n * n {
                    matrix.nrows()
                } else {
                    matrix.ncols()
                },
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("superoperator has non-finite entries".into()));
        }
        Ok(Self { n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            matrix: DMatrix::identity(n * n, n * n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            matrix: DMatrix::zeros(n * n, n * n),
        }
    }

    /// Tabulates a linear map from its action on the canonical basis.
    pub fn from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(&HermitianMatrix) -> HermitianMatrix,
    {
        let basis = operator_space::hermitian_basis(n)?;
        let d = n * n;
        let mut matrix = DMatrix::zeros(d, d);
        for (a, b) in basis.elements().iter().enumerate() {
            let image = f(b);
            if image.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: image.dim(),
                });
            }
            matrix.set_column(a, &coordinates(&image));
        }
        Ok(Self { n, matrix })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: n,
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_dim(x.dim())?;
        let y = &self.matrix * coordinates(x);
        from_coordinates(self.n, y.as_slice())
    }

    pub fn apply_coordinates(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.matrix * c
    }

    /// Complex-linear extension to arbitrary `n x n` matrices.
    pub fn apply_complex(&self, z: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if z.nrows() != self.n || z.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: z.nrows(),
            });
        }
        let adj = z.adjoint();
        let re_part = HermitianMatrix::hermitian_part(z);
        // (Z - Z†)/(2i) is Hermitian
        let im_part = HermitianMatrix::hermitian_part(&((z - &adj) * C64::new(0.0, -0.5)));
        let a = self.apply(&re_part)?;
        let b = self.apply(&im_part)?;
        Ok(a.matrix() + b.matrix() * C64::new(0.0, 1.0))
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_dim(other.n)?;
        Ok(Self {
            n: self.n,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Hilbert-Schmidt adjoint; the transpose in orthonormal coordinates.
    pub fn dual(&self) -> Superoperator {
        Self {
            n: self.n,
            matrix: self.matrix.transpose(),
        }
    }

    /// Inverse with the default relative singular-value threshold.
    pub fn try_inverse(&self) -> Result<Superoperator> {
        self.inverse(INVERSE_RTOL)
    }

    /// Matrix inverse; fails when `σ_min ≤ rtol · σ_max`.
    pub fn inverse(&self, rtol: f64) -> Result<Superoperator> {
        let sv = self.singular_values();
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        if !(smin > rtol * smax) {
            return Err(Error::NotInvertible(smin));
        }
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(Error::NotInvertible(smin))?;
        Ok(Self {
            n: self.n,
            matrix: inv,
        })
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.matrix.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// Eigenvalues sorted by descending modulus, then descending real part.
    ///
    /// Uses faer's general eigensolver: nalgebra's real Schur iteration has no
    /// exceptional shifts and never terminates on some orthogonal maps.
    pub fn spectrum(&self) -> Result<Vec<C64>> {
        let d = self.matrix.nrows();
        let m = faer::Mat::<f64>::from_fn(d, d, |i, j| self.matrix[(i, j)]);
        let eig: Vec<faer::c64> = m
            .eigenvalues()
            .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))?;
        let mut eig: Vec<C64> = eig.into_iter().map(|z| C64::new(z.re, z.im)).collect();
        eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)));
        Ok(eig)
    }

    /// Frobenius distance between coordinate matrices.
    pub fn distance(&self, other: &Superoperator) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// `Σ_ij E_ij ⊗ Φ(E_ij)`.
    pub fn choi(&self) -> ChoiMatrix {
        let n = self.n;
        let mut entries = DMatrix::from_element(n * n, n * n, C64::new(0.0, 0.0));
        for i in 0..n {
            for j in 0..n {
                let mut e = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
                e[(i, j)] = C64::new(1.0, 0.0);
                let image = self.apply_complex(&e).expect("dimension checked");
                for a in 0..n {
                    for b in 0..n {
                        entries[(i * n + a, j * n + b)] = image[(a, b)];
                    }
                }
            }
        }
        ChoiMatrix { n, entries }
    }
}

/// Choi matrix of a Hermiticity-preserving map, indexed `(i·n + a, j·n + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    n: usize,
    entries: DMatrix<C64>,
}

impl ChoiMatrix {
    /// Validates shape and Hermiticity (absolute entrywise tolerance).
    pub fn new(n: usize, entries: DMatrix<C64>, tol: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if entries.nrows() != n * n || entries.ncols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.nrows(),
            });
        }
        let d = n * n;
        let mut worst = 0.0_f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((entries[(r, c)] - entries[(c, r)].conj()).norm());
            }
        }
        if worst > tol {
            return Err(Error::NotHermitian(worst));
        }
        Ok(Self { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.n * self.n).map(|i| self.entries[(i, i)].re).sum()
    }

    /// Eigen-decomposition of the Hermitian part, descending.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        HermitianMatrix::hermitian_part(&self.entries).eigh()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        HermitianMatrix::hermitian_part(&self.entries).eigenvalues()
    }

    /// Block `(i, j)`, equal to `Φ(E_ij)`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<C64> {
        let n = self.n;
        self.entries.view((i * n, j * n), (n, n)).into_owned()
    }

    /// Recovers the superoperator: `Φ(B_a) = Σ_ij (B_a)_ij Φ(E_ij)`.
    pub fn to_superoperator(&self) -> Superoperator {
        let n = self.n;
        let basis = operator_space::hermitian_basis(n).expect("n >= 1");
        let blocks: Vec<DMatrix<C64>> = (0..n * n).map(|idx| self.block(idx / n, idx % n)).collect();
        let d = n * n;
        let mut matrix = DMatrix::zeros(d, d);
        for (a, b) in basis.elements().iter().enumerate() {
            let mut image = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
            for i in 0..n {
                for j in 0..n {
                    let w = b.matrix()[(i, j)];
                    if w != C64::new(0.0, 0.0) {
                        image += &blocks[i * n + j] * w;
                    }
                }
            }
            matrix.set_column(a, &operator_space::coordinates_of_matrix(&image));
        }
        Superoperator { n, matrix }
    }
}

pub fn choi_of(t: &Superoperator) -> ChoiMatrix {
    t.choi()
}

pub fn superop_of_choi(c: &ChoiMatrix) -> Superoperator {
    c.to_superoperator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_space::{haar_unitary, hs_inner, random_hermitian, seeded_rng};
    use rand::Rng;

    fn conjugation(u: &DMatrix<C64>) -> Superoperator {
        let n = u.nrows();
        Superoperator::from_fn(n, |x| x.conjugate_by(u)).unwrap()
    }

    fn random_superop(n: usize, seed: u64) -> Superoperator {
        let mut rng = seeded_rng(seed);
        let d = n * n;
        Superoperator::new(n, DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5)).unwrap()
    }

    #[test]
    fn identity_and_zero_apply() {
        let x = random_hermitian(3, 1);
        let id = Superoperator::identity(3);
        assert!((&id.apply(&x).unwrap() - &x).frobenius_norm() < 1e-14);
        let z = Superoperator::zeros(3).apply(&x).unwrap();
        assert_eq!(z.frobenius_norm(), 0.0);
    }

    #[test]
    fn pauli_x_conjugation_flips_diagonal() {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let px = DMatrix::from_row_slice(2, 2, &[o, l, l, o]);
        let t = conjugation(&px);
        let x = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        let y = t.apply(&x).unwrap();
        let want = HermitianMatrix::from_real_diagonal(&[-1.0, 1.0]);
        assert!((&y - &want).frobenius_norm() < 1e-14);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let t = Superoperator::identity(2);
        assert!(t.apply(&HermitianMatrix::identity(3)).is_err());
        assert!(Superoperator::new(2, DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn dual_of_identity() {
        assert_eq!(Superoperator::identity(3).dual(), Superoperator::identity(3));
    }

    #[test]
    fn dual_of_unitary_conjugation_inverts_it() {
        for n in 1..=6 {
            let u = haar_unitary(n, 40 + n as u64).unwrap();
            let t = conjugation(&u);
            let prod = t.compose(&t.dual()).unwrap();
            assert!(prod.distance(&Superoperator::identity(n)) < 1e-10);
        }
    }

    #[test]
    fn compose_and_dual_properties() {
        let t1 = random_superop(3, 5);
        let t2 = random_superop(3, 6);
        let x = random_hermitian(3, 7);
        let y = random_hermitian(3, 8);
        let lhs = t1.compose(&t2).unwrap().apply(&x).unwrap();
        let rhs = t1.apply(&t2.apply(&x).unwrap()).unwrap();
        assert!((&lhs - &rhs).frobenius_norm() < 1e-10);
        let a = hs_inner(&x, &t1.apply(&y).unwrap()).unwrap();
        let b = hs_inner(&t1.dual().apply(&x).unwrap(), &y).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn inverse_roundtrip_and_singular_error() {
        let t = random_superop(2, 11);
        let inv = t.try_inverse().unwrap();
        assert!(t.compose(&inv).unwrap().distance(&Superoperator::identity(2)) < 1e-9);
        match Superoperator::zeros(2).try_inverse() {
            Err(Error::NotInvertible(s)) => assert_eq!(s, 0.0),
            other => panic!("expected NotInvertible, got {other:?}"),
        }
    }

    #[test]
    fn choi_of_identity_is_maximally_entangled() {
        for n in 1..=4 {
            let c = Superoperator::identity(n).choi();
            // direct Σ E_ij ⊗ E_ij
            for r in 0..n * n {
                for s in 0..n * n {
                    let (i, a) = (r / n, r % n);
                    let (j, b) = (s / n, s % n);
                    let want = if i == a && j == b { 1.0 } else { 0.0 };
                    assert!((c.matrix()[(r, s)] - C64::new(want, 0.0)).norm() < 1e-14);
                }
            }
            let eig = c.eigenvalues();
            assert!((eig[0] - n as f64).abs() < 1e-12);
            assert!(eig[1..].iter().all(|l| l.abs() < 1e-12));
            assert!((c.trace() - n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn choi_of_unitary_conjugation_is_rank_one() {
        let u = haar_unitary(3, 2).unwrap();
        let eig = conjugation(&u).choi().eigenvalues();
        assert!((eig[0] - 3.0).abs() < 1e-12);
        assert!(eig[1..].iter().all(|l| l.abs() < 1e-12));
    }

    #[test]
    fn choi_roundtrip() {
        for n in 1..=6 {
            let t = random_superop(n, 100 + n as u64);
            let back = superop_of_choi(&choi_of(&t));
            assert!(back.distance(&t) < 1e-12);
            let tr_choi = choi_of(&t).trace();
            let tr_img = t.apply(&HermitianMatrix::identity(n)).unwrap().trace();
            assert!((tr_choi - tr_img).abs() < 1e-10);
        }
    }

    #[test]
    fn choi_rejects_non_hermitian() {
        let mut m = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(ChoiMatrix::new(2, m, 1e-10), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn spectrum_terminates_on_clustered_orthogonal_map() {
        // nalgebra's real Schur never converges on this one
        let t = crate::canonical_maps::wigner_map(&haar_unitary(3, 3002).unwrap(), false).unwrap();
        let eig = t.spectrum().unwrap();
        assert_eq!(eig.len(), 9);
        assert!(eig.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(eig.iter().filter(|z| (*z - C64::new(1.0, 0.0)).norm() < 1e-9).count() >= 3);
    }

    #[test]
    fn spectrum_of_identity_and_unitary() {
        let eig = Superoperator::identity(3).spectrum().unwrap();
        assert_eq!(eig.len(), 9);
        assert!(eig.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
        let u = haar_unitary(4, 9).unwrap();
        let eig = conjugation(&u).spectrum().unwrap();
        assert!(eig.iter().all(|z| (z.norm() - 1.0).abs() < 1e-10));
        for w in eig.windows(2) {
            assert!(w[0].norm() >= w[1].norm() - 1e-12);
        }
    }
}
