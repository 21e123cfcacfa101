//! Recovery of the Wigner form `X -> U X̃ U†` (with `X̃ = X` or `Xᵗ`),
//! optionally composed with the reduction map on the input side when `n = 2k`.
//!
//! A map is conjugation by a unitary exactly when its Choi matrix is the
//! rank-one PSD matrix `|vec U⟩⟨vec U|` of trace `n`. Each candidate branch
//! undoes the transposition and/or reduction (both involutions) and runs that
//! test; `U` is read off the top eigenvector.

use nalgebra::DMatrix;

use crate::canonical_maps::{reduction_map, standard_block_family, transposition_map, wigner_map};
use crate::operator_space::{hs_inner, projector_spectral_deviation, HermitianMatrix};
use crate::superop::Superoperator;
use crate::{Error, Result, C64};

pub const DEFAULT_ACCEPT_TOL: f64 = 1e-7;
pub const DEFAULT_ALIGN_TOL: f64 = 1e-8;

/// Entries with modulus at or below this are skipped when fixing the phase.
const PHASE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WignerForm {
    pub u: DMatrix<C64>,
    pub transpose: bool,
    /// Composition with the reduction map on the input side.
    pub reduced: bool,
}

impl WignerForm {
    /// Builds a form with `u` brought to the phase convention.
    pub fn new(u: DMatrix<C64>, transpose: bool, reduced: bool) -> Self {
        Self {
            u: fix_phase(&u),
            transpose,
            reduced,
        }
    }
}

/// Multiplies `u` by the global phase that makes its first entry of modulus
/// above `1e-6` (column-major scan) real and positive.
pub fn fix_phase(u: &DMatrix<C64>) -> DMatrix<C64> {
    match u.iter().find(|z| z.norm() > PHASE_THRESHOLD) {
        Some(z) => u * (z.conj() / z.norm()),
        None => u.clone(),
    }
}

/// Per-branch Choi diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchDiagnostics {
    pub transpose: bool,
    pub reduced: bool,
    pub top_eigenvalue: f64,
    /// Largest modulus among the remaining Choi eigenvalues.
    pub second_magnitude: f64,
    pub min_eigenvalue: f64,
    /// Set when the spectral test passed and a unitary was extracted.
    pub reconstruction_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecompositionResult {
    WignerForm {
        form: WignerForm,
        reconstruction_error: f64,
        diagnostics: Vec<BranchDiagnostics>,
    },
    NotWignerForm {
        diagnostics: Vec<BranchDiagnostics>,
    },
}

impl DecompositionResult {
    pub fn form(&self) -> Option<&WignerForm> {
        match self {
            DecompositionResult::WignerForm { form, .. } => Some(form),
            DecompositionResult::NotWignerForm { .. } => None,
        }
    }

    pub fn diagnostics(&self) -> &[BranchDiagnostics] {
        match self {
            DecompositionResult::WignerForm { diagnostics, .. } => diagnostics,
            DecompositionResult::NotWignerForm { diagnostics } => diagnostics,
        }
    }

    /// Smallest Choi second-eigenvalue magnitude over all branches tried.
    pub fn best_residual(&self) -> f64 {
        self.diagnostics()
            .iter()
            .map(|d| d.second_magnitude)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `wigner_map(U, transpose)`, composed with the reduction map on the input side when `reduced`.
pub fn reconstruct(form: &WignerForm, k: usize) -> Result<Superoperator> {
    let w = wigner_map(&form.u, form.transpose)?;
    if form.reduced {
        w.compose(&reduction_map(form.u.nrows(), k)?)
    } else {
        Ok(w)
    }
}

/// Nearest unitary in Frobenius norm (polar factor).
fn nearest_unitary(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^t");
    u * v_t
}

pub fn decompose(t: &Superoperator, k: usize, tol: f64) -> Result<DecompositionResult> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let n = t.dim();
    let nf = n as f64;
    let mut branches = vec![(false, false), (false, true)];
    if n == 2 * k {
        branches.push((true, false));
        branches.push((true, true));
    }
    let mut diagnostics = Vec::with_capacity(branches.len());
    for (reduced, transpose) in branches {
        let mut s = t.clone();
        if reduced {
            s = s.compose(&reduction_map(n, k)?)?;
        }
        if transpose {
            s = s.compose(&transposition_map(n)?)?;
        }
        let (values, vectors) = s.choi().eigh();
        let top = values[0];
        let second = values[1..].iter().map(|l| l.abs()).fold(0.0, f64::max);
        let min = values.last().copied().unwrap_or(top);
        let mut diag = BranchDiagnostics {
            transpose,
            reduced,
            top_eigenvalue: top,
            second_magnitude: second,
            min_eigenvalue: min,
            reconstruction_error: None,
        };
        let spectral_ok = min >= -tol * nf && (top - nf).abs() <= tol * nf && second <= tol * nf;
        if spectral_ok {
            let v = vectors.column(0);
            let scale = nf.sqrt();
            let raw = DMatrix::from_fn(n, n, |a, i| v[i * n + a] * scale);
            let form = WignerForm::new(nearest_unitary(&raw), transpose, reduced);
            let err = reconstruct(&form, k)?.distance(t);
            diag.reconstruction_error = Some(err);
            diagnostics.push(diag);
            if err <= tol {
                return Ok(DecompositionResult::WignerForm {
                    form,
                    reconstruction_error: err,
                    diagnostics,
                });
            }
        } else {
            diagnostics.push(diag);
        }
    }
    Ok(DecompositionResult::NotWignerForm { diagnostics })
}

/// Finds `U₀` with `T(P_i) = U₀ P_i U₀†` for the standard block family `P_i`.
///
/// The images must be pairwise orthogonal rank-k projectors summing to `I`
/// within `tol`. `U₀` is one representative of the block-diagonal coset; its
/// columns are orthonormal bases of the ranges of the images.
pub fn align_orthogonal_family(t: &Superoperator, k: usize, tol: f64) -> Result<DMatrix<C64>> {
    let n = t.dim();
    let family = standard_block_family(n, k)?;
    let images = family
        .iter()
        .map(|p| t.apply(p.matrix()))
        .collect::<Result<Vec<_>>>()?;
    let mut violation = 0.0_f64;
    for (i, q) in images.iter().enumerate() {
        violation = violation.max(projector_spectral_deviation(q, k));
        for other in &images[..i] {
            violation = violation.max(hs_inner(q, other)?.abs());
        }
    }
    let total = crate::canonical_maps::sum_of(&images).expect("at least one block");
    violation = violation.max((&total - &HermitianMatrix::identity(n)).frobenius_norm());
    if !(violation <= tol) {
        return Err(Error::NotABlockPreserver(violation));
    }
    let mut u0 = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (i, q) in images.iter().enumerate() {
        let (_, vectors) = q.eigh();
        for c in 0..k {
            u0.set_column(i * k + c, &vectors.column(c));
        }
    }
    Ok(u0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical_maps::{breuer_hall_map, involution_map, random_antisymmetric_unitary};
    use crate::operator_space::{haar_unitary, unitarity_deviation};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn phase_convention() {
        let u = haar_unitary(3, 1).unwrap();
        let f = fix_phase(&u);
        let first = f.iter().find(|z| z.norm() > 1e-6).unwrap();
        assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        let rotated = &u * C64::from_polar(1.0, 0.7);
        assert!((fix_phase(&rotated) - &f).norm() < 1e-14);
    }

    #[test]
    fn roundtrip_transposed_haar() {
        for n in 1..=6 {
            let u0 = haar_unitary(n, 50 + n as u64).unwrap();
            let t = wigner_map(&u0, true).unwrap();
            let res = decompose(&t, 1, DEFAULT_ACCEPT_TOL).unwrap();
            let DecompositionResult::WignerForm { form, reconstruction_error, .. } = res else {
                panic!("n={n}: expected Wigner form");
            };
            // n = 1: every map equals its transpose; the non-transposed branch wins
            assert_eq!(form.transpose, n > 1);
            assert!(!form.reduced);
            assert!(reconstruction_error < 1e-8);
            assert!((&form.u - fix_phase(&u0)).norm() < 1e-8);
        }
    }

    #[test]
    fn reduction_n2_prefers_non_reduced_transpose() {
        let t = reduction_map(2, 1).unwrap();
        let res = decompose(&t, 1, DEFAULT_ACCEPT_TOL).unwrap();
        let form = res.form().expect("Wigner form");
        assert!(form.transpose && !form.reduced);
        // -i·σ_y after the phase convention
        let want = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(-1., 0.), c(1., 0.), c(0., 0.)]);
        assert!((&form.u - want).norm() < 1e-12);
    }

    #[test]
    fn involution_is_reduced_identity() {
        let res = decompose(&involution_map(2).unwrap(), 2, DEFAULT_ACCEPT_TOL).unwrap();
        let form = res.form().expect("Wigner form");
        assert!(form.reduced && !form.transpose);
        assert!((&form.u - DMatrix::<C64>::identity(4, 4)).norm() < 1e-12);
        let back = reconstruct(form, 2).unwrap();
        assert!(back.distance(&involution_map(2).unwrap()) < 1e-12);
    }

    #[test]
    fn breuer_hall_is_not_wigner() {
        let t = breuer_hall_map(2, &random_antisymmetric_unitary(2, 5)).unwrap();
        let res = decompose(&t, 2, DEFAULT_ACCEPT_TOL).unwrap();
        assert!(res.form().is_none());
        assert_eq!(res.diagnostics().len(), 4);
        assert!(res.best_residual() > 1e-3);
    }

    #[test]
    fn singular_map_is_not_wigner() {
        let res = decompose(&Superoperator::zeros(3), 1, DEFAULT_ACCEPT_TOL).unwrap();
        assert!(res.form().is_none());
    }

    #[test]
    fn reconstruct_examples() {
        let id = WignerForm::new(DMatrix::identity(3, 3), false, false);
        assert!(reconstruct(&id, 1).unwrap().distance(&Superoperator::identity(3)) < 1e-15);
        let red = WignerForm::new(DMatrix::identity(6, 6), false, true);
        assert!(reconstruct(&red, 3).unwrap().distance(&involution_map(3).unwrap()) < 1e-12);
    }

    #[test]
    fn align_identity_and_conjugation() {
        let u0 = align_orthogonal_family(&Superoperator::identity(4), 2, DEFAULT_ALIGN_TOL).unwrap();
        assert!(unitarity_deviation(&u0) < 1e-12);
        for p in standard_block_family(4, 2).unwrap() {
            let back = p.matrix().conjugate_by(&u0);
            assert!((&back - p.matrix()).frobenius_norm() < 1e-12);
        }
        let v = haar_unitary(6, 8).unwrap();
        let t = wigner_map(&v, false).unwrap();
        let u0 = align_orthogonal_family(&t, 3, DEFAULT_ALIGN_TOL).unwrap();
        for p in standard_block_family(6, 3).unwrap() {
            let a = p.matrix().conjugate_by(&u0);
            let b = p.matrix().conjugate_by(&v);
            assert!((&a - &b).frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn align_rejects_breuer_hall() {
        let t = breuer_hall_map(2, &random_antisymmetric_unitary(2, 6)).unwrap();
        assert!(matches!(
            align_orthogonal_family(&t, 1, DEFAULT_ALIGN_TOL),
            Err(Error::NotABlockPreserver(_))
        ));
    }
}
