//! Structural checks on superoperators.
//!
//! Sampled checks are sound as refutations (a failing report carries a
//! witness that re-fails on replay) but only evidence as confirmations: a
//! passing report says "no violation in `trials` Haar samples".

use nalgebra::DMatrix;
use rand::Rng;

use crate::operator_space::{
    coordinates, haar_frame, hs_inner, projector_spectral_deviation, random_hermitian_with, random_projector_with,
    seeded_rng, trace_norm, HermitianMatrix, Projector,
};
use crate::superop::Superoperator;
use crate::{Error, Result, C64};

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Offending sample of a failed check.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Index of the sample within the check's seeded stream.
    pub trial: usize,
    pub inputs: Vec<HermitianMatrix>,
    pub outputs: Vec<HermitianMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    /// Number of samples drawn; 0 for deterministic checks.
    pub trials: usize,
    pub witness: Option<Witness>,
    /// Auxiliary statistics, in a fixed order.
    pub metrics: Vec<(String, f64)>,
}

impl CheckReport {
    fn new(name: &str, max_violation: f64, tolerance: f64, trials: usize) -> Self {
        Self {
            name: name.to_string(),
            passed: max_violation <= tolerance,
            max_violation,
            tolerance,
            trials,
            witness: None,
            metrics: Vec::new(),
        }
    }

    fn with_witness(mut self, witness: Option<Witness>) -> Self {
        if !self.passed {
            self.witness = witness;
        }
        self
    }

    fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.push((key.to_string(), value));
        self
    }

    pub fn get_metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    Ok(())
}

fn require_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    Ok(())
}

/// Tracks the worst sample seen so far.
struct Worst {
    violation: f64,
    witness: Option<Witness>,
}

impl Worst {
    fn new() -> Self {
        Self {
            violation: 0.0,
            witness: None,
        }
    }

    fn offer(&mut self, violation: f64, make: impl FnOnce() -> Witness) {
        if violation > self.violation || (violation.is_nan() && !self.violation.is_nan()) {
            self.violation = violation;
            self.witness = Some(make());
        }
    }
}

/// Trace preservation: the dual map fixes `I`.
pub fn is_trace_preserving(t: &Superoperator, tol: f64) -> Result<CheckReport> {
    require_tol(tol)?;
    let id = HermitianMatrix::identity(t.dim());
    let v = (&t.dual().apply(&id)? - &id).frobenius_norm();
    Ok(CheckReport::new("trace_preserving", v, tol, 0))
}

pub fn is_unital(t: &Superoperator, tol: f64) -> Result<CheckReport> {
    require_tol(tol)?;
    let id = HermitianMatrix::identity(t.dim());
    let v = (&t.apply(&id)? - &id).frobenius_norm();
    Ok(CheckReport::new("unital", v, tol, 0))
}

/// `‖TᵀT − I‖_F ≤ tol`.
pub fn is_hs_isometry(t: &Superoperator, tol: f64) -> Result<CheckReport> {
    require_tol(tol)?;
    let d = t.matrix().nrows();
    let v = (t.matrix().transpose() * t.matrix() - DMatrix::<f64>::identity(d, d)).norm();
    Ok(CheckReport::new("hs_isometry", v, tol, 0).metric("smallest_singular_value", t.smallest_singular_value()))
}

/// Invertibility as a condition-number bound: passes iff `σ_max/σ_min ≤ 1/rtol`.
pub fn is_invertible(t: &Superoperator, rtol: f64) -> Result<CheckReport> {
    require_tol(rtol)?;
    let sv = t.singular_values();
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok(CheckReport::new("invertible", cond, 1.0 / rtol, 0).metric("smallest_singular_value", smin))
}

/// Every image of a Haar rank-k projector must be a rank-k projector within `tol`.
pub fn preserves_rank_k(t: &Superoperator, k: usize, trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    require_trials(trials)?;
    require_tol(tol)?;
    let n = t.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidRank { n, k });
    }
    let mut rng = seeded_rng(seed);
    let mut worst = Worst::new();
    for trial in 0..trials {
        let p = random_projector_with(n, k, &mut rng)?;
        let y = t.apply(p.matrix())?;
        let v = projector_spectral_deviation(&y, k);
        worst.offer(v, || Witness {
            trial,
            inputs: vec![p.matrix().clone()],
            outputs: vec![y.clone()],
        });
    }
    Ok(CheckReport::new("preserves_rank_k", worst.violation, tol, trials)
        .with_witness(worst.witness)
        .metric("k", k as f64))
}

/// Orthogonal pairs `P ⊥ Q` of rank-k projectors (a Haar 2k-frame split in
/// two) must have orthogonal images. Vacuous when `2k > n`.
pub fn preserves_orthogonality(t: &Superoperator, k: usize, trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    require_trials(trials)?;
    require_tol(tol)?;
    let n = t.dim();
    if k == 0 {
        return Err(Error::InvalidRank { n, k });
    }
    if 2 * k > n {
        return Ok(CheckReport::new("preserves_orthogonality", 0.0, tol, 0).metric("k", k as f64));
    }
    let mut rng = seeded_rng(seed);
    let mut worst = Worst::new();
    for trial in 0..trials {
        let frame = haar_frame(n, 2 * k, &mut rng);
        let p = Projector::from_frame(&frame.columns(0, k).into_owned());
        let q = Projector::from_frame(&frame.columns(k, k).into_owned());
        let tp = t.apply(p.matrix())?;
        let tq = t.apply(q.matrix())?;
        let v = hs_inner(&tp, &tq)?.abs();
        worst.offer(v, || Witness {
            trial,
            inputs: vec![p.matrix().clone(), q.matrix().clone()],
            outputs: vec![tp.clone(), tq.clone()],
        });
    }
    Ok(CheckReport::new("preserves_orthogonality", worst.violation, tol, trials)
        .with_witness(worst.witness)
        .metric("k", k as f64))
}

/// Sums of `q` mutually orthogonal rank-k projectors must map to rank-qk projectors.
pub fn preserves_rank_qk(
    t: &Superoperator,
    k: usize,
    q: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    require_trials(trials)?;
    require_tol(tol)?;
    let n = t.dim();
    if k == 0 || q == 0 || q * k > n {
        return Err(Error::InvalidRank { n, k: q * k });
    }
    let mut rng = seeded_rng(seed);
    let mut worst = Worst::new();
    for trial in 0..trials {
        let frame = haar_frame(n, q * k, &mut rng);
        let mut input = HermitianMatrix::zeros(n);
        let mut image = HermitianMatrix::zeros(n);
        for block in 0..q {
            let p = Projector::from_frame(&frame.columns(block * k, k).into_owned());
            image = &image + &t.apply(p.matrix())?;
            input = &input + p.matrix();
        }
        let v = projector_spectral_deviation(&image, q * k);
        worst.offer(v, || Witness {
            trial,
            inputs: vec![input.clone()],
            outputs: vec![image.clone()],
        });
    }
    Ok(CheckReport::new("preserves_rank_qk", worst.violation, tol, trials)
        .with_witness(worst.witness)
        .metric("k", k as f64)
        .metric("q", q as f64))
}

/// Images of Haar rank-1 projectors must have no eigenvalue below `−tol`.
pub fn is_positive_sampled(t: &Superoperator, trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    require_trials(trials)?;
    require_tol(tol)?;
    let n = t.dim();
    let mut rng = seeded_rng(seed);
    let mut worst = Worst::new();
    let mut min_eig = f64::INFINITY;
    for trial in 0..trials {
        let p = random_projector_with(n, 1, &mut rng)?;
        let y = t.apply(p.matrix())?;
        let lmin = y.min_eigenvalue();
        min_eig = min_eig.min(lmin);
        worst.offer((-lmin).max(0.0), || Witness {
            trial,
            inputs: vec![p.matrix().clone()],
            outputs: vec![y.clone()],
        });
    }
    Ok(CheckReport::new("positive", worst.violation, tol, trials)
        .with_witness(worst.witness)
        .metric("min_eigenvalue", min_eig))
}

/// Trace-norm contraction `‖Φ(X)‖₁ ≤ ‖X‖₁` on samples alternating between
/// Gaussian Hermitian matrices (even trials) and Haar rank-1 projectors (odd
/// trials). The metric `traceless_gap` is `max |‖Φ(X₀)‖₁ − ‖X₀‖₁|` over the
/// traceless parts `X₀ = X − (Tr X/n)·I` of all samples.
pub fn trace_norm_contraction_check(t: &Superoperator, trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    require_trials(trials)?;
    require_tol(tol)?;
    let tp = is_trace_preserving(t, DEFAULT_TOL)?;
    if !tp.passed {
        return Err(Error::NotTracePreserving(tp.max_violation));
    }
    let n = t.dim();
    let id = HermitianMatrix::identity(n);
    let mut rng = seeded_rng(seed);
    let mut worst = Worst::new();
    let mut traceless_gap = 0.0_f64;
    for trial in 0..trials {
        let x = if trial % 2 == 0 {
            random_hermitian_with(n, &mut rng)
        } else {
            random_projector_with(n, 1, &mut rng)?.into_hermitian()
        };
        let y = t.apply(&x)?;
        let v = (trace_norm(&y) - trace_norm(&x)).max(0.0);
        worst.offer(v, || Witness {
            trial,
            inputs: vec![x.clone()],
            outputs: vec![y.clone()],
        });
        let x0 = &x - &(&id * (x.trace() / n as f64));
        let y0 = t.apply(&x0)?;
        traceless_gap = traceless_gap.max((trace_norm(&y0) - trace_norm(&x0)).abs());
    }
    Ok(CheckReport::new("trace_norm_contraction", worst.violation, tol, trials)
        .with_witness(worst.witness)
        .metric("traceless_gap", traceless_gap))
}

/// Every eigenvalue on the unit circle and at least one equal to `+1`, within `tol`.
pub fn unit_circle_spectrum(t: &Superoperator, tol: f64) -> Result<CheckReport> {
    require_tol(tol)?;
    let spectrum = t.spectrum()?;
    let modulus_dev = spectrum.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    let one = C64::new(1.0, 0.0);
    let nearest_one = spectrum.iter().map(|z| (z - one).norm()).fold(f64::INFINITY, f64::min);
    Ok(CheckReport::new("unit_circle_spectrum", modulus_dev.max(nearest_one), tol, 0)
        .metric("max_modulus_deviation", modulus_dev)
        .metric("distance_to_one", nearest_one))
}

/// `S(X) = T(X) + (Tr X / k)(I − T(I))`.
///
/// If `T` maps rank-l projectors bijectively onto themselves and
/// `n = k + q·l`, then `S` maps rank-k projectors onto themselves.
pub fn induced_rank_k_map(t: &Superoperator, k: usize) -> Result<Superoperator> {
    let n = t.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidRank { n, k });
    }
    // In coordinates: S = T + (n/k)(e_0 − T e_0) e_0ᵀ
    let mut m = t.matrix().clone();
    let col0 = t.matrix().column(0).into_owned();
    let scale = n as f64 / k as f64;
    for r in 0..m.nrows() {
        let e0 = if r == 0 { 1.0 } else { 0.0 };
        m[(r, 0)] += scale * (e0 - col0[r]);
    }
    Superoperator::new(n, m)
}

/// Options for [`run_suite`].
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

/// Derives independent per-check seeds from one base seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = seeded_rng(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.random()
}

/// Runs every applicable check. The trace-norm contraction check is left out
/// when the map is not trace-preserving.
pub fn run_suite(t: &Superoperator, opts: SuiteOptions) -> Result<Vec<CheckReport>> {
    let SuiteOptions { k, trials, seed, tol } = opts;
    let n = t.dim();
    let mut out = vec![
        is_trace_preserving(t, tol)?,
        is_unital(t, tol)?,
        is_hs_isometry(t, tol)?,
        is_invertible(t, crate::superop::INVERSE_RTOL)?,
        unit_circle_spectrum(t, tol)?,
        preserves_rank_k(t, k, trials, derive_seed(seed, 1), tol)?,
        preserves_orthogonality(t, k, trials, derive_seed(seed, 2), tol)?,
    ];
    if 2 * k <= n {
        out.push(preserves_rank_qk(t, k, 2, trials, derive_seed(seed, 3), tol)?);
    }
    out.push(is_positive_sampled(t, trials, derive_seed(seed, 4), tol)?);
    if out[0].passed {
        out.push(trace_norm_contraction_check(t, trials, derive_seed(seed, 5), tol)?);
    }
    Ok(out)
}

/// Coordinates of `T(I) − I`, exposed for unitality diagnostics.
pub fn unitality_defect(t: &Superoperator) -> Result<nalgebra::DVector<f64>> {
    let id = HermitianMatrix::identity(t.dim());
    Ok(coordinates(&(&t.apply(&id)? - &id)))
}
