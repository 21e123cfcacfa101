//! Gradient-descent search for maps sending rank-k projectors to rank-k
//! projectors at `n = 2k`.
//!
//! The unknown is the full real `n² x n²` coordinate matrix. The loss is the
//! mean squared distance of sampled projector images to the rank-k projector
//! manifold plus a soft penalty keeping the smallest singular value above a
//! floor. Every low-residual end point is classified with
//! [`wigner::decompose`]; anything that fails to decompose is a candidate
//! counterexample to the claim that only Wigner forms and their compositions
//! with the reduction map occur.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::canonical_maps::reduction_map;
use crate::operator_space::{coordinates, from_coordinates, random_projector_with, seeded_rng, HermitianMatrix, Projector};
use crate::preserver::{self, CheckReport};
use crate::superop::Superoperator;
use crate::wigner::{self, DecompositionResult};
use crate::{Error, Result};

/// Loss value treated as converged.
pub const CONVERGED_LOSS: f64 = 1e-14;
/// Smallest top-k eigenvalue gap tolerated in sample images at the end point.
pub const DEGENERATE_GAP: f64 = 1e-6;
/// Stencil of the finite-difference gradient.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Projector rank; the dimension is `n = 2k`.
    pub k: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub sample_projectors: usize,
    pub step_size: f64,
    pub invertibility_floor: f64,
    pub seed: u64,
    pub residual_accept: f64,
    /// Samples per sampled check in each candidate's check summary.
    pub check_trials: usize,
}

impl SearchConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            restarts: 20,
            max_iterations: 2000,
            sample_projectors: default_sample_count(k),
            step_size: 0.5,
            invertibility_floor: 0.1,
            seed: 0,
            residual_accept: 1e-10,
            check_trials: 64,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.k
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidRank { n: 0, k: 0 });
        }
        let counts = [
            ("restarts", self.restarts),
            ("max_iterations", self.max_iterations),
            ("sample_projectors", self.sample_projectors),
            ("check_trials", self.check_trials),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        if !(self.step_size > 0.0) {
            return Err(Error::param("step_size", "must be positive"));
        }
        if !(self.residual_accept > 0.0) {
            return Err(Error::param("residual_accept", "must be positive"));
        }
        if !(self.invertibility_floor >= 0.0) {
            return Err(Error::param("invertibility_floor", "must be non-negative"));
        }
        Ok(())
    }
}

/// `12·k²` samples: each image constrains `2k²` of the `n² = 4k²` coordinates,
/// so this gives `24k⁴` equations against `16k⁴` unknowns.
pub fn default_sample_count(k: usize) -> usize {
    12 * k * k
}

/// Verdict on a low-residual candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateVerdict {
    KnownForm { transpose: bool, reduced: bool },
    ConjectureCandidate,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub restart: usize,
    pub superoperator: Superoperator,
    /// Final loss.
    pub residual: f64,
    /// Seed and stream of the sample set the residual refers to.
    pub sample_seed: u64,
    pub sample_stream: u64,
    pub sample_count: usize,
    pub iterations: usize,
    pub classification: DecompositionResult,
    pub check_summary: Vec<CheckReport>,
}

impl Candidate {
    /// Regenerates the sample set and evaluates the loss again.
    pub fn recompute_residual(&self, k: usize, floor: f64) -> Result<f64> {
        let samples = sample_set(2 * k, k, self.sample_count, self.sample_seed, self.sample_stream)?;
        loss(&self.superoperator, k, &samples, floor)
    }
}

/// Frobenius distance from `y` to the nearest rank-k projector:
/// `sqrt(Σ_{i≤k}(λ_i − 1)² + Σ_{i>k} λ_i²)` with eigenvalues in descending order.
pub fn projector_manifold_distance(y: &HermitianMatrix, k: usize) -> f64 {
    y.eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &l)| if i < k { (l - 1.0).powi(2) } else { l * l })
        .sum::<f64>()
        .sqrt()
}

/// Deterministic set of `count` Haar rank-k projectors.
pub fn sample_set(n: usize, k: usize, count: usize, seed: u64, stream: u64) -> Result<Vec<Projector>> {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    (0..count).map(|_| random_projector_with(n, k, &mut rng)).collect()
}

fn check_loss_args(t: &Superoperator, k: usize, samples: &[Projector]) -> Result<()> {
    if t.dim() != 2 * k {
        return Err(Error::InvalidRank { n: t.dim(), k });
    }
    if samples.is_empty() {
        return Err(Error::param("samples", "must not be empty"));
    }
    if let Some(p) = samples.iter().find(|p| p.dim() != t.dim()) {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: p.dim(),
        });
    }
    Ok(())
}

/// Mean squared manifold distance of the sample images plus
/// `max(0, floor − σ_min)²`.
pub fn loss(t: &Superoperator, k: usize, samples: &[Projector], floor: f64) -> Result<f64> {
    check_loss_args(t, k, samples)?;
    let mut acc = 0.0;
    for p in samples {
        acc += projector_manifold_distance(&t.apply(p.matrix())?, k).powi(2);
    }
    let smin = t.smallest_singular_value();
    Ok(acc / samples.len() as f64 + (floor - smin).max(0.0).powi(2))
}

/// Loss and its gradient with respect to the coordinate matrix.
///
/// For an image `Y` with a gap between its k-th and (k+1)-th eigenvalue,
/// `d²(Y) = ‖Y − Π(Y)‖²` where `Π(Y)` projects onto the top-k eigenspace,
/// and its gradient is `2(Y − Π(Y))`.
pub fn loss_and_gradient(t: &Superoperator, k: usize, samples: &[Projector], floor: f64) -> Result<(f64, DMatrix<f64>)> {
    check_loss_args(t, k, samples)?;
    let n = t.dim();
    let d = n * n;
    let m = samples.len() as f64;
    let mut grad = DMatrix::zeros(d, d);
    let mut acc = 0.0;
    for p in samples {
        let pc = coordinates(p.matrix());
        let yc = t.apply_coordinates(&pc);
        let y = from_coordinates(n, yc.as_slice())?;
        let (values, vectors) = y.eigh();
        acc += values
            .iter()
            .enumerate()
            .map(|(i, &l)| if i < k { (l - 1.0).powi(2) } else { l * l })
            .sum::<f64>();
        let top = vectors.columns(0, k);
        let nearest = HermitianMatrix::hermitian_part(&(top * top.adjoint()));
        let g: DVector<f64> = (coordinates(&y) - coordinates(&nearest)) * (2.0 / m);
        grad.ger(1.0, &g, &pc, 1.0);
    }
    let mut total = acc / m;
    if floor > 0.0 {
        let svd = t.matrix().clone().svd(true, true);
        let (idx, smin) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let short = floor - smin;
        if short > 0.0 {
            total += short * short;
            let u = svd.u.as_ref().expect("requested U").column(idx).into_owned();
            let v = svd.v_t.as_ref().expect("requested V^t").row(idx).transpose();
            grad.ger(-2.0 * short, &u, &v, 1.0);
        }
    }
    Ok((total, grad))
}

/// Central finite-difference gradient of [`loss`].
pub fn finite_difference_gradient(
    t: &Superoperator,
    k: usize,
    samples: &[Projector],
    floor: f64,
    h: f64,
) -> Result<DMatrix<f64>> {
    let n = t.dim();
    let d = n * n;
    let mut grad = DMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let mut plus = t.matrix().clone();
            plus[(r, c)] += h;
            let mut minus = t.matrix().clone();
            minus[(r, c)] -= h;
            let lp = loss(&Superoperator::new(n, plus)?, k, samples, floor)?;
            let lm = loss(&Superoperator::new(n, minus)?, k, samples, floor)?;
            grad[(r, c)] = (lp - lm) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// Smallest gap `λ_k − λ_{k+1}` over the sample images.
fn min_top_k_gap(t: &Superoperator, k: usize, samples: &[Projector]) -> Result<f64> {
    let mut gap = f64::INFINITY;
    for p in samples {
        let values = t.apply(p.matrix())?.eigenvalues();
        gap = gap.min(values[k - 1] - values[k]);
    }
    Ok(gap)
}

fn initial_point(config: &SearchConfig, restart: usize, rng: &mut ChaCha20Rng) -> Result<Superoperator> {
    let n = config.dim();
    match restart {
        0 => Ok(Superoperator::identity(n)),
        1 => reduction_map(n, config.k),
        _ => {
            let d = n * n;
            let noise = DMatrix::from_fn(d, d, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
            Superoperator::new(n, DMatrix::identity(d, d) + noise)
        }
    }
}

/// Fixed step with halving whenever a step fails to decrease the loss.
fn descend(
    start: Superoperator,
    k: usize,
    samples: &[Projector],
    config: &SearchConfig,
) -> Result<(Superoperator, f64, usize)> {
    let n = start.dim();
    let mut current = start;
    let (mut value, mut grad) = loss_and_gradient(&current, k, samples, config.invertibility_floor)?;
    let mut step = config.step_size;
    let mut iterations = 0;
    while iterations < config.max_iterations && value >= CONVERGED_LOSS {
        iterations += 1;
        let trial = Superoperator::new(n, current.matrix() - &grad * step)?;
        let (trial_value, trial_grad) = loss_and_gradient(&trial, k, samples, config.invertibility_floor)?;
        if trial_value < value {
            current = trial;
            value = trial_value;
            grad = trial_grad;
        } else {
            step *= 0.5;
            if step < f64::EPSILON * config.step_size {
                break;
            }
        }
    }
    Ok((current, value, iterations))
}

/// Decomposition tolerance for a candidate: image errors scale like the
/// square root of the residual, which is capped at `residual_accept`.
pub fn classification_tolerance(residual: f64, residual_accept: f64) -> f64 {
    let r = residual.max(0.0).min(residual_accept);
    wigner::DEFAULT_ACCEPT_TOL.max(100.0 * r.sqrt())
}

fn run_restart(config: &SearchConfig, restart: usize) -> Result<Candidate> {
    let k = config.k;
    let n = config.dim();
    let seed = config.seed.wrapping_add(restart as u64);
    let mut rng = seeded_rng(seed);
    let start = initial_point(config, restart, &mut rng)?;
    let mut stream = 1;
    let mut samples = sample_set(n, k, config.sample_projectors, seed, stream)?;
    let (mut point, mut value, mut iterations) = descend(start, k, &samples, config)?;
    if min_top_k_gap(&point, k, &samples)? < DEGENERATE_GAP {
        stream += 1;
        samples = sample_set(n, k, config.sample_projectors, seed, stream)?;
        let (p, v, it) = descend(point, k, &samples, config)?;
        point = p;
        value = v;
        iterations += it;
    }
    let classification = wigner::decompose(&point, k, classification_tolerance(value, config.residual_accept))?;
    let check_seed = preserver::derive_seed(seed, 77);
    let tol = preserver::DEFAULT_TOL;
    let mut check_summary = vec![
        preserver::is_trace_preserving(&point, tol)?,
        preserver::is_unital(&point, tol)?,
        preserver::is_hs_isometry(&point, 1e-6)?,
        preserver::unit_circle_spectrum(&point, 1e-6)?,
        preserver::is_positive_sampled(&point, config.check_trials, check_seed, tol)?,
    ];
    check_summary.push(preserver::preserves_rank_k(&point, k, config.check_trials, check_seed ^ 1, 1e-6)?);
    Ok(Candidate {
        restart,
        superoperator: point,
        residual: value,
        sample_seed: seed,
        sample_stream: stream,
        sample_count: config.sample_projectors,
        iterations,
        classification,
        check_summary,
    })
}

/// Runs all restarts (in parallel) and returns candidates sorted by
/// residual, then restart index.
pub fn optimize(config: &SearchConfig) -> Result<Vec<Candidate>> {
    config.validate()?;
    let mut out = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(config, r))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        a.residual
            .partial_cmp(&b.residual)
            .unwrap_or(Ordering::Equal)
            .then(a.restart.cmp(&b.restart))
    });
    Ok(out)
}

/// Classifies a converged candidate. Candidates above `residual_accept` are rejected.
pub fn classify_candidate(c: &Candidate, residual_accept: f64) -> Result<CandidateVerdict> {
    if !(c.residual <= residual_accept) {
        return Err(Error::RejectedCandidate {
            residual: c.residual,
            accept: residual_accept,
        });
    }
    Ok(match c.classification.form() {
        Some(form) => CandidateVerdict::KnownForm {
            transpose: form.transpose,
            reduced: form.reduced,
        },
        None => CandidateVerdict::ConjectureCandidate,
    })
}

/// Tally of low-residual candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchSummary {
    pub wigner_form: usize,
    pub wigner_form_reduced: usize,
    pub unclassified: usize,
    pub rejected: usize,
}

pub fn summarize(candidates: &[Candidate], residual_accept: f64) -> SearchSummary {
    let mut s = SearchSummary::default();
    for c in candidates {
        match classify_candidate(c, residual_accept) {
            Ok(CandidateVerdict::KnownForm { reduced: false, .. }) => s.wigner_form += 1,
            Ok(CandidateVerdict::KnownForm { reduced: true, .. }) => s.wigner_form_reduced += 1,
            Ok(CandidateVerdict::ConjectureCandidate) => s.unclassified += 1,
            Err(_) => s.rejected += 1,
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical_maps::{involution_map, wigner_map};
    use crate::operator_space::haar_unitary;

    #[test]
    fn manifold_distance_examples() {
        let p = crate::operator_space::random_projector(4, 2, 3).unwrap();
        assert!(projector_manifold_distance(p.matrix(), 2) < 1e-12);
        assert!((projector_manifold_distance(&HermitianMatrix::zeros(4), 2) - 2f64.sqrt()).abs() < 1e-15);
        let y = HermitianMatrix::from_real_diagonal(&[0.9, 0.1]);
        assert!((projector_manifold_distance(&y, 1) - 0.02f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        let samples = sample_set(4, 2, 12, 5, 1).unwrap();
        let u = haar_unitary(4, 2).unwrap();
        let w = wigner_map(&u, true).unwrap();
        assert!(loss(&w, 2, &samples, 0.0).unwrap() < 1e-18);
        assert!(loss(&w, 2, &samples, 0.1).unwrap() < 1e-18);
        assert!(loss(&involution_map(2).unwrap(), 2, &samples, 0.1).unwrap() < 1e-18);
        let z = loss(&Superoperator::zeros(4), 2, &samples, 0.1).unwrap();
        assert!((z - (2.0 + 0.01)).abs() < 1e-12);
        assert!(loss(&w, 1, &samples, 0.1).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let samples = sample_set(2, 1, 8, 1, 1).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..5 {
            let m = DMatrix::from_fn(4, 4, |r, c| if r == c { 1.0 } else { 0.0 } + 0.3 * rng.sample::<f64, _>(StandardNormal));
            let t = Superoperator::new(2, m).unwrap();
            let (_, g) = loss_and_gradient(&t, 1, &samples, 2.0).unwrap();
            let fd = finite_difference_gradient(&t, 1, &samples, 2.0, FD_STEP).unwrap();
            assert!((&g - &fd).norm() <= 1e-6 * fd.norm().max(1.0), "{} vs {}", g.norm(), fd.norm());
        }
    }

    #[test]
    fn known_starts_converge_immediately() {
        let mut cfg = SearchConfig::new(2);
        cfg.restarts = 2;
        let cands = optimize(&cfg).unwrap();
        assert_eq!(cands.len(), 2);
        for c in &cands {
            assert!(c.residual < 1e-20);
            assert_eq!(c.iterations, 0);
        }
        let by_restart = |r: usize| cands.iter().find(|c| c.restart == r).unwrap();
        assert_eq!(
            classify_candidate(by_restart(0), 1e-10).unwrap(),
            CandidateVerdict::KnownForm { transpose: false, reduced: false }
        );
        assert_eq!(
            classify_candidate(by_restart(1), 1e-10).unwrap(),
            CandidateVerdict::KnownForm { transpose: false, reduced: true }
        );
    }

    #[test]
    fn perturbed_candidate_is_rejected() {
        let u = haar_unitary(4, 9).unwrap();
        let w = wigner_map(&u, false).unwrap();
        let mut rng = seeded_rng(4);
        let dir = DMatrix::from_fn(16, 16, |_, _| rng.sample::<f64, _>(StandardNormal));
        let pert = Superoperator::new(4, w.matrix() + &dir * (1e-3 / dir.norm())).unwrap();
        let samples = sample_set(4, 2, default_sample_count(2), 11, 1).unwrap();
        let residual = loss(&pert, 2, &samples, 0.1).unwrap();
        assert!(residual > 1e-8, "residual {residual}");
        let cand = Candidate {
            restart: 0,
            superoperator: pert.clone(),
            residual,
            sample_seed: 11,
            sample_stream: 1,
            sample_count: default_sample_count(2),
            iterations: 0,
            classification: wigner::decompose(&pert, 2, 1e-7).unwrap(),
            check_summary: vec![],
        };
        assert!((cand.recompute_residual(2, 0.1).unwrap() - residual).abs() < 1e-12);
        assert!(matches!(classify_candidate(&cand, 1e-10), Err(Error::RejectedCandidate { .. })));
    }

    #[test]
    fn config_validation() {
        let mut c = SearchConfig::new(1);
        assert!(c.validate().is_ok());
        c.restarts = 0;
        assert!(c.validate().is_err());
        let mut c = SearchConfig::new(1);
        c.step_size = 0.0;
        assert!(c.validate().is_err());
        assert!(SearchConfig::new(0).validate().is_err());
    }
}
