//! The `wignerlab` command line.
//!
//! Every command writes a [`Report`] to standard output. The report echoes
//! the fully resolved argument vector (`argv.*`), so running it again gives
//! the same numbers regardless of environment variables.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use super::mapfile::{load_map, save_map, Representation};
use super::report::{compare, Mismatch, Report, REPLAY_TOL};
use crate::canonical_maps::{
    breuer_hall_map, involution_map, random_antisymmetric_unitary, reduction_map, standard_block_family,
    transposition_map, wigner_map,
};
use crate::ksequence::{compute_sequence, divisor_invariant_check};
use crate::operator_space::haar_unitary;
use crate::preserver::{self, CheckReport, SuiteOptions};
use crate::search::{self, CandidateVerdict, SearchConfig};
use crate::wigner::{self, DecompositionResult};
use crate::{Error, HermitianMatrix, Result, Superoperator, VERSION};

/// Overrides the default trial count when `--trials` is absent.
pub const TRIALS_ENV: &str = "WIGNERLAB_TRIALS";

/// Eigenvalues below this magnitude do not count towards a witness rank.
const RANK_TOL: f64 = 1e-8;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wignerlab", version, about = "Rank-k projector preservers: checks, decompositions and searches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// k-sequence verdict for (n, k)
    Classify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Run the full preserver suite on a saved map
    Check {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = preserver::DEFAULT_TOL)]
        tol: f64,
    },
    /// Recover (U, transpose, reduced) from a saved map
    Decompose {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = wigner::DEFAULT_ACCEPT_TOL)]
        tol: f64,
    },
    /// Gradient search for rank-k preservers at n = 2k
    Search {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        step_size: Option<f64>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        accept: Option<f64>,
        #[arg(long)]
        check_trials: Option<usize>,
    },
    /// Build the canonical maps for (n, k) and run everything on them
    Demo {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Save a canonical map to a file
    Export {
        #[arg(long, value_enum)]
        kind: MapKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Repr::HermitianBasis)]
        representation: Repr,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MapKind {
    Identity,
    Wigner,
    WignerTranspose,
    Transposition,
    Reduction,
    Involution,
    BreuerHall,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Repr {
    HermitianBasis,
    Choi,
}

impl From<Repr> for Representation {
    fn from(r: Repr) -> Self {
        match r {
            Repr::HermitianBasis => Representation::HermitianBasis,
            Repr::Choi => Representation::Choi,
        }
    }
}

/// Result of one CLI invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub report: Option<Report>,
}

/// Maps a library error onto the exit-code contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Runs the CLI on `args` (without the program name).
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("wignerlab".to_string()).chain(args)) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text, report: None }
            } else {
                Outcome { code: EXIT_OK, stdout: text, stderr: String::new(), report: None }
            };
        }
    };
    let started = Instant::now();
    match dispatch(cli.command) {
        Ok(mut report) => {
            report.push("timing.total_ms", started.elapsed().as_secs_f64() * 1e3);
            Outcome { code: EXIT_OK, stdout: report.render(), stderr: String::new(), report: Some(report) }
        }
        Err(e) => Outcome {
            code: exit_code(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            report: None,
        },
    }
}

/// Re-runs the command echoed in `report` and compares all non-timing fields.
pub fn replay(report: &Report) -> Result<(Report, Vec<Mismatch>)> {
    let argv = report.argv();
    if argv.is_empty() {
        return Err(Error::parse("argv", "report does not echo a command"));
    }
    let out = run(argv);
    match out.report {
        Some(fresh) => {
            let diff = compare(report, &fresh, REPLAY_TOL);
            Ok((fresh, diff))
        }
        None => Err(Error::Numerical(format!("replay exited with {}: {}", out.code, out.stderr.trim()))),
    }
}

fn resolve_trials(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(TRIALS_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::parse(TRIALS_ENV, format!("expected a positive integer, got `{raw}`"))),
        },
        Err(_) => Ok(preserver::DEFAULT_TRIALS),
    }
}

fn header(report: &mut Report, argv: &[String]) {
    for (i, a) in argv.iter().enumerate() {
        report.push(format!("argv.{i}"), a.as_str());
    }
    report.push("command", format!("wignerlab {}", argv.join(" ")));
    report.push("version", VERSION);
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidRank { n, k });
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<Report> {
    let mut r = Report::new();
    match cmd {
        Command::Classify { n, k } => {
            header(&mut r, &strs(&["classify", "--n", &n.to_string(), "--k", &k.to_string()]));
            classify_into(&mut r, "classify", n, k)?;
        }
        Command::Check { map, k, trials, seed, tol } => {
            let trials = resolve_trials(trials)?;
            let path = map.to_string_lossy().into_owned();
            header(
                &mut r,
                &strs(&[
                    "check", "--map", &path, "--k", &k.to_string(), "--trials", &trials.to_string(), "--seed",
                    &seed.to_string(), "--tol", &format!("{tol:e}"),
                ]),
            );
            r.push("seed", seed);
            r.push("trials", trials);
            let t = load_map(&map)?;
            check_k(t.dim(), k)?;
            r.push("map.n", t.dim());
            r.push("map.k", k);
            let reports = preserver::run_suite(&t, SuiteOptions { k, trials, seed, tol })?;
            suite_into(&mut r, "check", &reports);
        }
        Command::Decompose { map, k, tol } => {
            let path = map.to_string_lossy().into_owned();
            header(
                &mut r,
                &strs(&["decompose", "--map", &path, "--k", &k.to_string(), "--tol", &format!("{tol:e}")]),
            );
            let t = load_map(&map)?;
            check_k(t.dim(), k)?;
            r.push("map.n", t.dim());
            r.push("map.k", k);
            let result = wigner::decompose(&t, k, tol)?;
            decomposition_into(&mut r, "decompose", &result);
        }
        Command::Search {
            k,
            restarts,
            seed,
            max_iterations,
            samples,
            step_size,
            floor,
            accept,
            check_trials,
        } => {
            let mut cfg = SearchConfig::new(k);
            cfg.seed = seed;
            if let Some(v) = restarts {
                cfg.restarts = v;
            }
            if let Some(v) = max_iterations {
                cfg.max_iterations = v;
            }
            if let Some(v) = samples {
                cfg.sample_projectors = v;
            }
            if let Some(v) = step_size {
                cfg.step_size = v;
            }
            if let Some(v) = floor {
                cfg.invertibility_floor = v;
            }
            if let Some(v) = accept {
                cfg.residual_accept = v;
            }
            if let Some(v) = check_trials {
                cfg.check_trials = v;
            }
            header(
                &mut r,
                &strs(&[
                    "search",
                    "--k",
                    &k.to_string(),
                    "--restarts",
                    &cfg.restarts.to_string(),
                    "--seed",
                    &seed.to_string(),
                    "--max-iterations",
                    &cfg.max_iterations.to_string(),
                    "--samples",
                    &cfg.sample_projectors.to_string(),
                    "--step-size",
                    &format!("{:e}", cfg.step_size),
                    "--floor",
                    &format!("{:e}", cfg.invertibility_floor),
                    "--accept",
                    &format!("{:e}", cfg.residual_accept),
                    "--check-trials",
                    &cfg.check_trials.to_string(),
                ]),
            );
            r.push("seed", seed);
            search_into(&mut r, &cfg)?;
        }
        Command::Demo { n, k, seed, trials } => {
            let trials = resolve_trials(trials)?;
            header(
                &mut r,
                &strs(&[
                    "demo", "--n", &n.to_string(), "--k", &k.to_string(), "--seed", &seed.to_string(), "--trials",
                    &trials.to_string(),
                ]),
            );
            r.push("seed", seed);
            r.push("trials", trials);
            demo_into(&mut r, n, k, seed, trials)?;
        }
        Command::Export { kind, n, k, seed, out, representation } => {
            let mut argv = strs(&["export", "--kind", kind_name(kind), "--n", &n.to_string()]);
            if let Some(k) = k {
                argv.extend(strs(&["--k", &k.to_string()]));
            }
            let repr = Representation::from(representation);
            let path = out.to_string_lossy().into_owned();
            argv.extend(strs(&["--seed", &seed.to_string(), "--out", &path, "--representation", repr.as_str()]));
            header(&mut r, &argv);
            r.push("seed", seed);
            let t = build_map(kind, n, k, seed)?;
            save_map(&t, &out, repr)?;
            r.push("export.kind", kind_name(kind));
            r.push("export.n", n);
            r.push("export.representation", repr.as_str());
            r.push("export.singular_value_min", t.smallest_singular_value());
            r.line(format!("wrote {} map (n = {n}) to {path}", kind_name(kind)));
        }
    }
    Ok(r)
}

fn strs(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn kind_name(kind: MapKind) -> &'static str {
    match kind {
        MapKind::Identity => "identity",
        MapKind::Wigner => "wigner",
        MapKind::WignerTranspose => "wigner-transpose",
        MapKind::Transposition => "transposition",
        MapKind::Reduction => "reduction",
        MapKind::Involution => "involution",
        MapKind::BreuerHall => "breuer-hall",
    }
}

fn build_map(kind: MapKind, n: usize, k: Option<usize>, seed: u64) -> Result<Superoperator> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    match kind {
        MapKind::Identity => Ok(Superoperator::identity(n)),
        MapKind::Wigner => wigner_map(&haar_unitary(n, seed)?, false),
        MapKind::WignerTranspose => wigner_map(&haar_unitary(n, seed)?, true),
        MapKind::Transposition => transposition_map(n),
        MapKind::Reduction => {
            let k = k.ok_or_else(|| Error::param("k", "required for the reduction map"))?;
            reduction_map(n, k)
        }
        MapKind::Involution => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidDimension(n));
            }
            involution_map(n / 2)
        }
        MapKind::BreuerHall => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidDimension(n));
            }
            breuer_hall_map(n / 2, &random_antisymmetric_unitary(n / 2, seed))
        }
    }
}

fn classify_into(r: &mut Report, prefix: &str, n: usize, k: usize) -> Result<()> {
    let seq = compute_sequence(n, k)?;
    r.push(format!("{prefix}.n"), n);
    r.push(format!("{prefix}.k"), k);
    r.push(format!("{prefix}.length"), seq.ks.len());
    for (i, v) in seq.ks.iter().enumerate() {
        r.push(format!("{prefix}.ks.{i}"), *v);
    }
    r.push(format!("{prefix}.k_star"), seq.k_star);
    r.push(format!("{prefix}.verdict"), seq.verdict.to_string());
    r.push(format!("{prefix}.divisor_invariant"), divisor_invariant_check(n, k)?);
    r.line(format!("n = {n}, k = {k}: {} (ks = {:?}, k* = {})", seq.verdict, seq.ks, seq.k_star));
    Ok(())
}

fn output_rank(h: &HermitianMatrix) -> usize {
    h.eigenvalues().iter().filter(|l| l.abs() > RANK_TOL).count()
}

fn suite_into(r: &mut Report, prefix: &str, reports: &[CheckReport]) {
    let mut passed = 0usize;
    for c in reports {
        let p = format!("{prefix}.{}", c.name);
        r.push(format!("{p}.passed"), c.passed);
        r.push(format!("{p}.max_violation"), c.max_violation);
        r.push(format!("{p}.tolerance"), c.tolerance);
        r.push(format!("{p}.trials"), c.trials);
        for (key, v) in &c.metrics {
            r.push(format!("{p}.metric.{key}"), *v);
        }
        if let Some(w) = &c.witness {
            r.push(format!("{p}.witness.trial"), w.trial);
            for (i, out) in w.outputs.iter().enumerate() {
                let ev = out.eigenvalues();
                r.push(format!("{p}.witness.output.{i}.rank"), output_rank(out));
                r.push(format!("{p}.witness.output.{i}.min_eigenvalue"), ev[ev.len() - 1]);
                r.push(format!("{p}.witness.output.{i}.max_eigenvalue"), ev[0]);
            }
        }
        if c.passed {
            passed += 1;
        }
        r.line(format!(
            "{:<30} {}  violation {:.3e} (tol {:.1e})",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.max_violation,
            c.tolerance
        ));
    }
    r.push(format!("{prefix}.passed_count"), passed);
    r.push(format!("{prefix}.check_count"), reports.len());
}

fn decomposition_into(r: &mut Report, prefix: &str, result: &DecompositionResult) {
    match result {
        DecompositionResult::WignerForm { form, reconstruction_error, .. } => {
            r.push(format!("{prefix}.result"), "WignerForm");
            r.push(format!("{prefix}.transpose"), form.transpose);
            r.push(format!("{prefix}.reduced"), form.reduced);
            r.push(format!("{prefix}.reconstruction_error"), *reconstruction_error);
            let n = form.u.nrows();
            for i in 0..n {
                for j in 0..n {
                    let z = form.u[(i, j)];
                    r.push(format!("{prefix}.u.{i}.{j}.re"), z.re);
                    r.push(format!("{prefix}.u.{i}.{j}.im"), z.im);
                }
            }
            r.line(format!(
                "WignerForm: transpose = {}, reduced = {}, reconstruction error {:.3e}",
                form.transpose, form.reduced, reconstruction_error
            ));
        }
        DecompositionResult::NotWignerForm { .. } => {
            r.push(format!("{prefix}.result"), "NotWignerForm");
            r.line(format!("NotWignerForm (best branch residual {:.3e})", result.best_residual()));
        }
    }
    for (i, d) in result.diagnostics().iter().enumerate() {
        let p = format!("{prefix}.branch.{i}");
        r.push(format!("{p}.transpose"), d.transpose);
        r.push(format!("{p}.reduced"), d.reduced);
        r.push(format!("{p}.top_eigenvalue"), d.top_eigenvalue);
        r.push(format!("{p}.second_magnitude"), d.second_magnitude);
        r.push(format!("{p}.min_eigenvalue"), d.min_eigenvalue);
        if let Some(e) = d.reconstruction_error {
            r.push(format!("{p}.reconstruction_error"), e);
        }
    }
}

fn verdict_name(v: &Result<CandidateVerdict>) -> &'static str {
    match v {
        Ok(CandidateVerdict::KnownForm { reduced: false, .. }) => "wigner-form",
        Ok(CandidateVerdict::KnownForm { reduced: true, .. }) => "wigner-form-reduced",
        Ok(CandidateVerdict::ConjectureCandidate) => "unclassified",
        Err(_) => "rejected",
    }
}

fn search_into(r: &mut Report, cfg: &SearchConfig) -> Result<()> {
    r.push("search.k", cfg.k);
    r.push("search.n", cfg.dim());
    r.push("search.restarts", cfg.restarts);
    r.push("search.max_iterations", cfg.max_iterations);
    r.push("search.samples", cfg.sample_projectors);
    r.push("search.step_size", cfg.step_size);
    r.push("search.floor", cfg.invertibility_floor);
    r.push("search.accept", cfg.residual_accept);
    r.push("search.check_trials", cfg.check_trials);
    let candidates = search::optimize(cfg)?;
    for (i, c) in candidates.iter().enumerate() {
        let p = format!("search.candidate.{i}");
        let verdict = search::classify_candidate(c, cfg.residual_accept);
        r.push(format!("{p}.restart"), c.restart);
        r.push(format!("{p}.residual"), c.residual);
        r.push(format!("{p}.iterations"), c.iterations);
        r.push(format!("{p}.sample_stream"), c.sample_stream);
        r.push(format!("{p}.verdict"), verdict_name(&verdict));
        if let Ok(CandidateVerdict::KnownForm { transpose, .. }) = verdict {
            r.push(format!("{p}.transpose"), transpose);
        }
        r.push(format!("{p}.best_branch_residual"), c.classification.best_residual());
        for check in &c.check_summary {
            r.push(format!("{p}.{}.passed", check.name), check.passed);
            r.push(format!("{p}.{}.max_violation", check.name), check.max_violation);
        }
    }
    let s = search::summarize(&candidates, cfg.residual_accept);
    r.push("search.summary.wigner_form", s.wigner_form);
    r.push("search.summary.wigner_form_reduced", s.wigner_form_reduced);
    r.push("search.summary.unclassified", s.unclassified);
    r.push("search.summary.rejected", s.rejected);
    r.line(format!(
        "k = {}, {} restarts: {} Wigner form, {} Wigner form composed with reduction, {} unclassified, {} rejected (residual > {:.0e})",
        cfg.k, cfg.restarts, s.wigner_form, s.wigner_form_reduced, s.unclassified, s.rejected, cfg.residual_accept
    ));
    if let Some(best) = candidates.first() {
        r.line(format!("best residual {:.3e} (restart {})", best.residual, best.restart));
    }
    Ok(())
}

fn demo_into(r: &mut Report, n: usize, k: usize, seed: u64, trials: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    check_k(n, k)?;
    r.push("demo.n", n);
    r.push("demo.k", k);
    if k < n {
        classify_into(r, "demo.classify", n, k)?;
    }
    let u = haar_unitary(n, seed)?;
    let mut maps: Vec<(&str, Superoperator)> =
        vec![("wigner", wigner_map(&u, false)?), ("wigner_transpose", wigner_map(&u, true)?)];
    if k < n {
        maps.push(("reduction", reduction_map(n, k)?));
    }
    if n.is_multiple_of(2) && n >= 4 {
        maps.push(("breuer_hall", breuer_hall_map(n / 2, &random_antisymmetric_unitary(n / 2, seed))?));
    }
    for (name, t) in &maps {
        let p = format!("demo.{name}");
        r.line(format!("-- {name}"));
        let checks = preserver::run_suite(t, SuiteOptions { k, trials, seed, tol: preserver::DEFAULT_TOL })?;
        suite_into(r, &format!("{p}.check"), &checks);
        let result = wigner::decompose(t, k, wigner::DEFAULT_ACCEPT_TOL)?;
        decomposition_into(r, &format!("{p}.decompose"), &result);
        if n.is_multiple_of(k) {
            align_into(r, &format!("{p}.align"), t, k)?;
        }
    }
    Ok(())
}

fn align_into(r: &mut Report, prefix: &str, t: &Superoperator, k: usize) -> Result<()> {
    match wigner::align_orthogonal_family(t, k, wigner::DEFAULT_ALIGN_TOL) {
        Ok(u0) => {
            let mut worst = 0.0_f64;
            for p in standard_block_family(t.dim(), k)? {
                let image = t.apply(p.matrix())?;
                let moved = p.matrix().conjugate_by(&u0);
                worst = worst.max((&moved - &image).frobenius_norm());
            }
            r.push(format!("{prefix}.aligned"), true);
            r.push(format!("{prefix}.max_block_error"), worst);
            r.line(format!("block alignment: max error {worst:.3e}"));
        }
        Err(Error::NotABlockPreserver(v)) => {
            r.push(format!("{prefix}.aligned"), false);
            r.push(format!("{prefix}.violation"), v);
            r.line(format!("block alignment: not a block preserver (violation {v:.3e})"));
        }
        Err(e) => return Err(e),
    }
    Ok(())
}
