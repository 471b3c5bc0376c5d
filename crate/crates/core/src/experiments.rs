//! Convergence study: random kernel-sum targets, Monte Carlo relative L2
//! errors and level sweeps with node-count and positive-definiteness stops.
//!
//! All randomness comes from ChaCha8 streams keyed by `(seed, stream)`, so
//! any realisation can be regenerated on its own, in any order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, PdFailure, Result};
use crate::grids::{GridSpec, MAX_LEVEL};
use crate::kernels::{KernelParams1D, SeparableKernel, Smoothness};
use crate::tensor_solver::{AssemblyPlan, SparseInterpolant};

pub const DEFAULT_TERMS: usize = 20;
pub const DEFAULT_COEFF_VARIANCE: f64 = 5.0;
pub const DEFAULT_MC_SAMPLES: usize = 100;

/// Stream reserved for Monte Carlo sample points; target `k` uses `k + 1`.
const SAMPLE_STREAM: u64 = 0;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-0.5..0.5)).collect()
}

/// Distribution of random targets `sum_i xi_i Phi(., y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub nu: Vec<Smoothness>,
    /// Lengthscale exponents: `lambda_j = 2^{p_j}`.
    pub p: Vec<u32>,
    pub n_terms: usize,
    /// Variance of the coefficients `xi_i`.
    pub coeff_variance: f64,
}

impl TargetSpec {
    pub fn new(nu: Vec<Smoothness>, p: Vec<u32>) -> Self {
        Self { nu, p, n_terms: DEFAULT_TERMS, coeff_variance: DEFAULT_COEFF_VARIANCE }
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn kernel(&self) -> Result<SeparableKernel> {
        if self.p.len() != self.nu.len() {
            return Err(Error::shape(self.nu.len(), self.p.len()));
        }
        let dims = self
            .nu
            .iter()
            .zip(&self.p)
            .map(|(&nu, &p)| KernelParams1D::unit(nu, (p as f64).exp2()))
            .collect::<Result<Vec<_>>>()?;
        SeparableKernel::new(dims)
    }
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    kernel: SeparableKernel,
    centers: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    seed: u64,
    stream: u64,
}

impl TestFunction {
    /// Draws centers uniformly on the domain and coefficients from a centred
    /// normal, from the ChaCha8 stream `(seed, stream)`.
    pub fn generate(target: &TargetSpec, seed: u64, stream: u64) -> Result<Self> {
        let kernel = target.kernel()?;
        if !(target.coeff_variance.is_finite() && target.coeff_variance >= 0.0) {
            return Err(Error::Parameter(format!("coefficient variance {} is invalid", target.coeff_variance)));
        }
        let normal = Normal::new(0.0, target.coeff_variance.sqrt())
            .map_err(|e| Error::Parameter(format!("coefficient distribution: {e}")))?;
        let mut rng = rng(seed, stream);
        let d = target.dim();
        let mut centers = Vec::with_capacity(target.n_terms);
        let mut coeffs = Vec::with_capacity(target.n_terms);
        for _ in 0..target.n_terms {
            coeffs.push(normal.sample(&mut rng));
            centers.push(uniform_point(&mut rng, d));
        }
        Ok(Self { kernel, centers, coeffs, seed, stream })
    }

    /// Explicit centers and coefficients.
    pub fn from_parts(kernel: SeparableKernel, centers: Vec<Vec<f64>>, coeffs: Vec<f64>) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::shape(centers.len(), coeffs.len()));
        }
        if let Some(c) = centers.iter().find(|c| c.len() != kernel.dim()) {
            return Err(Error::shape(kernel.dim(), c.len()));
        }
        Ok(Self { kernel, centers, coeffs, seed: 0, stream: 0 })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn kernel(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (xi, y) in self.coeffs.iter().zip(&self.centers) {
            acc += xi * self.kernel.eval(x, y)?;
        }
        Ok(acc)
    }
}

/// Target drawn from stream 0 of `seed`.
pub fn make_test_function(target: &TargetSpec, seed: u64) -> Result<TestFunction> {
    TestFunction::generate(target, seed, 0)
}

/// `n` points uniform on the domain, shared by every level of a sweep.
pub fn mc_samples(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed, SAMPLE_STREAM);
    (0..n).map(|_| uniform_point(&mut rng, d)).collect()
}

/// `||f - s|| / ||f||` over paired samples.
pub fn relative_l2(f: &[f64], s: &[f64]) -> Result<f64> {
    if f.len() != s.len() {
        return Err(Error::shape(f.len(), s.len()));
    }
    let den: f64 = f.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let num: f64 = f.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((num / den).sqrt())
}

/// Monte Carlo relative L2 error of `s` against `f` on `n_samples` points
/// drawn from `seed`.
pub fn relative_l2_error(f: &TestFunction, s: &SparseInterpolant, n_samples: usize, seed: u64) -> Result<f64> {
    if f.dim() != s.dim() {
        return Err(Error::shape(f.dim(), s.dim()));
    }
    let xs = mc_samples(f.dim(), n_samples, seed);
    let fx = xs.iter().map(|x| f.eval(x)).collect::<Result<Vec<_>>>()?;
    relative_l2(&fx, &s.evaluate_many(&xs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The next level would exceed the node cap.
    MaxN,
    /// The next level's Gram matrix was not positive definite.
    PdFailure,
    /// Ran up to the maximum level.
    Completed,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::MaxN => "MAX_N",
            Termination::PdFailure => "PD_FAILURE",
            Termination::Completed => "COMPLETED",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "MAX_N" => Ok(Termination::MaxN),
            "PD_FAILURE" => Ok(Termination::PdFailure),
            "COMPLETED" => Ok(Termination::Completed),
            _ => Err(Error::Parse(format!("unknown termination {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub level: u32,
    pub n: usize,
    /// Mean over realisations of the relative L2 error.
    pub error: f64,
    /// `Completed` except on the last record, which carries the reason the
    /// sweep stopped after it.
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Family and parameters of the interpolant; its level is ignored.
    pub spec: GridSpec,
    pub target: TargetSpec,
    pub realisations: usize,
    pub mc_samples: usize,
    pub n_cap: usize,
    pub max_level: u32,
    pub seed: u64,
    pub parallel: bool,
}

impl SweepConfig {
    pub fn new(spec: GridSpec, target: TargetSpec) -> Self {
        Self {
            spec,
            target,
            realisations: 3,
            mc_samples: DEFAULT_MC_SAMPLES,
            n_cap: 10_000,
            max_level: MAX_LEVEL,
            seed: 1,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<ExperimentRecord>,
    pub termination: Termination,
    /// Level that triggered the stop (`None` when completed).
    pub stop_level: Option<u32>,
    pub stop_n: Option<usize>,
    pub failure: Option<PdFailure>,
}

/// Builds interpolants for `L = 0, 1, ...`, skipping levels that add no
/// nodes, until the node cap, a non-positive-definite Gram matrix, or
/// `max_level`.
pub fn level_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    let d = cfg.spec.dim();
    if cfg.target.dim() != d {
        return Err(Error::shape(d, cfg.target.dim()));
    }
    if cfg.realisations == 0 || cfg.mc_samples == 0 {
        return Err(Error::Parameter("need at least one realisation and one sample".into()));
    }
    let samples = mc_samples(d, cfg.mc_samples, cfg.seed);
    let targets = (0..cfg.realisations as u64)
        .map(|k| TestFunction::generate(&cfg.target, cfg.seed, k + 1))
        .collect::<Result<Vec<_>>>()?;
    let target_at_samples = targets
        .iter()
        .map(|f| samples.iter().map(|x| f.eval(x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let mut records: Vec<ExperimentRecord> = Vec::new();
    let mut previous_n = None;
    for level in 0..=cfg.max_level.min(MAX_LEVEL) {
        let spec = cfg.spec.with_level(level)?;
        let n = spec.node_count();
        if previous_n == Some(n) {
            continue;
        }
        if n > cfg.n_cap {
            return Ok(finish(records, Termination::MaxN, Some(level), Some(n), None));
        }
        let plan = match AssemblyPlan::new(&spec, cfg.parallel) {
            Ok(plan) => plan,
            Err(Error::PdFailure(f)) => {
                return Ok(finish(records, Termination::PdFailure, Some(level), Some(n), Some(f)));
            }
            Err(e) => return Err(e),
        };
        let realisation = |k: usize| -> Result<f64> {
            let f = &targets[k];
            let values = plan.nodes().iter().map(|node| f.eval(&node.coords())).collect::<Result<Vec<_>>>()?;
            let s = plan.solve(&values, false)?;
            relative_l2(&target_at_samples[k], &s.evaluate_many(&samples)?)
        };
        let errors: Vec<Result<f64>> = if cfg.parallel {
            (0..targets.len()).into_par_iter().map(realisation).collect()
        } else {
            (0..targets.len()).map(realisation).collect()
        };
        let mut total = 0.0;
        for e in errors {
            total += e?;
        }
        records.push(ExperimentRecord {
            level,
            n,
            error: total / targets.len() as f64,
            termination: Termination::Completed,
        });
        previous_n = Some(n);
    }
    Ok(finish(records, Termination::Completed, None, None, None))
}

fn finish(
    mut records: Vec<ExperimentRecord>,
    termination: Termination,
    stop_level: Option<u32>,
    stop_n: Option<usize>,
    failure: Option<PdFailure>,
) -> SweepOutcome {
    if let Some(last) = records.last_mut() {
        last.termination = termination;
    }
    SweepOutcome { records, termination, stop_level, stop_n, failure }
}

impl SweepOutcome {
    /// `error N` data lines, shortest round-trip decimal formatting.
    pub fn data_lines(&self) -> String {
        self.records.iter().map(|r| format!("{} {}\n", r.error, r.n)).collect()
    }

    /// Summary keys for the file header.
    pub fn summary(&self) -> Vec<(String, String)> {
        let mut out = vec![("result.termination".to_string(), self.termination.to_string())];
        if let Some(l) = self.stop_level {
            out.push(("result.stop_level".into(), l.to_string()));
        }
        if let Some(n) = self.stop_n {
            out.push(("result.stop_n".into(), n.to_string()));
        }
        if let Some(l) = self.records.last() {
            out.push(("result.last_level".into(), l.level.to_string()));
        }
        out
    }
}

/// Reads `error N` lines back, ignoring `#` comments and blank lines.
pub fn parse_data_lines(text: &str) -> Result<Vec<(f64, usize)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let bad = || Error::Parse(format!("bad data line {l:?}"));
            let (e, n) = l.split_once(' ').ok_or_else(bad)?;
            Ok((e.parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}
