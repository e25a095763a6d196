//! Session configuration: every numeric default lives here and is echoed in each report.

use std::path::PathBuf;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use qsphere_core::linalg::SvdOptions;
use qsphere_core::mkdist::{Mode, OptimizationProblem, StepSchedule};
use qsphere_core::scalar::parse_rational;
use qsphere_core::specnorm::{GramOptions, NormOptions};

pub const CACHE_ENV: &str = "QSPHERE_CACHE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    #[default]
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionConfig {
    /// `q` as typed: `p/r`, an integer or a decimal (read exactly).
    pub q: String,
    pub scalar_mode: ScalarMode,
    /// Significant decimal digits in float mode.
    pub precision: usize,
    pub trunc: usize,
    pub theta_grid: usize,
    pub doublings: u32,
    pub rel_tol: f64,
    pub classical_grid: usize,
    pub svd_tol: f64,
    pub svd_max_iter: usize,
    pub svd_krylov: usize,
    pub mode: String,
    pub n: u32,
    pub m: u32,
    /// Ladder doublings of the Lip-norm inside the distance search.
    pub search_doublings: u32,
    pub restarts: usize,
    pub max_iters: usize,
    pub step_initial: f64,
    pub step_patience: usize,
    pub seed: u64,
    pub gap: f64,
    pub gram_degree_cap: u32,
    pub gram_step: u32,
    pub gram_rel_tol: f64,
    /// Relative slack allowed in Lip-contraction comparisons.
    pub lip_tol: f64,
    /// Relative slack allowed in the slice estimate.
    pub slice_tol: f64,
    /// Allowed increase of a decreasing trend between consecutive levels.
    pub trend_tol: f64,
    pub pairing_table: Option<String>,
    pub basis_cache: Option<String>,
    pub cache_dir: Option<String>,
    pub format: Format,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let norm = NormOptions::default();
        let prob = OptimizationProblem::default();
        let gram = GramOptions::default();
        SessionConfig {
            q: "1/2".into(),
            scalar_mode: ScalarMode::Exact,
            precision: 40,
            trunc: norm.trunc,
            theta_grid: norm.theta_grid,
            doublings: norm.doublings,
            rel_tol: norm.rel_tol,
            classical_grid: norm.classical_grid,
            svd_tol: norm.svd.tol,
            svd_max_iter: norm.svd.max_iter,
            svd_krylov: norm.svd.krylov,
            mode: prob.mode.name().into(),
            n: prob.n,
            m: prob.m,
            search_doublings: prob.norm.doublings,
            restarts: prob.restarts,
            max_iters: prob.max_iters,
            step_initial: prob.step.initial,
            step_patience: prob.step.patience,
            seed: prob.seed,
            gap: prob.gap,
            gram_degree_cap: gram.degree_cap,
            gram_step: gram.step,
            gram_rel_tol: gram.rel_tol,
            lip_tol: 1e-6,
            slice_tol: 1e-4,
            trend_tol: 1e-3,
            pairing_table: None,
            basis_cache: None,
            cache_dir: std::env::var(CACHE_ENV).ok().filter(|s| !s.is_empty()),
            format: Format::Json,
        }
    }
}

impl SessionConfig {
    pub fn q_rational(&self) -> Result<BigRational, String> {
        let q = parse_rational(&self.q).ok_or_else(|| format!("cannot read q = \"{}\"", self.q))?;
        let zero = BigRational::from_integer(0.into());
        let one = BigRational::from_integer(1.into());
        if q <= zero || q > one {
            return Err(format!("q = {} must lie in (0, 1]", self.q));
        }
        Ok(q)
    }

    pub fn norm_options(&self) -> NormOptions {
        NormOptions {
            trunc: self.trunc,
            theta_grid: self.theta_grid,
            doublings: self.doublings,
            rel_tol: self.rel_tol,
            classical_grid: self.classical_grid,
            svd: SvdOptions { tol: self.svd_tol, max_iter: self.svd_max_iter, krylov: self.svd_krylov },
        }
    }

    /// Norm options with the truncation raised to `10·degree` for high-degree input.
    pub fn norm_options_for(&self, degree: u32) -> NormOptions {
        let o = self.norm_options();
        NormOptions { trunc: o.trunc.max(10 * degree as usize), ..o }
    }

    pub fn gram_options(&self) -> GramOptions {
        GramOptions { degree_cap: self.gram_degree_cap, step: self.gram_step, rel_tol: self.gram_rel_tol }
    }

    pub fn search_mode(&self) -> Result<Mode, String> {
        Mode::from_name(&self.mode).ok_or_else(|| format!("unknown mode \"{}\" (certified|heuristic)", self.mode))
    }

    pub fn problem(&self, n: u32, m: u32, mode: Mode) -> OptimizationProblem {
        OptimizationProblem {
            n,
            m,
            norm: NormOptions { doublings: self.search_doublings, ..self.norm_options() },
            mode,
            restarts: self.restarts,
            max_iters: self.max_iters,
            step: StepSchedule { initial: self.step_initial, patience: self.step_patience },
            seed: self.seed,
            gap: self.gap,
        }
    }

    /// Basis cache file: `--basis-cache`, else a file in the cache directory.
    pub fn basis_cache_path(&self) -> Option<PathBuf> {
        if let Some(p) = &self.basis_cache {
            return Some(PathBuf::from(p));
        }
        let dir = self.cache_dir.as_ref()?;
        let q = self.q.replace('/', "_");
        let tag = match self.scalar_mode {
            ScalarMode::Exact => "exact".to_string(),
            ScalarMode::Float => format!("float{}", self.precision),
        };
        Some(PathBuf::from(dir).join(format!("basis-q{q}-{tag}.json")))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
