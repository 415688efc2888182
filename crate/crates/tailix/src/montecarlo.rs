//! Reproducible simulation experiments: bias/variance/MSE of every
//! estimator under the exact two-term tail model, CLT diagnostics for the
//! block-ratio estimator, and head-to-head MSE ratios at the theoretically
//! optimal tunings.
//!
//! Reproducibility contract: replicate `r` draws its sample with the seed
//! `replicate_seed(base_seed, r)`, replicates are collected in index order
//! whatever the worker count, and every reduction uses a fixed-order sum,
//! so a configuration always produces a bit-identical report.

use crate::distributions::HallDistribution;
use crate::error::{Error, Result};
use crate::estimators::{self, Kernel, Method, Sample};
use crate::math::{kolmogorov_sf, normal_cdf, pairwise_sum};
use crate::theory::{
    classical_asymptotics, dpr_asymptotics, dpr_sigma2, ClassicalId, Rmmse, SecondOrderParams,
};
use rayon::prelude::*;

/// SplitMix64 finalizer. Constants are pinned forever: changing them would
/// silently re-randomize every published experiment.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index`: the SplitMix64 output stream evaluated at
/// `base_seed + (index + 1) * golden`, `golden = 0x9E3779B97F4A7C15`.
pub fn replicate_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// How a tuning parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuningRule {
    Explicit(usize),
    /// `m_opt` (block estimators) or `round(k_opt)` (order-statistic
    /// estimators) from the asymptotic theory; requires a finite second
    /// term (`c2 != 0`, finite `beta`) and a non-degenerate constant.
    OptimalFromTheory,
}

/// Estimator plus tuning rule for an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Hill(TuningRule),
    Pickands(TuningRule),
    Moment(TuningRule),
    DeVries(TuningRule),
    Dpr(TuningRule),
    Gdpr(TuningRule, Kernel),
    Qi(TuningRule, usize),
}

impl MethodSpec {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Hill(_) => Method::Hill,
            MethodSpec::Pickands(_) => Method::Pickands,
            MethodSpec::Moment(_) => Method::Moment,
            MethodSpec::DeVries(_) => Method::DeVries,
            MethodSpec::Dpr(_) => Method::Dpr,
            MethodSpec::Gdpr(_, _) => Method::Gdpr,
            MethodSpec::Qi(_, _) => Method::Qi,
        }
    }

    fn rule(&self) -> TuningRule {
        match self {
            MethodSpec::Hill(r)
            | MethodSpec::Pickands(r)
            | MethodSpec::Moment(r)
            | MethodSpec::DeVries(r)
            | MethodSpec::Dpr(r)
            | MethodSpec::Gdpr(r, _)
            | MethodSpec::Qi(r, _) => *r,
        }
    }
}

/// Full experiment description. Identical configs reproduce identical
/// reports byte for byte.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub dist: HallDistribution,
    /// Observations per replicate (`N`).
    pub n_obs: usize,
    pub method: MethodSpec,
    pub replicates: usize,
    pub base_seed: u64,
}

/// Outcome of [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Tuning value actually used (`k` or `m`).
    pub tuning_value: usize,
    /// Population value of the estimate on its native scale.
    pub truth_native: f64,
    pub truth_alpha: f64,
    pub truth_gamma: f64,
    pub truth_p: f64,
    /// Per-replicate native estimates; `None` marks a degenerate replicate
    /// (excluded from all moments below).
    pub estimates: Vec<Option<f64>>,
    pub degenerate_count: usize,
    pub valid_count: usize,
    pub mean: f64,
    pub bias: f64,
    /// Sample variance over valid replicates (0 when fewer than 2).
    pub variance: f64,
    /// Mean squared error against `truth_native` over valid replicates.
    pub mse: f64,
    /// `sqrt(n) (p_hat - p) / sigma` per valid replicate; present for the
    /// plain block-ratio estimator only.
    pub standardized: Option<Vec<f64>>,
    /// Mean of the limiting law the standardized values are tested
    /// against: `mu/sigma` under the optimal-tuning rule, 0 otherwise.
    pub ks_target_mean: Option<f64>,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    /// Wall-clock milliseconds; kept out of the serialized report so that
    /// identical configurations produce byte-identical files.
    pub runtime_ms: u128,
}

fn truth_native(dist: &HallDistribution, method: &MethodSpec) -> Result<f64> {
    let alpha = dist.alpha();
    match method {
        MethodSpec::Dpr(_) => Ok(alpha / (alpha + 1.0)),
        MethodSpec::Gdpr(_, Kernel::Power(r)) => Ok(alpha / (r + alpha)),
        MethodSpec::Gdpr(_, Kernel::Log) => Ok(1.0 / alpha),
        MethodSpec::Gdpr(_, Kernel::NegPower(r)) => {
            if alpha > *r {
                Ok(alpha / (alpha - r))
            } else {
                Err(Error::InvalidConfig(format!(
                    "negpower kernel requires alpha > r, got alpha = {alpha}, r = {r}"
                )))
            }
        }
        _ => Ok(1.0 / alpha),
    }
}

/// Resolve the tuning value before any sampling happens.
fn resolve_tuning(cfg: &ExperimentConfig) -> Result<usize> {
    match cfg.method.rule() {
        TuningRule::Explicit(v) => Ok(v),
        TuningRule::OptimalFromTheory => {
            let params = SecondOrderParams::from_distribution(&cfg.dist).map_err(|_| {
                Error::InvalidConfig(
                    "optimal tuning needs a finite second-order exponent".to_string(),
                )
            })?;
            match cfg.method {
                MethodSpec::Dpr(_) => {
                    let asym = dpr_asymptotics(&params, cfg.n_obs as u64)?;
                    asym.m_opt_int.map(|m| m as usize).ok_or_else(|| {
                        Error::InvalidConfig("pure-Pareto regime: m_opt undefined".to_string())
                    })
                }
                MethodSpec::Hill(_)
                | MethodSpec::Pickands(_)
                | MethodSpec::Moment(_)
                | MethodSpec::DeVries(_) => {
                    let id = match cfg.method {
                        MethodSpec::Hill(_) => ClassicalId::Hill,
                        MethodSpec::Pickands(_) => ClassicalId::Pickands,
                        MethodSpec::Moment(_) => ClassicalId::Moment,
                        _ => ClassicalId::DeVries,
                    };
                    let asym = classical_asymptotics(id, &params, cfg.n_obs as u64)?;
                    let k = asym.k_opt.ok_or_else(|| {
                        Error::InvalidConfig(
                            "degenerate bias constant: k_opt undefined".to_string(),
                        )
                    })?;
                    let k = k.round() as usize;
                    if k + 1 >= cfg.n_obs {
                        return Err(Error::InvalidConfig(format!(
                            "k_opt = {k} does not fit a sample of {} observations",
                            cfg.n_obs
                        )));
                    }
                    Ok(k)
                }
                MethodSpec::Gdpr(_, _) | MethodSpec::Qi(_, _) => Err(Error::InvalidConfig(
                    "no closed-form optimal tuning for gdpr/qi; pass an explicit m".to_string(),
                )),
            }
        }
    }
}

fn estimate_once(sample: &Sample, method: &MethodSpec, tuning: usize) -> Result<f64> {
    let r = match method {
        MethodSpec::Hill(_) => estimators::hill(sample, tuning)?,
        MethodSpec::Pickands(_) => estimators::pickands(sample, tuning)?,
        MethodSpec::Moment(_) => estimators::moment(sample, tuning)?,
        MethodSpec::DeVries(_) => estimators::devries(sample, tuning)?,
        MethodSpec::Dpr(_) => estimators::dpr(sample, tuning)?,
        MethodSpec::Gdpr(_, kernel) => estimators::gdpr(sample, tuning, *kernel)?,
        MethodSpec::Qi(_, s) => estimators::qi(sample, tuning, *s)?,
    };
    Ok(r.native)
}

/// Run a full experiment: seeded replicates, estimates, moments, and (for
/// the plain block-ratio estimator) CLT diagnostics.
///
/// Degenerate replicates are recorded, counted, and excluded from the
/// moments; any other failure aborts the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.replicates == 0 {
        return Err(Error::InvalidConfig(
            "need at least one replicate".to_string(),
        ));
    }
    let tuning = resolve_tuning(cfg)?;
    let truth = truth_native(&cfg.dist, &cfg.method)?;
    let start = std::time::Instant::now();

    let outcomes: Vec<Result<f64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(cfg.base_seed, r as u64);
            let sample = cfg.dist.sample(seed, cfg.n_obs)?;
            estimate_once(&sample, &cfg.method, tuning)
        })
        .collect();

    let mut estimates = Vec::with_capacity(cfg.replicates);
    let mut valid = Vec::with_capacity(cfg.replicates);
    let mut degenerate_count = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(v) => {
                estimates.push(Some(v));
                valid.push(v);
            }
            Err(e) if e.is_replicate_degeneracy() => {
                estimates.push(None);
                degenerate_count += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if valid.is_empty() {
        return Err(Error::AllDegenerate);
    }

    let vc = valid.len() as f64;
    let mean = pairwise_sum(&valid) / vc;
    let bias = mean - truth;
    let variance = if valid.len() > 1 {
        let sq: Vec<f64> = valid.iter().map(|&v| (v - mean) * (v - mean)).collect();
        pairwise_sum(&sq) / (vc - 1.0)
    } else {
        0.0
    };
    let se: Vec<f64> = valid.iter().map(|&v| (v - truth) * (v - truth)).collect();
    let mse = pairwise_sum(&se) / vc;

    // CLT diagnostics for the plain block-ratio estimator.
    let (standardized, ks_target_mean, ks_statistic, ks_p_value) =
        if matches!(cfg.method, MethodSpec::Dpr(_)) {
            let n_blocks = cfg.n_obs / tuning;
            let sigma = dpr_sigma2(cfg.dist.alpha()).sqrt();
            let scale = (n_blocks as f64).sqrt() / sigma;
            let z: Vec<f64> = valid.iter().map(|&p| scale * (p - truth)).collect();
            let target = match cfg.method.rule() {
                TuningRule::OptimalFromTheory => {
                    let params = SecondOrderParams::from_distribution(&cfg.dist)?;
                    let asym = dpr_asymptotics(&params, cfg.n_obs as u64)?;
                    asym.mu / sigma
                }
                TuningRule::Explicit(_) => 0.0,
            };
            match ks_normal(&z, target) {
                Ok((stat, p)) => (Some(z), Some(target), Some(stat), Some(p)),
                Err(Error::InsufficientData(_)) => (Some(z), Some(target), None, None),
                Err(e) => return Err(e),
            }
        } else {
            (None, None, None, None)
        };

    Ok(ExperimentReport {
        config: *cfg,
        tuning_value: tuning,
        truth_native: truth,
        truth_alpha: cfg.dist.alpha(),
        truth_gamma: 1.0 / cfg.dist.alpha(),
        truth_p: cfg.dist.p(),
        estimates,
        degenerate_count,
        valid_count: valid.len(),
        mean,
        bias,
        variance,
        mse,
        standardized,
        ks_target_mean,
        ks_statistic,
        ks_p_value,
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// One-sample Kolmogorov-Smirnov test of `z_values` against the normal law
/// `N(target_mean, 1)`. Returns `(statistic, p_value)` with the p-value
/// taken from the asymptotic Kolmogorov distribution (100-term series).
pub fn ks_normal(z_values: &[f64], target_mean: f64) -> Result<(f64, f64)> {
    if z_values.len() < 50 {
        return Err(Error::InsufficientData(format!(
            "Kolmogorov-Smirnov needs at least 50 values, got {}",
            z_values.len()
        )));
    }
    let mut z = z_values.to_vec();
    z.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = z.len() as f64;
    let mut d = 0.0f64;
    for (i, &zi) in z.iter().enumerate() {
        let cdf = normal_cdf(zi - target_mean);
        let upper = ((i + 1) as f64 / n - cdf).abs();
        let lower = (cdf - i as f64 / n).abs();
        d = d.max(upper).max(lower);
    }
    let p = kolmogorov_sf(n.sqrt() * d);
    Ok((d, p))
}

/// Head-to-head MSE comparison at the optimal tunings.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRatioReport {
    /// Empirical `MSE(p_hat at m_opt) / MSE(p^(j) at k_opt)` on the p scale.
    pub empirical_ratio: f64,
    /// Closed-form limit of the same ratio.
    pub theoretical_rmmse: f64,
    pub mse_dpr: f64,
    pub mse_classical: f64,
    pub m_used: usize,
    pub k_used: usize,
    /// Classical replicates excluded by the p-scale pole (`gamma <= -1`)
    /// or estimator degeneracy.
    pub excluded_classical: usize,
    pub replicates: usize,
}

/// Estimate the ratio of mean squared errors between the block-ratio
/// estimator at `m_opt` and classical estimator `j` at `k_opt`, both
/// transformed to the `p` scale and evaluated on the same samples.
pub fn mse_ratio_experiment(
    dist: &HallDistribution,
    n_obs: usize,
    id: ClassicalId,
    replicates: usize,
    base_seed: u64,
) -> Result<MseRatioReport> {
    if replicates == 0 {
        return Err(Error::InvalidConfig(
            "need at least one replicate".to_string(),
        ));
    }
    let params = SecondOrderParams::from_distribution(dist)?;
    let dpr_asym = dpr_asymptotics(&params, n_obs as u64)?;
    let m = dpr_asym
        .m_opt_int
        .ok_or_else(|| Error::InvalidConfig("pure-Pareto regime: m_opt undefined".to_string()))?
        as usize;
    let classical = classical_asymptotics(id, &params, n_obs as u64)?;
    let k = classical
        .k_opt
        .ok_or_else(|| {
            Error::InvalidConfig("degenerate bias constant: k_opt undefined".to_string())
        })?
        .round() as usize;
    let theoretical = match crate::theory::rmmse(id, dist.alpha(), dist.beta())? {
        Rmmse::Value(v) => v,
        Rmmse::Degenerate => {
            return Err(Error::InvalidConfig(
                "rmmse degenerate on this locus".to_string(),
            ))
        }
    };
    let p_truth = dist.p();

    // Per replicate: one sample, both estimators, squared errors on the
    // p scale. A classical gamma estimate at or beyond the pole gamma = -1
    // has no p-scale image and is excluded (never clamped).
    let outcomes: Vec<Result<(f64, Option<f64>)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(base_seed, r as u64);
            let sample = dist.sample(seed, n_obs)?;
            let p_dpr = estimators::dpr(&sample, m)?.native;
            let classical_p = {
                let est = match id {
                    ClassicalId::Hill => estimators::hill(&sample, k),
                    ClassicalId::Pickands => estimators::pickands(&sample, k),
                    ClassicalId::Moment => estimators::moment(&sample, k),
                    ClassicalId::DeVries => estimators::devries(&sample, k),
                };
                match est {
                    Ok(r) => r.p_hat,
                    Err(e) if e.is_replicate_degeneracy() => None,
                    Err(e) => return Err(e),
                }
            };
            Ok((p_dpr, classical_p))
        })
        .collect();

    let mut dpr_se = Vec::with_capacity(replicates);
    let mut classical_se = Vec::with_capacity(replicates);
    let mut excluded = 0usize;
    for outcome in outcomes {
        let (p_dpr, p_cl) = outcome?;
        dpr_se.push((p_dpr - p_truth) * (p_dpr - p_truth));
        match p_cl {
            Some(p) => classical_se.push((p - p_truth) * (p - p_truth)),
            None => excluded += 1,
        }
    }
    if classical_se.is_empty() {
        return Err(Error::AllDegenerate);
    }
    let mse_dpr = pairwise_sum(&dpr_se) / dpr_se.len() as f64;
    let mse_classical = pairwise_sum(&classical_se) / classical_se.len() as f64;

    Ok(MseRatioReport {
        empirical_ratio: mse_dpr / mse_classical,
        theoretical_rmmse: theoretical,
        mse_dpr,
        mse_classical,
        m_used: m,
        k_used: k,
        excluded_classical: excluded,
        replicates,
    })
}

// ---------------------------------------------------------------------------
// Report serialization (schema "tailix-report-v1")
// ---------------------------------------------------------------------------

fn push_f64(out: &mut String, v: f64) {
    if v.is_finite() {
        // 17 significant digits: lossless for f64.
        out.push_str(&format!("{v:.16e}"));
    } else {
        out.push_str("null");
    }
}

fn push_opt(out: &mut String, v: Option<f64>) {
    match v {
        Some(x) => push_f64(out, x),
        None => out.push_str("null"),
    }
}

impl ExperimentReport {
    /// Serialize to the `tailix-report-v1` JSON document. Field order is
    /// fixed and all finite floats carry 17 significant digits, so equal
    /// reports produce byte-identical files. Wall-clock runtime is
    /// deliberately not serialized.
    pub fn to_json_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.estimates.len() + 32));
        out.push_str("{\"schema\":\"tailix-report-v1\",\"config\":{\"dist\":{\"c1\":");
        push_f64(&mut out, self.config.dist.c1());
        out.push_str(",\"c2\":");
        push_f64(&mut out, self.config.dist.c2());
        out.push_str(",\"alpha\":");
        push_f64(&mut out, self.config.dist.alpha());
        out.push_str(",\"beta\":");
        // beta = inf (pure Pareto sentinel) serializes as null.
        push_f64(&mut out, self.config.dist.beta());
        out.push_str("},\"n_obs\":");
        out.push_str(&self.config.n_obs.to_string());
        out.push_str(",\"method\":\"");
        out.push_str(self.config.method.method().name());
        out.push_str("\",\"rule\":\"");
        out.push_str(match self.config.method.rule() {
            TuningRule::Explicit(_) => "explicit",
            TuningRule::OptimalFromTheory => "optimal",
        });
        out.push_str("\",\"tuning_value\":");
        out.push_str(&self.tuning_value.to_string());
        out.push_str(",\"kernel\":");
        match self.config.method {
            MethodSpec::Gdpr(_, k) => out.push_str(&format!("\"{k}\"")),
            _ => out.push_str("null"),
        }
        out.push_str(",\"s\":");
        match self.config.method {
            MethodSpec::Qi(_, s) => out.push_str(&s.to_string()),
            _ => out.push_str("null"),
        }
        out.push_str(",\"replicates\":");
        out.push_str(&self.config.replicates.to_string());
        out.push_str(",\"base_seed\":");
        out.push_str(&self.config.base_seed.to_string());
        out.push_str("},\"truth\":{\"native\":");
        push_f64(&mut out, self.truth_native);
        out.push_str(",\"alpha\":");
        push_f64(&mut out, self.truth_alpha);
        out.push_str(",\"gamma\":");
        push_f64(&mut out, self.truth_gamma);
        out.push_str(",\"p\":");
        push_f64(&mut out, self.truth_p);
        out.push_str("},\"estimates\":[");
        for (i, e) in self.estimates.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_opt(&mut out, *e);
        }
        out.push_str("],\"degenerate_count\":");
        out.push_str(&self.degenerate_count.to_string());
        out.push_str(",\"valid_count\":");
        out.push_str(&self.valid_count.to_string());
        out.push_str(",\"mean\":");
        push_f64(&mut out, self.mean);
        out.push_str(",\"bias\":");
        push_f64(&mut out, self.bias);
        out.push_str(",\"variance\":");
        push_f64(&mut out, self.variance);
        out.push_str(",\"mse\":");
        push_f64(&mut out, self.mse);
        out.push_str(",\"standardized\":");
        match &self.standardized {
            Some(z) => {
                out.push('[');
                for (i, v) in z.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    push_f64(&mut out, *v);
                }
                out.push(']');
            }
            None => out.push_str("null"),
        }
        out.push_str(",\"ks_target_mean\":");
        push_opt(&mut out, self.ks_target_mean);
        out.push_str(",\"ks_statistic\":");
        push_opt(&mut out, self.ks_statistic);
        out.push_str(",\"ks_p_value\":");
        push_opt(&mut out, self.ks_p_value);
        out.push('}');
        out
    }
}

/// Deserialized view of a v1 report file.
#[derive(Debug, serde::Deserialize)]
pub struct ReportFile {
    pub schema: String,
    pub config: ReportConfig,
    pub truth: ReportTruth,
    pub estimates: Vec<Option<f64>>,
    pub degenerate_count: usize,
    pub valid_count: usize,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub standardized: Option<Vec<f64>>,
    pub ks_target_mean: Option<f64>,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
}

#[derive(Debug, serde::Deserialize)]
pub struct ReportTruth {
    pub native: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub p: f64,
}

#[derive(Debug, serde::Deserialize)]
pub struct ReportConfig {
    pub dist: ReportDist,
    pub n_obs: usize,
    pub method: String,
    pub rule: String,
    pub tuning_value: usize,
    pub kernel: Option<String>,
    pub s: Option<usize>,
    pub replicates: usize,
    pub base_seed: u64,
}

#[derive(Debug, serde::Deserialize)]
pub struct ReportDist {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    /// `null` encodes the pure-Pareto sentinel `beta = inf`.
    pub beta: Option<f64>,
}

impl ReportFile {
    pub fn from_json_str(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto1() -> HallDistribution {
        HallDistribution::pareto(1.0, 1.0).unwrap()
    }

    fn hall_1112() -> HallDistribution {
        HallDistribution::new(1.0, 1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn replicate_seeds_are_stable_and_distinct() {
        // Pinned outputs of the documented mixing function.
        assert_eq!(replicate_seed(0, 0), splitmix64(0x9E37_79B9_7F4A_7C15));
        let a = replicate_seed(42, 0);
        let b = replicate_seed(42, 1);
        let c = replicate_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        // Determinism.
        assert_eq!(a, replicate_seed(42, 0));
        let mut seen = std::collections::HashSet::new();
        for i in 0..10_000u64 {
            assert!(seen.insert(replicate_seed(7, i)), "collision at {i}");
        }
    }

    #[test]
    fn run_experiment_is_deterministic() {
        let cfg = ExperimentConfig {
            dist: pareto1(),
            n_obs: 2000,
            method: MethodSpec::Dpr(TuningRule::Explicit(2)),
            replicates: 60,
            base_seed: 99,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn reports_identical_across_worker_counts() {
        let cfg = ExperimentConfig {
            dist: hall_1112(),
            n_obs: 4000,
            method: MethodSpec::Dpr(TuningRule::Explicit(8)),
            replicates: 40,
            base_seed: 321,
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap());
        assert_eq!(single.to_json_string(), four.to_json_string());
    }

    #[test]
    fn dpr_variance_matches_limit_constant() {
        // Pareto(alpha = 1), m = 2: Var(kappa) = 1/12. Smaller-n version of
        // the acceptance criterion.
        let cfg = ExperimentConfig {
            dist: pareto1(),
            n_obs: 200_000,
            method: MethodSpec::Dpr(TuningRule::Explicit(2)),
            replicates: 1,
            base_seed: 7,
        };
        let report = run_experiment(&cfg).unwrap();
        // Variance of p_hat over one replicate is useless; recompute the
        // per-block ratio variance directly instead.
        let sample = pareto1().sample(replicate_seed(7, 0), 200_000).unwrap();
        let kappas = estimators::block_partition(&sample, 2, 1).unwrap().kappas();
        let n = kappas.len() as f64;
        let mean = pairwise_sum(&kappas) / n;
        let sq: Vec<f64> = kappas.iter().map(|&k| (k - mean) * (k - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1.0);
        assert!(
            (var - 1.0 / 12.0).abs() / (1.0 / 12.0) < 0.02,
            "block-ratio variance {var} vs 1/12"
        );
        assert_eq!(report.valid_count, 1);
    }

    #[test]
    fn moments_identity_holds() {
        let cfg = ExperimentConfig {
            dist: hall_1112(),
            n_obs: 5_000,
            method: MethodSpec::Dpr(TuningRule::Explicit(10)),
            replicates: 200,
            base_seed: 4,
        };
        let r = run_experiment(&cfg).unwrap();
        let rr = r.valid_count as f64;
        let reconstructed = r.bias * r.bias + r.variance * (rr - 1.0) / rr;
        assert!(
            ((reconstructed - r.mse) / r.mse).abs() < 1e-12,
            "mse {} vs bias^2 + (R-1)/R var {}",
            r.mse,
            reconstructed
        );
    }

    #[test]
    fn optimal_rule_resolves_from_theory() {
        let cfg = ExperimentConfig {
            dist: hall_1112(),
            n_obs: 1_000_000,
            method: MethodSpec::Dpr(TuningRule::OptimalFromTheory),
            replicates: 1,
            base_seed: 1,
        };
        assert_eq!(resolve_tuning(&cfg).unwrap(), 139);

        let cfg = ExperimentConfig {
            dist: hall_1112(),
            n_obs: 1_000_000,
            method: MethodSpec::Hill(TuningRule::OptimalFromTheory),
            replicates: 1,
            base_seed: 1,
        };
        assert_eq!(resolve_tuning(&cfg).unwrap(), 12599);

        // Pure Pareto has no optimal tuning.
        let cfg = ExperimentConfig {
            dist: pareto1(),
            n_obs: 1000,
            method: MethodSpec::Dpr(TuningRule::OptimalFromTheory),
            replicates: 1,
            base_seed: 1,
        };
        assert!(matches!(resolve_tuning(&cfg), Err(Error::InvalidConfig(_))));

        // Pickands on its degenerate locus.
        let cfg = ExperimentConfig {
            dist: hall_1112(),
            n_obs: 1000,
            method: MethodSpec::Pickands(TuningRule::OptimalFromTheory),
            replicates: 1,
            base_seed: 1,
        };
        assert!(matches!(resolve_tuning(&cfg), Err(Error::InvalidConfig(_))));

        // No optimal rule for the generalized estimators.
        let cfg = ExperimentConfig {
            dist: hall_1112(),
            n_obs: 1000,
            method: MethodSpec::Qi(TuningRule::OptimalFromTheory, 2),
            replicates: 1,
            base_seed: 1,
        };
        assert!(matches!(resolve_tuning(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn degenerate_replicates_are_counted_and_excluded() {
        // gdpr under the negpower kernel needs alpha > r.
        let bad = ExperimentConfig {
            dist: pareto1(),
            n_obs: 100,
            method: MethodSpec::Gdpr(TuningRule::Explicit(2), Kernel::NegPower(2.0)),
            replicates: 3,
            base_seed: 1,
        };
        assert!(matches!(run_experiment(&bad), Err(Error::InvalidConfig(_))));

        // Statistics exclude None entries; exercised through the moments
        // path with a hand-built outcome check on a tiny pickands run where
        // the estimator itself stays valid.
        let cfg = ExperimentConfig {
            dist: pareto1(),
            n_obs: 10,
            method: MethodSpec::Pickands(TuningRule::Explicit(4)),
            replicates: 50,
            base_seed: 11,
        };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.estimates.len(), 50);
        assert_eq!(r.valid_count + r.degenerate_count, 50);
        assert!(r.valid_count > 0);
    }

    #[test]
    fn ks_normal_perfect_grid_has_zero_statistic() {
        // Exact standard-normal quantile points (i + 0.5)/n.
        let n = 2000;
        let z: Vec<f64> = (0..n)
            .map(|i| {
                let target = (i as f64 + 0.5) / n as f64;
                // Invert the normal CDF by bisection.
                let (mut lo, mut hi) = (-10.0f64, 10.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let (stat, p) = ks_normal(&z, 0.0).unwrap();
        assert!(stat <= 1.0 / n as f64 + 1e-9, "statistic {stat}");
        // Near lambda = 0 the 100-term series truncates with O(0.08)
        // error, so only a coarse bound is meaningful here.
        assert!(p > 0.9, "p = {p}");

        assert!(matches!(
            ks_normal(&z[..49], 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn ks_detects_mean_shift() {
        let n = 2000;
        let z: Vec<f64> = (0..n)
            .map(|i| {
                let target = (i as f64 + 0.5) / n as f64;
                let (mut lo, mut hi) = (-10.0f64, 10.0f64);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi) + 0.25
            })
            .collect();
        let (_, p_wrong) = ks_normal(&z, 0.0).unwrap();
        let (_, p_right) = ks_normal(&z, 0.25).unwrap();
        assert!(
            p_wrong < 1e-6,
            "shifted sample should fail against N(0,1): p = {p_wrong}"
        );
        assert!(p_right > 0.9, "p = {p_right}");
    }

    #[test]
    fn lemma1_transform_is_exact_on_p_scale() {
        // Every classical replicate mapped to the p scale equals
        // 1/(1 + gamma_hat) exactly when gamma_hat > -1.
        let sample = pareto1().sample(5, 1000).unwrap();
        for k in [10usize, 50, 100] {
            let est = estimators::hill(&sample, k).unwrap();
            let g = est.gamma_hat.unwrap();
            if g > -1.0 {
                assert_eq!(est.p_hat.unwrap(), 1.0 / (1.0 + g));
            } else {
                assert_eq!(est.p_hat, None);
            }
        }
    }

    #[test]
    fn mse_ratio_smoke() {
        // Small-N smoke test for plumbing; the acceptance suite runs the
        // full-size side-agreement checks.
        let r = mse_ratio_experiment(&hall_1112(), 20_000, ClassicalId::Hill, 40, 123).unwrap();
        assert!(r.empirical_ratio.is_finite() && r.empirical_ratio > 0.0);
        assert!((r.theoretical_rmmse - 2.3295).abs() < 1e-3);
        assert!(r.m_used >= 2 && r.k_used >= 1);
        // Determinism.
        let r2 = mse_ratio_experiment(&hall_1112(), 20_000, ClassicalId::Hill, 40, 123).unwrap();
        assert_eq!(r.empirical_ratio, r2.empirical_ratio);
    }

    #[test]
    fn report_roundtrips_losslessly() {
        let cfg = ExperimentConfig {
            dist: hall_1112(),
            n_obs: 1000,
            method: MethodSpec::Dpr(TuningRule::Explicit(5)),
            replicates: 64,
            base_seed: 2024,
        };
        let report = run_experiment(&cfg).unwrap();
        let json = report.to_json_string();
        let parsed = ReportFile::from_json_str(&json).unwrap();
        assert_eq!(parsed.schema, "tailix-report-v1");
        assert_eq!(parsed.config.base_seed, 2024);
        assert_eq!(parsed.config.method, "dpr");
        assert_eq!(parsed.mean, report.mean);
        assert_eq!(parsed.mse, report.mse);
        assert_eq!(parsed.variance, report.variance);
        let est: Vec<Option<f64>> = parsed.estimates;
        assert_eq!(est, report.estimates);
        assert_eq!(
            parsed.standardized.as_deref(),
            report.standardized.as_deref()
        );

        // Pure-Pareto beta serializes as null.
        let cfg = ExperimentConfig {
            dist: pareto1(),
            n_obs: 100,
            method: MethodSpec::Hill(TuningRule::Explicit(10)),
            replicates: 2,
            base_seed: 5,
        };
        let report = run_experiment(&cfg).unwrap();
        let parsed = ReportFile::from_json_str(&report.to_json_string()).unwrap();
        assert_eq!(parsed.config.dist.beta, None);
        assert_eq!(parsed.standardized, None);
        assert_eq!(parsed.ks_p_value, None);
    }
}
