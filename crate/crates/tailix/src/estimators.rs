//! Point estimators of the tail index from raw samples.
//!
//! Two families live here:
//!
//! - order-statistic estimators driven by the `k` largest observations
//!   ([`hill`], [`pickands`], [`moment`], [`devries`]);
//! - block estimators that split the sample into `n = floor(N/m)`
//!   consecutive groups of `m` and work with the largest values of each
//!   group ([`dpr`], [`gdpr`], [`qi`]).
//!
//! All estimators are pure functions of `(sample, tuning)`, scale
//! invariant, and reduce with a fixed-order pairwise summation so results
//! are reproducible bit for bit.

use crate::error::{Error, Result};
use crate::math::pairwise_sum;
use std::sync::OnceLock;

/// Where a sample came from; carried for reporting only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Drawn by the seeded sampler.
    Seed(u64),
    /// Read from a data file.
    File(String),
    /// Constructed in memory.
    Unspecified,
}

/// Positive observations with a lazily computed descending order view.
#[derive(Debug)]
pub struct Sample {
    values: Vec<f64>,
    provenance: Provenance,
    sorted_desc: OnceLock<Vec<f64>>,
}

impl Sample {
    /// Validate and wrap raw observations: all values must be finite and
    /// strictly positive (log and ratio estimators require it), `N >= 2`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_provenance(values, Provenance::Unspecified)
    }

    pub fn with_provenance(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Positivity(format!(
                "non-positive or non-finite value {bad}"
            )));
        }
        Ok(Sample {
            values,
            provenance,
            sorted_desc: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Full descending order statistics, computed once on first use.
    pub fn sorted_desc(&self) -> &[f64] {
        self.sorted_desc.get_or_init(|| {
            let mut v = self.values.clone();
            v.sort_unstable_by(|a, b| b.total_cmp(a));
            v
        })
    }

    /// The `count` largest observations in descending order.
    ///
    /// Uses an O(N) selection rather than a full sort; the result equals
    /// the prefix of [`Sample::sorted_desc`].
    fn top_desc(&self, count: usize) -> Vec<f64> {
        debug_assert!(count >= 1 && count <= self.values.len());
        if let Some(sorted) = self.sorted_desc.get() {
            return sorted[..count].to_vec();
        }
        if count == self.values.len() {
            return self.sorted_desc().to_vec();
        }
        let mut scratch = self.values.clone();
        let (top, _, _) = scratch.select_nth_unstable_by(count, |a, b| b.total_cmp(a));
        let mut top = top.to_vec();
        top.sort_unstable_by(|a, b| b.total_cmp(a));
        top.truncate(count);
        top
    }
}

/// Consecutive blocks of size `m` with the top `s_top + 1` values of each.
#[derive(Debug, Clone)]
pub struct BlockView {
    m: usize,
    n: usize,
    s_top: usize,
    /// Per-block descending tops, flattened with stride `s_top + 1`.
    tops: Vec<f64>,
}

impl BlockView {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of blocks `n = floor(N / m)`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s_top(&self) -> usize {
        self.s_top
    }

    /// Descending top values of block `i` (length `s_top + 1`).
    pub fn block_tops(&self, i: usize) -> &[f64] {
        let w = self.s_top + 1;
        &self.tops[i * w..(i + 1) * w]
    }

    /// Block ratios `kappa_i = M_i^(2) / M_i^(1)`; requires `s_top >= 1`.
    pub fn kappas(&self) -> Vec<f64> {
        let w = self.s_top + 1;
        (0..self.n)
            .map(|i| self.tops[i * w + 1] / self.tops[i * w])
            .collect()
    }
}

/// Split a sample into `n = floor(N/m)` consecutive blocks and record the
/// top `s_top + 1` values of each. The trailing `N - n m` observations are
/// discarded.
///
/// Tops are found by a single pass over each block with a small insertion
/// buffer; the result equals what a full per-block sort would give.
pub fn block_partition(sample: &Sample, m: usize, s_top: usize) -> Result<BlockView> {
    if m < 2 {
        return Err(Error::Tuning(format!(
            "block size m must be at least 2, got {m}"
        )));
    }
    if s_top < 1 || s_top > m - 1 {
        return Err(Error::Tuning(format!(
            "s must satisfy 1 <= s <= m - 1, got s = {s_top}, m = {m}"
        )));
    }
    let n = sample.len() / m;
    if n == 0 {
        return Err(Error::Tuning(format!(
            "sample of size {} yields no complete block of size {m}",
            sample.len()
        )));
    }

    let count = s_top + 1;
    let mut tops = Vec::with_capacity(n * count);
    let mut buf: Vec<f64> = Vec::with_capacity(count);
    for i in 0..n {
        let chunk = &sample.values()[i * m..(i + 1) * m];
        buf.clear();
        for &v in chunk {
            if buf.len() < count {
                let at = buf.partition_point(|&b| b >= v);
                buf.insert(at, v);
            } else if v > *buf.last().unwrap() {
                buf.pop();
                let at = buf.partition_point(|&b| b >= v);
                buf.insert(at, v);
            }
        }
        tops.extend_from_slice(&buf);
    }
    Ok(BlockView { m, n, s_top, tops })
}

/// Estimator identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Hill,
    Pickands,
    Moment,
    DeVries,
    Dpr,
    Gdpr,
    Qi,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Hill => "hill",
            Method::Pickands => "pickands",
            Method::Moment => "moment",
            Method::DeVries => "devries",
            Method::Dpr => "dpr",
            Method::Gdpr => "gdpr",
            Method::Qi => "qi",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel for the generalized block-ratio estimator.
///
/// Each kernel maps the block ratio through `f` and inverts the population
/// map `h_f(alpha) = E f(W)`:
///
/// - `Power(r)`, `r > 0`: `f(x) = x^r`, `h(alpha) = alpha / (r + alpha)`;
/// - `Log`: `f(x) = -ln x`, `h(alpha) = 1 / alpha`;
/// - `NegPower(r)`, `r > 0`: `f(x) = x^-r`, `h(alpha) = alpha / (alpha - r)`,
///   valid only for `alpha > r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Power(f64),
    Log,
    NegPower(f64),
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Power(r) => write!(f, "power(r={r})"),
            Kernel::Log => write!(f, "log"),
            Kernel::NegPower(r) => write!(f, "negpower(r={r})"),
        }
    }
}

/// Tuning actually used by an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuning {
    K(usize),
    M(usize),
    MS { m: usize, s: usize },
    MKernel { m: usize, kernel: Kernel },
}

impl std::fmt::Display for Tuning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tuning::K(k) => write!(f, "k={k}"),
            Tuning::M(m) => write!(f, "m={m}"),
            Tuning::MS { m, s } => write!(f, "m={m};s={s}"),
            Tuning::MKernel { m, kernel } => write!(f, "m={m};kernel={kernel}"),
        }
    }
}

/// A point estimate on its native scale plus the converted views.
///
/// Conversions satisfy `p = 1/(1 + gamma)` and `alpha = 1/gamma = p/(1 - p)`
/// wherever defined; a pole (e.g. `gamma <= -1` for the `p` scale) leaves the
/// corresponding field unset rather than producing a junk number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    pub tuning: Tuning,
    /// Estimate on the method's native scale (`gamma`, `p`, or `h_f(alpha)`).
    pub native: f64,
    pub alpha_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
    pub p_hat: Option<f64>,
}

impl EstimateResult {
    /// Build from a gamma-scale estimate.
    fn from_gamma(method: Method, tuning: Tuning, gamma: f64) -> Self {
        EstimateResult {
            method,
            tuning,
            native: gamma,
            alpha_hat: if gamma != 0.0 {
                Some(1.0 / gamma)
            } else {
                None
            },
            gamma_hat: Some(gamma),
            p_hat: gamma_to_p(gamma),
        }
    }

    /// Build from a p-scale estimate (block-ratio mean).
    fn from_p(method: Method, tuning: Tuning, p: f64) -> Self {
        EstimateResult {
            method,
            tuning,
            native: p,
            alpha_hat: if p != 1.0 { Some(p / (1.0 - p)) } else { None },
            gamma_hat: Some((1.0 - p) / p),
            p_hat: Some(p),
        }
    }

    /// Build from an alpha-scale value recovered by a kernel inversion,
    /// keeping the raw kernel mean as the native value.
    fn from_alpha(method: Method, tuning: Tuning, native: f64, alpha: f64) -> Self {
        EstimateResult {
            method,
            tuning,
            native,
            alpha_hat: Some(alpha),
            gamma_hat: Some(1.0 / alpha),
            p_hat: Some(alpha / (alpha + 1.0)),
        }
    }
}

/// The transform `gamma -> p = 1/(1 + gamma)`, undefined at and beyond the
/// pole `gamma = -1`.
pub fn gamma_to_p(gamma: f64) -> Option<f64> {
    if gamma > -1.0 {
        Some(1.0 / (1.0 + gamma))
    } else {
        None
    }
}

fn check_k(k: usize, n: usize, min_k: usize) -> Result<()> {
    if k < min_k || k > n - 1 {
        return Err(Error::Tuning(format!(
            "k = {k} outside [{min_k}, {}] for sample of size {n}",
            n - 1
        )));
    }
    Ok(())
}

/// Hill's log-mean over the `k` upper order statistics:
/// `gamma = (1/k) sum_{i=0}^{k-1} ln(X_(N-i) / X_(N-k))`.
pub fn hill(sample: &Sample, k: usize) -> Result<EstimateResult> {
    check_k(k, sample.len(), 1)?;
    let top = sample.top_desc(k + 1);
    let pivot = top[k];
    let terms: Vec<f64> = top[..k].iter().map(|&x| (x / pivot).ln()).collect();
    let gamma = pairwise_sum(&terms) / k as f64;
    Ok(EstimateResult::from_gamma(
        Method::Hill,
        Tuning::K(k),
        gamma,
    ))
}

/// Pickands' ratio of order-statistic gaps at `k/4`, `k/2`, `k`
/// (integer floor), `gamma = ln(gap1 / gap2) / ln 2`.
pub fn pickands(sample: &Sample, k: usize) -> Result<EstimateResult> {
    check_k(k, sample.len(), 4)?;
    let top = sample.top_desc(k + 1);
    let num = top[k / 4] - top[k / 2];
    let den = top[k / 2] - top[k];
    if !(num > 0.0) || !(den > 0.0) {
        return Err(Error::Degenerate(format!(
            "tied order statistics: gaps ({num}, {den}) must both be positive"
        )));
    }
    let gamma = (num / den).ln() / std::f64::consts::LN_2;
    Ok(EstimateResult::from_gamma(
        Method::Pickands,
        Tuning::K(k),
        gamma,
    ))
}

/// Second log-moment `M_N = (1/k) sum ln^2(X_(N-i) / X_(N-k))`, shared by
/// the moment and de Vries estimators.
fn log_moments(sample: &Sample, k: usize) -> Result<(f64, f64)> {
    check_k(k, sample.len(), 2)?;
    let top = sample.top_desc(k + 1);
    let pivot = top[k];
    let logs: Vec<f64> = top[..k].iter().map(|&x| (x / pivot).ln()).collect();
    let gamma1 = pairwise_sum(&logs) / k as f64;
    let squares: Vec<f64> = logs.iter().map(|&l| l * l).collect();
    let m_n = pairwise_sum(&squares) / k as f64;
    Ok((gamma1, m_n))
}

/// Dekkers-Einmahl-de Haan moment estimator
/// `gamma = gamma_1 + 1 - (1/2) (1 - gamma_1^2 / M_N)^-1`.
pub fn moment(sample: &Sample, k: usize) -> Result<EstimateResult> {
    let (gamma1, m_n) = log_moments(sample, k)?;
    if m_n == 0.0 {
        return Err(Error::Degenerate(
            "M_N = 0 (constant upper tail)".to_string(),
        ));
    }
    let denom = 1.0 - gamma1 * gamma1 / m_n;
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "moment estimator pole: gamma_1^2 = M_N".to_string(),
        ));
    }
    let gamma = gamma1 + 1.0 - 0.5 / denom;
    Ok(EstimateResult::from_gamma(
        Method::Moment,
        Tuning::K(k),
        gamma,
    ))
}

/// De Vries' estimator `gamma = M_N / (2 gamma_1)`.
pub fn devries(sample: &Sample, k: usize) -> Result<EstimateResult> {
    let (gamma1, m_n) = log_moments(sample, k)?;
    if gamma1 == 0.0 {
        return Err(Error::Degenerate(
            "de Vries estimator pole: gamma_1 = 0".to_string(),
        ));
    }
    let gamma = m_n / (2.0 * gamma1);
    Ok(EstimateResult::from_gamma(
        Method::DeVries,
        Tuning::K(k),
        gamma,
    ))
}

/// Block-ratio estimator: `p_hat = (1/n) sum kappa_i` with
/// `kappa_i = M_i^(2) / M_i^(1)` over consecutive blocks of size `m`.
///
/// Per-block ratios are retrievable through [`block_partition`] +
/// [`BlockView::kappas`] for diagnostics.
pub fn dpr(sample: &Sample, m: usize) -> Result<EstimateResult> {
    let blocks = block_partition(sample, m, 1)?;
    let kappas = blocks.kappas();
    let p_hat = pairwise_sum(&kappas) / blocks.n() as f64;
    Ok(EstimateResult::from_p(Method::Dpr, Tuning::M(m), p_hat))
}

/// Generalized block-ratio estimator `(1/n) sum f(kappa_i)` with inversion
/// of `h_f` back to the alpha scale.
pub fn gdpr(sample: &Sample, m: usize, kernel: Kernel) -> Result<EstimateResult> {
    match kernel {
        Kernel::Power(r) | Kernel::NegPower(r) => {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Tuning(format!(
                    "kernel exponent r must be positive, got {r}"
                )));
            }
        }
        Kernel::Log => {}
    }

    let blocks = block_partition(sample, m, 1)?;
    let kappas = blocks.kappas();
    if matches!(kernel, Kernel::Log | Kernel::NegPower(_)) && kappas.contains(&0.0) {
        return Err(Error::Kernel(
            "zero block ratio under a log/negpower kernel".to_string(),
        ));
    }
    let mapped: Vec<f64> = match kernel {
        Kernel::Power(r) => kappas.iter().map(|&x| x.powf(r)).collect(),
        Kernel::Log => kappas.iter().map(|&x| -x.ln()).collect(),
        Kernel::NegPower(r) => kappas.iter().map(|&x| x.powf(-r)).collect(),
    };
    let native = pairwise_sum(&mapped) / blocks.n() as f64;
    let tuning = Tuning::MKernel { m, kernel };

    match kernel {
        Kernel::Power(r) => {
            if !(native > 0.0 && native < 1.0) {
                return Err(Error::Inversion(format!(
                    "power-kernel mean {native} outside (0, 1); h_r not invertible"
                )));
            }
            let alpha = r * native / (1.0 - native);
            Ok(EstimateResult::from_alpha(
                Method::Gdpr,
                tuning,
                native,
                alpha,
            ))
        }
        Kernel::Log => {
            if !(native > 0.0) {
                return Err(Error::Inversion(format!(
                    "log-kernel mean {native} outside (0, inf); h not invertible"
                )));
            }
            // The native value is itself the gamma-scale estimate.
            Ok(EstimateResult::from_gamma(Method::Gdpr, tuning, native))
        }
        Kernel::NegPower(r) => {
            if !(native > 1.0) {
                return Err(Error::Inversion(format!(
                    "negpower-kernel mean {native} outside (1, inf); h not invertible"
                )));
            }
            // alpha = r v / (v - 1) automatically satisfies alpha > r.
            let alpha = r * native / (native - 1.0);
            Ok(EstimateResult::from_alpha(
                Method::Gdpr,
                tuning,
                native,
                alpha,
            ))
        }
    }
}

/// Qi's block estimator: a Hill-style log mean over the top `s + 1` values
/// of each block, `gamma = (1/(n s)) sum_i sum_{j<=s} ln(M_i^(j) / M_i^(s+1))`.
///
/// With `s = 1` the inner term is `-ln kappa_i`, so the estimate coincides
/// bit for bit with [`gdpr`] under the log kernel.
pub fn qi(sample: &Sample, m: usize, s_top: usize) -> Result<EstimateResult> {
    let blocks = block_partition(sample, m, s_top)?;
    let n = blocks.n();
    let mut block_sums = Vec::with_capacity(n);
    for i in 0..n {
        let tops = blocks.block_tops(i);
        let pivot = tops[s_top];
        let mut inner = 0.0;
        for &t in &tops[..s_top] {
            inner += -(pivot / t).ln();
        }
        block_sums.push(inner);
    }
    let gamma = pairwise_sum(&block_sums) / (n * s_top) as f64;
    Ok(EstimateResult::from_gamma(
        Method::Qi,
        Tuning::MS { m, s: s_top },
        gamma,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(values: &[f64]) -> Sample {
        Sample::new(values.to_vec()).unwrap()
    }

    const LN_2: f64 = std::f64::consts::LN_2;

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![1.0]).is_err());
        assert!(Sample::new(vec![1.0, 0.0]).is_err());
        assert!(Sample::new(vec![1.0, -2.0]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        assert!(Sample::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Sample::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn top_desc_equals_sorted_prefix() {
        let s = sample(&[5.0, 1.0, 4.5, 2.0, 4.5, 9.0, 0.5, 7.0]);
        for count in 1..=8 {
            assert_eq!(s.top_desc(count), s.sorted_desc()[..count].to_vec());
        }
    }

    #[test]
    fn hill_hand_value() {
        // {1,2,4,8}, k = 2: gamma = (ln(8/2) + ln(4/2)) / 2 = 1.5 ln 2.
        let r = hill(&sample(&[1.0, 2.0, 4.0, 8.0]), 2).unwrap();
        assert!((r.native - 1.5 * LN_2).abs() < 1e-15);
        assert_eq!(r.gamma_hat, Some(r.native));
        assert!((r.p_hat.unwrap() - 1.0 / (1.0 + 1.5 * LN_2)).abs() < 1e-15);
        assert!((r.alpha_hat.unwrap() - 1.0 / (1.5 * LN_2)).abs() < 1e-15);
    }

    #[test]
    fn hill_constant_sample_is_zero() {
        let r = hill(&sample(&[3.0, 3.0, 3.0, 3.0]), 2).unwrap();
        assert_eq!(r.native, 0.0);
        assert_eq!(r.alpha_hat, None);
    }

    #[test]
    fn hill_tuning_bounds() {
        let s = sample(&[1.0, 2.0, 3.0]);
        assert!(hill(&s, 0).is_err());
        assert!(hill(&s, 3).is_err());
        assert!(hill(&s, 2).is_ok());
    }

    #[test]
    fn hill_depends_only_on_upper_tail() {
        // Replacing everything below the top k+1 order statistics with
        // smaller values must not change the estimate.
        let full = sample(&[0.1, 0.2, 0.4, 1.0, 2.0, 4.0, 8.0]);
        let trunc = sample(&[0.01, 0.02, 0.03, 1.0, 2.0, 4.0, 8.0]);
        for k in 1..=3 {
            assert_eq!(
                hill(&full, k).unwrap().native,
                hill(&trunc, k).unwrap().native
            );
            assert_eq!(
                moment(&full, k.max(2)).unwrap().native,
                moment(&trunc, k.max(2)).unwrap().native
            );
            assert_eq!(
                devries(&full, k.max(2)).unwrap().native,
                devries(&trunc, k.max(2)).unwrap().native
            );
        }
    }

    #[test]
    fn pickands_hand_value() {
        // {1..8}, k = 4: (1/ln 2) ln((7-6)/(6-4)) = -1.
        let r = pickands(&sample(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]), 4).unwrap();
        assert_eq!(r.native, -1.0);
        // p conversion hits the pole and is flagged undefined.
        assert_eq!(r.p_hat, None);
        assert_eq!(r.alpha_hat, Some(-1.0));
    }

    #[test]
    fn pickands_degenerate_gaps() {
        let tied = sample(&[2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        match pickands(&tied, 4) {
            Err(Error::Degenerate(_)) => {}
            other => panic!("expected degenerate gaps, got {other:?}"),
        }
        assert!(matches!(pickands(&tied, 3), Err(Error::Tuning(_))));
    }

    #[test]
    fn moment_hand_value() {
        // {1,2,4,8}, k = 2: M_N = 2.5 ln^2 2, gamma_1 = 1.5 ln 2,
        // gamma = gamma_1 + 1 - 0.5 / (1 - 0.9) = gamma_1 - 4.
        let r = moment(&sample(&[1.0, 2.0, 4.0, 8.0]), 2).unwrap();
        let expected = 1.5 * LN_2 + 1.0 - 0.5 / (1.0 - 0.9);
        assert!(
            (r.native - expected).abs() < 1e-12,
            "moment = {}, expected {expected}",
            r.native
        );
        // M_N itself: 2.5 ln^2 2 ~ 1.20113.
        let (_, m_n) = log_moments(&sample(&[1.0, 2.0, 4.0, 8.0]), 2).unwrap();
        assert!((m_n - 2.5 * LN_2 * LN_2).abs() < 1e-13);
    }

    #[test]
    fn moment_constant_sample_degenerate() {
        assert!(matches!(
            moment(&sample(&[2.0, 2.0, 2.0, 2.0]), 2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn devries_hand_value() {
        // M_N / (2 gamma_1) = 2.5 ln^2 2 / (3 ln 2) = (2.5/3) ln 2.
        let r = devries(&sample(&[1.0, 2.0, 4.0, 8.0]), 2).unwrap();
        assert!((r.native - 2.5 / 3.0 * LN_2).abs() < 1e-14);
        assert!(matches!(
            devries(&sample(&[2.0, 2.0, 2.0, 2.0]), 2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn dpr_hand_value() {
        // {4,2,8,1}, m = 2: kappas {0.5, 0.125}, p_hat = 0.3125.
        let r = dpr(&sample(&[4.0, 2.0, 8.0, 1.0]), 2).unwrap();
        assert_eq!(r.native, 0.3125);
        assert_eq!(r.p_hat, Some(0.3125));
        assert!((r.alpha_hat.unwrap() - 0.3125 / 0.6875).abs() < 1e-16);
        let blocks = block_partition(&sample(&[4.0, 2.0, 8.0, 1.0]), 2, 1).unwrap();
        assert_eq!(blocks.kappas(), vec![0.5, 0.125]);
    }

    #[test]
    fn dpr_tie_convention() {
        // Tied block maxima give kappa = 1.
        let blocks = block_partition(&sample(&[5.0, 5.0, 3.0, 1.0]), 2, 1).unwrap();
        assert_eq!(blocks.kappas(), vec![1.0, 1.0 / 3.0]);
        // All-tied sample: p_hat = 1, alpha conversion undefined.
        let r = dpr(&sample(&[5.0, 5.0, 5.0, 5.0]), 2).unwrap();
        assert_eq!(r.native, 1.0);
        assert_eq!(r.alpha_hat, None);
        assert_eq!(r.gamma_hat, Some(0.0));
    }

    #[test]
    fn dpr_tuning_errors() {
        let s = sample(&[1.0, 2.0, 3.0]);
        assert!(matches!(dpr(&s, 1), Err(Error::Tuning(_))));
        assert!(matches!(dpr(&s, 4), Err(Error::Tuning(_))));
    }

    #[test]
    fn gdpr_log_hand_value() {
        // {4,2,8,1}, m = 2, log kernel: (-ln 0.5 - ln 0.125)/2 = 2 ln 2 = ln 4.
        let r = gdpr(&sample(&[4.0, 2.0, 8.0, 1.0]), 2, Kernel::Log).unwrap();
        assert!((r.native - 4.0f64.ln()).abs() < 1e-15);
        assert!((r.native - 1.3862943611198906).abs() < 1e-15);
    }

    #[test]
    fn gdpr_power_one_equals_dpr() {
        let s = sample(&[4.0, 2.0, 8.0, 1.0, 9.0, 3.0, 0.5, 2.5]);
        let a = gdpr(&s, 2, Kernel::Power(1.0)).unwrap();
        let b = dpr(&s, 2).unwrap();
        assert_eq!(a.native, b.native);
    }

    #[test]
    fn gdpr_inversions() {
        let s = sample(&[4.0, 2.0, 8.0, 1.0]);
        // power r = 1: v = 0.3125, alpha = v/(1-v).
        let r = gdpr(&s, 2, Kernel::Power(1.0)).unwrap();
        assert!((r.alpha_hat.unwrap() - 0.3125 / 0.6875).abs() < 1e-15);
        // log: alpha = 1/v.
        let r = gdpr(&s, 2, Kernel::Log).unwrap();
        assert!((r.alpha_hat.unwrap() - 1.0 / 4.0f64.ln()).abs() < 1e-15);
        // negpower r = 1: v = (2 + 8)/2 = 5, alpha = v/(v-1) = 1.25 > r.
        let r = gdpr(&s, 2, Kernel::NegPower(1.0)).unwrap();
        assert_eq!(r.native, 5.0);
        assert!((r.alpha_hat.unwrap() - 1.25).abs() < 1e-15);
        assert!(r.alpha_hat.unwrap() > 1.0);
    }

    #[test]
    fn gdpr_inversion_errors_on_tied_data() {
        let tied = sample(&[5.0, 5.0, 5.0, 5.0]);
        // v = 1 for the power kernel: outside (0,1).
        assert!(matches!(
            gdpr(&tied, 2, Kernel::Power(1.0)),
            Err(Error::Inversion(_))
        ));
        // v = 0 for the log kernel.
        assert!(matches!(
            gdpr(&tied, 2, Kernel::Log),
            Err(Error::Inversion(_))
        ));
        // v = 1 for the negpower kernel.
        assert!(matches!(
            gdpr(&tied, 2, Kernel::NegPower(0.5)),
            Err(Error::Inversion(_))
        ));
        // Bad exponent.
        assert!(matches!(
            gdpr(&tied, 2, Kernel::Power(0.0)),
            Err(Error::Tuning(_))
        ));
        assert!(matches!(
            gdpr(&tied, 2, Kernel::NegPower(-1.0)),
            Err(Error::Tuning(_))
        ));
    }

    #[test]
    fn qi_hand_value_and_log_identity() {
        let s = sample(&[4.0, 2.0, 8.0, 1.0]);
        let r = qi(&s, 2, 1).unwrap();
        assert!((r.native - 4.0f64.ln()).abs() < 1e-15);
        // Bitwise identical to the log-kernel gdpr.
        assert_eq!(r.native, gdpr(&s, 2, Kernel::Log).unwrap().native);
    }

    #[test]
    fn qi_tuning_bounds() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(matches!(qi(&s, 3, 3), Err(Error::Tuning(_))));
        assert!(matches!(qi(&s, 3, 0), Err(Error::Tuning(_))));
        assert!(qi(&s, 3, 2).is_ok());
    }

    #[test]
    fn block_partition_discards_remainder() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let b = block_partition(&s, 2, 1).unwrap();
        assert_eq!(b.n(), 3);
        // Observation 7.0 is discarded.
        assert_eq!(b.block_tops(2), &[6.0, 5.0]);
        // N = m gives a single block.
        let b = block_partition(&sample(&[1.0, 2.0]), 2, 1).unwrap();
        assert_eq!(b.n(), 1);
    }

    #[test]
    fn block_tops_match_full_sort() {
        // Deterministic pseudo-random instances; the single-pass selection
        // must agree with a per-block sort.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) + 1e-9
        };
        for trial in 0..1000 {
            let n_obs = 6 + (trial % 40);
            let m = 2 + (trial % 7);
            if n_obs / m == 0 {
                continue;
            }
            let values: Vec<f64> = (0..n_obs).map(|_| next()).collect();
            let s = Sample::new(values.clone()).unwrap();
            let s_top = 1 + (trial % (m - 1).max(1)).min(m - 2);
            let b = match block_partition(&s, m, s_top) {
                Ok(b) => b,
                Err(_) => continue,
            };
            for i in 0..b.n() {
                let mut chunk = values[i * m..(i + 1) * m].to_vec();
                chunk.sort_unstable_by(|a, x| x.total_cmp(a));
                assert_eq!(
                    b.block_tops(i),
                    &chunk[..s_top + 1],
                    "trial {trial}, block {i}"
                );
            }
        }
    }

    #[test]
    fn within_block_permutation_invariance() {
        let orig = sample(&[4.0, 2.0, 7.0, 8.0, 1.0, 3.0]);
        let perm = sample(&[2.0, 4.0, 7.0, 3.0, 8.0, 1.0]); // blocks permuted internally
        assert_eq!(dpr(&orig, 3).unwrap().native, dpr(&perm, 3).unwrap().native);
        assert_eq!(
            qi(&orig, 3, 2).unwrap().native,
            qi(&perm, 3, 2).unwrap().native
        );
    }

    #[test]
    fn power_kernel_monotone_in_r() {
        let s = sample(&[4.0, 2.0, 8.0, 1.0, 9.0, 3.0, 0.5, 2.5, 6.0, 5.5]);
        let rs = [0.25, 0.5, 1.0, 2.0, 4.0];
        let mut prev = f64::INFINITY;
        for &r in &rs {
            let v = gdpr(&s, 2, Kernel::Power(r)).unwrap().native;
            assert!(v <= prev, "kernel mean must be nonincreasing in r");
            prev = v;
        }
    }

    // Monte Carlo sanity checks against the population values the block
    // estimators target on an exact Pareto tail.

    #[test]
    fn dpr_pareto_mean_within_three_sigma() {
        // E kappa = p = 1/2 exactly for Pareto(alpha = 1); sigma^2 = 1/12.
        let d = crate::distributions::HallDistribution::pareto(1.0, 1.0).unwrap();
        let n_blocks = 100_000;
        let s = d.sample(271828, 2 * n_blocks).unwrap();
        let p_hat = dpr(&s, 2).unwrap().native;
        let band = 3.0 * (1.0 / 12.0f64 / n_blocks as f64).sqrt();
        assert!(
            (p_hat - 0.5).abs() <= band,
            "p_hat = {p_hat} outside 0.5 +- {band}"
        );
    }

    #[test]
    fn gdpr_power_pareto_mean_matches_h_r() {
        // Pareto(alpha = 2), r = 1/2: E kappa^r = alpha/(r + alpha) = 0.8.
        let d = crate::distributions::HallDistribution::pareto(1.0, 2.0).unwrap();
        let n_blocks = 100_000;
        let s = d.sample(314159, 2 * n_blocks).unwrap();
        let v = gdpr(&s, 2, Kernel::Power(0.5)).unwrap().native;
        // Var(kappa^r) = h_2r - h_r^2 = 2/3 - 0.64 for alpha = 2, r = 1/2.
        let var = 2.0 / 3.0 - 0.64;
        let band = 3.0 * (var / n_blocks as f64).sqrt();
        assert!(
            (v - 0.8).abs() <= band,
            "kernel mean {v} outside 0.8 +- {band}"
        );
        assert!((gdpr(&s, 2, Kernel::Power(0.5)).unwrap().alpha_hat.unwrap() - 2.0).abs() < 0.05);
    }

    #[test]
    fn qi_pareto_recovers_gamma() {
        // m = 50, s = 5 on a million Pareto(alpha = 1) observations.
        let d = crate::distributions::HallDistribution::pareto(1.0, 1.0).unwrap();
        let s = d.sample(141421, 1_000_000).unwrap();
        let gamma = qi(&s, 50, 5).unwrap().native;
        let se = 1.0 / (20_000.0f64 * 5.0).sqrt();
        assert!(
            (gamma - 1.0).abs() <= 3.0 * se,
            "qi estimate {gamma} vs 1 +- {}",
            3.0 * se
        );
    }

    #[test]
    fn devries_pareto_recovers_gamma() {
        let d = crate::distributions::HallDistribution::pareto(1.0, 1.0).unwrap();
        let s = d.sample(173205, 100_000).unwrap();
        let k = 5000;
        let gamma = devries(&s, k).unwrap().native;
        // Limit variance 2/alpha^2 over k order statistics.
        let band = 3.0 * (2.0 / k as f64).sqrt();
        assert!(
            (gamma - 1.0).abs() <= band,
            "devries {gamma} vs 1 +- {band}"
        );
    }
}
