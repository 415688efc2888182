//! Closed-form asymptotics: the exact bias constant of the block-ratio
//! estimator, optimal tunings, minimal asymptotic MSEs, and the ratio of
//! minimal MSEs against the four classical order-statistic estimators.

use crate::distributions::HallDistribution;
use crate::error::{Error, Result};
use crate::math::gamma;

/// Second-order tail parameters `(alpha, beta, c1, c2)` with the derived
/// views `gamma = 1/alpha`, `rho = alpha - beta`, `zeta = (beta - alpha)/alpha`
/// and `p = alpha/(alpha + 1)`.
///
/// `beta` must be finite here: the pure-Pareto sentinel (`beta = inf`)
/// has no second-order regime and is rejected rather than treated as a
/// silent limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderParams {
    alpha: f64,
    beta: f64,
    c1: f64,
    c2: f64,
}

/// The `(gamma, rho)` view of the second-order parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamViews {
    pub gamma: f64,
    pub rho: f64,
    pub zeta: f64,
    pub p: f64,
}

impl SecondOrderParams {
    pub fn new(alpha: f64, beta: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(beta > alpha) || !beta.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "beta must be finite and exceed alpha, got {beta}"
            )));
        }
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "c1 must be positive, got {c1}"
            )));
        }
        if !c2.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "c2 must be finite, got {c2}"
            )));
        }
        Ok(SecondOrderParams {
            alpha,
            beta,
            c1,
            c2,
        })
    }

    /// Inverse constructor from the `(gamma, rho)` parametrization:
    /// `alpha = 1/gamma`, `beta = alpha - rho`.
    pub fn from_gamma_rho(gamma: f64, rho: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(rho < 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("rho must be negative, got {rho}")));
        }
        let alpha = 1.0 / gamma;
        Self::new(alpha, alpha - rho, c1, c2)
    }

    /// Adopt the constants of a sampling model; rejects the pure-Pareto
    /// sentinel because `zeta` would be infinite.
    pub fn from_distribution(d: &HallDistribution) -> Result<Self> {
        Self::new(d.alpha(), d.beta(), d.c1(), d.c2())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn zeta(&self) -> f64 {
        (self.beta - self.alpha) / self.alpha
    }

    pub fn p(&self) -> f64 {
        self.alpha / (self.alpha + 1.0)
    }

    pub fn views(&self) -> ParamViews {
        ParamViews {
            gamma: 1.0 / self.alpha,
            rho: self.alpha - self.beta,
            zeta: self.zeta(),
            p: self.p(),
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Asymptotics of the block-ratio estimator under a second-order tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DprAsymptotics {
    pub zeta: f64,
    /// Exact bias constant: the bias at block size `m` behaves like
    /// `chi m^-zeta`.
    pub chi: f64,
    /// Limit variance of a single block ratio,
    /// `sigma^2 = alpha / ((alpha+1)^2 (alpha+2))`.
    pub sigma2: f64,
    /// Mean of the limiting normal law under the optimal block size,
    /// `mu = sigma (2 zeta)^(-1/2) sgn(chi)`.
    pub mu: f64,
    /// Real-valued optimal block size; `None` in the pure-Pareto regime
    /// (`chi = 0`), where no bias-variance tradeoff exists.
    pub m_opt_real: Option<f64>,
    /// `m_opt_real` rounded to the nearest integer, at least 2.
    pub m_opt_int: Option<u64>,
    /// Minimal asymptotic MSE at the optimal block size.
    pub amse: Option<f64>,
}

impl DprAsymptotics {
    pub fn is_degenerate(&self) -> bool {
        self.chi == 0.0
    }
}

/// Variance constant of a single block ratio.
pub fn dpr_sigma2(alpha: f64) -> f64 {
    alpha / ((alpha + 1.0) * (alpha + 1.0) * (alpha + 2.0))
}

/// Exact bias constant
/// `chi = c2 beta zeta Gamma(zeta + 1) / (c1^(zeta+1) (alpha+1) (beta+1))`.
pub fn dpr_chi(params: &SecondOrderParams) -> f64 {
    let zeta = params.zeta();
    params.c2 * params.beta * zeta * gamma(zeta + 1.0)
        / (params.c1.powf(zeta + 1.0) * (params.alpha + 1.0) * (params.beta + 1.0))
}

/// Bias constant, optimal block size and minimal MSE for the block-ratio
/// estimator at sample size `n_total`.
pub fn dpr_asymptotics(params: &SecondOrderParams, n_total: u64) -> Result<DprAsymptotics> {
    if n_total < 4 {
        return Err(Error::InvalidParameters(format!(
            "n_total must be >= 4, got {n_total}"
        )));
    }
    let zeta = params.zeta();
    let chi = dpr_chi(params);
    let sigma2 = dpr_sigma2(params.alpha);
    let sigma = sigma2.sqrt();
    let mu = sigma / (2.0 * zeta).sqrt() * sgn(chi);

    if chi == 0.0 {
        return Ok(DprAsymptotics {
            zeta,
            chi,
            sigma2,
            mu,
            m_opt_real: None,
            m_opt_int: None,
            amse: None,
        });
    }

    let n = n_total as f64;
    let exponent = 1.0 / (1.0 + 2.0 * zeta);
    let m_opt = (2.0 * zeta * chi * chi / sigma2).powf(exponent) * n.powf(exponent);
    let m_opt_int = (m_opt.round() as u64).max(2);
    let amse = (1.0 + 2.0 * zeta)
        * (chi * chi * sigma2.powf(2.0 * zeta)
            / ((2.0 * zeta).powf(2.0 * zeta) * n.powf(2.0 * zeta)))
        .powf(exponent);

    Ok(DprAsymptotics {
        zeta,
        chi,
        sigma2,
        mu,
        m_opt_real: Some(m_opt),
        m_opt_int: Some(m_opt_int),
        amse: Some(amse),
    })
}

/// The four classical order-statistic estimators, in the customary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalId {
    Hill,
    Pickands,
    Moment,
    DeVries,
}

impl ClassicalId {
    pub const ALL: [ClassicalId; 4] = [
        ClassicalId::Hill,
        ClassicalId::Pickands,
        ClassicalId::Moment,
        ClassicalId::DeVries,
    ];

    /// Conventional index 1..=4.
    pub fn index(&self) -> usize {
        match self {
            ClassicalId::Hill => 1,
            ClassicalId::Pickands => 2,
            ClassicalId::Moment => 3,
            ClassicalId::DeVries => 4,
        }
    }

    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            1 => Ok(ClassicalId::Hill),
            2 => Ok(ClassicalId::Pickands),
            3 => Ok(ClassicalId::Moment),
            4 => Ok(ClassicalId::DeVries),
            _ => Err(Error::InvalidParameters(format!(
                "classical estimator index {j} not in 1..=4"
            ))),
        }
    }
}

/// Asymptotic constants for one classical estimator: bias coefficient
/// `D_j`, limit variance `sigma_j^2` of the gamma-scale CLT, the leading
/// term of the optimal number of order statistics, and the minimal
/// asymptotic MSE on the `p` scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalAsymptotics {
    pub d_coeff: f64,
    pub sigma2: f64,
    /// Leading-order optimal `k` evaluated at the given sample size
    /// (real-valued). `None` when the estimator is bias-free to second
    /// order here (`D_j = 0`) or the tail has no second term (`c2 = 0`).
    pub k_opt: Option<f64>,
    /// Minimal asymptotic MSE of `p_(N,k) = 1/(1 + gamma_(N,k))`.
    pub amse_p: Option<f64>,
    /// Coefficient of the second-order auxiliary function:
    /// `A(t) ~ a_coeff t^-zeta` with `a_coeff = -(zeta/alpha) c2 / c1^(beta/alpha)`.
    pub a_coeff: f64,
}

impl ClassicalAsymptotics {
    pub fn is_degenerate(&self) -> bool {
        self.k_opt.is_none()
    }

    /// Leading-order value of the auxiliary function `A(t)`.
    pub fn a_of(&self, zeta: f64, t: f64) -> f64 {
        self.a_coeff * t.powf(-zeta)
    }
}

fn d_coeff(id: ClassicalId, alpha: f64, zeta: f64) -> f64 {
    match id {
        ClassicalId::Hill => 1.0 / (1.0 + zeta),
        ClassicalId::Pickands => {
            let two_inv_alpha = 2.0f64.powf(1.0 / alpha);
            1.0 / ((two_inv_alpha - 1.0) * std::f64::consts::LN_2)
                * ((1.0 - 2.0f64.powf(-zeta)) / zeta)
                * (2.0f64.powf(1.0 / alpha - zeta) - 1.0)
        }
        ClassicalId::Moment => 1.0 / (1.0 + zeta) - alpha * zeta / ((1.0 + zeta) * (1.0 + zeta)),
        ClassicalId::DeVries => 1.0 / ((1.0 + zeta) * (1.0 + zeta)),
    }
}

fn sigma2_coeff(id: ClassicalId, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    match id {
        ClassicalId::Hill => 1.0 / a2,
        ClassicalId::Pickands => {
            let two_inv_alpha = 2.0f64.powf(1.0 / alpha);
            (1.0 + 2.0f64.powf(2.0 / alpha + 1.0))
                / (a2
                    * (two_inv_alpha - 1.0)
                    * (two_inv_alpha - 1.0)
                    * std::f64::consts::LN_2
                    * std::f64::consts::LN_2)
        }
        ClassicalId::Moment => (1.0 + a2) / a2,
        ClassicalId::DeVries => 2.0 / a2,
    }
}

/// Optimal-`k` constants and minimal `p`-scale MSE for estimator `id` at
/// sample size `n_total`.
pub fn classical_asymptotics(
    id: ClassicalId,
    params: &SecondOrderParams,
    n_total: u64,
) -> Result<ClassicalAsymptotics> {
    if n_total < 4 {
        return Err(Error::InvalidParameters(format!(
            "n_total must be >= 4, got {n_total}"
        )));
    }
    let alpha = params.alpha;
    let beta = params.beta;
    let zeta = params.zeta();
    let d = d_coeff(id, alpha, zeta);
    let s2 = sigma2_coeff(id, alpha);
    let a_coeff = -(zeta / alpha) * params.c2 / params.c1.powf(beta / alpha);

    if d == 0.0 || params.c2 == 0.0 {
        return Ok(ClassicalAsymptotics {
            d_coeff: d,
            sigma2: s2,
            k_opt: None,
            amse_p: None,
            a_coeff,
        });
    }

    // From  lim k A^2(N/k) = sigma_j^2 / (2 zeta D_j^2)  with
    // A(t) = a t^-zeta:  k^(1+2 zeta) = sigma_j^2 N^(2 zeta) / (2 zeta D_j^2 a^2).
    let n = n_total as f64;
    let exponent = 1.0 / (1.0 + 2.0 * zeta);
    let k_const = s2 / (2.0 * zeta * d * d * a_coeff * a_coeff);
    let k_opt = k_const.powf(exponent) * n.powf(2.0 * zeta * exponent);

    let p_factor = (alpha / (alpha + 1.0)).powi(4);
    let amse_p = p_factor * (2.0 * beta - alpha) / (2.0 * (beta - alpha)) * s2 / k_opt;

    Ok(ClassicalAsymptotics {
        d_coeff: d,
        sigma2: s2,
        k_opt: Some(k_opt),
        amse_p: Some(amse_p),
        a_coeff,
    })
}

/// Ratio of minimal asymptotic MSEs, block-ratio estimator over classical
/// estimator `j`; values below 1 mean the block-ratio estimator dominates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rmmse {
    Value(f64),
    /// The classical estimator is bias-free to second order on this locus
    /// (its minimal MSE collapses), so the ratio diverges.
    Degenerate,
}

impl Rmmse {
    pub fn value(&self) -> Option<f64> {
        match self {
            Rmmse::Value(v) => Some(*v),
            Rmmse::Degenerate => None,
        }
    }
}

/// `eta(alpha, beta) = (beta (alpha+1) / (alpha (beta+1)))^2
///   ((alpha+1)^2 / (alpha (alpha+2)))^(2 zeta)`.
fn eta(alpha: f64, beta: f64, zeta: f64) -> f64 {
    let first = beta * (alpha + 1.0) / (alpha * (beta + 1.0));
    let second = (alpha + 1.0) * (alpha + 1.0) / (alpha * (alpha + 2.0));
    first * first * second.powf(2.0 * zeta)
}

/// Closed-form ratio of minimal asymptotic MSEs against classical
/// estimator `id`; depends on `(alpha, beta)` only.
pub fn rmmse(id: ClassicalId, alpha: f64, beta: f64) -> Result<Rmmse> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(beta > alpha) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "beta must be finite and exceed alpha, got {beta}"
        )));
    }
    let zeta = (beta - alpha) / alpha;
    let e = eta(alpha, beta, zeta);
    let exponent = 1.0 / (1.0 + 2.0 * zeta);
    let g2z = gamma(2.0 + zeta);

    let v = match id {
        ClassicalId::Hill => (e * g2z * g2z).powf(exponent),
        ClassicalId::Pickands => {
            let pick = 2.0f64.powf(1.0 / alpha - zeta) - 1.0;
            if pick == 0.0 {
                return Ok(Rmmse::Degenerate);
            }
            let two_inv_alpha = 2.0f64.powf(1.0 / alpha);
            let g1z = gamma(1.0 + zeta);
            let outer = (two_inv_alpha - 1.0)
                * (two_inv_alpha - 1.0)
                * std::f64::consts::LN_2
                * std::f64::consts::LN_2;
            let one_m = 1.0 - 2.0f64.powf(-zeta);
            let inner = e * zeta * zeta * g1z * g1z
                / (one_m
                    * one_m
                    * (2.0f64.powf(2.0 / alpha + 1.0) + 1.0).powf(2.0 * zeta)
                    * pick
                    * pick);
            outer * inner.powf(exponent)
        }
        ClassicalId::Moment => {
            let mom = 1.0 + zeta - alpha * zeta;
            if mom == 0.0 {
                return Ok(Rmmse::Degenerate);
            }
            let inner = e * (1.0 + zeta) * (1.0 + zeta) * g2z * g2z
                / ((1.0 + alpha * alpha).powf(2.0 * zeta) * mom * mom);
            inner.powf(exponent)
        }
        ClassicalId::DeVries => {
            let inner = e * (1.0 + zeta) * (1.0 + zeta) * g2z * g2z / 2.0f64.powf(2.0 * zeta);
            inner.powf(exponent)
        }
    };
    Ok(Rmmse::Value(v))
}
