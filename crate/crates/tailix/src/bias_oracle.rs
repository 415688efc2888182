//! Ground truth for the finite-block mean of the block ratio, free of
//! Monte Carlo noise.
//!
//! The mean block ratio at block size `m` admits the exact form
//!
//! ```text
//! E kappa = 1 - m * I,
//! I = integral over the support of F^(m-1)(x) *
//!     [c1 a/(a+1) x^-(a+1) + c2 b/(b+1) x^-(b+1)] dx
//! ```
//!
//! (the bracket is the closed form of `int_x^inf t^-1 dF(t)` for the exact
//! two-term model). Substituting `v = S(x)` maps the improper integral onto
//! `(0, 1]` with a bounded integrand,
//!
//! ```text
//! I = int_0^1 (1 - v)^(m-1) w(v) dv,
//! w(v) = (A + B z) / (C + D z),   z = x(v)^-(beta-alpha),
//! ```
//!
//! which an adaptive 15-point Gauss-Kronrod scheme integrates to the
//! requested tolerance. `(1-v)^(m-1)` is evaluated as
//! `exp((m-1) ln_1p(-v))` so large `m` does not lose precision.

use crate::distributions::HallDistribution;
use crate::error::{Error, Result};
use rayon::prelude::*;
use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Tolerances and budget for the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 100_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameters(
                "quadrature tolerances must be positive".to_string(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameters(
                "max_subdivisions must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK values).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

struct GkEstimate {
    value: f64,
    err: f64,
}

/// One Gauss-Kronrod 15 pass over `[a, b]` with the QUADPACK error rescale.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> GkEstimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv1 = [0.0f64; 7];
    let mut fv2 = [0.0f64; 7];
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    for (j, wg) in WG.iter().enumerate().take(3) {
        let jtw = j * 2 + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += wg * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    res_gauss += WG[3] * f_center;

    for j in 0..4 {
        let jtwm1 = j * 2;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_kronrod += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    let value = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK's conservative error rescaling.
    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    GkEstimate { value, err }
}

struct Segment {
    err: f64,
    seq: u64,
    a: f64,
    b: f64,
    value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.seq == other.seq
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; sequence number breaks ties deterministically.
        self.err
            .total_cmp(&other.err)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Adaptive integration of `f` over consecutive segments cut at `cuts`.
fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    cuts: &[f64],
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for w in cuts.windows(2) {
        let est = gk15(f, w[0], w[1]);
        heap.push(Segment {
            err: est.err,
            seq,
            a: w[0],
            b: w[1],
            value: est.value,
        });
        seq += 1;
    }

    let mut splits = 0usize;
    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let err_sum: f64 = heap.iter().map(|s| s.err).sum();
        if err_sum <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok((total, err_sum));
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::QuadratureFailure(format!(
                "error {err_sum:e} above tolerance after {splits} subdivisions"
            )));
        }
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer splittable in f64; accept its estimate.
            let mut frozen = worst;
            frozen.err = 0.0;
            heap.push(frozen);
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let est = gk15(f, a, b);
            heap.push(Segment {
                err: est.err,
                seq,
                a,
                b,
                value: est.value,
            });
            seq += 1;
        }
        splits += 1;
    }
}

/// Exact mean of the block ratio at block size `m`, with the quadrature's
/// error estimate (on the mean) as the second component.
pub fn exact_mean_dpr_with_error(
    d: &HallDistribution,
    m: usize,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    spec.validate()?;
    if m < 2 {
        return Err(Error::Tuning(format!(
            "block size m must be at least 2, got {m}"
        )));
    }

    let alpha = d.alpha();
    let beta = d.beta();
    let c1 = d.c1();
    let c2 = d.c2();
    let a_num = c1 * alpha / (alpha + 1.0);
    let c_den = c1 * alpha;
    let (b_num, d_den) = if c2 == 0.0 {
        (0.0, 0.0)
    } else {
        (c2 * beta / (beta + 1.0), c2 * beta)
    };

    let mf = m as f64;
    let failed: RefCell<Option<String>> = RefCell::new(None);
    let integrand = |v: f64| -> f64 {
        if v <= 0.0 || v >= 1.0 {
            // (1-v)^(m-1) vanishes at v = 1; v = 0 contributes the bounded
            // limit but carries zero width.
            if v >= 1.0 {
                return 0.0;
            }
        }
        let weight = ((mf - 1.0) * (-v).ln_1p()).exp();
        let w = if c2 == 0.0 {
            1.0 / (alpha + 1.0)
        } else {
            match d.quantile(v) {
                Ok(x) => {
                    let z = x.powf(alpha - beta); // x^-(beta-alpha)
                    (a_num + b_num * z) / (c_den + d_den * z)
                }
                Err(e) => {
                    *failed.borrow_mut() = Some(e.to_string());
                    return 0.0;
                }
            }
        };
        weight * w
    };

    // Seed the subdivision with a dyadic grading on the 1/m scale where the
    // Beta(1, m) weight carries its mass, so adaptivity cannot settle on a
    // spuriously small estimate for large m.
    let mut cuts = vec![0.0];
    let mut c = 1.0 / mf;
    while c < 1.0 {
        cuts.push(c);
        c *= 2.0;
    }
    cuts.push(1.0);

    let (integral, err) = integrate_adaptive(&integrand, &cuts, spec)?;
    if let Some(msg) = failed.into_inner() {
        return Err(Error::QuadratureFailure(format!(
            "integrand evaluation failed: {msg}"
        )));
    }
    Ok((1.0 - mf * integral, mf * err))
}

/// Exact mean of the block ratio at block size `m`.
pub fn exact_mean_dpr(d: &HallDistribution, m: usize, spec: &QuadratureSpec) -> Result<f64> {
    exact_mean_dpr_with_error(d, m, spec).map(|(v, _)| v)
}

/// One row of a bias table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint {
    pub m: usize,
    /// Bias `gamma_m = E kappa - p` at block size `m`.
    pub gamma_m: f64,
    /// `m^zeta gamma_m`, which converges to the bias constant `chi`.
    /// Zero for a pure Pareto tail, whose bias vanishes identically.
    pub normalized: f64,
}

/// Bias and normalized bias over a list of block sizes. Independent block
/// sizes are evaluated in parallel; the output keeps the input order.
pub fn bias_curve(
    d: &HallDistribution,
    m_list: &[usize],
    spec: &QuadratureSpec,
) -> Result<Vec<BiasPoint>> {
    let p = d.p();
    let zeta = if d.is_pure_pareto() {
        f64::NAN
    } else {
        (d.beta() - d.alpha()) / d.alpha()
    };
    m_list
        .par_iter()
        .map(|&m| {
            let mean = exact_mean_dpr(d, m, spec)?;
            let gamma_m = mean - p;
            let normalized = if d.is_pure_pareto() {
                0.0
            } else {
                (m as f64).powf(zeta) * gamma_m
            };
            Ok(BiasPoint {
                m,
                gamma_m,
                normalized,
            })
        })
        .collect()
}
