//! Exact two-term heavy-tailed model: survival `S(x) = c1 x^-alpha + c2 x^-beta`
//! on a support `[x0, inf)` chosen so that `S(x0) = 1`.
//!
//! The model is exact (no remainder term), so every theoretical constant
//! derived elsewhere in the crate is directly comparable against samples
//! drawn from it and against the quadrature oracle.

use crate::error::{Error, Result};
use crate::estimators::{Provenance, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Absolute tolerance on `S(x) - u` accepted by the root finders.
const ROOT_ABS_TOL: f64 = 1e-13;
/// Bisection iteration cap.
const MAX_BISECT: usize = 200;
/// Newton-polish iteration cap.
const MAX_NEWTON: usize = 50;

/// Heavy-tailed distribution with survival function
/// `S(x) = c1 x^-alpha + c2 x^-beta`, `0 < alpha < beta`.
///
/// A pure Pareto tail is represented by `c2 = 0` with `beta = +inf`
/// (see [`HallDistribution::pareto`]). `c2` may be negative as long as a
/// support start `x0` with `S(x0) = 1` exists on the region where `S` is
/// strictly decreasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HallDistribution {
    c1: f64,
    c2: f64,
    alpha: f64,
    beta: f64,
    x0: f64,
}

impl HallDistribution {
    /// Build the model and derive the support start `x0`.
    ///
    /// For `c2 < 0` the survival function is only decreasing beyond
    /// `x_mono = (-c2 beta / (c1 alpha))^(1/(beta-alpha))`; `x0` is taken on
    /// that branch and construction fails with [`Error::InfeasibleTail`] if
    /// the total mass there never reaches 1.
    pub fn new(c1: f64, c2: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "c1 must be positive, got {c1}"
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(beta > alpha) {
            return Err(Error::InvalidParameters(format!(
                "beta must exceed alpha, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if !c2.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "c2 must be finite, got {c2}"
            )));
        }
        if beta.is_infinite() && c2 != 0.0 {
            return Err(Error::InvalidParameters(
                "beta = inf requires c2 = 0 (pure Pareto)".to_string(),
            ));
        }

        let mut d = HallDistribution {
            c1,
            c2,
            alpha,
            beta,
            x0: f64::NAN,
        };
        d.x0 = d.solve_support_start()?;
        Ok(d)
    }

    /// Pure Pareto tail `S(x) = c1 x^-alpha`, i.e. `c2 = 0`, `beta = +inf`.
    pub fn pareto(c1: f64, alpha: f64) -> Result<Self> {
        Self::new(c1, 0.0, alpha, f64::INFINITY)
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Support start: the unique `x0` with `S(x0) = 1` on the monotone branch.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// True when the model is a pure Pareto tail (`c2 = 0`).
    pub fn is_pure_pareto(&self) -> bool {
        self.c2 == 0.0
    }

    /// `p = alpha / (alpha + 1)`, the population value targeted by the
    /// block-ratio estimator.
    pub fn p(&self) -> f64 {
        self.alpha / (self.alpha + 1.0)
    }

    /// `x^-beta` from an already computed `xa = x^-alpha`, using cheap
    /// integer powers when `beta/alpha` is a small integer.
    #[inline]
    fn pow_beta(&self, x: f64, xa: f64) -> f64 {
        let ratio = self.beta / self.alpha;
        if ratio == 2.0 {
            xa * xa
        } else if ratio == 3.0 {
            xa * xa * xa
        } else if ratio == 4.0 {
            let s = xa * xa;
            s * s
        } else {
            x.powf(-self.beta)
        }
    }

    /// Raw survival value without the support check (used internally on
    /// probe points that are known to be at or beyond `x0`).
    fn survival_raw(&self, x: f64) -> f64 {
        let xa = if self.alpha == 1.0 {
            1.0 / x
        } else {
            x.powf(-self.alpha)
        };
        if self.c2 == 0.0 {
            return self.c1 * xa;
        }
        self.c1 * xa + self.c2 * self.pow_beta(x, xa)
    }

    fn density_raw(&self, x: f64) -> f64 {
        let xa = if self.alpha == 1.0 {
            1.0 / x
        } else {
            x.powf(-self.alpha)
        };
        let xa1 = xa / x;
        if self.c2 == 0.0 {
            return self.c1 * self.alpha * xa1;
        }
        let xb1 = self.pow_beta(x, xa) / x;
        self.c1 * self.alpha * xa1 + self.c2 * self.beta * xb1
    }

    /// Survival `S(x)` for `x >= x0`, clamped into `[0, 1]`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if !(x >= self.x0) {
            return Err(Error::Domain(format!(
                "x = {x} below support start x0 = {}",
                self.x0
            )));
        }
        Ok(self.survival_raw(x).clamp(0.0, 1.0))
    }

    /// CDF `F(x) = 1 - S(x)` for `x >= x0`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival(x)?)
    }

    /// Density `f(x) = c1 alpha x^-(alpha+1) + c2 beta x^-(beta+1)` for `x >= x0`.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x >= self.x0) {
            return Err(Error::Domain(format!(
                "x = {x} below support start x0 = {}",
                self.x0
            )));
        }
        Ok(self.density_raw(x))
    }

    /// Upper quantile: the `x` with `survival(x) = u`, `0 < u <= 1`.
    ///
    /// Closed form for the pure Pareto case and for `beta = 2 alpha`
    /// (quadratic in `x^-alpha`, rationalized so small `u` stays stable);
    /// otherwise a bracketed bisection with Newton polish, accepting
    /// `|S(x) - u| <= min(1e-13, 1e-12 u)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::Domain(format!("u must lie in (0, 1], got {u}")));
        }
        self.quantile_inner(u)
    }

    #[inline]
    fn quantile_inner(&self, u: f64) -> Result<f64> {
        if self.c2 == 0.0 {
            let r = self.c1 / u;
            return Ok(if self.alpha == 1.0 {
                r
            } else {
                r.powf(1.0 / self.alpha)
            });
        }
        if self.beta == 2.0 * self.alpha {
            // c2 t^2 + c1 t - u = 0 with t = x^-alpha; stable small root.
            // The clamp keeps u -> 1 inside the support.
            let disc = self.c1 * self.c1 + 4.0 * self.c2 * u;
            let t = 2.0 * u / (self.c1 + disc.max(0.0).sqrt());
            let x = if self.alpha == 1.0 {
                1.0 / t
            } else {
                t.powf(-1.0 / self.alpha)
            };
            return Ok(x.max(self.x0));
        }
        if u == 1.0 {
            return Ok(self.x0);
        }
        if self.c2 > 0.0 {
            // The survival function is convex and decreasing, and the
            // pure-Pareto inverse starts left of the root, so plain Newton
            // increases monotonically to the root. ~5 iterations.
            let tol = ROOT_ABS_TOL.min(1e-12 * u);
            let mut x = (self.c1 / u).powf(1.0 / self.alpha).max(self.x0);
            for _ in 0..MAX_NEWTON {
                let fx = self.survival_raw(x) - u;
                if fx.abs() <= tol {
                    return Ok(x.max(self.x0));
                }
                let d = self.density_raw(x);
                let next = x + fx / d;
                if !next.is_finite() || next < x {
                    break; // fall through to the bracketed solver
                }
                x = next;
            }
        }
        self.quantile_root_find(u).map(|x| x.max(self.x0))
    }

    /// General inversion path: geometric bracket growth from `x0`, then
    /// bisection and Newton polish. Also exercised with `c2 = 0` by tests
    /// to confirm agreement with the closed form.
    fn quantile_root_find(&self, u: f64) -> Result<f64> {
        let tol = ROOT_ABS_TOL.min(1e-12 * u);

        let mut lo = self.x0;
        // The pure-Pareto inverse is a good scale for the bracket top.
        let pareto_guess = (self.c1 / u).powf(1.0 / self.alpha);
        let mut hi = pareto_guess.max(self.x0 * 2.0);
        let mut grow = 0;
        while self.survival_raw(hi) > u {
            hi *= 2.0;
            grow += 1;
            if grow > 2000 || !hi.is_finite() {
                return Err(Error::Numeric(format!("bracket growth failed for u = {u}")));
            }
        }

        // Bisection phase.
        let mut x;
        for _ in 0..MAX_BISECT {
            x = 0.5 * (lo + hi);
            let fx = self.survival_raw(x) - u;
            if fx.abs() <= tol {
                return Ok(x);
            }
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if (hi - lo) <= 1e-11 * x {
                break;
            }
        }

        // Newton polish, kept inside the bracket.
        x = 0.5 * (lo + hi);
        for _ in 0..MAX_NEWTON {
            let fx = self.survival_raw(x) - u;
            if fx.abs() <= tol {
                return Ok(x);
            }
            let d = -self.density_raw(x);
            if !(d < 0.0) || !d.is_finite() {
                break;
            }
            let mut next = x - fx / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if self.survival_raw(next) - u > 0.0 {
                lo = next;
            } else {
                hi = next;
            }
            x = next;
        }

        let fx = self.survival_raw(x) - u;
        if fx.abs() <= tol {
            Ok(x)
        } else {
            Err(Error::Numeric(format!(
                "quantile root finder did not reach tolerance at u = {u} (residual {fx:e})"
            )))
        }
    }

    /// Draw `n` i.i.d. observations by inverse transform.
    ///
    /// Generator and mapping are pinned for reproducibility: ChaCha8
    /// (`rand_chacha` 0.9) seeded with `ChaCha8Rng::seed_from_u64(seed)`,
    /// uniforms from `rand::distr::Open01` (strictly inside `(0, 1)`),
    /// observation `x = quantile(u)`. Identical `(seed, n)` on the same
    /// model reproduce bit-identical output.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.sample(rand::distr::Open01);
            values.push(self.quantile_inner(u)?);
        }
        Sample::with_provenance(values, Provenance::Seed(seed))
    }

    /// Solve `S(x0) = 1` on the strictly decreasing branch.
    fn solve_support_start(&self) -> Result<f64> {
        if self.c2 == 0.0 {
            return Ok(if self.alpha == 1.0 {
                self.c1
            } else {
                self.c1.powf(1.0 / self.alpha)
            });
        }
        if self.beta == 2.0 * self.alpha {
            // Same closed form as the quantile path, so quantile(1) = x0
            // exactly. The small quadratic root is the monotone branch.
            let disc = self.c1 * self.c1 + 4.0 * self.c2;
            if disc < 0.0 {
                return Err(Error::InfeasibleTail(format!(
                    "survival reaches at most {} on the monotone branch",
                    self.c1 * self.c1 / (-4.0 * self.c2)
                )));
            }
            let t = 2.0 / (self.c1 + disc.sqrt());
            return Ok(if self.alpha == 1.0 {
                1.0 / t
            } else {
                t.powf(-1.0 / self.alpha)
            });
        }

        let (mut lo, mut hi);
        if self.c2 > 0.0 {
            // S decreases from +inf to 0 over (0, inf): bracket around the
            // pure-Pareto start.
            lo = self.c1.powf(1.0 / self.alpha);
            debug_assert!(self.survival_raw(lo) >= 1.0);
            hi = lo * 2.0;
            let mut grow = 0;
            while self.survival_raw(hi) > 1.0 {
                hi *= 2.0;
                grow += 1;
                if grow > 2000 {
                    return Err(Error::Numeric("support bracket growth failed".to_string()));
                }
            }
        } else {
            // Monotone only beyond x_mono; feasible iff S(x_mono) >= 1.
            let x_mono = (-self.c2 * self.beta / (self.c1 * self.alpha))
                .powf(1.0 / (self.beta - self.alpha));
            let s_mono = self.survival_raw(x_mono);
            if !(s_mono >= 1.0) {
                return Err(Error::InfeasibleTail(format!(
                    "survival reaches at most {s_mono} at the monotone threshold {x_mono}"
                )));
            }
            if s_mono == 1.0 {
                return Ok(x_mono);
            }
            lo = x_mono;
            hi = x_mono * 2.0;
            let mut grow = 0;
            while self.survival_raw(hi) > 1.0 {
                hi *= 2.0;
                grow += 1;
                if grow > 2000 {
                    return Err(Error::Numeric("support bracket growth failed".to_string()));
                }
            }
        }

        let mut x = 0.5 * (lo + hi);
        for _ in 0..MAX_BISECT {
            x = 0.5 * (lo + hi);
            let fx = self.survival_raw(x) - 1.0;
            if fx.abs() <= ROOT_ABS_TOL {
                return Ok(x);
            }
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
        }
        for _ in 0..MAX_NEWTON {
            let fx = self.survival_raw(x) - 1.0;
            if fx.abs() <= ROOT_ABS_TOL {
                return Ok(x);
            }
            let d = -self.density_raw(x);
            if !(d < 0.0) {
                break;
            }
            x -= fx / d;
        }
        let fx = self.survival_raw(x) - 1.0;
        if fx.abs() <= ROOT_ABS_TOL {
            Ok(x)
        } else {
            Err(Error::Numeric(
                "support start solve did not converge".to_string(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 1.618033988749895; // (1 + sqrt 5) / 2

    fn hall_1112() -> HallDistribution {
        HallDistribution::new(1.0, 1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn pareto_support_start() {
        let d = HallDistribution::pareto(1.0, 1.0).unwrap();
        assert_eq!(d.x0(), 1.0);
        assert!(d.is_pure_pareto());

        let d = HallDistribution::pareto(4.0, 2.0).unwrap();
        assert!((d.x0() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hall_support_start_is_golden_ratio() {
        // x^-1 + x^-2 = 1 has the root (1 + sqrt 5) / 2.
        let d = hall_1112();
        assert!((d.x0() - GOLDEN).abs() < 1e-12, "x0 = {}", d.x0());
        assert!((d.survival(d.x0()).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(HallDistribution::new(0.0, 0.0, 1.0, 2.0).is_err());
        assert!(HallDistribution::new(-1.0, 0.0, 1.0, 2.0).is_err());
        assert!(HallDistribution::new(1.0, 0.0, 0.0, 2.0).is_err());
        assert!(HallDistribution::new(1.0, 0.0, 2.0, 2.0).is_err());
        assert!(HallDistribution::new(1.0, 0.0, 3.0, 2.0).is_err());
        assert!(HallDistribution::new(1.0, 1.0, 1.0, f64::INFINITY).is_err());
        assert!(HallDistribution::new(1.0, f64::NAN, 1.0, 2.0).is_err());
    }

    #[test]
    fn strongly_negative_c2_is_infeasible() {
        // S(x) = 1/x - 1/x^2 tops out at 0.25 on its decreasing branch.
        match HallDistribution::new(1.0, -1.0, 1.0, 2.0) {
            Err(Error::InfeasibleTail(_)) => {}
            other => panic!("expected infeasible tail, got {other:?}"),
        }
    }

    #[test]
    fn mildly_negative_c2_solves_on_monotone_branch() {
        // x^-1 - 0.1 x^-2 = 1  =>  x^2 - x + 0.1 = 0, larger root.
        let d = HallDistribution::new(1.0, -0.1, 1.0, 2.0).unwrap();
        let expected = (1.0 + (1.0 - 0.4f64).sqrt()) / 2.0;
        assert!((d.x0() - expected).abs() < 1e-12);
        assert!((d.survival(d.x0()).unwrap() - 1.0).abs() <= 1e-12);
        // Strictly decreasing at the support start.
        assert!(d.density(d.x0()).unwrap() > 0.0);
        // And x0 sits on the monotone branch.
        let x_mono = (0.1 * 2.0f64).powf(1.0);
        assert!(d.x0() >= x_mono);
    }

    #[test]
    fn survival_values() {
        let p = HallDistribution::pareto(1.0, 1.0).unwrap();
        assert_eq!(p.survival(2.0).unwrap(), 0.5);

        let d = hall_1112();
        assert_eq!(d.survival(2.0).unwrap(), 0.75);
        assert!(d.survival(1.0).is_err()); // below x0
    }

    #[test]
    fn quantile_closed_forms() {
        let p = HallDistribution::pareto(1.0, 1.0).unwrap();
        assert_eq!(p.quantile(0.5).unwrap(), 2.0);

        // Hall(1,1,1,2): x = (1 + sqrt(1 + 4u)) / (2u).
        let d = hall_1112();
        for &u in &[1e-8f64, 1e-3, 0.25, 0.5, 0.9, 1.0] {
            let expected = (1.0 + (1.0 + 4.0 * u).sqrt()) / (2.0 * u);
            let got = d.quantile(u).unwrap();
            assert!(
                ((got - expected) / expected).abs() < 1e-14,
                "u = {u}: {got} vs {expected}"
            );
        }
        assert!((d.quantile(1.0).unwrap() - GOLDEN).abs() < 1e-12);

        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.0 + 1e-12).is_err());
        assert!(d.quantile(-0.5).is_err());
    }

    #[test]
    fn quantile_survival_roundtrip() {
        let models = [
            HallDistribution::pareto(1.0, 0.5).unwrap(),
            HallDistribution::pareto(2.0, 1.0).unwrap(),
            hall_1112(),
            HallDistribution::new(1.0, 1.0, 0.7, 2.9).unwrap(),
            HallDistribution::new(0.5, 2.0, 2.0, 3.5).unwrap(),
            HallDistribution::new(1.0, -0.1, 1.0, 2.0).unwrap(),
            HallDistribution::new(1.0, -0.1, 1.3, 2.2).unwrap(),
        ];
        for d in &models {
            for &u in &[1e-8, 1e-4, 0.1, 0.5, 0.999, 1.0] {
                let x = d.quantile(u).unwrap();
                let s = d.survival(x).unwrap();
                assert!(
                    (s - u).abs() <= 1e-10,
                    "roundtrip off: u = {u}, survival = {s}, model = {d:?}"
                );
            }
        }
    }

    #[test]
    fn quantile_monotone_and_survival_monotone() {
        let d = HallDistribution::new(1.0, 1.0, 0.7, 2.9).unwrap();
        let mut prev_x = f64::INFINITY;
        let mut u = 0.001;
        while u <= 1.0 {
            let x = d.quantile(u).unwrap();
            assert!(x < prev_x, "quantile must strictly decrease in u");
            prev_x = x;
            u += 0.037;
        }
        let mut prev_s = 1.0 + 1e-12;
        let mut x = d.x0();
        for _ in 0..60 {
            let s = d.survival(x).unwrap();
            assert!(s < prev_s + 1e-15, "survival must decrease");
            prev_s = s;
            x *= 1.5;
        }
    }

    #[test]
    fn density_matches_survival_slope() {
        let models = [
            hall_1112(),
            HallDistribution::new(0.5, 2.0, 2.0, 3.5).unwrap(),
        ];
        for d in &models {
            for &x in &[d.x0() * 1.5, d.x0() * 4.0, d.x0() * 30.0] {
                let h = x * 1e-6;
                let slope = (d.survival(x - h).unwrap() - d.survival(x + h).unwrap()) / (2.0 * h);
                let f = d.density(x).unwrap();
                assert!(
                    ((slope - f) / f).abs() < 1e-6,
                    "density mismatch at x = {x}: slope {slope} vs density {f}"
                );
            }
        }
    }

    #[test]
    fn root_finding_path_agrees_with_pareto_closed_form() {
        let d = HallDistribution::pareto(1.3, 1.7).unwrap();
        for &u in &[1e-6, 0.01, 0.5, 0.99] {
            let closed = d.quantile(u).unwrap();
            let rooted = d.quantile_root_find(u).unwrap();
            assert!(
                ((closed - rooted) / closed).abs() < 1e-12,
                "u = {u}: closed {closed} vs root-found {rooted}"
            );
        }
    }

    #[test]
    fn general_exponents_use_root_finding() {
        // beta != 2 alpha goes through the bracketed solver.
        let d = HallDistribution::new(1.0, 1.0, 1.0, 3.0).unwrap();
        for &u in &[1e-7, 0.2, 0.8, 1.0] {
            let x = d.quantile(u).unwrap();
            assert!((d.survival(x).unwrap() - u).abs() <= 1e-10);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let d = hall_1112();
        let a = d.sample(42, 1000).unwrap();
        let b = d.sample(42, 1000).unwrap();
        assert_eq!(a.values(), b.values());
        let c = d.sample(43, 1000).unwrap();
        assert_ne!(a.values(), c.values());
        assert!(a.values().iter().all(|&x| x >= d.x0()));
    }

    #[test]
    fn pareto_tail_frequency_matches_survival() {
        // survival(10) = 0.1 for Pareto(1, alpha = 1); binomial 3-sigma band.
        let d = HallDistribution::pareto(1.0, 1.0).unwrap();
        let n = 1_000_000;
        let s = d.sample(7, n).unwrap();
        let frac = s.values().iter().filter(|&&x| x > 10.0).count() as f64 / n as f64;
        let band = 3.0 * (0.1 * 0.9 / n as f64).sqrt();
        assert!(
            (frac - 0.1).abs() <= band,
            "tail fraction {frac} outside 0.1 +- {band}"
        );
    }
}
