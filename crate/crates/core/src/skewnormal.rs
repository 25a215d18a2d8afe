//! Skew-normal density, maximum-likelihood fitting and the mode-ratio p-value.
//!
//! ```text
//! f(x | ξ, ω, β) = (2/ω) φ((x − ξ)/ω) Φ(β (x − ξ)/ω)
//! ```
//!
//! Fitting standardizes the sample, seeds Nelder-Mead with the
//! method-of-moments estimate and minimizes the negative log-likelihood over
//! `(ξ, log ω, β)`. The p-value of an observation is its density relative to
//! the density at the mode, which needs neither the CDF nor a choice of tail.

use std::f64::consts::{FRAC_2_PI, LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::simplex::NelderMead;

/// Default bound on `|β|`.
pub const BETA_CAP: f64 = 50.0;
/// Sample variance at or below which a fit is treated as degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;
/// Scale reported for a degenerate fit.
pub const DEGENERATE_OMEGA: f64 = 1e-6;
/// Observations this close to a degenerate location count as a match.
pub const DEGENERATE_MATCH_TOL: f64 = 1e-9;
/// Method-of-moments skewness is clamped to this magnitude.
pub const SKEWNESS_CLAMP: f64 = 0.99;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalParams {
    pub xi: f64,
    pub omega: f64,
    pub beta: f64,
}

impl SkewNormalParams {
    pub fn new(xi: f64, omega: f64, beta: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 || !xi.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "invalid skew-normal parameters ({xi}, {omega}, {beta})"
            )));
        }
        Ok(Self { xi, omega, beta })
    }

    /// The normal distribution `N(mean, sd²)`.
    pub fn normal(mean: f64, sd: f64) -> Self {
        Self {
            xi: mean,
            omega: sd,
            beta: 0.0,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.xi) / self.omega;
        LN_2 - self.omega.ln() + ln_std_normal_pdf(z) + ln_std_normal_cdf(self.beta * z)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn mean(&self) -> f64 {
        let delta = self.beta / (1.0 + self.beta * self.beta).sqrt();
        self.xi + self.omega * delta * FRAC_2_PI.sqrt()
    }

    /// The density's maximizer.
    ///
    /// Exactly `ξ` when `β = 0`; otherwise a golden-section search on the
    /// log-density over `[ξ − 4ω, ξ + 4ω]`.
    pub fn mode(&self) -> f64 {
        if self.beta == 0.0 {
            return self.xi;
        }
        let tol = 1e-10 * self.omega;
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (self.xi - 4.0 * self.omega, self.xi + 4.0 * self.omega);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.ln_pdf(c);
        let mut fd = self.ln_pdf(d);
        while (b - a).abs() > tol {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.ln_pdf(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.ln_pdf(d);
            }
        }
        0.5 * (a + b)
    }

    /// `f(q) / f(mode)` clamped to `[0, 1]`; NaN maps to 0.
    pub fn density_ratio(&self, q: f64, mode: f64) -> f64 {
        let r = (self.ln_pdf(q) - self.ln_pdf(mode)).exp();
        if r.is_nan() {
            0.0
        } else {
            r.clamp(0.0, 1.0)
        }
    }

    /// CDF by trapezoidal quadrature of the density on a fine grid; intended
    /// for diagnostics such as goodness-of-fit distances.
    pub fn cdf_grid(&self) -> CdfGrid {
        CdfGrid::new(*self, 40_000)
    }
}

/// Tabulated CDF over `[ξ − 12ω, ξ + 12ω]`, linearly interpolated.
#[derive(Debug, Clone)]
pub struct CdfGrid {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl CdfGrid {
    fn new(p: SkewNormalParams, panels: usize) -> Self {
        let lo = p.xi - 12.0 * p.omega;
        let step = 24.0 * p.omega / panels as f64;
        let mut values = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        let mut prev = p.pdf(lo);
        values.push(0.0);
        for k in 1..=panels {
            let cur = p.pdf(lo + k as f64 * step);
            acc += 0.5 * step * (prev + cur);
            values.push(acc);
            prev = cur;
        }
        Self { lo, step, values }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let k = pos.floor() as usize;
        if k + 1 >= self.values.len() {
            return self.values[self.values.len() - 1].min(1.0);
        }
        let w = pos - k as f64;
        (self.values[k] * (1.0 - w) + self.values[k + 1] * w).min(1.0)
    }
}

/// Kolmogorov-Smirnov distance between a sample and a skew-normal.
pub fn ks_distance(sample: &[f64], params: &SkewNormalParams) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let grid = params.cdf_grid();
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let x = sorted[k];
        let mut end = k;
        while end + 1 < sorted.len() && sorted[end + 1] == x {
            end += 1;
        }
        let f = grid.cdf(x);
        d = d
            .max((f - k as f64 / n).abs())
            .max(((end + 1) as f64 / n - f).abs());
        k = end + 1;
    }
    d
}

fn ln_std_normal_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `log Φ(x)`, finite for all finite `x`.
///
/// Below `x = −8` the Mills-ratio asymptotic series replaces `erfc`.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x < -8.0 {
        let x2 = x * x;
        let inv = 1.0 / x2;
        let series = 1.0 + inv * (-1.0 + inv * (3.0 + inv * (-15.0 + inv * (105.0 - 945.0 * inv))));
        ln_std_normal_pdf(x) - (-x).ln() + series.ln()
    } else if x > 5.0 {
        (-0.5 * erfc(x / SQRT_2)).ln_1p()
    } else {
        (0.5 * erfc(-x / SQRT_2)).ln()
    }
}

/// Negative log-likelihood, up to the additive `N log 2`:
/// `N log ω − Σ [log φ(z) + log Φ(β z)]` with `z = (x − ξ)/ω`.
pub fn nll(data: &[f64], p: &SkewNormalParams) -> f64 {
    let ln_omega = p.omega.ln();
    let mut total = data.len() as f64 * ln_omega;
    for &x in data {
        let z = (x - p.xi) / p.omega;
        total -= ln_std_normal_pdf(z) + ln_std_normal_cdf(p.beta * z);
    }
    total
}

struct Moments {
    mean: f64,
    variance: f64,
    skewness: f64,
}

fn moments(data: &[f64]) -> Moments {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in data {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Moments {
        mean,
        variance: m2,
        skewness,
    }
}

/// Method-of-moments estimate from the sample mean, standard deviation and
/// (clamped) skewness.
pub fn fit_mom(data: &[f64]) -> Result<SkewNormalParams> {
    if data.is_empty() {
        return Err(Error::SampleTooSmall { got: 0, need: 1 });
    }
    let m = moments(data);
    if m.variance.is_nan() || m.variance <= DEGENERATE_VARIANCE {
        return Err(Error::DegenerateSample {
            variance: m.variance,
        });
    }
    Ok(mom_from_moments(&m))
}

fn mom_from_moments(m: &Moments) -> SkewNormalParams {
    let s = m.variance.sqrt();
    let g1 = m.skewness.clamp(-SKEWNESS_CLAMP, SKEWNESS_CLAMP);
    let g23 = g1.abs().powf(2.0 / 3.0);
    let k = ((4.0 - PI) / 2.0).powf(2.0 / 3.0);
    let delta = ((PI / 2.0) * g23 / (g23 + k)).sqrt().copysign(g1);
    let delta = if g1 == 0.0 { 0.0 } else { delta };
    let beta = delta / (1.0 - delta * delta).sqrt();
    let omega = s / (1.0 - FRAC_2_PI * delta * delta).sqrt();
    let xi = m.mean - omega * delta * FRAC_2_PI.sqrt();
    SkewNormalParams { xi, omega, beta }
}

/// A fitted skew-normal together with its mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: SkewNormalParams,
    pub nll: f64,
    /// Sample had (near) zero variance; `params.xi` holds the common value.
    pub degenerate: bool,
    pub mode: f64,
}

impl FitResult {
    /// Mode-ratio p-value of observation `q`.
    ///
    /// A degenerate fit accepts only exact matches of its location.
    pub fn p_value(&self, q: f64) -> f64 {
        if self.degenerate {
            if (q - self.params.xi).abs() <= DEGENERATE_MATCH_TOL {
                1.0
            } else {
                0.0
            }
        } else {
            self.params.density_ratio(q, self.mode)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub beta_cap: f64,
    pub optimizer: NelderMead,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            beta_cap: BETA_CAP,
            optimizer: NelderMead::default(),
        }
    }
}

/// Maximum-likelihood fit with default options.
pub fn fit_mle(data: &[f64]) -> Result<FitResult> {
    fit_mle_with(data, &MleOptions::default())
}

pub fn fit_mle_with(data: &[f64], options: &MleOptions) -> Result<FitResult> {
    if data.len() < 3 {
        return Err(Error::SampleTooSmall {
            got: data.len(),
            need: 3,
        });
    }
    let m = moments(data);
    if m.variance.is_nan() || m.variance <= DEGENERATE_VARIANCE {
        let params = SkewNormalParams {
            xi: if m.variance == 0.0 { data[0] } else { m.mean },
            omega: DEGENERATE_OMEGA,
            beta: 0.0,
        };
        return Ok(FitResult {
            params,
            nll: nll(data, &params),
            degenerate: true,
            mode: params.xi,
        });
    }

    let cap = options.beta_cap;
    let s = m.variance.sqrt();
    let standardized: Vec<f64> = data.iter().map(|x| (x - m.mean) / s).collect();
    let mut init = mom_from_moments(&moments(&standardized));
    init.beta = init.beta.clamp(-cap, cap);

    let objective = |v: &[f64]| {
        let p = SkewNormalParams {
            xi: v[0],
            omega: v[1].exp(),
            beta: v[2].clamp(-cap, cap),
        };
        nll(&standardized, &p)
    };
    let found = options.optimizer.minimize(
        objective,
        &[init.xi, init.omega.ln(), init.beta],
        &[0.25, 0.25, 0.5],
    );

    let unscale = |p: SkewNormalParams| SkewNormalParams {
        xi: m.mean + s * p.xi,
        omega: s * p.omega,
        beta: p.beta,
    };
    let mut params = unscale(SkewNormalParams {
        xi: found.x[0],
        omega: found.x[1].exp(),
        beta: found.x[2].clamp(-cap, cap),
    });
    let mut value = nll(data, &params);
    let init_params = unscale(init);
    let init_value = nll(data, &init_params);
    if value.is_nan() || value > init_value {
        params = init_params;
        value = init_value;
    }
    Ok(FitResult {
        params,
        nll: value,
        degenerate: false,
        mode: params.mode(),
    })
}
