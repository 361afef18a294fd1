//! Data-generating process of the coverage study: coefficients from a Gaussian
//! copula with one-sided power-law margins, two-sided power-law noise.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, TailError};
use crate::rng::{substream, tag};
use crate::simulation::panel::{Panel, PanelUnit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub n: usize,
    pub t: usize,
    /// Tail parameter of the coefficient margins.
    pub kappa: f64,
    /// Tail parameter of the noise.
    pub beta: f64,
    /// Pairwise copula correlation.
    pub rho: f64,
    pub sigma_x: f64,
    pub seed: u64,
    /// Sets the outcome noise to zero.
    #[serde(default)]
    pub noiseless: bool,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n: 200,
            t: 10,
            kappa: 4.0,
            beta: 8.0,
            rho: 0.3,
            sigma_x: 1.0,
            seed: 0,
            noiseless: false,
        }
    }
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(TailError::invalid("n must be at least 2"));
        }
        if self.t == 0 {
            return Err(TailError::invalid("t must be positive"));
        }
        if self.kappa.is_nan() || self.kappa <= 2.0 {
            return Err(TailError::invalid(format!(
                "kappa must exceed 2 for a finite coefficient variance, got {}",
                self.kappa
            )));
        }
        if self.beta.is_nan() || self.beta <= 2.0 {
            return Err(TailError::invalid(format!(
                "beta must exceed 2 for a finite noise variance, got {}",
                self.beta
            )));
        }
        if !(self.sigma_x.is_finite() && self.sigma_x > 0.0) {
            return Err(TailError::invalid("sigma_x must be positive"));
        }
        copula_factor(self.rho)?;
        Ok(())
    }

    /// `sqrt(var(theta) / var(u))`, or 0 when noiseless.
    pub fn noise_scale(&self) -> f64 {
        if self.noiseless {
            0.0
        } else {
            (frechet_variance(self.kappa) / noise_variance(self.beta)).sqrt()
        }
    }
}

/// `F^{-1}(u) = (1 - u)^(-1/kappa) - 1` for `F(x) = 1 - (1 + x)^(-kappa)` on `[0, inf)`.
pub fn frechet_like_quantile(kappa: f64, u: f64) -> Result<f64> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(TailError::invalid("kappa must be positive"));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(TailError::invalid(format!("u must lie in [0, 1), got {u}")));
    }
    Ok(from_survival(kappa, 1.0 - u))
}

pub fn frechet_like_cdf(kappa: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (1.0 + x).powf(-kappa)
    }
}

fn from_survival(kappa: f64, s: f64) -> f64 {
    s.powf(-1.0 / kappa) - 1.0
}

/// Variance of the coefficient margin, `kappa/(kappa-2) - (kappa/(kappa-1))^2`.
pub fn frechet_variance(kappa: f64) -> f64 {
    kappa / (kappa - 2.0) - (kappa / (kappa - 1.0)).powi(2)
}

/// Variance of the noise with density `beta (1 + |x|)^(-beta-1) / 2`.
pub fn noise_variance(beta: f64) -> f64 {
    beta / (beta - 2.0) - 2.0 * beta / (beta - 1.0) + 1.0
}

/// Lower Cholesky factor of the exchangeable 3x3 correlation matrix.
fn copula_factor(rho: f64) -> Result<[[f64; 3]; 3]> {
    if !(rho > -0.5 && rho < 1.0) {
        return Err(TailError::invalid(format!(
            "exchangeable correlation {rho} is not positive definite; need -1/2 < rho < 1"
        )));
    }
    let l00 = 1.0;
    let l10 = rho;
    let l11 = (1.0 - rho * rho).sqrt();
    let l20 = rho;
    let l21 = (rho - rho * rho) / l11;
    let l22 = (1.0 - l20 * l20 - l21 * l21).sqrt();
    Ok([[l00, 0.0, 0.0], [l10, l11, 0.0], [l20, l21, l22]])
}

fn magnitude(beta: f64, v: f64) -> f64 {
    (1.0 - v).powf(-1.0 / beta) - 1.0
}

fn noise_draw<R: Rng>(rng: &mut R, beta: f64) -> f64 {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    sign * magnitude(beta, rng.random::<f64>())
}

/// `count` iid noise draws: a fair random sign times `(1 - V)^(-1/beta) - 1`.
pub fn sample_noise(beta: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(TailError::invalid("beta must be positive"));
    }
    let mut rng = substream(seed, tag::NOISE, 0);
    Ok((0..count).map(|_| noise_draw(&mut rng, beta)).collect())
}

fn unit_coefficients<R: Rng>(rng: &mut R, factor: &[[f64; 3]; 3], kappa: f64, normal: &Normal) -> [f64; 3] {
    let e: [f64; 3] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    let mut c = [0.0; 3];
    for (j, row) in factor.iter().enumerate() {
        let zj: f64 = row.iter().zip(&e).map(|(l, e)| l * e).sum();
        // Survival form keeps the upper tail accurate.
        c[j] = from_survival(kappa, normal.cdf(-zj));
    }
    c
}

/// `(alpha_i, eta_i, theta_i)` for every unit.
pub fn sample_coefficients(cfg: &DgpConfig) -> Result<Vec<[f64; 3]>> {
    cfg.validate()?;
    let factor = copula_factor(cfg.rho)?;
    let normal = Normal::standard();
    Ok((0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, tag::DGP, i as u64);
            unit_coefficients(&mut rng, &factor, cfg.kappa, &normal)
        })
        .collect())
}

/// Simulated panel with the coefficients that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPanel {
    pub coefficients: Vec<[f64; 3]>,
    pub panel: Panel,
}

/// Generates the panel. Each unit has its own stream: three normals for the
/// coefficients, then per period the `x` uniform, the `z` uniform and the noise.
pub fn generate_panel(cfg: &DgpConfig) -> Result<SimulatedPanel> {
    cfg.validate()?;
    let factor = copula_factor(cfg.rho)?;
    let normal = Normal::standard();
    let scale = cfg.noise_scale();
    let units: Vec<([f64; 3], PanelUnit)> = (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, tag::DGP, i as u64);
            let c = unit_coefficients(&mut rng, &factor, cfg.kappa, &normal);
            let [alpha, eta, theta] = c;
            let norm = (alpha * alpha + eta * eta + theta * theta).sqrt();
            let spread = cfg.sigma_x * (1.0 + 0.3 * norm).sqrt();
            let mut x = Vec::with_capacity(cfg.t);
            let mut z = Vec::with_capacity(cfg.t);
            let mut y = Vec::with_capacity(cfg.t);
            for _ in 0..cfg.t {
                let xt = 0.3 * eta + spread * (0.1 + rng.random::<f64>());
                let zt = 0.3 * theta + spread * (0.1 + rng.random::<f64>());
                let u = noise_draw(&mut rng, cfg.beta);
                y.push(alpha + eta * xt + theta * zt + scale * u);
                x.push(xt);
                z.push(zt);
            }
            let unit = PanelUnit {
                id: i.to_string(),
                y,
                z,
                controls: vec![x],
            };
            (c, unit)
        })
        .collect();
    let (coefficients, units) = units.into_iter().unzip();
    Ok(SimulatedPanel {
        coefficients,
        panel: Panel::new(units)?,
    })
}
