//! Panel container and the unit-wise OLS first stage.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::central::CentralSample;
use crate::error::{Result, TailError};
use crate::sample::{EstimateSample, Side};

/// Relative size below which a pivot of the QR factor marks a rank-deficient design.
const RANK_TOL: f64 = 1e-10;

/// One unit's time series. `controls[j][t]` is regressor `j` in period `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelUnit {
    pub id: String,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub controls: Vec<Vec<f64>>,
}

impl PanelUnit {
    pub fn t(&self) -> usize {
        self.y.len()
    }

    fn check(&self) -> Result<()> {
        let t = self.y.len();
        if self.z.len() != t || self.controls.iter().any(|c| c.len() != t) {
            return Err(TailError::invalid(format!(
                "unit {}: series of unequal length",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub units: Vec<PanelUnit>,
}

impl Panel {
    pub fn new(units: Vec<PanelUnit>) -> Result<Self> {
        for u in &units {
            u.check()?;
        }
        Ok(Self { units })
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }
}

/// Coefficient on `z` and its scaled noise variance for one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitFit {
    pub theta_hat: f64,
    /// `T` times the homoskedastic sampling variance of `theta_hat`.
    pub sigma2: f64,
}

/// OLS of `y` on an intercept, the controls and `z`.
pub fn fit_unit(unit: &PanelUnit) -> Result<UnitFit> {
    unit.check()?;
    let t = unit.t();
    let p = unit.controls.len() + 2;
    if t < p + 1 {
        return Err(TailError::invalid(format!(
            "unit {}: {t} periods leave no residual degrees of freedom for {p} coefficients",
            unit.id
        )));
    }
    // z is the last column, so the last pivot of R carries its variance.
    let x = DMatrix::from_fn(t, p, |i, j| match j {
        0 => 1.0,
        j if j == p - 1 => unit.z[i],
        j => unit.controls[j - 1][i],
    });
    let y = DVector::from_column_slice(&unit.y);
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let scale = x.column(j).norm().max(f64::MIN_POSITIVE);
        if r[(j, j)].abs() <= RANK_TOL * scale {
            return Err(TailError::degenerate(format!(
                "unit {}: rank-deficient design",
                unit.id
            )));
        }
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let coef = r
        .solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or_else(|| TailError::degenerate(format!("unit {}: rank-deficient design", unit.id)))?;
    let resid = &y - &x * &coef;
    let s2 = resid.norm_squared() / (t - p) as f64;
    let rzz = r[(p - 1, p - 1)];
    Ok(UnitFit {
        theta_hat: coef[p - 1],
        sigma2: t as f64 * s2 / (rzz * rzz),
    })
}

/// First-stage output over the units that could be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStage {
    /// Estimates in unit order.
    pub estimates: Vec<f64>,
    /// Scaled noise variances in unit order.
    pub sigma2: Vec<f64>,
    pub ids: Vec<String>,
    /// Units left out, with the reason.
    pub dropped: Vec<(String, String)>,
    pub t: u32,
}

impl FirstStage {
    /// Estimates as a sample with `p = 1/2`.
    pub fn sample(&self, side: Side) -> Result<EstimateSample> {
        EstimateSample::new(&self.estimates, Some(self.t), Some(0.5), side)
    }

    pub fn central_sample(&self, side: Side) -> Result<CentralSample> {
        CentralSample::new(&self.estimates, &self.sigma2, self.t, side)
    }
}

/// Fits every unit, dropping (and reporting) units whose design is rank deficient.
pub fn unitwise_ols(panel: &Panel) -> Result<FirstStage> {
    let t = panel.units.first().map_or(0, PanelUnit::t);
    if panel.units.iter().any(|u| u.t() != t) {
        return Err(TailError::invalid("units have different numbers of periods"));
    }
    let fits: Vec<Result<UnitFit>> = panel.units.par_iter().map(fit_unit).collect();
    let mut out = FirstStage {
        estimates: Vec::new(),
        sigma2: Vec::new(),
        ids: Vec::new(),
        dropped: Vec::new(),
        t: u32::try_from(t).map_err(|_| TailError::invalid("too many periods"))?,
    };
    for (unit, fit) in panel.units.iter().zip(fits) {
        match fit {
            Ok(f) => {
                out.estimates.push(f.theta_hat);
                out.sigma2.push(f.sigma2);
                out.ids.push(unit.id.clone());
            }
            Err(e @ TailError::DegenerateTail(_)) => out.dropped.push((unit.id.clone(), e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if out.estimates.len() < 2 {
        return Err(TailError::invalid(format!(
            "only {} units could be fitted",
            out.estimates.len()
        )));
    }
    Ok(out)
}

/// Scaled noise variances of the fitted units.
pub fn estimate_sigma2_from_panel(panel: &Panel) -> Result<Vec<f64>> {
    Ok(unitwise_ols(panel)?.sigma2)
}
