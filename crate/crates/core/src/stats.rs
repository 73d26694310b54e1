//! Error metrics and ordinary least-squares fits.

use serde::Serialize;

use crate::error::{Error, Result};

fn check_pair(measured: &[f64], modelled: &[f64]) -> Result<()> {
    if measured.len() != modelled.len() || measured.is_empty() {
        return Err(Error::LengthMismatch(measured.len(), modelled.len()));
    }
    Ok(())
}

fn relative_errors<'a>(
    measured: &'a [f64],
    modelled: &'a [f64],
) -> Result<impl Iterator<Item = f64> + 'a> {
    check_pair(measured, modelled)?;
    if measured.contains(&0.0) {
        return Err(Error::ZeroMeasured);
    }
    Ok(measured.iter().zip(modelled).map(|(m, p)| (p - m) / m))
}

/// Mean absolute percentage error, %.
pub fn mape(measured: &[f64], modelled: &[f64]) -> Result<f64> {
    let n = measured.len() as f64;
    Ok(100.0 / n
        * relative_errors(measured, modelled)?
            .map(f64::abs)
            .sum::<f64>())
}

/// Mean (signed) percentage error, %.
pub fn mpe(measured: &[f64], modelled: &[f64]) -> Result<f64> {
    let n = measured.len() as f64;
    Ok(100.0 / n * relative_errors(measured, modelled)?.sum::<f64>())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Coefficient of determination as the squared Pearson correlation between
/// the two series.
pub fn r2(measured: &[f64], modelled: &[f64]) -> Result<f64> {
    check_pair(measured, modelled)?;
    let (mm, mp) = (mean(measured), mean(modelled));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (m, p) in measured.iter().zip(modelled) {
        let (dm, dp) = (m - mm, p - mp);
        sxy += dm * dp;
        sxx += dm * dm;
        syy += dp * dp;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok((r * r).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// 0 when undefined (constant response); see `r2_defined`.
    pub r2: f64,
    pub r2_defined: bool,
    pub mape_pct: f64,
    pub mpe_pct: f64,
    pub n: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`. MAPE/MPE compare `y`
/// (measured) with the fitted line (modelled).
pub fn linfit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::TooFewPoints(x.len()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateX);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fitted: Vec<f64> = x.iter().map(|v| slope * v + intercept).collect();

    let (r2, r2_defined) = match r2(y, &fitted) {
        Ok(v) => (v, true),
        Err(Error::ZeroVariance) => (0.0, false),
        Err(e) => return Err(e),
    };
    Ok(FitResult {
        slope,
        intercept,
        r2,
        r2_defined,
        mape_pct: mape(y, &fitted)?,
        mpe_pct: mpe(y, &fitted)?,
        n: x.len(),
    })
}
