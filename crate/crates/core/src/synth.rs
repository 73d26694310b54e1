//! Synthetic soiling transmittance, direct spectra and whole campaigns.
//!
//! Soiling transmittance follows `τ(λ) = exp(−k·(λ_ref/λ)^α)`: bounded in
//! (0, 1], monotone in wavelength for `α > 0`, and multiplicative across
//! deposition steps. It is a stand-in shape, not a fit to measured coupons.

use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cellmodel::CellModel;
use crate::error::{Error, Result};
use crate::pipeline::{FieldDay, FieldRecord, WeeklyMeasurement, REPLICATES};
use crate::reference;
use crate::spectral::{linear_grid, Quantity, Spectrum, Waveband};

pub const DEFAULT_LAMBDA_REF_NM: f64 = 550.0;

/// A year of weekly scans with steady deposition and two rain washes.
pub const DEMO_SCENARIO: &str = include_str!("../data/demo_scenario.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilingModel {
    /// Optical-depth scale at the reference wavelength.
    pub k: f64,
    /// Wavelength exponent.
    pub alpha: f64,
    pub lambda_ref_nm: f64,
}

impl SoilingModel {
    pub fn new(k: f64, alpha: f64) -> Self {
        SoilingModel {
            k,
            alpha,
            lambda_ref_nm: DEFAULT_LAMBDA_REF_NM,
        }
    }

    pub fn at(&self, lambda_nm: f64) -> f64 {
        (-self.k * (self.lambda_ref_nm / lambda_nm).powf(self.alpha)).exp()
    }

    pub fn tau(&self, grid: &[f64]) -> Result<Spectrum> {
        if !(self.k >= 0.0 && self.k.is_finite())
            || !self.alpha.is_finite()
            || self.lambda_ref_nm <= 0.0
        {
            return Err(Error::InvalidScenario(format!(
                "invalid soiling model {self:?}"
            )));
        }
        Spectrum::from_fn(grid, Quantity::Transmittance, |w| self.at(w))
    }
}

/// The reference direct spectrum on `grid`, multiplied by `(λ_ref/λ)^tilt`
/// and rescaled so its integral over the grid span is unchanged. Positive
/// tilt is blue-rich, negative red-rich.
pub fn synth_spectrum(tilt: f64, grid: &[f64]) -> Result<Spectrum> {
    let reference = reference::astm_g173_direct().resample(grid)?;
    if tilt == 0.0 {
        return Ok(reference);
    }
    let span = Waveband::new("grid", grid[0], grid[grid.len() - 1])?;
    let shaped = Spectrum::from_fn(grid, Quantity::Irradiance, |w| {
        reference.value_at(w).expect("on grid") * (DEFAULT_LAMBDA_REF_NM / w).powf(tilt)
    })?;
    let scale = reference.integrate(&span)? / shaped.integrate(&span)?;
    shaped.scaled(scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainEvent {
    /// Week during which the rain falls; it washes before the next scan.
    pub week: u32,
    pub wash_fraction: f64,
    #[serde(default)]
    pub rainfall_mm: f64,
}

fn default_alpha() -> f64 {
    1.3
}
fn default_noise() -> f64 {
    0.002
}
fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 1, 2).unwrap()
}
fn default_step() -> f64 {
    5.0
}
fn default_cloudy() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignScenario {
    pub weeks: u32,
    /// Increase of `k` per week of exposure.
    pub deposition_per_week: f64,
    #[serde(default, rename = "rain")]
    pub rain_weeks: Vec<RainEvent>,
    /// Blue-richness of the noon spectrum (see [`synth_spectrum`]).
    #[serde(default)]
    pub spectrum_tilt: f64,
    /// Amplitude of a yearly sinusoid added to the tilt.
    #[serde(default)]
    pub tilt_amplitude: f64,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Relative σ of the multiplicative scan noise.
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    #[serde(default = "default_step")]
    pub grid_step_nm: f64,
    /// Chance that any field day is overcast.
    #[serde(default = "default_cloudy")]
    pub cloudy_probability: f64,
}

impl CampaignScenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.weeks == 0 {
            return Err(Error::EmptyScenario);
        }
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.deposition_per_week.is_nan() || self.deposition_per_week < 0.0 {
            return bad("deposition_per_week must be >= 0".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma < 0.1) {
            return bad("noise_sigma must lie in [0, 0.1)".into());
        }
        if !(0.0..=1.0).contains(&self.cloudy_probability) {
            return bad("cloudy_probability must lie in [0, 1]".into());
        }
        if self.grid_step_nm.is_nan() || self.grid_step_nm <= 0.0 {
            return bad("grid_step_nm must be positive".into());
        }
        for r in &self.rain_weeks {
            if !(0.0..=1.0).contains(&r.wash_fraction) {
                return bad(format!("wash_fraction of week {} outside [0, 1]", r.week));
            }
        }
        Ok(())
    }

    /// Soiling optical depth at each weekly scan. Week 1 carries one week
    /// of deposition; rain during week `w` scales the load by
    /// `1 − wash_fraction` before week `w + 1` is deposited on top.
    pub fn k_trajectory(&self) -> Vec<f64> {
        let mut ks = Vec::with_capacity(self.weeks as usize);
        let mut k = 0.0;
        for w in 1..=self.weeks {
            if w > 1 {
                let wash: f64 = self
                    .rain_weeks
                    .iter()
                    .filter(|r| r.week == w - 1)
                    .map(|r| 1.0 - r.wash_fraction)
                    .product();
                k *= wash;
            }
            k += self.deposition_per_week;
            ks.push(k.max(0.0));
        }
        ks
    }

    pub fn scan_date(&self, week: u32) -> NaiveDate {
        self.start_date + Duration::days(7 * (i64::from(week) - 1))
    }

    pub fn grid(&self) -> Vec<f64> {
        linear_grid(SCAN_MIN_NM, SCAN_MAX_NM, self.grid_step_nm)
    }
}

pub const SCAN_MIN_NM: f64 = 300.0;
pub const SCAN_MAX_NM: f64 = 2000.0;

/// Transmittance of the clean low-iron glass control coupon.
pub fn control_coupon(lambda_nm: f64) -> f64 {
    0.915 * (1.0 - (-(lambda_nm - 280.0) / 18.0).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCampaign {
    pub scenario: CampaignScenario,
    pub k: Vec<f64>,
    pub weeks: Vec<WeeklyMeasurement>,
    pub days: Vec<FieldDay>,
}

fn sub_seed(seed: u64, week: u32, stream: u64) -> u64 {
    seed ^ u64::from(week).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

const SPECTRAL_HOURS: [u32; 5] = [8, 10, 12, 14, 16];
const CLEAR_DNI_PEAK: f64 = 950.0;

/// Generates triplicate coupon scans and three field days (scan day and its
/// neighbours) for every week of the scenario.
pub fn synth_campaign(scenario: &CampaignScenario, cell: &CellModel) -> Result<SyntheticCampaign> {
    scenario.validate()?;
    let grid = scenario.grid();
    let band = cell.full_band();
    if !(grid[0] <= band.lambda_min_nm && band.lambda_max_nm <= grid[grid.len() - 1]) {
        return Err(Error::InvalidScenario(format!(
            "scan range [{SCAN_MIN_NM}, {SCAN_MAX_NM}] nm does not cover cell band {band:?}"
        )));
    }
    let ks = scenario.k_trajectory();
    let noise = Normal::new(0.0, scenario.noise_sigma).expect("validated sigma");
    let control_clean: Vec<f64> = grid.iter().map(|&w| control_coupon(w)).collect();

    let mut weeks = Vec::with_capacity(ks.len());
    let mut days = Vec::with_capacity(3 * ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let week = i as u32 + 1;
        let tau = SoilingModel {
            k,
            alpha: scenario.alpha,
            lambda_ref_nm: DEFAULT_LAMBDA_REF_NM,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(scenario.seed, week, 0));
        let mut noisy = |clean: &[f64]| -> Result<Spectrum> {
            let v = clean
                .iter()
                .map(|c| c * (1.0 + noise.sample(&mut rng)))
                .collect();
            Spectrum::new(grid.clone(), v, Quantity::Transmittance)
        };
        let soiled_clean: Vec<f64> = grid
            .iter()
            .zip(&control_clean)
            .map(|(&w, c)| c * tau.at(w))
            .collect();
        let mut soiled_scans = Vec::with_capacity(REPLICATES);
        let mut control_scans = Vec::with_capacity(REPLICATES);
        for _ in 0..REPLICATES {
            soiled_scans.push(noisy(&soiled_clean)?);
            control_scans.push(noisy(&control_clean)?);
        }
        let scan_date = scenario.scan_date(week);
        weeks.push(WeeklyMeasurement {
            week_id: week,
            scan_date,
            soiled_scans,
            control_scans,
        });

        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(scenario.seed, week, 1));
        let season = (2.0 * std::f64::consts::PI * f64::from(week - 1) / 52.0).sin();
        let day_tilt = scenario.spectrum_tilt + scenario.tilt_amplitude * season;
        let rain = scenario
            .rain_weeks
            .iter()
            .filter(|r| r.week == week)
            .map(|r| r.rainfall_mm)
            .sum::<f64>();
        for offset in [-1i64, 0, 1] {
            let date = scan_date + Duration::days(offset);
            let cloudy = rand::Rng::random_bool(&mut rng, scenario.cloudy_probability);
            let rain_today = if offset == 1 { rain } else { 0.0 };
            days.push(synth_day(
                date, cloudy, day_tilt, rain_today, &grid, &mut rng,
            )?);
        }
    }
    Ok(SyntheticCampaign {
        scenario: scenario.clone(),
        k: ks,
        weeks,
        days,
    })
}

fn synth_day(
    date: NaiveDate,
    cloudy: bool,
    day_tilt: f64,
    rainfall: f64,
    grid: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<FieldDay> {
    let pm = Normal::<f64>::new(0.0, 1.0).unwrap();
    let pm10_day = (25.0 + 8.0 * pm.sample(rng)).max(2.0);
    let mut records = Vec::new();
    for step in 0..=144u32 {
        let minutes = 6 * 60 + 5 * step;
        let (h, m) = (minutes / 60, minutes % 60);
        let timestamp = date.and_hms_opt(h, m, 0).expect("valid clock time");
        let s = (std::f64::consts::PI * (f64::from(minutes) / 60.0 - 6.0) / 12.0)
            .sin()
            .max(0.0);
        let clear_dni = CLEAR_DNI_PEAK * s.sqrt();
        let clear_gni = clear_dni + 120.0 * s;
        let (dni, gni) = if cloudy {
            (0.35 * clear_dni, 0.8 * clear_gni)
        } else {
            (clear_dni, clear_gni)
        };
        let ghi = gni * s;
        let dhi = (ghi - dni * s).max(0.0);
        let spectral_dni = if m == 0 && SPECTRAL_HOURS.contains(&h) {
            let tilt = day_tilt - 0.5 * (1.0 - s);
            Some(synth_spectrum(tilt, grid)?.scaled(dni / 900.0)?)
        } else {
            None
        };
        let noon = h == 12 && m == 0;
        records.push(FieldRecord {
            timestamp,
            dni,
            gni,
            ghi,
            dhi,
            rainfall_mm: Some(if noon { rainfall } else { 0.0 }),
            pm10: Some(pm10_day),
            pm25: Some(0.45 * pm10_day),
            spectral_dni,
        });
    }
    FieldDay::new(date, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellmodel::BundledCell;
    use crate::metrics::ast;

    fn scenario() -> CampaignScenario {
        CampaignScenario::from_toml_str("weeks = 6\ndeposition_per_week = 0.02\nseed = 7\n")
            .unwrap()
    }

    #[test]
    fn tau_examples() {
        let grid = linear_grid(300.0, 2000.0, 50.0);
        let t = SoilingModel::new(0.0, 1.3).tau(&grid).unwrap();
        assert!(t.values().iter().all(|&v| v == 1.0));
        let m = SoilingModel::new(0.2, 1.0);
        assert!((m.at(550.0) - 0.818_730_753_077_981_9).abs() < 1e-15);
        let t = m.tau(&grid).unwrap();
        assert!(t.values().windows(2).all(|w| w[0] < w[1]));
        assert!(SoilingModel::new(-0.1, 1.0).tau(&grid).is_err());
    }

    #[test]
    fn spectrum_tilt_zero_is_reference() {
        let grid = linear_grid(300.0, 2000.0, 5.0);
        let s = synth_spectrum(0.0, &grid).unwrap();
        assert_eq!(s, reference::astm_g173_direct().resample(&grid).unwrap());
    }

    #[test]
    fn spectrum_keeps_broadband_integral() {
        let grid = linear_grid(300.0, 2000.0, 5.0);
        let span = Waveband::new("g", 300.0, 2000.0).unwrap();
        let want = synth_spectrum(0.0, &grid)
            .unwrap()
            .integrate(&span)
            .unwrap();
        for tilt in [-1.5, -0.3, 0.5, 2.0] {
            let got = synth_spectrum(tilt, &grid)
                .unwrap()
                .integrate(&span)
                .unwrap();
            assert!((got / want - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn k_trajectory_wash_rules() {
        let mut s = scenario();
        s.rain_weeks = vec![RainEvent {
            week: 3,
            wash_fraction: 1.0,
            rainfall_mm: 20.0,
        }];
        let ks = s.k_trajectory();
        assert_eq!(ks[0], 0.02);
        assert!((ks[2] - 0.06).abs() < 1e-15);
        // rain in week 3 fully washes before week 4's scan
        assert_eq!(ks[3], 0.02);
        s.rain_weeks = vec![RainEvent {
            week: 2,
            wash_fraction: 0.5,
            rainfall_mm: 5.0,
        }];
        let ks = s.k_trajectory();
        assert!((ks[2] - (0.04 * 0.5 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn zero_deposition_no_noise_is_clean() {
        let mut s = scenario();
        s.deposition_per_week = 0.0;
        s.noise_sigma = 0.0;
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        let c = synth_campaign(&s, &cell).unwrap();
        for w in &c.weeks {
            for (sc, cc) in w.soiled_scans.iter().zip(&w.control_scans) {
                let t = crate::metrics::soiling_transmittance(sc, cc).unwrap();
                assert!(t.tau.values().iter().all(|&v| v == 1.0));
            }
        }
    }

    #[test]
    fn deposition_lowers_ast() {
        let mut s = scenario();
        s.noise_sigma = 0.0;
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        let c = synth_campaign(&s, &cell).unwrap();
        let asts: Vec<f64> = c
            .weeks
            .iter()
            .map(|w| {
                let t =
                    crate::metrics::soiling_transmittance(&w.soiled_scans[0], &w.control_scans[0])
                        .unwrap();
                ast(&t.tau, cell.full_band()).unwrap()
            })
            .collect();
        assert!(asts.windows(2).all(|w| w[1] < w[0]), "{asts:?}");
    }

    #[test]
    fn seed_changes_noise_not_trajectory() {
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        let a = synth_campaign(&scenario(), &cell).unwrap();
        let mut s = scenario();
        s.seed = 8;
        let b = synth_campaign(&s, &cell).unwrap();
        assert_eq!(a.k, b.k);
        assert_ne!(a.weeks[0].soiled_scans[0], b.weeks[0].soiled_scans[0]);
        let again = synth_campaign(&scenario(), &cell).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn empty_scenario() {
        let mut s = scenario();
        s.weeks = 0;
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        assert_eq!(
            synth_campaign(&s, &cell).unwrap_err().kind(),
            "EmptyScenario"
        );
    }

    #[test]
    fn scenario_toml_round_trip() {
        let mut s = scenario();
        s.rain_weeks = vec![RainEvent {
            week: 2,
            wash_fraction: 0.5,
            rainfall_mm: 5.0,
        }];
        let back = CampaignScenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }
}
