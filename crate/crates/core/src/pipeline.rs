//! Weekly soiling campaign: replicate screening, clear-day spectrum
//! selection, per-week indexes, summaries, and regression fits.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellmodel::CellModel;
use crate::error::{Error, Result};
use crate::metrics::{ast, index_report_accumulated, soiling_transmittance, IndexReport};
use crate::spectral::Spectrum;
use crate::stats::{linfit, FitResult};

/// Replicates whose full-band AST differs by more than this (max − min)
/// reject the week.
pub const DEFAULT_SPREAD_THRESHOLD: f64 = 0.01;
/// Days with ΣDNI/ΣGNI below this ratio are cloudy.
pub const CLOUDY_RATIO: f64 = 0.75;
pub const REPLICATES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyMeasurement {
    pub week_id: u32,
    pub scan_date: NaiveDate,
    pub soiled_scans: Vec<Spectrum>,
    pub control_scans: Vec<Spectrum>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub timestamp: NaiveDateTime,
    pub dni: f64,
    pub gni: f64,
    pub ghi: f64,
    pub dhi: f64,
    pub rainfall_mm: Option<f64>,
    pub pm10: Option<f64>,
    pub pm25: Option<f64>,
    pub spectral_dni: Option<Spectrum>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDay {
    pub date: NaiveDate,
    records: Vec<FieldRecord>,
}

impl FieldDay {
    pub fn new(date: NaiveDate, records: Vec<FieldRecord>) -> Result<Self> {
        if let Some(w) = records
            .windows(2)
            .find(|w| w[0].timestamp >= w[1].timestamp)
        {
            return Err(Error::InvalidSpectrum(format!(
                "field records for {date} not strictly increasing at {}",
                w[1].timestamp
            )));
        }
        for r in &records {
            if [r.dni, r.gni, r.ghi, r.dhi]
                .iter()
                .any(|v| !v.is_finite() || *v < 0.0)
            {
                return Err(Error::InvalidSpectrum(format!(
                    "negative or non-finite irradiance at {}",
                    r.timestamp
                )));
            }
        }
        Ok(FieldDay { date, records })
    }

    pub fn records(&self) -> &[FieldRecord] {
        &self.records
    }

    pub fn spectra(&self) -> impl Iterator<Item = (&NaiveDateTime, &Spectrum)> {
        self.records
            .iter()
            .filter_map(|r| r.spectral_dni.as_ref().map(|s| (&r.timestamp, s)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// The spectral record nearest solar noon.
    Noon,
    /// Currents and irradiances summed over every spectral record of the day.
    #[serde(rename = "daily")]
    DailyCurrentWeighted,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noon" => Ok(Aggregation::Noon),
            "daily" => Ok(Aggregation::DailyCurrentWeighted),
            other => Err(Error::Parse {
                path: "--aggregation".into(),
                message: format!("expected `noon` or `daily`, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOptions {
    pub aggregation: Aggregation,
    pub spread_threshold: f64,
    pub cloudy_ratio: f64,
    /// Clock time of solar noon in the record timestamps.
    pub solar_noon: NaiveTime,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            aggregation: Aggregation::DailyCurrentWeighted,
            spread_threshold: DEFAULT_SPREAD_THRESHOLD,
            cloudy_ratio: CLOUDY_RATIO,
            solar_noon: NaiveTime::from_hms_opt(12, 0, 0).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Rejection {
    IncompleteReplicates { found: usize },
    SpreadExceeded { spread: f64, threshold: f64 },
    NoClearDay,
    NoSpectra { date: NaiveDate },
    Failed { error: String, message: String },
}

impl From<Error> for Rejection {
    fn from(e: Error) -> Self {
        match e {
            Error::IncompleteReplicates { found } => Rejection::IncompleteReplicates { found },
            other => Rejection::Failed {
                error: other.kind().to_string(),
                message: other.to_string(),
            },
        }
    }
}

/// Outcome of the replicate screening for one week.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateCheck {
    /// Full-band AST of each replicate's soiling transmittance.
    pub replicate_ast: Vec<f64>,
    pub spread: f64,
    /// Mean of the replicate transmittance curves.
    pub tau: Spectrum,
    pub above_unity: usize,
    pub clamped: usize,
    pub rejection: Option<Rejection>,
}

impl ReplicateCheck {
    pub fn accepted(&self) -> bool {
        self.rejection.is_none()
    }
}

/// Screens the triplicate scans of a week: each replicate pair yields a
/// soiling transmittance, and the week is rejected when the full-band AST
/// of the replicates spreads by more than `spread_threshold`.
pub fn validate_week(
    m: &WeeklyMeasurement,
    cell: &CellModel,
    spread_threshold: f64,
) -> Result<ReplicateCheck> {
    let found = m.soiled_scans.len().min(m.control_scans.len());
    if m.soiled_scans.len() != REPLICATES || m.control_scans.len() != REPLICATES {
        return Err(Error::IncompleteReplicates { found });
    }
    let mut taus = Vec::with_capacity(REPLICATES);
    let (mut above_unity, mut clamped) = (0, 0);
    for (s, c) in m.soiled_scans.iter().zip(&m.control_scans) {
        let t = soiling_transmittance(s, c)?;
        above_unity += t.above_unity;
        clamped += t.clamped;
        taus.push(t.tau);
    }
    let replicate_ast = taus
        .iter()
        .map(|t| ast(t, cell.full_band()))
        .collect::<Result<Vec<_>>>()?;
    let max = replicate_ast
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = replicate_ast.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    let refs: Vec<&Spectrum> = taus.iter().collect();
    let tau = Spectrum::mean(&refs)?;
    let rejection = (spread > spread_threshold).then_some(Rejection::SpreadExceeded {
        spread,
        threshold: spread_threshold,
    });
    Ok(ReplicateCheck {
        replicate_ast,
        spread,
        tau,
        above_unity,
        clamped,
        rejection,
    })
}

/// ΣDNI/ΣGNI over records with positive GNI, compared against `ratio`.
pub fn is_cloudy(day: &FieldDay, ratio: f64) -> Result<bool> {
    let (dni, gni) = day
        .records
        .iter()
        .filter(|r| r.gni > 0.0)
        .fold((0.0, 0.0), |(d, g), r| (d + r.dni, g + r.gni));
    if gni == 0.0 {
        return Err(Error::NoIrradianceRecords);
    }
    Ok(dni / gni < ratio)
}

/// The field day whose spectra are used for a scan: the scan day when
/// clear, else the clear neighbour (previous day first).
pub fn select_spectra(
    scan_date: NaiveDate,
    days: &[FieldDay],
    cloudy_ratio: f64,
) -> std::result::Result<&FieldDay, Rejection> {
    let candidates = [
        scan_date,
        scan_date - Duration::days(1),
        scan_date + Duration::days(1),
    ];
    candidates
        .iter()
        .filter_map(|d| days.iter().find(|day| day.date == *d))
        .find(|day| matches!(is_cloudy(day, cloudy_ratio), Ok(false)))
        .ok_or(Rejection::NoClearDay)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekResult {
    pub week_id: u32,
    pub scan_date: NaiveDate,
    pub accepted: bool,
    pub rejection: Option<Rejection>,
    pub replicate_ast: Vec<f64>,
    pub spread: Option<f64>,
    pub spectra_date: Option<NaiveDate>,
    pub spectra_used: usize,
    pub tau_above_unity: usize,
    pub tau_clamped: usize,
    pub report: Option<IndexReport>,
    pub tau: Option<Spectrum>,
}

impl WeekResult {
    fn rejected(m: &WeeklyMeasurement, r: Rejection) -> Self {
        WeekResult {
            week_id: m.week_id,
            scan_date: m.scan_date,
            accepted: false,
            rejection: Some(r),
            replicate_ast: Vec::new(),
            spread: None,
            spectra_date: None,
            spectra_used: 0,
            tau_above_unity: 0,
            tau_clamped: 0,
            report: None,
            tau: None,
        }
    }

    /// Value of a named index: a report field, `ast_<band>`, or a ratio of
    /// two such names written `a/b`.
    pub fn index(&self, name: &str) -> Option<f64> {
        let r = self.report.as_ref()?;
        if let Some((a, b)) = name.split_once('/') {
            return Some(self.index(a)? / self.index(b)?);
        }
        match name {
            "sratio" => Some(r.sratio),
            "bsratio" => Some(r.bsratio),
            "ssratio" => Some(r.ssratio),
            "smr_cleaned" => Some(r.smr_cleaned),
            "smr_soiled" => Some(r.smr_soiled),
            "smratio" => Some(r.smratio),
            _ => r.ast(name.strip_prefix("ast_")?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSummary {
    pub index: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub total_weeks: usize,
    pub accepted_weeks: usize,
    pub rejected_weeks: usize,
    pub indexes: Vec<IndexSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignResult {
    pub cell: String,
    pub aggregation: Aggregation,
    pub spread_threshold: f64,
    pub cloudy_ratio: f64,
    pub weekly: Vec<WeekResult>,
    pub summary: CampaignSummary,
    pub fits: BTreeMap<String, FitResult>,
    pub fit_errors: BTreeMap<String, String>,
}

impl CampaignResult {
    pub fn accepted(&self) -> impl Iterator<Item = &WeekResult> {
        self.weekly.iter().filter(|w| w.accepted)
    }

    /// `(week_id, value)` of an index over accepted weeks.
    pub fn series(&self, name: &str) -> Vec<(u32, f64)> {
        self.accepted()
            .filter_map(|w| Some((w.week_id, w.index(name)?)))
            .collect()
    }

    /// Index names in reporting order: the report scalars, then `ast_<band>`
    /// for every band of the cell.
    pub fn index_names(&self) -> Vec<String> {
        self.accepted()
            .next()
            .and_then(|w| w.report.as_ref())
            .map(|r| {
                r.columns()
                    .into_iter()
                    .filter(|c| !c.starts_with("limiting"))
                    .collect()
            })
            .unwrap_or_default()
    }
}

fn process_week(
    m: &WeeklyMeasurement,
    days: &[FieldDay],
    cell: &CellModel,
    opts: &CampaignOptions,
) -> WeekResult {
    let check = match validate_week(m, cell, opts.spread_threshold) {
        Ok(c) => c,
        Err(e) => return WeekResult::rejected(m, e.into()),
    };
    let mut out = WeekResult {
        week_id: m.week_id,
        scan_date: m.scan_date,
        accepted: false,
        rejection: None,
        replicate_ast: check.replicate_ast.clone(),
        spread: Some(check.spread),
        spectra_date: None,
        spectra_used: 0,
        tau_above_unity: check.above_unity,
        tau_clamped: check.clamped,
        report: None,
        tau: None,
    };
    if let Some(r) = check.rejection {
        out.rejection = Some(r);
        return out;
    }
    let day = match select_spectra(m.scan_date, days, opts.cloudy_ratio) {
        Ok(d) => d,
        Err(r) => {
            out.rejection = Some(r);
            return out;
        }
    };
    out.spectra_date = Some(day.date);

    let spectra: Vec<Spectrum> = match opts.aggregation {
        Aggregation::Noon => {
            let noon = day.date.and_time(opts.solar_noon);
            day.spectra()
                .min_by_key(|(t, _)| (**t - noon).num_seconds().abs())
                .map(|(_, s)| vec![s.clone()])
                .unwrap_or_default()
        }
        Aggregation::DailyCurrentWeighted => day.spectra().map(|(_, s)| s.clone()).collect(),
    };
    if spectra.is_empty() {
        out.rejection = Some(Rejection::NoSpectra { date: day.date });
        return out;
    }
    out.spectra_used = spectra.len();
    match index_report_accumulated(&spectra, cell, &check.tau) {
        Ok(report) => {
            out.accepted = true;
            out.report = Some(report);
            out.tau = Some(check.tau);
        }
        Err(e) => out.rejection = Some(e.into()),
    }
    out
}

/// Runs the whole campaign. Per-week failures become rejections; the
/// campaign itself never aborts. Weeks are processed in parallel and
/// reported in `week_id` order.
pub fn run_campaign(
    weeks: &[WeeklyMeasurement],
    days: &[FieldDay],
    cell: &CellModel,
    opts: &CampaignOptions,
) -> CampaignResult {
    let mut order: Vec<&WeeklyMeasurement> = weeks.iter().collect();
    order.sort_by_key(|m| m.week_id);
    let weekly: Vec<WeekResult> = order
        .par_iter()
        .map(|m| process_week(m, days, cell, opts))
        .collect();

    let mut result = CampaignResult {
        cell: cell.name.clone(),
        aggregation: opts.aggregation,
        spread_threshold: opts.spread_threshold,
        cloudy_ratio: opts.cloudy_ratio,
        summary: CampaignSummary {
            total_weeks: weekly.len(),
            accepted_weeks: weekly.iter().filter(|w| w.accepted).count(),
            rejected_weeks: weekly.iter().filter(|w| !w.accepted).count(),
            indexes: Vec::new(),
        },
        weekly,
        fits: BTreeMap::new(),
        fit_errors: BTreeMap::new(),
    };
    result.summary.indexes = summarize(&result);
    let (fits, errors) = campaign_fits(&result, cell);
    result.fits = fits;
    result.fit_errors = errors;
    result
}

fn summarize(result: &CampaignResult) -> Vec<IndexSummary> {
    result
        .index_names()
        .into_iter()
        .filter_map(|name| {
            let values: Vec<f64> = result.series(&name).into_iter().map(|(_, v)| v).collect();
            if values.is_empty() {
                return None;
            }
            Some(IndexSummary {
                mean: values.iter().sum::<f64>() / values.len() as f64,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                index: name,
            })
        })
        .collect()
}

/// Variables regressed against the full-band AST: the loss ratios and the
/// AST ratio of every junction pair.
pub fn fit_targets(cell: &CellModel) -> Vec<String> {
    let mut out: Vec<String> = ["sratio", "bsratio", "ssratio", "smratio"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let js = cell.junctions();
    for a in 0..js.len() {
        for b in a + 1..js.len() {
            out.push(format!("ast_{}/ast_{}", js[a].name, js[b].name));
        }
    }
    out
}

fn campaign_fits(
    result: &CampaignResult,
    cell: &CellModel,
) -> (BTreeMap<String, FitResult>, BTreeMap<String, String>) {
    let x_name = format!("ast_{}", cell.full_band().name);
    let mut fits = BTreeMap::new();
    let mut errors = BTreeMap::new();
    for y_name in fit_targets(cell) {
        let (x, y): (Vec<f64>, Vec<f64>) = result
            .accepted()
            .filter_map(|w| Some((w.index(&x_name)?, w.index(&y_name)?)))
            .unzip();
        let key = format!("{y_name}_vs_{x_name}");
        match linfit(&x, &y) {
            Ok(f) => {
                fits.insert(key, f);
            }
            Err(e) => {
                errors.insert(key, e.to_string());
            }
        }
    }
    (fits, errors)
}

/// Least-squares soiling rate: full-band AST against week index over the
/// accepted weeks in `weeks`. The slope is in AST per week.
pub fn soiling_rate_fit(result: &CampaignResult, weeks: RangeInclusive<u32>) -> Result<FitResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = result
        .series("ast_MJ")
        .into_iter()
        .filter(|(w, _)| weeks.contains(w))
        .map(|(w, v)| (f64::from(w), v))
        .unzip();
    linfit(&x, &y)
}
