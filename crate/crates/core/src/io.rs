//! On-disk campaign layout.
//!
//! ```text
//! <data>/
//!   weeks.csv                    week_id,scan_date[,soiled_1..3,control_1..3]
//!   scans/week01_soiled_1.csv    coupon scans (spectrum CSV format)
//!   field/2017-01-02.csv         one file per field day
//!   spectra/...                  spectral DNI files referenced by field rows
//! ```
//!
//! Optional columns in `weeks.csv` override the conventional scan file
//! names; paths there and in `spectrum_file` are relative to `<data>`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};
use crate::pipeline::{CampaignResult, FieldDay, FieldRecord, WeeklyMeasurement, REPLICATES};
use crate::spectral::Spectrum;
use crate::synth::SyntheticCampaign;

pub const WEEKS_FILE: &str = "weeks.csv";
pub const FIELD_HEADER: [&str; 9] = [
    "timestamp_iso8601",
    "dni_wm2",
    "gni_wm2",
    "ghi_wm2",
    "dhi_wm2",
    "rainfall_mm",
    "pm10",
    "pm25",
    "spectrum_file",
];
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Spectrum::from_csv_str(&text).map_err(|e| match e {
        Error::InvalidSpectrum(m) => Error::parse(path, m),
        other => other,
    })
}

pub fn scan_file_name(week: u32, role: &str, replicate: usize) -> String {
    format!("scans/week{week:02}_{role}_{replicate}.csv")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::parse(path, e.to_string())
}

/// Reads every weekly measurement and field day of a campaign directory.
/// Missing scan files leave the week with fewer replicates, which the
/// pipeline then rejects.
pub fn load_campaign_dir(dir: &Path) -> Result<(Vec<WeeklyMeasurement>, Vec<FieldDay>)> {
    if !dir.is_dir() {
        return Err(Error::FileNotFound(dir.to_path_buf()));
    }
    let weeks_path = dir.join(WEEKS_FILE);
    if !weeks_path.is_file() {
        return Err(Error::NoWeeksFound(dir.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(&weeks_path).map_err(|e| csv_err(&weeks_path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_err(&weeks_path, e))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id_col), Some(date_col)) = (column("week_id"), column("scan_date")) else {
        return Err(Error::parse(
            &weeks_path,
            "header needs week_id and scan_date",
        ));
    };

    let mut weeks = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_err(&weeks_path, e))?;
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let week_id: u32 = field(id_col)
            .parse()
            .map_err(|_| Error::parse(&weeks_path, format!("bad week_id {:?}", field(id_col))))?;
        let scan_date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d").map_err(|_| {
            Error::parse(&weeks_path, format!("bad scan_date {:?}", field(date_col)))
        })?;

        let scans = |role: &str| -> Result<Vec<Spectrum>> {
            let mut out = Vec::new();
            for r in 1..=REPLICATES {
                let rel = column(&format!("{role}_{r}"))
                    .map(field)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .unwrap_or_else(|| scan_file_name(week_id, role, r));
                let path = dir.join(rel);
                if path.is_file() {
                    out.push(read_spectrum(&path)?);
                }
            }
            Ok(out)
        };
        let soiled_scans = scans("soiled")?;
        let control_scans = scans("control")?;
        weeks.push(WeeklyMeasurement {
            week_id,
            scan_date,
            soiled_scans,
            control_scans,
        });
    }
    if weeks.is_empty() {
        return Err(Error::NoWeeksFound(dir.to_path_buf()));
    }

    let mut days = Vec::new();
    let field_dir = dir.join("field");
    if field_dir.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(&field_dir)
            .map_err(|e| Error::io(&field_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        let mut cache = HashMap::new();
        for f in files {
            days.push(read_field_day(&f, dir, &mut cache)?);
        }
    }
    days.sort_by_key(|d| d.date);
    Ok((weeks, days))
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .ok()
        .or_else(|| {
            DateTime::parse_from_rfc3339(s)
                .ok()
                .map(|d| d.naive_local())
        })
}

fn read_field_day(
    path: &Path,
    root: &Path,
    cache: &mut HashMap<PathBuf, Spectrum>,
) -> Result<FieldDay> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols: Vec<Option<usize>> = FIELD_HEADER
        .iter()
        .map(|h| headers.iter().position(|x| x == *h))
        .collect();
    for (i, name) in FIELD_HEADER.iter().enumerate().take(5) {
        if cols[i].is_none() {
            return Err(Error::parse(path, format!("missing column {name}")));
        }
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let get = |i: usize| {
            cols[i]
                .and_then(|c| row.get(c))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let number = |i: usize| -> Result<Option<f64>> {
            get(i)
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::parse(path, format!("bad {} value {s:?}", FIELD_HEADER[i]))
                    })
                })
                .transpose()
        };
        let required = |i: usize| -> Result<f64> {
            number(i)?.ok_or_else(|| Error::parse(path, format!("missing {}", FIELD_HEADER[i])))
        };
        let ts = get(0).ok_or_else(|| Error::parse(path, "missing timestamp"))?;
        let timestamp = parse_timestamp(ts)
            .ok_or_else(|| Error::parse(path, format!("bad timestamp {ts:?}")))?;
        let spectral_dni = match get(8) {
            Some(rel) => {
                let p = root.join(rel);
                if let Some(s) = cache.get(&p) {
                    Some(s.clone())
                } else {
                    let s = read_spectrum(&p)?;
                    cache.insert(p, s.clone());
                    Some(s)
                }
            }
            None => None,
        };
        records.push(FieldRecord {
            timestamp,
            dni: required(1)?,
            gni: required(2)?,
            ghi: required(3)?,
            dhi: required(4)?,
            rainfall_mm: number(5)?,
            pm10: number(6)?,
            pm25: number(7)?,
            spectral_dni,
        });
    }
    let date = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
        .or_else(|| records.first().map(|r| r.timestamp.date()))
        .ok_or_else(|| Error::parse(path, "cannot determine the day's date"))?;
    FieldDay::new(date, records).map_err(|e| match e {
        Error::InvalidSpectrum(m) => Error::parse(path, m),
        other => other,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes a synthetic campaign in the layout [`load_campaign_dir`] reads,
/// plus a copy of the scenario.
pub fn write_campaign_dir(dir: &Path, campaign: &SyntheticCampaign) -> Result<()> {
    write(
        &dir.join("scenario.toml"),
        &campaign.scenario.to_toml_string(),
    )?;

    let mut weeks_csv = String::from("week_id,scan_date\n");
    for w in &campaign.weeks {
        weeks_csv.push_str(&format!(
            "{},{}\n",
            w.week_id,
            w.scan_date.format("%Y-%m-%d")
        ));
        for (role, scans) in [("soiled", &w.soiled_scans), ("control", &w.control_scans)] {
            for (r, s) in scans.iter().enumerate() {
                write(
                    &dir.join(scan_file_name(w.week_id, role, r + 1)),
                    &s.to_csv_string(),
                )?;
            }
        }
    }
    write(&dir.join(WEEKS_FILE), &weeks_csv)?;

    for day in &campaign.days {
        let mut out = FIELD_HEADER.join(",");
        out.push('\n');
        for r in day.records() {
            let spectrum_file = match &r.spectral_dni {
                Some(s) => {
                    let rel = format!("spectra/{}.csv", r.timestamp.format("%Y-%m-%dT%H%M"));
                    write(&dir.join(&rel), &s.to_csv_string())?;
                    rel
                }
                None => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.timestamp.format(TIMESTAMP_FORMAT),
                r.dni,
                r.gni,
                r.ghi,
                r.dhi,
                opt(r.rainfall_mm),
                opt(r.pm10),
                opt(r.pm25),
                spectrum_file
            ));
        }
        write(
            &dir.join(format!("field/{}.csv", day.date.format("%Y-%m-%d"))),
            &out,
        )?;
    }
    Ok(())
}

/// One row per week, report columns after the bookkeeping columns.
pub fn weekly_csv(result: &CampaignResult) -> String {
    let report_cols = result
        .weekly
        .iter()
        .find_map(|w| w.report.as_ref())
        .map(|r| r.columns())
        .unwrap_or_default();
    let mut out = vec![
        "week_id",
        "scan_date",
        "accepted",
        "rejection",
        "spread",
        "spectra_date",
        "spectra_used",
    ]
    .into_iter()
    .map(str::to_owned)
    .chain(report_cols.iter().cloned())
    .collect::<Vec<_>>()
    .join(",");
    out.push('\n');
    for w in &result.weekly {
        let rejection = w
            .rejection
            .as_ref()
            .and_then(|r| serde_json::to_value(r).ok())
            .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned))
            .unwrap_or_default();
        let mut row = vec![
            w.week_id.to_string(),
            w.scan_date.format("%Y-%m-%d").to_string(),
            w.accepted.to_string(),
            rejection,
            opt(w.spread),
            w.spectra_date
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_default(),
            w.spectra_used.to_string(),
        ];
        match &w.report {
            Some(r) => row.extend(r.row()),
            None => row.extend(std::iter::repeat_n(String::new(), report_cols.len())),
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
