//! Multi-junction cell description and short-circuit current densities.
//!
//! A [`CellModel`] is an ordered stack of junctions, each with an
//! integration band and a spectral response, plus the reference spectrum
//! under which the reference currents are defined. Cells are loaded from a
//! TOML document that names per-junction response files by relative path:
//!
//! ```toml
//! name = "example"
//! full_band = [300.0, 900.0]          # optional, checked if present
//! reference_spectrum = "ref.csv"      # optional, defaults to ASTM G-173 direct
//! smr_pair = ["top", "mid"]           # optional
//!
//! [[junction]]
//! name = "top"
//! band = [300.0, 700.0]
//! sr = "top_sr.csv"                   # or: eqe = "top_eqe.csv"
//! limiting_eligible = true            # default
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference;
use crate::spectral::{Quantity, Spectrum, Waveband};

/// Planck constant, J·s (CODATA 2018, exact).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m·s⁻¹ (exact).
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
/// Elementary charge, C (CODATA 2018, exact).
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;

const REFERENCE_CURRENT_RTOL: f64 = 1e-9;

/// Converts external quantum efficiency to spectral response (A/W):
/// `SR(λ) = EQE(λ)·λ·q/(h·c)`.
pub fn eqe_to_sr(eqe: &Spectrum) -> Result<Spectrum> {
    if eqe.quantity() != Quantity::QuantumEfficiency {
        return Err(Error::UnitMismatch {
            context: "EQE conversion expects a QuantumEfficiency spectrum".into(),
            got: eqe.quantity(),
        });
    }
    let factor = ELEMENTARY_CHARGE_C / (PLANCK_J_S * SPEED_OF_LIGHT_M_S) * 1e-9;
    let values = eqe
        .wavelengths()
        .iter()
        .zip(eqe.values())
        .map(|(w, q)| q * w * factor)
        .collect();
    Spectrum::new(
        eqe.wavelengths().to_vec(),
        values,
        Quantity::SpectralResponse,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Junction {
    pub name: String,
    pub band: Waveband,
    pub sr: Spectrum,
    pub limiting_eligible: bool,
}

impl Junction {
    pub fn new(
        name: impl Into<String>,
        band: Waveband,
        sr: Spectrum,
        limiting_eligible: bool,
    ) -> Result<Self> {
        let name = name.into();
        if sr.quantity() != Quantity::SpectralResponse {
            return Err(Error::UnitMismatch {
                context: format!("junction {name:?} needs a SpectralResponse curve"),
                got: sr.quantity(),
            });
        }
        if !sr.covers_band(&band) {
            return Err(Error::BandCoverage { junction: name });
        }
        if sr.values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidCell(format!(
                "junction {name:?} has negative spectral response"
            )));
        }
        Ok(Junction {
            name,
            band,
            sr,
            limiting_eligible,
        })
    }
}

/// The stack current and the junction that limits it.
#[derive(Debug, Clone, PartialEq)]
pub struct StackCurrent {
    pub value: f64,
    pub limiting: String,
    /// Another eligible junction produced exactly the same current; the
    /// first in stack order was reported.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellModel {
    pub name: String,
    junctions: Vec<Junction>,
    full_band: Waveband,
    reference_spectrum: Spectrum,
    reference_currents: Vec<f64>,
    smr_pair: (usize, usize),
}

impl CellModel {
    /// Builds a cell and computes its reference currents from
    /// `reference_spectrum`. `smr_pair` defaults to `top`/`mid` if both
    /// names exist, otherwise to the first two junctions.
    pub fn new(
        name: impl Into<String>,
        junctions: Vec<Junction>,
        reference_spectrum: Spectrum,
        smr_pair: Option<(&str, &str)>,
    ) -> Result<Self> {
        let name = name.into();
        if junctions.len() < 2 {
            return Err(Error::InvalidCell(format!(
                "{name:?} needs at least 2 junctions"
            )));
        }
        for (i, j) in junctions.iter().enumerate() {
            if junctions[..i].iter().any(|k| k.name == j.name) {
                return Err(Error::InvalidCell(format!(
                    "duplicate junction name {:?}",
                    j.name
                )));
            }
        }
        if !junctions.iter().any(|j| j.limiting_eligible) {
            return Err(Error::NoEligibleJunction);
        }
        if reference_spectrum.quantity() != Quantity::Irradiance {
            return Err(Error::UnitMismatch {
                context: "reference spectrum must be Irradiance".into(),
                got: reference_spectrum.quantity(),
            });
        }
        let lo = junctions
            .iter()
            .map(|j| j.band.lambda_min_nm)
            .fold(f64::INFINITY, f64::min);
        let hi = junctions
            .iter()
            .map(|j| j.band.lambda_max_nm)
            .fold(f64::NEG_INFINITY, f64::max);
        let full_band = Waveband::new("MJ", lo, hi)?;

        let index_of = |n: &str| {
            junctions
                .iter()
                .position(|j| j.name == n)
                .ok_or_else(|| Error::UnknownJunction(n.to_string()))
        };
        let smr_pair = match smr_pair {
            Some((a, b)) => (index_of(a)?, index_of(b)?),
            None => match (index_of("top"), index_of("mid")) {
                (Ok(a), Ok(b)) => (a, b),
                _ => (0, 1),
            },
        };
        if smr_pair.0 == smr_pair.1 {
            return Err(Error::InvalidCell(
                "SMR pair must name two junctions".into(),
            ));
        }

        let reference_currents = junctions
            .iter()
            .map(|j| jsc_junction(&reference_spectrum, j, None))
            .collect::<Result<Vec<_>>>()?;

        Ok(CellModel {
            name,
            junctions,
            full_band,
            reference_spectrum,
            reference_currents,
            smr_pair,
        })
    }

    /// Loads a cell description from disk; file references resolve relative
    /// to the document's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, &|rel: &str| {
            let p = dir.join(rel);
            std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
        })
        .map_err(|e| match e {
            Error::InvalidCell(m) => Error::InvalidCell(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses a cell description. `resolve` maps a relative file name from
    /// the document to that file's contents.
    pub fn from_toml_str(text: &str, resolve: &dyn Fn(&str) -> Result<String>) -> Result<Self> {
        let cfg: CellConfig =
            toml::from_str(text).map_err(|e| Error::InvalidCell(e.to_string()))?;

        let read_spectrum = |rel: &str| -> Result<Spectrum> {
            Spectrum::from_csv_str(&resolve(rel)?).map_err(|e| match e {
                Error::InvalidSpectrum(m) => Error::InvalidSpectrum(format!("{rel}: {m}")),
                other => other,
            })
        };

        let mut junctions = Vec::with_capacity(cfg.junction.len());
        for jc in &cfg.junction {
            let band = Waveband::new(jc.name.clone(), jc.band[0], jc.band[1])?;
            let sr = match (&jc.sr, &jc.eqe) {
                (Some(sr), None) => read_spectrum(sr)?,
                (None, Some(eqe)) => eqe_to_sr(&read_spectrum(eqe)?)?,
                _ => {
                    return Err(Error::InvalidCell(format!(
                        "junction {:?} must give exactly one of `sr` or `eqe`",
                        jc.name
                    )))
                }
            };
            junctions.push(Junction::new(
                jc.name.clone(),
                band,
                sr,
                jc.limiting_eligible.unwrap_or(true),
            )?);
        }

        let reference_spectrum = match &cfg.reference_spectrum {
            Some(rel) => {
                let text =
                    resolve(rel).map_err(|_| Error::MissingReferenceSpectrum(cfg.name.clone()))?;
                Spectrum::from_csv_str(&text)?
            }
            None => reference::astm_g173_direct(),
        };

        let pair = cfg.smr_pair.as_ref().map(|[a, b]| (a.as_str(), b.as_str()));
        let cell = CellModel::new(cfg.name.clone(), junctions, reference_spectrum, pair)?;

        if let Some([lo, hi]) = cfg.full_band {
            if lo != cell.full_band.lambda_min_nm || hi != cell.full_band.lambda_max_nm {
                return Err(Error::InvalidCell(format!(
                    "full_band [{lo}, {hi}] does not span the junction bands [{}, {}]",
                    cell.full_band.lambda_min_nm, cell.full_band.lambda_max_nm
                )));
            }
        }
        if let Some(stated) = &cfg.reference_currents {
            if stated.len() != cell.junctions.len() {
                return Err(Error::InvalidCell(
                    "reference_currents must list one value per junction".into(),
                ));
            }
            for ((s, c), j) in stated
                .iter()
                .zip(&cell.reference_currents)
                .zip(&cell.junctions)
            {
                if (s - c).abs() > REFERENCE_CURRENT_RTOL * c.abs().max(s.abs()) {
                    return Err(Error::ReferenceCurrentMismatch {
                        junction: j.name.clone(),
                        stated: *s,
                        computed: *c,
                    });
                }
            }
        }
        Ok(cell)
    }

    /// One of the cell descriptions shipped with the crate.
    pub fn bundled(which: BundledCell) -> Self {
        let text = match which {
            BundledCell::LatticeMatched3J => include_str!("../data/cell_3j_lattice_matched.toml"),
            BundledCell::Boxcar3J => include_str!("../data/cell_3j_boxcar.toml"),
            BundledCell::Toy2J => include_str!("../data/cell_2j_toy.toml"),
        };
        Self::from_toml_str(text, &|rel| {
            bundled_file(rel)
                .map(str::to_owned)
                .ok_or_else(|| Error::FileNotFound(rel.into()))
        })
        .expect("bundled cell descriptions are valid")
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn junction(&self, name: &str) -> Result<&Junction> {
        self.junctions
            .iter()
            .find(|j| j.name == name)
            .ok_or_else(|| Error::UnknownJunction(name.to_string()))
    }

    pub fn junction_index(&self, name: &str) -> Result<usize> {
        self.junctions
            .iter()
            .position(|j| j.name == name)
            .ok_or_else(|| Error::UnknownJunction(name.to_string()))
    }

    pub fn full_band(&self) -> &Waveband {
        &self.full_band
    }

    pub fn reference_spectrum(&self) -> &Spectrum {
        &self.reference_spectrum
    }

    pub fn reference_currents(&self) -> &[f64] {
        &self.reference_currents
    }

    pub fn reference_current(&self, name: &str) -> Result<f64> {
        Ok(self.reference_currents[self.junction_index(name)?])
    }

    /// Default junction pair for spectral matching ratios.
    pub fn smr_pair(&self) -> (&str, &str) {
        (
            &self.junctions[self.smr_pair.0].name,
            &self.junctions[self.smr_pair.1].name,
        )
    }

    /// Every band the cell defines: the full band first, then one per
    /// junction.
    pub fn bands(&self) -> Vec<&Waveband> {
        std::iter::once(&self.full_band)
            .chain(self.junctions.iter().map(|j| &j.band))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundledCell {
    /// GaInP/GaInAs/Ge with standard wavebands and illustrative EQE curves.
    LatticeMatched3J,
    /// Standard 3J wavebands with a flat 1 A/W response.
    Boxcar3J,
    /// Two junctions on [300, 700] and [700, 900] nm, flat response, flat
    /// unit reference spectrum.
    Toy2J,
}

impl std::str::FromStr for BundledCell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3j" | "lattice-matched-3j" => Ok(BundledCell::LatticeMatched3J),
            "3j-boxcar" | "boxcar-3j" => Ok(BundledCell::Boxcar3J),
            "2j-toy" | "toy-2j" => Ok(BundledCell::Toy2J),
            other => Err(Error::InvalidCell(format!(
                "no bundled cell named {other:?}"
            ))),
        }
    }
}

fn bundled_file(name: &str) -> Option<&'static str> {
    Some(match name {
        "astm_g173_direct.csv" => reference::ASTM_G173_DIRECT_CSV,
        "illustrative_top_eqe.csv" => include_str!("../data/illustrative_top_eqe.csv"),
        "illustrative_mid_eqe.csv" => include_str!("../data/illustrative_mid_eqe.csv"),
        "illustrative_bot_eqe.csv" => include_str!("../data/illustrative_bot_eqe.csv"),
        "boxcar_sr_300_1810.csv" => include_str!("../data/boxcar_sr_300_1810.csv"),
        "boxcar_sr_300_900.csv" => include_str!("../data/boxcar_sr_300_900.csv"),
        "flat_300_900.csv" => include_str!("../data/flat_300_900.csv"),
        _ => return None,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellConfig {
    name: String,
    full_band: Option<[f64; 2]>,
    reference_spectrum: Option<String>,
    reference_currents: Option<Vec<f64>>,
    smr_pair: Option<[String; 2]>,
    junction: Vec<JunctionConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JunctionConfig {
    name: String,
    band: [f64; 2],
    sr: Option<String>,
    eqe: Option<String>,
    limiting_eligible: Option<bool>,
}

fn check_quantity(s: &Spectrum, expected: Quantity, what: &str) -> Result<()> {
    if s.quantity() != expected {
        return Err(Error::UnitMismatch {
            context: format!("{what} must be {expected}"),
            got: s.quantity(),
        });
    }
    Ok(())
}

/// `E·τ`, or `E` itself when there is no transmittance.
pub(crate) fn effective_irradiance(e: &Spectrum, tau: Option<&Spectrum>) -> Result<Spectrum> {
    check_quantity(e, Quantity::Irradiance, "irradiance")?;
    match tau {
        Some(t) => {
            check_quantity(t, Quantity::Transmittance, "soiling transmittance")?;
            e.pointwise_product(t)
        }
        None => Ok(e.clone()),
    }
}

/// Current of one junction under an already-attenuated irradiance.
pub(crate) fn junction_current(effective: &Spectrum, j: &Junction) -> Result<f64> {
    let band = &j.band;
    if !effective.covers_band(band) {
        return Err(Error::BandOutOfSupport {
            band: band.name.clone(),
            min: band.lambda_min_nm,
            max: band.lambda_max_nm,
            first: effective.first_nm(),
            last: effective.last_nm(),
        });
    }
    effective.pointwise_product(&j.sr)?.integrate(band)
}

/// Short-circuit current density of one junction, A·m⁻²:
/// `∫ E(λ)·τ(λ)·SR(λ) dλ` over the junction band (τ ≡ 1 when absent).
pub fn jsc_junction(e: &Spectrum, j: &Junction, tau: Option<&Spectrum>) -> Result<f64> {
    junction_current(&effective_irradiance(e, tau)?, j)
}

/// Picks the smallest current among eligible junctions; ties go to the
/// first junction in stack order.
pub(crate) fn limiting(cell: &CellModel, currents: &[Option<f64>]) -> Result<StackCurrent> {
    let mut best: Option<(usize, f64)> = None;
    let mut tie = false;
    for (i, c) in currents.iter().enumerate() {
        let Some(c) = *c else { continue };
        if !cell.junctions[i].limiting_eligible {
            continue;
        }
        match best {
            None => best = Some((i, c)),
            Some((_, b)) if c < b => {
                best = Some((i, c));
                tie = false;
            }
            Some((_, b)) if c == b => tie = true,
            _ => {}
        }
    }
    let (i, value) = best.ok_or(Error::NoEligibleJunction)?;
    Ok(StackCurrent {
        value,
        limiting: cell.junctions[i].name.clone(),
        tie,
    })
}

/// Per-junction currents under `effective`, computed only for junctions
/// selected by `want` (others are `None`).
pub(crate) fn junction_currents(
    effective: &Spectrum,
    cell: &CellModel,
    want: impl Fn(usize, &Junction) -> bool,
) -> Result<Vec<Option<f64>>> {
    cell.junctions
        .iter()
        .enumerate()
        .map(|(i, j)| {
            if want(i, j) {
                junction_current(effective, j).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Stack current: the minimum over limiting-eligible junctions.
pub fn jsc_cell(e: &Spectrum, cell: &CellModel, tau: Option<&Spectrum>) -> Result<StackCurrent> {
    if !cell.junctions.iter().any(|j| j.limiting_eligible) {
        return Err(Error::NoEligibleJunction);
    }
    let effective = effective_irradiance(e, tau)?;
    let currents = junction_currents(&effective, cell, |_, j| j.limiting_eligible)?;
    limiting(cell, &currents)
}
