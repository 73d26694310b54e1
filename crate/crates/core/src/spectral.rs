//! Sampled spectra on a wavelength grid.
//!
//! A [`Spectrum`] is a piecewise-linear function of wavelength (nm) tagged
//! with the physical quantity it carries. Every integral in the crate goes
//! through [`Spectrum::integrate`], a trapezoidal rule on the native samples
//! with the band endpoints inserted by linear interpolation. Nothing is ever
//! extrapolated outside the sampled support.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper tolerance for transmittance values above unity (measurement noise).
pub const TRANSMITTANCE_TOLERANCE: f64 = 0.02;

/// Physical quantity carried by a spectrum, which fixes its units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// Spectral irradiance, W·m⁻²·nm⁻¹.
    Irradiance,
    /// Dimensionless transmittance in [0, 1].
    Transmittance,
    /// Spectral response, A·W⁻¹.
    SpectralResponse,
    /// Dimensionless external quantum efficiency.
    QuantumEfficiency,
    /// Spectral current density, A·m⁻²·nm⁻¹.
    SpectralCurrent,
}

impl Quantity {
    pub fn units(self) -> &'static str {
        match self {
            Quantity::Irradiance => "W/m2/nm",
            Quantity::Transmittance | Quantity::QuantumEfficiency => "1",
            Quantity::SpectralResponse => "A/W",
            Quantity::SpectralCurrent => "A/m2/nm",
        }
    }

    /// Quantity of the pointwise product, if the product is meaningful.
    pub fn product(self, other: Quantity) -> Option<Quantity> {
        use Quantity::*;
        match (self, other) {
            (Transmittance, q) | (q, Transmittance) if q != QuantumEfficiency => Some(q),
            (Irradiance, SpectralResponse) | (SpectralResponse, Irradiance) => {
                Some(SpectralCurrent)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quantity::Irradiance => "Irradiance",
            Quantity::Transmittance => "Transmittance",
            Quantity::SpectralResponse => "SpectralResponse",
            Quantity::QuantumEfficiency => "QuantumEfficiency",
            Quantity::SpectralCurrent => "SpectralCurrent",
        };
        f.write_str(s)
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Irradiance" => Ok(Quantity::Irradiance),
            "Transmittance" => Ok(Quantity::Transmittance),
            "SpectralResponse" => Ok(Quantity::SpectralResponse),
            "QuantumEfficiency" => Ok(Quantity::QuantumEfficiency),
            "SpectralCurrent" => Ok(Quantity::SpectralCurrent),
            other => Err(Error::InvalidSpectrum(format!("unknown kind {other:?}"))),
        }
    }
}

/// A named wavelength interval `[min, max]` in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveband {
    pub name: String,
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
}

impl Waveband {
    pub fn new(name: impl Into<String>, lambda_min_nm: f64, lambda_max_nm: f64) -> Result<Self> {
        let name = name.into();
        let ok = lambda_min_nm.is_finite()
            && lambda_max_nm.is_finite()
            && lambda_min_nm > 0.0
            && lambda_min_nm < lambda_max_nm;
        if !ok {
            return Err(Error::InvalidWaveband {
                name,
                min: lambda_min_nm,
                max: lambda_max_nm,
            });
        }
        Ok(Waveband {
            name,
            lambda_min_nm,
            lambda_max_nm,
        })
    }

    pub fn width(&self) -> f64 {
        self.lambda_max_nm - self.lambda_min_nm
    }

    pub fn contains(&self, other: &Waveband) -> bool {
        self.lambda_min_nm <= other.lambda_min_nm && other.lambda_max_nm <= self.lambda_max_nm
    }
}

/// A sampled function of wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    wavelengths_nm: Vec<f64>,
    values: Vec<f64>,
    quantity: Quantity,
}

impl Spectrum {
    pub fn new(wavelengths_nm: Vec<f64>, values: Vec<f64>, quantity: Quantity) -> Result<Self> {
        if wavelengths_nm.len() != values.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} wavelengths but {} values",
                wavelengths_nm.len(),
                values.len()
            )));
        }
        if wavelengths_nm.len() < 2 {
            return Err(Error::InvalidSpectrum("fewer than 2 samples".into()));
        }
        check_grid(&wavelengths_nm)?;
        if wavelengths_nm[0] <= 0.0 {
            return Err(Error::InvalidSpectrum(
                "wavelengths must be positive".into(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum(format!(
                "non-finite value at {} nm",
                wavelengths_nm[i]
            )));
        }
        if quantity == Quantity::Transmittance {
            if let Some(i) = values
                .iter()
                .position(|&v| !(0.0..=1.0 + TRANSMITTANCE_TOLERANCE).contains(&v))
            {
                return Err(Error::InvalidSpectrum(format!(
                    "transmittance {} at {} nm outside [0, {}]",
                    values[i],
                    wavelengths_nm[i],
                    1.0 + TRANSMITTANCE_TOLERANCE
                )));
            }
        }
        Ok(Spectrum {
            wavelengths_nm,
            values,
            quantity,
        })
    }

    /// Evaluates `f` on `grid`.
    pub fn from_fn(grid: &[f64], quantity: Quantity, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&w| f(w)).collect();
        Spectrum::new(grid.to_vec(), values, quantity)
    }

    /// Constant `value` over `[lo, hi]`, sampled at the two endpoints.
    pub fn constant(quantity: Quantity, lo: f64, hi: f64, value: f64) -> Result<Self> {
        Spectrum::new(vec![lo, hi], vec![value, value], quantity)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_nm(&self) -> f64 {
        self.wavelengths_nm[0]
    }

    pub fn last_nm(&self) -> f64 {
        self.wavelengths_nm[self.wavelengths_nm.len() - 1]
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.first_nm() <= lo && hi <= self.last_nm()
    }

    pub fn covers_band(&self, band: &Waveband) -> bool {
        self.covers(band.lambda_min_nm, band.lambda_max_nm)
    }

    /// Linear interpolation at `x`; `None` outside the support.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        if !(self.first_nm() <= x && x <= self.last_nm()) {
            return None;
        }
        Some(self.interpolate(x))
    }

    // Caller guarantees x lies within the support.
    fn interpolate(&self, x: f64) -> f64 {
        let wl = &self.wavelengths_nm;
        let i = wl.partition_point(|&w| w < x);
        if wl[i] == x {
            return self.values[i];
        }
        let (x0, x1) = (wl[i - 1], wl[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Piecewise-linear resampling onto `grid`. Grid points must lie inside
    /// the support; there is no extrapolation.
    pub fn resample(&self, grid: &[f64]) -> Result<Spectrum> {
        check_grid(grid)?;
        let values = grid
            .iter()
            .map(|&x| {
                self.value_at(x).ok_or(Error::GridOutOfSupport {
                    point: x,
                    first: self.first_nm(),
                    last: self.last_nm(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Spectrum::new(grid.to_vec(), values, self.quantity)
    }

    /// Trapezoidal integral over `band`, with interpolated values inserted at
    /// the band edges.
    pub fn integrate(&self, band: &Waveband) -> Result<f64> {
        self.integrate_range(band.lambda_min_nm, band.lambda_max_nm)
            .ok_or_else(|| Error::BandOutOfSupport {
                band: band.name.clone(),
                min: band.lambda_min_nm,
                max: band.lambda_max_nm,
                first: self.first_nm(),
                last: self.last_nm(),
            })
    }

    fn integrate_range(&self, lo: f64, hi: f64) -> Option<f64> {
        if !(lo < hi && self.covers(lo, hi)) {
            return None;
        }
        let wl = &self.wavelengths_nm;
        let start = wl.partition_point(|&w| w <= lo);
        let end = wl.partition_point(|&w| w < hi);

        let mut prev = (lo, self.interpolate(lo));
        let mut sum = 0.0;
        for (&w, &v) in wl[start..end].iter().zip(&self.values[start..end]) {
            let next = (w, v);
            sum += 0.5 * (next.0 - prev.0) * (next.1 + prev.1);
            prev = next;
        }
        let last = (hi, self.interpolate(hi));
        sum += 0.5 * (last.0 - prev.0) * (last.1 + prev.1);
        Some(sum)
    }

    /// Pointwise product on the union of both grids, restricted to the
    /// overlap of the supports.
    pub fn pointwise_product(&self, other: &Spectrum) -> Result<Spectrum> {
        let quantity =
            self.quantity
                .product(other.quantity)
                .ok_or_else(|| Error::UnitMismatch {
                    context: format!("cannot multiply {} by {}", self.quantity, other.quantity),
                    got: other.quantity,
                })?;
        let grid = union_grid(&[self, other])?;
        let values = grid
            .iter()
            .map(|&x| self.interpolate(x) * other.interpolate(x))
            .collect();
        Spectrum::new(grid, values, quantity)
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Spectrum> {
        let values = self.values.iter().map(|v| v * factor).collect();
        Spectrum::new(self.wavelengths_nm.clone(), values, self.quantity)
    }

    /// Same samples, different quantity tag.
    pub fn with_quantity(&self, quantity: Quantity) -> Result<Spectrum> {
        Spectrum::new(self.wavelengths_nm.clone(), self.values.clone(), quantity)
    }

    /// Clamps transmittance values into `[0, 1]` and reports how many
    /// samples were changed.
    pub fn clamp_unit_interval(&self) -> (Spectrum, usize) {
        let mut changed = 0;
        let values = self
            .values
            .iter()
            .map(|&v| {
                let c = v.clamp(0.0, 1.0);
                if c != v {
                    changed += 1;
                }
                c
            })
            .collect();
        let s = Spectrum {
            wavelengths_nm: self.wavelengths_nm.clone(),
            values,
            quantity: self.quantity,
        };
        (s, changed)
    }

    /// Pointwise arithmetic mean of spectra of the same quantity, on the
    /// union of their grids over the common support.
    pub fn mean(spectra: &[&Spectrum]) -> Result<Spectrum> {
        let first = spectra
            .first()
            .ok_or_else(|| Error::InvalidSpectrum("mean of zero spectra".into()))?;
        if let Some(s) = spectra.iter().find(|s| s.quantity != first.quantity) {
            return Err(Error::UnitMismatch {
                context: format!("mean over {} spectra", first.quantity),
                got: s.quantity,
            });
        }
        let grid = union_grid(spectra)?;
        let n = spectra.len() as f64;
        let values = grid
            .iter()
            .map(|&x| spectra.iter().map(|s| s.interpolate(x)).sum::<f64>() / n)
            .collect();
        Spectrum::new(grid, values, first.quantity)
    }

    /// Parses the two-column CSV format: a `# kind=<Kind> units=<units>`
    /// line, the `wavelength_nm,value` header, then ascending rows.
    pub fn from_csv_str(text: &str) -> Result<Spectrum> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, meta) = lines
            .next()
            .ok_or_else(|| Error::InvalidSpectrum("empty file".into()))?;
        let quantity = parse_metadata(meta)?;
        match lines.next() {
            Some((_, header)) if header.trim() == "wavelength_nm,value" => {}
            _ => {
                return Err(Error::InvalidSpectrum(
                    "missing `wavelength_nm,value` header".into(),
                ))
            }
        }
        let mut wavelengths = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines {
            let mut fields = line.split(',');
            let (Some(w), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::InvalidSpectrum(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidSpectrum(format!("line {}: {e}: {s:?}", lineno + 1)))
            };
            wavelengths.push(parse(w)?);
            values.push(parse(v)?);
        }
        Spectrum::new(wavelengths, values, quantity)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# kind={} units={}\nwavelength_nm,value\n",
            self.quantity,
            self.quantity.units()
        );
        for (w, v) in self.wavelengths_nm.iter().zip(&self.values) {
            out.push_str(&format!("{w},{v}\n"));
        }
        out
    }
}

fn parse_metadata(line: &str) -> Result<Quantity> {
    let body = line.trim().strip_prefix('#').ok_or_else(|| {
        Error::InvalidSpectrum("first line must be `# kind=... units=...`".into())
    })?;
    let mut kind = None;
    let mut units = None;
    for token in body.split_whitespace() {
        match token.split_once('=') {
            Some(("kind", v)) => kind = Some(v),
            Some(("units", v)) => units = Some(v),
            _ => {}
        }
    }
    let quantity: Quantity = kind
        .ok_or_else(|| Error::InvalidSpectrum("metadata line lacks kind=".into()))?
        .parse()?;
    match units {
        Some(u) if u != quantity.units() => Err(Error::InvalidSpectrum(format!(
            "units {u:?} do not match kind {quantity} (expected {:?})",
            quantity.units()
        ))),
        _ => Ok(quantity),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidSpectrum(format!("non-finite wavelength {x}")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpectrum(format!(
            "wavelengths not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Sorted union of the sample grids, restricted to the common support.
pub fn union_grid(spectra: &[&Spectrum]) -> Result<Vec<f64>> {
    let lo = spectra
        .iter()
        .map(|s| s.first_nm())
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = spectra
        .iter()
        .map(|s| s.last_nm())
        .fold(f64::INFINITY, f64::min);
    if spectra.is_empty() || lo >= hi {
        return Err(Error::NoOverlap);
    }
    let mut grid: Vec<f64> = spectra
        .iter()
        .flat_map(|s| s.wavelengths().iter().copied())
        .filter(|&w| lo <= w && w <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Grid from `lo` to `hi` inclusive in steps of `step`; the last interval
/// is shorter when `step` does not divide the span.
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let slack = 1e-9 * step;
    let mut grid: Vec<f64> = (0..)
        .map(|i| lo + step * i as f64)
        .take_while(|&x| x < hi - slack)
        .collect();
    grid.push(hi);
    grid
}
