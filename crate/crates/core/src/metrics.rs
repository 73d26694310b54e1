//! Soiling indexes.
//!
//! | index     | meaning                                                         |
//! |-----------|-----------------------------------------------------------------|
//! | SRatio    | soiled / clean stack current                                    |
//! | BSRatio   | soiled / clean irradiance over the full cell band               |
//! | SSRatio   | SRatio / BSRatio, the purely spectral part of the loss          |
//! | SMR       | current ratio of a junction pair, normalised to the reference   |
//! | SMratio   | soiled SMR / clean SMR (reference currents cancel)              |
//! | AST       | band-averaged soiling transmittance                             |
//!
//! Soiling transmittance itself comes from a soiled/control coupon pair via
//! [`soiling_transmittance`].

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::cellmodel::{
    effective_irradiance, jsc_cell, junction_currents, limiting, CellModel, StackCurrent,
};
use crate::error::{Error, Result};
use crate::spectral::{union_grid, Quantity, Spectrum, Waveband, TRANSMITTANCE_TOLERANCE};

/// Control-coupon transmittance below this value marks a corrupted scan.
pub const CONTROL_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SoilingTransmittance {
    pub tau: Spectrum,
    /// Samples above 1 (kept, up to the noise tolerance).
    pub above_unity: usize,
    /// Samples above `1 + TRANSMITTANCE_TOLERANCE`, clamped to that bound.
    pub clamped: usize,
}

/// Soiling transmittance `τ_soiled(λ) / τ_control(λ)` on the union grid of
/// the two scans.
pub fn soiling_transmittance(
    soiled: &Spectrum,
    control: &Spectrum,
) -> Result<SoilingTransmittance> {
    for (s, what) in [(soiled, "soiled scan"), (control, "control scan")] {
        if s.quantity() != Quantity::Transmittance {
            return Err(Error::UnitMismatch {
                context: format!("{what} must be Transmittance"),
                got: s.quantity(),
            });
        }
    }
    let grid = union_grid(&[soiled, control])?;
    let upper = 1.0 + TRANSMITTANCE_TOLERANCE;
    let mut above_unity = 0;
    let mut clamped = 0;
    let mut values = Vec::with_capacity(grid.len());
    for &w in &grid {
        let c = control.value_at(w).expect("grid within support");
        if c < CONTROL_FLOOR {
            return Err(Error::ControlBelowFloor {
                wavelength: w,
                value: c,
                floor: CONTROL_FLOOR,
            });
        }
        let mut t = soiled.value_at(w).expect("grid within support") / c;
        if t > 1.0 {
            above_unity += 1;
        }
        if t > upper {
            clamped += 1;
            t = upper;
        }
        values.push(t);
    }
    Ok(SoilingTransmittance {
        tau: Spectrum::new(grid, values, Quantity::Transmittance)?,
        above_unity,
        clamped,
    })
}

/// Average spectral transmittance over `band`.
pub fn ast(tau: &Spectrum, band: &Waveband) -> Result<f64> {
    if tau.quantity() != Quantity::Transmittance {
        return Err(Error::UnitMismatch {
            context: "AST needs a Transmittance spectrum".into(),
            got: tau.quantity(),
        });
    }
    Ok(tau.integrate(band)? / band.width())
}

/// The level `c` of a transmittance that is constant over the whole cell
/// band, where every soiled integral is exactly `c` times the clean one.
/// Ratios are then taken from the factor itself, not from two rounded
/// integrals.
fn flat_level(tau: &Spectrum, cell: &CellModel) -> Option<f64> {
    let band = cell.full_band();
    if tau.quantity() != Quantity::Transmittance || !tau.covers_band(band) {
        return None;
    }
    let w = tau.wavelengths();
    let first = w.partition_point(|&x| x <= band.lambda_min_nm) - 1;
    let last = w.partition_point(|&x| x < band.lambda_max_nm);
    let vals = &tau.values()[first..=last];
    let c = vals[0];
    (c > 0.0 && vals.iter().all(|&v| v == c)).then_some(c)
}

pub fn sratio(e: &Spectrum, cell: &CellModel, tau: &Spectrum) -> Result<f64> {
    let clean = jsc_cell(e, cell, None)?;
    if let Some(c) = flat_level(tau, cell) {
        if clean.value == 0.0 {
            return Err(Error::ZeroCleanCurrent);
        }
        return Ok(c);
    }
    let soiled = jsc_cell(e, cell, Some(tau))?;
    if clean.value == 0.0 {
        return Err(Error::ZeroCleanCurrent);
    }
    Ok(soiled.value / clean.value)
}

pub fn bsratio(e: &Spectrum, cell: &CellModel, tau: &Spectrum) -> Result<f64> {
    let band = cell.full_band();
    let clean = effective_irradiance(e, None)?.integrate(band)?;
    if clean == 0.0 {
        return Err(Error::ZeroDenominator("BSRatio"));
    }
    if let Some(c) = flat_level(tau, cell) {
        return Ok(c);
    }
    let soiled = effective_irradiance(e, Some(tau))?.integrate(band)?;
    Ok(soiled / clean)
}

pub fn ssratio(e: &Spectrum, cell: &CellModel, tau: &Spectrum) -> Result<f64> {
    Ok(sratio(e, cell, tau)? / bsratio(e, cell, tau)?)
}

fn pair_or_default<'a>(
    cell: &'a CellModel,
    pair: Option<(&'a str, &'a str)>,
) -> Result<(usize, usize)> {
    let (a, b) = pair.unwrap_or_else(|| cell.smr_pair());
    Ok((cell.junction_index(a)?, cell.junction_index(b)?))
}

fn pair_currents(
    e: &Spectrum,
    cell: &CellModel,
    tau: Option<&Spectrum>,
    (a, b): (usize, usize),
) -> Result<(f64, f64)> {
    let eff = effective_irradiance(e, tau)?;
    let c = junction_currents(&eff, cell, |i, _| i == a || i == b)?;
    Ok((c[a].expect("computed"), c[b].expect("computed")))
}

fn smr_from(cell: &CellModel, (a, b): (usize, usize), ja: f64, jb: f64) -> Result<f64> {
    let refs = cell.reference_currents();
    let name = |i: usize| cell.junctions()[i].name.clone();
    if jb == 0.0 {
        return Err(Error::ZeroCurrent(name(b)));
    }
    if refs[a] == 0.0 {
        return Err(Error::ZeroCurrent(name(a)));
    }
    Ok((ja * refs[b]) / (jb * refs[a]))
}

fn smratio_from(
    cell: &CellModel,
    (a, b): (usize, usize),
    clean: (f64, f64),
    soiled: (f64, f64),
) -> Result<f64> {
    let name = |i: usize| cell.junctions()[i].name.clone();
    if soiled.1 == 0.0 {
        return Err(Error::ZeroCurrent(name(b)));
    }
    if clean.0 == 0.0 {
        return Err(Error::ZeroCurrent(name(a)));
    }
    Ok((soiled.0 * clean.1) / (soiled.1 * clean.0))
}

/// Spectral matching ratio of an ordered junction pair (default: the
/// cell's configured pair, normally top/mid). With `tau` the soiled
/// currents are used.
pub fn smr(
    e: &Spectrum,
    cell: &CellModel,
    tau: Option<&Spectrum>,
    pair: Option<(&str, &str)>,
) -> Result<f64> {
    let idx = pair_or_default(cell, pair)?;
    let tau = tau.filter(|t| flat_level(t, cell).is_none());
    let (ja, jb) = pair_currents(e, cell, tau, idx)?;
    smr_from(cell, idx, ja, jb)
}

/// Soiled-to-clean SMR ratio, in the form where reference currents cancel.
pub fn smratio(
    e: &Spectrum,
    cell: &CellModel,
    tau: &Spectrum,
    pair: Option<(&str, &str)>,
) -> Result<f64> {
    let idx = pair_or_default(cell, pair)?;
    let clean = pair_currents(e, cell, None, idx)?;
    let soiled = match flat_level(tau, cell) {
        Some(_) => clean,
        None => pair_currents(e, cell, Some(tau), idx)?,
    };
    smratio_from(cell, idx, clean, soiled)
}

/// SMratio for every ordered pair `(i, j)` with `i` above `j` in the stack.
pub fn pairwise_smratio(
    e: &Spectrum,
    cell: &CellModel,
    tau: &Spectrum,
) -> Result<Vec<(String, String, f64)>> {
    let all = |_: usize, _: &_| true;
    let clean = junction_currents(&effective_irradiance(e, None)?, cell, all)?;
    let soiled = junction_currents(&effective_irradiance(e, Some(tau))?, cell, all)?;
    let js = cell.junctions();
    let mut out = Vec::new();
    for a in 0..js.len() {
        for b in a + 1..js.len() {
            let v = smratio_from(
                cell,
                (a, b),
                (clean[a].unwrap(), clean[b].unwrap()),
                (soiled[a].unwrap(), soiled[b].unwrap()),
            )?;
            out.push((js[a].name.clone(), js[b].name.clone(), v));
        }
    }
    Ok(out)
}

/// Every index for one transmittance curve under one or more spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub sratio: f64,
    pub bsratio: f64,
    pub ssratio: f64,
    pub smr_cleaned: f64,
    pub smr_soiled: f64,
    pub smratio: f64,
    /// AST per band, full band first, then junction bands in stack order.
    pub ast: Vec<(String, f64)>,
    pub limiting_cleaned: String,
    pub limiting_soiled: String,
}

impl IndexReport {
    pub fn ast(&self, band: &str) -> Option<f64> {
        self.ast.iter().find(|(b, _)| b == band).map(|(_, v)| *v)
    }

    /// Column names of the flat representation, in order.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
        cols.extend(self.ast.iter().map(|(b, _)| format!("ast_{b}")));
        cols.push("limiting_cleaned".into());
        cols.push("limiting_soiled".into());
        cols
    }

    /// Field values matching [`IndexReport::columns`].
    pub fn row(&self) -> Vec<String> {
        let mut row: Vec<String> = self.scalars().iter().map(|v| v.to_string()).collect();
        row.extend(self.ast.iter().map(|(_, v)| v.to_string()));
        row.push(self.limiting_cleaned.clone());
        row.push(self.limiting_soiled.clone());
        row
    }

    /// One header line and one data line.
    pub fn to_csv_string(&self) -> String {
        format!("{}\n{}\n", self.columns().join(","), self.row().join(","))
    }

    fn scalars(&self) -> [f64; 6] {
        [
            self.sratio,
            self.bsratio,
            self.ssratio,
            self.smr_cleaned,
            self.smr_soiled,
            self.smratio,
        ]
    }
}

const SCALAR_COLUMNS: [&str; 6] = [
    "sratio",
    "bsratio",
    "ssratio",
    "smr_cleaned",
    "smr_soiled",
    "smratio",
];

impl Serialize for IndexReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(8 + self.ast.len()))?;
        for (k, v) in SCALAR_COLUMNS.iter().zip(self.scalars()) {
            map.serialize_entry(k, &v)?;
        }
        for (b, v) in &self.ast {
            map.serialize_entry(&format!("ast_{b}"), v)?;
        }
        map.serialize_entry("limiting_cleaned", &self.limiting_cleaned)?;
        map.serialize_entry("limiting_soiled", &self.limiting_soiled)?;
        map.end()
    }
}

/// All indexes under a single spectrum.
pub fn index_report(e: &Spectrum, cell: &CellModel, tau: &Spectrum) -> Result<IndexReport> {
    index_report_accumulated(std::slice::from_ref(e), cell, tau)
}

/// All indexes with currents and irradiances accumulated over a sequence
/// of spectra (e.g. one day of records) before any ratio is taken.
///
/// The stack current of each spectrum is its own minimum over eligible
/// junctions; those minima are summed. The reported limiting junction is
/// the one that limited the largest share of the accumulated current.
/// With a single spectrum this is exactly [`index_report`].
pub fn index_report_accumulated(
    spectra: &[Spectrum],
    cell: &CellModel,
    tau: &Spectrum,
) -> Result<IndexReport> {
    if spectra.is_empty() {
        return Err(Error::InvalidSpectrum("no spectra to evaluate".into()));
    }
    if tau.quantity() != Quantity::Transmittance {
        return Err(Error::UnitMismatch {
            context: "soiling transmittance must be Transmittance".into(),
            got: tau.quantity(),
        });
    }
    let pair = pair_or_default(cell, None)?;
    let want = |i: usize, j: &crate::cellmodel::Junction| {
        j.limiting_eligible || i == pair.0 || i == pair.1
    };
    let n = cell.junctions().len();

    let flat = flat_level(tau, cell);
    let mut clean = Accumulator::new(n);
    let mut soiled = Accumulator::new(n);
    for e in spectra {
        clean.add(cell, &effective_irradiance(e, None)?, &want)?;
        if flat.is_none() {
            soiled.add(cell, &effective_irradiance(e, Some(tau))?, &want)?;
        }
    }

    if clean.stack == 0.0 {
        return Err(Error::ZeroCleanCurrent);
    }
    if clean.broadband == 0.0 {
        return Err(Error::ZeroDenominator("BSRatio"));
    }
    let (sratio, bsratio) = match flat {
        Some(c) => {
            soiled = clean.clone();
            (c, c)
        }
        None => (
            soiled.stack / clean.stack,
            soiled.broadband / clean.broadband,
        ),
    };
    let pair_of = |acc: &Accumulator| (acc.junction[pair.0], acc.junction[pair.1]);
    let smr_cleaned = smr_from(cell, pair, clean.junction[pair.0], clean.junction[pair.1])?;
    let smr_soiled = smr_from(cell, pair, soiled.junction[pair.0], soiled.junction[pair.1])?;
    let smratio = smratio_from(cell, pair, pair_of(&clean), pair_of(&soiled))?;

    let ast = cell
        .bands()
        .into_iter()
        .map(|b| Ok((b.name.clone(), ast(tau, b)?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(IndexReport {
        sratio,
        bsratio,
        ssratio: sratio / bsratio,
        smr_cleaned,
        smr_soiled,
        smratio,
        ast,
        limiting_cleaned: clean.limiting_name(cell),
        limiting_soiled: soiled.limiting_name(cell),
    })
}

#[derive(Clone)]
struct Accumulator {
    junction: Vec<f64>,
    limited_share: Vec<f64>,
    stack: f64,
    broadband: f64,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            junction: vec![0.0; n],
            limited_share: vec![0.0; n],
            stack: 0.0,
            broadband: 0.0,
        }
    }

    fn add(
        &mut self,
        cell: &CellModel,
        effective: &Spectrum,
        want: &dyn Fn(usize, &crate::cellmodel::Junction) -> bool,
    ) -> Result<()> {
        let currents = junction_currents(effective, cell, want)?;
        let StackCurrent {
            value,
            limiting: name,
            ..
        } = limiting(cell, &currents)?;
        for (acc, c) in self.junction.iter_mut().zip(&currents) {
            if let Some(c) = c {
                *acc += c;
            }
        }
        let idx = cell.junction_index(&name)?;
        self.limited_share[idx] += value;
        self.stack += value;
        self.broadband += effective.integrate(cell.full_band())?;
        Ok(())
    }

    fn limiting_name(&self, cell: &CellModel) -> String {
        let mut best = 0;
        for (i, &v) in self.limited_share.iter().enumerate() {
            if v > self.limited_share[best] {
                best = i;
            }
        }
        // all-zero shares (dark input): fall back to the first eligible junction
        if self.limited_share[best] == 0.0 {
            if let Some(j) = cell.junctions().iter().find(|j| j.limiting_eligible) {
                return j.name.clone();
            }
        }
        cell.junctions()[best].name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellmodel::BundledCell;

    fn linear_tau() -> Spectrum {
        Spectrum::new(vec![300.0, 900.0], vec![0.5, 1.0], Quantity::Transmittance).unwrap()
    }

    fn flat_e() -> Spectrum {
        Spectrum::constant(Quantity::Irradiance, 300.0, 900.0, 1.0).unwrap()
    }

    fn flat_tau(c: f64) -> Spectrum {
        Spectrum::constant(Quantity::Transmittance, 300.0, 2000.0, c).unwrap()
    }

    // Hand integrals for the toy cell (E ≡ 1, SR ≡ 1, τ = 0.5 + (λ-300)/1200):
    //   clean:  top 400, mid 200
    //   soiled: top 400·mean τ[300,700] = 400·(2/3) = 266.667
    //           mid 200·mean τ[700,900] = 200·(11/12) = 183.333
    const TOP_SOILED: f64 = 800.0 / 3.0;
    const MID_SOILED: f64 = 550.0 / 3.0;

    #[test]
    fn soiling_transmittance_examples() {
        let s = Spectrum::constant(Quantity::Transmittance, 300.0, 900.0, 0.45).unwrap();
        let c = Spectrum::constant(Quantity::Transmittance, 300.0, 900.0, 0.90).unwrap();
        let t = soiling_transmittance(&s, &c).unwrap();
        assert!(t.tau.values().iter().all(|v| (v - 0.5).abs() < 1e-15));

        let t = soiling_transmittance(&c, &c).unwrap();
        assert!(t.tau.values().iter().all(|&v| v == 1.0));

        let s = Spectrum::new(
            vec![300.0, 600.0, 900.0],
            vec![0.45, 0.675, 0.90],
            Quantity::Transmittance,
        )
        .unwrap();
        let t = soiling_transmittance(&s, &c).unwrap();
        assert_eq!(t.tau.wavelengths(), &[300.0, 600.0, 900.0]);
        for (got, want) in t.tau.values().iter().zip([0.5, 0.75, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn control_floor_enforced() {
        let s = Spectrum::constant(Quantity::Transmittance, 300.0, 900.0, 0.02).unwrap();
        let c =
            Spectrum::new(vec![300.0, 900.0], vec![0.04, 0.9], Quantity::Transmittance).unwrap();
        let err = soiling_transmittance(&s, &c).unwrap_err();
        assert_eq!(err.kind(), "ControlBelowFloor");
    }

    #[test]
    fn noisy_gain_is_flagged_then_clamped() {
        let s = Spectrum::new(
            vec![300.0, 400.0, 500.0],
            vec![0.909, 0.95, 0.9],
            Quantity::Transmittance,
        )
        .unwrap();
        let c = Spectrum::new(
            vec![300.0, 400.0, 500.0],
            vec![0.9, 0.9, 0.9],
            Quantity::Transmittance,
        )
        .unwrap();
        let t = soiling_transmittance(&s, &c).unwrap();
        assert_eq!((t.above_unity, t.clamped), (2, 1));
        assert!((t.tau.values()[0] - 1.01).abs() < 1e-12);
        assert_eq!(t.tau.values()[1], 1.02);
    }

    #[test]
    fn toy_sratio_bsratio_ssratio() {
        let cell = CellModel::bundled(BundledCell::Toy2J);
        let (e, tau) = (flat_e(), linear_tau());
        let sr = sratio(&e, &cell, &tau).unwrap();
        assert!((sr - MID_SOILED / 200.0).abs() < 1e-12);
        assert!((sr - 0.91667).abs() < 1e-4);
        let bs = bsratio(&e, &cell, &tau).unwrap();
        assert!((bs - 0.75).abs() < 1e-12);
        let ss = ssratio(&e, &cell, &tau).unwrap();
        assert!((ss - 1.2222).abs() < 1e-4);
    }

    #[test]
    fn bsratio_trapezoid_example() {
        let cell = CellModel::bundled(BundledCell::Boxcar3J);
        let e = Spectrum::constant(Quantity::Irradiance, 300.0, 1810.0, 1.0).unwrap();
        let tau = Spectrum::new(
            vec![300.0, 1055.0, 1810.0],
            vec![0.6, 0.8, 1.0],
            Quantity::Transmittance,
        )
        .unwrap();
        let bs = bsratio(&e, &cell, &tau).unwrap();
        assert!((bs - 1208.0 / 1510.0).abs() < 1e-12);
    }

    #[test]
    fn toy_smr_and_smratio() {
        let cell = CellModel::bundled(BundledCell::Toy2J);
        let (e, tau) = (flat_e(), linear_tau());
        assert_eq!(smr(&e, &cell, None, None).unwrap(), 1.0);
        let want = (TOP_SOILED / MID_SOILED) / (400.0 / 200.0);
        let s = smr(&e, &cell, Some(&tau), None).unwrap();
        assert!((s - want).abs() < 1e-12);
        assert!((s - 0.7273).abs() < 1e-4);
        let m = smratio(&e, &cell, &tau, None).unwrap();
        assert!((m - want).abs() < 1e-12);
        let flat = flat_tau(0.6);
        assert!((smr(&e, &cell, Some(&flat), None).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smr_is_one_under_reference() {
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        let v = smr(cell.reference_spectrum(), &cell, None, None).unwrap();
        assert_eq!(v, 1.0);
        let v = smr(cell.reference_spectrum(), &cell, None, Some(("mid", "bot"))).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn ast_examples() {
        let tau = linear_tau();
        let b = |lo, hi| Waveband::new("b", lo, hi).unwrap();
        assert!((ast(&tau, &b(300.0, 700.0)).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((ast(&tau, &b(300.0, 900.0)).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(ast(&flat_tau(1.0), &b(300.0, 900.0)).unwrap(), 1.0);
        assert_eq!(
            ast(&tau, &b(200.0, 900.0)).unwrap_err().kind(),
            "BandOutOfSupport"
        );
    }

    #[test]
    fn report_toy_values() {
        let cell = CellModel::bundled(BundledCell::Toy2J);
        let r = index_report(&flat_e(), &cell, &linear_tau()).unwrap();
        assert!((r.sratio - 0.91667).abs() < 1e-4);
        assert!((r.bsratio - 0.75).abs() < 1e-4);
        assert!((r.ssratio - 1.2222).abs() < 1e-4);
        assert!((r.smratio - 0.7273).abs() < 1e-4);
        assert!((r.ast("MJ").unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(r.limiting_cleaned, "mid");
        assert_eq!(r.limiting_soiled, "mid");
    }

    #[test]
    fn report_flat_tau() {
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        let e = cell.reference_spectrum().clone();
        let r = index_report(&e, &cell, &flat_tau(1.0)).unwrap();
        assert_eq!(
            (r.sratio, r.bsratio, r.ssratio, r.smratio),
            (1.0, 1.0, 1.0, 1.0)
        );
        assert!(r.ast.iter().all(|(_, v)| *v == 1.0));
    }

    #[test]
    fn report_serializes_flat() {
        let cell = CellModel::bundled(BundledCell::Toy2J);
        let r = index_report(&flat_e(), &cell, &linear_tau()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        let obj = json.as_object().unwrap();
        for key in [
            "sratio",
            "bsratio",
            "ssratio",
            "smr_cleaned",
            "smr_soiled",
            "smratio",
            "ast_MJ",
            "ast_top",
            "ast_mid",
            "limiting_cleaned",
            "limiting_soiled",
        ] {
            assert!(obj.contains_key(key), "{key}");
        }
        assert!(obj.values().all(|v| !v.is_object() && !v.is_array()));
        let csv = r.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sratio,bsratio,ssratio,smr_cleaned,smr_soiled,smratio,ast_MJ,ast_top,ast_mid,limiting_cleaned,limiting_soiled"
        );
        assert_eq!(lines.next().unwrap().split(',').count(), 11);
    }

    #[test]
    fn pairwise_covers_all_pairs() {
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        let tau = crate::synth::SoilingModel::new(0.2, 1.0)
            .tau(&crate::spectral::linear_grid(300.0, 2000.0, 5.0))
            .unwrap();
        let pairs = pairwise_smratio(cell.reference_spectrum(), &cell, &tau).unwrap();
        let names: Vec<_> = pairs.iter().map(|(a, b, _)| format!("{a}/{b}")).collect();
        assert_eq!(names, ["top/mid", "top/bot", "mid/bot"]);
        let tm = smratio(cell.reference_spectrum(), &cell, &tau, None).unwrap();
        assert!((pairs[0].2 - tm).abs() < 1e-15);
        assert!(pairs.iter().all(|(_, _, v)| *v < 1.0));
    }

    #[test]
    fn accumulated_single_spectrum_matches() {
        let cell = CellModel::bundled(BundledCell::LatticeMatched3J);
        let tau = crate::synth::SoilingModel::new(0.3, 1.3)
            .tau(&crate::spectral::linear_grid(300.0, 2000.0, 5.0))
            .unwrap();
        let e = cell.reference_spectrum().clone();
        let a = index_report(&e, &cell, &tau).unwrap();
        let b = index_report_accumulated(std::slice::from_ref(&e), &cell, &tau).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sratio, sratio(&e, &cell, &tau).unwrap());
        assert_eq!(a.bsratio, bsratio(&e, &cell, &tau).unwrap());
    }
}
