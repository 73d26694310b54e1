//! Bundled ASTM G-173-03 direct normal + circumsolar reference spectrum
//! (280–4000 nm, W·m⁻²·nm⁻¹).

use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::spectral::Spectrum;

pub const ASTM_G173_DIRECT_CSV: &str = include_str!("../data/astm_g173_direct.csv");

pub fn astm_g173_direct() -> Spectrum {
    static CELL: OnceLock<Spectrum> = OnceLock::new();
    CELL.get_or_init(|| {
        Spectrum::from_csv_str(ASTM_G173_DIRECT_CSV).expect("bundled reference spectrum parses")
    })
    .clone()
}

/// SHA-256 of the bundled reference table, hex encoded.
pub fn provenance_hash() -> String {
    hex::encode(Sha256::digest(ASTM_G173_DIRECT_CSV.as_bytes()))
}
