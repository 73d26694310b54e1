//! Spectral soiling analysis for multi-junction concentrator photovoltaics.
//!
//! The crate computes how soiling on an optical surface changes the current
//! of a multi-junction cell, separating the broadband attenuation from the
//! spectral (current-balance) part:
//!
//! - [`spectral`]: sampled spectra, resampling, products, trapezoidal integrals
//! - [`cellmodel`]: junction bands and responses, stack current
//! - [`metrics`]: SRatio, BSRatio, SSRatio, SMR, SMratio, AST
//! - [`pipeline`]: weekly campaign screening and per-week reports
//! - [`stats`]: MAPE, MPE, R² and least-squares fits
//! - [`synth`]: synthetic transmittance, spectra and campaigns
//! - [`io`]: campaign directory layout

pub mod cellmodel;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod reference;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use cellmodel::{jsc_cell, jsc_junction, BundledCell, CellModel, Junction, StackCurrent};
pub use error::{Error, Result};
pub use metrics::{
    ast, bsratio, index_report, index_report_accumulated, smr, smratio, soiling_transmittance,
    sratio, ssratio, IndexReport,
};
pub use pipeline::{run_campaign, Aggregation, CampaignOptions, CampaignResult};
pub use spectral::{Quantity, Spectrum, Waveband};
