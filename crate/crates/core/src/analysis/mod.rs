//! Entanglement verification: state tomography, CHSH and Poissonian
//! bootstrap error bars.

mod bootstrap;
mod chsh;
mod tomography;

pub use bootstrap::{bootstrap, BootstrapSummary, DEFAULT_RESAMPLES};
pub use chsh::{
    chsh_e, chsh_from_records, chsh_s, chsh_settings, optimize_angles, ChshAngles, ChshResult,
    TSIRELSON,
};
pub use tomography::{
    expected_observations, linear_inversion, mle_reconstruct, mle_reconstruct_with,
    observations_from_records, tomo_settings, tomo_settings_16, LinearInversion, MleInit,
    MleOptions, Observation, TomoReport, TomoResult, TomoSetting,
};
