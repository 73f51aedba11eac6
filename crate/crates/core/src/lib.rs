//! Multisine waveform design for RF wireless power transfer.
//!
//! A single-antenna transmitter sends `x(t) = Σ √2 s_n cos(w_n t + φ_n)` on a
//! uniform tone grid through a multipath channel to a single-diode rectenna.
//! The crate evaluates the DC power the rectenna delivers using the exact
//! exponential diode law, and designs the per-tone amplitudes and phases that
//! maximize it.
//!
//! * [`signal`]: tone grids and multisine waveforms
//! * [`channel`]: multipath channels and per-tone responses
//! * [`quadrature`]: periodic sampling of multisine signals
//! * [`rectenna`]: DC operating point and transient circuit simulation
//! * [`optimize`]: single-tone, frequency-MRT and SCP-QCLP designs
//! * [`experiments`]: power/tone sweeps, waveform reports and ripple checks

pub mod channel;
pub mod error;
pub mod experiments;
pub mod optimize;
pub mod quadrature;
pub mod rectenna;
pub mod signal;

pub use channel::{
    frequency_response, generate_channel, ChannelModel, ChannelResponse, MultipathChannel, Tap,
};
pub use error::{Error, Result};
pub use optimize::{
    align_phases, equal_power, frequency_mrt, qclp_step, scp_coefficients, scp_qclp, single_tone,
    Linearization, ScpConfig, ScpTrace,
};
pub use quadrature::QuadratureSpec;
pub use rectenna::{
    harvested_power, rectifier_rhs, simulate_transient, solve_dc, suggested_steps_per_period,
    taylor_rhs, DcOperatingPoint, RectennaParams, TransientConfig, TransientResult,
};
pub use signal::{FrequencyGrid, MultisineWaveform};
