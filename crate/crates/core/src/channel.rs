//! Multipath channels and their per-tone frequency response.
//!
//! Random channels use ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
//! Each uniform variate is `(next_u64 >> 11) · 2⁻⁵³ ∈ [0, 1)`. All `L` delays
//! are drawn first in tap order, then all `L` phases in tap order.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{wrap_phase, FrequencyGrid};

/// One propagation path: gain `α`, delay `τ` (s) and phase `ξ` (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TapSpec", into = "TapSpec")]
pub struct Tap {
    alpha: f64,
    tau: f64,
    xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapSpec {
    pub alpha: f64,
    pub tau_s: f64,
    pub xi_rad: f64,
}

impl TryFrom<TapSpec> for Tap {
    type Error = Error;

    fn try_from(spec: TapSpec) -> Result<Self> {
        Tap::new(spec.alpha, spec.tau_s, spec.xi_rad)
    }
}

impl From<Tap> for TapSpec {
    fn from(tap: Tap) -> Self {
        TapSpec {
            alpha: tap.alpha,
            tau_s: tap.tau,
            xi_rad: tap.xi,
        }
    }
}

impl Tap {
    pub fn new(alpha: f64, tau: f64, xi: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidValue {
                what: "tap gain",
                value: alpha,
            });
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidValue {
                what: "tap delay",
                value: tau,
            });
        }
        if !xi.is_finite() {
            return Err(Error::InvalidValue {
                what: "tap phase",
                value: xi,
            });
        }
        Ok(Tap {
            alpha,
            tau,
            xi: wrap_phase(xi),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// Time-domain multipath channel with at least one tap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelSpec", into = "ChannelSpec")]
pub struct MultipathChannel {
    taps: Vec<Tap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub taps: Vec<Tap>,
}

impl TryFrom<ChannelSpec> for MultipathChannel {
    type Error = Error;

    fn try_from(spec: ChannelSpec) -> Result<Self> {
        MultipathChannel::new(spec.taps)
    }
}

impl From<MultipathChannel> for ChannelSpec {
    fn from(ch: MultipathChannel) -> Self {
        ChannelSpec { taps: ch.taps }
    }
}

impl MultipathChannel {
    pub fn new(taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::EmptyChannel);
        }
        Ok(MultipathChannel { taps })
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Total power gain `Σ α_l²`.
    pub fn power_gain(&self) -> f64 {
        self.taps.iter().map(|t| t.alpha * t.alpha).sum()
    }

    /// Complex gain `Σ α_l exp(j(−2π f τ_l + ξ_l))` at frequency `f`.
    pub fn complex_gain(&self, f: f64) -> Complex64 {
        self.taps
            .iter()
            .map(|t| Complex64::from_polar(t.alpha, -TAU * f * t.tau + t.xi))
            .sum()
    }
}

/// Per-tone channel magnitude `h_n ≥ 0` and phase `ψ_n ∈ [0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelResponse {
    grid: FrequencyGrid,
    magnitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl ChannelResponse {
    pub fn new(grid: FrequencyGrid, magnitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        let n = grid.n_tones();
        for (what, v) in [("magnitudes", &magnitudes), ("phases", &phases)] {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    what,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if let Some(&bad) = magnitudes.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
            return Err(Error::InvalidValue {
                what: "channel magnitude",
                value: bad,
            });
        }
        Ok(ChannelResponse {
            grid,
            magnitudes,
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    /// Frequency-flat response `h_n = h`, `ψ_n = 0`.
    pub fn flat(grid: FrequencyGrid, h: f64) -> Result<Self> {
        let n = grid.n_tones();
        Self::new(grid, vec![h; n], vec![0.0; n])
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Same phases with every magnitude multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.magnitudes.iter().map(|h| h * k).collect(),
            self.phases.clone(),
        )
    }

    /// CSV with header `tone_index,f_hz,h,psi_rad`; tone index starts at 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tone_index,f_hz,h,psi_rad\n");
        for n in 0..self.grid.n_tones() {
            writeln!(
                out,
                "{},{},{},{}",
                n + 1,
                crate::experiments::fmt_value(self.grid.tone(n)),
                crate::experiments::fmt_value(self.magnitudes[n]),
                crate::experiments::fmt_value(self.phases[n]),
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Polar form of the channel's complex gain at every tone of `grid`.
pub fn frequency_response(channel: &MultipathChannel, grid: &FrequencyGrid) -> ChannelResponse {
    let (magnitudes, phases) = (0..grid.n_tones())
        .map(|n| {
            let (h, psi) = channel.complex_gain(grid.tone(n)).to_polar();
            (h, wrap_phase(psi))
        })
        .unzip();
    ChannelResponse {
        grid: *grid,
        magnitudes,
        phases,
    }
}

/// Parameters of the equal-power random multipath model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub seed: u64,
    pub paths: usize,
    /// Path loss in dB, applied to power.
    pub total_gain_db: f64,
    pub delay_max_s: f64,
}

impl ChannelModel {
    pub fn generate(&self) -> Result<MultipathChannel> {
        generate_channel(self.seed, self.paths, self.total_gain_db, self.delay_max_s)
    }
}

fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random channel with `paths` equal-power taps and total power gain
/// `10^(−loss_db/10)`; delays uniform on `[0, delay_max]`, phases uniform on `[0, 2π)`.
pub fn generate_channel(
    seed: u64,
    paths: usize,
    loss_db: f64,
    delay_max: f64,
) -> Result<MultipathChannel> {
    if paths == 0 {
        return Err(Error::EmptyChannel);
    }
    if !(delay_max.is_finite() && delay_max > 0.0) {
        return Err(Error::InvalidValue {
            what: "maximum delay",
            value: delay_max,
        });
    }
    if !loss_db.is_finite() {
        return Err(Error::InvalidValue {
            what: "path loss",
            value: loss_db,
        });
    }
    let gain = 10f64.powf(-loss_db / 10.0);
    let alpha = (gain / paths as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delays: Vec<f64> = (0..paths)
        .map(|_| delay_max * unit_uniform(&mut rng))
        .collect();
    let phases: Vec<f64> = (0..paths).map(|_| TAU * unit_uniform(&mut rng)).collect();
    let taps = delays
        .into_iter()
        .zip(phases)
        .map(|(tau, xi)| Tap::new(alpha, tau, xi))
        .collect::<Result<Vec<_>>>()?;
    MultipathChannel::new(taps)
}
