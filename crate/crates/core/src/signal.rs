//! Tone grids, multisine waveforms and time-domain signal evaluation.

use std::f64::consts::{SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelResponse;
use crate::error::{Error, Result};

/// Wraps a phase into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r + 0.0
    }
}

/// Uniform tone grid `f_n = f0 + (n - 1) Δf`, `n = 1..=N`, inside `[f_min, f_max]`.
///
/// The spacing is `Δf = (f_max - f_min) / N` and the first tone is the smallest
/// multiple of `Δf` not below `f_min`, so every tone is an integer harmonic of
/// `Δf` and all signals on the grid are periodic with `T = 1 / Δf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct FrequencyGrid {
    f_min: f64,
    f_max: f64,
    n_tones: usize,
    delta_f: f64,
    f0: f64,
    first_harmonic: u64,
}

/// Serialized form of a grid; derived quantities are rebuilt on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub f_min: f64,
    pub f_max: f64,
    pub n_tones: usize,
}

impl TryFrom<GridSpec> for FrequencyGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        FrequencyGrid::new(spec.f_min, spec.f_max, spec.n_tones)
    }
}

impl From<FrequencyGrid> for GridSpec {
    fn from(grid: FrequencyGrid) -> Self {
        GridSpec {
            f_min: grid.f_min,
            f_max: grid.f_max,
            n_tones: grid.n_tones,
        }
    }
}

impl FrequencyGrid {
    /// Builds the grid for the band `[f_min, f_max]` with `n_tones` tones.
    pub fn new(f_min: f64, f_max: f64, n_tones: usize) -> Result<Self> {
        if !(f_min.is_finite() && f_max.is_finite() && f_min > 0.0 && f_max > f_min) {
            return Err(Error::InvalidBand { f_min, f_max });
        }
        if n_tones == 0 {
            return Err(Error::ZeroTones);
        }
        let delta_f = (f_max - f_min) / n_tones as f64;
        let ratio = f_min / delta_f;
        // f_min / Δf that is an integer up to rounding noise must not be bumped
        // to the next integer by ceil.
        let nearest = ratio.round();
        let harmonic = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest
        } else {
            ratio.ceil()
        };
        let f0 = harmonic * delta_f;
        let last_tone = f0 + (n_tones - 1) as f64 * delta_f;
        if last_tone > f_max * (1.0 + 1e-12) {
            return Err(Error::GridOverflow { last_tone, f_max });
        }
        Ok(FrequencyGrid {
            f_min,
            f_max,
            n_tones,
            delta_f,
            f0,
            first_harmonic: harmonic as u64,
        })
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn bandwidth(&self) -> f64 {
        self.f_max - self.f_min
    }

    pub fn center_frequency(&self) -> f64 {
        0.5 * (self.f_max + self.f_min)
    }

    /// Period `T = 1 / Δf` shared by every signal on the grid.
    pub fn period(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// Integer `f_n / Δf` for tone index `n` (zero-based).
    pub fn harmonic(&self, n: usize) -> u64 {
        self.first_harmonic + n as u64
    }

    pub fn harmonics(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_tones).map(|n| self.harmonic(n))
    }

    /// Frequency of tone `n` (zero-based) in Hz.
    pub fn tone(&self, n: usize) -> f64 {
        self.f0 + n as f64 * self.delta_f
    }

    pub fn tones(&self) -> Vec<f64> {
        (0..self.n_tones).map(|n| self.tone(n)).collect()
    }

    /// Angular frequency `w_n = 2π f_n` of tone `n` (zero-based).
    pub fn angular(&self, n: usize) -> f64 {
        TAU * self.tone(n)
    }

    /// Phase `w_n t mod 2π`, computed from the integer harmonic so that it is
    /// exactly periodic in `t` with period `T`.
    pub(crate) fn tone_phase(&self, n: usize, t: f64) -> f64 {
        let u = (t * self.delta_f).rem_euclid(1.0);
        TAU * (self.harmonic(n) as f64 * u).fract()
    }
}

/// Multisine transmit waveform: per-tone amplitudes `s_n` (√W) and phases `φ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WaveformSpec", into = "WaveformSpec")]
pub struct MultisineWaveform {
    grid: FrequencyGrid,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub grid: FrequencyGrid,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl TryFrom<WaveformSpec> for MultisineWaveform {
    type Error = Error;

    fn try_from(spec: WaveformSpec) -> Result<Self> {
        MultisineWaveform::new(spec.grid, spec.amplitudes, spec.phases)
    }
}

impl From<MultisineWaveform> for WaveformSpec {
    fn from(w: MultisineWaveform) -> Self {
        WaveformSpec {
            grid: w.grid,
            amplitudes: w.amplitudes,
            phases: w.phases,
        }
    }
}

impl MultisineWaveform {
    /// Phases are wrapped into `[0, 2π)`.
    pub fn new(grid: FrequencyGrid, amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        let n = grid.n_tones();
        if amplitudes.len() != n {
            return Err(Error::LengthMismatch {
                what: "amplitudes",
                expected: n,
                got: amplitudes.len(),
            });
        }
        if phases.len() != n {
            return Err(Error::LengthMismatch {
                what: "phases",
                expected: n,
                got: phases.len(),
            });
        }
        if let Some(&bad) = amplitudes.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidValue {
                what: "amplitude",
                value: bad,
            });
        }
        if let Some(&bad) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidValue {
                what: "phase",
                value: bad,
            });
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(MultisineWaveform {
            grid,
            amplitudes,
            phases,
        })
    }

    /// All-zero waveform on `grid`.
    pub fn zero(grid: FrequencyGrid) -> Self {
        let n = grid.n_tones();
        MultisineWaveform {
            grid,
            amplitudes: vec![0.0; n],
            phases: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Average transmit power `Σ s_n²`.
    pub fn transmit_power(&self) -> f64 {
        self.amplitudes.iter().map(|s| s * s).sum()
    }

    /// `x(t) = Σ √2 s_n cos(w_n t + φ_n)`.
    pub fn eval_transmit(&self, t: f64) -> f64 {
        (0..self.grid.n_tones())
            .map(|n| {
                SQRT_2 * self.amplitudes[n] * (self.grid.tone_phase(n, t) + self.phases[n]).cos()
            })
            .sum()
    }

    /// Received signal `y(t) = Σ √2 s_n h_n cos(w_n t + ψ_n + φ_n)` after the channel.
    pub fn eval_received(&self, response: &ChannelResponse, t: f64) -> Result<f64> {
        if response.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let h = response.magnitudes();
        let psi = response.phases();
        Ok((0..self.grid.n_tones())
            .map(|n| {
                SQRT_2
                    * self.amplitudes[n]
                    * h[n]
                    * (self.grid.tone_phase(n, t) + psi[n] + self.phases[n]).cos()
            })
            .sum())
    }

    /// Same waveform advanced by `t0` seconds: `φ_n → φ_n + w_n t0`.
    pub fn time_shifted(&self, t0: f64) -> Self {
        let phases = (0..self.grid.n_tones())
            .map(|n| wrap_phase(self.phases[n] + self.grid.tone_phase(n, t0)))
            .collect();
        MultisineWaveform {
            grid: self.grid,
            amplitudes: self.amplitudes.clone(),
            phases,
        }
    }
}
