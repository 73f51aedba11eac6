//! Single-diode rectenna: steady-state DC output and transient validation.
//!
//! With the antenna matched to the rectifier, the diode sees
//! `v_in(t) = √R_s · y(t)`. When the low-pass capacitor keeps the output ripple
//! small, averaging the circuit equation over one period gives
//!
//! ```text
//! exp(v̄/(ηV₀)) · (1 + v̄/(R_L I₀)) = (1/T) ∫_T exp(√R_s · y(t) / (ηV₀)) dt
//! ```
//!
//! The left side is strictly increasing in `v̄`, so the DC voltage is found by
//! bisection once the periodic average on the right is known.

mod transient;

pub use transient::{
    simulate_transient, suggested_steps_per_period, TransientConfig, TransientResult,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::quadrature::{received_phasors, QuadratureSpec, ToneSampler};
use crate::signal::MultisineWaveform;

/// Default relative tolerance for [`solve_dc`].
pub const DEFAULT_DC_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 200;

/// Circuit constants of the rectenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RectennaSpec", into = "RectennaSpec")]
pub struct RectennaParams {
    /// Antenna resistance `R_s` (Ω); equals the rectifier input resistance.
    pub r_s: f64,
    /// Load resistance `R_L` (Ω).
    pub r_l: f64,
    /// Diode reverse saturation current `I₀` (A).
    pub i_0: f64,
    /// Thermal voltage `V₀` (V).
    pub v_0: f64,
    /// Diode ideality factor `η`.
    pub eta: f64,
    /// Low-pass filter capacitance `C` (F).
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectennaSpec {
    pub r_s_ohm: f64,
    pub r_l_ohm: f64,
    pub i_0_a: f64,
    pub v_0_v: f64,
    pub eta: f64,
    pub c_f: f64,
}

impl TryFrom<RectennaSpec> for RectennaParams {
    type Error = Error;

    fn try_from(s: RectennaSpec) -> Result<Self> {
        RectennaParams::new(s.r_s_ohm, s.r_l_ohm, s.i_0_a, s.v_0_v, s.eta, s.c_f)
    }
}

impl From<RectennaParams> for RectennaSpec {
    fn from(p: RectennaParams) -> Self {
        RectennaSpec {
            r_s_ohm: p.r_s,
            r_l_ohm: p.r_l,
            i_0_a: p.i_0,
            v_0_v: p.v_0,
            eta: p.eta,
            c_f: p.c,
        }
    }
}

impl Default for RectennaParams {
    /// 50 Ω antenna, 5 µA / 25.86 mV / η = 1.05 diode, 1.6 kΩ load, and
    /// `C = 50 T / R_L` for the 16-tone grid on 910–920 MHz (`T = 1.6 µs`).
    fn default() -> Self {
        RectennaParams {
            r_s: 50.0,
            r_l: 1600.0,
            i_0: 5e-6,
            v_0: 0.02586,
            eta: 1.05,
            c: 50.0 * 1.6e-6 / 1600.0,
        }
    }
}

impl RectennaParams {
    pub fn new(r_s: f64, r_l: f64, i_0: f64, v_0: f64, eta: f64, c: f64) -> Result<Self> {
        for (what, value) in [
            ("source resistance", r_s),
            ("load resistance", r_l),
            ("saturation current", i_0),
            ("thermal voltage", v_0),
            ("ideality factor", eta),
            ("capacitance", c),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidValue { what, value });
            }
        }
        Ok(RectennaParams {
            r_s,
            r_l,
            i_0,
            v_0,
            eta,
            c,
        })
    }

    /// Same circuit with `C = ratio · T / R_L`.
    pub fn with_time_constant_ratio(self, ratio: f64, period: f64) -> Result<Self> {
        Self::new(
            self.r_s,
            self.r_l,
            self.i_0,
            self.v_0,
            self.eta,
            ratio * period / self.r_l,
        )
    }

    /// `η V₀`.
    pub fn diode_voltage_scale(&self) -> f64 {
        self.eta * self.v_0
    }

    /// `√R_s / (η V₀)`: maps the received signal `y` (√W) to the diode exponent.
    pub fn exponent_scale(&self) -> f64 {
        self.r_s.sqrt() / self.diode_voltage_scale()
    }

    /// Left side of the DC equation, `exp(v/(ηV₀)) (1 + v/(R_L I₀))`.
    pub fn dc_lhs(&self, v: f64) -> f64 {
        (v / self.diode_voltage_scale()).exp() * (1.0 + v / (self.r_l * self.i_0))
    }

    /// Iteration count guaranteed to reach relative residual `tol` for a given RHS.
    pub fn bisection_budget(&self, rhs: f64, tol: f64) -> usize {
        if rhs <= 1.0 {
            return 0;
        }
        let v_max = self.diode_voltage_scale() * rhs.ln();
        let base = (v_max / (tol * self.diode_voltage_scale()))
            .log2()
            .ceil()
            .max(0.0);
        let slope = (1.0 + self.diode_voltage_scale() / (self.r_l * self.i_0))
            .log2()
            .ceil();
        (base + slope) as usize
    }
}

/// Steady-state DC output of the rectifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcOperatingPoint {
    /// DC output voltage `v̄_out` (V).
    pub v_out: f64,
    /// DC power into the load `v̄²/R_L` (W).
    pub p_out: f64,
    /// Periodic average on the right side of the DC equation.
    pub rhs_value: f64,
    /// `|LHS(v̄) − rhs| / rhs` at the returned voltage.
    pub bisection_residual: f64,
    pub iterations: usize,
}

/// Exponent of the diode law at the largest sample, checked against the cap.
fn check_exponent(peak_signal: f64, scale: f64, cap: f64) -> Result<()> {
    let peak = peak_signal * scale;
    if peak > cap || !peak.is_finite() {
        return Err(Error::ExponentOverflow { peak, cap });
    }
    Ok(())
}

/// Periodic mean of `exp(scale · y)` for the signal given by `phasors`.
pub(crate) fn exp_mean(sampler: &ToneSampler, phasors: &[Complex64], scale: f64) -> Result<f64> {
    let fold = sampler.mean_of(phasors, |y| (scale * y).exp());
    check_exponent(fold.max, scale, sampler.exponent_cap())?;
    Ok(fold.sums[0])
}

/// `(1/Q) Σ_q exp(√R_s y(qΔt) / (ηV₀))`, the right side of the DC equation.
pub fn rectifier_rhs(
    w: &MultisineWaveform,
    response: &ChannelResponse,
    p: &RectennaParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let phasors = received_phasors(w, response)?;
    let sampler = ToneSampler::new(w.grid(), quad);
    exp_mean(&sampler, &phasors, p.exponent_scale())
}

/// Solves `LHS(v̄) = rhs` for the DC output voltage by bisection on `[0, ηV₀ ln rhs]`.
pub fn solve_dc(rhs: f64, p: &RectennaParams, tol: f64) -> Result<DcOperatingPoint> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidValue {
            what: "bisection tolerance",
            value: tol,
        });
    }
    if !rhs.is_finite() {
        return Err(Error::InvalidValue {
            what: "rectifier RHS",
            value: rhs,
        });
    }
    // A zero-mean sampled signal gives rhs >= 1 up to summation rounding.
    if rhs < 1.0 - 1e-12 {
        return Err(Error::RhsBelowOne(rhs));
    }
    let point = |v: f64, iterations: usize| DcOperatingPoint {
        v_out: v,
        p_out: v * v / p.r_l,
        rhs_value: rhs,
        bisection_residual: (p.dc_lhs(v) - rhs).abs() / rhs,
        iterations,
    };
    if rhs <= 1.0 {
        return Ok(point(0.0, 0));
    }
    let mut lo = 0.0;
    let mut hi = p.diode_voltage_scale() * rhs.ln();
    let mut mid = 0.5 * (lo + hi);
    for it in 1..=MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        let value = p.dc_lhs(mid);
        if (value - rhs).abs() <= tol * rhs {
            return Ok(point(mid, it));
        }
        if value < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            return Ok(point(mid, it));
        }
    }
    Ok(point(mid, MAX_BISECTIONS))
}

/// DC operating point produced by waveform `w` through the channel.
pub fn harvested_power(
    w: &MultisineWaveform,
    response: &ChannelResponse,
    p: &RectennaParams,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<DcOperatingPoint> {
    solve_dc(rectifier_rhs(w, response, p, quad)?, p, tol)
}

/// Periodic mean of the order-`order` Taylor polynomial of the diode exponential,
/// `Σ_{k ≤ order} (√R_s y / (ηV₀))^k / k!`.
///
/// Orders 2, 4 and 6 are the truncated models found in the literature; any
/// order is accepted.
pub fn taylor_rhs(
    w: &MultisineWaveform,
    response: &ChannelResponse,
    p: &RectennaParams,
    order: u32,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let phasors = received_phasors(w, response)?;
    let sampler = ToneSampler::new(w.grid(), quad);
    let scale = p.exponent_scale();
    let fold = sampler.mean_of(&phasors, |y| {
        let x = scale * y;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=order {
            term *= x / k as f64;
            sum += term;
        }
        sum
    });
    Ok(fold.sums[0])
}
