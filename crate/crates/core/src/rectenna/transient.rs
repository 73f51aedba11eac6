use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RectennaParams;
use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::quadrature::{received_phasors, QuadratureSpec, ToneSampler};
use crate::signal::MultisineWaveform;

/// Fixed-step settings for [`simulate_transient`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientConfig {
    /// Integration steps per signal period; the step is `T / steps_per_period`.
    pub steps_per_period: usize,
    pub n_periods: usize,
    /// Length of the trailing window used for the mean and ripple.
    pub window_periods: usize,
    /// Output samples kept per period in the recorded time series.
    pub record_per_period: usize,
    /// Largest allowed change of the diode exponent `(v_in − v_out)/(ηV₀)` in one step.
    pub max_exponent_step: f64,
}

impl Default for TransientConfig {
    fn default() -> Self {
        TransientConfig {
            steps_per_period: 20_000,
            n_periods: 200,
            window_periods: 10,
            record_per_period: 100,
            max_exponent_step: 1.0,
        }
    }
}

impl TransientConfig {
    /// Settings for a step of `step` seconds, rounded to a whole number of steps per period.
    pub fn with_step(step: f64, period: f64, n_periods: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidValue {
                what: "transient step",
                value: step,
            });
        }
        Ok(TransientConfig {
            steps_per_period: (period / step).round().max(1.0) as usize,
            n_periods,
            ..TransientConfig::default()
        })
    }
}

/// Steps per period that keep both step checks of [`simulate_transient`]
/// comfortably satisfied for this input, starting from an empty capacitor.
///
/// The worst case is the first input peak, where the diode exponent reaches
/// `√R_s Σ √2 s_n h_n / (ηV₀)` with `v_out = 0`.
pub fn suggested_steps_per_period(
    w: &MultisineWaveform,
    response: &ChannelResponse,
    p: &RectennaParams,
) -> Result<usize> {
    let phasors = received_phasors(w, response)?;
    let nv = p.diode_voltage_scale();
    let sqrt_rs = p.r_s.sqrt();
    let peak = sqrt_rs * phasors.iter().map(|c| c.norm()).sum::<f64>() / nv;
    let slew = (0..phasors.len())
        .map(|n| phasors[n].norm() * w.grid().angular(n))
        .sum::<f64>()
        * sqrt_rs
        / nv;
    let rate = (p.i_0 / (nv * p.c)) * peak.exp() + 1.0 / (p.r_l * p.c);
    // half of each limit: λ ≤ 0.5 (stability bound is 2.5), slew ≤ 0.5 per step
    let per_period = w.grid().period() * 2.0 * rate.max(slew);
    Ok((per_period.ceil() as usize).max(1000))
}

/// Output of a transient run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientResult {
    /// Decimated `(t, v_out(t))` samples over the whole run.
    pub time_series: Vec<(f64, f64)>,
    /// Mean output voltage over the trailing window.
    pub steady_mean: f64,
    /// `(max − min) / max` of the output over the trailing window.
    pub ripple_fraction: f64,
    pub window_min: f64,
    pub window_max: f64,
    pub step: f64,
}

impl TransientResult {
    /// CSV with header `t_s,v_out_v`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,v_out_v\n");
        for &(t, v) in &self.time_series {
            writeln!(
                out,
                "{},{}",
                crate::experiments::fmt_value(t),
                crate::experiments::fmt_value(v)
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Integrates the rectifier circuit equation
///
/// ```text
/// C dv_out/dt = I₀ (exp((v_in(t) − v_out)/(ηV₀)) − 1) − v_out / R_L,   v_in = √R_s · y(t)
/// ```
///
/// from `v_out(0) = 0` with the classical fourth-order Runge–Kutta scheme.
/// The input is tabulated once per period at half-step resolution, which is
/// exact because the input is `T`-periodic.
pub fn simulate_transient(
    w: &MultisineWaveform,
    response: &ChannelResponse,
    p: &RectennaParams,
    cfg: &TransientConfig,
) -> Result<TransientResult> {
    let period = w.grid().period();
    let m = cfg.steps_per_period;
    let step = period / m as f64;
    if m < 1000 {
        return Err(Error::StepTooLarge {
            step,
            reason: format!("needs at least 1000 steps per period, got {m}"),
        });
    }
    if cfg.window_periods == 0 || cfg.n_periods < 2 * cfg.window_periods {
        return Err(Error::Config(format!(
            "transient needs n_periods >= 2 * window_periods (got {} and {})",
            cfg.n_periods, cfg.window_periods
        )));
    }

    let phasors = received_phasors(w, response)?;
    let half_steps = QuadratureSpec::with_samples(2 * m)?;
    let sqrt_rs = p.r_s.sqrt();
    let v_in: Vec<f64> = ToneSampler::new(w.grid(), &half_steps)
        .synthesize(&phasors)
        .into_iter()
        .map(|y| sqrt_rs * y)
        .collect();

    let nv = p.diode_voltage_scale();
    let rhs = |vin: f64, v: f64| (p.i_0 * (((vin - v) / nv).exp() - 1.0) - v / p.r_l) / p.c;
    // conductance-to-capacitance ratio of a forward-biased diode, per unit exp()
    let stiffness = p.i_0 / (nv * p.c);
    let leak = 1.0 / (p.r_l * p.c);

    let total = m * cfg.n_periods;
    let last_start = (cfg.n_periods - cfg.window_periods) * m;
    let prev_start = (cfg.n_periods - 2 * cfg.window_periods) * m;
    let stride = (m / cfg.record_per_period.max(1)).max(1);

    let mut v = 0.0;
    let mut series = vec![(0.0, 0.0)];
    let (mut sum_last, mut sum_prev) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);

    for i in 0..total {
        let j = i % m;
        let (a, b, e) = (v_in[2 * j], v_in[2 * j + 1], v_in[(2 * j + 2) % (2 * m)]);
        let k1 = rhs(a, v);
        let k2 = rhs(b, v + 0.5 * step * k1);
        let k3 = rhs(b, v + 0.5 * step * k2);
        let k4 = rhs(e, v + step * k3);
        let next = v + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        let x0 = (a - v) / nv;
        let x1 = (e - next) / nv;
        if (x1 - x0).abs() > cfg.max_exponent_step || !next.is_finite() {
            return Err(Error::StepTooLarge {
                step,
                reason: format!(
                    "diode exponent moved by {:.3} in one step (limit {})",
                    (x1 - x0).abs(),
                    cfg.max_exponent_step
                ),
            });
        }
        let lambda = step * (stiffness * x0.max(x1).exp() + leak);
        if lambda > 2.5 {
            return Err(Error::StepTooLarge {
                step,
                reason: format!("step times diode conductance / C is {lambda:.3}, above the stability limit 2.5"),
            });
        }
        v = next;

        let done = i + 1;
        if done % stride == 0 {
            series.push((done as f64 * step, v));
        }
        if i >= last_start {
            sum_last += v;
            lo = lo.min(v);
            hi = hi.max(v);
        } else if i >= prev_start {
            sum_prev += v;
        }
    }

    let window = (cfg.window_periods * m) as f64;
    let mean_last = sum_last / window;
    let mean_prev = sum_prev / window;
    let gap = (mean_last - mean_prev).abs();
    if gap > 0.01 * mean_last.abs() && gap > 1e-12 {
        return Err(Error::TransientNotSettled {
            previous: mean_prev,
            last: mean_last,
        });
    }
    let ripple_fraction = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    Ok(TransientResult {
        time_series: series,
        steady_mean: mean_last,
        ripple_fraction,
        window_min: lo,
        window_max: hi,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::FrequencyGrid;

    fn toy_case(p_t: f64) -> (MultisineWaveform, ChannelResponse, RectennaParams) {
        let g = FrequencyGrid::new(19e3, 21e3, 4).unwrap();
        let s = (p_t / 4.0).sqrt();
        let w = MultisineWaveform::new(g, vec![s; 4], vec![0.0; 4]).unwrap();
        let r = ChannelResponse::flat(g, 7e-3).unwrap();
        let p = RectennaParams::default()
            .with_time_constant_ratio(50.0, g.period())
            .unwrap();
        (w, r, p)
    }

    fn short() -> TransientConfig {
        TransientConfig {
            steps_per_period: 4000,
            n_periods: 120,
            ..TransientConfig::default()
        }
    }

    #[test]
    fn zero_input_stays_at_zero() {
        let (w, r, p) = toy_case(1.0);
        let z = MultisineWaveform::zero(*w.grid());
        let res = simulate_transient(&z, &r, &p, &short()).unwrap();
        assert_eq!(res.steady_mean, 0.0);
        assert_eq!(res.ripple_fraction, 0.0);
    }

    #[test]
    fn coarse_steps_are_rejected() {
        let (w, r, p) = toy_case(1.0);
        let cfg = TransientConfig {
            steps_per_period: 999,
            ..short()
        };
        assert!(matches!(
            simulate_transient(&w, &r, &p, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
        let cfg =
            TransientConfig::with_step(w.grid().period() / 500.0, w.grid().period(), 100).unwrap();
        assert!(simulate_transient(&w, &r, &p, &cfg).is_err());
    }

    #[test]
    fn fast_exponent_swings_are_rejected() {
        let (w, r, p) = toy_case(400.0);
        let cfg = TransientConfig {
            steps_per_period: 1000,
            ..short()
        };
        assert!(matches!(
            simulate_transient(&w, &r, &p, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn short_runs_do_not_settle() {
        let (w, r, p) = toy_case(1.0);
        let p = p
            .with_time_constant_ratio(2000.0, w.grid().period())
            .unwrap();
        let cfg = TransientConfig {
            n_periods: 20,
            ..short()
        };
        assert!(matches!(
            simulate_transient(&w, &r, &p, &cfg),
            Err(Error::TransientNotSettled { .. })
        ));
    }

    #[test]
    fn larger_capacitor_smooths_more() {
        let (w, r, p) = toy_case(1.0);
        let period = w.grid().period();
        let at50 = simulate_transient(&w, &r, &p, &short()).unwrap();
        let p100 = p.with_time_constant_ratio(100.0, period).unwrap();
        let cfg = TransientConfig {
            n_periods: 200,
            ..short()
        };
        let at100 = simulate_transient(&w, &r, &p100, &cfg).unwrap();
        assert!(at100.ripple_fraction < at50.ripple_fraction);
        assert!(at50.ripple_fraction > 0.0 && at50.ripple_fraction < 1.0);
    }

    #[test]
    fn csv_has_header_and_start_point() {
        let (w, r, p) = toy_case(1.0);
        let res = simulate_transient(&w, &r, &p, &short()).unwrap();
        let csv = res.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t_s,v_out_v"));
        assert_eq!(lines.next(), Some("0.00000000000e0,0.00000000000e0"));
        assert_eq!(res.time_series.len(), 1 + 120 * 100);
    }
}
