//! Experiment drivers: power and tone-count sweeps, waveform reports and the
//! transient ripple check, all producing fixed-layout CSV text.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{frequency_response, ChannelModel, ChannelResponse, MultipathChannel};
use crate::error::{Error, Result};
use crate::optimize::{
    equal_power, frequency_mrt, scp_qclp, single_tone, ScpConfig, DEFAULT_EPSILON,
    DEFAULT_MAX_ITERS,
};
use crate::quadrature::{
    transmit_phasors, QuadratureSpec, ToneSampler, ALGORITHM_RATE, EVALUATION_RATE,
};
use crate::rectenna::{
    harvested_power, simulate_transient, suggested_steps_per_period, RectennaParams,
    TransientConfig, DEFAULT_DC_TOL,
};
use crate::signal::{FrequencyGrid, MultisineWaveform};

/// Floating-point cell format: 12 significant digits in scientific notation.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

/// Waveform design method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SingleTone,
    Mrt,
    ScpQclp,
    Equal,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::SingleTone,
        Method::Mrt,
        Method::ScpQclp,
        Method::Equal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SingleTone => "single_tone",
            Method::Mrt => "mrt",
            Method::ScpQclp => "scp_qclp",
            Method::Equal => "equal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected single_tone, mrt, scp_qclp or equal)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub n_tones: usize,
}

impl SystemConfig {
    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.f_min, self.f_max, self.n_tones)
    }
}

/// Either a seeded random model or an explicit tap list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelConfig {
    Model(ChannelModel),
    Inline(MultipathChannel),
}

impl ChannelConfig {
    pub fn build(&self) -> Result<MultipathChannel> {
        match self {
            ChannelConfig::Model(m) => m.generate(),
            ChannelConfig::Inline(ch) => Ok(ch.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PT,
    NTones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl SweepConfig {
    /// Transmit powers in W.
    pub fn default_power() -> Self {
        SweepConfig {
            variable: SweepVariable::PT,
            values: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
        }
    }

    pub fn default_tones() -> Self {
        SweepConfig {
            variable: SweepVariable::NTones,
            values: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        }
    }
}

/// SCP settings; the optimizer quadrature is rebuilt from `rate` for each grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScpSettings {
    pub epsilon: f64,
    pub max_iters: usize,
    pub rate: f64,
}

impl Default for ScpSettings {
    fn default() -> Self {
        ScpSettings {
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
            rate: ALGORITHM_RATE,
        }
    }
}

impl ScpSettings {
    pub fn for_grid(&self, grid: &FrequencyGrid) -> Result<ScpConfig> {
        Ok(ScpConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            quad: QuadratureSpec::at_rate(grid, self.rate)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RippleConfig {
    /// Waveform driving the rectifier.
    pub method: Method,
    /// Transmit power for the check; the experiment's `p_t_w` when absent.
    #[serde(default)]
    pub p_t_w: Option<f64>,
    /// Values of `C R_L / T`.
    pub multipliers: Vec<f64>,
    /// Lower bound on integration steps per period; raised when the input needs finer steps.
    pub steps_per_period: usize,
    /// Lower bound on simulated periods; long time constants get `6 C R_L / T`.
    pub n_periods: usize,
}

impl Default for RippleConfig {
    fn default() -> Self {
        RippleConfig {
            method: Method::ScpQclp,
            p_t_w: None,
            multipliers: vec![50.0, 100.0],
            steps_per_period: 20_000,
            n_periods: 200,
        }
    }
}

/// Everything an experiment run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub rectenna: RectennaParams,
    pub channel: ChannelConfig,
    /// Transmit power used by fixed-power runs (tone sweep, waveform, ripple).
    pub p_t_w: f64,
    pub sweep: SweepConfig,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub scp: ScpSettings,
    /// Evaluation sampling rate in multiples of the center frequency.
    pub eval_rate: f64,
    #[serde(default)]
    pub ripple: RippleConfig,
    pub output_dir: PathBuf,
    /// Concurrent sweep points; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentConfig {
    /// 915 MHz carrier, 10 MHz bandwidth, 16 tones, 18-path channel with 51.67 dB loss.
    pub fn full() -> Self {
        ExperimentConfig {
            system: SystemConfig {
                f_min: 910e6,
                f_max: 920e6,
                n_tones: 16,
            },
            rectenna: RectennaParams::default(),
            channel: ChannelConfig::Model(ChannelModel {
                seed: 1,
                paths: 18,
                total_gain_db: 51.67,
                delay_max_s: 0.3e-6,
            }),
            p_t_w: 10.0,
            sweep: SweepConfig::default_power(),
            methods: vec![Method::SingleTone, Method::Mrt, Method::ScpQclp],
            scp: ScpSettings::default(),
            eval_rate: EVALUATION_RATE,
            ripple: RippleConfig::default(),
            output_dir: PathBuf::from("out"),
            workers: 0,
        }
    }

    /// 20 kHz carrier, 2 kHz bandwidth. The delay spread is scaled with the
    /// bandwidth so the channel stays equally frequency-selective.
    pub fn fast() -> Self {
        let mut cfg = Self::full();
        cfg.system.f_min = 19e3;
        cfg.system.f_max = 21e3;
        if let ChannelConfig::Model(m) = &mut cfg.channel {
            m.delay_max_s = 1.5e-3;
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// Replaces the seed of a generated channel; inline channels are left alone.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let ChannelConfig::Model(m) = &mut self.channel {
            m.seed = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.system.grid()?;
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        check_sweep(&self.sweep)?;
        if !(self.p_t_w.is_finite() && self.p_t_w >= 0.0) {
            return Err(Error::InvalidValue {
                what: "p_t_w",
                value: self.p_t_w,
            });
        }
        for (what, v) in [
            ("eval_rate", self.eval_rate),
            ("scp.rate", self.scp.rate),
            ("scp.epsilon", self.scp.epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidValue { what, value: v });
            }
        }
        if let Some(bad) = self
            .ripple
            .multipliers
            .iter()
            .find(|m| !(m.is_finite() && **m > 0.0))
        {
            return Err(Error::InvalidValue {
                what: "ripple multiplier",
                value: *bad,
            });
        }
        Ok(())
    }

    fn eval_quad(&self, grid: &FrequencyGrid) -> Result<QuadratureSpec> {
        QuadratureSpec::at_rate(grid, self.eval_rate)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

fn check_sweep(sweep: &SweepConfig) -> Result<()> {
    if sweep.values.is_empty() {
        return Err(Error::Config("sweep values must not be empty".into()));
    }
    for &v in &sweep.values {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidValue {
                what: "sweep value",
                value: v,
            });
        }
        if sweep.variable == SweepVariable::NTones && v.fract() != 0.0 {
            return Err(Error::InvalidValue {
                what: "tone count",
                value: v,
            });
        }
    }
    Ok(())
}

/// Waveform produced by one design method.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub waveform: MultisineWaveform,
    /// QCLP steps taken (zero for the closed-form designs).
    pub iterations: usize,
    pub converged: bool,
}

pub fn design(
    method: Method,
    response: &ChannelResponse,
    p: &RectennaParams,
    p_t: f64,
    scp: &ScpConfig,
) -> Result<Design> {
    let closed = |waveform| Design {
        waveform,
        iterations: 0,
        converged: true,
    };
    Ok(match method {
        Method::SingleTone => closed(single_tone(response, p_t)?),
        Method::Mrt => closed(frequency_mrt(response, p_t)?),
        Method::Equal => closed(equal_power(response, p_t)?),
        Method::ScpQclp => {
            let trace = scp_qclp(response, p, p_t, scp)?;
            Design {
                iterations: trace.steps(),
                converged: trace.converged,
                waveform: trace.final_waveform,
            }
        }
    })
}

/// Evaluated outcome of one (sweep value, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub v_out: f64,
    pub p_out: f64,
    pub iterations: usize,
    /// Right side of the DC equation at evaluation sampling.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub method: Method,
    pub outcome: std::result::Result<PointResult, Error>,
}

/// Designs with `method` and evaluates the harvested power at evaluation sampling.
pub fn evaluate_point(
    cfg: &ExperimentConfig,
    response: &ChannelResponse,
    p_t: f64,
    method: Method,
) -> Result<PointResult> {
    let grid = response.grid();
    let d = design(
        method,
        response,
        &cfg.rectenna,
        p_t,
        &cfg.scp.for_grid(grid)?,
    )?;
    let dc = harvested_power(
        &d.waveform,
        response,
        &cfg.rectenna,
        &cfg.eval_quad(grid)?,
        DEFAULT_DC_TOL,
    )?;
    Ok(PointResult {
        v_out: dc.v_out,
        p_out: dc.p_out,
        iterations: d.iterations,
        objective: dc.rhs_value,
    })
}

/// Sweep output: rows sorted by sweep value, then by method order in the config.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let key = match self.variable {
            SweepVariable::PT => "p_t_w",
            SweepVariable::NTones => "n_tones",
        };
        let mut out = format!("{key},method,v_out_v,p_out_w,iterations,objective,status\n");
        for row in &self.rows {
            let value = match self.variable {
                SweepVariable::PT => fmt_value(row.value),
                SweepVariable::NTones => format!("{}", row.value as usize),
            };
            match &row.outcome {
                Ok(r) => writeln!(
                    out,
                    "{value},{},{},{},{},{},ok",
                    row.method,
                    fmt_value(r.v_out),
                    fmt_value(r.p_out),
                    r.iterations,
                    fmt_value(r.objective)
                ),
                Err(e) => writeln!(out, "{value},{},,,,,{}", row.method, e.tag()),
            }
            .expect("writing to a String");
        }
        out
    }

    /// Successful result for `(value, method)`, if present.
    pub fn get(&self, value: f64, method: Method) -> Option<&PointResult> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.method == method)
            .and_then(|r| r.outcome.as_ref().ok())
    }
}

fn sorted_values(sweep: &SweepConfig) -> Vec<f64> {
    let mut values = sweep.values.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

fn run_sweep<F>(cfg: &ExperimentConfig, sweep: &SweepConfig, point: F) -> Result<SweepTable>
where
    F: Fn(f64, Method) -> Result<PointResult> + Sync,
{
    cfg.validate()?;
    check_sweep(sweep)?;
    let jobs: Vec<(f64, Method)> = sorted_values(sweep)
        .into_iter()
        .flat_map(|v| cfg.methods.iter().map(move |&m| (v, m)))
        .collect();
    let rows = cfg.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(value, method)| SweepRow {
                value,
                method,
                outcome: point(value, method),
            })
            .collect()
    });
    Ok(SweepTable {
        variable: sweep.variable,
        rows,
    })
}

/// Harvested power versus transmit power on one fixed channel realization.
pub fn run_power_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    let sweep = match cfg.sweep.variable {
        SweepVariable::PT => cfg.sweep.clone(),
        SweepVariable::NTones => SweepConfig::default_power(),
    };
    let response = frequency_response(&cfg.channel.build()?, &cfg.system.grid()?);
    run_sweep(cfg, &sweep, |p_t, m| evaluate_point(cfg, &response, p_t, m))
}

/// Harvested power versus tone count at `cfg.p_t_w`; the grid and channel
/// response are rebuilt for every `N` while the taps stay fixed.
pub fn run_tone_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    let sweep = match cfg.sweep.variable {
        SweepVariable::NTones => cfg.sweep.clone(),
        SweepVariable::PT => SweepConfig::default_tones(),
    };
    let channel = cfg.channel.build()?;
    run_sweep(cfg, &sweep, |n, m| {
        let grid = FrequencyGrid::new(cfg.system.f_min, cfg.system.f_max, n as usize)?;
        evaluate_point(cfg, &frequency_response(&channel, &grid), cfg.p_t_w, m)
    })
}

/// Amplitudes and one period of `x(t)` for one design.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformReport {
    pub method: Method,
    pub response: ChannelResponse,
    pub waveform: MultisineWaveform,
    /// `max_t x(t)² / P_T`.
    pub papr: std::result::Result<f64, Error>,
    /// `(t, x(t))` at evaluation sampling.
    pub samples: Vec<(f64, f64)>,
}

impl WaveformReport {
    /// CSV with header `tone_index,f_hz,s,phi_rad,h`.
    pub fn amplitudes_csv(&self) -> String {
        let grid = self.waveform.grid();
        let mut out = String::from("tone_index,f_hz,s,phi_rad,h\n");
        for n in 0..grid.n_tones() {
            writeln!(
                out,
                "{},{},{},{},{}",
                n + 1,
                fmt_value(grid.tone(n)),
                fmt_value(self.waveform.amplitudes()[n]),
                fmt_value(self.waveform.phases()[n]),
                fmt_value(self.response.magnitudes()[n])
            )
            .expect("writing to a String");
        }
        out
    }

    /// CSV with header `t_s,x`.
    pub fn signal_csv(&self) -> String {
        let mut out = String::from("t_s,x\n");
        for &(t, x) in &self.samples {
            writeln!(out, "{},{}", fmt_value(t), fmt_value(x)).expect("writing to a String");
        }
        out
    }
}

/// `max_q x(t_q)² / P_T` over evaluation samples; undefined for a silent waveform.
pub fn papr(w: &MultisineWaveform, quad: &QuadratureSpec) -> Result<f64> {
    let power = w.transmit_power();
    if power <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let fold = ToneSampler::new(w.grid(), quad).mean_of(&transmit_phasors(w), |_| 0.0);
    Ok(fold.max.abs().max(fold.min.abs()).powi(2) / power)
}

pub fn report_waveform(cfg: &ExperimentConfig, method: Method) -> Result<WaveformReport> {
    cfg.validate()?;
    let grid = cfg.system.grid()?;
    let response = frequency_response(&cfg.channel.build()?, &grid);
    let d = cfg.pool()?.install(|| {
        design(
            method,
            &response,
            &cfg.rectenna,
            cfg.p_t_w,
            &cfg.scp.for_grid(&grid)?,
        )
    })?;
    let quad = cfg.eval_quad(&grid)?;
    let sampler = ToneSampler::new(&grid, &quad);
    let samples = sampler
        .synthesize(&transmit_phasors(&d.waveform))
        .into_iter()
        .enumerate()
        .map(|(q, x)| (sampler.time(q), x))
        .collect();
    Ok(WaveformReport {
        method,
        papr: papr(&d.waveform, &quad),
        response,
        waveform: d.waveform,
        samples,
    })
}

/// One capacitor setting of the ripple check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RippleRow {
    pub c_rl_over_t: f64,
    pub ripple_fraction: f64,
    pub steady_mean_v: f64,
    pub v_out_bisection_v: f64,
    /// `|steady_mean − v_bisection| / v_bisection`.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RippleTable {
    pub rows: Vec<(f64, std::result::Result<RippleRow, Error>)>,
}

impl RippleTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "c_rl_over_t,ripple_fraction,steady_mean_v,v_out_bisection_v,relative_gap,status\n",
        );
        for (ratio, row) in &self.rows {
            match row {
                Ok(r) => writeln!(
                    out,
                    "{},{},{},{},{},ok",
                    fmt_value(*ratio),
                    fmt_value(r.ripple_fraction),
                    fmt_value(r.steady_mean_v),
                    fmt_value(r.v_out_bisection_v),
                    fmt_value(r.relative_gap)
                ),
                Err(e) => writeln!(out, "{},,,,,{}", fmt_value(*ratio), e.tag()),
            }
            .expect("writing to a String");
        }
        out
    }
}

/// Transient simulation against the steady-state DC solution for one waveform.
pub fn ripple_point(
    w: &MultisineWaveform,
    response: &ChannelResponse,
    p: &RectennaParams,
    ratio: f64,
    transient: &TransientConfig,
    eval: &QuadratureSpec,
) -> Result<RippleRow> {
    let period = w.grid().period();
    let p = p.with_time_constant_ratio(ratio, period)?;
    let cfg = TransientConfig {
        steps_per_period: transient
            .steps_per_period
            .max(suggested_steps_per_period(w, response, &p)?),
        n_periods: transient.n_periods.max((6.0 * ratio).ceil() as usize),
        ..*transient
    };
    let sim = simulate_transient(w, response, &p, &cfg)?;
    let dc = harvested_power(w, response, &p, eval, DEFAULT_DC_TOL)?;
    Ok(RippleRow {
        c_rl_over_t: ratio,
        ripple_fraction: sim.ripple_fraction,
        steady_mean_v: sim.steady_mean,
        v_out_bisection_v: dc.v_out,
        relative_gap: (sim.steady_mean - dc.v_out).abs() / dc.v_out,
    })
}

/// Ripple and steady-state agreement for each `C R_L / T` in `multipliers`.
pub fn run_ripple_check(cfg: &ExperimentConfig, multipliers: &[f64]) -> Result<RippleTable> {
    cfg.validate()?;
    let grid = cfg.system.grid()?;
    let response = frequency_response(&cfg.channel.build()?, &grid);
    let p_t = cfg.ripple.p_t_w.unwrap_or(cfg.p_t_w);
    let pool = cfg.pool()?;
    let d = pool.install(|| {
        design(
            cfg.ripple.method,
            &response,
            &cfg.rectenna,
            p_t,
            &cfg.scp.for_grid(&grid)?,
        )
    })?;
    let transient = TransientConfig {
        steps_per_period: cfg.ripple.steps_per_period,
        n_periods: cfg.ripple.n_periods,
        ..TransientConfig::default()
    };
    let eval = cfg.eval_quad(&grid)?;
    let rows = pool.install(|| {
        multipliers
            .par_iter()
            .map(|&ratio| {
                let row = ripple_point(
                    &d.waveform,
                    &response,
                    &cfg.rectenna,
                    ratio,
                    &transient,
                    &eval,
                );
                (ratio, row)
            })
            .collect()
    });
    Ok(RippleTable { rows })
}
