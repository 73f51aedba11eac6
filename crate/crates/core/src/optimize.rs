//! Waveform designs for maximum harvested DC power.
//!
//! All designs use the phase rule `φ_n = −ψ_n`, which lines every received
//! tone up at `t = 0`. The amplitude designs are:
//!
//! * single tone: all power on the strongest tone (optimal for the
//!   second-order diode model);
//! * frequency MRT: `s_n ∝ h_n`, maximizing the peak of the diode exponential;
//! * SCP-QCLP: sequential linearization of the sampled objective
//!   `β̃₀(s) = (1/Q) Σ_q exp(√(2R_s) Σ_n s_n h_n cos(w_n qΔt) / (ηV₀))`,
//!   each step solved in closed form over the power ball.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::quadrature::{QuadratureSpec, ToneSampler};
use crate::rectenna::RectennaParams;
use crate::signal::{wrap_phase, FrequencyGrid, MultisineWaveform};

/// Default relative stopping threshold on the objective change.
pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MAX_ITERS: usize = 500;

fn check_power(p_t: f64) -> Result<()> {
    if !(p_t.is_finite() && p_t >= 0.0) {
        return Err(Error::InvalidValue {
            what: "transmit power",
            value: p_t,
        });
    }
    Ok(())
}

/// Phases `φ_n = (−ψ_n) mod 2π` that make all received tones add up at `t = 0`.
pub fn align_phases(response: &ChannelResponse) -> Vec<f64> {
    response
        .phases()
        .iter()
        .map(|psi| wrap_phase(-psi))
        .collect()
}

fn aligned(response: &ChannelResponse, amplitudes: Vec<f64>) -> Result<MultisineWaveform> {
    MultisineWaveform::new(*response.grid(), amplitudes, align_phases(response))
}

/// All power on the strongest tone; ties go to the lowest index.
pub fn single_tone(response: &ChannelResponse, p_t: f64) -> Result<MultisineWaveform> {
    check_power(p_t)?;
    let h = response.magnitudes();
    let best = h
        .iter()
        .enumerate()
        .fold(0, |best, (n, &v)| if v > h[best] { n } else { best });
    let mut s = vec![0.0; h.len()];
    s[best] = p_t.sqrt();
    aligned(response, s)
}

/// Equal power on every tone, `s_n = √(P_T / N)`.
pub fn equal_power(response: &ChannelResponse, p_t: f64) -> Result<MultisineWaveform> {
    check_power(p_t)?;
    let n = response.grid().n_tones();
    aligned(response, vec![(p_t / n as f64).sqrt(); n])
}

/// Maximal ratio transmission over tones: `s_n = h_n √(P_T / Σ h_k²)`.
pub fn frequency_mrt(response: &ChannelResponse, p_t: f64) -> Result<MultisineWaveform> {
    check_power(p_t)?;
    let h = response.magnitudes();
    let energy: f64 = h.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return Err(Error::ZeroChannel);
    }
    let k = (p_t / energy).sqrt();
    aligned(response, h.iter().map(|v| v * k).collect())
}

/// First-order model `β̃₀ + Σ β̃_n (s_n − s_n⁽ᵐ⁾)` of the sampled objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub beta0: f64,
    pub betas: Vec<f64>,
}

/// Sampled aligned-phase objective for one channel, with its tone tables.
#[derive(Debug, Clone)]
pub struct AlignedObjective {
    sampler: ToneSampler,
    magnitudes: Vec<f64>,
    /// `√(2R_s) / (ηV₀)`
    gain: f64,
}

impl AlignedObjective {
    pub fn new(response: &ChannelResponse, p: &RectennaParams, quad: &QuadratureSpec) -> Self {
        AlignedObjective {
            sampler: ToneSampler::new(response.grid(), quad),
            magnitudes: response.magnitudes().to_vec(),
            gain: SQRT_2 * p.exponent_scale(),
        }
    }

    pub fn n_tones(&self) -> usize {
        self.magnitudes.len()
    }

    fn check_amplitudes(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.n_tones() {
            return Err(Error::LengthMismatch {
                what: "amplitudes",
                expected: self.n_tones(),
                got: s.len(),
            });
        }
        if let Some(&bad) = s.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidValue {
                what: "amplitude",
                value: bad,
            });
        }
        Ok(())
    }

    // Phasors of u(t) = Σ s_n h_n cos(w_n t); z(t) = exp(gain · u(t)).
    fn phasors(&self, s: &[f64]) -> Vec<Complex64> {
        s.iter()
            .zip(&self.magnitudes)
            .map(|(s, h)| Complex64::new(s * h, 0.0))
            .collect()
    }

    fn check_peak(&self, peak: f64) -> Result<()> {
        let exponent = self.gain * peak;
        let cap = self.sampler.exponent_cap();
        if exponent > cap || !exponent.is_finite() {
            return Err(Error::ExponentOverflow {
                peak: exponent,
                cap,
            });
        }
        Ok(())
    }

    /// `β̃₀(s) = (1/Q) Σ_q z(qΔt)`.
    pub fn value(&self, s: &[f64]) -> Result<f64> {
        self.check_amplitudes(s)?;
        let gain = self.gain;
        let fold = self.sampler.mean_of(&self.phasors(s), |u| (gain * u).exp());
        self.check_peak(fold.max)?;
        Ok(fold.sums[0])
    }

    /// `β̃₀` and `β̃_n = (1/Q) Σ_q (√(2R_s)/(ηV₀)) h_n cos(w_n qΔt) z(qΔt)`.
    ///
    /// `β̃_n` is the exact partial derivative of the sampled objective.
    pub fn linearize(&self, s: &[f64]) -> Result<Linearization> {
        self.check_amplitudes(s)?;
        let n = self.n_tones();
        let gain = self.gain;
        let fold = self
            .sampler
            .fold(&self.phasors(s), n + 1, |u, tone_cos, acc| {
                let z = (gain * u).exp();
                acc[0] += z;
                for (a, c) in acc[1..].iter_mut().zip(tone_cos) {
                    *a += c * z;
                }
            });
        self.check_peak(fold.max)?;
        let q = self.sampler.samples() as f64;
        Ok(Linearization {
            beta0: fold.sums[0] / q,
            betas: (0..n)
                .map(|k| gain * self.magnitudes[k] * fold.sums[k + 1] / q)
                .collect(),
        })
    }
}

/// Linearization coefficients of the sampled aligned-phase objective at `amplitudes`.
pub fn scp_coefficients(
    amplitudes: &[f64],
    response: &ChannelResponse,
    p: &RectennaParams,
    quad: &QuadratureSpec,
) -> Result<Linearization> {
    AlignedObjective::new(response, p, quad).linearize(amplitudes)
}

/// Maximizer of `Σ β_n s_n` over `{s ≥ 0 : Σ s_n² ≤ P_T}`.
///
/// Negative coefficients are clamped to zero first; the remaining vector is
/// scaled onto the power sphere, `s_n = β_n⁺ √(P_T / Σ (β_k⁺)²)`.
pub fn qclp_step(betas: &[f64], p_t: f64) -> Result<Vec<f64>> {
    check_power(p_t)?;
    let clamped: Vec<f64> = betas.iter().map(|b| b.max(0.0)).collect();
    let energy: f64 = clamped.iter().map(|b| b * b).sum();
    if energy.is_nan() || energy <= 0.0 {
        return Err(Error::DegenerateLinearization(betas.len()));
    }
    let k = (p_t / energy).sqrt();
    Ok(clamped.into_iter().map(|b| b * k).collect())
}

/// Settings for [`scp_qclp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScpConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub quad: QuadratureSpec,
}

impl ScpConfig {
    /// `ε = 10⁻³`, 500 iterations, 20 samples per carrier cycle.
    pub fn new(grid: &FrequencyGrid) -> Self {
        ScpConfig {
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
            quad: QuadratureSpec::algorithm(grid),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidValue {
                what: "SCP epsilon",
                value: self.epsilon,
            });
        }
        if self.max_iters == 0 {
            return Err(Error::Config("SCP max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// One SCP iterate `s⁽ᵐ⁾` with the coefficients computed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScpIteration {
    pub m: usize,
    pub amplitudes: Vec<f64>,
    pub beta0: f64,
    pub betas: Vec<f64>,
    /// `|β̃₀⁽ᵐ⁾ − β̃₀⁽ᵐ⁻¹⁾| / β̃₀⁽ᵐ⁻¹⁾`; absent for the initial point.
    pub delta: Option<f64>,
}

/// Full record of an SCP-QCLP run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScpTrace {
    pub iterations: Vec<ScpIteration>,
    pub converged: bool,
    pub final_waveform: MultisineWaveform,
}

impl ScpTrace {
    /// Number of QCLP steps taken.
    pub fn steps(&self) -> usize {
        self.iterations.len() - 1
    }

    pub fn last(&self) -> &ScpIteration {
        self.iterations
            .last()
            .expect("trace holds the initial point")
    }

    /// First iteration index at which `Δ ≤ epsilon`, if any.
    pub fn first_below(&self, epsilon: f64) -> Option<usize> {
        self.iterations
            .iter()
            .find(|it| it.delta.is_some_and(|d| d <= epsilon))
            .map(|it| it.m)
    }

    /// CSV with header `m,beta0,delta,s_1,...,s_N`.
    pub fn to_csv(&self) -> String {
        use crate::experiments::fmt_value;
        let n = self.final_waveform.grid().n_tones();
        let mut out = String::from("m,beta0,delta");
        for k in 1..=n {
            write!(out, ",s_{k}").unwrap();
        }
        out.push('\n');
        for it in &self.iterations {
            write!(
                out,
                "{},{},{}",
                it.m,
                fmt_value(it.beta0),
                it.delta.map(fmt_value).unwrap_or_default()
            )
            .unwrap();
            for s in &it.amplitudes {
                write!(out, ",{}", fmt_value(*s)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Relative spread `(max − min) / mean` of `β_n / s_n` over tones with
/// `s_n ≥ active · ‖s‖`. Zero at a KKT point of the sampled problem.
pub fn kkt_spread(amplitudes: &[f64], betas: &[f64], active: f64) -> f64 {
    let norm = amplitudes.iter().map(|s| s * s).sum::<f64>().sqrt();
    let ratios: Vec<f64> = amplitudes
        .iter()
        .zip(betas)
        .filter(|(s, _)| **s > 0.0 && **s >= active * norm)
        .map(|(s, b)| b / s)
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    (max - min) / mean.abs()
}

/// Sequential convex programming with closed-form QCLP steps.
///
/// Starts from equal power, then repeats: linearize at `s⁽ᵐ⁾`, jump to the
/// QCLP maximizer `s⁽ᵐ⁺¹⁾`, and recompute `β̃₀` there. Stops once the relative
/// change of `β̃₀` is at most `epsilon` or after `max_iters` steps; running out
/// of iterations is reported through `converged = false`.
pub fn scp_qclp(
    response: &ChannelResponse,
    p: &RectennaParams,
    p_t: f64,
    cfg: &ScpConfig,
) -> Result<ScpTrace> {
    check_power(p_t)?;
    cfg.validate()?;
    let n = response.grid().n_tones();
    if response.magnitudes().iter().all(|h| *h == 0.0) {
        return Err(Error::ZeroChannel);
    }
    let phases = align_phases(response);
    if p_t == 0.0 {
        return Ok(ScpTrace {
            iterations: vec![ScpIteration {
                m: 1,
                amplitudes: vec![0.0; n],
                beta0: 1.0,
                betas: vec![0.0; n],
                delta: None,
            }],
            converged: true,
            final_waveform: MultisineWaveform::new(*response.grid(), vec![0.0; n], phases)?,
        });
    }

    let objective = AlignedObjective::new(response, p, &cfg.quad);
    let mut s = vec![(p_t / n as f64).sqrt(); n];
    let mut lin = objective.linearize(&s)?;
    let mut iterations = vec![ScpIteration {
        m: 1,
        amplitudes: s.clone(),
        beta0: lin.beta0,
        betas: lin.betas.clone(),
        delta: None,
    }];
    let mut converged = false;
    for m in 2..=cfg.max_iters + 1 {
        let next = qclp_step(&lin.betas, p_t)?;
        let next_lin = objective.linearize(&next)?;
        let delta = (next_lin.beta0 - lin.beta0).abs() / lin.beta0;
        iterations.push(ScpIteration {
            m,
            amplitudes: next.clone(),
            beta0: next_lin.beta0,
            betas: next_lin.betas.clone(),
            delta: Some(delta),
        });
        s = next;
        lin = next_lin;
        if delta <= cfg.epsilon {
            converged = true;
            break;
        }
    }
    Ok(ScpTrace {
        iterations,
        converged,
        final_waveform: MultisineWaveform::new(*response.grid(), s, phases)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{frequency_response, generate_channel};
    use crate::rectenna::rectifier_rhs;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::new(19e3, 21e3, n).unwrap()
    }

    fn selective(seed: u64, n: usize) -> ChannelResponse {
        let ch = generate_channel(seed, 18, 51.67, 1.5e-3).unwrap();
        frequency_response(&ch, &grid(n))
    }

    #[test]
    fn phase_alignment_examples() {
        let g = grid(3);
        let r = ChannelResponse::new(g, vec![1.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(align_phases(&r), vec![0.0; 3]);
        let r = ChannelResponse::new(g, vec![1.0; 3], vec![PI / 3.0; 3]).unwrap();
        for phi in align_phases(&r) {
            assert!((phi - 5.0 * PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_tone_examples() {
        let g = grid(3);
        let r = ChannelResponse::new(g, vec![1.0, 3.0, 2.0], vec![0.0; 3]).unwrap();
        assert_eq!(single_tone(&r, 4.0).unwrap().amplitudes(), &[0.0, 2.0, 0.0]);
        let flat = ChannelResponse::flat(g, 0.5).unwrap();
        assert_eq!(
            single_tone(&flat, 9.0).unwrap().amplitudes(),
            &[3.0, 0.0, 0.0]
        );
        assert!(single_tone(&flat, -1.0).is_err());
    }

    #[test]
    fn mrt_examples() {
        let flat = ChannelResponse::flat(grid(4), 7e-3).unwrap();
        for s in frequency_mrt(&flat, 1.0).unwrap().amplitudes() {
            assert!((s - 0.5).abs() < 1e-15);
        }
        let r = ChannelResponse::new(grid(2), vec![1.0, 0.0], vec![0.0; 2]).unwrap();
        assert_eq!(frequency_mrt(&r, 9.0).unwrap().amplitudes(), &[3.0, 0.0]);
        let r = ChannelResponse::new(grid(3), vec![1.0, 2.0, 2.0], vec![0.0; 3]).unwrap();
        assert_eq!(
            frequency_mrt(&r, 9.0).unwrap().amplitudes(),
            &[1.0, 2.0, 2.0]
        );
        let zero = ChannelResponse::flat(grid(3), 0.0).unwrap();
        assert_eq!(frequency_mrt(&zero, 1.0), Err(Error::ZeroChannel));
    }

    #[test]
    fn qclp_examples() {
        assert_eq!(qclp_step(&[3.0, 4.0], 25.0).unwrap(), vec![3.0, 4.0]);
        assert_eq!(
            qclp_step(&[1.0, 0.0, 0.0], 4.0).unwrap(),
            vec![2.0, 0.0, 0.0]
        );
        assert_eq!(qclp_step(&[-1.0, 3.0], 9.0).unwrap(), vec![0.0, 3.0]);
        assert_eq!(
            qclp_step(&[-1.0, 0.0], 9.0),
            Err(Error::DegenerateLinearization(2))
        );
    }

    #[test]
    fn qclp_matches_grid_search() {
        // Brute force over a 2000 x 2000 grid of the feasible quarter disk.
        let betas = [0.7, 1.9];
        let p_t = 2.5;
        let s = qclp_step(&betas, p_t).unwrap();
        let best = betas[0] * s[0] + betas[1] * s[1];
        let side = p_t.sqrt();
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..2000 {
            for j in 0..2000 {
                let (a, b) = (side * i as f64 / 1999.0, side * j as f64 / 1999.0);
                if a * a + b * b <= p_t {
                    grid_best = grid_best.max(betas[0] * a + betas[1] * b);
                }
            }
        }
        assert!(best >= grid_best);
        assert!(best - grid_best <= 1e-3 * best);
    }

    #[test]
    fn zero_amplitudes_give_trivial_coefficients() {
        let r = selective(1, 4);
        let quad = QuadratureSpec::algorithm(r.grid());
        let lin = scp_coefficients(&[0.0; 4], &r, &RectennaParams::default(), &quad).unwrap();
        assert_eq!(lin.beta0, 1.0);
        for b in lin.betas {
            assert!(b.abs() < 1e-12);
        }
    }

    #[test]
    fn beta0_equals_rectifier_rhs_with_aligned_phases() {
        let r = selective(4, 4);
        let p = RectennaParams::default();
        let quad = QuadratureSpec::algorithm(r.grid());
        let s = vec![1.0, 2.0, 0.5, 1.5];
        let w = MultisineWaveform::new(*r.grid(), s.clone(), align_phases(&r)).unwrap();
        let rhs = rectifier_rhs(&w, &r, &p, &quad).unwrap();
        let lin = scp_coefficients(&s, &r, &p, &quad).unwrap();
        assert!((rhs - lin.beta0).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn flat_channel_iterates_stay_mirror_symmetric() {
        // Intermodulation favours the inner tones, so the amplitudes are not
        // equal, but reversing the tone order leaves the problem unchanged.
        let r = ChannelResponse::flat(grid(4), 7e-3).unwrap();
        let p = RectennaParams::default();
        let trace = scp_qclp(&r, &p, 1.0, &ScpConfig::new(r.grid())).unwrap();
        assert!(trace.converged);
        assert!(trace.steps() <= 5);
        for it in &trace.iterations {
            let s = &it.amplitudes;
            assert!((s[0] - s[3]).abs() <= 1e-9 * s[0]);
            assert!((s[1] - s[2]).abs() <= 1e-9 * s[1]);
            assert!(s[1] >= s[0]);
        }
    }

    #[test]
    fn zero_power_trace() {
        let r = selective(2, 4);
        let trace = scp_qclp(
            &r,
            &RectennaParams::default(),
            0.0,
            &ScpConfig::new(r.grid()),
        )
        .unwrap();
        assert!(trace.converged);
        assert_eq!(trace.final_waveform.transmit_power(), 0.0);
    }

    #[test]
    fn iteration_cap_is_reported_not_raised() {
        let r = selective(3, 8);
        let cfg = ScpConfig::new(r.grid())
            .with_epsilon(1e-15)
            .with_max_iters(2);
        let trace = scp_qclp(&r, &RectennaParams::default(), 10.0, &cfg).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.steps(), 2);
    }

    #[test]
    fn trace_csv_layout() {
        let r = selective(5, 3);
        let trace = scp_qclp(
            &r,
            &RectennaParams::default(),
            10.0,
            &ScpConfig::new(r.grid()),
        )
        .unwrap();
        let csv = trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "m,beta0,delta,s_1,s_2,s_3");
        assert_eq!(lines.len(), trace.iterations.len() + 1);
        assert!(lines[1].starts_with("1,") && lines[1].split(',').nth(2) == Some(""));
        let v = serde_json::to_value(&trace).unwrap();
        assert!(v["iterations"].as_array().unwrap().len() >= 2);
    }

    fn random_case() -> impl Strategy<Value = (u64, Vec<f64>)> {
        (any::<u64>(), proptest::collection::vec(0.0f64..1.5, 6))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn coefficients_match_central_differences((seed, s) in random_case()) {
            let r = selective(seed, 6);
            let p = RectennaParams::default();
            let obj = AlignedObjective::new(&r, &p, &QuadratureSpec::algorithm(r.grid()));
            let lin = obj.linearize(&s).unwrap();
            let delta = 1e-6;
            for n in 0..6 {
                let mut up = s.clone();
                let mut down = s.clone();
                up[n] += delta;
                down[n] = (down[n] - delta).max(0.0);
                let fd = (obj.value(&up).unwrap() - obj.value(&down).unwrap()) / (up[n] - down[n]);
                prop_assert!((lin.betas[n] - fd).abs() <= 1e-5, "tone {}: {} vs {}", n, lin.betas[n], fd);
            }
        }

        #[test]
        fn mrt_ignores_channel_scale(seed in any::<u64>(), k in 1e-3f64..1e3, p_t in 0.0f64..50.0) {
            let r = selective(seed, 8);
            let a = frequency_mrt(&r, p_t).unwrap();
            let b = frequency_mrt(&r.scaled(k).unwrap(), p_t).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                prop_assert!((x - y).abs() <= 1e-12 * p_t.sqrt().max(1.0));
            }
            prop_assert!((a.transmit_power() - p_t).abs() <= 1e-12 * p_t.max(1e-300));
        }

        #[test]
        fn single_tone_ignores_channel_scale(seed in any::<u64>(), k in 1e-3f64..1e3) {
            let r = selective(seed, 8);
            let pick = |w: MultisineWaveform| w.amplitudes().iter().position(|s| *s > 0.0);
            prop_assert_eq!(
                pick(single_tone(&r, 1.0).unwrap()),
                pick(single_tone(&r.scaled(k).unwrap(), 1.0).unwrap())
            );
        }

        #[test]
        fn aligned_phases_dominate_random_phases(seed in any::<u64>(), s in proptest::collection::vec(0.0f64..2.0, 4)) {
            let r = selective(seed, 4);
            let p = RectennaParams::default();
            let quad = QuadratureSpec::algorithm(r.grid());
            let best = rectifier_rhs(
                &MultisineWaveform::new(*r.grid(), s.clone(), align_phases(&r)).unwrap(), &r, &p, &quad,
            ).unwrap();
            let mut state = seed | 1;
            for _ in 0..100 {
                let phases: Vec<f64> = (0..4).map(|_| {
                    state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU
                }).collect();
                let w = MultisineWaveform::new(*r.grid(), s.clone(), phases).unwrap();
                prop_assert!(rectifier_rhs(&w, &r, &p, &quad).unwrap() <= best * (1.0 + 1e-12));
            }
        }

        #[test]
        fn scp_ascends_and_stays_feasible(seed in any::<u64>(), p_t in 0.5f64..20.0) {
            let r = selective(seed, 8);
            let trace = scp_qclp(&r, &RectennaParams::default(), p_t, &ScpConfig::new(r.grid())).unwrap();
            for pair in trace.iterations.windows(2) {
                prop_assert!(pair[1].beta0 >= pair[0].beta0 * (1.0 - 1e-9));
            }
            for it in &trace.iterations {
                let power: f64 = it.amplitudes.iter().map(|s| s * s).sum();
                prop_assert!(power <= p_t * (1.0 + 1e-12));
                prop_assert!((power - p_t).abs() <= 1e-12 * p_t);
            }
        }
    }
}
