//! Periodic sampling and time averages over one period of a multisine.
//!
//! The composite trapezoidal rule on a `T`-periodic integrand with `Q` equal
//! sub-intervals reduces to the plain mean of the `Q` samples at `t = q T / Q`
//! (the endpoint samples coincide). Every tone on a [`FrequencyGrid`] is an
//! integer harmonic `k_n` of `1/T`, so the tone phase at sample `q` is
//! `2π ((k_n q) mod Q) / Q`, read from a cosine/sine table without any
//! accumulated rounding.
//!
//! Sums are split into fixed-size chunks that may run on different threads.
//! Partial sums are combined in chunk order, so results are bitwise identical
//! for a given chunk size regardless of the thread count.

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::signal::{FrequencyGrid, MultisineWaveform};

/// Largest allowed diode exponent before `exp` leaves comfortable `f64` range.
pub const DEFAULT_EXPONENT_CAP: f64 = 700.0;
/// Samples per parallel work unit.
pub const DEFAULT_CHUNK: usize = 8192;
/// Sampling rate used inside the optimizer, as a multiple of the center frequency.
pub const ALGORITHM_RATE: f64 = 20.0;
/// Sampling rate used when reporting final objective values.
pub const EVALUATION_RATE: f64 = 100.0;

/// Number of samples per period and evaluation limits for periodic averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub samples: usize,
    #[serde(default = "default_chunk")]
    pub chunk: usize,
    #[serde(default = "default_cap")]
    pub exponent_cap: f64,
}

fn default_chunk() -> usize {
    DEFAULT_CHUNK
}

fn default_cap() -> f64 {
    DEFAULT_EXPONENT_CAP
}

impl QuadratureSpec {
    pub fn with_samples(samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::TooFewSamples(samples));
        }
        Ok(QuadratureSpec {
            samples,
            chunk: DEFAULT_CHUNK,
            exponent_cap: DEFAULT_EXPONENT_CAP,
        })
    }

    /// `Q = ⌈rate · f_c · T⌉`: sampling at `rate` times the center frequency.
    pub fn at_rate(grid: &FrequencyGrid, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidValue {
                what: "sampling rate factor",
                value: rate,
            });
        }
        let exact = rate * grid.center_frequency() * grid.period();
        let nearest = exact.round();
        let q = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest
        } else {
            exact.ceil()
        };
        Self::with_samples((q as usize).max(2))
    }

    /// Optimizer quadrature (20 samples per carrier cycle).
    pub fn algorithm(grid: &FrequencyGrid) -> Self {
        Self::at_rate(grid, ALGORITHM_RATE).expect("positive rate")
    }

    /// Reporting quadrature (100 samples per carrier cycle).
    pub fn evaluation(grid: &FrequencyGrid) -> Self {
        Self::at_rate(grid, EVALUATION_RATE).expect("positive rate")
    }

    pub fn with_chunk(mut self, chunk: usize) -> Self {
        self.chunk = chunk.max(1);
        self
    }

    pub fn with_exponent_cap(mut self, cap: f64) -> Self {
        self.exponent_cap = cap;
        self
    }
}

/// Result of a chunked pass over all samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFold {
    /// Per-accumulator sums over all samples (not yet divided by `Q`).
    pub sums: Vec<f64>,
    /// Largest and smallest synthesized sample.
    pub max: f64,
    pub min: f64,
}

/// Precomputed tone tables for one grid at one sample count.
#[derive(Debug, Clone)]
pub struct ToneSampler {
    samples: usize,
    chunk: usize,
    exponent_cap: f64,
    period: f64,
    steps: Vec<usize>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ToneSampler {
    pub fn new(grid: &FrequencyGrid, quad: &QuadratureSpec) -> Self {
        let q = quad.samples;
        let steps = grid.harmonics().map(|k| (k % q as u64) as usize).collect();
        let (cos, sin) = (0..q)
            .map(|i| {
                let theta = TAU * i as f64 / q as f64;
                (theta.cos(), theta.sin())
            })
            .unzip();
        ToneSampler {
            samples: q,
            chunk: quad.chunk.max(1),
            exponent_cap: quad.exponent_cap,
            period: grid.period(),
            steps,
            cos,
            sin,
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn n_tones(&self) -> usize {
        self.steps.len()
    }

    pub fn exponent_cap(&self) -> f64 {
        self.exponent_cap
    }

    /// Sample instant `q T / Q`.
    pub fn time(&self, q: usize) -> f64 {
        q as f64 * self.period / self.samples as f64
    }

    fn start_indices(&self, q0: usize) -> Vec<usize> {
        let q = self.samples as u128;
        self.steps
            .iter()
            .map(|&k| ((k as u128 * q0 as u128) % q) as usize)
            .collect()
    }

    /// Signal `Re Σ c_n exp(j w_n t)` at every sample instant `q = 0..Q`.
    pub fn synthesize(&self, phasors: &[Complex64]) -> Vec<f64> {
        assert_eq!(phasors.len(), self.n_tones(), "one phasor per tone");
        let mut out = Vec::with_capacity(self.samples);
        let mut idx = self.start_indices(0);
        for _ in 0..self.samples {
            let mut y = 0.0;
            for (n, c) in phasors.iter().enumerate() {
                y += c.re * self.cos[idx[n]] - c.im * self.sin[idx[n]];
                idx[n] = wrap_add(idx[n], self.steps[n], self.samples);
            }
            out.push(y);
        }
        out
    }

    /// Visits every sample of `y(t) = Re Σ c_n exp(j w_n t)`.
    ///
    /// `visit(y, tone_cos, acc)` receives the sample value, `cos(w_n t_q)` for
    /// every tone and a `width`-long accumulator that is summed over samples.
    pub fn fold<F>(&self, phasors: &[Complex64], width: usize, visit: F) -> SampleFold
    where
        F: Fn(f64, &[f64], &mut [f64]) + Sync,
    {
        assert_eq!(phasors.len(), self.n_tones(), "one phasor per tone");
        let n_chunks = self.samples.div_ceil(self.chunk);
        let partials: Vec<SampleFold> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let q0 = c * self.chunk;
                let q1 = (q0 + self.chunk).min(self.samples);
                let mut idx = self.start_indices(q0);
                let mut tone_cos = vec![0.0; phasors.len()];
                let mut acc = vec![0.0; width];
                let mut max = f64::NEG_INFINITY;
                let mut min = f64::INFINITY;
                for _ in q0..q1 {
                    let mut y = 0.0;
                    for (n, c) in phasors.iter().enumerate() {
                        let (cs, sn) = (self.cos[idx[n]], self.sin[idx[n]]);
                        tone_cos[n] = cs;
                        y += c.re * cs - c.im * sn;
                        idx[n] = wrap_add(idx[n], self.steps[n], self.samples);
                    }
                    max = max.max(y);
                    min = min.min(y);
                    visit(y, &tone_cos, &mut acc);
                }
                SampleFold {
                    sums: acc,
                    max,
                    min,
                }
            })
            .collect();
        let mut total = SampleFold {
            sums: vec![0.0; width],
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
        };
        for p in partials {
            for (t, s) in total.sums.iter_mut().zip(&p.sums) {
                *t += s;
            }
            total.max = total.max.max(p.max);
            total.min = total.min.min(p.min);
        }
        total
    }

    /// Periodic mean of `f(y(t))`.
    pub fn mean_of<F>(&self, phasors: &[Complex64], f: F) -> SampleFold
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let mut fold = self.fold(phasors, 1, |y, _, acc| acc[0] += f(y));
        fold.sums[0] /= self.samples as f64;
        fold
    }

    /// `(1/T) ∫ x(t)² dt` by the periodic trapezoidal rule.
    pub fn mean_square_transmit(&self, w: &MultisineWaveform) -> f64 {
        self.mean_of(&transmit_phasors(w), |x| x * x).sums[0]
    }
}

#[inline]
fn wrap_add(idx: usize, step: usize, modulus: usize) -> usize {
    let next = idx + step;
    if next >= modulus {
        next - modulus
    } else {
        next
    }
}

/// Complex tone amplitudes `√2 s_n exp(jφ_n)` of the transmit signal.
pub fn transmit_phasors(w: &MultisineWaveform) -> Vec<Complex64> {
    w.amplitudes()
        .iter()
        .zip(w.phases())
        .map(|(&s, &phi)| Complex64::from_polar(SQRT_2 * s, phi))
        .collect()
}

/// Complex tone amplitudes `√2 s_n h_n exp(j(ψ_n + φ_n))` of the received signal.
pub fn received_phasors(
    w: &MultisineWaveform,
    response: &ChannelResponse,
) -> Result<Vec<Complex64>> {
    if response.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    Ok((0..w.grid().n_tones())
        .map(|n| {
            Complex64::from_polar(
                SQRT_2 * w.amplitudes()[n] * response.magnitudes()[n],
                response.phases()[n] + w.phases()[n],
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_counts_follow_rate_rule() {
        let g = FrequencyGrid::new(910e6, 920e6, 16).unwrap();
        assert_eq!(QuadratureSpec::algorithm(&g).samples, 29_280);
        assert_eq!(QuadratureSpec::evaluation(&g).samples, 146_400);
        let toy = FrequencyGrid::new(19e3, 21e3, 4).unwrap();
        assert_eq!(QuadratureSpec::algorithm(&toy).samples, 800);
        assert!(QuadratureSpec::with_samples(1).is_err());
    }

    #[test]
    fn synthesized_samples_match_direct_evaluation() {
        let g = FrequencyGrid::new(19e3, 21e3, 4).unwrap();
        let w =
            MultisineWaveform::new(g, vec![0.2, 0.5, 0.1, 0.9], vec![0.3, 1.3, 2.3, 5.0]).unwrap();
        let sampler = ToneSampler::new(&g, &QuadratureSpec::with_samples(517).unwrap());
        let y = sampler.synthesize(&transmit_phasors(&w));
        for q in (0..517).step_by(37) {
            assert!((y[q] - w.eval_transmit(sampler.time(q))).abs() < 1e-12);
        }
    }

    #[test]
    fn chunking_does_not_change_results_beyond_rounding() {
        let g = FrequencyGrid::new(910e6, 920e6, 16).unwrap();
        let amps: Vec<f64> = (0..16).map(|n| 0.1 + 0.05 * n as f64).collect();
        let w = MultisineWaveform::new(g, amps, (0..16).map(|n| n as f64).collect()).unwrap();
        let phasors = transmit_phasors(&w);
        let base = QuadratureSpec::algorithm(&g);
        let mean = |chunk: usize| {
            ToneSampler::new(&g, &base.with_chunk(chunk))
                .mean_of(&phasors, |y| (0.3 * y).exp())
                .sums[0]
        };
        let reference = mean(DEFAULT_CHUNK);
        assert_eq!(reference.to_bits(), mean(DEFAULT_CHUNK).to_bits());
        for chunk in [1000, 4096, 29_280, 100_000] {
            assert!((mean(chunk) - reference).abs() <= 1e-12 * reference);
        }
    }
}
