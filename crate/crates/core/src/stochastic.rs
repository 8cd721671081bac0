//! Seeded c-number noise in the symmetric-ordering representation, and the
//! ensemble statistics that stand in for operator expectation values.
//!
//! Every trajectory draws from its own ChaCha20 stream selected by the
//! trajectory index, so an ensemble is reproducible and independent of the
//! order in which trajectories are run.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nlse::EnvelopeGrid;
use crate::numerics::{pairwise_sum, pairwise_sum_complex};

/// Vacuum mode variance in normalized field units.
pub const DEFAULT_V0: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParameters {
    pub seed: u64,
    /// Mean thermal occupation at the carrier.
    pub nbar: f64,
    /// Vacuum mode variance `v0`.
    pub v0: f64,
}

impl NoiseParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return Err(Error::Domain(format!("thermal occupation must be >= 0, got {}", self.nbar)));
        }
        if !(self.v0.is_finite() && self.v0 > 0.0) {
            return Err(Error::Domain(format!("vacuum variance must be positive, got {}", self.v0)));
        }
        Ok(())
    }

    /// Symmetric-ordered occupation `(nbar + 1/2) v0`.
    pub fn symmetric_level(&self) -> f64 {
        (self.nbar + 0.5) * self.v0
    }
}

/// A reproducible stream of complex Gaussian increments.
#[derive(Debug, Clone)]
pub struct NoiseProcess {
    params: NoiseParameters,
    stream: u64,
    rng: ChaCha20Rng,
    counter: u64,
}

impl NoiseProcess {
    /// Substream `stream` (usually the trajectory index) of the seed.
    pub fn new(params: NoiseParameters, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
        rng.set_stream(stream);
        Self { params, stream, rng, counter: 0 }
    }

    pub fn params(&self) -> &NoiseParameters {
        &self.params
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of complex samples drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// One complex Gaussian with `E|z|^2 = variance`, split evenly between
    /// the real and imaginary parts.
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let s = (0.5 * variance).sqrt();
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        self.counter += 1;
        Complex64::new(s * re, s * im)
    }

    pub fn complex_normals(&mut self, n: usize, variance: f64) -> Vec<Complex64> {
        (0..n).map(|_| self.complex_normal(variance)).collect()
    }

    /// Langevin force samples on `cells` cells of size `h_x` by `h_t`, each
    /// with `E|f|^2 = (nbar + 1/2) v0 / (h_x h_t)`.
    pub fn sample_force(&mut self, cells: usize, h_x: f64, h_t: f64) -> Result<Vec<Complex64>> {
        if !(h_x > 0.0 && h_t > 0.0) {
            return Err(Error::Domain(format!("cell sizes must be positive, got h_x = {h_x}, h_t = {h_t}")));
        }
        let variance = self.params.symmetric_level() / (h_x * h_t);
        Ok(self.complex_normals(cells, variance))
    }
}

/// White-noise strength `D = 2 k0i (nbar + 1/2) v0` that holds the damped
/// mode `da/dx = -k0i a + eta` at the symmetric level `(nbar + 1/2) v0`.
pub fn fd_noise_amplitude(k0i: f64, nbar: f64, v0: f64) -> Result<f64> {
    if !(k0i >= 0.0) {
        return Err(Error::Domain(format!("attenuation must be >= 0, got {k0i}")));
    }
    Ok(2.0 * k0i * (nbar + 0.5) * v0)
}

/// Adds vacuum fluctuations to a coherent envelope: per sample a complex
/// Gaussian of variance `v0 / (2 h_t)`, so every temporal mode starts at the
/// vacuum level `v0 / 2`.
pub fn sample_input_pulse(process: &mut NoiseProcess, coherent: &EnvelopeGrid) -> EnvelopeGrid {
    let variance = 0.5 * process.params.v0 / coherent.h_t();
    let mut out = coherent.clone();
    for a in out.a.iter_mut() {
        *a += process.complex_normal(variance);
    }
    out
}

/// Per-sample ensemble statistics with jackknife standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleMoments {
    pub n_traj: usize,
    pub mean_field: Vec<Complex64>,
    /// `<|a - <a>|^2>` with divisor `n`.
    pub symmetric_variance: Vec<f64>,
    pub intensity_mean: Vec<f64>,
    pub mean_stderr: Vec<f64>,
    pub variance_stderr: Vec<f64>,
    pub intensity_stderr: Vec<f64>,
}

/// Moments of complex samples; `samples[t][j]` is point `j` of trajectory `t`.
pub fn reduce_samples<S: AsRef<[Complex64]>>(samples: &[S]) -> Result<EnsembleMoments> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let points = samples[0].as_ref().len();
    if samples.iter().any(|s| s.as_ref().len() != points) {
        return Err(Error::Grid("trajectories have different lengths".into()));
    }
    let nf = n as f64;
    let mut moments = EnsembleMoments {
        n_traj: n,
        mean_field: Vec::with_capacity(points),
        symmetric_variance: Vec::with_capacity(points),
        intensity_mean: Vec::with_capacity(points),
        mean_stderr: Vec::with_capacity(points),
        variance_stderr: Vec::with_capacity(points),
        intensity_stderr: Vec::with_capacity(points),
    };
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    let mut buf = vec![0.0; n];
    for j in 0..points {
        for (c, s) in column.iter_mut().zip(samples) {
            *c = s.as_ref()[j];
        }
        let mean = pairwise_sum_complex(&column) / nf;
        for (b, c) in buf.iter_mut().zip(&column) {
            *b = (c - mean).norm_sqr();
        }
        let q = pairwise_sum(&buf);
        let variance = q / nf;
        let deviations = buf.clone();
        for (b, c) in buf.iter_mut().zip(&column) {
            *b = c.norm_sqr();
        }
        let intensity = pairwise_sum(&buf) / nf;
        let intensities = buf.clone();

        let (mean_se, var_se, int_se) = if n < 2 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let m1 = nf - 1.0;
            // leave-one-out variance in terms of the centred data
            for (b, d) in buf.iter_mut().zip(&deviations) {
                *b = (q - d * nf / m1) / m1;
            }
            let var_se = jackknife(&buf);
            // for means the jackknife reduces to the usual s / sqrt(n)
            let mean_se = (q / (nf * m1)).sqrt();
            for (b, i) in buf.iter_mut().zip(&intensities) {
                *b = (i - intensity) * (i - intensity);
            }
            let int_se = (pairwise_sum(&buf) / (nf * m1)).sqrt();
            (mean_se, var_se, int_se)
        };
        moments.mean_field.push(mean);
        moments.symmetric_variance.push(variance);
        moments.intensity_mean.push(intensity);
        moments.mean_stderr.push(mean_se);
        moments.variance_stderr.push(var_se);
        moments.intensity_stderr.push(int_se);
    }
    Ok(moments)
}

fn jackknife(leave_one_out: &[f64]) -> f64 {
    let n = leave_one_out.len() as f64;
    let centre = pairwise_sum(leave_one_out) / n;
    let spread: Vec<f64> = leave_one_out.iter().map(|v| (v - centre) * (v - centre)).collect();
    ((n - 1.0) / n * pairwise_sum(&spread)).sqrt()
}

/// Moments of an ensemble of envelopes on a common grid.
pub fn reduce_moments(trajectories: &[EnvelopeGrid]) -> Result<EnsembleMoments> {
    let first = trajectories.first().ok_or(Error::EmptyEnsemble)?;
    if let Some(t) = trajectories.iter().position(|g| !g.same_grid(first)) {
        return Err(Error::Grid(format!("trajectory {t} is on a different grid")));
    }
    let samples: Vec<&[Complex64]> = trajectories.iter().map(|g| g.a.as_slice()).collect();
    reduce_samples(&samples)
}
