//! Slowly varying envelope on a uniform retarded-time window.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fft_angular_frequency, pairwise_sum};

/// Carrier that the envelope is measured against, `phi = k_phi x - omega0 t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub omega0: f64,
    pub k_phi: f64,
}

/// One realization of the forward envelope at position `x`.
///
/// Sample `j` sits at `tau_j = -window/2 + j h_t` with `h_t = window / N`;
/// the window is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeGrid {
    pub x: f64,
    pub window: f64,
    pub a: Vec<Complex64>,
    pub carrier: Carrier,
}

impl EnvelopeGrid {
    pub fn new(window: f64, a: Vec<Complex64>) -> Result<Self> {
        if !a.len().is_power_of_two() || a.len() < 2 {
            return Err(Error::Grid(format!("sample count must be a power of two, got {}", a.len())));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::Grid(format!("time window must be positive, got {window}")));
        }
        Ok(Self { x: 0.0, window, a, carrier: Carrier::default() })
    }

    pub fn zeros(n: usize, window: f64) -> Result<Self> {
        Self::new(window, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn from_fn(n: usize, window: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let mut grid = Self::zeros(n, window)?;
        for j in 0..n {
            grid.a[j] = f(grid.tau(j));
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn h_t(&self) -> f64 {
        self.window / self.a.len() as f64
    }

    pub fn tau(&self, j: usize) -> f64 {
        -0.5 * self.window + j as f64 * self.h_t()
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.tau(j)).collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len() && self.window == other.window
    }

    /// `int |a|^2 dtau`.
    pub fn energy(&self) -> f64 {
        let p: Vec<f64> = self.a.iter().map(|z| z.norm_sqr()).collect();
        self.h_t() * pairwise_sum(&p)
    }

    pub fn peak_power(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
    }

    /// Detuning `Omega` of transform bin `m`. The envelope is a sum of
    /// `exp(-i Omega tau)`, the opposite sign to the forward transform.
    pub fn mode_frequency(&self, m: usize) -> f64 {
        -fft_angular_frequency(m, self.len(), self.h_t())
    }

    /// Temporal mode amplitudes `sqrt(h_t / N) sum_j a_j exp(-2 pi i j m / N)`,
    /// normalized so that white noise of per-sample variance `s / h_t` gives
    /// mode variance `s`.
    pub fn mode_amplitudes(&self) -> Vec<Complex64> {
        let mut b = self.a.clone();
        FftPlanner::<f64>::new().plan_fft_forward(b.len()).process(&mut b);
        let scale = (self.h_t() / self.len() as f64).sqrt();
        b.iter_mut().for_each(|z| *z *= scale);
        b
    }

    /// Fraction of the power in modes with `|Omega| > delta_omega / 2`.
    pub fn spectral_leakage(&self, delta_omega: f64) -> f64 {
        let b = self.mode_amplitudes();
        let total: Vec<f64> = b.iter().map(|z| z.norm_sqr()).collect();
        let outside: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(m, z)| if self.mode_frequency(m).abs() > 0.5 * delta_omega { z.norm_sqr() } else { 0.0 })
            .collect();
        let total = pairwise_sum(&total);
        if total == 0.0 {
            0.0
        } else {
            pairwise_sum(&outside) / total
        }
    }

    /// Half width at which the intensity falls to `1/e` of its peak, from
    /// quadratic interpolation of `ln |a|^2`.
    pub fn one_over_e_width(&self) -> Result<f64> {
        let n = self.len();
        let intensity: Vec<f64> = self.a.iter().map(|z| z.norm_sqr()).collect();
        let peak = (0..n)
            .max_by(|&i, &j| intensity[i].total_cmp(&intensity[j]))
            .filter(|&i| intensity[i] > 0.0)
            .ok_or_else(|| Error::Domain("the envelope is identically zero".into()))?;
        let log = |j: usize| intensity[j % n].ln();
        let ht = self.h_t();

        // parabola through the peak and its neighbours fixes the peak level
        let (l, c, r) = (log(peak + n - 1), log(peak), log(peak + 1));
        let curvature = l - 2.0 * c + r;
        let level = if curvature < 0.0 { c - (r - l).powi(2) / (8.0 * curvature) } else { c } - 1.0;

        let crossing = |dir: isize| -> Result<f64> {
            let mut j = peak as isize;
            for _ in 0..n / 2 {
                let next = j + dir;
                if log(next.rem_euclid(n as isize) as usize) < level {
                    // samples j - dir, j, next bracket the crossing
                    let pts = [j - dir, j, next];
                    let ys: Vec<f64> = pts.iter().map(|&p| log(p.rem_euclid(n as isize) as usize)).collect();
                    let ts: Vec<f64> = pts.iter().map(|&p| (p - peak as isize) as f64 * ht).collect();
                    return solve_quadratic_crossing(&ts, &ys, level);
                }
                j = next;
            }
            Err(Error::Domain("the envelope never falls to 1/e of its peak inside the window".into()))
        };
        let right = crossing(1)?;
        let left = crossing(-1)?;
        Ok(0.5 * (right - left))
    }
}

/// Point between `t[1]` and `t[2]` where the parabola through the three
/// points takes the value `level`.
fn solve_quadratic_crossing(t: &[f64], y: &[f64], level: f64) -> Result<f64> {
    // Newton divided differences
    let d01 = (y[1] - y[0]) / (t[1] - t[0]);
    let d12 = (y[2] - y[1]) / (t[2] - t[1]);
    let c2 = (d12 - d01) / (t[2] - t[0]);
    let c1 = d01 - c2 * (t[0] + t[1]);
    let c0 = y[0] - t[0] * (d01 - c2 * t[1]);
    let (lo, hi) = if t[1] < t[2] { (t[1], t[2]) } else { (t[2], t[1]) };
    let in_range = |s: f64| s >= lo - 1e-12 * hi.abs() && s <= hi + 1e-12 * hi.abs();
    if c2.abs() < 1e-300 {
        let s = (level - c0) / c1;
        return if in_range(s) { Ok(s) } else { Err(Error::Domain("no crossing".into())) };
    }
    let disc = c1 * c1 - 4.0 * c2 * (c0 - level);
    if disc < 0.0 {
        return Err(Error::Domain("interpolated intensity never reaches 1/e".into()));
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    [q / c2, (c0 - level) / q]
        .into_iter()
        .find(|s| in_range(*s))
        .ok_or_else(|| Error::Domain("no crossing between the bracketing samples".into()))
}

/// Input pulse shapes, all centred at `tau = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PulseShape {
    /// `amplitude sech(tau / width)`.
    Sech { amplitude: f64, width: f64 },
    /// `amplitude exp(-tau^2 / (2 width^2))`, so `width` is the 1/e
    /// intensity half width.
    Gaussian { amplitude: f64, width: f64 },
    Zero,
}

impl PulseShape {
    pub fn evaluate(&self, tau: f64) -> Complex64 {
        match *self {
            Self::Sech { amplitude, width } => Complex64::new(amplitude / (tau / width).cosh(), 0.0),
            Self::Gaussian { amplitude, width } => {
                Complex64::new(amplitude * (-0.5 * (tau / width).powi(2)).exp(), 0.0)
            }
            Self::Zero => Complex64::new(0.0, 0.0),
        }
    }

    pub fn sample(&self, n: usize, window: f64) -> Result<EnvelopeGrid> {
        EnvelopeGrid::from_fn(n, window, |t| self.evaluate(t))
    }

    pub fn peak_power(&self) -> f64 {
        match *self {
            Self::Sech { amplitude, .. } | Self::Gaussian { amplitude, .. } => amplitude * amplitude,
            Self::Zero => 0.0,
        }
    }

    /// Detuning beyond which the spectrum holds less than about `1e-6` of
    /// the power.
    pub fn bandwidth(&self) -> f64 {
        match *self {
            // |S(Omega)|^2 ~ exp(-pi Omega width)
            Self::Sech { width, .. } => 2.0 * 14.0 / (PI * width),
            // |S(Omega)|^2 ~ exp(-Omega^2 width^2)
            Self::Gaussian { width, .. } => 2.0 * 14f64.sqrt() / width,
            Self::Zero => 0.0,
        }
    }
}

/// Peak amplitude of the fundamental soliton, `a0^2 = |k2| / (chi tau0^2)`.
pub fn soliton_amplitude(k2: f64, chi: f64, tau0: f64) -> Result<f64> {
    if !(k2 < 0.0 && chi > 0.0) && !(k2 > 0.0 && chi < 0.0) {
        return Err(Error::Domain(
            "a bright soliton needs anomalous dispersion with a focusing nonlinearity".into(),
        ));
    }
    Ok((k2.abs() / (chi.abs() * tau0 * tau0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = EnvelopeGrid::zeros(8, 4.0).unwrap();
        assert_eq!(g.h_t(), 0.5);
        assert_eq!(g.tau(0), -2.0);
        assert_eq!(g.tau(4), 0.0);
        assert!(EnvelopeGrid::zeros(12, 1.0).is_err());
        assert!(EnvelopeGrid::zeros(8, 0.0).is_err());
    }

    #[test]
    fn gaussian_width_is_recovered_exactly() {
        for width in [0.7, 1.0, 2.3] {
            let g = PulseShape::Gaussian { amplitude: 2.0, width }.sample(256, 40.0).unwrap();
            let w = g.one_over_e_width().unwrap();
            assert!((w - width).abs() < 1e-10 * width, "{w} vs {width}");
        }
        // off-grid centre and chirp do not matter for |a|^2
        let g = EnvelopeGrid::from_fn(512, 40.0, |t| {
            let s = t - 0.123;
            (Complex64::new(-0.5 * s * s / 1.69, 0.8 * s * s)).exp()
        })
        .unwrap();
        assert!((g.one_over_e_width().unwrap() - 1.3).abs() < 1e-10);
    }

    #[test]
    fn white_noise_mode_variance_is_per_sample_variance_times_h_t() {
        use crate::stochastic::{NoiseParameters, NoiseProcess};
        let n = 64;
        let window = 8.0;
        let mut ensemble = Vec::new();
        for t in 0..3000 {
            let mut p = NoiseProcess::new(NoiseParameters { seed: 4, nbar: 0.0, v0: 0.5 }, t);
            let mut g = EnvelopeGrid::zeros(n, window).unwrap();
            g.a = p.complex_normals(n, 0.3 / g.h_t());
            ensemble.push(g.mode_amplitudes());
        }
        let m = crate::stochastic::reduce_samples(&ensemble).unwrap();
        for j in 0..n {
            assert!((m.symmetric_variance[j] - 0.3).abs() < 5.0 * m.variance_stderr[j]);
        }
    }

    #[test]
    fn mode_frequency_sign_follows_the_envelope_convention() {
        // a = exp(-i Omega0 tau) must land in the bin with mode_frequency == Omega0
        let n = 64;
        let window = 10.0;
        let omega0 = 2.0 * PI * 3.0 / window;
        let g = EnvelopeGrid::from_fn(n, window, |t| Complex64::new(0.0, -omega0 * t).exp()).unwrap();
        let b = g.mode_amplitudes();
        let m = (0..n).max_by(|&i, &j| b[i].norm().total_cmp(&b[j].norm())).unwrap();
        assert!((g.mode_frequency(m) - omega0).abs() < 1e-12);
        assert!(g.spectral_leakage(2.0 * omega0 + 1e-9) < 1e-20);
        assert!((g.spectral_leakage(omega0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_of_a_sech_pulse() {
        let g = PulseShape::Sech { amplitude: 1.5, width: 0.8 }.sample(1024, 60.0).unwrap();
        // int sech^2 = 2
        assert!((g.energy() - 1.5 * 1.5 * 2.0 * 0.8).abs() < 1e-10);
    }

    #[test]
    fn soliton_amplitude_requires_anomalous_dispersion() {
        assert!((soliton_amplitude(-4.0, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(soliton_amplitude(4.0, 1.0, 2.0).is_err());
    }
}
