//! Symmetrized split-step solver for
//!
//! ```text
//! da/dx = -k0i a - k1i (i d/dtau) a + (i/2) k2 (i d/dtau)^2 a + i chi |a|^2 a + noise
//! ```
//!
//! in the frame moving with `Re k1`. Writing the envelope as a sum of
//! `exp(-i Omega tau)` turns the linear part into multiplication by
//! `L(Omega) = -k0i - k1i Omega + (i/2) k2 Omega^2`, applied exactly in the
//! spectral domain.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::envelope::EnvelopeGrid;
use super::kerr::KerrSpec;
use crate::error::{Error, Result};
use crate::medium::DispersionExpansion;
use crate::numerics::{fft_angular_frequency, pairwise_sum};
use crate::stochastic::NoiseProcess;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest nonlinear phase per step at the peak before a step is rejected.
pub const MAX_NONLINEAR_PHASE: f64 = 0.05;

/// Linear symbol `L(Omega)` of the truncated dispersion relation in the
/// retarded frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSymbol {
    /// `i (k0 - k_phi)`; for `k_phi = Re k0` this is `-k0i`.
    pub constant: Complex64,
    /// `i (k1 - Re k1)`.
    pub slope: Complex64,
    /// `(i/2) k2`.
    pub curvature: Complex64,
}

impl LinearSymbol {
    pub fn from_expansion(e: &DispersionExpansion) -> Self {
        Self {
            constant: I * (e.k[0] - e.k_phi),
            slope: I * (e.k[1] - e.k[1].re),
            curvature: 0.5 * I * e.k[2],
        }
    }

    pub fn at(&self, omega: f64) -> Complex64 {
        self.constant + self.slope * omega + self.curvature * omega * omega
    }

    /// Field attenuation rate at zero detuning.
    pub fn k0i(&self) -> f64 {
        -self.constant.re
    }
}

/// Default step limit `min(0.01 h_t^2 / |k2|, 0.05 / (chi P_peak), 0.1 / k0i)`;
/// terms whose denominator vanishes are ignored.
pub fn default_step_budget(expansion: &DispersionExpansion, chi: f64, h_t: f64, peak_power: f64) -> f64 {
    let mut budget = f64::INFINITY;
    let k2 = expansion.k2().norm();
    if k2 > 0.0 {
        budget = budget.min(0.01 * h_t * h_t / k2);
    }
    let nl = chi.abs() * peak_power;
    if nl > 0.0 {
        budget = budget.min(MAX_NONLINEAR_PHASE / nl);
    }
    let k0i = expansion.k0i();
    if k0i > 0.0 {
        budget = budget.min(0.1 / k0i);
    }
    budget
}

/// Precomputed propagator for one step size on one grid.
#[derive(Clone)]
pub struct SplitStepper {
    n: usize,
    h_t: f64,
    h_x: f64,
    chi: f64,
    half_linear: Vec<Complex64>,
    linear_is_identity: bool,
    noise_scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SplitStepper {
    pub fn new(symbol: LinearSymbol, chi: f64, n: usize, window: f64, h_x: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::Grid(format!("sample count must be a power of two, got {n}")));
        }
        if !(h_x > 0.0 && h_x.is_finite()) {
            return Err(Error::Grid(format!("step size must be positive, got {h_x}")));
        }
        let h_t = window / n as f64;
        let half_linear: Vec<Complex64> = (0..n)
            .map(|m| (0.5 * h_x * symbol.at(-fft_angular_frequency(m, n, h_t))).exp())
            .collect();
        let linear_is_identity = half_linear.iter().all(|z| *z == Complex64::new(1.0, 0.0));
        // exact Ornstein-Uhlenbeck increment over one step for the k0i decay
        let noise_scale = (h_x * -(-2.0 * symbol.k0i() * h_x).exp_m1()).sqrt();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Ok(Self { n, h_t, h_x, chi, half_linear, linear_is_identity, noise_scale, forward, inverse, scratch })
    }

    pub fn from_expansion(expansion: &DispersionExpansion, kerr: &KerrSpec, n: usize, window: f64, h_x: f64) -> Result<Self> {
        Self::new(LinearSymbol::from_expansion(expansion), kerr.chi, n, window, h_x)
    }

    pub fn h_x(&self) -> f64 {
        self.h_x
    }

    fn half_linear_step(&mut self, a: &mut [Complex64]) {
        if self.linear_is_identity {
            return;
        }
        self.forward.process_with_scratch(a, &mut self.scratch);
        let norm = 1.0 / self.n as f64;
        for (z, l) in a.iter_mut().zip(&self.half_linear) {
            *z *= l * norm;
        }
        self.inverse.process_with_scratch(a, &mut self.scratch);
    }

    /// Advances `state` by one step. With `noise` the force increment is
    /// added after the second linear half step.
    pub fn step(&mut self, state: &mut EnvelopeGrid, noise: Option<&mut NoiseProcess>) -> Result<()> {
        if state.len() != self.n || state.h_t() != self.h_t {
            return Err(Error::Grid("state is not on the stepper's grid".into()));
        }
        self.half_linear_step(&mut state.a);
        if self.chi != 0.0 {
            let phase = self.chi * self.h_x;
            let peak = state.peak_power() * phase.abs();
            // the default budget lands exactly on the limit
            if peak > MAX_NONLINEAR_PHASE * (1.0 + 1e-9) {
                return Err(Error::StepRejected {
                    x: state.x,
                    detail: format!(
                        "nonlinear phase {peak:.3} rad per step exceeds {MAX_NONLINEAR_PHASE}; use more steps"
                    ),
                });
            }
            for z in state.a.iter_mut() {
                *z *= Complex64::from_polar(1.0, phase * z.norm_sqr());
            }
        }
        self.half_linear_step(&mut state.a);
        if let Some(process) = noise {
            if self.noise_scale > 0.0 {
                let force = process.sample_force(self.n, self.h_x, self.h_t)?;
                for (z, f) in state.a.iter_mut().zip(force) {
                    *z += self.noise_scale * f;
                }
            }
        }
        state.x += self.h_x;
        Ok(())
    }
}

/// One step from `state` with a freshly built stepper.
pub fn split_step(
    state: &EnvelopeGrid,
    kerr: &KerrSpec,
    expansion: &DispersionExpansion,
    noise: Option<&mut NoiseProcess>,
    h_x: f64,
) -> Result<EnvelopeGrid> {
    let mut stepper = SplitStepper::from_expansion(expansion, kerr, state.len(), state.window, h_x)?;
    let mut next = state.clone();
    stepper.step(&mut next, noise)?;
    Ok(next)
}

/// `int [(Re k2 / 2) |a_tau|^2 + (chi / 2) |a|^4] dtau`, conserved by the
/// lossless, noiseless equation.
pub fn hamiltonian(grid: &EnvelopeGrid, k2: f64, chi: f64) -> f64 {
    let n = grid.len();
    let h_t = grid.h_t();
    let mut spectrum = grid.a.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
    let kinetic: Vec<f64> = spectrum
        .iter()
        .enumerate()
        .map(|(m, z)| fft_angular_frequency(m, n, h_t).powi(2) * z.norm_sqr())
        .collect();
    let quartic: Vec<f64> = grid.a.iter().map(|z| z.norm_sqr().powi(2)).collect();
    0.5 * k2 * h_t / n as f64 * pairwise_sum(&kinetic) + 0.5 * chi * h_t * pairwise_sum(&quartic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlse::envelope::{soliton_amplitude, PulseShape};
    use crate::stochastic::NoiseParameters;
    use proptest::prelude::*;

    fn expansion(k0i: f64, k1i: f64, k2: Complex64) -> DispersionExpansion {
        DispersionExpansion::from_coefficients(
            1.0e15,
            1.0e14,
            vec![Complex64::new(5.0e6, k0i), Complex64::new(4.9e-9, k1i), k2],
            vec![Complex64::new(0.0, 0.0); 3],
        )
        .unwrap()
    }

    fn run(stepper: &mut SplitStepper, g: &mut EnvelopeGrid, steps: usize) {
        for _ in 0..steps {
            stepper.step(g, None).unwrap();
        }
    }

    #[test]
    fn pure_loss_decays_every_mode_exponentially() {
        let e = expansion(0.3, 0.0, Complex64::new(0.0, 0.0));
        let g0 = PulseShape::Gaussian { amplitude: 1.0, width: 2.0 }.sample(128, 40.0).unwrap();
        let mut g = g0.clone();
        let mut s = SplitStepper::from_expansion(&e, &KerrSpec::linear(), 128, 40.0, 0.1).unwrap();
        run(&mut s, &mut g, 50);
        let factor = (-0.3 * g.x).exp();
        for (a, b) in g.a.iter().zip(&g0.a) {
            assert!((a - b * factor).norm() < 1e-14);
        }
        assert!((g.x - 5.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_broadens_as_predicted() {
        let k2 = 0.8;
        let e = expansion(0.0, 0.0, Complex64::new(k2, 0.0));
        let t0 = 1.0;
        let mut g = PulseShape::Gaussian { amplitude: 1.0, width: t0 }.sample(512, 80.0).unwrap();
        let ld = t0 * t0 / k2;
        let mut s = SplitStepper::from_expansion(&e, &KerrSpec::linear(), 512, 80.0, ld / 20.0).unwrap();
        for _ in 0..5 {
            run(&mut s, &mut g, 20);
            let expected = t0 * (1.0 + (k2 * g.x / (t0 * t0)).powi(2)).sqrt();
            let w = g.one_over_e_width().unwrap();
            assert!((w - expected).abs() < 1e-8 * expected, "{w} vs {expected}");
        }
    }

    #[test]
    fn fundamental_soliton_keeps_its_shape() {
        let (k2, chi, t0) = (-1.0, 1.0, 1.0);
        let e = expansion(0.0, 0.0, Complex64::new(k2, 0.0));
        let a0 = soliton_amplitude(k2, chi, t0).unwrap();
        let g0 = PulseShape::Sech { amplitude: a0, width: t0 }.sample(256, 32.0).unwrap();
        let h = default_step_budget(&e, chi, g0.h_t(), a0 * a0);
        let ld = t0 * t0 / k2.abs();
        let steps = (2.0 * ld / h).ceil() as usize;
        let mut s = SplitStepper::new(LinearSymbol::from_expansion(&e), chi, 256, 32.0, 2.0 * ld / steps as f64).unwrap();
        let mut g = g0.clone();
        let h0 = hamiltonian(&g, k2, chi);
        run(&mut s, &mut g, steps);
        let num: f64 = g.a.iter().zip(&g0.a).map(|(a, b)| (a.norm() - b.norm()).powi(2)).sum();
        let den: f64 = g0.a.iter().map(|b| b.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-4);
        assert!(((g.energy() - g0.energy()) / g0.energy()).abs() < 1e-10);
        assert!(((hamiltonian(&g, k2, chi) - h0) / h0).abs() < 1e-6);
    }

    #[test]
    fn self_phase_modulation_without_dispersion() {
        let e = expansion(0.0, 0.0, Complex64::new(0.0, 0.0));
        let chi = 2.0;
        let g0 = PulseShape::Gaussian { amplitude: 1.2, width: 1.0 }.sample(64, 10.0).unwrap();
        let mut g = g0.clone();
        let mut s = SplitStepper::from_expansion(&e, &KerrSpec::local(chi), 64, 10.0, 0.01).unwrap();
        run(&mut s, &mut g, 300);
        for (a, b) in g.a.iter().zip(&g0.a) {
            let expected = Complex64::from_polar(1.0, chi * b.norm_sqr() * g.x);
            assert!((a / b - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn large_nonlinear_phase_is_rejected() {
        let e = expansion(0.0, 0.0, Complex64::new(-1.0, 0.0));
        let g = PulseShape::Sech { amplitude: 3.0, width: 1.0 }.sample(64, 20.0).unwrap();
        let err = split_step(&g, &KerrSpec::local(1.0), &e, None, 0.1).unwrap_err();
        assert!(matches!(err, Error::StepRejected { .. }));
    }

    #[test]
    fn absorption_slope_attenuates_one_side_of_the_spectrum() {
        // L(Omega) = -k1i Omega: positive detunings decay, negative ones grow
        let e = expansion(0.0, 0.05, Complex64::new(0.0, 0.0));
        let n = 64;
        let window = 2.0 * std::f64::consts::PI;
        let tone = |w: f64| EnvelopeGrid::from_fn(n, window, |t| Complex64::new(0.0, -w * t).exp()).unwrap();
        for w in [2.0, -3.0] {
            let mut g = tone(w);
            split_step(&g.clone(), &KerrSpec::linear(), &e, None, 0.5).map(|next| g = next).unwrap();
            let expected = (-0.05 * w * 0.5f64).exp();
            assert!((g.a[5].norm() - expected).abs() < 1e-12, "{w}");
        }
    }

    #[test]
    fn noise_increment_has_the_ou_variance() {
        let k0i = 0.2;
        let e = expansion(k0i, 0.0, Complex64::new(0.0, 0.0));
        let p = NoiseParameters { seed: 8, nbar: 0.0, v0: 0.5 };
        let (n, window, h) = (16, 4.0, 0.5);
        let mut s = SplitStepper::from_expansion(&e, &KerrSpec::linear(), n, window, h).unwrap();
        let ensemble: Vec<Vec<Complex64>> = (0..20_000)
            .map(|t| {
                let mut g = EnvelopeGrid::zeros(n, window).unwrap();
                s.step(&mut g, Some(&mut NoiseProcess::new(p, t))).unwrap();
                g.a
            })
            .collect();
        let m = crate::stochastic::reduce_samples(&ensemble).unwrap();
        let expected = p.symmetric_level() * (1.0 - (-2.0 * k0i * h).exp()) / (window / n as f64);
        for j in 0..n {
            assert!((m.symmetric_variance[j] - expected).abs() < 5.0 * m.variance_stderr[j]);
        }
    }

    proptest! {
        #[test]
        fn global_phase_commutes_with_the_noiseless_propagator(theta in -3.0f64..3.0, chi in -1.0f64..1.0) {
            let e = expansion(0.1, 0.02, Complex64::new(-0.5, 0.01));
            let g = PulseShape::Sech { amplitude: 0.8, width: 1.3 }.sample(64, 20.0).unwrap();
            let rot = Complex64::from_polar(1.0, theta);
            let mut rotated = g.clone();
            rotated.a.iter_mut().for_each(|z| *z *= rot);
            let kerr = KerrSpec::local(chi);
            let a = split_step(&g, &kerr, &e, None, 0.05).unwrap();
            let b = split_step(&rotated, &kerr, &e, None, 0.05).unwrap();
            for (x, y) in a.a.iter().zip(&b.a) {
                prop_assert!((x * rot - y).norm() < 1e-13);
            }
        }
    }
}
