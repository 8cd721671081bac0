//! Kramers-Kronig consistency check of a permittivity model.
//!
//! The real part is rebuilt from the imaginary part with the discrete
//! principal-value transform
//!
//! ```text
//! eps_r(w) - eps_bg = 1/pi P int_0^inf eps_i(w') / (w' - w) dw'
//!                   + 1/pi   int_0^inf eps_i(w') / (w' + w) dw'
//! ```
//!
//! on a uniform lattice. The singular part uses the alternating-point
//! (Maclaurin) rule, the regular part a midpoint sum; both are discrete
//! convolutions and are evaluated with FFTs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::Dielectric;
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, is_uniform};

/// Smallest grid accepted by [`kk_residual`].
pub const MIN_KK_POINTS: usize = 4096;
/// Largest tolerated estimate of the truncated high-frequency tail.
pub const MAX_TAIL_ESTIMATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct KkReport {
    /// `max |eps_r - eps_bg - KK[eps_i]| / max |eps_r - eps_bg|` over the grid.
    pub residual: f64,
    /// Estimated relative contribution of `eps_i` above the grid.
    pub tail_estimate: f64,
    /// `KK[eps_i]` at the grid points.
    pub reconstructed: Vec<f64>,
}

/// Relative Kramers-Kronig residual of `model` on a uniform frequency grid.
pub fn kk_residual<D: Dielectric + ?Sized>(model: &D, grid: &[f64]) -> Result<f64> {
    Ok(kk_check(model, grid)?.residual)
}

/// Reconstructed `eps_r - eps_bg` at the grid points, without the coverage
/// checks of [`kk_residual`].
pub fn kk_reconstruct<D: Dielectric + ?Sized>(model: &D, grid: &[f64]) -> Result<Vec<f64>> {
    validate_uniform(grid)?;
    let lattice = Lattice::covering(grid);
    let eps_i = lattice
        .points()
        .map(|w| model.permittivity(w).map(|e| e.im))
        .collect::<Result<Vec<_>>>()?;
    let full = hilbert_on_lattice(&eps_i, lattice.start / lattice.step);
    Ok(full[lattice.first_grid_index..lattice.first_grid_index + grid.len()].to_vec())
}

pub fn kk_check<D: Dielectric + ?Sized>(model: &D, grid: &[f64]) -> Result<KkReport> {
    if grid.len() < MIN_KK_POINTS {
        return Err(Error::Grid(format!(
            "Kramers-Kronig check needs at least {MIN_KK_POINTS} points, got {}",
            grid.len()
        )));
    }
    if !model.kk_checkable() {
        return Err(Error::Precondition {
            rule: "Kramers-Kronig check skipped",
            detail: "the model has an undamped absorption line".into(),
        });
    }
    validate_uniform(grid)?;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    for w in model.resonance_frequencies() {
        if lo > w / 10.0 * (1.0 + 1e-9) || hi < 10.0 * w * (1.0 - 1e-9) {
            return Err(Error::Grid(format!(
                "grid [{lo:e}, {hi:e}] must span [w_r/10, 10 w_r] for the line at {w:e} rad/s"
            )));
        }
    }

    let reconstructed = kk_reconstruct(model, grid)?;
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for (w, kk) in grid.iter().zip(&reconstructed) {
        let excess = model.permittivity(*w)?.re - model.eps_background();
        scale = scale.max(excess.abs());
        worst = worst.max((excess - kk).abs());
    }
    let residual = if worst == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        worst / scale
    };

    let step = (hi - lo) / (grid.len() - 1) as f64;
    let tail = tail_contribution(model, hi, step)?;
    let tail_estimate = if tail == 0.0 { 0.0 } else { tail / scale };
    if tail_estimate > MAX_TAIL_ESTIMATE {
        return Err(Error::Grid(format!(
            "absorption above {hi:e} rad/s contributes ~{tail_estimate:.2e} of the dispersion; widen the grid"
        )));
    }
    Ok(KkReport { residual, tail_estimate, reconstructed })
}

fn validate_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] <= 0.0 {
        return Err(Error::Grid("need at least two positive frequencies".into()));
    }
    if !is_uniform(grid, 1e-6) {
        return Err(Error::Grid("Kramers-Kronig transform needs a uniform frequency grid".into()));
    }
    Ok(())
}

/// Uniform lattice `start + j step` from just above zero to the top of the grid.
struct Lattice {
    start: f64,
    step: f64,
    len: usize,
    first_grid_index: usize,
}

impl Lattice {
    fn covering(grid: &[f64]) -> Self {
        let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
        let below = (grid[0] / step).floor() as usize;
        let mut start = grid[0] - below as f64 * step;
        let mut first_grid_index = below;
        if start < 1e-9 * step {
            // omega = 0 itself is excluded; eps_i vanishes there
            start += step;
            first_grid_index -= 1;
        }
        Self { start, step, len: first_grid_index + grid.len(), first_grid_index }
    }

    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |j| self.start + j as f64 * self.step)
    }
}

/// KK transform of samples `f_j = eps_i(step (offset + j))`.
fn hilbert_on_lattice(f: &[f64], offset: f64) -> Vec<f64> {
    let n = f.len();
    let size = (3 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let convolve = |a: Vec<Complex64>, b: Vec<Complex64>| -> Vec<Complex64> {
        let (mut a, mut b) = (a, b);
        forward.process(&mut a);
        forward.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y / size as f64;
        }
        inverse.process(&mut a);
        a
    };

    // singular part: sum over j - i odd of 2 f_j / (j - i)
    let mut signal = vec![Complex64::new(0.0, 0.0); size];
    for (s, v) in signal.iter_mut().zip(f) {
        s.re = *v;
    }
    let mut kernel = vec![Complex64::new(0.0, 0.0); size];
    for m in 1..n {
        if m % 2 == 1 {
            // index (i - j) mod size holds 2 / (j - i)
            kernel[m].re = -2.0 / m as f64;
            kernel[size - m].re = 2.0 / m as f64;
        }
    }
    let singular = convolve(signal, kernel);

    // regular part: sum_j f_j / (2 offset + i + j)
    let mut reversed = vec![Complex64::new(0.0, 0.0); size];
    for (r, v) in reversed.iter_mut().zip(f.iter().rev()) {
        r.re = *v;
    }
    let mut hankel = vec![Complex64::new(0.0, 0.0); size];
    for (s, h) in hankel.iter_mut().enumerate().take(2 * n - 1) {
        h.re = 1.0 / (2.0 * offset + s as f64);
    }
    let regular = convolve(reversed, hankel);

    (0..n)
        .map(|i| (singular[i].re + regular[i + n - 1].re) / PI)
        .collect()
}

/// Rough size of the part of the transform carried by `eps_i` above `top`:
/// the far-field term at low frequency plus the logarithmic edge term.
fn tail_contribution<D: Dielectric + ?Sized>(model: &D, top: f64, step: f64) -> Result<f64> {
    // int_top^inf eps_i(w)/w dw = int_0^1 eps_i(top/u)/u du
    let (nodes, weights) = gauss_legendre(64);
    let mut far = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let u = 0.5 * (x + 1.0);
        far += 0.5 * w * model.permittivity(top / u)?.im / u;
    }
    let edge = model.permittivity(top)?.im * (top / step).ln();
    Ok((2.0 * far.abs() + edge.abs()) / PI)
}
