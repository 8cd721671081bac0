//! Narrow-band expansion of the wavenumber around a carrier frequency.

use num_complex::Complex64;

use super::{noise_coupling, wavenumber, Dielectric};
use crate::error::{Error, Result};
use crate::numerics::central_stencil;

/// Largest relative error estimate of a Richardson-extrapolated coefficient.
pub const RICHARDSON_TOLERANCE: f64 = 1e-6;

/// Levels of the Richardson tableau; each level divides the step by
/// `STEP_RATIO`.
const RICHARDSON_LEVELS: usize = 8;
const STEP_RATIO: f64 = std::f64::consts::SQRT_2;
/// The coarsest stencil reaches at most this fraction of the distance to
/// the nearest singularity, and never beyond `omega0 / 2`. For
/// `sqrt(eps_i / eps)` zero frequency counts as a singularity, since
/// `eps_i` vanishes there.
const REACH_FRACTION: f64 = 0.35;
const MAX_REACH: f64 = 0.5;

/// Taylor coefficients of `k(omega0 + Omega)` and `sqrt(eps_i / eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionExpansion {
    /// Carrier frequency (rad/s).
    pub omega0: f64,
    /// Width of the frequency subinterval around the carrier (rad/s).
    pub delta_omega: f64,
    /// `k[m]` is the m-th derivative of the wavenumber at the carrier (s^m/m).
    pub k: Vec<Complex64>,
    /// `p[m]` is the m-th derivative of `sqrt(eps_i / eps)` (s^m).
    pub p: Vec<Complex64>,
    /// Real carrier wavenumber removed with the carrier phase (1/m).
    pub k_phi: f64,
    /// `1 / Re k[1]`, absent when `Re k[1] == 0`.
    pub group_velocity: Option<f64>,
}

impl DispersionExpansion {
    /// Builds an expansion from known coefficients; `k_phi` and the group
    /// velocity follow from `k`.
    pub fn from_coefficients(
        omega0: f64,
        delta_omega: f64,
        k: Vec<Complex64>,
        p: Vec<Complex64>,
    ) -> Result<Self> {
        if k.len() < 3 {
            return Err(Error::Domain("an expansion needs at least k[0], k[1] and k[2]".into()));
        }
        if !(omega0 > 0.0 && delta_omega > 0.0) {
            return Err(Error::Domain("carrier and subinterval width must be positive".into()));
        }
        let k_phi = k[0].re;
        let group_velocity = (k[1].re != 0.0).then(|| 1.0 / k[1].re);
        Ok(Self { omega0, delta_omega, k, p, k_phi, group_velocity })
    }

    pub fn order(&self) -> usize {
        self.k.len() - 1
    }

    /// Field attenuation rate at the carrier, `Im k[0]`.
    pub fn k0i(&self) -> f64 {
        self.k[0].im
    }

    pub fn k1(&self) -> Complex64 {
        self.k[1]
    }

    pub fn k2(&self) -> Complex64 {
        self.k[2]
    }

    /// Group-velocity dispersion length `t0^2 / |Re k2|` for a pulse of width `t0`.
    pub fn dispersion_length(&self, t0: f64) -> f64 {
        t0 * t0 / self.k[2].re.abs()
    }

    /// Evaluates the truncated series `sum_{m <= order} k_m Omega^m / m!`.
    pub fn wavenumber_series(&self, omega_offset: f64, order: usize) -> Complex64 {
        let mut term = 1.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for (m, km) in self.k.iter().enumerate().take(order + 1) {
            if m > 0 {
                term *= omega_offset / m as f64;
            }
            sum += km * term;
        }
        sum
    }
}

/// Expands `k(omega)` and `sqrt(eps_i/eps)(omega)` to order `order` around
/// `omega0` with Richardson-extrapolated central differences.
pub fn taylor_expand<D: Dielectric + ?Sized>(
    model: &D,
    omega0: f64,
    delta_omega: f64,
    order: usize,
) -> Result<DispersionExpansion> {
    if order < 2 {
        return Err(Error::Domain(format!("expansion order must be at least 2, got {order}")));
    }
    if !(delta_omega > 0.0 && delta_omega.is_finite()) {
        return Err(Error::Domain("subinterval width must be positive".into()));
    }
    if omega0 - 0.5 * delta_omega <= 0.0 {
        return Err(Error::Domain(format!(
            "subinterval [{:e}, {:e}] reaches non-positive frequencies",
            omega0 - 0.5 * delta_omega,
            omega0 + 0.5 * delta_omega
        )));
    }
    let (lo, hi) = (omega0 - 0.5 * delta_omega, omega0 + 0.5 * delta_omega);
    if let Some(w) = model.resonance_frequencies().into_iter().find(|w| (lo..=hi).contains(w)) {
        return Err(Error::Precondition {
            rule: "narrow-band expansion requires an analytic permittivity on the subinterval",
            detail: format!("resonance at {w:e} rad/s lies inside [{lo:e}, {hi:e}]"),
        });
    }
    let distance = singularity_distance(model, omega0);
    let reach_k = (REACH_FRACTION * distance).min(MAX_REACH * omega0);
    let reach_p = REACH_FRACTION * distance.min(omega0);

    let k = expand_function(|w| wavenumber(model, w), "k", omega0, reach_k, order)?;
    let p = expand_function(|w| noise_coupling(model, w), "p", omega0, reach_p, order)?;
    DispersionExpansion::from_coefficients(omega0, delta_omega, k, p)
}

/// Distance from `omega0` to the closest pole or zero of a Lorentz-type
/// permittivity, estimated line by line.
fn singularity_distance<D: Dielectric + ?Sized>(model: &D, omega0: f64) -> f64 {
    model
        .singular_points()
        .into_iter()
        .map(|(w, width)| (omega0 - w).hypot(width))
        .fold(f64::INFINITY, f64::min)
}

fn expand_function<F>(
    f: F,
    name: &str,
    omega0: f64,
    reach: f64,
    order: usize,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut coefficients = Vec::with_capacity(order + 1);
    coefficients.push(f(omega0)?);
    for m in 1..=order {
        let coarsest = reach / m.div_ceil(2) as f64;
        coefficients.push(richardson_derivative(&f, omega0, coarsest, m).map_err(|e| match e {
            Error::Convergence { change, .. } => Error::Convergence {
                coefficient: format!("{name}[{m}]"),
                change,
            },
            other => other,
        })?);
    }
    Ok(coefficients)
}

/// Richardson tableau over shrinking steps; the entry with the smallest
/// error estimate wins, so the extrapolation stops before rounding noise
/// from the finer steps takes over.
fn richardson_derivative<F>(f: &F, x0: f64, coarsest: f64, m: usize) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let (offsets, weights) = central_stencil(m, 0);
    let weight_sum: f64 = weights.iter().map(|w| w.abs()).sum();

    let mut tableau: Vec<Vec<Complex64>> = Vec::with_capacity(RICHARDSON_LEVELS);
    let mut f_max: f64 = 0.0;
    let mut best: Option<(f64, Complex64, f64)> = None;
    let mut h = coarsest;
    for level in 0..RICHARDSON_LEVELS {
        let mut acc = Complex64::new(0.0, 0.0);
        for (o, w) in offsets.iter().zip(&weights) {
            if *w == 0.0 {
                continue;
            }
            let value = f(x0 + *o as f64 * h)?;
            f_max = f_max.max(value.norm());
            acc += value * *w;
        }
        // rounding noise of one stencil evaluation at this step, with
        // headroom for the amplification of the tableau
        let floor = 32.0 * f64::EPSILON * f_max * weight_sum / h.powi(m as i32);
        let mut row = vec![acc / h.powi(m as i32)];
        for j in 1..=level {
            let factor = STEP_RATIO.powi(2 * j as i32) - 1.0;
            let refined = row[j - 1] + (row[j - 1] - tableau[level - 1][j - 1]) / factor;
            let error = (refined - row[j - 1]).norm().max((refined - tableau[level - 1][j - 1]).norm());
            if best.is_none_or(|(e, _, _)| error < e) {
                best = Some((error, refined, floor));
            }
            row.push(refined);
        }
        tableau.push(row);
        h /= STEP_RATIO;
    }

    let (error, value, floor) = best.expect("the tableau has at least two levels");
    if value.norm() <= floor && error <= floor {
        // indistinguishable from zero at working precision
        return Ok(Complex64::new(0.0, 0.0));
    }
    if error <= RICHARDSON_TOLERANCE * value.norm() {
        return Ok(value);
    }
    let relative = if value.norm() > 0.0 { error / value.norm() } else { f64::INFINITY };
    Err(Error::Convergence { coefficient: String::new(), change: relative })
}
