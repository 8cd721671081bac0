//! Nonlocal Kerr response kernel `G_H(x - x')` and its local limit.
//!
//! Propagation always uses the local limit; the kernel is available for
//! checking how good that replacement is.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{permittivity, wavenumber, Dielectric, DispersionExpansion, MediumModel};
use crate::numerics::composite_gauss;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Panels and nodes per panel of the `Omega` quadrature in full mode.
const FULL_PANELS: usize = 64;
const FULL_NODES_PER_PANEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// Numerical `Omega` integral of the complete kernel.
    Full,
    /// Lowest-order closed form, a `sin(a dx) / dx` profile.
    Leading,
}

/// `alpha^2 (eps0 / rho) i omega0 (eps* - 1)`, common to both modes.
fn prefactor(medium: &MediumModel, omega0: f64) -> Result<Complex64> {
    let c = medium.constants();
    let eps = permittivity(medium, omega0)?;
    let alpha = c.alpha();
    Ok(alpha * alpha * c.eps0 / medium.rho() * I * omega0 * (eps.conj() - 1.0))
}

pub fn kernel_gh(
    medium: &MediumModel,
    expansion: &DispersionExpansion,
    delta_x: f64,
    mode: KernelMode,
) -> Result<Complex64> {
    match mode {
        KernelMode::Leading => leading(medium, expansion, delta_x),
        KernelMode::Full => full(medium, expansion, delta_x),
    }
}

fn leading(medium: &MediumModel, expansion: &DispersionExpansion, delta_x: f64) -> Result<Complex64> {
    let omega0 = expansion.omega0;
    let kr = wavenumber(medium, omega0)?.re;
    let k1r = expansion.k1().re;
    if k1r == 0.0 {
        return Err(Error::Domain("the kernel width is undefined for Re k1 = 0".into()));
    }
    let dw = expansion.delta_omega;
    let p = prefactor(medium, omega0)?;
    let u = delta_x;
    if u == 0.0 {
        return Ok(p * dw / kr);
    }
    Ok(p * 2.0 / (kr * u * k1r) * (dw * k1r * u / 2.0).sin())
}

fn full(medium: &MediumModel, expansion: &DispersionExpansion, delta_x: f64) -> Result<Complex64> {
    let c = medium.constants();
    let omega0 = expansion.omega0;
    let k0r = wavenumber(medium, omega0)?.re;
    let half = 0.5 * expansion.delta_omega;
    let (nodes, weights) = composite_gauss(-half, half, FULL_PANELS, FULL_NODES_PER_PANEL);
    let step = if delta_x >= 0.0 { 1.0 } else { 0.0 };
    let mut sum = Complex64::new(0.0, 0.0);
    for (omega_offset, w) in nodes.iter().zip(&weights) {
        let omega = omega0 + omega_offset;
        let eps = permittivity(medium, omega)?;
        let k = wavenumber(medium, omega)?;
        let ratio = if eps.im == 0.0 {
            // eps_i / (2 k_i |eps|) -> 1 / k_r without absorption
            Complex64::new(1.0 / k.re, 0.0)
        } else {
            Complex64::new(eps.im / (2.0 * k.im * eps.norm()), 0.0)
        };
        let amplitude = I * omega * (eps.conj() - 1.0) * ratio - 2.0 * c.c * eps.im / eps.sqrt() * step;
        let phase = (Complex64::new(-k.im * delta_x.abs(), (k.re - k0r) * delta_x)).exp();
        sum += w * amplitude * phase;
    }
    let alpha = c.alpha();
    Ok(alpha * alpha * c.eps0 / medium.rho() * sum)
}

/// `int G_H dx` in the leading approximation,
/// `alpha^2 (eps0 / rho) i omega0 (eps* - 1) 2 pi / (k_r k1r)`; the local
/// Kerr term is `lambda / 2` times this.
pub fn local_limit_coefficient(medium: &MediumModel, expansion: &DispersionExpansion) -> Result<Complex64> {
    let omega0 = expansion.omega0;
    let kr = wavenumber(medium, omega0)?.re;
    Ok(prefactor(medium, omega0)? * 2.0 * PI / (kr * expansion.k1().re))
}

/// Numerical `int G_H dx` of the leading-mode kernel over
/// `|dx| <= (M + 1/2) pi / a` with `a = dw k1r / 2`, where the truncated
/// `sin(a u)/u` integral is closest to its limit.
pub fn integrate_leading_kernel(
    medium: &MediumModel,
    expansion: &DispersionExpansion,
    half_periods: usize,
) -> Result<Complex64> {
    let a = 0.5 * expansion.delta_omega * expansion.k1().re;
    if !(a > 0.0) {
        return Err(Error::Domain("the kernel width is undefined for Re k1 <= 0".into()));
    }
    let reach = (half_periods as f64 + 0.5) * PI / a;
    let panels = 4 * (half_periods + 1);
    let (nodes, weights) = composite_gauss(-reach, reach, panels, 16);
    let mut sum = Complex64::new(0.0, 0.0);
    for (u, w) in nodes.iter().zip(&weights) {
        sum += w * leading(medium, expansion, *u)?;
    }
    Ok(sum)
}
