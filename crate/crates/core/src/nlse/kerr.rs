//! Local Kerr response.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{permittivity, wavenumber, Dielectric, MediumModel};

/// Largest `eps_i / eps_r` at the carrier for which the local Kerr
/// reduction is accepted.
pub const WEAK_ABSORPTION_LIMIT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrSpec {
    /// Intrinsic quartic constant, when `chi` was derived from it.
    pub lambda: Option<f64>,
    /// Effective coefficient in `da/dx = i chi |a|^2 a`.
    pub chi: f64,
    /// Nonlocal kernels are only available as diagnostics; propagation is
    /// always local.
    pub nonlocal: bool,
}

impl KerrSpec {
    pub fn local(chi: f64) -> Self {
        Self { lambda: None, chi, nonlocal: false }
    }

    pub fn linear() -> Self {
        Self::local(0.0)
    }
}

/// Checks `eps_i / eps_r < 1e-2` at `omega0`.
pub fn weak_absorption_gate<D: Dielectric + ?Sized>(medium: &D, omega0: f64) -> Result<()> {
    let eps = permittivity(medium, omega0)?;
    let ratio = eps.im / eps.re;
    if !(eps.re > 0.0 && ratio < WEAK_ABSORPTION_LIMIT) {
        return Err(Error::Precondition {
            rule: "the local Kerr coefficient assumes weak absorption, eps_i/eps_r < 1e-2",
            detail: format!("eps_i/eps_r = {ratio:.3e} at omega0 = {omega0:e} rad/s"),
        });
    }
    Ok(())
}

/// `chi = (pi alpha^2 / k_r) lambda ((eps0 / rho) omega0 |eps - 1|)^4`.
///
/// The result is real by construction; the complex return type leaves room
/// for media where the reduction keeps an absorptive part.
pub fn chi_eff(medium: &MediumModel, lambda: f64, omega0: f64) -> Result<Complex64> {
    weak_absorption_gate(medium, omega0)?;
    let constants = medium.constants();
    let eps = permittivity(medium, omega0)?;
    let k = wavenumber(medium, omega0)?;
    let bracket = constants.eps0 / medium.rho() * omega0 * (eps - 1.0).norm();
    let alpha = constants.alpha();
    Ok(Complex64::new(PI * alpha * alpha / k.re * lambda * bracket.powi(4), 0.0))
}

/// `chi |a|^2 a` elementwise.
pub fn nonlinear_term(a: &[Complex64], chi: f64) -> Vec<Complex64> {
    a.iter().map(|z| chi * z.norm_sqr() * z).collect()
}
