//! Linear optical response of the host dielectric.
//!
//! The medium is described by a complex permittivity `eps(omega)`; everything
//! else in the crate (wavenumber, Taylor coefficients, noise strength, the
//! Green function) is derived from it. Any response that satisfies the
//! Kramers-Kronig relations can be plugged in through the [`Dielectric`]
//! trait; [`MediumModel`] provides the usual sum of damped Lorentz
//! oscillators on top of a real background.

mod kk;
mod taylor;

pub use kk::{kk_check, kk_reconstruct, kk_residual, KkReport, MAX_TAIL_ESTIMATE, MIN_KK_POINTS};
pub use taylor::{taylor_expand, DispersionExpansion, RICHARDSON_TOLERANCE};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// SI constants plus the transverse normalization area of the 1D model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of light in vacuum (m/s).
    pub c: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Area perpendicular to the propagation axis (m^2).
    pub area: f64,
}

impl PhysicalConstants {
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;
    /// Effective area of a standard single-mode fibre, 80 um^2.
    pub const DEFAULT_AREA: f64 = 80e-12;

    pub fn with_area(area: f64) -> Result<Self> {
        let constants = Self { area, ..Self::default() };
        constants.validate()?;
        Ok(constants)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("c", self.c),
            ("eps0", self.eps0),
            ("hbar", self.hbar),
            ("area", self.area),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!("physical constant {name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Field normalization `sqrt(hbar / (4 pi c^2 eps0 A))`.
    pub fn alpha(&self) -> f64 {
        (self.hbar / (4.0 * std::f64::consts::PI * self.c * self.c * self.eps0 * self.area)).sqrt()
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            c: Self::SPEED_OF_LIGHT,
            eps0: Self::VACUUM_PERMITTIVITY,
            hbar: Self::REDUCED_PLANCK,
            area: Self::DEFAULT_AREA,
        }
    }
}

/// One damped oscillator contributing `strength / (omega_r^2 - omega^2 - i gamma omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    /// Oscillator strength `omega_p^2` (rad^2/s^2).
    pub strength: f64,
    /// Resonance frequency (rad/s).
    pub omega_r: f64,
    /// Damping rate (rad/s).
    pub gamma: f64,
}

/// A complex permittivity that can drive the propagation model.
pub trait Dielectric: Sync {
    fn permittivity(&self, omega: f64) -> Result<Complex64>;

    /// The real high-frequency limit that the Kramers-Kronig integral does
    /// not reconstruct.
    fn eps_background(&self) -> f64;

    fn constants(&self) -> &PhysicalConstants;

    /// Frequencies of the absorption lines, if the model has discrete ones.
    fn resonance_frequencies(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Poles and zeros of the permittivity near the real axis as
    /// `(frequency, half width)` pairs. The Taylor stencil keeps clear of them.
    fn singular_points(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }

    /// False when the absorption lines have zero width, in which case the
    /// Kramers-Kronig check is not meaningful on a finite grid.
    fn kk_checkable(&self) -> bool {
        true
    }
}

/// Lorentz-oscillator medium with a real background permittivity.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumModel {
    resonances: Vec<Resonance>,
    eps_background: f64,
    rho: f64,
    constants: PhysicalConstants,
}

impl MediumModel {
    pub fn new(
        resonances: Vec<Resonance>,
        eps_background: f64,
        rho: f64,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        constants.validate()?;
        if !(eps_background.is_finite() && eps_background >= 1.0) {
            return Err(Error::Domain(format!("background permittivity must be >= 1, got {eps_background}")));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Domain(format!("coupling constant rho must be positive, got {rho}")));
        }
        for (i, r) in resonances.iter().enumerate() {
            if !(r.omega_r.is_finite() && r.omega_r > 0.0) {
                return Err(Error::Domain(format!("resonance {i}: omega_r must be positive")));
            }
            // negative strength or damping would make eps_i < 0 somewhere (gain)
            if !(r.strength.is_finite() && r.strength >= 0.0) {
                return Err(Error::Domain(format!("resonance {i}: strength must be non-negative")));
            }
            if !(r.gamma.is_finite() && r.gamma >= 0.0) {
                return Err(Error::Domain(format!("resonance {i}: damping must be non-negative")));
            }
        }
        Ok(Self { resonances, eps_background, rho, constants })
    }

    pub fn vacuum() -> Self {
        Self {
            resonances: Vec::new(),
            eps_background: 1.0,
            rho: 1.0,
            constants: PhysicalConstants::default(),
        }
    }

    /// Lossless, dispersionless medium with refractive index `n`.
    pub fn constant_index(n: f64) -> Result<Self> {
        Self::new(Vec::new(), n * n, 1.0, PhysicalConstants::default())
    }

    pub fn resonances(&self) -> &[Resonance] {
        &self.resonances
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl Dielectric for MediumModel {
    fn permittivity(&self, omega: f64) -> Result<Complex64> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Domain(format!("permittivity needs omega > 0, got {omega}")));
        }
        let mut eps = Complex64::new(self.eps_background, 0.0);
        for r in &self.resonances {
            let denom = Complex64::new(r.omega_r * r.omega_r - omega * omega, -r.gamma * omega);
            if denom.norm_sqr() == 0.0 {
                return Err(Error::Domain(format!(
                    "undamped resonance at omega = {omega:e} rad/s"
                )));
            }
            eps += r.strength / denom;
        }
        Ok(eps)
    }

    fn eps_background(&self) -> f64 {
        self.eps_background
    }

    fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    fn resonance_frequencies(&self) -> Vec<f64> {
        self.resonances.iter().map(|r| r.omega_r).collect()
    }

    fn kk_checkable(&self) -> bool {
        self.resonances.iter().all(|r| r.gamma > 0.0)
    }

    fn singular_points(&self) -> Vec<(f64, f64)> {
        let mut points = Vec::with_capacity(2 * self.resonances.len());
        for r in &self.resonances {
            // pole of the line, and the zero of eps it pushes above itself
            points.push((r.omega_r, 0.5 * r.gamma));
            let zero = (r.omega_r * r.omega_r + r.strength / self.eps_background).sqrt();
            points.push((zero, 0.5 * r.gamma));
        }
        points
    }
}

pub fn permittivity<D: Dielectric + ?Sized>(model: &D, omega: f64) -> Result<Complex64> {
    model.permittivity(omega)
}

/// Principal square root of the permittivity, rejecting the real-negative
/// axis where passivity does not fix the sign.
pub fn refractive_index<D: Dielectric + ?Sized>(model: &D, omega: f64) -> Result<Complex64> {
    let eps = model.permittivity(omega)?;
    if eps.im == 0.0 && eps.re < 0.0 {
        return Err(Error::Branch { omega, eps_re: eps.re, eps_im: eps.im });
    }
    Ok(eps.sqrt())
}

/// Complex wavenumber `k = (omega / c) sqrt(eps)` with `Im k >= 0`.
pub fn wavenumber<D: Dielectric + ?Sized>(model: &D, omega: f64) -> Result<Complex64> {
    let n = refractive_index(model, omega)?;
    Ok(n * (omega / model.constants().c))
}

/// `sqrt(eps_i / eps)`, the amplitude with which the Langevin force enters
/// the field.
pub fn noise_coupling<D: Dielectric + ?Sized>(model: &D, omega: f64) -> Result<Complex64> {
    let eps = model.permittivity(omega)?;
    if eps.im == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok((Complex64::new(eps.im, 0.0) / eps).sqrt())
}
