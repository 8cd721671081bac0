//! Frequency-domain construction of the linear field from the Langevin force.
//!
//! For a single frequency the forward and backward components of the vector
//! potential obey first-order spatial Langevin equations
//!
//! ```text
//! dA_fwd/dx =  i k A_fwd - i alpha sqrt(eps_i/eps) f
//! dA_bwd/dx = -i k A_bwd + i alpha sqrt(eps_i/eps) f
//! ```
//!
//! whose solutions are the Green-function integrals over the force on either
//! side of `x`. With the force piecewise constant on each cell the equations
//! are integrated exactly, cell by cell.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::{noise_coupling, permittivity, wavenumber, Dielectric};
use crate::numerics::is_uniform;
use crate::stochastic::NoiseProcess;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Green function of the vector potential, `-i alpha sqrt(eps_i/eps) exp(i k |x - x'|)`.
pub fn green_a<D: Dielectric + ?Sized>(model: &D, x: f64, x_prime: f64, omega: f64) -> Result<Complex64> {
    let k = wavenumber(model, omega)?;
    let coupling = noise_coupling(model, omega)?;
    let alpha = model.constants().alpha();
    Ok(-I * alpha * coupling * (I * k * (x - x_prime).abs()).exp())
}

/// Polarization `(eps0/rho) [(eps - 1) E - 2 i alpha c sqrt(eps_i) f]` at one
/// frequency; `rho` is the field-polarization coupling of the medium.
pub fn polarization<D: Dielectric + ?Sized>(
    model: &D,
    rho: f64,
    e: Complex64,
    f: Complex64,
    omega: f64,
) -> Result<Complex64> {
    let eps = permittivity(model, omega)?;
    let constants = model.constants();
    let source = 2.0 * I * constants.alpha() * constants.c * eps.im.max(0.0).sqrt() * f;
    Ok(constants.eps0 / rho * ((eps - 1.0) * e - source))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// All linear fields at one frequency on a uniform spatial grid.
///
/// The grid has `cells + 1` nodes `x_j = x_min + j h_x`. The force is
/// constant on each cell `[x_c, x_{c+1}]`; the field arrays live on nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySlice {
    pub omega: f64,
    pub x_min: f64,
    pub h_x: f64,
    /// One c-number force sample per cell.
    pub force: Vec<Complex64>,
    pub a_fwd: Vec<Complex64>,
    pub a_bwd: Vec<Complex64>,
    /// `E = i omega (A_fwd + A_bwd)`.
    pub e: Vec<Complex64>,
    pub polarization: Vec<Complex64>,
}

impl FrequencySlice {
    pub fn new(omega: f64, x_min: f64, h_x: f64, force: Vec<Complex64>) -> Result<Self> {
        if force.is_empty() {
            return Err(Error::Grid("a slice needs at least two grid points".into()));
        }
        if !(h_x > 0.0 && h_x.is_finite()) {
            return Err(Error::Grid(format!("cell size must be positive, got {h_x}")));
        }
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("slice frequency must be positive, got {omega}")));
        }
        let nodes = force.len() + 1;
        Ok(Self {
            omega,
            x_min,
            h_x,
            force,
            a_fwd: vec![ZERO; nodes],
            a_bwd: vec![ZERO; nodes],
            e: vec![ZERO; nodes],
            polarization: vec![ZERO; nodes],
        })
    }

    /// Draws a force realization from `noise`. The spectral cell width
    /// `d_omega` plays the role of the second delta function in the force
    /// correlation.
    pub fn sampled(
        noise: &mut NoiseProcess,
        omega: f64,
        x_min: f64,
        h_x: f64,
        cells: usize,
        d_omega: f64,
    ) -> Result<Self> {
        let force = noise.sample_force(cells, h_x, d_omega)?;
        Self::new(omega, x_min, h_x, force)
    }

    pub fn cells(&self) -> usize {
        self.force.len()
    }

    pub fn x(&self, node: usize) -> f64 {
        self.x_min + node as f64 * self.h_x
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.cells())
    }

    /// Total vector potential `A_fwd + A_bwd` at every node.
    pub fn a_total(&self) -> Vec<Complex64> {
        self.a_fwd.iter().zip(&self.a_bwd).map(|(f, b)| f + b).collect()
    }

    /// Node index of position `x`, if `x` is a grid node.
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let pos = (x - self.x_min) / self.h_x;
        let node = pos.round();
        ((pos - node).abs() < 1e-9 && node >= 0.0 && node as usize <= self.cells()).then_some(node as usize)
    }
}

/// Per-cell propagator `exp(i k h)` and source weight
/// `-i alpha sqrt(eps_i/eps) (exp(i k h) - 1) / (i k)`.
fn cell_coefficients<D: Dielectric + ?Sized>(model: &D, omega: f64, h_x: f64) -> Result<(Complex64, Complex64)> {
    let k = wavenumber(model, omega)?;
    if k.im * h_x > 1.0 {
        return Err(Error::Grid(format!(
            "field decays by more than 1/e per cell (k_i h_x = {:.3}); refine the grid",
            k.im * h_x
        )));
    }
    let coupling = -I * model.constants().alpha() * noise_coupling(model, omega)?;
    let step = (I * k * h_x).exp();
    let weight = if k.norm() == 0.0 {
        coupling * h_x
    } else {
        coupling * (step - 1.0) / (I * k)
    };
    Ok((step, weight))
}

/// Integrates one of the spatial Langevin equations across the slice.
///
/// `boundary` is the incoming amplitude: `A_fwd(x_min)` for the forward
/// field, `A_bwd(x_max)` for the backward one.
pub fn integrate_langevin<D: Dielectric + ?Sized>(
    model: &D,
    slice: &mut FrequencySlice,
    direction: Direction,
    boundary: Complex64,
) -> Result<()> {
    let (step, weight) = cell_coefficients(model, slice.omega, slice.h_x)?;
    let cells = slice.cells();
    match direction {
        Direction::Forward => {
            let a = &mut slice.a_fwd;
            a[0] = boundary;
            for c in 0..cells {
                a[c + 1] = step * a[c] + weight * slice.force[c];
            }
        }
        Direction::Backward => {
            let a = &mut slice.a_bwd;
            a[cells] = boundary;
            for c in (0..cells).rev() {
                a[c] = step * a[c + 1] + weight * slice.force[c];
            }
        }
    }
    Ok(())
}

/// Fills `e` and `polarization` from the current vector potential.
///
/// The force at a node is the mean of the two cells that meet there.
pub fn update_fields<D: Dielectric + ?Sized>(model: &D, rho: f64, slice: &mut FrequencySlice) -> Result<()> {
    let omega = slice.omega;
    let cells = slice.cells();
    for j in 0..=cells {
        let a = slice.a_fwd[j] + slice.a_bwd[j];
        let e = I * omega * a;
        let f = match j {
            0 => slice.force[0],
            j if j == cells => slice.force[cells - 1],
            j => 0.5 * (slice.force[j - 1] + slice.force[j]),
        };
        slice.e[j] = e;
        slice.polarization[j] = polarization(model, rho, e, f, omega)?;
    }
    Ok(())
}

/// Forward and backward integration with zero incoming fields, then `E`
/// and `X`.
pub fn solve_slice<D: Dielectric + ?Sized>(model: &D, rho: f64, slice: &mut FrequencySlice) -> Result<()> {
    integrate_langevin(model, slice, Direction::Forward, ZERO)?;
    integrate_langevin(model, slice, Direction::Backward, ZERO)?;
    update_fields(model, rho, slice)
}

/// `A(x, omega) + conj(A(x, omega))` for every slice, the c-number image of
/// the positive- plus negative-frequency parts at one position.
pub fn assemble_real_field(slices: &[FrequencySlice], x: f64) -> Result<Vec<f64>> {
    let omegas: Vec<f64> = slices.iter().map(|s| s.omega).collect();
    if !is_uniform(&omegas, 1e-9) {
        return Err(Error::Grid("slices must sit on a uniform, increasing frequency grid".into()));
    }
    slices
        .iter()
        .map(|s| {
            let node = s
                .node_of(x)
                .ok_or_else(|| Error::Grid(format!("x = {x:e} m is not a node of the slice at {:e}", s.omega)))?;
            let a = s.a_fwd[node] + s.a_bwd[node];
            Ok((a + a.conj()).re)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{MediumModel, PhysicalConstants, Resonance};
    use crate::numerics::gauss_legendre;
    use crate::stochastic::{NoiseParameters, NoiseProcess};

    fn lossy() -> MediumModel {
        MediumModel::new(
            vec![Resonance { strength: 1.5e30, omega_r: 1.0e15, gamma: 1.0e14 }],
            1.0,
            1.0,
            PhysicalConstants::default(),
        )
        .unwrap()
    }

    const OMEGA: f64 = 0.9e15;

    #[test]
    fn green_function_at_coincident_points() {
        let m = lossy();
        let g = green_a(&m, 0.3, 0.3, OMEGA).unwrap();
        let expected = -I * m.constants().alpha() * noise_coupling(&m, OMEGA).unwrap();
        assert!((g - expected).norm() < 1e-15 * expected.norm());
    }

    #[test]
    fn green_function_vanishes_without_absorption() {
        let m = MediumModel::constant_index(1.5).unwrap();
        assert_eq!(green_a(&m, 0.0, 1e-3, OMEGA).unwrap(), ZERO);
    }

    #[test]
    fn green_function_decays_by_e_over_one_attenuation_length() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let eps = permittivity(&m, OMEGA).unwrap();
        let g = green_a(&m, 1.0 / k.im, 0.0, OMEGA).unwrap();
        let expected = m.constants().alpha() * (eps.im / eps.norm()).sqrt() * (-1.0f64).exp();
        assert!((g.norm() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn green_function_solves_helmholtz_away_from_source() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let h = 1e-3 / k.norm();
        for x in [0.5 / k.re, 3.0 / k.re, 40.0 / k.re] {
            let g = |x: f64| green_a(&m, x, 0.0, OMEGA).unwrap();
            let second = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
            let residual = (second + k * k * g(x)).norm() / (k.norm_sqr() * g(x).norm());
            assert!(residual < 1e-5, "residual {residual} at x = {x}");
        }
    }

    #[test]
    fn homogeneous_solution_is_a_plane_wave() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let h = 0.05 / k.norm();
        let mut s = FrequencySlice::new(OMEGA, 0.0, h, vec![ZERO; 200]).unwrap();
        let a0 = Complex64::new(0.7, -0.2);
        integrate_langevin(&m, &mut s, Direction::Forward, a0).unwrap();
        for j in [0, 1, 57, 200] {
            let expected = a0 * (I * k * s.x(j)).exp();
            assert!((s.a_fwd[j] - expected).norm() < 1e-12 * a0.norm());
        }
    }

    #[test]
    fn single_cell_impulse_reproduces_the_green_function() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let coupling = -I * m.constants().alpha() * noise_coupling(&m, OMEGA).unwrap();
        let mut errors = Vec::new();
        for h in [0.04 / k.norm(), 0.02 / k.norm()] {
            let cells = 400;
            let c = 100;
            let mut force = vec![ZERO; cells];
            force[c] = Complex64::new(1.0, 0.0);
            let mut s = FrequencySlice::new(OMEGA, 0.0, h, force).unwrap();
            integrate_langevin(&m, &mut s, Direction::Forward, ZERO).unwrap();
            let centre = s.x(c) + 0.5 * h;
            let j = 300;
            let expected = coupling * h * (I * k * (s.x(j) - centre)).exp();
            errors.push((s.a_fwd[j] - expected).norm() / expected.norm());
        }
        // relative error is O(h^2): halving h quarters it
        assert!(errors[0] < 1e-3);
        let ratio = errors[0] / errors[1];
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn cell_scan_matches_direct_quadrature() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let coupling = -I * m.constants().alpha() * noise_coupling(&m, OMEGA).unwrap();
        let h = 0.3 / k.norm();
        let mut noise = NoiseProcess::new(NoiseParameters { seed: 9, nbar: 0.0, v0: 1.0 }, 0);
        let mut s = FrequencySlice::sampled(&mut noise, OMEGA, 0.0, h, 512, 1.0).unwrap();
        integrate_langevin(&m, &mut s, Direction::Forward, ZERO).unwrap();

        let (gx, gw) = gauss_legendre(12);
        for j in (1..=512).step_by(17) {
            let x = s.x(j);
            let mut direct = ZERO;
            for c in 0..j {
                let (a, b) = (s.x(c), s.x(c + 1));
                let mut cell = ZERO;
                for (t, w) in gx.iter().zip(&gw) {
                    let y = 0.5 * (a + b) + 0.5 * (b - a) * t;
                    cell += 0.5 * (b - a) * w * (I * k * (x - y)).exp();
                }
                direct += cell * s.force[c];
            }
            direct *= coupling;
            assert!((s.a_fwd[j] - direct).norm() < 1e-9 * direct.norm(), "node {j}");
        }
    }

    #[test]
    fn backward_scan_is_the_mirror_of_the_forward_scan() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let h = 0.1 / k.norm();
        let mut noise = NoiseProcess::new(NoiseParameters { seed: 3, nbar: 0.5, v0: 1.0 }, 0);
        let mut fwd = FrequencySlice::sampled(&mut noise, OMEGA, 0.0, h, 300, 1.0).unwrap();
        let reversed: Vec<Complex64> = fwd.force.iter().rev().copied().collect();
        let mut bwd = FrequencySlice::new(OMEGA, 0.0, h, reversed).unwrap();
        integrate_langevin(&m, &mut fwd, Direction::Forward, ZERO).unwrap();
        integrate_langevin(&m, &mut bwd, Direction::Backward, ZERO).unwrap();
        let mirrored: Vec<Complex64> = bwd.a_bwd.iter().rev().copied().collect();
        assert_eq!(fwd.a_fwd, mirrored);
    }

    #[test]
    fn harmonic_phase_factor_commutes_with_the_linear_solution() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let h = 0.1 / k.norm();
        let mut noise = NoiseProcess::new(NoiseParameters { seed: 5, nbar: 0.0, v0: 1.0 }, 0);
        let mut s = FrequencySlice::sampled(&mut noise, OMEGA, 0.0, h, 128, 1.0).unwrap();
        let phase = (-I * OMEGA * 2.7e-15).exp();
        let mut rotated = FrequencySlice::new(
            OMEGA,
            0.0,
            h,
            s.force.iter().map(|f| f * phase).collect(),
        )
        .unwrap();
        solve_slice(&m, 1.0, &mut s).unwrap();
        solve_slice(&m, 1.0, &mut rotated).unwrap();
        let fields = |s: &FrequencySlice| {
            [s.a_fwd.clone(), s.a_bwd.clone(), s.e.clone(), s.polarization.clone()]
        };
        for (a, b) in fields(&s).iter().zip(fields(&rotated).iter()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x * phase - y).norm() <= 1e-13 * x.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn electric_field_is_i_omega_times_the_potential() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let mut noise = NoiseProcess::new(NoiseParameters { seed: 1, nbar: 0.0, v0: 1.0 }, 0);
        let mut s = FrequencySlice::sampled(&mut noise, OMEGA, 0.0, 0.2 / k.norm(), 64, 1.0).unwrap();
        solve_slice(&m, 1.0, &mut s).unwrap();
        for (e, a) in s.e.iter().zip(s.a_total()) {
            assert_eq!(*e, I * OMEGA * a);
        }
    }

    #[test]
    fn under_resolved_decay_is_rejected() {
        let m = lossy();
        let k = wavenumber(&m, OMEGA).unwrap();
        let mut s = FrequencySlice::new(OMEGA, 0.0, 2.0 / k.im, vec![ZERO; 4]).unwrap();
        assert!(matches!(
            integrate_langevin(&m, &mut s, Direction::Forward, ZERO),
            Err(Error::Grid(_))
        ));
        assert!(FrequencySlice::new(OMEGA, 0.0, 1e-9, Vec::new()).is_err());
    }

    #[test]
    fn polarization_limits() {
        let vac = MediumModel::vacuum();
        let x = polarization(&vac, 1.0, Complex64::new(1.0, 2.0), ZERO, OMEGA).unwrap();
        assert_eq!(x, ZERO);
        let lossless = MediumModel::constant_index(1.4).unwrap();
        let x = polarization(&lossless, 1.0, ZERO, Complex64::new(3.0, 0.0), OMEGA).unwrap();
        assert_eq!(x, ZERO);
    }

    #[test]
    fn polarization_matches_direct_formula() {
        let m = lossy();
        let c = m.constants();
        let eps = permittivity(&m, OMEGA).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let rho = 2.5;
        let direct = c.eps0 / rho
            * ((eps - 1.0) * one - 2.0 * I * c.alpha() * c.c * eps.im.sqrt() * one);
        let x = polarization(&m, rho, one, one, OMEGA).unwrap();
        assert!((x - direct).norm() < 1e-15 * direct.norm());
    }

    #[test]
    fn real_field_assembly() {
        let mut a = FrequencySlice::new(1.0e15, 0.0, 1e-6, vec![ZERO; 4]).unwrap();
        let mut b = FrequencySlice::new(1.1e15, 0.0, 1e-6, vec![ZERO; 4]).unwrap();
        a.a_fwd[2] = I;
        b.a_fwd[2] = Complex64::new(0.6, 0.0);
        b.a_bwd[2] = Complex64::new(0.4, 0.3);
        let out = assemble_real_field(&[a.clone(), b.clone()], 2e-6).unwrap();
        assert_eq!(out, vec![0.0, 2.0]);

        let c = FrequencySlice::new(1.3e15, 0.0, 1e-6, vec![ZERO; 4]).unwrap();
        assert!(assemble_real_field(&[a.clone(), b, c], 2e-6).is_err());
        assert!(assemble_real_field(&[a], 2.5e-6).is_err());
    }
}
