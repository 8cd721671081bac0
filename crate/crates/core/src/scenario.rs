//! Scenario files: a TOML description of medium, carrier, grid, pulse,
//! nonlinearity and noise, with explicit SI units in every key.
//!
//! Loading validates everything up front so that a run never starts on a
//! configuration the model cannot describe.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{
    Dielectric,
    noise_coupling, taylor_expand, DispersionExpansion, MediumModel, PhysicalConstants, Resonance,
};
use crate::nlse::{chi_eff, default_step_budget, soliton_amplitude, weak_absorption_gate, KerrSpec, PulseShape};
use crate::stochastic::{NoiseParameters, DEFAULT_V0};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trajectories: usize,
    pub medium: MediumSection,
    pub carrier: CarrierSection,
    pub dispersion: Option<DispersionSection>,
    pub grid: GridSection,
    pub pulse: PulseSection,
    pub kerr: Option<KerrSection>,
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub output: OutputSection,
    pub linear: Option<LinearSection>,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    #[serde(default = "unit")]
    pub eps_background: f64,
    #[serde(default = "unit")]
    pub rho: f64,
    #[serde(default = "default_area")]
    pub area_m2: f64,
    #[serde(default)]
    pub resonance: Vec<ResonanceSection>,
}

fn default_area() -> f64 {
    PhysicalConstants::DEFAULT_AREA
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSection {
    pub strength_rad2_per_s2: f64,
    pub omega_r_rad_per_s: f64,
    pub gamma_rad_per_s: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierSection {
    pub omega0_rad_per_s: f64,
    pub delta_omega_rad_per_s: f64,
    #[serde(default = "two")]
    pub taylor_order: usize,
}

fn two() -> usize {
    2
}

/// Explicit dispersion coefficients replacing the ones derived from the
/// medium.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    pub k0_re_per_m: f64,
    #[serde(default)]
    pub k0_im_per_m: f64,
    pub k1_re_s_per_m: f64,
    #[serde(default)]
    pub k1_im_s_per_m: f64,
    pub k2_re_s2_per_m: f64,
    #[serde(default)]
    pub k2_im_s2_per_m: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub samples: usize,
    pub window_s: f64,
    pub length_m: f64,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    Soliton,
    Sech,
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub shape: ShapeName,
    pub peak_power_w: Option<f64>,
    pub width_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KerrSection {
    /// Fibre nonlinearity `gamma` (1/(W m)); `chi = gamma hbar omega0`.
    pub gamma_per_w_per_m: Option<f64>,
    /// Intrinsic quartic constant; `chi` follows from the medium.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub nbar: f64,
    #[serde(default = "default_v0")]
    pub v0: f64,
}

fn yes() -> bool {
    true
}

fn default_v0() -> f64 {
    DEFAULT_V0
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Positions at which snapshots are taken; the end of the medium is
    /// always included.
    #[serde(default)]
    pub snapshots_m: Vec<f64>,
    /// How many trajectories have their individual snapshots written.
    pub trajectory_snapshots: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    pub omega_min_rad_per_s: f64,
    pub omega_max_rad_per_s: f64,
    pub omega_samples: usize,
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub samples: usize,
    pub window: f64,
    pub length: f64,
    pub steps: Option<usize>,
}

impl GridSpec {
    pub fn h_t(&self) -> f64 {
        self.window / self.samples as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputPlan {
    /// Sorted snapshot positions ending at the medium length.
    pub snapshots: Vec<f64>,
    pub trajectory_snapshots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearPlan {
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_samples: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
}

impl LinearPlan {
    pub fn omegas(&self) -> Vec<f64> {
        if self.omega_samples == 1 {
            return vec![self.omega_min];
        }
        let step = (self.omega_max - self.omega_min) / (self.omega_samples - 1) as f64;
        (0..self.omega_samples).map(|i| self.omega_min + i as f64 * step).collect()
    }

    /// Spectral cell width used to discretize the frequency delta function.
    pub fn d_omega(&self) -> f64 {
        if self.omega_samples > 1 {
            (self.omega_max - self.omega_min) / (self.omega_samples - 1) as f64
        } else {
            1.0
        }
    }

    pub fn h_x(&self) -> f64 {
        (self.x_max - self.x_min) / self.cells as f64
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub medium: MediumModel,
    pub expansion: DispersionExpansion,
    pub kerr: KerrSpec,
    pub grid: GridSpec,
    pub pulse: PulseShape,
    /// `None` runs the deterministic equation.
    pub noise: Option<NoiseParameters>,
    pub seed: u64,
    pub trajectories: usize,
    pub output: OutputPlan,
    pub linear: Option<LinearPlan>,
}

impl Scenario {
    /// Step size target: the explicit step count if given, else the default budget.
    pub fn target_step(&self) -> f64 {
        match self.grid.steps {
            Some(n) => self.grid.length / n as f64,
            None => default_step_budget(&self.expansion, self.kerr.chi, self.grid.h_t(), self.pulse.peak_power()),
        }
    }

    /// Replaces the seed (also the noise seed) and the trajectory count.
    pub fn override_run(&mut self, seed: Option<u64>, trajectories: Option<usize>) -> Result<()> {
        if let Some(seed) = seed {
            self.seed = seed;
            if let Some(noise) = self.noise.as_mut() {
                noise.seed = seed;
            }
        }
        if let Some(n) = trajectories {
            if n == 0 {
                return Err(fail("trajectories must be at least 1"));
            }
            self.trajectories = n;
            self.output.trajectory_snapshots = self.output.trajectory_snapshots.min(n);
        }
        Ok(())
    }

    /// Factor converting normalized amplitudes (sqrt of photon flux) to
    /// electric field amplitude, `sqrt(2 hbar omega0 / (c eps0 n A))`.
    pub fn field_unit(&self) -> f64 {
        let c = self.medium.constants();
        let n = self.expansion.k[0].re * c.c / self.expansion.omega0;
        (2.0 * c.hbar * self.expansion.omega0 / (c.c * c.eps0 * n * c.area)).sqrt()
    }
}

fn fail(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| fail(e.to_string()))?;
    validate(file)
}

pub fn validate(file: ScenarioFile) -> Result<Scenario> {
    let constants = PhysicalConstants::with_area(file.medium.area_m2)?;
    let resonances = file
        .medium
        .resonance
        .iter()
        .map(|r| Resonance {
            strength: r.strength_rad2_per_s2,
            omega_r: r.omega_r_rad_per_s,
            gamma: r.gamma_rad_per_s,
        })
        .collect();
    let medium = MediumModel::new(resonances, file.medium.eps_background, file.medium.rho, constants)?;

    let omega0 = file.carrier.omega0_rad_per_s;
    let delta_omega = file.carrier.delta_omega_rad_per_s;
    if !(omega0 > 0.0 && delta_omega > 0.0) {
        return Err(fail("carrier frequency and subinterval width must be positive"));
    }
    if delta_omega > omega0 / 5.0 {
        return Err(Error::Precondition {
            rule: "subinterval width must not exceed omega0/5 for the narrow-band expansion",
            detail: format!("delta_omega = {delta_omega:e}, omega0/5 = {:e}", omega0 / 5.0),
        });
    }
    let expansion = match &file.dispersion {
        Some(d) => DispersionExpansion::from_coefficients(
            omega0,
            delta_omega,
            vec![
                Complex64::new(d.k0_re_per_m, d.k0_im_per_m),
                Complex64::new(d.k1_re_s_per_m, d.k1_im_s_per_m),
                Complex64::new(d.k2_re_s2_per_m, d.k2_im_s2_per_m),
            ],
            vec![noise_coupling(&medium, omega0)?],
        )?,
        None => taylor_expand(&medium, omega0, delta_omega, file.carrier.taylor_order)?,
    };
    if expansion.k0i() < 0.0 {
        return Err(fail("the carrier attenuation Im k0 must not be negative"));
    }

    let g = &file.grid;
    if !g.samples.is_power_of_two() || g.samples < 2 {
        return Err(fail(format!("grid.samples must be a power of two, got {}", g.samples)));
    }
    if !(g.window_s > 0.0 && g.length_m > 0.0) {
        return Err(fail("grid.window_s and grid.length_m must be positive"));
    }
    if g.steps == Some(0) {
        return Err(fail("grid.steps must be at least 1"));
    }
    let grid = GridSpec { samples: g.samples, window: g.window_s, length: g.length_m, steps: g.steps };

    let chi = match &file.kerr {
        None => 0.0,
        Some(KerrSection { gamma_per_w_per_m: Some(_), lambda: Some(_) }) => {
            return Err(fail("give either kerr.gamma_per_w_per_m or kerr.lambda, not both"))
        }
        Some(KerrSection { gamma_per_w_per_m: Some(gamma), .. }) => gamma * constants.hbar * omega0,
        Some(KerrSection { lambda: Some(lambda), .. }) => chi_eff(&medium, *lambda, omega0)?.re,
        Some(_) => 0.0,
    };
    if chi != 0.0 {
        weak_absorption_gate(&medium, omega0)?;
    }
    let kerr = KerrSpec { lambda: file.kerr.as_ref().and_then(|k| k.lambda), chi, nonlocal: false };

    let photon_energy = constants.hbar * omega0;
    let amplitude = |p: Option<f64>| -> Result<f64> {
        let p = p.ok_or_else(|| fail("pulse.peak_power_w is required for this shape"))?;
        if !(p >= 0.0) {
            return Err(fail("pulse.peak_power_w must be non-negative"));
        }
        Ok((p / photon_energy).sqrt())
    };
    let width = || -> Result<f64> {
        match file.pulse.width_s {
            Some(w) if w > 0.0 => Ok(w),
            _ => Err(fail("pulse.width_s must be given and positive")),
        }
    };
    let pulse = match file.pulse.shape {
        ShapeName::Zero => PulseShape::Zero,
        ShapeName::Sech => PulseShape::Sech { amplitude: amplitude(file.pulse.peak_power_w)?, width: width()? },
        ShapeName::Gaussian => {
            PulseShape::Gaussian { amplitude: amplitude(file.pulse.peak_power_w)?, width: width()? }
        }
        ShapeName::Soliton => {
            if file.pulse.peak_power_w.is_some() {
                return Err(fail("a soliton's peak power follows from k2 and chi; drop pulse.peak_power_w"));
            }
            let tau0 = width()?;
            PulseShape::Sech { amplitude: soliton_amplitude(expansion.k2().re, chi, tau0)?, width: tau0 }
        }
    };
    if pulse.bandwidth() > delta_omega {
        return Err(Error::Precondition {
            rule: "pulse bandwidth exceeds delta_omega: the narrow-band decomposition does not hold",
            detail: format!("bandwidth {:e} rad/s > delta_omega {delta_omega:e} rad/s", pulse.bandwidth()),
        });
    }

    let noise = match &file.noise {
        Some(n) if n.enabled => {
            let p = NoiseParameters { seed: file.seed, nbar: n.nbar, v0: n.v0 };
            p.validate()?;
            Some(p)
        }
        _ => None,
    };
    if file.trajectories == 0 {
        return Err(fail("trajectories must be at least 1"));
    }

    let mut snapshots = file.output.snapshots_m.clone();
    if snapshots.iter().any(|x| !(*x > 0.0 && *x <= grid.length)) {
        return Err(fail("output.snapshots_m must lie in (0, grid.length_m]"));
    }
    snapshots.push(grid.length);
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * grid.length);
    let output = OutputPlan {
        snapshots,
        trajectory_snapshots: file.output.trajectory_snapshots.unwrap_or(1).min(file.trajectories),
    };

    let linear = match &file.linear {
        None => None,
        Some(l) => {
            if !(l.omega_min_rad_per_s > 0.0 && l.omega_max_rad_per_s >= l.omega_min_rad_per_s) {
                return Err(fail("linear frequencies must satisfy 0 < omega_min <= omega_max"));
            }
            if l.omega_samples == 0 || (l.omega_samples == 1 && l.omega_max_rad_per_s != l.omega_min_rad_per_s) {
                return Err(fail("linear.omega_samples must be >= 2 unless omega_min == omega_max"));
            }
            if !(l.x_max_m > l.x_min_m) || l.cells == 0 {
                return Err(fail("linear grid needs x_max_m > x_min_m and at least one cell"));
            }
            Some(LinearPlan {
                omega_min: l.omega_min_rad_per_s,
                omega_max: l.omega_max_rad_per_s,
                omega_samples: l.omega_samples,
                x_min: l.x_min_m,
                x_max: l.x_max_m,
                cells: l.cells,
            })
        }
    };

    let scenario = Scenario {
        medium,
        expansion,
        kerr,
        grid,
        pulse,
        noise,
        seed: file.seed,
        trajectories: file.trajectories,
        output,
        linear,
    };
    if let Some(steps) = grid.steps {
        let budget =
            default_step_budget(&scenario.expansion, chi, grid.h_t(), scenario.pulse.peak_power());
        let h = grid.length / steps as f64;
        if h > budget * (1.0 + 1e-12) {
            return Err(Error::Precondition {
                rule: "step size exceeds the split-step budget min(0.01 h_t^2/|k2|, 0.05/(chi P), 0.1/k0i)",
                detail: format!("h_x = {h:e} m, budget {budget:e} m; use at least {} steps", (grid.length / budget).ceil()),
            });
        }
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
[medium]
eps_background = 2.1
[carrier]
omega0_rad_per_s = 1.2e15
delta_omega_rad_per_s = 2.0e14
[dispersion]
k0_re_per_m = 5.8e6
k1_re_s_per_m = 4.9e-9
k2_re_s2_per_m = -2.0e-26
[grid]
samples = 128
window_s = 4.0e-12
length_m = 10.0
[pulse]
shape = "soliton"
width_s = 1.0e-13
[kerr]
gamma_per_w_per_m = 1.3e-3
"#;

    #[test]
    fn a_minimal_scenario_loads() {
        let s = parse_scenario(BASE).unwrap();
        assert_eq!(s.grid.samples, 128);
        assert_eq!(s.output.snapshots, vec![10.0]);
        assert!(s.noise.is_none());
        assert!(s.kerr.chi > 0.0);
        match s.pulse {
            PulseShape::Sech { amplitude, width } => {
                let a2 = 2.0e-26 / (s.kerr.chi * width * width);
                assert!((amplitude * amplitude - a2).abs() < 1e-12 * a2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("samples = 128", "samples = 128\nsample = 12");
        assert!(matches!(parse_scenario(&text), Err(Error::Scenario(_))));
    }

    #[test]
    fn non_power_of_two_grids_are_rejected() {
        let text = BASE.replace("samples = 128", "samples = 100");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("power of two"));
    }

    #[test]
    fn strong_absorption_with_kerr_is_rejected() {
        // eps_i / eps_r = 0.5 at the carrier: eps = 1 + S / (i gamma w) at resonance
        let text = BASE.replace(
            "eps_background = 2.1",
            "eps_background = 2.0\n[[medium.resonance]]\nstrength_rad2_per_s2 = 1.2e30\nomega_r_rad_per_s = 1.2e15\ngamma_rad_per_s = 1.0e15",
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("weak absorption"), "{err}");
    }

    #[test]
    fn wide_pulses_in_narrow_subintervals_are_rejected() {
        let text = BASE.replace("width_s = 1.0e-13", "width_s = 1.0e-14");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("bandwidth"), "{err}");
    }

    #[test]
    fn too_few_steps_are_rejected() {
        let text = BASE.replace("length_m = 10.0", "length_m = 10.0\nsteps = 3");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("budget"), "{err}");
    }

    #[test]
    fn snapshots_are_sorted_and_end_at_the_length() {
        let text = format!("{BASE}\n[output]\nsnapshots_m = [7.5, 2.5, 10.0]\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.output.snapshots, vec![2.5, 7.5, 10.0]);
        let bad = format!("{BASE}\n[output]\nsnapshots_m = [12.0]\n");
        assert!(parse_scenario(&bad).is_err());
    }

    #[test]
    fn noise_section_sets_the_seed() {
        let text = format!("{BASE}\n[noise]\nnbar = 0.2\n");
        let s = parse_scenario(&text).unwrap();
        let p = s.noise.unwrap();
        assert_eq!((p.seed, p.nbar, p.v0), (3, 0.2, 0.5));
    }

    #[test]
    fn overrides_reach_the_noise_seed() {
        let text = format!("{BASE}\n[noise]\nnbar = 0.2\n");
        let mut s = parse_scenario(&text).unwrap();
        s.override_run(Some(99), Some(4)).unwrap();
        assert_eq!((s.seed, s.noise.unwrap().seed, s.trajectories), (99, 99, 4));
        assert!(s.override_run(None, Some(0)).is_err());
    }
}
