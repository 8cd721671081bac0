//! Regression suite against analytic oracles.
//!
//! Every check compares the solver with an independent reference (closed
//! form, direct quadrature or contour integral) and reports the measured
//! discrepancy next to its threshold. `Effort::Quick` shrinks the sample
//! counts of the expensive checks but keeps every threshold.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::linear_prop::{green_a, solve_slice, FrequencySlice};
use crate::medium::{kk_check, taylor_expand, Dielectric, MediumModel, PhysicalConstants, Resonance};
use crate::nlse::{
    integrate_leading_kernel, kernel_gh, local_limit_coefficient, propagate, EnvelopeGrid, KernelMode, LinearSymbol,
    PulseShape, SplitStepper,
};
use crate::numerics::gauss_legendre;
use crate::output::{render_propagation, Format, RunContext};
use crate::scenario::{parse_scenario, Scenario};
use crate::stochastic::{NoiseParameters, NoiseProcess};

pub const SOLITON_SCENARIO: &str = include_str!("../../../scenarios/soliton.scenario");
pub const LORENTZ_SCENARIO: &str = include_str!("../../../scenarios/lorentz.scenario");
pub const THERMAL_LOSS_SCENARIO: &str = include_str!("../../../scenarios/thermal_loss.scenario");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effort {
    Quick,
    Full,
}

impl Effort {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Self::Quick => quick,
            Self::Full => full,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// What `measured` is.
    pub quantity: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub seconds: f64,
}

fn outcome(name: &'static str, quantity: &'static str, measured: f64, threshold: f64, start: Instant) -> CheckOutcome {
    CheckOutcome {
        name,
        quantity,
        measured,
        threshold,
        passed: measured <= threshold,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs a check, turning an error into a failed outcome.
fn guarded(name: &'static str, check: impl FnOnce() -> Result<CheckOutcome>) -> CheckOutcome {
    let start = Instant::now();
    check().unwrap_or_else(|e| {
        eprintln!("{name}: {e}");
        CheckOutcome {
            name,
            quantity: "error",
            measured: f64::NAN,
            threshold: 0.0,
            passed: false,
            seconds: start.elapsed().as_secs_f64(),
        }
    })
}

type Check = fn(Effort) -> Result<CheckOutcome>;

pub fn run_suite(effort: Effort) -> Vec<CheckOutcome> {
    let checks: Vec<(&'static str, Check)> = vec![
        ("linear-green", check_linear_green),
        ("beer-decay", check_beer_decay),
        ("gaussian-broadening", check_gaussian_broadening),
        ("soliton-shape", check_soliton_shape),
        ("split-step-order", check_split_step_order),
        ("fluctuation-dissipation", check_fluctuation_dissipation),
        ("kernel-local-limit", check_kernel_local_limit),
        ("kernel-full-vs-leading", check_kernel_full_vs_leading),
        ("kramers-kronig", check_kramers_kronig),
        ("taylor-coefficients", check_taylor_coefficients),
        ("self-phase-modulation", check_self_phase_modulation),
        ("determinism", check_determinism),
    ];
    checks.into_iter().map(|(name, f)| guarded(name, || f(effort))).collect()
}

/// Pass/fail table with one row per check.
pub fn format_table(outcomes: &[CheckOutcome]) -> String {
    let mut out = format!(
        "{:<26} {:<6} {:>12} {:>12} {:>9}  {}\n",
        "check", "result", "measured", "threshold", "time/s", "quantity"
    );
    for o in outcomes {
        out.push_str(&format!(
            "{:<26} {:<6} {:>12.3e} {:>12.3e} {:>9.2}  {}\n",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.measured,
            o.threshold,
            o.seconds,
            o.quantity
        ));
    }
    out
}

fn shipped(text: &str) -> Result<Scenario> {
    parse_scenario(text)
}

/// Forward plus backward scan against the Green-function integral evaluated
/// as a direct convolution with Gauss-Legendre cell integrals.
pub fn check_linear_green(effort: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = shipped(LORENTZ_SCENARIO)?;
    let medium = &s.medium;
    let omega = s.expansion.omega0;
    let cells = 2048;
    let h = 0.5 / s.expansion.k[0].norm();
    let (gx, gw) = gauss_legendre(12);
    // J[n] = int over [n h, (n + 1) h] of G(u) du
    let cell_integrals = (0..cells)
        .map(|n| {
            let mut sum = Complex64::new(0.0, 0.0);
            for (t, w) in gx.iter().zip(&gw) {
                let u = (n as f64 + 0.5 + 0.5 * t) * h;
                sum += 0.5 * h * w * green_a(medium, u, 0.0, omega)?;
            }
            Ok(sum)
        })
        .collect::<Result<Vec<_>>>()?;
    let seeds: u64 = effort.pick(4, 20);
    let worst = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let params = NoiseParameters { seed: 1000 + seed, nbar: 0.0, v0: 1.0 };
            let mut noise = NoiseProcess::new(params, 0);
            let mut slice = FrequencySlice::sampled(&mut noise, omega, 0.0, h, cells, 1.0)?;
            solve_slice(medium, medium.rho(), &mut slice)?;
            let mut worst: f64 = 0.0;
            for j in 0..=cells {
                let mut direct = Complex64::new(0.0, 0.0);
                for (c, f) in slice.force.iter().enumerate() {
                    let n = if c < j { j - c - 1 } else { c - j };
                    direct += cell_integrals[n] * f;
                }
                let scan = slice.a_fwd[j] + slice.a_bwd[j];
                worst = worst.max((scan - direct).norm() / direct.norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(outcome("linear-green", "max pointwise relative error", worst, 1e-6, start))
}

fn noiseless(mut s: Scenario) -> Scenario {
    s.noise = None;
    s.trajectories = 1;
    s.output.trajectory_snapshots = 1;
    s
}

/// Energy of a noiseless, linear pulse against `E0 exp(-2 k0i x)`.
pub fn check_beer_decay(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = noiseless(shipped(THERMAL_LOSS_SCENARIO)?);
    let r = propagate(&s)?;
    let e0 = s.pulse.sample(s.grid.samples, s.grid.window)?.energy();
    let k0i = s.expansion.k0i();
    let mut worst: f64 = 0.0;
    for snap in &r.snapshots[0] {
        let expected = e0 * (-2.0 * k0i * snap.x).exp();
        worst = worst.max((snap.energy() - expected).abs() / expected);
    }
    Ok(outcome("beer-decay", "max relative energy error", worst, 1e-10, start))
}

pub const GAUSSIAN_SCENARIO: &str = r#"
[medium]
eps_background = 2.1
[carrier]
omega0_rad_per_s = 1.2e15
delta_omega_rad_per_s = 2.0e14
[dispersion]
k0_re_per_m = 5.8e6
k1_re_s_per_m = 4.9e-9
k2_re_s2_per_m = 2.0e-26
[grid]
samples = 256
window_s = 6.4e-12
length_m = 2.5
[pulse]
shape = "gaussian"
peak_power_w = 1.0e-3
width_s = 1.0e-13
[output]
snapshots_m = [0.5, 1.0, 1.5, 2.0]
"#;

/// 1/e width of a Gaussian against `T0 sqrt(1 + (k2 x / T0^2)^2)` over five
/// dispersion lengths.
pub fn check_gaussian_broadening(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = shipped(GAUSSIAN_SCENARIO)?;
    let t0 = match s.pulse {
        PulseShape::Gaussian { width, .. } => width,
        _ => unreachable!("the scenario defines a Gaussian"),
    };
    let k2 = s.expansion.k2().re;
    let r = propagate(&s)?;
    let mut worst: f64 = 0.0;
    for snap in &r.snapshots[0] {
        let expected = t0 * (1.0 + (k2 * snap.x / (t0 * t0)).powi(2)).sqrt();
        worst = worst.max((snap.one_over_e_width()? - expected).abs() / expected);
    }
    Ok(outcome("gaussian-broadening", "max relative width error", worst, 1e-4, start))
}

/// The shipped soliton scenario with absorption removed.
fn lossless_soliton() -> Result<Scenario> {
    let mut s = noiseless(shipped(SOLITON_SCENARIO)?);
    for k in s.expansion.k.iter_mut() {
        k.im = 0.0;
    }
    Ok(s)
}

fn l2_shape_deviation(a: &[Complex64], reference: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum();
    let den: f64 = reference.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `|a|` after ten dispersion lengths against the input sech profile, with
/// the default step budget.
pub fn check_soliton_shape(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut s = lossless_soliton()?;
    let tau0 = match s.pulse {
        PulseShape::Sech { width, .. } => width,
        _ => unreachable!("the scenario defines a soliton"),
    };
    let length = 10.0 * s.expansion.dispersion_length(tau0);
    s.grid.length = length;
    s.output.snapshots = vec![length];
    let r = propagate(&s)?;
    let input = s.pulse.sample(s.grid.samples, s.grid.window)?;
    let deviation = l2_shape_deviation(&r.snapshots[0][0].a, &input.a);
    Ok(outcome("soliton-shape", "relative L2 deviation of |a|", deviation, 1e-3, start))
}

/// Measured global order of the split-step scheme on a higher-order
/// soliton, from errors against a fine-step reference at successively
/// halved steps. Reports the largest distance of a measured order from 2.
pub fn check_split_step_order(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = lossless_soliton()?;
    let symbol = LinearSymbol::from_expansion(&s.expansion);
    let (n, window) = (s.grid.samples, s.grid.window);
    let mut input = s.pulse.sample(n, window)?;
    for z in input.a.iter_mut() {
        *z *= 1.5;
    }
    let tau0 = match s.pulse {
        PulseShape::Sech { width, .. } => width,
        _ => unreachable!("the scenario defines a soliton"),
    };
    let length = s.expansion.dispersion_length(tau0);
    let run = |steps: usize| -> Result<EnvelopeGrid> {
        let mut stepper = SplitStepper::new(symbol, s.kerr.chi, n, window, length / steps as f64)?;
        let mut state = input.clone();
        for _ in 0..steps {
            stepper.step(&mut state, None)?;
        }
        Ok(state)
    };
    let reference = run(32768)?;
    let errors = [128, 256, 512, 1024]
        .into_par_iter()
        .map(|steps| {
            let a = run(steps)?;
            Ok(a.a.iter().zip(&reference.a).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = errors
        .windows(2)
        .map(|w| ((w[0] / w[1]).log2() - 2.0).abs())
        .fold(0.0, f64::max);
    Ok(outcome("split-step-order", "max |measured order - 2|", worst, 0.1, start))
}

/// Vacuum input through five attenuation lengths: every temporal mode and
/// every time sample must sit at `(nbar + 1/2) v0` within 5 standard errors.
pub fn check_fluctuation_dissipation(effort: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut s = shipped(THERMAL_LOSS_SCENARIO)?;
    s.pulse = PulseShape::Zero;
    s.trajectories = effort.pick(2000, 10_000);
    s.output.trajectory_snapshots = 0;
    let length = 5.0 / s.expansion.k0i();
    s.grid.length = length;
    s.output.snapshots = vec![length];
    let p = s.noise.expect("the thermal scenario is noisy");
    let r = propagate(&s)?;
    let m = &r.moments[0];
    let decay = (-2.0 * s.expansion.k0i() * length).exp();
    let level = p.symmetric_level() * (1.0 - decay) + 0.5 * p.v0 * decay;
    let h_t = s.grid.h_t();
    let z_modes = m
        .modes
        .symmetric_variance
        .iter()
        .zip(&m.modes.variance_stderr)
        .map(|(v, se)| (v - level).abs() / se);
    let z_time = m
        .time
        .symmetric_variance
        .iter()
        .zip(&m.time.variance_stderr)
        .map(|(v, se)| (v * h_t - level).abs() / (se * h_t));
    let worst = z_modes.chain(z_time).fold(0.0, f64::max);
    Ok(outcome("fluctuation-dissipation", "max deviation in standard errors", worst, 5.0, start))
}

/// Medium of the kernel checks: one far ultraviolet line and a carrier
/// subinterval of `omega0 / 100`.
pub fn kernel_medium(gamma: f64) -> Result<MediumModel> {
    MediumModel::new(
        vec![Resonance { strength: 1.5e31, omega_r: 2.0e16, gamma }],
        1.0,
        1.0,
        PhysicalConstants::default(),
    )
}

const KERNEL_OMEGA0: f64 = 1.2e15;
const KERNEL_DELTA_OMEGA: f64 = 1.2e13;

/// Integral of the leading-order kernel against the local Kerr coefficient.
pub fn check_kernel_local_limit(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let m = kernel_medium(1e12)?;
    let e = taylor_expand(&m, KERNEL_OMEGA0, KERNEL_DELTA_OMEGA, 2)?;
    let integral = integrate_leading_kernel(&m, &e, 400)?;
    let local = local_limit_coefficient(&m, &e)?;
    let rel = (integral - local).norm() / local.norm();
    Ok(outcome("kernel-local-limit", "relative difference of the integral", rel, 1e-2, start))
}

/// Full against leading kernel for vanishing absorption, relative to the
/// leading kernel's peak, over ten kernel widths.
pub fn check_kernel_full_vs_leading(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let m = kernel_medium(1e7)?;
    let e = taylor_expand(&m, KERNEL_OMEGA0, KERNEL_DELTA_OMEGA, 2)?;
    let scale = kernel_gh(&m, &e, 0.0, KernelMode::Leading)?.norm();
    let reach = 10.0 / (e.delta_omega * e.k1().re);
    let worst = (-40..=40)
        .map(|i| {
            let dx = reach * i as f64 / 40.0;
            let f = kernel_gh(&m, &e, dx, KernelMode::Full)?;
            let l = kernel_gh(&m, &e, dx, KernelMode::Leading)?;
            Ok((f - l).norm() / scale)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(outcome("kernel-full-vs-leading", "max difference / leading peak", worst, 1e-2, start))
}

/// Kramers-Kronig residual of the shipped Lorentz medium on 4096 points
/// spanning a decade either side of the line.
pub fn check_kramers_kronig(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = shipped(LORENTZ_SCENARIO)?;
    let wr = s.medium.resonances()[0].omega_r;
    let grid: Vec<f64> = (0..4096).map(|i| wr * (0.1 + 9.9 * i as f64 / 4095.0)).collect();
    let report = kk_check(&s.medium, &grid)?;
    Ok(outcome("kramers-kronig", "relative residual", report.residual, 1e-3, start))
}

/// Lorentz permittivity continued to complex frequency.
fn eps_complex(medium: &MediumModel, z: Complex64) -> Complex64 {
    let mut eps = Complex64::new(medium.eps_background(), 0.0);
    for r in medium.resonances() {
        eps += r.strength / (r.omega_r * r.omega_r - z * z - Complex64::new(0.0, r.gamma) * z);
    }
    eps
}

/// `d^m k / d omega^m` at `omega0` from the Cauchy integral on a circle,
/// i.e. finite differences with nodes spread around the carrier in the
/// complex plane.
pub fn contour_derivatives(medium: &MediumModel, omega0: f64, radius: f64, orders: usize) -> Vec<Complex64> {
    let c = medium.constants().c;
    let nodes = 128;
    let k_at: Vec<(Complex64, Complex64)> = (0..nodes)
        .map(|j| {
            let u = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64);
            let z = omega0 + radius * u;
            (u, z / c * eps_complex(medium, z).sqrt())
        })
        .collect();
    let mut factorial = 1.0;
    (0..=orders)
        .map(|m| {
            if m > 0 {
                factorial *= m as f64;
            }
            let sum: Complex64 = k_at.iter().map(|(u, k)| k * u.powi(-(m as i32))).sum();
            sum / nodes as f64 * factorial / radius.powi(m as i32)
        })
        .collect()
}

/// Richardson-extrapolated `k[0..=4]` of the shipped Lorentz medium against
/// contour derivatives.
pub fn check_taylor_coefficients(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = shipped(LORENTZ_SCENARIO)?;
    let omega0 = s.expansion.omega0;
    let e = taylor_expand(&s.medium, omega0, s.expansion.delta_omega, 4)?;
    let wr = s.medium.resonances()[0].omega_r;
    let reference = contour_derivatives(&s.medium, omega0, 0.25 * (wr - omega0), 4);
    let worst = e
        .k
        .iter()
        .zip(&reference)
        .map(|(k, r)| (k - r).norm() / r.norm())
        .fold(0.0, f64::max);
    Ok(outcome("taylor-coefficients", "max relative error of k[0..=4]", worst, 1e-6, start))
}

pub const SPM_SCENARIO: &str = r#"
[medium]
eps_background = 2.1
[carrier]
omega0_rad_per_s = 1.2e15
delta_omega_rad_per_s = 2.0e14
[dispersion]
k0_re_per_m = 5.8e6
k1_re_s_per_m = 4.9e-9
k2_re_s2_per_m = 0.0
[grid]
samples = 256
window_s = 6.4e-12
length_m = 10.0
[pulse]
shape = "gaussian"
peak_power_w = 10.0
width_s = 3.0e-13
[kerr]
gamma_per_w_per_m = 1.0e-2
"#;

/// Output phase of a dispersionless, lossless run against
/// `chi |a(0, tau)|^2 x` at every sample.
pub fn check_self_phase_modulation(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = shipped(SPM_SCENARIO)?;
    let r = propagate(&s)?;
    let input = s.pulse.sample(s.grid.samples, s.grid.window)?;
    let out = &r.snapshots[0][0];
    let worst = input
        .a
        .iter()
        .zip(&out.a)
        .map(|(a0, a)| {
            let expected = Complex64::from_polar(1.0, s.kerr.chi * a0.norm_sqr() * out.x);
            (a / (a0 * expected)).arg().abs()
        })
        .fold(0.0, f64::max);
    Ok(outcome("self-phase-modulation", "max phase error (rad)", worst, 1e-6, start))
}

/// Renders the noisy Lorentz scenario twice on different thread counts in
/// both output formats and counts files whose bytes differ.
pub fn check_determinism(_: Effort) -> Result<CheckOutcome> {
    let start = Instant::now();
    let s = shipped(LORENTZ_SCENARIO)?;
    let digest = crate::output::scenario_digest(LORENTZ_SCENARIO);
    let mut differing = 0usize;
    for format in [Format::Csv, Format::Binary] {
        let render = |threads: usize| -> Result<_> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| crate::Error::Domain(e.to_string()))?;
            pool.install(|| {
                let r = propagate(&s)?;
                let ctx = RunContext { scenario: &s, digest: digest.clone(), threads, format };
                render_propagation(&ctx, &r)
            })
        };
        let a = render(1)?;
        let b = render(3)?;
        differing += a.files.len().abs_diff(b.files.len());
        differing += a.files.iter().zip(&b.files).filter(|(x, y)| x != y).count();
    }
    Ok(outcome("determinism", "files with differing bytes", differing as f64, 0.0, start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_derivatives_of_a_constant_index_are_exact() {
        let m = MediumModel::constant_index(1.5).unwrap();
        let d = contour_derivatives(&m, 1e15, 1e14, 3);
        let c = m.constants().c;
        assert!((d[0].re - 1.5e15 / c).abs() < 1e-12 * d[0].re);
        assert!((d[1].re - 1.5 / c).abs() < 1e-12 * d[1].re);
        assert!(d[2].norm() < 1e-12 * d[0].norm() / 1e28);
    }

    #[test]
    fn failed_checks_are_reported_not_raised() {
        let o = guarded("broken", || Err(crate::Error::Domain("boom".into())));
        assert!(!o.passed);
        assert!(o.measured.is_nan());
    }

    #[test]
    fn the_table_lists_every_check() {
        let o = vec![CheckOutcome {
            name: "x",
            quantity: "q",
            measured: 1e-9,
            threshold: 1e-6,
            passed: true,
            seconds: 0.1,
        }];
        let t = format_table(&o);
        assert_eq!(t.lines().count(), 2);
        assert!(t.contains("PASS"));
    }
}
