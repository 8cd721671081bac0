//! Ensemble runs of the split-step solver over a scenario.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::envelope::EnvelopeGrid;
use super::stepper::{LinearSymbol, SplitStepper};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::stochastic::{reduce_moments, reduce_samples, sample_input_pulse, EnsembleMoments, NoiseProcess};

/// Ensemble statistics at one snapshot position.
#[derive(Debug, Clone, Serialize)]
pub struct SnapshotMoments {
    pub x: f64,
    /// Per time sample.
    pub time: EnsembleMoments,
    /// Per temporal mode, in units where white noise of per-sample variance
    /// `s / h_t` has mode variance `s`.
    pub modes: EnsembleMoments,
    /// Fraction of the mean-field power outside `|Omega| <= delta_omega / 2`.
    pub leakage: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    /// `snapshots[t][s]` for the first `output.trajectory_snapshots` trajectories.
    pub snapshots: Vec<Vec<EnvelopeGrid>>,
    pub moments: Vec<SnapshotMoments>,
    /// Steps between consecutive snapshots, same for every trajectory.
    pub segment_steps: Vec<usize>,
}

impl PropagationResult {
    pub fn total_steps(&self) -> usize {
        self.segment_steps.iter().sum()
    }

    /// Largest narrow-band leakage over all snapshots.
    pub fn max_leakage(&self) -> f64 {
        self.moments.iter().map(|m| m.leakage).fold(0.0, f64::max)
    }
}

/// Step counts and sizes taking the field from 0 to every snapshot.
pub fn plan_segments(snapshots: &[f64], target_step: f64) -> Vec<(usize, f64)> {
    let mut previous = 0.0;
    snapshots
        .iter()
        .map(|&x| {
            let length = x - previous;
            previous = x;
            let steps = if target_step.is_finite() {
                ((length / target_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize
            } else {
                1
            };
            (steps, length / steps as f64)
        })
        .collect()
}

/// One trajectory: input pulse (with vacuum noise if the scenario is noisy)
/// marched through every segment.
fn run_trajectory(
    scenario: &Scenario,
    steppers: &[(usize, SplitStepper)],
    coherent: &EnvelopeGrid,
    trajectory: usize,
) -> Result<Vec<EnvelopeGrid>> {
    let mut process = scenario.noise.map(|p| NoiseProcess::new(p, trajectory as u64));
    let mut state = match process.as_mut() {
        Some(p) => sample_input_pulse(p, coherent),
        None => coherent.clone(),
    };
    let mut out = Vec::with_capacity(steppers.len());
    for ((steps, template), &target) in steppers.iter().zip(&scenario.output.snapshots) {
        let mut stepper = template.clone();
        for _ in 0..*steps {
            stepper
                .step(&mut state, process.as_mut())
                .map_err(|e| Error::Trajectory { trajectory, x: state.x, source: Box::new(e) })?;
        }
        // remove accumulated rounding in x
        state.x = target;
        out.push(state.clone());
    }
    Ok(out)
}

/// Runs every trajectory of the scenario in parallel and reduces the
/// ensemble at each snapshot. The result does not depend on the number of
/// worker threads.
pub fn propagate(scenario: &Scenario) -> Result<PropagationResult> {
    let g = &scenario.grid;
    let symbol = LinearSymbol::from_expansion(&scenario.expansion);
    let segments = plan_segments(&scenario.output.snapshots, scenario.target_step());
    let steppers = segments
        .iter()
        .map(|&(n, h)| Ok((n, SplitStepper::new(symbol, scenario.kerr.chi, g.samples, g.window, h)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut coherent = scenario.pulse.sample(g.samples, g.window)?;
    coherent.carrier.omega0 = scenario.expansion.omega0;
    coherent.carrier.k_phi = scenario.expansion.k_phi;

    let trajectories: Vec<Vec<EnvelopeGrid>> = (0..scenario.trajectories)
        .into_par_iter()
        .map(|t| run_trajectory(scenario, &steppers, &coherent, t))
        .collect::<Result<Vec<_>>>()?;

    let moments = (0..scenario.output.snapshots.len())
        .map(|s| {
            let column: Vec<EnvelopeGrid> = trajectories.iter().map(|t| t[s].clone()).collect();
            let time = reduce_moments(&column)?;
            let modes: Vec<Vec<Complex64>> = column.par_iter().map(|g| g.mode_amplitudes()).collect();
            let modes = reduce_samples(&modes)?;
            let mut mean = column[0].clone();
            mean.a.clone_from(&time.mean_field);
            let leakage = mean.spectral_leakage(scenario.expansion.delta_omega);
            Ok(SnapshotMoments { x: scenario.output.snapshots[s], time, modes, leakage })
        })
        .collect::<Result<Vec<_>>>()?;

    let keep = scenario.output.trajectory_snapshots;
    Ok(PropagationResult {
        snapshots: trajectories.into_iter().take(keep).collect(),
        moments,
        segment_steps: segments.iter().map(|s| s.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    const LOSSY: &str = r#"
seed = 17
trajectories = 600
[medium]
[carrier]
omega0_rad_per_s = 1.2e15
delta_omega_rad_per_s = 2.0e14
[dispersion]
k0_re_per_m = 5.8e6
k0_im_per_m = 0.5
k1_re_s_per_m = 4.9e-9
k2_re_s2_per_m = 0.0
[grid]
samples = 32
window_s = 4.0e-12
length_m = 2.0
[pulse]
shape = "gaussian"
peak_power_w = 1.0e-6
width_s = 3.0e-13
[noise]
nbar = 0.5
[output]
snapshots_m = [1.0]
trajectory_snapshots = 2
"#;

    #[test]
    fn segments_hit_every_snapshot() {
        let plan = plan_segments(&[1.0, 2.5, 3.0], 0.2);
        assert_eq!(plan.iter().map(|p| p.0).collect::<Vec<_>>(), vec![5, 8, 3]);
        let end: f64 = plan.iter().map(|(n, h)| *n as f64 * h).sum();
        assert!((end - 3.0).abs() < 1e-12);
        assert_eq!(plan_segments(&[2.0], f64::INFINITY), vec![(1, 2.0)]);
    }

    #[test]
    fn zero_input_without_noise_stays_zero() {
        let text = LOSSY.replace("shape = \"gaussian\"", "shape = \"zero\"").replace("[noise]\nnbar = 0.5", "");
        let s = parse_scenario(&text).unwrap();
        let r = propagate(&s).unwrap();
        for traj in &r.snapshots {
            for snap in traj {
                assert!(snap.a.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
            }
        }
    }

    #[test]
    fn runs_are_reproducible_and_thread_independent() {
        let s = parse_scenario(&LOSSY.replace("trajectories = 600", "trajectories = 8")).unwrap();
        let a = propagate(&s).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| propagate(&s).unwrap());
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.moments[1].time.symmetric_variance, b.moments[1].time.symmetric_variance);
    }

    #[test]
    fn loss_only_energy_follows_beer_law_plus_noise_floor() {
        let s = parse_scenario(LOSSY).unwrap();
        let r = propagate(&s).unwrap();
        let k0i = s.expansion.k0i();
        let coherent = s.pulse.sample(s.grid.samples, s.grid.window).unwrap();
        let p = s.noise.unwrap();
        let n = s.grid.samples as f64;
        for m in &r.moments {
            let decay = (-2.0 * k0i * m.x).exp();
            // input vacuum decays, force noise fills up towards (nbar + 1/2) v0 per mode
            let noise = n * (0.5 * p.v0 * decay + p.symmetric_level() * (1.0 - decay));
            let expected = coherent.energy() * decay + noise;
            // energy = sum over modes of |b|^2; its ensemble error from the per-mode errors
            let measured: f64 = m.modes.intensity_mean.iter().sum();
            let se: f64 = m.modes.intensity_stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
            assert!((measured - expected).abs() < 5.0 * se, "{measured} vs {expected} +- {se}");
        }
        assert_eq!(r.snapshots.len(), 2);
    }

    #[test]
    fn trajectory_errors_name_the_trajectory() {
        let text = LOSSY
            .replace("[noise]\nnbar = 0.5", "[kerr]\ngamma_per_w_per_m = 1.0e9")
            .replace("length_m = 2.0", "length_m = 2.0\nsteps = 4");
        // the budget check catches this before any trajectory runs
        assert!(parse_scenario(&text).is_err());
    }
}
