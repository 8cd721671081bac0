//! Run artifacts: CSV tables, raw binary dumps with JSON sidecars, and the
//! manifest that ties them to a scenario.
//!
//! Every numeric file depends only on the scenario text, the seed and the
//! trajectory count, never on timing or thread count, so re-running a
//! manifest reproduces its files byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linear_prop::{solve_slice, FrequencySlice};
use crate::medium::wavenumber;
use crate::nlse::{EnvelopeGrid, PropagationResult};
use crate::scenario::{LinearPlan, Scenario};
use crate::stochastic::{EnsembleMoments, NoiseParameters, NoiseProcess};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Binary,
}

/// What was approximated away in a propagation run.
pub const TRUNCATIONS: &[&str] = &[
    "dispersion truncated after k2 (terms in Omega^m with m > 2 dropped)",
    "local Kerr response (nonlocal kernel replaced by its delta-function limit)",
    "noise coupling taken at the carrier, frequency independent across the band",
    "symmetric-ordering ensemble without third-order noise terms in the Kerr step",
    "backward envelope set to zero",
    "retarded frame tau = t - Re(k1) x; Im(k1) kept as a loss slope",
];

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub scenario_digest: String,
    pub seed: u64,
    pub trajectories: usize,
    pub tool_version: String,
    pub command: String,
    pub truncations: Vec<String>,
    /// Multiply a normalized amplitude by this to get the electric field
    /// amplitude in V/m.
    pub field_unit_v_per_m: f64,
    pub threads: usize,
    pub wall_clock_s: f64,
    pub steps: Vec<usize>,
    pub max_spectral_leakage: Option<f64>,
    pub files: Vec<String>,
}

/// SHA-256 of the scenario text, hex encoded.
pub fn scenario_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Identifier derived from everything that determines the numeric output.
pub fn run_id(digest: &str, seed: u64, trajectories: usize, command: &str) -> String {
    let mut h = Sha256::new();
    h.update(digest.as_bytes());
    h.update(seed.to_le_bytes());
    h.update((trajectories as u64).to_le_bytes());
    h.update(command.as_bytes());
    hex::encode(&h.finalize()[..8])
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, *v);
    }
    out.push('\n');
}

/// CSV with a `# run <id>` line, a header and one row per record.
pub fn csv_table(run: &str, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = format!("# run {run}\n{}\n", header.join(","));
    for r in rows {
        row(&mut out, &r);
    }
    out
}

pub fn snapshot_csv(run: &str, grid: &EnvelopeGrid) -> String {
    csv_table(
        run,
        &["tau_s", "re", "im", "abs2"],
        (0..grid.len()).map(|j| {
            let a = grid.a[j];
            vec![grid.tau(j), a.re, a.im, a.norm_sqr()]
        }),
    )
}

/// Moments table; the first column is `tau` or `Omega` as given.
pub fn moments_csv(run: &str, axis_name: &str, axis: &[f64], m: &EnsembleMoments) -> String {
    csv_table(
        run,
        &[axis_name, "mean_re", "mean_im", "sym_var", "intensity", "stderr"],
        (0..axis.len()).map(|j| {
            vec![
                axis[j],
                m.mean_field[j].re,
                m.mean_field[j].im,
                m.symmetric_variance[j],
                m.intensity_mean[j],
                m.variance_stderr[j],
            ]
        }),
    )
}

/// Little-endian `f64` pairs `(re, im)`.
pub fn interleaved_bytes(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * values.len());
    for z in values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

/// Named file contents, in the order they are produced.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn put(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn json(&mut self, name: String, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.put(name, text.into_bytes());
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file and then `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, manifest: &RunManifest) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::File::create(dir.join(name))?.write_all(bytes)?;
        }
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Run-level information shared by the writers.
pub struct RunContext<'a> {
    pub scenario: &'a Scenario,
    pub digest: String,
    pub threads: usize,
    pub format: Format,
}

impl RunContext<'_> {
    pub fn run_id(&self, command: &str) -> String {
        run_id(&self.digest, self.scenario.seed, self.scenario.trajectories, command)
    }

    pub fn manifest(
        &self,
        command: &str,
        wall: f64,
        steps: Vec<usize>,
        leakage: Option<f64>,
        files: Vec<String>,
    ) -> RunManifest {
        RunManifest {
            run_id: self.run_id(command),
            scenario_digest: self.digest.clone(),
            seed: self.scenario.seed,
            trajectories: self.scenario.trajectories,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            truncations: TRUNCATIONS.iter().map(|s| s.to_string()).collect(),
            field_unit_v_per_m: self.scenario.field_unit(),
            threads: self.threads,
            wall_clock_s: wall,
            steps,
            max_spectral_leakage: leakage,
            files,
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    run_id: &'a str,
    layout: &'static str,
    samples: usize,
    window_s: f64,
    tau0_s: f64,
    x_m: f64,
    trajectory: usize,
    seed: u64,
    omega0_rad_per_s: f64,
    k_phi_per_m: f64,
    field_unit_v_per_m: f64,
}

/// Snapshots and moment tables of a propagation run.
pub fn render_propagation(ctx: &RunContext, result: &PropagationResult) -> Result<Artifacts> {
    let s = ctx.scenario;
    let run = ctx.run_id("propagate");
    let mut w = Artifacts::default();
    for (t, snaps) in result.snapshots.iter().enumerate() {
        for (i, g) in snaps.iter().enumerate() {
            match ctx.format {
                Format::Csv => w.put(format!("traj{t:05}_x{i:03}.csv"), snapshot_csv(&run, g).into_bytes()),
                Format::Binary => {
                    w.put(format!("traj{t:05}_x{i:03}.bin"), interleaved_bytes(&g.a));
                    let side = Sidecar {
                        run_id: &run,
                        layout: "little-endian f64 pairs (re, im), one per time sample",
                        samples: g.len(),
                        window_s: g.window,
                        tau0_s: g.tau(0),
                        x_m: g.x,
                        trajectory: t,
                        seed: s.seed,
                        omega0_rad_per_s: g.carrier.omega0,
                        k_phi_per_m: g.carrier.k_phi,
                        field_unit_v_per_m: s.field_unit(),
                    };
                    w.json(format!("traj{t:05}_x{i:03}.json"), &side)?;
                }
            }
        }
    }
    let axis = EnvelopeGrid::zeros(s.grid.samples, s.grid.window)?;
    let taus = axis.taus();
    let omegas: Vec<f64> = (0..axis.len()).map(|m| axis.mode_frequency(m)).collect();
    for (i, m) in result.moments.iter().enumerate() {
        w.put(format!("moments_x{i:03}.csv"), moments_csv(&run, "tau_s", &taus, &m.time).into_bytes());
        w.put(format!("modes_x{i:03}.csv"), moments_csv(&run, "omega_rad_per_s", &omegas, &m.modes).into_bytes());
    }
    let positions = result.moments.iter().map(|m| vec![m.x, m.leakage]);
    w.put("snapshots.csv".into(), csv_table(&run, &["x_m", "spectral_leakage"], positions).into_bytes());
    Ok(w)
}

pub fn propagation_manifest(ctx: &RunContext, result: &PropagationResult, files: &Artifacts, wall: f64) -> RunManifest {
    ctx.manifest("propagate", wall, result.segment_steps.clone(), Some(result.max_leakage()), files.names())
}

/// Solves every frequency slice of the scenario's linear plan. Slice `i`
/// draws its force from stream `i`; the force correlation is
/// `(nbar + 1/2) delta(x - x') delta(omega - omega')`.
pub fn solve_linear(scenario: &Scenario) -> Result<Vec<FrequencySlice>> {
    let plan = scenario
        .linear
        .ok_or_else(|| Error::Scenario("the scenario has no [linear] section".into()))?;
    let params = NoiseParameters {
        seed: scenario.seed,
        nbar: scenario.noise.map_or(0.0, |n| n.nbar),
        v0: 1.0,
    };
    plan.omegas()
        .into_par_iter()
        .enumerate()
        .map(|(i, omega)| {
            let mut noise = NoiseProcess::new(params, i as u64);
            let mut slice =
                FrequencySlice::sampled(&mut noise, omega, plan.x_min, plan.h_x(), plan.cells, plan.d_omega())?;
            solve_slice(&scenario.medium, scenario.medium.rho(), &mut slice)?;
            Ok(slice)
        })
        .collect()
}

#[derive(Serialize)]
struct LinearMeta {
    run_id: String,
    seed: u64,
    grid: LinearPlan,
    slices: Vec<SliceMeta>,
}

#[derive(Serialize)]
struct SliceMeta {
    file: String,
    omega_rad_per_s: f64,
    k_re_per_m: f64,
    k_im_per_m: f64,
}

/// One table of forward and backward amplitudes per frequency, plus an
/// index with the wavenumbers.
pub fn render_linear(ctx: &RunContext, slices: &[FrequencySlice]) -> Result<Artifacts> {
    let s = ctx.scenario;
    let plan = s.linear.ok_or_else(|| Error::Scenario("the scenario has no [linear] section".into()))?;
    let run = ctx.run_id("linear");
    let mut w = Artifacts::default();
    let mut meta = Vec::with_capacity(slices.len());
    for (i, slice) in slices.iter().enumerate() {
        let name = format!("linear_w{i:05}.csv");
        let table = csv_table(
            &run,
            &["x_m", "re_a_fwd", "im_a_fwd", "re_a_bwd", "im_a_bwd"],
            (0..=slice.cells()).map(|j| {
                vec![slice.x(j), slice.a_fwd[j].re, slice.a_fwd[j].im, slice.a_bwd[j].re, slice.a_bwd[j].im]
            }),
        );
        w.put(name.clone(), table.into_bytes());
        let k = wavenumber(&s.medium, slice.omega)?;
        meta.push(SliceMeta { file: name, omega_rad_per_s: slice.omega, k_re_per_m: k.re, k_im_per_m: k.im });
    }
    w.json("linear.json".into(), &LinearMeta { run_id: run, seed: s.seed, grid: plan, slices: meta })?;
    Ok(w)
}

pub fn linear_manifest(ctx: &RunContext, files: &Artifacts, wall: f64) -> RunManifest {
    let cells = ctx.scenario.linear.map_or(0, |p| p.cells);
    ctx.manifest("linear", wall, vec![cells], None, files.names())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_through_the_csv_format() {
        let table = csv_table("abc", &["a", "b"], vec![vec![0.1, -1.0 / 3.0], vec![1e-300, 6.02e23]].into_iter());
        let mut lines = table.lines();
        assert_eq!(lines.next(), Some("# run abc"));
        assert_eq!(lines.next(), Some("a,b"));
        let parsed: Vec<f64> = lines.flat_map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap())).collect();
        assert_eq!(parsed, vec![0.1, -1.0 / 3.0, 1e-300, 6.02e23]);
    }

    #[test]
    fn binary_layout_is_little_endian_pairs() {
        let bytes = interleaved_bytes(&[Complex64::new(1.5, -2.0)]);
        assert_eq!(bytes.len(), 16);
        assert_eq!(f64::from_le_bytes(bytes[..8].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[8..].try_into().unwrap()), -2.0);
    }

    #[test]
    fn run_ids_depend_on_every_input() {
        let d = scenario_digest("x = 1");
        assert_eq!(d.len(), 64);
        let base = run_id(&d, 1, 10, "propagate");
        assert_eq!(base, run_id(&d, 1, 10, "propagate"));
        assert_ne!(base, run_id(&d, 2, 10, "propagate"));
        assert_ne!(base, run_id(&d, 1, 11, "propagate"));
        assert_ne!(base, run_id(&scenario_digest("x = 2"), 1, 10, "propagate"));
    }
}
