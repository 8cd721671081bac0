//! `qpulse`: run scenarios, tabulate the medium and the Kerr kernel, and run
//! the oracle suite.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qpulse_core::medium::{permittivity, refractive_index, wavenumber};
use qpulse_core::nlse::{kernel_gh, propagate, KernelMode};
use qpulse_core::output::{
    csv_table, linear_manifest, propagation_manifest, render_linear, render_propagation, scenario_digest, solve_linear,
    Format, RunContext,
};
use qpulse_core::scenario::{parse_scenario, Scenario};
use qpulse_core::verify::{format_table, run_suite, Effort};

#[derive(Parser)]
#[command(name = "qpulse", version, about = "Stochastic propagation of quantized light pulses in dispersive media")]
struct Cli {
    /// Worker threads for the trajectory ensemble (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate eps, k and n of the scenario's medium.
    Medium {
        #[arg(long)]
        scenario: PathBuf,
        /// `omega_start,omega_end,points` in rad/s.
        #[arg(long, value_parser = parse_range)]
        eval: Range,
    },
    /// Linear field of the Langevin force on the scenario's frequency grid.
    Linear(RunArgs),
    /// Tabulate the nonlocal Kerr kernel in leading and full mode.
    Kernel {
        #[arg(long)]
        scenario: PathBuf,
        /// `dx_start,dx_end,points` in metres.
        #[arg(long, value_parser = parse_range)]
        dx_range: Range,
    },
    /// Run the stochastic envelope equation over the scenario.
    Propagate(RunArgs),
    /// Run the analytic-oracle suite.
    Verify {
        /// Smaller ensembles, same thresholds.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "qpulse-out")]
    out: PathBuf,
    /// Replaces the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the scenario trajectory count.
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

#[derive(Clone, Copy, Debug)]
struct Range {
    start: f64,
    end: f64,
    points: usize,
}

impl Range {
    fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + i as f64 * step).collect()
    }
}

fn parse_range(text: &str) -> Result<Range, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b, n] = parts[..] else {
        return Err("expected start,end,points".into());
    };
    let start = a.parse::<f64>().map_err(|e| format!("start: {e}"))?;
    let end = b.parse::<f64>().map_err(|e| format!("end: {e}"))?;
    let points = n.parse::<usize>().map_err(|e| format!("points: {e}"))?;
    if points == 0 || !start.is_finite() || !end.is_finite() {
        return Err("need finite bounds and at least one point".into());
    }
    Ok(Range { start, end, points })
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load(path: &Path) -> CliResult<(String, Scenario)> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let scenario = parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((text, scenario))
}

fn print(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn medium_table(scenario: &Path, range: Range) -> CliResult<()> {
    let (text, s) = load(scenario)?;
    let rows = range
        .values()
        .into_iter()
        .map(|w| {
            let eps = permittivity(&s.medium, w)?;
            let k = wavenumber(&s.medium, w)?;
            let n = refractive_index(&s.medium, w)?;
            Ok(vec![w, eps.re, eps.im, k.re, k.im, n.re, n.im])
        })
        .collect::<qpulse_core::Result<Vec<_>>>()?;
    print(&csv_table(
        &scenario_digest(&text)[..16],
        &["omega_rad_per_s", "eps_r", "eps_i", "k_r_per_m", "k_i_per_m", "n_r", "n_i"],
        rows.into_iter(),
    ))
}

fn kernel_table(scenario: &Path, range: Range) -> CliResult<()> {
    let (text, s) = load(scenario)?;
    let rows = range
        .values()
        .into_iter()
        .map(|dx| {
            let l = kernel_gh(&s.medium, &s.expansion, dx, KernelMode::Leading)?;
            let f = kernel_gh(&s.medium, &s.expansion, dx, KernelMode::Full)?;
            Ok(vec![dx, l.re, l.im, f.re, f.im])
        })
        .collect::<qpulse_core::Result<Vec<_>>>()?;
    print(&csv_table(
        &scenario_digest(&text)[..16],
        &["dx_m", "leading_re", "leading_im", "full_re", "full_im"],
        rows.into_iter(),
    ))
}

fn run_linear(args: &RunArgs) -> CliResult<()> {
    let start = Instant::now();
    let (text, mut s) = load(&args.scenario)?;
    s.override_run(args.seed, args.trajectories)?;
    let ctx = context(&text, &s, args.format);
    let slices = solve_linear(&s)?;
    let files = render_linear(&ctx, &slices)?;
    let manifest = linear_manifest(&ctx, &files, start.elapsed().as_secs_f64());
    files.write(&args.out, &manifest)?;
    eprintln!("wrote {} files to {} (run {})", files.files.len() + 1, args.out.display(), manifest.run_id);
    Ok(())
}

fn run_propagate(args: &RunArgs) -> CliResult<()> {
    let start = Instant::now();
    let (text, mut s) = load(&args.scenario)?;
    s.override_run(args.seed, args.trajectories)?;
    let ctx = context(&text, &s, args.format);
    let result = propagate(&s)?;
    let files = render_propagation(&ctx, &result)?;
    let manifest = propagation_manifest(&ctx, &result, &files, start.elapsed().as_secs_f64());
    files.write(&args.out, &manifest)?;
    eprintln!(
        "{} trajectories, {} steps, spectral leakage {:.2e}; wrote {} files to {} (run {})",
        s.trajectories,
        result.total_steps(),
        result.max_leakage(),
        files.files.len() + 1,
        args.out.display(),
        manifest.run_id
    );
    Ok(())
}

fn context<'a>(text: &str, s: &'a Scenario, format: FormatArg) -> RunContext<'a> {
    RunContext {
        scenario: s,
        digest: scenario_digest(text),
        threads: rayon::current_num_threads(),
        format: match format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Binary => Format::Binary,
        },
    }
}

/// Returns whether every check passed.
fn run_verify(quick: bool) -> CliResult<bool> {
    let outcomes = run_suite(if quick { Effort::Quick } else { Effort::Full });
    print(&format_table(&outcomes))?;
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Medium { scenario, eval } => medium_table(scenario, *eval).map(|_| true),
        Command::Kernel { scenario, dx_range } => kernel_table(scenario, *dx_range).map(|_| true),
        Command::Linear(args) => run_linear(args).map(|_| true),
        Command::Propagate(args) => run_propagate(args).map(|_| true),
        Command::Verify { quick } => run_verify(*quick),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
