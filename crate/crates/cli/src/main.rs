//! Command-line front end: run presets, re-compare run directories, export spectra.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kuramoto_lab::scenario::{
    compare, export_spectrum, run_scenario_detailed, ConfigOverrides, CouplingKind, Preset, Scenario, ScenarioConfig,
};
use kuramoto_lab::{Error, PerturbationKind, PerturbationSpec};

#[derive(Parser)]
#[command(name = "kuramoto-lab", version, about = "Kuramoto simulation next to its closed-form eigenmode solution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write phases, order parameter, mode contributions, report and manifest.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Replay the exact configuration recorded in a run manifest.
        #[arg(long, conflicts_with_all = ["preset", "config"])]
        manifest: Option<PathBuf>,
        /// Output directory (default: runs/<preset>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the circular error between a run's simulated and analytic phases.
    Compare {
        run_dir: PathBuf,
        /// Simulated phases file (default: <run_dir>/phases_sim.csv).
        #[arg(long)]
        sim: Option<PathBuf>,
        /// Analytic phases file (default: <run_dir>/phases_analytic.csv).
        #[arg(long)]
        analytic: Option<PathBuf>,
        /// RMSE tolerance in rad (default: the one stored in the run manifest).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Write the eigenvalues of K = ε e^{-iφ} A for a scenario's coupling.
    Spectrum {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output CSV (default: spectrum_<preset>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// sync_complete, repulsive, chimera_115, chimera_130, twisted_wave, twisted_perturbed or custom.
    #[arg(long)]
    preset: Option<Preset>,
    /// JSON document with any scenario fields; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// complete, ring, power_law or file.
    #[arg(long)]
    coupling: Option<CouplingKind>,
    #[arg(long)]
    ring_k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    coupling_file: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    twist_q: Option<i64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    dt_out: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kick_time: Option<f64>,
    #[arg(long)]
    kick_amplitude: Option<f64>,
    #[arg(long)]
    kick_seed: Option<u64>,
    /// Mode labels kept in the analytic reconstruction, e.g. 1-10,216-225.
    #[arg(long, value_parser = parse_labels)]
    mode_subset: Option<Vec<usize>>,
    #[arg(long)]
    row_normalize: Option<bool>,
    #[arg(long)]
    lock_tolerance: Option<f64>,
    #[arg(long)]
    lock_window: Option<f64>,
    #[arg(long)]
    rmse_tolerance: Option<f64>,
}

fn parse_labels(text: &str) -> Result<Vec<usize>, String> {
    let mut labels = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"));
        match part.split_once('-') {
            Some((lo, hi)) => labels.extend(parse(lo)?..=parse(hi)?),
            None => labels.push(parse(part)?),
        }
    }
    Ok(labels)
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<Scenario, Error> {
        let file = match &self.config {
            Some(path) => ConfigOverrides::from_json_file(path)?,
            None => ConfigOverrides::default(),
        };
        let mut flags = ConfigOverrides {
            preset: self.preset,
            n: self.n,
            coupling: self.coupling,
            ring_k: self.ring_k,
            alpha: self.alpha,
            coupling_file: self.coupling_file.clone(),
            epsilon: self.epsilon,
            phi: self.phi,
            twist_q: self.twist_q,
            dt: self.dt,
            dt_out: self.dt_out,
            horizon: self.horizon,
            seed: self.seed,
            perturbation: None,
            mode_subset: self.mode_subset.clone(),
            row_normalize: self.row_normalize,
            lock_tolerance: self.lock_tolerance,
            lock_window: self.lock_window,
            rmse_tolerance: self.rmse_tolerance,
        };
        if self.kick_time.is_some() || self.kick_amplitude.is_some() || self.kick_seed.is_some() {
            // individual kick flags edit whatever perturbation the preset or file already defines
            let preset = flags.preset.or(file.preset).unwrap_or(Preset::Custom);
            let base = file.perturbation.clone().or(ScenarioConfig::preset(preset).perturbation);
            let mut kick = base.unwrap_or(PerturbationSpec {
                at_time: 0.0,
                amplitude: 0.0,
                kind: PerturbationKind::UniformAdditive,
                seed: 0,
            });
            kick.at_time = self.kick_time.unwrap_or(kick.at_time);
            kick.amplitude = self.kick_amplitude.unwrap_or(kick.amplitude);
            kick.seed = self.kick_seed.unwrap_or(kick.seed);
            flags.perturbation = Some(kick);
        }
        Scenario::resolve(&file.merged(&flags))
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { scenario, manifest, out } => {
            let scenario = match manifest {
                Some(path) => Scenario::from_manifest(path)?,
                None => scenario.resolve()?,
            };
            let out = out.unwrap_or_else(|| Path::new("runs").join(scenario.config.preset.name()));
            let (record, result) = run_scenario_detailed(&scenario, &out)?;
            let last = result.r_sim.len() - 1;
            println!("preset {} -> {}", record.config.preset, out.display());
            println!("epsilon {} phi {} n {} seed {}", record.config.epsilon, record.config.phi, record.config.n, record.config.seed);
            println!("final R_sim {:.6}  R_analytic {:.6}", result.r_sim[last], result.r_analytic[last]);
            println!(
                "max |R_sim - R_analytic| {:.6}  circular rmse {:.6} rad  ({:.1} s)",
                result.comparison.max_abs_order_param_gap, result.comparison.circular_rmse, record.wall_time
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { run_dir, sim, analytic, tolerance } => {
            let outcome = compare(&run_dir, sim.as_deref(), analytic.as_deref(), tolerance)?;
            println!(
                "max |R_sim - R_analytic| {:.6}  circular rmse {:.6} rad  horizon {} s",
                outcome.report.max_abs_order_param_gap, outcome.report.circular_rmse, outcome.report.horizon
            );
            let verdict = if outcome.passed { "PASS" } else { "FAIL" };
            println!("{verdict}: circular rmse {:.6} < tolerance {}", outcome.report.circular_rmse, outcome.tolerance);
            Ok(if outcome.passed { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Command::Spectrum { scenario, out } => {
            let scenario = scenario.resolve()?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("spectrum_{}.csv", scenario.config.preset)));
            let path = export_spectrum(&scenario.config, &out)?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
