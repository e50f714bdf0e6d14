//! Paper-figure presets, configuration resolution, run directories and manifests.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::{analytic_trajectory_with, spectrum_for, AnalyticSolution};
use crate::dynamics::{
    init_random, init_twisted, instantaneous_frequency, simulate, Integration, PerturbationKind, PerturbationSpec,
    PhaseState, Provenance, Trajectory, DEFAULT_DT, DEFAULT_DT_OUT,
};
use crate::error::{Error, Result};
use crate::observables::{
    circular_error, lock_statistics, order_parameter_trace, ComparisonReport, LockStatistics, DEFAULT_LOCK_TOLERANCE,
    DEFAULT_LOCK_WINDOW,
};
use crate::spectral::{fmt_real, Spectrum};
use crate::topology::{build_complete, build_power_law, build_ring, CouplingMatrix};

pub const TOOL_VERSION: &str = concat!("kuramoto-lab ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_HORIZON: f64 = 20.0;
pub const DEFAULT_RMSE_TOLERANCE: f64 = 0.1;

/// Chimera presets: power-law exponent and coupling strength from the coexistence sweep.
pub const CHIMERA_ALPHA: f64 = 1.0;
pub const CHIMERA_EPSILON: f64 = 1.0;
/// Chimera presets: lock tolerance (rad/s) separating the coherent group from drifting oscillators.
pub const CHIMERA_LOCK_TOLERANCE: f64 = 5.0;
/// Smallest swept kick amplitude (multiples of π/4) that takes the twisted ring to synchrony
/// by t = 10 s, with the first kick seed that does so. Smaller kicks relax back to the
/// (stable) twisted state.
pub const TWISTED_KICK_AMPLITUDE: f64 = 3.0 * std::f64::consts::FRAC_PI_4;
pub const TWISTED_KICK_SEED: u64 = 3;
pub const TWISTED_KICK_TIME: f64 = 2.0;

pub const PHASES_SIM: &str = "phases_sim.csv";
pub const PHASES_ANALYTIC: &str = "phases_analytic.csv";
pub const ORDER_PARAM: &str = "order_param.csv";
pub const MODES_LOG10: &str = "modes_log10.csv";
pub const REPORT: &str = "report.json";
pub const MANIFEST: &str = "manifest.json";
pub const COMPARISON: &str = "comparison.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "sync_complete")]
    SyncComplete,
    #[serde(rename = "repulsive")]
    Repulsive,
    #[serde(rename = "chimera_115")]
    Chimera115,
    #[serde(rename = "chimera_130")]
    Chimera130,
    #[serde(rename = "twisted_wave")]
    TwistedWave,
    #[serde(rename = "twisted_perturbed")]
    TwistedPerturbed,
    #[serde(rename = "custom")]
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::SyncComplete,
        Preset::Repulsive,
        Preset::Chimera115,
        Preset::Chimera130,
        Preset::TwistedWave,
        Preset::TwistedPerturbed,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SyncComplete => "sync_complete",
            Preset::Repulsive => "repulsive",
            Preset::Chimera115 => "chimera_115",
            Preset::Chimera130 => "chimera_130",
            Preset::TwistedWave => "twisted_wave",
            Preset::TwistedPerturbed => "twisted_perturbed",
            Preset::Custom => "custom",
        }
    }

    /// Whether ε defaults to the unit growth-rate-gap rule.
    fn gap_calibrated(self) -> bool {
        !matches!(self, Preset::Chimera115 | Preset::Chimera130)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Complete,
    Ring,
    PowerLaw,
    /// Dense matrix loaded from `coupling_file`.
    File,
}

impl FromStr for CouplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(CouplingKind::Complete),
            "ring" => Ok(CouplingKind::Ring),
            "power_law" => Ok(CouplingKind::PowerLaw),
            "file" => Ok(CouplingKind::File),
            _ => Err(Error::InvalidParameter(format!("unknown coupling `{s}`"))),
        }
    }
}

/// A fully resolved scenario. Written verbatim into every run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Preset,
    pub n: usize,
    pub coupling: CouplingKind,
    pub ring_k: Option<usize>,
    pub alpha: Option<f64>,
    pub coupling_file: Option<PathBuf>,
    pub epsilon: f64,
    pub phi: f64,
    pub twist_q: Option<i64>,
    pub dt: f64,
    pub dt_out: f64,
    pub horizon: f64,
    pub seed: u64,
    pub perturbation: Option<PerturbationSpec>,
    pub mode_subset: Option<Vec<usize>>,
    pub row_normalize: bool,
    pub lock_tolerance: f64,
    pub lock_window: f64,
    pub rmse_tolerance: f64,
}

/// Partial configuration: the JSON config file and the command-line flags both parse into
/// this and are layered over the preset defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub preset: Option<Preset>,
    pub n: Option<usize>,
    pub coupling: Option<CouplingKind>,
    pub ring_k: Option<usize>,
    pub alpha: Option<f64>,
    pub coupling_file: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub phi: Option<f64>,
    pub twist_q: Option<i64>,
    pub dt: Option<f64>,
    pub dt_out: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub perturbation: Option<PerturbationSpec>,
    pub mode_subset: Option<Vec<usize>>,
    pub row_normalize: Option<bool>,
    pub lock_tolerance: Option<f64>,
    pub lock_window: Option<f64>,
    pub rmse_tolerance: Option<f64>,
}

macro_rules! layer {
    ($dst:ident, $src:ident; $($field:ident),*) => {
        $(if $src.$field.is_some() { $dst.$field = $src.$field.clone(); })*
    };
}

impl ConfigOverrides {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
    }

    /// `other` wins wherever it sets a field.
    pub fn merged(mut self, other: &ConfigOverrides) -> ConfigOverrides {
        layer!(self, other; preset, n, coupling, ring_k, alpha, coupling_file, epsilon, phi, twist_q, dt, dt_out,
            horizon, seed, perturbation, mode_subset, row_normalize, lock_tolerance, lock_window, rmse_tolerance);
        self
    }
}

/// A resolved configuration together with the values chosen by calibration rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub calibrated: BTreeMap<String, Value>,
}

impl ScenarioConfig {
    /// Preset defaults; ε is left at 1 for gap-calibrated presets until [`Scenario::resolve`].
    pub fn preset(preset: Preset) -> ScenarioConfig {
        let base = ScenarioConfig {
            preset,
            n: 50,
            coupling: CouplingKind::Complete,
            ring_k: None,
            alpha: None,
            coupling_file: None,
            epsilon: 1.0,
            phi: 0.0,
            twist_q: None,
            dt: DEFAULT_DT,
            dt_out: DEFAULT_DT_OUT,
            horizon: DEFAULT_HORIZON,
            seed: 1,
            perturbation: None,
            mode_subset: None,
            row_normalize: false,
            lock_tolerance: DEFAULT_LOCK_TOLERANCE,
            lock_window: DEFAULT_LOCK_WINDOW,
            rmse_tolerance: DEFAULT_RMSE_TOLERANCE,
        };
        match preset {
            Preset::SyncComplete => ScenarioConfig { rmse_tolerance: 0.05, ..base },
            Preset::Repulsive => ScenarioConfig { phi: std::f64::consts::FRAC_PI_2, ..base },
            Preset::Chimera115 | Preset::Chimera130 => ScenarioConfig {
                n: 225,
                coupling: CouplingKind::PowerLaw,
                alpha: Some(CHIMERA_ALPHA),
                epsilon: CHIMERA_EPSILON,
                phi: if preset == Preset::Chimera115 { 1.15 } else { 1.30 },
                lock_tolerance: CHIMERA_LOCK_TOLERANCE,
                ..base
            },
            Preset::TwistedWave | Preset::TwistedPerturbed => ScenarioConfig {
                n: 100,
                coupling: CouplingKind::Ring,
                ring_k: Some(1),
                twist_q: Some(1),
                perturbation: (preset == Preset::TwistedPerturbed).then_some(PerturbationSpec {
                    at_time: TWISTED_KICK_TIME,
                    amplitude: TWISTED_KICK_AMPLITUDE,
                    kind: PerturbationKind::UniformAdditive,
                    seed: TWISTED_KICK_SEED,
                }),
                ..base
            },
            Preset::Custom => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 {
            return Err(Error::InvalidSize("n must be positive".into()));
        }
        for (name, v) in [("epsilon", self.epsilon), ("dt", self.dt), ("dt_out", self.dt_out), ("horizon", self.horizon)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if !self.phi.is_finite() {
            return bad(format!("phi must be finite, got {}", self.phi));
        }
        if self.lock_tolerance.is_nan() || self.lock_tolerance < 0.0 {
            return bad(format!("lock_tolerance must be non-negative, got {}", self.lock_tolerance));
        }
        if !(self.lock_window > 0.0 && self.lock_window <= self.horizon * (1.0 + 1e-9)) {
            return bad(format!("lock_window must lie in (0, horizon], got {}", self.lock_window));
        }
        if !(self.rmse_tolerance > 0.0) {
            return bad(format!("rmse_tolerance must be positive, got {}", self.rmse_tolerance));
        }
        match self.coupling {
            CouplingKind::Ring if self.ring_k.is_none() => return bad("ring coupling needs ring_k".into()),
            CouplingKind::PowerLaw if self.alpha.is_none() => return bad("power_law coupling needs alpha".into()),
            CouplingKind::File if self.coupling_file.is_none() => return bad("file coupling needs coupling_file".into()),
            _ => {}
        }
        if let Some(labels) = &self.mode_subset {
            if labels.is_empty() || labels.iter().any(|&l| l == 0 || l > self.n) {
                return bad(format!("mode_subset labels must lie in 1..={}", self.n));
            }
        }
        if let Some(p) = &self.perturbation {
            if !(p.at_time >= 0.0 && p.at_time <= self.horizon) {
                return bad(format!("perturbation time {} outside [0, {}]", p.at_time, self.horizon));
            }
            if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
                return bad(format!("perturbation amplitude must be finite and non-negative, got {}", p.amplitude));
            }
        }
        Ok(())
    }

    pub fn build_coupling(&self) -> Result<CouplingMatrix<f64>> {
        let a = match self.coupling {
            CouplingKind::Complete => build_complete(self.n)?,
            CouplingKind::Ring => build_ring(self.n, self.ring_k.unwrap_or(1))?,
            CouplingKind::PowerLaw => build_power_law(self.n, self.alpha.unwrap_or(CHIMERA_ALPHA))?,
            CouplingKind::File => {
                let path = self.coupling_file.as_deref().ok_or_else(|| Error::InvalidParameter("coupling_file missing".into()))?;
                let a = CouplingMatrix::read_csv(path)?.with_detected_circulant();
                if a.size() != self.n {
                    return Err(Error::InvalidSize(format!("coupling file has {} rows, n = {}", a.size(), self.n)));
                }
                a
            }
        };
        Ok(if self.row_normalize { a.row_normalized() } else { a })
    }

    pub fn initial_state(&self) -> Result<PhaseState<f64>> {
        match self.twist_q {
            Some(q) => init_twisted(self.n, q),
            None => Ok(init_random(self.n, self.seed)),
        }
    }

    pub fn integration(&self) -> Integration {
        Integration { horizon: self.horizon, dt: self.dt, dt_out: self.dt_out }
    }
}

/// ε giving a unit gap `Re(λ_1) − max_{k≥2} Re(λ_k)` between the two fastest-growing modes at φ = 0.
pub fn unit_gap_epsilon(a: &CouplingMatrix<f64>) -> Result<f64> {
    let spec = spectrum_for(a, 1.0, 0.0)?;
    let mut re: Vec<f64> = spec.eigenvalues().iter().map(|l| l.re).collect();
    re.sort_by(|x, y| y.total_cmp(x));
    let gap = match re.as_slice() {
        [first, second, ..] => first - second,
        _ => 0.0,
    };
    if !(gap > 1e-12) {
        return Err(Error::InvalidParameter(format!("no growth-rate gap to calibrate ε against (gap = {gap:e})")));
    }
    Ok(1.0 / gap)
}

impl Scenario {
    /// Preset defaults, then the config file, then command-line flags; finally the calibration
    /// rules fill in whatever was not set explicitly.
    pub fn resolve(layers: &ConfigOverrides) -> Result<Scenario> {
        let preset = layers
            .preset
            .ok_or_else(|| Error::InvalidParameter("no preset given (flag or config file)".into()))?;
        let mut config = ScenarioConfig::preset(preset);
        let epsilon_given = layers.epsilon.is_some();
        layer_config(&mut config, layers);
        config.validate()?;
        let mut calibrated = BTreeMap::new();
        if preset.gap_calibrated() && !epsilon_given {
            config.epsilon = unit_gap_epsilon(&config.build_coupling()?)?;
            calibrated.insert("epsilon".into(), json!(config.epsilon));
            calibrated.insert("epsilon_rule".into(), json!("unit growth-rate gap Re(λ1) − max Re(λk≥2) at φ = 0"));
        }
        if matches!(preset, Preset::Chimera115 | Preset::Chimera130) {
            calibrated.insert("alpha".into(), json!(config.alpha));
            calibrated.insert("epsilon".into(), json!(config.epsilon));
            calibrated.insert("lock_tolerance".into(), json!(config.lock_tolerance));
        }
        if let Some(p) = &config.perturbation {
            calibrated.insert("perturbation_amplitude".into(), json!(p.amplitude));
            calibrated.insert("perturbation_time_on_step_grid".into(), json!(p.snapped(0.0, config.dt).at_time));
        }
        calibrated.insert("horizon".into(), json!(config.horizon));
        Ok(Scenario { config, calibrated })
    }

    /// Re-creates a scenario exactly as recorded in a manifest.
    pub fn from_manifest(path: impl AsRef<Path>) -> Result<Scenario> {
        let record = RunRecord::load(path)?;
        record.config.validate()?;
        Ok(Scenario { config: record.config, calibrated: record.calibrated_values })
    }
}

fn layer_config(dst: &mut ScenarioConfig, src: &ConfigOverrides) {
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = &src.$field { dst.$field = v.clone(); })* };
    }
    macro_rules! set_opt {
        ($($field:ident),*) => { $(if src.$field.is_some() { dst.$field = src.$field.clone(); })* };
    }
    set!(n, coupling, epsilon, phi, dt, dt_out, horizon, seed, row_normalize, lock_tolerance, lock_window, rmse_tolerance);
    set_opt!(ring_k, alpha, coupling_file, twist_q, perturbation, mode_subset);
    if let Some(p) = src.preset {
        dst.preset = p;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub tool_version: String,
    pub output_paths: Vec<String>,
    pub calibrated_values: BTreeMap<String, Value>,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn load(path: impl AsRef<Path>) -> Result<RunRecord> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
    }
}

/// Everything a run computes before anything touches the disk.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub coupling: CouplingMatrix<f64>,
    pub simulated: Trajectory<f64>,
    pub analytic: AnalyticSolution<f64>,
    pub r_sim: Vec<f64>,
    pub r_analytic: Vec<f64>,
    pub comparison: ComparisonReport,
    pub locking: LockStatistics,
    /// Instantaneous frequencies of the simulated trajectory, one row per sample.
    pub frequencies: Vec<Vec<f64>>,
}

/// Runs the simulated path, the analytic path and the observables.
pub fn evaluate(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let coupling = config.build_coupling()?;
    let state0 = config.initial_state()?;
    let kick = config.perturbation.as_ref().map(|p| p.snapped(state0.time, config.dt));
    let simulated = simulate(&coupling, config.epsilon, config.phi, &state0, config.integration(), kick.as_ref())?;
    let spectrum: Spectrum<f64> = spectrum_for(&coupling, config.epsilon, config.phi)?;
    let analytic = analytic_trajectory_with(
        &spectrum,
        &state0,
        config.horizon,
        config.dt_out,
        kick.as_ref(),
        config.mode_subset.as_deref(),
    )?;
    let frequencies: Vec<Vec<f64>> = (0..simulated.len())
        .map(|i| instantaneous_frequency(&simulated.state(i), &coupling, config.epsilon, config.phi))
        .collect();
    let locking = lock_statistics(&simulated.sample_times, &frequencies, config.lock_tolerance, config.lock_window)?;
    Ok(ScenarioResult {
        r_sim: order_parameter_trace(&simulated),
        r_analytic: order_parameter_trace(&analytic.trajectory),
        comparison: circular_error(&simulated, &analytic.trajectory)?,
        coupling,
        simulated,
        analytic,
        locking,
        frequencies,
    })
}

fn report_json(config: &ScenarioConfig, result: &ScenarioResult) -> Value {
    let last = result.r_sim.len() - 1;
    json!({
        "preset": config.preset,
        "n": config.n,
        "epsilon": config.epsilon,
        "phi": config.phi,
        "seed": config.seed,
        "spectrum_source": result.analytic.spectrum.source(),
        "max_abs_order_param_gap": result.comparison.max_abs_order_param_gap,
        "circular_rmse": result.comparison.circular_rmse,
        "per_time_rmse": result.comparison.per_time_rmse,
        "horizon": result.comparison.horizon,
        "rmse_tolerance": config.rmse_tolerance,
        "passed": result.comparison.circular_rmse < config.rmse_tolerance,
        "final_r_sim": result.r_sim[last],
        "final_r_analytic": result.r_analytic[last],
        "dominant_mode_initial": result.analytic.modes.dominant_mode(0),
        "dominant_mode_final": result.analytic.modes.dominant_mode(last),
        "lock_tolerance": result.locking.tolerance,
        "lock_window": result.locking.window,
        "locked_fraction": result.locking.windows.iter().map(|w| w.locked_fraction).collect::<Vec<_>>(),
    })
}

fn write_order_parameter(path: &Path, times: &[f64], r_sim: &[f64], r_analytic: &[f64]) -> Result<()> {
    let mut out = String::from("time_s,R_sim,R_analytic\n");
    for ((t, a), b) in times.iter().zip(r_sim).zip(r_analytic) {
        out.push_str(&format!("{},{},{}\n", fmt_real(*t), fmt_real(*a), fmt_real(*b)));
    }
    write_text(path, &out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Runs a scenario and writes its outputs into `out_dir`. On failure nothing is left behind.
pub fn run_scenario(scenario: &Scenario, out_dir: impl AsRef<Path>) -> Result<RunRecord> {
    run_scenario_detailed(scenario, out_dir).map(|(record, _)| record)
}

/// [`run_scenario`], also handing back the in-memory results.
pub fn run_scenario_detailed(scenario: &Scenario, out_dir: impl AsRef<Path>) -> Result<(RunRecord, ScenarioResult)> {
    let started = Instant::now();
    let out_dir = out_dir.as_ref();
    let config = &scenario.config;
    let result = evaluate(config)?;

    let created_dir = !out_dir.exists();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let outcome = (|| -> Result<RunRecord> {
        let mut emit = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
            let path = out_dir.join(name);
            written.push(path.clone());
            f(&path)
        };
        emit(PHASES_SIM, &|p| result.simulated.write_csv(p))?;
        emit(PHASES_ANALYTIC, &|p| result.analytic.trajectory.write_csv(p))?;
        emit(ORDER_PARAM, &|p| write_order_parameter(p, &result.simulated.sample_times, &result.r_sim, &result.r_analytic))?;
        emit(MODES_LOG10, &|p| result.analytic.modes.write_csv(p))?;
        emit(REPORT, &|p| write_json(p, &report_json(config, &result)))?;
        let record = RunRecord {
            config: config.clone(),
            tool_version: TOOL_VERSION.into(),
            output_paths: [PHASES_SIM, PHASES_ANALYTIC, ORDER_PARAM, MODES_LOG10, REPORT, MANIFEST]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            calibrated_values: scenario.calibrated.clone(),
            wall_time: started.elapsed().as_secs_f64(),
        };
        emit(MANIFEST, &|p| write_json(p, &record))?;
        Ok(record)
    })();
    if outcome.is_err() {
        for path in &written {
            let _ = std::fs::remove_file(path);
        }
        if created_dir {
            let _ = std::fs::remove_dir(out_dir);
        }
    }
    outcome.map(|record| (record, result))
}

/// Result of re-comparing a run directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareOutcome {
    pub report: ComparisonReport,
    pub tolerance: f64,
    pub passed: bool,
    pub preset: Option<Preset>,
}

/// Recomputes the circular error between the two trajectories of a run. The files default to
/// the run directory's own outputs and the tolerance to the one stored in its manifest.
pub fn compare(
    run_dir: impl AsRef<Path>,
    simulated: Option<&Path>,
    analytic: Option<&Path>,
    tolerance: Option<f64>,
) -> Result<CompareOutcome> {
    let run_dir = run_dir.as_ref();
    let sim_path = simulated.map_or_else(|| run_dir.join(PHASES_SIM), Path::to_path_buf);
    let ana_path = analytic.map_or_else(|| run_dir.join(PHASES_ANALYTIC), Path::to_path_buf);
    let manifest = run_dir.join(MANIFEST);
    let record = if manifest.is_file() { Some(RunRecord::load(&manifest)?) } else { None };
    let tolerance = tolerance
        .or(record.as_ref().map(|r| r.config.rmse_tolerance))
        .unwrap_or(DEFAULT_RMSE_TOLERANCE);
    let a = Trajectory::<f64>::read_csv(&sim_path, Provenance::Simulated)?;
    let b = Trajectory::<f64>::read_csv(&ana_path, Provenance::Analytic)?;
    let report = circular_error(&a, &b)?;
    let outcome = CompareOutcome {
        passed: report.circular_rmse < tolerance,
        report,
        tolerance,
        preset: record.map(|r| r.config.preset),
    };
    if run_dir.is_dir() {
        write_json(&run_dir.join(COMPARISON), &outcome)?;
    }
    Ok(outcome)
}

/// Writes `mode_label,re_lambda,im_lambda,spatial_frequency` for the configured coupling, ε and φ.
pub fn export_spectrum(config: &ScenarioConfig, path: impl AsRef<Path>) -> Result<PathBuf> {
    config.validate()?;
    let spec = spectrum_for(&config.build_coupling()?, config.epsilon, config.phi)?;
    let path = path.as_ref();
    spec.write_csv(path)?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(preset: Preset) -> Scenario {
        Scenario::resolve(&ConfigOverrides { preset: Some(preset), ..Default::default() }).unwrap()
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert_eq!(serde_json::to_value(p).unwrap(), json!(p.name()));
        }
        assert!("chimera".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_defaults() {
        let s = resolve(Preset::SyncComplete);
        assert_eq!((s.config.n, s.config.phi), (50, 0.0));
        assert!((s.config.epsilon - 0.02).abs() < 1e-12);
        let c = resolve(Preset::Chimera130).config;
        assert_eq!((c.n, c.coupling, c.phi), (225, CouplingKind::PowerLaw, 1.30));
        let t = resolve(Preset::TwistedPerturbed).config;
        assert_eq!((t.n, t.ring_k, t.twist_q), (100, Some(1), Some(1)));
        assert_eq!(t.perturbation.unwrap().at_time, 2.0);
        assert!(resolve(Preset::TwistedWave).config.perturbation.is_none());
        assert_eq!(resolve(Preset::Repulsive).config.phi, std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn layering_order_and_explicit_epsilon() {
        let file = ConfigOverrides { preset: Some(Preset::SyncComplete), n: Some(20), epsilon: Some(0.5), ..Default::default() };
        let flags = ConfigOverrides { n: Some(30), ..Default::default() };
        let s = Scenario::resolve(&file.merged(&flags)).unwrap();
        assert_eq!(s.config.n, 30);
        assert_eq!(s.config.epsilon, 0.5);
        assert!(!s.calibrated.contains_key("epsilon_rule"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigOverrides>(r#"{"preset":"custom","gamma":1}"#).is_err());
        assert!(serde_json::from_str::<ConfigOverrides>(r#"{"preset":"custom","n":8}"#).is_ok());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ScenarioConfig::preset(Preset::Custom);
        c.dt = -1.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::preset(Preset::Custom);
        c.mode_subset = Some(vec![0]);
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::preset(Preset::Custom);
        c.coupling = CouplingKind::Ring;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        assert!(Scenario::resolve(&ConfigOverrides::default()).is_err());
    }

    #[test]
    fn unit_gap_rule() {
        assert!((unit_gap_epsilon(&build_complete(50).unwrap()).unwrap() - 0.02).abs() < 1e-12);
        let ring = unit_gap_epsilon(&build_ring(100, 1).unwrap()).unwrap();
        let expected = 1.0 / (2.0 * (1.0 - (std::f64::consts::TAU / 100.0).cos()));
        assert!((ring / expected - 1.0).abs() < 1e-9);
    }
}
