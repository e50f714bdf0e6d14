//! The nonlinear phase-lagged Kuramoto model
//! `θ̇_i = ω + ε·Σ_j A_ij·sin(θ_j − θ_i − φ)`, integrated with fixed-step classic RK4.
//!
//! Phases are integrated unwrapped; wrapping into (−π, π] happens only in output views.

use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{wrap_angle, Real, C};
use crate::spectral::fmt_real;
use crate::topology::CouplingMatrix;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_DT_OUT: f64 = 1e-2;

/// Relative slack when checking that time grids line up.
const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<T> {
    pub time: T,
    /// Unwrapped phases in radians.
    pub phases: Vec<T>,
    /// Common natural frequency (rad/s); zero in the rotating frame.
    pub omega: T,
}

impl<T: Real> PhaseState<T> {
    pub fn new(phases: Vec<T>) -> Self {
        Self { time: T::zero(), phases, omega: T::zero() }
    }

    pub fn with_omega(mut self, omega: T) -> Self {
        self.omega = omega;
        self
    }

    pub fn size(&self) -> usize {
        self.phases.len()
    }

    /// Phases mapped into (−π, π].
    pub fn wrapped(&self) -> Vec<T> {
        self.phases.iter().map(|&p| wrap_angle(p)).collect()
    }

    /// `x_j = e^{iθ_j}`.
    pub fn phasors(&self) -> Vec<C<T>> {
        self.phases.iter().map(|&p| crate::real::unit_phasor(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// i.i.d. kicks uniform on `[−p, p]`.
    #[default]
    UniformAdditive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub at_time: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub kind: PerturbationKind,
    pub seed: u64,
}

impl PerturbationSpec {
    /// The kick vector for `n` oscillators; identical for identical specs.
    pub fn kicks<T: Real>(&self, n: usize) -> Vec<T> {
        match self.kind {
            PerturbationKind::UniformAdditive => {
                if self.amplitude == 0.0 {
                    return vec![T::zero(); n];
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let dist = Uniform::new_inclusive(-self.amplitude, self.amplitude);
                (0..n).map(|_| T::of(dist.sample(&mut rng))).collect()
            }
        }
    }

    /// Index of the first integrator step at or after `at_time`.
    pub fn kick_step(&self, t0: f64, dt: f64) -> usize {
        ((self.at_time - t0) / dt * (1.0 - GRID_TOLERANCE)).ceil().max(0.0) as usize
    }

    /// The same event moved onto the integrator's step grid, where the simulator applies it.
    pub fn snapped(&self, t0: f64, dt: f64) -> PerturbationSpec {
        PerturbationSpec { at_time: t0 + self.kick_step(t0, dt) as f64 * dt, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() || self.amplitude < 0.0 || !self.at_time.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "perturbation needs a finite time and a finite non-negative amplitude, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simulated,
    Analytic,
}

/// Phases sampled on a uniform output grid, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub sample_times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub provenance: Provenance,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    pub fn oscillators(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn state(&self, idx: usize) -> PhaseState<T> {
        PhaseState { time: self.sample_times[idx], phases: self.states[idx].clone(), omega: T::zero() }
    }

    pub fn last_state(&self) -> PhaseState<T> {
        self.state(self.len() - 1)
    }

    /// `time_s,theta_0,…,theta_{N−1}` with wrapped phases and 17 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let n = self.oscillators();
        let mut out = String::from("time_s");
        for i in 0..n {
            out.push_str(&format!(",theta_{i}"));
        }
        out.push('\n');
        for (t, row) in self.sample_times.iter().zip(&self.states) {
            out.push_str(&fmt_real(t.to_f64_lossy()));
            for &p in row {
                out.push(',');
                out.push_str(&fmt_real(wrap_angle(p).to_f64_lossy()));
            }
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>, provenance: Provenance) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path)?;
        let parse_err = |message: String| Error::Parse { path: path.into(), message };
        let header = reader.headers()?.clone();
        if header.get(0) != Some("time_s") {
            return Err(parse_err("first column must be time_s".into()));
        }
        let mut sample_times = Vec::new();
        let mut states = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let mut fields = record.iter().map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|e| parse_err(format!("data row {}: {e}", row + 1)))
            });
            sample_times.push(fields.next().ok_or_else(|| parse_err("empty row".into()))??);
            states.push(fields.collect::<Result<Vec<T>>>()?);
        }
        Ok(Self { sample_times, states, provenance })
    }
}

/// Uniform random phases on [−π, π], reproducible per seed.
pub fn init_random<T: Real>(n: usize, seed: u64) -> PhaseState<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-std::f64::consts::PI, std::f64::consts::PI);
    PhaseState::new((0..n).map(|_| T::of(dist.sample(&mut rng))).collect())
}

/// The `q`-twisted state `θ_j = 2π·q·j/N`.
pub fn init_twisted<T: Real>(n: usize, q: i64) -> Result<PhaseState<T>> {
    if n == 0 || 2 * q.unsigned_abs() >= n as u64 {
        return Err(Error::Aliasing { n, q });
    }
    let phases = (0..n)
        .map(|j| {
            let r = (q * j as i64).rem_euclid(n as i64) as usize;
            T::TAU() * T::of_usize(r) / T::of_usize(n)
        })
        .collect();
    Ok(PhaseState::new(phases))
}

/// Adds the spec's kicks; time is unchanged.
pub fn apply_perturbation<T: Real>(state: &PhaseState<T>, spec: &PerturbationSpec) -> PhaseState<T> {
    let kicks = spec.kicks::<T>(state.size());
    let phases = state.phases.iter().zip(&kicks).map(|(&p, &k)| p + k).collect();
    PhaseState { time: state.time, phases, omega: state.omega }
}

/// Right-hand side of the phase equation.
struct PhaseField<'a, T> {
    coupling: &'a CouplingMatrix<T>,
    factor: C<T>,
    omega: T,
    /// Non-zero columns per row when the coupling is sparse enough to pay off.
    sparse_rows: Option<Vec<Vec<(usize, T)>>>,
}

impl<'a, T: Real> PhaseField<'a, T> {
    fn new(coupling: &'a CouplingMatrix<T>, epsilon: T, phi: T, omega: T) -> Self {
        let n = coupling.size();
        let nnz = coupling.weights().iter().filter(|w| !w.is_zero()).count();
        let sparse_rows = (4 * nnz < n * n).then(|| {
            (0..n)
                .map(|i| {
                    coupling
                        .row(i)
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| !w.is_zero())
                        .map(|(j, &w)| (j, w))
                        .collect()
                })
                .collect()
        });
        Self { coupling, factor: Complex::from_polar(epsilon, -phi), omega, sparse_rows }
    }

    /// `Σ_j A_ij·sin(θ_j − θ_i − φ) = Im(e^{−iφ}·e^{−iθ_i}·Σ_j A_ij·e^{iθ_j})`, summed in
    /// ascending `j`.
    fn eval(&self, theta: &[T], phasors: &mut [C<T>], out: &mut [T]) {
        for (z, &t) in phasors.iter_mut().zip(theta) {
            let (s, c) = t.sin_cos();
            *z = Complex::new(c, s);
        }
        let n = theta.len();
        for i in 0..n {
            let (mut re, mut im) = (T::zero(), T::zero());
            match &self.sparse_rows {
                Some(rows) => {
                    for &(j, w) in &rows[i] {
                        re = re + w * phasors[j].re;
                        im = im + w * phasors[j].im;
                    }
                }
                None => {
                    for (&w, z) in self.coupling.row(i).iter().zip(phasors.iter()) {
                        re = re + w * z.re;
                        im = im + w * z.im;
                    }
                }
            }
            let local = self.factor * phasors[i].conj() * Complex::new(re, im);
            out[i] = self.omega + local.im;
        }
    }
}

/// Evaluates the phase equation's right-hand side (rad/s), no finite differencing.
pub fn instantaneous_frequency<T: Real>(
    state: &PhaseState<T>,
    a: &CouplingMatrix<T>,
    epsilon: T,
    phi: T,
) -> Vec<T> {
    let n = state.size();
    let field = PhaseField::new(a, epsilon, phi, state.omega);
    let mut phasors = vec![C::new(T::zero(), T::zero()); n];
    let mut out = vec![T::zero(); n];
    field.eval(&state.phases, &mut phasors, &mut out);
    out
}

/// Instantaneous frequencies with the population mean removed.
pub fn relative_frequency<T: Real>(freqs: &[T]) -> Vec<T> {
    let mean = freqs.iter().fold(T::zero(), |acc, &f| acc + f) / T::of_usize(freqs.len().max(1));
    freqs.iter().map(|&f| f - mean).collect()
}

/// Output grid shared by the simulated and analytic paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub samples: usize,
    pub dt_out: f64,
}

impl SampleGrid {
    pub fn new(horizon: f64, dt_out: f64) -> Result<Self> {
        if !(dt_out > 0.0) || !dt_out.is_finite() || !horizon.is_finite() {
            return Err(Error::SamplingGrid(format!("dt_out = {dt_out}, horizon = {horizon}")));
        }
        if horizon < dt_out * (1.0 - GRID_TOLERANCE) {
            return Err(Error::SamplingGrid(format!("horizon {horizon} is shorter than dt_out {dt_out}")));
        }
        let intervals = (horizon / dt_out * (1.0 + GRID_TOLERANCE)).floor() as usize;
        Ok(Self { samples: intervals + 1, dt_out })
    }

    pub fn time<T: Real>(&self, t0: T, idx: usize) -> T {
        t0 + T::of_usize(idx) * T::of(self.dt_out)
    }
}

/// Integration settings for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub horizon: f64,
    pub dt: f64,
    pub dt_out: f64,
}

impl Default for Integration {
    fn default() -> Self {
        Self { horizon: 20.0, dt: DEFAULT_DT, dt_out: DEFAULT_DT_OUT }
    }
}

/// Classic RK4 on the phase equation, sampled every `dt_out`.
pub fn simulate<T: Real>(
    a: &CouplingMatrix<T>,
    epsilon: T,
    phi: T,
    state0: &PhaseState<T>,
    run: Integration,
    perturbation: Option<&PerturbationSpec>,
) -> Result<Trajectory<T>> {
    let Integration { horizon, dt, dt_out } = run;
    let n = a.size();
    if state0.size() != n {
        return Err(Error::InvalidSize(format!("state has {} phases, coupling has {n}", state0.size())));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::SamplingGrid(format!("dt must be positive, got {dt}")));
    }
    let every = (dt_out / dt).round() as usize;
    if every == 0 || ((every as f64) * dt - dt_out).abs() > GRID_TOLERANCE * dt_out {
        return Err(Error::SamplingGrid(format!("dt_out = {dt_out} is not an integer multiple of dt = {dt}")));
    }
    let grid = SampleGrid::new(horizon, dt_out)?;
    let steps = (grid.samples - 1) * every;
    let t0 = state0.time.to_f64_lossy();
    let kick_step = match perturbation {
        Some(spec) => {
            spec.validate()?;
            if spec.at_time < t0 || spec.at_time > t0 + horizon {
                return Err(Error::InvalidParameter(format!(
                    "perturbation at t = {} lies outside [{t0}, {}]",
                    spec.at_time,
                    t0 + horizon
                )));
            }
            Some((spec.kick_step(t0, dt).min(steps), spec))
        }
        None => None,
    };

    let field = PhaseField::new(a, epsilon, phi, state0.omega);
    let half = T::of(0.5);
    let h = T::of(dt);
    let sixth = h / T::of(6.0);
    let mut theta = state0.phases.clone();
    let mut phasors = vec![C::new(T::zero(), T::zero()); n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut stage = vec![T::zero(); n];

    let mut sample_times = Vec::with_capacity(grid.samples);
    let mut states = Vec::with_capacity(grid.samples);
    for s in 0..=steps {
        if let Some((ks, spec)) = kick_step {
            if s == ks {
                for (t, k) in theta.iter_mut().zip(spec.kicks::<T>(n)) {
                    *t = *t + k;
                }
            }
        }
        if s % every == 0 {
            sample_times.push(grid.time(state0.time, s / every));
            states.push(theta.clone());
        }
        if s == steps {
            break;
        }
        field.eval(&theta, &mut phasors, &mut k1);
        for i in 0..n {
            stage[i] = theta[i] + half * h * k1[i];
        }
        field.eval(&stage, &mut phasors, &mut k2);
        for i in 0..n {
            stage[i] = theta[i] + half * h * k2[i];
        }
        field.eval(&stage, &mut phasors, &mut k3);
        for i in 0..n {
            stage[i] = theta[i] + h * k3[i];
        }
        field.eval(&stage, &mut phasors, &mut k4);
        let mut finite = true;
        for i in 0..n {
            theta[i] = theta[i] + sixth * (k1[i] + T::of(2.0) * (k2[i] + k3[i]) + k4[i]);
            finite &= theta[i].is_finite();
        }
        if !finite {
            return Err(Error::Divergence(t0 + (s + 1) as f64 * dt));
        }
    }
    Ok(Trajectory { sample_times, states, provenance: Provenance::Simulated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_complete, build_ring};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn random_init_is_deterministic_and_in_range() {
        let a = init_random::<f64>(50, 1);
        let b = init_random::<f64>(50, 1);
        assert_eq!(a, b);
        assert_ne!(a, init_random::<f64>(50, 2));
        assert!(a.phases.iter().all(|p| (-PI..=PI).contains(p)));
        let one = init_random::<f64>(1, 9);
        assert!((-PI..=PI).contains(&one.phases[0]));
    }

    #[test]
    fn random_init_mean_phasor_is_small() {
        let s = init_random::<f64>(10_000, 42);
        let mean = s.phasors().iter().fold(Complex::new(0.0, 0.0), |a, z| a + z) / 10_000.0;
        assert!(mean.norm() < 0.05);
    }

    #[test]
    fn twisted_states() {
        let s = init_twisted::<f64>(4, 0).unwrap();
        assert_eq!(s.wrapped(), vec![0.0; 4]);
        let s = init_twisted::<f64>(4, 1).unwrap();
        let w = s.wrapped();
        let expected = [0.0, FRAC_PI_2, PI, -FRAC_PI_2];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(init_twisted::<f64>(4, 2), Err(Error::Aliasing { n: 4, q: 2 })));
        assert!(matches!(init_twisted::<f64>(4, -2), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn perturbation_zero_amplitude_and_determinism() {
        let s = init_random::<f64>(20, 3);
        let zero = PerturbationSpec { at_time: 0.0, amplitude: 0.0, kind: PerturbationKind::UniformAdditive, seed: 5 };
        assert_eq!(apply_perturbation(&s, &zero), s);
        let spec = PerturbationSpec { amplitude: 1.0, ..zero };
        assert_eq!(apply_perturbation(&s, &spec), apply_perturbation(&s, &spec));
        assert_ne!(apply_perturbation(&s, &spec), s);
    }

    #[test]
    fn perturbation_kicks_are_centered() {
        let spec = PerturbationSpec { at_time: 0.0, amplitude: FRAC_PI_2, kind: PerturbationKind::UniformAdditive, seed: 17 };
        let kicks = spec.kicks::<f64>(100);
        let mean = kicks.iter().sum::<f64>() / 100.0;
        assert!((-0.1..=0.1).contains(&mean), "mean {mean}");
        assert!(kicks.iter().all(|k| k.abs() <= FRAC_PI_2));
    }

    #[test]
    fn frequencies_vanish_at_equilibria() {
        let ring = build_ring::<f64>(100, 1).unwrap();
        let twisted = init_twisted::<f64>(100, 1).unwrap();
        assert!(instantaneous_frequency(&twisted, &ring, 1.0, 0.0).iter().all(|f| f.abs() < 1e-14));
        let sync = PhaseState::new(vec![0.7; 30]);
        let complete = build_complete::<f64>(30).unwrap();
        assert!(instantaneous_frequency(&sync, &complete, 2.0, 0.0).iter().all(|f| f.abs() < 1e-13));
    }

    #[test]
    fn frequency_matches_direct_sine_sum() {
        let a = crate::topology::build_power_law::<f64>(9, 1.2).unwrap();
        let s = init_random::<f64>(9, 4).with_omega(0.3);
        let f = instantaneous_frequency(&s, &a, 1.7, 0.9);
        for i in 0..9 {
            let direct: f64 = 0.3
                + 1.7 * (0..9).map(|j| a.get(i, j) * (s.phases[j] - s.phases[i] - 0.9).sin()).sum::<f64>();
            assert!((f[i] - direct).abs() < 1e-13);
        }
        let rel = relative_frequency(&f);
        assert!(rel.iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn grid_validation() {
        let a = build_complete::<f64>(3).unwrap();
        let s = init_random::<f64>(3, 0);
        let bad = Integration { horizon: 1.0, dt: 1e-3, dt_out: 1.5e-3 };
        assert!(matches!(simulate(&a, 1.0, 0.0, &s, bad, None), Err(Error::SamplingGrid(_))));
        let short = Integration { horizon: 1e-3, dt: 1e-3, dt_out: 1e-2 };
        assert!(matches!(simulate(&a, 1.0, 0.0, &s, short, None), Err(Error::SamplingGrid(_))));
        let ok = Integration { horizon: 1.0, dt: 1e-3, dt_out: 1e-2 };
        let traj = simulate(&a, 1.0, 0.0, &s, ok, None).unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(traj.sample_times[100], 1.0);
        assert_eq!(traj.states[0], s.phases);
    }

    #[test]
    fn divergence_is_reported() {
        let a = build_complete::<f64>(3).unwrap();
        let s = PhaseState::new(vec![0.0, f64::NAN, 1.0]);
        let run = Integration { horizon: 0.1, dt: 1e-2, dt_out: 1e-2 };
        assert!(matches!(simulate(&a, 1.0, 0.0, &s, run, None), Err(Error::Divergence(_))));
    }

    #[test]
    fn perturbation_lands_on_grid() {
        let a = build_ring::<f64>(10, 1).unwrap();
        let s = init_twisted::<f64>(10, 1).unwrap();
        let spec = PerturbationSpec { at_time: 0.05, amplitude: 0.5, kind: PerturbationKind::UniformAdditive, seed: 1 };
        let run = Integration { horizon: 0.1, dt: 1e-3, dt_out: 1e-2 };
        let traj = simulate(&a, 1.0, 0.0, &s, run, Some(&spec)).unwrap();
        // the twisted state is an equilibrium: nothing moves until the kick
        assert!(traj.states[4].iter().zip(&s.phases).all(|(x, y)| (x - y).abs() < 1e-12));
        let kicked = apply_perturbation(&s, &spec);
        assert!(traj.states[5].iter().zip(&kicked.phases).all(|(x, y)| (x - y).abs() < 1e-12));
        let late = PerturbationSpec { at_time: 5.0, ..spec };
        assert!(simulate(&a, 1.0, 0.0, &s, run, Some(&late)).is_err());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let traj = Trajectory {
            sample_times: vec![0.0, 0.01],
            states: vec![vec![0.1, 3.5], vec![-4.0, 1.0 / 3.0]],
            provenance: Provenance::Simulated,
        };
        traj.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time_s,theta_0,theta_1\n0.0000000000000000e0,"));
        let back = Trajectory::<f64>::read_csv(&path, Provenance::Simulated).unwrap();
        assert_eq!(back.sample_times, traj.sample_times);
        assert_eq!(back.states[1][1], 1.0 / 3.0);
        assert_eq!(back.states[0][1], wrap_angle(3.5));
    }
}
