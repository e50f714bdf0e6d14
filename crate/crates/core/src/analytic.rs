//! The closed-form complex solution `x(t) = e^{tK}·x(0)` written in the eigenbasis,
//! `x(t) = Σ_k c_k·e^{λ_k t}·v_k`, and its phase read-out `θ_j(t) = Arg x_j(t)`.
//!
//! Mode magnitudes never leave the natural-log domain: contributions routinely span
//! more decades than a double can hold over a long horizon, so every sum is rescaled
//! by `e^{−M(t)}` with `M(t)` the largest log-magnitude. The positive rescaling leaves
//! all arguments untouched.

use std::io::Write;
use std::path::Path;

use num_complex::Complex;

use crate::dynamics::{apply_perturbation, PerturbationSpec, PhaseState, Provenance, SampleGrid, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{self, Lu};
use crate::real::{Real, C};
use crate::spectral::{assemble_system, cdt_spectrum, dense_spectrum, fmt_real, Spectrum};
use crate::topology::CouplingMatrix;

/// Largest eigenvector condition number accepted for the general (non-orthonormal) path.
pub const MAX_EIGENBASIS_CONDITION: f64 = 1e8;

/// Expansion coefficients `c_k` of a state, in log-magnitude / argument form.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients<T> {
    /// `ln|c_k|`; `−∞` marks an exact zero.
    pub log_magnitude: Vec<T>,
    pub argument: Vec<T>,
    /// Time at which the coefficients describe the state.
    pub origin: T,
    pub spectrum_id: u64,
}

impl<T: Real> ModeCoefficients<T> {
    pub fn len(&self) -> usize {
        self.log_magnitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_magnitude.is_empty()
    }

    pub fn magnitude(&self, label: usize) -> T {
        self.log_magnitude[label - 1].exp()
    }

    fn check(&self, spec: &Spectrum<T>) -> Result<()> {
        if self.spectrum_id != spec.id() || self.len() != spec.size() {
            return Err(Error::InvalidParameter(
                "mode coefficients were computed against a different spectrum".into(),
            ));
        }
        Ok(())
    }

    /// `ln|μ_k(t)|` and `arg μ_k(t)` for mode index `k − 1`.
    #[inline]
    fn evolved(&self, spec: &Spectrum<T>, idx: usize, t: T) -> (T, T) {
        let lambda = spec.eigenvalues()[idx];
        let dt = t - self.origin;
        (self.log_magnitude[idx] + lambda.re * dt, self.argument[idx] + lambda.im * dt)
    }
}

/// Time-resolved mode contributions `μ_k(t) = c_k·e^{λ_k t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrace<T> {
    pub sample_times: Vec<T>,
    /// Rows are samples, columns are modes; natural log of `|μ_k|`.
    pub log_mu: Vec<Vec<T>>,
    pub arg_mu: Vec<Vec<T>>,
}

impl<T: Real> ModeTrace<T> {
    /// Label of the largest contribution at a sample (lowest label on ties).
    pub fn dominant_mode(&self, sample: usize) -> usize {
        let row = &self.log_mu[sample];
        let mut best = 0;
        for (k, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = k;
            }
        }
        best + 1
    }

    /// `log10|μ_1| − max_{k≥2} log10|μ_k|` at a sample.
    pub fn leading_gap_log10(&self, sample: usize) -> T {
        let row = &self.log_mu[sample];
        let rest = row[1..].iter().copied().fold(T::neg_infinity(), T::max);
        (row[0] - rest) / T::LN_10()
    }

    /// `time_s,log10_mu_1,…,log10_mu_N`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let n = self.log_mu.first().map_or(0, Vec::len);
        let mut out = String::from("time_s");
        for k in 1..=n {
            out.push_str(&format!(",log10_mu_{k}"));
        }
        out.push('\n');
        for (t, row) in self.sample_times.iter().zip(&self.log_mu) {
            out.push_str(&fmt_real(t.to_f64_lossy()));
            for &v in row {
                out.push(',');
                out.push_str(&fmt_real((v / T::LN_10()).to_f64_lossy()));
            }
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

fn to_log_polar<T: Real>(c: &[C<T>]) -> (Vec<T>, Vec<T>) {
    c.iter()
        .map(|z| {
            let m = z.norm();
            let log = if m.is_zero() { T::neg_infinity() } else { m.ln() };
            (log, z.im.atan2(z.re))
        })
        .unzip()
}

/// Projects `x(0) = e^{iθ(0)}` onto the eigenbasis.
pub fn mode_coefficients<T: Real>(state0: &PhaseState<T>, spec: &Spectrum<T>) -> Result<ModeCoefficients<T>> {
    let n = spec.size();
    if state0.size() != n {
        return Err(Error::InvalidSize(format!("state has {} phases, spectrum has {n} modes", state0.size())));
    }
    let x = state0.phasors();
    let v = spec.eigenvectors();
    let c: Vec<C<T>> = if spec.is_orthonormal() {
        // ⟨x, v_k⟩ = Σ_j x_j·conj(v_k[j])
        let mut c = vec![C::new(T::zero(), T::zero()); n];
        for (j, &xj) in x.iter().enumerate() {
            for (ck, &vjk) in c.iter_mut().zip(v.row(j)) {
                *ck = *ck + xj * vjk.conj();
            }
        }
        c
    } else {
        let lu = Lu::new(v);
        if lu.is_singular() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let cond = (v.norm_one() * lu.inverse().norm_one()).to_f64_lossy();
        if !(cond <= MAX_EIGENBASIS_CONDITION) {
            return Err(Error::IllConditioned(cond));
        }
        lu.solve(&x)
    };
    let (log_magnitude, argument) = to_log_polar(&c);
    Ok(ModeCoefficients { log_magnitude, argument, origin: state0.time, spectrum_id: spec.id() })
}

/// Closed-form `ln|μ_k(t)| = ln|c_k| + Re(λ_k)·t`, `arg μ_k(t) = arg c_k + Im(λ_k)·t`.
pub fn mode_contributions<T: Real>(
    coeffs: &ModeCoefficients<T>,
    spec: &Spectrum<T>,
    times: &[T],
) -> Result<ModeTrace<T>> {
    coeffs.check(spec)?;
    let mut trace = ModeTrace { sample_times: times.to_vec(), log_mu: Vec::new(), arg_mu: Vec::new() };
    for &t in times {
        let (log_row, arg_row) = (0..spec.size()).map(|k| coeffs.evolved(spec, k, t)).unzip();
        trace.log_mu.push(log_row);
        trace.arg_mu.push(arg_row);
    }
    Ok(trace)
}

/// Sorted, de-duplicated 0-based mode indices for an optional 1-based label set.
fn resolve_subset(subset: Option<&[usize]>, n: usize) -> Result<Vec<usize>> {
    match subset {
        None => Ok((0..n).collect()),
        Some(labels) => {
            if labels.is_empty() {
                return Err(Error::InvalidParameter("mode subset is empty".into()));
            }
            let mut idx = Vec::with_capacity(labels.len());
            for &l in labels {
                if l == 0 || l > n {
                    return Err(Error::InvalidParameter(format!("mode label {l} outside 1..={n}")));
                }
                idx.push(l - 1);
            }
            idx.sort_unstable();
            idx.dedup();
            Ok(idx)
        }
    }
}

/// Phases `Arg x̃_j(t)` of the (optionally truncated) mode expansion.
pub fn reconstruct_phases<T: Real>(
    coeffs: &ModeCoefficients<T>,
    spec: &Spectrum<T>,
    t: T,
    subset: Option<&[usize]>,
) -> Result<PhaseState<T>> {
    coeffs.check(spec)?;
    let modes = resolve_subset(subset, spec.size())?;
    reconstruct_indices(coeffs, spec, t, &modes)
}

fn reconstruct_indices<T: Real>(
    coeffs: &ModeCoefficients<T>,
    spec: &Spectrum<T>,
    t: T,
    modes: &[usize],
) -> Result<PhaseState<T>> {
    let n = spec.size();
    let evolved: Vec<(usize, T, T)> = modes
        .iter()
        .map(|&k| {
            let (g, arg) = coeffs.evolved(spec, k, t);
            (k, g, arg)
        })
        .filter(|(_, g, _)| *g > T::neg_infinity())
        .collect();
    let shift = evolved.iter().map(|e| e.1).fold(T::neg_infinity(), T::max);
    if !shift.is_finite() {
        return Err(Error::DegenerateReconstruction(t.to_f64_lossy()));
    }
    let weights: Vec<(usize, C<T>)> = evolved
        .into_iter()
        .map(|(k, g, arg)| (k, Complex::from_polar((g - shift).exp(), arg)))
        .filter(|(_, w)| !(w.re.is_zero() && w.im.is_zero()))
        .collect();

    let v = spec.eigenvectors();
    let mut phases = Vec::with_capacity(n);
    for j in 0..n {
        let row = v.row(j);
        let (x, scale) = weights.iter().fold((C::new(T::zero(), T::zero()), T::zero()), |(acc, s), &(k, w)| {
            let term = w * row[k];
            (acc + term, s + term.norm())
        });
        if !(x.norm() > T::of(64.0) * T::epsilon() * scale) {
            return Err(Error::UndefinedArgument(j));
        }
        phases.push(x.im.atan2(x.re));
    }
    Ok(PhaseState { time: t, phases, omega: T::zero() })
}

/// Everything the analytic path produces for one scenario.
#[derive(Debug, Clone)]
pub struct AnalyticSolution<T> {
    pub trajectory: Trajectory<T>,
    pub modes: ModeTrace<T>,
    pub spectrum: Spectrum<T>,
}

/// Closed-form spectrum when the coupling is circulant, dense solver otherwise.
pub fn spectrum_for<T: Real>(a: &CouplingMatrix<T>, epsilon: T, phi: T) -> Result<Spectrum<T>> {
    let system = assemble_system(a.clone(), epsilon, phi)?;
    if a.circulant_generator().is_some() {
        cdt_spectrum(&system)
    } else {
        dense_spectrum(&system)
    }
}

/// Evaluates the analytic phases on the output grid `t0, t0 + dt_out, …`. A perturbation
/// kicks the analytic phase state at its event time and the expansion restarts from the
/// re-projected coefficients.
#[allow(clippy::too_many_arguments)]
pub fn analytic_trajectory<T: Real>(
    a: &CouplingMatrix<T>,
    epsilon: T,
    phi: T,
    state0: &PhaseState<T>,
    horizon: f64,
    dt_out: f64,
    perturbation: Option<&PerturbationSpec>,
    subset: Option<&[usize]>,
) -> Result<AnalyticSolution<T>> {
    let spectrum = spectrum_for(a, epsilon, phi)?;
    analytic_trajectory_with(&spectrum, state0, horizon, dt_out, perturbation, subset)
}

/// [`analytic_trajectory`] against a precomputed spectrum.
pub fn analytic_trajectory_with<T: Real>(
    spectrum: &Spectrum<T>,
    state0: &PhaseState<T>,
    horizon: f64,
    dt_out: f64,
    perturbation: Option<&PerturbationSpec>,
    subset: Option<&[usize]>,
) -> Result<AnalyticSolution<T>> {
    let grid = SampleGrid::new(horizon, dt_out)?;
    let modes = resolve_subset(subset, spectrum.size())?;
    let t0 = state0.time;
    let slack = T::of(1e-9 * dt_out);
    if let Some(p) = perturbation {
        let (lo, hi) = (t0.to_f64_lossy(), t0.to_f64_lossy() + horizon);
        if !(p.at_time >= lo && p.at_time <= hi) {
            return Err(Error::InvalidParameter(format!(
                "perturbation at t = {} lies outside [{lo}, {hi}]",
                p.at_time
            )));
        }
    }

    let mut coeffs = mode_coefficients(state0, spectrum)?;
    let mut pending = perturbation;
    let mut sample_times = Vec::with_capacity(grid.samples);
    let mut states = Vec::with_capacity(grid.samples);
    let mut trace = ModeTrace { sample_times: Vec::new(), log_mu: Vec::new(), arg_mu: Vec::new() };
    for idx in 0..grid.samples {
        let t = grid.time(t0, idx);
        if let Some(p) = pending {
            let te = T::of(p.at_time);
            if t >= te - slack {
                let before = reconstruct_indices(&coeffs, spectrum, te, &modes)?;
                let kicked = apply_perturbation(&before, p);
                coeffs = mode_coefficients(&kicked, spectrum)?;
                pending = None;
            }
        }
        let state = reconstruct_indices(&coeffs, spectrum, t, &modes)?;
        let row = mode_contributions(&coeffs, spectrum, &[t])?;
        trace.sample_times.push(t);
        trace.log_mu.extend(row.log_mu);
        trace.arg_mu.extend(row.arg_mu);
        sample_times.push(t);
        states.push(state.phases);
    }
    Ok(AnalyticSolution {
        trajectory: Trajectory { sample_times, states, provenance: Provenance::Analytic },
        modes: trace,
        spectrum: spectrum.clone(),
    })
}

/// `‖Σ_{k∈S} c_k·v_k − x(0)‖₂` for a subset of labels at the coefficients' origin.
pub fn truncation_residual<T: Real>(
    coeffs: &ModeCoefficients<T>,
    spec: &Spectrum<T>,
    state0: &PhaseState<T>,
    subset: &[usize],
) -> Result<T> {
    coeffs.check(spec)?;
    let modes = resolve_subset(Some(subset), spec.size())?;
    let v = spec.eigenvectors();
    let x = state0.phasors();
    let diff: Vec<C<T>> = (0..spec.size())
        .map(|j| {
            let sum = modes.iter().fold(C::new(T::zero(), T::zero()), |acc, &k| {
                acc + Complex::from_polar(coeffs.log_magnitude[k].exp(), coeffs.argument[k]) * v[(j, k)]
            });
            sum - x[j]
        })
        .collect();
    Ok(linalg::vec_norm(&diff))
}
