//! Measurements on phase states and trajectories.

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::real::{circular_difference, unit_phasor, Real, C};

pub const DEFAULT_LOCK_TOLERANCE: f64 = 1e-2;
pub const DEFAULT_LOCK_WINDOW: f64 = 1.0;

/// `R = N^{−1}·|Σ_j e^{iθ_j}|`.
pub fn order_parameter<T: Real>(phases: &[T]) -> T {
    if phases.is_empty() {
        return T::zero();
    }
    let sum = phases.iter().fold(C::new(T::zero(), T::zero()), |acc, &p| acc + unit_phasor(p));
    (sum.norm() / T::of_usize(phases.len())).min(T::one())
}

pub fn order_parameter_trace<T: Real>(traj: &Trajectory<T>) -> Vec<T> {
    traj.states.iter().map(|s| order_parameter(s)).collect()
}

/// Simulated-versus-analytic agreement over a shared sample grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub max_abs_order_param_gap: f64,
    /// RMS of wrapped differences over every sample and oscillator (radians).
    pub circular_rmse: f64,
    pub per_time_rmse: Vec<f64>,
    pub horizon: f64,
}

fn check_aligned<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Alignment(format!("{} samples versus {}", a.len(), b.len())));
    }
    if a.oscillators() != b.oscillators() || a.states.iter().chain(&b.states).any(|s| s.len() != a.oscillators()) {
        return Err(Error::Alignment(format!("{} oscillators versus {}", a.oscillators(), b.oscillators())));
    }
    for (idx, (&ta, &tb)) in a.sample_times.iter().zip(&b.sample_times).enumerate() {
        let scale = T::one().max(ta.abs());
        if (ta - tb).abs() > T::of(1e-9) * scale {
            return Err(Error::Alignment(format!("sample {idx}: t = {ta} versus {tb}")));
        }
    }
    Ok(())
}

/// Wrapped per-entry differences `Arg(e^{i(θ_a − θ_b)})` summarized per time and overall.
pub fn circular_error<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<ComparisonReport> {
    check_aligned(a, b)?;
    let n = a.oscillators() as f64;
    let mut total = 0.0;
    let mut per_time_rmse = Vec::with_capacity(a.len());
    let mut gap: f64 = 0.0;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        let sq: f64 = sa
            .iter()
            .zip(sb)
            .map(|(&x, &y)| circular_difference(x, y).to_f64_lossy().powi(2))
            .sum();
        total += sq;
        per_time_rmse.push((sq / n).sqrt());
        let r_gap = (order_parameter(sa) - order_parameter(sb)).abs().to_f64_lossy();
        gap = gap.max(r_gap);
    }
    let circular_rmse = (total / (n * a.len() as f64)).sqrt();
    let horizon = (a.sample_times[a.len() - 1] - a.sample_times[0]).to_f64_lossy();
    Ok(ComparisonReport { max_abs_order_param_gap: gap, circular_rmse, per_time_rmse, horizon })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockWindow {
    pub start: f64,
    pub end: f64,
    pub locked: Vec<bool>,
    pub locked_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockStatistics {
    pub tolerance: f64,
    pub window: f64,
    pub windows: Vec<LockWindow>,
}

impl LockStatistics {
    pub fn last(&self) -> Option<&LockWindow> {
        self.windows.last()
    }

    /// Windows starting at or after `t`.
    pub fn windows_from(&self, t: f64) -> impl Iterator<Item = &LockWindow> {
        self.windows.iter().filter(move |w| w.start >= t - 1e-9)
    }
}

fn median<T: Real>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::of(0.5)
    }
}

/// Oscillator `i` is locked on a window when `|f_i(t) − median_j f_j(t)| < tol` at every
/// sample of that window. Windows tile the sampled range from its first time.
pub fn lock_statistics<T: Real>(
    sample_times: &[T],
    freqs: &[Vec<T>],
    tol: f64,
    window: f64,
) -> Result<LockStatistics> {
    if sample_times.len() != freqs.len() || sample_times.is_empty() {
        return Err(Error::Alignment(format!(
            "{} sample times for {} frequency rows",
            sample_times.len(),
            freqs.len()
        )));
    }
    let t0 = sample_times[0].to_f64_lossy();
    let span = sample_times[sample_times.len() - 1].to_f64_lossy() - t0;
    if !(window > 0.0) || window > span * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!("lock window {window} s must lie within the sampled span {span} s")));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidParameter(format!("lock tolerance must be non-negative, got {tol}")));
    }
    let n = freqs[0].len();
    let count = (span / window * (1.0 + 1e-9)).floor() as usize;
    let slack = 1e-9 * window;
    let deviations: Vec<Vec<f64>> = freqs
        .iter()
        .map(|row| {
            let m = median(row);
            row.iter().map(|&f| (f - m).abs().to_f64_lossy()).collect()
        })
        .collect();
    let windows = (0..count)
        .map(|w| {
            let start = t0 + w as f64 * window;
            let end = start + window;
            let mut locked = vec![true; n];
            for (t, dev) in sample_times.iter().zip(&deviations) {
                let t = t.to_f64_lossy();
                if t < start - slack || t > end + slack {
                    continue;
                }
                for (flag, &d) in locked.iter_mut().zip(dev) {
                    *flag &= d < tol;
                }
            }
            let locked_fraction = locked.iter().filter(|&&l| l).count() as f64 / n as f64;
            LockWindow { start, end, locked, locked_fraction }
        })
        .collect();
    Ok(LockStatistics { tolerance: tol, window, windows })
}
