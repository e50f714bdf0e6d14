//! Sweeps power-law exponent, coupling strength and seeds for the chimera presets and
//! prints lock fractions over the last 5 s windows at several tolerances (rad/s).
//!
//! cargo run --release -p kuramoto-lab --example calibrate_chimera -- ALPHAS EPSILONS SEEDS TOLS PHIS
//! (comma-separated lists; SEEDS is a count starting at 1)

use kuramoto_lab::dynamics::{init_random, instantaneous_frequency, simulate, Integration};
use kuramoto_lab::observables::{lock_statistics, order_parameter};
use kuramoto_lab::topology::build_power_law;

fn list(arg: Option<String>, default: &[f64]) -> Vec<f64> {
    arg.map(|s| s.split(',').map(|v| v.parse().expect("number")).collect())
        .unwrap_or_else(|| default.to_vec())
}

fn main() {
    let mut args = std::env::args().skip(1);
    let alphas = list(args.next(), &[0.85, 0.9, 1.0]);
    let epsilons = list(args.next(), &[1.0]);
    let seeds: u64 = args.next().map_or(3, |s| s.parse().expect("seed count"));
    let tolerances = list(args.next(), &[1.0, 2.0, 3.0, 5.0]);
    let phis = list(args.next(), &[1.15, 1.30]);
    let run = Integration { horizon: 20.0, dt: 1e-3, dt_out: 1e-2 };
    for &alpha in &alphas {
        let a = build_power_law::<f64>(225, alpha).unwrap();
        for &eps in &epsilons {
            for seed in 1..=seeds {
                for &phi in &phis {
                    let traj = simulate(&a, eps, phi, &init_random(225, seed), run, None).unwrap();
                    let freqs: Vec<Vec<f64>> = (0..traj.len())
                        .map(|i| instantaneous_frequency(&traj.state(i), &a, eps, phi))
                        .collect();
                    let r = |t: usize| order_parameter(&traj.states[t]);
                    print!("alpha={alpha} eps={eps} seed={seed} phi={phi} R(5,10,20)=({:.3},{:.3},{:.3})", r(500), r(1000), r(2000));
                    for &tol in &tolerances {
                        let stats = lock_statistics(&traj.sample_times, &freqs, tol, 1.0).unwrap();
                        let late: Vec<f64> = stats.windows_from(15.0).map(|w| w.locked_fraction).collect();
                        let coexist = late.iter().all(|f| *f > 0.1 && *f < 0.9);
                        let shown: Vec<String> = late.iter().map(|f| format!("{f:.2}")).collect();
                        print!("\n   tol={tol:<4} [{}]{}", shown.join(" "), if coexist { " COEXIST" } else { "" });
                    }
                    println!();
                }
            }
        }
    }
}
