//! Sweeps kick amplitude and kick seed for the perturbed twisted-wave preset and reports
//! whether the run reaches synchrony by t = 10 s with the dominant mode switching 2 → 1.
//!
//! cargo run --release -p kuramoto-lab --example calibrate_twisted -- [SEEDS]

use kuramoto_lab::scenario::{evaluate, ConfigOverrides, Preset, Scenario};

fn main() {
    let seeds: u64 = std::env::args().nth(1).map_or(10, |s| s.parse().expect("seed count"));
    let base = Scenario::resolve(&ConfigOverrides { preset: Some(Preset::TwistedPerturbed), ..Default::default() })
        .unwrap()
        .config;
    println!("epsilon = {}", base.epsilon);
    for quarter in 1..=4 {
        let amplitude = quarter as f64 * std::f64::consts::FRAC_PI_4;
        for seed in 1..=seeds {
            let mut config = base.clone();
            let kick = config.perturbation.as_mut().unwrap();
            kick.amplitude = amplitude;
            kick.seed = seed;
            let run = evaluate(&config).unwrap();
            let at10 = run.simulated.sample_times.iter().position(|&t| t >= 10.0 - 1e-9).unwrap();
            let last = run.r_sim.len() - 1;
            let dominant: Vec<usize> = (0..=last).map(|i| run.analytic.modes.dominant_mode(i)).collect();
            let switch = dominant.iter().position(|&d| d == 1);
            let stays = switch.is_some_and(|s| dominant[s..].iter().all(|&d| d == 1) && dominant[..s].iter().all(|&d| d == 2));
            let f = &run.frequencies[last];
            let spread = f.iter().cloned().fold(f64::MIN, f64::max) - f.iter().cloned().fold(f64::MAX, f64::min);
            let ok = run.r_sim[at10] > 0.99 && stays && spread < 1e-3;
            println!(
                "amp={quarter}π/4 seed={seed} R_sim(10)={:.4} R_sim(end)={:.4} switch_t={:?} stays={stays} spread={spread:.2e}{}",
                run.r_sim[at10],
                run.r_sim[last],
                switch.map(|s| run.simulated.sample_times[s]),
                if ok { " OK" } else { "" }
            );
        }
    }
}
