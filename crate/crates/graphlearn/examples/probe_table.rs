use graphlearn::experiment::{run_experiment, ExperimentConfig};
use graphlearn::synth::SynthConfig;

fn main() {
    let runs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let cfg = ExperimentConfig {
        synth: SynthConfig { seed: 2024, ..SynthConfig::default() },
        m_over_n: vec![1, 4, 8],
        outlier_fractions: vec![0.1],
        n_monte_carlo: runs,
        ..ExperimentConfig::default()
    };
    let t0 = std::time::Instant::now();
    let report = run_experiment(&cfg).unwrap();
    for c in &report.cells {
        println!(
            "M/N={:2}  M={:3}  of={:.2}  NMSE={:.4}±{:.4}  F={:.4}±{:.4}  gap={:?}",
            c.m_over_n, c.m, c.outlier_fraction, c.nmse_mean, c.nmse_std, c.f_mean, c.f_std,
            c.w_gap_mean.map(|g| (g, c.w_gap_se.unwrap()))
        );
    }
    println!("elapsed: {:.1?}", t0.elapsed());
}
