use graphlearn::experiment::{run_experiment, ExperimentConfig};
use graphlearn::synth::SynthConfig;

fn main() {
    let med = 1.895f64;
    for (h1, h2) in [(1.0f64, 0.0f64), (0.3, 0.0), (0.1, 0.0), (0.0, 0.0), (0.0, 0.3), (0.0, 1.0), (0.1, 0.3), (0.3, 1.0)] {
        for sig_mult in [2.0f64, 3.0] {
            let cfg = ExperimentConfig {
                synth: SynthConfig { seed: 2024, ..SynthConfig::default() },
                m_over_n: vec![1, 4, 8],
                outlier_fractions: vec![0.1],
                n_monte_carlo: 10,
                sigma: Some(sig_mult * med),
                h: [0.0, h1, h2],
                ..ExperimentConfig::default()
            };
            let report = run_experiment(&cfg).unwrap();
            let f: Vec<f64> = [1usize, 4, 8].iter().map(|&r| report.cell(r, 0.1).unwrap().f_mean).collect();
            let gap = report.cell(1, 0.1).unwrap().w_gap_mean.unwrap();
            println!("h1={h1:4.1} h2={h2:4.1} s={sig_mult:.0}xmed: F = {:.3} / {:.3} / {:.3}  (targets .71/.72/.74; gap@1 {gap:+.3})",
                f[0], f[1], f[2]);
        }
    }
}
