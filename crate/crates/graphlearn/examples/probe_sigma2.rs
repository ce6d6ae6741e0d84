use graphlearn::experiment::{run_experiment, ExperimentConfig};
use graphlearn::synth::SynthConfig;

fn main() {
    // median d^2 at each M is ~1.9 (signals scale similar across M)
    for mult in [0.5f64, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0] {
        let sigma = mult * 1.895;
        let cfg = ExperimentConfig {
            synth: SynthConfig { seed: 2024, ..SynthConfig::default() },
            m_over_n: vec![1, 4, 8],
            outlier_fractions: vec![0.1],
            n_monte_carlo: 10,
            sigma: Some(sigma),
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        let f: Vec<f64> = [1usize, 4, 8].iter().map(|&r| report.cell(r, 0.1).unwrap().f_mean).collect();
        let n: Vec<f64> = [1usize, 4, 8].iter().map(|&r| report.cell(r, 0.1).unwrap().nmse_mean).collect();
        println!("sigma={mult:4.1}xmed: F = {:.3} / {:.3} / {:.3}   NMSE = {:.3} / {:.3} / {:.3}",
            f[0], f[1], f[2], n[0], n[1], n[2]);
    }
}
