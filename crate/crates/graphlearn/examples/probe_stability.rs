use graphlearn::experiment::{run_experiment, ExperimentConfig};
use graphlearn::synth::SynthConfig;

fn main() {
    for seed in [0u64, 1, 7, 42, 2024] {
        let cfg = ExperimentConfig {
            synth: SynthConfig { seed, ..SynthConfig::default() },
            m_over_n: vec![1, 4, 8],
            outlier_fractions: vec![0.1],
            n_monte_carlo: 20,
            sigma: None,           // data-driven rule (to be set to 2x median)
            h: [0.0, 0.3, 0.0],
            ..ExperimentConfig::default()
        };
        // temporary: pass sigma, mimicking the new rule via fixed value per run is not
        // possible here, so probe with the current 0.1x rule scaled by override:
        let cfg = ExperimentConfig { sigma: Some(2.0 * 1.895), ..cfg };
        let t0 = std::time::Instant::now();
        let report = run_experiment(&cfg).unwrap();
        let f: Vec<f64> = [1usize, 4, 8].iter().map(|&r| report.cell(r, 0.1).unwrap().f_mean).collect();
        let nm: Vec<f64> = [1usize, 4, 8].iter().map(|&r| report.cell(r, 0.1).unwrap().nmse_mean).collect();
        let c1 = report.cell(1, 0.1).unwrap();
        println!("seed={seed:5}: F = {:.3}/{:.3}/{:.3}  NMSE = {:.3}/{:.3}/{:.3}  gap={:+.3}±{:.3}  [{:?}]",
            f[0], f[1], f[2], nm[0], nm[1], nm[2],
            c1.w_gap_mean.unwrap(), c1.w_gap_se.unwrap(), t0.elapsed());
    }
}
