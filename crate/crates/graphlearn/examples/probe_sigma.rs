use graphlearn::experiment::{run_experiment, ExperimentConfig};
use graphlearn::features::default_sigma;
use graphlearn::synth::{build_dataset, SynthConfig};

fn main() {
    // what does the data-driven default give at M=10?
    let synth = SynthConfig { n_signals: 10, seed: 7, ..SynthConfig::default() };
    let ds = build_dataset(&synth).unwrap();
    let s0 = default_sigma(ds.train.pairs().iter().map(|p| &p.signals));
    println!("data-driven sigma at M=10: {s0:.4e} (median d^2 = {:.4e})", s0 / 0.1);

    for mult in [0.01f64, 0.05, 0.1, 0.3, 1.0, 3.0, 10.0] {
        let sigma = mult * s0 / 0.1; // mult × median
        let cfg = ExperimentConfig {
            synth: SynthConfig { seed: 2024, ..SynthConfig::default() },
            m_over_n: vec![1, 8],
            outlier_fractions: vec![0.1],
            n_monte_carlo: 5,
            sigma: Some(sigma),
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        let c1 = report.cell(1, 0.1).unwrap();
        let c8 = report.cell(8, 0.1).unwrap();
        println!(
            "sigma = {mult:5.2} x median ({sigma:.3e}):  M/N=1 F={:.3} NMSE={:.3} | M/N=8 F={:.3} NMSE={:.3}",
            c1.f_mean, c1.nmse_mean, c8.f_mean, c8.nmse_mean
        );
    }
}
