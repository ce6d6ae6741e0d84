use graphlearn::experiment::{run_experiment, ExperimentConfig};
use graphlearn::synth::SynthConfig;

fn main() {
    for h in [[0.0, 0.3, 0.0], [0.0, 0.1, 0.0], [0.0, 0.1, 0.3], [0.0, 0.2, 0.5]] {
        let mut worst: f64 = 0.0;
        let mut all_f = Vec::new();
        let mut trend_violations = 0;
        for seed in [0u64, 1, 7, 42, 2024] {
            let cfg = ExperimentConfig {
                synth: SynthConfig { seed, ..SynthConfig::default() },
                m_over_n: vec![1, 4, 8],
                outlier_fractions: vec![0.1],
                n_monte_carlo: 20,
                sigma: Some(2.0 * 1.895),
                h,
                ..ExperimentConfig::default()
            };
            let report = run_experiment(&cfg).unwrap();
            let f: Vec<f64> = [1usize, 4, 8].iter().map(|&r| report.cell(r, 0.1).unwrap().f_mean).collect();
            let nm: Vec<f64> = [1usize, 4, 8].iter().map(|&r| report.cell(r, 0.1).unwrap().nmse_mean).collect();
            if nm[2] >= nm[0] { trend_violations += 1; }
            for c in &report.cells {
                for r in &c.runs { worst = worst.max(r.nmse); }
            }
            all_f.push(f);
        }
        let fmin: Vec<f64> = (0..3).map(|i| all_f.iter().map(|f| f[i]).fold(f64::INFINITY, f64::min)).collect();
        let fmax: Vec<f64> = (0..3).map(|i| all_f.iter().map(|f| f[i]).fold(0.0f64, f64::max)).collect();
        println!("h={h:?}: F range r1 [{:.3},{:.3}] r4 [{:.3},{:.3}] r8 [{:.3},{:.3}]  worst run NMSE={worst:.2}  trend violations={trend_violations}",
            fmin[0], fmax[0], fmin[1], fmax[1], fmin[2], fmax[2]);
    }
}
