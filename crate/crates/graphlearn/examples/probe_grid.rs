use graphlearn::experiment::derive_seed;
use graphlearn::features::{assemble_feature_matrix, default_sigma, predict_adjacency};
use graphlearn::metrics::{count_matching_tau, f_score, mean_edge_count, threshold_sparsify};
use graphlearn::solver::{solve, HyperParams};
use graphlearn::graph::SpectralPolynomial;
use graphlearn::synth::{build_dataset, SynthConfig};

fn main() {
    let ratio = 1usize;
    let m = ratio * 10;
    let n_runs = 10;
    for sig_mult in [1.0f64, 1.5, 2.0, 3.0] {
        for count_scale in [0.5f64, 0.65, 0.8, 1.0, 1.25, 1.5] {
            let mut f_sum = 0.0;
            let mut graphs = 0.0;
            for run in 0..n_runs {
                let synth = SynthConfig {
                    n_signals: m, outlier_fraction: 0.1,
                    seed: derive_seed(2024, 77, run),
                    ..SynthConfig::default()
                };
                let ds = build_dataset(&synth).unwrap();
                let med = default_sigma(ds.train.pairs().iter().map(|p| &p.signals)) / 0.1;
                let sigma = sig_mult * med;
                let hyper = HyperParams::new(sigma, 0.1 / m as f64, 10.0 / m as f64,
                    SpectralPolynomial::smoothness_profile()).unwrap();
                let model = solve(&ds.train, &hyper).unwrap();
                let base_target = mean_edge_count(ds.train.pairs().iter().map(|p| &p.graph), 1e-9);
                let target = (base_target * count_scale).round() as usize;
                for pair in ds.test.pairs() {
                    let fm = assemble_feature_matrix(&pair.signals, sigma).unwrap();
                    let pred = predict_adjacency(&fm, &model).unwrap();
                    let tau = count_matching_tau(pred.adjacency(), target);
                    let sp = threshold_sparsify(pred.adjacency(), tau).unwrap();
                    f_sum += f_score(&pair.graph, &sp, 1e-9).unwrap();
                    graphs += 1.0;
                }
            }
            print!("s{sig_mult:<4}c{count_scale:<5}F={:.3}  ", f_sum / graphs);
        }
        println!();
    }
}
