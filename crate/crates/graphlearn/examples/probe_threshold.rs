use graphlearn::experiment::{derive_seed, ExperimentConfig};
use graphlearn::features::{assemble_feature_matrix, default_sigma, predict_adjacency};
use graphlearn::metrics::{count_matching_tau, f_score, mean_edge_count, threshold_sparsify};
use graphlearn::solver::{solve, HyperParams};
use graphlearn::graph::SpectralPolynomial;
use graphlearn::synth::{build_dataset, SynthConfig};

fn main() {
    let cfg = ExperimentConfig::default();
    for ratio in [1usize, 8] {
        let m = ratio * 10;
        let mut f_by_count = vec![0.0f64; 46];
        let mut f_count_match = 0.0;
        let n_runs = 5;
        let mut mean_train_edges = 0.0;
        for run in 0..n_runs {
            let synth = SynthConfig {
                n_signals: m,
                outlier_fraction: 0.1,
                seed: derive_seed(99, ratio as u64, run),
                ..SynthConfig::default()
            };
            let ds = build_dataset(&synth).unwrap();
            let sigma = default_sigma(ds.train.pairs().iter().map(|p| &p.signals));
            let hyper = HyperParams::new(sigma, 0.1 / m as f64, 10.0 / m as f64,
                SpectralPolynomial::smoothness_profile()).unwrap();
            let model = solve(&ds.train, &hyper).unwrap();
            let target = mean_edge_count(ds.train.pairs().iter().map(|p| &p.graph), cfg.edge_eps).round() as usize;
            mean_train_edges += target as f64;
            let mut per_count = vec![0.0f64; 46];
            let mut cm = 0.0;
            for pair in ds.test.pairs() {
                let fm = assemble_feature_matrix(&pair.signals, sigma).unwrap();
                let pred = predict_adjacency(&fm, &model).unwrap();
                let raw = pred.adjacency().clone();
                for count in 1..=45usize {
                    let tau = count_matching_tau(&raw, count);
                    let sp = threshold_sparsify(&raw, tau).unwrap();
                    per_count[count] += f_score(&pair.graph, &sp, cfg.edge_eps).unwrap();
                }
                let tau = count_matching_tau(&raw, target);
                let sp = threshold_sparsify(&raw, tau).unwrap();
                cm += f_score(&pair.graph, &sp, cfg.edge_eps).unwrap();
            }
            let nt = ds.test.n_graphs() as f64;
            for c in 1..=45 { f_by_count[c] += per_count[c] / nt; }
            f_count_match += cm / nt;
        }
        for c in 1..=45 { f_by_count[c] /= n_runs as f64; }
        f_count_match /= n_runs as f64;
        mean_train_edges /= n_runs as f64;
        let (best_c, best_f) = f_by_count.iter().enumerate().skip(1)
            .max_by(|a, b| a.1.total_cmp(b.1)).map(|(c, &f)| (c, f)).unwrap();
        println!("M/N={ratio:2}: count-match(target~{mean_train_edges:.0}) F={f_count_match:.3}; best count={best_c} F={best_f:.3}");
        print!("   F by retained count: ");
        for c in [5, 10, 15, 18, 21, 25, 30, 35, 40, 45] {
            print!("{c}:{:.3} ", f_by_count[c]);
        }
        println!();
    }
}
