use graphlearn::experiment::derive_seed;
use graphlearn::graph::{laplacian, laplacian_pseudoinverse};
use graphlearn::metrics::{f_score, threshold_sparsify, count_matching_tau};
use graphlearn::synth::{build_dataset, SynthConfig};
use graphlearn::graph::WeightedGraph;
use ndarray::Array2;

fn f_at_count(score: &Array2<f64>, truth: &WeightedGraph, count: usize) -> f64 {
    let tau = count_matching_tau(score, count);
    let sp = threshold_sparsify(score, tau).unwrap();
    f_score(truth, &sp, 1e-9).unwrap()
}

fn main() {
    let mut truth_edges = 0.0;
    let mut f_base = 0.0;
    let mut f_emp = 0.0;
    let mut f_res = 0.0;
    let n_runs = 5;
    let mut count_n = 0.0;
    for run in 0..n_runs {
        let synth = SynthConfig {
            n_signals: 10,
            outlier_fraction: 0.1,
            seed: derive_seed(7, 0, run),
            ..SynthConfig::default()
        };
        let ds = build_dataset(&synth).unwrap();
        // "base support" proxy: mean of training adjacencies
        let n = 10usize;
        let mut mean_train = Array2::<f64>::zeros((n, n));
        for p in ds.train.pairs() { mean_train += p.graph.adjacency(); }
        mean_train /= ds.train.n_graphs() as f64;

        for pair in ds.test.pairs() {
            let truth = &pair.graph;
            truth_edges += truth.edge_count(1e-9) as f64;
            count_n += 1.0;
            f_base += f_at_count(&mean_train, truth, 21);

            // empirical similarity: -mean_m (x_i - x_j)^2 over smooth columns
            let x = pair.signals.values();
            let mut emp = Array2::<f64>::zeros((n, n));
            for i in 0..n { for j in 0..n {
                if i == j { continue; }
                let mut s = 0.0; let mut cnt = 0.0;
                for m in 0..x.ncols() {
                    if ds.outlier_indices.binary_search(&m).is_ok() { continue; }
                    let d = x[[i, m]] - x[[j, m]];
                    s += d * d; cnt += 1.0;
                }
                emp[[i, j]] = 1.0 / (s / cnt + 1e-9);
            }}
            f_emp += f_at_count(&emp, truth, 21);

            // oracle: true effective resistance from this graph's Laplacian
            let pinv = laplacian_pseudoinverse(&laplacian(truth)).unwrap();
            let mut res = Array2::<f64>::zeros((n, n));
            for i in 0..n { for j in 0..n {
                if i == j { continue; }
                let r = pinv[[i, i]] + pinv[[j, j]] - 2.0 * pinv[[i, j]];
                res[[i, j]] = 1.0 / (r + 1e-12);
            }}
            f_res += f_at_count(&res, truth, 21);
        }
    }
    println!("mean truth edges: {:.1}", truth_edges / count_n);
    println!("F@21 base-support predictor : {:.3}", f_base / count_n);
    println!("F@21 empirical similarity    : {:.3}", f_emp / count_n);
    println!("F@21 true effective resistance: {:.3}", f_res / count_n);
}
