use graphlearn::experiment::derive_seed;
use graphlearn::features::{assemble_feature_matrix, default_sigma, predict_adjacency};
use graphlearn::metrics::{count_matching_tau, f_score, threshold_sparsify};
use graphlearn::solver::{solve, HyperParams};
use graphlearn::graph::SpectralPolynomial;
use graphlearn::synth::{build_dataset, SynthConfig};
use ndarray::{Array1, Array2};

fn f_at21(score: &Array2<f64>, truth: &graphlearn::graph::WeightedGraph) -> f64 {
    let tau = count_matching_tau(score, 21);
    let sp = threshold_sparsify(score, tau).unwrap();
    f_score(truth, &sp, 1e-9).unwrap()
}

fn main() {
    let m = 10usize;
    let synth = SynthConfig {
        n_signals: m, outlier_fraction: 0.1,
        seed: derive_seed(7, 0, 0),
        ..SynthConfig::default()
    };
    let ds = build_dataset(&synth).unwrap();
    println!("outliers at {:?}", ds.outlier_indices);
    let sigma = default_sigma(ds.train.pairs().iter().map(|p| &p.signals));
    println!("sigma = {sigma:.4}");
    let hyper = HyperParams::new(sigma, 0.1 / m as f64, 10.0 / m as f64,
        SpectralPolynomial::smoothness_profile()).unwrap();
    let model = solve(&ds.train, &hyper).unwrap();
    println!("w = {:.4?}", model.w.to_vec());

    // also try alpha=0, beta=0
    let hyper0 = HyperParams::new(sigma, 0.0, 0.0, SpectralPolynomial::smoothness_profile()).unwrap();
    let model0 = solve(&ds.train, &hyper0).unwrap();
    println!("w (no reg) = {:.4?}", model0.w.to_vec());

    let mut f_learned = 0.0;
    let mut f_learned0 = 0.0;
    let mut f_uniform = 0.0;
    let mut pos_frac = 0.0;
    for pair in ds.test.pairs() {
        let fm = assemble_feature_matrix(&pair.signals, sigma).unwrap();
        let pred = predict_adjacency(&fm, &model).unwrap();
        f_learned += f_at21(pred.adjacency(), &pair.graph);
        let pred0 = predict_adjacency(&fm, &model0).unwrap();
        f_learned0 += f_at21(pred0.adjacency(), &pair.graph);
        let uni = Array1::from_elem(m, 1.0 / m as f64);
        let mut uni_model = model.clone();
        uni_model.w = uni;
        let predu = predict_adjacency(&fm, &uni_model).unwrap();
        f_uniform += f_at21(predu.adjacency(), &pair.graph);
        pos_frac += pred.adjacency().iter().filter(|&&v| v > 1e-9).count() as f64 / 90.0;
    }
    let nt = ds.test.n_graphs() as f64;
    println!("F@21 learned (alpha,beta per rule): {:.3}", f_learned / nt);
    println!("F@21 learned (alpha=beta=0)       : {:.3}", f_learned0 / nt);
    println!("F@21 uniform w                     : {:.3}", f_uniform / nt);
    println!("positive prediction fraction       : {:.3}", pos_frac / nt);
}
