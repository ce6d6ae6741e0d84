//! Evaluation: normalized mean square error over a test set, thresholding of
//! estimated adjacencies to a sparse support, and support F1.
//!
//! No F measure is standardized for weighted graphs, so edge detection is
//! scored as binary-support F1 over the upper triangle.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Entries strictly above this count as edges when binarizing a support.
pub const DEFAULT_EDGE_EPS: f64 = 1e-9;

/// Aggregated scores over a test set; `per_m` optionally breaks the scores
/// out by input signal count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub nmse: f64,
    pub f_score: f64,
    pub n_graphs: usize,
    pub n_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_m: Option<BTreeMap<usize, CellScore>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CellScore {
    pub nmse: f64,
    pub f_score: f64,
}

/// `mean ||A - A_hat||_F^2 / mean ||A||_F^2` over paired lists.
pub fn nmse(truth: &[WeightedGraph], est: &[Array2<f64>]) -> Result<f64> {
    if truth.is_empty() || est.is_empty() {
        return Err(Error::EmptyList);
    }
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch {
            context: "nmse list lengths",
            expected: truth.len(),
            found: est.len(),
        });
    }
    let mut err_sum = 0.0;
    let mut ref_sum = 0.0;
    for (t, e) in truth.iter().zip(est.iter()) {
        let a = t.adjacency();
        if a.dim() != e.dim() {
            return Err(Error::ShapeMismatch {
                expected: a.dim(),
                found: e.dim(),
            });
        }
        err_sum += (a - e).iter().map(|v| v * v).sum::<f64>();
        ref_sum += a.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(err_sum / ref_sum)
}

/// Clamps negatives to zero, zeroes the diagonal, and removes entries below
/// `tau`. Idempotent at fixed `tau`.
pub fn threshold_sparsify(a_hat: &Array2<f64>, tau: f64) -> Result<WeightedGraph> {
    assert!(tau >= 0.0, "threshold must be nonnegative");
    let mut a = crate::graph::symmetrized(a_hat)?;
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]] = 0.0;
    }
    a.mapv_inplace(|v| {
        let v = v.max(0.0);
        if v < tau {
            0.0
        } else {
            v
        }
    });
    WeightedGraph::new(a)
}

/// Binary-support F1 of predicted edges against true edges, both binarized
/// at `edge_eps` over the upper triangle. Two empty supports agree perfectly
/// and score 1; an empty prediction against a nonempty truth scores 0.
pub fn f_score(truth: &WeightedGraph, est: &WeightedGraph, edge_eps: f64) -> Result<f64> {
    let n = truth.n_nodes();
    if est.n_nodes() != n {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            found: (est.n_nodes(), est.n_nodes()),
        });
    }
    let ta = truth.adjacency();
    let ea = est.adjacency();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let t = ta[[i, j]] > edge_eps;
            let e = ea[[i, j]] > edge_eps;
            match (t, e) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    if tp == 0 {
        return Ok(if fp == 0 && fn_ == 0 { 1.0 } else { 0.0 });
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Mean upper-triangle edge count over a set of graphs.
pub fn mean_edge_count<'a>(
    graphs: impl IntoIterator<Item = &'a WeightedGraph>,
    edge_eps: f64,
) -> f64 {
    let mut total = 0usize;
    let mut count = 0usize;
    for g in graphs {
        total += g.edge_count(edge_eps);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total as f64 / count as f64
    }
}

/// Threshold that keeps (at least) the `target_edges` largest upper-triangle
/// entries of `a_hat`: the value of the `target_edges`-th largest entry, so
/// sparsifying at the returned tau retains exactly that many edges apart from
/// ties. Returns 0 when the target exceeds the number of positive entries.
pub fn count_matching_tau(a_hat: &Array2<f64>, target_edges: usize) -> f64 {
    let n = a_hat.nrows();
    let mut values: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            values.push(a_hat[[i, j]].max(0.0));
        }
    }
    values.sort_by(|a, b| b.total_cmp(a));
    if target_edges == 0 {
        return values.first().map_or(1.0, |&v| v + 1.0);
    }
    if target_edges > values.len() {
        return 0.0;
    }
    values[target_edges - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn graph(a: Array2<f64>) -> WeightedGraph {
        WeightedGraph::new(a).unwrap()
    }

    fn two_graphs() -> Vec<WeightedGraph> {
        vec![
            graph(array![[0.0, 1.0, 0.0], [1.0, 0.0, 2.0], [0.0, 2.0, 0.0]]),
            graph(array![[0.0, 0.5, 0.5], [0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]),
        ]
    }

    #[test]
    fn nmse_trivial_cases() {
        let truth = two_graphs();
        let exact: Vec<Array2<f64>> = truth.iter().map(|g| g.adjacency().clone()).collect();
        assert_eq!(nmse(&truth, &exact).unwrap(), 0.0);

        let zeros: Vec<Array2<f64>> = truth
            .iter()
            .map(|g| Array2::zeros(g.adjacency().dim()))
            .collect();
        assert!((nmse(&truth, &zeros).unwrap() - 1.0).abs() < 1e-15);

        let doubled: Vec<Array2<f64>> = truth.iter().map(|g| g.adjacency() * 2.0).collect();
        assert!((nmse(&truth, &doubled).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nmse_error_paths() {
        assert!(matches!(nmse(&[], &[]), Err(Error::EmptyList)));
        let truth = two_graphs();
        let wrong_shape = vec![Array2::<f64>::zeros((2, 2)); 2];
        assert!(matches!(
            nmse(&truth, &wrong_shape),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn nmse_invariant_under_relabeling() {
        let truth = two_graphs();
        let est: Vec<Array2<f64>> = vec![
            array![[0.0, 0.9, 0.1], [0.9, 0.0, 1.8], [0.1, 1.8, 0.0]],
            array![[0.0, 0.4, 0.6], [0.4, 0.0, 0.1], [0.6, 0.1, 0.0]],
        ];
        let base = nmse(&truth, &est).unwrap();
        // permute nodes (0 1 2) -> (2 0 1) in both lists
        let perm = [2usize, 0, 1];
        let permute = |m: &Array2<f64>| {
            Array2::from_shape_fn((3, 3), |(i, j)| m[[perm[i], perm[j]]])
        };
        let truth_p: Vec<WeightedGraph> = truth
            .iter()
            .map(|g| graph(permute(g.adjacency())))
            .collect();
        let est_p: Vec<Array2<f64>> = est.iter().map(permute).collect();
        let permuted = nmse(&truth_p, &est_p).unwrap();
        assert!((base - permuted).abs() < 1e-15);
    }

    #[test]
    fn threshold_clamp_only_at_zero() {
        let m = array![[0.0, -0.3, 0.8], [-0.3, 0.0, 0.2], [0.8, 0.2, 0.0]];
        let g = threshold_sparsify(&m, 0.0).unwrap();
        assert_eq!(
            g.adjacency(),
            &array![[0.0, 0.0, 0.8], [0.0, 0.0, 0.2], [0.8, 0.2, 0.0]]
        );
    }

    #[test]
    fn threshold_above_max_empties_graph() {
        let m = array![[0.0, 0.4], [0.4, 0.0]];
        let g = threshold_sparsify(&m, 0.5).unwrap();
        assert_eq!(g.edge_count(0.0), 0);
    }

    #[test]
    fn threshold_keeps_entries_at_or_above_tau() {
        let m = array![[0.0, 0.6, 0.1], [0.6, 0.0, 0.3], [0.1, 0.3, 0.0]];
        let g = threshold_sparsify(&m, 0.3).unwrap();
        assert_eq!(
            g.adjacency(),
            &array![[0.0, 0.6, 0.0], [0.6, 0.0, 0.3], [0.0, 0.3, 0.0]]
        );
        // idempotent at fixed tau
        let again = threshold_sparsify(g.adjacency(), 0.3).unwrap();
        assert_eq!(again.adjacency(), g.adjacency());
    }

    #[test]
    fn f_score_identical_supports() {
        let g = graph(array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.5], [0.0, 0.5, 0.0]]);
        assert_eq!(f_score(&g, &g, DEFAULT_EDGE_EPS).unwrap(), 1.0);
    }

    #[test]
    fn f_score_empty_prediction() {
        let truth = graph(array![[0.0, 1.0], [1.0, 0.0]]);
        let empty = graph(Array2::<f64>::zeros((2, 2)));
        assert_eq!(f_score(&truth, &empty, DEFAULT_EDGE_EPS).unwrap(), 0.0);
        // both empty agree perfectly
        assert_eq!(f_score(&empty, &empty, DEFAULT_EDGE_EPS).unwrap(), 1.0);
    }

    #[test]
    fn f_score_half_right() {
        // truth has 4 edges; prediction covers 2 of them plus 2 false ones
        let truth = graph(array![
            [0.0, 1.0, 1.0, 0.0],
            [1.0, 0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0]
        ]);
        let est = graph(array![
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0, 0.0]
        ]);
        assert!((f_score(&truth, &est, DEFAULT_EDGE_EPS).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn f_score_shape_mismatch() {
        let a = graph(Array2::<f64>::zeros((2, 2)));
        let b = graph(Array2::<f64>::zeros((3, 3)));
        assert!(matches!(
            f_score(&a, &b, DEFAULT_EDGE_EPS),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn count_matching_tau_selects_top_entries() {
        let m = array![
            [0.0, 0.9, 0.1, 0.5],
            [0.9, 0.0, 0.3, -0.2],
            [0.1, 0.3, 0.0, 0.7],
            [0.5, -0.2, 0.7, 0.0]
        ];
        let tau = count_matching_tau(&m, 3);
        assert_eq!(tau, 0.5);
        let g = threshold_sparsify(&m, tau).unwrap();
        assert_eq!(g.edge_count(0.0), 3);
        // degenerate targets
        assert_eq!(count_matching_tau(&m, 100), 0.0);
        let none = count_matching_tau(&m, 0);
        assert_eq!(threshold_sparsify(&m, none).unwrap().edge_count(0.0), 0);
    }

    #[test]
    fn mean_edge_count_averages() {
        let graphs = two_graphs();
        // 2 and 2 edges
        assert_eq!(mean_edge_count(graphs.iter(), DEFAULT_EDGE_EPS), 2.0);
    }

    #[test]
    fn report_serializes() {
        let report = EvalReport {
            nmse: 0.5,
            f_score: 0.75,
            n_graphs: 16,
            n_runs: 1,
            per_m: None,
        };
        let text = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.nmse, 0.5);
        assert!(back.per_m.is_none());
    }
}
