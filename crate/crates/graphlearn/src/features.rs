//! Pairwise similarity features and the linear edge-weight model.
//!
//! Each node carries one value per graph signal; the feature vector for a
//! node pair saturates at 1 when two signals agree and decays with their
//! squared difference. Stacking the per-pair feature rows gives an
//! `N x (N K)` block matrix whose product with the replicated coefficient
//! matrix `I_N (x) w` yields the predicted adjacency.

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::{SpectralPolynomial, WeightedGraph};

/// `N x M` matrix of graph signals; column `m` is one signal, row `i` is the
/// per-node feature vector used by the similarity map.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    values: Array2<f64>,
}

impl SignalMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        for ((i, j), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
        Ok(Self { values })
    }

    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_signals(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn node_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }
}

/// `N x (N K)` stacked feature matrix: the `(i, j)` block of width `K` holds
/// the feature vector of the node pair `(i, j)`; diagonal blocks are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlockMatrix {
    n_nodes: usize,
    feature_dim: usize,
    values: Array2<f64>,
}

impl FeatureBlockMatrix {
    pub fn new(n_nodes: usize, feature_dim: usize, values: Array2<f64>) -> Result<Self> {
        let expected = (n_nodes, n_nodes * feature_dim);
        if values.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: values.dim(),
            });
        }
        Ok(Self {
            n_nodes,
            feature_dim,
            values,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Feature block for the node pair `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> ArrayView1<'_, f64> {
        let k = self.feature_dim;
        self.values.slice(s![i, j * k..(j + 1) * k])
    }

    /// The `N x N` matrix of the `k`-th feature across all node pairs.
    ///
    /// With the canonical feature map this is symmetric with zero diagonal,
    /// so it is itself a valid weighted adjacency; the predicted adjacency is
    /// the `w`-weighted sum of these slices.
    pub fn feature_slice(&self, k: usize) -> Array2<f64> {
        let n = self.n_nodes;
        let kk = self.feature_dim;
        let mut out = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = self.values[[i, j * kk + k]];
            }
        }
        out
    }
}

/// Learned regression coefficients plus the hyperparameters needed to
/// reproduce predictions.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    pub w: Array1<f64>,
    pub sigma: f64,
    pub h: SpectralPolynomial,
    pub alpha: f64,
    pub beta: f64,
    /// Set when the quadratic form solved during training was not positive
    /// semidefinite within tolerance. Predictions remain well defined; the
    /// recovered coefficients are a stationary point rather than a certified
    /// minimum.
    pub psd_warning: bool,
}

impl RegressionModel {
    pub fn new(
        w: Array1<f64>,
        sigma: f64,
        h: SpectralPolynomial,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "model coefficient count",
                expected: 1,
                found: 0,
            });
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self {
            w,
            sigma,
            h,
            alpha,
            beta,
            psd_warning: false,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.w.len()
    }
}

/// Similarity feature for one node pair: component `m` is
/// `sigma / max((xi_m - xj_m)^2, sigma)`, so it lives in `(0, 1]` and decays
/// as the two signal values drift apart. Node pairs with `i = j` map to the
/// zero vector (no self loops).
pub fn phi(
    xi: ArrayView1<f64>,
    xj: ArrayView1<f64>,
    sigma: f64,
    same_node: bool,
) -> Result<Array1<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch {
            context: "phi node rows",
            expected: xi.len(),
            found: xj.len(),
        });
    }
    if same_node {
        return Ok(Array1::zeros(xi.len()));
    }
    let out = xi
        .iter()
        .zip(xj.iter())
        .map(|(&a, &b)| {
            let d2 = (a - b) * (a - b);
            sigma / d2.max(sigma)
        })
        .collect();
    Ok(out)
}

/// Builds the stacked feature matrix for one graph's signals (`K = M`).
pub fn assemble_feature_matrix(x: &SignalMatrix, sigma: f64) -> Result<FeatureBlockMatrix> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let n = x.n_nodes();
    if n < 2 {
        return Err(Error::GraphTooSmall { min: 2, got: n });
    }
    let k = x.n_signals();
    let mut values = Array2::<f64>::zeros((n, n * k));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let xi = x.node_row(i);
            let xj = x.node_row(j);
            for m in 0..k {
                let d = xi[m] - xj[m];
                let d2 = d * d;
                values[[i, j * k + m]] = sigma / d2.max(sigma);
            }
        }
    }
    FeatureBlockMatrix::new(n, k, values)
}

/// Block-diagonal replication `I_n (x) w`: an `(n K) x n` matrix whose column
/// `j` holds `w` in rows `[jK, (j+1)K)`.
pub fn kron_replicate(w: ArrayView1<f64>, n: usize) -> Array2<f64> {
    let k = w.len();
    let mut out = Array2::<f64>::zeros((n * k, n));
    for j in 0..n {
        for t in 0..k {
            out[[j * k + t, j]] = w[t];
        }
    }
    out
}

/// Unclamped linear prediction: entry `(i, j)` is `w . phi(i, j)`.
pub(crate) fn raw_prediction(phi_mat: &FeatureBlockMatrix, w: &Array1<f64>) -> Result<Array2<f64>> {
    let k = phi_mat.feature_dim();
    if w.len() != k {
        return Err(Error::DimensionMismatch {
            context: "prediction coefficient count",
            expected: k,
            found: w.len(),
        });
    }
    let n = phi_mat.n_nodes();
    let values = phi_mat.values();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for t in 0..k {
                acc += values[[i, j * k + t]] * w[t];
            }
            out[[i, j]] = acc;
        }
    }
    Ok(out)
}

/// Predicted adjacency for the given features. The raw linear output is
/// symmetric with a zero diagonal by construction; negative entries are
/// clamped to zero only here, at the graph boundary, never inside training.
pub fn predict_adjacency(
    phi_mat: &FeatureBlockMatrix,
    model: &RegressionModel,
) -> Result<WeightedGraph> {
    let mut raw = raw_prediction(phi_mat, &model.w)?;
    raw.mapv_inplace(|v| v.max(0.0));
    WeightedGraph::new(raw)
}

/// Laplacian of the *unclamped* linear prediction, `diag(A_hat 1) - A_hat`.
/// Training regularizes this quantity, so no clamping is applied.
pub fn estimate_laplacian(
    phi_mat: &FeatureBlockMatrix,
    model: &RegressionModel,
) -> Result<Array2<f64>> {
    let raw = raw_prediction(phi_mat, &model.w)?;
    Ok(laplacian_of_matrix(&raw))
}

/// `diag(M 1) - M` for an arbitrary square matrix.
pub(crate) fn laplacian_of_matrix(m: &Array2<f64>) -> Array2<f64> {
    let n = m.nrows();
    let mut out = -m.clone();
    for i in 0..n {
        let row_sum: f64 = m.row(i).sum();
        out[[i, i]] += row_sum;
    }
    out
}

/// Data-driven default for the saturation parameter: twice the median
/// squared signal difference over all node pairs and signals, floored at
/// `1e-8` so degenerate (constant) inputs stay valid.
///
/// At this scale roughly the most-similar half of all node pairs saturates,
/// so the features act as a robust agreement vote rather than amplifying the
/// noise of individual near-zero differences.
pub fn default_sigma<'a>(signals: impl IntoIterator<Item = &'a SignalMatrix>) -> f64 {
    let mut diffs: Vec<f64> = Vec::new();
    for x in signals {
        let n = x.n_nodes();
        let m = x.n_signals();
        let v = x.values();
        for i in 0..n {
            for j in (i + 1)..n {
                for c in 0..m {
                    let d = v[[i, c]] - v[[j, c]];
                    diffs.push(d * d);
                }
            }
        }
    }
    if diffs.is_empty() {
        return 1e-8;
    }
    diffs.sort_by(f64::total_cmp);
    let mid = diffs.len() / 2;
    let median = if diffs.len() % 2 == 1 {
        diffs[mid]
    } else {
        0.5 * (diffs[mid - 1] + diffs[mid])
    };
    (2.0 * median).max(1e-8)
}
