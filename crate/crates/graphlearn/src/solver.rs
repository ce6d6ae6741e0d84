//! Closed-form training of the edge-weight regression coefficients.
//!
//! The training objective is, over `G` graphs of common size `N`,
//!
//! ```text
//! J(w) = sum_g |A_g - Phi_g W|_F^2
//!      + alpha sum_g tr(X_g^T h(Lhat_g) X_g)
//!      + beta tr(W^T W),        W = I_N (x) w
//! ```
//!
//! with `h` restricted to order two so that `J` is an exact quadratic in `w`.
//! The minimizer solves a `K x K` linear system. That system is assembled
//! without ever materializing the full `N^2 K x N^2 K` quadratic-form matrix:
//! each coefficient direction `k` is probed with the sparse matrix
//! `I_N (x) e_k`, producing one `K x N^2 K` row at a time, which is then
//! collapsed through the column-selection sets `Omega_j` onto the reduced
//! `K x K` matrix. Memory stays at `O(N^2 K^2)` in place of `O(N^4 K^2)`.
//!
//! Every assembled system is cross-checked against a finite-difference
//! gradient of the cost before it is used; an independent quadratic-probing
//! oracle ([`quadratic_probe`]) is available for tests.

use std::ops::Range;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{
    assemble_feature_matrix, laplacian_of_matrix, raw_prediction, FeatureBlockMatrix,
    RegressionModel, SignalMatrix,
};
use crate::graph::{jacobi_eigh, SpectralPolynomial, WeightedGraph};

/// Relative singular-value cutoff for the pseudo-inverse solve.
pub const PINV_REL_CUTOFF: f64 = 1e-10;

/// Relative threshold below which the quadratic form counts as indefinite.
pub const PSD_WARN_REL_TOL: f64 = 1e-8;

/// Step used for finite-difference self-checks and diagnostics.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy)]
pub struct HyperParams {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub h: SpectralPolynomial,
}

impl HyperParams {
    pub fn new(sigma: f64, alpha: f64, beta: f64, h: SpectralPolynomial) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self {
            sigma,
            alpha,
            beta,
            h,
        })
    }
}

/// One labeled example: a graph's signals and its adjacency.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub signals: SignalMatrix,
    pub graph: WeightedGraph,
}

/// Training examples sharing one graph size and one signal count.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pairs: Vec<TrainingPair>,
    n_nodes: usize,
    n_signals: usize,
}

impl TrainingSet {
    pub fn new(pairs: Vec<(SignalMatrix, WeightedGraph)>) -> Result<Self> {
        let Some((first_x, first_g)) = pairs.first() else {
            return Err(Error::EmptyTrainingSet);
        };
        let n_nodes = first_g.n_nodes();
        let n_signals = first_x.n_signals();
        for (x, g) in &pairs {
            if g.n_nodes() != n_nodes {
                return Err(Error::MixedGraphSizes {
                    expected: n_nodes,
                    found: g.n_nodes(),
                });
            }
            if x.n_signals() != n_signals {
                return Err(Error::MixedSignalCounts {
                    expected: n_signals,
                    found: x.n_signals(),
                });
            }
            if x.n_nodes() != g.n_nodes() {
                return Err(Error::DimensionMismatch {
                    context: "signal rows vs graph nodes",
                    expected: g.n_nodes(),
                    found: x.n_nodes(),
                });
            }
        }
        let pairs = pairs
            .into_iter()
            .map(|(signals, graph)| TrainingPair { signals, graph })
            .collect();
        Ok(Self {
            pairs,
            n_nodes,
            n_signals,
        })
    }

    pub fn n_graphs(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_signals(&self) -> usize {
        self.n_signals
    }

    pub fn pairs(&self) -> &[TrainingPair] {
        &self.pairs
    }
}

/// The reduced `K x K` normal system together with the column-selection sets
/// it was collapsed through.
///
/// `selection[j]` is the 0-based index range `j (N+1) K .. j (N+1) K + K`
/// into the column-major vectorization of an `(N K) x N` matrix; these are
/// exactly the positions where the coefficient vector sits inside
/// `vec(I_N (x) w)`.
#[derive(Debug, Clone)]
pub struct NormalSystem {
    pub f_bar: Array2<f64>,
    pub rhs: Array1<f64>,
    pub selection: Vec<Range<usize>>,
}

/// Per-graph quantities reused across cost evaluations and assembly.
struct Prepared {
    n: usize,
    k: usize,
    /// Stacked feature matrix per graph.
    phi: Vec<FeatureBlockMatrix>,
    /// Signal Gram `X X^T` per graph.
    s: Vec<Array2<f64>>,
    /// Target adjacency per graph.
    a: Vec<Array2<f64>>,
    /// Column sums of each feature matrix (`Phi^T 1`).
    phi_t_ones: Vec<Array1<f64>>,
}

fn prepare(ts: &TrainingSet, sigma: f64) -> Result<Prepared> {
    let n = ts.n_nodes();
    let k = ts.n_signals();
    let mut phi = Vec::with_capacity(ts.n_graphs());
    let mut s = Vec::with_capacity(ts.n_graphs());
    let mut a = Vec::with_capacity(ts.n_graphs());
    let mut phi_t_ones = Vec::with_capacity(ts.n_graphs());
    for pair in ts.pairs() {
        let fm = assemble_feature_matrix(&pair.signals, sigma)?;
        phi_t_ones.push(fm.values().sum_axis(Axis(0)));
        let x = pair.signals.values();
        s.push(x.dot(&x.t()));
        a.push(pair.graph.adjacency().clone());
        phi.push(fm);
    }
    Ok(Prepared {
        n,
        k,
        phi,
        s,
        a,
        phi_t_ones,
    })
}

fn check_w_len(prep_k: usize, w: &Array1<f64>) -> Result<()> {
    if w.len() != prep_k {
        return Err(Error::DimensionMismatch {
            context: "coefficient count vs feature dimension",
            expected: prep_k,
            found: w.len(),
        });
    }
    Ok(())
}

fn cost_prepared(w: &Array1<f64>, prep: &Prepared, hyper: &HyperParams) -> f64 {
    let mut total = 0.0;
    for (g, fm) in prep.phi.iter().enumerate() {
        let raw = raw_prediction(fm, w).expect("prepared dimensions are consistent");
        let a = &prep.a[g];
        total += (&raw - a).iter().map(|v| v * v).sum::<f64>();

        if hyper.alpha != 0.0 {
            let s = &prep.s[g];
            let h = &hyper.h;
            let mut reg = 0.0;
            if h.h0 != 0.0 {
                reg += h.h0 * s.diag().sum();
            }
            if h.h1 != 0.0 || h.h2 != 0.0 {
                let lhat = laplacian_of_matrix(&raw);
                if h.h1 != 0.0 {
                    let mut tr = 0.0;
                    for i in 0..prep.n {
                        for j in 0..prep.n {
                            tr += lhat[[i, j]] * s[[j, i]];
                        }
                    }
                    reg += h.h1 * tr;
                }
                if h.h2 != 0.0 {
                    let ls = lhat.dot(s);
                    let mut tr = 0.0;
                    for i in 0..prep.n {
                        for j in 0..prep.n {
                            tr += lhat[[i, j]] * ls[[j, i]];
                        }
                    }
                    reg += h.h2 * tr;
                }
            }
            total += hyper.alpha * reg;
        }
    }
    total += hyper.beta * prep.n as f64 * w.dot(w);
    total
}

/// Training cost `J(w)` (data misfit + spectral regularizer + ridge).
pub fn cost(w: &Array1<f64>, ts: &TrainingSet, hyper: &HyperParams) -> Result<f64> {
    let prep = prepare(ts, hyper.sigma)?;
    check_w_len(prep.k, w)?;
    Ok(cost_prepared(w, &prep, hyper))
}

/// Central finite differences of the cost, component by component.
///
/// The cost is an exact quadratic in `w`, so central differences are exact up
/// to round-off; this is the ground-truth gradient the assembled system is
/// checked against.
pub fn finite_difference_gradient(
    w: &Array1<f64>,
    ts: &TrainingSet,
    hyper: &HyperParams,
    step: f64,
) -> Result<Array1<f64>> {
    assert!(step > 0.0, "finite-difference step must be positive");
    let prep = prepare(ts, hyper.sigma)?;
    check_w_len(prep.k, w)?;
    Ok(fd_gradient_prepared(w, &prep, hyper, step))
}

fn fd_gradient_prepared(
    w: &Array1<f64>,
    prep: &Prepared,
    hyper: &HyperParams,
    step: f64,
) -> Array1<f64> {
    let k = prep.k;
    let mut grad = Array1::<f64>::zeros(k);
    let mut probe = w.clone();
    for t in 0..k {
        let orig = probe[t];
        probe[t] = orig + step;
        let plus = cost_prepared(&probe, prep, hyper);
        probe[t] = orig - step;
        let minus = cost_prepared(&probe, prep, hyper);
        probe[t] = orig;
        grad[t] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Recovers the exact quadratic `J(w) = c - 2 b.w + w^T Q w` by evaluating
/// the cost at `w = 0`, at each basis vector, and at each pairwise sum of
/// basis vectors, then interpolating. Entirely independent of the
/// closed-form assembly; `Q` comes out symmetric by construction.
pub fn quadratic_probe(
    ts: &TrainingSet,
    hyper: &HyperParams,
) -> Result<(Array2<f64>, Array1<f64>, f64)> {
    let prep = prepare(ts, hyper.sigma)?;
    let k = prep.k;
    let c = cost_prepared(&Array1::zeros(k), &prep, hyper);

    let mut q = Array2::<f64>::zeros((k, k));
    let mut b = Array1::<f64>::zeros(k);
    let mut at_basis = vec![0.0; k];
    let mut probe = Array1::<f64>::zeros(k);
    for t in 0..k {
        probe.fill(0.0);
        probe[t] = 1.0;
        at_basis[t] = cost_prepared(&probe, &prep, hyper);
        probe[t] = 2.0;
        let at_double = cost_prepared(&probe, &prep, hyper);
        // J(e) = c - 2b + Q_tt, J(2e) = c - 4b + 4Q_tt
        q[[t, t]] = (at_double - 2.0 * at_basis[t] + c) / 2.0;
        b[t] = (c + q[[t, t]] - at_basis[t]) / 2.0;
    }
    for t in 0..k {
        for u in (t + 1)..k {
            probe.fill(0.0);
            probe[t] = 1.0;
            probe[u] = 1.0;
            let at_pair = cost_prepared(&probe, &prep, hyper);
            let q_tu =
                (at_pair - c + 2.0 * (b[t] + b[u]) - q[[t, t]] - q[[u, u]]) / 2.0;
            q[[t, u]] = q_tu;
            q[[u, t]] = q_tu;
        }
    }
    Ok((q, b, c))
}

/// The `(N K) x N` matrix whose column-major vectorization is the constant
/// part of the cost gradient (the `g` vector).
fn gradient_constant_matrix(prep: &Prepared, hyper: &HyperParams) -> Array2<f64> {
    let (n, k) = (prep.n, prep.k);
    let mut gm = Array2::<f64>::zeros((n * k, n));
    let ah1 = hyper.alpha * hyper.h.h1;
    for (g, fm) in prep.phi.iter().enumerate() {
        let phi_t = fm.values().t();
        gm.scaled_add(2.0, &phi_t.dot(&prep.a[g]));
        if ah1 != 0.0 {
            // row-constant diag(S) matrix minus S
            let s = &prep.s[g];
            let mut inner = -s.clone();
            for i in 0..n {
                let d = s[[i, i]];
                for j in 0..n {
                    inner[[i, j]] += d;
                }
            }
            gm.scaled_add(-ah1, &phi_t.dot(&inner));
        }
    }
    gm
}

/// The linear part of the stationarity condition as a flat vector: the
/// column-major vectorization of [`gradient_constant_matrix`], length
/// `N^2 K`.
pub fn assemble_g(ts: &TrainingSet, hyper: &HyperParams) -> Result<Array1<f64>> {
    let prep = prepare(ts, hyper.sigma)?;
    Ok(vectorize_col_major(&gradient_constant_matrix(&prep, hyper)))
}

/// Column-major vectorization.
fn vectorize_col_major(m: &Array2<f64>) -> Array1<f64> {
    let (rows, cols) = m.dim();
    let mut out = Array1::<f64>::zeros(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            out[j * rows + i] = m[[i, j]];
        }
    }
    out
}

/// Applies the quadratic-form operator to the probe direction `I_N (x) e_k`,
/// returning the resulting `(N K) x N` matrix (one row of the reduced
/// assembly, still unvectorized).
///
/// Every term reduces to small dense products because the probe turns the
/// feature matrix into its `k`-th `N x N` slice.
fn probe_row(prep: &Prepared, hyper: &HyperParams, k: usize) -> Array2<f64> {
    let (n, kk) = (prep.n, prep.k);
    let mut r = Array2::<f64>::zeros((n * kk, n));
    let ah2 = hyper.alpha * hyper.h.h2;
    for (g, fm) in prep.phi.iter().enumerate() {
        let phi_t = fm.values().t();
        let y = fm.feature_slice(k);
        r.scaled_add(2.0, &phi_t.dot(&y));
        if ah2 != 0.0 {
            let s = &prep.s[g];
            let phi_t_one = &prep.phi_t_ones[g];
            let ys = y.dot(s);
            r.scaled_add(2.0 * ah2, &phi_t.dot(&ys));

            let y_row_sums = y.sum_axis(Axis(1));
            let y_col_sums = y.sum_axis(Axis(0));
            // degree-degree coupling of the estimated Laplacian
            let c_vec =
                Array1::from_iter((0..n).map(|i| s[[i, i]] * y_row_sums[i]));
            let d_vec =
                Array1::from_iter((0..n).map(|i| s[[i, i]] * y_col_sums[i]));
            add_outer(&mut r, ah2, phi_t_one, &c_vec);
            let phi_d = phi_t.dot(&d_vec);
            add_outer(&mut r, ah2, &phi_d, &Array1::ones(n));
            // degree-adjacency cross terms
            let m_vec = Array1::from_iter((0..n).map(|i| ys[[i, i]]));
            add_outer(&mut r, -2.0 * ah2, phi_t_one, &m_vec);
            let mut z = s.clone();
            for i in 0..n {
                let scale = y_col_sums[i];
                for j in 0..n {
                    z[[i, j]] *= scale;
                }
            }
            r.scaled_add(-2.0 * ah2, &phi_t.dot(&z));
        }
    }
    // ridge term: gradient of beta*tr(W^T W) is 2 beta W
    if hyper.beta != 0.0 {
        for j in 0..n {
            r[[j * kk + k, j]] += 2.0 * hyper.beta;
        }
    }
    r
}

fn add_outer(target: &mut Array2<f64>, scale: f64, col: &Array1<f64>, row: &Array1<f64>) {
    for (i, &c) in col.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let sc = scale * c;
        for (j, &r) in row.iter().enumerate() {
            target[[i, j]] += sc * r;
        }
    }
}

/// 0-based column-selection ranges: `selection[j] = j (N+1) K .. + K`.
pub fn omega_selection(n: usize, k: usize) -> Vec<Range<usize>> {
    (0..n)
        .map(|j| {
            let start = j * (n + 1) * k;
            start..start + k
        })
        .collect()
}

/// Collapses the column-major vectorization of an `(N K) x N` matrix through
/// the selection sets, summing the selected `K`-wide chunks.
fn reduce_over_selection(m: &Array2<f64>, selection: &[Range<usize>]) -> Array1<f64> {
    let rows = m.nrows();
    let k = selection.first().map_or(0, |r| r.len());
    let mut out = Array1::<f64>::zeros(k);
    for range in selection {
        for (t, idx) in range.clone().enumerate() {
            let col = idx / rows;
            let row = idx % rows;
            out[t] += m[[row, col]];
        }
    }
    out
}

/// Assembles the reduced `K x K` system whose solution is the optimal
/// coefficient vector, probing one coefficient direction at a time and
/// collapsing through the selection sets.
///
/// Before returning, the system is checked against a finite-difference
/// gradient of the cost at a fixed probe point; a discrepancy aborts with
/// [`Error::SystemSelfCheck`]. The residual `f_bar w - rhs` of a correctly
/// assembled system equals the cost gradient at `w` exactly.
pub fn assemble_reduced_system(ts: &TrainingSet, hyper: &HyperParams) -> Result<NormalSystem> {
    let prep = prepare(ts, hyper.sigma)?;
    let (n, k) = (prep.n, prep.k);
    let selection = omega_selection(n, k);

    let rhs = reduce_over_selection(&gradient_constant_matrix(&prep, hyper), &selection);

    let rows: Vec<Array1<f64>> = (0..k)
        .into_par_iter()
        .map(|t| reduce_over_selection(&probe_row(&prep, hyper, t), &selection))
        .collect();
    let mut f_bar = Array2::<f64>::zeros((k, k));
    for (t, row) in rows.into_iter().enumerate() {
        f_bar.row_mut(t).assign(&row);
    }

    let system = NormalSystem {
        f_bar,
        rhs,
        selection,
    };
    self_check(&system, &prep, hyper)?;
    Ok(system)
}

/// Verifies `f_bar w - rhs` against the finite-difference gradient at a
/// deterministic probe point.
fn self_check(system: &NormalSystem, prep: &Prepared, hyper: &HyperParams) -> Result<()> {
    let k = prep.k;
    let w_test = Array1::from_iter((0..k).map(|t| {
        let base = 0.7 / (t as f64 + 1.0);
        if t % 2 == 0 {
            base
        } else {
            -base
        }
    }));
    let closed_form = system.f_bar.dot(&w_test) - &system.rhs;
    let numeric = fd_gradient_prepared(&w_test, prep, hyper, DEFAULT_FD_STEP);
    let residual = (&closed_form - &numeric)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let scale = 1.0
        + system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt()
        + closed_form.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-6 * scale;
    if residual > tol {
        return Err(Error::SystemSelfCheck { residual, tol });
    }
    Ok(())
}

/// Symmetric pseudo-inverse solve of `m x = v` with a relative eigenvalue
/// cutoff; returns the minimum-norm solution when `m` is singular, plus the
/// extreme eigenvalues for diagnostics.
fn pinv_solve(m: &Array2<f64>, v: &Array1<f64>) -> (Array1<f64>, f64, f64) {
    let sym = (m + &m.t()) * 0.5;
    let (eigenvalues, eigenvectors) = jacobi_eigh(&sym);
    let max_abs = eigenvalues
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()));
    let cutoff = PINV_REL_CUTOFF * max_abs;
    let projected = eigenvectors.t().dot(v);
    let scaled = Array1::from_iter(
        eigenvalues
            .iter()
            .zip(projected.iter())
            .map(|(&e, &p)| if e.abs() <= cutoff { 0.0 } else { p / e }),
    );
    let solution = eigenvectors.dot(&scaled);
    let min_eig = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    (solution, min_eig, max_abs)
}

/// Diagnostics gathered while solving.
#[derive(Debug, Clone)]
pub struct SolveDiagnostics {
    pub final_cost: f64,
    pub gradient_norm: f64,
    pub gradient_tol: f64,
    pub rhs_norm: f64,
    /// Smallest eigenvalue of the symmetrized quadratic form.
    pub min_eigenvalue: f64,
    pub psd_warning: bool,
}

/// Solves for the optimal regression coefficients and reports diagnostics:
/// final cost, the finite-difference gradient norm at the optimum (with the
/// tolerance it is held to), and whether the quadratic form failed the
/// positive-semidefiniteness check.
pub fn solve_with_diagnostics(
    ts: &TrainingSet,
    hyper: &HyperParams,
) -> Result<(RegressionModel, SolveDiagnostics)> {
    if ts.n_nodes() < 2 {
        return Err(Error::GraphTooSmall {
            min: 2,
            got: ts.n_nodes(),
        });
    }
    let system = assemble_reduced_system(ts, hyper)?;
    let (w, min_eig_fbar, max_abs_fbar) = pinv_solve(&system.f_bar, &system.rhs);

    // Convexity is not assumed: flag the model when the quadratic form has a
    // meaningfully negative eigenvalue (possible for aggressive h2 / alpha).
    let psd_warning = min_eig_fbar < -PSD_WARN_REL_TOL * max_abs_fbar.max(1e-300);

    let prep = prepare(ts, hyper.sigma)?;
    let final_cost = cost_prepared(&w, &prep, hyper);
    let gradient = fd_gradient_prepared(&w, &prep, hyper, DEFAULT_FD_STEP);
    let gradient_norm = gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rhs_norm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gradient_tol = 1e-6 * (1.0 + rhs_norm);

    let mut model = RegressionModel::new(w, hyper.sigma, hyper.h, hyper.alpha, hyper.beta)?;
    model.psd_warning = psd_warning;
    let diagnostics = SolveDiagnostics {
        final_cost,
        gradient_norm,
        gradient_tol,
        rhs_norm,
        // eigenvalues of the quadratic form Q are half those of f_bar
        min_eigenvalue: min_eig_fbar * 0.5,
        psd_warning,
    };
    Ok((model, diagnostics))
}

/// Optimal regression coefficients via the reduced pseudo-inverse solve.
pub fn solve(ts: &TrainingSet, hyper: &HyperParams) -> Result<RegressionModel> {
    solve_with_diagnostics(ts, hyper).map(|(model, _)| model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hyper(sigma: f64, alpha: f64, beta: f64, h: (f64, f64, f64)) -> HyperParams {
        HyperParams::new(sigma, alpha, beta, SpectralPolynomial::new(h.0, h.1, h.2)).unwrap()
    }

    fn random_symmetric_adjacency(n: usize, rng: &mut ChaCha8Rng) -> WeightedGraph {
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.gen::<f64>();
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        WeightedGraph::new(a).unwrap()
    }

    fn random_instance(
        n: usize,
        k: usize,
        graphs: usize,
        rng: &mut ChaCha8Rng,
    ) -> TrainingSet {
        let mut pairs = Vec::new();
        for _ in 0..graphs {
            let x = SignalMatrix::new(Array2::from_shape_fn((n, k), |_| {
                rng.gen::<f64>() * 2.0 - 1.0
            }))
            .unwrap();
            let g = random_symmetric_adjacency(n, rng);
            pairs.push((x, g));
        }
        TrainingSet::new(pairs).unwrap()
    }

    /// Dense Gaussian elimination with partial pivoting, used only as an
    /// independent oracle in tests.
    fn gauss_solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
        let n = b.len();
        let mut m = a.clone();
        let mut v = b.clone();
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if m[[r, col]].abs() > m[[pivot, col]].abs() {
                    pivot = r;
                }
            }
            if pivot != col {
                for c in 0..n {
                    let tmp = m[[col, c]];
                    m[[col, c]] = m[[pivot, c]];
                    m[[pivot, c]] = tmp;
                }
                v.swap(col, pivot);
            }
            let d = m[[col, col]];
            assert!(d.abs() > 1e-12, "oracle system is singular");
            for r in (col + 1)..n {
                let factor = m[[r, col]] / d;
                for c in col..n {
                    m[[r, c]] -= factor * m[[col, c]];
                }
                v[r] -= factor * v[col];
            }
        }
        let mut x = Array1::<f64>::zeros(n);
        for row in (0..n).rev() {
            let mut acc = v[row];
            for c in (row + 1)..n {
                acc -= m[[row, c]] * x[c];
            }
            x[row] = acc / m[[row, row]];
        }
        x
    }

    fn oracle_minimizer(q: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
        let sym = (q + &q.t()) * 0.5;
        gauss_solve(&sym, b)
    }

    #[test]
    fn cost_zero_coefficients_is_data_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ts = random_instance(4, 2, 2, &mut rng);
        let hp = hyper(0.5, 0.0, 0.0, (0.0, 1.0, 0.0));
        let expected: f64 = ts
            .pairs()
            .iter()
            .map(|p| p.graph.adjacency().iter().map(|v| v * v).sum::<f64>())
            .sum();
        let got = cost(&Array1::zeros(2), &ts, &hp).unwrap();
        assert!((got - expected).abs() < 1e-12 * (1.0 + expected));
    }

    #[test]
    fn cost_exact_fit_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = 0.4;
        let n = 5;
        let w_true = array![0.6, 0.3];
        let x = SignalMatrix::new(Array2::from_shape_fn((n, 2), |_| rng.gen::<f64>())).unwrap();
        let fm = assemble_feature_matrix(&x, sigma).unwrap();
        let a = raw_prediction(&fm, &w_true).unwrap();
        let ts = TrainingSet::new(vec![(x, WeightedGraph::new(a).unwrap())]).unwrap();
        let hp = hyper(sigma, 0.0, 0.0, (0.0, 1.0, 0.0));
        let got = cost(&w_true, &ts, &hp).unwrap();
        assert!(got.abs() < 1e-20);
    }

    #[test]
    fn cost_zero_w_with_regularizers() {
        // At w = 0 the estimated Laplacian vanishes, so h contributes only h0.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ts = random_instance(4, 3, 2, &mut rng);
        let alpha = 0.7;
        let h0 = 1.3;
        let hp = hyper(0.2, alpha, 5.0, (h0, -0.4, 0.9));
        let data: f64 = ts
            .pairs()
            .iter()
            .map(|p| p.graph.adjacency().iter().map(|v| v * v).sum::<f64>())
            .sum();
        let trace_s: f64 = ts
            .pairs()
            .iter()
            .map(|p| {
                let x = p.signals.values();
                x.dot(&x.t()).diag().sum()
            })
            .sum();
        let got = cost(&Array1::zeros(3), &ts, &hp).unwrap();
        let expected = data + alpha * h0 * trace_s;
        assert!((got - expected).abs() < 1e-10 * (1.0 + expected));
    }

    #[test]
    fn ridge_term_scales_as_n_norm_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ts = random_instance(5, 2, 1, &mut rng);
        let w = array![0.3, -0.8];
        let beta = 2.5;
        let with = cost(&w, &ts, &hyper(0.3, 0.0, beta, (0.0, 1.0, 0.0))).unwrap();
        let without = cost(&w, &ts, &hyper(0.3, 0.0, 0.0, (0.0, 1.0, 0.0))).unwrap();
        let expected = beta * 5.0 * w.dot(&w);
        assert!((with - without - expected).abs() < 1e-12 * (1.0 + expected));
    }

    #[test]
    fn quadratic_probe_reproduces_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ts = random_instance(4, 3, 2, &mut rng);
        let hp = hyper(0.3, 0.1, 0.7, (0.5, -0.6, 1.0));
        let (q, b, c) = quadratic_probe(&ts, &hp).unwrap();
        for _ in 0..20 {
            let w = Array1::from_shape_fn(3, |_| rng.gen::<f64>() * 4.0 - 2.0);
            let direct = cost(&w, &ts, &hp).unwrap();
            let interpolated = c - 2.0 * b.dot(&w) + w.dot(&q.dot(&w));
            assert!(
                (direct - interpolated).abs() <= 1e-9 * (1.0 + direct.abs()),
                "direct {direct} vs interpolated {interpolated}"
            );
        }
    }

    #[test]
    fn quadratic_probe_data_term_is_slice_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma = 0.25;
        let n = 4;
        let k = 3;
        let ts = random_instance(n, k, 1, &mut rng);
        let hp = hyper(sigma, 0.0, 0.0, (0.0, 1.0, 0.0));
        let (q, b, _c) = quadratic_probe(&ts, &hp).unwrap();
        let fm = assemble_feature_matrix(&ts.pairs()[0].signals, sigma).unwrap();
        let slices: Vec<Array2<f64>> = (0..k).map(|t| fm.feature_slice(t)).collect();
        let a = ts.pairs()[0].graph.adjacency();
        for t in 0..k {
            for u in 0..k {
                let gram: f64 = slices[t].iter().zip(slices[u].iter()).map(|(x, y)| x * y).sum();
                assert!((q[[t, u]] - gram).abs() < 1e-9 * (1.0 + gram.abs()));
            }
            let proj: f64 = slices[t].iter().zip(a.iter()).map(|(x, y)| x * y).sum();
            assert!((b[t] - proj).abs() < 1e-9 * (1.0 + proj.abs()));
        }
    }

    #[test]
    fn quadratic_probe_ridge_contribution_is_identity_scaled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5;
        let ts = random_instance(n, 2, 1, &mut rng);
        let beta = 3.0;
        let (q1, b1, _) = quadratic_probe(&ts, &hyper(0.3, 0.0, beta, (0.0, 1.0, 0.0))).unwrap();
        let (q0, b0, _) = quadratic_probe(&ts, &hyper(0.3, 0.0, 0.0, (0.0, 1.0, 0.0))).unwrap();
        let diff = &q1 - &q0;
        let expected = Array2::<f64>::eye(2) * (beta * n as f64);
        let err = (&diff - &expected)
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-9, "ridge Q contribution error {err}");
        let b_err = (&b1 - &b0).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(b_err < 1e-9, "ridge should not shift the linear term");
    }

    #[test]
    fn assemble_g_hand_case() {
        // Two nodes with equal signal values: feature value 1 off-diagonal.
        let x = SignalMatrix::new(array![[0.0], [0.0]]).unwrap();
        let a = WeightedGraph::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let ts = TrainingSet::new(vec![(x, a)]).unwrap();
        let hp = hyper(0.5, 0.0, 0.0, (0.0, 1.0, 0.0));
        let g = assemble_g(&ts, &hp).unwrap();
        assert_eq!(g.len(), 4);
        let expected = array![2.0, 0.0, 0.0, 2.0];
        let err = (&g - &expected).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn assemble_g_zero_targets() {
        let x = SignalMatrix::new(array![[0.1], [0.9], [0.4]]).unwrap();
        let a = WeightedGraph::new(Array2::<f64>::zeros((3, 3))).unwrap();
        let ts = TrainingSet::new(vec![(x, a)]).unwrap();
        let hp = hyper(0.5, 0.0, 0.0, (0.0, 1.0, 0.0));
        let g = assemble_g(&ts, &hp).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn assemble_g_matches_gradient_at_origin() {
        // At w = 0 the gradient of the cost is exactly the negated reduced g.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ts = random_instance(4, 2, 2, &mut rng);
        let hp = hyper(0.3, 0.2, 0.0, (0.7, -0.5, 0.0));
        let system = assemble_reduced_system(&ts, &hp).unwrap();
        let fd = finite_difference_gradient(&Array1::zeros(2), &ts, &hp, 1e-5).unwrap();
        for t in 0..2 {
            assert!(
                (fd[t] + system.rhs[t]).abs() < 1e-6 * (1.0 + system.rhs[t].abs()),
                "component {t}: fd {} vs -rhs {}",
                fd[t],
                -system.rhs[t]
            );
        }
    }

    #[test]
    fn reduced_system_two_node_scalar_case() {
        // Off-diagonal feature value c, single scalar coefficient:
        // the reduced system collapses to 4 c^2 w = 4 c a.
        let sigma = 0.1f64;
        let c = 0.4;
        let a_val = 0.3;
        let t = (sigma / c).sqrt();
        let x = SignalMatrix::new(array![[0.0], [t]]).unwrap();
        let fm = assemble_feature_matrix(&x, sigma).unwrap();
        assert!((fm.values()[[0, 1]] - c).abs() < 1e-12);
        let a = WeightedGraph::new(array![[0.0, a_val], [a_val, 0.0]]).unwrap();
        let ts = TrainingSet::new(vec![(x, a)]).unwrap();
        let hp = hyper(sigma, 0.0, 0.0, (0.0, 1.0, 0.0));
        let system = assemble_reduced_system(&ts, &hp).unwrap();
        assert!((system.f_bar[[0, 0]] - 4.0 * c * c).abs() < 1e-12);
        assert!((system.rhs[0] - 4.0 * c * a_val).abs() < 1e-12);
        let model = solve(&ts, &hp).unwrap();
        assert!((model.w[0] - a_val / c).abs() < 1e-10);
    }

    #[test]
    fn reduced_system_without_spectral_term_is_slice_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sigma = 0.3;
        let n = 4;
        let k = 3;
        let beta = 1.5;
        let ts = random_instance(n, k, 2, &mut rng);
        let hp = hyper(sigma, 0.0, beta, (0.0, 1.0, 0.0));
        let system = assemble_reduced_system(&ts, &hp).unwrap();
        let mut expected = Array2::<f64>::eye(k) * (2.0 * beta * n as f64);
        for pair in ts.pairs() {
            let fm = assemble_feature_matrix(&pair.signals, sigma).unwrap();
            let slices: Vec<Array2<f64>> = (0..k).map(|t| fm.feature_slice(t)).collect();
            for t in 0..k {
                for u in 0..k {
                    let gram: f64 =
                        slices[t].iter().zip(slices[u].iter()).map(|(x, y)| x * y).sum();
                    expected[[t, u]] += 2.0 * gram;
                }
            }
        }
        let err = (&system.f_bar - &expected)
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-10, "structure error {err}");
    }

    #[test]
    fn reduced_system_matches_oracle_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for &(n, k, g) in &[(3usize, 2usize, 1usize), (4, 3, 2), (5, 4, 3)] {
            let ts = random_instance(n, k, g, &mut rng);
            let hp = hyper(0.25, 0.1, 0.5, (0.4, -0.3, 0.8));
            let system = assemble_reduced_system(&ts, &hp).unwrap();
            let (q, b, _) = quadratic_probe(&ts, &hp).unwrap();
            // f_bar = 2 Q, rhs = 2 b
            let scale = q.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            for t in 0..k {
                assert!(
                    (system.rhs[t] - 2.0 * b[t]).abs() <= 1e-8 * (1.0 + b[t].abs()),
                    "rhs component {t}"
                );
                for u in 0..k {
                    assert!(
                        (system.f_bar[[t, u]] - 2.0 * q[[t, u]]).abs() <= 1e-8 * (1.0 + scale),
                        "f_bar[{t},{u}] = {} vs 2Q = {}",
                        system.f_bar[[t, u]],
                        2.0 * q[[t, u]]
                    );
                }
            }
        }
    }

    #[test]
    fn omega_selection_layout() {
        let n = 3;
        let k = 2;
        let sel = omega_selection(n, k);
        assert_eq!(sel.len(), n);
        for (j, range) in sel.iter().enumerate() {
            assert_eq!(range.start, j * (n + 1) * k);
            assert_eq!(range.len(), k);
        }
        // last selection ends at the last vec index
        assert_eq!(sel[n - 1].end, n * n * k);
        // the selected positions are exactly where vec(I_N x w) holds w
        let w = array![1.5, -2.5];
        let kron = crate::features::kron_replicate(w.view(), n);
        let flat = vectorize_col_major(&kron);
        for range in &sel {
            for (t, idx) in range.clone().enumerate() {
                assert_eq!(flat[idx], w[t]);
            }
        }
        let mut selected: Vec<usize> = sel.iter().flat_map(|r| r.clone()).collect();
        selected.sort_unstable();
        for (pos, &v) in flat.iter().enumerate() {
            let in_selection = selected.binary_search(&pos).is_ok();
            assert_eq!(in_selection, v != 0.0);
        }
    }

    #[test]
    fn solve_recovers_planted_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // sigma well below typical squared signal differences, so the
        // feature slices stay distinct and the reduced system full rank
        let sigma = 0.02;
        let n = 6;
        let w_true = array![0.7, 0.2, 0.5];
        let mut pairs = Vec::new();
        for _ in 0..2 {
            let x = SignalMatrix::new(Array2::from_shape_fn((n, 3), |_| rng.gen::<f64>()))
                .unwrap();
            let fm = assemble_feature_matrix(&x, sigma).unwrap();
            let a = raw_prediction(&fm, &w_true).unwrap();
            pairs.push((x, WeightedGraph::new(a).unwrap()));
        }
        let ts = TrainingSet::new(pairs).unwrap();
        let hp = hyper(sigma, 0.0, 0.0, (0.0, 1.0, 0.0));
        let model = solve(&ts, &hp).unwrap();
        let err = (&model.w - &w_true)
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-8, "planted recovery error {err}");
        assert!(!model.psd_warning);
    }

    #[test]
    fn solve_ridge_domination_shrinks_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ts = random_instance(4, 2, 1, &mut rng);
        let hp_small = hyper(0.3, 0.0, 1e-6, (0.0, 1.0, 0.0));
        let hp_large = hyper(0.3, 0.0, 1e9, (0.0, 1.0, 0.0));
        let small = solve(&ts, &hp_small).unwrap();
        let large = solve(&ts, &hp_large).unwrap();
        let norm_small = small.w.dot(&small.w).sqrt();
        let norm_large = large.w.dot(&large.w).sqrt();
        assert!(norm_large < 1e-6 * norm_small.max(1.0));
    }

    #[test]
    fn solve_agrees_with_probe_minimizer_and_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for trial in 0..10 {
            let n = 3 + (trial % 4);
            let k = 1 + (trial % 4);
            let g = 1 + (trial % 3);
            let ts = random_instance(n, k, g, &mut rng);
            let h2 = [0.0, 0.5, 1.0][trial % 3];
            let alpha = [0.0, 0.1][trial % 2];
            let beta = [0.0, 1.0][(trial / 2) % 2];
            let hp = hyper(0.25, alpha, beta, (0.2, 0.8, h2));

            let (model, diag) = solve_with_diagnostics(&ts, &hp).unwrap();
            let (q, b, _) = quadratic_probe(&ts, &hp).unwrap();
            let oracle = oracle_minimizer(&q, &b);
            let num = (&model.w - &oracle).iter().map(|v| v * v).sum::<f64>().sqrt();
            let den = oracle.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            assert!(num / den <= 1e-6, "trial {trial}: relative error {}", num / den);
            assert!(
                diag.gradient_norm <= diag.gradient_tol,
                "trial {trial}: gradient norm {} above {}",
                diag.gradient_norm,
                diag.gradient_tol
            );
        }
    }

    #[test]
    fn residual_equals_cost_gradient_anywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let ts = random_instance(4, 3, 2, &mut rng);
        let hp = hyper(0.3, 0.1, 0.4, (0.5, -0.2, 0.6));
        let system = assemble_reduced_system(&ts, &hp).unwrap();
        for _ in 0..5 {
            let w = Array1::from_shape_fn(3, |_| rng.gen::<f64>() * 2.0 - 1.0);
            let residual = system.f_bar.dot(&w) - &system.rhs;
            let fd = finite_difference_gradient(&w, &ts, &hp, 1e-5).unwrap();
            let err = (&residual - &fd).iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = 1.0 + fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err <= 1e-6 * scale, "residual vs gradient error {err}");
        }
    }

    #[test]
    fn gradient_at_origin_without_regularizers() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let ts = random_instance(4, 2, 1, &mut rng);
        let hp = hyper(0.3, 0.0, 0.0, (0.0, 1.0, 0.0));
        let (_q, b, _c) = quadratic_probe(&ts, &hp).unwrap();
        let fd = finite_difference_gradient(&Array1::zeros(2), &ts, &hp, 1e-5).unwrap();
        for t in 0..2 {
            assert!((fd[t] + 2.0 * b[t]).abs() < 1e-7 * (1.0 + b[t].abs()));
        }
    }

    #[test]
    fn training_set_validation() {
        assert!(matches!(
            TrainingSet::new(vec![]),
            Err(Error::EmptyTrainingSet)
        ));
        let x3 = SignalMatrix::new(Array2::<f64>::zeros((3, 2))).unwrap();
        let x4 = SignalMatrix::new(Array2::<f64>::zeros((4, 2))).unwrap();
        let g3 = WeightedGraph::new(Array2::<f64>::zeros((3, 3))).unwrap();
        let g4 = WeightedGraph::new(Array2::<f64>::zeros((4, 4))).unwrap();
        assert!(matches!(
            TrainingSet::new(vec![(x3.clone(), g3.clone()), (x4.clone(), g4.clone())]),
            Err(Error::MixedGraphSizes { .. })
        ));
        let x3b = SignalMatrix::new(Array2::<f64>::zeros((3, 5))).unwrap();
        assert!(matches!(
            TrainingSet::new(vec![(x3.clone(), g3.clone()), (x3b, g3.clone())]),
            Err(Error::MixedSignalCounts { .. })
        ));
        assert!(matches!(
            TrainingSet::new(vec![(x4, g3)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_rejects_single_node_graphs() {
        let x = SignalMatrix::new(Array2::<f64>::zeros((1, 2))).unwrap();
        let g = WeightedGraph::new(Array2::<f64>::zeros((1, 1))).unwrap();
        let ts = TrainingSet::new(vec![(x, g)]).unwrap();
        let hp = hyper(0.5, 0.0, 0.0, (0.0, 1.0, 0.0));
        assert!(matches!(
            solve(&ts, &hp),
            Err(Error::GraphTooSmall { .. })
        ));
    }
}
