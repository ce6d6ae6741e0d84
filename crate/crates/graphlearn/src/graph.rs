//! Graph and spectral primitives: Laplacians, the smoothness quadratic form,
//! eigendecomposition, second-order spectral polynomials, pseudo-inverse.
//!
//! All matrices are dense; the target regime is a few hundred nodes at most.
//! Everything here is a pure function of its inputs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Inputs with `max |a_ij - a_ji|` at or below this are symmetrized silently;
/// anything larger is rejected as a real asymmetry rather than I/O noise.
pub const ASYMMETRY_TOL: f64 = 1e-9;

/// Relative eigenvalue cutoff: `|lambda| < EIG_ZERO_REL_TOL * max(1, lambda_max)`
/// is treated as zero when pseudo-inverting.
pub const EIG_ZERO_REL_TOL: f64 = 1e-10;

/// Symmetric nonnegative adjacency matrix with zero diagonal.
///
/// Construction validates the invariants; tiny asymmetry (below
/// [`ASYMMETRY_TOL`]) is repaired as `(A + A^T) / 2`, anything larger is an
/// error.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    adjacency: Array2<f64>,
}

impl WeightedGraph {
    pub fn new(adjacency: Array2<f64>) -> Result<Self> {
        let adjacency = symmetrized(&adjacency)?;
        let n = adjacency.nrows();
        for i in 0..n {
            let d = adjacency[[i, i]];
            if d != 0.0 {
                if d.abs() > 1e-12 {
                    return Err(Error::NonzeroDiagonal { index: i, value: d });
                }
            }
            for j in 0..n {
                let v = adjacency[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        let mut adjacency = adjacency;
        for i in 0..n {
            adjacency[[i, i]] = 0.0;
        }
        Ok(Self { adjacency })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn into_adjacency(self) -> Array2<f64> {
        self.adjacency
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.adjacency.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Number of upper-triangular entries strictly above `eps`.
    pub fn edge_count(&self, eps: f64) -> usize {
        let n = self.n_nodes();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[[i, j]] > eps {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Eigendecomposition of a Laplacian: ascending eigenvalues and the matching
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct LaplacianDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl LaplacianDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Second-order polynomial `h(x) = h0 + h1 x + h2 x^2` used as a spectral
/// profile. Restricting the order to two keeps the training objective a
/// quadratic in the regression coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPolynomial {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
}

impl SpectralPolynomial {
    pub fn new(h0: f64, h1: f64, h2: f64) -> Self {
        Self { h0, h1, h2 }
    }

    /// Builds from a coefficient slice `[h0, h1, h2]`; shorter slices are
    /// zero-padded, longer ones rejected.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > 3 {
            return Err(Error::PolynomialOrder(coeffs.len()));
        }
        let get = |i: usize| coeffs.get(i).copied().unwrap_or(0.0);
        Ok(Self::new(get(0), get(1), get(2)))
    }

    pub fn coeffs(&self) -> [f64; 3] {
        [self.h0, self.h1, self.h2]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.h0 + self.h1 * x + self.h2 * x * x
    }

    /// The smoothness-promoting profile `h(x) = x`.
    pub fn smoothness_profile() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }
}

/// Graph Laplacian `L = D - A` with `D = diag(A 1)`.
///
/// Symmetric with zero row sums; positive semidefinite for any valid graph.
pub fn laplacian(g: &WeightedGraph) -> Array2<f64> {
    let a = g.adjacency();
    let degrees = a.sum_axis(Axis(1));
    let mut lap = -a.clone();
    for (i, d) in degrees.iter().enumerate() {
        lap[[i, i]] += d;
    }
    lap
}

/// Quadratic form `x^T L x`.
///
/// For a Laplacian this equals the sum over unordered node pairs of
/// `a_ij (x_i - x_j)^2`, so it is nonnegative and vanishes on constant
/// signals.
pub fn smoothness(x: ArrayView1<f64>, lap: ArrayView2<f64>) -> Result<f64> {
    let n = lap.nrows();
    if lap.ncols() != n {
        return Err(Error::NotSquare(n, lap.ncols()));
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            context: "smoothness signal length",
            expected: n,
            found: x.len(),
        });
    }
    Ok(x.dot(&lap.dot(&x)))
}

/// Eigendecomposition of a symmetric Laplacian, eigenvalues ascending.
///
/// Eigenvalues within [`EIG_ZERO_REL_TOL`] (relative to the largest) of zero
/// are clamped to exactly zero, so the constant-eigenvector eigenvalue of a
/// Laplacian comes out as 0 rather than round-off noise.
pub fn gft(lap: &Array2<f64>) -> Result<LaplacianDecomposition> {
    let sym = symmetrized(lap)?;
    let (mut eigenvalues, eigenvectors) = jacobi_eigh(&sym);
    let scale = eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let tol = EIG_ZERO_REL_TOL * scale;
    for v in eigenvalues.iter_mut() {
        if v.abs() < tol {
            *v = 0.0;
        }
    }
    Ok(LaplacianDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `h(L) = h0 I + h1 L + h2 L^2`. Commutes with `L`.
pub fn apply_spectral_polynomial(lap: &Array2<f64>, h: &SpectralPolynomial) -> Array2<f64> {
    let n = lap.nrows();
    assert_eq!(n, lap.ncols(), "spectral polynomial needs a square matrix");
    let mut out = Array2::<f64>::eye(n) * h.h0;
    if h.h1 != 0.0 {
        out += &(lap * h.h1);
    }
    if h.h2 != 0.0 {
        out += &(lap.dot(lap) * h.h2);
    }
    out
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via its
/// eigendecomposition: near-zero eigenvalues map to 0, the rest to their
/// reciprocal.
pub fn laplacian_pseudoinverse(lap: &Array2<f64>) -> Result<Array2<f64>> {
    let decomp = gft(lap)?;
    let scale = decomp
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let tol = EIG_ZERO_REL_TOL * scale;
    let inv: Array1<f64> = decomp
        .eigenvalues
        .mapv(|v| if v.abs() < tol { 0.0 } else { 1.0 / v });
    Ok(reconstruct(&decomp.eigenvectors, &inv))
}

/// `V diag(d) V^T`.
pub(crate) fn reconstruct(v: &Array2<f64>, d: &Array1<f64>) -> Array2<f64> {
    let scaled = v * &d.view().insert_axis(Axis(0));
    scaled.dot(&v.t())
}

/// Depth-first reachability from node 0 over nonzero entries.
pub fn is_connected(adj: &Array2<f64>) -> bool {
    let n = adj.nrows();
    if n == 0 {
        return true;
    }
    let mut visited = vec![false; n];
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        if visited[node] {
            continue;
        }
        visited[node] = true;
        for j in 0..n {
            if adj[[node, j]] != 0.0 && !visited[j] {
                stack.push(j);
            }
        }
    }
    visited.into_iter().all(|v| v)
}

/// Checks squareness and (near-)symmetry; returns `(A + A^T) / 2`.
pub(crate) fn symmetrized(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare(n, a.ncols()));
    }
    let mut max_dev = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_dev = max_dev.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if max_dev > ASYMMETRY_TOL {
        return Err(Error::Asymmetric {
            max_dev,
            tol: ASYMMETRY_TOL,
        });
    }
    Ok((a + &a.t()) * 0.5)
}

/// Cyclic Jacobi eigendecomposition for symmetric matrices.
///
/// Returns eigenvalues ascending with eigenvector columns aligned. O(n^3) per
/// sweep, deterministic, and accurate to near machine precision; entirely
/// adequate at the dense sizes this crate targets.
pub(crate) fn jacobi_eigh(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut d = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    if n <= 1 {
        return (d.diag().to_owned(), v);
    }

    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-14 * frob.max(1e-300);
    const MAX_SWEEPS: usize = 100;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = {
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    s += d[[i, j]] * d[[i, j]];
                }
            }
            (2.0 * s).sqrt()
        };
        if off <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = d[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = d[[p, p]];
                let aqq = d[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    if i != p && i != q {
                        let dip = d[[i, p]];
                        let diq = d[[i, q]];
                        d[[i, p]] = c * dip - s * diq;
                        d[[p, i]] = d[[i, p]];
                        d[[i, q]] = s * dip + c * diq;
                        d[[q, i]] = d[[i, q]];
                    }
                }
                d[[p, p]] = app - t * apq;
                d[[q, q]] = aqq + t * apq;
                d[[p, q]] = 0.0;
                d[[q, p]] = 0.0;

                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    // Sort eigenpairs ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[[i, i]].total_cmp(&d[[j, j]]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| d[[i, i]]));
    let mut eigenvectors = Array2::<f64>::zeros((n, n));
    for (out_col, &src_col) in order.iter().enumerate() {
        eigenvectors.column_mut(out_col).assign(&v.column(src_col));
    }
    (eigenvalues, eigenvectors)
}
