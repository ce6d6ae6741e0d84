//! Synthetic benchmark data: a sparse connected base graph, per-graph random
//! perturbations normalized to unit Frobenius norm, and Gaussian graph
//! signals whose covariance is derived from each graph's Laplacian (smooth
//! signals from the pseudo-inverse, high-frequency outliers from the square).
//!
//! Randomness is fully reproducible: everything derives from one seed through
//! ChaCha8 streams, split per purpose so per-graph work could run in
//! parallel without changing the output. Stream 0 draws the base graph and
//! the outlier column indices; stream `1 + g` perturbs graph `g`; stream
//! `1 + n_graphs + g` draws graph `g`'s signals.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SignalMatrix;
use crate::graph::{gft, is_connected, laplacian, LaplacianDecomposition, WeightedGraph};
use crate::io;
use crate::solver::TrainingSet;

const CONNECTIVITY_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    /// One fixed-edge-count base graph; every example graph is a perturbation
    /// of it.
    PerturbedBase,
    /// Base graph drawn with independent edge probability `base_density`.
    ErdosRenyi,
}

/// Configuration for one synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub n_graphs_train: usize,
    pub n_graphs_test: usize,
    /// Fraction of off-diagonal entries that are nonzero in the base graph.
    pub base_density: f64,
    /// Fraction of off-diagonal entries re-drawn per example graph.
    pub perturb_fraction: f64,
    pub n_signals: usize,
    /// Fraction of the signals that are high-frequency outliers; the outlier
    /// column indices are shared across every graph in the dataset.
    pub outlier_fraction: f64,
    pub seed: u64,
    pub graph_family: GraphFamily,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            n_graphs_train: 16,
            n_graphs_test: 16,
            base_density: 0.4,
            perturb_fraction: 0.1,
            n_signals: 10,
            outlier_fraction: 0.1,
            seed: 0,
            graph_family: GraphFamily::PerturbedBase,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::GraphTooSmall {
                min: 2,
                got: self.n_nodes,
            });
        }
        if self.n_graphs_train == 0 {
            return Err(Error::InvalidConfig("n_graphs_train must be >= 1".into()));
        }
        if self.n_signals == 0 {
            return Err(Error::InvalidConfig("n_signals must be >= 1".into()));
        }
        for (name, value) in [
            ("base_density", self.base_density),
            ("perturb_fraction", self.perturb_fraction),
            ("outlier_fraction", self.outlier_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::InvalidFraction { name, value });
            }
        }
        if self.base_density <= 0.0 {
            return Err(Error::InvalidConfig("base_density must be > 0".into()));
        }
        Ok(())
    }
}

/// Spectral profile of sampled signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalProfile {
    /// Covariance `L^+`: energy concentrates in low graph frequencies.
    Smooth,
    /// Covariance `L^2`: energy concentrates in high graph frequencies.
    HighFrequency,
}

/// A generated train/test split plus the shared outlier column indices.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: TrainingSet,
    pub test: TrainingSet,
    pub outlier_indices: Vec<usize>,
}

fn upper_triangle_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Maps a flat index in `0..n(n-1)/2` to an upper-triangle position.
fn unflatten_upper(n: usize, mut flat: usize) -> (usize, usize) {
    for i in 0..n {
        let row_len = n - 1 - i;
        if flat < row_len {
            return (i, i + 1 + flat);
        }
        flat -= row_len;
    }
    unreachable!("flat index out of range")
}

fn positive_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let v: f64 = rng.gen();
        if v > 0.0 {
            return v;
        }
    }
}

/// Sparse connected graph with exactly `round(density * n(n-1)/2)` edges and
/// uniform `(0,1)` weights; regenerates until connected.
pub fn gen_base_graph(n: usize, density: f64, rng: &mut impl Rng) -> Result<WeightedGraph> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidFraction {
            name: "density",
            value: density,
        });
    }
    let total = upper_triangle_count(n);
    let n_edges = ((density * total as f64).round() as usize).min(total);
    for _ in 0..CONNECTIVITY_RETRIES {
        let mut a = Array2::<f64>::zeros((n, n));
        for flat in sample(rng, total, n_edges) {
            let (i, j) = unflatten_upper(n, flat);
            let w = positive_unit(rng);
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
        if is_connected(&a) {
            return WeightedGraph::new(a);
        }
    }
    Err(Error::ConnectivityRetries(CONNECTIVITY_RETRIES))
}

/// Weighted Erdos-Renyi graph: each edge present independently with
/// probability `p`, uniform `(0,1)` weights; regenerates until connected.
pub fn gen_erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Result<WeightedGraph> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidFraction {
            name: "edge probability",
            value: p,
        });
    }
    for _ in 0..CONNECTIVITY_RETRIES {
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    let w = positive_unit(rng);
                    a[[i, j]] = w;
                    a[[j, i]] = w;
                }
            }
        }
        if is_connected(&a) {
            return WeightedGraph::new(a);
        }
    }
    Err(Error::ConnectivityRetries(CONNECTIVITY_RETRIES))
}

/// Re-draws `round(fraction * n(n-1)/2)` upper-triangle entries (mirrored)
/// with fresh uniform values, then rescales the whole matrix to unit
/// Frobenius norm. Selected entries are overwritten whether or not they held
/// an edge, so perturbation can add or change edges but never delete one.
pub fn perturb_graph(
    base: &WeightedGraph,
    fraction: f64,
    rng: &mut impl Rng,
) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidFraction {
            name: "perturb_fraction",
            value: fraction,
        });
    }
    let n = base.n_nodes();
    let total = upper_triangle_count(n);
    let n_changes = ((fraction * total as f64).round() as usize).min(total);
    let mut a = base.adjacency().clone();
    for flat in sample(rng, total, n_changes) {
        let (i, j) = unflatten_upper(n, flat);
        let w = positive_unit(rng);
        a[[i, j]] = w;
        a[[j, i]] = w;
    }
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        a.mapv_inplace(|v| v / norm);
    }
    WeightedGraph::new(a)
}

fn sample_column(
    decomp: &LaplacianDecomposition,
    profile: SignalProfile,
    rng: &mut impl Rng,
) -> Array1<f64> {
    let n = decomp.n();
    let scales: Array1<f64> = match profile {
        // x = V sqrt(pinv(Lambda)) z has covariance L^+
        SignalProfile::Smooth => decomp
            .eigenvalues
            .mapv(|l| if l > 0.0 { 1.0 / l.sqrt() } else { 0.0 }),
        // x = V Lambda z has covariance L^2
        SignalProfile::HighFrequency => decomp.eigenvalues.clone(),
    };
    let z = Array1::from_iter((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    decomp.eigenvectors.dot(&(&scales * &z))
}

/// Draws `m` independent Gaussian graph signals with the covariance implied
/// by the profile.
pub fn sample_signals(
    g: &WeightedGraph,
    m: usize,
    profile: SignalProfile,
    rng: &mut impl Rng,
) -> Result<SignalMatrix> {
    if m == 0 {
        return Err(Error::InvalidConfig("need at least one signal".into()));
    }
    let decomp = gft(&laplacian(g))?;
    let mut values = Array2::<f64>::zeros((g.n_nodes(), m));
    for col in 0..m {
        values
            .column_mut(col)
            .assign(&sample_column(&decomp, profile, rng));
    }
    SignalMatrix::new(values)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates the full dataset for a configuration. Deterministic: the same
/// configuration (including seed) always produces a bit-identical dataset.
pub fn build_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n_graphs = cfg.n_graphs_train + cfg.n_graphs_test;
    let m = cfg.n_signals;

    let mut setup_rng = stream_rng(cfg.seed, 0);
    let base = match cfg.graph_family {
        GraphFamily::PerturbedBase => {
            gen_base_graph(cfg.n_nodes, cfg.base_density, &mut setup_rng)?
        }
        GraphFamily::ErdosRenyi => gen_erdos_renyi(cfg.n_nodes, cfg.base_density, &mut setup_rng)?,
    };
    let n_outliers = ((cfg.outlier_fraction * m as f64).round() as usize).min(m);
    let mut outlier_indices: Vec<usize> =
        sample(&mut setup_rng, m, n_outliers).into_iter().collect();
    outlier_indices.sort_unstable();

    let mut pairs = Vec::with_capacity(n_graphs);
    for g in 0..n_graphs {
        let mut graph_rng = stream_rng(cfg.seed, 1 + g as u64);
        let graph = perturb_graph(&base, cfg.perturb_fraction, &mut graph_rng)?;

        let mut signal_rng = stream_rng(cfg.seed, 1 + n_graphs as u64 + g as u64);
        let decomp = gft(&laplacian(&graph))?;
        let mut values = Array2::<f64>::zeros((cfg.n_nodes, m));
        for col in 0..m {
            let profile = if outlier_indices.binary_search(&col).is_ok() {
                SignalProfile::HighFrequency
            } else {
                SignalProfile::Smooth
            };
            values
                .column_mut(col)
                .assign(&sample_column(&decomp, profile, &mut signal_rng));
        }
        pairs.push((SignalMatrix::new(values)?, graph));
    }

    let test_pairs = pairs.split_off(cfg.n_graphs_train);
    Ok(Dataset {
        train: TrainingSet::new(pairs)?,
        test: TrainingSet::new(test_pairs)?,
        outlier_indices,
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: SynthConfig,
    outlier_indices: Vec<usize>,
    n_train: usize,
    n_test: usize,
    files: Vec<String>,
}

/// Writes a dataset directory: `manifest.json` plus per-graph adjacency
/// (`A_<g>.csv`) and signal (`X_<g>.csv`) files, training graphs first.
pub fn export_dataset(ds: &Dataset, cfg: &SynthConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let all = ds.train.pairs().iter().chain(ds.test.pairs().iter());
    for (g, pair) in all.enumerate() {
        let a_name = format!("A_{g}.csv");
        let x_name = format!("X_{g}.csv");
        io::write_matrix_csv(&dir.join(&a_name), pair.graph.adjacency())?;
        io::write_matrix_csv(&dir.join(&x_name), pair.signals.values())?;
        files.push(a_name);
        files.push(x_name);
    }
    let manifest = Manifest {
        config: cfg.clone(),
        outlier_indices: ds.outlier_indices.clone(),
        n_train: ds.train.n_graphs(),
        n_test: ds.test.n_graphs(),
        files,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Reads back a dataset directory written by [`export_dataset`].
pub fn import_dataset(dir: &Path) -> Result<(Dataset, SynthConfig)> {
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let n_graphs = manifest.n_train + manifest.n_test;
    let mut pairs = Vec::with_capacity(n_graphs);
    for g in 0..n_graphs {
        let a = io::read_matrix_csv(&dir.join(format!("A_{g}.csv")))?;
        let x = io::read_matrix_csv(&dir.join(format!("X_{g}.csv")))?;
        pairs.push((SignalMatrix::new(x)?, WeightedGraph::new(a)?));
    }
    let test_pairs = pairs.split_off(manifest.n_train);
    Ok((
        Dataset {
            train: TrainingSet::new(pairs)?,
            test: TrainingSet::new(test_pairs)?,
            outlier_indices: manifest.outlier_indices,
        },
        manifest.config,
    ))
}
