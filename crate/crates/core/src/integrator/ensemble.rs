//! Seed-addressed Monte Carlo ensembles.

use super::{simulate_path_recorded, IntegratorConfig, Path, RecordPolicy};
use crate::coefficients::ModelSpec;
use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;
use crate::rng::{block, derive_seed, fill_normals, Domain};
use crate::spatial::{Representation, SpatialGrid, StateVector};
use rayon::prelude::*;

/// Law of the initial state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Dirac(StateVector),
    /// Independent normal spectral coefficients around `mean`, with standard
    /// deviation `mode_std[k]` for mode k (missing modes are deterministic).
    Gaussian {
        mean: StateVector,
        mode_std: Vec<f64>,
    },
    /// Draw a support point of an empirical measure according to its weights.
    Empirical(EmpiricalMeasure),
}

impl InitialLaw {
    /// Nodal sample for the path with seed `path_seed`.
    pub fn sample(&self, grid: &SpatialGrid, path_seed: u64) -> Result<Vec<f64>> {
        match self {
            InitialLaw::Dirac(x) => Ok(grid.transform(x, Representation::Nodal)?.values),
            InitialLaw::Gaussian { mean, mode_std } => {
                let n = grid.n_interior();
                if mode_std.len() > n {
                    return Err(Error::invalid("more Gaussian mode deviations than grid modes"));
                }
                let mut coeffs = grid.transform(mean, Representation::Spectral)?.values;
                let mut z = vec![0.0; mode_std.len()];
                fill_normals(path_seed, 0, Domain::InitialLaw, &mut z);
                for ((c, s), zk) in coeffs.iter_mut().zip(mode_std).zip(&z) {
                    *c += s * zk;
                }
                Ok(grid.to_nodal_values(&coeffs))
            }
            InitialLaw::Empirical(mu) => {
                let w = block(path_seed, 1, 0, Domain::InitialLaw);
                let u = ((((w[1] as u64) << 32) | w[0] as u64) >> 11) as f64
                    / 9_007_199_254_740_992.0;
                Ok(mu.support()[mu.index_at_cumulative(u)].values.clone())
            }
        }
    }

    /// True when every path starts from the same state.
    pub fn is_deterministic(&self) -> bool {
        match self {
            InitialLaw::Dirac(_) => true,
            InitialLaw::Gaussian { mode_std, .. } => mode_std.iter().all(|&s| s == 0.0),
            InitialLaw::Empirical(mu) => mu.len() == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub paths: Vec<Path>,
    pub master_seed: u64,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.paths[0].times
    }

    /// Nodal states of all paths at time `t`.
    pub fn states_at(&self, t: f64) -> Result<Vec<&StateVector>> {
        self.paths
            .iter()
            .map(|p| {
                p.state_at(t)
                    .ok_or_else(|| Error::invalid(format!("time {t} was not recorded")))
            })
            .collect()
    }

    pub fn final_states(&self) -> Vec<&StateVector> {
        self.paths.iter().map(|p| p.final_state()).collect()
    }

    /// Uniform empirical law of the ensemble at time `t`, metrized in the model's H.
    pub fn measure_at(&self, model: &ModelSpec, t: f64) -> Result<EmpiricalMeasure> {
        let states = self.states_at(t)?.into_iter().cloned().collect();
        EmpiricalMeasure::uniform(model.grid().clone(), states, model.h_space())
    }
}

/// Map `f` over `0..m` on a pool of `workers` threads; output order is the
/// index order whatever the scheduling.
pub(crate) fn par_map<T: Send>(
    workers: usize,
    m: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if workers <= 1 {
        return (0..m).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..m).into_par_iter().map(f).collect())
}

/// M paths from `law`, path i using seed `derive_seed(master_seed, i)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble_with(
    model: &ModelSpec,
    config: &IntegratorConfig,
    law: &InitialLaw,
    t0: f64,
    t1: f64,
    m: usize,
    master_seed: u64,
    record: RecordPolicy,
    workers: usize,
) -> Result<PathEnsemble> {
    if m == 0 {
        return Err(Error::invalid("an ensemble needs at least one path"));
    }
    config.validate(model)?;
    let paths = par_map(workers, m, |i| {
        let seed = derive_seed(master_seed, i as u64);
        let x0 = StateVector::nodal(law.sample(model.grid(), seed)?);
        simulate_path_recorded(model, config, &x0, t0, t1, seed, record).map_err(|e| e.in_path(i))
    })?;
    Ok(PathEnsemble { paths, master_seed })
}

/// M fully recorded paths on the current thread pool.
pub fn simulate_ensemble(
    model: &ModelSpec,
    config: &IntegratorConfig,
    law: &InitialLaw,
    t0: f64,
    t1: f64,
    m: usize,
    master_seed: u64,
) -> Result<PathEnsemble> {
    simulate_ensemble_with(
        model,
        config,
        law,
        t0,
        t1,
        m,
        master_seed,
        RecordPolicy::All,
        rayon::current_num_threads(),
    )
}
