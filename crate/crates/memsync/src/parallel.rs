//! Replica-parallel Monte-Carlo runs.

use memsync_core::sim::{merge, simulate_replica, SimConfig, SimResult};
use memsync_core::Result;
use rayon::prelude::*;

/// Runs the replicas of `cfg` on the rayon pool and merges them in replica
/// order, so the result equals the serial [`memsync_core::sim::simulate`].
pub fn simulate_parallel(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let parts = (0..cfg.replicas)
        .into_par_iter()
        .map(|k| simulate_replica(cfg, k))
        .collect::<Result<Vec<_>>>()?;
    merge(&parts)
}
