use crate::bipartite::Enumeration;
use crate::error::Result;
use crate::process::BipartiteProcess;
use crate::record::TrajectoryRecord;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Independent stream for trajectory `index`: the same `(seed, index)`
/// always yields the same draws, whatever the worker count.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `n` forward trajectories of a bipartite process.
pub fn sample_trajectories(p: &BipartiteProcess, n: usize, seed: u64) -> Result<Vec<TrajectoryRecord>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let records = Enumeration::new(p)?.forward_records();
    let dist = WeightedIndex::new(records.iter().map(|r| r.prob)).expect("forward probabilities sum to one");
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            records[dist.sample(&mut rng)].clone()
        })
        .collect())
}
