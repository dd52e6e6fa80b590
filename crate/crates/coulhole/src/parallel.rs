//! Monte Carlo batches spread over a worker pool.

use rayon::prelude::*;

use coulhole_core::montecarlo::{merge_batches, run_batch, SimulationConfig, SimulationResult};

use crate::error::Result;

/// Run every batch of `cfg` on `workers` threads (0 picks one per core).
///
/// Batches are collected in index order before merging, so the result is
/// bit-identical for any worker count.
pub fn run_simulation_parallel(cfg: &SimulationConfig, workers: usize) -> Result<SimulationResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    let batches = pool.install(|| {
        (0..cfg.n_batches())
            .into_par_iter()
            .map(|b| run_batch(cfg, b))
            .collect::<coulhole_core::Result<Vec<_>>>()
    })?;
    Ok(merge_batches(cfg, &batches)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use coulhole_core::dynamics::{critical_scale, BeamParameters};
    use coulhole_core::montecarlo::{run_simulation, HistogramSpec, Spacing, TransverseModel};
    use coulhole_core::{Energy, Length};

    #[test]
    fn matches_sequential() {
        let beam = BeamParameters::new(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0)).unwrap();
        let tc = critical_scale(&beam).tau_c;
        let cfg = SimulationConfig {
            beam: beam.with_emission_interval(tc * 20.0).unwrap(),
            n_pairs: 150_000,
            seed: 11,
            transverse: TransverseModel::PointSource,
            histogram: HistogramSpec {
                t_min: tc * 0.1,
                t_max: tc * 50.0,
                n_bins: 40,
                spacing: Spacing::Log,
            },
        };
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation_parallel(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.summary.mean_sigma.to_bits(),
            b.summary.mean_sigma.to_bits()
        );
    }
}
