//! Sampled pairs pushed through the exact map and histogrammed.
//!
//! Work is split into fixed-size batches. Batch `b` draws from the ChaCha8
//! stream `b` of the configured seed, so its output depends only on the
//! configuration and `b`. Merging batch results in index order therefore
//! gives the same bits however the batches were scheduled.

mod histogram;

pub use histogram::{Histogram, HistogramSpec, Spacing};

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::dynamics::{BeamParameters, PairInitial, Propagator};
use crate::error::{Error, Result};
use crate::statistics::{bin_probabilities, EmissionModel, MapModel, TimeMap};
use crate::units::{Length, Time};

/// Pairs per batch (the last batch may be shorter).
pub const BATCH_SIZE: u64 = 1 << 16;

/// How transverse emission offsets are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TransverseModel {
    /// Every pair leaves the same point.
    PointSource,
    /// Every pair has the same offset.
    FixedOffset(Length),
    /// Both electrons leave a round Gaussian spot with per-axis width `r₀`;
    /// the offset is the planar distance between them.
    GaussianDisk(Length),
}

/// Everything a simulation depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimulationConfig {
    /// Beam; must carry a mean emission interval.
    pub beam: BeamParameters,
    /// Number of propagated pairs.
    pub n_pairs: u64,
    /// Seed of every stream.
    pub seed: u64,
    /// Transverse sampling.
    pub transverse: TransverseModel,
    /// Binning of both the emission and the arrival intervals.
    pub histogram: HistogramSpec,
}

impl SimulationConfig {
    /// Check the configuration and return the emission model.
    pub fn validate(&self) -> Result<EmissionModel> {
        if self.n_pairs == 0 {
            return Err(Error::InvalidConfig("n_pairs must be at least 1"));
        }
        let t_bar = self.beam.t_bar().ok_or(Error::InvalidConfig(
            "simulation needs a mean emission interval",
        ))?;
        match self.transverse {
            TransverseModel::PointSource => {}
            TransverseModel::FixedOffset(x) => {
                if !(x.as_nm() >= 0.0) || !x.as_nm().is_finite() {
                    return Err(Error::InvalidConfig("transverse offset must be ≥ 0"));
                }
            }
            TransverseModel::GaussianDisk(r) => {
                if !(r.as_nm() > 0.0) || !r.as_nm().is_finite() {
                    return Err(Error::InvalidConfig("source size must be > 0"));
                }
            }
        }
        self.histogram.validate()?;
        EmissionModel::new(t_bar)
    }

    /// Number of batches.
    pub fn n_batches(&self) -> u64 {
        self.n_pairs.div_ceil(BATCH_SIZE)
    }

    fn batch_len(&self, batch: u64) -> u64 {
        (self.n_pairs - batch * BATCH_SIZE).min(BATCH_SIZE)
    }
}

/// Draws `(x_i, t_i)` for one batch.
#[derive(Debug, Clone)]
pub struct PairSampler {
    rng: ChaCha8Rng,
    t_bar_ns: f64,
    transverse: TransverseModel,
    v: crate::units::Velocity,
}

impl PairSampler {
    /// Sampler for stream `batch` of `cfg`.
    pub fn for_batch(cfg: &SimulationConfig, batch: u64) -> Result<Self> {
        let model = cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(batch);
        Ok(Self {
            rng,
            t_bar_ns: model.t_bar().as_ns(),
            transverse: cfg.transverse,
            v: cfg.beam.speed(),
        })
    }

    /// Next pair.
    pub fn draw(&mut self) -> PairInitial {
        let e: f64 = Exp1.sample(&mut self.rng);
        let t_i = Time::ns(e * self.t_bar_ns);
        let x = match self.transverse {
            TransverseModel::PointSource => 0.0,
            TransverseModel::FixedOffset(x) => x.as_nm(),
            TransverseModel::GaussianDisk(r) => {
                let mut n = || -> f64 { StandardNormal.sample(&mut self.rng) };
                let dx = n() - n();
                let dy = n() - n();
                r.as_nm() * libm::hypot(dx, dy)
            }
        };
        PairInitial::new(Length::nm(x), t_i, self.v).expect("sampled values are finite and ≥ 0")
    }

    /// Raw generator output, for determinism checks.
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// The pairs a simulation propagates, in order, before any resampling.
pub fn sample_pairs(cfg: &SimulationConfig) -> Result<impl Iterator<Item = PairInitial>> {
    cfg.validate()?;
    let cfg = *cfg;
    let mut batch = 0u64;
    let mut left = 0u64;
    let mut sampler: Option<PairSampler> = None;
    let mut total = 0u64;
    Ok(core::iter::from_fn(move || {
        if total == cfg.n_pairs {
            return None;
        }
        if left == 0 {
            sampler = Some(PairSampler::for_batch(&cfg, batch).ok()?);
            left = cfg.batch_len(batch);
            batch += 1;
        }
        left -= 1;
        total += 1;
        sampler.as_mut().map(PairSampler::draw)
    }))
}

/// Histograms and accumulators of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Arrival intervals.
    pub t_f: Histogram,
    /// Emission intervals.
    pub t_i: Histogram,
    /// Smallest arrival interval, ns.
    pub min_t_f: f64,
    /// Sum of `σ` in draw order.
    pub sum_sigma: f64,
    /// Pairs propagated.
    pub n_pairs: u64,
    /// Draws discarded because the pair had zero separation.
    pub resamples: u64,
}

/// Run batch `batch` of `cfg`.
pub fn run_batch(cfg: &SimulationConfig, batch: u64) -> Result<BatchResult> {
    if batch >= cfg.n_batches() {
        return Err(Error::InvalidConfig("batch index out of range"));
    }
    let prop = Propagator::new(&cfg.beam);
    let mut sampler = PairSampler::for_batch(cfg, batch)?;
    let mut out = BatchResult {
        t_f: Histogram::new(&cfg.histogram)?,
        t_i: Histogram::new(&cfg.histogram)?,
        min_t_f: f64::INFINITY,
        sum_sigma: 0.0,
        n_pairs: 0,
        resamples: 0,
    };
    let n = cfg.batch_len(batch);
    while out.n_pairs < n {
        let p = sampler.draw();
        let sol = match prop.propagate(&p) {
            Ok(s) => s,
            Err(Error::SingularPair) => {
                out.resamples += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let tf = sol.t_f.as_ns();
        out.t_f.fill(tf);
        out.t_i.fill(p.t_i.as_ns());
        out.min_t_f = out.min_t_f.min(tf);
        out.sum_sigma += sol.sigma;
        out.n_pairs += 1;
    }
    Ok(out)
}

/// Scalar results of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimulationSummary {
    /// Smallest arrival interval observed.
    #[cfg_attr(feature = "serde", serde(rename = "hole_floor_time"))]
    pub hole_floor_time: Time,
    /// Mean expansion ratio.
    pub mean_sigma: f64,
    /// Pairs propagated.
    pub n_pairs: u64,
    /// Seed used.
    pub seed: u64,
    /// Zero-separation draws that were replaced.
    pub resample_count: u64,
}

/// Merged output of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// Histogram of arrival intervals.
    pub t_f: Histogram,
    /// Histogram of emission intervals.
    pub t_i: Histogram,
    /// Scalars.
    pub summary: SimulationSummary,
}

/// Combine batch results, which must be in batch order.
pub fn merge_batches(cfg: &SimulationConfig, batches: &[BatchResult]) -> Result<SimulationResult> {
    if batches.len() as u64 != cfg.n_batches() {
        return Err(Error::InvalidConfig("missing batch results"));
    }
    let mut t_f = Histogram::new(&cfg.histogram)?;
    let mut t_i = Histogram::new(&cfg.histogram)?;
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    let mut n = 0;
    let mut resamples = 0;
    for b in batches {
        t_f.merge(&b.t_f)?;
        t_i.merge(&b.t_i)?;
        min = min.min(b.min_t_f);
        sum += b.sum_sigma;
        n += b.n_pairs;
        resamples += b.resamples;
    }
    Ok(SimulationResult {
        t_f,
        t_i,
        summary: SimulationSummary {
            hole_floor_time: Time::ns(min),
            mean_sigma: sum / n as f64,
            n_pairs: n,
            seed: cfg.seed,
            resample_count: resamples,
        },
    })
}

/// Run every batch in order on the current thread.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationResult> {
    let batches = (0..cfg.n_batches())
        .map(|b| run_batch(cfg, b))
        .collect::<Result<Vec<_>>>()?;
    merge_batches(cfg, &batches)
}

/// Bin-wise comparison of a histogram with exact bin probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BinComparison {
    /// `(count − n p)/max(√count, 1)` per bin.
    pub z: Vec<f64>,
    /// Expected counts `n p`.
    pub expected: Vec<f64>,
}

impl BinComparison {
    /// Fraction of bins with `|z| ≤ limit`.
    pub fn fraction_within(&self, limit: f64) -> f64 {
        let ok = self.z.iter().filter(|z| z.abs() <= limit).count();
        ok as f64 / self.z.len() as f64
    }
}

/// Compare the arrival histogram of a point-source or fixed-offset run
/// with the exact push-forward of the emission density.
pub fn compare_with_pushforward(
    cfg: &SimulationConfig,
    result: &SimulationResult,
    model: MapModel,
) -> Result<BinComparison> {
    let emission = cfg.validate()?;
    let xi = match cfg.transverse {
        TransverseModel::PointSource => 0.0,
        TransverseModel::FixedOffset(x) => x.as_nm(),
        TransverseModel::GaussianDisk(_) => {
            return Err(Error::InvalidConfig(
                "no one-dimensional push-forward for a spread of offsets",
            ))
        }
    };
    let prop = Propagator::new(&cfg.beam);
    let scale = *prop.scale();
    let map = TimeMap::new(model, xi / scale.s_c.as_nm())?;
    let edges: Vec<Time> = result
        .t_f
        .edges_ns()
        .iter()
        .copied()
        .map(Time::ns)
        .collect();
    let probs = bin_probabilities(&map, &scale, &emission, &edges)?;
    let n = result.summary.n_pairs as f64;
    let mut z = Vec::with_capacity(probs.len());
    let mut expected = Vec::with_capacity(probs.len());
    for (c, p) in result.t_f.counts().iter().zip(probs) {
        let c = *c as f64;
        let e = n * p;
        z.push((c - e) / libm::sqrt(c).max(1.0));
        expected.push(e);
    }
    Ok(BinComparison { z, expected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::critical_scale;
    use crate::units::Energy;

    fn config(n: u64, transverse: TransverseModel) -> SimulationConfig {
        let beam = BeamParameters::new(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0)).unwrap();
        let tc = critical_scale(&beam).tau_c;
        let beam = beam.with_emission_interval(tc * 200.0).unwrap();
        SimulationConfig {
            beam,
            n_pairs: n,
            seed: 7,
            transverse,
            histogram: HistogramSpec {
                t_min: tc * 0.1,
                t_max: tc * 50.0,
                n_bins: 60,
                spacing: Spacing::Log,
            },
        }
    }

    #[test]
    fn point_source_has_no_offset() {
        let cfg = config(1000, TransverseModel::PointSource);
        assert!(sample_pairs(&cfg).unwrap().all(|p| p.x_i.as_nm() == 0.0));
        assert_eq!(sample_pairs(&cfg).unwrap().count(), 1000);
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = config(100_000, TransverseModel::GaussianDisk(Length::nm(20.0)));
        let a: Vec<_> = sample_pairs(&cfg).unwrap().collect();
        let b: Vec<_> = sample_pairs(&cfg).unwrap().collect();
        assert_eq!(a, b);
        let mut other = cfg;
        other.seed = 8;
        let c: Vec<_> = sample_pairs(&other).unwrap().take(10).collect();
        assert_ne!(a[..10], c[..]);
    }

    #[test]
    fn exponential_mean() {
        let cfg = config(1_000_000, TransverseModel::PointSource);
        let t_bar = cfg.beam.t_bar().unwrap().as_ns();
        let sum: f64 = sample_pairs(&cfg).unwrap().map(|p| p.t_i.as_ns()).sum();
        let mean = sum / 1e6;
        assert!((mean - t_bar).abs() < 4.0 * t_bar / 1e3, "{mean} {t_bar}");
    }

    #[test]
    fn gaussian_disk_offset_is_rayleigh() {
        // |difference| of two 2-D Gaussians with std r is Rayleigh(√2 r):
        // mean √π·r
        let r = 10.0;
        let cfg = config(200_000, TransverseModel::GaussianDisk(Length::nm(r)));
        let mean = sample_pairs(&cfg)
            .unwrap()
            .map(|p| p.x_i.as_nm())
            .sum::<f64>()
            / 2e5;
        let want = libm::sqrt(core::f64::consts::PI) * r;
        assert!((mean / want - 1.0).abs() < 0.01, "{mean} {want}");
    }

    #[test]
    fn single_pair_fills_one_bin() {
        let cfg = config(1, TransverseModel::PointSource);
        let r = run_simulation(&cfg).unwrap();
        let filled = r.t_f.counts().iter().sum::<u64>() + r.t_f.underflow() + r.t_f.overflow();
        assert_eq!(filled, 1);
        assert!(r.t_f.counts().iter().filter(|&&c| c > 0).count() <= 1);
        assert_eq!(r.summary.n_pairs, 1);
    }

    #[test]
    fn never_below_the_floor() {
        let cfg = config(200_000, TransverseModel::PointSource);
        let r = run_simulation(&cfg).unwrap();
        let floor = Propagator::new(&cfg.beam).hole_floor().as_ns();
        assert!(r.summary.hole_floor_time.as_ns() >= floor);
        assert!(r.summary.hole_floor_time.as_ns() < 1.01 * floor);
        assert!(r.summary.mean_sigma > 1.0);
    }

    #[test]
    fn disk_floor_is_lower_but_positive() {
        let cfg = config(200_000, TransverseModel::GaussianDisk(Length::nm(5.0)));
        let r = run_simulation(&cfg).unwrap();
        let floor = Propagator::new(&cfg.beam).hole_floor().as_ns();
        let got = r.summary.hole_floor_time.as_ns();
        assert!(got > 0.0 && got < floor, "{got} {floor}");
    }

    #[test]
    fn agrees_with_pushforward() {
        let cfg = config(1_000_000, TransverseModel::PointSource);
        let r = run_simulation(&cfg).unwrap();
        let cmp = compare_with_pushforward(&cfg, &r, MapModel::Exact).unwrap();
        assert!(cmp.fraction_within(3.0) >= 0.99, "{:?}", cmp.z);
    }

    #[test]
    fn batches_merge_in_order() {
        let cfg = config(3 * BATCH_SIZE + 17, TransverseModel::PointSource);
        assert_eq!(cfg.n_batches(), 4);
        let whole = run_simulation(&cfg).unwrap();
        let mut parts: Vec<_> = (0..4).rev().map(|b| run_batch(&cfg, b).unwrap()).collect();
        parts.reverse();
        assert_eq!(merge_batches(&cfg, &parts).unwrap(), whole);
        assert_eq!(whole.summary.n_pairs, cfg.n_pairs);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = config(0, TransverseModel::PointSource);
        assert!(cfg.validate().is_err());
        cfg.n_pairs = 10;
        cfg.beam = BeamParameters::new(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0)).unwrap();
        assert!(cfg.validate().is_err());
    }
}
