use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::units::Time;

/// Bin-edge placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Spacing {
    /// Equal widths.
    Linear,
    /// Equal ratios; needs `t_min > 0`.
    Log,
}

/// Binning on `[t_min, t_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HistogramSpec {
    /// Lower edge of the first bin.
    pub t_min: Time,
    /// Upper edge of the last bin.
    pub t_max: Time,
    /// Number of bins, at least 2.
    pub n_bins: usize,
    /// Edge placement.
    pub spacing: Spacing,
}

impl HistogramSpec {
    /// Check the invariants.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.t_min.as_ns(), self.t_max.as_ns());
        if !(a >= 0.0) || !b.is_finite() || !(a < b) {
            return Err(Error::InvalidConfig("histogram needs 0 ≤ t_min < t_max"));
        }
        if self.n_bins < 2 {
            return Err(Error::InvalidConfig("histogram needs at least 2 bins"));
        }
        if self.spacing == Spacing::Log && a == 0.0 {
            return Err(Error::InvalidConfig("log histogram needs t_min > 0"));
        }
        Ok(())
    }

    /// Bin edges in ns; the end points are exact.
    pub fn edges_ns(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let (a, b) = (self.t_min.as_ns(), self.t_max.as_ns());
        let n = self.n_bins;
        let mut e: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect(),
            Spacing::Log => {
                let r = libm::log(b / a);
                (0..=n)
                    .map(|k| a * libm::exp(r * k as f64 / n as f64))
                    .collect()
            }
        };
        e[0] = a;
        e[n] = b;
        Ok(e)
    }
}

/// Counts per bin, with out-of-range samples tallied separately.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram {
    /// Empty histogram.
    pub fn new(spec: &HistogramSpec) -> Result<Self> {
        let edges = spec.edges_ns()?;
        let n = edges.len() - 1;
        Ok(Self {
            edges,
            counts: alloc::vec![0; n],
            underflow: 0,
            overflow: 0,
        })
    }

    /// Add a sample, in ns.
    pub fn fill(&mut self, t: f64) {
        let n = self.counts.len();
        if t < self.edges[0] {
            self.underflow += 1;
        } else if t >= self.edges[n] {
            self.overflow += 1;
        } else {
            let k = self.edges.partition_point(|&e| e <= t) - 1;
            self.counts[k] += 1;
        }
    }

    /// Add another histogram with identical edges.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::InvalidConfig("histograms have different edges"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    /// Edges, ns.
    pub fn edges_ns(&self) -> &[f64] {
        &self.edges
    }

    /// Counts per bin.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Samples below the first edge.
    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    /// Samples at or above the last edge.
    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    /// All samples, in range or not.
    pub fn n_total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Poisson standard error `√count` per bin.
    pub fn std_errors(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| libm::sqrt(c as f64)).collect()
    }

    /// Density estimate per ns, `count/(n_total·width)`, with its error.
    pub fn density(&self) -> Vec<(f64, f64)> {
        let n = self.n_total() as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| {
                let d = n * (w[1] - w[0]);
                (c as f64 / d, libm::sqrt(c as f64) / d)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(spacing: Spacing) -> HistogramSpec {
        HistogramSpec {
            t_min: Time::ns(1.0),
            t_max: Time::ns(100.0),
            n_bins: 2,
            spacing,
        }
    }

    #[test]
    fn edges() {
        let e = spec(Spacing::Log).edges_ns().unwrap();
        assert_eq!(e[0], 1.0);
        assert!((e[1] - 10.0).abs() < 1e-12);
        assert_eq!(e[2], 100.0);
        let e = spec(Spacing::Linear).edges_ns().unwrap();
        assert_eq!(e, [1.0, 50.5, 100.0]);
    }

    #[test]
    fn fill_and_tally() {
        let mut h = Histogram::new(&spec(Spacing::Linear)).unwrap();
        for t in [0.5, 1.0, 50.5, 99.9, 100.0, 7.0] {
            h.fill(t);
        }
        assert_eq!(h.counts(), &[2, 2]);
        assert_eq!((h.underflow(), h.overflow()), (1, 1));
        assert_eq!(h.n_total(), 6);
        assert!(h.counts().iter().sum::<u64>() <= h.n_total());
        assert_eq!(h.std_errors(), [2f64.sqrt(), 2f64.sqrt()]);
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(Spacing::Log);
        s.n_bins = 1;
        assert!(s.validate().is_err());
        let mut s = spec(Spacing::Log);
        s.t_min = Time::ns(0.0);
        assert!(s.validate().is_err());
        s.spacing = Spacing::Linear;
        assert!(s.validate().is_ok());
        s.t_max = Time::ns(0.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn merge_requires_same_edges() {
        let mut a = Histogram::new(&spec(Spacing::Log)).unwrap();
        let b = Histogram::new(&spec(Spacing::Linear)).unwrap();
        assert!(a.merge(&b).is_err());
        let mut c = a.clone();
        c.fill(2.0);
        a.merge(&c).unwrap();
        assert_eq!(a.counts(), &[1, 0]);
    }
}
