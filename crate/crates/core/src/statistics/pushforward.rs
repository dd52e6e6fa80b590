use alloc::vec::Vec;

use super::grid::{
    check_increasing, GridFunction, GridKind, GridSpec, GridWarning, Side, SingularCell,
    EDGE_CELL_TOLERANCE,
};
use super::timemap::{MapModel, TimeMap};
use super::EmissionModel;
use crate::dynamics::{critical_scale, BeamParameters, CoulombScale};
use crate::error::{Error, Result};
use crate::units::{Length, Time};

/// Multiple of `t̄` a density grid must reach to hold all but `e^{-40}` of
/// the mass.
pub const SUPPORT_MULTIPLE: f64 = 40.0;

/// Arrival-interval density `P(t_f)` on `grid` for pairs emitted with
/// transverse offset `x_i`, using the exact map.
pub fn pushforward_time_density(
    grid: &[Time],
    beam: &BeamParameters,
    model: &EmissionModel,
    x_i: Length,
) -> Result<GridFunction> {
    let scale = critical_scale(beam);
    let map = TimeMap::new(MapModel::Exact, x_i / scale.s_c)?;
    pushforward_with(grid, &scale, model, &map)
}

/// Push the emission density through `map`.
///
/// Every distribution edge inside the grid is inserted as a node. A fold
/// node holds the finite limit from its regular side and the cell on its
/// singular side is marked for the inverse-square-root rule.
pub fn pushforward_with(
    grid: &[Time],
    scale: &CoulombScale,
    model: &EmissionModel,
    map: &TimeMap,
) -> Result<GridFunction> {
    let mut t: Vec<f64> = grid.iter().map(|x| x.as_ns()).collect();
    if t.len() < 2 {
        return Err(Error::InvalidGrid("need at least two points"));
    }
    check_increasing(&t)?;
    if t[0] < 0.0 {
        return Err(Error::InvalidGrid("time grid must start at t ≥ 0"));
    }
    let tc = scale.tau_c.as_ns();
    let (first, last) = (t[0], t[t.len() - 1]);
    let mut warnings = Vec::new();

    let edges = map.edges();
    let mut folds = Vec::new();
    for e in &edges {
        let te = e.y * tc;
        if te < first || te > last {
            warnings.push(GridWarning::EdgeOutsideGrid { edge: te });
            continue;
        }
        let i = t.partition_point(|&s| s < te);
        let near = [i.wrapping_sub(1), i]
            .into_iter()
            .filter(|&k| k < t.len())
            .find(|&k| (t[k] - te).abs() <= 1e-12 * te);
        match near {
            Some(k) => t[k] = te,
            None => t.insert(i, te),
        }
        if e.fold {
            folds.push((te, e.opens_above));
        }
    }

    let mut values = Vec::with_capacity(t.len());
    for &x in &t {
        let mut p = 0.0;
        for pre in map.preimages(x / tc)? {
            p += model.pdf_ns(pre.tau * tc) / pre.slope.abs();
        }
        values.push(p);
    }

    let mut singular = Vec::new();
    for (te, above) in folds {
        let k = t.partition_point(|&s| s < te);
        let cell = if above {
            (k + 1 < t.len()).then_some(SingularCell {
                index: k,
                side: Side::Left,
            })
        } else {
            (k >= 1).then(|| SingularCell {
                index: k - 1,
                side: Side::Right,
            })
        };
        if let Some(c) = cell {
            let width = t[c.index + 1] - t[c.index];
            if width > EDGE_CELL_TOLERANCE * te {
                warnings.push(GridWarning::CoarseEdge { edge: te, width });
            }
            singular.push(c);
        }
    }

    let recommended = SUPPORT_MULTIPLE * model.t_bar().as_ns();
    if last < recommended {
        warnings.push(GridWarning::TruncatedSupport {
            grid_end: last,
            recommended,
        });
    }

    GridFunction::from_parts(
        t,
        values,
        GridKind::DensityPerTime,
        singular,
        Some(scale.tau_c),
        warnings,
    )
}

/// Grid on `[0, 40·t̄]` refined around every edge and near-fold of `map`, with cells no
/// wider than `max_spacing` and log-spaced points down to `10⁻³ τ_c`.
pub fn default_time_grid(
    scale: &CoulombScale,
    model: &EmissionModel,
    map: &TimeMap,
    max_spacing: Time,
) -> Result<Vec<Time>> {
    let tc = scale.tau_c.as_ns();
    let edges: Vec<f64> = map.refinement_points()?.iter().map(|y| y * tc).collect();
    let top = edges.iter().copied().fold(0.0, f64::max);
    let t_max = (SUPPORT_MULTIPLE * model.t_bar().as_ns()).max(4.0 * top);
    let spec = GridSpec {
        t_max: Time::ns(t_max),
        max_spacing,
        points_per_decade: 40,
        min_offset: 1e-8,
    };
    let mut pts: Vec<f64> = spec.build(&edges)?.iter().map(|x| x.as_ns()).collect();
    let (lo, hi) = (libm::log10(1e-3 * tc), libm::log10(t_max));
    let n = libm::ceil((hi - lo) * 40.0) as usize;
    for k in 0..n {
        pts.push(libm::pow(10.0, lo + (hi - lo) * k as f64 / n as f64));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1e-300));
    Ok(pts.into_iter().map(Time::ns).collect())
}

/// Probability that the arrival interval falls in each bin
/// `[edges[k], edges[k+1])`, from the emission probability of every
/// preimage interval. No quadrature is involved.
pub fn bin_probabilities(
    map: &TimeMap,
    scale: &CoulombScale,
    model: &EmissionModel,
    edges: &[Time],
) -> Result<Vec<f64>> {
    let e: Vec<f64> = edges.iter().map(|x| x.as_ns()).collect();
    if e.len() < 2 {
        return Err(Error::InvalidGrid("need at least two bin edges"));
    }
    check_increasing(&e)?;
    let tc = scale.tau_c.as_ns();
    let rate = tc / model.t_bar().as_ns();
    let mut out = Vec::with_capacity(e.len() - 1);
    for w in e.windows(2) {
        let (a, b) = (w[0].max(0.0) / tc, w[1].max(0.0) / tc);
        let mut mass = 0.0;
        for (k, p) in map.pieces().iter().enumerate() {
            let (lo, hi) = if p.y_lo <= p.y_hi {
                (p.y_lo, p.y_hi)
            } else {
                (p.y_hi, p.y_lo)
            };
            let (ja, jb) = (a.max(lo), b.min(hi));
            if !(ja < jb) {
                continue;
            }
            let ta = map.solve_on(k, ja)?;
            let tb = map.solve_on(k, jb)?;
            mass += interval_mass(ta.min(tb), ta.max(tb), rate);
        }
        out.push(mass);
    }
    Ok(out)
}

/// `e^{-r a} − e^{-r b}` for `0 ≤ a ≤ b`, accurate for narrow intervals.
fn interval_mass(a: f64, b: f64, rate: f64) -> f64 {
    if a == f64::INFINITY {
        return 0.0;
    }
    if b == f64::INFINITY {
        return libm::exp(-rate * a);
    }
    -libm::exp(-rate * a) * libm::expm1(-rate * (b - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::map_minimum;
    use crate::units::{Energy, Length};

    fn scale() -> CoulombScale {
        // τ_c = 1 ns exactly, so abscissae read directly in τ_c
        CoulombScale::new(Length::nm(1.0), crate::units::Velocity::nm_per_ns(1.0)).unwrap()
    }

    fn model(t_bar: f64) -> EmissionModel {
        EmissionModel::new(Time::ns(t_bar)).unwrap()
    }

    fn density(xi: f64, exact: bool, t_bar: f64) -> GridFunction {
        let sc = scale();
        let m = model(t_bar);
        let kind = if exact {
            MapModel::Exact
        } else {
            MapModel::Approximate
        };
        let map = TimeMap::new(kind, xi).unwrap();
        let grid = default_time_grid(&sc, &m, &map, Time::ns(0.05 * t_bar)).unwrap();
        pushforward_with(&grid, &sc, &m, &map).unwrap()
    }

    #[test]
    fn zero_below_the_floor() {
        let p = density(0.0, true, 200.0);
        let floor = map_minimum().y_min;
        for (t, v) in p.abscissae_ns().iter().zip(p.values()) {
            if *t <= floor {
                assert_eq!(*v, 0.0, "t={t}");
            }
        }
        assert!(p.warnings().is_empty(), "{:?}", p.warnings());
        assert_eq!(p.singular_cells().len(), 1);
        assert_eq!(p.singular_cells()[0].side, Side::Left);
    }

    #[test]
    fn total_probability_is_conserved() {
        for (xi, exact) in [
            (0.0, true),
            (0.05, true),
            (0.3, true),
            (2.0, true),
            (0.0, false),
            (0.3, false),
        ] {
            for t_bar in [2.0, 200.0] {
                let p = density(xi, exact, t_bar);
                assert!(
                    (p.normalization() - 1.0).abs() < 1e-3,
                    "xi={xi} exact={exact} t̄={t_bar}: {}",
                    p.normalization()
                );
            }
        }
    }

    #[test]
    fn far_tail_follows_the_emission_density() {
        let sc = scale();
        // the lower branch decays only as a power, 2τ_c³/t_f³ relative to
        // 1/t̄, so t̄ must be well above τ_c for it to drop below 0.1%
        let m = model(1000.0);
        let map = TimeMap::new(MapModel::Exact, 0.0).unwrap();
        let t = 20.0 * 1000.0;
        let grid = [Time::ns(t), Time::ns(t + 1.0)];
        let p = pushforward_with(&grid, &sc, &m, &map).unwrap();
        let p0 = m.pdf_ns(t);
        assert!((p.values()[0] / p0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn bins_match_integrated_density() {
        let sc = scale();
        let m = model(5.0);
        for xi in [0.0, 0.05, 0.5] {
            let map = TimeMap::new(MapModel::Exact, xi).unwrap();
            let grid = default_time_grid(&sc, &m, &map, Time::ns(0.01)).unwrap();
            let p = pushforward_with(&grid, &sc, &m, &map).unwrap();
            // integrate between two interior nodes and compare
            let t = p.abscissae_ns();
            let i = t.partition_point(|&x| x < 1.5);
            let j = t.partition_point(|&x| x < 4.0);
            let quad = p.integral_between(i, j);
            let exact =
                bin_probabilities(&map, &sc, &m, &[Time::ns(t[i]), Time::ns(t[j])]).unwrap()[0];
            assert!(
                (quad - exact).abs() < 1e-4 * exact,
                "xi={xi}: {quad} {exact}"
            );
        }
    }

    #[test]
    fn bins_sum_to_one() {
        let sc = scale();
        let m = model(3.0);
        let map = TimeMap::new(MapModel::Exact, 0.05).unwrap();
        let edges: Vec<Time> = [0.0, 0.1, 0.5, 1.0, 1.1, 1.2, 2.0, 10.0, 1e6]
            .iter()
            .map(|&x| Time::ns(x))
            .collect();
        let total: f64 = bin_probabilities(&map, &sc, &m, &edges)
            .unwrap()
            .iter()
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let sc = scale();
        let m = model(1.0);
        let map = TimeMap::new(MapModel::Exact, 0.0).unwrap();
        let grid: Vec<Time> = (0..5).map(|k| Time::ns(k as f64)).collect();
        let p = pushforward_with(&grid, &sc, &m, &map).unwrap();
        assert!(p
            .warnings()
            .iter()
            .any(|w| matches!(w, GridWarning::CoarseEdge { .. })));
        assert!(p
            .warnings()
            .iter()
            .any(|w| matches!(w, GridWarning::TruncatedSupport { .. })));
        let short = [Time::ns(0.0), Time::ns(0.5)];
        let p = pushforward_with(&short, &sc, &m, &map).unwrap();
        assert!(p
            .warnings()
            .iter()
            .any(|w| matches!(w, GridWarning::EdgeOutsideGrid { .. })));
    }

    #[test]
    fn rejects_bad_grids() {
        let sc = scale();
        let m = model(1.0);
        let map = TimeMap::new(MapModel::Exact, 0.0).unwrap();
        assert!(pushforward_with(&[Time::ns(1.0)], &sc, &m, &map).is_err());
        assert!(pushforward_with(&[Time::ns(-1.0), Time::ns(1.0)], &sc, &m, &map).is_err());
        assert!(pushforward_with(&[Time::ns(2.0), Time::ns(1.0)], &sc, &m, &map).is_err());
    }

    #[test]
    fn physical_entry_point() {
        let beam = BeamParameters::new(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0)).unwrap();
        let sc = critical_scale(&beam);
        let m = EmissionModel::new(sc.tau_c * 50.0).unwrap();
        let map = TimeMap::new(MapModel::Exact, 0.0).unwrap();
        let grid = default_time_grid(&sc, &m, &map, sc.tau_c * 0.5).unwrap();
        let p = pushforward_time_density(&grid, &beam, &m, Length::nm(0.0)).unwrap();
        assert!((p.normalization() - 1.0).abs() < 1e-3);
    }
}
