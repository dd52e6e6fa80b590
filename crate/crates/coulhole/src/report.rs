//! Plain-text rendering of a regime report.

use coulhole_core::scales::{RegimeEntry, RegimeReport};

fn sci(x: f64) -> String {
    format!("{x:.4e}")
}

fn rows(e: &RegimeEntry) -> Vec<String> {
    let s = &e.scales;
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), sci);
    vec![
        sci(s.e_f.as_ev()),
        sci(s.v.as_nm_per_ns()),
        sci(s.s_c.as_nm()),
        sci(s.s_c.as_cm()),
        sci(s.tau_c.as_ns()),
        sci(s.t_i_temp.as_ev()),
        sci(s.t_f_temp.as_ev()),
        sci(s.t_hbt.as_ns()),
        opt(s.s_hbt.map(|l| l.as_nm())),
        sci(s.r_tp.as_nm()),
        sci(s.ratio_time),
        e.time_regime.label().to_string(),
        opt(s.ratio_space),
        e.space_regime
            .map_or_else(|| "-".to_string(), |r| r.label().to_string()),
    ]
}

const LABELS: [&str; 14] = [
    "E_f [eV]",
    "v [nm/ns]",
    "s_c [nm]",
    "s_c [cm]",
    "tau_c [ns]",
    "T_i [eV]",
    "T_f [eV]",
    "t_HBT [ns]",
    "s_HBT [nm]",
    "r_tp [nm]",
    "t_HBT/tau_c",
    "time regime",
    "s_HBT/s_c",
    "space regime",
];

/// Aligned table, one column per beam.
pub fn scales_table(report: &RegimeReport) -> String {
    let cols: Vec<Vec<String>> = report.entries.iter().map(rows).collect();
    let lw = LABELS.iter().map(|l| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = cols
        .iter()
        .map(|c| c.iter().map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    if let Some(n) = report.name {
        out.push_str(&format!("preset: {n}\n"));
    }
    out.push_str(&format!(
        "thresholds: negligible above {}, dominant at or below {}\n",
        report.thresholds.negligible_above, report.thresholds.dominant_at_or_below
    ));
    for (i, label) in LABELS.iter().enumerate() {
        out.push_str(&format!("{label:<lw$}"));
        for (c, w) in cols.iter().zip(&widths) {
            out.push_str(&format!("  {:>w$}", c[i]));
        }
        out.push('\n');
    }
    out
}
