use std::io::Write;

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::{json, Value};

use inhomog::boxdim::{
    attractor_counts, dyadic_scales, fit_dimension, write_counts_csv, CountMethod, CoverCount,
    DEFAULT_CELL_BUDGET,
};
use inhomog::constructions::{
    bernoulli_strip_count, comb_direct_count, interval_counts, kleinian_counterexample, CombParams,
    Construction, DEFAULT_NODE_BUDGET,
};
use inhomog::hyperbolic::DEFAULT_ORBIT_BUDGET;
use inhomog::orbital::{orbital_to_depth, DEFAULT_PIECE_BUDGET};

use crate::{open_output, parse_construction, Format, KRange, RunArgs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimReport {
    pub construction: String,
    pub params: Value,
    pub version: &'static str,
    pub budget: u128,
    pub k_min: u32,
    pub k_max: u32,
    pub method: &'static str,
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub per_step: Vec<f64>,
    pub r2: f64,
    pub upper_estimate: f64,
    pub lower_estimate: f64,
    pub oracle: Option<f64>,
    pub gap: Option<f64>,
    #[serde(skip)]
    pub cover_counts: Vec<CoverCount>,
}

pub fn default_k(c: &Construction) -> KRange {
    let (min, max) = match c {
        Construction::Sierpinski => (4, 10),
        Construction::Bernoulli(_) => (6, 14),
        Construction::Comb(_) => (4, 12),
        Construction::KleinianCe { .. } => (3, 6),
        Construction::File(_) => (2, 8),
    };
    KRange { min, max }
}

fn default_budget(c: &Construction) -> u128 {
    match c {
        Construction::Bernoulli(_) => DEFAULT_NODE_BUDGET,
        Construction::KleinianCe { .. } => DEFAULT_ORBIT_BUDGET,
        _ => DEFAULT_CELL_BUDGET,
    }
}

/// Comb scales `n^{-m}`, from the first at or below `2^-a` to the one
/// nearest `2^-b` on a log scale, padded to at least three scales.
pub fn comb_scales(p: &CombParams, k: KRange) -> Vec<f64> {
    let per_level = (p.n as f64).log2();
    let m_lo = ((k.min as f64 / per_level).ceil() as i32).max(1);
    let m_hi = ((k.max as f64 / per_level).round() as i32).max(m_lo + 2);
    (m_lo..=m_hi).map(|m| (p.n as f64).powi(-m)).collect()
}

fn params(c: &Construction) -> Value {
    match c {
        Construction::Sierpinski => json!({}),
        Construction::Bernoulli(p) => json!({ "lambda": p.lambda, "source": p.source }),
        Construction::Comb(p) => json!({ "n": p.n }),
        Construction::KleinianCe { m, n } => json!({ "M": m, "N": n, "alpha": 2.0, "beta": 1.0 / 3.0 }),
        Construction::File(path) => json!({ "path": path.display().to_string() }),
    }
}

pub fn compute_report(c: &Construction, k: Option<KRange>, budget: Option<u128>) -> Result<DimReport> {
    let k = k.unwrap_or_else(|| default_k(c));
    let budget = budget.unwrap_or_else(|| default_budget(c));
    let counts: Vec<CoverCount> = match c {
        Construction::Bernoulli(p) => dyadic_scales(k.min, k.max)
            .into_iter()
            .map(|d| {
                bernoulli_strip_count(p, d, budget).map(|s| CoverCount {
                    delta: d,
                    count: s.count,
                    method: CountMethod::StripFormula,
                })
            })
            .collect::<inhomog::Result<_>>()?,
        Construction::Comb(p) => comb_scales(p, k)
            .into_iter()
            .map(|d| comb_direct_count(p, d, budget))
            .collect::<inhomog::Result<_>>()?,
        Construction::KleinianCe { m, n } => {
            let ce = kleinian_counterexample(*m, *n, budget)?;
            let xs: Vec<f64> = ce.orbit.zs().iter().map(|z| z.re).collect();
            interval_counts(&xs, &dyadic_scales(k.min, k.max))?
        }
        Construction::Sierpinski | Construction::File(_) => {
            let (ifs, cset) = c.system()?.expect("planar construction");
            attractor_counts(&ifs, &cset, &dyadic_scales(k.min, k.max), budget)?
        }
    };
    let fit = fit_dimension(&counts)?;
    let oracle = c.oracle();
    Ok(DimReport {
        construction: c.to_string(),
        params: params(c),
        version: env!("CARGO_PKG_VERSION"),
        budget,
        k_min: k.min,
        k_max: k.max,
        method: counts[0].method.as_str(),
        scales: counts.iter().map(|c| c.delta).collect(),
        counts: counts.iter().map(|c| c.count).collect(),
        slope: fit.slope,
        intercept: fit.intercept,
        upper_estimate: fit.upper_estimate(),
        lower_estimate: fit.lower_estimate(),
        per_step: fit.per_step_slopes,
        r2: fit.r_squared,
        gap: oracle.map(|o| (fit.slope - o).abs()),
        oracle,
        cover_counts: counts,
    })
}

pub fn cmd_dim(args: &RunArgs) -> Result<()> {
    let c = parse_construction(&args.construction)?;
    let report = compute_report(&c, args.k, args.budget)?;
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Format::Csv => write_counts_csv(&report.cover_counts, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_generate(args: &RunArgs) -> Result<()> {
    let c = parse_construction(&args.construction)?;
    let mut out = open_output(args.output.as_deref())?;
    match &c {
        Construction::KleinianCe { m, n } => {
            let budget = args.budget.unwrap_or(DEFAULT_ORBIT_BUDGET);
            kleinian_counterexample(*m, *n, budget)?.orbit.write_csv(&mut out)?;
        }
        _ => {
            let (ifs, cset) = c.system()?.expect("planar construction");
            if cset.is_empty() {
                bail!("{c} has an empty condensation set; its orbital set is empty");
            }
            let depth = args.depth.unwrap_or(4);
            let budget = args.budget.unwrap_or(DEFAULT_PIECE_BUDGET);
            orbital_to_depth(&ifs, &cset, depth, budget)?.write_csv(&mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}
