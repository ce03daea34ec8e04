use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use inhomog::hyperbolic::{
    poincare_exponent, poincare_series, ExponentEstimate, GroupKind, GroupPresentation,
    MoebiusMap, DEFAULT_ORBIT_BUDGET,
};
use inhomog::io::read_group_file;

use crate::open_output;

#[derive(clap::Args, Debug, Clone)]
pub struct PoincareArgs {
    /// `cyclic:<alpha>`, `schottky:<alpha>` (two perpendicular axes) or
    /// `group:<path>`.
    pub group: String,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    /// Exponents at which to evaluate the truncated series.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
    pub s: Vec<f64>,
    #[arg(long)]
    pub budget: Option<u128>,
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SeriesValue {
    s: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct PoincareReport {
    group: String,
    depth: usize,
    budget: u128,
    version: &'static str,
    series: Vec<SeriesValue>,
    exponent: Option<ExponentEstimate>,
    exponent_error: Option<String>,
}

pub fn parse_group(spec: &str) -> Result<GroupPresentation> {
    let (kind, rest) = spec
        .split_once(':')
        .with_context(|| format!("expected `kind:arg`, got `{spec}`"))?;
    let alpha = || -> Result<f64> {
        rest.parse()
            .with_context(|| format!("bad alpha `{rest}`"))
    };
    Ok(match kind {
        "cyclic" => GroupPresentation::cyclic(MoebiusMap::axial(alpha()?)?)?,
        "schottky" => {
            let h = MoebiusMap::axial(alpha()?)?;
            let rot = MoebiusMap::rotation(FRAC_PI_2);
            GroupPresentation::new(vec![h, rot.compose(&h).compose(&rot.inverse())], GroupKind::Free)?
        }
        "group" => read_group_file(rest.as_ref())?,
        _ => bail!("unknown group kind `{kind}`"),
    })
}

pub fn cmd_poincare(args: &PoincareArgs) -> Result<()> {
    let g = parse_group(&args.group)?;
    let budget = args.budget.unwrap_or(DEFAULT_ORBIT_BUDGET);
    let series = args
        .s
        .iter()
        .map(|&s| {
            Ok(SeriesValue {
                s,
                value: poincare_series(&g, s, args.depth, budget)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (exponent, exponent_error) = match poincare_exponent(&g, args.depth, budget) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = PoincareReport {
        group: args.group.clone(),
        depth: args.depth,
        budget,
        version: env!("CARGO_PKG_VERSION"),
        series,
        exponent,
        exponent_error,
    };
    let mut out = open_output(args.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
