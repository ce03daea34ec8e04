//! δ-mesh counting, box-dimension fits and the Hutchinson–Moran equation.
//!
//! Covers are counted on the grid of half-open cells
//! `[iδ,(i+1)δ) × [jδ,(j+1)δ)` anchored at the origin. Primitives are closed
//! sets and a cell counts when it meets one; coordinates equal to the upper
//! edge of the unit square fall into the last cell.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, domain, Error, Result};
use crate::ifs::{CondensationSet, Ifs, Primitive};
use crate::orbital::{homogeneous_approx, inhomogeneous_cover};

/// Default cap on distinct cells in a single count.
pub const DEFAULT_CELL_BUDGET: u128 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethod {
    ExactMesh,
    Sampled,
    /// Evaluated from a strip decomposition rather than a cell set.
    StripFormula,
}

impl CountMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountMethod::ExactMesh => "exact-mesh",
            CountMethod::Sampled => "sampled",
            CountMethod::StripFormula => "strip-formula",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverCount {
    pub delta: f64,
    pub count: u64,
    pub method: CountMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two-point slopes between consecutive scales.
    pub per_step_slopes: Vec<f64>,
    /// `(δ_min, δ_max)`.
    pub scale_range: (f64, f64),
    pub r_squared: f64,
}

impl DimensionFit {
    /// Largest per-step slope, a finite-data proxy for the upper box dimension.
    pub fn upper_estimate(&self) -> f64 {
        self.per_step_slopes
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest per-step slope, a proxy for the lower box dimension.
    pub fn lower_estimate(&self) -> f64 {
        self.per_step_slopes
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Index-space geometry of the δ-grid on `[0,1]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Grid {
    delta: f64,
    last: i64,
}

impl Grid {
    pub(crate) fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(domain(format!("delta {delta} is not in (0,1]")));
        }
        let cells = (1.0 / delta).ceil() as i64;
        Ok(Grid {
            delta,
            last: cells - 1,
        })
    }

    pub(crate) fn index(&self, x: f64) -> i64 {
        ((x / self.delta).floor() as i64).clamp(0, self.last)
    }

    /// Cell holding the points just below `y`.
    fn index_below(&self, y: f64) -> i64 {
        ((y / self.delta).ceil() as i64 - 1).clamp(0, self.last)
    }

    fn edge(&self, i: i64) -> f64 {
        i as f64 * self.delta
    }
}

fn pack(i: i64, j: i64) -> u64 {
    ((i as u64) << 32) | (j as u64 & 0xffff_ffff)
}

fn cell_count_of(p: &Primitive, g: &Grid) -> u128 {
    let (lo, hi) = p.bbox();
    let nx = (g.index(hi[0]) - g.index(lo[0]) + 1) as u128;
    let ny = (g.index(hi[1]) - g.index(lo[1]) + 1) as u128;
    match p {
        Primitive::Point { .. } => 1,
        Primitive::Rect { .. } => nx * ny,
        Primitive::Segment { .. } => nx + ny,
    }
}

/// Calls `emit` for every cell meeting the primitive. Cells are not
/// deduplicated here.
fn for_each_cell(p: &Primitive, g: &Grid, emit: &mut impl FnMut(i64, i64)) {
    match *p {
        Primitive::Point { p } => emit(g.index(p[0]), g.index(p[1])),
        Primitive::Rect { a, b } => {
            for i in g.index(a[0])..=g.index(b[0]) {
                for j in g.index(a[1])..=g.index(b[1]) {
                    emit(i, j);
                }
            }
        }
        Primitive::Segment { a, b } => {
            let (a, b) = if a[0] <= b[0] { (a, b) } else { (b, a) };
            let (i0, i1) = (g.index(a[0]), g.index(b[0]));
            if i0 == i1 || a[0] == b[0] {
                let (y0, y1) = (a[1].min(b[1]), a[1].max(b[1]));
                for j in g.index(y0)..=g.index(y1) {
                    emit(i0, j);
                }
                return;
            }
            // Walk the columns. Column i holds x in [iδ, (i+1)δ), so away from
            // the last column the right end of the y-range is open.
            let slope = (b[1] - a[1]) / (b[0] - a[0]);
            for i in i0..=i1 {
                let xl = a[0].max(g.edge(i));
                let yl = if i == i0 { a[1] } else { a[1] + slope * (xl - a[0]) };
                let (lo, hi) = if i == i1 {
                    (g.index(yl.min(b[1])), g.index(yl.max(b[1])))
                } else {
                    let yr = a[1] + slope * (g.edge(i + 1) - a[0]);
                    if yr > yl {
                        (g.index(yl), g.index_below(yr).max(g.index(yl)))
                    } else {
                        (g.index(yr), g.index(yl))
                    }
                };
                for j in lo..=hi {
                    emit(i, j);
                }
            }
        }
    }
}

const CHUNK: usize = 4096;

/// Exact number of δ-mesh cells meeting the union of `pieces`.
pub fn mesh_count(pieces: &[Primitive], delta: f64, budget: u128) -> Result<CoverCount> {
    let cells = mesh_cells(pieces, delta, budget)?;
    Ok(CoverCount {
        delta,
        count: cells.len() as u64,
        method: CountMethod::ExactMesh,
    })
}

/// The sorted, deduplicated packed cell indices behind [`mesh_count`].
pub(crate) fn mesh_cells(pieces: &[Primitive], delta: f64, budget: u128) -> Result<Vec<u64>> {
    let g = Grid::new(delta)?;
    if let Some(p) = pieces.iter().find(|p| !p.is_inside_unit_square()) {
        return Err(domain(format!("primitive {p:?} leaves the unit square")));
    }
    for p in pieces {
        check_budget("mesh cells", cell_count_of(p, &g), budget)?;
    }
    let partials = pieces
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut set = HashSet::new();
            for p in chunk {
                for_each_cell(p, &g, &mut |i, j| {
                    set.insert(pack(i, j));
                });
                check_budget("mesh cells", set.len() as u128, budget)?;
            }
            Ok(set.into_iter().collect::<Vec<u64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<u64> = partials.into_iter().flatten().collect();
    all.par_sort_unstable();
    all.dedup();
    check_budget("mesh cells", all.len() as u128, budget)?;
    Ok(all)
}

/// Least-squares slope of `log N` against `-log δ`, with the two-point
/// slopes between consecutive scales.
pub fn fit_dimension(counts: &[CoverCount]) -> Result<DimensionFit> {
    if counts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 scales, got {}",
            counts.len()
        )));
    }
    if counts.windows(2).any(|w| w[1].delta >= w[0].delta) {
        return Err(domain("scales must be strictly decreasing"));
    }
    if counts.iter().any(|c| c.count == 0) {
        return Err(domain("empty cover count"));
    }
    let xs: Vec<f64> = counts.iter().map(|c| -c.delta.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.count as f64).ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    let per_step_slopes = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(DimensionFit {
        slope,
        intercept,
        per_step_slopes,
        scale_range: (counts[counts.len() - 1].delta, counts[0].delta),
        r_squared,
    })
}

/// Ordinary least squares `y ≈ slope·x + intercept`, returning `r²` too.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoranSolution {
    pub s: f64,
    /// `|Σ r_i^s − 1|` at the returned root.
    pub residual: f64,
    /// Width of the final bisection bracket.
    pub bracket: f64,
}

/// Solves `Σ r_i^s = 1` by bisection. The left side is strictly decreasing
/// in `s`; the upper end of the bracket doubles until the sum drops below 1.
pub fn solve_moran(ratios: &[f64]) -> Result<MoranSolution> {
    if ratios.is_empty() {
        return Err(domain("Moran equation needs at least one ratio"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(domain(format!("contraction ratio {r} is not in (0,1)")));
    }
    let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    if ratios.len() == 1 {
        return Ok(MoranSolution {
            s: 0.0,
            residual: 0.0,
            bracket: 0.0,
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(domain("Moran bracket did not close"));
        }
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(MoranSolution {
        s,
        residual: f(s).abs(),
        bracket: hi - lo,
    })
}

/// Similarity dimension: the root of `Σ Lip(S_i)^s = 1`.
pub fn similarity_dimension(ifs: &Ifs) -> Result<f64> {
    solve_moran(&ifs.lips()).map(|m| m.s)
}

/// Partial sums `Σ_{k=1}^{K} (Σ_i r_i^t)^k` for `K = 1..=k_max`.
pub fn moran_tail(ifs: &Ifs, t: f64, k_max: usize) -> Result<Vec<f64>> {
    moran_partial_sums(&ifs.lips(), t, k_max)
}

pub fn moran_partial_sums(ratios: &[f64], t: f64, k_max: usize) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(domain(format!("exponent t = {t} must be non-negative")));
    }
    let rho: f64 = ratios.iter().map(|r| r.powf(t)).sum();
    let mut term = 1.0;
    let mut acc = 0.0;
    Ok((0..k_max)
        .map(|_| {
            term *= rho;
            acc += term;
            acc
        })
        .collect())
}

/// Dyadic scales `2^-k` for `k` in `k_min..=k_max`.
pub fn dyadic_scales(k_min: u32, k_max: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 0.5f64.powi(k as i32)).collect()
}

/// Mesh counts of the δ-adapted cover of `F_C` (see
/// [`inhomogeneous_cover`]) at each scale.
pub fn attractor_counts(
    ifs: &Ifs,
    c: &CondensationSet,
    scales: &[f64],
    budget: u128,
) -> Result<Vec<CoverCount>> {
    scales
        .iter()
        .map(|&d| mesh_count(&inhomogeneous_cover(ifs, c, d, budget)?, d, budget))
        .collect()
}

/// Mesh counts of the stopped-cylinder cover of `F_∅` at each scale.
pub fn homogeneous_counts(ifs: &Ifs, scales: &[f64], budget: u128) -> Result<Vec<CoverCount>> {
    scales
        .iter()
        .map(|&d| mesh_count(&homogeneous_approx(ifs, d, budget)?, d, budget))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremBounds {
    pub lower: f64,
    pub upper: f64,
    /// Fitted box dimension of the homogeneous attractor.
    pub homogeneous_estimate: f64,
    pub similarity_dimension: f64,
    pub condensation_dimension: f64,
}

/// `(max{est F_∅, dim C}, max{s, dim C})`.
pub fn theorem_main_bounds(
    ifs: &Ifs,
    dim_c: f64,
    scales: &[f64],
    budget: u128,
) -> Result<TheoremBounds> {
    if !(0.0..=2.0).contains(&dim_c) {
        return Err(domain(format!("condensation dimension {dim_c} is not in [0,2]")));
    }
    let s = similarity_dimension(ifs)?;
    let est = fit_dimension(&homogeneous_counts(ifs, scales, budget)?)?.slope;
    Ok(TheoremBounds {
        lower: est.max(dim_c),
        upper: s.max(dim_c),
        homogeneous_estimate: est,
        similarity_dimension: s,
        condensation_dimension: dim_c,
    })
}

pub fn write_counts_csv<W: std::io::Write>(counts: &[CoverCount], mut out: W) -> std::io::Result<()> {
    writeln!(out, "delta,count,method")?;
    for c in counts {
        writeln!(out, "{},{},{}", c.delta, c.count, c.method.as_str())?;
    }
    Ok(())
}
