//! Worked examples with known dimensions, the Garsia separation scan and the
//! specialised counting schemes for Bernoulli systems and fractal combs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::boxdim::{fit_dimension, mesh_count, CountMethod, CoverCount, DimensionFit};
use crate::error::{check_budget, domain, Error, Result};
use crate::hyperbolic::{orbital_set_points, DiskPoint, GroupPresentation, MoebiusMap, OrbitPointSet};
use crate::ifs::{CondensationSet, ContractionMap, Ifs, Primitive};
use crate::orbital::orbital_to_depth;

/// Default cap on tree nodes visited by the Bernoulli counters.
pub const DEFAULT_NODE_BUDGET: u128 = 1 << 30;

/// Levels enumerated serially before the Bernoulli tree is split across workers.
const SPLIT_LEVELS: u32 = 6;

/// The Sierpiński triangle: three maps of ratio 1/2, empty condensation.
pub fn sierpinski() -> (Ifs, CondensationSet) {
    let maps = [[0.0, 0.0], [0.5, 0.0], [0.25, 0.5]]
        .into_iter()
        .map(|t| ContractionMap::similarity(0.5, 0.0, false, t).expect("valid map"))
        .collect();
    (Ifs::new(maps).expect("valid IFS"), CondensationSet::empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSource {
    Explicit,
    GarsiaSqrt2,
    GarsiaCubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliParams {
    pub lambda: f64,
    pub source: LambdaSource,
}

/// Real root of `x³ − 2x − 2` in `[1.7, 1.8]`, by bisection.
pub fn garsia_cubic_root() -> f64 {
    let f = |x: f64| x * x * x - 2.0 * x - 2.0;
    let (mut lo, mut hi) = (1.7, 1.8);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl BernoulliParams {
    pub fn explicit(lambda: f64) -> Result<Self> {
        if !(lambda > 0.5 && lambda < 1.0) {
            return Err(domain(format!("lambda = {lambda} must lie in (1/2, 1)")));
        }
        Ok(BernoulliParams {
            lambda,
            source: LambdaSource::Explicit,
        })
    }

    pub fn garsia_sqrt2() -> Self {
        BernoulliParams {
            lambda: std::f64::consts::FRAC_1_SQRT_2,
            source: LambdaSource::GarsiaSqrt2,
        }
    }

    pub fn garsia_cubic() -> Self {
        BernoulliParams {
            lambda: 1.0 / garsia_cubic_root(),
            source: LambdaSource::GarsiaCubic,
        }
    }

    /// `log(4λ)/log 2`, the box dimension of `F_C` for Garsia reciprocals.
    pub fn garsia_dimension(&self) -> f64 {
        (4.0 * self.lambda).ln() / 2f64.ln()
    }
}

/// `S₁(x) = λx`, `S₂(x) = λx + (1−λ, 0)` with `C = {0} × [0,1]`.
pub fn bernoulli_system(p: &BernoulliParams) -> (Ifs, CondensationSet) {
    let l = p.lambda;
    let maps = vec![
        ContractionMap::similarity(l, 0.0, false, [0.0, 0.0]).expect("valid map"),
        ContractionMap::similarity(l, 0.0, false, [1.0 - l, 0.0]).expect("valid map"),
    ];
    let c = CondensationSet::new(vec![Primitive::segment([0.0, 0.0], [0.0, 1.0])]).expect("inside X");
    (Ifs::new(maps).expect("valid IFS"), c)
}

/// `(1−λ) Σ_k (i_k − 1) λ^{k−1}` for a one-based word in {1,2}.
pub fn bernoulli_base_point(lambda: f64, word: &[usize]) -> f64 {
    let mut scale = 1.0 - lambda;
    let mut x = 0.0;
    for &i in word {
        x += (i as f64 - 1.0) * scale;
        scale *= lambda;
    }
    x
}

/// `min |(1−λ) Σ d_k λ^{k−1}|` over nonzero `d ∈ {−1,0,1}^n`.
pub fn garsia_min_separation(lambda: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("word length must be at least 1"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    check_budget("difference vectors", 3u128.saturating_pow(n as u32), 3u128.pow(14))?;
    let powers: Vec<f64> = (0..n).map(|k| (1.0 - lambda) * lambda.powi(k as i32)).collect();

    fn scan(powers: &[f64], k: usize, acc: f64, nonzero: bool) -> f64 {
        if k == powers.len() {
            return if nonzero { acc.abs() } else { f64::INFINITY };
        }
        let mut best = scan(powers, k + 1, acc, nonzero);
        best = best.min(scan(powers, k + 1, acc + powers[k], true));
        best.min(scan(powers, k + 1, acc - powers[k], true))
    }

    Ok([-1.0, 0.0, 1.0]
        .par_iter()
        .map(|&d| scan(&powers, 1, d * powers[0], d != 0.0))
        .reduce(|| f64::INFINITY, f64::min))
}

/// For each δ-bin of `[0,1)`, the first level at which a base point of
/// `Λ(k)` lands there, or `u32::MAX`.
fn first_hit_levels(lambda: f64, max_level: u32, delta: f64, budget: u128) -> Result<Vec<u32>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1]")));
    }
    check_budget("base-point tree nodes", (1u128 << (max_level + 1)) - 1, budget)?;
    let bins = (1.0 / delta).ceil() as usize;
    let bin = |x: f64| ((x / delta).floor() as usize).min(bins - 1);
    let steps: Vec<f64> = (0..max_level).map(|l| (1.0 - lambda) * lambda.powi(l as i32)).collect();

    fn walk(steps: &[f64], level: u32, x: f64, out: &mut [u32], bin: &dyn Fn(f64) -> usize) {
        let b = bin(x);
        out[b] = out[b].min(level);
        if (level as usize) < steps.len() {
            walk(steps, level + 1, x, out, bin);
            walk(steps, level + 1, x + steps[level as usize], out, bin);
        }
    }

    let split = SPLIT_LEVELS.min(max_level);
    let mut roots = vec![0.0f64];
    for l in 0..split {
        roots = roots.iter().flat_map(|&x| [x, x + steps[l as usize]]).collect();
    }
    let mut first = vec![u32::MAX; bins];
    // Shallow nodes above the split.
    let mut shallow = vec![0.0f64];
    for l in 0..split {
        for &x in &shallow {
            let b = bin(x);
            first[b] = first[b].min(l);
        }
        shallow = shallow.iter().flat_map(|&x| [x, x + steps[l as usize]]).collect();
    }
    let partial: Vec<Vec<u32>> = roots
        .par_iter()
        .map(|&x| {
            let mut out = vec![u32::MAX; bins];
            walk(&steps, split, x, &mut out, &bin);
            out
        })
        .collect();
    for p in partial {
        for (f, v) in first.iter_mut().zip(p) {
            *f = (*f).min(v);
        }
    }
    Ok(first)
}

/// `N_δ(Λ(k))` for every `k` in `0..=k_max`.
pub fn lambda_counts(p: &BernoulliParams, k_max: u32, delta: f64, budget: u128) -> Result<Vec<u64>> {
    let first = first_hit_levels(p.lambda, k_max, delta, budget)?;
    let mut per_level = vec![0u64; k_max as usize + 1];
    for f in first.into_iter().filter(|&f| f != u32::MAX) {
        per_level[f as usize] += 1;
    }
    let mut acc = 0;
    Ok(per_level
        .into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect())
}

/// Number of δ-bins of `[0,1)` hit by the base points of `Λ(k)`.
pub fn lambda_k_count(p: &BernoulliParams, k: u32, delta: f64, budget: u128) -> Result<u64> {
    Ok(*lambda_counts(p, k, delta, budget)?.last().expect("k_max + 1 entries"))
}

/// Largest integer `k` with `λ^{k+1} > δ` (−1 if there is none).
pub fn k_lambda_delta(lambda: f64, delta: f64) -> i64 {
    let mut k: i64 = -1;
    while lambda.powi((k + 2) as i32) > delta * (1.0 + 1e-12) {
        k += 1;
    }
    k
}

/// Largest integer `k` with `2^k < 1/δ`.
pub fn k0_delta(delta: f64) -> i64 {
    let mut k: i64 = -1;
    while 2f64.powi((k + 1) as i32) < 1.0 / delta {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripCount {
    pub delta: f64,
    pub count: u64,
    pub k_lambda: i64,
    pub k0: i64,
    pub lambda_counts: Vec<u64>,
}

/// `⌈1/δ⌉ + Σ_{k=0}^{k(λ,δ)} ⌈λ^k/δ⌉ N_δ(Λ(k))`: the horizontal-strip
/// estimate of the cover count of `F_C`.
pub fn bernoulli_strip_count(p: &BernoulliParams, delta: f64, budget: u128) -> Result<StripCount> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let k_lambda = k_lambda_delta(p.lambda, delta);
    let counts = if k_lambda >= 0 {
        lambda_counts(p, k_lambda as u32, delta, budget)?
    } else {
        Vec::new()
    };
    let strips: u64 = counts
        .iter()
        .enumerate()
        .map(|(k, &n)| (p.lambda.powi(k as i32) / delta).ceil() as u64 * n)
        .sum();
    Ok(StripCount {
        delta,
        count: (1.0 / delta).ceil() as u64 + strips,
        k_lambda,
        k0: k0_delta(delta),
        lambda_counts: counts,
    })
}

/// Exact δ-mesh count of `F_C = [0,1]×{0} ∪ ⋃ S_w(C)`.
///
/// Every column meets the base row; a column hit by segments adds the rows up
/// to its tallest one, which comes from the shallowest level landing there.
pub fn bernoulli_direct_count(p: &BernoulliParams, delta: f64, budget: u128) -> Result<CoverCount> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let mut max_level = 0u32;
    while p.lambda.powi(max_level as i32 + 1) >= delta {
        max_level += 1;
    }
    let first = first_hit_levels(p.lambda, max_level, delta, budget)?;
    let last_row = (1.0 / delta).ceil() as u64 - 1;
    let count = first
        .iter()
        .map(|&f| {
            if f == u32::MAX {
                1
            } else {
                let h = p.lambda.powi(f as i32);
                ((h / delta).floor() as u64).min(last_row) + 1
            }
        })
        .sum();
    Ok(CoverCount {
        delta,
        count,
        method: CountMethod::ExactMesh,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CombParams {
    pub n: u32,
}

impl CombParams {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("comb needs n ≥ 2 rows, got {n}")));
        }
        Ok(CombParams { n })
    }

    /// `2 − log 2 / log n`.
    pub fn dimension(&self) -> f64 {
        2.0 - 2f64.ln() / (self.n as f64).ln()
    }

    /// Scales `n^{-m}` for `m = 1..` down to `delta_min`.
    pub fn natural_scales(&self, delta_min: f64) -> Vec<f64> {
        (1..)
            .map(|m| (self.n as f64).powi(-m))
            .take_while(|&d| d >= delta_min)
            .collect()
    }
}

/// Left column of the 2×n grid: `(x, y) ↦ (x/2, (y + j)/n)` with `C = [0,1]×{0}`.
pub fn comb_system(p: &CombParams) -> (Ifs, CondensationSet) {
    let n = p.n as f64;
    let maps = (0..p.n)
        .map(|j| ContractionMap::diagonal(0.5, 1.0 / n, [0.0, j as f64 / n]).expect("valid map"))
        .collect();
    let c = CondensationSet::new(vec![Primitive::segment([0.0, 0.0], [1.0, 0.0])]).expect("inside X");
    (Ifs::new(maps).expect("valid IFS"), c)
}

/// Largest `m ≥ 0` with `δ < n^{-m}`.
pub fn comb_m(n: u32, delta: f64) -> Result<u32> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let mut m = 0;
    while delta < (n as f64).powi(-(m as i32 + 1)) {
        m += 1;
    }
    Ok(m)
}

/// Mesh count of the comb pieces of level at most `m(δ)` together with the
/// left edge `{0}×[0,1]` carrying `F_∅`.
pub fn comb_direct_count(p: &CombParams, delta: f64, budget: u128) -> Result<CoverCount> {
    let m = comb_m(p.n, delta)?;
    let (ifs, c) = comb_system(p);
    let mut pieces = orbital_to_depth(&ifs, &c, m as usize, budget)?.primitives();
    pieces.push(Primitive::segment([0.0, 0.0], [0.0, 1.0]));
    mesh_count(&pieces, delta, budget)
}

/// `δ^{-1} Σ_{k=0}^{m(δ)} (n/2)^k`.
pub fn comb_closed_sum(p: &CombParams, delta: f64) -> Result<f64> {
    let m = comb_m(p.n, delta)?;
    let r = p.n as f64 / 2.0;
    Ok((0..=m).map(|k| r.powi(k as i32)).sum::<f64>() / delta)
}

/// The closed form `(2 − α^m β^n − β^n)/(2 + α^m β^n − β^n)` for α = 2, β = 1/3.
pub fn counterexample_closed_form(m: i64, n: u32) -> f64 {
    let b = 3f64.powi(-(n as i32));
    let y = 2f64.powi(m as i32) * b;
    (2.0 - y - b) / (2.0 + y - b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KleinianCounterexample {
    pub m_max: u32,
    pub n_max: u32,
    /// `Γ(C)` generated by the group action, labelled `k|n` for `h^k(1 − 3^{-n})`.
    pub orbit: OrbitPointSet,
    /// Closed-form values in the same order as `orbit`.
    pub closed_form: Vec<f64>,
    pub max_deviation: f64,
}

/// `⟨h⟩(C)` for `h` with α = 2 and `C = {1 − 3^{-n} : 1 ≤ n ≤ N}`.
pub fn kleinian_counterexample(m_max: u32, n_max: u32, budget: u128) -> Result<KleinianCounterexample> {
    if m_max == 0 || n_max == 0 {
        return Err(domain("M and N must be at least 1"));
    }
    let g = GroupPresentation::cyclic(MoebiusMap::axial(2.0)?)?;
    let c = (1..=n_max)
        .map(|n| DiskPoint::one_minus(3f64.powi(-(n as i32))))
        .collect::<Result<Vec<_>>>()?;
    let orbit = orbital_set_points(&g, &c, m_max as usize, budget)?;
    let closed_form = orbit
        .labels
        .iter()
        .map(|l| {
            let (k, n) = l
                .split_once('|')
                .and_then(|(k, n)| Some((k.parse::<i64>().ok()?, n.parse::<u32>().ok()?)))
                .ok_or_else(|| Error::Parse(format!("bad orbit label {l}")))?;
            Ok(counterexample_closed_form(-k, n))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = orbit
        .points
        .iter()
        .zip(&closed_form)
        .map(|(p, &x)| (p.z() - num_complex::Complex64::new(x, 0.0)).norm())
        .fold(0.0, f64::max);
    Ok(KleinianCounterexample {
        m_max,
        n_max,
        orbit,
        closed_form,
        max_deviation,
    })
}

fn interval_bins(xs: &[f64], delta: f64) -> (u64, u64) {
    let total = (2.0 / delta).ceil() as u64;
    let mut hit: Vec<u64> = xs
        .iter()
        .map(|&x| (((x + 1.0) / delta).floor() as u64).min(total - 1))
        .collect();
    hit.sort_unstable();
    hit.dedup();
    (hit.len() as u64, total)
}

/// Fraction of the δ-bins of `(−1, 1)` containing a point.
pub fn covered_fraction(xs: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 2]")));
    }
    let (hit, total) = interval_bins(xs, delta);
    Ok(hit as f64 / total as f64)
}

/// Occupied δ-bins of `(−1, 1)` at each scale.
pub fn interval_counts(xs: &[f64], scales: &[f64]) -> Result<Vec<CoverCount>> {
    scales
        .iter()
        .map(|&delta| {
            if !(delta > 0.0 && delta <= 2.0) {
                return Err(domain(format!("delta = {delta} must lie in (0, 2]")));
            }
            Ok(CoverCount {
                delta,
                count: interval_bins(xs, delta).0,
                method: CountMethod::ExactMesh,
            })
        })
        .collect()
}

/// One-dimensional box-counting fit of points on `(−1, 1)`.
pub fn interval_fit(xs: &[f64], scales: &[f64]) -> Result<DimensionFit> {
    fit_dimension(&interval_counts(xs, scales)?)
}

/// Named constructions accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Sierpinski,
    Bernoulli(BernoulliParams),
    Comb(CombParams),
    KleinianCe { m: u32, n: u32 },
    File(PathBuf),
}

impl Construction {
    /// Known box dimension of the attractor, when there is one.
    pub fn oracle(&self) -> Option<f64> {
        match self {
            Construction::Sierpinski => Some(3f64.ln() / 2f64.ln()),
            Construction::Bernoulli(p) if p.source != LambdaSource::Explicit => Some(p.garsia_dimension()),
            Construction::Comb(p) => Some(p.dimension()),
            Construction::KleinianCe { .. } => Some(1.0),
            _ => None,
        }
    }

    /// The IFS and condensation set, for the planar constructions.
    pub fn system(&self) -> Result<Option<(Ifs, CondensationSet)>> {
        Ok(match self {
            Construction::Sierpinski => Some(sierpinski()),
            Construction::Bernoulli(p) => Some(bernoulli_system(p)),
            Construction::Comb(p) => Some(comb_system(p)),
            Construction::KleinianCe { .. } => None,
            Construction::File(path) => Some(crate::io::read_ifs_file(path)?),
        })
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Construction::Sierpinski => write!(f, "sierpinski"),
            Construction::Bernoulli(p) => match p.source {
                LambdaSource::GarsiaSqrt2 => write!(f, "bernoulli:sqrt2"),
                LambdaSource::GarsiaCubic => write!(f, "bernoulli:cubic"),
                LambdaSource::Explicit => write!(f, "bernoulli:{}", p.lambda),
            },
            Construction::Comb(p) => write!(f, "comb:{}", p.n),
            Construction::KleinianCe { m, n } => write!(f, "kleinian-ce:{m}:{n}"),
            Construction::File(path) => write!(f, "ifs:{}", path.display()),
        }
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown construction `{s}`"));
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "sierpinski" if rest.is_empty() => Ok(Construction::Sierpinski),
            "bernoulli" => Ok(Construction::Bernoulli(match rest {
                "sqrt2" => BernoulliParams::garsia_sqrt2(),
                "cubic" => BernoulliParams::garsia_cubic(),
                x => BernoulliParams::explicit(x.parse().map_err(|_| bad())?)?,
            })),
            "comb" => Ok(Construction::Comb(CombParams::new(rest.parse().map_err(|_| bad())?)?)),
            "kleinian-ce" => {
                let (m, n) = rest.split_once(':').ok_or_else(bad)?;
                let (m, n) = (m.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?);
                if m == 0 || n == 0 {
                    return Err(domain("M and N must be at least 1"));
                }
                Ok(Construction::KleinianCe { m, n })
            }
            "ifs" if !rest.is_empty() => Ok(Construction::File(PathBuf::from(rest))),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxdim::similarity_dimension;
    use crate::ifs::{apply_to_primitive, compose, Word};
    use crate::orbital::DEFAULT_PIECE_BUDGET;

    #[test]
    fn sierpinski_dimension() {
        let (ifs, c) = sierpinski();
        assert!(c.is_empty());
        assert!((similarity_dimension(&ifs).unwrap() - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn cubic_root() {
        let x = garsia_cubic_root();
        assert!((x * x * x - 2.0 * x - 2.0).abs() < 1e-12);
        assert!((x - 1.76929).abs() < 1e-5);
        let p = BernoulliParams::garsia_cubic();
        assert!((p.lambda - 0.56519).abs() < 1e-5);
        assert!(BernoulliParams::explicit(0.5).is_err());
        assert!(BernoulliParams::explicit(1.0).is_err());
    }

    #[test]
    fn bernoulli_images_are_vertical_segments() {
        let p = BernoulliParams::garsia_sqrt2();
        let (ifs, c) = bernoulli_system(&p);
        for n in 0..=10usize {
            for bits in 0..(1u32 << n) {
                let word: Vec<usize> = (0..n).map(|k| 1 + ((bits >> k) & 1) as usize).collect();
                let m = compose(&ifs, &Word::from_one_based(&word).unwrap()).unwrap();
                let img = apply_to_primitive(&m, &c.primitives()[0]).unwrap();
                let x = bernoulli_base_point(p.lambda, &word);
                let h = p.lambda.powi(n as i32);
                let Primitive::Segment { a, b } = img else {
                    panic!("expected a segment, got {img:?}");
                };
                assert!((a[0] - x).abs() < 1e-14 && (b[0] - x).abs() < 1e-14);
                assert!(a[1].abs() < 1e-15 && (b[1] - h).abs() < 1e-14);
            }
        }
        assert_eq!(bernoulli_base_point(p.lambda, &[1, 1, 1, 1]), 0.0);
    }

    #[test]
    fn garsia_scan_small_cases() {
        let l = 0.6;
        assert!((garsia_min_separation(l, 1).unwrap() - 0.4).abs() < 1e-15);
        // n = 2: candidates (1−λ)·{1, λ, 1−λ, 1+λ}.
        let two = garsia_min_separation(l, 2).unwrap();
        assert!((two - 0.4 * 0.4).abs() < 1e-15);
        assert!(garsia_min_separation(l, 15).is_err());
        assert!(garsia_min_separation(l, 0).is_err());
    }

    #[test]
    fn garsia_scan_matches_word_pairs() {
        let l = std::f64::consts::FRAC_1_SQRT_2;
        for n in 1..=8usize {
            let pts: Vec<f64> = (0..1u32 << n)
                .map(|bits| {
                    let w: Vec<usize> = (0..n).map(|k| 1 + ((bits >> k) & 1) as usize).collect();
                    bernoulli_base_point(l, &w)
                })
                .collect();
            let mut best = f64::INFINITY;
            for i in 0..pts.len() {
                for j in 0..i {
                    best = best.min((pts[i] - pts[j]).abs());
                }
            }
            assert!((garsia_min_separation(l, n).unwrap() - best).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn golden_mean_overlaps() {
        let g = 2.0 / (1.0 + 5f64.sqrt());
        assert!(garsia_min_separation(g, 3).unwrap() < 1e-15);
    }

    #[test]
    fn lambda_counts_small() {
        let p = BernoulliParams::garsia_sqrt2();
        assert_eq!(lambda_k_count(&p, 0, 0.01, DEFAULT_NODE_BUDGET).unwrap(), 1);
        let fine = lambda_counts(&p, 10, 2f64.powi(-20), DEFAULT_NODE_BUDGET).unwrap();
        // Λ(k) is the level-k point set, separated at this scale.
        for (k, &c) in fine.iter().enumerate() {
            assert_eq!(c, 1 << k, "k = {k}");
        }
        let coarse = lambda_k_count(&p, 20, 2f64.powi(-10), DEFAULT_NODE_BUDGET).unwrap();
        assert!(coarse <= 1024 && coarse >= 256);
        assert!(matches!(
            lambda_k_count(&p, 40, 0.1, 1 << 20),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn strip_count_indices() {
        let l = std::f64::consts::FRAC_1_SQRT_2;
        // λ^{k+1} > 2^-6 ⇔ k + 1 < 12.
        assert_eq!(k_lambda_delta(l, 2f64.powi(-6)), 10);
        assert_eq!(k0_delta(2f64.powi(-6)), 5);
        assert_eq!(k0_delta(0.3), 1);
        let c = bernoulli_strip_count(&BernoulliParams::garsia_sqrt2(), 0.5, DEFAULT_NODE_BUDGET).unwrap();
        assert!(c.count >= 2);
    }

    #[test]
    fn direct_count_matches_mesh_count() {
        for p in [BernoulliParams::garsia_sqrt2(), BernoulliParams::garsia_cubic()] {
            let (ifs, c) = bernoulli_system(&p);
            // Off the lattice of powers of λ, so no segment ends on a grid line.
            for j in 2..=7 {
                let delta = 0.7 * 2f64.powi(-j);
                let direct = bernoulli_direct_count(&p, delta, DEFAULT_NODE_BUDGET).unwrap();
                let mut depth = 0;
                while p.lambda.powi(depth + 1) >= delta {
                    depth += 1;
                }
                let mut pieces = orbital_to_depth(&ifs, &c, depth as usize, DEFAULT_PIECE_BUDGET)
                    .unwrap()
                    .primitives();
                pieces.push(Primitive::segment([0.0, 0.0], [1.0, 0.0]));
                let mesh = mesh_count(&pieces, delta, u128::MAX).unwrap();
                assert_eq!(direct.count, mesh.count, "λ = {}, δ = {delta}", p.lambda);
            }
        }
    }

    #[test]
    fn strip_and_direct_agree_up_to_constants() {
        let p = BernoulliParams::garsia_sqrt2();
        for j in 6..=12 {
            let d = 2f64.powi(-j);
            let s = bernoulli_strip_count(&p, d, DEFAULT_NODE_BUDGET).unwrap().count as f64;
            let c = bernoulli_direct_count(&p, d, DEFAULT_NODE_BUDGET).unwrap().count as f64;
            let r = s / c;
            assert!((1.0 / 8.0..=8.0).contains(&r), "j = {j}: {s} vs {c}");
        }
    }

    #[test]
    fn comb_pieces() {
        let p = CombParams::new(3).unwrap();
        let (ifs, c) = comb_system(&p);
        assert_eq!(ifs.len(), 3);
        let approx = orbital_to_depth(&ifs, &c, 2, DEFAULT_PIECE_BUDGET).unwrap();
        let level2: Vec<_> = approx.pieces.iter().filter(|q| q.word.len() == 2).collect();
        assert_eq!(level2.len(), 9);
        for q in level2 {
            let Primitive::Segment { a, b } = q.primitive else { panic!() };
            assert!((b[0] - a[0] - 0.25).abs() < 1e-15);
        }
        assert!(CombParams::new(1).is_err());
    }

    #[test]
    fn comb_m_is_strict() {
        assert_eq!(comb_m(3, 3f64.powi(-8)).unwrap(), 7);
        assert_eq!(comb_m(3, 0.9 * 3f64.powi(-8)).unwrap(), 8);
        assert_eq!(comb_m(3, 0.5).unwrap(), 0);
        assert!(comb_m(3, 1.0).is_err());
    }

    #[test]
    fn comb_direct_vs_closed_sum() {
        for n in [2u32, 3, 5] {
            let p = CombParams::new(n).unwrap();
            for delta in p.natural_scales(2f64.powi(-10)) {
                let direct = comb_direct_count(&p, delta, DEFAULT_PIECE_BUDGET).unwrap().count as f64;
                let closed = comb_closed_sum(&p, delta).unwrap();
                let r = direct / closed;
                assert!((0.25..=4.0).contains(&r), "n = {n}, δ = {delta}: {direct} vs {closed}");
            }
        }
    }

    #[test]
    fn counterexample_points() {
        let ce = kleinian_counterexample(10, 10, crate::hyperbolic::DEFAULT_ORBIT_BUDGET).unwrap();
        assert_eq!(ce.orbit.len(), 21 * 10);
        assert!(ce.max_deviation < 1e-12);
        assert!(ce.orbit.all_inside());
        assert!((counterexample_closed_form(0, 1) - (2.0 - 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!(1.0 - counterexample_closed_form(0, 30) < 1e-13);
    }

    #[test]
    fn interval_counting() {
        let xs = [-0.99, -0.5, 0.0, 0.999];
        assert_eq!(covered_fraction(&xs, 0.5).unwrap(), 1.0);
        assert_eq!(covered_fraction(&xs, 0.25).unwrap(), 0.5);
        let dense: Vec<f64> = (0..4000).map(|i| -1.0 + (i as f64 + 0.5) / 2000.0).collect();
        let fit = interval_fit(&dense, &[0.125, 0.0625, 0.03125, 0.015625]).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn construction_names() {
        for s in ["sierpinski", "bernoulli:sqrt2", "bernoulli:cubic", "comb:3", "kleinian-ce:50:30"] {
            let c: Construction = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        let b: Construction = "bernoulli:0.6".parse().unwrap();
        assert_eq!(b.oracle(), None);
        assert!((("comb:3".parse::<Construction>().unwrap()).oracle().unwrap() - 1.36907).abs() < 1e-5);
        for bad in ["sierpinsky", "comb:1", "comb:x", "bernoulli:0.3", "kleinian-ce:0:3", "ifs:"] {
            assert!(bad.parse::<Construction>().is_err(), "{bad}");
        }
    }
}
