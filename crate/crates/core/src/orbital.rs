//! Finite approximations of orbital sets and of the homogeneous attractor.
//!
//! The orbital set of an IFS `{S_i}` with condensation set `C` is `C` together
//! with every image `S_w(C)` over finite words `w`; the inhomogeneous attractor
//! is its closure, `F_C = F_∅ ∪ 𝒪`. Everything here works on finite truncations,
//! either by word length or by a δ-stopping: the words `w` with
//! `Lip(S_w) < δ ≤ Lip(S_{w⁻})` where `w⁻` drops the last letter.

use std::collections::HashMap;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{check_budget, domain, Error, Result};
use crate::ifs::{apply_to_primitive, CondensationSet, ContractionMap, Ifs, Primitive, Vec2, Word};

/// Default cap on the number of primitives or words a single call may build.
pub const DEFAULT_PIECE_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Depth(usize),
    Delta(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub word: Word,
    pub primitive: Primitive,
    pub lip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalApprox {
    pub pieces: Vec<Piece>,
    pub truncation: Truncation,
    pub includes_root: bool,
}

impl OrbitalApprox {
    pub fn primitives(&self) -> Vec<Primitive> {
        self.pieces.iter().map(|p| p.primitive).collect()
    }

    /// CSV with columns `word,kind,x0,y0,x1,y1,lip`; points leave `x1,y1` empty
    /// and the root word is written as an empty field.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "word,kind,x0,y0,x1,y1,lip")?;
        for piece in &self.pieces {
            let c = piece.primitive.coords();
            let (x1, y1) = if c.len() == 4 {
                (c[2].to_string(), c[3].to_string())
            } else {
                (String::new(), String::new())
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                piece.word,
                piece.primitive.kind(),
                c[0],
                c[1],
                x1,
                y1,
                piece.lip
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSet {
    pub delta: f64,
    pub words: Vec<Word>,
    /// `Lip(S_w)` for each word, same order.
    pub lips: Vec<f64>,
}

impl StoppingSet {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("delta {delta} is not in (0,1]")))
    }
}

fn geometric_piece_count(n: usize, depth: usize, per_level: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = per_level as u128;
    for _ in 0..=depth {
        total = total.saturating_add(level);
        level = level.saturating_mul(n as u128);
    }
    total
}

/// `C ∪ ⋃_{1≤k≤K} ⋃_{|w|=k} S_w(C)`, listed level by level in word order.
pub fn orbital_to_depth(
    ifs: &Ifs,
    c: &CondensationSet,
    depth: usize,
    budget: u128,
) -> Result<OrbitalApprox> {
    let needed = geometric_piece_count(ifs.len(), depth, c.primitives().len());
    check_budget("orbital pieces", needed, budget)?;

    let mut pieces = Vec::with_capacity(needed as usize);
    let mut level: Vec<(Word, ContractionMap)> = vec![(Word::empty(), ContractionMap::identity())];
    for k in 0..=depth {
        let images = level
            .par_iter()
            .map(|(w, m)| {
                c.primitives()
                    .iter()
                    .map(|p| {
                        Ok(Piece {
                            word: w.clone(),
                            primitive: apply_to_primitive(m, p)?,
                            lip: m.lip(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        pieces.extend(images.into_iter().flatten());
        if k < depth {
            level = level
                .par_iter()
                .map(|(w, m)| {
                    ifs.maps()
                        .iter()
                        .enumerate()
                        .map(|(i, s)| Ok((w.child(i), m.compose(s)?)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
        }
    }
    Ok(OrbitalApprox {
        pieces,
        truncation: Truncation::Depth(depth),
        includes_root: true,
    })
}

/// Node visitor for δ-stopping descent: `internal` sees every word with
/// `Lip ≥ δ` (including the empty word), `stopped` sees the stopping words.
trait StopVisitor: Send {
    fn internal(&mut self, w: &Word, m: &ContractionMap) -> Result<()>;
    fn stopped(&mut self, w: &Word, m: &ContractionMap) -> Result<()>;
}

fn descend<V: StopVisitor>(
    ifs: &Ifs,
    delta: f64,
    w: Word,
    m: ContractionMap,
    v: &mut V,
) -> Result<()> {
    if m.lip() < delta {
        return v.stopped(&w, &m);
    }
    v.internal(&w, &m)?;
    for (i, s) in ifs.maps().iter().enumerate() {
        descend(ifs, delta, w.child(i), m.compose(s)?, v)?;
    }
    Ok(())
}

/// Runs the descent with the first level split across worker threads; the
/// visitors are returned in branch order so callers can concatenate results
/// deterministically.
fn parallel_descent<V, F>(ifs: &Ifs, delta: f64, make: F) -> Result<(V, Vec<V>)>
where
    V: StopVisitor,
    F: Fn() -> V + Sync,
{
    let mut root = make();
    let id = ContractionMap::identity();
    // The empty word has Lip = 1 ≥ δ, so it is always internal.
    root.internal(&Word::empty(), &id)?;
    let branches = ifs
        .maps()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut v = make();
            descend(ifs, delta, Word::new(vec![i]), *s, &mut v)?;
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((root, branches))
}

struct StopCollector {
    words: Vec<Word>,
    lips: Vec<f64>,
    maps: Vec<ContractionMap>,
}

impl StopVisitor for StopCollector {
    fn internal(&mut self, _: &Word, _: &ContractionMap) -> Result<()> {
        Ok(())
    }

    fn stopped(&mut self, w: &Word, m: &ContractionMap) -> Result<()> {
        self.words.push(w.clone());
        self.lips.push(m.lip());
        self.maps.push(*m);
        Ok(())
    }
}

fn stopping_with_maps(
    ifs: &Ifs,
    delta: f64,
    budget: u128,
) -> Result<(StoppingSet, Vec<ContractionMap>)> {
    check_delta(delta)?;
    if ifs.is_empty() {
        return Err(domain("IFS has no maps"));
    }
    let stats = stopping_stats(ifs, delta, 0.0)?;
    check_budget("stopping words", stats.count, budget)?;
    let (_, branches) = parallel_descent(ifs, delta, || StopCollector {
        words: Vec::new(),
        lips: Vec::new(),
        maps: Vec::new(),
    })?;
    let mut set = StoppingSet {
        delta,
        words: Vec::with_capacity(stats.count as usize),
        lips: Vec::with_capacity(stats.count as usize),
    };
    let mut maps = Vec::with_capacity(stats.count as usize);
    for b in branches {
        set.words.extend(b.words);
        set.lips.extend(b.lips);
        maps.extend(b.maps);
    }
    Ok((set, maps))
}

/// The δ-stopping `ℐ(δ)`, enumerated by depth-first descent.
pub fn stopping_set(ifs: &Ifs, delta: f64, budget: u128) -> Result<StoppingSet> {
    stopping_with_maps(ifs, delta, budget).map(|(s, _)| s)
}

/// Size of `ℐ(δ)` and `Σ_{w∈ℐ(δ)} Lip(S_w)^t`, computed without enumerating
/// the words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingStats {
    pub count: u128,
    pub power_sum: f64,
}

/// Counts the δ-stopping by dynamic programming over how many times each map
/// has been used: `Lip(S_w)` depends only on those multiplicities, so the
/// number of states grows polynomially in the depth instead of exponentially.
pub fn stopping_stats(ifs: &Ifs, delta: f64, t: f64) -> Result<StoppingStats> {
    check_delta(delta)?;
    if ifs.is_empty() {
        return Err(domain("IFS has no maps"));
    }
    let scales: Vec<(f64, f64)> = ifs.maps().iter().map(|m| m.axis_scales()).collect();
    let mut memo: HashMap<Vec<u16>, (u128, f64)> = HashMap::new();
    let mut exps = vec![0u16; scales.len()];
    let (count, power_sum) = stats_rec(&scales, delta, t, &mut exps, &mut memo)?;
    Ok(StoppingStats { count, power_sum })
}

const STATS_STATE_BUDGET: usize = 50_000_000;

fn stats_rec(
    scales: &[(f64, f64)],
    delta: f64,
    t: f64,
    exps: &mut Vec<u16>,
    memo: &mut HashMap<Vec<u16>, (u128, f64)>,
) -> Result<(u128, f64)> {
    let (sx, sy) = exps
        .iter()
        .zip(scales)
        .fold((1.0f64, 1.0f64), |(x, y), (&e, &(a, b))| {
            (x * a.powi(e as i32), y * b.powi(e as i32))
        });
    let lip = sx.max(sy);
    if lip < delta {
        return Ok((1, lip.powf(t)));
    }
    if let Some(&v) = memo.get(exps.as_slice()) {
        return Ok(v);
    }
    if memo.len() >= STATS_STATE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "stopping-count states",
            needed: memo.len() as u128 + 1,
            budget: STATS_STATE_BUDGET as u128,
        });
    }
    let mut count: u128 = 0;
    let mut sum = 0.0;
    for i in 0..scales.len() {
        exps[i] += 1;
        let (c, s) = stats_rec(scales, delta, t, exps, memo)?;
        exps[i] -= 1;
        count = count.saturating_add(c);
        sum += s;
    }
    memo.insert(exps.clone(), (count, sum));
    Ok((count, sum))
}

/// `{S_w(X) : w ∈ ℐ(δ)}` as axis-aligned boxes (bounding boxes when the IFS
/// rotates by angles other than quarter turns).
pub fn homogeneous_approx(ifs: &Ifs, delta: f64, budget: u128) -> Result<Vec<Primitive>> {
    let (_, maps) = stopping_with_maps(ifs, delta, budget)?;
    Ok(maps.iter().map(ContractionMap::image_of_unit_square).collect())
}

fn image_or_bbox(m: &ContractionMap, p: &Primitive) -> Primitive {
    apply_to_primitive(m, p).unwrap_or_else(|_| {
        let (lo, hi) = p.bbox();
        let corners = [lo, [hi[0], lo[1]], [lo[0], hi[1]], hi].map(|q| m.apply(q));
        let min = [
            corners.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min),
            corners.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min),
        ];
        let max = [
            corners.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max),
            corners.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max),
        ];
        Primitive::rect(min, max)
    })
}

struct CoverCollector<'a> {
    c: &'a CondensationSet,
    pieces: Vec<Primitive>,
    budget: u128,
    seen: u128,
}

impl CoverCollector<'_> {
    fn push(&mut self, p: Primitive) -> Result<()> {
        self.seen += 1;
        check_budget("cover pieces", self.seen, self.budget)?;
        self.pieces.push(p);
        Ok(())
    }
}

impl StopVisitor for CoverCollector<'_> {
    fn internal(&mut self, _: &Word, m: &ContractionMap) -> Result<()> {
        for p in self.c.primitives() {
            self.push(image_or_bbox(m, p))?;
        }
        Ok(())
    }

    fn stopped(&mut self, _: &Word, m: &ContractionMap) -> Result<()> {
        self.push(m.image_of_unit_square())
    }
}

/// A cover of `F_C` adapted to scale δ: the images `S_w(C)` for every word
/// with `Lip(S_w) ≥ δ`, plus the stopped cylinders `S_w(X)`, `w ∈ ℐ(δ)`, which
/// contain both `F_∅` and every deeper image of `C`.
pub fn inhomogeneous_cover(
    ifs: &Ifs,
    c: &CondensationSet,
    delta: f64,
    budget: u128,
) -> Result<Vec<Primitive>> {
    check_delta(delta)?;
    if ifs.is_empty() {
        return Ok(c.primitives().to_vec());
    }
    let (root, branches) = parallel_descent(ifs, delta, || CoverCollector {
        c,
        pieces: Vec::new(),
        budget,
        seen: 0,
    })?;
    let total: u128 = root.seen + branches.iter().map(|b| b.seen).sum::<u128>();
    check_budget("cover pieces", total, budget)?;
    let mut out = root.pieces;
    for b in branches {
        out.extend(b.pieces);
    }
    Ok(out)
}

/// Fixed point of a contraction, by iteration from the origin.
pub fn fixed_point(m: &ContractionMap) -> Vec2 {
    let mut p = [0.0, 0.0];
    let steps = ((1e-17f64).ln() / m.lip().ln()).ceil().clamp(1.0, 100_000.0) as usize;
    for _ in 0..steps {
        p = m.apply(p);
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureGap {
    /// One-sided Hausdorff distance from the depth-`K+1` orbital points to the
    /// depth-`K` orbital points together with the homogeneous approximation.
    pub gap: f64,
    /// `diam(X) · (max Lip)^K`; the gap never exceeds it.
    pub bound: f64,
    pub delta: f64,
}

const SEGMENT_SAMPLES: usize = 8;

/// Measures how far the level-`K+1` truncation of the orbital set is from the
/// level-`K` truncation joined with a `δ_K`-scale approximation of `F_∅`,
/// where `δ_K = (max Lip)^K`. The homogeneous part is represented by the
/// images `S_w(x*)` of the first map's fixed point over `w ∈ ℐ(δ_K)`.
pub fn structure_check(
    ifs: &Ifs,
    c: &CondensationSet,
    depth: usize,
    budget: u128,
) -> Result<StructureGap> {
    if depth < 1 {
        return Err(domain("structure check needs K ≥ 1"));
    }
    if ifs.is_empty() {
        return Err(domain("IFS has no maps"));
    }
    let delta = ifs.max_lip().powi(depth as i32);
    let bound = std::f64::consts::SQRT_2 * delta;
    let finer = orbital_to_depth(ifs, c, depth + 1, budget)?;
    let coarse = orbital_to_depth(ifs, c, depth, budget)?;

    let x_star = fixed_point(&ifs.maps()[0]);
    let (_, maps) = stopping_with_maps(ifs, delta, budget)?;
    let mut targets: Vec<Vec2> = maps.iter().map(|m| m.apply(x_star)).collect();
    for piece in &coarse.pieces {
        targets.extend(piece.primitive.sample_points(SEGMENT_SAMPLES));
    }

    // Only the pieces of length K+1 are new; the rest appear verbatim in the target.
    let queries: Vec<Vec2> = finer
        .pieces
        .iter()
        .filter(|p| p.word.len() == depth + 1)
        .flat_map(|p| p.primitive.sample_points(SEGMENT_SAMPLES))
        .collect();
    check_budget(
        "structure-check distance pairs",
        queries.len() as u128 * targets.len() as u128,
        budget.saturating_mul(100),
    )?;

    let gap = queries
        .par_iter()
        .map(|q| {
            targets
                .iter()
                .map(|t| (q[0] - t[0]).hypot(q[1] - t[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    Ok(StructureGap { gap, bound, delta })
}
