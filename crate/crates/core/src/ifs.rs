//! Contraction maps on the unit square, words over an IFS, and the geometric
//! primitives that condensation sets and orbital approximations are built from.
//!
//! The ambient space is fixed to `X = [0,1]²`. One-dimensional systems are
//! embedded on the line `y = 0`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type Vec2 = [f64; 2];

/// Slack allowed when checking that a point lies in the unit square.
pub const CONTAINMENT_TOL: f64 = 1e-12;

const ANGLE_TOL: f64 = 1e-12;

const CORNERS: [Vec2; 4] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];

pub(crate) fn in_unit_square(p: Vec2) -> bool {
    p.iter()
        .all(|&c| c.is_finite() && (-CONTAINMENT_TOL..=1.0 + CONTAINMENT_TOL).contains(&c))
}

/// A closed geometric primitive inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    Point { p: Vec2 },
    Segment { a: Vec2, b: Vec2 },
    /// Axis-aligned closed rectangle given by its lower-left and upper-right corners.
    Rect { a: Vec2, b: Vec2 },
}

impl Primitive {
    pub fn point(x: f64, y: f64) -> Self {
        Primitive::Point { p: [x, y] }
    }

    /// Builds a segment; a zero-length segment becomes a point.
    pub fn segment(a: Vec2, b: Vec2) -> Self {
        if a == b {
            Primitive::Point { p: a }
        } else {
            Primitive::Segment { a, b }
        }
    }

    /// Builds an axis-aligned rectangle from any two opposite corners,
    /// collapsing degenerate rectangles to segments or points.
    pub fn rect(c0: Vec2, c1: Vec2) -> Self {
        let lo = [c0[0].min(c1[0]), c0[1].min(c1[1])];
        let hi = [c0[0].max(c1[0]), c0[1].max(c1[1])];
        if lo[0] == hi[0] || lo[1] == hi[1] {
            Primitive::segment(lo, hi)
        } else {
            Primitive::Rect { a: lo, b: hi }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Primitive::Point { .. } => "point",
            Primitive::Segment { .. } => "segment",
            Primitive::Rect { .. } => "rect",
        }
    }

    /// Defining coordinates, flattened.
    pub fn coords(&self) -> Vec<f64> {
        match *self {
            Primitive::Point { p } => vec![p[0], p[1]],
            Primitive::Segment { a, b } | Primitive::Rect { a, b } => vec![a[0], a[1], b[0], b[1]],
        }
    }

    pub fn is_inside_unit_square(&self) -> bool {
        match *self {
            Primitive::Point { p } => in_unit_square(p),
            Primitive::Segment { a, b } | Primitive::Rect { a, b } => {
                in_unit_square(a) && in_unit_square(b)
            }
        }
    }

    /// Axis-aligned bounding box as `(lower-left, upper-right)`.
    pub fn bbox(&self) -> (Vec2, Vec2) {
        match *self {
            Primitive::Point { p } => (p, p),
            Primitive::Segment { a, b } | Primitive::Rect { a, b } => (
                [a[0].min(b[0]), a[1].min(b[1])],
                [a[0].max(b[0]), a[1].max(b[1])],
            ),
        }
    }

    /// A finite set of points lying on the primitive. Segments are sampled at
    /// `per_segment + 1` evenly spaced points; rectangles at corners and centre.
    pub fn sample_points(&self, per_segment: usize) -> Vec<Vec2> {
        match *self {
            Primitive::Point { p } => vec![p],
            Primitive::Segment { a, b } => {
                let n = per_segment.max(1);
                (0..=n)
                    .map(|i| {
                        let t = i as f64 / n as f64;
                        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                    })
                    .collect()
            }
            Primitive::Rect { a, b } => vec![
                a,
                [b[0], a[1]],
                [a[0], b[1]],
                b,
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
            ],
        }
    }
}

/// `x ↦ scale · R(angle) · J x + translation`, where `J` reflects in the x-axis
/// when `reflect` is set (applied before the rotation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityMap {
    scale: f64,
    angle: f64,
    reflect: bool,
    translation: Vec2,
}

impl SimilarityMap {
    pub fn new(scale: f64, angle: f64, reflect: bool, translation: Vec2) -> Result<Self> {
        if !(scale > 0.0 && scale < 1.0) {
            return Err(Error::InvalidMap(format!(
                "similarity scale {scale} is not in (0,1)"
            )));
        }
        if !angle.is_finite() || !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidMap("non-finite map parameters".into()));
        }
        Ok(Self::raw(scale, angle, reflect, translation))
    }

    fn raw(scale: f64, angle: f64, reflect: bool, translation: Vec2) -> Self {
        SimilarityMap {
            scale,
            angle: angle.rem_euclid(TAU),
            reflect,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::raw(1.0, 0.0, false, [0.0, 0.0])
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn reflect(&self) -> bool {
        self.reflect
    }

    pub fn translation(&self) -> Vec2 {
        self.translation
    }

    /// `(cos, sin)` of the rotation, exact at multiples of π/2.
    fn cos_sin(&self) -> (f64, f64) {
        match self.quarter_turns() {
            Some(0) => (1.0, 0.0),
            Some(1) => (0.0, 1.0),
            Some(2) => (-1.0, 0.0),
            Some(3) => (0.0, -1.0),
            _ => (self.angle.cos(), self.angle.sin()),
        }
    }

    fn quarter_turns(&self) -> Option<u8> {
        let q = self.angle / FRAC_PI_2;
        let r = q.round();
        if (q - r).abs() * FRAC_PI_2 <= ANGLE_TOL {
            Some((r as i64).rem_euclid(4) as u8)
        } else {
            None
        }
    }

    /// True when the map sends axis-aligned rectangles to axis-aligned rectangles
    /// (rotation by a multiple of π/2, no reflection).
    pub fn is_axis_preserving(&self) -> bool {
        !self.reflect && self.quarter_turns().is_some()
    }

    fn is_pure_scaling(&self) -> bool {
        !self.reflect && self.quarter_turns() == Some(0)
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let (c, s) = self.cos_sin();
        let y = if self.reflect { -p[1] } else { p[1] };
        [
            self.scale * (c * p[0] - s * y) + self.translation[0],
            self.scale * (s * p[0] + c * y) + self.translation[1],
        ]
    }

    /// `self ∘ other`.
    pub fn then_after(&self, other: &SimilarityMap) -> SimilarityMap {
        let angle = if self.reflect {
            self.angle - other.angle
        } else {
            self.angle + other.angle
        };
        let t = self.apply(other.translation);
        SimilarityMap::raw(
            self.scale * other.scale,
            angle,
            self.reflect ^ other.reflect,
            t,
        )
    }
}

/// `(x, y) ↦ (scale_x · x, scale_y · y) + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalAffineMap {
    scale_x: f64,
    scale_y: f64,
    translation: Vec2,
}

impl DiagonalAffineMap {
    pub fn new(scale_x: f64, scale_y: f64, translation: Vec2) -> Result<Self> {
        for s in [scale_x, scale_y] {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidMap(format!(
                    "diagonal scale {s} is not in (0,1)"
                )));
            }
        }
        if !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidMap("non-finite translation".into()));
        }
        Ok(DiagonalAffineMap {
            scale_x,
            scale_y,
            translation,
        })
    }

    pub fn scale_x(&self) -> f64 {
        self.scale_x
    }

    pub fn scale_y(&self) -> f64 {
        self.scale_y
    }

    pub fn translation(&self) -> Vec2 {
        self.translation
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        [
            self.scale_x * p[0] + self.translation[0],
            self.scale_y * p[1] + self.translation[1],
        ]
    }

    fn then_after(&self, other: &DiagonalAffineMap) -> DiagonalAffineMap {
        DiagonalAffineMap {
            scale_x: self.scale_x * other.scale_x,
            scale_y: self.scale_y * other.scale_y,
            translation: self.apply(other.translation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContractionMap {
    Similarity(SimilarityMap),
    Diagonal(DiagonalAffineMap),
}

impl ContractionMap {
    pub fn identity() -> Self {
        ContractionMap::Similarity(SimilarityMap::identity())
    }

    pub fn similarity(scale: f64, angle: f64, reflect: bool, translation: Vec2) -> Result<Self> {
        SimilarityMap::new(scale, angle, reflect, translation).map(ContractionMap::Similarity)
    }

    pub fn diagonal(scale_x: f64, scale_y: f64, translation: Vec2) -> Result<Self> {
        DiagonalAffineMap::new(scale_x, scale_y, translation).map(ContractionMap::Diagonal)
    }

    /// Lipschitz constant: the scale of a similarity, the larger axis scale of a
    /// diagonal map.
    pub fn lip(&self) -> f64 {
        match self {
            ContractionMap::Similarity(s) => s.scale,
            ContractionMap::Diagonal(d) => d.scale_x.max(d.scale_y),
        }
    }

    /// Per-axis scale factors `(sx, sy)`.
    pub fn axis_scales(&self) -> (f64, f64) {
        match self {
            ContractionMap::Similarity(s) => (s.scale, s.scale),
            ContractionMap::Diagonal(d) => (d.scale_x, d.scale_y),
        }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        match self {
            ContractionMap::Similarity(s) => s.apply(p),
            ContractionMap::Diagonal(d) => d.apply(p),
        }
    }

    pub fn is_axis_preserving(&self) -> bool {
        match self {
            ContractionMap::Similarity(s) => s.is_axis_preserving(),
            ContractionMap::Diagonal(_) => true,
        }
    }

    fn as_diagonal(&self) -> Option<DiagonalAffineMap> {
        match self {
            ContractionMap::Diagonal(d) => Some(*d),
            ContractionMap::Similarity(s) if s.is_pure_scaling() => Some(DiagonalAffineMap {
                scale_x: s.scale,
                scale_y: s.scale,
                translation: s.translation,
            }),
            ContractionMap::Similarity(_) => None,
        }
    }

    /// `self ∘ other`. Mixing a diagonal map with a rotating or reflecting
    /// similarity leaves both representable families and is rejected.
    pub fn compose(&self, other: &ContractionMap) -> Result<ContractionMap> {
        match (self, other) {
            (ContractionMap::Similarity(a), ContractionMap::Similarity(b)) => {
                Ok(ContractionMap::Similarity(a.then_after(b)))
            }
            _ => match (self.as_diagonal(), other.as_diagonal()) {
                (Some(a), Some(b)) => Ok(ContractionMap::Diagonal(a.then_after(&b))),
                _ => Err(Error::UnsupportedGeometry(
                    "composition of a diagonal map with a rotating similarity".into(),
                )),
            },
        }
    }

    /// Image of the unit square as an axis-aligned box (exact for
    /// axis-preserving maps, a bounding box otherwise).
    pub fn image_of_unit_square(&self) -> Primitive {
        let pts = CORNERS.map(|c| self.apply(c));
        let lo = [
            pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
            pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
        ];
        let hi = [
            pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
            pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
        ];
        Primitive::rect(lo, hi)
    }

    pub fn maps_unit_square_into_itself(&self) -> bool {
        CORNERS.iter().all(|&c| in_unit_square(self.apply(c)))
    }
}

/// Image of a primitive under a map.
pub fn apply_to_primitive(m: &ContractionMap, p: &Primitive) -> Result<Primitive> {
    match *p {
        Primitive::Point { p } => Ok(Primitive::Point { p: m.apply(p) }),
        Primitive::Segment { a, b } => Ok(Primitive::segment(m.apply(a), m.apply(b))),
        Primitive::Rect { a, b } => {
            if !m.is_axis_preserving() {
                return Err(Error::UnsupportedGeometry(
                    "rectangle under a non-axis-preserving similarity".into(),
                ));
            }
            Ok(Primitive::rect(m.apply(a), m.apply(b)))
        }
    }
}

/// A finite word over the maps of an IFS. Indices are stored zero-based and
/// displayed one-based, joined by dashes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// From zero-based indices.
    pub fn new(indices: Vec<usize>) -> Self {
        Word(indices)
    }

    /// From one-based indices, as written in reports.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        indices
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| domain("word indices are one-based"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn child(&self, i: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(i);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

/// Finite union of primitives. An empty set encodes `C = ∅`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CondensationSet {
    primitives: Vec<Primitive>,
}

impl CondensationSet {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        if primitives.is_empty() {
            return Err(domain(
                "condensation set has no primitives; use CondensationSet::empty() for C = ∅",
            ));
        }
        if let Some(p) = primitives.iter().find(|p| !p.is_inside_unit_square()) {
            return Err(domain(format!("primitive {p:?} leaves the unit square")));
        }
        Ok(CondensationSet { primitives })
    }

    pub fn empty() -> Self {
        CondensationSet::default()
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }
}

/// A finite family of contractions of the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct Ifs {
    maps: Vec<ContractionMap>,
}

impl Ifs {
    /// Validates that every map sends the unit square into itself.
    pub fn new(maps: Vec<ContractionMap>) -> Result<Self> {
        for (i, m) in maps.iter().enumerate() {
            if m.lip() >= 1.0 {
                return Err(Error::InvalidMap(format!("map {} is not a contraction", i + 1)));
            }
            if !m.maps_unit_square_into_itself() {
                return Err(Error::InvalidMap(format!(
                    "map {} sends the unit square outside itself",
                    i + 1
                )));
            }
        }
        Ok(Ifs { maps })
    }

    pub fn maps(&self) -> &[ContractionMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn lips(&self) -> Vec<f64> {
        self.maps.iter().map(ContractionMap::lip).collect()
    }

    pub fn min_lip(&self) -> f64 {
        self.lips().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_lip(&self) -> f64 {
        self.lips().into_iter().fold(0.0, f64::max)
    }

    pub fn is_axis_preserving(&self) -> bool {
        self.maps.iter().all(ContractionMap::is_axis_preserving)
    }

    pub fn all_similarities(&self) -> bool {
        self.maps
            .iter()
            .all(|m| matches!(m, ContractionMap::Similarity(_)))
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.indices().iter().find(|&&i| i >= self.maps.len()) {
            Some(&index) => Err(Error::InvalidWord {
                index: index + 1,
                maps: self.maps.len(),
            }),
            None => Ok(()),
        }
    }
}

/// `S_w = S_{i1} ∘ ⋯ ∘ S_{ik}`; the empty word gives the identity.
pub fn compose(ifs: &Ifs, w: &Word) -> Result<ContractionMap> {
    ifs.check_word(w)?;
    w.indices()
        .iter()
        .try_fold(ContractionMap::identity(), |acc, &i| acc.compose(&ifs.maps[i]))
}

/// Lipschitz constant of `S_w`, exact for similarities. For diagonal maps it
/// is the larger of the per-axis scale products.
pub fn word_lip(ifs: &Ifs, w: &Word) -> Result<f64> {
    ifs.check_word(w)?;
    let (sx, sy) = w.indices().iter().fold((1.0, 1.0), |(x, y), &i| {
        let (a, b) = ifs.maps[i].axis_scales();
        (x * a, y * b)
    });
    Ok(sx.max(sy))
}
