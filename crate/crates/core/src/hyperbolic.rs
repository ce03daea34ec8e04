//! Poincaré disk model: Möbius automorphisms, hyperbolic distance, group
//! orbits, Poincaré series and exponents, and Kleinian orbital sets.
//!
//! The disk carries the metric `|ds| = 2|dz|/(1−|z|²)`. Orbits of hyperbolic
//! elements crowd exponentially close to the boundary, so points are held in
//! homogeneous coordinates `(u : v) = (1+z : 1−z)` and maps in the matching
//! frame, where `w = u/v` ranges over the right half-plane and the diameter
//! `(−1, 1)` becomes `(0, ∞)`. A point `1 − ε` is then `(2 − ε : ε)` with full
//! relative precision in `ε`, and elements whose axis is that diameter act
//! diagonally without cancellation.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_budget, domain, Error, Result};

/// Default cap on generated group elements or orbit points.
pub const DEFAULT_ORBIT_BUDGET: u128 = 5_000_000;

/// Two orbit points closer than this in the hyperbolic metric are merged.
pub const DEDUP_TOL: f64 = 1e-9;

const SU11_TOL: f64 = 1e-12;

/// An orientation-preserving automorphism of the unit disk,
/// `z ↦ (a z + b)/(b̄ z + ā)` with `|a|² − |b|² = 1`.
///
/// Stored as `w ↦ (p w + i q)/(i r w + s)` with real `p, q, r, s` and
/// `p s + q r = 1`, where `w = (1+z)/(1−z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    p: f64,
    q: f64,
    r: f64,
    s: f64,
}

impl MoebiusMap {
    pub fn identity() -> Self {
        MoebiusMap {
            p: 1.0,
            q: 0.0,
            r: 0.0,
            s: 1.0,
        }
    }

    /// From the SU(1,1) coefficients, rescaling so that `|a|² − |b|² = 1`.
    pub fn from_su11(a: Complex64, b: Complex64) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) || !det.is_finite() {
            return Err(domain(format!(
                "|a|² − |b|² = {det} must be positive for a disk automorphism"
            )));
        }
        let k = det.sqrt();
        let (a, b) = (a / k, b / k);
        Ok(MoebiusMap {
            p: a.re + b.re,
            q: b.im - a.im,
            r: -(a.im + b.im),
            s: a.re - b.re,
        }
        .normalized())
    }

    /// Rotation `z ↦ e^{iθ} z`.
    pub fn rotation(theta: f64) -> Self {
        let half = Complex64::from_polar(1.0, 0.5 * theta);
        MoebiusMap::from_su11(half, Complex64::new(0.0, 0.0)).expect("rotation is unimodular")
    }

    /// The hyperbolic element `h(z) = ((α+1)z + (α−1))/((α−1)z + (α+1))` with
    /// repelling fixed point −1, attracting fixed point 1 and translation
    /// length `log α`.
    pub fn axial(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(domain(format!("alpha = {alpha} must exceed 1")));
        }
        let k = alpha.sqrt();
        Ok(MoebiusMap {
            p: k,
            q: 0.0,
            r: 0.0,
            s: 1.0 / k,
        })
    }

    pub fn a(&self) -> Complex64 {
        Complex64::new(0.5 * (self.p + self.s), -0.5 * (self.q + self.r))
    }

    pub fn b(&self) -> Complex64 {
        Complex64::new(0.5 * (self.p - self.s), 0.5 * (self.q - self.r))
    }

    /// `|a|² − |b|²`.
    pub fn determinant(&self) -> f64 {
        self.p * self.s + self.q * self.r
    }

    fn normalized(self) -> Self {
        let k = self.determinant().sqrt();
        if (k - 1.0).abs() < 1e-15 {
            return self;
        }
        MoebiusMap {
            p: self.p / k,
            q: self.q / k,
            r: self.r / k,
            s: self.s / k,
        }
    }

    pub fn is_identity(&self) -> bool {
        let sign = if self.p < 0.0 { -1.0 } else { 1.0 };
        (sign * self.p - 1.0).abs() < SU11_TOL
            && (sign * self.s - 1.0).abs() < SU11_TOL
            && self.q.abs() < SU11_TOL
            && self.r.abs() < SU11_TOL
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            p: self.p * o.p - self.q * o.r,
            q: self.p * o.q + self.q * o.s,
            r: self.r * o.p + self.s * o.r,
            s: self.s * o.s - self.r * o.q,
        }
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            p: self.s,
            q: -self.q,
            r: -self.r,
            s: self.p,
        }
    }

    /// `self^n` for any integer `n`, by repeated squaring.
    pub fn pow(&self, n: i64) -> MoebiusMap {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = MoebiusMap::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    pub fn apply(&self, z: &DiskPoint) -> DiskPoint {
        let i = Complex64::i();
        DiskPoint {
            u: z.u * self.p + i * z.v * self.q,
            v: i * z.u * self.r + z.v * self.s,
        }
        .rescaled()
    }

    /// Direct evaluation of `(a z + b)/(b̄ z + ā)` in disk coordinates.
    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        let (a, b) = (self.a(), self.b());
        (a * z + b) / (b.conj() * z + a.conj())
    }

    /// `d(0, g(0))`, from `cosh d = |a|² + |b|²`.
    pub fn displacement(&self) -> f64 {
        let c = 0.5 * (self.p * self.p + self.q * self.q + self.r * self.r + self.s * self.s);
        c.max(1.0).acosh()
    }
}

/// A point of the open unit disk in homogeneous coordinates `(1+z : 1−z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    u: Complex64,
    v: Complex64,
}

impl DiskPoint {
    pub fn origin() -> Self {
        DiskPoint {
            u: Complex64::new(1.0, 0.0),
            v: Complex64::new(1.0, 0.0),
        }
    }

    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.norm() < 1.0) {
            return Err(domain(format!("point {z} is not inside the unit disk")));
        }
        Ok(DiskPoint {
            u: Complex64::new(1.0, 0.0) + z,
            v: Complex64::new(1.0, 0.0) - z,
        })
    }

    /// The real point `1 − ε`, kept exact in `ε` however small it is.
    pub fn one_minus(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 2.0) {
            return Err(domain(format!("1 − {eps} is not inside the unit disk")));
        }
        Ok(DiskPoint {
            u: Complex64::new(2.0 - eps, 0.0),
            v: Complex64::new(eps, 0.0),
        }
        .rescaled())
    }

    /// Rescale by a power of two so the larger coordinate has modulus near 1.
    fn rescaled(self) -> Self {
        let m = self.u.norm().max(self.v.norm());
        if m == 0.0 || !m.is_finite() || (0.5..=2.0).contains(&m) {
            return self;
        }
        let k = 2f64.powi(-(m.log2().round() as i32));
        DiskPoint {
            u: self.u * k,
            v: self.v * k,
        }
    }

    pub fn z(&self) -> Complex64 {
        (self.u - self.v) / (self.u + self.v)
    }

    /// Exact containment test: `Re(u v̄) > 0`.
    pub fn is_inside(&self) -> bool {
        (self.u * self.v.conj()).re > 0.0
    }

    /// `1 − |z|²`, without cancellation near the boundary.
    pub fn one_minus_abs_sq(&self) -> f64 {
        4.0 * (self.u * self.v.conj()).re / (self.u + self.v).norm_sqr()
    }

    /// `(1 − |z|)/(1 + |z|) = exp(−d(0, z))`.
    pub fn boundary_quotient(&self) -> f64 {
        let r = self.z().norm().min(1.0);
        self.one_minus_abs_sq() / (1.0 + r).powi(2)
    }

    /// `d(0, z)`; infinite once `1 − |z|²` is lost to rounding.
    pub fn dist_origin(&self) -> f64 {
        let m = self.one_minus_abs_sq();
        if !(m > 0.0) {
            return f64::INFINITY;
        }
        let r = self.z().norm().min(1.0);
        2.0 * (1.0 + r).ln() - m.ln()
    }

    /// Hyperbolic distance, via `sinh²(d/2) = |u₁v₂ − u₂v₁|² / (4 Re(u₁v̄₁) Re(u₂v̄₂))`.
    pub fn dist(&self, other: &DiskPoint) -> f64 {
        let cross = (self.u * other.v - other.u * self.v).norm_sqr();
        let den = 4.0 * (self.u * self.v.conj()).re * (other.u * other.v.conj()).re;
        2.0 * (cross / den).sqrt().asinh()
    }

    /// `log |w|`: signed position of the projection onto the geodesic from
    /// −1 to 1. The projection is 1-Lipschitz, which makes it a safe sort key.
    fn axis_coordinate(&self) -> f64 {
        self.u.norm().ln() - self.v.norm().ln()
    }
}

impl TryFrom<Complex64> for DiskPoint {
    type Error = Error;

    fn try_from(z: Complex64) -> Result<Self> {
        DiskPoint::new(z)
    }
}

/// `d(0, z) = log((1+|z|)/(1−|z|))`.
pub fn hyp_dist_origin(z: Complex64) -> Result<f64> {
    let r = z.norm();
    if !(r < 1.0) {
        return Err(domain(format!("|z| = {r} is not below 1")));
    }
    Ok(((1.0 + r) / (1.0 - r)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// `⟨h⟩`, enumerated as `h^m` for `|m| ≤ depth`.
    Cyclic,
    /// Reduced words in the generators and their inverses up to length `depth`.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPresentation {
    generators: Vec<MoebiusMap>,
    kind: GroupKind,
}

/// A group element produced by enumeration, with its reduced word length.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub label: String,
    pub length: usize,
    pub map: MoebiusMap,
}

impl GroupPresentation {
    pub fn new(generators: Vec<MoebiusMap>, kind: GroupKind) -> Result<Self> {
        if generators.is_empty() {
            return Err(domain("group needs at least one generator"));
        }
        if kind == GroupKind::Cyclic && generators.len() != 1 {
            return Err(domain("a cyclic group has exactly one generator"));
        }
        if generators.len() > 26 {
            return Err(domain("at most 26 generators are supported"));
        }
        if generators.iter().any(MoebiusMap::is_identity) {
            return Err(domain("generators must not be the identity"));
        }
        Ok(GroupPresentation { generators, kind })
    }

    pub fn cyclic(h: MoebiusMap) -> Result<Self> {
        GroupPresentation::new(vec![h], GroupKind::Cyclic)
    }

    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    fn element_count(&self, depth: usize) -> u128 {
        match self.kind {
            GroupKind::Cyclic => 2 * depth as u128 + 1,
            GroupKind::Free => {
                let letters = 2 * self.generators.len() as u128;
                let mut total: u128 = 1;
                let mut level = letters;
                for _ in 0..depth {
                    total = total.saturating_add(level);
                    level = level.saturating_mul(letters - 1);
                }
                total
            }
        }
    }

    /// All elements up to the given depth, identity first; the order is
    /// deterministic.
    pub fn elements(&self, depth: usize, budget: u128) -> Result<Vec<GroupElement>> {
        check_budget("group elements", self.element_count(depth), budget)?;
        match self.kind {
            GroupKind::Cyclic => {
                let h = self.generators[0];
                let hinv = h.inverse();
                let mut pos = Vec::with_capacity(depth);
                let mut neg = Vec::with_capacity(depth);
                let (mut fwd, mut back) = (MoebiusMap::identity(), MoebiusMap::identity());
                for m in 1..=depth as i64 {
                    fwd = fwd.compose(&h);
                    back = back.compose(&hinv);
                    pos.push(GroupElement {
                        label: format!("{m}"),
                        length: m as usize,
                        map: fwd,
                    });
                    neg.push(GroupElement {
                        label: format!("{}", -m),
                        length: m as usize,
                        map: back,
                    });
                }
                let mut out = Vec::with_capacity(2 * depth + 1);
                out.push(GroupElement {
                    label: "0".into(),
                    length: 0,
                    map: MoebiusMap::identity(),
                });
                for (p, n) in pos.into_iter().zip(neg) {
                    out.push(p);
                    out.push(n);
                }
                Ok(out)
            }
            GroupKind::Free => {
                let letters: Vec<MoebiusMap> = self
                    .generators
                    .iter()
                    .flat_map(|g| [*g, g.inverse()])
                    .collect();
                let mut out = vec![GroupElement {
                    label: String::new(),
                    length: 0,
                    map: MoebiusMap::identity(),
                }];
                if depth == 0 {
                    return Ok(out);
                }
                let branches: Vec<Vec<GroupElement>> = (0..letters.len())
                    .into_par_iter()
                    .map(|first| {
                        let mut acc = Vec::new();
                        let mut label = String::new();
                        free_words(&letters, depth, first, letters[first], 1, &mut label, &mut acc);
                        acc
                    })
                    .collect();
                out.extend(branches.into_iter().flatten());
                Ok(out)
            }
        }
    }
}

fn letter_char(i: usize) -> char {
    let c = (b'a' + (i / 2) as u8) as char;
    if i % 2 == 0 {
        c
    } else {
        c.to_ascii_uppercase()
    }
}

fn free_words(
    letters: &[MoebiusMap],
    depth: usize,
    last: usize,
    map: MoebiusMap,
    length: usize,
    label: &mut String,
    out: &mut Vec<GroupElement>,
) {
    label.push(letter_char(last));
    out.push(GroupElement {
        label: label.clone(),
        length,
        map,
    });
    if length < depth {
        let inverse_of_last = last ^ 1;
        for (i, g) in letters.iter().enumerate() {
            if i != inverse_of_last {
                free_words(letters, depth, i, map.compose(g), length + 1, label, out);
            }
        }
    }
    label.pop();
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPointSet {
    pub points: Vec<DiskPoint>,
    pub labels: Vec<String>,
}

impl OrbitPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn zs(&self) -> Vec<Complex64> {
        self.points.iter().map(DiskPoint::z).collect()
    }

    pub fn all_inside(&self) -> bool {
        self.points.iter().all(DiskPoint::is_inside)
    }

    /// Points within `eps` of the circle pushed radially onto it; a
    /// rendering approximation of the limit set.
    pub fn limit_set_projection(&self, eps: f64) -> Vec<Complex64> {
        self.zs()
            .into_iter()
            .filter(|z| z.norm() > 1.0 - eps)
            .map(|z| z / z.norm())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "re,im,label")?;
        for (p, l) in self.points.iter().zip(&self.labels) {
            let z = p.z();
            writeln!(out, "{},{},{}", z.re, z.im, l)?;
        }
        Ok(())
    }
}

/// Total order on f64 keys for the dedup index.
fn ordered(x: f64) -> i64 {
    let bits = x.to_bits() as i64;
    bits ^ (((bits >> 63) as u64) >> 1) as i64
}

/// Drops points within [`DEDUP_TOL`] (hyperbolic) of an earlier point,
/// keeping first occurrences in input order.
pub fn dedup_points(points: Vec<DiskPoint>, labels: Vec<String>) -> OrbitPointSet {
    let mut index: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut kept = OrbitPointSet {
        points: Vec::with_capacity(points.len()),
        labels: Vec::with_capacity(points.len()),
    };
    for (p, l) in points.into_iter().zip(labels) {
        let key = p.axis_coordinate();
        let dup = index
            .range(ordered(key - DEDUP_TOL)..=ordered(key + DEDUP_TOL))
            .flat_map(|(_, v)| v)
            .any(|&j| kept.points[j].dist(&p) < DEDUP_TOL);
        if !dup {
            index.entry(ordered(key)).or_default().push(kept.points.len());
            kept.points.push(p);
            kept.labels.push(l);
        }
    }
    kept
}

/// `Γ(0)` truncated at the given depth.
pub fn orbit_points(g: &GroupPresentation, depth: usize, budget: u128) -> Result<OrbitPointSet> {
    orbital_set_points(g, &[DiskPoint::origin()], depth, budget).map(|mut o| {
        for l in &mut o.labels {
            if let Some(stripped) = l.strip_suffix("|1") {
                *l = stripped.to_string();
            }
        }
        o
    })
}

/// `Γ(C) = ⋃_g g(C)` over the depth-truncated group. Labels are
/// `element|index` with one-based condensation indices.
pub fn orbital_set_points(
    g: &GroupPresentation,
    c: &[DiskPoint],
    depth: usize,
    budget: u128,
) -> Result<OrbitPointSet> {
    if let Some(p) = c.iter().find(|p| !p.is_inside()) {
        return Err(domain(format!("condensation point {} is not inside the disk", p.z())));
    }
    let elements = g.elements(depth, budget)?;
    check_budget(
        "orbit points",
        elements.len() as u128 * c.len() as u128,
        budget,
    )?;
    let images: Vec<(DiskPoint, String)> = elements
        .par_iter()
        .flat_map_iter(|e| {
            c.iter()
                .enumerate()
                .map(move |(k, p)| (e.map.apply(p), format!("{}|{}", e.label, k + 1)))
        })
        .collect();
    let (points, labels) = images.into_iter().unzip();
    Ok(dedup_points(points, labels))
}

/// `Σ ((1−|g0|)/(1+|g0|))^s` over the truncated orbit of 0.
pub fn poincare_series(g: &GroupPresentation, s: f64, depth: usize, budget: u128) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(domain(format!("exponent s = {s} must be non-negative")));
    }
    let orbit = orbit_points(g, depth, budget)?;
    Ok(orbit
        .points
        .iter()
        .map(|p| p.boundary_quotient().powf(s))
        .sum())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExponentEstimate {
    pub exponent: f64,
    pub per_step_slopes: Vec<f64>,
    pub radii: Vec<f64>,
    pub counts: Vec<u64>,
    pub r_squared: f64,
}

const EXPONENT_RADII: usize = 16;

/// Estimates the Poincaré exponent as the slope of `log N(R)` against `R`,
/// where `N(R)` counts orbit points with `d(0, g0) ≤ R`.
///
/// Only radii the truncation can resolve are used: every element longer than
/// the depth sits at distance at least `min_{|g|=depth} d(0,g0) − max_i d(0,g_i 0)`
/// for the groups handled here, and the fit runs over `[R_max/8, R_max]`.
/// Distances come from the matrices, and elements are counted directly, which
/// matches the orbit count when the stabiliser of 0 is trivial.
pub fn poincare_exponent(
    g: &GroupPresentation,
    depth: usize,
    budget: u128,
) -> Result<ExponentEstimate> {
    let elements = g.elements(depth, budget)?;
    let max_step = g
        .generators()
        .iter()
        .map(MoebiusMap::displacement)
        .fold(0.0, f64::max);
    let shell_min = elements
        .iter()
        .filter(|e| e.length == depth)
        .map(|e| e.map.displacement())
        .fold(f64::INFINITY, f64::min);
    let r_max = shell_min - max_step;
    if !(r_max > 0.0) || depth < 2 {
        return Err(Error::InsufficientData(format!(
            "depth {depth} resolves no usable radius range"
        )));
    }
    let mut dists: Vec<f64> = elements.iter().map(|e| e.map.displacement()).collect();
    dists.sort_by(f64::total_cmp);

    let r_min = r_max / 8.0;
    let radii: Vec<f64> = (0..EXPONENT_RADII)
        .map(|j| r_min + (r_max - r_min) * j as f64 / (EXPONENT_RADII - 1) as f64)
        .collect();
    let counts: Vec<u64> = radii
        .iter()
        .map(|&r| dists.partition_point(|&d| d <= r) as u64)
        .collect();
    let ys: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
    let (exponent, _, r_squared) = crate::boxdim::least_squares(&radii, &ys);
    let per_step_slopes = radii
        .windows(2)
        .zip(ys.windows(2))
        .map(|(r, y)| (y[1] - y[0]) / (r[1] - r[0]))
        .collect();
    Ok(ExponentEstimate {
        exponent,
        per_step_slopes,
        radii,
        counts,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn distance_from_origin() {
        assert_eq!(hyp_dist_origin(c(0.0, 0.0)).unwrap(), 0.0);
        assert!((hyp_dist_origin(c(1.0 / 3.0, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-15);
        for t in [1.0f64, 2.0, 3.0] {
            let z = Complex64::from_polar((t / 2.0).tanh(), 0.7);
            assert!((hyp_dist_origin(z).unwrap() - t).abs() < 1e-12);
        }
        assert!(hyp_dist_origin(c(1.0, 0.0)).is_err());
        assert!(hyp_dist_origin(c(0.8, 0.8)).is_err());
    }

    #[test]
    fn axial_values() {
        let h = MoebiusMap::axial(2.0).unwrap();
        let o = DiskPoint::origin();
        assert!((h.apply(&o).z() - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((h.apply(&h.apply(&o)).z() - c(0.6, 0.0)).norm() < 1e-15);
        assert!((h.apply_complex(c(1.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((h.apply_complex(c(-1.0, 0.0)) - c(-1.0, 0.0)).norm() < 1e-15);
        // Same map through the SU(1,1) coefficients of the printed formula.
        let alpha = 2.0f64;
        let k = 2.0 * alpha.sqrt();
        let h2 = MoebiusMap::from_su11(c((alpha + 1.0) / k, 0.0), c((alpha - 1.0) / k, 0.0)).unwrap();
        assert!((h2.a() - h.a()).norm() < 1e-15 && (h2.b() - h.b()).norm() < 1e-15);
        assert!((h.determinant() - 1.0).abs() < 1e-15);
        assert!(MoebiusMap::axial(1.0).is_err());
        assert!(MoebiusMap::axial(0.5).is_err());
    }

    #[test]
    fn su11_round_trip() {
        let a = c(1.3, 0.4);
        let b = c(-0.2, 0.7);
        let m = MoebiusMap::from_su11(a, b).unwrap();
        let k = (a.norm_sqr() - b.norm_sqr()).sqrt();
        assert!((m.a() - a / k).norm() < 1e-14);
        assert!((m.b() - b / k).norm() < 1e-14);
        assert!((m.a().norm_sqr() - m.b().norm_sqr() - 1.0).abs() < 1e-12);
        assert!(MoebiusMap::from_su11(c(0.5, 0.0), c(0.7, 0.0)).is_err());
    }

    #[test]
    fn apply_matches_direct_formula() {
        let m = MoebiusMap::from_su11(c(1.1, -0.3), c(0.25, 0.4)).unwrap();
        for z in [c(0.0, 0.0), c(0.3, -0.5), c(-0.9, 0.1), c(0.01, 0.99)] {
            let via_frame = m.apply(&DiskPoint::new(z).unwrap()).z();
            assert!((via_frame - m.apply_complex(z)).norm() < 1e-13, "{z}");
        }
    }

    #[test]
    fn cyclic_orbit_depth_one() {
        let g = GroupPresentation::cyclic(MoebiusMap::axial(2.0).unwrap()).unwrap();
        let o = orbit_points(&g, 1, DEFAULT_ORBIT_BUDGET).unwrap();
        let mut xs: Vec<f64> = o.zs().iter().map(|z| z.re).collect();
        xs.sort_by(f64::total_cmp);
        let expected = [-1.0 / 3.0, 0.0, 1.0 / 3.0];
        for (x, e) in xs.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        assert_eq!(o.labels, vec!["0", "1", "-1"]);
        let o0 = orbit_points(&g, 0, DEFAULT_ORBIT_BUDGET).unwrap();
        assert_eq!(o0.len(), 1);
        assert_eq!(o0.zs()[0], c(0.0, 0.0));
    }

    #[test]
    fn cyclic_orbit_moves_monotonically_outward() {
        let g = GroupPresentation::cyclic(MoebiusMap::axial(2.0).unwrap()).unwrap();
        let o = orbit_points(&g, 60, DEFAULT_ORBIT_BUDGET).unwrap();
        assert_eq!(o.len(), 121);
        // Labels come out as 0, 1, -1, 2, -2, ...
        let d: Vec<f64> = o.points.iter().map(DiskPoint::dist_origin).collect();
        for m in 1..60 {
            let (pm, nm) = (d[2 * m - 1], d[2 * m]);
            assert!((pm - nm).abs() < 1e-9);
            assert!(d[2 * m + 1] > pm);
            assert!((pm - m as f64 * 2f64.ln()).abs() < 1e-9 * m as f64);
        }
    }

    #[test]
    fn poincare_series_closed_form() {
        let alpha = 2.0f64;
        let g = GroupPresentation::cyclic(MoebiusMap::axial(alpha).unwrap()).unwrap();
        let p = poincare_series(&g, 1.0, 20, DEFAULT_ORBIT_BUDGET).unwrap();
        let closed = 1.0 + 2.0 * (1.0 - 2f64.powi(-20));
        assert!((p - closed).abs() < 1e-12);
        assert_eq!(poincare_series(&g, 0.0, 20, DEFAULT_ORBIT_BUDGET).unwrap(), 41.0);
        assert_eq!(poincare_series(&g, 1.0, 0, DEFAULT_ORBIT_BUDGET).unwrap(), 1.0);
    }

    #[test]
    fn cyclic_exponent_is_near_zero() {
        let g = GroupPresentation::cyclic(MoebiusMap::axial(2.0).unwrap()).unwrap();
        let e = poincare_exponent(&g, 200, DEFAULT_ORBIT_BUDGET).unwrap();
        assert!(e.exponent >= 0.0 && e.exponent <= 0.05, "{e:?}");
        assert!(matches!(
            poincare_exponent(&g, 1, DEFAULT_ORBIT_BUDGET),
            Err(Error::InsufficientData(_))
        ));
    }

    fn schottky(alpha: f64) -> GroupPresentation {
        let h = MoebiusMap::axial(alpha).unwrap();
        let rot = MoebiusMap::rotation(std::f64::consts::FRAC_PI_2);
        let k = rot.compose(&h).compose(&rot.inverse());
        GroupPresentation::new(vec![h, k], GroupKind::Free).unwrap()
    }

    #[test]
    fn free_group_word_count() {
        let g = schottky(10.0);
        let els = g.elements(4, DEFAULT_ORBIT_BUDGET).unwrap();
        assert_eq!(els.len(), 1 + 4 + 12 + 36 + 108);
        let o = orbit_points(&g, 4, DEFAULT_ORBIT_BUDGET).unwrap();
        assert_eq!(o.len(), els.len());
        assert!(els.iter().all(|e| !e.label.contains("aA") && !e.label.contains("Bb")));
    }

    /// Growth rate of reduced words when a repeated letter costs `T` and a
    /// turn between perpendicular axes costs `T − log 2`: the root of
    /// `e^{−δT}(1 + 2·2^δ) = 1`.
    fn turn_corrected_exponent(t: f64) -> f64 {
        let f = |d: f64| (-d * t).exp() * (1.0 + 2.0 * 2f64.powf(d)) - 1.0;
        let (mut lo, mut hi) = (1e-6, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn free_group_exponent_tracks_branching() {
        for (alpha, depth) in [(10.0f64, 9), (100.0, 9)] {
            let g = schottky(alpha);
            let e = poincare_exponent(&g, depth, DEFAULT_ORBIT_BUDGET).unwrap();
            let expected = turn_corrected_exponent(alpha.ln());
            assert!(e.exponent > 0.0 && e.exponent <= 1.0);
            assert!((e.exponent - expected).abs() < 0.1, "{} vs {expected}", e.exponent);
        }
    }

    #[test]
    fn group_axioms_and_isometry() {
        let g = MoebiusMap::from_su11(c(1.2, 0.5), c(0.6, -0.3)).unwrap();
        let id = g.compose(&g.inverse());
        assert!(id.is_identity());
        let samples: Vec<DiskPoint> = (0..9)
            .map(|k| DiskPoint::new(Complex64::from_polar(0.1 * k as f64, 0.9 * k as f64)).unwrap())
            .collect();
        for x in &samples {
            assert!((id.apply(x).z() - x.z()).norm() < 1e-12);
            for y in &samples {
                let d0 = x.dist(y);
                let d1 = g.apply(x).dist(&g.apply(y));
                assert!((d0 - d1).abs() < 1e-10);
            }
        }
        let big = g.pow(12);
        assert!((big.determinant() - 1.0).abs() < 1e-10);
        assert!(g.pow(3).compose(&g.pow(-3)).is_identity());
        assert!(g.pow(0).is_identity());
    }

    #[test]
    fn near_boundary_points_keep_precision() {
        let h = MoebiusMap::axial(2.0).unwrap();
        // h^{-50}(1 − 3^{-50}) by closed form with the m ↦ −m relabelling.
        let (m, n) = (50, 50);
        let y = 2f64.powi(m) * 3f64.powi(-n);
        let b = 3f64.powi(-n);
        let expected = (2.0 - y - b) / (2.0 + y - b);
        let p = h.pow(-m as i64).apply(&DiskPoint::one_minus(b).unwrap());
        assert!((p.z().re - expected).abs() < 1e-14);
        assert!(p.is_inside());
    }

    #[test]
    fn dedup_merges_only_true_duplicates() {
        let a = DiskPoint::new(c(0.2, 0.1)).unwrap();
        let same = DiskPoint::new(c(0.2 + 1e-17, 0.1)).unwrap();
        let far_out = DiskPoint::one_minus(1e-30).unwrap();
        let far_out2 = DiskPoint::one_minus(2e-30).unwrap();
        let o = dedup_points(
            vec![a, same, far_out, far_out2],
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
        );
        assert_eq!(o.labels, vec!["a", "c", "d"]);
    }

    #[test]
    fn orbital_set_with_origin_matches_orbit() {
        let g = GroupPresentation::cyclic(MoebiusMap::axial(3.0).unwrap()).unwrap();
        let a = orbit_points(&g, 10, DEFAULT_ORBIT_BUDGET).unwrap();
        let b = orbital_set_points(&g, &[DiskPoint::origin()], 10, DEFAULT_ORBIT_BUDGET).unwrap();
        assert_eq!(a.points, b.points);
        let c0 = [DiskPoint::new(c(0.5, 0.2)).unwrap()];
        let d0 = orbital_set_points(&g, &c0, 0, DEFAULT_ORBIT_BUDGET).unwrap();
        assert_eq!(d0.points, c0.to_vec());
    }

    #[test]
    fn presentation_validation() {
        assert!(GroupPresentation::new(vec![], GroupKind::Free).is_err());
        assert!(GroupPresentation::cyclic(MoebiusMap::identity()).is_err());
        let h = MoebiusMap::axial(2.0).unwrap();
        assert!(GroupPresentation::new(vec![h, h], GroupKind::Cyclic).is_err());
    }

    #[test]
    fn orbit_csv() {
        let g = GroupPresentation::cyclic(MoebiusMap::axial(2.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        orbit_points(&g, 1, DEFAULT_ORBIT_BUDGET)
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("re,im,label\n0,0,0\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn limit_projection() {
        let g = GroupPresentation::cyclic(MoebiusMap::axial(2.0).unwrap()).unwrap();
        let o = orbit_points(&g, 30, DEFAULT_ORBIT_BUDGET).unwrap();
        let lim = o.limit_set_projection(1e-3);
        assert!(!lim.is_empty());
        assert!(lim.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15 && z.re.abs() > 0.999));
    }
}
