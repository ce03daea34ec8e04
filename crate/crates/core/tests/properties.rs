use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use inhomog::boxdim::{fit_dimension, mesh_count, solve_moran, CountMethod, CoverCount};
use inhomog::constructions::sierpinski;
use inhomog::hyperbolic::{hyp_dist_origin, DiskPoint, MoebiusMap};
use inhomog::ifs::{compose, word_lip, ContractionMap, Ifs, Primitive, Word};
use inhomog::orbital::{homogeneous_approx, stopping_set, stopping_stats};

const BUDGET: u128 = 10_000_000;

fn similarity_in_square() -> impl Strategy<Value = ContractionMap> {
    (0.2f64..0.8, 0u8..4, any::<bool>(), 0.0f64..1.0, 0.0f64..1.0).prop_map(|(r, q, refl, u, v)| {
        let angle = q as f64 * FRAC_PI_2;
        let probe = ContractionMap::similarity(r, angle, refl, [0.0, 0.0]).unwrap();
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]].map(|c| probe.apply(c));
        let lo = |k: usize| corners.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
        let t = [u * (1.0 - r) - lo(0), v * (1.0 - r) - lo(1)];
        ContractionMap::similarity(r, angle, refl, t).unwrap()
    })
}

fn diagonal_in_square() -> impl Strategy<Value = ContractionMap> {
    (0.2f64..0.8, 0.2f64..0.8, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(sx, sy, u, v)| {
        ContractionMap::diagonal(sx, sy, [u * (1.0 - sx), v * (1.0 - sy)]).unwrap()
    })
}

fn similarity_ifs() -> impl Strategy<Value = Ifs> {
    prop::collection::vec(similarity_in_square(), 2..=4).prop_map(|m| Ifs::new(m).unwrap())
}

fn unrotated_in_square() -> impl Strategy<Value = ContractionMap> {
    (0.2f64..0.8, 0.0f64..1.0, 0.0f64..1.0)
        .prop_map(|(r, u, v)| ContractionMap::similarity(r, 0.0, false, [u * (1.0 - r), v * (1.0 - r)]).unwrap())
}

fn unrotated_ifs() -> impl Strategy<Value = Ifs> {
    prop::collection::vec(unrotated_in_square(), 2..=4).prop_map(|m| Ifs::new(m).unwrap())
}

/// All similarities, or diagonal maps mixed with unrotated similarities.
fn mixed_ifs() -> impl Strategy<Value = Ifs> {
    prop_oneof![
        similarity_ifs(),
        prop::collection::vec(prop_oneof![unrotated_in_square(), diagonal_in_square()], 2..=4)
            .prop_map(|m| Ifs::new(m).unwrap()),
    ]
}

fn word(n: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..n, 0..=max_len).prop_map(Word::new)
}

fn ifs_and_words(max_len: usize) -> impl Strategy<Value = (Ifs, Word, Word)> {
    mixed_ifs().prop_flat_map(move |ifs| {
        let n = ifs.len();
        (Just(ifs), word(n, max_len), word(n, max_len))
    })
}

fn grid9() -> Vec<[f64; 2]> {
    (0..9).map(|k| [(k % 3) as f64 / 2.0, (k / 3) as f64 / 2.0]).collect()
}

fn primitive() -> impl Strategy<Value = Primitive> {
    let pt = || (0.0f64..=1.0, 0.0f64..=1.0);
    prop_oneof![
        pt().prop_map(|(x, y)| Primitive::point(x, y)),
        (pt(), pt()).prop_map(|(a, b)| Primitive::segment([a.0, a.1], [b.0, b.1])),
        (pt(), pt()).prop_map(|(a, b)| Primitive::rect([a.0, a.1], [b.0, b.1])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lip_is_multiplicative_for_similarities(
        (ifs, u, v) in similarity_ifs().prop_flat_map(|ifs| {
            let n = ifs.len();
            (Just(ifs), word(n, 12), word(n, 12))
        })
    ) {
        let whole = word_lip(&ifs, &u.concat(&v)).unwrap();
        let parts = word_lip(&ifs, &u).unwrap() * word_lip(&ifs, &v).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * parts);
        prop_assert!((compose(&ifs, &u).unwrap().lip() - word_lip(&ifs, &u).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn cylinders_stay_in_square((ifs, u, _) in ifs_and_words(20)) {
        let m = compose(&ifs, &u).unwrap();
        for c in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            let p = m.apply(c);
            prop_assert!(p.iter().all(|x| (-1e-12..=1.0 + 1e-12).contains(x)), "{p:?}");
        }
    }

    #[test]
    fn composition_is_associative((ifs, u, v) in ifs_and_words(8)) {
        let whole = compose(&ifs, &u.concat(&v)).unwrap();
        let su = compose(&ifs, &u).unwrap();
        let sv = compose(&ifs, &v).unwrap();
        for p in grid9() {
            let a = whole.apply(p);
            let b = su.apply(sv.apply(p));
            prop_assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn stopping_is_prefix_free_and_complete(ifs in unrotated_ifs(), k in 1i32..=12) {
        let delta = 0.5f64.powi(k);
        let s = solve_moran(&ifs.lips()).unwrap().s;
        let stats = stopping_stats(&ifs, delta, s).unwrap();
        prop_assert!((stats.power_sum - 1.0).abs() <= 1e-9, "{}", stats.power_sum);
        prop_assume!(stats.count <= 100_000);
        let stop = stopping_set(&ifs, delta, BUDGET).unwrap();
        prop_assert_eq!(stop.len() as u128, stats.count);
        if stop.len() <= 10_000 {
            let words: HashSet<&[usize]> = stop.words.iter().map(|w| w.indices()).collect();
            for w in &stop.words {
                for cut in 0..w.len() {
                    prop_assert!(!words.contains(&w.indices()[..cut]));
                }
            }
        }
        for (w, &l) in stop.words.iter().zip(&stop.lips) {
            let parent = Word::new(w.indices()[..w.len() - 1].to_vec());
            prop_assert!(l < delta && delta <= word_lip(&ifs, &parent).unwrap());
        }
    }

    #[test]
    fn stopping_grows_as_delta_shrinks(ifs in unrotated_ifs(), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let n_lo = stopping_stats(&ifs, lo, 0.0).unwrap().count;
        let n_hi = stopping_stats(&ifs, hi, 0.0).unwrap().count;
        prop_assert!(n_lo >= n_hi);
    }

    #[test]
    fn mesh_count_halving_never_decreases(
        pieces in prop::collection::vec(primitive(), 1..6),
        delta in 0.004f64..=1.0,
    ) {
        let coarse = mesh_count(&pieces, delta, BUDGET).unwrap().count;
        let fine = mesh_count(&pieces, delta / 2.0, BUDGET).unwrap().count;
        prop_assert!(coarse >= 1);
        prop_assert!(fine >= coarse);
    }

    #[test]
    fn mesh_count_is_subadditive(
        a in prop::collection::vec(primitive(), 1..4),
        b in prop::collection::vec(primitive(), 1..4),
        delta in 0.004f64..=1.0,
    ) {
        let na = mesh_count(&a, delta, BUDGET).unwrap().count;
        let nb = mesh_count(&b, delta, BUDGET).unwrap().count;
        let both: Vec<Primitive> = a.iter().chain(&b).cloned().collect();
        let n = mesh_count(&both, delta, BUDGET).unwrap().count;
        prop_assert!(n <= na + nb);
        prop_assert!(n >= na.max(nb));
    }

    #[test]
    fn axis_segment_scaling_law(
        x0 in 0.0f64..=1.0,
        x1 in 0.0f64..=1.0,
        y in 0.0f64..=1.0,
        vertical in any::<bool>(),
        delta in 0.002f64..=1.0,
    ) {
        let (a, b) = if vertical { ([y, x0], [y, x1]) } else { ([x0, y], [x1, y]) };
        let len = (x1 - x0).abs();
        let n = mesh_count(&[Primitive::segment(a, b)], delta, BUDGET).unwrap().count;
        let base = (len / delta).ceil() as u64;
        prop_assert!(n == base || n == base + 1, "len {len}, delta {delta}: {n} vs {base}");
    }

    #[test]
    fn moran_residual_and_bracket(ratios in prop::collection::vec(0.01f64..0.99, 2..8)) {
        let m = solve_moran(&ratios).unwrap();
        prop_assert!(m.residual <= 1e-12, "{}", m.residual);
        prop_assert!(m.bracket <= 1e-12);
    }

    #[test]
    fn fit_recovers_power_law(p in 2u64..7, q in 2u64..7, k0 in 1i32..4) {
        let counts: Vec<CoverCount> = (k0..k0 + 5)
            .map(|k| CoverCount {
                delta: (q as f64).powi(-k),
                count: p.pow(k as u32),
                method: CountMethod::ExactMesh,
            })
            .collect();
        let fit = fit_dimension(&counts).unwrap();
        let expected = (p as f64).ln() / (q as f64).ln();
        prop_assert!((fit.slope - expected).abs() <= 1e-10);
    }

    #[test]
    fn moebius_maps_are_isometries(
        br in -1.5f64..1.5, bi in -1.5f64..1.5, phase in 0.0..TAU,
        pts in prop::collection::vec((0.0f64..0.95, 0.0..TAU), 2..6),
    ) {
        let b = Complex64::new(br, bi);
        let a = Complex64::from_polar((1.0 + b.norm_sqr()).sqrt(), phase);
        let g = MoebiusMap::from_su11(a, b).unwrap();
        let id = g.compose(&g.inverse());
        let pts: Vec<DiskPoint> = pts
            .into_iter()
            .map(|(r, t)| DiskPoint::new(Complex64::from_polar(r, t)).unwrap())
            .collect();
        let g0 = g.displacement();
        for x in &pts {
            prop_assert!((id.apply(x).z() - x.z()).norm() <= 1e-12);
            prop_assert!((g.apply(x).dist_origin() - g0).abs() <= x.dist_origin() + 1e-9);
            for y in &pts {
                prop_assert!((g.apply(x).dist(&g.apply(y)) - x.dist(y)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn series_term_identity(r in 0.0f64..0.999, t in 0.0..TAU, s in 0.0f64..4.0) {
        let z = Complex64::from_polar(r, t);
        let lhs = (-s * hyp_dist_origin(z).unwrap()).exp();
        let rhs = ((1.0 - r) / (1.0 + r)).powf(s);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }
}

/// Cells of the level-8 Sierpiński cylinders at δ = 2^-8, by integer
/// arithmetic in units of 2^-10.
fn sierpinski_level8_cells() -> (HashSet<(i64, i64)>, HashSet<(i64, i64)>) {
    let mut corners = vec![(0i64, 0i64)];
    let mut size = 1024i64;
    for _ in 0..8 {
        size /= 2;
        corners = corners
            .iter()
            .flat_map(|&(x, y)| {
                [(0, 0), (512, 0), (256, 512)].map(|(tx, ty)| (x / 2 + tx, y / 2 + ty))
            })
            .collect();
    }
    assert_eq!(size, 4);
    let cell = |v: i64| (v / 4).min(255);
    let mut touched = HashSet::new();
    let mut anchors = HashSet::new();
    for &(x, y) in &corners {
        anchors.insert((cell(x), cell(y)));
        for i in cell(x)..=cell(x + size) {
            for j in cell(y)..=cell(y + size) {
                touched.insert((i, j));
            }
        }
    }
    (touched, anchors)
}

#[test]
fn sierpinski_level8_cover_count() {
    let (ifs, _) = sierpinski();
    let delta = 0.5f64.powi(8);
    let cylinders = homogeneous_approx(&ifs, 1.5 * delta, BUDGET).unwrap();
    assert_eq!(cylinders.len(), 6561);
    let (touched, anchors) = sierpinski_level8_cells();
    assert_eq!(anchors.len(), 6561);
    let n = mesh_count(&cylinders, delta, BUDGET).unwrap().count;
    assert_eq!(n, touched.len() as u64);
    assert_eq!(n, 12027);
}
