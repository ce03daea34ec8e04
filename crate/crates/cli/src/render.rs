use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use image::{Rgb, RgbImage};

use inhomog::constructions::{kleinian_counterexample, Construction};
use inhomog::hyperbolic::DEFAULT_ORBIT_BUDGET;
use inhomog::orbital::{homogeneous_approx, orbital_to_depth, DEFAULT_PIECE_BUDGET};
use inhomog::Primitive;

use crate::{parse_construction, RenderArgs};

const MAX_SIDE: u32 = 8192;
const LIMIT_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub shape: Primitive,
    pub depth: usize,
}

/// Shapes in world coordinates: the unit square, or `[−1,1]²` for disk scenes.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub items: Vec<Item>,
    pub disk: bool,
    pub max_depth: usize,
}

pub fn build_scene(c: &Construction, depth: Option<usize>, budget: Option<u128>) -> Result<Scene> {
    if let Construction::KleinianCe { m, n } = c {
        let ce = kleinian_counterexample(*m, *n, budget.unwrap_or(DEFAULT_ORBIT_BUDGET))?;
        let mut items: Vec<Item> = ce
            .orbit
            .zs()
            .iter()
            .zip(&ce.orbit.labels)
            .map(|(z, l)| {
                let k: i64 = l.split('|').next().and_then(|k| k.parse().ok()).unwrap_or(0);
                Item {
                    shape: Primitive::point(z.re, z.im),
                    depth: k.unsigned_abs() as usize,
                }
            })
            .collect();
        items.extend(ce.orbit.limit_set_projection(LIMIT_EPS).into_iter().map(|z| Item {
            shape: Primitive::point(z.re, z.im),
            depth: *m as usize,
        }));
        return Ok(Scene {
            items,
            disk: true,
            max_depth: *m as usize,
        });
    }
    let (ifs, cset) = c.system()?.expect("planar construction");
    let depth = depth.unwrap_or(6);
    let budget = budget.unwrap_or(DEFAULT_PIECE_BUDGET);
    let items = if cset.is_empty() {
        let delta = ifs.max_lip().powi(depth as i32);
        homogeneous_approx(&ifs, delta, budget)?
            .into_iter()
            .map(|shape| Item { shape, depth })
            .collect()
    } else {
        orbital_to_depth(&ifs, &cset, depth, budget)?
            .pieces
            .into_iter()
            .map(|p| Item {
                depth: p.word.len(),
                shape: p.primitive,
            })
            .collect()
    };
    Ok(Scene {
        items,
        disk: false,
        max_depth: depth,
    })
}

/// Dark blue at the root through to orange at the deepest level.
pub fn depth_color(depth: usize, max_depth: usize) -> [u8; 3] {
    let t = if max_depth == 0 {
        0.0
    } else {
        (depth as f64 / max_depth as f64).min(1.0)
    };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    [lerp(20.0, 230.0), lerp(40.0, 120.0), lerp(120.0, 20.0)]
}

struct Frame {
    w: f64,
    h: f64,
    disk: bool,
}

impl Frame {
    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let (u, v) = if self.disk {
            ((p[0] + 1.0) / 2.0, (p[1] + 1.0) / 2.0)
        } else {
            (p[0], p[1])
        };
        (u * (self.w - 1.0), (1.0 - v) * (self.h - 1.0))
    }
}

fn put(img: &mut RgbImage, x: f64, y: f64, c: Rgb<u8>) {
    let (xi, yi) = (x.round(), y.round());
    if xi >= 0.0 && yi >= 0.0 && (xi as u32) < img.width() && (yi as u32) < img.height() {
        img.put_pixel(xi as u32, yi as u32, c);
    }
}

fn line(img: &mut RgbImage, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: Rgb<u8>) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        put(img, x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, c);
    }
}

pub fn render_png(scene: &Scene, width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let f = Frame {
        w: width as f64,
        h: height as f64,
        disk: scene.disk,
    };
    if scene.disk {
        let n = 4 * (width + height) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64 * std::f64::consts::TAU;
            let (x, y) = f.px([t.cos(), t.sin()]);
            put(&mut img, x, y, Rgb([0, 0, 0]));
        }
    }
    for item in &scene.items {
        let c = Rgb(depth_color(item.depth, scene.max_depth));
        match item.shape {
            Primitive::Point { p } => {
                let (x, y) = f.px(p);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        put(&mut img, x + dx as f64, y + dy as f64, c);
                    }
                }
            }
            Primitive::Segment { a, b } => line(&mut img, f.px(a), f.px(b), c),
            Primitive::Rect { a, b } => {
                let (x0, y1) = f.px(a);
                let (x1, y0) = f.px(b);
                for y in y0.round() as i64..=y1.round() as i64 {
                    for x in x0.round() as i64..=x1.round() as i64 {
                        put(&mut img, x as f64, y as f64, c);
                    }
                }
            }
        }
    }
    img
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub fn render_svg(scene: &Scene, width: u32, height: u32) -> String {
    let f = Frame {
        w: width as f64,
        h: height as f64,
        disk: scene.disk,
    };
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if scene.disk {
        let (cx, cy) = f.px([0.0, 0.0]);
        let r = (f.w - 1.0) / 2.0;
        writeln!(
            s,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" fill="none" stroke="black"/>"#
        )
        .unwrap();
    }
    for item in &scene.items {
        let c = hex(depth_color(item.depth, scene.max_depth));
        match item.shape {
            Primitive::Point { p } => {
                let (x, y) = f.px(p);
                writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="1.5" fill="{c}"/>"#).unwrap();
            }
            Primitive::Segment { a, b } => {
                let ((x1, y1), (x2, y2)) = (f.px(a), f.px(b));
                writeln!(
                    s,
                    r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{c}" stroke-width="1"/>"#
                )
                .unwrap();
            }
            Primitive::Rect { a, b } => {
                let (x0, y1) = f.px(a);
                let (x1, y0) = f.px(b);
                writeln!(
                    s,
                    r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{c}"/>"#,
                    (x1 - x0).max(0.5),
                    (y1 - y0).max(0.5)
                )
                .unwrap();
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn cmd_render(args: &RenderArgs) -> Result<()> {
    if args.width == 0 || args.height == 0 || args.width > MAX_SIDE || args.height > MAX_SIDE {
        bail!("image dimensions must lie in 1..={MAX_SIDE}");
    }
    let ext = args
        .output
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    if !matches!(ext.as_deref(), Some("png" | "svg")) {
        bail!("unsupported output extension for {} (use .png or .svg)", args.output.display());
    }
    let c = parse_construction(&args.construction)?;
    let scene = build_scene(&c, args.depth, args.budget)?;
    write_scene(&scene, &args.output, args.width, args.height)
}

fn write_scene(scene: &Scene, path: &Path, width: u32, height: u32) -> Result<()> {
    if path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() == Some("svg") {
        fs::write(path, render_svg(scene, width, height))
            .with_context(|| format!("cannot write {}", path.display()))
    } else {
        render_png(scene, width, height)
            .save(path)
            .with_context(|| format!("cannot write {}", path.display()))
    }
}
