//! JSON description files for IFSs and Möbius groups.
//!
//! ```json
//! {"maps": [{"kind": "similarity", "scale": 0.5, "angle": 0, "reflect": false, "t": [0, 0]},
//!           {"kind": "diag", "sx": 0.5, "sy": 0.25, "t": [0.5, 0]}],
//!  "condensation": [{"kind": "segment", "a": [0, 0], "b": [1, 0]}]}
//! ```
//!
//! ```json
//! {"group": "free", "generators": [{"kind": "moebius", "a": [1.5, 0], "b": [1.118, 0]}]}
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{GroupKind, GroupPresentation, MoebiusMap};
use crate::ifs::{CondensationSet, ContractionMap, Ifs, Primitive, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    Similarity {
        scale: f64,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        reflect: bool,
        t: Vec2,
    },
    Diag {
        sx: f64,
        sy: f64,
        t: Vec2,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrimitiveSpec {
    Point { p: Vec2 },
    Segment { a: Vec2, b: Vec2 },
    Rect { a: Vec2, b: Vec2 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsFile {
    pub maps: Vec<MapSpec>,
    #[serde(default)]
    pub condensation: Vec<PrimitiveSpec>,
}

impl IfsFile {
    pub fn build(&self) -> Result<(Ifs, CondensationSet)> {
        let maps = self
            .maps
            .iter()
            .map(|m| match *m {
                MapSpec::Similarity {
                    scale,
                    angle,
                    reflect,
                    t,
                } => ContractionMap::similarity(scale, angle, reflect, t),
                MapSpec::Diag { sx, sy, t } => ContractionMap::diagonal(sx, sy, t),
            })
            .collect::<Result<Vec<_>>>()?;
        let prims: Vec<Primitive> = self
            .condensation
            .iter()
            .map(|p| match *p {
                PrimitiveSpec::Point { p } => Primitive::point(p[0], p[1]),
                PrimitiveSpec::Segment { a, b } => Primitive::segment(a, b),
                PrimitiveSpec::Rect { a, b } => Primitive::rect(a, b),
            })
            .collect();
        let c = if prims.is_empty() {
            CondensationSet::empty()
        } else {
            CondensationSet::new(prims)?
        };
        Ok((Ifs::new(maps)?, c))
    }
}

pub fn parse_ifs(text: &str) -> Result<(Ifs, CondensationSet)> {
    let file: IfsFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.build()
}

pub fn read_ifs_file(path: &Path) -> Result<(Ifs, CondensationSet)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_ifs(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Moebius { a: [f64; 2], b: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKindSpec {
    Cyclic,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub group: GroupKindSpec,
    pub generators: Vec<GeneratorSpec>,
}

pub fn parse_group(text: &str) -> Result<GroupPresentation> {
    let file: GroupFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let gens = file
        .generators
        .iter()
        .map(|GeneratorSpec::Moebius { a, b }| {
            MoebiusMap::from_su11(Complex64::new(a[0], a[1]), Complex64::new(b[0], b[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = match file.group {
        GroupKindSpec::Cyclic => GroupKind::Cyclic,
        GroupKindSpec::Free => GroupKind::Free,
    };
    GroupPresentation::new(gens, kind)
}

pub fn read_group_file(path: &Path) -> Result<GroupPresentation> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_group(&text)
}
