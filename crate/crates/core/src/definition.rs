//! JSON system-definition files.
//!
//! Sets and maps are trees whose leaves are expression strings. Named
//! `params` may appear in any expression; the optional `family` section may
//! also use `delta`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, ExprError, VecExpr};
use crate::hybrid::{HybridSystem, PerturbationFamily, SystemError, DELTA};
use crate::maps::{Map, MapSpec};
use crate::sets::SetSpec;

#[derive(Debug, thiserror::Error)]
pub enum DefinitionError {
    #[error("{path}: cannot read file: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("JSON error at {pointer}: {message}")]
    Json { pointer: String, message: String },
    #[error("expression at {pointer}: {source}")]
    Expr { pointer: String, source: ExprError },
    #[error("at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
    #[error("system: {0}")]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDoc {
    Sublevel(String),
    Zero(String),
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Intersection(Vec<SetDoc>),
    Union(Vec<SetDoc>),
    Product(Vec<FactorDoc>),
    Inflate { set: std::boxed::Box<SetDoc>, radius: String },
    All,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub dim: usize,
    pub set: SetDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub vertices: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restrict_to: Option<SetDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "C")]
    pub c: SetDoc,
    #[serde(rename = "F")]
    pub f: MapDoc,
    #[serde(rename = "D")]
    pub d: SetDoc,
    #[serde(rename = "G")]
    pub g: MapDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "C")]
    pub c: SetDoc,
    #[serde(rename = "F")]
    pub f: MapDoc,
    #[serde(rename = "D")]
    pub d: SetDoc,
    #[serde(rename = "G")]
    pub g: MapDoc,
    /// Terminal constraint.
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub x: Option<SetDoc>,
    /// `H_δ`; expressions may use `delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
}

/// A loaded definition: the validated objects and the document they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub doc: SystemDoc,
    pub system: HybridSystem,
    pub family: Option<PerturbationFamily>,
    pub terminal: Option<SetSpec>,
    pub rho: Option<Expr>,
}

struct Ctx<'a> {
    dim: usize,
    params: &'a BTreeMap<String, f64>,
    delta: bool,
}

impl Ctx<'_> {
    fn expr(&self, text: &str, dim: usize, pointer: &str) -> Result<Expr, DefinitionError> {
        let mut syms: Vec<&str> = self.params.keys().map(String::as_str).collect();
        if self.delta {
            syms.push(DELTA);
        }
        let e = Expr::parse(text, dim, &syms).map_err(|source| DefinitionError::Expr { pointer: pointer.into(), source })?;
        Ok(e.bind(self.params))
    }

    fn set(&self, s: &SetDoc, dim: usize, p: &str) -> Result<SetSpec, DefinitionError> {
        let list = |v: &[SetDoc], key: &str| -> Result<Vec<SetSpec>, DefinitionError> {
            v.iter().enumerate().map(|(i, s)| self.set(s, dim, &format!("{p}/{key}/{i}"))).collect()
        };
        let len = |v: &[f64], key: &str| -> Result<(), DefinitionError> {
            if v.len() == dim {
                Ok(())
            } else {
                Err(DefinitionError::Invalid { pointer: format!("{p}/{key}"), message: format!("expected {dim} entries, got {}", v.len()) })
            }
        };
        Ok(match s {
            SetDoc::Sublevel(t) => SetSpec::Sublevel(self.expr(t, dim, &format!("{p}/sublevel"))?),
            SetDoc::Zero(t) => SetSpec::Zero(self.expr(t, dim, &format!("{p}/zero"))?),
            SetDoc::Ball { center, radius } => {
                len(center, "ball/center")?;
                SetSpec::Ball { center: center.clone(), radius: *radius }
            }
            SetDoc::Box { lo, hi } => {
                len(lo, "box/lo")?;
                len(hi, "box/hi")?;
                SetSpec::Box { lo: lo.clone(), hi: hi.clone() }
            }
            SetDoc::Intersection(v) => SetSpec::Intersection(list(v, "intersection")?),
            SetDoc::Union(v) => SetSpec::Union(list(v, "union")?),
            SetDoc::Product(fs) => {
                let total: usize = fs.iter().map(|f| f.dim).sum();
                if total != dim {
                    return Err(DefinitionError::Invalid {
                        pointer: format!("{p}/product"),
                        message: format!("factor dimensions sum to {total}, expected {dim}"),
                    });
                }
                let parts = fs
                    .iter()
                    .enumerate()
                    .map(|(i, f)| self.set(&f.set, f.dim, &format!("{p}/product/{i}/set")))
                    .collect::<Result<_, _>>()?;
                SetSpec::Product(parts)
            }
            SetDoc::Inflate { set, radius } => SetSpec::Inflate {
                set: Box::new(self.set(set, dim, &format!("{p}/inflate/set"))?),
                radius: self.expr(radius, dim, &format!("{p}/inflate/radius"))?,
            },
            SetDoc::All => SetSpec::All(dim),
            SetDoc::Empty => SetSpec::Empty(dim),
        })
    }

    fn map(&self, m: &MapDoc, p: &str) -> Result<MapSpec, DefinitionError> {
        let mut vs = Vec::new();
        for (i, v) in m.vertices.iter().enumerate() {
            let comps = v
                .iter()
                .enumerate()
                .map(|(k, t)| self.expr(t, self.dim, &format!("{p}/vertices/{i}/{k}")))
                .collect::<Result<Vec<_>, _>>()?;
            let ve = VecExpr::new(comps).map_err(|source| DefinitionError::Expr { pointer: format!("{p}/vertices/{i}"), source })?;
            vs.push(ve);
        }
        let radius = match &m.radius {
            Some(t) => self.expr(t, self.dim, &format!("{p}/radius"))?,
            None => Expr::constant(0.0, self.dim),
        };
        let restrict = m.restrict_to.as_ref().map(|s| self.set(s, self.dim, &format!("{p}/restrict_to"))).transpose()?;
        MapSpec::new(vs, radius, restrict).map_err(|e| DefinitionError::Invalid { pointer: p.into(), message: e.to_string() })
    }

    fn system(&self, s: &SystemSection, p: &str) -> Result<HybridSystem, DefinitionError> {
        let c = self.set(&s.c, self.dim, &format!("{p}/C"))?;
        let f = self.map(&s.f, &format!("{p}/F"))?;
        let d = self.set(&s.d, self.dim, &format!("{p}/D"))?;
        let g = self.map(&s.g, &format!("{p}/G"))?;
        Ok(HybridSystem::new(c, f, d, g)?)
    }
}

impl SystemDoc {
    pub fn build(&self) -> Result<Definition, DefinitionError> {
        if self.dim == 0 {
            return Err(DefinitionError::Invalid { pointer: "/dim".into(), message: "dimension must be positive".into() });
        }
        if let Some(k) = self.params.keys().find(|k| k.as_str() == DELTA || is_state_name(k)) {
            return Err(DefinitionError::Invalid { pointer: format!("/params/{k}"), message: "reserved name".into() });
        }
        let nominal = Ctx { dim: self.dim, params: &self.params, delta: false };
        let section = SystemSection { c: self.c.clone(), f: self.f.clone(), d: self.d.clone(), g: self.g.clone() };
        let system = nominal.system(&section, "")?;
        let terminal = self.x.as_ref().map(|x| nominal.set(x, self.dim, "/X")).transpose()?;
        let rho = self.rho.as_ref().map(|r| nominal.expr(r, self.dim, "/rho")).transpose()?;
        let family = match &self.family {
            None => None,
            Some(fs) => {
                let fc = Ctx { dim: self.dim, params: &self.params, delta: true };
                let template = fc.system(fs, "/family")?;
                Some(PerturbationFamily::new(template, rho.clone())?)
            }
        };
        Ok(Definition { doc: self.clone(), system, family, terminal, rho })
    }

    /// A document for an in-memory system; bound parameters appear as literals.
    pub fn from_system(name: &str, h: &HybridSystem, family: Option<&PerturbationFamily>) -> Result<SystemDoc, DefinitionError> {
        let s = section(h)?;
        Ok(SystemDoc {
            name: Some(name.into()),
            dim: h.dim,
            params: BTreeMap::new(),
            c: s.c,
            f: s.f,
            d: s.d,
            g: s.g,
            x: None,
            family: family.map(|f| section(&f.template)).transpose()?,
            rho: family.and_then(|f| f.rho.as_ref()).map(|r| r.to_string()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

fn is_state_name(k: &str) -> bool {
    k.strip_prefix('x').is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn set_doc(s: &SetSpec) -> SetDoc {
    match s {
        SetSpec::Sublevel(e) => SetDoc::Sublevel(e.to_string()),
        SetSpec::Zero(e) => SetDoc::Zero(e.to_string()),
        SetSpec::Ball { center, radius } => SetDoc::Ball { center: center.clone(), radius: *radius },
        SetSpec::Box { lo, hi } => SetDoc::Box { lo: lo.clone(), hi: hi.clone() },
        SetSpec::Intersection(v) => SetDoc::Intersection(v.iter().map(set_doc).collect()),
        SetSpec::Union(v) => SetDoc::Union(v.iter().map(set_doc).collect()),
        SetSpec::Product(v) => SetDoc::Product(v.iter().map(|f| FactorDoc { dim: f.dim(), set: set_doc(f) }).collect()),
        SetSpec::Inflate { set, radius } => SetDoc::Inflate { set: Box::new(set_doc(set)), radius: radius.to_string() },
        SetSpec::All(_) => SetDoc::All,
        SetSpec::Empty(_) => SetDoc::Empty,
    }
}

fn map_doc(m: &Map, what: &str) -> Result<MapDoc, DefinitionError> {
    let spec = m.as_spec().ok_or_else(|| DefinitionError::Invalid {
        pointer: format!("/{what}"),
        message: "sampled inflation maps have no file form".into(),
    })?;
    let radius = (spec.radius.as_constant() != Some(0.0)).then(|| spec.radius.to_string());
    Ok(MapDoc {
        vertices: spec.vertices.iter().map(|v| v.components().iter().map(|e| e.to_string()).collect()).collect(),
        radius,
        restrict_to: spec.restrict_to.as_ref().map(set_doc),
    })
}

fn section(h: &HybridSystem) -> Result<SystemSection, DefinitionError> {
    Ok(SystemSection { c: set_doc(&h.c), f: map_doc(&h.f, "F")?, d: set_doc(&h.d), g: map_doc(&h.g, "G")? })
}

/// Parses a definition from JSON text; errors carry a JSON pointer.
pub fn parse_system(text: &str) -> Result<Definition, DefinitionError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SystemDoc = serde_path_to_error::deserialize(de).map_err(|e| DefinitionError::Json {
        pointer: pointer_of(e.path()),
        message: e.inner().to_string(),
    })?;
    doc.build()
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut s = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => s.push_str(&format!("/{index}")),
            Segment::Map { key } | Segment::Enum { variant: key } => s.push_str(&format!("/{key}")),
            Segment::Unknown => s.push_str("/?"),
        }
    }
    if s.is_empty() {
        "/".into()
    } else {
        s
    }
}

pub fn load_system(path: impl AsRef<Path>) -> Result<Definition, DefinitionError> {
    let p = path.as_ref();
    let text = std::fs::read_to_string(p).map_err(|source| DefinitionError::Io { path: p.display().to_string(), source })?;
    parse_system(&text)
}

/// The shipped definition files, by file stem.
pub const SHIPPED: &[(&str, &str)] = &[
    ("bouncing_ball", include_str!("../systems/bouncing_ball.json")),
    ("thermostat", include_str!("../systems/thermostat.json")),
    ("planar", include_str!("../systems/planar.json")),
    ("oscillator", include_str!("../systems/oscillator.json")),
    ("perturbed_ball", include_str!("../systems/perturbed_ball.json")),
    ("waypoint", include_str!("../systems/waypoint.json")),
    ("sign", include_str!("../systems/sign.json")),
    ("discontinuous_jump", include_str!("../systems/discontinuous_jump.json")),
];

pub fn shipped(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
