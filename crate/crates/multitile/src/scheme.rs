//! Multiscale substitution schemes: prototiles, per-prototile substitution
//! rules with exact rational scales and offsets, parsing from the JSON scheme
//! format, validation and normalization.

use crate::exact::{
    format_rational, parse_rational, rational_nth_root, Rational, RationalParseError,
};
use crate::geometry::Geometry;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// A labeled prototile with exact geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prototile {
    /// 1-based identifier; prototile k is vertex k of the associated graph.
    pub id: usize,
    pub label: String,
    pub geometry: Geometry,
    pub volume: Rational,
}

/// One tile of substitution: a rescaled, translated prototile copy placed
/// inside its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleChild {
    /// 1-based id of the prototile this child is a copy of.
    pub child_type: usize,
    pub scale: Rational,
    pub offset: Vec<Rational>,
}

/// A multiscale substitution scheme: prototiles plus one rule per prototile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub name: String,
    pub dim: usize,
    pub prototiles: Vec<Prototile>,
    pub rules: Vec<Vec<RuleChild>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scheme document: {0}")]
    Document(String),
    #[error("invalid rational: {0}")]
    Rational(#[from] RationalParseError),
    #[error("unknown prototile id {0}")]
    UnknownPrototile(usize),
    #[error("scale outside (0,1): {0}")]
    ScaleOutOfRange(String),
    #[error("prototile {0} geometry is not a simple polygon/interval")]
    DegenerateGeometry(usize),
    #[error("duplicate prototile label {0:?}")]
    DuplicateLabel(String),
    #[error("prototile ids must be 1..n in order, got {0}")]
    BadId(usize),
    #[error("dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("prototile {0} has zero volume")]
    ZeroVolume(usize),
    #[error("prototile {0} volume has no exact {1}-th root; cannot normalize in rational arithmetic")]
    NoExactRoot(usize, usize),
    #[error("rule for prototile {0} is missing or duplicated")]
    RuleMismatch(usize),
}

/// Per-prototile entry of a validation report.
#[derive(Debug, Clone, Serialize)]
pub struct RuleReport {
    pub prototile: usize,
    /// Σ_k scale_k^d · vol(child type) compared against vol(parent), exact.
    pub volume_identity: bool,
    /// Deficit vol(parent) − Σ …, as a `"p/q"` string (zero on pass).
    pub volume_deficit: String,
    pub children_contained: bool,
    pub children_disjoint: bool,
}

/// The result of `validate`: failures are carried, not thrown.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub scheme: String,
    pub normalized: bool,
    pub rules: Vec<RuleReport>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.rules
            .iter()
            .all(|r| r.volume_identity && r.children_contained && r.children_disjoint)
    }
}

impl Scheme {
    pub fn prototile_count(&self) -> usize {
        self.prototiles.len()
    }

    pub fn prototile(&self, id: usize) -> &Prototile {
        &self.prototiles[id - 1]
    }

    pub fn rule(&self, id: usize) -> &[RuleChild] {
        &self.rules[id - 1]
    }

    pub fn is_normalized(&self) -> bool {
        self.prototiles.iter().all(|p| p.volume.is_one())
    }

    /// SHA-256 of the canonical serialized form; identifies the scheme in
    /// patch files and run manifests.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json_string().as_bytes());
        hasher.finalize().into()
    }

    pub fn content_hash_hex(&self) -> String {
        self.content_hash()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn rational_array(value: &Value, what: &str) -> Result<Vec<Rational>, SchemeError> {
    let arr = value
        .as_array()
        .ok_or_else(|| SchemeError::Document(format!("{what} must be an array")))?;
    arr.iter()
        .map(|v| {
            let s = v
                .as_str()
                .ok_or_else(|| SchemeError::Document(format!("{what} entries must be strings")))?;
            Ok(parse_rational(s)?)
        })
        .collect()
}

/// Parses and structurally validates a scheme document.
///
/// Geometry checks performed here: ids and labels well-formed, scales in
/// (0,1), simple geometry, child containment inside the parent. The exact
/// volume identity and pairwise disjointness are reported by [`validate`].
pub fn parse_scheme(document: &str) -> Result<Scheme, SchemeError> {
    let root: Value = serde_json::from_str(document).map_err(|e| SchemeError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let name = root
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| SchemeError::Document("missing string field `name`".into()))?
        .to_string();
    let dim = root
        .get("dimension")
        .and_then(Value::as_u64)
        .ok_or_else(|| SchemeError::Document("missing integer field `dimension`".into()))?
        as usize;
    if dim != 1 && dim != 2 {
        return Err(SchemeError::BadDimension(dim));
    }

    let proto_values = root
        .get("prototiles")
        .and_then(Value::as_array)
        .ok_or_else(|| SchemeError::Document("missing array field `prototiles`".into()))?;
    let mut prototiles = Vec::new();
    for (idx, pv) in proto_values.iter().enumerate() {
        let id = pv
            .get("id")
            .and_then(Value::as_u64)
            .ok_or_else(|| SchemeError::Document("prototile missing `id`".into()))?
            as usize;
        if id != idx + 1 {
            return Err(SchemeError::BadId(id));
        }
        let label = pv
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| SchemeError::Document("prototile missing `label`".into()))?
            .to_string();
        if prototiles.iter().any(|p: &Prototile| p.label == label) {
            return Err(SchemeError::DuplicateLabel(label));
        }
        let verts = pv
            .get("vertices")
            .and_then(Value::as_array)
            .ok_or_else(|| SchemeError::Document("prototile missing `vertices`".into()))?;
        let geometry = match dim {
            1 => {
                let coords: Vec<Rational> = verts
                    .iter()
                    .map(|v| rational_array(v, "vertex").map(|c| c[0].clone()))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 2 {
                    return Err(SchemeError::Document(
                        "1-dimensional prototiles need exactly two endpoint vertices".into(),
                    ));
                }
                let (a, b) = (coords[0].clone(), coords[1].clone());
                if a < b {
                    Geometry::Interval(a, b)
                } else {
                    Geometry::Interval(b, a)
                }
            }
            _ => {
                let pts = verts
                    .iter()
                    .map(|v| {
                        let c = rational_array(v, "vertex")?;
                        if c.len() != 2 {
                            return Err(SchemeError::Document(
                                "2-dimensional vertices need two coordinates".into(),
                            ));
                        }
                        Ok([c[0].clone(), c[1].clone()])
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Geometry::Polygon(pts)
            }
        };
        if !geometry.is_simple() {
            return Err(SchemeError::DegenerateGeometry(id));
        }
        let volume = geometry.volume();
        if volume.is_zero() {
            return Err(SchemeError::ZeroVolume(id));
        }
        prototiles.push(Prototile {
            id,
            label,
            geometry,
            volume,
        });
    }
    let n = prototiles.len();
    if n == 0 {
        return Err(SchemeError::Document("at least one prototile required".into()));
    }

    let rule_values = root
        .get("rules")
        .and_then(Value::as_array)
        .ok_or_else(|| SchemeError::Document("missing array field `rules`".into()))?;
    let mut rules: Vec<Option<Vec<RuleChild>>> = vec![None; n];
    for rv in rule_values {
        let parent = rv
            .get("parent")
            .and_then(Value::as_u64)
            .ok_or_else(|| SchemeError::Document("rule missing `parent`".into()))?
            as usize;
        if parent == 0 || parent > n {
            return Err(SchemeError::UnknownPrototile(parent));
        }
        if rules[parent - 1].is_some() {
            return Err(SchemeError::RuleMismatch(parent));
        }
        let children_values = rv
            .get("children")
            .and_then(Value::as_array)
            .ok_or_else(|| SchemeError::Document("rule missing `children`".into()))?;
        let mut children = Vec::new();
        for cv in children_values {
            let child_type = cv
                .get("type")
                .and_then(Value::as_u64)
                .ok_or_else(|| SchemeError::Document("child missing `type`".into()))?
                as usize;
            if child_type == 0 || child_type > n {
                return Err(SchemeError::UnknownPrototile(child_type));
            }
            let scale_str = cv
                .get("scale")
                .and_then(Value::as_str)
                .ok_or_else(|| SchemeError::Document("child missing `scale`".into()))?;
            let scale = parse_rational(scale_str)?;
            if !scale.is_positive() || scale >= Rational::one() {
                return Err(SchemeError::ScaleOutOfRange(scale_str.to_string()));
            }
            let offset = rational_array(
                cv.get("offset")
                    .ok_or_else(|| SchemeError::Document("child missing `offset`".into()))?,
                "offset",
            )?;
            if offset.len() != dim {
                return Err(SchemeError::Document(format!(
                    "offset must have {dim} coordinates"
                )));
            }
            children.push(RuleChild {
                child_type,
                scale,
                offset,
            });
        }
        rules[parent - 1] = Some(children);
    }
    let rules: Vec<Vec<RuleChild>> = rules
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or(SchemeError::RuleMismatch(i + 1)))
        .collect::<Result<_, _>>()?;

    let scheme = Scheme {
        name,
        dim,
        prototiles,
        rules,
    };
    for (i, rule) in scheme.rules.iter().enumerate() {
        let parent = &scheme.prototiles[i];
        for child in rule {
            let placed = scheme
                .prototile(child.child_type)
                .geometry
                .transformed(&child.scale, &child.offset);
            if !parent.geometry.contains_geometry(&placed) {
                return Err(SchemeError::Document(format!(
                    "child of type {} at scale {} escapes prototile {}",
                    child.child_type,
                    format_rational(&child.scale),
                    parent.id
                )));
            }
        }
    }
    Ok(scheme)
}

impl Scheme {
    /// Canonical JSON serialization; `parse_scheme` round-trips it exactly.
    pub fn to_json_string(&self) -> String {
        let vertices = |g: &Geometry| -> Value {
            match g {
                Geometry::Interval(a, b) => serde_json::json!([
                    [format_rational(a)],
                    [format_rational(b)]
                ]),
                Geometry::Polygon(vs) => Value::Array(
                    vs.iter()
                        .map(|p| {
                            serde_json::json!([format_rational(&p[0]), format_rational(&p[1])])
                        })
                        .collect(),
                ),
            }
        };
        let doc = serde_json::json!({
            "name": self.name,
            "dimension": self.dim,
            "prototiles": self.prototiles.iter().map(|p| serde_json::json!({
                "id": p.id,
                "label": p.label,
                "vertices": vertices(&p.geometry),
            })).collect::<Vec<_>>(),
            "rules": self.rules.iter().enumerate().map(|(i, children)| serde_json::json!({
                "parent": i + 1,
                "children": children.iter().map(|c| serde_json::json!({
                    "type": c.child_type,
                    "scale": format_rational(&c.scale),
                    "offset": c.offset.iter().map(format_rational).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        });
        serde_json::to_string_pretty(&doc).expect("scheme serialization cannot fail")
    }
}

/// Exact validation report: volume identity, containment, disjointness and
/// the normalization flag.
pub fn validate(scheme: &Scheme) -> ValidationReport {
    let mut rules = Vec::new();
    for (i, rule) in scheme.rules.iter().enumerate() {
        let parent = &scheme.prototiles[i];
        let d = scheme.dim as u32;
        let mut covered = Rational::zero();
        for child in rule {
            covered += child.scale.pow(d as i32) * &scheme.prototile(child.child_type).volume;
        }
        let deficit = &parent.volume - &covered;
        let placed: Vec<Geometry> = rule
            .iter()
            .map(|c| {
                scheme
                    .prototile(c.child_type)
                    .geometry
                    .transformed(&c.scale, &c.offset)
            })
            .collect();
        let children_contained = placed
            .iter()
            .all(|g| parent.geometry.contains_geometry(g));
        let mut children_disjoint = true;
        'outer: for a in 0..placed.len() {
            for b in (a + 1)..placed.len() {
                if !placed[a].interiors_disjoint(&placed[b]) {
                    children_disjoint = false;
                    break 'outer;
                }
            }
        }
        rules.push(RuleReport {
            prototile: i + 1,
            volume_identity: deficit.is_zero(),
            volume_deficit: format_rational(&deficit),
            children_contained,
            children_disjoint,
        });
    }
    ValidationReport {
        scheme: scheme.name.clone(),
        normalized: scheme.is_normalized(),
        rules,
    }
}

/// Rescales every prototile to unit volume, adjusting rule scales and
/// offsets so the tessellations are preserved.
///
/// Rescaling a prototile by λ needs λ = vol^(-1/d) to be rational; inputs
/// whose volumes are not exact d-th powers are rejected, which keeps the
/// whole pipeline in exact arithmetic.
pub fn normalize(scheme: &Scheme) -> Result<Scheme, SchemeError> {
    let d = scheme.dim as u32;
    let mut lambdas = Vec::new();
    for p in &scheme.prototiles {
        if p.volume.is_zero() {
            return Err(SchemeError::ZeroVolume(p.id));
        }
        let root = rational_nth_root(&p.volume, d)
            .ok_or(SchemeError::NoExactRoot(p.id, scheme.dim))?;
        lambdas.push(Rational::one() / root);
    }
    let prototiles = scheme
        .prototiles
        .iter()
        .zip(&lambdas)
        .map(|(p, l)| {
            let zero_off = vec![Rational::zero(); scheme.dim];
            let geometry = p.geometry.transformed(l, &zero_off);
            let volume = geometry.volume();
            Prototile {
                id: p.id,
                label: p.label.clone(),
                geometry,
                volume,
            }
        })
        .collect();
    let rules = scheme
        .rules
        .iter()
        .enumerate()
        .map(|(i, rule)| {
            let li = &lambdas[i];
            rule.iter()
                .map(|c| RuleChild {
                    child_type: c.child_type,
                    scale: &c.scale * li / &lambdas[c.child_type - 1],
                    offset: c.offset.iter().map(|o| o * li).collect(),
                })
                .collect()
        })
        .collect();
    Ok(Scheme {
        name: scheme.name.clone(),
        dim: scheme.dim,
        prototiles,
        rules,
    })
}

/// The four schemes shipped with the crate.
pub mod bundled {
    use super::{parse_scheme, Scheme};

    pub const SQUARE: &str = include_str!("../../../schemes/square.json");
    pub const TRIANGLES: &str = include_str!("../../../schemes/triangles.json");
    pub const KAKUTANI_1_3: &str = include_str!("../../../schemes/kakutani-1-3.json");
    pub const FIXED_HALF: &str = include_str!("../../../schemes/fixed-half.json");

    pub fn square() -> Scheme {
        parse_scheme(SQUARE).expect("bundled square scheme parses")
    }

    pub fn triangles() -> Scheme {
        parse_scheme(TRIANGLES).expect("bundled triangle scheme parses")
    }

    pub fn kakutani_1_3() -> Scheme {
        parse_scheme(KAKUTANI_1_3).expect("bundled Kakutani scheme parses")
    }

    pub fn fixed_half() -> Scheme {
        parse_scheme(FIXED_HALF).expect("bundled fixed-half scheme parses")
    }

    pub fn all() -> Vec<Scheme> {
        vec![square(), triangles(), kakutani_1_3(), fixed_half()]
    }
}
