//! The substitution semi-flow: inflate a prototile by e^t and substitute
//! every tile whose volume exceeds 1. Exact times of the form t = ln(u) with
//! rational u make every substitution decision an exact rational comparison,
//! so patches are reproducible bit for bit.

use crate::exact::{format_rational, Rational};
use crate::geometry::Geometry;
use crate::graph::{build_graph, closed_paths_up_to, GraphError};
use crate::scheme::Scheme;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

/// A point on the time axis of the semi-flow. Exact mode stores u = e^t as a
/// positive rational; float mode allows arbitrary reals but is excluded from
/// all exact pipelines.
#[derive(Debug, Clone, PartialEq)]
pub enum TimePoint {
    Exact(Rational),
    Float(f64),
}

impl TimePoint {
    pub fn from_u(u: Rational) -> Self {
        TimePoint::Exact(u)
    }

    /// Parses `"ln(p/q)"` into the exact form; bare reals become float mode.
    pub fn parse(s: &str) -> Result<TimePoint, String> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("ln(").and_then(|r| r.strip_suffix(')')) {
            let u = crate::exact::parse_rational(inner).map_err(|e| e.to_string())?;
            if !u.is_positive() {
                return Err("time argument must be positive".into());
            }
            return Ok(TimePoint::Exact(u));
        }
        s.parse::<f64>()
            .map(TimePoint::Float)
            .map_err(|_| format!("cannot parse time {s:?}; expected ln(p/q) or a float"))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            TimePoint::Exact(u) => crate::exact::rational_to_f64(u).ln(),
            TimePoint::Float(t) => *t,
        }
    }
}

impl std::fmt::Display for TimePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimePoint::Exact(u) => write!(f, "ln({})", format_rational(u)),
            TimePoint::Float(t) => write!(f, "{t}"),
        }
    }
}

/// A tile of a generated patch: a translated copy of `scale·T_ptype` whose
/// ancestry is the rule-child index sequence from the patch root.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlacedTile {
    pub ptype: usize,
    pub scale: Rational,
    pub offset: Vec<Rational>,
    pub path: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchMeta {
    pub scheme_name: String,
    pub scheme_hash: [u8; 32],
    pub dim: usize,
    pub root_type: usize,
    /// u = e^t of the generating time.
    pub time_u: Rational,
    /// Translation applied to the whole patch (zero for plain generation,
    /// -u·p for stationary patches anchored at control point p).
    pub frame_offset: Vec<Rational>,
}

/// A finite patch produced by the semi-flow, tiles in lexicographic path
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub meta: PatchMeta,
    pub tiles: Vec<PlacedTile>,
}

impl Patch {
    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    /// Exact sum Σ scale^d over tiles; equals u^d for a full patch.
    pub fn volume(&self) -> Rational {
        let d = self.meta.dim as i32;
        self.tiles.iter().map(|t| t.scale.pow(d)).sum()
    }

    /// The support geometry of one tile, in patch coordinates.
    pub fn tile_geometry(&self, scheme: &Scheme, tile: &PlacedTile) -> Geometry {
        scheme
            .prototile(tile.ptype)
            .geometry
            .transformed(&tile.scale, &tile.offset)
    }

    /// Bounding box of the whole patch support.
    pub fn support_bbox(&self, scheme: &Scheme) -> (Vec<Rational>, Vec<Rational>) {
        let root = scheme.prototile(self.meta.root_type);
        let scaled = root
            .geometry
            .transformed(&self.meta.time_u, &self.meta.frame_offset);
        scaled.bbox()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("tile budget of {0} exceeded; partial patches are never returned")]
    BudgetExceeded(u64),
    #[error("time must be nonnegative (u >= 1), got u = {0}")]
    NegativeTime(String),
    #[error("operation requires an exact time point")]
    ExactTimeRequired,
    #[error("patch time {time} is not an integer power of the anchor period {period}")]
    NotOnAnchorOrbit { time: String, period: String },
    #[error("supertile order {order} exceeds the patch tower height {height}")]
    OrderTooLarge { order: usize, height: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Generation controls. `workers > 1` parallelizes over the root's subtrees;
/// outputs are identical for every worker count.
#[derive(Debug, Clone)]
pub struct GenOptions {
    pub budget: u64,
    pub workers: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            budget: DEFAULT_TILE_BUDGET,
            workers: 1,
        }
    }
}

pub const DEFAULT_TILE_BUDGET: u64 = 10_000_000;

/// Borrowed view of one tile during streaming traversal.
pub struct TileView<'a> {
    pub ptype: usize,
    pub scale: &'a Rational,
    pub offset: &'a [Rational],
    pub path: &'a [u32],
}

struct Frame {
    ptype: usize,
    scale: Rational,
    offset: Vec<Rational>,
    path: Vec<u32>,
}

/// Streams the tiles of F_t(T_root) in lexicographic path order without
/// materializing the patch. The visitor is called once per completed tile.
///
/// A tile is substituted iff its scale exceeds 1 strictly; ties at exactly 1
/// stay whole, so unit-volume tiles are present unsubstituted.
pub fn visit_tiles<F: FnMut(TileView<'_>)>(
    scheme: &Scheme,
    root: usize,
    u: &Rational,
    budget: u64,
    mut visitor: F,
) -> Result<u64, FlowError> {
    if u < &Rational::one() {
        return Err(FlowError::NegativeTime(format_rational(u)));
    }
    let mut emitted: u64 = 0;
    let mut stack: Vec<Frame> = vec![Frame {
        ptype: root,
        scale: u.clone(),
        offset: vec![Rational::zero(); scheme.dim],
        path: Vec::new(),
    }];
    let one = Rational::one();
    while let Some(frame) = stack.pop() {
        if frame.scale > one {
            let rule = scheme.rule(frame.ptype);
            for (k, child) in rule.iter().enumerate().rev() {
                let scale = &frame.scale * &child.scale;
                let offset: Vec<Rational> = frame
                    .offset
                    .iter()
                    .zip(&child.offset)
                    .map(|(o, c)| o + &frame.scale * c)
                    .collect();
                let mut path = frame.path.clone();
                path.push(k as u32);
                stack.push(Frame {
                    ptype: child.child_type,
                    scale,
                    offset,
                    path,
                });
            }
        } else {
            emitted += 1;
            if emitted > budget {
                return Err(FlowError::BudgetExceeded(budget));
            }
            visitor(TileView {
                ptype: frame.ptype,
                scale: &frame.scale,
                offset: &frame.offset,
                path: &frame.path,
            });
        }
    }
    Ok(emitted)
}

fn collect_subtree(
    scheme: &Scheme,
    start: Frame,
    counter: &AtomicU64,
    budget: u64,
    aborted: &AtomicBool,
) -> Result<Vec<PlacedTile>, FlowError> {
    let mut tiles = Vec::new();
    let mut stack = vec![start];
    let one = Rational::one();
    while let Some(frame) = stack.pop() {
        if aborted.load(AtomicOrdering::Relaxed) {
            return Err(FlowError::BudgetExceeded(budget));
        }
        if frame.scale > one {
            let rule = scheme.rule(frame.ptype);
            for (k, child) in rule.iter().enumerate().rev() {
                let scale = &frame.scale * &child.scale;
                let offset: Vec<Rational> = frame
                    .offset
                    .iter()
                    .zip(&child.offset)
                    .map(|(o, c)| o + &frame.scale * c)
                    .collect();
                let mut path = frame.path.clone();
                path.push(k as u32);
                stack.push(Frame {
                    ptype: child.child_type,
                    scale,
                    offset,
                    path,
                });
            }
        } else {
            if counter.fetch_add(1, AtomicOrdering::Relaxed) + 1 > budget {
                aborted.store(true, AtomicOrdering::Relaxed);
                return Err(FlowError::BudgetExceeded(budget));
            }
            tiles.push(PlacedTile {
                ptype: frame.ptype,
                scale: frame.scale,
                offset: frame.offset,
                path: frame.path,
            });
        }
    }
    Ok(tiles)
}

/// Generates the patch F_t(T_root) for an exact time t = ln(u).
pub fn generate(
    scheme: &Scheme,
    root: usize,
    time: &TimePoint,
    opts: &GenOptions,
) -> Result<Patch, FlowError> {
    let u = match time {
        TimePoint::Exact(u) => u,
        TimePoint::Float(_) => return Err(FlowError::ExactTimeRequired),
    };
    if u < &Rational::one() {
        return Err(FlowError::NegativeTime(format_rational(u)));
    }
    let meta = PatchMeta {
        scheme_name: scheme.name.clone(),
        scheme_hash: scheme.content_hash(),
        dim: scheme.dim,
        root_type: root,
        time_u: u.clone(),
        frame_offset: vec![Rational::zero(); scheme.dim],
    };
    let one = Rational::one();
    if u == &one {
        return Ok(Patch {
            meta,
            tiles: vec![PlacedTile {
                ptype: root,
                scale: one,
                offset: vec![Rational::zero(); scheme.dim],
                path: Vec::new(),
            }],
        });
    }

    let rule = scheme.rule(root);
    let counter = AtomicU64::new(0);
    let aborted = AtomicBool::new(false);
    let subtrees: Vec<Frame> = rule
        .iter()
        .enumerate()
        .map(|(k, child)| Frame {
            ptype: child.child_type,
            scale: u * &child.scale,
            offset: child.offset.iter().map(|c| u * c).collect(),
            path: vec![k as u32],
        })
        .collect();

    let results: Vec<Result<Vec<PlacedTile>, FlowError>> = if opts.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .expect("worker pool");
        pool.install(|| {
            subtrees
                .into_par_iter()
                .map(|f| collect_subtree(scheme, f, &counter, opts.budget, &aborted))
                .collect()
        })
    } else {
        subtrees
            .into_iter()
            .map(|f| collect_subtree(scheme, f, &counter, opts.budget, &aborted))
            .collect()
    };

    let mut tiles = Vec::new();
    for r in results {
        tiles.extend(r?);
    }
    Ok(Patch { meta, tiles })
}

/// Float-mode tile of [`generate_float`].
#[derive(Debug, Clone)]
pub struct FloatTile {
    pub ptype: usize,
    pub scale: f64,
    pub offset: Vec<f64>,
    pub depth: usize,
}

/// Approximate generation at an arbitrary real time. Diagnostic only: the
/// substitution threshold is a float comparison, so results near events are
/// not authoritative and never feed exact statistics.
pub fn generate_float(
    scheme: &Scheme,
    root: usize,
    t: f64,
    budget: u64,
) -> Result<Vec<FloatTile>, FlowError> {
    if t < 0.0 {
        return Err(FlowError::NegativeTime(format!("{}", t.exp())));
    }
    let rules_f: Vec<Vec<(usize, f64, Vec<f64>)>> = scheme
        .rules
        .iter()
        .map(|rule| {
            rule.iter()
                .map(|c| {
                    (
                        c.child_type,
                        crate::exact::rational_to_f64(&c.scale),
                        c.offset
                            .iter()
                            .map(crate::exact::rational_to_f64)
                            .collect(),
                    )
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut stack = vec![(root, t.exp(), vec![0.0; scheme.dim], 0usize)];
    while let Some((ptype, scale, offset, depth)) = stack.pop() {
        if scale > 1.0 {
            for (child_type, alpha, child_off) in rules_f[ptype - 1].iter().rev() {
                let off = offset
                    .iter()
                    .zip(child_off)
                    .map(|(o, c)| o + scale * c)
                    .collect();
                stack.push((*child_type, scale * alpha, off, depth + 1));
            }
        } else {
            out.push(FloatTile {
                ptype,
                scale,
                offset,
                depth,
            });
            if out.len() as u64 > budget {
                return Err(FlowError::BudgetExceeded(budget));
            }
        }
    }
    Ok(out)
}

/// A periodic-orbit anchor for a stationary patch tower: a closed path from
/// `root_type` to itself whose designated self-copy lies strictly inside the
/// prototile, together with the interior fixed point of the contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryAnchor {
    pub root_type: usize,
    /// e^s where s is the period of the orbit.
    pub period_u: Rational,
    /// The unique fixed point of the composite contraction, strictly
    /// interior.
    pub control_point: Vec<Rational>,
    /// Rule-child indices of the designated self-copy, one per step.
    pub child_path: Vec<u32>,
}

/// Composite contraction (λ, o) of a closed rule-child path: x ↦ o + λx.
fn composite_map(scheme: &Scheme, root: usize, child_path: &[u32]) -> (Rational, Vec<Rational>) {
    let mut lambda = Rational::one();
    let mut offset = vec![Rational::zero(); scheme.dim];
    let mut ptype = root;
    for &k in child_path {
        let child = &scheme.rule(ptype)[k as usize];
        for (o, c) in offset.iter_mut().zip(&child.offset) {
            *o += &lambda * c;
        }
        lambda *= &child.scale;
        ptype = child.child_type;
    }
    (lambda, offset)
}

/// Enumerates anchors with period at most ln(max_period_u), sorted by period
/// and then by path. Closed paths whose designated copy touches the prototile
/// boundary have their fixed point on that boundary and are rejected.
pub fn find_stationary_anchors(
    scheme: &Scheme,
    root: usize,
    max_period_u: &Rational,
    budget: u64,
) -> Result<Vec<StationaryAnchor>, FlowError> {
    let graph = build_graph(scheme);
    let paths = closed_paths_up_to(&graph, root, max_period_u, budget)?;
    let proto = scheme.prototile(root);
    let mut anchors = Vec::new();
    for path in paths {
        let child_path: Vec<u32> = path
            .iter()
            .map(|&e| graph.edges[e].rule_child_index as u32)
            .collect();
        let (lambda, offset) = composite_map(scheme, root, &child_path);
        let one_minus = Rational::one() - &lambda;
        let control_point: Vec<Rational> = offset.iter().map(|o| o / &one_minus).collect();
        if proto.geometry.locate(&control_point) != crate::geometry::Location::Inside {
            continue;
        }
        // reject copies that share boundary with the prototile
        let copy = proto.geometry.transformed(&lambda, &offset);
        if !strictly_inside(&proto.geometry, &copy) {
            continue;
        }
        anchors.push(StationaryAnchor {
            root_type: root,
            period_u: Rational::one() / lambda,
            control_point,
            child_path,
        });
    }
    anchors.sort_by(|a, b| {
        a.period_u
            .cmp(&b.period_u)
            .then_with(|| a.child_path.cmp(&b.child_path))
    });
    Ok(anchors)
}

/// True when `inner` lies in the open interior of `outer` with no boundary
/// contact at all.
fn strictly_inside(outer: &Geometry, inner: &Geometry) -> bool {
    match (outer, inner) {
        (Geometry::Interval(a, b), Geometry::Interval(c, d)) => a < c && d < b,
        (Geometry::Polygon(out_vs), Geometry::Polygon(in_vs)) => {
            for p in in_vs {
                if outer.locate(&[p[0].clone(), p[1].clone()])
                    != crate::geometry::Location::Inside
                {
                    return false;
                }
            }
            // with all vertices strictly inside, boundary contact requires an
            // edge/edge intersection
            let n_in = in_vs.len();
            let n_out = out_vs.len();
            for i in 0..n_in {
                for j in 0..n_out {
                    if segments_touch(
                        &in_vs[i],
                        &in_vs[(i + 1) % n_in],
                        &out_vs[j],
                        &out_vs[(j + 1) % n_out],
                    ) {
                        return false;
                    }
                }
            }
            true
        }
        _ => false,
    }
}

fn segments_touch(
    a0: &crate::geometry::Point2,
    a1: &crate::geometry::Point2,
    b0: &crate::geometry::Point2,
    b1: &crate::geometry::Point2,
) -> bool {
    // cheap bbox reject, then the exact parametric test
    for k in 0..2 {
        let (alo, ahi) = if a0[k] <= a1[k] {
            (&a0[k], &a1[k])
        } else {
            (&a1[k], &a0[k])
        };
        let (blo, bhi) = if b0[k] <= b1[k] {
            (&b0[k], &b1[k])
        } else {
            (&b1[k], &b0[k])
        };
        if ahi < blo || bhi < alo {
            return false;
        }
    }
    crate::geometry::segments_intersect(a0, a1, b0, b1)
}

/// F_{k·s}(T_i) translated so the anchor's control point sits at the origin.
/// Consecutive orders nest exactly: every tile of order k-1 is a tile of
/// order k.
pub fn stationary_patch(
    scheme: &Scheme,
    anchor: &StationaryAnchor,
    k: usize,
    opts: &GenOptions,
) -> Result<Patch, FlowError> {
    let u_k = anchor.period_u.pow(k as i32);
    let mut patch = generate(
        scheme,
        anchor.root_type,
        &TimePoint::Exact(u_k.clone()),
        opts,
    )?;
    let shift: Vec<Rational> = anchor.control_point.iter().map(|p| -(&u_k * p)).collect();
    for tile in &mut patch.tiles {
        for (o, s) in tile.offset.iter_mut().zip(&shift) {
            *o += s;
        }
    }
    patch.meta.frame_offset = shift;
    Ok(patch)
}

/// One order-m supertile of a stationary patch: the ancestor tile present at
/// generation time (k-m)·s and the indices of the member tiles it spawned.
#[derive(Debug, Clone)]
pub struct SupertileGroup {
    /// Path prefix identifying the ancestor.
    pub prefix: Vec<u32>,
    pub ancestor_type: usize,
    /// Ancestor support scale and offset in patch coordinates.
    pub ancestor_scale: Rational,
    pub ancestor_offset: Vec<Rational>,
    /// Indices into `patch.tiles`.
    pub members: Vec<usize>,
}

/// Groups the tiles of `stationary_patch(k)` by their order-m ancestor, read
/// off each tile's path prefix.
pub fn supertile_decompose(
    scheme: &Scheme,
    patch: &Patch,
    anchor: &StationaryAnchor,
    m: usize,
) -> Result<Vec<SupertileGroup>, FlowError> {
    // recover k from the patch time
    let mut k = 0usize;
    let mut u = Rational::one();
    while u < patch.meta.time_u {
        u *= &anchor.period_u;
        k += 1;
    }
    if u != patch.meta.time_u {
        return Err(FlowError::NotOnAnchorOrbit {
            time: format_rational(&patch.meta.time_u),
            period: format_rational(&anchor.period_u),
        });
    }
    if m > k {
        return Err(FlowError::OrderTooLarge {
            order: m,
            height: k,
        });
    }
    let u_base = anchor.period_u.pow((k - m) as i32);
    let one = Rational::one();
    let mut groups: Vec<SupertileGroup> = Vec::new();
    let mut index: std::collections::HashMap<Vec<u32>, usize> = std::collections::HashMap::new();
    for (tile_idx, tile) in patch.tiles.iter().enumerate() {
        // shortest prefix whose tile was completed at time (k-m)·s
        let mut scale = u_base.clone();
        let mut ptype = patch.meta.root_type;
        let mut cut = tile.path.len();
        if scale <= one {
            cut = 0;
        } else {
            for (pos, &c) in tile.path.iter().enumerate() {
                let child = &scheme.rule(ptype)[c as usize];
                scale *= &child.scale;
                ptype = child.child_type;
                if scale <= one {
                    cut = pos + 1;
                    break;
                }
            }
        }
        let prefix = tile.path[..cut].to_vec();
        let entry = index.entry(prefix.clone()).or_insert_with(|| {
            // ancestor frame in patch coordinates
            let (lambda, rel_offset) = composite_map(scheme, patch.meta.root_type, &prefix);
            let anc_scale = &patch.meta.time_u * &lambda;
            let anc_offset: Vec<Rational> = patch
                .meta
                .frame_offset
                .iter()
                .zip(&rel_offset)
                .map(|(f, r)| f + &patch.meta.time_u * r)
                .collect();
            let mut pt = patch.meta.root_type;
            for &c in &prefix {
                pt = scheme.rule(pt)[c as usize].child_type;
            }
            groups.push(SupertileGroup {
                prefix,
                ancestor_type: pt,
                ancestor_scale: anc_scale,
                ancestor_offset: anc_offset,
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[*entry].members.push(tile_idx);
    }
    groups.sort_by(|a, b| a.prefix.cmp(&b.prefix));
    Ok(groups)
}

/// Canonical ordering key for tiles: by type, scale, then offset. Used for
/// exact tile-set comparisons.
pub fn tile_sort_key(a: &PlacedTile, b: &PlacedTile) -> Ordering {
    a.ptype
        .cmp(&b.ptype)
        .then_with(|| a.scale.cmp(&b.scale))
        .then_with(|| {
            for (x, y) in a.offset.iter().zip(&b.offset) {
                let c = x.cmp(y);
                if c != Ordering::Equal {
                    return c;
                }
            }
            Ordering::Equal
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational_from_ints as q;
    use crate::graph::path_count_oracle;
    use crate::scheme::bundled;

    fn gen(scheme: &Scheme, root: usize, num: i64, den: i64) -> Patch {
        generate(
            scheme,
            root,
            &TimePoint::Exact(q(num, den)),
            &GenOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn time_zero_is_the_prototile() {
        let patch = gen(&bundled::square(), 1, 1, 1);
        assert_eq!(patch.tiles.len(), 1);
        assert_eq!(patch.tiles[0].scale, q(1, 1));
        assert!(patch.tiles[0].path.is_empty());
    }

    #[test]
    fn square_one_substitution_step() {
        let patch = gen(&bundled::square(), 1, 5, 3);
        assert_eq!(patch.tiles.len(), 17);
        let unit = patch.tiles.iter().filter(|t| t.scale == q(1, 1)).count();
        let third = patch.tiles.iter().filter(|t| t.scale == q(1, 3)).count();
        assert_eq!((unit, third), (1, 16));
        assert_eq!(patch.volume(), q(25, 9));
    }

    #[test]
    fn kakutani_fig_six_patches() {
        let scheme = bundled::kakutani_1_3();
        let middle = gen(&scheme, 1, 3, 2);
        assert_eq!(middle.tiles.len(), 2);
        let mut scales: Vec<Rational> = middle.tiles.iter().map(|t| t.scale.clone()).collect();
        scales.sort();
        assert_eq!(scales, vec![q(1, 2), q(1, 1)]);
        let right = gen(&scheme, 1, 9, 4);
        assert_eq!(right.tiles.len(), 3);
        let mut scales: Vec<Rational> = right.tiles.iter().map(|t| t.scale.clone()).collect();
        scales.sort();
        assert_eq!(scales, vec![q(1, 2), q(3, 4), q(1, 1)]);
        assert_eq!(right.volume(), q(9, 4));
    }

    #[test]
    fn tie_at_unit_volume_is_not_substituted() {
        // u = 5: the central chain hits scale exactly 3 then 9/5... pick u=5/3·5/3
        let patch = gen(&bundled::square(), 1, 25, 9);
        // tiles at scale exactly 1 exist (central child twice) and are whole
        assert!(patch.tiles.iter().any(|t| t.scale == q(1, 1)));
        for t in &patch.tiles {
            assert!(t.scale <= q(1, 1));
        }
    }

    #[test]
    fn patch_matches_oracle_across_schemes() {
        for scheme in bundled::all() {
            let graph = build_graph(&scheme);
            for (num, den) in [(1i64, 1i64), (3, 2), (4, 1), (17, 3), (12, 1)] {
                let patch = gen(&scheme, 1, num, den);
                let count = path_count_oracle(&graph, 1, &q(num, den), 10_000_000).unwrap();
                assert_eq!(patch.tiles.len() as u64, count, "{} at {num}/{den}", scheme.name);
            }
        }
    }

    #[test]
    fn volume_conservation_exact() {
        for scheme in bundled::all() {
            let d = scheme.dim as i32;
            for (num, den) in [(7i64, 2i64), (9, 1), (31, 4)] {
                let patch = gen(&scheme, 1, num, den);
                assert_eq!(patch.volume(), q(num, den).pow(d));
            }
        }
    }

    #[test]
    fn legal_scale_window() {
        let scheme = bundled::triangles();
        let patch = gen(&scheme, 1, 50, 1);
        for t in &patch.tiles {
            assert!(t.scale > q(1, 5) && t.scale <= q(1, 1));
        }
    }

    #[test]
    fn workers_do_not_change_output() {
        let scheme = bundled::triangles();
        let a = generate(
            &scheme,
            1,
            &TimePoint::Exact(q(40, 1)),
            &GenOptions {
                budget: DEFAULT_TILE_BUDGET,
                workers: 1,
            },
        )
        .unwrap();
        let b = generate(
            &scheme,
            1,
            &TimePoint::Exact(q(40, 1)),
            &GenOptions {
                budget: DEFAULT_TILE_BUDGET,
                workers: 8,
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_is_enforced() {
        let err = generate(
            &bundled::square(),
            1,
            &TimePoint::Exact(q(100, 1)),
            &GenOptions {
                budget: 100,
                workers: 1,
            },
        );
        assert!(matches!(err, Err(FlowError::BudgetExceeded(100))));
    }

    #[test]
    fn square_anchor_is_the_center() {
        let scheme = bundled::square();
        let anchors = find_stationary_anchors(&scheme, 1, &q(5, 3), 100_000).unwrap();
        assert_eq!(anchors.len(), 1);
        let a = &anchors[0];
        assert_eq!(a.period_u, q(5, 3));
        assert_eq!(a.control_point, vec![q(1, 2), q(1, 2)]);
        assert_eq!(a.child_path, vec![0]);
    }

    #[test]
    fn corner_children_are_rejected() {
        // all 1/5 ring children of the square have boundary fixed points, so
        // only the central 3/5 child anchors even at horizon ln 5
        let scheme = bundled::square();
        let anchors = find_stationary_anchors(&scheme, 1, &q(5, 1), 100_000).unwrap();
        assert!(anchors.iter().all(|a| a.child_path == vec![0]));
    }

    #[test]
    fn triangle_ln5_anchor_exists() {
        let scheme = bundled::triangles();
        let anchors = find_stationary_anchors(&scheme, 1, &q(5, 1), 100_000).unwrap();
        let ln5: Vec<_> = anchors.iter().filter(|a| a.period_u == q(5, 1)).collect();
        assert!(!ln5.is_empty());
        // the single-edge ones contract to the two interior 1/5 U children
        let single: Vec<_> = ln5.iter().filter(|a| a.child_path.len() == 1).collect();
        assert_eq!(single.len(), 2);
        assert_eq!(single[0].control_point, vec![q(1, 2), q(1, 4)]);
        assert_eq!(single[1].control_point, vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn kakutani_anchors_need_two_edges() {
        let scheme = bundled::kakutani_1_3();
        let anchors = find_stationary_anchors(&scheme, 1, &q(9, 2), 100_000).unwrap();
        assert!(!anchors.is_empty());
        assert!(anchors.iter().all(|a| a.child_path.len() >= 2));
        let points: Vec<_> = anchors.iter().map(|a| a.control_point[0].clone()).collect();
        assert!(points.contains(&q(1, 7)) || points.contains(&q(3, 7)));
    }

    #[test]
    fn fixed_half_anchor_needs_two_edges() {
        let scheme = bundled::fixed_half();
        let none = find_stationary_anchors(&scheme, 1, &q(2, 1), 100_000).unwrap();
        assert!(none.is_empty());
        let some = find_stationary_anchors(&scheme, 1, &q(4, 1), 100_000).unwrap();
        assert!(!some.is_empty());
        assert_eq!(some[0].period_u, q(4, 1));
    }

    #[test]
    fn stationary_nesting_square() {
        let scheme = bundled::square();
        let anchor = find_stationary_anchors(&scheme, 1, &q(5, 3), 1000).unwrap()[0].clone();
        let opts = GenOptions::default();
        let p0 = stationary_patch(&scheme, &anchor, 0, &opts).unwrap();
        assert_eq!(p0.tiles.len(), 1);
        assert_eq!(p0.tiles[0].offset, vec![q(-1, 2), q(-1, 2)]);
        let mut prev = p0;
        for k in 1..=4 {
            let next = stationary_patch(&scheme, &anchor, k, &opts).unwrap();
            let set: std::collections::HashSet<(usize, Rational, Vec<Rational>)> = next
                .tiles
                .iter()
                .map(|t| (t.ptype, t.scale.clone(), t.offset.clone()))
                .collect();
            for t in &prev.tiles {
                assert!(
                    set.contains(&(t.ptype, t.scale.clone(), t.offset.clone())),
                    "nesting broken at k={k}"
                );
            }
            prev = next;
        }
    }

    #[test]
    fn stationary_nesting_triangle_small() {
        let scheme = bundled::triangles();
        let anchors = find_stationary_anchors(&scheme, 1, &q(5, 1), 100_000).unwrap();
        let anchor = anchors
            .iter()
            .find(|a| a.period_u == q(5, 1))
            .unwrap()
            .clone();
        let opts = GenOptions::default();
        let p1 = stationary_patch(&scheme, &anchor, 1, &opts).unwrap();
        let p2 = stationary_patch(&scheme, &anchor, 2, &opts).unwrap();
        let set: std::collections::HashSet<(usize, Rational, Vec<Rational>)> = p2
            .tiles
            .iter()
            .map(|t| (t.ptype, t.scale.clone(), t.offset.clone()))
            .collect();
        for t in &p1.tiles {
            assert!(set.contains(&(t.ptype, t.scale.clone(), t.offset.clone())));
        }
        // k=1 contains F_0(U) as the central sub-tile
        let set1: std::collections::HashSet<(usize, Rational, Vec<Rational>)> = p1
            .tiles
            .iter()
            .map(|t| (t.ptype, t.scale.clone(), t.offset.clone()))
            .collect();
        let p0 = stationary_patch(&scheme, &anchor, 0, &opts).unwrap();
        assert!(set1.contains(&(
            p0.tiles[0].ptype,
            p0.tiles[0].scale.clone(),
            p0.tiles[0].offset.clone()
        )));
    }

    #[test]
    fn supertile_groups_conserve_volume() {
        let scheme = bundled::square();
        let anchor = find_stationary_anchors(&scheme, 1, &q(5, 3), 1000).unwrap()[0].clone();
        let opts = GenOptions::default();
        let p2 = stationary_patch(&scheme, &anchor, 2, &opts).unwrap();
        let groups = supertile_decompose(&scheme, &p2, &anchor, 1).unwrap();
        assert_eq!(groups.len(), 17);
        let d = scheme.dim as i32;
        for g in &groups {
            let sum: Rational = g
                .members
                .iter()
                .map(|&i| p2.tiles[i].scale.pow(d))
                .sum();
            assert_eq!(sum, g.ancestor_scale.pow(d));
        }
        // m = 0: each tile is its own group
        let identity = supertile_decompose(&scheme, &p2, &anchor, 0).unwrap();
        assert_eq!(identity.len(), p2.tiles.len());
        // m > k errors
        assert!(matches!(
            supertile_decompose(&scheme, &p2, &anchor, 3),
            Err(FlowError::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn float_mode_roughly_agrees() {
        let scheme = bundled::square();
        let exact = gen(&scheme, 1, 5, 3).tiles.len();
        // slightly below ln(5/3): same combinatorics by left-continuity
        let approx = generate_float(&scheme, 1, (5.0f64 / 3.0).ln() - 1e-9, 100_000)
            .unwrap()
            .len();
        assert_eq!(exact, approx);
        // slightly above, the unit-volume central tile has been substituted
        let above = generate_float(&scheme, 1, (5.0f64 / 3.0).ln() + 1e-9, 100_000)
            .unwrap()
            .len();
        assert_eq!(above, 33);
    }
}
