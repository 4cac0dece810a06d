//! Exact rational geometry for tiles: intervals on the line and simple
//! polygons in the plane. Everything here is decided with big-rational
//! predicates; no floating point enters validation.

use crate::exact::Rational;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;

pub type Point2 = [Rational; 2];

/// Tile geometry. `Interval` is the 1-dimensional case, `Polygon` a simple
/// (non-self-intersecting) polygon given by its vertex cycle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Geometry {
    Interval(Rational, Rational),
    Polygon(Vec<Point2>),
}

/// Where a point sits relative to a closed region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

fn orient(a: &Point2, b: &Point2, c: &Point2) -> Ordering {
    let cross = (&b[0] - &a[0]) * (&c[1] - &a[1]) - (&b[1] - &a[1]) * (&c[0] - &a[0]);
    cross.cmp(&Rational::zero())
}

fn on_segment(p: &Point2, a: &Point2, b: &Point2) -> bool {
    if orient(a, b, p) != Ordering::Equal {
        return false;
    }
    let in_range = |x: &Rational, lo: &Rational, hi: &Rational| {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        lo <= x && x <= hi
    };
    in_range(&p[0], &a[0], &b[0]) && in_range(&p[1], &a[1], &b[1])
}

/// Intersection parameters of segment `a0a1` with segment `b0b1`, expressed
/// as exact parameters `t` along `a0a1` (0 at `a0`, 1 at `a1`). Collinear
/// overlaps return the clipped overlap endpoints.
fn intersection_params(a0: &Point2, a1: &Point2, b0: &Point2, b1: &Point2) -> Vec<Rational> {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);

    if d1 == Ordering::Equal && d2 == Ordering::Equal {
        // collinear: project b0, b1 onto a's parameter line
        let dir = [&a1[0] - &a0[0], &a1[1] - &a0[1]];
        let len2 = &dir[0] * &dir[0] + &dir[1] * &dir[1];
        if len2.is_zero() {
            return Vec::new();
        }
        let param = |p: &Point2| {
            ((&p[0] - &a0[0]) * &dir[0] + (&p[1] - &a0[1]) * &dir[1]) / len2.clone()
        };
        let (mut t0, mut t1) = (param(b0), param(b1));
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let zero = Rational::zero();
        let one = Rational::from_integer(1.into());
        let lo = if t0 < zero { zero } else { t0 };
        let hi = if t1 > one { one } else { t1 };
        if lo > hi {
            return Vec::new();
        }
        if lo == hi {
            return vec![lo];
        }
        return vec![lo, hi];
    }

    let straddles_a = d1 != d2 || d1 == Ordering::Equal || d2 == Ordering::Equal;
    let straddles_b = d3 != d4 || d3 == Ordering::Equal || d4 == Ordering::Equal;
    if !(straddles_a && straddles_b) {
        return Vec::new();
    }
    // lines are not parallel here; solve for t on a
    let r = [&a1[0] - &a0[0], &a1[1] - &a0[1]];
    let s = [&b1[0] - &b0[0], &b1[1] - &b0[1]];
    let denom = &r[0] * &s[1] - &r[1] * &s[0];
    if denom.is_zero() {
        return Vec::new();
    }
    let qp = [&b0[0] - &a0[0], &b0[1] - &a0[1]];
    let t = (&qp[0] * &s[1] - &qp[1] * &s[0]) / denom.clone();
    let u = (&qp[0] * &r[1] - &qp[1] * &r[0]) / denom;
    let zero = Rational::zero();
    let one = Rational::from_integer(1.into());
    if t < zero || t > one || u < zero || u > one {
        return Vec::new();
    }
    vec![t]
}

/// True when the closed segments meet in at least one point.
pub fn segments_intersect(a0: &Point2, a1: &Point2, b0: &Point2, b1: &Point2) -> bool {
    !intersection_params(a0, a1, b0, b1).is_empty()
}

fn point_in_polygon(p: &Point2, vertices: &[Point2]) -> Location {
    let n = vertices.len();
    for i in 0..n {
        if on_segment(p, &vertices[i], &vertices[(i + 1) % n]) {
            return Location::Boundary;
        }
    }
    // crossing number with exact x-intersections
    let mut inside = false;
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            // x coordinate of the edge at height p.y
            let x = &a[0] + (&p[1] - &a[1]) * (&b[0] - &a[0]) / (&b[1] - &a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

fn lerp(a: &Point2, b: &Point2, t: &Rational) -> Point2 {
    [&a[0] + t * (&b[0] - &a[0]), &a[1] + t * (&b[1] - &a[1])]
}

fn midpoint(a: &Point2, b: &Point2) -> Point2 {
    let half = Rational::new(1.into(), 2.into());
    [
        (&a[0] + &b[0]) * half.clone(),
        (&a[1] + &b[1]) * half.clone(),
    ]
}

/// Splits edge `a0a1` at every intersection with the boundary of `poly` and
/// reports the midpoints of the resulting sub-segments.
fn sub_segment_midpoints(a0: &Point2, a1: &Point2, poly: &[Point2]) -> Vec<Point2> {
    let n = poly.len();
    let mut params = vec![Rational::zero(), Rational::from_integer(1.into())];
    for i in 0..n {
        params.extend(intersection_params(a0, a1, &poly[i], &poly[(i + 1) % n]));
    }
    params.sort();
    params.dedup();
    params
        .windows(2)
        .map(|w| {
            let two = Rational::from_integer(2.into());
            let mid = (&w[0] + &w[1]) / two;
            lerp(a0, a1, &mid)
        })
        .collect()
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Interval(..) => 1,
            Geometry::Polygon(..) => 2,
        }
    }

    /// Length of an interval; shoelace area of a polygon. Exact.
    pub fn volume(&self) -> Rational {
        match self {
            Geometry::Interval(a, b) => b - a,
            Geometry::Polygon(vs) => {
                let n = vs.len();
                let mut acc = Rational::zero();
                for i in 0..n {
                    let j = (i + 1) % n;
                    acc += &vs[i][0] * &vs[j][1] - &vs[j][0] * &vs[i][1];
                }
                (acc / Rational::from_integer(2.into())).abs()
            }
        }
    }

    /// Structural sanity: nondegenerate interval, or a simple polygon whose
    /// non-adjacent edges are disjoint and adjacent edges meet only at the
    /// shared vertex.
    pub fn is_simple(&self) -> bool {
        match self {
            Geometry::Interval(a, b) => a < b,
            Geometry::Polygon(vs) => {
                let n = vs.len();
                if n < 3 {
                    return false;
                }
                for i in 0..n {
                    if vs[i] == vs[(i + 1) % n] {
                        return false;
                    }
                }
                for i in 0..n {
                    let (a0, a1) = (&vs[i], &vs[(i + 1) % n]);
                    for j in (i + 1)..n {
                        let (b0, b1) = (&vs[j], &vs[(j + 1) % n]);
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        let params = intersection_params(a0, a1, b0, b1);
                        if adjacent {
                            if params.len() > 1 {
                                return false; // collinear overlap
                            }
                            if params.len() == 1 {
                                let p = lerp(a0, a1, &params[0]);
                                let shared = if j == i + 1 { a1 } else { a0 };
                                if &p != shared {
                                    return false;
                                }
                            }
                        } else if !params.is_empty() {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    pub fn locate(&self, p: &[Rational]) -> Location {
        match self {
            Geometry::Interval(a, b) => {
                let x = &p[0];
                if x < a || x > b {
                    Location::Outside
                } else if x == a || x == b {
                    Location::Boundary
                } else {
                    Location::Inside
                }
            }
            Geometry::Polygon(vs) => point_in_polygon(&[p[0].clone(), p[1].clone()], vs),
        }
    }

    /// A rational point strictly interior to the region.
    pub fn interior_point(&self) -> Vec<Rational> {
        match self {
            Geometry::Interval(a, b) => {
                vec![(a + b) / Rational::from_integer(2.into())]
            }
            Geometry::Polygon(vs) => {
                let n = vs.len();
                // v = lexicographically smallest vertex (a strictly convex corner)
                let vi = (0..n)
                    .min_by(|&i, &j| {
                        (&vs[i][0], &vs[i][1]).cmp(&(&vs[j][0], &vs[j][1]))
                    })
                    .unwrap();
                let a = &vs[(vi + n - 1) % n];
                let v = &vs[vi];
                let b = &vs[(vi + 1) % n];
                let in_closed_triangle = |p: &Point2| {
                    let d1 = orient(a, v, p);
                    let d2 = orient(v, b, p);
                    let d3 = orient(b, a, p);
                    let all = [d1, d2, d3];
                    let has_pos = all.contains(&Ordering::Greater);
                    let has_neg = all.contains(&Ordering::Less);
                    !(has_pos && has_neg)
                };
                let mut best: Option<(&Point2, Rational)> = None;
                for (k, q) in vs.iter().enumerate() {
                    if k == vi || k == (vi + n - 1) % n || k == (vi + 1) % n {
                        continue;
                    }
                    if in_closed_triangle(q) {
                        let d2 = (&q[0] - &v[0]) * (&q[0] - &v[0])
                            + (&q[1] - &v[1]) * (&q[1] - &v[1]);
                        if best.as_ref().map(|(_, bd)| &d2 < bd).unwrap_or(true) {
                            best = Some((q, d2));
                        }
                    }
                }
                let p = match best {
                    Some((q, _)) => midpoint(v, q),
                    None => {
                        let three = Rational::from_integer(3.into());
                        [
                            (&a[0] + &v[0] + &b[0]) / three.clone(),
                            (&a[1] + &v[1] + &b[1]) / three,
                        ]
                    }
                };
                debug_assert_eq!(self.locate(&p), Location::Inside);
                p.to_vec()
            }
        }
    }

    /// The image under `x ↦ scale·x + offset`.
    pub fn transformed(&self, scale: &Rational, offset: &[Rational]) -> Geometry {
        match self {
            Geometry::Interval(a, b) => {
                Geometry::Interval(a * scale + &offset[0], b * scale + &offset[0])
            }
            Geometry::Polygon(vs) => Geometry::Polygon(
                vs.iter()
                    .map(|p| [&p[0] * scale + &offset[0], &p[1] * scale + &offset[1]])
                    .collect(),
            ),
        }
    }

    /// Exact closed containment: every point of `inner` lies in `self`.
    pub fn contains_geometry(&self, inner: &Geometry) -> bool {
        match (self, inner) {
            (Geometry::Interval(a, b), Geometry::Interval(c, d)) => a <= c && d <= b,
            (Geometry::Polygon(outer), Geometry::Polygon(vs)) => {
                for p in vs {
                    if point_in_polygon(p, outer) == Location::Outside {
                        return false;
                    }
                }
                let n = vs.len();
                for i in 0..n {
                    for mid in sub_segment_midpoints(&vs[i], &vs[(i + 1) % n], outer) {
                        if point_in_polygon(&mid, outer) == Location::Outside {
                            return false;
                        }
                    }
                }
                true
            }
            _ => false,
        }
    }

    /// Exact test that the open interiors of two regions are disjoint.
    pub fn interiors_disjoint(&self, other: &Geometry) -> bool {
        match (self, other) {
            (Geometry::Interval(a, b), Geometry::Interval(c, d)) => b <= c || d <= a,
            (Geometry::Polygon(pa), Geometry::Polygon(pb)) => {
                let (alo, ahi) = self.bbox();
                let (blo, bhi) = other.bbox();
                for k in 0..2 {
                    if ahi[k] <= blo[k] || bhi[k] <= alo[k] {
                        return true;
                    }
                }
                let witness_inside = |edges: &[Point2], poly: &[Point2]| {
                    let n = edges.len();
                    for i in 0..n {
                        for mid in sub_segment_midpoints(&edges[i], &edges[(i + 1) % n], poly) {
                            if point_in_polygon(&mid, poly) == Location::Inside {
                                return true;
                            }
                        }
                    }
                    false
                };
                if witness_inside(pa, pb) || witness_inside(pb, pa) {
                    return false;
                }
                let ia = self.interior_point();
                if point_in_polygon(&[ia[0].clone(), ia[1].clone()], pb) == Location::Inside {
                    return false;
                }
                let ib = other.interior_point();
                if point_in_polygon(&[ib[0].clone(), ib[1].clone()], pa) == Location::Inside {
                    return false;
                }
                true
            }
            _ => true,
        }
    }

    /// Axis-aligned bounding box as (min, max) coordinate vectors.
    pub fn bbox(&self) -> (Vec<Rational>, Vec<Rational>) {
        match self {
            Geometry::Interval(a, b) => (vec![a.clone()], vec![b.clone()]),
            Geometry::Polygon(vs) => {
                let mut lo = vs[0].clone();
                let mut hi = vs[0].clone();
                for p in vs.iter().skip(1) {
                    for k in 0..2 {
                        if p[k] < lo[k] {
                            lo[k] = p[k].clone();
                        }
                        if p[k] > hi[k] {
                            hi[k] = p[k].clone();
                        }
                    }
                }
                (lo.to_vec(), hi.to_vec())
            }
        }
    }

    /// Closed containment in an axis box (boxes are convex, so vertex checks
    /// suffice).
    pub fn inside_box(&self, lo: &[Rational], hi: &[Rational]) -> bool {
        let (glo, ghi) = self.bbox();
        (0..self.dim()).all(|k| lo[k] <= glo[k] && ghi[k] <= hi[k])
    }

    /// True when the region meets the closed axis box.
    pub fn intersects_box(&self, lo: &[Rational], hi: &[Rational]) -> bool {
        match self {
            Geometry::Interval(a, b) => !(b < &lo[0] || a > &hi[0]),
            Geometry::Polygon(_) => {
                let (glo, ghi) = self.bbox();
                for k in 0..2 {
                    if ghi[k] < lo[k] || glo[k] > hi[k] {
                        return false;
                    }
                }
                let box_poly = Geometry::Polygon(vec![
                    [lo[0].clone(), lo[1].clone()],
                    [hi[0].clone(), lo[1].clone()],
                    [hi[0].clone(), hi[1].clone()],
                    [lo[0].clone(), hi[1].clone()],
                ]);
                // they meet iff interiors overlap or a boundary point of one
                // lies in the other; bbox overlap plus disjoint interiors can
                // still touch, which counts as intersecting here
                if !self.interiors_disjoint(&box_poly) {
                    return true;
                }
                // touching: some vertex of one on/in the other
                if let Geometry::Polygon(vs) = self {
                    if vs
                        .iter()
                        .any(|p| box_poly.locate(&[p[0].clone(), p[1].clone()]) != Location::Outside)
                    {
                        return true;
                    }
                }
                if let Geometry::Polygon(bvs) = &box_poly {
                    if bvs
                        .iter()
                        .any(|p| self.locate(&[p[0].clone(), p[1].clone()]) != Location::Outside)
                    {
                        return true;
                    }
                }
                false
            }
        }
    }
}
