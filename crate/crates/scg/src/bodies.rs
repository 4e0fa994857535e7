//! Candidate sets Ω: convex polygons, intersections of congruent disks,
//! membership predicates and occupancy grids, each with membership, signed
//! boundary distance, normal cones and diameter queries behind the common
//! [`Body`] interface.

use crate::geom::{norm_angle, Aabb, Point, Tolerance, UnitVector, Vec2};
use crate::minball::min_enclosing_circle;
use crate::rng::CounterRng;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

const TWO_PI: f64 = 2.0 * PI;

fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq < 1e-300 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

// ---------------------------------------------------------------------------
// Convex polygon
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    Point,
    Segment,
    Proper,
}

/// Closed convex polygon with counterclockwise vertices.
///
/// Single points and segments are accepted and flagged degenerate. Clockwise
/// input is reoriented; collinear middle vertices are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    verts: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyBody);
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction("non-finite vertex".into()));
        }
        let scale = vertices
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1.0f64, f64::max);
        let eq_tol = 1e-12 * scale;

        // drop consecutive (and wrap-around) duplicates
        let mut verts: Vec<Vec2> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if verts.last().map_or(true, |l| l.dist(v) > eq_tol) {
                verts.push(v);
            }
        }
        while verts.len() > 1 && verts[0].dist(*verts.last().unwrap()) <= eq_tol {
            verts.pop();
        }
        if verts.len() <= 2 {
            return Ok(ConvexPolygon { verts });
        }

        // orientation
        let area2: f64 = verts
            .windows(2)
            .map(|w| w[0].cross(w[1]))
            .sum::<f64>()
            + verts.last().unwrap().cross(verts[0]);
        if area2 < 0.0 {
            verts.reverse();
        }

        // merge collinear middles, then require strict convexity
        let turn_tol = 1e-12 * scale * scale;
        let mut cleaned: Vec<Vec2> = Vec::with_capacity(verts.len());
        let n = verts.len();
        for i in 0..n {
            let prev = verts[(i + n - 1) % n];
            let next = verts[(i + 1) % n];
            let turn = (verts[i] - prev).cross(next - verts[i]);
            if turn.abs() <= turn_tol && (verts[i] - prev).dot(next - verts[i]) > 0.0 {
                continue; // collinear middle vertex
            }
            cleaned.push(verts[i]);
        }
        if cleaned.len() <= 2 {
            // all input collinear: keep the extreme pair as a segment
            let mut all = verts;
            all.sort_by(|a, b| a.lex_cmp(*b));
            let seg = vec![all[0], *all.last().unwrap()];
            return Ok(ConvexPolygon { verts: seg });
        }
        let m = cleaned.len();
        for i in 0..m {
            let turn =
                (cleaned[(i + 1) % m] - cleaned[i]).cross(cleaned[(i + 2) % m] - cleaned[(i + 1) % m]);
            if turn <= turn_tol {
                return Err(Error::Construction(format!(
                    "vertices are not in strictly convex position (turn {turn} at index {i})"
                )));
            }
        }
        Ok(ConvexPolygon { verts: cleaned })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.verts
    }

    pub fn degeneracy(&self) -> Degeneracy {
        match self.verts.len() {
            1 => Degeneracy::Point,
            2 => Degeneracy::Segment,
            _ => Degeneracy::Proper,
        }
    }

    fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.verts.len();
        (0..n).map(move |i| (self.verts[i], self.verts[(i + 1) % n]))
    }

    pub fn contains(&self, p: Vec2, tol: &Tolerance) -> bool {
        match self.degeneracy() {
            Degeneracy::Point => p.dist(self.verts[0]) <= tol.abs_geom,
            Degeneracy::Segment => {
                dist_point_segment(p, self.verts[0], self.verts[1]) <= tol.abs_geom
            }
            Degeneracy::Proper => self.edges().all(|(a, b)| {
                let e = b - a;
                e.cross(p - a) >= -tol.abs_geom * e.norm()
            }),
        }
    }

    /// Signed distance: positive inside, negative outside, zero on the
    /// boundary (snapped within `abs_geom`).
    pub fn signed_distance(&self, p: Vec2, tol: &Tolerance) -> f64 {
        let d = match self.degeneracy() {
            Degeneracy::Point => -p.dist(self.verts[0]),
            Degeneracy::Segment => -dist_point_segment(p, self.verts[0], self.verts[1]),
            Degeneracy::Proper => {
                let bd = self
                    .edges()
                    .map(|(a, b)| dist_point_segment(p, a, b))
                    .fold(f64::INFINITY, f64::min);
                let inside = self.edges().all(|(a, b)| (b - a).cross(p - a) >= 0.0);
                if inside {
                    bd
                } else {
                    -bd
                }
            }
        };
        if d.abs() <= tol.abs_geom {
            0.0
        } else {
            d
        }
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.verts.len() {
            for j in (i + 1)..self.verts.len() {
                best = best.max(self.verts[i].dist(self.verts[j]));
            }
        }
        best
    }

    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::new(0.0, 0.0);
        for v in &self.verts {
            c = c + *v;
        }
        c * (1.0 / self.verts.len() as f64)
    }

    pub fn bbox(&self) -> Aabb {
        let (mut xlo, mut ylo, mut xhi, mut yhi) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.verts {
            xlo = xlo.min(v.x);
            ylo = ylo.min(v.y);
            xhi = xhi.max(v.x);
            yhi = yhi.max(v.y);
        }
        Aabb::of_2d(xlo, ylo, xhi, yhi)
    }

    pub fn normal_cone(&self, x: Vec2, tol: &Tolerance) -> Result<NormalCone> {
        match self.degeneracy() {
            Degeneracy::Point => Err(Error::Domain(
                "normal cone of a single point is all directions".into(),
            )),
            Degeneracy::Segment => {
                let (a, b) = (self.verts[0], self.verts[1]);
                if dist_point_segment(x, a, b) > tol.abs_geom {
                    return Err(Error::NotOnBoundary);
                }
                let dir = (b - a).normalized()?;
                Ok(NormalCone::two(
                    x.to_point(),
                    UnitVector::from_vec2(dir.perp())?,
                    UnitVector::from_vec2(-dir.perp())?,
                ))
            }
            Degeneracy::Proper => {
                let n = self.verts.len();
                // vertex hit?
                for (i, v) in self.verts.iter().enumerate() {
                    if x.dist(*v) <= tol.abs_geom {
                        let prev = self.verts[(i + n - 1) % n];
                        let next = self.verts[(i + 1) % n];
                        let n_in = Self::outward_normal(prev, *v)?;
                        let n_out = Self::outward_normal(*v, next)?;
                        return Ok(NormalCone::two(x.to_point(), n_in, n_out));
                    }
                }
                for (a, b) in self.edges() {
                    if dist_point_segment(x, a, b) <= tol.abs_geom {
                        return Ok(NormalCone::one(x.to_point(), Self::outward_normal(a, b)?));
                    }
                }
                Err(Error::NotOnBoundary)
            }
        }
    }

    fn outward_normal(a: Vec2, b: Vec2) -> Result<UnitVector> {
        // interior lies to the left of a→b, so outward is the clockwise perp
        UnitVector::from_vec2(-(b - a).perp().normalized()?)
    }

    /// Largest convex-position exit along a ray from an interior point.
    fn ray_exit(&self, p: Vec2, dir: Vec2) -> f64 {
        let mut t_exit = f64::INFINITY;
        for (a, b) in self.edges() {
            let e = b - a;
            let n = Vec2::new(e.y, -e.x); // outward
            let denom = n.dot(dir);
            if denom > 1e-300 {
                let t = n.dot(a - p) / denom;
                t_exit = t_exit.min(t.max(0.0));
            }
        }
        t_exit
    }
}

// ---------------------------------------------------------------------------
// Circular arc
// ---------------------------------------------------------------------------

/// Arc of a circle, swept counterclockwise from `start_angle` by `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularArc {
    pub center: Vec2,
    pub radius: f64,
    pub start_angle: f64,
    pub sweep: f64,
}

impl CircularArc {
    pub fn new(center: Vec2, radius: f64, start_angle: f64, sweep: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("arc radius {radius} must be positive")));
        }
        if !(sweep > 0.0 && sweep <= TWO_PI + 1e-9) {
            return Err(Error::Domain(format!("arc sweep {sweep} outside (0, 2π]")));
        }
        Ok(CircularArc {
            center,
            radius,
            start_angle: norm_angle(start_angle),
            sweep: sweep.min(TWO_PI),
        })
    }

    pub fn full_circle(center: Vec2, radius: f64) -> Result<Self> {
        Self::new(center, radius, 0.0, TWO_PI)
    }

    pub fn end_angle(&self) -> f64 {
        self.start_angle + self.sweep
    }

    pub fn point_at_angle(&self, a: f64) -> Vec2 {
        self.center + Vec2::from_angle(a) * self.radius
    }

    /// Point at fraction `t ∈ [0, 1]` of the sweep.
    pub fn point_at(&self, t: f64) -> Vec2 {
        self.point_at_angle(self.start_angle + t * self.sweep)
    }

    pub fn start_point(&self) -> Vec2 {
        self.point_at(0.0)
    }

    pub fn end_point(&self) -> Vec2 {
        self.point_at(1.0)
    }

    pub fn contains_angle(&self, a: f64, ang_tol: f64) -> bool {
        if self.sweep >= TWO_PI - 1e-12 {
            return true;
        }
        let rel = norm_angle(a - self.start_angle);
        rel <= self.sweep + ang_tol || rel >= TWO_PI - ang_tol
    }

    pub fn dist_to_point(&self, p: Vec2) -> f64 {
        let v = p - self.center;
        if v.norm() > 1e-300 && self.contains_angle(v.angle(), 0.0) {
            (v.norm() - self.radius).abs()
        } else {
            p.dist(self.start_point()).min(p.dist(self.end_point()))
        }
    }

    /// Farthest arc point from `q`.
    pub fn farthest_from(&self, q: Vec2) -> Vec2 {
        let away = self.center - q;
        if away.norm() > 1e-300 {
            let a = away.angle();
            if self.contains_angle(a, 0.0) {
                return self.point_at_angle(a);
            }
        }
        let (s, e) = (self.start_point(), self.end_point());
        if q.dist(s) >= q.dist(e) {
            s
        } else {
            e
        }
    }

    pub fn bbox(&self) -> Aabb {
        let mut pts = vec![self.start_point(), self.end_point()];
        for k in 0..4 {
            let a = k as f64 * PI / 2.0;
            if self.contains_angle(a, 0.0) {
                pts.push(self.point_at_angle(a));
            }
        }
        let (mut xlo, mut ylo, mut xhi, mut yhi) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            xlo = xlo.min(p.x);
            ylo = ylo.min(p.y);
            xhi = xhi.max(p.x);
            yhi = yhi.max(p.y);
        }
        Aabb::of_2d(xlo, ylo, xhi, yhi)
    }
}

// ---------------------------------------------------------------------------
// Disk polygon: intersection of congruent closed disks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum DiskShape {
    /// Tangency degenerate: the intersection is a single point.
    Point(Vec2),
    /// Proper region bounded by counterclockwise-ordered arcs (a single
    /// full-circle arc when one disk survives).
    Region(Vec<CircularArc>),
}

/// Intersection of finitely many closed disks of one common radius.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskPolygon {
    centers: Vec<Vec2>,
    radius: f64,
    shape: DiskShape,
}

impl DiskPolygon {
    /// Boundary structure of `⋂ B̄(c, radius)` over the given centers.
    ///
    /// Redundant disks are discarded (their circle contributes no boundary
    /// arc); an empty intersection is an error carrying the minimal
    /// enclosing ball radius of the centers; a single-point intersection is
    /// an explicit degenerate variant.
    pub fn intersect_disks(centers: &[Vec2], radius: f64, tol: &Tolerance) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::EmptyBody);
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("disk radius {radius} must be positive")));
        }
        let scale = centers
            .iter()
            .map(|c| c.x.abs().max(c.y.abs()))
            .fold(radius, f64::max);
        let eq_tol = 1e-12 * scale.max(1.0);
        let mut dedup: Vec<Vec2> = Vec::with_capacity(centers.len());
        for c in centers {
            if !c.is_finite() {
                return Err(Error::Construction("non-finite disk center".into()));
            }
            if dedup.iter().all(|d| d.dist(*c) > eq_tol) {
                dedup.push(*c);
            }
        }

        if dedup.len() == 1 {
            return Ok(DiskPolygon {
                centers: dedup.clone(),
                radius,
                shape: DiskShape::Region(vec![CircularArc::full_circle(dedup[0], radius)?]),
            });
        }

        let meb = min_enclosing_circle(&dedup);
        if meb.radius > radius + tol.abs_geom {
            return Err(Error::EmptyIntersection {
                radius,
                meb_radius: meb.radius,
            });
        }
        if meb.radius > radius - tol.abs_geom {
            return Ok(DiskPolygon {
                centers: dedup,
                radius,
                shape: DiskShape::Point(meb.center),
            });
        }

        // Per circle, intersect the angular intervals inside every other disk.
        let ang_eps = (tol.abs_geom / radius).max(1e-13);
        let mut arcs: Vec<CircularArc> = Vec::new();
        for (i, ci) in dedup.iter().enumerate() {
            // pieces are linear intervals within [0, 2π]
            let mut pieces: Vec<(f64, f64)> = vec![(0.0, TWO_PI)];
            for (j, cj) in dedup.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = ci.dist(*cj);
                let half = (d / (2.0 * radius)).clamp(-1.0, 1.0).acos();
                let phi = (*cj - *ci).angle();
                let lo = norm_angle(phi - half);
                let w = 2.0 * half;
                let constraint: Vec<(f64, f64)> = if lo + w <= TWO_PI {
                    vec![(lo, lo + w)]
                } else {
                    vec![(lo, TWO_PI), (0.0, lo + w - TWO_PI)]
                };
                let mut next: Vec<(f64, f64)> = Vec::new();
                for (a, b) in &pieces {
                    for (c, d2) in &constraint {
                        let lo2 = a.max(*c);
                        let hi2 = b.min(*d2);
                        if hi2 > lo2 {
                            next.push((lo2, hi2));
                        }
                    }
                }
                pieces = next;
                if pieces.is_empty() {
                    break;
                }
            }
            // merge around the 0/2π seam
            if pieces.len() >= 2 {
                let touches_end = pieces.iter().position(|(_, b)| (TWO_PI - b).abs() < 1e-12);
                let touches_start = pieces.iter().position(|(a, _)| *a < 1e-12);
                if let (Some(ie), Some(is)) = (touches_end, touches_start) {
                    if ie != is {
                        let (a, _) = pieces[ie];
                        let (_, b) = pieces[is];
                        let merged = (a, b + TWO_PI);
                        let mut keep: Vec<(f64, f64)> = pieces
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| *k != ie && *k != is)
                            .map(|(_, p)| *p)
                            .collect();
                        keep.push(merged);
                        pieces = keep;
                    }
                }
            }
            for (a, b) in pieces {
                if b - a > ang_eps {
                    arcs.push(CircularArc::new(*ci, radius, a, b - a)?);
                }
            }
        }
        if arcs.is_empty() {
            // numerically pinched to a point despite the mEB margin
            return Ok(DiskPolygon {
                centers: dedup,
                radius,
                shape: DiskShape::Point(meb.center),
            });
        }

        // order arcs counterclockwise around an interior point
        let anchor = meb.center;
        arcs.sort_by(|p, q| {
            let ap = norm_angle((p.point_at(0.5) - anchor).angle());
            let aq = norm_angle((q.point_at(0.5) - anchor).angle());
            ap.total_cmp(&aq)
        });
        // chain consistency: consecutive arcs share endpoints
        if arcs.len() > 1 {
            let join_tol = 1e-6 * radius.max(1.0);
            for k in 0..arcs.len() {
                let next = (k + 1) % arcs.len();
                let gap = arcs[k].end_point().dist(arcs[next].start_point());
                if gap > join_tol {
                    return Err(Error::Construction(format!(
                        "disk intersection boundary is not a closed arc chain (gap {gap})"
                    )));
                }
            }
        }

        // non-redundant generators, in input order
        let keep: Vec<Vec2> = dedup
            .iter()
            .filter(|c| arcs.iter().any(|a| a.center.dist(**c) <= eq_tol))
            .copied()
            .collect();
        Ok(DiskPolygon {
            centers: keep,
            radius,
            shape: DiskShape::Region(arcs),
        })
    }

    pub fn single(center: Vec2, radius: f64, tol: &Tolerance) -> Result<Self> {
        Self::intersect_disks(&[center], radius, tol)
    }

    pub fn centers(&self) -> &[Vec2] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn shape(&self) -> &DiskShape {
        &self.shape
    }

    pub fn arcs(&self) -> &[CircularArc] {
        match &self.shape {
            DiskShape::Region(a) => a,
            DiskShape::Point(_) => &[],
        }
    }

    pub fn degenerate_point(&self) -> Option<Vec2> {
        match &self.shape {
            DiskShape::Point(p) => Some(*p),
            _ => None,
        }
    }

    /// Arc junction points (empty for a full disk, the point itself for the
    /// degenerate case).
    pub fn vertices(&self) -> Vec<Vec2> {
        match &self.shape {
            DiskShape::Point(p) => vec![*p],
            DiskShape::Region(arcs) => {
                if arcs.len() <= 1 {
                    Vec::new()
                } else {
                    arcs.iter().map(|a| a.start_point()).collect()
                }
            }
        }
    }

    pub fn contains(&self, p: Vec2, tol: &Tolerance) -> bool {
        match &self.shape {
            DiskShape::Point(q) => p.dist(*q) <= tol.abs_geom,
            DiskShape::Region(_) => self
                .centers
                .iter()
                .all(|c| c.dist(p) <= self.radius + tol.abs_geom),
        }
    }

    pub fn signed_distance(&self, p: Vec2, tol: &Tolerance) -> f64 {
        let d = match &self.shape {
            DiskShape::Point(q) => -p.dist(*q),
            DiskShape::Region(arcs) => {
                let inside = self.centers.iter().all(|c| c.dist(p) <= self.radius);
                if inside {
                    // depth of the largest inscribed ball around p
                    self.centers
                        .iter()
                        .map(|c| self.radius - c.dist(p))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    -arcs
                        .iter()
                        .map(|a| a.dist_to_point(p))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        };
        if d.abs() <= tol.abs_geom {
            0.0
        } else {
            d
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            DiskShape::Point(_) => 0.0,
            DiskShape::Region(arcs) => {
                let mut best = 0.0f64;
                let verts = self.vertices();
                for i in 0..verts.len() {
                    for j in (i + 1)..verts.len() {
                        best = best.max(verts[i].dist(verts[j]));
                    }
                }
                for v in &verts {
                    for a in arcs {
                        best = best.max(v.dist(a.farthest_from(*v)));
                    }
                }
                for a in arcs {
                    if a.sweep >= PI {
                        best = best.max(2.0 * self.radius);
                    }
                }
                best
            }
        }
    }

    /// Deep interior point (the minimal enclosing ball center of the
    /// generators, which always lies in the intersection).
    pub fn anchor(&self) -> Vec2 {
        match &self.shape {
            DiskShape::Point(p) => *p,
            DiskShape::Region(_) => {
                if self.centers.len() == 1 {
                    self.centers[0]
                } else {
                    min_enclosing_circle(&self.centers).center
                }
            }
        }
    }

    pub fn bbox(&self) -> Aabb {
        match &self.shape {
            DiskShape::Point(p) => Aabb::of_2d(p.x, p.y, p.x, p.y),
            DiskShape::Region(arcs) => {
                let mut bb = arcs[0].bbox();
                for a in &arcs[1..] {
                    let ab = a.bbox();
                    bb = Aabb::of_2d(
                        bb.lo[0].min(ab.lo[0]),
                        bb.lo[1].min(ab.lo[1]),
                        bb.hi[0].max(ab.hi[0]),
                        bb.hi[1].max(ab.hi[1]),
                    );
                }
                bb
            }
        }
    }

    pub fn normal_cone(&self, x: Vec2, tol: &Tolerance) -> Result<NormalCone> {
        let arcs = match &self.shape {
            DiskShape::Point(_) => {
                return Err(Error::Domain(
                    "normal cone of a single point is all directions".into(),
                ))
            }
            DiskShape::Region(a) => a,
        };
        let ang_tol = tol.abs_geom / self.radius;
        let mut normals: Vec<UnitVector> = Vec::new();
        for a in arcs {
            let v = x - a.center;
            if (v.norm() - self.radius).abs() <= tol.abs_geom
                && a.contains_angle(v.angle(), ang_tol)
            {
                normals.push(UnitVector::from_vec2(v * (1.0 / v.norm()))?);
            }
        }
        normals.dedup_by(|a, b| a.as_point().dist(b.as_point()) < 1e-9);
        match normals.len() {
            0 => Err(Error::NotOnBoundary),
            1 => Ok(NormalCone::one(x.to_point(), normals.pop().unwrap())),
            _ => {
                let second = normals.pop().unwrap();
                Ok(NormalCone::two(x.to_point(), normals.pop().unwrap(), second))
            }
        }
    }

    fn ray_exit(&self, p: Vec2, dir: Vec2) -> f64 {
        let mut t_exit = f64::INFINITY;
        for c in &self.centers {
            let u = p - *c;
            let b = dir.dot(u);
            let q = u.norm_sq() - self.radius * self.radius;
            let disc = b * b - q;
            if disc < 0.0 {
                continue; // ray line misses this circle: no constraint
            }
            let t = -b + disc.sqrt();
            t_exit = t_exit.min(t.max(0.0));
        }
        t_exit
    }
}

// ---------------------------------------------------------------------------
// Normal cone
// ---------------------------------------------------------------------------

/// Extreme rays of the cone of outward normals at a boundary point.
#[derive(Debug, Clone, Serialize)]
pub struct NormalCone {
    pub at: Point,
    pub rays: Vec<UnitVector>,
}

impl NormalCone {
    fn one(at: Point, v: UnitVector) -> Self {
        NormalCone { at, rays: vec![v] }
    }

    fn two(at: Point, a: UnitVector, b: UnitVector) -> Self {
        NormalCone { at, rays: vec![a, b] }
    }

    /// Extreme rays plus, at a vertex, their bisector — the candidate set
    /// used by ball-containment checks that quantify over all unit normals.
    pub fn sample_rays(&self) -> Vec<UnitVector> {
        let mut out = self.rays.clone();
        if self.rays.len() == 2 {
            let s = self.rays[0].as_point().add(self.rays[1].as_point());
            if let Ok(b) = UnitVector::new(s) {
                out.push(b);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Implicit body
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum ImplicitKind {
    Ellipse { center: Vec2, semi: Vec2 },
    Custom(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

/// Set given by a membership predicate and a bounding box.
///
/// The bounding box is a trust assumption (it must contain the set), and so
/// is the convexity flag: operations that require convexity state which
/// guarantees are void when the flag is wrong.
#[derive(Clone)]
pub struct ImplicitBody {
    kind: ImplicitKind,
    bbox: Aabb,
    convex: bool,
    anchor: Arc<OnceLock<Point>>,
}

impl std::fmt::Debug for ImplicitBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.kind {
            ImplicitKind::Ellipse { center, semi } => {
                format!("Ellipse {{ center: {center:?}, semi: {semi:?} }}")
            }
            ImplicitKind::Custom(_) => "Custom(<fn>)".into(),
        };
        f.debug_struct("ImplicitBody")
            .field("kind", &kind)
            .field("bbox", &self.bbox)
            .field("convex", &self.convex)
            .finish()
    }
}

impl ImplicitBody {
    pub fn new<F>(membership: F, bbox: Aabb, convexity_claimed: bool) -> Result<Self>
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        if bbox.dim() < 2 {
            return Err(Error::Domain("implicit bodies need dimension >= 2".into()));
        }
        Ok(ImplicitBody {
            kind: ImplicitKind::Custom(Arc::new(membership)),
            bbox,
            convex: convexity_claimed,
            anchor: Arc::new(OnceLock::new()),
        })
    }

    /// Solid ellipse `((x−cx)/a)² + ((y−cy)/b)² ≤ 1` with exact membership.
    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain("ellipse semi-axes must be positive".into()));
        }
        Ok(ImplicitBody {
            kind: ImplicitKind::Ellipse {
                center,
                semi: Vec2::new(a, b),
            },
            bbox: Aabb::of_2d(center.x - a, center.y - b, center.x + a, center.y + b),
            convex: true,
            anchor: Arc::new(OnceLock::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn convexity_claimed(&self) -> bool {
        self.convex
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn member(&self, coords: &[f64]) -> bool {
        match &self.kind {
            ImplicitKind::Ellipse { center, semi } => {
                let dx = (coords[0] - center.x) / semi.x;
                let dy = (coords[1] - center.y) / semi.y;
                dx * dx + dy * dy <= 1.0
            }
            ImplicitKind::Custom(f) => f(coords),
        }
    }

    fn ellipse_params(&self) -> Option<(Vec2, Vec2)> {
        match &self.kind {
            ImplicitKind::Ellipse { center, semi } => Some((*center, *semi)),
            ImplicitKind::Custom(_) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Grid body (occupancy-grid membership oracle)
// ---------------------------------------------------------------------------

/// Occupancy grid over an axis-aligned box: cells of side `h`, membership
/// sampled at cell centers, with exact Euclidean distance transforms for
/// signed boundary distance (±h accuracy).
#[derive(Debug, Clone)]
pub struct GridBody {
    bbox: Aabb,
    h: f64,
    dims: Vec<usize>,
    words: Vec<u32>,
    convex: bool,
    occupied: usize,
    dist_in: Arc<Vec<f64>>,
    dist_out: Arc<Vec<f64>>,
    anchor_cell: usize,
}

pub const GRID_CELL_BUDGET: usize = 1 << 24;

impl GridBody {
    /// Rasterizes a membership predicate at cell centers.
    pub fn sample<F>(membership: F, bbox: &Aabb, h: f64, convexity_claimed: bool) -> Result<Self>
    where
        F: Fn(&[f64]) -> bool,
    {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("grid step {h} must be positive")));
        }
        let dim = bbox.dim();
        let dims: Vec<usize> = (0..dim)
            .map(|j| (((bbox.hi[j] - bbox.lo[j]) / h).ceil() as usize).max(1))
            .collect();
        let cells: usize = dims.iter().product();
        if cells > GRID_CELL_BUDGET {
            return Err(Error::GridBudget {
                cells,
                budget: GRID_CELL_BUDGET,
            });
        }
        let mut words = vec![0u32; (cells + 31) / 32];
        let mut coords = vec![0.0; dim];
        let mut idx = vec![0usize; dim];
        let mut occupied = 0usize;
        for lin in 0..cells {
            let mut rest = lin;
            for j in 0..dim {
                idx[j] = rest % dims[j];
                rest /= dims[j];
                coords[j] = bbox.lo[j] + (idx[j] as f64 + 0.5) * h;
            }
            if membership(&coords) {
                words[lin / 32] |= 1 << (lin % 32);
                occupied += 1;
            }
        }
        Self::from_words(bbox.clone(), h, dims, words, occupied, convexity_claimed)
    }

    pub fn from_parts(
        bbox: Aabb,
        h: f64,
        words: Vec<u32>,
        convexity_claimed: bool,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("grid step {h} must be positive")));
        }
        let dim = bbox.dim();
        let dims: Vec<usize> = (0..dim)
            .map(|j| (((bbox.hi[j] - bbox.lo[j]) / h).ceil() as usize).max(1))
            .collect();
        let cells: usize = dims.iter().product();
        if words.len() != (cells + 31) / 32 {
            return Err(Error::Construction(format!(
                "cell bitmask has {} words, expected {}",
                words.len(),
                (cells + 31) / 32
            )));
        }
        let occupied = (0..cells)
            .filter(|lin| words[lin / 32] >> (lin % 32) & 1 == 1)
            .count();
        Self::from_words(bbox, h, dims, words, occupied, convexity_claimed)
    }

    fn from_words(
        bbox: Aabb,
        h: f64,
        dims: Vec<usize>,
        words: Vec<u32>,
        occupied: usize,
        convex: bool,
    ) -> Result<Self> {
        if occupied == 0 {
            return Err(Error::EmptyBody);
        }
        let cells: usize = dims.iter().product();
        let occ = |lin: usize| words[lin / 32] >> (lin % 32) & 1 == 1;
        let big = 1e20;
        let mut f_in = vec![0.0; cells];
        let mut f_out = vec![0.0; cells];
        for lin in 0..cells {
            if occ(lin) {
                f_in[lin] = big; // distance to nearest unoccupied
                f_out[lin] = 0.0;
            } else {
                f_in[lin] = 0.0;
                f_out[lin] = big;
            }
        }
        dt_sq_nd(&mut f_in, &dims);
        dt_sq_nd(&mut f_out, &dims);
        let to_dist = |sq: f64| (sq.min(big).sqrt() * h - 0.5 * h).max(0.0);
        let dist_in: Vec<f64> = f_in.iter().map(|&s| to_dist(s)).collect();
        let dist_out: Vec<f64> = f_out.iter().map(|&s| to_dist(s)).collect();
        let anchor_cell = dist_in
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(GridBody {
            bbox,
            h,
            dims,
            words,
            convex,
            occupied,
            dist_in: Arc::new(dist_in),
            dist_out: Arc::new(dist_out),
            anchor_cell,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn convexity_claimed(&self) -> bool {
        self.convex
    }

    pub fn occupied_cells(&self) -> usize {
        self.occupied
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    fn cell_of(&self, coords: &[f64]) -> Option<usize> {
        let mut lin = 0usize;
        let mut stride = 1usize;
        for j in 0..self.dims.len() {
            let c = coords[j];
            if c < self.bbox.lo[j] || c > self.bbox.hi[j] {
                return None;
            }
            let i = (((c - self.bbox.lo[j]) / self.h) as usize).min(self.dims[j] - 1);
            lin += i * stride;
            stride *= self.dims[j];
        }
        Some(lin)
    }

    pub fn cell_center(&self, lin: usize) -> Point {
        let mut rest = lin;
        let mut coords = vec![0.0; self.dims.len()];
        for j in 0..self.dims.len() {
            let i = rest % self.dims[j];
            rest /= self.dims[j];
            coords[j] = self.bbox.lo[j] + (i as f64 + 0.5) * self.h;
        }
        Point(coords)
    }

    pub fn member(&self, coords: &[f64]) -> bool {
        match self.cell_of(coords) {
            Some(lin) => self.words[lin / 32] >> (lin % 32) & 1 == 1,
            None => false,
        }
    }

    pub fn signed_distance(&self, coords: &[f64]) -> f64 {
        match self.cell_of(coords) {
            Some(lin) => {
                if self.words[lin / 32] >> (lin % 32) & 1 == 1 {
                    self.dist_in[lin]
                } else {
                    -self.dist_out[lin]
                }
            }
            None => {
                // outside the box: at least the distance to the box
                let mut d2 = 0.0;
                for j in 0..self.dims.len() {
                    let c = coords[j];
                    let gap = (self.bbox.lo[j] - c).max(c - self.bbox.hi[j]).max(0.0);
                    d2 += gap * gap;
                }
                -d2.sqrt()
            }
        }
    }

    pub fn anchor(&self) -> Point {
        self.cell_center(self.anchor_cell)
    }

    /// Occupied cell centers (the deterministic point cloud).
    pub fn occupied_centers(&self) -> Vec<Point> {
        let cells: usize = self.dims.iter().product();
        (0..cells)
            .filter(|lin| self.words[lin / 32] >> (lin % 32) & 1 == 1)
            .map(|lin| self.cell_center(lin))
            .collect()
    }

    pub fn diameter_estimate(&self) -> f64 {
        if self.dims.len() == 2 {
            // exact over the convex hull of occupied cell centers
            let pts: Vec<Vec2> = self
                .occupied_centers()
                .iter()
                .map(|p| Vec2::new(p.0[0], p.0[1]))
                .collect();
            let hull = convex_hull_2d(&pts);
            let mut best = 0.0f64;
            for i in 0..hull.len() {
                for j in (i + 1)..hull.len() {
                    best = best.max(hull[i].dist(hull[j]));
                }
            }
            best
        } else {
            let pts = self.occupied_centers();
            let rng = CounterRng::new(0x617a);
            let n = pts.len();
            let mut best = 0.0f64;
            let samples = 4096.min(n * n);
            for k in 0..samples as u64 {
                let i = (rng.bits(k, 0) % n as u64) as usize;
                let j = (rng.bits(k, 1) % n as u64) as usize;
                best = best.max(pts[i].dist(&pts[j]));
            }
            best
        }
    }
}

/// Monotone-chain convex hull (used for grid diameter estimates).
pub fn convex_hull_2d(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(*b));
    pts.dedup_by(|a, b| a.dist(*b) < 1e-15);
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// In-place exact Euclidean squared distance transform (separable 1D passes).
fn dt_sq_nd(f: &mut [f64], dims: &[usize]) {
    let nd = dims.len();
    let total: usize = dims.iter().product();
    for axis in 0..nd {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let stride: usize = dims[..axis].iter().product();
        let lines = total / n;
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut v = vec![0usize; n];
        let mut z = vec![0.0; n + 1];
        for l in 0..lines {
            // map line number to base offset: lines enumerate all indices with
            // the current axis removed
            let below = l % stride;
            let above = l / stride;
            let base = below + above * stride * n;
            for i in 0..n {
                line[i] = f[base + i * stride];
            }
            dt_sq_1d(&line, &mut out, &mut v, &mut z);
            for i in 0..n {
                f[base + i * stride] = out[i];
            }
        }
    }
}

/// Felzenszwalb–Huttenlocher 1D squared distance transform.
fn dt_sq_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        out[q] = d * d + f[p];
    }
}

// ---------------------------------------------------------------------------
// Body: the common interface
// ---------------------------------------------------------------------------

/// A candidate set in one of the supported representations.
#[derive(Debug, Clone)]
pub enum Body {
    Polygon(ConvexPolygon),
    Disks(DiskPolygon),
    Grid(GridBody),
    Implicit(ImplicitBody),
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::Polygon(_) | Body::Disks(_) => 2,
            Body::Grid(g) => g.dim(),
            Body::Implicit(b) => b.dim(),
        }
    }

    /// Whether the body is convex: true by construction for polygons and
    /// disk intersections, a trusted flag for the sampled representations.
    pub fn convexity_claimed(&self) -> bool {
        match self {
            Body::Polygon(_) | Body::Disks(_) => true,
            Body::Grid(g) => g.convexity_claimed(),
            Body::Implicit(b) => b.convexity_claimed(),
        }
    }

    fn check_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        Ok(())
    }

    /// Closed-set membership; boundary points classify as inside within
    /// `abs_geom`.
    pub fn contains(&self, p: &Point, tol: &Tolerance) -> Result<bool> {
        self.check_dim(p)?;
        Ok(self.member(p.coords(), tol))
    }

    /// Membership without the dimension check (hot paths).
    pub fn member(&self, coords: &[f64], tol: &Tolerance) -> bool {
        match self {
            Body::Polygon(pg) => pg.contains(Vec2::new(coords[0], coords[1]), tol),
            Body::Disks(dp) => dp.contains(Vec2::new(coords[0], coords[1]), tol),
            Body::Grid(g) => g.member(coords),
            Body::Implicit(b) => b.member(coords),
        }
    }

    /// Signed distance to the boundary: positive inside, negative outside,
    /// exactly zero within `abs_geom` of the boundary.
    ///
    /// Exact formulas for polygons and disk intersections; grid bodies use
    /// their distance transform (±h); implicit bodies bisect membership
    /// along sampled rays.
    pub fn boundary_distance(&self, p: &Point, tol: &Tolerance) -> Result<f64> {
        self.check_dim(p)?;
        let d = match self {
            Body::Polygon(pg) => pg.signed_distance(p.as_vec2()?, tol),
            Body::Disks(dp) => dp.signed_distance(p.as_vec2()?, tol),
            Body::Grid(g) => g.signed_distance(p.coords()),
            Body::Implicit(b) => implicit_signed_distance(b, p, tol),
        };
        Ok(if d.abs() <= tol.abs_geom { 0.0 } else { d })
    }

    pub fn diameter(&self, tol: &Tolerance) -> Result<f64> {
        let _ = tol;
        Ok(match self {
            Body::Polygon(pg) => pg.diameter(),
            Body::Disks(dp) => dp.diameter(),
            Body::Grid(g) => g.diameter_estimate(),
            Body::Implicit(b) => implicit_diameter(self, b, tol)?,
        })
    }

    pub fn bbox(&self) -> Aabb {
        match self {
            Body::Polygon(pg) => pg.bbox(),
            Body::Disks(dp) => dp.bbox(),
            Body::Grid(g) => g.bbox().clone(),
            Body::Implicit(b) => b.bbox().clone(),
        }
    }

    /// A deterministic interior point (for degenerate bodies, a point of the
    /// set).
    pub fn anchor(&self) -> Result<Point> {
        match self {
            Body::Polygon(pg) => Ok(pg.centroid().to_point()),
            Body::Disks(dp) => Ok(dp.anchor().to_point()),
            Body::Grid(g) => Ok(g.anchor()),
            Body::Implicit(b) => implicit_anchor(b),
        }
    }

    pub fn normal_cone(&self, x: &Point, tol: &Tolerance) -> Result<NormalCone> {
        match self {
            Body::Polygon(pg) => pg.normal_cone(x.as_vec2()?, tol),
            Body::Disks(dp) => dp.normal_cone(x.as_vec2()?, tol),
            _ => Err(Error::Domain(
                "exact normal cones are available for polygon and disk bodies only".into(),
            )),
        }
    }

    /// For a body that is a single closed disk, its center and radius.
    pub fn as_single_disk(&self) -> Option<(Vec2, f64)> {
        match self {
            Body::Disks(dp) => match dp.shape() {
                DiskShape::Region(arcs) if arcs.len() == 1 && dp.centers().len() == 1 => {
                    Some((dp.centers()[0], dp.radius()))
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// A body with no interior (point or segment polygon, point disk
    /// intersection).
    pub fn is_degenerate(&self) -> bool {
        match self {
            Body::Polygon(pg) => pg.degeneracy() != Degeneracy::Proper,
            Body::Disks(dp) => dp.degenerate_point().is_some(),
            _ => false,
        }
    }

    /// Largest `t` such that the segment from `p` to `p + t·dir` stays in
    /// the body. Exact for polygons and disk intersections; marched and
    /// bisected for sampled bodies (first membership flip — correct for
    /// convex bodies, a first-exit estimate otherwise). Returns 0 when `p`
    /// is outside.
    pub fn ray_exit(&self, p: &Point, dir: &UnitVector, tol: &Tolerance) -> Result<f64> {
        self.check_dim(p)?;
        if !self.member(p.coords(), tol) {
            return Ok(0.0);
        }
        match self {
            Body::Polygon(pg) => Ok(pg.ray_exit(p.as_vec2()?, dir.as_vec2()?)),
            Body::Disks(dp) => Ok(dp.ray_exit(p.as_vec2()?, dir.as_vec2()?)),
            _ => {
                let bb = self.bbox();
                let t_max = bb.diag() + 1.0;
                let step = match self {
                    Body::Grid(g) => g.h(),
                    _ => (tol.grid_h * bb.diag().max(1.0)).min(bb.diag() / 16.0),
                };
                let mut t_in = 0.0f64;
                let mut t = step.max(1e-12);
                let coords_at = |t: f64| -> Vec<f64> {
                    p.coords()
                        .iter()
                        .zip(dir.coords())
                        .map(|(c, d)| c + t * d)
                        .collect()
                };
                while t < t_max && self.member(&coords_at(t), tol) {
                    t_in = t;
                    t += step;
                }
                if t >= t_max {
                    return Ok(t_max);
                }
                let mut lo = t_in;
                let mut hi = t;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.member(&coords_at(mid), tol) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// First boundary crossing along the ray from an interior `anchor` at
    /// the given angle (2D bodies). Bisection on membership; resolves the
    /// crossing to near machine precision.
    pub fn boundary_point_2d(&self, anchor: Vec2, angle: f64, tol: &Tolerance) -> Result<Vec2> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        let dir = Vec2::from_angle(angle);
        if !self.member(&[anchor.x, anchor.y], tol) {
            return Err(Error::NotInBody);
        }
        let bb = self.bbox();
        let hi0 = bb.diag() + 1.0;
        let mut lo = 0.0f64;
        let mut hi = hi0;
        debug_assert!(!self.member(&[anchor.x + hi * dir.x, anchor.y + hi * dir.y], tol));
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            let q = anchor + dir * mid;
            if self.member(&[q.x, q.y], tol) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(anchor + dir * (0.5 * (lo + hi)))
    }

    /// Deterministic boundary sample points.
    pub fn boundary_samples(&self, n: usize, tol: &Tolerance) -> Result<Vec<Point>> {
        let n = n.max(4);
        match self {
            Body::Polygon(pg) => {
                let verts = pg.vertices();
                if verts.len() <= 2 {
                    return Ok(verts.iter().map(|v| v.to_point()).collect());
                }
                let per_edge = (n / verts.len()).max(1);
                let mut out = Vec::new();
                for i in 0..verts.len() {
                    let a = verts[i];
                    let b = verts[(i + 1) % verts.len()];
                    for k in 0..per_edge {
                        out.push(a.lerp(b, k as f64 / per_edge as f64).to_point());
                    }
                }
                Ok(out)
            }
            Body::Disks(dp) => {
                if let Some(p) = dp.degenerate_point() {
                    return Ok(vec![p.to_point()]);
                }
                let arcs = dp.arcs();
                let per_arc = (n / arcs.len()).max(2);
                let mut out = Vec::new();
                for a in arcs {
                    for k in 0..per_arc {
                        out.push(a.point_at(k as f64 / per_arc as f64).to_point());
                    }
                }
                Ok(out)
            }
            _ if self.dim() == 2 => {
                let anchor = self.anchor()?.as_vec2()?;
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    let a = TWO_PI * k as f64 / n as f64;
                    out.push(self.boundary_point_2d(anchor, a, tol)?.to_point());
                }
                Ok(out)
            }
            _ => {
                let anchor = self.anchor()?;
                let rng = CounterRng::new(0xb0d1);
                let bb = self.bbox();
                let hi0 = bb.diag() + 1.0;
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    let dir = rng.unit_vector(k as u64, self.dim());
                    let mut lo = 0.0f64;
                    let mut hi = hi0;
                    for _ in 0..70 {
                        let mid = 0.5 * (lo + hi);
                        let q: Vec<f64> = anchor
                            .coords()
                            .iter()
                            .zip(&dir)
                            .map(|(c, d)| c + mid * d)
                            .collect();
                        if self.member(&q, tol) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let t = 0.5 * (lo + hi);
                    out.push(Point(
                        anchor
                            .coords()
                            .iter()
                            .zip(&dir)
                            .map(|(c, d)| c + t * d)
                            .collect(),
                    ));
                }
                Ok(out)
            }
        }
    }
}

fn implicit_anchor(b: &ImplicitBody) -> Result<Point> {
    if let Some(p) = b.anchor.get() {
        return Ok(p.clone());
    }
    if let Some((center, _)) = b.ellipse_params() {
        let p = center.to_point();
        let _ = b.anchor.set(p.clone());
        return Ok(p);
    }
    let dim = b.dim();
    let bb = b.bbox();
    let center = bb.center();
    let best = if b.member(center.coords()) {
        Some(center)
    } else {
        // coarse scan for the deepest-looking member point
        let mut best: Option<(f64, Point)> = None;
        let steps = if dim == 2 { 33 } else { 9 };
        let total: usize = (0..dim).map(|_| steps).product();
        for lin in 0..total {
            let mut rest = lin;
            let mut coords = vec![0.0; dim];
            for j in 0..dim {
                let i = rest % steps;
                rest /= steps;
                coords[j] = bb.lo[j] + (i as f64 + 0.5) * (bb.hi[j] - bb.lo[j]) / steps as f64;
            }
            if b.member(&coords) {
                // proxy depth: shortest membership run along the axes
                let mut depth = f64::INFINITY;
                for j in 0..dim {
                    for sgn in [-1.0, 1.0] {
                        let mut t = 0.0;
                        let step = (bb.hi[j] - bb.lo[j]) / 64.0;
                        let mut probe = coords.clone();
                        loop {
                            t += step;
                            probe[j] = coords[j] + sgn * t;
                            if !b.member(&probe) || t > bb.hi[j] - bb.lo[j] {
                                break;
                            }
                        }
                        depth = depth.min(t);
                    }
                }
                let cand = Point(coords);
                if best
                    .as_ref()
                    .map_or(true, |(d, p)| depth > *d || (depth == *d && cand.lex_cmp(p).is_lt()))
                {
                    best = Some((depth, cand));
                }
            }
        }
        best.map(|(_, p)| p)
    };
    match best {
        Some(p) => {
            let _ = b.anchor.set(p.clone());
            Ok(p)
        }
        None => Err(Error::EmptyBody),
    }
}

/// Signed boundary distance of an implicit body: directional scan from `p`
/// with membership bisection per direction, refined around the best
/// direction (2D). Documented accuracy: near-exact for smooth convex bodies,
/// resolution-limited otherwise.
fn implicit_signed_distance(b: &ImplicitBody, p: &Point, tol: &Tolerance) -> f64 {
    let dim = b.dim();
    let inside = b.member(p.coords());
    let bb = b.bbox();
    let reach = bb.diag() + 1.0;

    let exit_along = |dir: &[f64]| -> f64 {
        // distance to the first membership flip from p along dir
        let coords_at = |t: f64| -> Vec<f64> {
            p.coords().iter().zip(dir).map(|(c, d)| c + t * d).collect()
        };
        let target = !inside;
        // bracket: grow until flip
        let mut lo = 0.0f64;
        let mut hi = f64::NAN;
        let mut t = (tol.grid_h * reach).max(1e-6);
        while t <= reach {
            if b.member(&coords_at(t)) == target {
                hi = t;
                break;
            }
            lo = t;
            t *= 1.7;
        }
        if hi.is_nan() {
            return f64::INFINITY;
        }
        let mut hi = hi;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if b.member(&coords_at(mid)) == target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let k = if dim == 2 { 64 } else { 96 };
    let mut best = f64::INFINITY;
    let mut best_dir_idx = 0usize;
    let dirs: Vec<Vec<f64>> = if dim == 2 {
        (0..k)
            .map(|i| {
                let a = TWO_PI * i as f64 / k as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    } else {
        let rng = CounterRng::new(0xd157);
        (0..k).map(|i| rng.unit_vector(i as u64, dim)).collect()
    };
    for (i, d) in dirs.iter().enumerate() {
        let e = exit_along(d);
        if e < best {
            best = e;
            best_dir_idx = i;
        }
    }
    if dim == 2 && best.is_finite() {
        // golden-section refinement of the direction angle
        let a0 = TWO_PI * best_dir_idx as f64 / k as f64;
        let mut lo = a0 - TWO_PI / k as f64;
        let mut hi = a0 + TWO_PI / k as f64;
        let g = 0.5 * (3.0 - 5.0f64.sqrt());
        let mut x1 = lo + g * (hi - lo);
        let mut x2 = hi - g * (hi - lo);
        let eval = |a: f64| exit_along(&[a.cos(), a.sin()]);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for _ in 0..40 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = lo + g * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = hi - g * (hi - lo);
                f2 = eval(x2);
            }
        }
        best = best.min(f1.min(f2));
    }
    if !best.is_finite() {
        // membership never flipped: fall back to the box
        return if inside { reach } else { -reach };
    }
    if inside {
        best
    } else {
        -best
    }
}

fn implicit_diameter(body: &Body, b: &ImplicitBody, tol: &Tolerance) -> Result<f64> {
    if let Some((_, semi)) = b.ellipse_params() {
        return Ok(2.0 * semi.x.max(semi.y));
    }
    if b.dim() == 2 {
        let samples = body.boundary_samples(256, tol)?;
        let mut best = 0.0f64;
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                best = best.max(samples[i].dist(&samples[j]));
            }
        }
        Ok(best)
    } else {
        let samples = body.boundary_samples(192, tol)?;
        let mut best = 0.0f64;
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                best = best.max(samples[i].dist(&samples[j]));
            }
        }
        Ok(best)
    }
}

// ---------------------------------------------------------------------------
// JSON body format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BodyRepr {
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    DiskPolygon {
        centers: Vec<[f64; 2]>,
        radius: f64,
    },
    ImplicitGrid {
        bbox: [Vec<f64>; 2],
        h: f64,
        cells: Vec<u32>,
        #[serde(default)]
        convex: bool,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
}

impl Body {
    pub fn from_json(s: &str, tol: &Tolerance) -> Result<Body> {
        let repr: BodyRepr = serde_json::from_str(s)?;
        match repr {
            BodyRepr::Polygon { vertices } => Ok(Body::Polygon(ConvexPolygon::new(
                vertices.into_iter().map(Vec2::from).collect(),
            )?)),
            BodyRepr::DiskPolygon { centers, radius } => {
                let centers: Vec<Vec2> = centers.into_iter().map(Vec2::from).collect();
                Ok(Body::Disks(DiskPolygon::intersect_disks(
                    &centers, radius, tol,
                )?))
            }
            BodyRepr::ImplicitGrid {
                bbox,
                h,
                cells,
                convex,
            } => {
                let [lo, hi] = bbox;
                Ok(Body::Grid(GridBody::from_parts(
                    Aabb::new(lo, hi)?,
                    h,
                    cells,
                    convex,
                )?))
            }
            BodyRepr::Ellipse { center, semi_axes } => Ok(Body::Implicit(ImplicitBody::ellipse(
                Vec2::from(center),
                semi_axes[0],
                semi_axes[1],
            )?)),
        }
    }

    fn to_repr(&self) -> Result<BodyRepr> {
        match self {
            Body::Polygon(pg) => Ok(BodyRepr::Polygon {
                vertices: pg.vertices().iter().map(|v| [v.x, v.y]).collect(),
            }),
            Body::Disks(dp) => Ok(BodyRepr::DiskPolygon {
                centers: dp.centers().iter().map(|v| [v.x, v.y]).collect(),
                radius: dp.radius(),
            }),
            Body::Grid(g) => Ok(BodyRepr::ImplicitGrid {
                bbox: [g.bbox().lo.clone(), g.bbox().hi.clone()],
                h: g.h(),
                cells: g.words().to_vec(),
                convex: g.convexity_claimed(),
            }),
            Body::Implicit(b) => match b.ellipse_params() {
                Some((center, semi)) => Ok(BodyRepr::Ellipse {
                    center: [center.x, center.y],
                    semi_axes: [semi.x, semi.y],
                }),
                None => Err(Error::Unserializable),
            },
        }
    }

    /// Canonical JSON: compact, floats printed with 17 significant digits,
    /// so load → serialize is byte-stable.
    pub fn to_canonical_json(&self) -> Result<String> {
        let repr = self.to_repr()?;
        let mut buf = Vec::new();
        let mut ser =
            serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter::default());
        serde::Serialize::serialize(&repr, &mut ser)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Compact JSON formatter printing every float with 17 significant digits.
#[derive(Default)]
pub struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.7e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn unit_disk() -> Body {
        Body::Disks(DiskPolygon::single(Vec2::new(0.0, 0.0), 1.0, &tol()).unwrap())
    }

    fn unit_square() -> Body {
        Body::Polygon(
            ConvexPolygon::new(vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn disk_membership() {
        let d = unit_disk();
        assert!(d.contains(&Point::xy(0.0, 0.0), &tol()).unwrap());
        assert!(d.contains(&Point::xy(1.0, 0.0), &tol()).unwrap(), "boundary is closed");
        assert!(!d.contains(&Point::xy(1.01, 0.0), &tol()).unwrap());
    }

    #[test]
    fn disk_boundary_distance() {
        let d = unit_disk();
        assert!((d.boundary_distance(&Point::xy(0.0, 0.0), &tol()).unwrap() - 1.0).abs() < 1e-12);
        assert!((d.boundary_distance(&Point::xy(2.0, 0.0), &tol()).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(d.boundary_distance(&Point::xy(1.0, 0.0), &tol()).unwrap(), 0.0);
    }

    #[test]
    fn square_boundary_distance() {
        let s = unit_square();
        assert!(
            (s.boundary_distance(&Point::xy(0.5, 0.5), &tol()).unwrap() - 0.5).abs() < 1e-12
        );
        assert_eq!(s.boundary_distance(&Point::xy(0.5, 0.0), &tol()).unwrap(), 0.0);
        assert!((s.boundary_distance(&Point::xy(2.0, 0.5), &tol()).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cones() {
        let d = unit_disk();
        let nc = d.normal_cone(&Point::xy(1.0, 0.0), &tol()).unwrap();
        assert_eq!(nc.rays.len(), 1);
        assert!(nc.rays[0].as_vec2().unwrap().dist(Vec2::new(1.0, 0.0)) < 1e-12);

        let s = unit_square();
        let nc = s.normal_cone(&Point::xy(1.0, 1.0), &tol()).unwrap();
        assert_eq!(nc.rays.len(), 2);
        let mut vs: Vec<Vec2> = nc.rays.iter().map(|r| r.as_vec2().unwrap()).collect();
        vs.sort_by(|a, b| a.lex_cmp(*b));
        assert!(vs[0].dist(Vec2::new(0.0, 1.0)) < 1e-12);
        assert!(vs[1].dist(Vec2::new(1.0, 0.0)) < 1e-12);

        let nc = s.normal_cone(&Point::xy(0.5, 0.0), &tol()).unwrap();
        assert_eq!(nc.rays.len(), 1);
        assert!(nc.rays[0].as_vec2().unwrap().dist(Vec2::new(0.0, -1.0)) < 1e-12);

        assert!(matches!(
            s.normal_cone(&Point::xy(0.5, 0.5), &tol()),
            Err(Error::NotOnBoundary)
        ));
    }

    #[test]
    fn intersect_two_far_disks_is_empty() {
        let err = DiskPolygon::intersect_disks(
            &[Vec2::new(-2.0, 0.0), Vec2::new(2.0, 0.0)],
            1.0,
            &tol(),
        )
        .unwrap_err();
        match err {
            Error::EmptyIntersection { meb_radius, .. } => {
                assert!((meb_radius - 2.0).abs() < 1e-9)
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn intersect_tangent_disks_is_point() {
        let dp = DiskPolygon::intersect_disks(
            &[Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)],
            1.0,
            &tol(),
        )
        .unwrap();
        let p = dp.degenerate_point().expect("tangency should be a point");
        assert!(p.dist(Vec2::new(0.0, 0.0)) < 1e-9);
    }

    #[test]
    fn intersect_two_disks_is_lens() {
        let dp = DiskPolygon::intersect_disks(
            &[Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)],
            1.0,
            &tol(),
        )
        .unwrap();
        let arcs = dp.arcs();
        assert_eq!(arcs.len(), 2);
        let verts = dp.vertices();
        assert_eq!(verts.len(), 2);
        let expect_y = 0.75f64.sqrt();
        for v in &verts {
            assert!(v.x.abs() < 1e-9);
            assert!((v.y.abs() - expect_y).abs() < 1e-9);
        }
        // chain: consecutive arcs share endpoints
        assert!(arcs[0].end_point().dist(arcs[1].start_point()) < 1e-9);
        assert!(arcs[1].end_point().dist(arcs[0].start_point()) < 1e-9);
    }

    #[test]
    fn lens_membership_matches_two_disk_predicate() {
        // Monte-Carlo agreement between the arc structure and the raw
        // membership predicate
        let centers = [Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)];
        let dp = DiskPolygon::intersect_disks(&centers, 1.0, &tol()).unwrap();
        let rng = CounterRng::new(3);
        let mut checked = 0;
        for i in 0..4000u64 {
            let p = Vec2::new(rng.range(i, 0, -1.6, 1.6), rng.range(i, 1, -1.2, 1.2));
            let truth = centers.iter().all(|c| c.dist(p) <= 1.0);
            let sd = dp.signed_distance(p, &tol());
            if sd.abs() < 2e-9 {
                continue; // boundary band
            }
            assert_eq!(dp.contains(p, &tol()), truth, "at {p:?}");
            checked += 1;
        }
        assert!(checked > 3000);
    }

    #[test]
    fn intersect_disks_idempotent_under_duplicates() {
        let centers = vec![
            Vec2::new(-0.5, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(0.0, 0.4),
        ];
        let a = DiskPolygon::intersect_disks(&centers, 1.0, &tol()).unwrap();
        let mut with_dup = centers.clone();
        with_dup.push(centers[1]);
        let b = DiskPolygon::intersect_disks(&with_dup, 1.0, &tol()).unwrap();
        assert_eq!(a.arcs().len(), b.arcs().len());
        for (x, y) in a.arcs().iter().zip(b.arcs()) {
            assert!(x.center.dist(y.center) < 1e-12);
            assert!((x.start_angle - y.start_angle).abs() < 1e-9);
            assert!((x.sweep - y.sweep).abs() < 1e-9);
        }
    }

    #[test]
    fn redundant_disk_is_discarded() {
        let dp = DiskPolygon::intersect_disks(
            &[Vec2::new(-0.2, 0.0), Vec2::new(0.2, 0.0), Vec2::new(0.0, 5.0)],
            6.0,
            &tol(),
        )
        .unwrap();
        // the third disk contains the lens of the first two entirely
        assert_eq!(dp.centers().len(), 2);
    }

    #[test]
    fn diameters() {
        assert!((unit_disk().diameter(&tol()).unwrap() - 2.0).abs() < 1e-12);
        assert!((unit_square().diameter(&tol()).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        let seg = Body::Polygon(
            ConvexPolygon::new(vec![Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0)]).unwrap(),
        );
        assert!((seg.diameter(&tol()).unwrap() - 3.0).abs() < 1e-12);
        // lens diameter: vertex pair
        let dp = DiskPolygon::intersect_disks(
            &[Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)],
            1.0,
            &tol(),
        )
        .unwrap();
        assert!((dp.diameter() - 2.0 * 0.75f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn collinear_input_becomes_segment() {
        let pg = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(2.0, 2.0),
        ])
        .unwrap();
        assert_eq!(pg.degeneracy(), Degeneracy::Segment);
        assert!((pg.diameter() - 8.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn clockwise_input_reoriented() {
        let pg = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(pg.contains(Vec2::new(0.5, 0.5), &Tolerance::default()));
    }

    #[test]
    fn nonconvex_rejected() {
        assert!(ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.2),
            Vec2::new(1.0, 2.0),
        ])
        .is_err());
    }

    #[test]
    fn implicit_ellipse_basics() {
        let e = Body::Implicit(ImplicitBody::ellipse(Vec2::new(0.0, 0.0), 2.0, 1.0).unwrap());
        assert!(e.contains(&Point::xy(1.9, 0.0), &tol()).unwrap());
        assert!(!e.contains(&Point::xy(2.1, 0.0), &tol()).unwrap());
        assert!((e.diameter(&tol()).unwrap() - 4.0).abs() < 1e-12);
        // boundary distance at the center is the minor semi-axis
        let d = e.boundary_distance(&Point::xy(0.0, 0.0), &tol()).unwrap();
        assert!((d - 1.0).abs() < 1e-6, "got {d}");
    }

    #[test]
    fn grid_body_area_and_distance() {
        let bb = Aabb::of_2d(-1.2, -1.2, 1.2, 1.2);
        let g = GridBody::sample(
            |c| c[0] * c[0] + c[1] * c[1] <= 1.0,
            &bb,
            0.01,
            true,
        )
        .unwrap();
        let area = g.occupied_cells() as f64 * 0.01 * 0.01;
        assert!((area - PI).abs() / PI < 0.01, "area {area}");
        let d = g.signed_distance(&[0.0, 0.0]);
        assert!((d - 1.0).abs() < 0.02, "center depth {d}");
        let d = g.signed_distance(&[1.5, 0.0]);
        assert!((d + 0.5).abs() < 0.02, "outside distance {d}");
    }

    #[test]
    fn grid_half_plane_distance_matches_analytic() {
        let bb = Aabb::of_2d(-1.0, -1.0, 1.0, 1.0);
        let g = GridBody::sample(|c| c[0] <= 0.0, &bb, 0.01, true).unwrap();
        for x in [-0.7, -0.35, -0.013] {
            let d = g.signed_distance(&[x, 0.2]);
            assert!((d - (-x)).abs() <= 0.011, "x={x} d={d}");
        }
    }

    #[test]
    fn empty_grid_is_error() {
        let bb = Aabb::of_2d(0.0, 0.0, 1.0, 1.0);
        assert!(matches!(
            GridBody::sample(|_| false, &bb, 0.1, false),
            Err(Error::EmptyBody)
        ));
    }

    #[test]
    fn json_round_trip_polygon_and_disks() {
        let s = r#"{"kind":"polygon","vertices":[[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,1.0]]}"#;
        let b = Body::from_json(s, &tol()).unwrap();
        let canon = b.to_canonical_json().unwrap();
        let b2 = Body::from_json(&canon, &tol()).unwrap();
        assert_eq!(b2.to_canonical_json().unwrap(), canon, "byte-stable round trip");

        let s = r#"{"kind":"disk_polygon","centers":[[-0.5,0.0],[0.5,0.0]],"radius":1.0}"#;
        let b = Body::from_json(s, &tol()).unwrap();
        let canon = b.to_canonical_json().unwrap();
        let b2 = Body::from_json(&canon, &tol()).unwrap();
        assert_eq!(b2.to_canonical_json().unwrap(), canon);
        assert!(canon.contains("\"kind\":\"disk_polygon\""));
    }

    #[test]
    fn json_grid_round_trip() {
        let bb = Aabb::of_2d(-1.0, -1.0, 1.0, 1.0);
        let g = GridBody::sample(|c| c[0] * c[0] + c[1] * c[1] <= 0.8, &bb, 0.05, true).unwrap();
        let b = Body::Grid(g);
        let canon = b.to_canonical_json().unwrap();
        let b2 = Body::from_json(&canon, &tol()).unwrap();
        assert_eq!(b2.to_canonical_json().unwrap(), canon);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let d = unit_disk();
        assert!(matches!(
            d.contains(&Point(vec![0.0, 0.0, 0.0]), &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ray_exit_exact_kinds() {
        let d = unit_disk();
        let t = d
            .ray_exit(
                &Point::xy(0.0, 0.0),
                &UnitVector::from_vec2(Vec2::new(1.0, 0.0)).unwrap(),
                &tol(),
            )
            .unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let s = unit_square();
        let t = s
            .ray_exit(
                &Point::xy(0.25, 0.5),
                &UnitVector::from_vec2(Vec2::new(1.0, 0.0)).unwrap(),
                &tol(),
            )
            .unwrap();
        assert!((t - 0.75).abs() < 1e-12);
    }

    #[test]
    fn boundary_point_walk_hits_circle() {
        let d = unit_disk();
        for k in 0..16 {
            let a = TWO_PI * k as f64 / 16.0;
            let p = d.boundary_point_2d(Vec2::new(0.0, 0.0), a, &tol()).unwrap();
            assert!((p.norm() - 1.0).abs() < 1e-9);
        }
    }
}
