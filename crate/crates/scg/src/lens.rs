//! Lenses (intersections of all congruent balls through a pair of points),
//! short arcs with their midpoints, bisection sampling of arcs, and the arc
//! property test.

use crate::bodies::{Body, CircularArc};
use crate::geom::{
    ball_modulus, chord_circle_centers, norm_angle, perp_directions, Ball, Point, Tolerance,
    UnitVector, Vec2,
};
use crate::oracle::SampleConfig;
use crate::rng::CounterRng;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Intersection of all closed balls of radius `r` containing two points.
///
/// When the points are farther apart than `2r` no such ball exists and the
/// lens is the whole space ([`Lens::Universe`]). At distance exactly `2r`
/// there is a unique containing ball. In the plane the proper lens is the
/// intersection of the two extreme disks whose centers are the radius-`r`
/// circle centers through the chord; this reduction is cross-checked against
/// the sampled-center oracle rather than assumed silently. In higher
/// dimensions membership is evaluated against sampled containing centers
/// (documented approximation; no exact boundary is claimed).
#[derive(Debug, Clone)]
pub enum Lens {
    Universe,
    Degenerate(Point),
    Ball(Ball),
    Planar(PlanarLens),
    Sampled(SampledLens),
}

/// Proper planar lens bounded by two circular arcs of radius `r`.
#[derive(Debug, Clone)]
pub struct PlanarLens {
    pub x: Vec2,
    pub y: Vec2,
    pub r: f64,
    /// Centers of the two extreme disks.
    pub disk_centers: (Vec2, Vec2),
    /// Boundary arcs; both have radius `r` and meet exactly at `x` and `y`.
    pub arcs: [CircularArc; 2],
}

/// Higher-dimensional lens evaluated through sampled containing centers.
#[derive(Debug, Clone)]
pub struct SampledLens {
    pub x: Point,
    pub y: Point,
    pub r: f64,
    centers: Vec<Point>,
}

impl SampledLens {
    pub fn centers(&self) -> &[Point] {
        &self.centers
    }
}

const LENS_CENTER_SAMPLES: usize = 512;

/// Builds the lens of `x` and `y` for radius `r`.
pub fn lens(x: &Point, y: &Point, r: f64, tol: &Tolerance) -> Result<Lens> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("lens radius {r} must be positive")));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let d = x.dist(y);
    if d < 1e-300 {
        return Ok(Lens::Degenerate(x.clone()));
    }
    if d > 2.0 * r + tol.abs_geom {
        return Ok(Lens::Universe);
    }
    if (d - 2.0 * r).abs() <= tol.abs_geom {
        return Ok(Lens::Ball(Ball::new(x.mid(y), r)?));
    }
    if x.dim() == 2 {
        let (xv, yv) = (x.as_vec2()?, y.as_vec2()?);
        let (cp, cm) = chord_circle_centers(xv, yv, r)?;
        let arc_facing = |center: Vec2, other: Vec2| -> Result<CircularArc> {
            let phi = (other - center).angle();
            let half = ((center.dist(other) / (2.0 * r)).clamp(-1.0, 1.0)).acos();
            CircularArc::new(center, r, norm_angle(phi - half), 2.0 * half)
        };
        Ok(Lens::Planar(PlanarLens {
            x: xv,
            y: yv,
            r,
            disk_centers: (cp, cm),
            arcs: [arc_facing(cp, cm)?, arc_facing(cm, cp)?],
        }))
    } else {
        // sample the feasible center region B(x,r) ∩ B(y,r)
        let dim = x.dim();
        let rng = CounterRng::new(0x1e45);
        let lo: Vec<f64> = (0..dim)
            .map(|j| (x.0[j] - r).max(y.0[j] - r))
            .collect();
        let hi: Vec<f64> = (0..dim)
            .map(|j| (x.0[j] + r).min(y.0[j] + r))
            .collect();
        let mut centers = vec![x.mid(y)];
        let mut attempts = 0u64;
        while centers.len() < LENS_CENTER_SAMPLES && attempts < 200_000 {
            let c = Point(
                (0..dim)
                    .map(|j| rng.range(attempts, j as u64, lo[j], hi[j]))
                    .collect(),
            );
            attempts += 1;
            if c.dist(x) <= r && c.dist(y) <= r {
                centers.push(c);
            }
        }
        Ok(Lens::Sampled(SampledLens {
            x: x.clone(),
            y: y.clone(),
            r,
            centers,
        }))
    }
}

/// Membership in a lens (closed within `abs_geom`).
pub fn lens_contains(l: &Lens, p: &Point, tol: &Tolerance) -> Result<bool> {
    match l {
        Lens::Universe => Ok(true),
        Lens::Degenerate(q) => {
            if p.dim() != q.dim() {
                return Err(Error::DimensionMismatch {
                    expected: q.dim(),
                    got: p.dim(),
                });
            }
            Ok(p.dist(q) <= tol.abs_geom)
        }
        Lens::Ball(b) => {
            if p.dim() != b.center.dim() {
                return Err(Error::DimensionMismatch {
                    expected: b.center.dim(),
                    got: p.dim(),
                });
            }
            Ok(b.contains(p, tol))
        }
        Lens::Planar(pl) => {
            let v = p.as_vec2()?;
            Ok(v.dist(pl.disk_centers.0) <= pl.r + tol.abs_geom
                && v.dist(pl.disk_centers.1) <= pl.r + tol.abs_geom)
        }
        Lens::Sampled(s) => {
            if p.dim() != s.x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: s.x.dim(),
                    got: p.dim(),
                });
            }
            Ok(s.centers.iter().all(|c| c.dist(p) <= s.r + tol.abs_geom))
        }
    }
}

// ---------------------------------------------------------------------------
// Short arcs
// ---------------------------------------------------------------------------

/// Minor circular arc of radius `r` joining two points within a 2-plane.
///
/// The singleton `{x}` counts as a short arc of every radius. The midpoint of
/// a proper arc is the unique arc point whose offset from the chord midpoint
/// is orthogonal to the chord; it sits at distance `ball_modulus(r, ‖x−y‖)`
/// from the chord midpoint on the bulge side.
#[derive(Debug, Clone)]
pub enum ShortArc {
    Degenerate(Point),
    Proper(ProperArc),
}

#[derive(Debug, Clone)]
pub struct ProperArc {
    chord_mid: Point,
    u_chord: UnitVector,
    u_bulge: UnitVector,
    half_chord: f64,
    radius: f64,
}

impl ProperArc {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn chord_len(&self) -> f64 {
        2.0 * self.half_chord
    }

    pub fn start(&self) -> Point {
        self.embed(-self.half_chord, 0.0)
    }

    pub fn end(&self) -> Point {
        self.embed(self.half_chord, 0.0)
    }

    /// Direction from the chord midpoint toward the bulge.
    pub fn bulge_direction(&self) -> &UnitVector {
        &self.u_bulge
    }

    pub fn midpoint(&self) -> Point {
        let m = ball_modulus(self.radius, 2.0 * self.half_chord)
            .expect("chord fits by construction");
        self.embed(0.0, m)
    }

    /// Arc point at fraction `t ∈ [0, 1]` of the sweep (t=0 is `start`).
    pub fn point_at(&self, t: f64) -> Point {
        // plane coordinates: chord along the u-axis, bulge along the v-axis,
        // circle center at (0, -h)
        let h = (self.radius * self.radius - self.half_chord * self.half_chord)
            .max(0.0)
            .sqrt();
        let theta = h.atan2(self.half_chord); // endpoint (ℓ, h) seen from the center
        let a = (PI - theta) - t * (PI - 2.0 * theta);
        let px = self.radius * a.cos();
        let py = -h + self.radius * a.sin();
        self.embed(px, py)
    }

    pub fn sweep(&self) -> f64 {
        let h = (self.radius * self.radius - self.half_chord * self.half_chord)
            .max(0.0)
            .sqrt();
        PI - 2.0 * h.atan2(self.half_chord)
    }

    fn embed(&self, u: f64, v: f64) -> Point {
        Point(
            self.chord_mid
                .0
                .iter()
                .zip(self.u_chord.coords().iter().zip(self.u_bulge.coords()))
                .map(|(m, (cu, cv))| m + u * cu + v * cv)
                .collect(),
        )
    }

    /// Circle center (2D arcs only).
    pub fn center_2d(&self) -> Result<Vec2> {
        let h = (self.radius * self.radius - self.half_chord * self.half_chord)
            .max(0.0)
            .sqrt();
        let m = self.chord_mid.as_vec2()?;
        let b = self.u_bulge.as_vec2()?;
        Ok(m - b * h)
    }
}

impl ShortArc {
    pub fn midpoint(&self) -> Point {
        match self {
            ShortArc::Degenerate(p) => p.clone(),
            ShortArc::Proper(a) => a.midpoint(),
        }
    }
}

/// Both minor arcs of radius `r` joining two plane points, one per bulge
/// side (counterclockwise perpendicular first).
pub fn short_arcs(x: &Point, y: &Point, r: f64) -> Result<(ShortArc, ShortArc)> {
    if x.dim() != 2 || y.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: x.dim().max(y.dim()),
        });
    }
    let d = x.dist(y);
    if d < 1e-300 {
        return Ok((
            ShortArc::Degenerate(x.clone()),
            ShortArc::Degenerate(x.clone()),
        ));
    }
    let chord = UnitVector::from_vec2((y.as_vec2()? - x.as_vec2()?) * (1.0 / d))?;
    let w = perp_directions(&chord, 0)?;
    Ok((
        short_arc_with(x, y, r, &w[0])?,
        short_arc_with(x, y, r, &w[1])?,
    ))
}

/// The minor arc joining `x` and `y` bulging toward `w` (any dimension;
/// `w` must not be parallel to the chord — it is orthogonalized against it).
pub fn short_arc_with(x: &Point, y: &Point, r: f64, w: &UnitVector) -> Result<ShortArc> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("arc radius {r} must be positive")));
    }
    let d = x.dist(y);
    if d < 1e-300 {
        return Ok(ShortArc::Degenerate(x.clone()));
    }
    if d > 2.0 * r * (1.0 + 1e-12) {
        return Err(Error::NoContainingBall {
            radius: r,
            chord: d,
        });
    }
    let chord_vec = y.sub(x);
    let u_chord = UnitVector::new(chord_vec)?;
    let proj = w.as_point().dot(u_chord.as_point());
    let w_orth = w.as_point().sub(&u_chord.as_point().scale(proj));
    if w_orth.norm() < 1e-9 {
        return Err(Error::Domain(
            "bulge direction is parallel to the chord".into(),
        ));
    }
    let u_bulge = UnitVector::new(w_orth)?;
    Ok(ShortArc::Proper(ProperArc {
        chord_mid: x.mid(y),
        u_chord,
        u_bulge,
        half_chord: 0.5 * d.min(2.0 * r),
        radius: r,
    }))
}

/// Points of the arc generated by `levels` rounds of midpoint bisection:
/// `2^levels + 1` points from `x` to `y`, with squared chord gaps bounded by
/// `‖x−y‖²/2^levels`.
pub fn arc_sample(arc: &ShortArc, levels: u32) -> Vec<Point> {
    match arc {
        ShortArc::Degenerate(p) => vec![p.clone()],
        ShortArc::Proper(a) => {
            let n = 1usize << levels;
            (0..=n).map(|i| a.point_at(i as f64 / n as f64)).collect()
        }
    }
}

/// Outcome of a sampled containment check.
#[derive(Debug, Clone)]
pub struct ArcCheck {
    pub holds: bool,
    /// Lexicographically smallest sampled point found outside the body.
    pub witness: Option<Point>,
}

/// Tests whether every short arc of radius `r` joining `x` and `y` stays in
/// the body, by bisection sampling (`2^levels + 1` points per arc).
///
/// Pairs farther apart than `2r` pass vacuously. In the plane both bulge
/// sides are tested; in higher dimensions `cfg.planes` extra 2-planes
/// through the chord are tested in addition to the canonical ones. A `false`
/// result carries a witness point; `true` is resolution-limited.
pub fn arc_property(
    body: &Body,
    x: &Point,
    y: &Point,
    r: f64,
    levels: u32,
    cfg: &SampleConfig,
) -> Result<ArcCheck> {
    let tol = &cfg.tol;
    if !body.contains(x, tol)? {
        return Err(Error::NotInBody);
    }
    if !body.contains(y, tol)? {
        return Err(Error::NotInBody);
    }
    let d = x.dist(y);
    if d < 1e-300 {
        return Ok(ArcCheck {
            holds: true,
            witness: None,
        });
    }
    if d > 2.0 * r + tol.abs_geom {
        // no short arc exists; the arc property imposes no restriction
        return Ok(ArcCheck {
            holds: true,
            witness: None,
        });
    }
    let chord = UnitVector::new(y.sub(x))?;
    let mut bulges: Vec<UnitVector> = Vec::new();
    if body.dim() == 2 {
        bulges.extend(perp_directions(&chord, 0)?);
    } else {
        // one canonical representative per plane; test both bulges
        for w in perp_directions(&chord, cfg.planes)? {
            let canonical = w
                .coords()
                .iter()
                .find(|c| c.abs() > 1e-12)
                .map_or(true, |c| *c > 0.0);
            if canonical {
                bulges.push(w.neg());
                bulges.push(w);
            }
        }
    }
    let mut witness: Option<Point> = None;
    for w in &bulges {
        let arc = short_arc_with(x, y, r, w)?;
        for p in arc_sample(&arc, levels) {
            if !body.contains(&p, tol)? {
                witness = match witness {
                    Some(old) if old.lex_cmp(&p).is_le() => Some(old),
                    _ => Some(p),
                };
            }
        }
    }
    Ok(ArcCheck {
        holds: witness.is_none(),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{ConvexPolygon, DiskPolygon};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    const LENS_TOP: f64 = 0.13397459621556135; // 1 - sqrt(3)/2

    #[test]
    fn lens_universe_when_chord_exceeds_diameter() {
        let l = lens(&Point::xy(-2.0, 0.0), &Point::xy(2.0, 0.0), 1.0, &tol()).unwrap();
        assert!(matches!(l, Lens::Universe));
        assert!(lens_contains(&l, &Point::xy(1e6, 1e6), &tol()).unwrap());
    }

    #[test]
    fn lens_unique_ball_at_diameter() {
        let l = lens(&Point::xy(-1.0, 0.0), &Point::xy(1.0, 0.0), 1.0, &tol()).unwrap();
        match &l {
            Lens::Ball(b) => {
                assert!(b.center.dist(&Point::xy(0.0, 0.0)) < 1e-12);
                assert!((b.radius - 1.0).abs() < 1e-12);
            }
            other => panic!("expected ball, got {other:?}"),
        }
    }

    #[test]
    fn lens_degenerate_point() {
        let l = lens(&Point::xy(3.0, 4.0), &Point::xy(3.0, 4.0), 2.0, &tol()).unwrap();
        assert!(matches!(l, Lens::Degenerate(_)));
        assert!(lens_contains(&l, &Point::xy(3.0, 4.0), &tol()).unwrap());
        assert!(!lens_contains(&l, &Point::xy(3.0, 4.1), &tol()).unwrap());
    }

    #[test]
    fn lens_proper_boundary_point() {
        let l = lens(&Point::xy(-0.5, 0.0), &Point::xy(0.5, 0.0), 1.0, &tol()).unwrap();
        let pl = match &l {
            Lens::Planar(p) => p,
            other => panic!("expected planar lens, got {other:?}"),
        };
        for arc in &pl.arcs {
            for q in [arc.start_point(), arc.end_point()] {
                assert!(
                    q.dist(pl.x) < 1e-9 || q.dist(pl.y) < 1e-9,
                    "arc endpoint {q:?} is not a lens corner"
                );
            }
        }
        assert!(lens_contains(&l, &Point::xy(0.0, 0.0), &tol()).unwrap());
        assert!(!lens_contains(&l, &Point::xy(0.0, 0.2), &tol()).unwrap());
        // the arc apex sits on the boundary at the modulus height
        let apex = Point::xy(0.0, LENS_TOP);
        assert!(lens_contains(&l, &apex, &tol()).unwrap());
        assert!(!lens_contains(&l, &Point::xy(0.0, LENS_TOP + 1e-6), &tol()).unwrap());
    }

    #[test]
    fn lens_agrees_with_sampled_center_oracle() {
        // the two-extreme-disk reduction versus brute containing-ball sampling
        let x = Point::xy(-0.5, 0.0);
        let y = Point::xy(0.5, 0.0);
        let l = lens(&x, &y, 1.0, &tol()).unwrap();
        let oracle = crate::oracle::brute_lens(&x, &y, 1.0, &SampleConfig::default()).unwrap();
        let rng = CounterRng::new(11);
        let mut disagreements = 0;
        for i in 0..2000u64 {
            let p = Point::xy(rng.range(i, 0, -0.8, 0.8), rng.range(i, 1, -0.4, 0.4));
            let exact = lens_contains(&l, &p, &tol()).unwrap();
            let brute = oracle.classify(&p, &tol());
            if exact && !brute {
                panic!("oracle excluded a lens point {p:?}");
            }
            if exact != brute {
                disagreements += 1;
            }
        }
        assert!(
            disagreements < 40,
            "oracle disagreed on {disagreements}/2000 samples"
        );
    }

    #[test]
    fn short_arc_midpoints_at_modulus_height() {
        let (a, b) = short_arcs(&Point::xy(-0.5, 0.0), &Point::xy(0.5, 0.0), 1.0).unwrap();
        let ma = a.midpoint();
        let mb = b.midpoint();
        assert!(ma.dist(&Point::xy(0.0, LENS_TOP)) < 1e-12, "{ma:?}");
        assert!(mb.dist(&Point::xy(0.0, -LENS_TOP)) < 1e-12, "{mb:?}");
        for arc in [&a, &b] {
            let m = arc.midpoint();
            let chord = Point::xy(1.0, 0.0);
            assert!(chord.dot(&m).abs() < 1e-12, "offset not orthogonal to chord");
        }
    }

    #[test]
    fn short_arc_semicircle() {
        let (a, b) = short_arcs(&Point::xy(-1.0, 0.0), &Point::xy(1.0, 0.0), 1.0).unwrap();
        assert!(a.midpoint().dist(&Point::xy(0.0, 1.0)) < 1e-12);
        assert!(b.midpoint().dist(&Point::xy(0.0, -1.0)) < 1e-12);
    }

    #[test]
    fn short_arc_singleton() {
        let (a, _) = short_arcs(&Point::xy(3.0, 4.0), &Point::xy(3.0, 4.0), 7.0).unwrap();
        assert!(matches!(a, ShortArc::Degenerate(_)));
        assert_eq!(arc_sample(&a, 5).len(), 1);
    }

    #[test]
    fn arc_sample_semicircle_levels() {
        let (upper, _) = short_arcs(&Point::xy(-1.0, 0.0), &Point::xy(1.0, 0.0), 1.0).unwrap();
        let pts = arc_sample(&upper, 0);
        assert_eq!(pts.len(), 2);
        assert!(pts[0].dist(&Point::xy(-1.0, 0.0)) < 1e-12);
        assert!(pts[1].dist(&Point::xy(1.0, 0.0)) < 1e-12);

        let pts = arc_sample(&upper, 1);
        assert_eq!(pts.len(), 3);
        assert!(pts[1].dist(&Point::xy(0.0, 1.0)) < 1e-12);

        let pts = arc_sample(&upper, 2);
        let q = 0.5f64.sqrt();
        assert!(pts[1].dist(&Point::xy(-q, q)) < 1e-12);
        assert!(pts[3].dist(&Point::xy(q, q)) < 1e-12);
        for p in &pts {
            assert!((p.norm() - 1.0).abs() < 1e-12, "sample off the circle");
        }
    }

    #[test]
    fn arc_sample_gaps_halve_in_chord_square() {
        let (arc, _) = short_arcs(&Point::xy(-0.7, 0.1), &Point::xy(0.4, 0.3), 0.8).unwrap();
        let chord_sq = Point::xy(-0.7, 0.1).dist(&Point::xy(0.4, 0.3)).powi(2);
        for levels in 0..8u32 {
            let pts = arc_sample(&arc, levels);
            let max_gap_sq = pts
                .windows(2)
                .map(|w| w[0].dist(&w[1]).powi(2))
                .fold(0.0f64, f64::max);
            assert!(
                max_gap_sq <= chord_sq / (1u64 << levels) as f64 + 1e-12,
                "levels={levels}"
            );
        }
    }

    #[test]
    fn arc_property_on_disk() {
        let disk = Body::Disks(DiskPolygon::single(Vec2::new(0.0, 0.0), 1.0, &tol()).unwrap());
        let cfg = SampleConfig::default();
        let chk = arc_property(
            &disk,
            &Point::xy(-0.5, 0.0),
            &Point::xy(0.5, 0.0),
            1.0,
            10,
            &cfg,
        )
        .unwrap();
        assert!(chk.holds, "disk is 1-convex; witness {:?}", chk.witness);
    }

    #[test]
    fn arc_property_fails_on_square_flat_edge() {
        let square = Body::Polygon(
            ConvexPolygon::new(vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ])
            .unwrap(),
        );
        let cfg = SampleConfig::default();
        let chk = arc_property(
            &square,
            &Point::xy(0.1, 0.0),
            &Point::xy(0.9, 0.0),
            10.0,
            10,
            &cfg,
        )
        .unwrap();
        assert!(!chk.holds, "lower bulge must exit through the flat edge");
        let w = chk.witness.unwrap();
        assert!(w.0[1] < 0.0, "witness should be below the edge: {w:?}");
    }

    #[test]
    fn arc_property_vacuous_beyond_diameter() {
        let disk = Body::Disks(DiskPolygon::single(Vec2::new(0.0, 0.0), 1.0, &tol()).unwrap());
        let cfg = SampleConfig::default();
        let chk = arc_property(
            &disk,
            &Point::xy(-1.0, 0.0),
            &Point::xy(1.0, 0.0),
            0.9,
            10,
            &cfg,
        )
        .unwrap();
        assert!(chk.holds, "pairs farther than 2r are unconstrained");
    }

    #[test]
    fn arc_property_rejects_outside_points() {
        let disk = Body::Disks(DiskPolygon::single(Vec2::new(0.0, 0.0), 1.0, &tol()).unwrap());
        let cfg = SampleConfig::default();
        assert!(matches!(
            arc_property(&disk, &Point::xy(2.0, 0.0), &Point::xy(0.0, 0.0), 1.0, 4, &cfg),
            Err(Error::NotInBody)
        ));
    }
}
