//! Brute-force reference implementations.
//!
//! Deliberately simple and slow: these validate the estimators and exact
//! algorithms on small instances. They see a body only through its raw
//! membership predicate (plus scalar geometry) — never through the
//! boundary-structure algorithms they are used to check — and all sampling
//! is counter-based, so identical configurations produce identical outputs
//! regardless of thread count.

use crate::bodies::{Body, GridBody};
use crate::geom::{Aabb, Point, Tolerance, Vec2};
use crate::modulus::{ExtReal, ModulusSample};
use crate::rng::CounterRng;
use crate::{Error, Result};
use rayon::prelude::*;

/// Sampling budget shared by estimators, checkers and oracles.
///
/// Identical seed and counts give identical sample streams.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    /// Pair / walk-angle quantifier budget.
    pub pairs: usize,
    /// Direction quantifier budget.
    pub directions: usize,
    /// Extra 2-planes through a chord in dimensions above 2.
    pub planes: usize,
    /// Test-point / center-sample budget.
    pub points: usize,
    /// Boundary sample budget for point clouds.
    pub boundary_points: usize,
    /// Bisection depth of arc sampling (2^levels + 1 points per arc).
    pub arc_levels: u32,
    pub tol: Tolerance,
}

use serde::{Deserialize, Serialize};

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            seed: 0,
            pairs: 512,
            directions: 256,
            planes: 8,
            points: 4096,
            boundary_points: 512,
            arc_levels: 12,
            tol: Tolerance::default(),
        }
    }
}

impl SampleConfig {
    pub fn with_seed(seed: u64) -> Self {
        SampleConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn rng(&self) -> CounterRng {
        CounterRng::new(self.seed)
    }
}

// ---------------------------------------------------------------------------
// grid_body
// ---------------------------------------------------------------------------

/// Rasterizes a membership predicate into a [`GridBody`] (occupancy at cell
/// centers, distance transforms for signed distance).
pub fn grid_body<F>(membership: F, bbox: &Aabb, h: f64) -> Result<GridBody>
where
    F: Fn(&[f64]) -> bool,
{
    GridBody::sample(membership, bbox, h, false)
}

// ---------------------------------------------------------------------------
// brute_modulus (δ_Ω by enumeration)
// ---------------------------------------------------------------------------

/// Distance from `m` to the membership boundary, from the predicate alone:
/// directional first-flip bisection over `k` directions.
fn membership_depth(body: &Body, tol: &Tolerance, m: Vec2, reach: f64, k: usize) -> f64 {
    if !body.member(&[m.x, m.y], tol) {
        return 0.0;
    }
    let mut best = reach;
    for i in 0..k {
        let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
        let dir = Vec2::from_angle(a);
        // grow a bracket, then bisect
        let mut lo = 0.0f64;
        let mut hi = f64::NAN;
        let mut t = (best * 0.9).max(1e-6);
        // start near the current best: anything larger cannot improve
        if body.member(&[m.x + t * dir.x, m.y + t * dir.y], tol) {
            continue;
        }
        hi = t;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if body.member(&[m.x + mid * dir.x, m.y + mid * dir.y], tol) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min(0.5 * (lo + hi));
    }
    best
}

/// Brute-force δ_Ω(ε): enumerate pairs from a dense deterministic cloud
/// (occupancy-grid cell centers at step `tol.grid_h` plus boundary samples),
/// filter to `|‖x−y‖ − ε| ≤ h`, and minimize the midpoint depth. Documented
/// error bound: `2h`.
///
/// A distance-transform proxy prunes the enumeration; the surviving
/// candidates are re-evaluated with membership-only directional bisection.
pub fn brute_modulus(body: &Body, eps: f64, cfg: &SampleConfig) -> Result<ModulusSample> {
    let tol = &cfg.tol;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("chord length {eps} must be positive")));
    }
    if body.dim() != 2 {
        return brute_modulus_nd(body, eps, cfg);
    }
    let h = tol.grid_h;
    let bb = body.bbox().padded(h);
    let grid = GridBody::sample(|c| body.member(c, tol), &bb, h, body.convexity_claimed())?;

    // cloud: occupied cell centers + boundary samples from raw membership
    let mut cloud: Vec<Vec2> = grid
        .occupied_centers()
        .iter()
        .map(|p| Vec2::new(p.0[0], p.0[1]))
        .collect();
    cloud.extend(boundary_cloud_2d(body, tol, &grid, cfg.boundary_points, cfg.seed));

    // bucket hash over the padded box
    let s = 2.0 * h;
    let nx = ((bb.hi[0] - bb.lo[0]) / s).ceil() as i64 + 1;
    let ny = ((bb.hi[1] - bb.lo[1]) / s).ceil() as i64 + 1;
    let bucket_of = |p: Vec2| -> (i64, i64) {
        (
            (((p.x - bb.lo[0]) / s) as i64).clamp(0, nx - 1),
            (((p.y - bb.lo[1]) / s) as i64).clamp(0, ny - 1),
        )
    };
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); (nx * ny) as usize];
    for (i, p) in cloud.iter().enumerate() {
        let (bx, by) = bucket_of(*p);
        buckets[(by * nx + bx) as usize].push(i as u32);
    }

    // ring of bucket offsets covering the annulus |d − eps| <= h
    let r_out = ((eps + h) / s).ceil() as i64 + 1;
    let r_in = (((eps - h) / s / std::f64::consts::SQRT_2).floor() as i64 - 1).max(0);
    let mut ring: Vec<(i64, i64)> = Vec::new();
    for dx in -r_out..=r_out {
        for dy in -r_out..=r_out {
            if dx.abs().max(dy.abs()) >= r_in {
                ring.push((dx, dy));
            }
        }
    }

    // pass 1: minimum depth proxy over passing pairs
    let proxy = |m: Vec2| grid.signed_distance(&[m.x, m.y]);
    let scan = |i: usize| -> Option<(f64, u32, u32)> {
        let p = cloud[i];
        let (bx, by) = bucket_of(p);
        let mut best: Option<(f64, u32, u32)> = None;
        for (dx, dy) in &ring {
            let (cx, cy) = (bx + dx, by + dy);
            if cx < 0 || cy < 0 || cx >= nx || cy >= ny {
                continue;
            }
            for &j in &buckets[(cy * nx + cx) as usize] {
                if (j as usize) <= i {
                    continue;
                }
                let q = cloud[j as usize];
                let d = p.dist(q);
                if (d - eps).abs() <= h {
                    let pr = proxy(p.mid(q));
                    if best.map_or(true, |(b, _, _)| pr < b) {
                        best = Some((pr, i as u32, j));
                    }
                }
            }
        }
        best
    };
    let per_point: Vec<Option<(f64, u32, u32)>> =
        (0..cloud.len()).into_par_iter().map(scan).collect();
    let min_proxy = per_point
        .iter()
        .flatten()
        .map(|(p, _, _)| *p)
        .fold(f64::INFINITY, f64::min);
    if !min_proxy.is_finite() {
        return Ok(ModulusSample {
            eps,
            delta: ExtReal::PlusInf,
            witness_pair: None,
            err: 2.0 * h,
        });
    }

    // pass 2: collect candidates near the proxy minimum, bounded
    let window = 3.0 * h;
    let mut candidates: Vec<(f64, u32, u32)> = (0..cloud.len())
        .into_par_iter()
        .filter_map(|i| {
            let p = cloud[i];
            let (bx, by) = bucket_of(p);
            let mut out: Vec<(f64, u32, u32)> = Vec::new();
            for (dx, dy) in &ring {
                let (cx, cy) = (bx + dx, by + dy);
                if cx < 0 || cy < 0 || cx >= nx || cy >= ny {
                    continue;
                }
                for &j in &buckets[(cy * nx + cx) as usize] {
                    if (j as usize) <= i {
                        continue;
                    }
                    let q = cloud[j as usize];
                    let d = p.dist(q);
                    if (d - eps).abs() <= h {
                        let pr = proxy(p.mid(q));
                        if pr <= min_proxy + window {
                            out.push((pr, i as u32, j));
                        }
                    }
                }
            }
            if out.is_empty() {
                None
            } else {
                Some(out)
            }
        })
        .flatten()
        .collect();
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    candidates.truncate(512);

    // refinement with membership-only depth
    let reach = bb.diag();
    let refined = candidates
        .par_iter()
        .map(|&(_, i, j)| {
            let p = cloud[i as usize];
            let q = cloud[j as usize];
            let m = p.mid(q);
            if !body.member(&[m.x, m.y], tol) {
                (f64::NEG_INFINITY, i, j)
            } else {
                (membership_depth(body, tol, m, reach, 64), i, j)
            }
        })
        .reduce(
            || (f64::INFINITY, u32::MAX, u32::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        );
    let (depth, wi, wj) = refined;
    if depth == f64::NEG_INFINITY {
        let x = cloud[wi as usize].to_point();
        let y = cloud[wj as usize].to_point();
        return Ok(ModulusSample {
            eps,
            delta: ExtReal::MinusInf,
            witness_pair: Some((x, y)),
            err: 2.0 * h,
        });
    }
    Ok(ModulusSample {
        eps,
        delta: ExtReal::Finite(depth.max(0.0)),
        witness_pair: Some((cloud[wi as usize].to_point(), cloud[wj as usize].to_point())),
        err: 2.0 * h,
    })
}

/// Boundary samples from the membership predicate alone: bisection along
/// counter-seeded directions from the deepest grid cell.
fn boundary_cloud_2d(
    body: &Body,
    tol: &Tolerance,
    grid: &GridBody,
    n: usize,
    seed: u64,
) -> Vec<Vec2> {
    let anchor = grid.anchor();
    let a = Vec2::new(anchor.0[0], anchor.0[1]);
    if !body.member(&[a.x, a.y], tol) {
        return Vec::new();
    }
    let reach = grid.bbox().diag() + 1.0;
    let rng = CounterRng::new(seed ^ 0xb0);
    (0..n as u64)
        .map(|i| {
            let ang = rng.range(i, 0, 0.0, 2.0 * std::f64::consts::PI);
            let dir = Vec2::from_angle(ang);
            let mut lo = 0.0f64;
            let mut hi = reach;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if body.member(&[a.x + mid * dir.x, a.y + mid * dir.y], tol) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            a + dir * (0.5 * (lo + hi))
        })
        .collect()
}

fn brute_modulus_nd(body: &Body, eps: f64, cfg: &SampleConfig) -> Result<ModulusSample> {
    let tol = &cfg.tol;
    let h = tol.grid_h.max(eps / 8.0);
    let bb = body.bbox().padded(h);
    let grid = GridBody::sample(|c| body.member(c, tol), &bb, h, body.convexity_claimed())?;
    let mut cloud = grid.occupied_centers();
    if cloud.len() > 4000 {
        // deterministic thinning
        let stride = cloud.len() / 4000 + 1;
        cloud = cloud.into_iter().step_by(stride).collect();
    }
    let reach = bb.diag();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..cloud.len() {
        for j in (i + 1)..cloud.len() {
            let d = cloud[i].dist(&cloud[j]);
            if (d - eps).abs() <= h {
                let m = cloud[i].mid(&cloud[j]);
                if !body.member(m.coords(), tol) {
                    return Ok(ModulusSample {
                        eps,
                        delta: ExtReal::MinusInf,
                        witness_pair: Some((cloud[i].clone(), cloud[j].clone())),
                        err: 2.0 * h,
                    });
                }
                let depth = membership_depth_nd(body, tol, &m, reach, 48);
                if best.map_or(true, |(b, _, _)| depth < b) {
                    best = Some((depth, i, j));
                }
            }
        }
    }
    match best {
        Some((d, i, j)) => Ok(ModulusSample {
            eps,
            delta: ExtReal::Finite(d.max(0.0)),
            witness_pair: Some((cloud[i].clone(), cloud[j].clone())),
            err: 2.0 * h,
        }),
        None => Ok(ModulusSample {
            eps,
            delta: ExtReal::PlusInf,
            witness_pair: None,
            err: 2.0 * h,
        }),
    }
}

fn membership_depth_nd(body: &Body, tol: &Tolerance, m: &Point, reach: f64, k: usize) -> f64 {
    let rng = CounterRng::new(0xdeb7);
    let dim = m.dim();
    let mut best = reach;
    for i in 0..k as u64 {
        let dir = rng.unit_vector(i, dim);
        let at = |t: f64| -> Vec<f64> {
            m.coords().iter().zip(&dir).map(|(c, d)| c + t * d).collect()
        };
        let t0 = (best * 0.9).max(1e-6);
        if body.member(&at(t0), tol) {
            continue;
        }
        let mut lo = 0.0;
        let mut hi = t0;
        for _ in 0..45 {
            let mid = 0.5 * (lo + hi);
            if body.member(&at(mid), tol) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min(0.5 * (lo + hi));
    }
    best
}

// ---------------------------------------------------------------------------
// brute_lens
// ---------------------------------------------------------------------------

/// Sampled-center lens classifier: a point is "in" iff it lies in every
/// sampled ball of radius `r` containing both endpoints. Over-approximates
/// the true lens, converging as the sample count grows.
#[derive(Debug, Clone)]
pub struct BruteLens {
    pub r: f64,
    centers: Vec<Point>,
}

impl BruteLens {
    pub fn classify(&self, p: &Point, tol: &Tolerance) -> bool {
        self.centers.iter().all(|c| c.dist(p) <= self.r + tol.abs_geom)
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }
}

/// Samples feasible centers (balls of radius `r` through both points) by
/// rejection inside the intersection of the two center boxes.
pub fn brute_lens(x: &Point, y: &Point, r: f64, cfg: &SampleConfig) -> Result<BruteLens> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let d = x.dist(y);
    if d > 2.0 * r {
        return Err(Error::NoContainingBall {
            radius: r,
            chord: d,
        });
    }
    let dim = x.dim();
    let lo: Vec<f64> = (0..dim).map(|j| (x.0[j] - r).max(y.0[j] - r)).collect();
    let hi: Vec<f64> = (0..dim).map(|j| (x.0[j] + r).min(y.0[j] + r)).collect();
    let rng = cfg.rng();
    let mut centers = vec![x.mid(y)];
    let want = cfg.points.max(16);
    let mut attempts: u64 = 0;
    let max_attempts = 2000 * want as u64;
    while centers.len() < want && attempts < max_attempts {
        let c = Point(
            (0..dim)
                .map(|j| rng.range(attempts, 100 + j as u64, lo[j], hi[j]))
                .collect(),
        );
        attempts += 1;
        if c.dist(x) <= r && c.dist(y) <= r {
            centers.push(c);
        }
    }
    Ok(BruteLens { r, centers })
}

// ---------------------------------------------------------------------------
// brute hull membership
// ---------------------------------------------------------------------------

/// Sampled-center hull classifier: `p` is in the sampled hull iff every
/// sampled center whose radius-`r` ball covers all input points also covers
/// `p`.
#[derive(Debug, Clone)]
pub struct BruteHull {
    pub r: f64,
    centers: Vec<Point>,
}

impl BruteHull {
    pub fn new(points: &[Point], r: f64, cfg: &SampleConfig) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyBody);
        }
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radius {r} must be positive")));
        }
        let dim = points[0].dim();
        let lo: Vec<f64> = (0..dim)
            .map(|j| {
                points
                    .iter()
                    .map(|p| p.0[j])
                    .fold(f64::NEG_INFINITY, f64::max)
                    - r
            })
            .collect();
        let hi: Vec<f64> = (0..dim)
            .map(|j| points.iter().map(|p| p.0[j]).fold(f64::INFINITY, f64::min) + r)
            .collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Domain(
                "no ball of the given radius can contain the point set".into(),
            ));
        }
        let rng = cfg.rng();
        let mut centers: Vec<Point> = Vec::new();
        let want = cfg.points.max(16);
        let mut attempts: u64 = 0;
        let max_attempts = 4000 * want as u64;
        while centers.len() < want && attempts < max_attempts {
            let c = Point(
                (0..dim)
                    .map(|j| rng.range(attempts, 200 + j as u64, lo[j], hi[j]))
                    .collect(),
            );
            attempts += 1;
            if points.iter().all(|p| p.dist(&c) <= r) {
                centers.push(c);
            }
        }
        if centers.is_empty() {
            return Err(Error::Domain(
                "no feasible center found; the point set does not fit in a ball of this radius"
                    .into(),
            ));
        }
        Ok(BruteHull { r, centers })
    }

    pub fn classify(&self, p: &Point, tol: &Tolerance) -> bool {
        self.centers.iter().all(|c| c.dist(p) <= self.r + tol.abs_geom)
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }
}

/// One-shot form of the sampled hull membership test.
pub fn brute_hull_membership(
    points: &[Point],
    r: f64,
    p: &Point,
    cfg: &SampleConfig,
) -> Result<bool> {
    Ok(BruteHull::new(points, r, cfg)?.classify(p, &cfg.tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{ConvexPolygon, DiskPolygon};
    use crate::geom::ball_modulus;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn disk(r: f64) -> Body {
        Body::Disks(DiskPolygon::single(Vec2::new(0.0, 0.0), r, &tol()).unwrap())
    }

    #[test]
    fn brute_modulus_disk_agrees_with_closed_form() {
        let b = disk(1.0);
        let cfg = SampleConfig::default();
        let s = brute_modulus(&b, 1.0, &cfg).unwrap();
        let expect = ball_modulus(1.0, 1.0).unwrap();
        let got = s.delta.finite().unwrap();
        assert!(
            (got - expect).abs() <= 2.0 * cfg.tol.grid_h,
            "got {got}, expected {expect}"
        );
    }

    #[test]
    fn brute_modulus_square_is_near_zero() {
        let b = Body::Polygon(
            ConvexPolygon::new(vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ])
            .unwrap(),
        );
        let cfg = SampleConfig::default();
        let s = brute_modulus(&b, 0.5, &cfg).unwrap();
        let got = s.delta.finite().unwrap();
        assert!(got <= 2.0 * cfg.tol.grid_h, "got {got}");
    }

    #[test]
    fn brute_modulus_no_pair_is_plus_inf() {
        let b = disk(1.0);
        let s = brute_modulus(&b, 3.0, &SampleConfig::default()).unwrap();
        assert_eq!(s.delta, ExtReal::PlusInf);
    }

    #[test]
    fn brute_lens_classification() {
        let x = Point::xy(-0.5, 0.0);
        let y = Point::xy(0.5, 0.0);
        let cfg = SampleConfig::default();
        let l = brute_lens(&x, &y, 1.0, &cfg).unwrap();
        assert!(l.classify(&Point::xy(0.0, 0.0), &tol()));
        // 0.1 < 1 − √0.75: inside the exact lens, so inside the sampled one
        assert!(l.classify(&Point::xy(0.0, 0.1), &tol()));
        // 0.2 is outside; enough samples must exclude it
        assert!(!l.classify(&Point::xy(0.0, 0.2), &tol()));
    }

    #[test]
    fn brute_lens_infeasible_chord() {
        assert!(matches!(
            brute_lens(
                &Point::xy(-2.0, 0.0),
                &Point::xy(2.0, 0.0),
                1.0,
                &SampleConfig::default()
            ),
            Err(Error::NoContainingBall { .. })
        ));
    }

    #[test]
    fn brute_hull_membership_cases() {
        let pts = vec![Point::xy(-1.0, 0.0), Point::xy(1.0, 0.0)];
        let cfg = SampleConfig::default();
        assert!(brute_hull_membership(&pts, 1.0, &Point::xy(0.0, 0.5), &cfg).unwrap());
        assert!(!brute_hull_membership(&pts, 1.0, &Point::xy(0.0, 1.01), &cfg).unwrap());
        let corners = vec![
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::xy(1.0, 1.0),
            Point::xy(0.0, 1.0),
        ];
        assert!(brute_hull_membership(&corners, 1.0, &Point::xy(0.5, 0.5), &cfg).unwrap());
    }

    #[test]
    fn oracle_is_deterministic() {
        let b = disk(0.5);
        let cfg = SampleConfig::with_seed(7);
        let a = brute_modulus(&b, 0.4, &cfg).unwrap();
        let c = brute_modulus(&b, 0.4, &cfg).unwrap();
        assert_eq!(a.delta.finite(), c.delta.finite());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn grid_body_area() {
        let bb = Aabb::of_2d(-1.1, -1.1, 1.1, 1.1);
        let g = grid_body(|c| c[0] * c[0] + c[1] * c[1] <= 1.0, &bb, 0.01).unwrap();
        let area = g.occupied_cells() as f64 * 1e-4;
        assert!((area - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.01);
    }
}
