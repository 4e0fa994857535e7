//! Numerical evaluation of the modulus of convexity δ_Ω(ε), its directional
//! variant at a point, the dyadic limit estimate of δ_Ω(ε)/ε², and the
//! 1/(8r) threshold tests that certify or refute r-convexity.

use crate::bodies::{Body, Degeneracy};
use crate::geom::{ball_limit_constant, ball_modulus, Point, Tolerance, UnitVector, Vec2};
use crate::oracle::SampleConfig;
use crate::{Error, Result};
use serde::{Deserialize, Serialize, Serializer};
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Extended real with explicit sentinels — never a float infinity in
/// serialized output (`"inf"` / `"-inf"` strings), so downstream ratio
/// computations cannot silently propagate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PlusInf,
    MinusInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PlusInf => s.serialize_str("inf"),
            ExtReal::MinusInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(ExtReal::Finite)
                .ok_or_else(|| DeError::custom("non-f64 number")),
            serde_json::Value::String(s) if s == "inf" => Ok(ExtReal::PlusInf),
            serde_json::Value::String(s) if s == "-inf" => Ok(ExtReal::MinusInf),
            other => Err(DeError::custom(format!("bad extended real: {other}"))),
        }
    }
}

/// One evaluation of δ_Ω at a chord length.
///
/// `delta` is `+∞` exactly when no pair of body points realizes the chord
/// length (the defining implication is vacuous), and `-∞` when some such
/// pair has its midpoint outside the body (no admissible margin at all).
#[derive(Debug, Clone, Serialize)]
pub struct ModulusSample {
    pub eps: f64,
    pub delta: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_pair: Option<(Point, Point)>,
    /// Estimated absolute error of `delta` (0 is ideal; grid bodies carry
    /// their cell size here).
    pub err: f64,
}

impl ModulusSample {
    pub fn ratio(&self) -> Option<f64> {
        self.delta.finite().map(|d| d / (self.eps * self.eps))
    }
}

/// Estimate of δ_Ω(ε) = inf over pairs at distance ε of the midpoint depth.
///
/// The pair search is restricted to boundary pairs with local refinement (a
/// heuristic for closed convex bodies, cross-checked against the
/// unrestricted brute-force oracle); single-disk bodies dispatch to the
/// closed form. Guarantees are void when the body's convexity flag is wrong.
pub fn modulus(body: &Body, eps: f64, cfg: &SampleConfig) -> Result<ModulusSample> {
    let tol = &cfg.tol;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("chord length {eps} must be positive")));
    }
    let diam = body.diameter(tol)?;
    if eps > diam * (1.0 + 1e-9) + tol.abs_geom {
        return Ok(ModulusSample {
            eps,
            delta: ExtReal::PlusInf,
            witness_pair: None,
            err: 0.0,
        });
    }

    // exact dispatch for a single closed disk
    if let Some((c, r)) = body.as_single_disk() {
        let delta = ball_modulus(r, eps.min(2.0 * r))?;
        let h0 = (r * r - 0.25 * eps * eps).max(0.0).sqrt();
        let x = c + Vec2::new(-0.5 * eps, h0);
        let y = c + Vec2::new(0.5 * eps, h0);
        return Ok(ModulusSample {
            eps,
            delta: ExtReal::Finite(delta),
            witness_pair: Some((x.to_point(), y.to_point())),
            err: tol.abs_geom,
        });
    }

    // degenerate bodies: chords live on the segment, midpoints on the boundary
    if body.is_degenerate() {
        if let Body::Polygon(pg) = body {
            if pg.degeneracy() == Degeneracy::Segment {
                let a = pg.vertices()[0];
                let b = pg.vertices()[1];
                let dir = (b - a) * (1.0 / a.dist(b));
                let y = a + dir * eps;
                return Ok(ModulusSample {
                    eps,
                    delta: ExtReal::Finite(0.0),
                    witness_pair: Some((a.to_point(), y.to_point())),
                    err: 0.0,
                });
            }
        }
        // point-like bodies have no pairs at positive distance
        return Ok(ModulusSample {
            eps,
            delta: ExtReal::PlusInf,
            witness_pair: None,
            err: 0.0,
        });
    }

    if body.dim() == 2 {
        walk_search_2d(body, eps, cfg)
    } else {
        sampled_search_nd(body, eps, cfg)
    }
}

/// Boundary-pair search in the plane: walk the boundary from an interior
/// anchor, solve for the partner at chord length `eps` along the boundary,
/// and refine the best configuration by golden-section on the walk angle.
fn walk_search_2d(body: &Body, eps: f64, cfg: &SampleConfig) -> Result<ModulusSample> {
    let tol = &cfg.tol;
    let anchor = body.anchor()?.as_vec2()?;
    let n = cfg.pairs.max(64);
    let angles: Vec<f64> = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
    let bpts: Vec<Vec2> = angles
        .iter()
        .map(|&a| body.boundary_point_2d(anchor, a, tol))
        .collect::<Result<_>>()?;

    let bp = |a: f64| body.boundary_point_2d(anchor, a, tol);

    // forward partner of the boundary point at absolute angle `ax`
    let partner = |ax: f64, x: Vec2| -> Result<Option<(Vec2, f64)>> {
        let i0 = (ax / (TWO_PI / n as f64)).floor() as i64;
        let mut prev_a = ax;
        let mut prev_d = 0.0f64;
        for step in 1..=n as i64 {
            let j = i0 + step;
            let aj = TWO_PI * j as f64 / n as f64;
            let pj = bpts[(j.rem_euclid(n as i64)) as usize];
            let dj = x.dist(pj);
            if dj >= eps {
                // bracket found: bisect on chord length along the walk angle
                let mut lo = prev_a;
                let mut hi = aj;
                debug_assert!(prev_d < eps);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if x.dist(bp(mid)?) >= eps {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let ay = 0.5 * (lo + hi);
                return Ok(Some((bp(ay)?, ay)));
            }
            prev_a = aj;
            prev_d = dj;
        }
        Ok(None)
    };

    // midpoint depth: exact kinds use their closed formulas, grids their
    // distance transform; implicit bodies use a local nearest-boundary
    // search around the chord's angular window.
    let depth = |m: Vec2, a_lo: f64, a_hi: f64| -> Result<f64> {
        match body {
            Body::Implicit(_) => {
                let pad = 8.0 * TWO_PI / n as f64;
                local_boundary_depth(body, anchor, m, a_lo - pad, a_hi + pad, tol)
            }
            _ => body.boundary_distance(&m.to_point(), tol),
        }
    };

    let eval = |ax: f64| -> Result<Option<(f64, Vec2, Vec2)>> {
        let x = bp(ax)?;
        match partner(ax, x)? {
            Some((y, ay)) => {
                let d = depth(x.mid(y), ax, ay)?;
                Ok(Some((d, x, y)))
            }
            None => Ok(None),
        }
    };

    let mut best: Option<(f64, f64, Vec2, Vec2)> = None; // (depth, ax, x, y)
    for (i, &ax) in angles.iter().enumerate() {
        let x = bpts[i];
        if let Some((y, ay)) = partner(ax, x)? {
            let d = depth(x.mid(y), ax, ay)?;
            let better = match &best {
                Some((bd, _, bx, by)) => {
                    d < *bd
                        || (d == *bd
                            && (x, y) != (*bx, *by)
                            && x.lex_cmp(*bx).then(y.lex_cmp(*by)).is_lt())
                }
                None => true,
            };
            if better {
                best = Some((d, ax, x, y));
            }
        }
    }

    let Some((coarse_depth, ax0, mut wx, mut wy)) = best else {
        // eps exceeds every chord the walk can realize
        return Ok(ModulusSample {
            eps,
            delta: ExtReal::PlusInf,
            witness_pair: None,
            err: 0.0,
        });
    };

    // golden-section refinement of the walk angle around the best start
    let g = 0.5 * (3.0 - 5.0f64.sqrt());
    let mut lo = ax0 - TWO_PI / n as f64;
    let mut hi = ax0 + TWO_PI / n as f64;
    let score = |a: f64| -> Result<f64> {
        Ok(eval(a)?.map_or(f64::INFINITY, |(d, _, _)| d))
    };
    let mut x1 = lo + g * (hi - lo);
    let mut x2 = hi - g * (hi - lo);
    let mut f1 = score(x1)?;
    let mut f2 = score(x2)?;
    for _ in 0..48 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + g * (hi - lo);
            f1 = score(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - g * (hi - lo);
            f2 = score(x2)?;
        }
    }
    let mut delta = coarse_depth;
    let refined_at = if f1 <= f2 { x1 } else { x2 };
    if let Some((d, x, y)) = eval(refined_at)? {
        if d < delta {
            delta = d;
            wx = x;
            wy = y;
        }
    }
    let spread = (f1 - f2).abs();
    let kind_err = match body {
        Body::Grid(gb) => gb.h(),
        _ => tol.abs_geom,
    };
    Ok(ModulusSample {
        eps,
        delta: ExtReal::Finite(delta.max(0.0)),
        witness_pair: Some((wx.to_point(), wy.to_point())),
        err: kind_err.max(spread),
    })
}

/// Distance from `m` to the nearest boundary point with walk angle in
/// `[a_lo, a_hi]` (golden-section over the angle, seeded by a coarse scan).
/// Valid as a boundary distance when the chord is short relative to the
/// body, which is the regime of the modulus search.
fn local_boundary_depth(
    body: &Body,
    anchor: Vec2,
    m: Vec2,
    a_lo: f64,
    a_hi: f64,
    tol: &Tolerance,
) -> Result<f64> {
    let dist_at = |a: f64| -> Result<f64> {
        Ok(m.dist(body.boundary_point_2d(anchor, a, tol)?))
    };
    let coarse = 17;
    let mut best_a = a_lo;
    let mut best_d = f64::INFINITY;
    for i in 0..coarse {
        let a = a_lo + (a_hi - a_lo) * i as f64 / (coarse - 1) as f64;
        let d = dist_at(a)?;
        if d < best_d {
            best_d = d;
            best_a = a;
        }
    }
    let w = (a_hi - a_lo) / (coarse - 1) as f64;
    let mut lo = best_a - w;
    let mut hi = best_a + w;
    let g = 0.5 * (3.0 - 5.0f64.sqrt());
    let mut x1 = lo + g * (hi - lo);
    let mut x2 = hi - g * (hi - lo);
    let mut f1 = dist_at(x1)?;
    let mut f2 = dist_at(x2)?;
    for _ in 0..40 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + g * (hi - lo);
            f1 = dist_at(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - g * (hi - lo);
            f2 = dist_at(x2)?;
        }
    }
    Ok(best_d.min(f1).min(f2))
}

/// Sampled pair search for dimensions above 2: cloud points paired with
/// sampled chord directions, with the midpoint depth from the body's
/// directional distance estimate. Coarse by construction; its error is
/// reported in the sample.
fn sampled_search_nd(body: &Body, eps: f64, cfg: &SampleConfig) -> Result<ModulusSample> {
    let tol = &cfg.tol;
    let rng = crate::rng::CounterRng::new(cfg.seed ^ 0x6e64);
    let bb = body.bbox();
    let dim = body.dim();
    let mut cloud: Vec<Point> = body.boundary_samples(cfg.points.min(512), tol)?;
    cloud.extend((0..cfg.points.min(1024) as u64).filter_map(|i| {
        let c: Vec<f64> = (0..dim)
            .map(|j| rng.range(i, j as u64, bb.lo[j], bb.hi[j]))
            .collect();
        if body.member(&c, tol) {
            Some(Point(c))
        } else {
            None
        }
    }));
    let mut best: Option<(f64, Point, Point)> = None;
    for (i, x) in cloud.iter().enumerate() {
        for k in 0..cfg.directions.min(64) as u64 {
            let u = rng.unit_vector((i as u64) << 8 | k, dim);
            let y = Point(
                x.coords()
                    .iter()
                    .zip(&u)
                    .map(|(c, d)| c + eps * d)
                    .collect(),
            );
            if !body.member(y.coords(), tol) {
                continue;
            }
            let m = x.mid(&y);
            if !body.member(m.coords(), tol) {
                return Ok(ModulusSample {
                    eps,
                    delta: ExtReal::MinusInf,
                    witness_pair: Some((x.clone(), y)),
                    err: 0.0,
                });
            }
            let d = body.boundary_distance(&m, tol)?;
            if best.as_ref().map_or(true, |(bd, _, _)| d < *bd) {
                best = Some((d, x.clone(), y));
            }
        }
    }
    match best {
        Some((d, x, y)) => Ok(ModulusSample {
            eps,
            delta: ExtReal::Finite(d.max(0.0)),
            witness_pair: Some((x, y)),
            err: 0.05 * eps + tol.abs_geom, // direction discretization dominates
        }),
        None => Ok(ModulusSample {
            eps,
            delta: ExtReal::PlusInf,
            witness_pair: None,
            err: 0.0,
        }),
    }
}

// ---------------------------------------------------------------------------
// Directional modulus at a point
// ---------------------------------------------------------------------------

/// One evaluation of the directional modulus δ°_{Ω,x}(ε).
#[derive(Debug, Clone, Serialize)]
pub struct DirectionalSample {
    pub eps: f64,
    pub value: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(Point, Point)>, // (y, failing ray tip)
    pub err: f64,
}

/// Estimates δ°_{Ω,x}(ε): the largest margin δ such that for every body
/// point `y` at distance ε from `x` and every unit `v ⊥ (x−y)`, the point
/// `(x+y)/2 + δ·v` stays in the body.
///
/// `-∞` when no such `y` exists (empty supremum) or when some midpoint
/// already falls outside. At ε = 0 this is the inscribed-ball radius at `x`
/// clamped at zero. For convex bodies the estimate is the minimum first-exit
/// distance over sampled `(y, v)`; sampling a subset of the constraints can
/// only overestimate, so refutations drawn from it are sound.
pub fn directional_modulus(
    body: &Body,
    x: &Point,
    eps: f64,
    cfg: &SampleConfig,
) -> Result<DirectionalSample> {
    let tol = &cfg.tol;
    if !body.contains(x, tol)? {
        return Err(Error::NotInBody);
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::Domain(format!("chord length {eps} must be >= 0")));
    }
    if eps == 0.0 {
        let d = body.boundary_distance(x, tol)?.max(0.0);
        return Ok(DirectionalSample {
            eps,
            value: ExtReal::Finite(d),
            witness: None,
            err: tol.abs_geom,
        });
    }
    if body.dim() == 2 {
        directional_2d(body, x, eps, cfg)
    } else {
        directional_nd(body, x, eps, cfg)
    }
}

fn directional_2d(
    body: &Body,
    x: &Point,
    eps: f64,
    cfg: &SampleConfig,
) -> Result<DirectionalSample> {
    let tol = &cfg.tol;
    let xv = x.as_vec2()?;
    let m_angles = cfg.directions.max(64);
    let y_at = |phi: f64| xv + Vec2::from_angle(phi) * eps;
    let feasible = |phi: f64| body.member(&[y_at(phi).x, y_at(phi).y], tol);

    // exit distance of the worse perpendicular at chord angle phi
    let exit_at = |phi: f64| -> Result<Option<(f64, Vec2, Vec2)>> {
        let y = y_at(phi);
        if !body.member(&[y.x, y.y], tol) {
            return Ok(None);
        }
        let m = xv.mid(y);
        if !body.member(&[m.x, m.y], tol) {
            return Ok(Some((f64::NEG_INFINITY, y, m)));
        }
        let u = (y - xv) * (1.0 / eps);
        let mut worst = f64::INFINITY;
        let mut tip = m;
        for v in [u.perp(), -u.perp()] {
            let t = body.ray_exit(
                &m.to_point(),
                &UnitVector::from_vec2(v)?,
                tol,
            )?;
            if t < worst {
                worst = t;
                tip = m + v * t;
            }
        }
        Ok(Some((worst, y, tip)))
    };

    let mut best: Option<(f64, Vec2, Vec2, f64)> = None; // (value, y, tip, phi)
    let mut any_feasible = false;
    let mut consider = |r: Result<Option<(f64, Vec2, Vec2)>>, phi: f64| -> Result<bool> {
        if let Some((val, y, tip)) = r? {
            any_feasible = true;
            if val == f64::NEG_INFINITY {
                best = Some((val, y, tip, phi));
                return Ok(true); // midpoint outside: -inf, stop
            }
            if best.as_ref().map_or(true, |(b, _, _, _)| val < *b) {
                best = Some((val, y, tip, phi));
            }
        }
        Ok(false)
    };

    let phis: Vec<f64> = (0..m_angles)
        .map(|k| TWO_PI * k as f64 / m_angles as f64)
        .collect();
    for &phi in &phis {
        if consider(exit_at(phi), phi)? {
            break;
        }
    }

    // boundary chords: bisect feasibility transitions of y(φ)
    if best.as_ref().map_or(true, |(v, ..)| *v != f64::NEG_INFINITY) {
        for k in 0..m_angles {
            let a = phis[k];
            let b = phis[(k + 1) % m_angles] + if k + 1 == m_angles { TWO_PI } else { 0.0 };
            let fa = feasible(a);
            let fb = feasible(b);
            if fa != fb {
                let (mut lo, mut hi) = (a, b);
                // keep lo on the feasible side
                if !fa {
                    std::mem::swap(&mut lo, &mut hi);
                }
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if consider(exit_at(lo), lo)? {
                    break;
                }
            }
        }
    }

    if !any_feasible {
        return Ok(DirectionalSample {
            eps,
            value: ExtReal::MinusInf,
            witness: None,
            err: 0.0,
        });
    }
    let (mut val, mut wy, mut wtip, phi0) = best.expect("feasible chord recorded");
    if val == f64::NEG_INFINITY {
        return Ok(DirectionalSample {
            eps,
            value: ExtReal::MinusInf,
            witness: Some((wy.to_point(), wtip.to_point())),
            err: 0.0,
        });
    }

    // golden refinement of the chord angle around the coarse minimizer
    let g = 0.5 * (3.0 - 5.0f64.sqrt());
    let mut lo = phi0 - TWO_PI / m_angles as f64;
    let mut hi = phi0 + TWO_PI / m_angles as f64;
    let score = |phi: f64| -> Result<f64> {
        Ok(exit_at(phi)?.map_or(f64::INFINITY, |(v, _, _)| v))
    };
    let mut x1 = lo + g * (hi - lo);
    let mut x2 = hi - g * (hi - lo);
    let mut f1 = score(x1)?;
    let mut f2 = score(x2)?;
    for _ in 0..44 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + g * (hi - lo);
            f1 = score(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - g * (hi - lo);
            f2 = score(x2)?;
        }
    }
    let refined = if f1 <= f2 { x1 } else { x2 };
    if let Some((v, y, tip)) = exit_at(refined)? {
        if v < val {
            val = v;
            wy = y;
            wtip = tip;
        }
    }
    Ok(DirectionalSample {
        eps,
        value: ExtReal::Finite(val.max(0.0)),
        witness: Some((wy.to_point(), wtip.to_point())),
        err: tol.abs_geom.max((f1 - f2).abs()),
    })
}

fn directional_nd(
    body: &Body,
    x: &Point,
    eps: f64,
    cfg: &SampleConfig,
) -> Result<DirectionalSample> {
    let tol = &cfg.tol;
    let rng = crate::rng::CounterRng::new(cfg.seed ^ 0xd1c);
    let dim = body.dim();
    let mut best: Option<(f64, Point, Point)> = None;
    let mut any = false;
    for k in 0..cfg.directions.max(64) as u64 {
        let u = rng.unit_vector(k, dim);
        let y = Point(
            x.coords()
                .iter()
                .zip(&u)
                .map(|(c, d)| c + eps * d)
                .collect(),
        );
        if !body.member(y.coords(), tol) {
            continue;
        }
        any = true;
        let m = x.mid(&y);
        if !body.member(m.coords(), tol) {
            return Ok(DirectionalSample {
                eps,
                value: ExtReal::MinusInf,
                witness: Some((y, m)),
                err: 0.0,
            });
        }
        let chord = UnitVector::new(y.sub(x))?;
        for v in crate::geom::perp_directions(&chord, cfg.planes)? {
            let t = body.ray_exit(&m, &v, tol)?;
            if best.as_ref().map_or(true, |(b, _, _)| t < *b) {
                let tip = Point(
                    m.coords()
                        .iter()
                        .zip(v.coords())
                        .map(|(c, d)| c + t * d)
                        .collect(),
                );
                best = Some((t, y.clone(), tip));
            }
        }
    }
    if !any {
        return Ok(DirectionalSample {
            eps,
            value: ExtReal::MinusInf,
            witness: None,
            err: 0.0,
        });
    }
    let (v, y, tip) = best.expect("feasible chord recorded");
    Ok(DirectionalSample {
        eps,
        value: ExtReal::Finite(v.max(0.0)),
        witness: Some((y, tip)),
        err: 0.05 * eps + tol.abs_geom,
    })
}

// ---------------------------------------------------------------------------
// Limit estimate and threshold tests
// ---------------------------------------------------------------------------

/// Dyadic estimate of the limit of δ_Ω(ε)/ε².
///
/// The value is the final sample, not a fitted model; `cauchy_residual`
/// (largest successive ratio difference over the last three steps)
/// quantifies the observed convergence.
#[derive(Debug, Clone, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// `(ε_j, δ(ε_j)/ε_j²)`, ε decreasing.
    pub samples: Vec<(f64, f64)>,
    pub cauchy_residual: f64,
    /// `(eps0, k)`: ε_j = eps0·2^−j for j = 0..k.
    pub schedule: (f64, u32),
    #[serde(skip)]
    pub full_samples: Vec<ModulusSample>,
}

/// Evaluates δ_Ω at ε_j = eps0·2^−j for j = 0..k and reports the ratio
/// samples with a convergence residual.
pub fn limit_estimate(body: &Body, eps0: f64, k: u32, cfg: &SampleConfig) -> Result<LimitEstimate> {
    let tol = &cfg.tol;
    if !(eps0 > 0.0) {
        return Err(Error::Schedule(format!("eps0 {eps0} must be positive")));
    }
    let diam = body.diameter(tol)?;
    if eps0 > diam * (1.0 + 1e-9) + tol.abs_geom {
        return Err(Error::Schedule(format!(
            "eps0 {eps0} exceeds the body diameter {diam}"
        )));
    }
    let mut samples = Vec::with_capacity(k as usize + 1);
    let mut full = Vec::with_capacity(k as usize + 1);
    for j in 0..=k {
        let eps = eps0 * 0.5f64.powi(j as i32);
        let s = modulus(body, eps, cfg)?;
        match s.delta {
            ExtReal::Finite(d) => samples.push((eps, d / (eps * eps))),
            ExtReal::PlusInf => {
                return Err(Error::Schedule(format!(
                    "no pair at distance {eps}; eps0 too large"
                )))
            }
            ExtReal::MinusInf => {
                return Err(Error::Schedule(format!(
                    "a chord midpoint at distance {eps} leaves the body; body is not convex"
                )))
            }
        }
        full.push(s);
    }
    let ratios: Vec<f64> = samples.iter().map(|(_, r)| *r).collect();
    let diffs: Vec<f64> = ratios.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let tail = diffs.len().min(3);
    let cauchy_residual = diffs[diffs.len() - tail..]
        .iter()
        .fold(0.0f64, |a, b| a.max(*b));
    Ok(LimitEstimate {
        value: *ratios.last().expect("k >= 0 yields a sample"),
        samples,
        cauchy_residual,
        schedule: (eps0, k),
        full_samples: full,
    })
}

/// Certification verdict shared by the threshold and support reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

const RESIDUAL_MAX: f64 = 1e-3;

/// Outcome of the 1/(8r) threshold test.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub verdict: Verdict,
    pub r: f64,
    pub threshold: f64,
    /// `(ε, ratio, margin)` rows, ε decreasing.
    pub samples: Vec<ThresholdRow>,
    pub cauchy_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(Point, Point)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRow {
    pub epsilon: f64,
    pub delta: ExtReal,
    pub ratio: Option<f64>,
    pub margin: f64,
}

/// Compares the sampled ratios δ_Ω(ε)/ε² against 1/(8r).
///
/// Certified when every ratio clears the threshold minus its margin (twice
/// the estimated sampling error) and the residual is small; refuted, with a
/// witness pair, when some ratio falls below; inconclusive otherwise.
pub fn threshold_test(
    body: &Body,
    r: f64,
    eps0: f64,
    k: u32,
    cfg: &SampleConfig,
) -> Result<ThresholdReport> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let thr = ball_limit_constant(r)?;
    let est = limit_estimate(body, eps0, k, cfg)?;
    let mut rows = Vec::with_capacity(est.full_samples.len());
    let mut witness: Option<(Point, Point)> = None;
    let mut worst_gap = f64::INFINITY;
    let mut all_pass = true;
    for s in &est.full_samples {
        let margin = 2.0 * s.err / (s.eps * s.eps);
        let ratio = s.ratio();
        if let Some(rt) = ratio {
            let gap = rt - (thr - margin);
            if gap < 0.0 {
                all_pass = false;
                if gap < worst_gap {
                    worst_gap = gap;
                    witness = s.witness_pair.clone();
                }
            }
        }
        rows.push(ThresholdRow {
            epsilon: s.eps,
            delta: s.delta,
            ratio,
            margin,
        });
    }
    let verdict = if !all_pass {
        Verdict::Refuted
    } else if est.cauchy_residual <= RESIDUAL_MAX {
        Verdict::Certified
    } else {
        Verdict::Inconclusive
    };
    Ok(ThresholdReport {
        verdict,
        r,
        threshold: thr,
        samples: rows,
        cauchy_residual: est.cauchy_residual,
        witness: if verdict == Verdict::Refuted {
            witness
        } else {
            None
        },
    })
}

/// Per-probe outcome of the directional threshold test.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeVerdict {
    pub probe: Point,
    pub passed: bool,
    /// min over the schedule tail of δ°(ε)/ε².
    pub liminf_estimate: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(Point, Point)>,
}

/// Combined directional (pointwise) threshold report.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionalThresholdReport {
    pub verdict: Verdict,
    pub r: f64,
    pub threshold: f64,
    pub convexity_claimed: bool,
    pub probes: Vec<ProbeVerdict>,
}

/// Pointwise test of δ°_{Ω,x}(ε)/ε² ≳ 1/(8r) over a dyadic schedule.
///
/// The combined verdict is only `Certified` when the convexity flag is set:
/// without convexity the pointwise condition does not imply r-convexity
/// (two tangent balls pass it at every probe away from the tangency).
pub fn directional_threshold_test(
    body: &Body,
    probes: &[Point],
    r: f64,
    eps0: f64,
    k: u32,
    cfg: &SampleConfig,
) -> Result<DirectionalThresholdReport> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let thr = ball_limit_constant(r)?;
    let mut out = Vec::with_capacity(probes.len());
    let mut any_fail = false;
    for p in probes {
        let mut tail: Vec<(f64, f64, f64)> = Vec::new(); // (ratio, margin, eps)
        let mut minus_inf = false;
        let mut witness = None;
        for j in 0..=k {
            let eps = eps0 * 0.5f64.powi(j as i32);
            let s = directional_modulus(body, p, eps, cfg)?;
            match s.value {
                ExtReal::Finite(v) => {
                    tail.push((v / (eps * eps), 2.0 * s.err / (eps * eps), eps));
                }
                ExtReal::MinusInf => {
                    minus_inf = true;
                    witness = s.witness.clone();
                    break;
                }
                ExtReal::PlusInf => unreachable!("directional modulus never returns +inf"),
            }
            if witness.is_none() {
                witness = s.witness.clone();
            }
        }
        // liminf proxy: the minimum ratio over the schedule tail
        let tail_len = tail.len().min(3);
        let window = &tail[tail.len() - tail_len..];
        let stat = window
            .iter()
            .map(|(rt, _, _)| *rt)
            .fold(f64::INFINITY, f64::min);
        let margin = window.iter().map(|(_, mg, _)| *mg).fold(0.0f64, f64::max);
        let passed = !minus_inf && stat >= thr - margin;
        if !passed {
            any_fail = true;
        }
        out.push(ProbeVerdict {
            probe: p.clone(),
            passed,
            liminf_estimate: if minus_inf {
                ExtReal::MinusInf
            } else {
                ExtReal::Finite(stat)
            },
            witness: if passed { None } else { witness },
        });
    }
    let verdict = if any_fail {
        Verdict::Refuted
    } else if body.convexity_claimed() {
        Verdict::Certified
    } else {
        Verdict::Inconclusive
    };
    Ok(DirectionalThresholdReport {
        verdict,
        r,
        threshold: thr,
        convexity_claimed: body.convexity_claimed(),
        probes: out,
    })
}

/// CSV rows `epsilon,delta,ratio` (ratio empty for sentinel deltas).
pub fn samples_to_csv(samples: &[ModulusSample]) -> String {
    let mut out = String::from("epsilon,delta,ratio\n");
    for s in samples {
        let delta = match s.delta {
            ExtReal::Finite(d) => format!("{d:.17e}"),
            ExtReal::PlusInf => "inf".into(),
            ExtReal::MinusInf => "-inf".into(),
        };
        let ratio = s
            .ratio()
            .map(|r| format!("{r:.17e}"))
            .unwrap_or_default();
        out.push_str(&format!("{:.17e},{},{}\n", s.eps, delta, ratio));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{ConvexPolygon, DiskPolygon, ImplicitBody};

    fn cfg() -> SampleConfig {
        SampleConfig::default()
    }

    fn disk(r: f64) -> Body {
        Body::Disks(
            DiskPolygon::single(Vec2::new(0.0, 0.0), r, &Tolerance::default()).unwrap(),
        )
    }

    fn square() -> Body {
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
    fn disk_modulus_matches_closed_form() {
        let b = disk(1.0);
        let s = modulus(&b, 1.0, &cfg()).unwrap();
        let expect = 1.0 - 0.75f64.sqrt();
        assert!((s.delta.finite().unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn square_modulus_is_zero() {
        let b = square();
        let s = modulus(&b, 0.5, &cfg()).unwrap();
        assert_eq!(s.delta.finite().unwrap(), 0.0, "flat edges force zero");
    }

    #[test]
    fn modulus_beyond_diameter_is_plus_inf() {
        let b = disk(1.0);
        let s = modulus(&b, 3.0, &cfg()).unwrap();
        assert_eq!(s.delta, ExtReal::PlusInf);
    }

    #[test]
    fn lens_body_modulus_positive() {
        // two-disk lens searched by the boundary walk (no exact dispatch)
        let dp = DiskPolygon::intersect_disks(
            &[Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)],
            1.0,
            &Tolerance::default(),
        )
        .unwrap();
        let b = Body::Disks(dp);
        let s = modulus(&b, 0.2, &cfg()).unwrap();
        let d = s.delta.finite().unwrap();
        // boundary curvature radius is 1 everywhere, so δ matches the ball form
        let expect = ball_modulus(1.0, 0.2).unwrap();
        assert!((d - expect).abs() < 1e-6, "got {d}, expected {expect}");
    }

    #[test]
    fn ellipse_modulus_against_flattest_point() {
        // semi-axes (2,1): the flattest boundary point has curvature radius 4
        let e = Body::Implicit(ImplicitBody::ellipse(Vec2::new(0.0, 0.0), 2.0, 1.0).unwrap());
        let s = modulus(&e, 0.25, &cfg()).unwrap();
        let d = s.delta.finite().unwrap();
        let ratio = d / (0.25 * 0.25);
        assert!(
            (ratio - 1.0 / 32.0).abs() < 0.002,
            "ratio {ratio} far from 1/32"
        );
    }

    #[test]
    fn directional_modulus_disk_center() {
        let b = disk(1.0);
        let s = directional_modulus(&b, &Point::xy(0.0, 0.0), 0.0, &cfg()).unwrap();
        assert!((s.value.finite().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn directional_modulus_no_far_partner() {
        let b = disk(1.0);
        let s = directional_modulus(&b, &Point::xy(1.0, 0.0), 3.0, &cfg()).unwrap();
        assert_eq!(s.value, ExtReal::MinusInf, "empty supremum");
    }

    #[test]
    fn directional_modulus_boundary_chord() {
        // oracle (frozen): minimizing configuration is the boundary chord,
        // giving 1 − √(1 − ε²/4) = 1 − √0.9375 at ε = 0.5
        let b = disk(1.0);
        let s = directional_modulus(&b, &Point::xy(1.0, 0.0), 0.5, &cfg()).unwrap();
        let expect = 0.031754163448145779;
        let got = s.value.finite().unwrap();
        assert!((got - expect).abs() < 1e-6, "got {got}, expected {expect}");
    }

    #[test]
    fn directional_modulus_square_edge_is_zero() {
        let b = square();
        let s = directional_modulus(&b, &Point::xy(0.5, 0.0), 0.25, &cfg()).unwrap();
        assert_eq!(s.value.finite().unwrap(), 0.0);
    }

    #[test]
    fn limit_estimate_disk() {
        let b = disk(1.0);
        let est = limit_estimate(&b, 0.5, 8, &cfg()).unwrap();
        assert!((est.value - 0.125).abs() / 0.125 < 0.01, "value {}", est.value);
        assert!(est.cauchy_residual < 1e-3);
    }

    #[test]
    fn limit_estimate_square_is_zero() {
        let b = square();
        let est = limit_estimate(&b, 0.5, 6, &cfg()).unwrap();
        for (eps, ratio) in &est.samples {
            assert_eq!(*ratio, 0.0, "eps {eps}");
        }
    }

    #[test]
    fn limit_estimate_schedule_error() {
        let b = disk(1.0);
        assert!(matches!(
            limit_estimate(&b, 5.0, 3, &cfg()),
            Err(Error::Schedule(_))
        ));
    }

    #[test]
    fn threshold_disk_verdicts() {
        let b = disk(1.0);
        assert_eq!(
            threshold_test(&b, 1.0, 0.5, 6, &cfg()).unwrap().verdict,
            Verdict::Certified
        );
        assert_eq!(
            threshold_test(&b, 2.0, 0.5, 6, &cfg()).unwrap().verdict,
            Verdict::Certified
        );
        let rep = threshold_test(&b, 0.9, 0.5, 6, &cfg()).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn threshold_square_refuted() {
        let b = square();
        for r in [0.5, 1.0, 10.0] {
            let rep = threshold_test(&b, r, 0.5, 6, &cfg()).unwrap();
            assert_eq!(rep.verdict, Verdict::Refuted, "r = {r}");
        }
    }

    #[test]
    fn csv_format() {
        let rows = vec![
            ModulusSample {
                eps: 1.0,
                delta: ExtReal::Finite(0.125),
                witness_pair: None,
                err: 0.0,
            },
            ModulusSample {
                eps: 3.0,
                delta: ExtReal::PlusInf,
                witness_pair: None,
                err: 0.0,
            },
        ];
        let csv = samples_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "epsilon,delta,ratio");
        assert!(lines.next().unwrap().contains("1.25"));
        let inf_row = lines.next().unwrap();
        assert!(inf_row.contains(",inf,"), "{inf_row}");
        assert!(inf_row.ends_with(','), "ratio must be empty: {inf_row}");
    }

    #[test]
    fn ext_real_serialization() {
        assert_eq!(serde_json::to_string(&ExtReal::PlusInf).unwrap(), "\"inf\"");
        assert_eq!(
            serde_json::to_string(&ExtReal::MinusInf).unwrap(),
            "\"-inf\""
        );
        assert_eq!(serde_json::to_string(&ExtReal::Finite(0.5)).unwrap(), "0.5");
        let back: ExtReal = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(back, ExtReal::PlusInf);
    }
}
