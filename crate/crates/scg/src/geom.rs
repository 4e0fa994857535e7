//! Scalar and vector primitives shared by every other module: points in ℝᵈ,
//! unit vectors, closed balls, axis-aligned boxes, the closed-form modulus of
//! a ball, chord/circle constructions and the tolerance policy.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Unit-vector normalization tolerance.
pub const TAU_UNIT: f64 = 1e-12;

/// Tolerance policy shared by all modules.
///
/// `abs_geom` classifies geometric predicates (membership, boundary hits),
/// `rel_geom` guards relative comparisons, and `grid_h` is the grid step used
/// by the brute-force oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_geom: f64,
    pub rel_geom: f64,
    pub grid_h: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_geom: 1e-9,
            rel_geom: 1e-12,
            grid_h: 0.01,
        }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<()> {
        if self.abs_geom > 0.0 && self.rel_geom > 0.0 && self.grid_h > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(
                "tolerances must be strictly positive".into(),
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// 2D vector
// ---------------------------------------------------------------------------

/// Plane point / vector. Exact boundary constructions live in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2 { x: a[0], y: a[1] }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Result<Vec2> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        Ok(self * (1.0 / n))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_angle(a: f64) -> Vec2 {
        Vec2::new(a.cos(), a.sin())
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn mid(self, o: Vec2) -> Vec2 {
        self.lerp(o, 0.5)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic (x, then y) comparison, used for deterministic witness
    /// tie-breaking.
    pub fn lex_cmp(self, o: Vec2) -> std::cmp::Ordering {
        self.x
            .total_cmp(&o.x)
            .then_with(|| self.y.total_cmp(&o.y))
    }

    pub fn to_point(self) -> Point {
        Point(vec![self.x, self.y])
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

// ---------------------------------------------------------------------------
// d-dimensional point
// ---------------------------------------------------------------------------

/// Point in ℝᵈ, d ≥ 2. The dimension is fixed per computation context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Domain("points need dimension >= 2".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("point coordinates must be finite".into()));
        }
        Ok(Point(coords))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn as_vec2(&self) -> Result<Vec2> {
        if self.0.len() == 2 {
            Ok(Vec2::new(self.0[0], self.0[1]))
        } else {
            Err(Error::DimensionMismatch {
                expected: 2,
                got: self.0.len(),
            })
        }
    }

    pub fn dist(&self, o: &Point) -> f64 {
        self.0
            .iter()
            .zip(&o.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, o: &Point) -> Point {
        Point(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Point) -> Point {
        Point(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mid(&self, o: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&o.0)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )
    }

    pub fn lex_cmp(&self, o: &Point) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&o.0) {
            let c = a.total_cmp(b);
            if c != std::cmp::Ordering::Equal {
                return c;
            }
        }
        self.0.len().cmp(&o.0.len())
    }
}

impl From<Vec2> for Point {
    fn from(v: Vec2) -> Self {
        v.to_point()
    }
}

// ---------------------------------------------------------------------------
// Unit vector
// ---------------------------------------------------------------------------

/// Direction with ‖·‖ = 1 within [`TAU_UNIT`], enforced by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Point);

impl UnitVector {
    /// Normalizes `v`; errors on (near-)zero input.
    pub fn new(v: Point) -> Result<Self> {
        let n = v.norm();
        if n < 1e-150 {
            return Err(Error::Domain(
                "zero vector cannot be normalized to a direction".into(),
            ));
        }
        Ok(UnitVector(v.scale(1.0 / n)))
    }

    pub fn from_vec2(v: Vec2) -> Result<Self> {
        Self::new(v.to_point())
    }

    pub fn as_point(&self) -> &Point {
        &self.0
    }

    pub fn coords(&self) -> &[f64] {
        self.0.coords()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_vec2(&self) -> Result<Vec2> {
        self.0.as_vec2()
    }

    pub fn dot(&self, o: &UnitVector) -> f64 {
        self.0.dot(&o.0)
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector(self.0.scale(-1.0))
    }
}

// ---------------------------------------------------------------------------
// Ball
// ---------------------------------------------------------------------------

/// Closed ball; radius 0 is permitted and denotes the singleton `{center}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if radius < 0.0 || !radius.is_finite() {
            return Err(Error::Domain(format!("ball radius {radius} < 0")));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: &Point, tol: &Tolerance) -> bool {
        self.center.dist(p) <= self.radius + tol.abs_geom
    }
}

// ---------------------------------------------------------------------------
// Axis-aligned box
// ---------------------------------------------------------------------------

/// Axis-aligned bounding box in ℝᵈ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() < 2 {
            return Err(Error::Domain("box corners must share dimension >= 2".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::Unbounded);
        }
        Ok(Aabb { lo, hi })
    }

    pub fn of_2d(xlo: f64, ylo: f64, xhi: f64, yhi: f64) -> Self {
        Aabb {
            lo: vec![xlo, ylo],
            hi: vec![xhi, yhi],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Point {
        Point(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| 0.5 * (l + h))
                .collect(),
        )
    }

    pub fn diag(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.0.len() == self.lo.len()
            && p.0
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (l, h))| *c >= *l && *c <= *h)
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|l| l - pad).collect(),
            hi: self.hi.iter().map(|h| h + pad).collect(),
        }
    }

    pub fn intersect(&self, o: &Aabb) -> Result<Aabb> {
        let lo: Vec<f64> = self
            .lo
            .iter()
            .zip(&o.lo)
            .map(|(a, b)| a.max(*b))
            .collect();
        let hi: Vec<f64> = self
            .hi
            .iter()
            .zip(&o.hi)
            .map(|(a, b)| a.min(*b))
            .collect();
        Aabb::new(lo, hi)
    }
}

// ---------------------------------------------------------------------------
// Closed-form ball modulus
// ---------------------------------------------------------------------------

/// Modulus of convexity of a closed ball of radius `r` at chord length `eps`:
/// `r − √(r² − eps²/4)`, evaluated in the cancellation-free form
/// `eps²/4 / (r + √(r² − eps²/4))`.
pub fn ball_modulus(r: f64, eps: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    if !(0.0..=2.0 * r * (1.0 + 1e-12)).contains(&eps) {
        return Err(Error::Domain(format!(
            "chord length {eps} outside [0, {}]",
            2.0 * r
        )));
    }
    let eps = eps.min(2.0 * r);
    let q = (r * r - 0.25 * eps * eps).max(0.0).sqrt();
    Ok(0.25 * eps * eps / (r + q))
}

/// The limit of `ball_modulus(r, eps) / eps²` as `eps → 0`, equal to `1/(8r)`.
pub fn ball_limit_constant(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    Ok(1.0 / (8.0 * r))
}

/// Centers of the two radius-`r` circles through the chord `x`–`y` (2D).
///
/// Returns `(m + h·n, m − h·n)` with `m` the chord midpoint, `n` the
/// counterclockwise unit normal of `y − x` and `h = √(r² − ‖x−y‖²/4)`.
/// The two centers coincide exactly when `‖x−y‖ = 2r`.
pub fn chord_circle_centers(x: Vec2, y: Vec2, r: f64) -> Result<(Vec2, Vec2)> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let d = x.dist(y);
    if d < 1e-150 {
        return Err(Error::DegenerateChord);
    }
    if d > 2.0 * r * (1.0 + 1e-12) {
        return Err(Error::NoContainingBall {
            radius: r,
            chord: d,
        });
    }
    let h = (r * r - 0.25 * d * d).max(0.0).sqrt();
    let n = (y - x).perp() * (1.0 / d);
    let m = x.mid(y);
    Ok((m + n * h, m + n * (-h)))
}

/// Directions orthogonal to `u`.
///
/// In 2D this is exactly the two perpendicular unit vectors (counterclockwise
/// first). In higher dimensions it is a deterministic orthonormal basis of
/// the orthogonal complement together with the negated basis vectors, plus
/// `extra` quasi-uniform unit samples of the complement sphere (drawn from a
/// fixed-seed counter RNG, so the output is reproducible).
pub fn perp_directions(u: &UnitVector, extra: usize) -> Result<Vec<UnitVector>> {
    let d = u.dim();
    if d == 2 {
        let v = u.as_vec2()?;
        return Ok(vec![
            UnitVector::from_vec2(v.perp())?,
            UnitVector::from_vec2(-v.perp())?,
        ]);
    }
    let mut basis: Vec<Vec<f64>> = vec![u.coords().to_vec()];
    // Gram–Schmidt over the standard basis, skipping near-dependent vectors.
    for i in 0..d {
        if basis.len() == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for b in &basis {
            let proj: f64 = e.iter().zip(b).map(|(a, c)| a * c).sum();
            for (ej, bj) in e.iter_mut().zip(b) {
                *ej -= proj * bj;
            }
        }
        let n: f64 = e.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            for c in &mut e {
                *c /= n;
            }
            basis.push(e);
        }
    }
    if basis.len() != d {
        return Err(Error::Domain("failed to complete orthonormal basis".into()));
    }
    let mut out = Vec::with_capacity(2 * (d - 1) + extra);
    for b in &basis[1..] {
        out.push(UnitVector::new(Point(b.clone()))?);
        out.push(UnitVector::new(Point(b.iter().map(|c| -c).collect()))?);
    }
    let rng = crate::rng::CounterRng::new(0x5ca1ab1e);
    for k in 0..extra {
        let raw = rng.unit_vector(k as u64, d);
        // project out the u component and renormalize
        let proj: f64 = raw.iter().zip(u.coords()).map(|(a, b)| a * b).sum();
        let v: Vec<f64> = raw
            .iter()
            .zip(u.coords())
            .map(|(a, b)| a - proj * b)
            .collect();
        let n: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-9 {
            out.push(UnitVector::new(Point(v))?);
        }
    }
    Ok(out)
}

/// Normalizes an angle to `[0, 2π)`.
pub fn norm_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    if r >= two_pi {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQ3_4: f64 = 0.8660254037844386; // sqrt(3)/2

    #[test]
    fn ball_modulus_zero_chord() {
        assert_eq!(ball_modulus(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn ball_modulus_diameter_chord() {
        assert!((ball_modulus(1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ball_modulus_unit_chord() {
        let got = ball_modulus(1.0, 1.0).unwrap();
        assert!((got - (1.0 - SQ3_4)).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn ball_modulus_domain_errors() {
        assert!(ball_modulus(1.0, -0.1).is_err());
        assert!(ball_modulus(1.0, 2.1).is_err());
        assert!(ball_modulus(0.0, 0.5).is_err());
        assert!(ball_modulus(-1.0, 0.5).is_err());
    }

    #[test]
    fn limit_constant_values() {
        assert_eq!(ball_limit_constant(1.0).unwrap(), 0.125);
        assert_eq!(ball_limit_constant(2.0).unwrap(), 0.0625);
        assert_eq!(ball_limit_constant(0.125).unwrap(), 1.0);
        assert!(ball_limit_constant(0.0).is_err());
    }

    #[test]
    fn chord_centers_diameter_case() {
        let (a, b) =
            chord_circle_centers(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), 1.0).unwrap();
        assert!(a.dist(Vec2::new(0.0, 0.0)) < 1e-12);
        assert!(b.dist(Vec2::new(0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn chord_centers_are_equidistant() {
        // oracle: each center must be at distance r from both endpoints
        let x = Vec2::new(-0.5, 0.0);
        let y = Vec2::new(0.5, 0.0);
        let (a, b) = chord_circle_centers(x, y, 1.0).unwrap();
        for c in [a, b] {
            assert!((c.dist(x) - 1.0).abs() < 1e-12);
            assert!((c.dist(y) - 1.0).abs() < 1e-12);
        }
        assert!((a.y.abs() - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((a + b).dist(x + y) < 1e-12, "centers symmetric about midpoint");
    }

    #[test]
    fn chord_centers_vertical_chord() {
        let x = Vec2::new(0.0, 0.0);
        let y = Vec2::new(0.0, 1.0);
        let (a, b) = chord_circle_centers(x, y, 1.0).unwrap();
        for c in [a, b] {
            assert!((c.dist(x) - 1.0).abs() < 1e-12);
            assert!((c.dist(y) - 1.0).abs() < 1e-12);
            assert!((c.y - 0.5).abs() < 1e-12);
            assert!((c.x.abs() - SQ3_4).abs() < 1e-12);
        }
    }

    #[test]
    fn chord_centers_errors() {
        let x = Vec2::new(0.0, 0.0);
        assert!(matches!(
            chord_circle_centers(x, x, 1.0),
            Err(Error::DegenerateChord)
        ));
        assert!(matches!(
            chord_circle_centers(x, Vec2::new(3.0, 0.0), 1.0),
            Err(Error::NoContainingBall { .. })
        ));
    }

    #[test]
    fn perp_directions_axis_cases() {
        let u = UnitVector::from_vec2(Vec2::new(1.0, 0.0)).unwrap();
        let dirs = perp_directions(&u, 0).unwrap();
        assert_eq!(dirs.len(), 2);
        assert!(dirs[0].as_vec2().unwrap().dist(Vec2::new(0.0, 1.0)) < 1e-15);
        assert!(dirs[1].as_vec2().unwrap().dist(Vec2::new(0.0, -1.0)) < 1e-15);

        let u = UnitVector::from_vec2(Vec2::new(0.0, 1.0)).unwrap();
        let dirs = perp_directions(&u, 0).unwrap();
        assert!(dirs[0].as_vec2().unwrap().dist(Vec2::new(-1.0, 0.0)) < 1e-15);
        assert!(dirs[1].as_vec2().unwrap().dist(Vec2::new(1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn perp_directions_3d_canonical() {
        let u = UnitVector::new(Point(vec![1.0, 0.0, 0.0])).unwrap();
        let dirs = perp_directions(&u, 0).unwrap();
        assert_eq!(dirs.len(), 4); // basis of the complement plus negations
        let expect = [
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0],
        ];
        for (d, e) in dirs.iter().zip(expect.iter()) {
            assert!(d.as_point().dist(&Point(e.clone())) < 1e-12);
        }
    }

    #[test]
    fn perp_directions_orthogonal_with_samples() {
        let u = UnitVector::new(Point(vec![0.3, -0.5, 0.2, 0.7])).unwrap();
        for v in perp_directions(&u, 16).unwrap() {
            assert!(v.as_point().dot(u.as_point()).abs() < TAU_UNIT);
            assert!((v.as_point().norm() - 1.0).abs() < TAU_UNIT);
        }
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(UnitVector::new(Point(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn ball_radius_zero_is_singleton() {
        let b = Ball::new(Point::xy(1.0, 2.0), 0.0).unwrap();
        let tol = Tolerance::default();
        assert!(b.contains(&Point::xy(1.0, 2.0), &tol));
        assert!(!b.contains(&Point::xy(1.0, 2.1), &tol));
        assert!(Ball::new(Point::xy(0.0, 0.0), -0.5).is_err());
    }

    #[test]
    fn modulus_ratio_strictly_above_limit_on_grid() {
        // δ(r,ε)/ε² > 1/(8r) strictly for ε ∈ (0, 2r]
        for i in 1..=20 {
            let r = 0.25 * i as f64;
            let thr = ball_limit_constant(r).unwrap();
            for j in 1..=20 {
                let eps = 2.0 * r * j as f64 / 20.0;
                let ratio = ball_modulus(r, eps).unwrap() / (eps * eps);
                assert!(ratio > thr, "r={r} eps={eps}: {ratio} <= {thr}");
            }
        }
    }

    #[test]
    fn modulus_nonincreasing_in_radius() {
        for j in 1..=10 {
            let eps = 0.1 * j as f64;
            let mut prev = f64::INFINITY;
            for i in 0..30 {
                let r = 0.5 * eps + 0.2 * i as f64 + 0.05;
                let m = ball_modulus(r, eps.min(2.0 * r)).unwrap();
                assert!(m <= prev + 1e-15, "eps={eps} r={r}");
                prev = m;
            }
        }
    }
}
