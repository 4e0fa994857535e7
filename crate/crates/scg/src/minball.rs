//! Smallest enclosing circle of a planar point set (Welzl's algorithm with
//! move-to-front, deterministic shuffle).

use crate::geom::Vec2;
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    fn contains(&self, p: Vec2, slack: f64) -> bool {
        self.center.dist(p) <= self.radius + slack
    }
}

fn circle_two(a: Vec2, b: Vec2) -> Circle {
    let c = a.mid(b);
    Circle {
        center: c,
        radius: c.dist(a).max(c.dist(b)),
    }
}

fn circumcircle(a: Vec2, b: Vec2, c: Vec2) -> Option<Circle> {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    if d.abs() < 1e-300 {
        return None;
    }
    let ab2 = ab.norm_sq();
    let ac2 = ac.norm_sq();
    let ux = (ac.y * ab2 - ab.y * ac2) / d;
    let uy = (ab.x * ac2 - ac.x * ab2) / d;
    let center = a + Vec2::new(ux, uy);
    Some(Circle {
        center,
        radius: center.dist(a).max(center.dist(b)).max(center.dist(c)),
    })
}

/// Smallest circle enclosing all `points`. Returns radius 0 for a single
/// point; panics on an empty slice.
pub fn min_enclosing_circle(points: &[Vec2]) -> Circle {
    assert!(!points.is_empty(), "minimal enclosing circle of no points");
    let mut pts: Vec<Vec2> = points.to_vec();
    // deterministic Fisher–Yates
    let rng = CounterRng::new(0x6d65_6263); // "mebc"
    for i in (1..pts.len()).rev() {
        let j = (rng.bits(i as u64, 0) % (i as u64 + 1)) as usize;
        pts.swap(i, j);
    }

    let slack = 1e-10;
    let mut c = Circle {
        center: pts[0],
        radius: 0.0,
    };
    for i in 1..pts.len() {
        if c.contains(pts[i], slack) {
            continue;
        }
        c = Circle {
            center: pts[i],
            radius: 0.0,
        };
        for j in 0..i {
            if c.contains(pts[j], slack) {
                continue;
            }
            c = circle_two(pts[i], pts[j]);
            for k in 0..j {
                if c.contains(pts[k], slack) {
                    continue;
                }
                if let Some(cc) = circumcircle(pts[i], pts[j], pts[k]) {
                    c = cc;
                }
            }
        }
    }
    c
}
