//! Convex hulls of point clouds and hull-depth queries.
//!
//! The 3D hull is built incrementally with exact orientation predicates, so
//! coplanar and nearly coplanar inputs never produce inconsistent
//! visibility decisions. Depths are measured in floating point afterwards.

use std::collections::HashMap;

use robust::{orient2d, orient3d, Coord, Coord3D};
use serde::{Deserialize, Serialize};

pub type Point3 = [f64; 3];

fn c3(p: &Point3) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

fn orient(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> f64 {
    orient3d(c3(a), c3(b), c3(c), c3(d))
}

fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point3, b: &Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Triangulated boundary of the convex hull of a 3D cloud. Faces are
/// oriented so that `orient3d(a, b, c, inside) > 0`.
#[derive(Clone, Debug)]
pub struct Hull3 {
    pub faces: Vec<[usize; 3]>,
    inside: Point3,
}

/// Builds the hull, or returns `None` when all points are coplanar.
pub fn hull3(points: &[Point3]) -> Option<Hull3> {
    let (i0, i1, i2, i3) = initial_simplex(points)?;
    let inside = {
        let s = [i0, i1, i2, i3].map(|i| points[i]);
        [0, 1, 2].map(|k| s.iter().map(|p| p[k]).sum::<f64>() / 4.0)
    };
    let mut hull = Hull3 {
        faces: Vec::new(),
        inside,
    };
    for f in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        hull.push_face(points, f);
    }
    for (p, pt) in points.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let visible: Vec<bool> = hull
            .faces
            .iter()
            .map(|f| orient(&points[f[0]], &points[f[1]], &points[f[2]], pt) < 0.0)
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        // Horizon: edges owned by exactly one visible face.
        let mut edges: HashMap<(usize, usize), (usize, usize, u32)> = HashMap::new();
        for (f, _) in hull.faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (a.min(b), a.max(b));
                edges.entry(key).or_insert((a, b, 0)).2 += 1;
            }
        }
        let mut kept: Vec<[usize; 3]> = hull
            .faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| *f)
            .collect();
        std::mem::swap(&mut hull.faces, &mut kept);
        let mut horizon: Vec<(usize, usize)> = edges
            .values()
            .filter(|e| e.2 == 1)
            .map(|e| (e.0, e.1))
            .collect();
        horizon.sort_unstable();
        for (a, b) in horizon {
            hull.push_face(points, [a, b, p]);
        }
    }
    Some(hull)
}

fn initial_simplex(points: &[Point3]) -> Option<(usize, usize, usize, usize)> {
    let i0 = 0;
    let i1 = (1..points.len()).find(|&i| points[i] != points[i0])?;
    let d = sub(&points[i1], &points[i0]);
    let i2 = (1..points.len()).find(|&i| {
        let c = cross(&d, &sub(&points[i], &points[i0]));
        dot(&c, &c) > 0.0
    })?;
    let i3 = (1..points.len()).find(|&i| orient(&points[i0], &points[i1], &points[i2], &points[i]) != 0.0)?;
    Some((i0, i1, i2, i3))
}

impl Hull3 {
    fn push_face(&mut self, points: &[Point3], [a, b, c]: [usize; 3]) {
        let o = orient(&points[a], &points[b], &points[c], &self.inside);
        self.faces.push(if o >= 0.0 { [a, b, c] } else { [a, c, b] });
    }

    /// Indices of points that are corners of some face.
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.faces.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Distance from `q` to the nearest face plane, positive inside.
    pub fn depth(&self, points: &[Point3], q: &Point3) -> f64 {
        let mut best = f64::INFINITY;
        for f in &self.faces {
            let a = &points[f[0]];
            let n = cross(&sub(&points[f[1]], a), &sub(&points[f[2]], a));
            let len = dot(&n, &n).sqrt();
            if len == 0.0 {
                continue;
            }
            // Faces are oriented with the interior on the negative side of n.
            let d = -dot(&n, &sub(q, a)) / len;
            best = best.min(d);
        }
        best
    }

    /// Enclosed volume.
    pub fn volume(&self, points: &[Point3]) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let a = sub(&points[f[0]], &self.inside);
                let b = sub(&points[f[1]], &self.inside);
                let c = sub(&points[f[2]], &self.inside);
                dot(&a, &cross(&b, &c)) / 6.0
            })
            .sum()
    }
}

/// Counter-clockwise hull of planar points (monotone chain), without
/// collinear boundary points.
pub fn hull2(points: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let turn = |o: usize, a: usize, b: usize| {
        let c = |i: usize| Coord {
            x: points[i][0],
            y: points[i][1],
        };
        orient2d(c(o), c(a), c(b))
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], i) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], i) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Area of a polygon given by vertex indices in order.
pub fn polygon_area(points: &[[f64; 2]], ring: &[usize]) -> f64 {
    let m = ring.len();
    if m < 3 {
        return 0.0;
    }
    let twice: f64 = (0..m)
        .map(|k| {
            let (a, b) = (points[ring[k]], points[ring[(k + 1) % m]]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    twice.abs() / 2.0
}

/// Distance from `q` to the nearest edge line of a counter-clockwise ring,
/// positive inside.
fn depth2(points: &[[f64; 2]], ring: &[usize], q: &[f64; 2]) -> f64 {
    let m = ring.len();
    if m < 3 {
        return 0.0;
    }
    (0..m)
        .map(|k| {
            let (a, b) = (points[ring[k]], points[ring[(k + 1) % m]]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len = (ex * ex + ey * ey).sqrt();
            (ex * (q[1] - a[1]) - ey * (q[0] - a[0])) / len
        })
        .fold(f64::INFINITY, f64::min)
}

/// Upper hull of `(x, y)` samples as a piecewise-linear function,
/// evaluated back at every sample's abscissa. Samples sharing an abscissa
/// all receive the hull value there.
pub fn upper_hull_values(xy: &[(f64, f64)]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xy.len()).collect();
    idx.sort_by(|&a, &b| xy[a].0.total_cmp(&xy[b].0).then(xy[a].1.total_cmp(&xy[b].1)));
    let mut chain: Vec<usize> = Vec::new();
    for &i in &idx {
        // Same abscissa: the later (larger) value replaces the earlier one.
        if let Some(&last) = chain.last() {
            if xy[last].0 == xy[i].0 {
                chain.pop();
            }
        }
        while chain.len() >= 2 {
            let (o, a) = (xy[chain[chain.len() - 2]], xy[chain[chain.len() - 1]]);
            let t = orient2d(Coord { x: o.0, y: o.1 }, Coord { x: a.0, y: a.1 }, Coord { x: xy[i].0, y: xy[i].1 });
            if t >= 0.0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(i);
    }
    xy.iter()
        .map(|&(x, y)| {
            let k = chain.partition_point(|&c| xy[c].0 <= x);
            if k == 0 {
                return y;
            }
            let a = xy[chain[k - 1]];
            if a.0 == x || k == chain.len() {
                return a.1.max(y);
            }
            let b = xy[chain[k]];
            let t = (x - a.0) / (b.0 - a.0);
            (a.1 + t * (b.1 - a.1)).max(y)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub n_points: usize,
    pub hull_vertices: usize,
    /// True when the cloud is coplanar and a 2D hull was used instead.
    pub degenerate: bool,
    pub tol: f64,
    /// Input indices lying inside the hull deeper than `tol`.
    pub interior: Vec<usize>,
    pub max_depth: f64,
}

impl ConvexityReport {
    pub fn is_convex_position(&self) -> bool {
        self.interior.is_empty()
    }
}

/// Reports every point that lies strictly inside the hull of the cloud at
/// depth greater than `tol`. Points of a convex body's boundary produce an
/// empty set.
pub fn convexity_check(points: &[Point3], tol: f64) -> ConvexityReport {
    let finite: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].iter().all(|v| v.is_finite()))
        .collect();
    let cloud: Vec<Point3> = finite.iter().map(|&i| points[i]).collect();
    let mut report = ConvexityReport {
        n_points: points.len(),
        hull_vertices: 0,
        degenerate: false,
        tol,
        interior: Vec::new(),
        max_depth: 0.0,
    };
    if let Some(h) = hull3(&cloud) {
        report.hull_vertices = h.vertices().len();
        for (k, q) in cloud.iter().enumerate() {
            let d = h.depth(&cloud, q);
            report.max_depth = report.max_depth.max(d);
            if d > tol {
                report.interior.push(finite[k]);
            }
        }
        return report;
    }
    report.degenerate = true;
    let Some(flat) = planar_coordinates(&cloud) else {
        // Collinear or empty: every point is on the boundary.
        return report;
    };
    let ring = hull2(&flat);
    report.hull_vertices = ring.len();
    for (k, q) in flat.iter().enumerate() {
        let d = depth2(&flat, &ring, q);
        report.max_depth = report.max_depth.max(d);
        if d > tol {
            report.interior.push(finite[k]);
        }
    }
    report
}

/// Isometric 2D coordinates for a coplanar cloud; `None` if collinear.
fn planar_coordinates(cloud: &[Point3]) -> Option<Vec<[f64; 2]>> {
    let o = *cloud.first()?;
    let far = cloud
        .iter()
        .max_by(|a, b| {
            let (da, db) = (sub(a, &o), sub(b, &o));
            dot(&da, &da).total_cmp(&dot(&db, &db))
        })
        .copied()?;
    let u = sub(&far, &o);
    let ul = dot(&u, &u).sqrt();
    if ul == 0.0 {
        return None;
    }
    let u = u.map(|v| v / ul);
    let mut normal = [0.0; 3];
    let mut best = 0.0;
    for p in cloud {
        let c = cross(&u, &sub(p, &o));
        let l = dot(&c, &c);
        if l > best {
            best = l;
            normal = c;
        }
    }
    if best == 0.0 {
        return None;
    }
    let nl = best.sqrt();
    let normal = normal.map(|v| v / nl);
    let v = cross(&normal, &u);
    Some(cloud.iter().map(|p| [dot(&sub(p, &o), &u), dot(&sub(p, &o), &v)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> Vec<Point3> {
        let mut v = Vec::new();
        for i in 0..8 {
            v.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        v
    }

    #[test]
    fn cube_vertices_are_all_extreme() {
        let r = convexity_check(&cube(), 1e-6);
        assert!(r.interior.is_empty());
        assert!(!r.degenerate);
        assert_eq!(r.hull_vertices, 8);
        let h = hull3(&cube()).unwrap();
        assert!((h.volume(&cube()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn centre_of_cube_is_interior() {
        let mut pts = cube();
        pts.push([0.5, 0.5, 0.5]);
        pts.push([0.5, 0.5, 1.0]); // on a face
        let r = convexity_check(&pts, 1e-6);
        assert_eq!(r.interior, vec![8]);
        assert!((r.max_depth - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sphere_points_are_on_the_hull() {
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..20 {
                let th = std::f64::consts::PI * (j as f64 + 0.5) / 20.0;
                let ph = 2.0 * std::f64::consts::PI * i as f64 / 40.0;
                pts.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
            }
        }
        let r = convexity_check(&pts, 1e-9);
        assert!(r.interior.is_empty(), "{:?}", r.interior);
        assert_eq!(r.hull_vertices, pts.len());
    }

    #[test]
    fn coplanar_cloud_falls_back_to_2d() {
        let pts: Vec<Point3> = vec![
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
            [0.0, 1.0, 1.0],
            [0.5, 0.5, 1.0],
        ];
        let r = convexity_check(&pts, 1e-6);
        assert!(r.degenerate);
        assert_eq!(r.interior, vec![4]);
        assert_eq!(r.hull_vertices, 4);
    }

    #[test]
    fn square_area() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0], [1.0, 0.5]];
        let ring = hull2(&pts);
        assert_eq!(ring.len(), 4);
        assert!((polygon_area(&pts, &ring) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn upper_hull_fills_dips() {
        let xy = [(0.0, 1.0), (1.0, 0.2), (2.0, 1.0), (3.0, 0.0)];
        let u = upper_hull_values(&xy);
        assert_eq!(u, vec![1.0, 1.0, 1.0, 0.0]);
        let same_x = [(0.0, 0.1), (0.0, 0.5), (1.0, 0.3)];
        assert_eq!(upper_hull_values(&same_x), vec![0.5, 0.5, 0.3]);
    }
}
