//! Convex collision primitives: point distance queries and surface tessellation.

use nalgebra::{Matrix3, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::cloud::TriangleMesh;

/// Convex primitive in its own frame. Boxes and cylinders are centered on the
/// origin; cylinders run along the local z axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Box { half_extents: [f64; 3] },
    Cylinder { radius: f64, length: f64 },
    Hull { vertices: Vec<[f64; 3]> },
}

impl Shape {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Shape::Box { half_extents } => {
                if half_extents.iter().all(|h| h.is_finite() && *h > 0.0) {
                    Ok(())
                } else {
                    Err(format!("box half extents must be positive, got {half_extents:?}"))
                }
            }
            Shape::Cylinder { radius, length } => {
                if radius.is_finite() && length.is_finite() && *radius > 0.0 && *length > 0.0 {
                    Ok(())
                } else {
                    Err(format!(
                        "cylinder radius and length must be positive, got {radius} / {length}"
                    ))
                }
            }
            Shape::Hull { vertices } => {
                if vertices.len() < 4 {
                    return Err(format!("hull needs at least 4 vertices, got {}", vertices.len()));
                }
                if vertices.iter().flatten().any(|c| !c.is_finite()) {
                    return Err("hull vertex is not finite".into());
                }
                if hull_faces(&self.hull_points()).is_empty() {
                    return Err("hull vertices are degenerate (no volume)".into());
                }
                Ok(())
            }
        }
    }

    fn hull_points(&self) -> Vec<Point3<f64>> {
        match self {
            Shape::Hull { vertices } => vertices.iter().map(|v| Point3::from(*v)).collect(),
            _ => Vec::new(),
        }
    }

    /// Interior reference point (box/cylinder center, hull vertex mean).
    pub fn centroid(&self) -> Point3<f64> {
        match self {
            Shape::Hull { vertices } => {
                let n = vertices.len() as f64;
                let sum = vertices
                    .iter()
                    .fold(Vector3::zeros(), |acc, v| acc + Vector3::from(*v));
                Point3::from(sum / n)
            }
            _ => Point3::origin(),
        }
    }

    /// Euclidean distance from `p` (shape frame) to the solid; zero inside.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        match self {
            Shape::Box { half_extents } => {
                let excess = Vector3::new(
                    (p.x.abs() - half_extents[0]).max(0.0),
                    (p.y.abs() - half_extents[1]).max(0.0),
                    (p.z.abs() - half_extents[2]).max(0.0),
                );
                excess.norm()
            }
            Shape::Cylinder { radius, length } => {
                let radial = (p.x.hypot(p.y) - radius).max(0.0);
                let axial = (p.z.abs() - 0.5 * length).max(0.0);
                radial.hypot(axial)
            }
            Shape::Hull { vertices } => {
                let shifted: Vec<Vector3<f64>> =
                    vertices.iter().map(|v| Vector3::from(*v) - p.coords).collect();
                min_norm_in_hull(&shifted)
            }
        }
    }

    pub fn surface_area(&self) -> f64 {
        self.tessellate(f64::INFINITY).area()
    }

    /// Triangulates the surface so that no edge is much longer than `max_edge`.
    ///
    /// Cylinders always get at least 16 segments around.
    pub fn tessellate(&self, max_edge: f64) -> TriangleMesh {
        let divisions = |len: f64| -> usize {
            if max_edge.is_finite() && max_edge > 0.0 {
                ((len / max_edge).ceil() as usize).max(1)
            } else {
                1
            }
        };
        match self {
            Shape::Box { half_extents: h } => {
                let mut mesh = TriangleMesh::default();
                let h = Vector3::from(*h);
                // (normal axis, u axis, v axis) chosen so u × v points outward.
                for (n, u, v) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                    for sign in [1.0, -1.0] {
                        let mut e_n = Vector3::zeros();
                        e_n[n] = sign * h[n];
                        let mut e_u = Vector3::zeros();
                        e_u[u] = h[u];
                        let mut e_v = Vector3::zeros();
                        e_v[v] = sign * h[v];
                        let nu = divisions(2.0 * h[u]);
                        let nv = divisions(2.0 * h[v]);
                        grid_patch(&mut mesh, Point3::from(e_n), e_u, e_v, nu, nv);
                    }
                }
                mesh
            }
            Shape::Cylinder { radius, length } => {
                let segments = divisions(2.0 * std::f64::consts::PI * radius).max(16);
                let rings = divisions(*length);
                let radial = divisions(*radius);
                cylinder_mesh(*radius, *length, segments, rings, radial)
            }
            Shape::Hull { .. } => {
                let pts = self.hull_points();
                let mut mesh = TriangleMesh {
                    vertices: pts.clone(),
                    ..TriangleMesh::default()
                };
                for face in hull_faces(&pts) {
                    for k in 1..face.len() - 1 {
                        mesh.triangles.push([face[0], face[k], face[k + 1]]);
                    }
                }
                while max_edge.is_finite() && mesh.longest_edge() > max_edge {
                    mesh = mesh.subdivided();
                }
                mesh
            }
        }
    }
}

fn grid_patch(
    mesh: &mut TriangleMesh,
    center: Point3<f64>,
    half_u: Vector3<f64>,
    half_v: Vector3<f64>,
    nu: usize,
    nv: usize,
) {
    let base = mesh.vertices.len();
    for j in 0..=nv {
        for i in 0..=nu {
            let a = -1.0 + 2.0 * i as f64 / nu as f64;
            let b = -1.0 + 2.0 * j as f64 / nv as f64;
            mesh.vertices.push(center + half_u * a + half_v * b);
        }
    }
    let idx = |i: usize, j: usize| base + j * (nu + 1) + i;
    for j in 0..nv {
        for i in 0..nu {
            mesh.triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            mesh.triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
}

fn cylinder_mesh(
    radius: f64,
    length: f64,
    segments: usize,
    rings: usize,
    radial: usize,
) -> TriangleMesh {
    let mut mesh = TriangleMesh::default();
    let angle = |s: usize| 2.0 * std::f64::consts::PI * (s % segments) as f64 / segments as f64;
    let half = 0.5 * length;

    // side wall
    for r in 0..=rings {
        let z = -half + length * r as f64 / rings as f64;
        for s in 0..segments {
            let a = angle(s);
            mesh.vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let side = |r: usize, s: usize| r * segments + s % segments;
    for r in 0..rings {
        for s in 0..segments {
            mesh.triangles.push([side(r, s), side(r, s + 1), side(r + 1, s + 1)]);
            mesh.triangles.push([side(r, s), side(r + 1, s + 1), side(r + 1, s)]);
        }
    }

    // caps: concentric rings around a center vertex
    for (z, flip) in [(half, false), (-half, true)] {
        let center = mesh.vertices.len();
        mesh.vertices.push(Point3::new(0.0, 0.0, z));
        let ring_base = mesh.vertices.len();
        for k in 1..=radial {
            let rr = radius * k as f64 / radial as f64;
            for s in 0..segments {
                let a = angle(s);
                mesh.vertices.push(Point3::new(rr * a.cos(), rr * a.sin(), z));
            }
        }
        let ring = |k: usize, s: usize| ring_base + (k - 1) * segments + s % segments;
        let mut push = |t: [usize; 3]| {
            if flip {
                mesh.triangles.push([t[0], t[2], t[1]]);
            } else {
                mesh.triangles.push(t);
            }
        };
        for s in 0..segments {
            push([center, ring(1, s), ring(1, s + 1)]);
        }
        for k in 1..radial {
            for s in 0..segments {
                push([ring(k, s), ring(k + 1, s), ring(k + 1, s + 1)]);
                push([ring(k, s), ring(k + 1, s + 1), ring(k, s + 1)]);
            }
        }
    }
    mesh
}

/// Faces of the convex hull of `pts`, each as a counter-clockwise (outward)
/// vertex loop. Brute force; meant for the handful of vertices a collision hull has.
fn hull_faces(pts: &[Point3<f64>]) -> Vec<Vec<usize>> {
    let n = pts.len();
    let scale = pts
        .iter()
        .map(|p| (p - pts[0]).norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let mut planes: Vec<(Vector3<f64>, f64)> = Vec::new();
    let mut faces = Vec::new();

    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let normal = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
                let len = normal.norm();
                if len <= tol * scale {
                    continue;
                }
                let mut normal = normal / len;
                let mut offset = normal.dot(&pts[i].coords);
                let (mut above, mut below) = (false, false);
                for p in pts {
                    let d = normal.dot(&p.coords) - offset;
                    above |= d > tol;
                    below |= d < -tol;
                }
                if above && below {
                    continue;
                }
                if above {
                    normal = -normal;
                    offset = -offset;
                }
                if planes
                    .iter()
                    .any(|(n2, o2)| (n2 - normal).norm() < 1e-9 && (o2 - offset).abs() <= tol)
                {
                    continue;
                }
                planes.push((normal, offset));

                let on_plane: Vec<usize> = (0..n)
                    .filter(|&m| (normal.dot(&pts[m].coords) - offset).abs() <= tol)
                    .collect();
                faces.push(planar_hull_loop(pts, &on_plane, &normal));
            }
        }
    }
    if planes.len() < 4 {
        return Vec::new();
    }
    faces
}

/// Orders coplanar points counter-clockwise about `normal`, dropping interior
/// and collinear points (monotone chain).
fn planar_hull_loop(pts: &[Point3<f64>], ids: &[usize], normal: &Vector3<f64>) -> Vec<usize> {
    let seed = if normal.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = normal.cross(&seed).normalize();
    let v = normal.cross(&u);
    let mut proj: Vec<(Vector2<f64>, usize)> = ids
        .iter()
        .map(|&i| (Vector2::new(pts[i].coords.dot(&u), pts[i].coords.dot(&v)), i))
        .collect();
    proj.sort_by(|a, b| {
        a.0.x
            .partial_cmp(&b.0.x)
            .unwrap()
            .then(a.0.y.partial_cmp(&b.0.y).unwrap())
    });
    let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut hull: Vec<(Vector2<f64>, usize)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(Vector2<f64>, usize)>> = if pass == 0 {
            Box::new(proj.iter())
        } else {
            Box::new(proj.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2
                && cross(&hull[hull.len() - 2].0, &hull[hull.len() - 1].0, &p.0) <= 1e-15
            {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull.into_iter().map(|(_, i)| i).collect()
}

/// Minimum norm over the convex hull of `points` (Gilbert's algorithm with a
/// brute-force sub-simplex solver).
fn min_norm_in_hull(points: &[Vector3<f64>]) -> f64 {
    let scale = points.iter().map(|p| p.norm()).fold(0.0_f64, f64::max);
    let eps = 1e-12 * scale.max(1.0);
    let mut simplex = vec![points[0]];
    let mut x = points[0];
    for _ in 0..128 {
        if x.norm() <= eps {
            return 0.0;
        }
        let w = *points
            .iter()
            .min_by(|a, b| a.dot(&x).partial_cmp(&b.dot(&x)).unwrap())
            .unwrap();
        if x.dot(&x) - w.dot(&x) <= eps * x.norm() {
            break;
        }
        if simplex.iter().any(|s| (s - w).norm() <= eps) {
            break;
        }
        simplex.push(w);
        let (closest, support) = closest_on_simplex(&simplex);
        if support.len() == 4 {
            return 0.0;
        }
        simplex = support;
        x = closest;
    }
    x.norm()
}

/// Minimum-norm point of a simplex of at most four vertices and the smallest
/// vertex subset whose relative interior contains it.
fn closest_on_simplex(simplex: &[Vector3<f64>]) -> (Vector3<f64>, Vec<Vector3<f64>>) {
    let n = simplex.len();
    let mut best: Option<(f64, Vector3<f64>, Vec<Vector3<f64>>)> = None;
    for mask in 1u32..(1 << n) {
        let subset: Vec<Vector3<f64>> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| simplex[i])
            .collect();
        let Some(lambda) = affine_min_norm(&subset) else {
            continue;
        };
        if lambda.iter().any(|l| *l <= 0.0) && subset.len() > 1 {
            continue;
        }
        let point = subset
            .iter()
            .zip(&lambda)
            .fold(Vector3::zeros(), |acc, (p, l)| acc + p * *l);
        let norm = point.norm();
        let better = match &best {
            None => true,
            Some((b, _, s)) => norm < *b - 1e-15 || (norm <= *b + 1e-15 && subset.len() > s.len()),
        };
        if better {
            best = Some((norm, point, subset));
        }
    }
    let (_, point, subset) = best.expect("single vertices are always feasible");
    (point, subset)
}

/// Barycentric weights of the minimum-norm point on the affine hull of `pts`.
fn affine_min_norm(pts: &[Vector3<f64>]) -> Option<Vec<f64>> {
    let m = pts.len();
    if m == 1 {
        return Some(vec![1.0]);
    }
    // Minimize |p0 + Σ μ_i (p_i − p0)|² over μ.
    let edges: Vec<Vector3<f64>> = pts[1..].iter().map(|p| p - pts[0]).collect();
    let k = edges.len();
    let mut gram = Matrix3::<f64>::identity();
    let mut rhs = Vector3::<f64>::zeros();
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = edges[i].dot(&edges[j]);
        }
        rhs[i] = -edges[i].dot(&pts[0]);
    }
    let sub = gram.view((0, 0), (k, k)).into_owned();
    let det = sub.determinant();
    let scale = edges.iter().map(|e| e.norm_squared()).product::<f64>();
    if det.abs() <= 1e-12 * scale {
        return None;
    }
    let mu = sub.lu().solve(&rhs.rows(0, k).into_owned())?;
    let mut lambda = Vec::with_capacity(m);
    lambda.push(1.0 - mu.sum());
    lambda.extend(mu.iter());
    Some(lambda)
}
