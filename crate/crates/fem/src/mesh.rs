//! Boundary-fitted Delaunay meshes of the unit disk aligned with phantom shapes.

use std::f64::consts::TAU;
use std::io::Write;

use eitmono_core::Phantom;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::{FemError, Result};

/// Target edge length giving about 2·10⁴ nodes.
pub const DEFAULT_H: f64 = 0.0135;

/// Interior fill points closer than this many `h` to a boundary are dropped.
const CLEARANCE: f64 = 0.6;

#[derive(Clone, Debug)]
pub struct DiskMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary vertices in increasing angle, at `θ_j = 2πj/M`.
    pub boundary: Vec<usize>,
    /// Phantom shape containing each element, if any.
    pub regions: Vec<Option<usize>>,
    pub h: f64,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

/// Triangulates the disk with `h`-spaced samples on the unit circle and on
/// every shape boundary (as constraint loops) and a hexagonal fill lattice.
pub fn mesh_disk(phantom: &Phantom, h: f64) -> Result<DiskMesh> {
    if !(h > 0.0 && h < 0.5) {
        return Err(FemError::InvalidMeshSize(h));
    }
    phantom.validate()?;

    let m = ((TAU / h).ceil() as usize).max(16);
    let mut points: Vec<[f64; 2]> = (0..m)
        .map(|j| {
            let t = TAU * j as f64 / m as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let mut edges: Vec<[usize; 2]> = (0..m).map(|j| [j, (j + 1) % m]).collect();

    for inclusion in &phantom.shapes {
        let loop_points = inclusion.shape.sample_boundary(h);
        let start = points.len();
        let k = loop_points.len();
        points.extend(loop_points);
        edges.extend((0..k).map(|j| [start + j, start + (j + 1) % k]));
    }

    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (1.0 / dy).ceil() as i64;
    let cols = (1.0 / h).ceil() as i64 + 1;
    for j in -rows..=rows {
        let y = j as f64 * dy;
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -cols..=cols {
            let p = [i as f64 * h + shift, y];
            let r = p[0].hypot(p[1]);
            if 1.0 - r < CLEARANCE * h || phantom.boundary_distance(p) < CLEARANCE * h {
                continue;
            }
            points.push(p);
        }
    }

    let input: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let count = input.len();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(input, edges)
        .map_err(|e| FemError::Mesh(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != count {
        return Err(FemError::Mesh("duplicate mesh points".into()));
    }

    let vertices: Vec<[f64; 2]> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let t = if signed_area(vertices[a], vertices[b], vertices[c]) > 0.0 {
            [a, b, c]
        } else {
            [a, c, b]
        };
        triangles.push(t);
    }
    let regions = triangles
        .iter()
        .map(|t| phantom.region(centroid(&vertices, t)))
        .collect();
    Ok(DiskMesh {
        vertices,
        triangles,
        boundary: (0..m).collect(),
        regions,
        h,
    })
}

pub fn centroid(vertices: &[[f64; 2]], t: &[usize; 3]) -> [f64; 2] {
    let [a, b, c] = t.map(|i| vertices[i]);
    [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
}

impl DiskMesh {
    pub fn node_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        signed_area(a, b, c)
    }

    /// Angle of boundary vertex `j`.
    pub fn boundary_angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.boundary.len() as f64
    }

    /// Writes the mesh in OFF format.
    pub fn write_off<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} 0", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {} 0", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use eitmono_core::phantom::Shape;
    use eitmono_core::{Ball, Inclusion};

    fn ball_phantom() -> Phantom {
        Phantom::single_ball(&Ball::from_xy(0.4, 0.0, 0.4).unwrap(), 4.0)
    }

    fn check_valid(mesh: &DiskMesh) {
        let total: f64 = (0..mesh.element_count()).map(|t| mesh.area(t)).sum();
        let m = mesh.boundary.len() as f64;
        // Area of the inscribed regular polygon.
        let polygon = 0.5 * m * (TAU / m).sin();
        assert!((total - polygon).abs() < 1e-10, "{total} vs {polygon}");
        for t in 0..mesh.element_count() {
            assert!(mesh.area(t) > 0.0);
        }
        for (j, &v) in mesh.boundary.iter().enumerate() {
            let p = mesh.vertices[v];
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            assert!((p[1].atan2(p[0]).rem_euclid(TAU) - mesh.boundary_angle(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_phantom_mesh() {
        let mesh = mesh_disk(&Phantom::empty(), 0.1).unwrap();
        check_valid(&mesh);
        assert!(mesh.regions.iter().all(|r| r.is_none()));
    }

    #[test]
    fn ball_mesh_is_aligned() {
        let phantom = ball_phantom();
        let mesh = mesh_disk(&phantom, 0.02).unwrap();
        check_valid(&mesh);
        let Shape::Ball { center, radius } = phantom.shapes[0].shape else { unreachable!() };
        let mut inside = 0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let c = centroid(&mesh.vertices, tri);
            let analytic = (c[0] - center[0]).hypot(c[1] - center[1]) < radius;
            assert_eq!(mesh.regions[t].is_some(), analytic);
            // All corners on one side, up to the chord sagitta.
            for v in tri.map(|i| mesh.vertices[i]) {
                let d = (v[0] - center[0]).hypot(v[1] - center[1]) - radius;
                if analytic {
                    assert!(d < 1e-12);
                } else {
                    assert!(d > -0.02 * 0.02 / radius);
                }
            }
            inside += analytic as usize;
        }
        assert!(inside > 0);
    }

    #[test]
    fn polygon_mesh_is_aligned() {
        let phantom = Phantom {
            shapes: vec![Inclusion {
                shape: Shape::Polygon {
                    vertices: vec![[-0.5, -0.5], [0.1, -0.5], [0.1, -0.3], [-0.3, -0.3], [-0.3, 0.2], [-0.5, 0.2]],
                },
                contrast: 4.0,
            }],
        };
        let mesh = mesh_disk(&phantom, 0.03).unwrap();
        check_valid(&mesh);
        let inside_area: f64 = (0..mesh.element_count())
            .filter(|&t| mesh.regions[t].is_some())
            .map(|t| mesh.area(t))
            .sum();
        assert!((inside_area - (0.6 * 0.2 + 0.2 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn refinement_quadruples_elements() {
        let coarse = mesh_disk(&ball_phantom(), 0.04).unwrap().element_count() as f64;
        let fine = mesh_disk(&ball_phantom(), 0.02).unwrap().element_count() as f64;
        let ratio = fine / coarse;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn default_mesh_size() {
        let n = mesh_disk(&Phantom::empty(), DEFAULT_H).unwrap().node_count();
        assert!((15_000..25_000).contains(&n), "{n}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mesh_disk(&Phantom::empty(), 0.0).is_err());
        let overlapping = Phantom {
            shapes: vec![
                Inclusion {
                    shape: Shape::Ball { center: [0.0, 0.0], radius: 0.3 },
                    contrast: 1.0,
                },
                Inclusion {
                    shape: Shape::Ball { center: [0.2, 0.0], radius: 0.3 },
                    contrast: 1.0,
                },
            ],
        };
        assert!(mesh_disk(&overlapping, 0.05).is_err());
    }

    #[test]
    fn off_export() {
        let mesh = mesh_disk(&Phantom::empty(), 0.3).unwrap();
        let mut buf = Vec::new();
        mesh.write_off(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + mesh.node_count() + mesh.element_count());
    }
}
