//! Mesh container: node coordinates, element connectivities, and labeled
//! node sets for boundary conditions and result extraction.

use crate::SolveError;
use interpolation::ElementFamily;
use nalgebra::Vector2;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Mesh {
    pub coords: Vec<Vector2<f64>>,
    /// Node indices per element, in the element family's ordering
    /// (corners counterclockwise, then mid-side nodes for 8-node elements).
    pub connectivities: Vec<Vec<usize>>,
    /// Labeled node sets; ordered map so iteration order is stable.
    pub node_sets: BTreeMap<String, Vec<usize>>,
}

impl Mesh {
    /// Structured `nx` x `ny` grid on the unit square with boundary node
    /// sets "left", "right", "bottom", "top". Eight-node elements place
    /// mid-side nodes on a refined lattice that skips cell centers. Map
    /// the coordinates afterwards to fit the target geometry; affine and
    /// bilinear maps keep mid-side nodes on edge midpoints.
    pub fn structured(family: ElementFamily, nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "grid needs at least one element per direction");
        // One lattice serves both families: Q4 walks it with stride 1,
        // Q8 with stride 2 on a twice-refined lattice minus cell centers.
        let stride = match family {
            ElementFamily::Q4 => 1,
            ElementFamily::Q8 => 2,
        };
        let (mx, my) = (stride * nx, stride * ny);
        let mut index = vec![usize::MAX; (mx + 1) * (my + 1)];
        let mut coords = Vec::new();
        for j in 0..=my {
            for i in 0..=mx {
                if stride == 2 && i % 2 == 1 && j % 2 == 1 {
                    continue; // cell center, not a serendipity node
                }
                index[j * (mx + 1) + i] = coords.len();
                coords.push(Vector2::new(i as f64 / mx as f64, j as f64 / my as f64));
            }
        }
        let at = |i: usize, j: usize| index[j * (mx + 1) + i];
        let mut connectivities = Vec::with_capacity(nx * ny);
        for ey in 0..ny {
            for ex in 0..nx {
                let (i0, j0) = (stride * ex, stride * ey);
                let mut conn = vec![
                    at(i0, j0),
                    at(i0 + stride, j0),
                    at(i0 + stride, j0 + stride),
                    at(i0, j0 + stride),
                ];
                if stride == 2 {
                    conn.extend([
                        at(i0 + 1, j0),
                        at(i0 + 2, j0 + 1),
                        at(i0 + 1, j0 + 2),
                        at(i0, j0 + 1),
                    ]);
                }
                connectivities.push(conn);
            }
        }
        let edge = |pick: &dyn Fn(usize, usize) -> bool| -> Vec<usize> {
            let mut set: Vec<usize> = (0..=my)
                .flat_map(|j| (0..=mx).map(move |i| (i, j)))
                .filter(|(i, j)| pick(*i, *j) && at(*i, *j) != usize::MAX)
                .map(|(i, j)| at(i, j))
                .collect();
            set.sort_unstable();
            set
        };
        let node_sets = BTreeMap::from([
            ("left".to_string(), edge(&|i, _| i == 0)),
            ("right".to_string(), edge(&|i, _| i == mx)),
            ("bottom".to_string(), edge(&|_, j| j == 0)),
            ("top".to_string(), edge(&|_, j| j == my)),
        ]);
        Mesh { coords, connectivities, node_sets }
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.connectivities.len()
    }

    pub fn element_coords(&self, e: usize) -> Vec<Vector2<f64>> {
        self.connectivities[e].iter().map(|n| self.coords[*n]).collect()
    }

    pub fn set(&self, label: &str) -> Result<&[usize], SolveError> {
        self.node_sets
            .get(label)
            .map(|v| v.as_slice())
            .ok_or_else(|| SolveError::BadMesh { reason: format!("unknown node set '{label}'") })
    }

    /// Structural validation: index bounds, uniform element size, and
    /// set references. Geometric admissibility (Jacobians) is checked when
    /// the element operators are built.
    pub fn validate(&self, nodes_per_element: usize) -> Result<(), SolveError> {
        for (e, conn) in self.connectivities.iter().enumerate() {
            if conn.len() != nodes_per_element {
                return Err(SolveError::BadMesh {
                    reason: format!(
                        "element {e} has {} nodes, formulation needs {nodes_per_element}",
                        conn.len()
                    ),
                });
            }
            for n in conn {
                if *n >= self.coords.len() {
                    return Err(SolveError::BadMesh {
                        reason: format!("element {e} references missing node {n}"),
                    });
                }
            }
            let mut sorted = conn.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != conn.len() {
                return Err(SolveError::BadMesh {
                    reason: format!("element {e} repeats a node"),
                });
            }
        }
        for (label, set) in &self.node_sets {
            for n in set {
                if *n >= self.coords.len() {
                    return Err(SolveError::BadMesh {
                        reason: format!("node set '{label}' references missing node {n}"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_element_mesh() -> Mesh {
        Mesh {
            coords: vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(1.0, 0.0),
                Vector2::new(2.0, 0.0),
                Vector2::new(0.0, 1.0),
                Vector2::new(1.0, 1.0),
                Vector2::new(2.0, 1.0),
            ],
            connectivities: vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]],
            node_sets: BTreeMap::from([("left".into(), vec![0, 3])]),
        }
    }

    #[test]
    fn test_validation_accepts_well_formed_mesh() {
        let mesh = two_element_mesh();
        mesh.validate(4).unwrap();
        assert!(mesh.set("left").unwrap() == [0, 3]);
        assert!(mesh.set("right").is_err());
    }

    #[test]
    fn test_structured_q4_grid() {
        let mesh = Mesh::structured(ElementFamily::Q4, 3, 2);
        mesh.validate(4).unwrap();
        assert!(mesh.n_nodes() == 12 && mesh.n_elements() == 6, "3x2 grid: 12 nodes, 6 elements");
        assert!(mesh.set("left").unwrap().len() == 3);
        assert!(mesh.set("top").unwrap().len() == 4);
        // First element spans the lower-left cell counterclockwise.
        assert!(mesh.connectivities[0] == [0, 1, 5, 4]);
        let c = mesh.element_coords(0);
        assert!(c[2] == Vector2::new(1.0 / 3.0, 0.5), "corner 2 at cell diagonal");
    }

    #[test]
    fn test_structured_q8_grid() {
        let mesh = Mesh::structured(ElementFamily::Q8, 2, 1);
        mesh.validate(8).unwrap();
        // 5x3 lattice minus the two cell centers.
        assert!(mesh.n_nodes() == 13 && mesh.n_elements() == 2);
        for conn in &mesh.connectivities {
            let c: Vec<_> = conn.iter().map(|n| mesh.coords[*n]).collect();
            for k in 0..4 {
                let mid = 0.5 * (c[k] + c[(k + 1) % 4]);
                assert!((c[4 + k] - mid).norm() == 0.0, "mid-side node on edge midpoint");
            }
        }
        assert!(mesh.set("right").unwrap().len() == 3, "right edge: corner, mid, corner");
    }

    #[test]
    fn test_validation_rejects_bad_connectivity() {
        let mut mesh = two_element_mesh();
        mesh.connectivities[1][0] = 9;
        assert!(mesh.validate(4).is_err());
        let mut mesh = two_element_mesh();
        mesh.connectivities[0] = vec![0, 1, 1, 3];
        assert!(mesh.validate(4).is_err());
    }
}
