use crate::error::{Error, Result};

/// Structured triangular mesh on the square `[0, L]^2`.
///
/// Nodes are laid out row-major (x fastest), and every grid square is split
/// into two triangles by the same lower-left to upper-right diagonal so that
/// runs are deterministic. All triangles are counter-clockwise.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes_per_side: usize,
    domain_length: f64,
    node_coords: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn build(nodes_per_side: usize, domain_length: f64) -> Result<Mesh> {
        if nodes_per_side < 2 {
            return Err(Error::InvalidMesh(format!(
                "nodes_per_side must be >= 2, got {nodes_per_side}"
            )));
        }
        if !(domain_length > 0.0) {
            return Err(Error::InvalidMesh(format!(
                "domain_length must be positive, got {domain_length}"
            )));
        }
        let n = nodes_per_side;
        let h = domain_length / (n - 1) as f64;
        let mut node_coords = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                node_coords.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = j * n + i;
                let b = j * n + i + 1;
                let c = (j + 1) * n + i + 1;
                let d = (j + 1) * n + i;
                // diagonal a-c
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Ok(Mesh {
            nodes_per_side,
            domain_length,
            node_coords,
            triangles,
        })
    }

    pub fn nodes_per_side(&self) -> usize {
        self.nodes_per_side
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Signed area of triangle `k` (positive for counter-clockwise ordering).
    pub fn triangle_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangles[k];
        let pa = self.node_coords[a];
        let pb = self.node_coords[b];
        let pc = self.node_coords[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Centroid of triangle `k`.
    pub fn centroid(&self, k: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[k];
        let pa = self.node_coords[a];
        let pb = self.node_coords[b];
        let pc = self.node_coords[c];
        [
            (pa[0] + pb[0] + pc[0]) / 3.0,
            (pa[1] + pb[1] + pc[1]) / 3.0,
        ]
    }
}
