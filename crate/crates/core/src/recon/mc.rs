use std::collections::HashMap;

use nalgebra::Vector3;

use super::tables::TRI_TABLE;
use super::{ScalarGrid, TriangleMesh};

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Crossings this close to a node (as an edge fraction) are moved onto it.
/// The triangles that collapse are dropped, which is an edge collapse and
/// keeps the mesh closed; culling slivers by area instead would open holes.
const SNAP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum VertexKey {
    /// Crossing strictly inside the edge from `node` along `axis`.
    Edge { node: usize, axis: u8 },
    /// Crossing exactly at a grid node.
    Node(usize),
}

/// Extracts the isosurface `grid = iso`. Triangles face towards increasing
/// values. Vertices are shared between neighboring cells, so closed level
/// sets yield closed meshes.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> TriangleMesh {
    let spec = grid.spec;
    let [nx, ny, nz] = spec.res;
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut lookup: HashMap<VertexKey, u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let nodes = CORNERS.map(|[dx, dy, dz]| spec.index(i + dx, j + dy, k + dz));
                let vals = nodes.map(|n| grid.values[n]);
                let mut case = 0usize;
                for (c, v) in vals.iter().enumerate() {
                    if *v < iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let mut edge_vertex = [u32::MAX; 12];
                let row = &TRI_TABLE[case];
                for &e in row.iter().take_while(|&&e| e >= 0) {
                    let e = e as usize;
                    if edge_vertex[e] != u32::MAX {
                        continue;
                    }
                    let [a, b] = EDGES[e];
                    let (va, vb) = (vals[a], vals[b]);
                    let mut t = (iso - va) / (vb - va);
                    if t <= SNAP {
                        t = 0.0;
                    } else if t >= 1.0 - SNAP {
                        t = 1.0;
                    }
                    let (lo, hi) = if nodes[a] < nodes[b] { (a, b) } else { (b, a) };
                    let key = if t <= 0.0 {
                        VertexKey::Node(nodes[a])
                    } else if t >= 1.0 {
                        VertexKey::Node(nodes[b])
                    } else {
                        let d = CORNERS[hi].iter().zip(&CORNERS[lo]).position(|(x, y)| x != y);
                        VertexKey::Edge {
                            node: nodes[lo],
                            axis: d.unwrap_or(0) as u8,
                        }
                    };
                    let id = *lookup.entry(key).or_insert_with(|| {
                        let pa = spec.node_position(i + CORNERS[a][0], j + CORNERS[a][1], k + CORNERS[a][2]);
                        let pb = spec.node_position(i + CORNERS[b][0], j + CORNERS[b][1], k + CORNERS[b][2]);
                        vertices.push(pa + (pb - pa) * t);
                        (vertices.len() - 1) as u32
                    });
                    edge_vertex[e] = id;
                }
                for tri in row.chunks(3).take_while(|t| t[0] >= 0) {
                    let (a, b, c) = (
                        edge_vertex[tri[0] as usize],
                        edge_vertex[tri[1] as usize],
                        edge_vertex[tri[2] as usize],
                    );
                    if a == b || b == c || a == c {
                        continue;
                    }
                    // The table winds triangles towards the low side.
                    triangles.push([a, c, b]);
                }
            }
        }
    }
    TriangleMesh::from_parts_unchecked(vertices, triangles)
}
