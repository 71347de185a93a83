use std::collections::{HashMap, VecDeque};

use kiddo::{KdTree, SquaredEuclidean};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::{OrientedPointCloud, ReconError};

/// Estimated normals. Points whose neighborhood has rank < 2 get a zero
/// normal and are listed in `degenerate`.
#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub points: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub degenerate: Vec<usize>,
}

impl NormalEstimate {
    /// The cloud of non-degenerate points.
    pub fn into_cloud(self) -> Result<OrientedPointCloud, ReconError> {
        let mut skip = vec![false; self.points.len()];
        for &i in &self.degenerate {
            skip[i] = true;
        }
        let (points, normals) = self
            .points
            .into_iter()
            .zip(self.normals)
            .zip(skip)
            .filter(|(_, s)| !s)
            .map(|(pn, _)| pn)
            .unzip();
        OrientedPointCloud::new(points, normals)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[rb.max(ra)] = rb.min(ra);
        true
    }
}

fn kruskal(n: usize, edges: &mut [(f64, usize, usize)], uf: &mut UnionFind, tree: &mut Vec<(usize, usize)>) {
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(_, a, b) in edges.iter() {
        if tree.len() + 1 >= n {
            break;
        }
        if uf.union(a, b) {
            tree.push((a, b));
        }
    }
}

fn key(p: &Vector3<f64>) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

/// Per-point normals from the smallest-eigenvalue eigenvector of the k-NN
/// covariance, oriented consistently by propagating along a Euclidean minimum
/// spanning tree. The tree root (the point farthest from the centroid) faces
/// away from the centroid.
pub fn estimate_normals(points: &[Vector3<f64>], k: usize) -> Result<NormalEstimate, ReconError> {
    if k < 3 {
        return Err(ReconError::Cloud(format!("k = {k} must be at least 3")));
    }
    if points.len() < k + 1 {
        return Err(ReconError::TooFewPoints {
            needed: k + 1,
            got: points.len(),
            k,
        });
    }
    if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(ReconError::Cloud(format!("point {i} is not finite")));
    }
    let n = points.len();

    // Exact duplicates share one tree entry; the tree cannot split them.
    let mut rep: Vec<usize> = Vec::with_capacity(n);
    let mut first: HashMap<[u64; 3], usize> = HashMap::new();
    let mut tree: KdTree<f64, 3> = KdTree::new();
    for (i, p) in points.iter().enumerate() {
        let r = *first.entry(key(p)).or_insert_with(|| {
            tree.add(&[p.x, p.y, p.z], i as u64);
            i
        });
        rep.push(r);
    }

    let mut normals = vec![Vector3::zeros(); n];
    let mut degenerate = Vec::new();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let p = points[i];
        let found = tree.nearest_n::<SquaredEuclidean>(&[p.x, p.y, p.z], k + 1);
        let nb: Vec<usize> = found.iter().map(|f| f.item as usize).collect();
        let mean = nb.iter().map(|&j| points[j]).sum::<Vector3<f64>>() / nb.len() as f64;
        let mut cov = Matrix3::zeros();
        for &j in &nb {
            let d = points[j] - mean;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let (mid, max) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
        if !(max > 1e-300) || mid <= 1e-12 * max {
            degenerate.push(i);
        } else {
            normals[i] = eig.eigenvectors.column(order[0]).normalize();
        }
        neighbors[i] = nb.into_iter().filter(|&j| j != rep[i]).collect();
    }

    let valid: Vec<bool> = normals.iter().map(|v| v.norm() > 0.0).collect();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        if !valid[i] {
            continue;
        }
        if rep[i] != i && valid[rep[i]] {
            edges.push((0.0, rep[i].min(i), rep[i].max(i)));
        }
        for &j in &neighbors[i] {
            if valid[j] {
                edges.push(((points[i] - points[j]).norm(), i.min(j), i.max(j)));
            }
        }
    }
    let valid_count = valid.iter().filter(|&&v| v).count();
    let mut uf = UnionFind::new(n);
    let mut mst: Vec<(usize, usize)> = Vec::new();
    kruskal(valid_count, &mut edges, &mut uf, &mut mst);
    connect_components(points, &valid, &mut uf, &mut mst, valid_count);

    orient(points, &valid, &mst, &mut normals);
    Ok(NormalEstimate {
        points: points.to_vec(),
        normals,
        degenerate,
    })
}

/// Joins the forest left by the k-NN graph with the closest point pairs
/// between components, as a minimum spanning tree over components.
fn connect_components(
    points: &[Vector3<f64>],
    valid: &[bool],
    uf: &mut UnionFind,
    mst: &mut Vec<(usize, usize)>,
    valid_count: usize,
) {
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in (0..points.len()).filter(|&i| valid[i]) {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    if groups.len() < 2 {
        return;
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    let trees: Vec<KdTree<f64, 3>> = comps
        .iter()
        .map(|c| {
            let mut t: KdTree<f64, 3> = KdTree::new();
            let mut seen = std::collections::HashSet::new();
            for &i in c {
                if seen.insert(key(&points[i])) {
                    t.add(&[points[i].x, points[i].y, points[i].z], i as u64);
                }
            }
            t
        })
        .collect();
    let mut bridges = Vec::new();
    for a in 0..comps.len() {
        for b in a + 1..comps.len() {
            let (small, big) = if comps[a].len() <= comps[b].len() { (a, b) } else { (b, a) };
            let mut best = (f64::INFINITY, 0, 0);
            for &i in &comps[small] {
                let p = points[i];
                let nn = trees[big].nearest_one::<SquaredEuclidean>(&[p.x, p.y, p.z]);
                if nn.distance < best.0 {
                    best = (nn.distance, i, nn.item as usize);
                }
            }
            bridges.push((best.0.sqrt(), best.1.min(best.2), best.1.max(best.2)));
        }
    }
    kruskal(valid_count, &mut bridges, uf, mst);
}

fn orient(points: &[Vector3<f64>], valid: &[bool], mst: &[(usize, usize)], normals: &mut [Vector3<f64>]) {
    let n = points.len();
    let centroid = points.iter().sum::<Vector3<f64>>() / n as f64;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in mst {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = (0..n).filter(|&i| valid[i]).collect();
    // Roots are taken farthest-first so every tree is anchored on its own
    // outermost point.
    order.sort_by(|&a, &b| {
        let da = (points[a] - centroid).norm_squared();
        let db = (points[b] - centroid).norm_squared();
        db.total_cmp(&da).then(a.cmp(&b))
    });
    for root in order {
        if visited[root] {
            continue;
        }
        if normals[root].dot(&(points[root] - centroid)) < 0.0 {
            normals[root] = -normals[root];
        }
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if visited[v] {
                    continue;
                }
                visited[v] = true;
                if normals[v].dot(&normals[u]) < 0.0 {
                    normals[v] = -normals[v];
                }
                queue.push_back(v);
            }
        }
    }
}
