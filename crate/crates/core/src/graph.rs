//! Undirected graphs with oriented edges and the matrices built from them.
//!
//! Each edge is stored as `(tail, head)`. The incidence matrix carries `+1` at
//! the head and `-1` at the tail, so `B^T theta` gives `theta_head - theta_tail`
//! per edge. The graph Laplacian is `B B^T` (n x n) and the edge Laplacian is
//! `B^T B` (m x m); both share their nonzero spectrum.

use std::fmt;

use crate::error::{Error, Result};

/// Largest edge count accepted by [`spanning_trees`].
pub const SPANNING_TREE_EDGE_LIMIT: usize = 20;

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from zero-based `(tail, head)` pairs.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        for (idx, &(t, h)) in edges.iter().enumerate() {
            if t >= n || h >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {idx} ({t}, {h}) references a node outside [0, {n})"
                )));
            }
            if t == h {
                return Err(Error::InvalidGraph(format!(
                    "edge {idx} is a self-loop on node {t}"
                )));
            }
            if edges[..idx]
                .iter()
                .any(|&(a, b)| (a, b) == (t, h) || (a, b) == (h, t))
            {
                return Err(Error::InvalidGraph(format!(
                    "edge {idx} ({t}, {h}) duplicates an earlier edge"
                )));
            }
        }
        Ok(Self { n, edges })
    }

    /// Builds a graph from one-based `(tail, head)` labels, as written in scenario files.
    pub fn from_one_based(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut zero = Vec::with_capacity(edges.len());
        for &(t, h) in edges {
            if t == 0 || h == 0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({t}, {h}) uses node label 0; labels are one-based"
                )));
            }
            zero.push((t - 1, h - 1));
        }
        Self::new(n, zero)
    }

    /// Path `0 -> 1 -> ... -> n-1`, each edge oriented forward.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(t, h) in &self.edges {
            deg[t] += 1;
            deg[h] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Subgraph on all nodes keeping the listed edges, in the given order.
    pub fn edge_subgraph(&self, keep: &[usize]) -> Self {
        Self {
            n: self.n,
            edges: keep.iter().map(|&i| self.edges[i]).collect(),
        }
    }

    /// Copy with edge `idx` reversed.
    pub fn with_flipped(&self, idx: usize) -> Self {
        let mut edges = self.edges.clone();
        let (t, h) = edges[idx];
        edges[idx] = (h, t);
        Self { n: self.n, edges }
    }

    pub fn is_connected(&self) -> bool {
        let mut dsu = Dsu::new(self.n);
        for &(t, h) in &self.edges {
            dsu.union(t, h);
        }
        dsu.components == 1
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.n && self.is_connected()
    }

    /// A line graph is a tree whose nodes all have degree at most two.
    pub fn is_line(&self) -> bool {
        self.is_tree() && self.degrees().iter().all(|&d| d <= 2)
    }

    /// True when some cycle has odd length (equivalently, the graph is not bipartite).
    pub fn has_odd_cycle(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(t, h) in &self.edges {
            adj[t].push(h);
            adj[h].push(t);
        }
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        for start in 0..self.n {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let cu = color[u].unwrap();
                for &v in &adj[u] {
                    match color[v] {
                        None => {
                            color[v] = Some(!cu);
                            stack.push(v);
                        }
                        Some(cv) if cv == cu => return true,
                        Some(_) => {}
                    }
                }
            }
        }
        false
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} edges=[", self.n)?;
        for (i, (t, h)) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}->{}", t + 1, h + 1)?;
        }
        write!(f, "]")
    }
}

/// Dense row-major real matrix. Sizes here stay in the tens.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Dimension {
                    what: "matrix row",
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Smallest eigenvalue above the zero threshold, if any.
    pub lambda_min_positive: Option<f64>,
    pub lambda_max: f64,
}

impl SpectralSummary {
    /// Eigenvalues treated as nonzero (above `1e-9` times the spectral scale).
    pub fn nonzero(&self) -> Vec<f64> {
        let thr = zero_threshold(&self.eigenvalues);
        self.eigenvalues
            .iter()
            .copied()
            .filter(|v| v.abs() > thr)
            .collect()
    }
}

fn zero_threshold(eigs: &[f64]) -> f64 {
    let scale = eigs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    1e-9 * scale
}

pub fn incidence_matrix(g: &Graph) -> Matrix {
    let mut b = Matrix::zeros(g.n, g.edges.len());
    for (l, &(t, h)) in g.edges.iter().enumerate() {
        b[(h, l)] = 1.0;
        b[(t, l)] = -1.0;
    }
    b
}

pub fn graph_laplacian(g: &Graph) -> Matrix {
    let b = incidence_matrix(g);
    b.matmul(&b.transpose())
}

pub fn edge_laplacian(g: &Graph) -> Matrix {
    let b = incidence_matrix(g);
    b.transpose().matmul(&b)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<SpectralSummary> {
    if m.rows != m.cols {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let scale = m.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let defect = (m[(i, j)] - m[(j, i)]).abs();
            if defect > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    defect,
                });
            }
        }
    }
    if n == 0 {
        return Ok(SpectralSummary {
            eigenvalues: Vec::new(),
            lambda_min_positive: None,
            lambda_max: 0.0,
        });
    }

    let mut a = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) < JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }

    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eigenvalues.sort_by(f64::total_cmp);
    let thr = zero_threshold(&eigenvalues);
    let lambda_min_positive = eigenvalues.iter().copied().find(|&v| v > thr);
    let lambda_max = *eigenvalues.last().unwrap();
    Ok(SpectralSummary {
        eigenvalues,
        lambda_min_positive,
        lambda_max,
    })
}

struct Dsu {
    parent: Vec<usize>,
    components: usize,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            components: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.components -= 1;
        true
    }
}

/// Edge-index sets of every spanning tree, each sorted ascending.
///
/// Enumeration branches on each edge in listing order: include it when it
/// joins two components of the partial forest, exclude it when the remaining
/// edges can still connect the graph.
pub fn spanning_tree_edge_sets(g: &Graph) -> Result<Vec<Vec<usize>>> {
    let m = g.edge_count();
    if m > SPANNING_TREE_EDGE_LIMIT {
        return Err(Error::EnumerationLimit {
            edges: m,
            limit: SPANNING_TREE_EDGE_LIMIT,
        });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(g.n.saturating_sub(1));
    enumerate(g, 0, &mut chosen, &mut out);
    Ok(out)
}

fn enumerate(g: &Graph, idx: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if chosen.len() + 1 == g.n {
        out.push(chosen.clone());
        return;
    }
    if idx == g.edges.len() {
        return;
    }

    let mut forest = Dsu::new(g.n);
    for &e in chosen.iter() {
        let (t, h) = g.edges[e];
        forest.union(t, h);
    }
    // chosen + remaining edges must still span
    let mut reach = Dsu::new(g.n);
    for e in chosen.iter().copied().chain(idx..g.edges.len()) {
        let (t, h) = g.edges[e];
        reach.union(t, h);
    }
    if reach.components != 1 {
        return;
    }

    let (t, h) = g.edges[idx];
    if forest.find(t) != forest.find(h) {
        chosen.push(idx);
        enumerate(g, idx + 1, chosen, out);
        chosen.pop();
    }
    enumerate(g, idx + 1, chosen, out);
}

pub fn spanning_trees(g: &Graph) -> Result<Vec<Graph>> {
    Ok(spanning_tree_edge_sets(g)?
        .iter()
        .map(|keep| g.edge_subgraph(keep))
        .collect())
}

/// Smallest edge-Laplacian eigenvalue over all spanning trees of `g`.
pub fn min_spanning_tree_eigenvalue(g: &Graph) -> Result<f64> {
    Ok(min_spanning_tree_eigenvalue_with_tree(g)?.0)
}

/// Same as [`min_spanning_tree_eigenvalue`], also returning the edge set of a minimizing tree.
pub fn min_spanning_tree_eigenvalue_with_tree(g: &Graph) -> Result<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for keep in spanning_tree_edge_sets(g)? {
        let tree = g.edge_subgraph(&keep);
        if tree.edge_count() == 0 {
            // single node: no edges, nothing to bound
            continue;
        }
        let spec = symmetric_eigenvalues(&edge_laplacian(&tree))?;
        let lmin = spec.eigenvalues[0];
        if best.as_ref().is_none_or(|(b, _)| lmin < *b) {
            best = Some((lmin, keep));
        }
    }
    best.ok_or_else(|| Error::InvalidGraph("graph has no edges".into()))
}
