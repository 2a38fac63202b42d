//! Finite simplicial complexes with boundary incidences.
//!
//! Simplices are stored in one flat arena sorted by `(dimension, vertex
//! tuple)`, so simplex ids are contiguous per dimension and the vertex
//! simplex `(v)` always has id `v` when the vertex set is dense `0..n`.
//! Chain arithmetic is over the two-element field throughout, so a boundary
//! is just the set of codimension-1 faces.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use crate::error::{Result, TopoError};

/// A single simplex, identified by its strictly increasing vertex tuple.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    vertices: Vec<u32>,
}

impl Simplex {
    pub fn new(vertices: Vec<u32>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(TopoError::InvalidInput("empty simplex".into()));
        }
        if !vertices.windows(2).all(|w| w[0] < w[1]) {
            return Err(TopoError::InvalidInput(format!(
                "simplex vertices must be strictly increasing, got {:?}",
                vertices
            )));
        }
        Ok(Self { vertices })
    }

    /// Construct from a list already known to be sorted and duplicate-free.
    pub(crate) fn from_sorted(vertices: Vec<u32>) -> Self {
        debug_assert!(!vertices.is_empty() && vertices.windows(2).all(|w| w[0] < w[1]));
        Self { vertices }
    }

    pub fn vertex(v: u32) -> Self {
        Self { vertices: vec![v] }
    }

    pub fn edge(u: u32, v: u32) -> Result<Self> {
        Self::new(vec![u.min(v), u.max(v)])
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// The codimension-1 faces, obtained by deleting each vertex in turn.
    /// A vertex has empty boundary.
    pub fn boundary_faces(&self) -> Vec<Simplex> {
        if self.dim() == 0 {
            return Vec::new();
        }
        (0..self.vertices.len())
            .map(|i| {
                let mut v = self.vertices.clone();
                v.remove(i);
                Simplex::from_sorted(v)
            })
            .collect()
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v)?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite simplicial complex, closed under taking faces.
pub struct SimplicialComplex {
    simplices: Vec<Simplex>,
    /// Ids of the codimension-1 faces of each simplex.
    faces: Vec<Vec<usize>>,
    /// `dim_offsets[d]..dim_offsets[d+1]` is the id range of dimension `d`.
    dim_offsets: Vec<usize>,
    index: HashMap<Vec<u32>, usize>,
    vertex_count: usize,
}

impl SimplicialComplex {
    /// Builder over a dense vertex set `0..n_vertices`; every vertex is a
    /// simplex of the result even if no added simplex mentions it.
    pub fn builder(n_vertices: usize) -> ComplexBuilder {
        ComplexBuilder {
            n_vertices,
            simplices: (0..n_vertices as u32).map(|v| vec![v]).collect(),
        }
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn max_dimension(&self) -> usize {
        self.dim_offsets.len().saturating_sub(2)
    }

    pub fn simplex(&self, id: usize) -> &Simplex {
        &self.simplices[id]
    }

    pub fn dim_of(&self, id: usize) -> usize {
        self.simplices[id].dim()
    }

    pub fn faces_of(&self, id: usize) -> &[usize] {
        &self.faces[id]
    }

    /// Id range of the simplices of dimension `d` (empty if none).
    pub fn ids_of_dim(&self, d: usize) -> Range<usize> {
        if d + 1 >= self.dim_offsets.len() {
            return 0..0;
        }
        self.dim_offsets[d]..self.dim_offsets[d + 1]
    }

    pub fn count_of_dim(&self, d: usize) -> usize {
        self.ids_of_dim(d).len()
    }

    pub fn index_of(&self, vertices: &[u32]) -> Option<usize> {
        self.index.get(vertices).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Simplex)> {
        self.simplices.iter().enumerate().map(|(i, s)| (i, s))
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut chi = 0i64;
        for d in 0..=self.max_dimension() {
            let n = self.count_of_dim(d) as i64;
            if d % 2 == 0 {
                chi += n;
            } else {
                chi -= n;
            }
        }
        chi
    }

    /// Betti number in dimension `k` by dense Gaussian elimination over the
    /// two-element field: `dim ker ∂_k − rank ∂_{k+1}`.
    ///
    /// This is a correctness oracle for small complexes (a few hundred
    /// simplices); the production path is the persistence reduction.
    pub fn betti(&self, k: usize) -> usize {
        if k > self.max_dimension() {
            return 0;
        }
        let n_k = self.count_of_dim(k);
        let ker_k = n_k - self.boundary_rank(k);
        ker_k - self.boundary_rank(k + 1)
    }

    /// Rank of the boundary map from dimension `k` chains, over GF(2).
    fn boundary_rank(&self, k: usize) -> usize {
        if k == 0 || k > self.max_dimension() {
            return 0;
        }
        let cols: Range<usize> = self.ids_of_dim(k);
        let row_base = self.dim_offsets[k - 1];
        let n_rows = self.count_of_dim(k - 1);
        // Dense column vectors, eliminated left to right.
        let mut reduced: Vec<Vec<bool>> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        let mut rank = 0;
        for id in cols {
            let mut col = vec![false; n_rows];
            for &f in self.faces_of(id) {
                col[f - row_base] = true;
            }
            loop {
                let Some(lead) = col.iter().position(|&b| b) else {
                    break;
                };
                match pivots.iter().position(|&p| p == lead) {
                    Some(j) => {
                        for (c, r) in col.iter_mut().zip(&reduced[j]) {
                            *c ^= *r;
                        }
                    }
                    None => {
                        pivots.push(lead);
                        reduced.push(col);
                        rank += 1;
                        break;
                    }
                }
            }
        }
        rank
    }

    /// Number of connected components of the 1-skeleton (graph traversal).
    pub fn connected_components(&self) -> usize {
        let n = self.vertex_count;
        if n == 0 {
            return 0;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        // Vertex simplex ids are not necessarily the vertex labels when the
        // vertex set is sparse, so map through positions in dimension 0.
        let vpos: HashMap<u32, usize> = self
            .ids_of_dim(0)
            .enumerate()
            .map(|(i, id)| (self.simplices[id].vertices()[0], i))
            .collect();
        for id in self.ids_of_dim(1) {
            let vs = self.simplices[id].vertices();
            let (a, b) = (vpos[&vs[0]], vpos[&vs[1]]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }
}

pub struct ComplexBuilder {
    n_vertices: usize,
    simplices: Vec<Vec<u32>>,
}

impl ComplexBuilder {
    pub fn add(&mut self, simplex: Simplex) -> &mut Self {
        self.simplices.push(simplex.vertices.clone());
        self
    }

    pub fn add_vertices(&mut self, vertices: Vec<u32>) -> Result<&mut Self> {
        self.add(Simplex::new(vertices)?);
        Ok(self)
    }

    /// Close under faces, sort by `(dimension, vertex tuple)`, assign ids and
    /// resolve boundary incidences.
    pub fn build(self) -> Result<SimplicialComplex> {
        let mut all: Vec<Vec<u32>> = Vec::new();
        let mut seen: HashMap<Vec<u32>, ()> = HashMap::new();
        let mut stack = self.simplices;
        while let Some(vs) = stack.pop() {
            if let Some(&max) = vs.iter().max() {
                if (max as usize) >= self.n_vertices {
                    return Err(TopoError::InvalidInput(format!(
                        "vertex {} out of range (n_vertices = {})",
                        max, self.n_vertices
                    )));
                }
            }
            if seen.contains_key(&vs) {
                continue;
            }
            seen.insert(vs.clone(), ());
            if vs.len() > 1 {
                for i in 0..vs.len() {
                    let mut face = vs.clone();
                    face.remove(i);
                    stack.push(face);
                }
            }
            all.push(vs);
        }
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

        let index: HashMap<Vec<u32>, usize> =
            all.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let max_dim = all.last().map_or(0, |v| v.len() - 1);
        let mut dim_offsets = vec![0usize; max_dim + 2];
        for vs in &all {
            dim_offsets[vs.len()] += 1;
        }
        for d in 1..dim_offsets.len() {
            dim_offsets[d] += dim_offsets[d - 1];
        }

        let faces: Vec<Vec<usize>> = all
            .iter()
            .map(|vs| {
                if vs.len() == 1 {
                    return Vec::new();
                }
                (0..vs.len())
                    .map(|i| {
                        let mut f = vs.clone();
                        f.remove(i);
                        index[&f]
                    })
                    .collect()
            })
            .collect();

        let vertex_count = dim_offsets[1];
        Ok(SimplicialComplex {
            simplices: all.into_iter().map(Simplex::from_sorted).collect(),
            faces,
            dim_offsets,
            index,
            vertex_count,
        })
    }
}

/// Build a complex from an explicit set of simplices that is already closed
/// under faces (used for sublevel subcomplexes). The vertex set may be
/// sparse.
pub(crate) fn from_closed_set(simplices: Vec<Simplex>) -> Result<SimplicialComplex> {
    let mut all: Vec<Vec<u32>> = simplices.into_iter().map(|s| s.vertices).collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all.dedup();
    let index: HashMap<Vec<u32>, usize> =
        all.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let max_dim = all.last().map_or(0, |v| v.len() - 1);
    let mut dim_offsets = vec![0usize; max_dim + 2];
    for vs in &all {
        dim_offsets[vs.len()] += 1;
    }
    for d in 1..dim_offsets.len() {
        dim_offsets[d] += dim_offsets[d - 1];
    }
    let faces: Vec<Vec<usize>> = all
        .iter()
        .map(|vs| {
            if vs.len() == 1 {
                return Vec::new();
            }
            (0..vs.len())
                .map(|i| {
                    let mut f = vs.clone();
                    f.remove(i);
                    index.get(&f).copied().ok_or(())
                })
                .collect::<std::result::Result<Vec<_>, ()>>()
                .unwrap_or_default()
        })
        .collect();
    for (vs, fs) in all.iter().zip(&faces) {
        if vs.len() > 1 && fs.len() != vs.len() {
            return Err(TopoError::InvalidInput(format!(
                "simplex set not closed under faces at {:?}",
                vs
            )));
        }
    }
    let vertex_count = dim_offsets[1];
    Ok(SimplicialComplex {
        simplices: all.into_iter().map(Simplex::from_sorted).collect(),
        faces,
        dim_offsets,
        index,
        vertex_count,
    })
}

/// Freudenthal triangulation of a `rows × cols` pixel grid: one vertex per
/// pixel in row-major order, axis-aligned edges, and the diagonal of every
/// grid cell from `(i,j)` to `(i+1,j+1)`, giving two triangles per cell.
pub fn freudenthal_grid(rows: usize, cols: usize) -> Result<SimplicialComplex> {
    if rows < 1 || cols < 1 {
        return Err(TopoError::InvalidInput(format!(
            "grid dimensions must be positive, got {rows}×{cols}"
        )));
    }
    let at = |i: usize, j: usize| (i * cols + j) as u32;
    let mut b = SimplicialComplex::builder(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            if j + 1 < cols {
                b.add(Simplex::from_sorted(vec![at(i, j), at(i, j + 1)]));
            }
            if i + 1 < rows {
                b.add(Simplex::from_sorted(vec![at(i, j), at(i + 1, j)]));
            }
            if i + 1 < rows && j + 1 < cols {
                b.add(Simplex::from_sorted(vec![at(i, j), at(i + 1, j + 1)]));
                b.add(Simplex::from_sorted(vec![at(i, j), at(i + 1, j), at(i + 1, j + 1)]));
                b.add(Simplex::from_sorted(vec![at(i, j), at(i, j + 1), at(i + 1, j + 1)]));
            }
        }
    }
    b.build()
}

/// All simplices on `n` vertices up to dimension `max_dim`.
pub fn clique_complex(n: usize, max_dim: usize) -> Result<SimplicialComplex> {
    if n < 1 {
        return Err(TopoError::InvalidInput("need at least one vertex".into()));
    }
    if max_dim > n - 1 {
        return Err(TopoError::InvalidInput(format!(
            "max_dim {} exceeds n-1 = {}",
            max_dim,
            n - 1
        )));
    }
    let mut b = SimplicialComplex::builder(n);
    // Only the top-dimensional simplices are needed; faces close the rest.
    let mut current: Vec<u32> = (0..=max_dim as u32).collect();
    loop {
        b.add(Simplex::from_sorted(current.clone()));
        // Next (max_dim+1)-combination of 0..n in lexicographic order.
        let k = current.len();
        let mut i = k;
        loop {
            if i == 0 {
                return b.build();
            }
            i -= 1;
            if current[i] < (n - k + i) as u32 {
                current[i] += 1;
                for j in i + 1..k {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}
