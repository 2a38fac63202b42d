//! Persistence pairs by boundary-matrix column reduction over the
//! two-element field, with a union-find fast path for dimension 0.
//!
//! Columns are sparse sorted position lists; adding two columns is a
//! symmetric-difference merge. The reduction walks dimensions from high to
//! low and clears the columns of simplices already known to be creators
//! (the twist optimization). Every pair keeps the creator and destroyer
//! simplex ids, which is the inverse map that gradient routing consumes.


use crate::error::{Result, TopoError};
use crate::filtration::{Direction, Filtration};

/// One diagram point: a class of dimension `dim` born when `creator` enters
/// and killed when `destroyer` enters (absent for essential classes).
/// Birth and death are in the original (reported) coordinates, so
/// superlevel pairs have `birth ≥ death`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
    pub creator: usize,
    pub destroyer: Option<usize>,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.destroyer.is_none()
    }

    pub fn is_zero_persistence(&self) -> bool {
        !self.is_essential() && self.birth == self.death
    }

    /// `|death − birth|`; infinite for essential classes.
    pub fn lifetime(&self) -> f64 {
        if self.is_essential() {
            f64::INFINITY
        } else {
            (self.death - self.birth).abs()
        }
    }
}

/// How essential classes participate in lifetime indexing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EssentialMode {
    /// Essential classes hold their leading indices but contribute nothing.
    #[default]
    Skip,
    /// Essential deaths are replaced by the value at which the filtration
    /// ends; the capped death is attributed to the final simplex, so it
    /// stays differentiable.
    Cap,
}

/// A lifetime-indexed view of one diagram point.
#[derive(Clone, Copy, Debug)]
pub struct IndexedPoint {
    /// Index into the diagram's per-dimension pair list.
    pub slot: usize,
    pub birth: f64,
    /// Effective death: capped for essential classes in `Cap` mode.
    pub death: f64,
    pub essential: bool,
}

/// Persistence pairs grouped by dimension, with the indexing sorted by
/// decreasing lifetime and essential classes first.
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    by_dim: Vec<Vec<usize>>,
    direction: Direction,
    n_simplices: usize,
    max_dim: usize,
    cap_simplex: usize,
    cap_value: f64,
}

impl PersistenceDiagram {
    /// Assemble a diagram from explicit pairs. Creator/destroyer ids are
    /// taken at face value; meant for tests and deserialized diagrams.
    #[doc(hidden)]
    pub fn from_raw_parts(
        pairs: Vec<PersistencePair>,
        max_dim: usize,
        direction: Direction,
        n_simplices: usize,
        cap_simplex: usize,
        cap_value: f64,
    ) -> Self {
        let mut by_dim = vec![Vec::new(); max_dim + 1];
        for (i, p) in pairs.iter().enumerate() {
            by_dim[p.dim].push(i);
        }
        PersistenceDiagram {
            pairs,
            by_dim,
            direction,
            n_simplices,
            max_dim,
            cap_simplex,
            cap_value,
        }
    }

    /// Largest homology dimension this diagram covers.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn n_simplices(&self) -> usize {
        self.n_simplices
    }

    /// The simplex whose entry ends the filtration, and its reported value;
    /// used as the finite stand-in for essential deaths.
    pub fn cap(&self) -> (usize, f64) {
        (self.cap_simplex, self.cap_value)
    }

    pub fn pairs_of_dim(&self, k: usize) -> impl Iterator<Item = &PersistencePair> {
        self.by_dim
            .get(k)
            .into_iter()
            .flatten()
            .map(move |&i| &self.pairs[i])
    }

    pub fn pair_count(&self, k: usize) -> usize {
        self.by_dim.get(k).map_or(0, Vec::len)
    }

    pub fn pair_at(&self, k: usize, slot: usize) -> &PersistencePair {
        &self.pairs[self.by_dim[k][slot]]
    }

    pub fn all_pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn essential_count(&self, k: usize) -> usize {
        self.pairs_of_dim(k).filter(|p| p.is_essential()).count()
    }

    /// Number of classes alive at filtration parameter `alpha` (reported
    /// coordinates): born at or before `alpha`, not yet dead.
    pub fn alive_count(&self, k: usize, alpha: f64) -> usize {
        let a = self.direction.internalize(alpha);
        self.pairs_of_dim(k)
            .filter(|p| {
                let b = self.direction.internalize(p.birth);
                let alive_end = p.is_essential() || a < self.direction.internalize(p.death);
                b <= a && alive_end
            })
            .count()
    }

    /// The lifetime ordering `I_k`: essential classes first (earliest born
    /// first), then finite pairs by decreasing lifetime. Zero-persistence
    /// pairs are excluded unless requested, and do not consume indices.
    pub fn lifetime_indexed(
        &self,
        k: usize,
        include_zero_persistence: bool,
        essential: EssentialMode,
    ) -> Vec<IndexedPoint> {
        let Some(slots) = self.by_dim.get(k) else {
            return Vec::new();
        };
        let mut out: Vec<IndexedPoint> = Vec::with_capacity(slots.len());
        for (slot, &i) in slots.iter().enumerate() {
            let p = &self.pairs[i];
            if p.is_zero_persistence() && !include_zero_persistence {
                continue;
            }
            let death = if p.is_essential() {
                match essential {
                    EssentialMode::Skip => p.death,
                    EssentialMode::Cap => self.cap_value,
                }
            } else {
                p.death
            };
            out.push(IndexedPoint {
                slot,
                birth: p.birth,
                death,
                essential: p.is_essential(),
            });
        }
        let internal = |x: f64| self.direction.internalize(x);
        out.sort_by(|a, b| {
            b.essential
                .cmp(&a.essential)
                .then_with(|| {
                    if a.essential && b.essential {
                        internal(a.birth).partial_cmp(&internal(b.birth)).unwrap()
                    } else {
                        let la = (a.death - a.birth).abs();
                        let lb = (b.death - b.birth).abs();
                        lb.partial_cmp(&la)
                            .unwrap()
                            .then(internal(a.birth).partial_cmp(&internal(b.birth)).unwrap())
                    }
                })
                .then(a.slot.cmp(&b.slot))
        });
        out
    }

    /// Order-independent hash of the pairing structure and of the per-dim
    /// lifetime ranking. Two parameter configurations with equal
    /// fingerprints share the same active pairing, so a loss is a smooth
    /// polynomial between them.
    pub fn pairing_fingerprint(&self) -> u64 {
        let mut items: Vec<(usize, usize, usize)> = self
            .pairs
            .iter()
            .map(|p| (p.dim, p.creator, p.destroyer.map_or(usize::MAX, |d| d)))
            .collect();
        items.sort_unstable();
        let mut h = fnv(0xcbf29ce484222325, items.len() as u64);
        for (d, c, k) in items {
            h = fnv(h, d as u64);
            h = fnv(h, c as u64);
            h = fnv(h, k as u64);
        }
        for k in 0..=self.max_dim {
            for pt in self.lifetime_indexed(k, false, EssentialMode::Cap) {
                h = fnv(h, pt.slot as u64 + 1);
            }
            h = fnv(h, u64::MAX);
        }
        fnv(h, self.cap_simplex as u64)
    }
}

fn fnv(h: u64, x: u64) -> u64 {
    let mut h = h;
    for b in x.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn assemble(
    mut pairs: Vec<PersistencePair>,
    filtration: &Filtration,
    max_dim: usize,
) -> PersistenceDiagram {
    pairs.sort_by_key(|p| (p.dim, filtration.position(p.creator)));
    let mut by_dim = vec![Vec::new(); max_dim + 1];
    for (i, p) in pairs.iter().enumerate() {
        by_dim[p.dim].push(i);
    }
    let cap_simplex = *filtration
        .strict_order()
        .last()
        .expect("non-empty filtration");
    PersistenceDiagram {
        pairs,
        by_dim,
        direction: filtration.direction(),
        n_simplices: filtration.len(),
        max_dim,
        cap_simplex,
        cap_value: filtration.reported_value(cap_simplex),
    }
}

/// Symmetric difference of two sorted position lists (GF(2) column add).
fn symdiff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Standard left-to-right column reduction in strict filtration order,
/// processing dimensions from high to low so paired creators can be
/// cleared. Produces diagrams for dimensions `0..=max_dim`.
pub fn reduce(filtration: &Filtration, max_dim: usize) -> Result<PersistenceDiagram> {
    let complex = filtration.complex();
    if max_dim > complex.max_dimension() {
        return Err(TopoError::InvalidInput(format!(
            "max_dim {} exceeds the complex dimension {}",
            max_dim,
            complex.max_dimension()
        )));
    }
    let n = complex.simplex_count();
    let order = filtration.strict_order();
    let reduce_dim = (max_dim + 1).min(complex.max_dimension());

    let mut positions_by_dim: Vec<Vec<usize>> = vec![Vec::new(); complex.max_dimension() + 1];
    for (pos, &id) in order.iter().enumerate() {
        positions_by_dim[complex.dim_of(id)].push(pos);
    }

    let mut pivot_owner: Vec<Option<usize>> = vec![None; n];
    let mut stored: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cleared = vec![false; n];
    let mut destroyer_of: Vec<Option<usize>> = vec![None; n];
    let mut is_destroyer = vec![false; n];

    for d in (1..=reduce_dim).rev() {
        for &j in &positions_by_dim[d] {
            if cleared[j] {
                continue;
            }
            let mut col: Vec<usize> = complex
                .faces_of(order[j])
                .iter()
                .map(|&f| filtration.position(f))
                .collect();
            col.sort_unstable();
            if col.last().is_some_and(|&l| l > j) {
                return Err(TopoError::Internal(
                    "filtration is not monotone: a face enters after its coface".into(),
                ));
            }
            loop {
                let Some(&low) = col.last() else {
                    break; // reduced to zero: creator in dimension d
                };
                match pivot_owner[low] {
                    Some(owner) => col = symdiff(&col, &stored[owner]),
                    None => {
                        pivot_owner[low] = Some(j);
                        destroyer_of[low] = Some(j);
                        is_destroyer[j] = true;
                        cleared[low] = true;
                        stored[j] = col;
                        break;
                    }
                }
            }
        }
    }

    let dir = filtration.direction();
    let mut pairs = Vec::new();
    for pos in 0..n {
        let id = order[pos];
        let k = complex.dim_of(id);
        if k > max_dim {
            continue;
        }
        if let Some(dpos) = destroyer_of[pos] {
            let did = order[dpos];
            pairs.push(PersistencePair {
                dim: k,
                birth: dir.report(filtration.value(id)),
                death: dir.report(filtration.value(did)),
                creator: id,
                destroyer: Some(did),
            });
        } else if !is_destroyer[pos] {
            pairs.push(PersistencePair {
                dim: k,
                birth: dir.report(filtration.value(id)),
                death: dir.report(f64::INFINITY),
                creator: id,
                destroyer: None,
            });
        }
    }
    Ok(assemble(pairs, filtration, max_dim))
}

/// Dimension-0 persistence by processing edges in strict order with
/// union-find: each merge kills the component with the later-born root
/// (the elder rule on the strict order).
pub fn pd0_union_find(filtration: &Filtration) -> Result<PersistenceDiagram> {
    let complex = filtration.complex();
    let dir = filtration.direction();
    let n_vertices = complex.count_of_dim(0);
    let vbase = complex.ids_of_dim(0).start;
    debug_assert_eq!(vbase, 0);

    let mut parent: Vec<usize> = (0..n_vertices).collect();
    let mut rank = vec![0u8; n_vertices];
    // Per root: the vertex id whose entry created the component, and its
    // position in the strict order.
    let mut birth_vertex: Vec<usize> = (0..n_vertices).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        while parent[x] != root {
            let next = parent[x];
            parent[x] = root;
            x = next;
        }
        root
    }

    let mut pairs = Vec::new();
    for &id in filtration.strict_order() {
        if complex.dim_of(id) != 1 {
            continue;
        }
        let vs = complex.simplex(id).vertices();
        let u = complex
            .index_of(&[vs[0]])
            .ok_or_else(|| TopoError::Internal("edge endpoint missing".into()))?;
        let v = complex
            .index_of(&[vs[1]])
            .ok_or_else(|| TopoError::Internal("edge endpoint missing".into()))?;
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            continue; // cycle edge: creates dimension-1 homology instead
        }
        // The component whose birth vertex entered later dies here.
        let (elder, younger) = if filtration.position(birth_vertex[ru])
            < filtration.position(birth_vertex[rv])
        {
            (ru, rv)
        } else {
            (rv, ru)
        };
        let young_vertex = birth_vertex[younger];
        pairs.push(PersistencePair {
            dim: 0,
            birth: dir.report(filtration.value(young_vertex)),
            death: dir.report(filtration.value(id)),
            creator: young_vertex,
            destroyer: Some(id),
        });
        // Union by rank; the surviving root keeps the elder birth vertex.
        let keep_birth = birth_vertex[elder];
        let (a, b) = (ru, rv);
        let merged = if rank[a] < rank[b] {
            parent[a] = b;
            b
        } else if rank[a] > rank[b] {
            parent[b] = a;
            a
        } else {
            parent[b] = a;
            rank[a] += 1;
            a
        };
        birth_vertex[merged] = keep_birth;
    }

    for v in 0..n_vertices {
        if find(&mut parent, v) == v {
            let bv = birth_vertex[v];
            pairs.push(PersistencePair {
                dim: 0,
                birth: dir.report(filtration.value(bv)),
                death: dir.report(f64::INFINITY),
                creator: bv,
                destroyer: None,
            });
        }
    }
    Ok(assemble(pairs, filtration, 0))
}
