//! Finite location graphs.
//!
//! A graph is a finite set of locations with a symmetric, irreflexive edge
//! relation. Edges are stored normalized as `(min, max)` pairs; both
//! invariants are enforced on construction.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

/// A location. Fresh locations are allocated from per-step blocks above the
/// current maximum, and exploration renumbers states, so values stay small.
pub type Loc = u64;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Graph {
    verts: BTreeSet<Loc>,
    edges: BTreeSet<(Loc, Loc)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GraphError {
    SelfLoop(Loc),
    DanglingEdge(Loc, Loc),
    MissingVertex(Loc),
    Overlap(Loc),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::SelfLoop(p) => write!(f, "self-loop at location {p}"),
            GraphError::DanglingEdge(p, q) => write!(f, "edge ({p},{q}) mentions a missing vertex"),
            GraphError::MissingVertex(p) => write!(f, "location {p} is not a vertex"),
            GraphError::Overlap(p) => write!(f, "location sets overlap at {p}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GraphError {}

fn norm(p: Loc, q: Loc) -> (Loc, Loc) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

impl Graph {
    pub fn new(
        verts: impl IntoIterator<Item = Loc>,
        edges: impl IntoIterator<Item = (Loc, Loc)>,
    ) -> Result<Graph, GraphError> {
        let verts: BTreeSet<Loc> = verts.into_iter().collect();
        let mut es = BTreeSet::new();
        for (p, q) in edges {
            if p == q {
                return Err(GraphError::SelfLoop(p));
            }
            if !verts.contains(&p) || !verts.contains(&q) {
                return Err(GraphError::DanglingEdge(p, q));
            }
            es.insert(norm(p, q));
        }
        Ok(Graph { verts, edges: es })
    }

    pub fn singleton(p: Loc) -> Graph {
        Graph { verts: BTreeSet::from([p]), edges: BTreeSet::new() }
    }

    pub fn verts(&self) -> &BTreeSet<Loc> {
        &self.verts
    }

    pub fn edges(&self) -> &BTreeSet<(Loc, Loc)> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn contains(&self, p: Loc) -> bool {
        self.verts.contains(&p)
    }

    pub fn adjacent(&self, p: Loc, q: Loc) -> bool {
        p != q && self.edges.contains(&norm(p, q))
    }

    pub fn neighbors(&self, p: Loc) -> impl Iterator<Item = Loc> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == p {
                Some(b)
            } else if b == p {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn degree(&self, p: Loc) -> usize {
        self.neighbors(p).count()
    }

    pub fn max_loc(&self) -> Loc {
        self.verts.iter().next_back().copied().unwrap_or(0)
    }

    /// Substitution `G[H/p]`: removes `p`, inserts `H`, connects every vertex
    /// of `H` to every former neighbor of `p`, and keeps all other structure.
    pub fn subst(&self, h: &Graph, p: Loc) -> Result<Graph, GraphError> {
        if !self.contains(p) {
            return Err(GraphError::MissingVertex(p));
        }
        if let Some(q) = self.verts.intersection(&h.verts).next() {
            return Err(GraphError::Overlap(*q));
        }
        let mut verts = self.verts.clone();
        verts.remove(&p);
        verts.extend(h.verts.iter().copied());
        let mut edges: BTreeSet<(Loc, Loc)> = self
            .edges
            .iter()
            .filter(|(a, b)| *a != p && *b != p)
            .copied()
            .collect();
        edges.extend(h.edges.iter().copied());
        for q in self.neighbors(p) {
            for &r in h.verts.iter() {
                edges.insert(norm(q, r));
            }
        }
        Ok(Graph { verts, edges })
    }

    /// `G (+)_D H`: disjoint union plus the cross edges listed in `D`.
    pub fn oplus(&self, other: &Graph, d: &[(Loc, Loc)]) -> Result<Graph, GraphError> {
        if let Some(q) = self.verts.intersection(&other.verts).next() {
            return Err(GraphError::Overlap(*q));
        }
        let mut verts = self.verts.clone();
        verts.extend(other.verts.iter().copied());
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().copied());
        for &(p, q) in d {
            if !self.contains(p) {
                return Err(GraphError::MissingVertex(p));
            }
            if !other.contains(q) {
                return Err(GraphError::MissingVertex(q));
            }
            edges.insert(norm(p, q));
        }
        Ok(Graph { verts, edges })
    }

    /// All cross pairs, for the full parallel composition `P | Q`.
    pub fn full_cross(&self, other: &Graph) -> Vec<(Loc, Loc)> {
        let mut d = Vec::new();
        for &p in self.verts.iter() {
            for &q in other.verts.iter() {
                d.push((p, q));
            }
        }
        d
    }

    /// Relabel vertices through a map; the map must be injective on `verts`.
    pub fn relabel(&self, f: impl Fn(Loc) -> Loc) -> Graph {
        let verts: BTreeSet<Loc> = self.verts.iter().map(|&p| f(p)).collect();
        debug_assert_eq!(verts.len(), self.verts.len());
        let edges = self.edges.iter().map(|&(a, b)| norm(f(a), f(b))).collect();
        Graph { verts, edges }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subst_connects_neighbors_to_all_of_h() {
        // G = ({p,q}, {p-q}), H = ({r,s}, {}) at p: verts {q,r,s}, edges {q-r, q-s}
        let g = Graph::new([0, 1], [(0, 1)]).unwrap();
        let h = Graph::new([2, 3], []).unwrap();
        let out = g.subst(&h, 0).unwrap();
        assert_eq!(out.verts(), &BTreeSet::from([1, 2, 3]));
        assert_eq!(out.edges(), &BTreeSet::from([(1, 2), (1, 3)]));
    }

    #[test]
    fn subst_singleton_renames() {
        let g = Graph::new([0, 1], [(0, 1)]).unwrap();
        let h = Graph::singleton(7);
        let out = g.subst(&h, 0).unwrap();
        assert_eq!(out, Graph::new([1, 7], [(1, 7)]).unwrap());
    }

    #[test]
    fn subst_of_only_vertex_gives_h() {
        let g = Graph::singleton(0);
        let h = Graph::new([5, 6], [(5, 6)]).unwrap();
        assert_eq!(g.subst(&h, 0).unwrap(), h);
    }

    #[test]
    fn subst_errors() {
        let g = Graph::singleton(0);
        let h = Graph::singleton(0);
        assert_eq!(g.subst(&h, 0), Err(GraphError::Overlap(0)));
        let h = Graph::singleton(1);
        assert_eq!(g.subst(&h, 9), Err(GraphError::MissingVertex(9)));
    }

    #[test]
    fn oplus_variants() {
        let g = Graph::singleton(0);
        let h = Graph::singleton(1);
        let disc = g.oplus(&h, &[]).unwrap();
        assert!(disc.edges().is_empty());
        let full = g.oplus(&h, &g.full_cross(&h)).unwrap();
        assert_eq!(full.edges(), &BTreeSet::from([(0, 1)]));
    }

    #[test]
    fn invariants_enforced() {
        assert_eq!(Graph::new([0], [(0, 0)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(Graph::new([0], [(0, 1)]), Err(GraphError::DanglingEdge(0, 1)));
        // symmetry is by normalization
        let g = Graph::new([0, 1], [(1, 0)]).unwrap();
        assert!(g.adjacent(0, 1) && g.adjacent(1, 0));
    }
}
