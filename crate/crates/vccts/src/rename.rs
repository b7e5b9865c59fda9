//! Canonical relabeling of locations.
//!
//! Two located processes that are equal up to a location bijection map to the
//! identical result, which is what state deduplication and memoization key
//! on. Vertices are ordered by iterated color refinement seeded with the
//! canonical form of each component term; remaining ties are resolved by
//! individualization search taking the minimal certificate, except that
//! isolated vertices with identical components are interchangeable and are
//! ordered directly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::graph::{Graph, Loc};
use crate::term::{Process, Term};

/// Canonically renumber every location of `t` from `*next` upward, ordering
/// nested parallel compositions with the same machinery as top-level ones.
fn canon_term(t: &Term, next: &mut Loc) -> Term {
    match t {
        Term::Idle | Term::Zero | Term::Var { .. } => t.clone(),
        Term::Rec { name, params, args, body } => Term::Rec {
            name: name.clone(),
            params: params.clone(),
            args: args.clone(),
            body: alloc::boxed::Box::new(canon_term(body, next)),
        },
        Term::Sum(a, b) => Term::sum(canon_term(a, next), canon_term(b, next)),
        Term::In { sym, binder, conts } => Term::In {
            sym: sym.clone(),
            binder: binder.clone(),
            conts: conts.iter().map(|c| canon_term(c, next)).collect(),
        },
        Term::Out { sym, arg, conts } => Term::Out {
            sym: sym.clone(),
            arg: arg.clone(),
            conts: conts.iter().map(|c| canon_term(c, next)).collect(),
        },
        Term::Par { graph, comps } => {
            let inner = Process {
                graph: graph.clone(),
                comps: comps.clone(),
                restriction: BTreeSet::new(),
            };
            let order = canonical_order(&inner);
            let base = *next;
            *next += order.len() as Loc;
            let map: BTreeMap<Loc, Loc> =
                order.iter().enumerate().map(|(i, &old)| (old, base + i as Loc)).collect();
            let graph = graph.relabel(|p| map[&p]);
            let comps = order
                .iter()
                .enumerate()
                .map(|(i, old)| (base + i as Loc, canon_term(&comps[old], next)))
                .collect();
            Term::Par { graph, comps }
        }
        Term::Restrict { body, syms } => Term::Restrict {
            body: alloc::boxed::Box::new(canon_term(body, next)),
            syms: syms.clone(),
        },
        Term::Cond { guard, then_br, else_br } => Term::cond(
            guard.clone(),
            canon_term(then_br, next),
            canon_term(else_br, next),
        ),
    }
}

fn shape_key(t: &Term) -> String {
    let mut n = 0;
    canon_term(t, &mut n).to_string()
}

type Colors = BTreeMap<Loc, u64>;

fn refine(graph: &Graph, mut colors: Colors) -> Colors {
    loop {
        let mut keys: BTreeMap<Loc, (u64, Vec<u64>)> = BTreeMap::new();
        for &v in graph.verts() {
            let mut nb: Vec<u64> = graph.neighbors(v).map(|u| colors[&u]).collect();
            nb.sort_unstable();
            keys.insert(v, (colors[&v], nb));
        }
        let sorted: BTreeSet<&(u64, Vec<u64>)> = keys.values().collect();
        let distinct: BTreeMap<&(u64, Vec<u64>), u64> =
            sorted.into_iter().enumerate().map(|(i, k)| (k, i as u64)).collect();
        let next: Colors = graph.verts().iter().map(|&v| (v, distinct[&keys[&v]])).collect();
        if next == colors {
            return colors;
        }
        colors = next;
    }
}

fn classes(colors: &Colors) -> BTreeMap<u64, Vec<Loc>> {
    let mut out: BTreeMap<u64, Vec<Loc>> = BTreeMap::new();
    for (&v, &c) in colors {
        out.entry(c).or_default().push(v);
    }
    out
}

fn search(graph: &Graph, colors: Colors, best: &mut Option<(String, Vec<Loc>)>, certify: &impl Fn(&[Loc]) -> String) {
    let colors = refine(graph, colors);
    let cls = classes(&colors);
    // pick the first class that still needs splitting
    let target = cls.iter().find(|(_, vs)| vs.len() > 1);
    match target {
        None => {
            let mut order: Vec<Loc> = graph.verts().iter().copied().collect();
            order.sort_by_key(|v| colors[v]);
            let cert = certify(&order);
            if best.as_ref().map(|(b, _)| cert < *b).unwrap_or(true) {
                *best = Some((cert, order));
            }
        }
        Some((_, vs)) => {
            if vs.iter().all(|&v| graph.degree(v) == 0) {
                // isolated vertices with equal color are interchangeable:
                // order them by current label without branching
                let mut colors = colors.clone();
                let max = colors.values().copied().max().unwrap_or(0);
                for (i, &v) in vs.iter().enumerate() {
                    colors.insert(v, max + 1 + i as u64);
                }
                search(graph, colors, best, certify);
            } else {
                for &v in vs.iter() {
                    let mut c = colors.clone();
                    let max = c.values().copied().max().unwrap_or(0);
                    c.insert(v, max + 1);
                    search(graph, c, best, certify);
                }
            }
        }
    }
}

/// The canonical vertex order of a process (restriction ignored).
fn canonical_order(p: &Process) -> Vec<Loc> {
    if p.graph.is_empty() {
        return Vec::new();
    }
    let shape: BTreeMap<Loc, String> =
        p.comps.iter().map(|(&v, t)| (v, shape_key(t))).collect();
    let sorted: BTreeSet<&String> = shape.values().collect();
    let distinct: BTreeMap<&String, u64> =
        sorted.into_iter().enumerate().map(|(i, s)| (s, i as u64)).collect();
    let colors: Colors = p.graph.verts().iter().map(|&v| (v, distinct[&shape[&v]])).collect();
    let certify = |order: &[Loc]| -> String {
        // cheap certificate: component shapes in order plus renumbered edges
        let pos: BTreeMap<Loc, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut edges: Vec<(usize, usize)> = p
            .graph
            .edges()
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (pos[&a], pos[&b]);
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        edges.sort_unstable();
        let mut s = String::new();
        for &v in order {
            s.push_str(&shape[&v]);
            s.push(';');
        }
        for (a, b) in edges {
            s.push_str(&a.to_string());
            s.push('-');
            s.push_str(&b.to_string());
            s.push(',');
        }
        s
    };
    let mut best: Option<(String, Vec<Loc>)> = None;
    search(&p.graph, colors, &mut best, &certify);
    best.expect("nonempty graph yields an order").1
}

/// Deterministically relabel locations to `0..n-1`. Returns the renamed
/// process and the map from new locations back to the originals.
pub fn canonical(p: &Process) -> (Process, BTreeMap<Loc, Loc>) {
    let order = canonical_order(p);
    let n = order.len() as Loc;
    let old_to_new: BTreeMap<Loc, Loc> =
        order.iter().enumerate().map(|(i, &old)| (old, i as Loc)).collect();
    let mut next = n;
    let graph = p.graph.relabel(|q| old_to_new[&q]);
    let comps: BTreeMap<Loc, Term> = order
        .iter()
        .enumerate()
        .map(|(i, old)| (i as Loc, canon_term(&p.comps[old], &mut next)))
        .collect();
    let renamed = Process { graph, comps, restriction: p.restriction.clone() };
    let new_to_old = order.iter().enumerate().map(|(i, &old)| (i as Loc, old)).collect();
    (renamed, new_to_old)
}

/// Canonical state key: the printed canonical form.
pub fn key(p: &Process) -> String {
    canonical(p).0.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::expr::Expr;
    use crate::graph::Graph;

    fn proc_of(verts: &[(Loc, Term)], edges: &[(Loc, Loc)]) -> Process {
        let g = Graph::new(verts.iter().map(|(p, _)| *p), edges.iter().copied()).unwrap();
        Process::new(g, verts.iter().cloned().collect()).unwrap()
    }

    fn out_t(name: &str, v: i64) -> Term {
        Term::output(name, Expr::Val(v), vec![Term::Idle])
    }

    #[test]
    fn already_canonical_is_identity() {
        let p = proc_of(&[(0, out_t("f", 1)), (1, out_t("g", 2))], &[(0, 1)]);
        let (q, map) = canonical(&p);
        assert_eq!(q, p);
        assert_eq!(map[&0], 0);
        assert_eq!(map[&1], 1);
    }

    #[test]
    fn invariant_under_bijection() {
        let p = proc_of(
            &[(0, out_t("f", 1)), (1, out_t("g", 2)), (2, Term::Idle)],
            &[(0, 1), (1, 2)],
        );
        let q = p.relabel(&|l| match l {
            0 => 17,
            1 => 3,
            2 => 99,
            other => other,
        });
        assert_eq!(canonical(&p).0, canonical(&q).0);
    }

    #[test]
    fn idempotent() {
        let p = proc_of(
            &[(4, out_t("f", 1)), (9, out_t("f", 1)), (2, out_t("g", 0))],
            &[(4, 2)],
        );
        let (c1, _) = canonical(&p);
        let (c2, _) = canonical(&c1);
        assert_eq!(c1, c2);
    }

    #[test]
    fn interchangeable_isolated_components() {
        // two idle components, no edges: any bijection maps to the same form
        let p = proc_of(&[(5, Term::Idle), (8, Term::Idle)], &[]);
        let q = proc_of(&[(1, Term::Idle), (30, Term::Idle)], &[]);
        assert_eq!(canonical(&p).0, canonical(&q).0);
    }

    #[test]
    fn nested_locations_normalized() {
        // continuations stored as located subterms at different labels
        let inner_a = Term::Par {
            graph: Graph::singleton(7),
            comps: BTreeMap::from([(7, Term::Idle)]),
        };
        let inner_b = Term::Par {
            graph: Graph::singleton(12),
            comps: BTreeMap::from([(12, Term::Idle)]),
        };
        let a = proc_of(&[(0, Term::output("f", Expr::Val(1), vec![inner_a]))], &[]);
        let b = proc_of(&[(0, Term::output("f", Expr::Val(1), vec![inner_b]))], &[]);
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn distinguishes_structure() {
        let p = proc_of(&[(0, out_t("f", 1)), (1, out_t("g", 2))], &[(0, 1)]);
        let q = proc_of(&[(0, out_t("f", 1)), (1, out_t("g", 2))], &[]);
        assert_ne!(key(&p), key(&q));
        let r = proc_of(&[(0, out_t("f", 1)), (1, out_t("g", 3))], &[(0, 1)]);
        assert_ne!(key(&p), key(&r));
    }

    #[test]
    fn symmetric_cycle_branches_consistently() {
        // a 4-cycle of identical components: heavy symmetry, must stay
        // invariant under rotation
        let mk = |offs: [Loc; 4]| {
            proc_of(
                &[
                    (offs[0], out_t("f", 1)),
                    (offs[1], out_t("f", 1)),
                    (offs[2], out_t("f", 1)),
                    (offs[3], out_t("f", 1)),
                ],
                &[
                    (offs[0], offs[1]),
                    (offs[1], offs[2]),
                    (offs[2], offs[3]),
                    (offs[3], offs[0]),
                ],
            )
        };
        let p = mk([0, 1, 2, 3]);
        let q = mk([10, 7, 22, 4]);
        assert_eq!(canonical(&p).0, canonical(&q).0);
    }
}
