//! Process terms and the executable located form.
//!
//! Grammar: `* | 0 | X(e..) | mu X(z = e,..). S | S + S | f(x).(P..) |
//! ~f(e).(P..) | par { p: S; .. } edges { (p,q).. } | P \ {f,..} |
//! if b then S else S`.
//!
//! Recursion binders may carry value parameters together with their current
//! arguments; unfolding substitutes the arguments for the parameters and
//! re-applies occurrences (this is what lets a recursive cell keep state, as
//! in a shared-variable process). Prefix continuations are either located
//! subterms (`par { .. }`), plain guarded sums located lazily at firing time,
//! or recursion variables.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{BExpr, Expr};
use crate::graph::{Graph, GraphError, Loc};
use crate::symbol::Symbol;

pub use crate::expr::Val;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    /// The idle process `*`: terminated, no transitions, no barbs.
    Idle,
    /// The empty sum `0`.
    Zero,
    /// A process variable occurrence, possibly applied to value arguments.
    Var { name: String, args: Vec<Expr> },
    /// `mu X(params = args). body`; plain recursion has no parameters.
    Rec { name: String, params: Vec<String>, args: Vec<Expr>, body: Box<Term> },
    Sum(Box<Term>, Box<Term>),
    /// Input prefix `f(x).(P1,..,Pn)`; `x` is bound in all continuations.
    In { sym: Symbol, binder: String, conts: Vec<Term> },
    /// Output prefix `~f(e).(P1,..,Pn)`.
    Out { sym: Symbol, arg: Expr, conts: Vec<Term> },
    /// Graph-located parallel composition.
    Par { graph: Graph, comps: BTreeMap<Loc, Term> },
    /// Symbol restriction by plain name.
    Restrict { body: Box<Term>, syms: BTreeSet<String> },
    Cond { guard: BExpr, then_br: Box<Term>, else_br: Box<Term> },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TermError {
    Graph(GraphError),
    /// Arity of a prefix symbol does not match its continuation count.
    Arity { sym: String, arity: usize, conts: usize },
    /// A process variable with arguments cannot be substituted by a plain process.
    AppliedVar(String),
    RestrictionInside,
}

impl fmt::Display for TermError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermError::Graph(e) => write!(f, "{e}"),
            TermError::Arity { sym, arity, conts } => {
                write!(f, "symbol `{sym}` has arity {arity} but {conts} continuations")
            }
            TermError::AppliedVar(x) => {
                write!(f, "cannot substitute a process for applied variable `{x}(..)`")
            }
            TermError::RestrictionInside => write!(f, "restriction is only supported at top level"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TermError {}

impl From<GraphError> for TermError {
    fn from(e: GraphError) -> Self {
        TermError::Graph(e)
    }
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var { name: name.into(), args: Vec::new() }
    }

    pub fn var_app(name: impl Into<String>, args: Vec<Expr>) -> Term {
        Term::Var { name: name.into(), args }
    }

    pub fn rec(name: impl Into<String>, body: Term) -> Term {
        Term::Rec { name: name.into(), params: Vec::new(), args: Vec::new(), body: Box::new(body) }
    }

    pub fn rec_app(
        name: impl Into<String>,
        params: Vec<String>,
        args: Vec<Expr>,
        body: Term,
    ) -> Term {
        Term::Rec { name: name.into(), params, args, body: Box::new(body) }
    }

    pub fn sum(a: Term, b: Term) -> Term {
        Term::Sum(Box::new(a), Box::new(b))
    }

    pub fn input(name: &str, binder: &str, conts: Vec<Term>) -> Term {
        Term::In { sym: Symbol::plain(name, conts.len()), binder: binder.into(), conts }
    }

    pub fn output(name: &str, arg: Expr, conts: Vec<Term>) -> Term {
        Term::Out { sym: Symbol::co(name, conts.len()), arg, conts }
    }

    pub fn restrict(body: Term, syms: impl IntoIterator<Item = impl Into<String>>) -> Term {
        Term::Restrict {
            body: Box::new(body),
            syms: syms.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cond(guard: BExpr, t: Term, e: Term) -> Term {
        Term::Cond { guard, then_br: Box::new(t), else_br: Box::new(e) }
    }

    /// Free data variables.
    pub fn fv(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.fv_into(&mut out);
        out
    }

    fn fv_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Idle | Term::Zero => {}
            Term::Var { args, .. } => {
                for a in args {
                    a.free_vars(out);
                }
            }
            Term::Rec { params, args, body, .. } => {
                for a in args {
                    a.free_vars(out);
                }
                let mut inner = BTreeSet::new();
                body.fv_into(&mut inner);
                for p in params {
                    inner.remove(p);
                }
                out.extend(inner);
            }
            Term::Sum(a, b) => {
                a.fv_into(out);
                b.fv_into(out);
            }
            Term::In { binder, conts, .. } => {
                let mut inner = BTreeSet::new();
                for c in conts {
                    c.fv_into(&mut inner);
                }
                inner.remove(binder);
                out.extend(inner);
            }
            Term::Out { arg, conts, .. } => {
                arg.free_vars(out);
                for c in conts {
                    c.fv_into(out);
                }
            }
            Term::Par { comps, .. } => {
                for t in comps.values() {
                    t.fv_into(out);
                }
            }
            Term::Restrict { body, .. } => body.fv_into(out),
            Term::Cond { guard, then_br, else_br } => {
                guard.free_vars(out);
                then_br.fv_into(out);
                else_br.fv_into(out);
            }
        }
    }

    /// Free process variables.
    pub fn free_proc_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.fpv_into(&mut out);
        out
    }

    fn fpv_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Idle | Term::Zero => {}
            Term::Var { name, .. } => {
                out.insert(name.clone());
            }
            Term::Rec { name, body, .. } => {
                let mut inner = BTreeSet::new();
                body.fpv_into(&mut inner);
                inner.remove(name);
                out.extend(inner);
            }
            Term::Sum(a, b) => {
                a.fpv_into(out);
                b.fpv_into(out);
            }
            Term::In { conts, .. } => conts.iter().for_each(|c| c.fpv_into(out)),
            Term::Out { conts, .. } => conts.iter().for_each(|c| c.fpv_into(out)),
            Term::Par { comps, .. } => comps.values().for_each(|c| c.fpv_into(out)),
            Term::Restrict { body, .. } => body.fpv_into(out),
            Term::Cond { then_br, else_br, .. } => {
                then_br.fpv_into(out);
                else_br.fpv_into(out);
            }
        }
    }

    /// The sort: every plain symbol occurring outside a matching restriction.
    pub fn sort(&self) -> BTreeSet<Symbol> {
        match self {
            Term::Idle | Term::Zero | Term::Var { .. } => BTreeSet::new(),
            Term::Rec { body, .. } => body.sort(),
            Term::Sum(a, b) => {
                let mut s = a.sort();
                s.extend(b.sort());
                s
            }
            Term::In { sym, conts, .. } | Term::Out { sym, conts, .. } => {
                let mut s = BTreeSet::from([sym.base()]);
                for c in conts {
                    s.extend(c.sort());
                }
                s
            }
            Term::Par { comps, .. } => {
                let mut s = BTreeSet::new();
                for c in comps.values() {
                    s.extend(c.sort());
                }
                s
            }
            Term::Restrict { body, syms } => {
                body.sort().into_iter().filter(|f| !syms.contains(&f.name)).collect()
            }
            Term::Cond { then_br, else_br, .. } => {
                let mut s = then_br.sort();
                s.extend(else_br.sort());
                s
            }
        }
    }

    /// Largest location mentioned anywhere, including recursion bodies.
    pub fn max_loc(&self) -> Loc {
        let mut m = 0;
        self.visit_graphs(&mut |g| m = m.max(g.max_loc()));
        m
    }

    fn visit_graphs(&self, f: &mut impl FnMut(&Graph)) {
        match self {
            Term::Idle | Term::Zero | Term::Var { .. } => {}
            Term::Rec { body, .. } => body.visit_graphs(f),
            Term::Sum(a, b) => {
                a.visit_graphs(f);
                b.visit_graphs(f);
            }
            Term::In { conts, .. } | Term::Out { conts, .. } => {
                conts.iter().for_each(|c| c.visit_graphs(f))
            }
            Term::Par { graph, comps } => {
                f(graph);
                comps.values().for_each(|c| c.visit_graphs(f));
            }
            Term::Restrict { body, .. } => body.visit_graphs(f),
            Term::Cond { then_br, else_br, .. } => {
                then_br.visit_graphs(f);
                else_br.visit_graphs(f);
            }
        }
    }

    /// Locations of located subterms outside recursion bodies. These are the
    /// locations that enter the active graph verbatim when a prefix fires;
    /// recursion bodies are templates whose locations are freshened at unfold.
    pub fn active_locs(&self, out: &mut BTreeSet<Loc>) {
        match self {
            Term::Idle | Term::Zero | Term::Var { .. } | Term::Rec { .. } => {}
            Term::Sum(a, b) => {
                a.active_locs(out);
                b.active_locs(out);
            }
            Term::In { conts, .. } | Term::Out { conts, .. } => {
                conts.iter().for_each(|c| c.active_locs(out))
            }
            Term::Par { graph, comps } => {
                out.extend(graph.verts().iter().copied());
                comps.values().for_each(|c| c.active_locs(out));
            }
            Term::Restrict { body, .. } => body.active_locs(out),
            Term::Cond { then_br, else_br, .. } => {
                then_br.active_locs(out);
                else_br.active_locs(out);
            }
        }
    }

    /// Relabel every location (including recursion-body templates).
    pub fn relabel(&self, f: &impl Fn(Loc) -> Loc) -> Term {
        match self {
            Term::Idle => Term::Idle,
            Term::Zero => Term::Zero,
            Term::Var { name, args } => Term::Var { name: name.clone(), args: args.clone() },
            Term::Rec { name, params, args, body } => Term::Rec {
                name: name.clone(),
                params: params.clone(),
                args: args.clone(),
                body: Box::new(body.relabel(f)),
            },
            Term::Sum(a, b) => Term::sum(a.relabel(f), b.relabel(f)),
            Term::In { sym, binder, conts } => Term::In {
                sym: sym.clone(),
                binder: binder.clone(),
                conts: conts.iter().map(|c| c.relabel(f)).collect(),
            },
            Term::Out { sym, arg, conts } => Term::Out {
                sym: sym.clone(),
                arg: arg.clone(),
                conts: conts.iter().map(|c| c.relabel(f)).collect(),
            },
            Term::Par { graph, comps } => Term::Par {
                graph: graph.relabel(|p| f(p)),
                comps: comps.iter().map(|(p, t)| (f(*p), t.relabel(f))).collect(),
            },
            Term::Restrict { body, syms } => {
                Term::Restrict { body: Box::new(body.relabel(f)), syms: syms.clone() }
            }
            Term::Cond { guard, then_br, else_br } => {
                Term::cond(guard.clone(), then_br.relabel(f), else_br.relabel(f))
            }
        }
    }

    /// Capture-avoiding substitution of an expression for a free data variable.
    pub fn subst_data(&self, x: &str, e: &Expr) -> Term {
        let mut map = BTreeMap::new();
        map.insert(x.to_string(), e.clone());
        self.subst_data_map(&map)
    }

    /// Simultaneous capture-avoiding substitution.
    pub fn subst_data_map(&self, map: &BTreeMap<String, Expr>) -> Term {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Term::Idle => Term::Idle,
            Term::Zero => Term::Zero,
            Term::Var { name, args } => Term::Var {
                name: name.clone(),
                args: args.iter().map(|a| a.subst_map(map)).collect(),
            },
            Term::Rec { name, params, args, body } => {
                let args: Vec<Expr> = args.iter().map(|a| a.subst_map(map)).collect();
                let mut inner: BTreeMap<String, Expr> = map.clone();
                for p in params {
                    inner.remove(p);
                }
                // alpha-rename parameters that would capture range variables
                let mut params = params.clone();
                let mut body = (**body).clone();
                let range_fv: BTreeSet<String> =
                    inner.values().flat_map(|e| e.fv()).collect();
                for p in params.iter_mut() {
                    if range_fv.contains(p) {
                        let fresh = fresh_name(p, &range_fv, &body.fv());
                        body = body.subst_data(p, &Expr::Var(fresh.clone()));
                        inner.remove(&fresh);
                        *p = fresh;
                    }
                }
                Term::Rec {
                    name: name.clone(),
                    params,
                    args,
                    body: Box::new(body.subst_data_map(&inner)),
                }
            }
            Term::Sum(a, b) => Term::sum(a.subst_data_map(map), b.subst_data_map(map)),
            Term::In { sym, binder, conts } => {
                let mut inner = map.clone();
                inner.remove(binder);
                let range_fv: BTreeSet<String> =
                    inner.values().flat_map(|e| e.fv()).collect();
                let (binder, conts) = if range_fv.contains(binder) {
                    let all_fv: BTreeSet<String> =
                        conts.iter().flat_map(|c| c.fv()).collect();
                    let fresh = fresh_name(binder, &range_fv, &all_fv);
                    let renamed: Vec<Term> = conts
                        .iter()
                        .map(|c| c.subst_data(binder, &Expr::Var(fresh.clone())))
                        .collect();
                    (fresh, renamed)
                } else {
                    (binder.clone(), conts.clone())
                };
                Term::In {
                    sym: sym.clone(),
                    binder,
                    conts: conts.iter().map(|c| c.subst_data_map(&inner)).collect(),
                }
            }
            Term::Out { sym, arg, conts } => Term::Out {
                sym: sym.clone(),
                arg: arg.subst_map(map),
                conts: conts.iter().map(|c| c.subst_data_map(map)).collect(),
            },
            Term::Par { graph, comps } => Term::Par {
                graph: graph.clone(),
                comps: comps.iter().map(|(p, t)| (*p, t.subst_data_map(map))).collect(),
            },
            Term::Restrict { body, syms } => Term::Restrict {
                body: Box::new(body.subst_data_map(map)),
                syms: syms.clone(),
            },
            Term::Cond { guard, then_br, else_br } => Term::cond(
                guard.subst_map(map),
                then_br.subst_data_map(map),
                else_br.subst_data_map(map),
            ),
        }
    }

    /// Substitute a process for every free occurrence of the process variable
    /// `x`. Spliced copies after the first have their active locations
    /// relabelled so location sets stay pairwise disjoint.
    pub fn subst_procvar(&self, x: &str, p: &Term) -> Result<Term, TermError> {
        let mut next = self.max_loc().max(p.max_loc()) + 1;
        let mut count = 0usize;
        self.subst_procvar_inner(x, p, &mut next, &mut count)
    }

    fn subst_procvar_inner(
        &self,
        x: &str,
        p: &Term,
        next: &mut Loc,
        count: &mut usize,
    ) -> Result<Term, TermError> {
        match self {
            Term::Idle => Ok(Term::Idle),
            Term::Zero => Ok(Term::Zero),
            Term::Var { name, args } if name == x => {
                if !args.is_empty() {
                    return Err(TermError::AppliedVar(name.clone()));
                }
                *count += 1;
                if *count == 1 {
                    Ok(p.clone())
                } else {
                    let mut locs = BTreeSet::new();
                    p.active_locs(&mut locs);
                    let map: BTreeMap<Loc, Loc> = locs
                        .iter()
                        .enumerate()
                        .map(|(i, &l)| (l, *next + i as Loc))
                        .collect();
                    *next += locs.len() as Loc;
                    Ok(p.relabel(&|l| map.get(&l).copied().unwrap_or(l)))
                }
            }
            Term::Var { name, args } => {
                Ok(Term::Var { name: name.clone(), args: args.clone() })
            }
            Term::Rec { name, params, args, body } => {
                if name == x {
                    // binder shadows
                    return Ok(self.clone());
                }
                let body = if p.free_proc_vars().contains(name) {
                    // alpha-rename the binder to avoid capturing p's variable
                    let avoid: BTreeSet<String> =
                        p.free_proc_vars().union(&body.free_proc_vars()).cloned().collect();
                    let fresh = fresh_name(name, &avoid, &BTreeSet::new());
                    let renamed = body.rename_procvar(name, &fresh);
                    return Ok(Term::Rec {
                        name: fresh,
                        params: params.clone(),
                        args: args.clone(),
                        body: Box::new(renamed.subst_procvar_inner(x, p, next, count)?),
                    });
                } else {
                    body.subst_procvar_inner(x, p, next, count)?
                };
                Ok(Term::Rec {
                    name: name.clone(),
                    params: params.clone(),
                    args: args.clone(),
                    body: Box::new(body),
                })
            }
            Term::Sum(a, b) => Ok(Term::sum(
                a.subst_procvar_inner(x, p, next, count)?,
                b.subst_procvar_inner(x, p, next, count)?,
            )),
            Term::In { sym, binder, conts } => Ok(Term::In {
                sym: sym.clone(),
                binder: binder.clone(),
                conts: conts
                    .iter()
                    .map(|c| c.subst_procvar_inner(x, p, next, count))
                    .collect::<Result<_, _>>()?,
            }),
            Term::Out { sym, arg, conts } => Ok(Term::Out {
                sym: sym.clone(),
                arg: arg.clone(),
                conts: conts
                    .iter()
                    .map(|c| c.subst_procvar_inner(x, p, next, count))
                    .collect::<Result<_, _>>()?,
            }),
            Term::Par { graph, comps } => Ok(Term::Par {
                graph: graph.clone(),
                comps: comps
                    .iter()
                    .map(|(q, t)| Ok((*q, t.subst_procvar_inner(x, p, next, count)?)))
                    .collect::<Result<_, TermError>>()?,
            }),
            Term::Restrict { body, syms } => Ok(Term::Restrict {
                body: Box::new(body.subst_procvar_inner(x, p, next, count)?),
                syms: syms.clone(),
            }),
            Term::Cond { guard, then_br, else_br } => Ok(Term::cond(
                guard.clone(),
                then_br.subst_procvar_inner(x, p, next, count)?,
                else_br.subst_procvar_inner(x, p, next, count)?,
            )),
        }
    }

    /// Rename a free process variable (no argument changes).
    pub fn rename_procvar(&self, from: &str, to: &str) -> Term {
        match self {
            Term::Var { name, args } if name == from => {
                Term::Var { name: to.into(), args: args.clone() }
            }
            Term::Rec { name, .. } if name == from => self.clone(),
            Term::Rec { name, params, args, body } => Term::Rec {
                name: name.clone(),
                params: params.clone(),
                args: args.clone(),
                body: Box::new(body.rename_procvar(from, to)),
            },
            Term::Sum(a, b) => Term::sum(a.rename_procvar(from, to), b.rename_procvar(from, to)),
            Term::In { sym, binder, conts } => Term::In {
                sym: sym.clone(),
                binder: binder.clone(),
                conts: conts.iter().map(|c| c.rename_procvar(from, to)).collect(),
            },
            Term::Out { sym, arg, conts } => Term::Out {
                sym: sym.clone(),
                arg: arg.clone(),
                conts: conts.iter().map(|c| c.rename_procvar(from, to)).collect(),
            },
            Term::Par { graph, comps } => Term::Par {
                graph: graph.clone(),
                comps: comps.iter().map(|(p, t)| (*p, t.rename_procvar(from, to))).collect(),
            },
            Term::Restrict { body, syms } => Term::Restrict {
                body: Box::new(body.rename_procvar(from, to)),
                syms: syms.clone(),
            },
            Term::Cond { guard, then_br, else_br } => Term::cond(
                guard.clone(),
                then_br.rename_procvar(from, to),
                else_br.rename_procvar(from, to),
            ),
            _ => self.clone(),
        }
    }

    /// Sequencing `P |> Q`: substitutes `Q` for every occurrence of `*` in
    /// `P`, so `Q` cannot execute until `P` terminates. Spliced copies after
    /// the first have their active locations freshened.
    pub fn seq(&self, q: &Term) -> Term {
        if matches!(q, Term::Idle) {
            return self.clone();
        }
        let mut next = self.max_loc().max(q.max_loc()) + 1;
        let mut count = 0usize;
        self.seq_inner(q, &mut next, &mut count)
    }

    fn seq_inner(&self, q: &Term, next: &mut Loc, count: &mut usize) -> Term {
        match self {
            Term::Idle => {
                *count += 1;
                if *count == 1 {
                    q.clone()
                } else {
                    let mut locs = BTreeSet::new();
                    q.active_locs(&mut locs);
                    let map: BTreeMap<Loc, Loc> = locs
                        .iter()
                        .enumerate()
                        .map(|(i, &l)| (l, *next + i as Loc))
                        .collect();
                    *next += locs.len() as Loc;
                    q.relabel(&|l| map.get(&l).copied().unwrap_or(l))
                }
            }
            Term::Zero => Term::Zero,
            Term::Var { .. } => self.clone(),
            Term::Rec { name, params, args, body } => Term::Rec {
                name: name.clone(),
                params: params.clone(),
                args: args.clone(),
                body: Box::new(body.seq_inner(q, next, count)),
            },
            Term::Sum(a, b) => Term::sum(a.seq_inner(q, next, count), b.seq_inner(q, next, count)),
            Term::In { sym, binder, conts } => Term::In {
                sym: sym.clone(),
                binder: binder.clone(),
                conts: conts.iter().map(|c| c.seq_inner(q, next, count)).collect(),
            },
            Term::Out { sym, arg, conts } => Term::Out {
                sym: sym.clone(),
                arg: arg.clone(),
                conts: conts.iter().map(|c| c.seq_inner(q, next, count)).collect(),
            },
            Term::Par { graph, comps } => Term::Par {
                graph: graph.clone(),
                comps: comps.iter().map(|(p, t)| (*p, t.seq_inner(q, next, count))).collect(),
            },
            Term::Restrict { body, syms } => Term::Restrict {
                body: Box::new(body.seq_inner(q, next, count)),
                syms: syms.clone(),
            },
            Term::Cond { guard, then_br, else_br } => Term::cond(
                guard.clone(),
                then_br.seq_inner(q, next, count),
                else_br.seq_inner(q, next, count),
            ),
        }
    }
}

fn fresh_name(base: &str, avoid1: &BTreeSet<String>, avoid2: &BTreeSet<String>) -> String {
    let mut i = 0u32;
    loop {
        let cand = format!("{base}_{i}");
        if !avoid1.contains(&cand) && !avoid2.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// The executable canonical form: a finite graph over locations, one
/// recursive canonical guarded sum per location, and an optional top-level
/// restriction set.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Process {
    pub graph: Graph,
    pub comps: BTreeMap<Loc, Term>,
    pub restriction: BTreeSet<String>,
}

impl Process {
    pub fn new(graph: Graph, comps: BTreeMap<Loc, Term>) -> Result<Process, GraphError> {
        for p in graph.verts() {
            if !comps.contains_key(p) {
                return Err(GraphError::MissingVertex(*p));
            }
        }
        for p in comps.keys() {
            if !graph.contains(*p) {
                return Err(GraphError::MissingVertex(*p));
            }
        }
        Ok(Process { graph, comps, restriction: BTreeSet::new() })
    }

    pub fn singleton(p: Loc, t: Term) -> Process {
        Process {
            graph: Graph::singleton(p),
            comps: BTreeMap::from([(p, t)]),
            restriction: BTreeSet::new(),
        }
    }

    pub fn with_restriction(mut self, syms: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.restriction = syms.into_iter().map(Into::into).collect();
        self
    }

    pub fn locs(&self) -> impl Iterator<Item = Loc> + '_ {
        self.graph.verts().iter().copied()
    }

    pub fn component(&self, p: Loc) -> Option<&Term> {
        self.comps.get(&p)
    }

    pub fn max_loc_all(&self) -> Loc {
        let mut m = self.graph.max_loc();
        for t in self.comps.values() {
            m = m.max(t.max_loc());
        }
        m
    }

    pub fn fv(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in self.comps.values() {
            out.extend(t.fv());
        }
        out
    }

    pub fn sort(&self) -> BTreeSet<Symbol> {
        let mut s = BTreeSet::new();
        for t in self.comps.values() {
            s.extend(t.sort());
        }
        s.into_iter().filter(|f| !self.restriction.contains(&f.name)).collect()
    }

    /// `P (+)_D Q`: union graph with the cross edges `D` and merged
    /// components. Both operands must be restriction-free.
    pub fn oplus(&self, other: &Process, d: &[(Loc, Loc)]) -> Result<Process, TermError> {
        if !self.restriction.is_empty() || !other.restriction.is_empty() {
            return Err(TermError::RestrictionInside);
        }
        let graph = self.graph.oplus(&other.graph, d)?;
        let mut comps = self.comps.clone();
        comps.extend(other.comps.iter().map(|(p, t)| (*p, t.clone())));
        Ok(Process { graph, comps, restriction: BTreeSet::new() })
    }

    /// Full parallel composition `P | Q` (all cross edges).
    pub fn par(&self, other: &Process) -> Result<Process, TermError> {
        let d = self.graph.full_cross(&other.graph);
        self.oplus(other, &d)
    }

    /// `P[Q/p]`: replaces the vertex `p` by the whole of `Q`.
    pub fn subst_loc(&self, q: &Process, p: Loc) -> Result<Process, TermError> {
        if !q.restriction.is_empty() {
            return Err(TermError::RestrictionInside);
        }
        let graph = self.graph.subst(&q.graph, p)?;
        let mut comps = self.comps.clone();
        comps.remove(&p);
        comps.extend(q.comps.iter().map(|(r, t)| (*r, t.clone())));
        Ok(Process { graph, comps, restriction: self.restriction.clone() })
    }

    /// Apply an environment, closing every component.
    pub fn close_with(&self, env: &crate::expr::Env) -> Process {
        let map: BTreeMap<String, Expr> =
            env.iter().map(|(k, v)| (k.clone(), Expr::Val(*v))).collect();
        Process {
            graph: self.graph.clone(),
            comps: self.comps.iter().map(|(p, t)| (*p, t.subst_data_map(&map))).collect(),
            restriction: self.restriction.clone(),
        }
    }

    /// Relabel all locations through an injective map.
    pub fn relabel(&self, f: &impl Fn(Loc) -> Loc) -> Process {
        Process {
            graph: self.graph.relabel(|p| f(p)),
            comps: self.comps.iter().map(|(p, t)| (f(*p), t.relabel(f))).collect(),
            restriction: self.restriction.clone(),
        }
    }

    /// View as a term (`par { .. }` under the restriction, if any).
    pub fn to_term(&self) -> Term {
        let par = Term::Par { graph: self.graph.clone(), comps: self.comps.clone() };
        if self.restriction.is_empty() {
            par
        } else {
            Term::Restrict { body: Box::new(par), syms: self.restriction.clone() }
        }
    }

    /// Interpret a term as a located process: a `par { .. }`, an optional
    /// top-level restriction over one, or any other term as a singleton at
    /// location 0 (locating fresh locations for nested structure is the
    /// firing engine's job).
    pub fn from_term(t: &Term) -> Result<Process, TermError> {
        match t {
            Term::Restrict { body, syms } => {
                let mut p = Process::from_term(body)?;
                if !p.restriction.is_empty() {
                    // collapse nested top-level restrictions
                    p.restriction.extend(syms.iter().cloned());
                } else {
                    p.restriction = syms.clone();
                }
                Ok(p)
            }
            Term::Par { graph, comps } => Ok(Process::new(graph.clone(), comps.clone())?),
            other => Ok(Process::singleton(0, other.clone())),
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

// Display: level 0 prints anything, level 1 is a sum operand and wraps sums,
// conditionals and recursions in parentheses.
impl Term {
    fn fmt_level(&self, f: &mut fmt::Formatter<'_>, level: u8) -> fmt::Result {
        match self {
            Term::Idle => write!(f, "*"),
            Term::Zero => write!(f, "0"),
            Term::Var { name, args } => {
                write!(f, "{name}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
            Term::Rec { name, params, args, body } => {
                if level > 0 {
                    write!(f, "(")?;
                }
                write!(f, "mu {name}")?;
                if !params.is_empty() {
                    write!(f, "(")?;
                    for (i, (p, a)) in params.iter().zip(args.iter()).enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{p} = {a}")?;
                    }
                    write!(f, ")")?;
                }
                write!(f, ". ")?;
                body.fmt_level(f, 1)?;
                if level > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Term::Sum(a, b) => {
                if level > 0 {
                    write!(f, "(")?;
                }
                a.fmt_level(f, 1)?;
                write!(f, " + ")?;
                b.fmt_level(f, 1)?;
                if level > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Term::In { sym, binder, conts } => {
                write!(f, "{}({binder}).(", sym.name)?;
                for (i, c) in conts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    c.fmt_level(f, 0)?;
                }
                write!(f, ")")
            }
            Term::Out { sym, arg, conts } => {
                write!(f, "~{}({arg}).(", sym.name)?;
                for (i, c) in conts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    c.fmt_level(f, 0)?;
                }
                write!(f, ")")
            }
            Term::Par { graph, comps } => {
                write!(f, "par {{ ")?;
                for (i, (p, t)) in comps.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{p}: ")?;
                    t.fmt_level(f, 0)?;
                }
                write!(f, " }}")?;
                if !graph.edges().is_empty() {
                    write!(f, " edges {{ ")?;
                    for (i, (a, b)) in graph.edges().iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "({a},{b})")?;
                    }
                    write!(f, " }}")?;
                }
                Ok(())
            }
            Term::Restrict { body, syms } => {
                match **body {
                    Term::Idle
                    | Term::Zero
                    | Term::Var { .. }
                    | Term::Par { .. }
                    | Term::In { .. }
                    | Term::Out { .. }
                    | Term::Restrict { .. } => body.fmt_level(f, 1)?,
                    _ => {
                        write!(f, "(")?;
                        body.fmt_level(f, 0)?;
                        write!(f, ")")?;
                    }
                }
                write!(f, " \\ {{")?;
                for (i, s) in syms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "}}")
            }
            Term::Cond { guard, then_br, else_br } => {
                if level > 0 {
                    write!(f, "(")?;
                }
                write!(f, "if {guard} then ")?;
                then_br.fmt_level(f, 1)?;
                write!(f, " else ")?;
                else_br.fmt_level(f, 1)?;
                if level > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_level(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Op;

    fn star() -> Term {
        Term::Idle
    }

    #[test]
    fn sort_clauses() {
        assert!(star().sort().is_empty());
        assert!(Term::var("X").sort().is_empty());
        assert!(Term::Zero.sort().is_empty());
        // f(x).(0) \ {f} has empty sort
        let t = Term::restrict(Term::input("f", "x", alloc::vec![Term::Zero]), ["f"]);
        assert!(t.sort().is_empty());
        let t = Term::sum(
            Term::input("f", "x", alloc::vec![Term::Zero]),
            Term::output("g", Expr::Val(1), alloc::vec![Term::Zero]),
        );
        let names: Vec<String> = t.sort().into_iter().map(|s| s.name).collect();
        assert_eq!(names, alloc::vec![String::from("f"), String::from("g")]);
    }

    #[test]
    fn subst_data_respects_binders() {
        // (f(x).(~g(x).(*))){e/x} is unchanged: x is bound
        let t = Term::input("f", "x", alloc::vec![Term::output("g", Expr::var("x"), alloc::vec![star()])]);
        assert_eq!(t.subst_data("x", &Expr::Val(7)), t);
        // free occurrence is substituted
        let t = Term::output("g", Expr::var("y"), alloc::vec![star()]);
        let expect = Term::output("g", Expr::Val(1), alloc::vec![star()]);
        assert_eq!(t.subst_data("y", &Expr::Val(1)), expect);
    }

    #[test]
    fn subst_data_through_conditional() {
        let t = Term::cond(
            BExpr::Eq(Expr::var("y"), Expr::Val(0)),
            Term::output("f", Expr::var("y"), alloc::vec![star()]),
            Term::Zero,
        );
        let out = t.subst_data("y", &Expr::Val(0));
        match out {
            Term::Cond { guard, then_br, .. } => {
                assert_eq!(guard, BExpr::Eq(Expr::Val(0), Expr::Val(0)));
                assert_eq!(*then_br, Term::output("f", Expr::Val(0), alloc::vec![star()]));
            }
            _ => panic!("expected conditional"),
        }
    }

    #[test]
    fn subst_data_avoids_capture() {
        // (f(x).(~g(x + y).(*))){x/y}: the binder x must be renamed
        let t = Term::input(
            "f",
            "x",
            alloc::vec![Term::output(
                "g",
                Expr::bin(Op::Add, Expr::var("x"), Expr::var("y")),
                alloc::vec![star()],
            )],
        );
        let out = t.subst_data("y", &Expr::var("x"));
        if let Term::In { binder, conts, .. } = &out {
            assert_ne!(binder, "x");
            if let Term::Out { arg, .. } = &conts[0] {
                assert_eq!(*arg, Expr::bin(Op::Add, Expr::var(binder.clone()), Expr::var("x")));
            } else {
                panic!("expected output");
            }
        } else {
            panic!("expected input");
        }
    }

    #[test]
    fn subst_procvar_identity_cases() {
        let p = Term::output("f", Expr::Val(1), alloc::vec![star()]);
        // X[P/X] = P
        assert_eq!(Term::var("X").subst_procvar("X", &p).unwrap(), p);
        // R with no free X is unchanged
        let r = Term::input("g", "x", alloc::vec![Term::Zero]);
        assert_eq!(r.subst_procvar("X", &p).unwrap(), r);
        // binder shadows
        let r = Term::rec("X", Term::sum(Term::var("X"), Term::Zero));
        assert_eq!(r.subst_procvar("X", &p).unwrap(), r);
    }

    #[test]
    fn seq_identities() {
        let p = Term::output("f", Expr::Val(1), alloc::vec![star()]);
        assert_eq!(star().seq(&p), p);
        assert_eq!(p.seq(&star()), p);
        // chaining: ~f(1).(*) |> ~g(2).(*) = ~f(1).(~g(2).(*))
        let q = Term::output("g", Expr::Val(2), alloc::vec![star()]);
        let out = p.seq(&q);
        assert_eq!(out, Term::output("f", Expr::Val(1), alloc::vec![q.clone()]));
    }

    #[test]
    fn seq_descends_into_recursion_bodies() {
        let body = Term::cond(BExpr::True, Term::var("X"), star());
        let t = Term::rec("X", body);
        let q = Term::output("f", Expr::Val(1), alloc::vec![star()]);
        let out = t.seq(&q);
        if let Term::Rec { body, .. } = out {
            if let Term::Cond { else_br, .. } = *body {
                assert_eq!(*else_br, q);
            } else {
                panic!("expected conditional");
            }
        } else {
            panic!("expected mu");
        }
    }

    #[test]
    fn display_process_grammar() {
        let t = Term::sum(
            Term::input("f", "x", alloc::vec![star()]),
            Term::output("g", Expr::Val(2), alloc::vec![Term::Zero, star()]),
        );
        assert_eq!(t.to_string(), "f(x).(*) + ~g(2).(0, *)");
        let p = Process::new(
            Graph::new([0, 1], [(0, 1)]).unwrap(),
            BTreeMap::from([(0, star()), (1, Term::Zero)]),
        )
        .unwrap()
        .with_restriction(["f"]);
        assert_eq!(p.to_string(), "par { 0: *; 1: 0 } edges { (0,1) } \\ {f}");
    }

    #[test]
    fn oplus_disjointness() {
        let a = Process::singleton(0, star());
        let b = Process::singleton(0, star());
        assert!(a.oplus(&b, &[]).is_err());
        let b = Process::singleton(1, star());
        let c = a.oplus(&b, &[(0, 1)]).unwrap();
        assert!(c.graph.adjacent(0, 1));
    }
}
