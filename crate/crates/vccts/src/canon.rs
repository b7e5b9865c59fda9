//! Canonical forms: classification, recursion unfolding and validation.
//!
//! Only canonical processes execute. A term is classified as a canonical
//! process (CP), canonical guarded sum (CGS), recursive canonical guarded sum
//! (RCGS), or not canonical. Guarded sums are identified with their
//! single-located processes where a continuation position needs one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{Env, EvalError, Expr};
use crate::graph::Loc;
use crate::symbol::Symbol;
use crate::term::{Process, Term};

/// Default bound on consecutive recursion unfoldings before input is
/// reported ill-formed. Guarded recursion peels one binder per unfold, so any
/// canonical term stays far below this.
pub const UNFOLD_LIMIT: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Canonicity {
    /// Canonical process.
    Cp,
    /// Canonical guarded sum.
    Cgs,
    /// Recursive canonical guarded sum.
    Rcgs,
    NotCanonical,
}

impl Canonicity {
    pub fn is_canonical(self) -> bool {
        !matches!(self, Canonicity::NotCanonical)
    }

    pub fn is_component(self) -> bool {
        matches!(self, Canonicity::Cgs | Canonicity::Rcgs)
    }
}

impl fmt::Display for Canonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Canonicity::Cp => "CP",
            Canonicity::Cgs => "CGS",
            Canonicity::Rcgs => "RCGS",
            Canonicity::NotCanonical => "not-canonical",
        };
        write!(f, "{s}")
    }
}

/// Classify a term by the mutual-induction grammar of canonical forms.
pub fn classify(t: &Term) -> Canonicity {
    match t {
        Term::Idle | Term::Zero => Canonicity::Cgs,
        Term::Var { .. } => Canonicity::Cp,
        Term::Rec { body, .. } => {
            if classify(body).is_component() {
                Canonicity::Rcgs
            } else {
                Canonicity::NotCanonical
            }
        }
        Term::Sum(a, b) => {
            if classify(a) == Canonicity::Cgs && classify(b) == Canonicity::Cgs {
                Canonicity::Cgs
            } else {
                Canonicity::NotCanonical
            }
        }
        Term::In { sym, conts, .. } | Term::Out { sym, conts, .. } => {
            if sym.arity != conts.len() || conts.is_empty() {
                return Canonicity::NotCanonical;
            }
            if conts.iter().all(|c| classify(c).is_canonical()) {
                Canonicity::Cgs
            } else {
                Canonicity::NotCanonical
            }
        }
        Term::Par { comps, .. } => {
            if comps.values().all(|c| classify(c).is_component()) {
                Canonicity::Cp
            } else {
                Canonicity::NotCanonical
            }
        }
        Term::Restrict { body, .. } => {
            if classify(body).is_canonical() {
                Canonicity::Cp
            } else {
                Canonicity::NotCanonical
            }
        }
        Term::Cond { then_br, else_br, .. } => {
            if classify(then_br) == Canonicity::Cgs && classify(else_br) == Canonicity::Cgs {
                Canonicity::Cgs
            } else {
                Canonicity::NotCanonical
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CanonError {
    NotCanonical(String),
    /// The unfold bound tripped: recursion is not guarded.
    UnguardedRecursion,
    OpenGuard(EvalError),
    FreeProcVar(String),
    OpenTerm(BTreeSet<String>),
    ArityMismatch { name: String, seen: usize, prior: usize },
    VarArgs { name: String, expected: usize, got: usize },
    DuplicateLoc(Loc),
    RestrictionInside,
}

impl fmt::Display for CanonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonError::NotCanonical(why) => write!(f, "not canonical: {why}"),
            CanonError::UnguardedRecursion => {
                write!(f, "recursion is not guarded (unfold limit exceeded)")
            }
            CanonError::OpenGuard(e) => write!(f, "open guard: {e}"),
            CanonError::FreeProcVar(x) => write!(f, "free process variable `{x}`"),
            CanonError::OpenTerm(vs) => {
                write!(f, "term is not data-closed; free: ")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            CanonError::ArityMismatch { name, seen, prior } => {
                write!(f, "symbol `{name}` used with arities {prior} and {seen}")
            }
            CanonError::VarArgs { name, expected, got } => {
                write!(f, "variable `{name}` expects {expected} arguments, got {got}")
            }
            CanonError::DuplicateLoc(p) => write!(f, "location {p} occurs more than once"),
            CanonError::RestrictionInside => {
                write!(f, "restriction below the top level is not executable")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CanonError {}

/// A deterministic allocator of fresh locations.
#[derive(Clone, Debug)]
pub struct LocAlloc {
    next: Loc,
}

impl LocAlloc {
    pub fn new(start: Loc) -> Self {
        LocAlloc { next: start }
    }

    pub fn fresh(&mut self) -> Loc {
        let p = self.next;
        self.next += 1;
        p
    }
}

/// Width of the per-location allocation block used while firing. Fresh
/// locations for an unfolding at location `p` are drawn from
/// `base + p * BLOCK ..`, which makes the names independent of the order in
/// which simultaneous firings are serialized.
pub const BLOCK: Loc = 64;

/// Allocation base for stepping a process: the next power of two above every
/// location in use.
pub fn alloc_base(p: &Process) -> Loc {
    let m = p.max_loc_all();
    let mut b = 1;
    while b <= m {
        b <<= 1;
    }
    b
}

/// Block allocator for the firing at location `p`.
pub fn block_alloc(base: Loc, p: Loc) -> LocAlloc {
    LocAlloc::new(base + p * BLOCK)
}

fn relabel_active(t: &Term, map: &BTreeMap<Loc, Loc>) -> Term {
    match t {
        Term::Idle | Term::Zero | Term::Var { .. } | Term::Rec { .. } => t.clone(),
        Term::Sum(a, b) => Term::sum(relabel_active(a, map), relabel_active(b, map)),
        Term::In { sym, binder, conts } => Term::In {
            sym: sym.clone(),
            binder: binder.clone(),
            conts: conts.iter().map(|c| relabel_active(c, map)).collect(),
        },
        Term::Out { sym, arg, conts } => Term::Out {
            sym: sym.clone(),
            arg: arg.clone(),
            conts: conts.iter().map(|c| relabel_active(c, map)).collect(),
        },
        Term::Par { graph, comps } => Term::Par {
            graph: graph.relabel(|p| map.get(&p).copied().unwrap_or(p)),
            comps: comps
                .iter()
                .map(|(p, c)| (map.get(p).copied().unwrap_or(*p), relabel_active(c, map)))
                .collect(),
        },
        Term::Restrict { body, syms } => Term::Restrict {
            body: alloc::boxed::Box::new(relabel_active(body, map)),
            syms: syms.clone(),
        },
        Term::Cond { guard, then_br, else_br } => Term::cond(
            guard.clone(),
            relabel_active(then_br, map),
            relabel_active(else_br, map),
        ),
    }
}

/// Replace free occurrences of the recursion variable by the re-applied
/// recursion, keeping the body as the template.
fn wrap_occurrences(t: &Term, name: &str, params: &[String], template: &Term) -> Term {
    match t {
        Term::Var { name: n, args } if n == name => Term::Rec {
            name: name.to_string(),
            params: params.to_vec(),
            args: args.clone(),
            body: alloc::boxed::Box::new(template.clone()),
        },
        Term::Rec { name: n, .. } if n == name => t.clone(), // shadowed
        Term::Rec { name: n, params: ps, args, body } => Term::Rec {
            name: n.clone(),
            params: ps.clone(),
            args: args.clone(),
            body: alloc::boxed::Box::new(wrap_occurrences(body, name, params, template)),
        },
        Term::Idle | Term::Zero | Term::Var { .. } => t.clone(),
        Term::Sum(a, b) => Term::sum(
            wrap_occurrences(a, name, params, template),
            wrap_occurrences(b, name, params, template),
        ),
        Term::In { sym, binder, conts } => Term::In {
            sym: sym.clone(),
            binder: binder.clone(),
            conts: conts.iter().map(|c| wrap_occurrences(c, name, params, template)).collect(),
        },
        Term::Out { sym, arg, conts } => Term::Out {
            sym: sym.clone(),
            arg: arg.clone(),
            conts: conts.iter().map(|c| wrap_occurrences(c, name, params, template)).collect(),
        },
        Term::Par { graph, comps } => Term::Par {
            graph: graph.clone(),
            comps: comps
                .iter()
                .map(|(p, c)| (*p, wrap_occurrences(c, name, params, template)))
                .collect(),
        },
        Term::Restrict { body, syms } => Term::Restrict {
            body: alloc::boxed::Box::new(wrap_occurrences(body, name, params, template)),
            syms: syms.clone(),
        },
        Term::Cond { guard, then_br, else_br } => Term::cond(
            guard.clone(),
            wrap_occurrences(then_br, name, params, template),
            wrap_occurrences(else_br, name, params, template),
        ),
    }
}

/// Unfold a recursive canonical guarded sum to a canonical guarded sum.
/// Locations introduced by each unfolding are freshened from `alloc` in
/// sorted order, so the result is deterministic.
pub fn cs_with(t: &Term, alloc: &mut LocAlloc, limit: usize) -> Result<Term, CanonError> {
    match t {
        Term::Rec { name, params, args, body } => {
            if limit == 0 {
                return Err(CanonError::UnguardedRecursion);
            }
            if params.len() != args.len() {
                return Err(CanonError::VarArgs {
                    name: name.clone(),
                    expected: params.len(),
                    got: args.len(),
                });
            }
            let wrapped = wrap_occurrences(body, name, params, body);
            let subst: BTreeMap<String, Expr> =
                params.iter().cloned().zip(args.iter().cloned()).collect();
            let applied = wrapped.subst_data_map(&subst);
            let mut locs = BTreeSet::new();
            applied.active_locs(&mut locs);
            let map: BTreeMap<Loc, Loc> = locs.iter().map(|&l| (l, alloc.fresh())).collect();
            let freshened = relabel_active(&applied, &map);
            cs_with(&freshened, alloc, limit - 1)
        }
        other => Ok(other.clone()),
    }
}

/// Unfold with a self-derived allocation base and the default limit.
pub fn cs(t: &Term) -> Result<Term, CanonError> {
    let mut alloc = LocAlloc::new(t.max_loc() + 1);
    cs_with(t, &mut alloc, UNFOLD_LIMIT)
}

/// One enabled summand of an unfolded guarded sum, with conditionals already
/// resolved through guard evaluation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Summand {
    In { sym: Symbol, binder: String, conts: Vec<Term> },
    Out { sym: Symbol, arg: Expr, conts: Vec<Term> },
}

impl Summand {
    pub fn sym(&self) -> &Symbol {
        match self {
            Summand::In { sym, .. } | Summand::Out { sym, .. } => sym,
        }
    }
}

/// Enumerate the enabled summands of a canonical guarded sum, descending
/// through conditionals by evaluating their (closed) guards. `*` and `0`
/// contribute nothing.
pub fn enabled_summands(cgs: &Term) -> Result<Vec<Summand>, CanonError> {
    let mut out = Vec::new();
    collect_summands(cgs, &mut out)?;
    Ok(out)
}

fn collect_summands(t: &Term, out: &mut Vec<Summand>) -> Result<(), CanonError> {
    match t {
        Term::Idle | Term::Zero => Ok(()),
        Term::Sum(a, b) => {
            collect_summands(a, out)?;
            collect_summands(b, out)
        }
        Term::Cond { guard, then_br, else_br } => {
            let v = guard.eval(&Env::new()).map_err(CanonError::OpenGuard)?;
            collect_summands(if v { then_br } else { else_br }, out)
        }
        Term::In { sym, binder, conts } => {
            out.push(Summand::In {
                sym: sym.clone(),
                binder: binder.clone(),
                conts: conts.clone(),
            });
            Ok(())
        }
        Term::Out { sym, arg, conts } => {
            out.push(Summand::Out { sym: sym.clone(), arg: arg.clone(), conts: conts.clone() });
            Ok(())
        }
        other => Err(CanonError::NotCanonical(format!("unexpected summand shape `{other}`"))),
    }
}

/// Validate a located process for execution: canonical components, no nested
/// restriction, closed data, no free process variables, consistent symbol
/// arities, consistent recursion-variable argument counts, and globally
/// distinct active locations.
pub fn validate_executable(p: &Process) -> Result<(), CanonError> {
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen: BTreeSet<Loc> = BTreeSet::new();
    for q in p.graph.verts() {
        if !seen.insert(*q) {
            return Err(CanonError::DuplicateLoc(*q));
        }
    }
    for (q, t) in p.comps.iter() {
        let c = classify(t);
        if !c.is_component() {
            return Err(CanonError::NotCanonical(format!(
                "component at {q} is {c}, expected a (recursive) guarded sum"
            )));
        }
        let fv = t.fv();
        if !fv.is_empty() {
            return Err(CanonError::OpenTerm(fv));
        }
        if let Some(x) = t.free_proc_vars().into_iter().next() {
            return Err(CanonError::FreeProcVar(x));
        }
        check_term(t, &mut arities, &mut seen, &BTreeMap::new())?;
    }
    Ok(())
}

fn check_term(
    t: &Term,
    arities: &mut BTreeMap<String, usize>,
    active: &mut BTreeSet<Loc>,
    rec_params: &BTreeMap<String, usize>,
) -> Result<(), CanonError> {
    match t {
        Term::Idle | Term::Zero => Ok(()),
        Term::Var { name, args } => {
            if let Some(&expected) = rec_params.get(name) {
                if args.len() != expected {
                    return Err(CanonError::VarArgs {
                        name: name.clone(),
                        expected,
                        got: args.len(),
                    });
                }
            }
            Ok(())
        }
        Term::Rec { name, params, args, body } => {
            if params.len() != args.len() {
                return Err(CanonError::VarArgs {
                    name: name.clone(),
                    expected: params.len(),
                    got: args.len(),
                });
            }
            let mut inner = rec_params.clone();
            inner.insert(name.clone(), params.len());
            // recursion bodies are templates: locations there only need to be
            // internally distinct, they are freshened at unfold
            let mut template_locs = BTreeSet::new();
            check_term(body, arities, &mut template_locs, &inner)
        }
        Term::Sum(a, b) => {
            check_term(a, arities, active, rec_params)?;
            check_term(b, arities, active, rec_params)
        }
        Term::In { sym, conts, .. } | Term::Out { sym, conts, .. } => {
            match arities.get(&sym.name) {
                Some(&n) if n != sym.arity => {
                    return Err(CanonError::ArityMismatch {
                        name: sym.name.clone(),
                        seen: sym.arity,
                        prior: n,
                    })
                }
                Some(_) => {}
                None => {
                    arities.insert(sym.name.clone(), sym.arity);
                }
            }
            for c in conts {
                check_term(c, arities, active, rec_params)?;
            }
            Ok(())
        }
        Term::Par { graph, comps } => {
            for q in graph.verts() {
                if !active.insert(*q) {
                    return Err(CanonError::DuplicateLoc(*q));
                }
            }
            for c in comps.values() {
                check_term(c, arities, active, rec_params)?;
            }
            Ok(())
        }
        Term::Restrict { .. } => Err(CanonError::RestrictionInside),
        Term::Cond { then_br, else_br, .. } => {
            check_term(then_br, arities, active, rec_params)?;
            check_term(else_br, arities, active, rec_params)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::expr::BExpr;
    use crate::graph::Graph;

    fn gs() -> Term {
        Term::sum(Term::input("f", "z", vec![Term::Idle]), Term::Zero)
    }

    #[test]
    fn classify_basics() {
        assert_eq!(classify(&Term::Zero), Canonicity::Cgs);
        assert_eq!(classify(&Term::Idle), Canonicity::Cgs);
        assert_eq!(classify(&Term::var("X")), Canonicity::Cp);
        assert_eq!(classify(&Term::rec("X", gs())), Canonicity::Rcgs);
        // unguarded sum of two graph compositions is not canonical
        let par = Term::Par {
            graph: Graph::singleton(0),
            comps: BTreeMap::from([(0, Term::Zero)]),
        };
        assert_eq!(classify(&Term::sum(par.clone(), par)), Canonicity::NotCanonical);
        // mu X. X is not canonical
        assert_eq!(classify(&Term::rec("X", Term::var("X"))), Canonicity::NotCanonical);
    }

    #[test]
    fn cs_fixes_guarded_sums() {
        let t = gs();
        assert_eq!(cs(&t).unwrap(), t);
    }

    #[test]
    fn cs_unfolds_nested_mu() {
        // mu X. mu Y. (f(z).(*) + 0) unfolds to f(z).(*) + 0 in two steps
        let t = Term::rec("X", Term::rec("Y", gs()));
        assert_eq!(cs(&t).unwrap(), gs());
    }

    #[test]
    fn cs_state_cell_unfolding() {
        // mu X(z = 0). (write(y).(X(y)) + ~read(z).(X(z)))
        let body = Term::sum(
            Term::input("write", "y", vec![Term::var_app("X", vec![Expr::var("y")])]),
            Term::Out {
                sym: Symbol::co("read", 1),
                arg: Expr::var("z"),
                conts: vec![Term::var_app("X", vec![Expr::var("z")])],
            },
        );
        let cell = Term::rec_app("X", vec!["z".into()], vec![Expr::Val(0)], body.clone());
        let unfolded = cs(&cell).unwrap();
        // shape: write(y).(X(y) re-applied) + ~read(0).(X(0) re-applied)
        if let Term::Sum(a, b) = &unfolded {
            if let Term::In { conts, .. } = &**a {
                match &conts[0] {
                    Term::Rec { args, .. } => assert_eq!(args[0], Expr::var("y")),
                    other => panic!("expected re-applied recursion, got {other}"),
                }
            } else {
                panic!("expected input summand");
            }
            if let Term::Out { arg, conts, .. } = &**b {
                assert_eq!(*arg, Expr::Val(0));
                match &conts[0] {
                    Term::Rec { args, .. } => assert_eq!(args[0], Expr::Val(0)),
                    other => panic!("expected re-applied recursion, got {other}"),
                }
            } else {
                panic!("expected output summand");
            }
        } else {
            panic!("expected a sum");
        }
    }

    #[test]
    fn cs_trips_on_unguarded() {
        // classify rejects mu X. X, but cs must also guard against it
        let t = Term::Rec {
            name: "X".into(),
            params: vec![],
            args: vec![],
            body: alloc::boxed::Box::new(Term::Rec {
                name: "Y".into(),
                params: vec![],
                args: vec![],
                body: alloc::boxed::Box::new(Term::var("Y")),
            }),
        };
        assert_eq!(cs(&t), Err(CanonError::UnguardedRecursion));
    }

    #[test]
    fn summands_descend_conditionals() {
        let t = Term::cond(
            BExpr::Eq(Expr::Val(1), Expr::Val(1)),
            Term::sum(Term::input("f", "x", vec![Term::Zero]), Term::Zero),
            Term::input("g", "x", vec![Term::Zero]),
        );
        let ss = enabled_summands(&t).unwrap();
        assert_eq!(ss.len(), 1);
        assert_eq!(ss[0].sym().name, "f");
    }

    #[test]
    fn validate_rejects_nested_restriction() {
        let t = Term::input("f", "x", vec![Term::restrict(Term::Idle, ["g"])]);
        let p = Process::singleton(0, t);
        assert_eq!(validate_executable(&p), Err(CanonError::RestrictionInside));
    }

    #[test]
    fn validate_rejects_arity_clash() {
        let t = Term::sum(
            Term::input("f", "x", vec![Term::Idle]),
            Term::Out {
                sym: Symbol::co("f", 2),
                arg: Expr::Val(0),
                conts: vec![Term::Idle, Term::Zero],
            },
        );
        let p = Process::singleton(0, t);
        assert!(matches!(validate_executable(&p), Err(CanonError::ArityMismatch { .. })));
    }
}
