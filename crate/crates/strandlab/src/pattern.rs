//! Patterns over terms with typed variables, unification and instantiation.
//!
//! Role templates quantify their traces over parameters; patterns realize that
//! quantification. In typed mode agent and nonce variables bind only text
//! atoms; in untyped mode nonce variables may bind arbitrary terms (the
//! template's side conditions then do the filtering).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Key, Term, TextAtom};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum VarKind {
    Agent,
    Nonce,
    Term,
    Key,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKind::Agent => f.write_str("agent"),
            VarKind::Nonce => f.write_str("nonce"),
            VarKind::Term => f.write_str("term"),
            VarKind::Key => f.write_str("key"),
        }
    }
}

/// An agent position inside a key pattern: a literal atom or an agent variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AgentRef {
    Lit(TextAtom),
    Var(String),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum KeyPattern {
    Lit(Key),
    Sym(AgentRef, AgentRef),
    Public(AgentRef),
    Private(AgentRef),
    Var(String),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Pattern {
    Text(TextAtom),
    KeyLit(KeyPattern),
    Pair(Box<Pattern>, Box<Pattern>),
    Cipher(Box<Pattern>, KeyPattern),
    Var(String, VarKind),
}

pub type Bindings = BTreeMap<String, Term>;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum MatchMode {
    Typed,
    Untyped,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unbound variable '{0}' during instantiation")]
pub struct UnboundVar(pub String);

impl Pattern {
    pub fn var(name: impl Into<String>, kind: VarKind) -> Pattern {
        Pattern::Var(name.into(), kind)
    }

    pub fn pair(l: Pattern, r: Pattern) -> Pattern {
        Pattern::Pair(Box::new(l), Box::new(r))
    }

    /// Right-associated concatenation.
    pub fn concat<I: IntoIterator<Item = Pattern>>(items: I) -> Pattern
    where
        I::IntoIter: DoubleEndedIterator,
    {
        let mut iter = items.into_iter().rev();
        let last = iter.next().expect("concat of empty sequence");
        iter.fold(last, |acc, p| Pattern::pair(p, acc))
    }

    pub fn cipher(payload: Pattern, key: KeyPattern) -> Pattern {
        Pattern::Cipher(Box::new(payload), key)
    }

    /// Ground pattern from a term (no variables).
    pub fn from_term(t: &Term) -> Pattern {
        match t {
            Term::Text(a) => Pattern::Text(a.clone()),
            Term::KeyLit(k) => Pattern::KeyLit(KeyPattern::Lit(k.clone())),
            Term::Pair(l, r) => Pattern::pair(Pattern::from_term(l), Pattern::from_term(r)),
            Term::Cipher(p, k) => Pattern::cipher(Pattern::from_term(p), KeyPattern::Lit(k.clone())),
        }
    }

    pub fn for_each_var<F: FnMut(&str)>(&self, f: &mut F) {
        match self {
            Pattern::Text(_) => {}
            Pattern::KeyLit(k) => k.for_each_var(f),
            Pattern::Pair(l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
            Pattern::Cipher(p, k) => {
                p.for_each_var(f);
                k.for_each_var(f);
            }
            Pattern::Var(n, _) => f(n),
        }
    }

    /// Does the ground term `t` occur syntactically inside this pattern
    /// (payload positions only, like the subterm relation)?
    pub fn contains_ground(&self, t: &Term) -> bool {
        if let Ok(ground) = instantiate(self, &Bindings::new()) {
            return crate::term::subterm(t, &ground);
        }
        match self {
            Pattern::Pair(l, r) => l.contains_ground(t) || r.contains_ground(t),
            Pattern::Cipher(p, _) => p.contains_ground(t),
            _ => false,
        }
    }
}

impl KeyPattern {
    fn for_each_var<F: FnMut(&str)>(&self, f: &mut F) {
        match self {
            KeyPattern::Lit(_) => {}
            KeyPattern::Sym(a, b) => {
                if let AgentRef::Var(v) = a {
                    f(v);
                }
                if let AgentRef::Var(v) = b {
                    f(v);
                }
            }
            KeyPattern::Public(AgentRef::Var(v)) | KeyPattern::Private(AgentRef::Var(v)) => f(v),
            KeyPattern::Public(_) | KeyPattern::Private(_) => {}
            KeyPattern::Var(v) => f(v),
        }
    }
}

fn bind(env: &mut Bindings, name: &str, value: Term, kind: VarKind, mode: MatchMode) -> bool {
    let type_ok = match kind {
        VarKind::Agent => value.is_atom(),
        VarKind::Nonce => mode == MatchMode::Untyped || value.is_atom(),
        VarKind::Term => true,
        VarKind::Key => matches!(value, Term::KeyLit(_)),
    };
    if !type_ok {
        return false;
    }
    match env.get(name) {
        Some(existing) => *existing == value,
        None => {
            env.insert(name.to_string(), value);
            true
        }
    }
}

fn unify_agent(ar: &AgentRef, agent: &TextAtom, env: &mut Bindings) -> bool {
    match ar {
        AgentRef::Lit(a) => a == agent,
        AgentRef::Var(v) => bind(env, v, Term::Text(agent.clone()), VarKind::Agent, MatchMode::Typed),
    }
}

pub(crate) fn unify_key_into(kp: &KeyPattern, k: &Key, env: &Bindings) -> Vec<Bindings> {
    match kp {
        KeyPattern::Lit(lit) => {
            if lit == k {
                vec![env.clone()]
            } else {
                vec![]
            }
        }
        KeyPattern::Var(v) => {
            let mut e = env.clone();
            if bind(&mut e, v, Term::KeyLit(k.clone()), VarKind::Key, MatchMode::Typed) {
                vec![e]
            } else {
                vec![]
            }
        }
        KeyPattern::Public(ar) => match k {
            Key::Public(a) => {
                let mut e = env.clone();
                if unify_agent(ar, a, &mut e) {
                    vec![e]
                } else {
                    vec![]
                }
            }
            _ => vec![],
        },
        KeyPattern::Private(ar) => match k {
            Key::Private(a) => {
                let mut e = env.clone();
                if unify_agent(ar, a, &mut e) {
                    vec![e]
                } else {
                    vec![]
                }
            }
            _ => vec![],
        },
        KeyPattern::Sym(ar1, ar2) => match k {
            Key::SymShared(x, y) => {
                // The key pair is unordered, so both assignments are
                // candidate unifiers; collect each that succeeds.
                let mut out = Vec::new();
                for (p, q) in [(x, y), (y, x)] {
                    let mut e = env.clone();
                    if unify_agent(ar1, p, &mut e) && unify_agent(ar2, q, &mut e) {
                        if !out.contains(&e) {
                            out.push(e);
                        }
                    }
                }
                out
            }
            _ => vec![],
        },
    }
}

/// All minimal extensions of `env` making the pattern equal to `t`.
///
/// Multiple results arise only from unordered shared-key patterns whose agent
/// positions are distinct unbound variables. Results are in canonical order.
pub fn unify_all(p: &Pattern, t: &Term, env: &Bindings, mode: MatchMode) -> Vec<Bindings> {
    let mut out = match (p, t) {
        (Pattern::Var(name, kind), _) => {
            let mut e = env.clone();
            if bind(&mut e, name, t.clone(), *kind, mode) {
                vec![e]
            } else {
                vec![]
            }
        }
        (Pattern::Text(a), Term::Text(b)) if a == b => vec![env.clone()],
        (Pattern::KeyLit(kp), Term::KeyLit(k)) => unify_key_into(kp, k, env),
        (Pattern::Pair(pl, pr), Term::Pair(tl, tr)) => {
            let mut out = Vec::new();
            for e in unify_all(pl, tl, env, mode) {
                for e2 in unify_all(pr, tr, &e, mode) {
                    if !out.contains(&e2) {
                        out.push(e2);
                    }
                }
            }
            out
        }
        (Pattern::Cipher(pp, kp), Term::Cipher(tp, tk)) => {
            let mut out = Vec::new();
            for e in unify_key_into(kp, tk, env) {
                for e2 in unify_all(pp, tp, &e, mode) {
                    if !out.contains(&e2) {
                        out.push(e2);
                    }
                }
            }
            out
        }
        _ => vec![],
    };
    out.sort();
    out.dedup();
    out
}

/// The least extension of `env` making `p` equal to `t`, or `None`.
/// Deterministic: when several unifiers exist the canonically least is
/// returned.
pub fn unify(p: &Pattern, t: &Term, env: &Bindings, mode: MatchMode) -> Option<Bindings> {
    unify_all(p, t, env, mode).into_iter().next()
}

fn agent_value(ar: &AgentRef, env: &Bindings) -> Result<TextAtom, UnboundVar> {
    match ar {
        AgentRef::Lit(a) => Ok(a.clone()),
        AgentRef::Var(v) => match env.get(v) {
            Some(Term::Text(a)) => Ok(a.clone()),
            Some(_) => Err(UnboundVar(v.clone())),
            None => Err(UnboundVar(v.clone())),
        },
    }
}

pub fn instantiate_key(kp: &KeyPattern, env: &Bindings) -> Result<Key, UnboundVar> {
    match kp {
        KeyPattern::Lit(k) => Ok(k.clone()),
        KeyPattern::Sym(a, b) => {
            let (a, b) = (agent_value(a, env)?, agent_value(b, env)?);
            Ok(Key::sym(a, b))
        }
        KeyPattern::Public(a) => Ok(Key::Public(agent_value(a, env)?)),
        KeyPattern::Private(a) => Ok(Key::Private(agent_value(a, env)?)),
        KeyPattern::Var(v) => match env.get(v) {
            Some(Term::KeyLit(k)) => Ok(k.clone()),
            _ => Err(UnboundVar(v.clone())),
        },
    }
}

/// Ground the pattern under the bindings.
pub fn instantiate(p: &Pattern, env: &Bindings) -> Result<Term, UnboundVar> {
    match p {
        Pattern::Text(a) => Ok(Term::Text(a.clone())),
        Pattern::KeyLit(kp) => Ok(Term::KeyLit(instantiate_key(kp, env)?)),
        Pattern::Pair(l, r) => Ok(Term::pair(instantiate(l, env)?, instantiate(r, env)?)),
        Pattern::Cipher(payload, kp) => Ok(Term::cipher(
            instantiate(payload, env)?,
            instantiate_key(kp, env)?,
        )),
        Pattern::Var(name, _) => env.get(name).cloned().ok_or_else(|| UnboundVar(name.clone())),
    }
}

impl fmt::Display for AgentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentRef::Lit(a) => write!(f, "{}", a),
            AgentRef::Var(v) => write!(f, "{}", v),
        }
    }
}

impl fmt::Display for KeyPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyPattern::Lit(k) => write!(f, "{}", k),
            KeyPattern::Sym(a, b) => write!(f, "sk({},{})", a, b),
            KeyPattern::Public(a) => write!(f, "pk({})", a),
            KeyPattern::Private(a) => write!(f, "pk-1({})", a),
            KeyPattern::Var(v) => write!(f, "{}", v),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Text(a) => write!(f, "${}", a),
            Pattern::KeyLit(kp) => write!(f, "#{}", kp),
            Pattern::Pair(l, r) => match **l {
                Pattern::Pair(_, _) => write!(f, "({}) . {}", l, r),
                _ => write!(f, "{} . {}", l, r),
            },
            Pattern::Cipher(p, k) => write!(f, "{{ {} }}{}", p, k),
            Pattern::Var(n, _) => write!(f, "${}", n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    fn agent_var(n: &str) -> Pattern {
        Pattern::var(n, VarKind::Agent)
    }

    fn nonce_var(n: &str) -> Pattern {
        Pattern::var(n, VarKind::Nonce)
    }

    #[test]
    fn unifies_pair_of_typed_vars() {
        let p = Pattern::pair(agent_var("X"), nonce_var("N"));
        let t = Term::pair(Term::text("A"), Term::text("Na"));
        let env = unify(&p, &t, &Bindings::new(), MatchMode::Typed).unwrap();
        assert_eq!(env["X"], Term::text("A"));
        assert_eq!(env["N"], Term::text("Na"));
    }

    #[test]
    fn key_normalization_in_unification() {
        // sk(A,B) written either way unifies with the same key literal.
        let p = Pattern::cipher(
            nonce_var("N"),
            KeyPattern::Lit(Key::sym("A", "B")),
        );
        let t = Term::cipher(Term::text("Na"), Key::sym("B", "A"));
        let env = unify(&p, &t, &Bindings::new(), MatchMode::Typed).unwrap();
        assert_eq!(env.len(), 1);
        assert_eq!(env["N"], Term::text("Na"));
    }

    #[test]
    fn typed_mode_rejects_compound_nonce() {
        let p = nonce_var("N");
        let t = Term::pair(Term::text("A"), Term::text("B"));
        assert!(unify(&p, &t, &Bindings::new(), MatchMode::Typed).is_none());
        assert!(unify(&p, &t, &Bindings::new(), MatchMode::Untyped).is_some());
    }

    #[test]
    fn shared_key_pattern_yields_both_assignments() {
        let p = Pattern::KeyLit(KeyPattern::Sym(
            AgentRef::Var("X".into()),
            AgentRef::Var("Y".into()),
        ));
        let t = Term::KeyLit(Key::sym("A", "B"));
        let all = unify_all(&p, &t, &Bindings::new(), MatchMode::Typed);
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn existing_bindings_constrain() {
        let p = Pattern::pair(agent_var("X"), agent_var("X"));
        let ok = Term::pair(Term::text("A"), Term::text("A"));
        let bad = Term::pair(Term::text("A"), Term::text("B"));
        assert!(unify(&p, &ok, &Bindings::new(), MatchMode::Typed).is_some());
        assert!(unify(&p, &bad, &Bindings::new(), MatchMode::Typed).is_none());
    }

    proptest::proptest! {
        // unify success implies instantiate round-trips to the same term.
        #[test]
        fn unify_instantiate_round_trip(seed in 0u64..500) {
            let t = arbitrary_term(seed);
            let p = Pattern::from_term(&t);
            let env = unify(&p, &t, &Bindings::new(), MatchMode::Typed).unwrap();
            proptest::prop_assert_eq!(instantiate(&p, &env).unwrap(), t);
        }
    }

    // Small deterministic term generator used by the round-trip property.
    fn arbitrary_term(seed: u64) -> Term {
        fn go(state: &mut u64, depth: usize) -> Term {
            *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let atoms = ["A", "B", "Na", "Nb"];
            let choice = (*state >> 33) % if depth == 0 { 2 } else { 4 };
            match choice {
                0 => Term::text(atoms[(*state >> 20) as usize % atoms.len()]),
                1 => Term::key(Key::sym("A", "B")),
                2 => {
                    let l = go(state, depth - 1);
                    let r = go(state, depth - 1);
                    Term::pair(l, r)
                }
                _ => Term::cipher(go(state, depth - 1), Key::public("B")),
            }
        }
        let mut state = seed.wrapping_add(17);
        go(&mut state, 3)
    }
}
