//! Parametric role templates and protocol specifications.
//!
//! A role template is a trace of signed patterns over typed parameters, with
//! a set of parameters that must uniquely originate (freshness) and optional
//! subterm side conditions. Admission predicates restrict which parameter
//! instantiations of a role are allowed into the strand space.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::pattern::{instantiate, Bindings, Pattern, VarKind};
use crate::strand::{Strand, StrandId};
use crate::term::{Key, Sign, SignedTerm, Term, TextAtom};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParamDecl {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignedPattern {
    pub sign: Sign,
    pub pattern: Pattern,
}

impl SignedPattern {
    pub fn plus(pattern: Pattern) -> SignedPattern {
        SignedPattern { sign: Sign::Positive, pattern }
    }

    pub fn minus(pattern: Pattern) -> SignedPattern {
        SignedPattern { sign: Sign::Negative, pattern }
    }
}

/// Subterm prohibitions on a parameter's value, checked whenever the
/// parameter becomes bound. These realize the side conditions needed when
/// nonce typing is relaxed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SideCondition {
    /// The value must not contain any shared symmetric key literal.
    NoSymKeySubterm { param: String },
    /// The value must not contain a cipher `{ N . $U }sk(U,U')` whose second
    /// payload component names one of the key's agents.
    NoSymCipherSubterm { param: String },
}

impl SideCondition {
    pub fn param(&self) -> &str {
        match self {
            SideCondition::NoSymKeySubterm { param } => param,
            SideCondition::NoSymCipherSubterm { param } => param,
        }
    }

    pub fn holds(&self, bindings: &Bindings) -> bool {
        let Some(value) = bindings.get(self.param()) else {
            return true; // unbound yet
        };
        let mut ok = true;
        match self {
            SideCondition::NoSymKeySubterm { .. } => {
                value.for_each_subterm(&mut |sub| {
                    if matches!(sub, Term::KeyLit(Key::SymShared(_, _))) {
                        ok = false;
                    }
                });
            }
            SideCondition::NoSymCipherSubterm { .. } => {
                value.for_each_subterm(&mut |sub| {
                    if let Term::Cipher(payload, Key::SymShared(a, b)) = sub {
                        if let Term::Pair(_, snd) = &**payload {
                            if let Term::Text(u) = &**snd {
                                if u == a || u == b {
                                    ok = false;
                                }
                            }
                        }
                    }
                });
            }
        }
        ok
    }
}

/// Per-role admission predicate over parameter instantiations.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Admission {
    All,
    /// Reject instantiations whose shared key `sk(param_a, param_b)` equals
    /// the distinguished `sk(agent_a, agent_b)` — the composition guard.
    ExcludeSharedKey {
        param_a: String,
        param_b: String,
        agent_a: TextAtom,
        agent_b: TextAtom,
    },
}

impl Admission {
    /// Partially-bound instantiations are admitted provisionally; the check
    /// is re-run as bindings grow.
    pub fn admits(&self, bindings: &Bindings) -> bool {
        match self {
            Admission::All => true,
            Admission::ExcludeSharedKey { param_a, param_b, agent_a, agent_b } => {
                let (Some(Term::Text(a)), Some(Term::Text(b))) =
                    (bindings.get(param_a), bindings.get(param_b))
                else {
                    return true;
                };
                Key::sym(a.clone(), b.clone()) != Key::sym(agent_a.clone(), agent_b.clone())
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("role '{role}': trace variable '{var}' is not a declared parameter")]
    UndeclaredVariable { role: String, var: String },
    #[error("role '{role}': fresh parameter '{param}' is not declared")]
    UnknownFresh { role: String, param: String },
    #[error("role '{role}': fresh parameter '{param}' first occurs in a receive")]
    FreshFirstNegative { role: String, param: String },
    #[error("role '{role}': empty trace")]
    EmptyTrace { role: String },
    #[error("duplicate role name '{0}'")]
    DuplicateRole(String),
}

/// A parametric role: named, typed parameters, a trace of signed patterns,
/// fresh parameters, and side conditions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RoleTemplate {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub trace: Vec<SignedPattern>,
    pub fresh: BTreeSet<String>,
    pub side_conditions: Vec<SideCondition>,
}

impl RoleTemplate {
    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.trace.is_empty() {
            return Err(TemplateError::EmptyTrace { role: self.name.clone() });
        }
        let declared: BTreeSet<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        for sp in &self.trace {
            let mut bad = None;
            sp.pattern.for_each_var(&mut |v| {
                if !declared.contains(v) && bad.is_none() {
                    bad = Some(v.to_string());
                }
            });
            if let Some(var) = bad {
                return Err(TemplateError::UndeclaredVariable { role: self.name.clone(), var });
            }
        }
        for f in &self.fresh {
            if !declared.contains(f.as_str()) {
                return Err(TemplateError::UnknownFresh {
                    role: self.name.clone(),
                    param: f.clone(),
                });
            }
            match self.first_occurrence(f) {
                Some(i) if self.trace[i].sign == Sign::Positive => {}
                _ => {
                    return Err(TemplateError::FreshFirstNegative {
                        role: self.name.clone(),
                        param: f.clone(),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn param_kind(&self, name: &str) -> Option<VarKind> {
        self.params.iter().find(|p| p.name == name).map(|p| p.kind)
    }

    /// Index of the first trace node mentioning the parameter.
    pub fn first_occurrence(&self, param: &str) -> Option<usize> {
        self.trace.iter().position(|sp| {
            let mut found = false;
            sp.pattern.for_each_var(&mut |v| {
                if v == param {
                    found = true;
                }
            });
            found
        })
    }

    /// Parameters that must be chosen up front because they first occur in a
    /// send: agent parameters enumerate the universe, fresh parameters draw
    /// fresh values. Everything else binds on receive.
    pub fn pre_bound_params(&self) -> Vec<&ParamDecl> {
        self.params
            .iter()
            .filter(|p| {
                if self.fresh.contains(&p.name) {
                    return false; // handled at emission time
                }
                match self.first_occurrence(&p.name) {
                    Some(i) => self.trace[i].sign == Sign::Positive,
                    None => false,
                }
            })
            .collect()
    }

    pub fn side_conditions_hold(&self, bindings: &Bindings) -> bool {
        self.side_conditions.iter().all(|sc| sc.holds(bindings))
    }

    /// Ground strand for fully-bound parameters.
    pub fn instantiate_strand(
        &self,
        id: StrandId,
        bindings: &Bindings,
    ) -> Result<Strand, crate::pattern::UnboundVar> {
        let trace = self
            .trace
            .iter()
            .map(|sp| {
                instantiate(&sp.pattern, bindings).map(|t| SignedTerm { sign: sp.sign, term: t })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Strand::new(id, trace))
    }

    /// Every total instantiation of the parameters over the given finite
    /// universes (agents for agent params, nonces for nonce params, and both
    /// for term params; key params draw nothing here). Used by exhaustive
    /// template sweeps.
    pub fn enumerate_ground_instances(
        &self,
        agents: &BTreeSet<TextAtom>,
        nonces: &BTreeSet<TextAtom>,
    ) -> Vec<Bindings> {
        let mut all = vec![Bindings::new()];
        for p in &self.params {
            let candidates: Vec<Term> = match p.kind {
                VarKind::Agent => agents.iter().cloned().map(Term::Text).collect(),
                VarKind::Nonce => nonces.iter().cloned().map(Term::Text).collect(),
                VarKind::Term => agents
                    .iter()
                    .chain(nonces.iter())
                    .cloned()
                    .map(Term::Text)
                    .collect(),
                VarKind::Key => Vec::new(),
            };
            let mut next = Vec::with_capacity(all.len() * candidates.len().max(1));
            for env in &all {
                for c in &candidates {
                    let mut e = env.clone();
                    e.insert(p.name.clone(), c.clone());
                    next.push(e);
                }
            }
            all = next;
        }
        all.retain(|env| self.side_conditions_hold(env));
        all
    }
}

/// A protocol: a set of role templates plus per-role admission predicates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProtocolSpec {
    pub roles: Vec<RoleTemplate>,
    pub admissions: BTreeMap<String, Admission>,
}

impl ProtocolSpec {
    pub fn new(roles: Vec<RoleTemplate>) -> Result<ProtocolSpec, TemplateError> {
        let mut seen = BTreeSet::new();
        for r in &roles {
            r.validate()?;
            if !seen.insert(r.name.clone()) {
                return Err(TemplateError::DuplicateRole(r.name.clone()));
            }
        }
        Ok(ProtocolSpec { roles, admissions: BTreeMap::new() })
    }

    pub fn with_admission(mut self, role: &str, admission: Admission) -> ProtocolSpec {
        self.admissions.insert(role.to_string(), admission);
        self
    }

    pub fn role(&self, name: &str) -> Option<&RoleTemplate> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn admission(&self, role: &str) -> &Admission {
        self.admissions.get(role).unwrap_or(&Admission::All)
    }

    /// Union of the two protocols' roles; role names must stay unique.
    pub fn merged_with(&self, other: &ProtocolSpec) -> Result<ProtocolSpec, TemplateError> {
        let roles: Vec<RoleTemplate> =
            self.roles.iter().chain(other.roles.iter()).cloned().collect();
        let mut spec = ProtocolSpec::new(roles)?;
        for (k, v) in self.admissions.iter().chain(other.admissions.iter()) {
            spec.admissions.insert(k.clone(), v.clone());
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::KeyPattern;

    fn initiator() -> RoleTemplate {
        RoleTemplate {
            name: "initiator".into(),
            params: vec![
                ParamDecl { name: "A".into(), kind: VarKind::Agent },
                ParamDecl { name: "B".into(), kind: VarKind::Agent },
                ParamDecl { name: "Na".into(), kind: VarKind::Nonce },
            ],
            trace: vec![
                SignedPattern::plus(Pattern::concat([
                    Pattern::var("A", VarKind::Agent),
                    Pattern::var("B", VarKind::Agent),
                    Pattern::var("Na", VarKind::Nonce),
                ])),
                SignedPattern::minus(Pattern::cipher(
                    Pattern::pair(
                        Pattern::var("Na", VarKind::Nonce),
                        Pattern::var("A", VarKind::Agent),
                    ),
                    KeyPattern::Sym(
                        crate::pattern::AgentRef::Var("A".into()),
                        crate::pattern::AgentRef::Var("B".into()),
                    ),
                )),
            ],
            fresh: BTreeSet::from(["Na".to_string()]),
            side_conditions: vec![],
        }
    }

    #[test]
    fn validates_and_classifies_params() {
        let t = initiator();
        t.validate().unwrap();
        let pre: Vec<&str> = t.pre_bound_params().iter().map(|p| p.name.as_str()).collect();
        assert_eq!(pre, vec!["A", "B"]);
    }

    #[test]
    fn fresh_must_first_occur_positive() {
        let mut t = initiator();
        t.trace.swap(0, 1);
        // Now Na first occurs in a receive.
        assert!(matches!(
            t.validate(),
            Err(TemplateError::FreshFirstNegative { .. })
        ));
    }

    #[test]
    fn side_condition_filters() {
        let sc = SideCondition::NoSymKeySubterm { param: "Na".into() };
        let mut env = Bindings::new();
        env.insert("Na".into(), Term::key(Key::sym("A", "B")));
        assert!(!sc.holds(&env));
        env.insert("Na".into(), Term::text("Na"));
        assert!(sc.holds(&env));

        let sc = SideCondition::NoSymCipherSubterm { param: "Na".into() };
        let bad = Term::cipher(
            Term::pair(Term::text("n"), Term::text("U")),
            Key::sym("U", "V"),
        );
        env.insert("Na".into(), Term::pair(Term::text("x"), bad));
        assert!(!sc.holds(&env));
        // Cipher whose second component is not one of the key's agents is fine.
        let ok = Term::cipher(
            Term::pair(Term::text("n"), Term::text("W")),
            Key::sym("U", "V"),
        );
        env.insert("Na".into(), ok);
        assert!(sc.holds(&env));
    }

    #[test]
    fn admission_guard() {
        let adm = Admission::ExcludeSharedKey {
            param_a: "A".into(),
            param_b: "B".into(),
            agent_a: TextAtom::new("A"),
            agent_b: TextAtom::new("B"),
        };
        let mut env = Bindings::new();
        env.insert("A".into(), Term::text("B"));
        assert!(adm.admits(&env)); // partially bound
        env.insert("B".into(), Term::text("A"));
        assert!(!adm.admits(&env)); // sk(B,A) == sk(A,B)
        env.insert("B".into(), Term::text("C"));
        assert!(adm.admits(&env));
    }
}
