//! Bounded exhaustive execution of a protocol against a penetrator model,
//! property checking, and bundle-certificate reconstruction.
//!
//! The engine explores states (honest-role program counters and bindings plus
//! the penetrator's derivable-message core) breadth-first with canonical move
//! ordering, so verdicts and the first witness are reproducible and witnesses
//! have minimal event traces. Every message an honest node consumes is
//! derivable from the knowledge closure; found attacks are materialized back
//! into validated bundles whose non-honest strands are penetrator strand
//! forms.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::pattern::{
    instantiate, unify_all, unify_key_into, Bindings, MatchMode, Pattern, VarKind,
};
use crate::penetrator::{ClosureRules, DYModel, Knowledge, MaximalModel, Provenance};
use crate::role::{ProtocolSpec, RoleTemplate, TemplateError};
use crate::strand::{Bundle, NodeRef, Strand, StrandId};
use crate::term::{Key, Sign, SignedTerm, Term, TextAtom};

/// The attacker the search runs against.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PenetratorSpec {
    Dy(DYModel),
    /// The maximal penetrator, operationalized as a relaxation of the
    /// Dolev-Yao closure: decrypt anything, forge under any key except the
    /// protected one (unless `constraints_enabled` is false, which drops the
    /// restrictions entirely — the flip case).
    Maximal {
        model: MaximalModel,
        base: DYModel,
        constraints_enabled: bool,
    },
}

impl PenetratorSpec {
    pub fn dy_model(&self) -> &DYModel {
        match self {
            PenetratorSpec::Dy(m) => m,
            PenetratorSpec::Maximal { base, .. } => base,
        }
    }

    pub fn closure_rules(&self) -> ClosureRules {
        match self {
            PenetratorSpec::Dy(_) => ClosureRules::Dy,
            PenetratorSpec::Maximal { model, constraints_enabled, .. } => ClosureRules::Maximal {
                protected: model.protected_key(),
                constraints_enabled: *constraints_enabled,
            },
        }
    }

    pub fn is_dy(&self) -> bool {
        matches!(self, PenetratorSpec::Dy(_))
    }
}

/// Search bounds and assumption toggles.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SearchConfig {
    /// Sessions per role name.
    pub sessions: BTreeMap<String, usize>,
    pub agent_universe: BTreeSet<TextAtom>,
    pub nonce_universe: BTreeSet<TextAtom>,
    /// Keys the penetrator may name when forging (maximal model enumeration).
    pub key_universe: BTreeSet<Key>,
    pub synth_depth: usize,
    /// Depth cap for enumerating candidate bindings of unconstrained term
    /// variables (untyped nonces, message payloads).
    pub binding_depth: usize,
    pub typed_mode: bool,
    pub enforce_unique_origination: bool,
    /// (role, param) pairs whose declared freshness is disabled: they draw
    /// from the nonce universe instead of generating fresh atoms.
    pub relaxed_fresh: BTreeSet<(String, String)>,
    /// Extra candidate values for enforced-fresh params; executions where the
    /// chosen value fails unique origination are discarded.
    pub fresh_collision_atoms: BTreeSet<TextAtom>,
    /// Use the dual injective-agreement formulation (exactly one agreeing
    /// partner) instead of the standard injective matching.
    pub injective_agreement_orig: bool,
    pub penetrator: PenetratorSpec,
    pub max_states: u64,
    pub workers: usize,
}

impl SearchConfig {
    pub fn mode(&self) -> MatchMode {
        if self.typed_mode {
            MatchMode::Typed
        } else {
            MatchMode::Untyped
        }
    }

    fn fresh_enforced(&self, role: &str, param: &str) -> bool {
        self.enforce_unique_origination
            && !self.relaxed_fresh.contains(&(role.to_string(), param.to_string()))
    }
}

/// Guarded property to check. `where_bindings` pins claimant parameters to
/// the distinguished honest values; `distinct` lists parameter pairs the
/// claim assumes different.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PropertySpec {
    pub name: String,
    pub kind: PropertyKind,
    pub where_bindings: Bindings,
    pub distinct: Vec<(String, String)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PropertyKind {
    NonInjectiveAgreement { claimant: String, partner: String, agreed: Vec<String> },
    InjectiveAgreement { claimant: String, partner: String, agreed: Vec<String> },
    Injectivity { role: String, fresh_param: String },
    Secrecy { role: String, secret: Pattern },
}

impl PropertySpec {
    pub fn claimant_role(&self) -> &str {
        match &self.kind {
            PropertyKind::NonInjectiveAgreement { claimant, .. } => claimant,
            PropertyKind::InjectiveAgreement { claimant, .. } => claimant,
            PropertyKind::Injectivity { role, .. } => role,
            PropertyKind::Secrecy { role, .. } => role,
        }
    }

    fn guards_hold(&self, bindings: &Bindings) -> bool {
        for (param, want) in &self.where_bindings {
            match bindings.get(param) {
                Some(v) if v == want => {}
                _ => return false,
            }
        }
        for (x, y) in &self.distinct {
            if let (Some(vx), Some(vy)) = (bindings.get(x), bindings.get(y)) {
                if vx == vy {
                    return false;
                }
            }
        }
        true
    }

    pub fn validate(&self, spec: &ProtocolSpec) -> Result<(), SearchError> {
        let check_role = |role: &str| -> Result<(), SearchError> {
            spec.role(role)
                .map(|_| ())
                .ok_or_else(|| SearchError::UnknownRole(role.to_string()))
        };
        match &self.kind {
            PropertyKind::NonInjectiveAgreement { claimant, partner, agreed }
            | PropertyKind::InjectiveAgreement { claimant, partner, agreed } => {
                check_role(claimant)?;
                check_role(partner)?;
                let c = spec.role(claimant).unwrap();
                let p = spec.role(partner).unwrap();
                for a in agreed {
                    if c.param_kind(a).is_none() || p.param_kind(a).is_none() {
                        return Err(SearchError::UnknownParam(a.clone()));
                    }
                }
                Ok(())
            }
            PropertyKind::Injectivity { role, fresh_param } => {
                check_role(role)?;
                if spec.role(role).unwrap().param_kind(fresh_param).is_none() {
                    return Err(SearchError::UnknownParam(fresh_param.clone()));
                }
                Ok(())
            }
            PropertyKind::Secrecy { role, .. } => check_role(role),
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("state budget exceeded after exploring {states_explored} states")]
    BudgetExceeded { states_explored: u64 },
    #[error("unknown role '{0}' in property")]
    UnknownRole(String),
    #[error("unknown parameter '{0}' in property")]
    UnknownParam(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// One executed honest event.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Event {
    pub session: usize,
    pub node: usize,
    pub signed: SignedTerm,
}

/// A finished or partial run: the honest event trace plus session views.
#[derive(Clone, Debug)]
pub struct Execution {
    pub events: Vec<Event>,
    pub sessions: Vec<SessionView>,
}

#[derive(Clone, Debug)]
pub struct SessionView {
    pub role: String,
    pub bindings: Bindings,
    pub steps: usize,
    pub trace_len: usize,
}

impl SessionView {
    pub fn completed(&self) -> bool {
        self.steps == self.trace_len
    }
}

/// Search outcome.
#[derive(Clone, Debug)]
pub enum Verdict {
    NoAttackWithinBounds {
        states_explored: u64,
    },
    Attack {
        witness: Bundle,
        bindings: Bindings,
        violated: PropertySpec,
        execution: Execution,
        states_explored: u64,
    },
}

impl Verdict {
    pub fn is_attack(&self) -> bool {
        matches!(self, Verdict::Attack { .. })
    }

    pub fn states_explored(&self) -> u64 {
        match self {
            Verdict::NoAttackWithinBounds { states_explored } => *states_explored,
            Verdict::Attack { states_explored, .. } => *states_explored,
        }
    }

    /// The wire form: `{result, states_explored, witness?, bindings?}`.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Wire {
            result: &'static str,
            states_explored: u64,
            #[serde(skip_serializing_if = "Option::is_none")]
            property: Option<String>,
            #[serde(skip_serializing_if = "Option::is_none")]
            witness: Option<serde_json::Value>,
            #[serde(skip_serializing_if = "Option::is_none")]
            bindings: Option<BTreeMap<String, String>>,
        }
        let wire = match self {
            Verdict::NoAttackWithinBounds { states_explored } => Wire {
                result: "no-attack-within-bounds",
                states_explored: *states_explored,
                property: None,
                witness: None,
                bindings: None,
            },
            Verdict::Attack { witness, bindings, violated, states_explored, .. } => Wire {
                result: "attack",
                states_explored: *states_explored,
                property: Some(violated.name.clone()),
                witness: Some(
                    serde_json::from_str(&witness.to_json()).expect("bundle json"),
                ),
                bindings: Some(
                    bindings.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
                ),
            },
        };
        serde_json::to_value(wire).expect("verdict json")
    }
}

// --- Engine state -----------------------------------------------------------

#[derive(Clone, Debug)]
struct Session {
    role: usize,
    bindings: Bindings,
    pc: usize,
    executed: Vec<SignedTerm>,
}

#[derive(Clone, Debug)]
struct State {
    sessions: Vec<Session>,
    knowledge: Knowledge,
    fresh_counter: u32,
    events: Vec<Event>,
    /// Values of enforced-fresh params, with their honest origination count.
    fresh_values: BTreeMap<Term, u8>,
}

impl State {
    /// Canonical dedup key; excludes the event history (two interleavings
    /// reaching the same configuration are equivalent).
    fn key(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for sess in &self.sessions {
            let _ = write!(s, "{}@{}[", sess.role, sess.pc);
            for (k, v) in &sess.bindings {
                let _ = write!(s, "{}={};", k, v);
            }
            s.push(']');
        }
        s.push('|');
        for t in self.knowledge.core() {
            let _ = write!(s, "{};", t);
        }
        let _ = write!(s, "|{}", self.fresh_counter);
        s
    }

    fn time(&self) -> u32 {
        self.events.len() as u32
    }

    fn view(&self, spec: &ProtocolSpec) -> Execution {
        Execution {
            events: self.events.clone(),
            sessions: self
                .sessions
                .iter()
                .map(|s| SessionView {
                    role: spec.roles[s.role].name.clone(),
                    bindings: s.bindings.clone(),
                    steps: s.pc,
                    trace_len: spec.roles[s.role].trace.len(),
                })
                .collect(),
        }
    }
}

// --- Candidate enumeration ---------------------------------------------------

/// Keys the penetrator can encrypt with right now: key literals in the core,
/// plus (for the maximal model with constraints on) every universe key except
/// the protected one, or every universe key when constraints are dropped.
fn usable_cipher_keys(kn: &Knowledge, cfg: &SearchConfig) -> Vec<Key> {
    let mut keys: BTreeSet<Key> = kn
        .core()
        .filter_map(|t| match t {
            Term::KeyLit(k) => Some(k.clone()),
            _ => None,
        })
        .collect();
    if let PenetratorSpec::Maximal { model, constraints_enabled, .. } = &cfg.penetrator {
        let protected = model.protected_key();
        for k in &cfg.key_universe {
            if !*constraints_enabled || *k != protected {
                keys.insert(k.clone());
            }
        }
    }
    keys.into_iter().collect()
}

/// All derivable terms up to `depth` (core terms of any depth, synthesized
/// terms up to the cap). Only used to enumerate bindings for unconstrained
/// variables; the cap keeps it finite.
fn enumerate_derivable(kn: &Knowledge, cfg: &SearchConfig, depth: usize) -> Vec<Term> {
    let mut all: BTreeSet<Term> = kn.core().cloned().collect();
    let keys = usable_cipher_keys(kn, cfg);
    loop {
        let mut added = Vec::new();
        let snapshot: Vec<Term> = all.iter().cloned().collect();
        for l in &snapshot {
            for r in &snapshot {
                let t = Term::pair(l.clone(), r.clone());
                if t.depth() <= depth && !all.contains(&t) {
                    added.push(t);
                }
            }
        }
        for p in &snapshot {
            for k in &keys {
                let t = Term::cipher(p.clone(), k.clone());
                if t.depth() <= depth && !all.contains(&t) {
                    added.push(t);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        all.extend(added);
    }
    all.into_iter().collect()
}

/// Extensions of `env` binding all variables of `p` to values such that the
/// instantiated pattern is derivable from current knowledge. Candidates come
/// from unifying against core terms and from structural synthesis within the
/// depth bound.
fn enumerate_matches(
    p: &Pattern,
    env: &Bindings,
    kn: &Knowledge,
    cfg: &SearchConfig,
) -> Vec<Bindings> {
    let mode = cfg.mode();
    let mut out: BTreeSet<Bindings> = BTreeSet::new();
    for t in kn.core() {
        for e in unify_all(p, t, env, mode) {
            out.insert(e);
        }
    }
    match p {
        Pattern::Var(name, kind) => match env.get(name) {
            Some(value) => {
                if kn.derivable(value, cfg.synth_depth) {
                    out.insert(env.clone());
                }
            }
            None => {
                // Atom-typed variables are fully covered by the core pass
                // (atoms cannot be synthesized). Unconstrained variables also
                // range over synthesized terms up to the binding depth.
                let unconstrained = *kind == VarKind::Term
                    || (*kind == VarKind::Nonce && mode == MatchMode::Untyped);
                if unconstrained {
                    for t in enumerate_derivable(kn, cfg, cfg.binding_depth.min(cfg.synth_depth)) {
                        for e in unify_all(p, &t, env, mode) {
                            out.insert(e);
                        }
                    }
                }
            }
        },
        Pattern::Pair(pl, pr) => {
            for e1 in enumerate_matches(pl, env, kn, cfg) {
                for e2 in enumerate_matches(pr, &e1, kn, cfg) {
                    if let Ok(t) = instantiate(p, &e2) {
                        if t.depth() <= cfg.synth_depth || kn.contains(&t) {
                            out.insert(e2);
                        }
                    }
                }
            }
        }
        Pattern::Cipher(pp, kp) => {
            for k in usable_cipher_keys(kn, cfg) {
                for ek in unify_key_into(kp, &k, env) {
                    for e2 in enumerate_matches(pp, &ek, kn, cfg) {
                        if let Ok(t) = instantiate(p, &e2) {
                            if t.depth() <= cfg.synth_depth || kn.contains(&t) {
                                out.insert(e2);
                            }
                        }
                    }
                }
            }
        }
        Pattern::Text(a) => {
            if kn.contains(&Term::Text(a.clone())) {
                out.insert(env.clone());
            }
        }
        Pattern::KeyLit(_) => {} // covered by the core pass
    }
    out.into_iter().collect()
}

// --- Freshness accounting ----------------------------------------------------

/// Honest origination count of `value` across the executed strand prefixes.
fn count_originations(sessions: &[Session], value: &Term) -> u8 {
    let mut count = 0u8;
    for sess in sessions {
        for (i, node) in sess.executed.iter().enumerate() {
            if node.is_positive()
                && crate::term::subterm(value, node.unsigned())
                && !sess.executed[..i]
                    .iter()
                    .any(|prev| crate::term::subterm(value, prev.unsigned()))
            {
                count = count.saturating_add(1);
                break; // at most one origination point per strand
            }
        }
    }
    count
}

/// Text atoms the canonical derivation of `t` at `time` utters out of thin
/// air. An execution step consuming a term whose derivation must utter an
/// enforced-fresh value is invalid.
fn derivation_uttered_atoms(
    kn: &Knowledge,
    cfg: &SearchConfig,
    t: &Term,
    time: u32,
    out: &mut BTreeSet<TextAtom>,
) {
    if kn.contains_at(t, time) {
        match kn.provenance_at(t, time) {
            Some(Provenance::Emitted { .. }) | Some(Provenance::EmitKey) | None => {}
            Some(Provenance::EmitText) => {
                if let Term::Text(a) = t {
                    out.insert(a.clone());
                }
            }
            Some(Provenance::SeparatedL { parent }) | Some(Provenance::SeparatedR { parent }) => {
                let parent = parent.clone();
                derivation_uttered_atoms(kn, cfg, &parent, time, out);
            }
            Some(Provenance::Decrypted { cipher, with_key }) => {
                let (cipher, with_key) = (cipher.clone(), with_key.clone());
                derivation_uttered_atoms(kn, cfg, &cipher, time, out);
                if let Some(k) = with_key {
                    derivation_uttered_atoms(kn, cfg, &Term::KeyLit(k), time, out);
                }
            }
        }
        return;
    }
    match t {
        Term::Pair(l, r) => {
            derivation_uttered_atoms(kn, cfg, l, time, out);
            derivation_uttered_atoms(kn, cfg, r, time, out);
        }
        Term::Cipher(p, k) => {
            derivation_uttered_atoms(kn, cfg, p, time, out);
            if kn.contains_at(&Term::KeyLit(k.clone()), time) {
                derivation_uttered_atoms(kn, cfg, &Term::KeyLit(k.clone()), time, out);
            }
        }
        _ => {}
    }
}

// --- Exploration -------------------------------------------------------------

struct Engine<'a> {
    spec: &'a ProtocolSpec,
    cfg: &'a SearchConfig,
    properties: &'a [PropertySpec],
}

struct Found {
    execution: Execution,
    bindings: Bindings,
    violated: PropertySpec,
}

impl<'a> Engine<'a> {
    /// Root states: one session block per role with all pre-bound parameter
    /// assignments enumerated (same-role assignment tuples are taken
    /// non-decreasing, since identical fresh sessions are interchangeable).
    fn root_states(&self) -> Vec<State> {
        // Enumerate per-role session assignment tuples, then take the product
        // across roles.
        let mut role_tuples: Vec<(usize, Vec<Vec<Bindings>>)> = Vec::new();
        for (ridx, role) in self.spec.roles.iter().enumerate() {
            let n = self.cfg.sessions.get(&role.name).copied().unwrap_or(0);
            if n == 0 {
                continue;
            }
            let mut assignments = vec![Bindings::new()];
            for p in role.pre_bound_params() {
                let candidates: Vec<Term> = match p.kind {
                    VarKind::Agent => {
                        self.cfg.agent_universe.iter().cloned().map(Term::Text).collect()
                    }
                    VarKind::Nonce => {
                        self.cfg.nonce_universe.iter().cloned().map(Term::Text).collect()
                    }
                    _ => Vec::new(),
                };
                let mut next = Vec::new();
                for env in &assignments {
                    for c in &candidates {
                        let mut e = env.clone();
                        e.insert(p.name.clone(), c.clone());
                        next.push(e);
                    }
                }
                assignments = next;
            }
            assignments.retain(|env| {
                self.spec.admission(&role.name).admits(env) && role.side_conditions_hold(env)
            });
            assignments.sort();
            let mut tuples: Vec<Vec<Bindings>> = vec![Vec::new()];
            for _ in 0..n {
                let mut next = Vec::new();
                for t in &tuples {
                    for a in &assignments {
                        if t.last().map(|last| last <= a).unwrap_or(true) {
                            let mut t2 = t.clone();
                            t2.push(a.clone());
                            next.push(t2);
                        }
                    }
                }
                tuples = next;
            }
            role_tuples.push((ridx, tuples));
        }

        let base_knowledge = Knowledge::seeded(
            self.cfg.penetrator.dy_model(),
            self.cfg.penetrator.closure_rules(),
        );
        let mut roots: Vec<State> = vec![State {
            sessions: Vec::new(),
            knowledge: base_knowledge,
            fresh_counter: 0,
            events: Vec::new(),
            fresh_values: BTreeMap::new(),
        }];
        for (ridx, tuples) in &role_tuples {
            let mut next = Vec::new();
            for root in &roots {
                for tuple in tuples {
                    let mut r = root.clone();
                    for bindings in tuple {
                        r.sessions.push(Session {
                            role: *ridx,
                            bindings: bindings.clone(),
                            pc: 0,
                            executed: Vec::new(),
                        });
                    }
                    next.push(r);
                }
            }
            roots = next;
        }
        roots
    }

    /// Candidate values for a fresh parameter at emission time.
    fn fresh_candidates(&self, state: &State, role: &str, param: &str) -> Vec<(Term, bool)> {
        // (value, enforced)
        let mut out = Vec::new();
        if self.cfg.fresh_enforced(role, param) {
            let atom = TextAtom::new(format!("{}*{}", param, state.fresh_counter + 1));
            out.push((Term::Text(atom), true));
            for a in &self.cfg.fresh_collision_atoms {
                out.push((Term::Text(a.clone()), true));
            }
        } else {
            for a in &self.cfg.nonce_universe {
                out.push((Term::Text(a.clone()), false));
            }
        }
        out
    }

    /// Fresh device keys for key-typed fresh params (key management roles).
    fn fresh_key_candidates(&self, state: &State) -> Vec<Term> {
        vec![Term::KeyLit(Key::Device(state.fresh_counter + 1))]
    }

    fn successors(&self, state: &State) -> Vec<State> {
        let mut out = Vec::new();
        for sidx in 0..state.sessions.len() {
            let sess = &state.sessions[sidx];
            let role = &self.spec.roles[sess.role];
            if sess.pc >= role.trace.len() {
                continue;
            }
            let sp = &role.trace[sess.pc];
            match sp.sign {
                Sign::Positive => self.send_successors(state, sidx, &mut out),
                Sign::Negative => self.recv_successors(state, sidx, &mut out),
            }
        }
        out
    }

    fn send_successors(&self, state: &State, sidx: usize, out: &mut Vec<State>) {
        let sess = &state.sessions[sidx];
        let role = &self.spec.roles[sess.role];
        let sp = &role.trace[sess.pc];

        // Unbound fresh params used by this node draw their values now.
        let mut needed: Vec<String> = Vec::new();
        sp.pattern.for_each_var(&mut |v| {
            if role.fresh.contains(v)
                && !sess.bindings.contains_key(v)
                && !needed.iter().any(|n| n == v)
            {
                needed.push(v.to_string());
            }
        });

        let mut options: Vec<(Bindings, u32, Vec<Term>)> =
            vec![(sess.bindings.clone(), state.fresh_counter, Vec::new())];
        for param in &needed {
            let kind = role.param_kind(param).unwrap_or(VarKind::Nonce);
            let mut next = Vec::new();
            for (env, counter, enforced_vals) in &options {
                let candidates: Vec<(Term, bool, u32)> = if kind == VarKind::Key {
                    self.fresh_key_candidates(state)
                        .into_iter()
                        .map(|t| (t, true, counter + 1))
                        .collect()
                } else {
                    self.fresh_candidates(state, &role.name, param)
                        .into_iter()
                        .map(|(t, enf)| {
                            let bump = if matches!(&t, Term::Text(a) if a.name().contains('*')) {
                                counter + 1
                            } else {
                                *counter
                            };
                            (t, enf, bump)
                        })
                        .collect()
                };
                for (value, enforced, new_counter) in candidates {
                    let mut e = env.clone();
                    e.insert(param.clone(), value.clone());
                    let mut ev = enforced_vals.clone();
                    if enforced {
                        ev.push(value);
                    }
                    next.push((e, new_counter, ev));
                }
            }
            options = next;
        }

        for (bindings, counter, enforced_vals) in options {
            if !role.side_conditions_hold(&bindings)
                || !self.spec.admission(&role.name).admits(&bindings)
            {
                continue;
            }
            let Ok(term) = instantiate(&sp.pattern, &bindings) else {
                continue; // a parameter the role never learned; cannot fire
            };
            let mut next = state.clone();
            let time = next.time();
            {
                let s = &mut next.sessions[sidx];
                s.bindings = bindings;
                s.pc += 1;
                s.executed.push(SignedTerm::plus(term.clone()));
            }
            next.fresh_counter = counter;
            for v in enforced_vals {
                next.fresh_values.entry(v).or_insert(0);
            }
            next.events.push(Event {
                session: sidx,
                node: state.sessions[sidx].pc,
                signed: SignedTerm::plus(term.clone()),
            });
            next.knowledge.add(
                term,
                time + 1,
                Provenance::Emitted { session: sidx, node: state.sessions[sidx].pc },
            );
            // Unique-origination accounting over the executed prefixes.
            let ok = next
                .fresh_values
                .keys()
                .cloned()
                .collect::<Vec<_>>()
                .into_iter()
                .all(|v| {
                    let c = count_originations(&next.sessions, &v);
                    next.fresh_values.insert(v, c);
                    c <= 1
                });
            if ok {
                out.push(next);
            }
        }
    }

    fn recv_successors(&self, state: &State, sidx: usize, out: &mut Vec<State>) {
        let sess = &state.sessions[sidx];
        let role = &self.spec.roles[sess.role];
        let sp = &role.trace[sess.pc];
        let time = state.time();
        for env in enumerate_matches(&sp.pattern, &sess.bindings, &state.knowledge, self.cfg) {
            if !role.side_conditions_hold(&env) || !self.spec.admission(&role.name).admits(&env) {
                continue;
            }
            let Ok(term) = instantiate(&sp.pattern, &env) else {
                continue;
            };
            // The penetrator must be able to deliver this without uttering an
            // enforced-fresh value out of thin air.
            if !state.fresh_values.is_empty() {
                let mut uttered = BTreeSet::new();
                derivation_uttered_atoms(&state.knowledge, self.cfg, &term, time, &mut uttered);
                let clash = uttered
                    .iter()
                    .any(|a| state.fresh_values.contains_key(&Term::Text(a.clone())));
                if clash {
                    continue;
                }
            }
            let mut next = state.clone();
            {
                let s = &mut next.sessions[sidx];
                s.bindings = env;
                s.pc += 1;
                s.executed.push(SignedTerm::minus(term.clone()));
            }
            next.events.push(Event {
                session: sidx,
                node: state.sessions[sidx].pc,
                signed: SignedTerm::minus(term),
            });
            out.push(next);
        }
    }

    fn violated(&self, state: &State) -> Option<Found> {
        for prop in self.properties {
            if let Some(bindings) = self.check_state(state, prop) {
                return Some(Found {
                    execution: state.view(self.spec),
                    bindings,
                    violated: prop.clone(),
                });
            }
        }
        None
    }

    fn completed_sessions<'s>(
        &'s self,
        state: &'s State,
        role: &'s str,
    ) -> impl Iterator<Item = &'s Session> + 's {
        state.sessions.iter().filter(move |s| {
            self.spec.roles[s.role].name == role && s.pc == self.spec.roles[s.role].trace.len()
        })
    }

    fn check_state(&self, state: &State, prop: &PropertySpec) -> Option<Bindings> {
        match &prop.kind {
            PropertyKind::NonInjectiveAgreement { claimant, partner, agreed } => {
                for c in self.completed_sessions(state, claimant) {
                    if !prop.guards_hold(&c.bindings) {
                        continue;
                    }
                    let theta: Vec<Option<&Term>> =
                        agreed.iter().map(|p| c.bindings.get(p)).collect();
                    let matched = self.completed_sessions(state, partner).any(|p| {
                        agreed
                            .iter()
                            .zip(&theta)
                            .all(|(name, want)| p.bindings.get(name) == *want)
                    });
                    if !matched {
                        return Some(c.bindings.clone());
                    }
                }
                None
            }
            PropertyKind::InjectiveAgreement { claimant, partner, agreed } => {
                // Group completed, guarded claimants by their agreed values.
                let mut groups: BTreeMap<Vec<Option<Term>>, (usize, Bindings)> = BTreeMap::new();
                for c in self.completed_sessions(state, claimant) {
                    if !prop.guards_hold(&c.bindings) {
                        continue;
                    }
                    let theta: Vec<Option<Term>> =
                        agreed.iter().map(|p| c.bindings.get(p).cloned()).collect();
                    let entry = groups.entry(theta).or_insert((0, c.bindings.clone()));
                    entry.0 += 1;
                }
                for (theta, (claimants, example)) in groups {
                    let partners = self
                        .completed_sessions(state, partner)
                        .filter(|p| {
                            agreed
                                .iter()
                                .zip(&theta)
                                .all(|(name, want)| p.bindings.get(name) == want.as_ref())
                        })
                        .count();
                    let bad = if self.cfg.injective_agreement_orig {
                        partners != 1
                    } else {
                        claimants > partners
                    };
                    if bad {
                        return Some(example);
                    }
                }
                None
            }
            PropertyKind::Injectivity { role, fresh_param } => {
                let completed: Vec<&Session> = self
                    .completed_sessions(state, role)
                    .filter(|s| prop.guards_hold(&s.bindings))
                    .collect();
                for (i, a) in completed.iter().enumerate() {
                    for b in completed.iter().skip(i + 1) {
                        let (va, vb) = (a.bindings.get(fresh_param), b.bindings.get(fresh_param));
                        if va.is_some() && va == vb {
                            return Some(a.bindings.clone());
                        }
                    }
                }
                None
            }
            PropertyKind::Secrecy { role, secret } => {
                for c in self.completed_sessions(state, role) {
                    if !prop.guards_hold(&c.bindings) {
                        continue;
                    }
                    let Ok(value) = instantiate(secret, &c.bindings) else {
                        continue;
                    };
                    if state.knowledge.derivable(&value, self.cfg.synth_depth) {
                        return Some(c.bindings.clone());
                    }
                }
                None
            }
        }
    }

    /// Breadth-first exploration of one root. Returns the first violation in
    /// canonical order, or the number of states explored.
    fn explore_root(&self, root: State, budget: &mut u64) -> Result<Option<Found>, SearchError> {
        let mut visited: HashSet<String> = HashSet::new();
        let mut queue: VecDeque<State> = VecDeque::new();
        queue.push_back(root);
        while let Some(state) = queue.pop_front() {
            if !visited.insert(state.key()) {
                continue;
            }
            if *budget == 0 {
                return Err(SearchError::BudgetExceeded {
                    states_explored: self.cfg.max_states,
                });
            }
            *budget -= 1;
            if let Some(found) = self.violated(&state) {
                return Ok(Some(found));
            }
            for succ in self.successors(&state) {
                queue.push_back(succ);
            }
        }
        Ok(None)
    }
}

/// Exhaustively enumerate the reachable executions at the configured bounds.
/// Every reachable state is one execution (each event prefix is itself a run).
pub fn enumerate_executions(
    spec: &ProtocolSpec,
    cfg: &SearchConfig,
) -> Result<Vec<Execution>, SearchError> {
    let engine = Engine { spec, cfg, properties: &[] };
    let mut budget = cfg.max_states;
    let mut all = Vec::new();
    for root in engine.root_states() {
        let mut visited: HashSet<String> = HashSet::new();
        let mut queue: VecDeque<State> = VecDeque::new();
        queue.push_back(root);
        while let Some(state) = queue.pop_front() {
            if !visited.insert(state.key()) {
                continue;
            }
            if budget == 0 {
                return Err(SearchError::BudgetExceeded { states_explored: cfg.max_states });
            }
            budget -= 1;
            all.push(state.view(spec));
            for succ in engine.successors(&state) {
                queue.push_back(succ);
            }
        }
    }
    Ok(all)
}

/// Run a property check against the protocol at the configured bounds.
pub fn check_property(
    spec: &ProtocolSpec,
    prop: &PropertySpec,
    cfg: &SearchConfig,
) -> Result<Verdict, SearchError> {
    check_properties(spec, std::slice::from_ref(prop), cfg)
}

/// Check several properties in one sweep; the first violation in canonical
/// order wins.
pub fn check_properties(
    spec: &ProtocolSpec,
    properties: &[PropertySpec],
    cfg: &SearchConfig,
) -> Result<Verdict, SearchError> {
    for p in properties {
        p.validate(spec)?;
    }
    let engine = Engine { spec, cfg, properties };
    let roots = engine.root_states();
    let workers = cfg.workers.max(1);

    let indexed: Vec<(usize, State)> = roots.into_iter().enumerate().collect();
    let total_roots = indexed.len();

    let outcome: Result<(Option<(usize, Found)>, u64), SearchError> = if workers <= 1 {
        let mut budget = cfg.max_states;
        let mut best: Option<(usize, Found)> = None;
        for (idx, root) in indexed {
            if let Some(found) = engine.explore_root(root, &mut budget)? {
                best = Some((idx, found));
                break;
            }
        }
        Ok((best, cfg.max_states - budget))
    } else {
        let shards: Vec<Vec<(usize, State)>> = {
            let count = workers.min(total_roots.max(1));
            let mut shards = vec![Vec::new(); count];
            for (i, item) in indexed.into_iter().enumerate() {
                shards[i % count].push(item);
            }
            shards
        };
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for shard in shards {
                let engine_ref = &engine;
                handles.push(scope.spawn(move || -> Result<(Option<(usize, Found)>, u64), SearchError> {
                    let mut budget = cfg.max_states;
                    let mut best: Option<(usize, Found)> = None;
                    for (idx, root) in shard {
                        if let Some(found) = engine_ref.explore_root(root, &mut budget)? {
                            best = Some((idx, found));
                            break;
                        }
                    }
                    Ok((best, cfg.max_states - budget))
                }));
            }
            let mut best: Option<(usize, Found)> = None;
            let mut explored = 0u64;
            for h in handles {
                let (cand, states) = h.join().expect("worker panicked")?;
                explored += states;
                if let Some((idx, found)) = cand {
                    let replace = match &best {
                        Some((bidx, _)) => idx < *bidx,
                        None => true,
                    };
                    if replace {
                        best = Some((idx, found));
                    }
                }
            }
            Ok((best, explored))
        })
    };

    let (best, states_explored) = outcome?;
    match best {
        Some((_, found)) => {
            let witness = reconstruct_bundle(spec, cfg, &found.execution);
            Ok(Verdict::Attack {
                witness,
                bindings: found.bindings,
                violated: found.violated,
                execution: found.execution,
                states_explored,
            })
        }
        None => Ok(Verdict::NoAttackWithinBounds { states_explored }),
    }
}

// --- Witness reconstruction ---------------------------------------------------

#[derive(Clone, Debug)]
enum Deriv {
    Core(Term, u32),
    Cat(Box<Deriv>, Box<Deriv>, Term),
    EncWithKey(Box<Deriv>, Key, Term),
    EncForged(Box<Deriv>, Key, Term),
}

/// Materialize an execution into a validated bundle: honest strands appear
/// verbatim; the penetrator's derivations become Dolev-Yao strand forms
/// (Separation, Decryption, Concatenation, Encryption, text/key emission),
/// duplicated consumption goes through Tee strands, and every unconsumed
/// send is absorbed by a Flushing strand.
pub fn reconstruct_bundle(spec: &ProtocolSpec, cfg: &SearchConfig, exec: &Execution) -> Bundle {
    Reconstructor::new(spec, cfg, exec).build()
}

struct Reconstructor<'a> {
    cfg: &'a SearchConfig,
    exec: &'a Execution,
    knowledge: Knowledge,
    /// session index -> bundle strand id (only sessions with events).
    session_strand: BTreeMap<usize, StrandId>,
    next_id: StrandId,
    strands: Vec<Strand>,
    edges: BTreeSet<(NodeRef, NodeRef)>,
    /// Available copies of produced terms, FIFO per term.
    pool: BTreeMap<Term, VecDeque<NodeRef>>,
    /// Demand per honest (session, node) output, from the counting pass.
    honest_demand: BTreeMap<(usize, usize), usize>,
    /// Shared separation strands per parent term, with per-side use counts.
    sep_uses: BTreeMap<Term, (usize, usize)>,
    sep_built: BTreeMap<Term, ()>,
    /// Shared decryption strands per cipher term, with use counts.
    dec_uses: BTreeMap<Term, usize>,
    dec_built: BTreeMap<Term, ()>,
}

impl<'a> Reconstructor<'a> {
    fn new(spec: &'a ProtocolSpec, cfg: &'a SearchConfig, exec: &'a Execution) -> Self {
        let _ = spec;
        let knowledge = Knowledge::seeded(cfg.penetrator.dy_model(), cfg.penetrator.closure_rules());
        Reconstructor {
            cfg,
            exec,
            knowledge,
            session_strand: BTreeMap::new(),
            next_id: 0,
            strands: Vec::new(),
            edges: BTreeSet::new(),
            pool: BTreeMap::new(),
            honest_demand: BTreeMap::new(),
            sep_uses: BTreeMap::new(),
            sep_built: BTreeMap::new(),
            dec_uses: BTreeMap::new(),
            dec_built: BTreeMap::new(),
        }
    }

    fn build(mut self) -> Bundle {
        // Honest strands from executed prefixes, ids in session order.
        let mut traces: BTreeMap<usize, Vec<SignedTerm>> = BTreeMap::new();
        for ev in &self.exec.events {
            traces.entry(ev.session).or_default().push(ev.signed.clone());
        }
        for (session, trace) in &traces {
            let id = self.next_id;
            self.next_id += 1;
            self.session_strand.insert(*session, id);
            self.strands.push(Strand::new(id, trace.clone()));
        }

        // Replay knowledge and compute every receive's derivation.
        let mut derivs: Vec<(usize, Deriv)> = Vec::new(); // (event index, derivation)
        let mut node_of_event: Vec<(usize, usize)> = Vec::new(); // (session, node)
        for (e, ev) in self.exec.events.iter().enumerate() {
            node_of_event.push((ev.session, ev.node));
            match ev.signed.sign {
                Sign::Positive => {
                    self.knowledge.add(
                        ev.signed.term.clone(),
                        e as u32 + 1,
                        Provenance::Emitted { session: ev.session, node: ev.node },
                    );
                }
                Sign::Negative => {
                    let d = self.derive(&ev.signed.term, e as u32);
                    derivs.push((e, d));
                }
            }
        }

        // Counting pass: demand on honest outputs and shared strands.
        for (e, d) in &derivs {
            let _ = e;
            self.count(d);
        }

        // Pre-build Tee chains for multiply-consumed honest outputs and pool
        // single copies.
        let demands: Vec<((usize, usize), usize)> =
            self.honest_demand.iter().map(|(k, v)| (*k, *v)).collect();
        let mut seen_nodes: BTreeSet<(usize, usize)> = BTreeSet::new();
        for ev in &self.exec.events {
            if ev.signed.sign == Sign::Positive {
                seen_nodes.insert((ev.session, ev.node));
            }
        }
        for (session, node) in seen_nodes {
            let demand = demands
                .iter()
                .find(|((s, n), _)| *s == session && *n == node)
                .map(|(_, d)| *d)
                .unwrap_or(0);
            let strand_id = self.session_strand[&session];
            let src = NodeRef::new(strand_id, node);
            let term = self.strands[strand_id as usize].trace[node].term.clone();
            self.pool_copies(term, src, demand.max(1));
        }

        // Build pass: penetrator strands per receive, in event order.
        for (e, d) in derivs {
            let (session, node) = node_of_event[e];
            let consumer = NodeRef::new(self.session_strand[&session], node);
            let copy = self.build_deriv(&d);
            self.edges.insert((copy, consumer));
        }

        // Leftover copies are absorbed by Flushing strands.
        let leftovers: Vec<(Term, NodeRef)> = self
            .pool
            .iter()
            .flat_map(|(t, q)| q.iter().map(move |n| (t.clone(), *n)))
            .collect();
        for (term, src) in leftovers {
            let id = self.fresh_strand(vec![SignedTerm::minus(term)]);
            self.edges.insert((src, NodeRef::new(id, 0)));
        }
        self.pool.clear();

        Bundle::new(self.strands, BTreeMap::new(), self.edges)
            .expect("reconstructed bundle must validate")
    }

    fn fresh_strand(&mut self, trace: Vec<SignedTerm>) -> StrandId {
        let id = self.next_id;
        self.next_id += 1;
        self.strands.push(Strand::new(id, trace));
        id
    }

    /// Put `n` copies of the node's output into the pool, inserting a Tee
    /// chain when n > 1.
    fn pool_copies(&mut self, term: Term, src: NodeRef, n: usize) {
        if n <= 1 {
            self.pool.entry(term).or_default().push_back(src);
            return;
        }
        let mut current = src;
        let mut leaves = Vec::new();
        for _ in 1..n {
            let tee = self.fresh_strand(vec![
                SignedTerm::minus(term.clone()),
                SignedTerm::plus(term.clone()),
                SignedTerm::plus(term.clone()),
            ]);
            self.edges.insert((current, NodeRef::new(tee, 0)));
            leaves.push(NodeRef::new(tee, 1));
            current = NodeRef::new(tee, 2);
        }
        leaves.push(current);
        let q = self.pool.entry(term).or_default();
        for l in leaves {
            q.push_back(l);
        }
    }

    fn derive(&self, t: &Term, time: u32) -> Deriv {
        if self.knowledge.contains_at(t, time) {
            return Deriv::Core(t.clone(), time);
        }
        match t {
            Term::Pair(l, r) => Deriv::Cat(
                Box::new(self.derive(l, time)),
                Box::new(self.derive(r, time)),
                t.clone(),
            ),
            Term::Cipher(p, k) => {
                if self.knowledge.contains_at(&Term::KeyLit(k.clone()), time) {
                    Deriv::EncWithKey(Box::new(self.derive(p, time)), k.clone(), t.clone())
                } else {
                    Deriv::EncForged(Box::new(self.derive(p, time)), k.clone(), t.clone())
                }
            }
            _ => unreachable!("consumed term must be derivable: {}", t),
        }
    }

    fn count(&mut self, d: &Deriv) {
        match d {
            Deriv::Core(t, time) => self.count_core(t.clone(), *time),
            Deriv::Cat(l, r, _) => {
                self.count(l);
                self.count(r);
            }
            Deriv::EncWithKey(p, k, _) => {
                self.count(p);
                self.count_core(Term::KeyLit(k.clone()), u32::MAX);
            }
            Deriv::EncForged(p, _, _) => self.count(p),
        }
    }

    fn count_core(&mut self, t: Term, time: u32) {
        match self.knowledge.provenance_at(&t, time).cloned() {
            Some(Provenance::Emitted { session, node }) => {
                *self.honest_demand.entry((session, node)).or_insert(0) += 1;
            }
            Some(Provenance::EmitText) | Some(Provenance::EmitKey) | None => {}
            Some(Provenance::SeparatedL { parent }) => {
                let first = !self.sep_uses.contains_key(&parent);
                self.sep_uses.entry(parent.clone()).or_insert((0, 0)).0 += 1;
                if first {
                    self.count_core(parent, time);
                }
            }
            Some(Provenance::SeparatedR { parent }) => {
                let first = !self.sep_uses.contains_key(&parent);
                self.sep_uses.entry(parent.clone()).or_insert((0, 0)).1 += 1;
                if first {
                    self.count_core(parent, time);
                }
            }
            Some(Provenance::Decrypted { cipher, with_key }) => {
                let first = !self.dec_uses.contains_key(&cipher);
                *self.dec_uses.entry(cipher.clone()).or_insert(0) += 1;
                if first {
                    self.count_core(cipher, time);
                    if let Some(k) = with_key {
                        self.count_core(Term::KeyLit(k), time);
                    }
                }
            }
        }
    }

    fn build_deriv(&mut self, d: &Deriv) -> NodeRef {
        match d {
            Deriv::Core(t, time) => self.claim(t, *time),
            Deriv::Cat(l, r, t) => {
                let cl = self.build_deriv(l);
                let cr = self.build_deriv(r);
                let (gl, gr) = match t {
                    Term::Pair(a, b) => ((**a).clone(), (**b).clone()),
                    _ => unreachable!(),
                };
                let id = self.fresh_strand(vec![
                    SignedTerm::minus(gl),
                    SignedTerm::minus(gr),
                    SignedTerm::plus(t.clone()),
                ]);
                self.edges.insert((cl, NodeRef::new(id, 0)));
                self.edges.insert((cr, NodeRef::new(id, 1)));
                NodeRef::new(id, 2)
            }
            Deriv::EncWithKey(p, k, t) => {
                let ck = self.claim(&Term::KeyLit(k.clone()), u32::MAX);
                let cp = self.build_deriv(p);
                let payload = match t {
                    Term::Cipher(pl, _) => (**pl).clone(),
                    _ => unreachable!(),
                };
                let id = self.fresh_strand(vec![
                    SignedTerm::minus(Term::KeyLit(k.clone())),
                    SignedTerm::minus(payload),
                    SignedTerm::plus(t.clone()),
                ]);
                self.edges.insert((ck, NodeRef::new(id, 0)));
                self.edges.insert((cp, NodeRef::new(id, 1)));
                NodeRef::new(id, 2)
            }
            Deriv::EncForged(p, _, t) => {
                let cp = self.build_deriv(p);
                let payload = match t {
                    Term::Cipher(pl, _) => (**pl).clone(),
                    _ => unreachable!(),
                };
                let id = self.fresh_strand(vec![
                    SignedTerm::minus(payload),
                    SignedTerm::plus(t.clone()),
                ]);
                self.edges.insert((cp, NodeRef::new(id, 0)));
                NodeRef::new(id, 2 - 1)
            }
        }
    }

    /// A copy of `t`: from the pool, or by materializing its source strand.
    fn claim(&mut self, t: &Term, time: u32) -> NodeRef {
        if let Some(q) = self.pool.get_mut(t) {
            if let Some(n) = q.pop_front() {
                return n;
            }
        }
        match self.knowledge.provenance_at(t, time).cloned() {
            Some(Provenance::EmitText) => {
                let id = self.fresh_strand(vec![SignedTerm::plus(t.clone())]);
                NodeRef::new(id, 0)
            }
            Some(Provenance::EmitKey) => {
                let id = self.fresh_strand(vec![SignedTerm::plus(t.clone())]);
                NodeRef::new(id, 0)
            }
            Some(Provenance::SeparatedL { parent }) | Some(Provenance::SeparatedR { parent }) => {
                self.build_separation(&parent, time);
                self.claim(t, time)
            }
            Some(Provenance::Decrypted { cipher, .. }) => {
                self.build_decryption(&cipher, time);
                self.claim(t, time)
            }
            Some(Provenance::Emitted { .. }) | None => {
                // The counting pass reserved a copy for every honest demand;
                // running dry means the passes disagree.
                unreachable!("no copy of {} available at reconstruction", t)
            }
        }
    }

    fn build_separation(&mut self, parent: &Term, time: u32) {
        if self.sep_built.contains_key(parent) {
            return;
        }
        self.sep_built.insert(parent.clone(), ());
        let (l_uses, r_uses) = self.sep_uses.get(parent).copied().unwrap_or((0, 0));
        let (l, r) = match parent {
            Term::Pair(a, b) => ((**a).clone(), (**b).clone()),
            _ => unreachable!("separation of a non-pair"),
        };
        let src = self.claim(parent, time);
        let id = self.fresh_strand(vec![
            SignedTerm::minus(parent.clone()),
            SignedTerm::plus(l.clone()),
            SignedTerm::plus(r.clone()),
        ]);
        self.edges.insert((src, NodeRef::new(id, 0)));
        self.pool_copies_from(l, NodeRef::new(id, 1), l_uses);
        self.pool_copies_from(r, NodeRef::new(id, 2), r_uses);
    }

    fn build_decryption(&mut self, cipher: &Term, time: u32) {
        if self.dec_built.contains_key(cipher) {
            return;
        }
        self.dec_built.insert(cipher.clone(), ());
        let uses = self.dec_uses.get(cipher).copied().unwrap_or(0);
        let (payload, key) = match cipher {
            Term::Cipher(p, k) => ((**p).clone(), k.clone()),
            _ => unreachable!("decryption of a non-cipher"),
        };
        let with_key = match self.knowledge.provenance_at(&payload, time) {
            Some(Provenance::Decrypted { with_key, .. }) => with_key.clone(),
            _ => Some(key.inverse()),
        };
        let src = self.claim(cipher, time);
        match with_key {
            Some(k) => {
                let ck = self.claim(&Term::KeyLit(k.clone()), time);
                let id = self.fresh_strand(vec![
                    SignedTerm::minus(Term::KeyLit(k)),
                    SignedTerm::minus(cipher.clone()),
                    SignedTerm::plus(payload.clone()),
                ]);
                self.edges.insert((ck, NodeRef::new(id, 0)));
                self.edges.insert((src, NodeRef::new(id, 1)));
                self.pool_copies_from(payload, NodeRef::new(id, 2), uses);
            }
            None => {
                let id = self.fresh_strand(vec![
                    SignedTerm::minus(cipher.clone()),
                    SignedTerm::plus(payload.clone()),
                ]);
                self.edges.insert((src, NodeRef::new(id, 0)));
                self.pool_copies_from(payload, NodeRef::new(id, 1), uses);
            }
        }
    }

    /// Pool `uses` copies of an output node (Tee chain when several); zero
    /// recorded uses still pools the single output so it can be flushed.
    fn pool_copies_from(&mut self, term: Term, src: NodeRef, uses: usize) {
        self.pool_copies(term, src, uses.max(1));
    }
}

// --- Composition --------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum CompositionVerdict {
    Pass { combined: ProtocolSpec, instances_checked: usize },
    Counterexample { role: String, bindings: Bindings },
}

impl CompositionVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, CompositionVerdict::Pass { .. })
    }
}

/// Compose two protocols under a maximal penetrator: every admitted role
/// instantiation of `absorbed` must itself be a maximal-penetrator strand,
/// in which case the combined strand space is equivalent to `kept`'s and its
/// verdicts carry over.
pub fn check_composition(
    kept: &ProtocolSpec,
    absorbed: &ProtocolSpec,
    model: &MaximalModel,
    agents: &BTreeSet<TextAtom>,
    nonces: &BTreeSet<TextAtom>,
) -> CompositionVerdict {
    let mut instances = 0;
    for role in &absorbed.roles {
        match crate::penetrator::role_subsumed_by_maximal(
            role,
            absorbed.admission(&role.name),
            model,
            agents,
            nonces,
        ) {
            crate::penetrator::SubsumptionVerdict::Pass { instances_checked } => {
                instances += instances_checked;
            }
            crate::penetrator::SubsumptionVerdict::Counterexample { bindings } => {
                return CompositionVerdict::Counterexample { role: role.name.clone(), bindings };
            }
        }
    }
    let combined = kept.merged_with(absorbed).expect("disjoint role names");
    CompositionVerdict::Pass { combined, instances_checked: instances }
}
