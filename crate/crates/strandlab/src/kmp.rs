//! Key-management policies: the original and refined closure operations as
//! least fixpoints, reachable-type reporting, API strand templates, and
//! bounded soundness checking.
//!
//! A policy is a set of typed directives `K1 -enc-> K2` / `K1 -dec-> K2`
//! over key types, with a distinguished data type `D`. The closure computes
//! the implied relation and the reachable sets `R_K`; a type is secure when
//! `D` is unreachable from it. The device API (create/encrypt/decrypt/wrap/
//! unwrap over master-key handles) is emitted as role templates so the
//! closure's soundness can be checked by bounded search.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::pattern::{AgentRef, KeyPattern, Pattern, VarKind};
use crate::penetrator::KeyPredicate;
use crate::role::{ParamDecl, ProtocolSpec, RoleTemplate, SignedPattern};
use crate::search::{PenetratorSpec, SearchConfig, SearchError};
use crate::term::{Key, Term, TextAtom};

/// A key type; `D` (the data type) is distinguished by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct KeyType(pub String);

impl KeyType {
    pub fn new(name: impl Into<String>) -> KeyType {
        KeyType(name.into())
    }

    pub fn data() -> KeyType {
        KeyType("D".into())
    }

    pub fn is_data(&self) -> bool {
        self.0 == "D"
    }
}

impl std::fmt::Display for KeyType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum Op {
    Enc,
    Dec,
}

impl std::fmt::Display for Op {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Op::Enc => f.write_str("enc"),
            Op::Dec => f.write_str("dec"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("edge endpoint '{0}' is not a declared type")]
    UndeclaredType(String),
    #[error("policy line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Policy {
    pub types: BTreeSet<KeyType>,
    pub edges: BTreeSet<(KeyType, Op, KeyType)>,
}

impl Policy {
    pub fn new(
        types: BTreeSet<KeyType>,
        edges: BTreeSet<(KeyType, Op, KeyType)>,
    ) -> Result<Policy, PolicyError> {
        for (src, _, dst) in &edges {
            for t in [src, dst] {
                if !types.contains(t) {
                    return Err(PolicyError::UndeclaredType(t.0.clone()));
                }
            }
        }
        Ok(Policy { types, edges })
    }

    /// Text format: a `types:` line then one `Src -enc-> Dst` line per edge.
    pub fn parse(src: &str) -> Result<Policy, PolicyError> {
        let mut types = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix("types:") {
                for name in rest.split_whitespace() {
                    types.insert(KeyType::new(name));
                }
                continue;
            }
            let (op, sep) = if line.contains("-enc->") {
                (Op::Enc, "-enc->")
            } else if line.contains("-dec->") {
                (Op::Dec, "-dec->")
            } else {
                return Err(PolicyError::Parse {
                    line: lineno,
                    msg: format!("expected 'types:' or an edge, got '{}'", line),
                });
            };
            let mut parts = line.splitn(2, sep);
            let src_t = parts.next().unwrap_or("").trim();
            let dst_t = parts.next().unwrap_or("").trim();
            if src_t.is_empty() || dst_t.is_empty() {
                return Err(PolicyError::Parse {
                    line: lineno,
                    msg: "malformed edge".to_string(),
                });
            }
            edges.insert((KeyType::new(src_t), op, KeyType::new(dst_t)));
        }
        Policy::new(types, edges).map_err(|e| match e {
            PolicyError::UndeclaredType(t) => PolicyError::Parse {
                line: 0,
                msg: format!("edge endpoint '{}' is not declared in the types line", t),
            },
            other => other,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::from("types:");
        for t in &self.types {
            out.push(' ');
            out.push_str(&t.0);
        }
        out.push('\n');
        for (src, op, dst) in &self.edges {
            out.push_str(&format!("{} -{}-> {}\n", src, op, dst));
        }
        out
    }

    /// The secure-templates policy: a dedicated type for unwrapped keys.
    pub fn secure_templates() -> Policy {
        let k1 = KeyType::new("K1");
        let k2 = KeyType::new("K2");
        let k3 = KeyType::new("K3");
        let d = KeyType::data();
        Policy::new(
            BTreeSet::from([k1.clone(), k2.clone(), k3.clone(), d.clone()]),
            BTreeSet::from([
                (k1.clone(), Op::Enc, k1.clone()),
                (k1.clone(), Op::Enc, k2.clone()),
                (k1.clone(), Op::Dec, k2.clone()),
                (k1.clone(), Op::Enc, k3.clone()),
                (k2.clone(), Op::Enc, d.clone()),
                (k2.clone(), Op::Dec, k2.clone()),
                (k3.clone(), Op::Enc, d.clone()),
                (k3, Op::Dec, d),
            ]),
        )
        .unwrap()
    }
}

/// Which closure rule set to run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum ClosureKind {
    Original,
    /// Original plus the redundant decryption-propagation rule.
    OriginalWithItem5,
    Refined,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClosureResult {
    pub kind: ClosureKind,
    pub implied: BTreeSet<(KeyType, Op, KeyType)>,
    pub reach: BTreeMap<KeyType, BTreeSet<KeyType>>,
}

impl ClosureResult {
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Wire<'a> {
            kind: &'a ClosureKind,
            implied: Vec<(String, String, String)>,
            reach: BTreeMap<String, Vec<String>>,
            secure: Vec<String>,
        }
        serde_json::to_value(Wire {
            kind: &self.kind,
            implied: self
                .implied
                .iter()
                .map(|(s, o, d)| (s.to_string(), o.to_string(), d.to_string()))
                .collect(),
            reach: self
                .reach
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().map(|t| t.to_string()).collect()))
                .collect(),
            secure: secure_types(self).iter().map(|t| t.to_string()).collect(),
        })
        .expect("closure json")
    }
}

/// Least fixpoint of the selected rule set.
///
/// Common rules: policy edges lift to the implied relation; every type
/// reaches itself; `D` gets both operations on `D`; and
/// `K =enc=> J, K =dec=> Z` puts `Z` in `R_J`.
///
/// Original adds bidirectional encryption propagation (rules 6/7), with the
/// redundant rule 5 (`K -dec-> J, K in R_Z  =>  Z =dec=> J`) only under
/// `OriginalWithItem5`. Refined replaces them with reach-directed
/// propagation: `K =enc=> J, K in R_Z, J in R_W  =>  Z =enc=> W` and
/// `K =dec=> J, K in R_Z  =>  Z =dec=> J`.
pub fn closure(p: &Policy, kind: ClosureKind) -> ClosureResult {
    let mut implied: BTreeSet<(KeyType, Op, KeyType)> = p.edges.clone();
    let mut reach: BTreeMap<KeyType, BTreeSet<KeyType>> = BTreeMap::new();
    for t in &p.types {
        reach.entry(t.clone()).or_default().insert(t.clone());
    }
    let d = KeyType::data();
    if p.types.contains(&d) {
        implied.insert((d.clone(), Op::Enc, d.clone()));
        implied.insert((d.clone(), Op::Dec, d.clone()));
    }

    // reach[z] contains k  <=>  "K in R_Z".
    let reaches = |reach: &BTreeMap<KeyType, BTreeSet<KeyType>>, z: &KeyType, k: &KeyType| {
        reach.get(z).map(|s| s.contains(k)).unwrap_or(false)
    };

    loop {
        let mut new_implied: Vec<(KeyType, Op, KeyType)> = Vec::new();
        let mut new_reach: Vec<(KeyType, KeyType)> = Vec::new();

        // Rule 4: K =enc=> J and K =dec=> Z  =>  Z in R_J.
        for (k, op_e, j) in &implied {
            if *op_e != Op::Enc {
                continue;
            }
            for (k2, op_d, z) in &implied {
                if *op_d == Op::Dec && k2 == k && !reaches(&reach, j, z) {
                    new_reach.push((j.clone(), z.clone()));
                }
            }
        }

        match kind {
            ClosureKind::Original | ClosureKind::OriginalWithItem5 => {
                if kind == ClosureKind::OriginalWithItem5 {
                    // Rule 5 (redundant): K -dec-> J and K in R_Z  =>  Z =dec=> J.
                    for (k, op, j) in &p.edges {
                        if *op != Op::Dec {
                            continue;
                        }
                        for z in &p.types {
                            if reaches(&reach, z, k) {
                                let fact = (z.clone(), Op::Dec, j.clone());
                                if !implied.contains(&fact) {
                                    new_implied.push(fact);
                                }
                            }
                        }
                    }
                }
                // Rule 6: K =enc=> J and (K in R_Z or Z in R_K)  =>  Z =enc=> J.
                // Rule 7: J =enc=> K and (K in R_Z or Z in R_K)  =>  J =enc=> Z.
                for (a, op, b) in &implied {
                    if *op != Op::Enc {
                        continue;
                    }
                    for z in &p.types {
                        let related_to = |k: &KeyType| {
                            reaches(&reach, z, k) || reaches(&reach, k, z)
                        };
                        if related_to(a) {
                            // a is "K" of rule 6 (a =enc=> b).
                            let fact = (z.clone(), Op::Enc, b.clone());
                            if !implied.contains(&fact) {
                                new_implied.push(fact);
                            }
                        }
                        if related_to(b) {
                            // b is "K" of rule 7 (a =enc=> b).
                            let fact = (a.clone(), Op::Enc, z.clone());
                            if !implied.contains(&fact) {
                                new_implied.push(fact);
                            }
                        }
                    }
                }
            }
            ClosureKind::Refined => {
                // Rule 5b: K =enc=> J, K in R_Z, J in R_W  =>  Z =enc=> W.
                for (k, op, j) in &implied {
                    if *op != Op::Enc {
                        continue;
                    }
                    for z in &p.types {
                        if !reaches(&reach, z, k) {
                            continue;
                        }
                        for w in &p.types {
                            if reaches(&reach, w, j) {
                                let fact = (z.clone(), Op::Enc, w.clone());
                                if !implied.contains(&fact) {
                                    new_implied.push(fact);
                                }
                            }
                        }
                    }
                }
                // Rule 6b: K =dec=> J and K in R_Z  =>  Z =dec=> J.
                for (k, op, j) in &implied {
                    if *op != Op::Dec {
                        continue;
                    }
                    for z in &p.types {
                        if reaches(&reach, z, k) {
                            let fact = (z.clone(), Op::Dec, j.clone());
                            if !implied.contains(&fact) {
                                new_implied.push(fact);
                            }
                        }
                    }
                }
            }
        }

        let mut changed = false;
        for f in new_implied {
            changed |= implied.insert(f);
        }
        for (base, target) in new_reach {
            changed |= reach.entry(base).or_default().insert(target);
        }
        if !changed {
            break;
        }
    }

    ClosureResult { kind, implied, reach }
}

/// Types from which the data type is unreachable; keys created with these
/// types never appear in clear.
pub fn secure_types(c: &ClosureResult) -> BTreeSet<KeyType> {
    c.reach
        .iter()
        .filter(|(_, r)| !r.iter().any(|t| t.is_data()))
        .map(|(k, _)| k.clone())
        .collect()
}

fn type_atom(t: &KeyType) -> TextAtom {
    TextAtom::new(&t.0)
}

/// Handle pattern `{ k . T }master` with the key position variable.
fn handle_pattern(key_var: &str, ty: &KeyType) -> Pattern {
    Pattern::cipher(
        Pattern::pair(
            Pattern::var(key_var, VarKind::Key),
            Pattern::Text(type_atom(ty)),
        ),
        KeyPattern::Lit(Key::Master),
    )
}

/// The device API as role templates guarded by the policy edges:
/// one Create per declared type; Encrypt/Decrypt for `K -enc/dec-> D`;
/// Wrap for `K2 -enc-> K1`; Unwrap for `K2 -dec-> K1`.
pub fn api_strand_templates(p: &Policy) -> ProtocolSpec {
    let mut roles = Vec::new();
    for t in &p.types {
        roles.push(RoleTemplate {
            name: format!("create-{}", t.0.to_lowercase()),
            params: vec![ParamDecl { name: "k".into(), kind: VarKind::Key }],
            trace: vec![SignedPattern::plus(handle_pattern("k", t))],
            fresh: BTreeSet::from(["k".to_string()]),
            side_conditions: vec![],
        });
    }
    for (src, op, dst) in &p.edges {
        match (op, dst.is_data()) {
            (Op::Enc, true) => roles.push(RoleTemplate {
                name: format!("encrypt-{}", src.0.to_lowercase()),
                params: vec![
                    ParamDecl { name: "m".into(), kind: VarKind::Term },
                    ParamDecl { name: "k".into(), kind: VarKind::Key },
                ],
                trace: vec![
                    SignedPattern::minus(Pattern::var("m", VarKind::Term)),
                    SignedPattern::minus(handle_pattern("k", src)),
                    SignedPattern::plus(Pattern::cipher(
                        Pattern::var("m", VarKind::Term),
                        KeyPattern::Var("k".into()),
                    )),
                ],
                fresh: BTreeSet::new(),
                side_conditions: vec![],
            }),
            (Op::Dec, true) => roles.push(RoleTemplate {
                name: format!("decrypt-{}", src.0.to_lowercase()),
                params: vec![
                    ParamDecl { name: "m".into(), kind: VarKind::Term },
                    ParamDecl { name: "k".into(), kind: VarKind::Key },
                ],
                trace: vec![
                    SignedPattern::minus(Pattern::cipher(
                        Pattern::var("m", VarKind::Term),
                        KeyPattern::Var("k".into()),
                    )),
                    SignedPattern::minus(handle_pattern("k", src)),
                    SignedPattern::plus(Pattern::var("m", VarKind::Term)),
                ],
                fresh: BTreeSet::new(),
                side_conditions: vec![],
            }),
            (Op::Enc, false) => roles.push(RoleTemplate {
                name: format!("wrap-{}-{}", src.0.to_lowercase(), dst.0.to_lowercase()),
                params: vec![
                    ParamDecl { name: "k1".into(), kind: VarKind::Key },
                    ParamDecl { name: "k2".into(), kind: VarKind::Key },
                ],
                trace: vec![
                    SignedPattern::minus(handle_pattern("k1", dst)),
                    SignedPattern::minus(handle_pattern("k2", src)),
                    SignedPattern::plus(Pattern::cipher(
                        Pattern::var("k1", VarKind::Key),
                        KeyPattern::Var("k2".into()),
                    )),
                ],
                fresh: BTreeSet::new(),
                side_conditions: vec![],
            }),
            (Op::Dec, false) => roles.push(RoleTemplate {
                name: format!("unwrap-{}-{}", src.0.to_lowercase(), dst.0.to_lowercase()),
                params: vec![
                    ParamDecl { name: "k1".into(), kind: VarKind::Key },
                    ParamDecl { name: "k2".into(), kind: VarKind::Key },
                ],
                trace: vec![
                    SignedPattern::minus(Pattern::cipher(
                        Pattern::var("k1", VarKind::Key),
                        KeyPattern::Var("k2".into()),
                    )),
                    SignedPattern::minus(handle_pattern("k2", src)),
                    SignedPattern::plus(handle_pattern("k1", dst)),
                ],
                fresh: BTreeSet::new(),
                side_conditions: vec![],
            }),
        }
    }
    ProtocolSpec::new(roles).expect("generated templates are well-formed")
}

/// Search configuration for the device API: the penetrator knows everything
/// except the master key and device keys, shuttles handles between API
/// strands, and may utter one data atom.
pub fn kmp_search_config(spec: &ProtocolSpec, sessions_per_role: usize, synth_depth: usize) -> SearchConfig {
    let sessions = spec
        .roles
        .iter()
        .map(|r| (r.name.clone(), sessions_per_role))
        .collect();
    let data = TextAtom::new("d1");
    let dy = crate::penetrator::DYModel::new(
        KeyPredicate::Only(BTreeSet::new()),
        BTreeSet::new(),
        BTreeSet::from([data.clone()]),
        synth_depth,
    );
    SearchConfig {
        sessions,
        agent_universe: BTreeSet::new(),
        nonce_universe: BTreeSet::new(),
        key_universe: BTreeSet::new(),
        synth_depth,
        binding_depth: 1,
        typed_mode: true,
        enforce_unique_origination: true,
        relaxed_fresh: BTreeSet::new(),
        fresh_collision_atoms: BTreeSet::new(),
        injective_agreement_orig: false,
        penetrator: PenetratorSpec::Dy(dy),
        max_states: 1_000_000,
        workers: 1,
    }
}

/// Outcome of the bounded soundness check.
#[derive(Clone, Debug)]
pub enum SoundnessVerdict {
    Pass { states_explored: u64 },
    /// A runtime handle typed a key outside its creation type's reach set.
    TypeEscape {
        device: u32,
        created_as: KeyType,
        observed: KeyType,
    },
    /// A key whose creation type is secure became derivable in clear.
    SecrecyBreach { device: u32, created_as: KeyType },
}

impl SoundnessVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, SoundnessVerdict::Pass { .. })
    }
}

/// Run the device API against the penetrator and check that the closure
/// overapproximates runtime types and that secure-typed keys never leak.
pub fn check_kmp_soundness_bounded(
    p: &Policy,
    kind: ClosureKind,
    sessions_per_role: usize,
    synth_depth: usize,
) -> Result<SoundnessVerdict, SearchError> {
    check_kmp_soundness_with(p, &closure(p, kind), sessions_per_role, synth_depth)
}

/// Same check against an externally supplied (possibly hand-mutated) closure
/// result; the negative tests use this hook.
pub fn check_kmp_soundness_with(
    p: &Policy,
    closure_result: &ClosureResult,
    sessions_per_role: usize,
    synth_depth: usize,
) -> Result<SoundnessVerdict, SearchError> {
    let spec = api_strand_templates(p);
    let cfg = kmp_search_config(&spec, sessions_per_role, synth_depth);
    let secure = secure_types(closure_result);
    let type_names: BTreeMap<TextAtom, KeyType> =
        p.types.iter().map(|t| (type_atom(t), t.clone())).collect();

    let executions = crate::search::enumerate_executions(&spec, &cfg)?;
    let mut states = 0u64;
    for exec in &executions {
        states += 1;
        // Creation types: a create role's first event names the device key.
        let mut created: BTreeMap<u32, KeyType> = BTreeMap::new();
        let mut handles: Vec<(u32, KeyType)> = Vec::new();
        let mut emitted: Vec<&Term> = Vec::new();
        for (i, ev) in exec.events.iter().enumerate() {
            if ev.signed.is_positive() {
                emitted.push(ev.signed.unsigned());
            }
            let session = &exec.sessions[ev.session];
            if session.role.starts_with("create-") && ev.node == 0 {
                if let Some(Term::KeyLit(Key::Device(i_dev))) = session.bindings.get("k") {
                    let ty_name = session.role.trim_start_matches("create-");
                    let ty = p
                        .types
                        .iter()
                        .find(|t| t.0.to_lowercase() == ty_name)
                        .cloned()
                        .unwrap_or_else(KeyType::data);
                    created.insert(*i_dev, ty);
                }
            }
            let _ = i;
        }
        // Every handle observed in emitted traffic.
        for t in &emitted {
            t.for_each_subterm(&mut |sub| {
                if let Term::Cipher(payload, Key::Master) = sub {
                    if let Term::Pair(k, ty) = &**payload {
                        if let (Term::KeyLit(Key::Device(dev)), Term::Text(ty_atom)) = (&**k, &**ty)
                        {
                            if let Some(ty) = type_names.get(ty_atom) {
                                handles.push((*dev, ty.clone()));
                            }
                        }
                    }
                }
            });
        }
        for (dev, observed) in handles {
            let Some(created_as) = created.get(&dev) else { continue };
            let reachable = closure_result
                .reach
                .get(created_as)
                .map(|r| r.contains(&observed))
                .unwrap_or(false);
            if !reachable {
                return Ok(SoundnessVerdict::TypeEscape {
                    device: dev,
                    created_as: created_as.clone(),
                    observed,
                });
            }
        }
        // Secrecy of secure-typed keys: replay knowledge and ask for the key
        // literal in clear.
        let dy = cfg.penetrator.dy_model();
        let mut kn = crate::penetrator::Knowledge::seeded(dy, cfg.penetrator.closure_rules());
        for (i, ev) in exec.events.iter().enumerate() {
            if ev.signed.is_positive() {
                kn.add(
                    ev.signed.term.clone(),
                    i as u32 + 1,
                    crate::penetrator::Provenance::Emitted { session: ev.session, node: ev.node },
                );
            }
        }
        for (dev, created_as) in &created {
            if secure.contains(created_as)
                && kn.derivable(&Term::KeyLit(Key::Device(*dev)), synth_depth)
            {
                return Ok(SoundnessVerdict::SecrecyBreach {
                    device: *dev,
                    created_as: created_as.clone(),
                });
            }
        }
    }
    Ok(SoundnessVerdict::Pass { states_explored: states })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(n: &str) -> KeyType {
        KeyType::new(n)
    }

    #[test]
    fn empty_policy_closure() {
        let p = Policy::new(
            BTreeSet::from([ty("K1"), KeyType::data()]),
            BTreeSet::new(),
        )
        .unwrap();
        let c = closure(&p, ClosureKind::Refined);
        assert_eq!(c.reach[&ty("K1")], BTreeSet::from([ty("K1")]));
        assert_eq!(c.reach[&KeyType::data()], BTreeSet::from([KeyType::data()]));
        assert_eq!(
            c.implied,
            BTreeSet::from([
                (KeyType::data(), Op::Enc, KeyType::data()),
                (KeyType::data(), Op::Dec, KeyType::data()),
            ])
        );
        assert_eq!(secure_types(&c), BTreeSet::from([ty("K1")]));
    }

    #[test]
    fn secure_templates_refined_reach_sets() {
        let c = closure(&Policy::secure_templates(), ClosureKind::Refined);
        assert_eq!(c.reach[&ty("K1")], BTreeSet::from([ty("K1"), ty("K2")]));
        assert_eq!(c.reach[&ty("K2")], BTreeSet::from([ty("K2")]));
        assert_eq!(c.reach[&ty("K3")], BTreeSet::from([ty("K2"), ty("K3")]));
        assert_eq!(
            c.reach[&KeyType::data()],
            BTreeSet::from([ty("K2"), KeyType::data()])
        );
        assert_eq!(
            secure_types(&c),
            BTreeSet::from([ty("K1"), ty("K2"), ty("K3")])
        );
    }

    #[test]
    fn secure_templates_original_reaches_data_everywhere() {
        let c = closure(&Policy::secure_templates(), ClosureKind::Original);
        for (k, r) in &c.reach {
            assert!(
                r.iter().any(|t| t.is_data()),
                "R_{} should contain D under the original closure",
                k
            );
        }
        assert!(secure_types(&c).is_empty());
    }

    #[test]
    fn closure_is_monotone_in_the_policy() {
        let base = Policy::new(
            BTreeSet::from([ty("K1"), ty("K2"), KeyType::data()]),
            BTreeSet::from([(ty("K1"), Op::Enc, ty("K2"))]),
        )
        .unwrap();
        let bigger = Policy::new(
            base.types.clone(),
            base.edges
                .iter()
                .cloned()
                .chain([(ty("K1"), Op::Dec, ty("K2"))])
                .collect(),
        )
        .unwrap();
        for kind in [ClosureKind::Original, ClosureKind::Refined] {
            let c1 = closure(&base, kind);
            let c2 = closure(&bigger, kind);
            assert!(c1.implied.is_subset(&c2.implied));
            for (k, r) in &c1.reach {
                assert!(r.is_subset(&c2.reach[k]));
            }
        }
    }

    #[test]
    fn api_template_guards_for_secure_templates() {
        let spec = api_strand_templates(&Policy::secure_templates());
        let names: BTreeSet<&str> = spec.roles.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            BTreeSet::from([
                "create-k1",
                "create-k2",
                "create-k3",
                "create-d",
                "encrypt-k2",
                "encrypt-k3",
                "decrypt-k3",
                "wrap-k1-k1",
                "wrap-k1-k2",
                "wrap-k1-k3",
                "unwrap-k1-k2",
                "unwrap-k2-k2",
            ])
        );
    }

    #[test]
    fn no_dec_edges_no_decrypt_or_unwrap() {
        let p = Policy::new(
            BTreeSet::from([ty("K1"), KeyType::data()]),
            BTreeSet::from([(ty("K1"), Op::Enc, KeyType::data())]),
        )
        .unwrap();
        let spec = api_strand_templates(&p);
        assert!(spec
            .roles
            .iter()
            .all(|r| !r.name.starts_with("decrypt") && !r.name.starts_with("unwrap")));
    }

    #[test]
    fn policy_text_round_trip() {
        let p = Policy::secure_templates();
        let rendered = p.render();
        let back = Policy::parse(&rendered).unwrap();
        assert_eq!(p, back);
    }
}
