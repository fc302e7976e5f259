//! Built-in protocol scenarios, each paired with its expected-verdict table:
//! which properties hold under which assumptions, and which single-assumption
//! flips turn a pass into an attack.

use std::collections::{BTreeMap, BTreeSet};

use crate::kmp::Policy;
use crate::pattern::{AgentRef, KeyPattern, Pattern, VarKind};
use crate::penetrator::{DYModel, KeyPredicate, MaximalModel};
use crate::role::{Admission, ParamDecl, ProtocolSpec, RoleTemplate, SideCondition, SignedPattern};
use crate::search::{PenetratorSpec, PropertyKind, PropertySpec, SearchConfig, SearchError, Verdict};
use crate::strand::{Bundle, NodeRef};
use crate::term::{Key, Term, TextAtom};

/// A named scenario: protocol, default bounds/assumptions, guarded
/// properties, and the executable expectation table.
#[derive(Clone, Debug)]
pub struct NamedScenario {
    pub name: &'static str,
    pub spec: ProtocolSpec,
    pub config: SearchConfig,
    pub properties: Vec<PropertySpec>,
    pub expected: Vec<ExpectedCheck>,
    /// For the composed scenario: the absorbed protocol and the model the
    /// composition is checked against.
    pub composition: Option<(ProtocolSpec, MaximalModel)>,
    /// For the key-management scenario.
    pub policy: Option<Policy>,
}

/// One executable row of the assumption matrix.
#[derive(Clone, Debug)]
pub struct ExpectedCheck {
    pub name: String,
    pub property: String,
    pub toggles: Vec<Toggle>,
    pub expect_attack: bool,
}

/// An assumption flip, applied on top of the scenario defaults.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Toggle {
    /// Disable unique origination for one fresh parameter.
    RelaxFresh { role: &'static str, param: &'static str },
    /// Hand the penetrator a key it normally lacks.
    RevealKey(Key),
    /// Drop the maximal penetrator's origination constraints entirely.
    DropMaximalConstraints,
    /// Drop a distinctness guard from the property.
    DropDistinct { x: &'static str, y: &'static str },
    /// Override the session count of one role.
    SetSessions { role: &'static str, n: usize },
    /// Use the dual injective-agreement formulation.
    UseOrigInjective,
}

/// Apply a check's toggles to the scenario defaults.
pub fn apply_toggles(
    config: &SearchConfig,
    property: &PropertySpec,
    toggles: &[Toggle],
) -> (SearchConfig, PropertySpec) {
    let mut cfg = config.clone();
    let mut prop = property.clone();
    for t in toggles {
        match t {
            Toggle::RelaxFresh { role, param } => {
                cfg.relaxed_fresh.insert((role.to_string(), param.to_string()));
            }
            Toggle::RevealKey(k) => {
                let reveal = |m: &mut DYModel| {
                    if let KeyPredicate::AllExcept(set) = &mut m.known_keys {
                        set.remove(k);
                    }
                    if let KeyPredicate::Only(set) = &mut m.known_keys {
                        set.insert(k.clone());
                    }
                    m.emit_keys.insert(k.clone());
                };
                match &mut cfg.penetrator {
                    PenetratorSpec::Dy(m) => reveal(m),
                    PenetratorSpec::Maximal { base, .. } => reveal(base),
                }
            }
            Toggle::DropMaximalConstraints => {
                if let PenetratorSpec::Maximal { constraints_enabled, .. } = &mut cfg.penetrator {
                    *constraints_enabled = false;
                }
            }
            Toggle::DropDistinct { x, y } => {
                prop.distinct.retain(|(a, b)| !(a == x && b == y) && !(a == y && b == x));
            }
            Toggle::SetSessions { role, n } => {
                cfg.sessions.insert(role.to_string(), *n);
            }
            Toggle::UseOrigInjective => cfg.injective_agreement_orig = true,
        }
    }
    (cfg, prop)
}

/// Run one expectation-table row; returns the verdict.
pub fn run_check(scenario: &NamedScenario, check: &ExpectedCheck) -> Result<Verdict, SearchError> {
    let prop = scenario
        .properties
        .iter()
        .find(|p| p.name == check.property)
        .unwrap_or_else(|| panic!("unknown property '{}' in scenario", check.property));
    let (cfg, prop) = apply_toggles(&scenario.config, prop, &check.toggles);
    crate::search::check_property(&scenario.spec, &prop, &cfg)
}

// --- helpers -----------------------------------------------------------------

fn agent(n: &str) -> Pattern {
    Pattern::var(n, VarKind::Agent)
}

fn nonce(n: &str) -> Pattern {
    Pattern::var(n, VarKind::Nonce)
}

fn sym_ab() -> KeyPattern {
    KeyPattern::Sym(AgentRef::Var("A".into()), AgentRef::Var("B".into()))
}

fn pk_of(v: &str) -> KeyPattern {
    KeyPattern::Public(AgentRef::Var(v.into()))
}

fn agent_params() -> Vec<ParamDecl> {
    vec![
        ParamDecl { name: "A".into(), kind: VarKind::Agent },
        ParamDecl { name: "B".into(), kind: VarKind::Agent },
        ParamDecl { name: "Na".into(), kind: VarKind::Nonce },
    ]
}

fn atoms(names: &[&str]) -> BTreeSet<TextAtom> {
    names.iter().map(TextAtom::new).collect()
}

fn pin_ab() -> BTreeMap<String, Term> {
    BTreeMap::from([
        ("A".to_string(), Term::text("A")),
        ("B".to_string(), Term::text("B")),
    ])
}

/// Dolev-Yao model for the two-party symmetric scenarios: the penetrator
/// knows every key except sk(A,B).
fn dy_sym_model(synth_depth: usize) -> DYModel {
    let secret = Key::sym("A", "B");
    let emit: BTreeSet<Key> = [Key::sym("A", "A"), Key::sym("B", "B")].into();
    DYModel::new(
        KeyPredicate::AllExcept(BTreeSet::from([secret])),
        emit,
        atoms(&["A", "B", "na1"]),
        synth_depth,
    )
}

fn sym_config(synth_depth: usize, sessions: &[(&str, usize)]) -> SearchConfig {
    SearchConfig {
        sessions: sessions.iter().map(|(r, n)| (r.to_string(), *n)).collect(),
        agent_universe: atoms(&["A", "B"]),
        nonce_universe: atoms(&["na1"]),
        key_universe: [Key::sym("A", "A"), Key::sym("A", "B"), Key::sym("B", "B")].into(),
        synth_depth,
        binding_depth: 2,
        typed_mode: true,
        enforce_unique_origination: true,
        relaxed_fresh: BTreeSet::new(),
        fresh_collision_atoms: BTreeSet::new(),
        injective_agreement_orig: false,
        penetrator: PenetratorSpec::Dy(dy_sym_model(synth_depth)),
        max_states: 1_000_000,
        workers: 1,
    }
}

/// The three standard properties of the two-party scenarios, all claimed by
/// the initiator for the distinguished pair (A,B).
fn sym_properties(extra_distinct: &[(&str, &str)]) -> Vec<PropertySpec> {
    let distinct: Vec<(String, String)> = extra_distinct
        .iter()
        .map(|(x, y)| (x.to_string(), y.to_string()))
        .collect();
    vec![
        PropertySpec {
            name: "noninjective-agreement".into(),
            kind: PropertyKind::NonInjectiveAgreement {
                claimant: "initiator".into(),
                partner: "responder".into(),
                agreed: vec!["A".into(), "B".into(), "Na".into()],
            },
            where_bindings: pin_ab(),
            distinct: distinct.clone(),
        },
        PropertySpec {
            name: "injectivity".into(),
            kind: PropertyKind::Injectivity { role: "initiator".into(), fresh_param: "Na".into() },
            where_bindings: pin_ab(),
            distinct: distinct.clone(),
        },
        PropertySpec {
            name: "injective-agreement".into(),
            kind: PropertyKind::InjectiveAgreement {
                claimant: "initiator".into(),
                partner: "responder".into(),
                agreed: vec!["A".into(), "B".into(), "Na".into()],
            },
            where_bindings: pin_ab(),
            distinct,
        },
    ]
}

/// Challenge-response roles: initiator sends A.B.Na in clear and expects the
/// reply cipher; `reply` builds the responder's cipher payload.
fn challenge_roles(reply_payload: Pattern) -> Vec<RoleTemplate> {
    let msg1 = Pattern::concat([agent("A"), agent("B"), nonce("Na")]);
    let reply = Pattern::cipher(reply_payload, sym_ab());
    vec![
        RoleTemplate {
            name: "initiator".into(),
            params: agent_params(),
            trace: vec![SignedPattern::plus(msg1.clone()), SignedPattern::minus(reply.clone())],
            fresh: BTreeSet::from(["Na".to_string()]),
            side_conditions: vec![],
        },
        RoleTemplate {
            name: "responder".into(),
            params: agent_params(),
            trace: vec![SignedPattern::minus(msg1), SignedPattern::plus(reply)],
            fresh: BTreeSet::new(),
            side_conditions: vec![],
        },
    ]
}

/// Dual challenge roles: the initiator sends the cipher, the responder
/// decrypts and returns the nonce; `clear_b` prepends B in clear.
fn dual_roles(clear_b: bool) -> Vec<RoleTemplate> {
    let cipher = Pattern::cipher(Pattern::pair(nonce("Na"), agent("A")), sym_ab());
    let msg1 = if clear_b {
        Pattern::pair(agent("B"), cipher)
    } else {
        cipher
    };
    vec![
        RoleTemplate {
            name: "initiator".into(),
            params: agent_params(),
            trace: vec![SignedPattern::plus(msg1.clone()), SignedPattern::minus(nonce("Na"))],
            fresh: BTreeSet::from(["Na".to_string()]),
            side_conditions: vec![],
        },
        RoleTemplate {
            name: "responder".into(),
            params: agent_params(),
            trace: vec![SignedPattern::minus(msg1), SignedPattern::plus(nonce("Na"))],
            fresh: BTreeSet::new(),
            side_conditions: vec![],
        },
    ]
}

fn expect(name: &str, property: &str, toggles: Vec<Toggle>, expect_attack: bool) -> ExpectedCheck {
    ExpectedCheck { name: name.into(), property: property.into(), toggles, expect_attack }
}

fn relax_na() -> Toggle {
    Toggle::RelaxFresh { role: "initiator", param: "Na" }
}

fn reveal_sk() -> Toggle {
    Toggle::RevealKey(Key::sym("A", "B"))
}

/// The standard expectation rows shared by the challenge scenarios: agreement
/// needs key secrecy, injectivity needs freshness, injective agreement both.
fn challenge_expected() -> Vec<ExpectedCheck> {
    vec![
        expect("noninjective-agreement/default", "noninjective-agreement", vec![], false),
        // Freshness is not needed for plain agreement in these variants.
        expect(
            "noninjective-agreement/without-unique-origination",
            "noninjective-agreement",
            vec![relax_na()],
            false,
        ),
        expect(
            "noninjective-agreement/key-revealed",
            "noninjective-agreement",
            vec![reveal_sk()],
            true,
        ),
        expect("injectivity/default", "injectivity", vec![], false),
        expect("injectivity/without-unique-origination", "injectivity", vec![relax_na()], true),
        expect("injective-agreement/default", "injective-agreement", vec![], false),
        expect(
            "injective-agreement/without-unique-origination",
            "injective-agreement",
            vec![relax_na()],
            true,
        ),
        expect("injective-agreement/key-revealed", "injective-agreement", vec![reveal_sk()], true),
    ]
}

fn simple_auth_scenario(name: &'static str, reply_payload: Pattern) -> NamedScenario {
    NamedScenario {
        name,
        spec: ProtocolSpec::new(challenge_roles(reply_payload)).unwrap(),
        config: sym_config(3, &[("initiator", 2), ("responder", 2)]),
        properties: sym_properties(&[]),
        expected: challenge_expected(),
        composition: None,
        policy: None,
    }
}

/// The six two-party scenarios: the original exchange, the variant naming B
/// in the cipher, the flawed variant (no identity), the untyped relaxation,
/// and the two dual challenge protocols.
pub fn simple_auth_family() -> Vec<NamedScenario> {
    let mut out = Vec::new();

    out.push(simple_auth_scenario(
        "simple-auth",
        Pattern::pair(nonce("Na"), agent("A")),
    ));
    out.push(simple_auth_scenario(
        "simple-auth-withb",
        Pattern::pair(nonce("Na"), agent("B")),
    ));

    // No identity in the cipher: the reflection attack defeats agreement even
    // with key secrecy and freshness.
    let mut flawed = simple_auth_scenario("simple-auth-flawed", nonce("Na"));
    flawed.spec = ProtocolSpec::new(challenge_roles(nonce("Na"))).unwrap();
    flawed.expected = vec![
        expect("noninjective-agreement/reflection", "noninjective-agreement", vec![], true),
        expect("injective-agreement/reflection", "injective-agreement", vec![], true),
        expect("injectivity/default", "injectivity", vec![], false),
    ];
    out.push(flawed);

    // Untyped nonces: Na may be any term, guarded by the subterm side
    // conditions; same assumption rows as the typed original.
    let mut untyped_roles = challenge_roles(Pattern::pair(nonce("Na"), agent("A")));
    for role in &mut untyped_roles {
        role.side_conditions = vec![
            SideCondition::NoSymKeySubterm { param: "Na".into() },
            SideCondition::NoSymCipherSubterm { param: "Na".into() },
        ];
    }
    let mut untyped_cfg = sym_config(2, &[("initiator", 2), ("responder", 1)]);
    untyped_cfg.typed_mode = false;
    out.push(NamedScenario {
        name: "simple-auth-untyped",
        spec: ProtocolSpec::new(untyped_roles).unwrap(),
        config: untyped_cfg,
        properties: sym_properties(&[]),
        expected: challenge_expected(),
        composition: None,
        policy: None,
    });

    // Dual: encrypted challenge, nonce returned in clear. Freshness is
    // needed even for plain agreement (the nonce can be guessed otherwise).
    let dual_expected = vec![
        expect("noninjective-agreement/default", "noninjective-agreement", vec![], false),
        expect(
            "noninjective-agreement/without-unique-origination",
            "noninjective-agreement",
            vec![relax_na()],
            true,
        ),
        expect(
            "noninjective-agreement/key-revealed",
            "noninjective-agreement",
            vec![reveal_sk()],
            true,
        ),
        expect("injectivity/default", "injectivity", vec![], false),
        expect("injectivity/without-unique-origination", "injectivity", vec![relax_na()], true),
        expect("injective-agreement/default", "injective-agreement", vec![], false),
        expect(
            "injective-agreement/without-unique-origination",
            "injective-agreement",
            vec![relax_na()],
            true,
        ),
    ];
    out.push(NamedScenario {
        name: "simple-auth-dual",
        spec: ProtocolSpec::new(dual_roles(false)).unwrap(),
        config: sym_config(3, &[("initiator", 2), ("responder", 2)]),
        properties: sym_properties(&[]),
        expected: dual_expected.clone(),
        composition: None,
        policy: None,
    });

    // Dual with B in clear: additionally assumes B != Na, otherwise the
    // first message leaks the nonce. The claim guard carries the assumption;
    // agent atoms are candidate nonce values so its flip is observable.
    let mut dualb_cfg = sym_config(3, &[("initiator", 2), ("responder", 2)]);
    dualb_cfg.fresh_collision_atoms = atoms(&["A", "B"]);
    let mut dualb_expected = dual_expected;
    dualb_expected.push(expect(
        "injective-agreement/allow-b-equals-na",
        "injective-agreement",
        vec![Toggle::DropDistinct { x: "Na", y: "B" }],
        true,
    ));
    out.push(NamedScenario {
        name: "simple-auth-dual-b",
        spec: ProtocolSpec::new(dual_roles(true)).unwrap(),
        config: dualb_cfg,
        properties: sym_properties(&[("Na", "B")]),
        expected: dualb_expected,
        composition: None,
        policy: None,
    });

    out
}

// --- Maximal-penetrator scenarios ---------------------------------------------

fn maximal_config(synth_depth: usize, sessions: &[(&str, usize)]) -> SearchConfig {
    let mut cfg = sym_config(synth_depth, sessions);
    cfg.penetrator = PenetratorSpec::Maximal {
        model: MaximalModel::new("A", "B"),
        base: dy_sym_model(synth_depth),
        constraints_enabled: true,
    };
    cfg
}

/// The challenge scenario and its composition under the maximal penetrator.
pub fn simple_auth_maximal_scenarios() -> Vec<NamedScenario> {
    let expected = vec![
        expect("noninjective-agreement/default", "noninjective-agreement", vec![], false),
        expect(
            "noninjective-agreement/unconstrained-penetrator",
            "noninjective-agreement",
            vec![Toggle::DropMaximalConstraints],
            true,
        ),
        expect("injectivity/default", "injectivity", vec![], false),
        expect("injectivity/without-unique-origination", "injectivity", vec![relax_na()], true),
        expect("injective-agreement/default", "injective-agreement", vec![], false),
        expect(
            "injective-agreement/without-unique-origination",
            "injective-agreement",
            vec![relax_na()],
            true,
        ),
        expect(
            "injective-agreement/unconstrained-penetrator",
            "injective-agreement",
            vec![Toggle::DropMaximalConstraints],
            true,
        ),
    ];

    let maximal = NamedScenario {
        name: "simple-auth-maximal",
        spec: ProtocolSpec::new(challenge_roles(Pattern::pair(nonce("Na"), agent("A")))).unwrap(),
        config: maximal_config(3, &[("initiator", 2), ("responder", 2)]),
        properties: sym_properties(&[]),
        expected,
        composition: None,
        policy: None,
    };

    // Composition: the base protocol (admission: everyone) combined with the
    // B-variant whose participants must use a shared key different from
    // sk(A,B); the variant's roles are then maximal-penetrator strands and
    // the base protocol's proofs carry over.
    let kept = maximal.spec.clone();
    let exclude = Admission::ExcludeSharedKey {
        param_a: "A".into(),
        param_b: "B".into(),
        agent_a: TextAtom::new("A"),
        agent_b: TextAtom::new("B"),
    };
    let mut absorbed_roles = challenge_roles(Pattern::pair(nonce("Na"), agent("B")));
    for r in &mut absorbed_roles {
        r.name = format!("{}-b", r.name);
    }
    let absorbed = ProtocolSpec::new(absorbed_roles)
        .unwrap()
        .with_admission("initiator-b", exclude.clone())
        .with_admission("responder-b", exclude);
    let combined = kept.merged_with(&absorbed).unwrap();
    let mut composed_cfg = maximal_config(
        3,
        &[("initiator", 2), ("responder", 2), ("initiator-b", 1), ("responder-b", 1)],
    );
    composed_cfg.max_states = 2_000_000;
    let composed = NamedScenario {
        name: "simple-auth-composed",
        spec: combined,
        config: composed_cfg,
        properties: sym_properties(&[]),
        expected: vec![
            expect("noninjective-agreement/default", "noninjective-agreement", vec![], false),
            expect("injectivity/default", "injectivity", vec![], false),
        ],
        composition: Some((absorbed_from(&maximal), MaximalModel::new("A", "B"))),
        policy: None,
    };

    vec![maximal, composed]
}

fn absorbed_from(_maximal: &NamedScenario) -> ProtocolSpec {
    let exclude = Admission::ExcludeSharedKey {
        param_a: "A".into(),
        param_b: "B".into(),
        agent_a: TextAtom::new("A"),
        agent_b: TextAtom::new("B"),
    };
    let mut roles = challenge_roles(Pattern::pair(nonce("Na"), agent("B")));
    for r in &mut roles {
        r.name = format!("{}-b", r.name);
    }
    ProtocolSpec::new(roles)
        .unwrap()
        .with_admission("initiator-b", exclude.clone())
        .with_admission("responder-b", exclude)
}

// --- Needham-Schroeder(-Lowe) ---------------------------------------------------

fn nsl_params() -> Vec<ParamDecl> {
    vec![
        ParamDecl { name: "A".into(), kind: VarKind::Agent },
        ParamDecl { name: "B".into(), kind: VarKind::Agent },
        ParamDecl { name: "Na".into(), kind: VarKind::Nonce },
        ParamDecl { name: "Nb".into(), kind: VarKind::Nonce },
    ]
}

fn nsl_roles(b_in_second: bool) -> Vec<RoleTemplate> {
    let msg1 = Pattern::cipher(Pattern::pair(nonce("Na"), agent("A")), pk_of("B"));
    let msg2_payload = if b_in_second {
        Pattern::concat([nonce("Na"), nonce("Nb"), agent("B")])
    } else {
        Pattern::pair(nonce("Na"), nonce("Nb"))
    };
    let msg2 = Pattern::cipher(msg2_payload, pk_of("A"));
    let msg3 = Pattern::cipher(nonce("Nb"), pk_of("B"));
    vec![
        RoleTemplate {
            name: "initiator".into(),
            params: nsl_params(),
            trace: vec![
                SignedPattern::plus(msg1.clone()),
                SignedPattern::minus(msg2.clone()),
                SignedPattern::plus(msg3.clone()),
            ],
            fresh: BTreeSet::from(["Na".to_string()]),
            side_conditions: vec![],
        },
        RoleTemplate {
            name: "responder".into(),
            params: nsl_params(),
            trace: vec![
                SignedPattern::minus(msg1),
                SignedPattern::plus(msg2),
                SignedPattern::minus(msg3),
            ],
            fresh: BTreeSet::from(["Nb".to_string()]),
            side_conditions: vec![],
        },
    ]
}

fn nsl_config() -> SearchConfig {
    let emit: BTreeSet<Key> = [
        Key::public("A"),
        Key::public("B"),
        Key::public("E"),
        Key::private("E"),
    ]
    .into();
    let dy = DYModel::new(
        KeyPredicate::AllExcept(BTreeSet::from([Key::private("A"), Key::private("B")])),
        emit,
        atoms(&["A", "B", "E", "na1", "nb1"]),
        4,
    );
    SearchConfig {
        sessions: BTreeMap::from([("initiator".to_string(), 1), ("responder".to_string(), 1)]),
        agent_universe: atoms(&["A", "B", "E"]),
        nonce_universe: atoms(&["na1", "nb1"]),
        key_universe: [
            Key::public("A"),
            Key::public("B"),
            Key::public("E"),
            Key::private("A"),
            Key::private("B"),
            Key::private("E"),
        ]
        .into(),
        synth_depth: 4,
        binding_depth: 2,
        typed_mode: true,
        enforce_unique_origination: true,
        relaxed_fresh: BTreeSet::new(),
        fresh_collision_atoms: BTreeSet::new(),
        injective_agreement_orig: false,
        penetrator: PenetratorSpec::Dy(dy),
        max_states: 2_000_000,
        workers: 1,
    }
}

fn nsl_properties() -> Vec<PropertySpec> {
    let agreed: Vec<String> =
        ["A", "B", "Na", "Nb"].iter().map(|s| s.to_string()).collect();
    vec![
        PropertySpec {
            name: "initiator-agreement".into(),
            kind: PropertyKind::NonInjectiveAgreement {
                claimant: "initiator".into(),
                partner: "responder".into(),
                agreed: agreed.clone(),
            },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
        PropertySpec {
            name: "initiator-injectivity".into(),
            kind: PropertyKind::Injectivity { role: "initiator".into(), fresh_param: "Na".into() },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
        PropertySpec {
            name: "initiator-injective-agreement".into(),
            kind: PropertyKind::InjectiveAgreement {
                claimant: "initiator".into(),
                partner: "responder".into(),
                agreed: agreed.clone(),
            },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
        PropertySpec {
            name: "responder-agreement".into(),
            kind: PropertyKind::NonInjectiveAgreement {
                claimant: "responder".into(),
                partner: "initiator".into(),
                agreed: agreed.clone(),
            },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
        PropertySpec {
            name: "responder-injectivity".into(),
            kind: PropertyKind::Injectivity { role: "responder".into(), fresh_param: "Nb".into() },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
        PropertySpec {
            name: "responder-injective-agreement".into(),
            kind: PropertyKind::InjectiveAgreement {
                claimant: "responder".into(),
                partner: "initiator".into(),
                agreed,
            },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
        PropertySpec {
            name: "na-secrecy".into(),
            kind: PropertyKind::Secrecy {
                role: "initiator".into(),
                secret: nonce("Na"),
            },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
        PropertySpec {
            name: "nb-secrecy".into(),
            kind: PropertyKind::Secrecy {
                role: "responder".into(),
                secret: nonce("Nb"),
            },
            where_bindings: pin_ab(),
            distinct: vec![],
        },
    ]
}

fn relax_nb() -> Toggle {
    Toggle::RelaxFresh { role: "responder", param: "Nb" }
}

fn reveal_inv_a() -> Toggle {
    Toggle::RevealKey(Key::private("A"))
}

fn reveal_inv_b() -> Toggle {
    Toggle::RevealKey(Key::private("B"))
}

/// The corrected and the original (flawed) three-message exchanges.
pub fn nsl_scenarios() -> Vec<NamedScenario> {
    let nsl_expected = vec![
        expect("initiator-agreement/default", "initiator-agreement", vec![], false),
        expect("initiator-agreement/without-unique-na", "initiator-agreement", vec![relax_na()], true),
        expect("initiator-agreement/inv-a-revealed", "initiator-agreement", vec![reveal_inv_a()], true),
        expect("initiator-agreement/inv-b-revealed", "initiator-agreement", vec![reveal_inv_b()], true),
        expect("initiator-injectivity/default", "initiator-injectivity", vec![], false),
        expect(
            "initiator-injectivity/without-unique-na",
            "initiator-injectivity",
            vec![relax_na(), Toggle::SetSessions { role: "initiator", n: 2 }],
            true,
        ),
        expect("initiator-injective-agreement/default", "initiator-injective-agreement", vec![], false),
        expect(
            "initiator-injective-agreement/inv-b-revealed",
            "initiator-injective-agreement",
            vec![reveal_inv_b()],
            true,
        ),
        expect("responder-agreement/default", "responder-agreement", vec![], false),
        expect("responder-agreement/without-unique-nb", "responder-agreement", vec![relax_nb()], true),
        expect("responder-agreement/inv-a-revealed", "responder-agreement", vec![reveal_inv_a()], true),
        expect("responder-injectivity/default", "responder-injectivity", vec![], false),
        expect(
            "responder-injectivity/without-unique-nb",
            "responder-injectivity",
            vec![relax_nb(), Toggle::SetSessions { role: "responder", n: 2 }],
            true,
        ),
        expect(
            "responder-injective-agreement/default",
            "responder-injective-agreement",
            vec![],
            false,
        ),
        expect(
            "responder-injective-agreement/inv-a-revealed",
            "responder-injective-agreement",
            vec![reveal_inv_a()],
            true,
        ),
        // The dual formulation additionally depends on the partner's nonce
        // freshness: with Nb reuse two responders agree with one initiator.
        expect(
            "initiator-injective-agreement-orig/without-unique-nb",
            "initiator-injective-agreement",
            vec![
                Toggle::UseOrigInjective,
                relax_nb(),
                Toggle::SetSessions { role: "responder", n: 2 },
            ],
            true,
        ),
        expect("na-secrecy/default", "na-secrecy", vec![], false),
        expect("na-secrecy/without-unique-na", "na-secrecy", vec![relax_na()], true),
        expect("na-secrecy/inv-a-revealed", "na-secrecy", vec![reveal_inv_a()], true),
        expect("na-secrecy/inv-b-revealed", "na-secrecy", vec![reveal_inv_b()], true),
        expect("nb-secrecy/default", "nb-secrecy", vec![], false),
        expect("nb-secrecy/without-unique-nb", "nb-secrecy", vec![relax_nb()], true),
        expect("nb-secrecy/inv-a-revealed", "nb-secrecy", vec![reveal_inv_a()], true),
        expect("nb-secrecy/inv-b-revealed", "nb-secrecy", vec![reveal_inv_b()], true),
    ];

    let nsl = NamedScenario {
        name: "nsl",
        spec: ProtocolSpec::new(nsl_roles(true)).unwrap(),
        config: nsl_config(),
        properties: nsl_properties(),
        expected: nsl_expected,
        composition: None,
        policy: None,
    };

    // The original exchange without B in the second message: the nonce held
    // by the responder leaks through the initiator's session with the
    // compromised identity.
    let ns = NamedScenario {
        name: "ns-original",
        spec: ProtocolSpec::new(nsl_roles(false)).unwrap(),
        config: nsl_config(),
        properties: nsl_properties(),
        expected: vec![
            expect("nb-secrecy/lowe", "nb-secrecy", vec![], true),
            expect("responder-agreement/lowe", "responder-agreement", vec![], true),
            expect("na-secrecy/default", "na-secrecy", vec![], false),
        ],
        composition: None,
        policy: None,
    };

    vec![nsl, ns]
}

/// Node predicate for the corrected initiator-nonce secrecy statement: if Na
/// occurs in the node's term, one of the three cipher shapes occurs in it --
/// the first message, the second message with the partner nonce left free,
/// or the third message.
pub fn nsl_initiator_secrecy_predicate(
    a: TextAtom,
    b: TextAtom,
    na: TextAtom,
) -> impl Fn(&Bundle, NodeRef) -> bool {
    move |bundle, n| {
        let Ok(signed) = bundle.node_term(n) else { return true };
        let term = signed.unsigned();
        let na_term = Term::Text(na.clone());
        if !crate::term::subterm(&na_term, term) {
            return true;
        }
        let shape1 = Term::cipher(
            Term::pair(na_term.clone(), Term::Text(a.clone())),
            Key::Public(b.clone()),
        );
        let shape3 = Term::cipher(na_term.clone(), Key::Public(b.clone()));
        if crate::term::subterm(&shape1, term) || crate::term::subterm(&shape3, term) {
            return true;
        }
        // Second message with Nb existentially free.
        let mut found = false;
        term.for_each_subterm(&mut |sub| {
            if let Term::Cipher(payload, Key::Public(pa)) = sub {
                if *pa == a {
                    if let Term::Pair(first, rest) = &**payload {
                        if **first == na_term {
                            if let Term::Pair(_, last) = &**rest {
                                if **last == Term::Text(b.clone()) {
                                    found = true;
                                }
                            }
                        }
                    }
                }
            }
        });
        found
    }
}

/// The uncorrected two-shape predicate; fails on two reachable node shapes.
pub fn nsl_initiator_secrecy_predicate_uncorrected(
    a: TextAtom,
    b: TextAtom,
    na: TextAtom,
    nb: TextAtom,
) -> impl Fn(&Bundle, NodeRef) -> bool {
    move |bundle, n| {
        let Ok(signed) = bundle.node_term(n) else { return true };
        let term = signed.unsigned();
        let na_term = Term::Text(na.clone());
        if !crate::term::subterm(&na_term, term) {
            return true;
        }
        let shape1 = Term::cipher(
            Term::pair(na_term.clone(), Term::Text(a.clone())),
            Key::Public(b.clone()),
        );
        let shape2 = Term::cipher(
            Term::concat([na_term.clone(), Term::Text(nb.clone()), Term::Text(b.clone())]),
            Key::Public(a.clone()),
        );
        crate::term::subterm(&shape1, term) || crate::term::subterm(&shape2, term)
    }
}

/// The key-management scenario: the secure-templates policy plus the device
/// API templates it induces.
pub fn kmp_scenario() -> NamedScenario {
    let policy = Policy::secure_templates();
    let spec = crate::kmp::api_strand_templates(&policy);
    let config = crate::kmp::kmp_search_config(&spec, 1, 3);
    NamedScenario {
        name: "kmp-secure-templates",
        spec,
        config,
        properties: vec![],
        expected: vec![],
        composition: None,
        policy: Some(policy),
    }
}

/// All builtin scenarios, addressable by name.
pub fn scenarios() -> Vec<NamedScenario> {
    let mut all = simple_auth_family();
    all.extend(simple_auth_maximal_scenarios());
    all.extend(nsl_scenarios());
    all.push(kmp_scenario());
    all
}

pub fn scenario(name: &str) -> Option<NamedScenario> {
    scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_are_verbatim() {
        let family = simple_auth_family();
        let sa = family.iter().find(|s| s.name == "simple-auth").unwrap();
        let init = sa.spec.role("initiator").unwrap();
        assert_eq!(init.trace[0].pattern.to_string(), "$A . $B . $Na");
        assert_eq!(init.trace[1].pattern.to_string(), "{ $Na . $A }sk(A,B)");

        let dual = family.iter().find(|s| s.name == "simple-auth-dual").unwrap();
        let dinit = dual.spec.role("initiator").unwrap();
        assert_eq!(dinit.trace[0].pattern.to_string(), "{ $Na . $A }sk(A,B)");
        assert_eq!(dinit.trace[1].pattern.to_string(), "$Na");

        let dualb = family.iter().find(|s| s.name == "simple-auth-dual-b").unwrap();
        let binit = dualb.spec.role("initiator").unwrap();
        assert_eq!(binit.trace[0].pattern.to_string(), "$B . { $Na . $A }sk(A,B)");
    }

    #[test]
    fn nsl_traces() {
        let all = nsl_scenarios();
        let nsl = &all[0];
        let resp = nsl.spec.role("responder").unwrap();
        assert_eq!(resp.trace[0].pattern.to_string(), "{ $Na . $A }pk(B)");
        assert_eq!(resp.trace[1].pattern.to_string(), "{ $Na . $Nb . $B }pk(A)");
        assert_eq!(resp.trace[2].pattern.to_string(), "{ $Nb }pk(B)");
        let ns = &all[1];
        let init = ns.spec.role("initiator").unwrap();
        assert_eq!(init.trace[1].pattern.to_string(), "{ $Na . $Nb }pk(A)");
    }

    #[test]
    fn scenario_names_resolve() {
        for name in [
            "simple-auth",
            "simple-auth-withb",
            "simple-auth-flawed",
            "simple-auth-untyped",
            "simple-auth-dual",
            "simple-auth-dual-b",
            "simple-auth-maximal",
            "simple-auth-composed",
            "nsl",
            "ns-original",
            "kmp-secure-templates",
        ] {
            assert!(scenario(name).is_some(), "missing scenario {}", name);
        }
    }

    #[test]
    fn dual_b_requires_nonce_agent_distinctness() {
        let family = simple_auth_family();
        let dualb = family.iter().find(|s| s.name == "simple-auth-dual-b").unwrap();
        assert!(dualb
            .properties
            .iter()
            .all(|p| p.distinct.contains(&("Na".to_string(), "B".to_string()))));
    }
}
