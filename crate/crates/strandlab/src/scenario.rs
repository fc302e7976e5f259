//! Scenario files: a small block-structured text format describing roles,
//! universes, the penetrator, bounds, assumption toggles and properties.
//! Builtin scenarios render to this format and parse back identically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::parse::{ParseError, Parser, Tok};
use crate::pattern::{AgentRef, KeyPattern, Pattern, VarKind};
use crate::penetrator::{DYModel, KeyPredicate, MaximalModel};
use crate::role::{Admission, ParamDecl, ProtocolSpec, RoleTemplate, SideCondition, SignedPattern};
use crate::search::{PenetratorSpec, PropertyKind, PropertySpec, SearchConfig};
use crate::term::{Key, Sign, Term, TextAtom};

/// A parsed scenario file.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedScenario {
    pub name: String,
    pub spec: ProtocolSpec,
    pub config: SearchConfig,
    pub properties: Vec<PropertySpec>,
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, col: 1, msg: msg.into() }
}

/// Parse a pattern in the term grammar, treating identifiers bound in
/// `params` as typed variables.
fn parse_pattern_tokens(
    p: &mut Parser,
    params: &BTreeMap<String, VarKind>,
) -> Result<Pattern, ParseError> {
    let left = parse_pattern_prim(p, params)?;
    if p.eat_opt(&Tok::Dot) {
        let right = parse_pattern_tokens(p, params)?;
        Ok(Pattern::pair(left, right))
    } else {
        Ok(left)
    }
}

fn parse_key_pattern(
    p: &mut Parser,
    params: &BTreeMap<String, VarKind>,
) -> Result<KeyPattern, ParseError> {
    let agent_ref = |name: String, params: &BTreeMap<String, VarKind>| {
        if params.contains_key(&name) {
            AgentRef::Var(name)
        } else {
            AgentRef::Lit(TextAtom::new(name))
        }
    };
    let name = p.ident()?;
    match name.as_str() {
        "sk" => {
            p.eat(Tok::LParen)?;
            let a = p.ident()?;
            p.eat(Tok::Comma)?;
            let b = p.ident()?;
            p.eat(Tok::RParen)?;
            let (ra, rb) = (agent_ref(a, params), agent_ref(b, params));
            match (&ra, &rb) {
                (AgentRef::Lit(x), AgentRef::Lit(y)) => {
                    Ok(KeyPattern::Lit(Key::sym(x.clone(), y.clone())))
                }
                _ => Ok(KeyPattern::Sym(ra, rb)),
            }
        }
        "pk" => {
            if p.eat_opt(&Tok::Minus) {
                match p.next() {
                    Some(Tok::Nat(1)) => {}
                    _ => return Err(p.err("expected '1' after 'pk-'")),
                }
                p.eat(Tok::LParen)?;
                let a = p.ident()?;
                p.eat(Tok::RParen)?;
                match agent_ref(a, params) {
                    AgentRef::Lit(x) => Ok(KeyPattern::Lit(Key::Private(x))),
                    var => Ok(KeyPattern::Private(var)),
                }
            } else {
                p.eat(Tok::LParen)?;
                let a = p.ident()?;
                p.eat(Tok::RParen)?;
                match agent_ref(a, params) {
                    AgentRef::Lit(x) => Ok(KeyPattern::Lit(Key::Public(x))),
                    var => Ok(KeyPattern::Public(var)),
                }
            }
        }
        "master" => Ok(KeyPattern::Lit(Key::Master)),
        "dev" => {
            p.eat(Tok::LParen)?;
            let n = match p.next() {
                Some(Tok::Nat(n)) => n,
                _ => return Err(p.err("expected device index")),
            };
            p.eat(Tok::RParen)?;
            Ok(KeyPattern::Lit(Key::Device(n)))
        }
        "raw" => {
            p.eat(Tok::LParen)?;
            let n = p.ident()?;
            p.eat(Tok::RParen)?;
            Ok(KeyPattern::Lit(Key::raw(n.as_str())))
        }
        other => {
            if params.get(other) == Some(&VarKind::Key) {
                Ok(KeyPattern::Var(other.to_string()))
            } else {
                Err(p.err(format!("unknown key constructor '{}'", other)))
            }
        }
    }
}

fn parse_pattern_prim(
    p: &mut Parser,
    params: &BTreeMap<String, VarKind>,
) -> Result<Pattern, ParseError> {
    match p.peek().cloned() {
        Some(Tok::Dollar) => {
            p.next();
            let name = p.ident()?;
            match params.get(&name) {
                Some(kind) => Ok(Pattern::var(name, *kind)),
                None => Ok(Pattern::Text(TextAtom::new(name))),
            }
        }
        Some(Tok::Hash) => {
            p.next();
            Ok(Pattern::KeyLit(parse_key_pattern(p, params)?))
        }
        Some(Tok::LBrace) => {
            p.next();
            let payload = parse_pattern_tokens(p, params)?;
            p.eat(Tok::RBrace)?;
            let key = parse_key_pattern(p, params)?;
            Ok(Pattern::cipher(payload, key))
        }
        Some(Tok::LAngle) => {
            p.next();
            let payload = parse_pattern_tokens(p, params)?;
            p.eat(Tok::RAngle)?;
            p.eat_opt(&Tok::Underscore);
            p.eat(Tok::LParen)?;
            let key = parse_key_pattern(p, params)?;
            p.eat(Tok::RParen)?;
            Ok(Pattern::cipher(payload, key))
        }
        Some(Tok::LParen) => {
            p.next();
            let inner = parse_pattern_tokens(p, params)?;
            p.eat(Tok::RParen)?;
            Ok(inner)
        }
        Some(t) => Err(p.err(format!("expected a pattern, found {}", t))),
        None => Err(p.err("expected a pattern, found end of line")),
    }
}

pub fn parse_pattern(
    src: &str,
    params: &BTreeMap<String, VarKind>,
) -> Result<Pattern, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let pat = parse_pattern_tokens(&mut p, params)?;
    p.expect_end()?;
    Ok(pat)
}

fn kind_of(name: &str, line: usize) -> Result<VarKind, ParseError> {
    match name {
        "agent" => Ok(VarKind::Agent),
        "nonce" => Ok(VarKind::Nonce),
        "term" => Ok(VarKind::Term),
        "key" => Ok(VarKind::Key),
        other => Err(err(line, format!("unknown parameter kind '{}'", other))),
    }
}

/// Parse a scenario file.
pub fn parse_scenario(src: &str) -> Result<ParsedScenario, ParseError> {
    let mut name = String::new();
    let mut roles: Vec<RoleTemplate> = Vec::new();
    let mut admissions: BTreeMap<String, Admission> = BTreeMap::new();
    let mut properties: Vec<PropertySpec> = Vec::new();

    let mut agent_universe = BTreeSet::new();
    let mut nonce_universe = BTreeSet::new();
    let mut key_universe: BTreeSet<Key> = BTreeSet::new();
    let mut sessions: BTreeMap<String, usize> = BTreeMap::new();
    let mut synth_depth = 3usize;
    let mut binding_depth = 2usize;
    let mut max_states = 1_000_000u64;
    let mut workers = 1usize;
    let mut typed_mode = true;
    let mut enforce_unique = true;
    let mut relaxed_fresh = BTreeSet::new();
    let mut collision_atoms = BTreeSet::new();
    let mut orig_injective = false;
    let mut penetrator: Option<PenetratorSpec> = None;

    // Penetrator block under construction.
    let mut pen_kind: Option<&'static str> = None;
    let mut pen_protect: Option<(TextAtom, TextAtom)> = None;
    let mut pen_knows: Option<KeyPredicate> = None;
    let mut pen_emit: BTreeSet<Key> = BTreeSet::new();
    let mut pen_texts: BTreeSet<TextAtom> = BTreeSet::new();

    #[derive(PartialEq)]
    enum Section {
        Top,
        Role,
        Universe,
        Penetrator,
        Bounds,
        Options,
        Property,
    }
    let mut section = Section::Top;
    let mut current_role: Option<RoleTemplate> = None;
    let mut current_prop: Option<PropertySpec> = None;

    for (i, raw) in src.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();

        if section == Section::Top {
            match words[0] {
                "protocol" => {
                    name = words.get(1).unwrap_or(&"").to_string();
                }
                "role" => {
                    let rname = words
                        .get(1)
                        .ok_or_else(|| err(lineno, "role needs a name"))?
                        .trim_end_matches('{')
                        .to_string();
                    current_role = Some(RoleTemplate {
                        name: rname,
                        params: Vec::new(),
                        trace: Vec::new(),
                        fresh: BTreeSet::new(),
                        side_conditions: Vec::new(),
                    });
                    section = Section::Role;
                }
                "universe" => section = Section::Universe,
                "penetrator" => {
                    pen_kind = Some(match words.get(1).copied() {
                        Some("dy") | Some("dy{") => "dy",
                        Some("maximal") | Some("maximal{") => "maximal",
                        other => {
                            return Err(err(
                                lineno,
                                format!("unknown penetrator kind {:?}", other),
                            ))
                        }
                    });
                    section = Section::Penetrator;
                }
                "bounds" => section = Section::Bounds,
                "options" => section = Section::Options,
                "property" => {
                    let pname = words
                        .get(1)
                        .ok_or_else(|| err(lineno, "property needs a name"))?
                        .trim_end_matches('{')
                        .to_string();
                    current_prop = Some(PropertySpec {
                        name: pname,
                        kind: PropertyKind::Injectivity {
                            role: String::new(),
                            fresh_param: String::new(),
                        },
                        where_bindings: BTreeMap::new(),
                        distinct: Vec::new(),
                    });
                    section = Section::Property;
                }
                other => return Err(err(lineno, format!("unexpected '{}'", other))),
            }
            continue;
        }

        if line == "}" {
            match section {
                Section::Role => {
                    let role = current_role.take().unwrap();
                    roles.push(role);
                }
                Section::Property => {
                    properties.push(current_prop.take().unwrap());
                }
                Section::Penetrator => {
                    let texts = pen_texts.clone();
                    let knows = pen_knows
                        .clone()
                        .unwrap_or(KeyPredicate::Only(BTreeSet::new()));
                    let dy = DYModel::new(knows, pen_emit.clone(), texts, synth_depth.max(1));
                    penetrator = Some(match pen_kind {
                        Some("maximal") => {
                            let (a, b) = pen_protect.clone().ok_or_else(|| {
                                err(lineno, "maximal penetrator needs a 'protect A B' line")
                            })?;
                            PenetratorSpec::Maximal {
                                model: MaximalModel { agent_a: a, agent_b: b },
                                base: dy,
                                constraints_enabled: true,
                            }
                        }
                        _ => PenetratorSpec::Dy(dy),
                    });
                }
                _ => {}
            }
            section = Section::Top;
            continue;
        }

        match section {
            Section::Role => {
                let role = current_role.as_mut().unwrap();
                match words[0] {
                    "param" => {
                        // param Na: nonce [fresh]
                        let rest = line.trim_start_matches("param").trim();
                        let (pname, rest) = rest
                            .split_once(':')
                            .ok_or_else(|| err(lineno, "param syntax: 'param N: kind [fresh]'"))?;
                        let mut it = rest.split_whitespace();
                        let kind = kind_of(
                            it.next().ok_or_else(|| err(lineno, "missing param kind"))?,
                            lineno,
                        )?;
                        let pname = pname.trim().to_string();
                        if it.next() == Some("fresh") {
                            role.fresh.insert(pname.clone());
                        }
                        role.params.push(ParamDecl { name: pname, kind });
                    }
                    "send" | "recv" => {
                        let sign = if words[0] == "send" { Sign::Positive } else { Sign::Negative };
                        let params: BTreeMap<String, VarKind> =
                            role.params.iter().map(|p| (p.name.clone(), p.kind)).collect();
                        let body = line[4..].trim();
                        let mut p = Parser::new(body, lineno)?;
                        let pattern = parse_pattern_tokens(&mut p, &params)?;
                        p.expect_end()?;
                        role.trace.push(SignedPattern { sign, pattern });
                    }
                    "where" => match words.get(1).copied() {
                        Some("no-symkey-in") => role.side_conditions.push(
                            SideCondition::NoSymKeySubterm {
                                param: words.get(2).unwrap_or(&"").to_string(),
                            },
                        ),
                        Some("no-symcipher-in") => role.side_conditions.push(
                            SideCondition::NoSymCipherSubterm {
                                param: words.get(2).unwrap_or(&"").to_string(),
                            },
                        ),
                        other => {
                            return Err(err(lineno, format!("unknown side condition {:?}", other)))
                        }
                    },
                    "admit" => {
                        // admit exclude-shared-key <pa> <pb> sk(X,Y)
                        if words.get(1) != Some(&"exclude-shared-key") || words.len() < 5 {
                            return Err(err(
                                lineno,
                                "admit syntax: 'admit exclude-shared-key A B sk(X,Y)'",
                            ));
                        }
                        let key = crate::parse::parse_key(words[4])
                            .map_err(|e| err(lineno, e.msg))?;
                        let (aa, ab) = match key {
                            Key::SymShared(x, y) => (x, y),
                            _ => return Err(err(lineno, "admission key must be sk(X,Y)")),
                        };
                        admissions.insert(
                            role.name.clone(),
                            Admission::ExcludeSharedKey {
                                param_a: words[2].to_string(),
                                param_b: words[3].to_string(),
                                agent_a: aa,
                                agent_b: ab,
                            },
                        );
                    }
                    other => return Err(err(lineno, format!("unexpected '{}' in role", other))),
                }
            }
            Section::Universe => match words[0] {
                "agents" => agent_universe.extend(words[1..].iter().map(TextAtom::new)),
                "nonces" => nonce_universe.extend(words[1..].iter().map(TextAtom::new)),
                "keys" => {
                    for w in &words[1..] {
                        key_universe
                            .insert(crate::parse::parse_key(w).map_err(|e| err(lineno, e.msg))?);
                    }
                }
                other => return Err(err(lineno, format!("unexpected '{}' in universe", other))),
            },
            Section::Penetrator => match words[0] {
                "protect" => {
                    if words.len() != 3 {
                        return Err(err(lineno, "protect syntax: 'protect A B'"));
                    }
                    pen_protect = Some((TextAtom::new(words[1]), TextAtom::new(words[2])));
                }
                "knows" => match words.get(1).copied() {
                    Some("all-except") => {
                        let mut set = BTreeSet::new();
                        for w in &words[2..] {
                            set.insert(crate::parse::parse_key(w).map_err(|e| err(lineno, e.msg))?);
                        }
                        pen_knows = Some(KeyPredicate::AllExcept(set));
                    }
                    Some("only") => {
                        let mut set = BTreeSet::new();
                        for w in &words[2..] {
                            set.insert(crate::parse::parse_key(w).map_err(|e| err(lineno, e.msg))?);
                        }
                        pen_knows = Some(KeyPredicate::Only(set));
                    }
                    other => return Err(err(lineno, format!("unknown knows form {:?}", other))),
                },
                "emit" => {
                    for w in &words[1..] {
                        pen_emit.insert(crate::parse::parse_key(w).map_err(|e| err(lineno, e.msg))?);
                    }
                }
                "texts" => pen_texts.extend(words[1..].iter().map(TextAtom::new)),
                other => return Err(err(lineno, format!("unexpected '{}' in penetrator", other))),
            },
            Section::Bounds => match words[0] {
                "sessions" => {
                    if words.len() != 3 {
                        return Err(err(lineno, "sessions syntax: 'sessions <role> <n>'"));
                    }
                    let n = words[2]
                        .parse()
                        .map_err(|_| err(lineno, "session count must be a number"))?;
                    sessions.insert(words[1].to_string(), n);
                }
                "synth-depth" => {
                    synth_depth = words
                        .get(1)
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(lineno, "synth-depth needs a number"))?
                }
                "binding-depth" => {
                    binding_depth = words
                        .get(1)
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(lineno, "binding-depth needs a number"))?
                }
                "max-states" => {
                    max_states = words
                        .get(1)
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(lineno, "max-states needs a number"))?
                }
                "workers" => {
                    workers = words
                        .get(1)
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(lineno, "workers needs a number"))?
                }
                other => return Err(err(lineno, format!("unexpected '{}' in bounds", other))),
            },
            Section::Options => match words[0] {
                "untyped" => typed_mode = false,
                "no-unique-origination" => enforce_unique = false,
                "relax-fresh" => {
                    if words.len() != 3 {
                        return Err(err(lineno, "relax-fresh syntax: 'relax-fresh <role> <param>'"));
                    }
                    relaxed_fresh.insert((words[1].to_string(), words[2].to_string()));
                }
                "collision-atoms" => {
                    collision_atoms.extend(words[1..].iter().map(TextAtom::new))
                }
                "orig-injective" => orig_injective = true,
                other => return Err(err(lineno, format!("unknown option '{}'", other))),
            },
            Section::Property => {
                let prop = current_prop.as_mut().unwrap();
                match words[0] {
                    "kind" => {
                        let claimant = String::new();
                        let _ = claimant;
                        prop.kind = match words.get(1).copied() {
                            Some("noninjective-agreement") => PropertyKind::NonInjectiveAgreement {
                                claimant: String::new(),
                                partner: String::new(),
                                agreed: Vec::new(),
                            },
                            Some("injective-agreement") => PropertyKind::InjectiveAgreement {
                                claimant: String::new(),
                                partner: String::new(),
                                agreed: Vec::new(),
                            },
                            Some("injectivity") => PropertyKind::Injectivity {
                                role: String::new(),
                                fresh_param: String::new(),
                            },
                            Some("secrecy") => PropertyKind::Secrecy {
                                role: String::new(),
                                secret: Pattern::Text(TextAtom::new("x")),
                            },
                            other => {
                                return Err(err(lineno, format!("unknown property kind {:?}", other)))
                            }
                        };
                    }
                    "claimant" | "role" => {
                        let v = words.get(1).unwrap_or(&"").to_string();
                        match &mut prop.kind {
                            PropertyKind::NonInjectiveAgreement { claimant, .. }
                            | PropertyKind::InjectiveAgreement { claimant, .. } => *claimant = v,
                            PropertyKind::Injectivity { role, .. } => *role = v,
                            PropertyKind::Secrecy { role, .. } => *role = v,
                        }
                    }
                    "partner" => {
                        let v = words.get(1).unwrap_or(&"").to_string();
                        match &mut prop.kind {
                            PropertyKind::NonInjectiveAgreement { partner, .. }
                            | PropertyKind::InjectiveAgreement { partner, .. } => *partner = v,
                            _ => return Err(err(lineno, "'partner' only applies to agreement")),
                        }
                    }
                    "agree" => {
                        let v: Vec<String> = words[1..].iter().map(|s| s.to_string()).collect();
                        match &mut prop.kind {
                            PropertyKind::NonInjectiveAgreement { agreed, .. }
                            | PropertyKind::InjectiveAgreement { agreed, .. } => *agreed = v,
                            _ => return Err(err(lineno, "'agree' only applies to agreement")),
                        }
                    }
                    "fresh-param" => {
                        let v = words.get(1).unwrap_or(&"").to_string();
                        match &mut prop.kind {
                            PropertyKind::Injectivity { fresh_param, .. } => *fresh_param = v,
                            _ => return Err(err(lineno, "'fresh-param' only applies to injectivity")),
                        }
                    }
                    "secret" => {
                        let body = line[6..].trim();
                        // Secrets refer to claimant params; parse with every
                        // identifier treated as a nonce-typed variable unless
                        // it is clearly a literal.
                        let role_name = prop.claimant_role().to_string();
                        let params: BTreeMap<String, VarKind> = roles
                            .iter()
                            .chain(current_role.iter())
                            .find(|r| r.name == role_name)
                            .map(|r| r.params.iter().map(|p| (p.name.clone(), p.kind)).collect())
                            .unwrap_or_default();
                        let pat = parse_pattern(body, &params).map_err(|e| err(lineno, e.msg))?;
                        match &mut prop.kind {
                            PropertyKind::Secrecy { secret, .. } => *secret = pat,
                            _ => return Err(err(lineno, "'secret' only applies to secrecy")),
                        }
                    }
                    "where" => {
                        // where A = $A
                        if words.len() != 4 || words[2] != "=" {
                            return Err(err(lineno, "where syntax: 'where <param> = <term>'"));
                        }
                        let value = crate::parse::parse_term(words[3])
                            .map_err(|e| err(lineno, e.msg))?;
                        prop.where_bindings.insert(words[1].to_string(), value);
                    }
                    "distinct" => {
                        if words.len() != 3 {
                            return Err(err(lineno, "distinct syntax: 'distinct <x> <y>'"));
                        }
                        prop.distinct.push((words[1].to_string(), words[2].to_string()));
                    }
                    other => return Err(err(lineno, format!("unexpected '{}' in property", other))),
                }
            }
            Section::Top | Section::Universe | Section::Bounds | Section::Options => unreachable!(),
        }
    }

    let mut spec = ProtocolSpec::new(roles).map_err(|e| err(0, e.to_string()))?;
    spec.admissions = admissions;
    let penetrator = penetrator.ok_or_else(|| err(0, "missing penetrator block"))?;
    // Re-seed the synth depth into the model (bounds may follow the block).
    let penetrator = match penetrator {
        PenetratorSpec::Dy(mut m) => {
            m.synth_depth = synth_depth;
            PenetratorSpec::Dy(m)
        }
        PenetratorSpec::Maximal { model, mut base, constraints_enabled } => {
            base.synth_depth = synth_depth;
            PenetratorSpec::Maximal { model, base, constraints_enabled }
        }
    };
    let config = SearchConfig {
        sessions,
        agent_universe,
        nonce_universe,
        key_universe,
        synth_depth,
        binding_depth,
        typed_mode,
        enforce_unique_origination: enforce_unique,
        relaxed_fresh,
        fresh_collision_atoms: collision_atoms,
        injective_agreement_orig: orig_injective,
        penetrator,
        max_states,
        workers,
    };
    Ok(ParsedScenario { name, spec, config, properties })
}

fn render_pattern(p: &Pattern) -> String {
    p.to_string()
}

fn render_key_set(keys: &BTreeSet<Key>) -> String {
    keys.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
}

/// Render a scenario to the file format; `parse_scenario` inverts this.
pub fn render_scenario(
    name: &str,
    spec: &ProtocolSpec,
    config: &SearchConfig,
    properties: &[PropertySpec],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "protocol {}", name);
    for role in &spec.roles {
        let _ = writeln!(out, "\nrole {} {{", role.name);
        for p in &role.params {
            let fresh = if role.fresh.contains(&p.name) { " fresh" } else { "" };
            let _ = writeln!(out, "  param {}: {}{}", p.name, p.kind, fresh);
        }
        for sp in &role.trace {
            let verb = if sp.sign == Sign::Positive { "send" } else { "recv" };
            let _ = writeln!(out, "  {} {}", verb, render_pattern(&sp.pattern));
        }
        for sc in &role.side_conditions {
            match sc {
                SideCondition::NoSymKeySubterm { param } => {
                    let _ = writeln!(out, "  where no-symkey-in {}", param);
                }
                SideCondition::NoSymCipherSubterm { param } => {
                    let _ = writeln!(out, "  where no-symcipher-in {}", param);
                }
            }
        }
        if let Some(Admission::ExcludeSharedKey { param_a, param_b, agent_a, agent_b }) =
            spec.admissions.get(&role.name)
        {
            let _ = writeln!(
                out,
                "  admit exclude-shared-key {} {} sk({},{})",
                param_a, param_b, agent_a, agent_b
            );
        }
        let _ = writeln!(out, "}}");
    }

    let _ = writeln!(out, "\nuniverse {{");
    if !config.agent_universe.is_empty() {
        let names: Vec<&str> = config.agent_universe.iter().map(|a| a.name()).collect();
        let _ = writeln!(out, "  agents {}", names.join(" "));
    }
    if !config.nonce_universe.is_empty() {
        let names: Vec<&str> = config.nonce_universe.iter().map(|a| a.name()).collect();
        let _ = writeln!(out, "  nonces {}", names.join(" "));
    }
    if !config.key_universe.is_empty() {
        let _ = writeln!(out, "  keys {}", render_key_set(&config.key_universe));
    }
    let _ = writeln!(out, "}}");

    let dy = config.penetrator.dy_model();
    match &config.penetrator {
        PenetratorSpec::Dy(_) => {
            let _ = writeln!(out, "\npenetrator dy {{");
        }
        PenetratorSpec::Maximal { model, .. } => {
            let _ = writeln!(out, "\npenetrator maximal {{");
            let _ = writeln!(out, "  protect {} {}", model.agent_a, model.agent_b);
        }
    }
    match &dy.known_keys {
        KeyPredicate::AllExcept(set) => {
            let _ = writeln!(out, "  knows all-except {}", render_key_set(set));
        }
        KeyPredicate::Only(set) => {
            let _ = writeln!(out, "  knows only {}", render_key_set(set));
        }
    }
    if !dy.emit_keys.is_empty() {
        let _ = writeln!(out, "  emit {}", render_key_set(&dy.emit_keys));
    }
    if !dy.text_universe.is_empty() {
        let names: Vec<&str> = dy.text_universe.iter().map(|a| a.name()).collect();
        let _ = writeln!(out, "  texts {}", names.join(" "));
    }
    let _ = writeln!(out, "}}");

    let _ = writeln!(out, "\nbounds {{");
    for (role, n) in &config.sessions {
        let _ = writeln!(out, "  sessions {} {}", role, n);
    }
    let _ = writeln!(out, "  synth-depth {}", config.synth_depth);
    let _ = writeln!(out, "  binding-depth {}", config.binding_depth);
    let _ = writeln!(out, "  max-states {}", config.max_states);
    let _ = writeln!(out, "  workers {}", config.workers);
    let _ = writeln!(out, "}}");

    let mut options = Vec::new();
    if !config.typed_mode {
        options.push("untyped".to_string());
    }
    if !config.enforce_unique_origination {
        options.push("no-unique-origination".to_string());
    }
    for (role, param) in &config.relaxed_fresh {
        options.push(format!("relax-fresh {} {}", role, param));
    }
    if !config.fresh_collision_atoms.is_empty() {
        let names: Vec<&str> =
            config.fresh_collision_atoms.iter().map(|a| a.name()).collect();
        options.push(format!("collision-atoms {}", names.join(" ")));
    }
    if config.injective_agreement_orig {
        options.push("orig-injective".to_string());
    }
    if !options.is_empty() {
        let _ = writeln!(out, "\noptions {{");
        for o in options {
            let _ = writeln!(out, "  {}", o);
        }
        let _ = writeln!(out, "}}");
    }

    for prop in properties {
        let _ = writeln!(out, "\nproperty {} {{", prop.name);
        match &prop.kind {
            PropertyKind::NonInjectiveAgreement { claimant, partner, agreed } => {
                let _ = writeln!(out, "  kind noninjective-agreement");
                let _ = writeln!(out, "  claimant {}", claimant);
                let _ = writeln!(out, "  partner {}", partner);
                let _ = writeln!(out, "  agree {}", agreed.join(" "));
            }
            PropertyKind::InjectiveAgreement { claimant, partner, agreed } => {
                let _ = writeln!(out, "  kind injective-agreement");
                let _ = writeln!(out, "  claimant {}", claimant);
                let _ = writeln!(out, "  partner {}", partner);
                let _ = writeln!(out, "  agree {}", agreed.join(" "));
            }
            PropertyKind::Injectivity { role, fresh_param } => {
                let _ = writeln!(out, "  kind injectivity");
                let _ = writeln!(out, "  role {}", role);
                let _ = writeln!(out, "  fresh-param {}", fresh_param);
            }
            PropertyKind::Secrecy { role, secret } => {
                let _ = writeln!(out, "  kind secrecy");
                let _ = writeln!(out, "  claimant {}", role);
                let _ = writeln!(out, "  secret {}", render_pattern(secret));
            }
        }
        for (param, value) in &prop.where_bindings {
            let _ = writeln!(out, "  where {} = {}", param, value);
        }
        for (x, y) in &prop.distinct {
            let _ = writeln!(out, "  distinct {} {}", x, y);
        }
        let _ = writeln!(out, "}}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols;

    #[test]
    fn builtin_scenarios_round_trip() {
        for scenario in protocols::scenarios() {
            let rendered = render_scenario(
                scenario.name,
                &scenario.spec,
                &scenario.config,
                &scenario.properties,
            );
            let parsed = parse_scenario(&rendered)
                .unwrap_or_else(|e| panic!("{}: {}", scenario.name, e));
            assert_eq!(parsed.name, scenario.name);
            assert_eq!(parsed.spec, scenario.spec, "spec mismatch in {}", scenario.name);
            assert_eq!(parsed.config, scenario.config, "config mismatch in {}", scenario.name);
            assert_eq!(
                parsed.properties, scenario.properties,
                "properties mismatch in {}",
                scenario.name
            );
        }
    }

    #[test]
    fn parse_error_has_position() {
        let src = "protocol x\nrole r {\n  param A: wizard\n}\n";
        let e = parse_scenario(src).unwrap_err();
        assert_eq!(e.line, 3);
    }
}
