//! Penetrator models: the Dolev-Yao strand forms (as a trace classifier and
//! as a knowledge-closure engine) and the maximal penetrator defined by
//! forbidden originations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::role::RoleTemplate;
use crate::strand::{originates, Strand};
use crate::term::{Key, Term, TextAtom};

/// Initial key knowledge, in the style of "every key except these".
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum KeyPredicate {
    /// Exactly the listed keys.
    Only(BTreeSet<Key>),
    /// Every constructible key except the listed ones.
    AllExcept(BTreeSet<Key>),
}

impl KeyPredicate {
    pub fn contains(&self, k: &Key) -> bool {
        match self {
            KeyPredicate::Only(set) => set.contains(k),
            KeyPredicate::AllExcept(set) => !set.contains(k),
        }
    }
}

/// Dolev-Yao penetrator configuration.
///
/// `known_keys` is the predicate used for classification; `emit_keys` is the
/// finite subset actually emitted during search (it must satisfy the
/// predicate). `text_universe` bounds the atoms the penetrator can utter and
/// `synth_depth` bounds the depth of terms it can build.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DYModel {
    pub known_keys: KeyPredicate,
    pub emit_keys: BTreeSet<Key>,
    pub text_universe: BTreeSet<TextAtom>,
    pub synth_depth: usize,
}

impl DYModel {
    pub fn new(
        known_keys: KeyPredicate,
        emit_keys: BTreeSet<Key>,
        text_universe: BTreeSet<TextAtom>,
        synth_depth: usize,
    ) -> DYModel {
        assert!(synth_depth >= 1, "synth_depth must be at least 1");
        debug_assert!(emit_keys.iter().all(|k| known_keys.contains(k)));
        DYModel { known_keys, emit_keys, text_universe, synth_depth }
    }
}

/// The eight Dolev-Yao strand forms.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum DYStrandKind {
    TextMsg,
    Flushing,
    Tee,
    Concatenation,
    Separation,
    KeyEmit,
    Encryption,
    Decryption,
}

/// Classify a trace as one of the Dolev-Yao strand forms, or `None`.
///
/// The match is unique when it exists: no trace satisfies two forms (sign
/// shapes and output constructors are disjoint, and the encryption/decryption
/// overlap would need an infinitely regressing term).
pub fn classify_dy(trace: &[crate::term::SignedTerm], model: &DYModel) -> Option<DYStrandKind> {
    use crate::term::Sign::{Negative as N, Positive as P};
    let signs: Vec<_> = trace.iter().map(|st| st.sign).collect();
    let terms: Vec<_> = trace.iter().map(|st| st.unsigned().clone()).collect();
    match (signs.as_slice(), terms.as_slice()) {
        ([P], [Term::Text(a)]) if model.text_universe.contains(a) => Some(DYStrandKind::TextMsg),
        ([P], [Term::KeyLit(k)]) if model.known_keys.contains(k) => Some(DYStrandKind::KeyEmit),
        ([N], [_]) => Some(DYStrandKind::Flushing),
        ([N, P, P], [g, g1, g2]) if g == g1 && g == g2 => Some(DYStrandKind::Tee),
        ([N, N, P], [g, h, Term::Pair(l, r)]) if **l == *g && **r == *h => {
            Some(DYStrandKind::Concatenation)
        }
        ([N, P, P], [Term::Pair(l, r), g, h]) if **l == *g && **r == *h => {
            Some(DYStrandKind::Separation)
        }
        ([N, N, P], [Term::KeyLit(k), m, Term::Cipher(p, ck)]) if ck == k && **p == *m => {
            Some(DYStrandKind::Encryption)
        }
        ([N, N, P], [Term::KeyLit(kinv), Term::Cipher(p, ck), m])
            if *kinv == ck.inverse() && **p == *m =>
        {
            Some(DYStrandKind::Decryption)
        }
        _ => None,
    }
}

/// Maximal-penetrator configuration: the protected shared key is named by its
/// agent pair; strands must not originate it nor forge its ciphertexts
/// without having read the key in clear.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct MaximalModel {
    pub agent_a: TextAtom,
    pub agent_b: TextAtom,
}

impl MaximalModel {
    pub fn new(a: impl Into<TextAtom>, b: impl Into<TextAtom>) -> MaximalModel {
        MaximalModel { agent_a: a.into(), agent_b: b.into() }
    }

    pub fn protected_key(&self) -> Key {
        Key::sym(self.agent_a.clone(), self.agent_b.clone())
    }
}

/// For every ciphertext under `key` originating at some index of the strand,
/// an earlier node of the same strand must read the key in clear.
pub fn no_forge_cipher(s: &Strand, key: &Key) -> bool {
    for (i, node) in s.trace.iter().enumerate() {
        if !node.is_positive() {
            continue;
        }
        let mut forged = false;
        node.unsigned().for_each_subterm(&mut |sub| {
            if let Term::Cipher(_, k) = sub {
                if k == key && originates(s, sub, i).unwrap_or(false) {
                    let key_read_before = s.trace[..i].iter().any(|prev| {
                        !prev.is_positive() && *prev.unsigned() == Term::KeyLit(key.clone())
                    });
                    if !key_read_before {
                        forged = true;
                    }
                }
            }
        });
        if forged {
            return false;
        }
    }
    true
}

/// Maximal-penetrator membership: the strand neither originates the protected
/// key nor forges its ciphertexts.
pub fn is_maximal_penetrator_strand(s: &Strand, model: &MaximalModel) -> bool {
    let key = model.protected_key();
    let key_term = Term::KeyLit(key.clone());
    let originates_key = (0..s.trace.len()).any(|i| originates(s, &key_term, i).unwrap_or(false));
    !originates_key && no_forge_cipher(s, &key)
}

/// Outcome of sweeping a role template against the maximal penetrator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SubsumptionVerdict {
    Pass { instances_checked: usize },
    Counterexample { bindings: crate::pattern::Bindings },
}

/// Check that every admitted instantiation of the template over the finite
/// universe is a maximal-penetrator strand; returns the first counterexample
/// otherwise.
pub fn role_subsumed_by_maximal(
    template: &RoleTemplate,
    admission: &crate::role::Admission,
    model: &MaximalModel,
    agents: &BTreeSet<TextAtom>,
    nonces: &BTreeSet<TextAtom>,
) -> SubsumptionVerdict {
    let mut checked = 0;
    for bindings in template.enumerate_ground_instances(agents, nonces) {
        if !admission.admits(&bindings) {
            continue;
        }
        checked += 1;
        let strand = template
            .instantiate_strand(0, &bindings)
            .expect("ground instantiation");
        if !is_maximal_penetrator_strand(&strand, model) {
            return SubsumptionVerdict::Counterexample { bindings };
        }
    }
    SubsumptionVerdict::Pass { instances_checked: checked }
}

// --- Knowledge closure -------------------------------------------------------

/// How a term entered the analysis core; drives witness reconstruction and
/// freshness accounting.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Provenance {
    /// Sent by an honest node.
    Emitted { session: usize, node: usize },
    /// Uttered as a text atom from the universe.
    EmitText,
    /// Emitted from initial key knowledge.
    EmitKey,
    /// Left component of a pair already in the core.
    SeparatedL { parent: Term },
    /// Right component of a pair already in the core.
    SeparatedR { parent: Term },
    /// Payload of a decrypted cipher; `with_key` is the decryption key read
    /// in clear, or `None` for the keyless (maximal-penetrator) form.
    Decrypted { cipher: Term, with_key: Option<Key> },
}

impl Provenance {
    /// Preference rank used when several provenances exist for one term:
    /// lower is better. Deriving from honest material beats uttering the
    /// atom out of thin air, which keeps reconstructed bundles free of
    /// spurious origination points.
    fn rank(&self) -> u8 {
        match self {
            Provenance::Emitted { .. } => 0,
            Provenance::SeparatedL { .. } | Provenance::SeparatedR { .. } => 1,
            Provenance::Decrypted { .. } => 1,
            Provenance::EmitKey => 2,
            Provenance::EmitText => 3,
        }
    }
}

/// Which closure rules apply: plain Dolev-Yao, or the maximal penetrator's
/// relaxation (decrypt anything, forge under any key except the protected
/// one).
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClosureRules {
    Dy,
    Maximal { protected: Key, constraints_enabled: bool },
}

/// The penetrator's derivable-message state: an analysis-closed core (pair
/// decomposition plus enabled decryptions) with provenance and timestamps.
/// Synthesis (pairing/encryption up to `synth_depth`) is decided lazily by
/// [`Knowledge::derivable`]; the closure itself would be astronomically large
/// if materialized.
#[derive(Clone, Debug)]
pub struct Knowledge {
    entries: BTreeMap<Term, Vec<(u32, Provenance)>>,
    pub rules: ClosureRules,
}

impl PartialEq for Knowledge {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules && self.entries.keys().eq(other.entries.keys())
    }
}

impl Eq for Knowledge {}

impl Knowledge {
    pub fn new(rules: ClosureRules) -> Knowledge {
        Knowledge { entries: BTreeMap::new(), rules }
    }

    /// Base knowledge at time zero: emitted keys and the text universe.
    pub fn seeded(model: &DYModel, rules: ClosureRules) -> Knowledge {
        let mut k = Knowledge::new(rules);
        for key in Self::seed_keys(model, &k.rules) {
            k.add(Term::KeyLit(key), 0, Provenance::EmitKey);
        }
        for atom in &model.text_universe {
            k.add(Term::Text(atom.clone()), 0, Provenance::EmitText);
        }
        k
    }

    fn seed_keys(model: &DYModel, rules: &ClosureRules) -> Vec<Key> {
        match rules {
            ClosureRules::Dy => model.emit_keys.iter().cloned().collect(),
            ClosureRules::Maximal { protected, constraints_enabled } => model
                .emit_keys
                .iter()
                .filter(|k| !*constraints_enabled || *k != protected)
                .cloned()
                .collect(),
        }
    }

    pub fn core(&self) -> impl Iterator<Item = &Term> {
        self.entries.keys()
    }

    pub fn core_len(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.entries.contains_key(t)
    }

    pub fn contains_at(&self, t: &Term, time: u32) -> bool {
        self.entries
            .get(t)
            .map(|provs| provs.iter().any(|(tm, _)| *tm <= time))
            .unwrap_or(false)
    }

    /// The best provenance recorded no later than `time`.
    pub fn provenance_at(&self, t: &Term, time: u32) -> Option<&Provenance> {
        self.entries.get(t).and_then(|provs| {
            provs
                .iter()
                .filter(|(tm, _)| *tm <= time)
                .min_by_key(|(tm, p)| (p.rank(), *tm))
                .map(|(_, p)| p)
        })
    }

    fn can_decrypt(&self, cipher_key: &Key) -> bool {
        match &self.rules {
            ClosureRules::Dy => self.contains(&Term::KeyLit(cipher_key.inverse())),
            ClosureRules::Maximal { .. } => true,
        }
    }

    /// May the penetrator encrypt under `k`? Either the key was read in
    /// clear, or the model places no integrity constraint on it.
    pub fn can_encrypt_with(&self, k: &Key) -> bool {
        if self.contains(&Term::KeyLit(k.clone())) {
            return true;
        }
        match &self.rules {
            ClosureRules::Dy => false,
            ClosureRules::Maximal { protected, constraints_enabled } => {
                !*constraints_enabled || k != protected
            }
        }
    }

    /// Insert a term and re-close the analysis part. Existing terms gain an
    /// extra provenance entry when the new one ranks better (honest material
    /// overrides thin-air utterances for reconstruction purposes).
    pub fn add(&mut self, t: Term, time: u32, prov: Provenance) {
        let mut queue = vec![(t, prov)];
        while let Some((term, prov)) = queue.pop() {
            let is_new = match self.entries.get_mut(&term) {
                Some(provs) => {
                    let best = provs.iter().map(|(_, p)| p.rank()).min().unwrap_or(u8::MAX);
                    if prov.rank() < best {
                        provs.push((time, prov));
                        // Re-走 the decomposition so children pick up the
                        // better provenance chain as well.
                        true
                    } else {
                        false
                    }
                }
                None => {
                    self.entries.insert(term.clone(), vec![(time, prov)]);
                    true
                }
            };
            if !is_new {
                continue;
            }
            match &term {
                Term::Pair(l, r) => {
                    queue.push(((**l).clone(), Provenance::SeparatedL { parent: term.clone() }));
                    queue.push(((**r).clone(), Provenance::SeparatedR { parent: term.clone() }));
                }
                Term::Cipher(p, k) => {
                    if self.can_decrypt(k) {
                        let with_key = match &self.rules {
                            ClosureRules::Dy => Some(k.inverse()),
                            ClosureRules::Maximal { .. } => None,
                        };
                        queue.push((
                            (**p).clone(),
                            Provenance::Decrypted { cipher: term.clone(), with_key },
                        ));
                    }
                }
                Term::KeyLit(k) => {
                    // A newly readable key may unlock ciphers already seen.
                    let unlocked: Vec<Term> = self
                        .entries
                        .keys()
                        .filter(|c| matches!(c, Term::Cipher(_, ck) if ck.inverse() == *k))
                        .cloned()
                        .collect();
                    for cipher in unlocked {
                        if let Term::Cipher(p, _) = &cipher {
                            queue.push((
                                (**p).clone(),
                                Provenance::Decrypted {
                                    cipher: cipher.clone(),
                                    with_key: Some(k.clone()),
                                },
                            ));
                        }
                    }
                }
                Term::Text(_) => {}
            }
        }
    }

    /// Is `t` derivable: in the analysis core, or synthesizable from
    /// derivable parts within the depth bound?
    pub fn derivable(&self, t: &Term, synth_depth: usize) -> bool {
        if self.contains(t) {
            return true;
        }
        if t.depth() > synth_depth {
            return false;
        }
        match t {
            Term::Pair(l, r) => self.derivable(l, synth_depth) && self.derivable(r, synth_depth),
            Term::Cipher(p, k) => self.can_encrypt_with(k) && self.derivable(p, synth_depth),
            _ => false,
        }
    }
}

/// The closure of `k0` under penetrator analysis and (lazily) synthesis.
pub fn analz_synth_close(k0: &BTreeSet<Term>, model: &DYModel) -> Knowledge {
    let mut k = Knowledge::seeded(model, ClosureRules::Dy);
    for t in k0 {
        k.add(t.clone(), 0, Provenance::EmitText);
    }
    k
}

/// Membership of `t` in the closure of `k0`.
pub fn derivable(k0: &BTreeSet<Term>, t: &Term, model: &DYModel) -> bool {
    analz_synth_close(k0, model).derivable(t, model.synth_depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::SignedTerm;

    fn model_all_except_sk_ab() -> DYModel {
        let sk = Key::sym("A", "B");
        let mut emit = BTreeSet::new();
        for (x, y) in [("A", "A"), ("B", "B")] {
            emit.insert(Key::sym(x, y));
        }
        DYModel::new(
            KeyPredicate::AllExcept(BTreeSet::from([sk])),
            emit,
            BTreeSet::from([TextAtom::new("A"), TextAtom::new("B"), TextAtom::new("Na")]),
            3,
        )
    }

    #[test]
    fn classifies_encryption_trace() {
        let model = model_all_except_sk_ab();
        let sk = Key::sym("A", "B");
        let payload = Term::pair(Term::text("Na"), Term::text("A"));
        let trace = vec![
            SignedTerm::minus(Term::key(sk.clone())),
            SignedTerm::minus(payload.clone()),
            SignedTerm::plus(Term::cipher(payload, sk)),
        ];
        assert_eq!(classify_dy(&trace, &model), Some(DYStrandKind::Encryption));
    }

    #[test]
    fn classifies_tee_and_rejects_unknown_key_emit() {
        let model = model_all_except_sk_ab();
        let g = Term::pair(Term::text("A"), Term::text("B"));
        let tee = vec![
            SignedTerm::minus(g.clone()),
            SignedTerm::plus(g.clone()),
            SignedTerm::plus(g),
        ];
        assert_eq!(classify_dy(&tee, &model), Some(DYStrandKind::Tee));

        let emit = vec![SignedTerm::plus(Term::key(Key::sym("A", "B")))];
        assert_eq!(classify_dy(&emit, &model), None);
        let emit_ok = vec![SignedTerm::plus(Term::key(Key::sym("A", "A")))];
        assert_eq!(classify_dy(&emit_ok, &model), Some(DYStrandKind::KeyEmit));
    }

    #[test]
    fn classifies_remaining_forms() {
        let model = model_all_except_sk_ab();
        let g = Term::text("A");
        let h = Term::text("B");
        let cat = vec![
            SignedTerm::minus(g.clone()),
            SignedTerm::minus(h.clone()),
            SignedTerm::plus(Term::pair(g.clone(), h.clone())),
        ];
        assert_eq!(classify_dy(&cat, &model), Some(DYStrandKind::Concatenation));
        let sep = vec![
            SignedTerm::minus(Term::pair(g.clone(), h.clone())),
            SignedTerm::plus(g.clone()),
            SignedTerm::plus(h.clone()),
        ];
        assert_eq!(classify_dy(&sep, &model), Some(DYStrandKind::Separation));
        let dec = vec![
            SignedTerm::minus(Term::key(Key::private("B"))),
            SignedTerm::minus(Term::cipher(g.clone(), Key::public("B"))),
            SignedTerm::plus(g.clone()),
        ];
        assert_eq!(classify_dy(&dec, &model), Some(DYStrandKind::Decryption));
        assert_eq!(
            classify_dy(&[SignedTerm::plus(Term::text("Na"))], &model),
            Some(DYStrandKind::TextMsg)
        );
        assert_eq!(
            classify_dy(&[SignedTerm::minus(g)], &model),
            Some(DYStrandKind::Flushing)
        );
    }

    #[test]
    fn closure_examples() {
        let model = model_all_except_sk_ab();
        let k = Key::raw("k");
        let m = Term::text("m");
        // One decryption step.
        let k0 = BTreeSet::from([
            Term::cipher(m.clone(), k.clone()),
            Term::key(k.inverse()),
        ]);
        assert!(derivable(&k0, &m, &model));
        // No analysis rule applies without the inverse key.
        let k0 = BTreeSet::from([Term::cipher(m.clone(), k.clone())]);
        assert!(!derivable(&k0, &m, &model));
        // One concatenation step.
        let g = Term::text("g");
        let h = Term::text("h");
        let k0 = BTreeSet::from([g.clone(), h.clone()]);
        assert!(derivable(&k0, &Term::pair(g, h), &model));
    }

    #[test]
    fn closure_is_monotone_and_idempotent() {
        let model = model_all_except_sk_ab();
        let g = Term::pair(Term::text("g"), Term::cipher(Term::text("s"), Key::raw("k")));
        let k0 = BTreeSet::from([g.clone()]);
        let k1: BTreeSet<Term> = k0.iter().cloned().chain([Term::key(Key::raw("k"))]).collect();
        let c0: BTreeSet<Term> = analz_synth_close(&k0, &model).core().cloned().collect();
        let c1: BTreeSet<Term> = analz_synth_close(&k1, &model).core().cloned().collect();
        assert!(c0.is_subset(&c1));
        // Idempotent: closing the core again adds nothing.
        let again: BTreeSet<Term> = analz_synth_close(&c0, &model).core().cloned().collect();
        assert_eq!(c0, again);
    }

    #[test]
    fn no_forge_cipher_examples() {
        let sk = Key::sym("A", "B");
        let m = Term::pair(Term::text("Na"), Term::text("A"));
        // Dolev-Yao encryption strand reads the key first.
        let enc = Strand::new(
            0,
            vec![
                SignedTerm::minus(Term::key(sk.clone())),
                SignedTerm::minus(m.clone()),
                SignedTerm::plus(Term::cipher(m.clone(), sk.clone())),
            ],
        );
        assert!(no_forge_cipher(&enc, &sk));
        // Forged ciphertext with no prior key input.
        let forge = Strand::new(0, vec![SignedTerm::plus(Term::cipher(m.clone(), sk.clone()))]);
        assert!(!no_forge_cipher(&forge, &sk));
        // Decryption without the key never originates the ciphertext.
        let dec = Strand::new(
            0,
            vec![
                SignedTerm::minus(Term::cipher(m.clone(), sk.clone())),
                SignedTerm::plus(m),
            ],
        );
        assert!(no_forge_cipher(&dec, &sk));
    }

    #[test]
    fn maximal_strands() {
        let model = MaximalModel::new("A", "B");
        let sk = model.protected_key();
        let m = Term::text("M");
        // Decryption without the key: maximal yes, Dolev-Yao no.
        let dec = Strand::new(
            0,
            vec![
                SignedTerm::minus(Term::cipher(m.clone(), sk.clone())),
                SignedTerm::plus(m),
            ],
        );
        assert!(is_maximal_penetrator_strand(&dec, &model));
        let dy = model_all_except_sk_ab();
        assert_eq!(classify_dy(&dec.trace, &dy), None);
        // Emitting the protected key originates it.
        let leak = Strand::new(0, vec![SignedTerm::plus(Term::key(sk))]);
        assert!(!is_maximal_penetrator_strand(&leak, &model));
    }
}
