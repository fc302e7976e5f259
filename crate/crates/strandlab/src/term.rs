//! Symbolic message terms: text atoms, keys with inverses, concatenation and
//! encryption, the subterm relation.
//!
//! All values are immutable after construction and cheap to clone (subtrees are
//! reference-counted), so they can be shared freely between search workers.

use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An atomic message: agent names, nonces, payload data.
///
/// Equality is structural (by name). During search, atoms come from a finite
/// scenario-declared universe plus a reserved `name*N` namespace for freshly
/// generated values.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TextAtom(Arc<str>);

impl TextAtom {
    pub fn new(name: impl AsRef<str>) -> Self {
        TextAtom(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TextAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for TextAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}", self.0)
    }
}

impl From<&str> for TextAtom {
    fn from(s: &str) -> Self {
        TextAtom::new(s)
    }
}

impl Serialize for TextAtom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for TextAtom {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(TextAtom::new(String::deserialize(deserializer)?))
    }
}

/// A cryptographic key.
///
/// `SymShared` is bidirectional: the agent pair is normalized to a canonical
/// order, so `Key::sym(a, b) == Key::sym(b, a)` holds structurally. Always
/// construct shared keys through [`Key::sym`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Key {
    SymShared(TextAtom, TextAtom),
    Public(TextAtom),
    Private(TextAtom),
    Master,
    Device(u32),
    Raw(TextAtom),
}

impl Key {
    /// Shared symmetric key between two agents, normalized so the pair order
    /// does not matter.
    pub fn sym(a: impl Into<TextAtom>, b: impl Into<TextAtom>) -> Key {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            Key::SymShared(a, b)
        } else {
            Key::SymShared(b, a)
        }
    }

    pub fn public(a: impl Into<TextAtom>) -> Key {
        Key::Public(a.into())
    }

    pub fn private(a: impl Into<TextAtom>) -> Key {
        Key::Private(a.into())
    }

    pub fn raw(name: impl Into<TextAtom>) -> Key {
        Key::Raw(name.into())
    }

    /// The decryption key for ciphertexts under `self`. Symmetric, master,
    /// device and raw keys are self-inverse; public/private swap.
    pub fn inverse(&self) -> Key {
        match self {
            Key::Public(a) => Key::Private(a.clone()),
            Key::Private(a) => Key::Public(a.clone()),
            k => k.clone(),
        }
    }

    pub fn is_self_inverse(&self) -> bool {
        !matches!(self, Key::Public(_) | Key::Private(_))
    }
}

/// The inverse of a key, as a free function.
pub fn inverse(k: &Key) -> Key {
    k.inverse()
}

impl Serialize for Key {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Key {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        crate::parse::parse_key(&s).map_err(D::Error::custom)
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::SymShared(a, b) => write!(f, "sk({},{})", a, b),
            Key::Public(a) => write!(f, "pk({})", a),
            Key::Private(a) => write!(f, "pk-1({})", a),
            Key::Master => f.write_str("master"),
            Key::Device(i) => write!(f, "dev({})", i),
            Key::Raw(n) => write!(f, "raw({})", n),
        }
    }
}

/// A symbolic message: a finite tree over atoms and keys built from
/// concatenation and encryption.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Text(TextAtom),
    KeyLit(Key),
    Pair(Arc<Term>, Arc<Term>),
    Cipher(Arc<Term>, Key),
}

impl Term {
    pub fn text(name: impl Into<TextAtom>) -> Term {
        Term::Text(name.into())
    }

    pub fn key(k: Key) -> Term {
        Term::KeyLit(k)
    }

    pub fn pair(left: Term, right: Term) -> Term {
        Term::Pair(Arc::new(left), Arc::new(right))
    }

    /// Right-associated concatenation of a sequence of terms.
    pub fn concat<I: IntoIterator<Item = Term>>(items: I) -> Term
    where
        I::IntoIter: DoubleEndedIterator,
    {
        let mut iter = items.into_iter().rev();
        let last = iter.next().expect("concat of empty sequence");
        iter.fold(last, |acc, t| Term::pair(t, acc))
    }

    pub fn cipher(payload: Term, key: Key) -> Term {
        Term::Cipher(Arc::new(payload), key)
    }

    /// Tree height: atoms and key literals have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Term::Text(_) | Term::KeyLit(_) => 1,
            Term::Pair(l, r) => 1 + l.depth().max(r.depth()),
            Term::Cipher(p, _) => 1 + p.depth(),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Term::Text(_))
    }

    /// Visit every subterm (in the ⊏ sense: encryption keys are not visited).
    pub fn for_each_subterm<F: FnMut(&Term)>(&self, f: &mut F) {
        f(self);
        match self {
            Term::Pair(l, r) => {
                l.for_each_subterm(f);
                r.for_each_subterm(f);
            }
            Term::Cipher(p, _) => p.for_each_subterm(f),
            _ => {}
        }
    }
}

/// The subterm relation: `t` occurs in `u`. A cipher contains `t` iff it is
/// `t` itself or `t` occurs in the payload — the encryption key is not
/// searched, because the key does not occur in the message, it is only used
/// to produce it.
pub fn subterm(t: &Term, u: &Term) -> bool {
    if t == u {
        return true;
    }
    match u {
        Term::Pair(l, r) => subterm(t, l) || subterm(t, r),
        Term::Cipher(p, _) => subterm(t, p),
        _ => false,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Text(a) => write!(f, "${}", a),
            Term::KeyLit(k) => write!(f, "#{}", k),
            Term::Pair(l, r) => {
                // Concatenation is right-associative; parenthesize a left
                // child that is itself a pair.
                match **l {
                    Term::Pair(_, _) => write!(f, "({}) ⋅ {}", l, r),
                    _ => write!(f, "{} ⋅ {}", l, r),
                }
            }
            Term::Cipher(p, k) => write!(f, "⟨{}⟩_({})", p, k),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        crate::parse::parse_term(&s).map_err(D::Error::custom)
    }
}

/// Transmission direction of an event.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sign {
    Positive,
    Negative,
}

/// A signed term: `+t` transmitted, `-t` received.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedTerm {
    pub sign: Sign,
    pub term: Term,
}

impl SignedTerm {
    pub fn plus(term: Term) -> SignedTerm {
        SignedTerm { sign: Sign::Positive, term }
    }

    pub fn minus(term: Term) -> SignedTerm {
        SignedTerm { sign: Sign::Negative, term }
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    /// The unsigned term.
    pub fn unsigned(&self) -> &Term {
        &self.term
    }
}

impl fmt::Display for SignedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Positive => write!(f, "+{}", self.term),
            Sign::Negative => write!(f, "-{}", self.term),
        }
    }
}

impl fmt::Debug for SignedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Serialize for SignedTerm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SignedTerm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        crate::parse::parse_signed_term(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn na() -> Term {
        Term::text("Na")
    }

    #[test]
    fn sym_key_is_unordered() {
        assert_eq!(Key::sym("A", "B"), Key::sym("B", "A"));
        assert_ne!(Key::sym("A", "A"), Key::sym("A", "B"));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Key::sym("A", "B").inverse(), Key::sym("A", "B"));
        assert_eq!(Key::public("A").inverse(), Key::private("A"));
        assert_eq!(Key::private("B").inverse().inverse(), Key::private("B"));
        assert_eq!(Key::Master.inverse(), Key::Master);
        assert_eq!(Key::Device(3).inverse(), Key::Device(3));
    }

    #[test]
    fn subterm_examples() {
        let sk = Key::sym("A", "B");
        let c = Term::cipher(Term::pair(na(), Term::text("A")), sk.clone());
        assert!(subterm(&na(), &c));
        // The encryption key is not a subterm of the ciphertext.
        assert!(!subterm(&Term::key(sk), &c));
        assert!(subterm(&c, &c));
    }

    #[test]
    fn subterm_searches_payload_keys() {
        // A key literal inside a payload is a subterm.
        let handle = Term::cipher(
            Term::pair(Term::key(Key::Device(1)), Term::text("K1")),
            Key::Master,
        );
        assert!(subterm(&Term::key(Key::Device(1)), &handle));
    }

    #[test]
    fn depth_examples() {
        assert_eq!(Term::text("A").depth(), 1);
        assert_eq!(Term::pair(Term::text("A"), Term::text("B")).depth(), 2);
        let c = Term::cipher(Term::pair(na(), Term::text("A")), Key::sym("A", "B"));
        assert_eq!(c.depth(), 3);
    }

    #[test]
    fn concat_is_right_associative() {
        let t = Term::concat([Term::text("A"), Term::text("B"), na()]);
        assert_eq!(t, Term::pair(Term::text("A"), Term::pair(Term::text("B"), na())));
    }

    #[test]
    fn display_notation() {
        let sk = Key::sym("A", "B");
        let c = Term::cipher(Term::pair(na(), Term::text("A")), sk);
        assert_eq!(c.to_string(), "⟨$Na ⋅ $A⟩_(sk(A,B))");
        assert_eq!(SignedTerm::plus(Term::text("A")).to_string(), "+$A");
    }
}
