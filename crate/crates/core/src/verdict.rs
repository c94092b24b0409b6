//! Three-valued verdicts.
//!
//! Decision procedures in this crate never bluff: `Holds` always carries a
//! certificate that can be re-checked by independent arithmetic, `Fails`
//! always carries a concrete obstruction, and anything the oracle cannot
//! decide soundly is reported as `Unknown` with a reason. Call sites that
//! need a boolean must decide explicitly how to treat `Unknown`.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<C, O> {
    Holds(C),
    Fails(O),
    Unknown(String),
}

impl<C, O> Verdict<C, O> {
    pub fn is_holds(&self) -> bool {
        matches!(self, Verdict::Holds(_))
    }

    pub fn is_fails(&self) -> bool {
        matches!(self, Verdict::Fails(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown(_))
    }

    pub fn holds(&self) -> Option<&C> {
        match self {
            Verdict::Holds(c) => Some(c),
            _ => None,
        }
    }

    pub fn fails(&self) -> Option<&O> {
        match self {
            Verdict::Fails(o) => Some(o),
            _ => None,
        }
    }

    pub fn map_holds<D>(self, f: impl FnOnce(C) -> D) -> Verdict<D, O> {
        match self {
            Verdict::Holds(c) => Verdict::Holds(f(c)),
            Verdict::Fails(o) => Verdict::Fails(o),
            Verdict::Unknown(r) => Verdict::Unknown(r),
        }
    }

    pub fn map_fails<P>(self, f: impl FnOnce(O) -> P) -> Verdict<C, P> {
        match self {
            Verdict::Holds(c) => Verdict::Holds(c),
            Verdict::Fails(o) => Verdict::Fails(f(o)),
            Verdict::Unknown(r) => Verdict::Unknown(r),
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Holds(_) => "holds",
            Verdict::Fails(_) => "fails",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

impl<C, O> fmt::Display for Verdict<C, O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Unknown(r) => write!(f, "unknown ({r})"),
            other => write!(f, "{}", other.status()),
        }
    }
}
