//! Symbols and co-symbols.
//!
//! A signature assigns each symbol name an arity `n >= 1`; for every symbol
//! `f` there is a co-symbol `~f`, and `~~f = f`. The reserved arity-0 symbol
//! `*` is self-dual, carries no value and is represented directly in the term
//! syntax, never as a [`Symbol`].

use alloc::string::String;
use core::fmt;

/// An element of the extended signature: a named symbol together with its
/// arity and polarity (`co = true` is the `~f` form).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
    pub co: bool,
}

impl Symbol {
    /// Plain (input-polarity) symbol.
    pub fn plain(name: impl Into<String>, arity: usize) -> Self {
        Symbol { name: name.into(), arity, co: false }
    }

    /// Co (output-polarity) symbol `~f`.
    pub fn co(name: impl Into<String>, arity: usize) -> Self {
        Symbol { name: name.into(), arity, co: true }
    }

    /// The dual symbol; an involution.
    pub fn dual(&self) -> Symbol {
        Symbol { name: self.name.clone(), arity: self.arity, co: !self.co }
    }

    /// The underlying plain symbol, forgetting polarity.
    pub fn base(&self) -> Symbol {
        Symbol { name: self.name.clone(), arity: self.arity, co: false }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.co {
            write!(f, "~{}", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_is_involution() {
        let f = Symbol::plain("f", 2);
        assert_eq!(f.dual().dual(), f);
        assert_ne!(f.dual(), f);
        assert_eq!(f.dual(), Symbol::co("f", 2));
    }
}
