use crate::formula::Atom;
use crate::scene::SpatioTemporalTrace;

/// Value domain of a monitoring run: conjunction, disjunction and negation
/// over some carrier type, plus the atomic margin.
pub trait Semantics {
    type V: Clone;

    fn top(&self) -> Self::V;
    fn bottom(&self) -> Self::V;
    fn not(&self, v: &Self::V) -> Self::V;
    /// Conjunction of all values; [`Semantics::top`] when empty.
    fn and(&self, vs: &[Self::V]) -> Self::V;
    /// Disjunction of all values; [`Semantics::bottom`] when empty.
    fn or(&self, vs: &[Self::V]) -> Self::V;
    /// Atom value for an agent whose color already matched.
    fn atom(&self, agent: usize, t: usize, atom: &Atom) -> Self::V;
}

pub struct BooleanSemantics<'a> {
    pub trace: &'a SpatioTemporalTrace,
}

impl Semantics for BooleanSemantics<'_> {
    type V = bool;

    fn top(&self) -> bool {
        true
    }
    fn bottom(&self) -> bool {
        false
    }
    fn not(&self, v: &bool) -> bool {
        !v
    }
    fn and(&self, vs: &[bool]) -> bool {
        vs.iter().all(|v| *v)
    }
    fn or(&self, vs: &[bool]) -> bool {
        vs.iter().any(|v| *v)
    }
    fn atom(&self, agent: usize, t: usize, atom: &Atom) -> bool {
        let s = crate::scene::signal::signal_value(self.trace, agent, atom.signal, t);
        atom.margin(s) > 0.0
    }
}

pub struct QuantitativeSemantics<'a> {
    pub trace: &'a SpatioTemporalTrace,
}

impl Semantics for QuantitativeSemantics<'_> {
    type V = f64;

    fn top(&self) -> f64 {
        f64::INFINITY
    }
    fn bottom(&self) -> f64 {
        f64::NEG_INFINITY
    }
    fn not(&self, v: &f64) -> f64 {
        -v
    }
    fn and(&self, vs: &[f64]) -> f64 {
        vs.iter().copied().fold(f64::INFINITY, f64::min)
    }
    fn or(&self, vs: &[f64]) -> f64 {
        vs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    fn atom(&self, agent: usize, t: usize, atom: &Atom) -> f64 {
        let s = crate::scene::signal::signal_value(self.trace, agent, atom.signal, t);
        atom.margin(s)
    }
}
