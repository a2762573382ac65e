//! Minimal reverse-mode automatic differentiation on a scalar tape.
//!
//! Every operation appends one node holding its value and the local partial
//! derivatives with respect to its operands. [`Var::grad`] runs a single
//! backward sweep over the tape.

use crate::scalar::Scalar;
use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Default)]
struct Nodes {
    /// `(start, len)` into `partials` for each node.
    spans: Vec<(u32, u32)>,
    partials: Vec<(u32, f64)>,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Nodes>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tape({} nodes)", self.len())
    }
}

#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}({})", self.idx, self.value)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// An independent input variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        self.push(value, &[])
    }

    /// A leaf that is never differentiated against (same as [`Tape::var`]; kept for intent).
    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(value, &[])
    }

    fn push(&self, value: f64, partials: &[(u32, f64)]) -> Var<'_> {
        let mut n = self.nodes.borrow_mut();
        let start = n.partials.len() as u32;
        n.partials.extend_from_slice(partials);
        n.spans.push((start, partials.len() as u32));
        Var {
            tape: self,
            idx: (n.spans.len() - 1) as u32,
            value,
        }
    }

    fn push_iter(&self, value: f64, partials: impl Iterator<Item = (u32, f64)>) -> Var<'_> {
        let mut n = self.nodes.borrow_mut();
        let start = n.partials.len() as u32;
        n.partials.extend(partials);
        let len = n.partials.len() as u32 - start;
        n.spans.push((start, len));
        Var {
            tape: self,
            idx: (n.spans.len() - 1) as u32,
            value,
        }
    }
}

/// Adjoints of every tape node with respect to one output.
#[derive(Debug, Clone)]
pub struct Gradient {
    adjoints: Vec<f64>,
}

impl Gradient {
    /// Derivative of the output with respect to `v` (zero when `v` is not on its path).
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        self.adjoints.get(v.idx as usize).copied().unwrap_or(0.0)
    }

    pub fn wrt_all(&self, vs: &[Var<'_>]) -> Vec<f64> {
        vs.iter().map(|v| self.wrt(*v)).collect()
    }
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.value
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    pub fn grad(self) -> Gradient {
        let n = self.tape.nodes.borrow();
        let mut adj = vec![0.0; self.idx as usize + 1];
        adj[self.idx as usize] = 1.0;
        for i in (0..=self.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let (start, len) = n.spans[i];
            for &(p, d) in &n.partials[start as usize..(start + len) as usize] {
                adj[p as usize] += a * d;
            }
        }
        Gradient { adjoints: adj }
    }

    fn unary(self, value: f64, d: f64) -> Var<'t> {
        self.tape.push(value, &[(self.idx, d)])
    }

    pub fn exp(self) -> Var<'t> {
        let e = self.value.exp();
        self.unary(e, e)
    }

    pub fn ln(self) -> Var<'t> {
        self.unary(self.value.ln(), 1.0 / self.value)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, o: Var<'t>) -> Var<'t> {
        self.tape.push(self.value + o.value, &[(self.idx, 1.0), (o.idx, 1.0)])
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, o: Var<'t>) -> Var<'t> {
        self.tape.push(self.value - o.value, &[(self.idx, 1.0), (o.idx, -1.0)])
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, o: Var<'t>) -> Var<'t> {
        self.tape
            .push(self.value * o.value, &[(self.idx, o.value), (o.idx, self.value)])
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(-self.value, -1.0)
    }
}

impl Scalar for Var<'_> {
    fn value(self) -> f64 {
        self.value
    }
    fn constant_like(self, c: f64) -> Self {
        self.tape.constant(c)
    }
    fn add_const(self, c: f64) -> Self {
        self.unary(self.value + c, 1.0)
    }
    fn mul_const(self, c: f64) -> Self {
        self.unary(self.value * c, c)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        // The derivative is unbounded at 0; use 0 there so standstill stays finite.
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        self.unary(s, d)
    }
    fn abs(self) -> Self {
        let d = if self.value >= 0.0 { 1.0 } else { -1.0 };
        self.unary(self.value.abs(), d)
    }
    fn atan2(self, x: Self) -> Self {
        let (y, xv) = (self.value, x.value);
        let r2 = xv * xv + y * y;
        let (dy, dx) = if r2 > 0.0 { (xv / r2, -y / r2) } else { (0.0, 0.0) };
        self.tape.push(y.atan2(xv), &[(self.idx, dy), (x.idx, dx)])
    }
}

/// Temperature-`beta` log-sum-exp, `(1/β) log Σ exp(β v_i)`, computed with
/// the max shift. A single value is returned unchanged.
///
/// # Panics
/// On an empty slice.
pub fn smooth_max<'t>(vs: &[Var<'t>], beta: f64) -> Var<'t> {
    assert!(!vs.is_empty(), "smooth_max of an empty list");
    if vs.len() == 1 {
        return vs[0];
    }
    let m = vs.iter().map(|v| v.value).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = vs.iter().map(|v| (beta * (v.value - m)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let value = m + total.ln() / beta;
    vs[0]
        .tape
        .push_iter(value, vs.iter().zip(&weights).map(|(v, w)| (v.idx, w / total)))
}

/// `-smooth_max(-v)`.
pub fn smooth_min<'t>(vs: &[Var<'t>], beta: f64) -> Var<'t> {
    assert!(!vs.is_empty(), "smooth_min of an empty list");
    if vs.len() == 1 {
        return vs[0];
    }
    let m = vs.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = vs.iter().map(|v| (-beta * (v.value - m)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let value = m - total.ln() / beta;
    vs[0]
        .tape
        .push_iter(value, vs.iter().zip(&weights).map(|(v, w)| (v.idx, w / total)))
}

/// Plain-`f64` log-sum-exp with the same conventions as [`smooth_max`].
pub fn lse_max(vs: &[f64], beta: f64) -> f64 {
    assert!(!vs.is_empty(), "smooth_max of an empty list");
    if vs.len() == 1 {
        return vs[0];
    }
    let m = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + vs.iter().map(|v| (beta * (v - m)).exp()).sum::<f64>().ln() / beta
}
