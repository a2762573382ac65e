//! Colored STREL formulas.
//!
//! Formulas are built from colored atoms, Boolean connectives, the temporal
//! `Until` family and the spatial `Reach`/`Escape` family. The text syntax
//! understood by [`parse`] and produced by [`format`] is:
//!
//! ```text
//! phi  := "true" | atom | "!" phi | phi "&" phi | phi "|" phi
//!       | phi "U[a,b]" phi | "F[a,b]" phi | "G[a,b]" phi
//!       | phi "R[a,b]{m}" phi | "E[a,b]{m}" phi | "SW[a,b]{m}" phi
//!       | "EW[a,b]{m}" phi | phi "Surr[0,b]{m}" phi | "(" phi ")" ["@{" colors "}"]
//! atom := "(" signal (">" | "<") number ")" "@{" colors "}"
//! ```
//!
//! Precedence, tightest first: `!` and prefix spatial operators, binary
//! spatial operators, `&`, `|`, temporal operators. Binary operators are
//! left-associative and `F`/`G` extend as far right as possible. Temporal
//! bounds are written in seconds, spatial bounds in metric units, and `b`
//! may be `inf`. `@{*}` denotes the full color universe.
//!
//! The operand color set of a spatial operator is taken from the operand's
//! outermost annotation: an atom's own annotation, or a postfix `@{...}` on
//! a parenthesized operand. Unannotated operands range over every color.

mod expand;
mod parser;
mod print;
mod validate;

pub use expand::expand_derived;
pub use parser::{parse, ParseError};
pub use print::format;
pub use validate::{validate, ValidationError};

use crate::scene::{Metric, Signal};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ColorSet {
    /// The whole color universe of the trace.
    All,
    Only(BTreeSet<String>),
}

impl ColorSet {
    pub fn of<I, S>(colors: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ColorSet::Only(colors.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, color: &str) -> bool {
        match self {
            ColorSet::All => true,
            ColorSet::Only(set) => set.contains(color),
        }
    }

    pub fn is_all(&self) -> bool {
        matches!(self, ColorSet::All)
    }
}

impl fmt::Display for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColorSet::All => f.write_str("@{*}"),
            ColorSet::Only(set) => {
                f.write_str("@{")?;
                for (i, c) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(c)?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Greater,
    Less,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Greater => ">",
            Comparator::Less => "<",
        }
    }
}

/// `(signal ⋈ threshold)@{colors}`. Its quantitative value is the signed
/// margin `signal - threshold` for `>` and `threshold - signal` for `<`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub signal: Signal,
    pub comparator: Comparator,
    pub threshold: f64,
    pub colors: ColorSet,
}

impl Atom {
    pub fn new(signal: Signal, comparator: Comparator, threshold: f64, colors: ColorSet) -> Self {
        Self {
            signal,
            comparator,
            threshold,
            colors,
        }
    }

    /// Signed margin between a signal value and the threshold. Works on any [`crate::scalar::Scalar`].
    pub fn margin<S: crate::scalar::Scalar>(&self, signal_value: S) -> S {
        match self.comparator {
            Comparator::Greater => signal_value.add_const(-self.threshold),
            Comparator::Less => (-signal_value).add_const(self.threshold),
        }
    }
}

/// Closed interval `[lo, hi]`, `hi` possibly `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_valid(&self) -> bool {
        self.lo >= 0.0 && self.lo.is_finite() && self.lo <= self.hi && !self.hi.is_nan()
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.lo && d <= self.hi
    }

    /// Converts a bound in seconds to step indices, widening to whole steps
    /// (floor for `lo`, ceil for `hi`). `None` stands for an unbounded `hi`.
    pub fn to_steps(&self, dt: f64) -> (usize, Option<usize>) {
        const SLACK: f64 = 1e-9;
        let lo = (self.lo / dt + SLACK).floor().max(0.0) as usize;
        let hi = if self.hi.is_finite() {
            Some((self.hi / dt - SLACK).ceil().max(0.0) as usize)
        } else {
            None
        };
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until {
        interval: Interval,
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    Eventually {
        interval: Interval,
        body: Box<Formula>,
    },
    Globally {
        interval: Interval,
        body: Box<Formula>,
    },
    Reach {
        interval: Interval,
        metric: Metric,
        lhs: Box<Formula>,
        lhs_colors: ColorSet,
        rhs: Box<Formula>,
        rhs_colors: ColorSet,
    },
    Escape {
        interval: Interval,
        metric: Metric,
        body: Box<Formula>,
        colors: ColorSet,
    },
    Somewhere {
        interval: Interval,
        metric: Metric,
        body: Box<Formula>,
        colors: ColorSet,
    },
    Everywhere {
        interval: Interval,
        metric: Metric,
        body: Box<Formula>,
        colors: ColorSet,
    },
    Surround {
        interval: Interval,
        metric: Metric,
        lhs: Box<Formula>,
        lhs_colors: ColorSet,
        rhs: Box<Formula>,
        rhs_colors: ColorSet,
    },
}

impl Formula {
    pub fn atom(signal: Signal, comparator: Comparator, threshold: f64, colors: ColorSet) -> Self {
        Formula::Atom(Atom::new(signal, comparator, threshold, colors))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(interval: Interval, lhs: Formula, rhs: Formula) -> Self {
        Formula::Until {
            interval,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn eventually(interval: Interval, body: Formula) -> Self {
        Formula::Eventually {
            interval,
            body: Box::new(body),
        }
    }

    pub fn globally(interval: Interval, body: Formula) -> Self {
        Formula::Globally {
            interval,
            body: Box::new(body),
        }
    }

    pub fn reach(
        interval: Interval,
        metric: Metric,
        lhs: Formula,
        lhs_colors: ColorSet,
        rhs: Formula,
        rhs_colors: ColorSet,
    ) -> Self {
        Formula::Reach {
            interval,
            metric,
            lhs: Box::new(lhs),
            lhs_colors,
            rhs: Box::new(rhs),
            rhs_colors,
        }
    }

    pub fn escape(interval: Interval, metric: Metric, body: Formula, colors: ColorSet) -> Self {
        Formula::Escape {
            interval,
            metric,
            body: Box::new(body),
            colors,
        }
    }

    pub fn somewhere(interval: Interval, metric: Metric, body: Formula, colors: ColorSet) -> Self {
        Formula::Somewhere {
            interval,
            metric,
            body: Box::new(body),
            colors,
        }
    }

    pub fn everywhere(interval: Interval, metric: Metric, body: Formula, colors: ColorSet) -> Self {
        Formula::Everywhere {
            interval,
            metric,
            body: Box::new(body),
            colors,
        }
    }

    pub fn surround(
        interval: Interval,
        metric: Metric,
        lhs: Formula,
        lhs_colors: ColorSet,
        rhs: Formula,
        rhs_colors: ColorSet,
    ) -> Self {
        Formula::Surround {
            interval,
            metric,
            lhs: Box::new(lhs),
            lhs_colors,
            rhs: Box::new(rhs),
            rhs_colors,
        }
    }

    /// Immediate subformulas, left to right.
    /// Operator keyword of the root node (`atom` and `true` for leaves).
    pub fn operator(&self) -> &'static str {
        match self {
            Formula::True => "true",
            Formula::Atom(_) => "atom",
            Formula::Not(_) => "!",
            Formula::And(..) => "&",
            Formula::Or(..) => "|",
            Formula::Until { .. } => "U",
            Formula::Eventually { .. } => "F",
            Formula::Globally { .. } => "G",
            Formula::Reach { .. } => "R",
            Formula::Escape { .. } => "E",
            Formula::Somewhere { .. } => "SW",
            Formula::Everywhere { .. } => "EW",
            Formula::Surround { .. } => "Surr",
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::Atom(_) => vec![],
            Formula::Not(a)
            | Formula::Eventually { body: a, .. }
            | Formula::Globally { body: a, .. }
            | Formula::Escape { body: a, .. }
            | Formula::Somewhere { body: a, .. }
            | Formula::Everywhere { body: a, .. } => vec![a],
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until { lhs: a, rhs: b, .. }
            | Formula::Reach { lhs: a, rhs: b, .. }
            | Formula::Surround { lhs: a, rhs: b, .. } => vec![a, b],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(Formula::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// True when the formula uses only `true`, atoms, `!`, `&`, `U`, `R` and `E`.
    pub fn is_core(&self) -> bool {
        let here = matches!(
            self,
            Formula::True
                | Formula::Atom(_)
                | Formula::Not(_)
                | Formula::And(..)
                | Formula::Until { .. }
                | Formula::Reach { .. }
                | Formula::Escape { .. }
        );
        here && self.children().into_iter().all(Formula::is_core)
    }

    /// Every color set in the formula: atom annotations and spatial operand sets.
    pub fn color_sets(&self) -> Vec<&ColorSet> {
        let mut out = Vec::new();
        self.collect_color_sets(&mut out);
        out
    }

    fn collect_color_sets<'a>(&'a self, out: &mut Vec<&'a ColorSet>) {
        match self {
            Formula::Atom(a) => out.push(&a.colors),
            Formula::Reach {
                lhs_colors, rhs_colors, ..
            }
            | Formula::Surround {
                lhs_colors, rhs_colors, ..
            } => {
                out.push(lhs_colors);
                out.push(rhs_colors);
            }
            Formula::Escape { colors, .. } | Formula::Somewhere { colors, .. } | Formula::Everywhere { colors, .. } => {
                out.push(colors)
            }
            _ => {}
        }
        for c in self.children() {
            c.collect_color_sets(out);
        }
    }

    /// Applies `f` to every color set, rebuilding the formula.
    pub fn map_colors(&self, f: &impl Fn(&ColorSet) -> ColorSet) -> Formula {
        let b = |x: &Formula| Box::new(x.map_colors(f));
        match self {
            Formula::True => Formula::True,
            Formula::Atom(a) => Formula::Atom(Atom {
                colors: f(&a.colors),
                ..a.clone()
            }),
            Formula::Not(a) => Formula::Not(b(a)),
            Formula::And(x, y) => Formula::And(b(x), b(y)),
            Formula::Or(x, y) => Formula::Or(b(x), b(y)),
            Formula::Until { interval, lhs, rhs } => Formula::Until {
                interval: *interval,
                lhs: b(lhs),
                rhs: b(rhs),
            },
            Formula::Eventually { interval, body } => Formula::Eventually {
                interval: *interval,
                body: b(body),
            },
            Formula::Globally { interval, body } => Formula::Globally {
                interval: *interval,
                body: b(body),
            },
            Formula::Reach {
                interval,
                metric,
                lhs,
                lhs_colors,
                rhs,
                rhs_colors,
            } => Formula::Reach {
                interval: *interval,
                metric: *metric,
                lhs: b(lhs),
                lhs_colors: f(lhs_colors),
                rhs: b(rhs),
                rhs_colors: f(rhs_colors),
            },
            Formula::Surround {
                interval,
                metric,
                lhs,
                lhs_colors,
                rhs,
                rhs_colors,
            } => Formula::Surround {
                interval: *interval,
                metric: *metric,
                lhs: b(lhs),
                lhs_colors: f(lhs_colors),
                rhs: b(rhs),
                rhs_colors: f(rhs_colors),
            },
            Formula::Escape {
                interval,
                metric,
                body,
                colors,
            } => Formula::Escape {
                interval: *interval,
                metric: *metric,
                body: b(body),
                colors: f(colors),
            },
            Formula::Somewhere {
                interval,
                metric,
                body,
                colors,
            } => Formula::Somewhere {
                interval: *interval,
                metric: *metric,
                body: b(body),
                colors: f(colors),
            },
            Formula::Everywhere {
                interval,
                metric,
                body,
                colors,
            } => Formula::Everywhere {
                interval: *interval,
                metric: *metric,
                body: b(body),
                colors: f(colors),
            },
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(self))
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

/// Reads a formula file (`#` starts a line comment).
pub fn load_formula(path: impl AsRef<std::path::Path>) -> Result<Formula, crate::Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::Io(format!("{}: {e}", path.display())))?;
    Ok(parse(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_conversion_widens() {
        assert_eq!(Interval::new(0.3, 0.3).to_steps(0.1), (3, Some(3)));
        assert_eq!(Interval::new(0.25, 0.35).to_steps(0.1), (2, Some(4)));
        assert_eq!(Interval::new(0.0, 6.0).to_steps(0.1), (0, Some(60)));
        assert_eq!(Interval::new(1.0, f64::INFINITY).to_steps(0.5), (2, None));
    }

    #[test]
    fn core_detection() {
        let a = Formula::atom(Signal::Speed, Comparator::Greater, 1.0, ColorSet::All);
        assert!(Formula::not(a.clone()).is_core());
        assert!(!Formula::or(a.clone(), a.clone()).is_core());
        assert!(!Formula::not(Formula::eventually(Interval::new(0.0, 1.0), a)).is_core());
    }
}
