use super::{ColorSet, Formula, Interval};
use std::fmt::Write;

// Binding levels, loosest first.
const TEMPORAL: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const SPATIAL: u8 = 3;
const UNARY: u8 = 4;

/// Renders a formula in the DSL accepted by [`super::parse`], with the
/// fewest parentheses that still parse back to the same tree.
pub fn format(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, TEMPORAL, true);
    out
}

fn bound(out: &mut String, v: f64) {
    if v == f64::INFINITY {
        out.push_str("inf");
    } else {
        write!(out, "{v}").unwrap();
    }
}

fn interval(out: &mut String, i: &Interval) {
    out.push('[');
    bound(out, i.lo);
    out.push(',');
    bound(out, i.hi);
    out.push(']');
}

fn threshold(out: &mut String, v: f64) {
    write!(out, "{v}").unwrap();
}

/// Spatial operand: bare when its own annotation already carries `colors`.
fn operand(out: &mut String, f: &Formula, colors: &ColorSet) {
    let bare = match f {
        Formula::Atom(a) => a.colors == *colors,
        Formula::True => colors.is_all(),
        _ => false,
    };
    if bare {
        write_formula(out, f, UNARY, true);
    } else {
        out.push('(');
        write_formula(out, f, TEMPORAL, true);
        out.push(')');
        write!(out, "{colors}").unwrap();
    }
}

/// `min` is the loosest level allowed here; `tail` says nothing follows, so
/// a prefix `F`/`G` may extend to the right without parentheses.
fn write_formula(out: &mut String, f: &Formula, min: u8, tail: bool) {
    let (level, prefix_temporal) = match f {
        Formula::Until { .. } => (TEMPORAL, false),
        Formula::Eventually { .. } | Formula::Globally { .. } => (TEMPORAL, true),
        Formula::Or(..) => (OR, false),
        Formula::And(..) => (AND, false),
        Formula::Reach { .. } | Formula::Surround { .. } => (SPATIAL, false),
        _ => (UNARY, false),
    };
    let wrap = level < min || (prefix_temporal && !tail);
    if wrap {
        out.push('(');
    }
    let tail = tail || wrap;
    match f {
        Formula::True => out.push_str("true"),
        Formula::Atom(a) => {
            write!(out, "({} {} ", a.signal, a.comparator.symbol()).unwrap();
            threshold(out, a.threshold);
            write!(out, "){}", a.colors).unwrap();
        }
        Formula::Not(a) => {
            out.push('!');
            write_formula(out, a, UNARY, tail);
        }
        Formula::And(a, b) => {
            write_formula(out, a, AND, false);
            out.push_str(" & ");
            write_formula(out, b, SPATIAL, tail);
        }
        Formula::Or(a, b) => {
            write_formula(out, a, OR, false);
            out.push_str(" | ");
            write_formula(out, b, AND, tail);
        }
        Formula::Until { interval: i, lhs, rhs } => {
            write_formula(out, lhs, TEMPORAL, false);
            out.push_str(" U");
            interval(out, i);
            out.push(' ');
            write_formula(out, rhs, OR, tail);
        }
        Formula::Eventually { interval: i, body } | Formula::Globally { interval: i, body } => {
            out.push_str(if matches!(f, Formula::Eventually { .. }) {
                "F"
            } else {
                "G"
            });
            interval(out, i);
            out.push(' ');
            write_formula(out, body, TEMPORAL, true);
        }
        Formula::Reach {
            interval: i,
            metric,
            lhs,
            lhs_colors,
            rhs,
            rhs_colors,
        }
        | Formula::Surround {
            interval: i,
            metric,
            lhs,
            lhs_colors,
            rhs,
            rhs_colors,
        } => {
            operand(out, lhs, lhs_colors);
            out.push_str(if matches!(f, Formula::Reach { .. }) {
                " R"
            } else {
                " Surr"
            });
            interval(out, i);
            write!(out, "{{{metric}}} ").unwrap();
            operand(out, rhs, rhs_colors);
        }
        Formula::Escape {
            interval: i,
            metric,
            body,
            colors,
        }
        | Formula::Somewhere {
            interval: i,
            metric,
            body,
            colors,
        }
        | Formula::Everywhere {
            interval: i,
            metric,
            body,
            colors,
        } => {
            out.push_str(match f {
                Formula::Escape { .. } => "E",
                Formula::Somewhere { .. } => "SW",
                _ => "EW",
            });
            interval(out, i);
            write!(out, "{{{metric}}} ").unwrap();
            operand(out, body, colors);
        }
    }
    if wrap {
        out.push(')');
    }
}
