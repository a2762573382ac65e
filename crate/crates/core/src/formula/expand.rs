use super::{ColorSet, Formula, Interval};

/// Rewrites derived operators into `true`, atoms, `!`, `&`, `U`, `R` and `E`.
///
/// | derived                    | expansion                                                     |
/// |----------------------------|---------------------------------------------------------------|
/// | `a \| b`                   | `!(!a & !b)`                                                  |
/// | `F[I] a`                   | `true U[I] a`                                                 |
/// | `G[I] a`                   | `!(true U[I] !a)`                                             |
/// | `SW[I]{m} a^c`             | `true^* R[I]{m} a^c`                                          |
/// | `EW[I]{m} a^c`             | `!(true^* R[I]{m} (!a)^c)`                                    |
/// | `a^c1 Surr[0,d]{m} b^c2`   | `a & !(a^c1 R[0,d]{m} (!(a \| b))^*) & !E[d,inf]{m} a^c1`     |
pub fn expand_derived(f: &Formula) -> Formula {
    let x = |g: &Formula| expand_derived(g);
    match f {
        Formula::True | Formula::Atom(_) => f.clone(),
        Formula::Not(a) => Formula::not(x(a)),
        Formula::And(a, b) => Formula::and(x(a), x(b)),
        Formula::Or(a, b) => or(x(a), x(b)),
        Formula::Until { interval, lhs, rhs } => Formula::until(*interval, x(lhs), x(rhs)),
        Formula::Eventually { interval, body } => Formula::until(*interval, Formula::True, x(body)),
        Formula::Globally { interval, body } => {
            Formula::not(Formula::until(*interval, Formula::True, Formula::not(x(body))))
        }
        Formula::Reach {
            interval,
            metric,
            lhs,
            lhs_colors,
            rhs,
            rhs_colors,
        } => Formula::reach(
            *interval,
            *metric,
            x(lhs),
            lhs_colors.clone(),
            x(rhs),
            rhs_colors.clone(),
        ),
        Formula::Escape {
            interval,
            metric,
            body,
            colors,
        } => Formula::escape(*interval, *metric, x(body), colors.clone()),
        Formula::Somewhere {
            interval,
            metric,
            body,
            colors,
        } => Formula::reach(
            *interval,
            *metric,
            Formula::True,
            ColorSet::All,
            x(body),
            colors.clone(),
        ),
        Formula::Everywhere {
            interval,
            metric,
            body,
            colors,
        } => Formula::not(Formula::reach(
            *interval,
            *metric,
            Formula::True,
            ColorSet::All,
            Formula::not(x(body)),
            colors.clone(),
        )),
        Formula::Surround {
            interval,
            metric,
            lhs,
            lhs_colors,
            rhs,
            ..
        } => {
            let a = x(lhs);
            let b = x(rhs);
            let inside = Interval::new(0.0, interval.hi);
            let beyond = Interval::new(interval.hi, f64::INFINITY);
            let leak = Formula::reach(
                inside,
                *metric,
                a.clone(),
                lhs_colors.clone(),
                Formula::not(or(a.clone(), b)),
                ColorSet::All,
            );
            let escape = Formula::escape(beyond, *metric, a.clone(), lhs_colors.clone());
            Formula::and(Formula::and(a, Formula::not(leak)), Formula::not(escape))
        }
    }
}

fn or(a: Formula, b: Formula) -> Formula {
    Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
}
