use super::{ColorSet, Formula, Interval};
use crate::scene::{GraphConfig, Metric, SpatioTemporalTrace};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    UnknownColor(String),
    EmptyColorSet,
    TemporalBoundExceedsHorizon { bound: f64, limit: f64 },
    UndeclaredMetric(Metric),
    InvalidInterval(Interval),
    SurroundInterval(Interval),
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::UnknownColor(c) => write!(f, "unknown color '{c}'"),
            ValidationError::EmptyColorSet => f.write_str("empty color set"),
            ValidationError::TemporalBoundExceedsHorizon { bound, limit } => {
                write!(f, "temporal bound exceeds horizon ({bound} > {limit})")
            }
            ValidationError::UndeclaredMetric(m) => write!(f, "metric '{m}' is not declared in the graph config"),
            ValidationError::InvalidInterval(i) => write!(f, "invalid interval [{},{}]", i.lo, i.hi),
            ValidationError::SurroundInterval(i) => {
                write!(
                    f,
                    "surround interval must be [0,d] with finite d, got [{},{}]",
                    i.lo, i.hi
                )
            }
        }
    }
}

/// Checks a formula against a trace and graph configuration, collecting every problem.
pub fn validate(f: &Formula, trace: &SpatioTemporalTrace, cfg: &GraphConfig) -> Result<(), Vec<ValidationError>> {
    let mut errors = Vec::new();
    let limit = trace.horizon() as f64 * trace.dt();
    walk(f, trace, cfg, limit, &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn push_unique(errors: &mut Vec<ValidationError>, e: ValidationError) {
    if !errors.contains(&e) {
        errors.push(e);
    }
}

fn walk(f: &Formula, trace: &SpatioTemporalTrace, cfg: &GraphConfig, limit: f64, errors: &mut Vec<ValidationError>) {
    let check_colors = |cs: &ColorSet, errors: &mut Vec<ValidationError>| {
        if let ColorSet::Only(set) = cs {
            if set.is_empty() {
                push_unique(errors, ValidationError::EmptyColorSet);
            }
            for c in set {
                if !trace.colors().iter().any(|u| u == c) {
                    push_unique(errors, ValidationError::UnknownColor(c.clone()));
                }
            }
        }
    };
    let check_interval = |i: &Interval, errors: &mut Vec<ValidationError>| {
        if !i.is_valid() {
            push_unique(errors, ValidationError::InvalidInterval(*i));
        }
    };
    let check_temporal = |i: &Interval, errors: &mut Vec<ValidationError>| {
        check_interval(i, errors);
        let tol = 1e-9 * limit.max(1.0);
        for bound in [i.lo, i.hi] {
            if bound.is_finite() && bound > limit + tol {
                push_unique(errors, ValidationError::TemporalBoundExceedsHorizon { bound, limit });
            }
        }
    };
    let check_metric = |m: &Metric, errors: &mut Vec<ValidationError>| {
        if !cfg.declares(*m) {
            push_unique(errors, ValidationError::UndeclaredMetric(*m));
        }
    };
    match f {
        Formula::Atom(a) => check_colors(&a.colors, errors),
        Formula::Until { interval, .. } | Formula::Eventually { interval, .. } | Formula::Globally { interval, .. } => {
            check_temporal(interval, errors)
        }
        Formula::Reach {
            interval,
            metric,
            lhs_colors,
            rhs_colors,
            ..
        } => {
            check_interval(interval, errors);
            check_metric(metric, errors);
            check_colors(lhs_colors, errors);
            check_colors(rhs_colors, errors);
        }
        Formula::Surround {
            interval,
            metric,
            lhs_colors,
            rhs_colors,
            ..
        } => {
            check_interval(interval, errors);
            if interval.lo != 0.0 || !interval.hi.is_finite() {
                push_unique(errors, ValidationError::SurroundInterval(*interval));
            }
            check_metric(metric, errors);
            check_colors(lhs_colors, errors);
            check_colors(rhs_colors, errors);
        }
        Formula::Escape {
            interval,
            metric,
            colors,
            ..
        }
        | Formula::Somewhere {
            interval,
            metric,
            colors,
            ..
        }
        | Formula::Everywhere {
            interval,
            metric,
            colors,
            ..
        } => {
            check_interval(interval, errors);
            check_metric(metric, errors);
            check_colors(colors, errors);
        }
        Formula::True | Formula::Not(_) | Formula::And(..) | Formula::Or(..) => {}
    }
    for c in f.children() {
        walk(c, trace, cfg, limit, errors);
    }
}
