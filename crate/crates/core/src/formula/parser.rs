use super::{Atom, ColorSet, Comparator, Formula, Interval};
use crate::scene::{Metric, Signal};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub message: String,
    /// Byte offset into the source text.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}:{}", self.message, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    At,
    Star,
    Bang,
    Amp,
    Pipe,
    Gt,
    Lt,
    Number(f64),
    Ident(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number {n}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Eof => "end of input".into(),
            other => {
                let c = match other {
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBracket => "[",
                    Tok::RBracket => "]",
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::Comma => ",",
                    Tok::At => "@",
                    Tok::Star => "*",
                    Tok::Bang => "!",
                    Tok::Amp => "&",
                    Tok::Pipe => "|",
                    Tok::Gt => ">",
                    _ => "<",
                };
                format!("'{c}'")
            }
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, (String, usize)> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b',' => Some(Tok::Comma),
            b'@' => Some(Tok::At),
            b'*' => Some(Tok::Star),
            b'!' => Some(Tok::Bang),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Pipe),
            b'>' => Some(Tok::Gt),
            b'<' => Some(Tok::Lt),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, i));
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' || ((c == b'-' || c == b'+') && i + 1 < bytes.len()) {
            if c == b'-' || c == b'+' {
                i += 1;
                if src[i..].starts_with("inf") {
                    i += 3;
                    let v = if c == b'-' { f64::NEG_INFINITY } else { f64::INFINITY };
                    out.push((Tok::Number(v), start));
                    continue;
                }
            }
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| (format!("invalid number '{text}'"), start))?;
            out.push((Tok::Number(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let ch = src[i..].chars().next().unwrap_or('?');
        return Err((format!("unexpected character '{ch}'"), i));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses one formula from DSL text.
pub fn parse(src: &str) -> Result<Formula, ParseError> {
    let make_err = |message: String, offset: usize| {
        let (line, column) = position(src, offset);
        ParseError {
            message,
            offset,
            line,
            column,
        }
    };
    let toks = lex(src).map_err(|(m, o)| make_err(m, o))?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.temporal().and_then(|f| {
        if p.peek() == &Tok::Eof {
            Ok(f)
        } else {
            Err((format!("unexpected {}", p.peek().describe()), p.offset()))
        }
    });
    f.map_err(|(m, o)| make_err(m, o))
}

type PResult<T> = Result<T, (String, usize)>;

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

/// An operand together with its outermost color annotation, if any.
struct Annotated {
    formula: Formula,
    colors: Option<ColorSet>,
}

impl Annotated {
    fn bare(formula: Formula) -> Self {
        Self { formula, colors: None }
    }

    fn into_operand(self) -> (Formula, ColorSet) {
        (self.formula, self.colors.unwrap_or(ColorSet::All))
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err((
                format!("expected {what}, found {}", self.peek().describe()),
                self.offset(),
            ))
        }
    }

    /// Keyword operator `name` directly followed by `[`.
    fn at_keyword(&self, names: &[&str]) -> Option<String> {
        match (self.peek(), self.peek_at(1)) {
            (Tok::Ident(s), Tok::LBracket) if names.contains(&s.as_str()) => Some(s.clone()),
            _ => None,
        }
    }

    fn temporal(&mut self) -> PResult<Formula> {
        let mut lhs = self.or()?;
        while self.at_keyword(&["U"]).is_some() {
            self.bump();
            let interval = self.interval()?;
            let rhs = self.or()?;
            lhs = Formula::until(interval, lhs, rhs);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut lhs = self.spatial()?.formula;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.spatial()?.formula;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn spatial(&mut self) -> PResult<Annotated> {
        let mut lhs = self.unary()?;
        while let Some(kw) = self.at_keyword(&["R", "Surr"]) {
            let kw_offset = self.offset();
            self.bump();
            let interval = self.interval()?;
            let metric = self.metric()?;
            let (l, lc) = lhs.into_operand();
            let (r, rc) = self.unary()?.into_operand();
            let f = if kw == "R" {
                Formula::reach(interval, metric, l, lc, r, rc)
            } else {
                if interval.lo != 0.0 || !interval.hi.is_finite() {
                    return Err(("surround interval must be [0,d] with finite d".into(), kw_offset));
                }
                Formula::surround(interval, metric, l, lc, r, rc)
            };
            lhs = Annotated::bare(f);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Annotated> {
        if *self.peek() == Tok::Bang {
            self.bump();
            let body = self.unary()?.formula;
            return Ok(Annotated::bare(Formula::not(body)));
        }
        if let Some(kw) = self.at_keyword(&["F", "G"]) {
            self.bump();
            let interval = self.interval()?;
            let body = self.temporal()?;
            let f = if kw == "F" {
                Formula::eventually(interval, body)
            } else {
                Formula::globally(interval, body)
            };
            return Ok(Annotated::bare(f));
        }
        if let Some(kw) = self.at_keyword(&["E", "SW", "EW"]) {
            self.bump();
            let interval = self.interval()?;
            let metric = self.metric()?;
            let (body, colors) = self.unary()?.into_operand();
            let f = match kw.as_str() {
                "E" => Formula::escape(interval, metric, body, colors),
                "SW" => Formula::somewhere(interval, metric, body, colors),
                _ => Formula::everywhere(interval, metric, body, colors),
            };
            return Ok(Annotated::bare(f));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Annotated> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Annotated::bare(Formula::True))
            }
            Tok::LParen => {
                if matches!(self.peek_at(1), Tok::Ident(_)) && matches!(self.peek_at(2), Tok::Gt | Tok::Lt) {
                    return self.atom();
                }
                self.bump();
                let inner = self.temporal()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unclosed(offset));
                }
                self.bump();
                let colors = if *self.peek() == Tok::At {
                    Some(self.colors()?)
                } else {
                    None
                };
                // Only meaningful when this is a spatial operand; dropped elsewhere.
                Ok(Annotated { formula: inner, colors })
            }
            Tok::Eof => Err(("unexpected end of input".into(), offset)),
            other => Err((format!("unexpected {}", other.describe()), offset)),
        }
    }

    fn unclosed(&self, open: usize) -> (String, usize) {
        if *self.peek() == Tok::Eof {
            ("unclosed parenthesis".into(), open)
        } else {
            (format!("expected ')', found {}", self.peek().describe()), self.offset())
        }
    }

    fn atom(&mut self) -> PResult<Annotated> {
        let open = self.offset();
        self.bump();
        let sig_offset = self.offset();
        let Tok::Ident(name) = self.bump() else {
            unreachable!("checked by caller")
        };
        let signal: Signal = name
            .parse()
            .map_err(|_| (format!("unknown signal '{name}'"), sig_offset))?;
        let comparator = match self.bump() {
            Tok::Gt => Comparator::Greater,
            _ => Comparator::Less,
        };
        let threshold = match self.peek().clone() {
            Tok::Number(v) if v.is_finite() => {
                self.bump();
                v
            }
            other => return Err((format!("expected threshold, found {}", other.describe()), self.offset())),
        };
        if *self.peek() != Tok::RParen {
            return Err(self.unclosed(open));
        }
        self.bump();
        if *self.peek() != Tok::At {
            return Err(("atom requires a color annotation '@{...}'".into(), self.offset()));
        }
        let colors = self.colors()?;
        Ok(Annotated {
            formula: Formula::Atom(Atom::new(signal, comparator, threshold, colors.clone())),
            colors: Some(colors),
        })
    }

    fn colors(&mut self) -> PResult<ColorSet> {
        self.expect(Tok::At, "'@'")?;
        let open = self.offset();
        self.expect(Tok::LBrace, "'{'")?;
        if *self.peek() == Tok::Star {
            self.bump();
            self.expect(Tok::RBrace, "'}'")?;
            return Ok(ColorSet::All);
        }
        if *self.peek() == Tok::RBrace {
            return Err(("empty color set".into(), open));
        }
        let mut set = BTreeSet::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(c) => {
                    self.bump();
                    set.insert(c);
                }
                other => {
                    return Err((
                        format!("expected color name, found {}", other.describe()),
                        self.offset(),
                    ))
                }
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {
                    self.bump();
                    return Ok(ColorSet::Only(set));
                }
                other => {
                    return Err((
                        format!("expected ',' or '}}', found {}", other.describe()),
                        self.offset(),
                    ))
                }
            }
        }
    }

    fn number(&mut self, infinite_ok: bool) -> PResult<f64> {
        let offset = self.offset();
        let v = match self.peek() {
            Tok::Number(v) if v.is_finite() || (infinite_ok && *v == f64::INFINITY) => *v,
            Tok::Ident(s) if infinite_ok && s == "inf" => f64::INFINITY,
            other => return Err((format!("expected bound, found {}", other.describe()), offset)),
        };
        self.bump();
        Ok(v)
    }

    fn interval(&mut self) -> PResult<Interval> {
        let open = self.offset();
        self.expect(Tok::LBracket, "'['")?;
        let lo = self.number(false)?;
        self.expect(Tok::Comma, "','")?;
        let hi = self.number(true)?;
        self.expect(Tok::RBracket, "']'")?;
        let interval = Interval::new(lo, hi);
        if !interval.is_valid() {
            return Err((format!("invalid interval [{lo},{hi}]"), open));
        }
        Ok(interval)
    }

    fn metric(&mut self) -> PResult<Metric> {
        self.expect(Tok::LBrace, "'{'")?;
        let offset = self.offset();
        let m = match self.peek() {
            Tok::Ident(name) => name.parse::<Metric>().map_err(|e| (e, offset))?,
            other => return Err((format!("expected metric name, found {}", other.describe()), offset)),
        };
        self.bump();
        self.expect(Tok::RBrace, "'}'")?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(sig: Signal, cmp: Comparator, th: f64, colors: &[&str]) -> Formula {
        Formula::atom(sig, cmp, th, ColorSet::of(colors.iter().copied()))
    }

    #[test]
    fn fast_finds_slow_ahead() {
        let f = parse("F[0,6] ( (speed > 8)@{car,bus} R[0,10]{front} (speed < 1)@{car,bus} )").unwrap();
        let cb = ColorSet::of(["car", "bus"]);
        let expected = Formula::eventually(
            Interval::new(0.0, 6.0),
            Formula::reach(
                Interval::new(0.0, 10.0),
                Metric::Front,
                atom(Signal::Speed, Comparator::Greater, 8.0, &["car", "bus"]),
                cb.clone(),
                atom(Signal::Speed, Comparator::Less, 1.0, &["bus", "car"]),
                cb,
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn heading_formula() {
        let f = parse("G[0,6] ( (heading_change < 0.5)@{car} )").unwrap();
        assert_eq!(
            f,
            Formula::globally(
                Interval::new(0.0, 6.0),
                atom(Signal::HeadingChange, Comparator::Less, 0.5, &["car"])
            )
        );
    }

    #[test]
    fn unclosed_paren_reports_position() {
        let err = parse("F[0,6] ( (speed > 8)@{car}").unwrap_err();
        assert_eq!(err.message, "unclosed parenthesis");
        assert_eq!((err.line, err.column), (1, 8));
        assert_eq!(err.to_string(), "unclosed parenthesis at 1:8");
    }

    #[test]
    fn precedence_and_associativity() {
        let a = || atom(Signal::X, Comparator::Greater, 0.0, &["car"]);
        let b = || atom(Signal::Y, Comparator::Greater, 0.0, &["car"]);
        let c = || atom(Signal::Vx, Comparator::Greater, 0.0, &["car"]);
        let text = "(x > 0)@{car} | (y > 0)@{car} & (vx > 0)@{car}";
        assert_eq!(parse(text).unwrap(), Formula::or(a(), Formula::and(b(), c())));
        let text = "(x > 0)@{car} U[0,1] (y > 0)@{car} U[0,2] (vx > 0)@{car}";
        let i1 = Interval::new(0.0, 1.0);
        let i2 = Interval::new(0.0, 2.0);
        assert_eq!(
            parse(text).unwrap(),
            Formula::until(i2, Formula::until(i1, a(), b()), c())
        );
        let text = "!(x > 0)@{car} & (y > 0)@{car}";
        assert_eq!(parse(text).unwrap(), Formula::and(Formula::not(a()), b()));
    }

    #[test]
    fn compound_operand_annotation() {
        let f = parse("((speed > 10)@{car} & (speed < 20)@{car})@{car} R[0,5]{euclid} true").unwrap();
        match f {
            Formula::Reach {
                lhs_colors,
                rhs_colors,
                lhs,
                ..
            } => {
                assert_eq!(lhs_colors, ColorSet::of(["car"]));
                assert_eq!(rhs_colors, ColorSet::All);
                assert!(matches!(*lhs, Formula::And(..)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors() {
        assert!(parse("(speed > 1)@{}").unwrap_err().message.contains("empty color set"));
        assert!(parse("(speed > 1)@{car} R[0,1]{manhattan} true")
            .unwrap_err()
            .message
            .contains("unknown metric"));
        assert!(parse("(speed > 1)").unwrap_err().message.contains("color annotation"));
        assert!(parse("(accel > 1)@{car}")
            .unwrap_err()
            .message
            .contains("unknown signal"));
        assert!(parse("F[2,1] true").unwrap_err().message.contains("invalid interval"));
        assert!(parse("true Surr[1,2]{euclid} true").is_err());
        let err = parse("true &\n  & true").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn comments_and_infinity() {
        let f = parse("# escape far away\nE[2,inf]{hops} (speed > 1)@{*} # trailing\n").unwrap();
        assert_eq!(
            f,
            Formula::escape(
                Interval::new(2.0, f64::INFINITY),
                Metric::Hops,
                Formula::atom(Signal::Speed, Comparator::Greater, 1.0, ColorSet::All),
                ColorSet::All
            )
        );
    }
}
