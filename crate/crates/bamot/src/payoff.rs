//! The payoff mini-language: `call(K)`, `put(K)`, `digital(K)`,
//! `risk_reversal(K1,K2)`, `forward_start(K)`, plain numbers as cash, and
//! linear combinations thereof, e.g. `100*digital(6154.05)` or
//! `call(1.05) - put(0.95) + 0.5`.
//!
//! The language is closed by design: no identifiers beyond the five
//! instrument names, no nesting, no user code.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One primitive instrument leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leg {
    Cash,
    Call(f64),
    Put(f64),
    /// 1{x >= K}; pays the full amount at the strike itself (upper
    /// semicontinuous convention).
    Digital(f64),
    /// Two-maturity payoff (x2 - K x1)^+ with K a strike ratio.
    ForwardStart(f64),
}

/// A linear combination of legs. `risk_reversal(K1,K2)` parses into
/// `call(K2) - put(K1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Payoff {
    terms: Vec<(f64, Leg)>,
}

impl Payoff {
    pub fn new(terms: Vec<(f64, Leg)>) -> Result<Self> {
        let p = Self { terms };
        if p.two_maturity() && p.terms.iter().any(|(_, l)| {
            matches!(l, Leg::Call(_) | Leg::Put(_) | Leg::Digital(_))
        }) {
            return Err(Error::Parse(
                "forward_start cannot be combined with single-maturity legs".into(),
            ));
        }
        for (w, l) in &p.terms {
            if !w.is_finite() {
                return Err(Error::Parse(format!("non-finite coefficient {w}")));
            }
            let k = match l {
                Leg::Cash => continue,
                Leg::Call(k) | Leg::Put(k) | Leg::Digital(k) | Leg::ForwardStart(k) => *k,
            };
            if !k.is_finite() || k < 0.0 {
                return Err(Error::Parse(format!("strike {k} must be finite and >= 0")));
            }
        }
        Ok(p)
    }

    pub fn call(k: f64) -> Self {
        Self { terms: vec![(1.0, Leg::Call(k))] }
    }

    pub fn put(k: f64) -> Self {
        Self { terms: vec![(1.0, Leg::Put(k))] }
    }

    pub fn digital(k: f64) -> Self {
        Self { terms: vec![(1.0, Leg::Digital(k))] }
    }

    pub fn risk_reversal(k_put: f64, k_call: f64) -> Self {
        Self {
            terms: vec![(1.0, Leg::Call(k_call)), (-1.0, Leg::Put(k_put))],
        }
    }

    pub fn forward_start(k: f64) -> Self {
        Self { terms: vec![(1.0, Leg::ForwardStart(k))] }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for (w, _) in &mut self.terms {
            *w *= factor;
        }
        self
    }

    pub fn negated(self) -> Self {
        self.scaled(-1.0)
    }

    pub fn terms(&self) -> &[(f64, Leg)] {
        &self.terms
    }

    /// True when the payoff references two maturities (forward-start legs).
    pub fn two_maturity(&self) -> bool {
        self.terms
            .iter()
            .any(|(_, l)| matches!(l, Leg::ForwardStart(_)))
    }

    /// Single-maturity evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(!self.two_maturity());
        self.terms
            .iter()
            .map(|&(w, l)| {
                w * match l {
                    Leg::Cash => 1.0,
                    Leg::Call(k) => (x - k).max(0.0),
                    Leg::Put(k) => (k - x).max(0.0),
                    Leg::Digital(k) => {
                        if x >= k {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Leg::ForwardStart(_) => unreachable!(),
                }
            })
            .sum()
    }

    /// Two-maturity evaluation.
    pub fn eval2(&self, x1: f64, x2: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, l)| {
                w * match l {
                    Leg::Cash => 1.0,
                    Leg::ForwardStart(k) => (x2 - k * x1).max(0.0),
                    _ => unreachable!("single-maturity leg in a two-maturity payoff"),
                }
            })
            .sum()
    }

    /// Points where the payoff is non-smooth (kinks and jumps); constraint
    /// grids must contain them for the finite reduction to be exact.
    pub fn kinks(&self) -> Vec<f64> {
        let mut ks: Vec<f64> = self
            .terms
            .iter()
            .filter_map(|&(w, l)| {
                if w == 0.0 {
                    return None;
                }
                match l {
                    Leg::Call(k) | Leg::Put(k) | Leg::Digital(k) => Some(k),
                    _ => None,
                }
            })
            .collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup();
        ks
    }

    /// Slope of the payoff as x -> infinity (single maturity).
    pub fn terminal_slope(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(w, l)| match l {
                Leg::Call(_) => w,
                _ => 0.0,
            })
            .sum()
    }

    /// Slope of the payoff as x2 -> infinity for fixed x1 (two maturity).
    pub fn terminal_slope_x2(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(w, l)| match l {
                Leg::ForwardStart(_) => w,
                _ => 0.0,
            })
            .sum()
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(w, l)) in self.terms.iter().enumerate() {
            let (sign, mag) = if w < 0.0 { ("-", -w) } else { ("+", w) };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let coef = if mag == 1.0 && !matches!(l, Leg::Cash) {
                String::new()
            } else {
                format!("{mag}*")
            };
            match l {
                Leg::Cash => write!(f, "{mag}")?,
                Leg::Call(k) => write!(f, "{coef}call({k})")?,
                Leg::Put(k) => write!(f, "{coef}put({k})")?,
                Leg::Digital(k) => write!(f, "{coef}digital({k})")?,
                Leg::ForwardStart(k) => write!(f, "{coef}forward_start({k})")?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let text = &s[start..i];
                let v = f64::from_str(text)
                    .map_err(|_| Error::Parse(format!("bad number '{text}'")))?;
                out.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(s[start..i].to_string()));
            }
            other => return Err(Error::Parse(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: &Token, what: &str) -> Result<()> {
        match self.next() {
            Some(ref got) if got == t => Ok(()),
            other => Err(Error::Parse(format!("expected {what}, got {other:?}"))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let neg = matches!(self.peek(), Some(Token::Minus));
        if neg {
            self.next();
        }
        match self.next() {
            Some(Token::Num(v)) => Ok(if neg { -v } else { v }),
            other => Err(Error::Parse(format!("expected a number, got {other:?}"))),
        }
    }

    /// atom := ident '(' number (',' number)? ')'
    fn atom(&mut self, name: &str) -> Result<Vec<(f64, Leg)>> {
        self.expect(&Token::LParen, "'('")?;
        let k1 = self.number()?;
        let legs = match name {
            "call" => vec![(1.0, Leg::Call(k1))],
            "put" => vec![(1.0, Leg::Put(k1))],
            "digital" => vec![(1.0, Leg::Digital(k1))],
            "forward_start" => vec![(1.0, Leg::ForwardStart(k1))],
            "risk_reversal" => {
                self.expect(&Token::Comma, "','")?;
                let k2 = self.number()?;
                vec![(1.0, Leg::Call(k2)), (-1.0, Leg::Put(k1))]
            }
            other => {
                return Err(Error::Parse(format!("unknown instrument '{other}'")));
            }
        };
        if name == "risk_reversal" {
            self.expect(&Token::RParen, "')'")?;
            return Ok(legs);
        }
        self.expect(&Token::RParen, "')'")?;
        Ok(legs)
    }

    /// term := number '*' atom | atom | number
    fn term(&mut self) -> Result<Vec<(f64, Leg)>> {
        match self.next() {
            Some(Token::Num(v)) => {
                if matches!(self.peek(), Some(Token::Star)) {
                    self.next();
                    match self.next() {
                        Some(Token::Ident(name)) => {
                            let mut legs = self.atom(&name)?;
                            for (w, _) in &mut legs {
                                *w *= v;
                            }
                            Ok(legs)
                        }
                        other => Err(Error::Parse(format!(
                            "expected an instrument after '*', got {other:?}"
                        ))),
                    }
                } else {
                    Ok(vec![(v, Leg::Cash)])
                }
            }
            Some(Token::Ident(name)) => self.atom(&name),
            other => Err(Error::Parse(format!("expected a term, got {other:?}"))),
        }
    }

    /// expr := ('-')? term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Vec<(f64, Leg)>> {
        let mut sign = 1.0;
        if matches!(self.peek(), Some(Token::Minus)) {
            self.next();
            sign = -1.0;
        }
        let mut terms = self.term()?;
        for (w, _) in &mut terms {
            *w *= sign;
        }
        loop {
            let sign = match self.peek() {
                Some(Token::Plus) => 1.0,
                Some(Token::Minus) => -1.0,
                None => break,
                other => {
                    return Err(Error::Parse(format!("expected '+' or '-', got {other:?}")))
                }
            };
            self.next();
            let mut more = self.term()?;
            for (w, _) in &mut more {
                *w *= sign;
            }
            terms.extend(more);
        }
        Ok(terms)
    }
}

impl FromStr for Payoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        if tokens.is_empty() {
            return Err(Error::Parse("empty payoff".into()));
        }
        let mut p = Parser { tokens, pos: 0 };
        let terms = p.expr()?;
        Payoff::new(terms)
    }
}
