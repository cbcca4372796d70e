use std::sync::Arc;

use super::{Coeff, Poly, VarSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a Arc<VarSet>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr<C: Coeff>(&mut self) -> Result<Poly<C>> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.product()?;
            } else if self.eat('-') {
                acc = &acc - &self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product<C: Coeff>(&mut self) -> Result<Poly<C>> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary::<C>()?;
                let c = d
                    .constant_value()
                    .filter(|c| !c.is_zero())
                    .ok_or_else(|| Error::Parse("division by a non-constant or zero".into()))?;
                acc = acc.scale(&(C::one() / c));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary<C: Coeff>(&mut self) -> Result<Poly<C>> {
        if self.eat('-') {
            return Ok(-self.unary::<C>()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom::<C>()?;
        if self.eat('^') {
            match self.peek().cloned() {
                Some(Tok::Num(s)) => {
                    self.pos += 1;
                    let k: u32 = s
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad exponent `{s}`")))?;
                    Ok(base.pow(k))
                }
                _ => Err(Error::Parse("exponent must be a non-negative integer".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn atom<C: Coeff>(&mut self) -> Result<Poly<C>> {
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                let c = C::parse_literal(&s)
                    .ok_or_else(|| Error::Parse(format!("bad number `{s}`")))?;
                Ok(Poly::constant(self.vars, c))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Poly::var(self.vars, &name)
                    .map_err(|_| Error::Parse(format!("unknown variable `{name}`")))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let p = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing `)`".into()));
                }
                Ok(p)
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

pub(super) fn parse_poly<C: Coeff>(vars: &Arc<VarSet>, text: &str) -> Result<Poly<C>> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut p = Parser { toks, pos: 0, vars };
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input at token {}", p.pos)));
    }
    Ok(out)
}
