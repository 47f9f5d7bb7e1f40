//! Best-effort import of BioNetGen `.net` files.
//!
//! Reads the `parameters`, `species` and `reactions` blocks. Rate
//! expressions must fold to constants: numeric literals, parameter names and
//! `+ - * / ^` with parentheses. Functional rate laws, compartments and fixed
//! species are rejected.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{CrnDocument, ParseError};
use crate::crn::{Crn, CrnError, Multiset, Rate, Reaction, SpeciesId, SpeciesTable};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    None,
    Parameters,
    Species,
    Reactions,
    Functions,
    Ignored,
}

fn unsupported(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::UnsupportedNetFeature { line, message: message.into() }
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, column: 1, message: message.into() }
}

struct RawReaction {
    line: usize,
    reagents: Vec<usize>,
    products: Vec<usize>,
    rate: String,
}

/// Imports the constant mass-action subset of a BioNetGen `.net` network.
pub fn import_bngl_net(text: &str) -> Result<CrnDocument, ParseError> {
    let mut block = Block::None;
    let mut params: Vec<(String, String, usize)> = Vec::new();
    let mut species: Vec<(usize, String, usize)> = Vec::new();
    let mut raw: Vec<RawReaction> = Vec::new();

    let mut pending = String::new();
    let mut pending_line = 0;
    for (i, full) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = full.split('#').next().unwrap_or("").trim_end_matches('\r');
        if pending.is_empty() {
            pending_line = line_no;
        }
        if let Some(head) = body.trim_end().strip_suffix('\\') {
            pending.push_str(head);
            pending.push(' ');
            continue;
        }
        pending.push_str(body);
        let logical = std::mem::take(&mut pending);
        let line = pending_line;
        let words: Vec<&str> = logical.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        match words[0] {
            "begin" => {
                if block != Block::None {
                    if words.get(1) == Some(&"model") {
                        continue;
                    }
                    return Err(syntax(line, "nested `begin`"));
                }
                let name = words[1..].join(" ");
                block = match name.as_str() {
                    "parameters" => Block::Parameters,
                    "species" | "seed species" => Block::Species,
                    "reactions" => Block::Reactions,
                    "model" => Block::None,
                    "functions" => Block::Functions,
                    "compartments" => return Err(unsupported(line, "compartments")),
                    "" => return Err(syntax(line, "`begin` without block name")),
                    _ => Block::Ignored,
                };
            }
            "end" => {
                if block == Block::None && words.get(1) != Some(&"model") {
                    return Err(syntax(line, "`end` without `begin`"));
                }
                block = Block::None;
            }
            _ => match block {
                Block::None => return Err(syntax(line, "content outside of a block")),
                Block::Ignored => {}
                Block::Functions => return Err(unsupported(line, "functional rate laws (`begin functions`)")),
                Block::Parameters => {
                    let (name, expr) = match words.as_slice() {
                        [idx, name, rest @ ..] if !rest.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) => {
                            (*name, rest.join(" "))
                        }
                        [name, rest @ ..] if !rest.is_empty() => (*name, rest.join(" ")),
                        _ => return Err(syntax(line, "expected `[index] name value`")),
                    };
                    params.push((name.to_string(), expr, line));
                }
                Block::Species => {
                    let (idx, name) = match words.as_slice() {
                        [idx, name, ..] => (*idx, *name),
                        _ => return Err(syntax(line, "expected `index name population`")),
                    };
                    let idx: usize = idx.parse().map_err(|_| syntax(line, format!("bad species index `{idx}`")))?;
                    if name.starts_with('$') {
                        return Err(unsupported(line, format!("fixed species `{name}`")));
                    }
                    if name.contains('@') || name.contains("::") {
                        return Err(unsupported(line, format!("compartment in species `{name}`")));
                    }
                    species.push((idx, name.to_string(), line));
                }
                Block::Reactions => {
                    let [_, reagents, products, rate @ ..] = words.as_slice() else {
                        return Err(syntax(line, "expected `index reactants products rate`"));
                    };
                    if rate.is_empty() {
                        return Err(syntax(line, "missing rate"));
                    }
                    raw.push(RawReaction {
                        line,
                        reagents: parse_index_list(reagents, line)?,
                        products: parse_index_list(products, line)?,
                        rate: rate.join(""),
                    });
                }
            },
        }
    }
    if block != Block::None {
        return Err(syntax(text.lines().count().max(1), "unterminated block"));
    }

    let names = sanitize_names(&species);
    let table = SpeciesTable::new(names.values().cloned());
    let id_of = |idx: usize, line: usize| -> Result<SpeciesId, ParseError> {
        names
            .get(&idx)
            .and_then(|n| table.id(n))
            .ok_or_else(|| syntax(line, format!("reaction refers to undeclared species index {idx}")))
    };

    let mut env = Env::new(&params);
    let mut reactions = Vec::with_capacity(raw.len());
    let mut source_lines = Vec::with_capacity(raw.len());
    for r in &raw {
        let to_multiset = |list: &[usize]| -> Result<Multiset, ParseError> {
            let ids = list.iter().map(|&i| id_of(i, r.line).map(|x| (x, 1))).collect::<Result<Vec<_>, _>>()?;
            Ok(Multiset::from_counts(ids))
        };
        let rate = env.eval_text(&r.rate, r.line)?;
        reactions.push(Reaction::new(to_multiset(&r.reagents)?, to_multiset(&r.products)?, Rate::from_big(rate)));
        source_lines.push(r.line);
    }
    let crn = Crn { species: table, reactions };
    crn.validate_elementary().map_err(|e| {
        let idx = match &e {
            CrnError::NonElementary { reaction, .. }
            | CrnError::NegativeRate { reaction, .. }
            | CrnError::UndeclaredSpecies { reaction, .. } => *reaction,
        };
        ParseError::Crn { line: source_lines[idx], error: e }
    })?;
    Ok(CrnDocument { crn, source_lines })
}

fn parse_index_list(s: &str, line: usize) -> Result<Vec<usize>, ParseError> {
    let mut out = Vec::new();
    for piece in s.split(',') {
        let idx: usize = piece.parse().map_err(|_| syntax(line, format!("bad species index list `{s}`")))?;
        if idx != 0 {
            out.push(idx);
        }
    }
    Ok(out)
}

/// Maps BioNetGen species strings such as `A(b~P)` to names valid in the
/// network grammar. Collisions get the species index appended.
fn sanitize_names(species: &[(usize, String, usize)]) -> HashMap<usize, String> {
    let mut out = HashMap::new();
    let mut taken: HashMap<String, usize> = HashMap::new();
    for (idx, raw, _) in species {
        let mut name: String =
            raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' }).collect();
        while name.ends_with('_') && name.len() > 1 {
            name.pop();
        }
        if !name.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            name = format!("S{name}");
        }
        if taken.contains_key(&name) {
            name = format!("{name}_{idx}");
        }
        while taken.contains_key(&name) {
            name.push('_');
        }
        taken.insert(name.clone(), *idx);
        out.insert(*idx, name);
    }
    out
}

/// Parameter environment with lazy, cycle-checked evaluation.
struct Env<'a> {
    defs: HashMap<&'a str, (&'a str, usize)>,
    values: HashMap<String, BigRational>,
    active: Vec<String>,
}

impl<'a> Env<'a> {
    fn new(params: &'a [(String, String, usize)]) -> Self {
        Env {
            defs: params.iter().map(|(n, e, l)| (n.as_str(), (e.as_str(), *l))).collect(),
            values: HashMap::new(),
            active: Vec::new(),
        }
    }

    fn lookup(&mut self, name: &str, line: usize) -> Result<BigRational, ParseError> {
        if let Some(v) = self.values.get(name) {
            return Ok(v.clone());
        }
        let Some(&(expr, def_line)) = self.defs.get(name) else {
            return Err(unsupported(line, format!("`{name}` is not a constant parameter (functional rate law?)")));
        };
        if self.active.iter().any(|a| a == name) {
            return Err(syntax(def_line, format!("parameter `{name}` is defined in terms of itself")));
        }
        self.active.push(name.to_string());
        let v = self.eval_text(expr, def_line);
        self.active.pop();
        let v = v?;
        self.values.insert(name.to_string(), v.clone());
        Ok(v)
    }

    fn eval_text(&mut self, text: &str, line: usize) -> Result<BigRational, ParseError> {
        let tokens = tokenize(text, line)?;
        let mut p = ExprParser { tokens: &tokens, pos: 0, line };
        let v = p.expr(self)?;
        if p.pos != tokens.len() {
            return Err(syntax(line, format!("trailing input in expression `{text}`")));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, ParseError> {
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
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let r: Rate = lit.parse().map_err(|_| syntax(line, format!("bad number `{lit}`")))?;
            out.push(Tok::Num(r.as_big().clone()));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c == '*' && chars.get(i + 1) == Some(&'*') {
            out.push(Tok::Op('^'));
            i += 2;
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(syntax(line, format!("unexpected character `{c}` in rate expression")));
        }
    }
    Ok(out)
}

struct ExprParser<'t> {
    tokens: &'t [Tok],
    pos: usize,
    line: usize,
}

impl ExprParser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self, env: &mut Env) -> Result<BigRational, ParseError> {
        let mut v = self.term(env)?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term(env)?;
            v = if op == '+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn term(&mut self, env: &mut Env) -> Result<BigRational, ParseError> {
        let mut v = self.unary(env)?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary(env)?;
            if op == '*' {
                v *= rhs;
            } else {
                if rhs.is_zero() {
                    return Err(syntax(self.line, "division by zero in rate expression"));
                }
                v /= rhs;
            }
        }
        Ok(v)
    }

    fn unary(&mut self, env: &mut Env) -> Result<BigRational, ParseError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary(env)?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary(env)
            }
            _ => self.power(env),
        }
    }

    fn power(&mut self, env: &mut Env) -> Result<BigRational, ParseError> {
        let base = self.atom(env)?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary(env)?;
            if !exp.is_integer() || exp.numer().bits() > 12 {
                return Err(unsupported(self.line, "non-integer or huge exponent in rate expression"));
            }
            let e: i32 = exp.to_integer().try_into().unwrap_or(0);
            if base.is_zero() && e < 0 {
                return Err(syntax(self.line, "division by zero in rate expression"));
            }
            let mut acc = BigRational::one();
            for _ in 0..e.unsigned_abs() {
                acc *= &base;
            }
            return Ok(if e < 0 { acc.recip() } else { acc });
        }
        Ok(base)
    }

    fn atom(&mut self, env: &mut Env) -> Result<BigRational, ParseError> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek_op() == Some('(') {
                    return Err(unsupported(self.line, format!("function call `{name}(...)` in rate")));
                }
                env.lookup(&name, self.line)
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let v = self.expr(env)?;
                if self.peek_op() != Some(')') {
                    return Err(syntax(self.line, "missing `)` in rate expression"));
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err(syntax(self.line, "malformed rate expression")),
        }
    }
}
