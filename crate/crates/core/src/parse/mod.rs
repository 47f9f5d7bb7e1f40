//! Text formats: reaction networks, species partitions, state literals and a
//! BioNetGen `.net` subset.
//!
//! Network grammar, one reaction per line:
//!
//! ```text
//! reaction := side "->" side "@" rate
//! side     := "0" | term ("+" term)*
//! term     := [uint] name
//! name     := [A-Za-z_][A-Za-z0-9_.]*
//! rate     := decimal | int "/" posint
//! ```
//!
//! `#` starts a comment. A line `species A B C` declares species that might
//! not occur in any reaction.

mod net;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::crn::{Crn, CrnError, Multiset, Rate, Reaction, SpeciesId, SpeciesPartition, SpeciesTable};

pub use net::import_bngl_net;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: {error}")]
    Crn { line: usize, error: CrnError },
    #[error("line {line}: unknown species `{name}`")]
    UnknownSpecies { line: usize, name: String },
    #[error("line {line}: species `{name}` listed more than once")]
    DuplicateSpecies { line: usize, name: String },
    #[error("line {line}: unsupported .net feature: {message}")]
    UnsupportedNetFeature { line: usize, message: String },
}

impl ParseError {
    fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax { line, column, message: message.into() }
    }
}

/// A parsed network plus the 1-based source line of every reaction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrnDocument {
    pub crn: Crn,
    pub source_lines: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token<'a> {
    Name(&'a str),
    Uint(u64),
    Plus,
    Arrow,
    At,
}

struct Lexed<'a> {
    tokens: Vec<(Token<'a>, usize)>,
    /// Raw text after `@`, with its column.
    rate: Option<(&'a str, usize)>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn lex(text: &str, line: usize) -> Result<Lexed<'_>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let col = |i: usize| text[..chars.get(i).map_or(text.len(), |c| c.0)].chars().count() + 1;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            tokens.push((Token::Plus, col(i)));
            i += 1;
        } else if c == '-' && chars.get(i + 1).map(|c| c.1) == Some('>') {
            tokens.push((Token::Arrow, col(i)));
            i += 2;
        } else if c == '@' {
            tokens.push((Token::At, col(i)));
            let rest = &text[pos + 1..];
            return Ok(Lexed { tokens, rate: Some((rest, col(i) + 1)) });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let end = chars.get(i).map_or(text.len(), |c| c.0);
            let n = text[pos..end]
                .parse()
                .map_err(|_| ParseError::syntax(line, col(start), "multiplicity out of range"))?;
            tokens.push((Token::Uint(n), col(start)));
        } else if is_name_start(c) {
            let start = i;
            while i < chars.len() && is_name_char(chars[i].1) {
                i += 1;
            }
            let end = chars.get(i).map_or(text.len(), |c| c.0);
            tokens.push((Token::Name(&text[pos..end]), col(start)));
        } else {
            return Err(ParseError::syntax(line, col(i), format!("unexpected character `{c}`")));
        }
    }
    Ok(Lexed { tokens, rate: None })
}

/// Parses `side` from a token slice; `end_col` is used for errors at the end
/// of input. Returns `(name, multiplicity)` terms.
fn parse_side<'a>(
    tokens: &[(Token<'a>, usize)],
    line: usize,
    end_col: usize,
) -> Result<Vec<(&'a str, u64)>, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::syntax(line, end_col, "empty side; write `0` for no species"));
    }
    if let [(Token::Uint(0), _)] = tokens {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    let mut i = 0;
    loop {
        let mut k = 1;
        if let Some((Token::Uint(n), c)) = tokens.get(i) {
            if *n == 0 {
                return Err(ParseError::syntax(line, *c, "zero multiplicity"));
            }
            k = *n;
            i += 1;
        }
        match tokens.get(i) {
            Some((Token::Name(name), _)) => {
                terms.push((*name, k));
                i += 1;
            }
            Some((_, c)) => return Err(ParseError::syntax(line, *c, "expected species name")),
            None => return Err(ParseError::syntax(line, end_col, "expected species name")),
        }
        match tokens.get(i) {
            None => return Ok(terms),
            Some((Token::Plus, c)) => {
                if i + 1 == tokens.len() {
                    return Err(ParseError::syntax(line, *c + 1, "dangling `+`"));
                }
                i += 1;
            }
            Some((_, c)) => return Err(ParseError::syntax(line, *c, "expected `+`")),
        }
    }
}

struct RawReaction<'a> {
    line: usize,
    reagents: Vec<(&'a str, u64)>,
    products: Vec<(&'a str, u64)>,
    rate: Rate,
}

fn parse_reaction_line(text: &str, line: usize) -> Result<RawReaction<'_>, ParseError> {
    let lexed = lex(text, line)?;
    let end_col = text.chars().count() + 1;
    let Some((rate_text, rate_col)) = lexed.rate else {
        return Err(ParseError::syntax(line, end_col, "missing `@ rate`"));
    };
    let toks = &lexed.tokens[..lexed.tokens.len() - 1];
    let at_col = lexed.tokens.last().map_or(end_col, |t| t.1);
    let arrows: Vec<usize> = toks.iter().enumerate().filter(|(_, t)| t.0 == Token::Arrow).map(|(i, _)| i).collect();
    let arrow = match arrows.as_slice() {
        [a] => *a,
        [] => return Err(ParseError::syntax(line, 1, "missing `->`")),
        [_, b, ..] => return Err(ParseError::syntax(line, toks[*b].1, "more than one `->`")),
    };
    let reagents = parse_side(&toks[..arrow], line, toks[arrow].1)?;
    let products = parse_side(&toks[arrow + 1..], line, at_col)?;
    let trimmed = rate_text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::syntax(line, rate_col, "missing rate"));
    }
    let lead = rate_text.len() - rate_text.trim_start().len();
    let rate = trimmed
        .parse::<Rate>()
        .map_err(|e| ParseError::syntax(line, rate_col + rate_text[..lead].chars().count(), e.to_string()))?;
    Ok(RawReaction { line, reagents, products, rate })
}

/// Splits on whitespace and commas, yielding byte offsets with each piece.
fn split_names(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut pieces = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        let sep = c.is_whitespace() || c == ',';
        match (sep, start) {
            (true, Some(s)) => {
                pieces.push((s, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        pieces.push((s, &text[s..]));
    }
    pieces.into_iter()
}

fn check_name(name: &str, line: usize, column: usize) -> Result<(), ParseError> {
    let mut chars = name.chars();
    let ok = chars.next().is_some_and(is_name_start) && chars.all(is_name_char);
    if ok {
        Ok(())
    } else {
        Err(ParseError::syntax(line, column, format!("invalid species name `{name}`")))
    }
}

/// Parses the network text format. The result has passed
/// [`Crn::validate_elementary`].
pub fn parse_crn(text: &str) -> Result<CrnDocument, ParseError> {
    let mut declared: Vec<&str> = Vec::new();
    let mut raw = Vec::new();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(full.strip_suffix('\r').unwrap_or(full));
        if body.trim().is_empty() {
            continue;
        }
        let lead = body.len() - body.trim_start().len();
        let trimmed = body.trim_start();
        if let Some(rest) = trimmed.strip_prefix("species") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                let base = lead + "species".len();
                for (start, piece) in split_names(rest) {
                    let column = body[..base + start].chars().count() + 1;
                    check_name(piece, line, column)?;
                    declared.push(piece);
                }
                continue;
            }
        }
        raw.push(parse_reaction_line(body, line)?);
    }
    let names: BTreeSet<&str> = declared
        .iter()
        .copied()
        .chain(raw.iter().flat_map(|r| r.reagents.iter().chain(&r.products).map(|t| t.0)))
        .collect();
    let table = SpeciesTable::new(names);
    let side = |terms: &[(&str, u64)]| Multiset::from_counts(terms.iter().map(|&(n, k)| (table.id(n).unwrap(), k)));
    let mut reactions = Vec::with_capacity(raw.len());
    let mut source_lines = Vec::with_capacity(raw.len());
    for r in &raw {
        reactions.push(Reaction::new(side(&r.reagents), side(&r.products), r.rate.clone()));
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

/// Serializes a network. Species not occurring in any reaction are listed on
/// a leading `species` line so that parsing gives back the same network.
pub fn write_crn(crn: &Crn) -> String {
    let mut out = String::new();
    let mut used = vec![false; crn.num_species()];
    for r in &crn.reactions {
        for (x, _) in r.reagents.iter().chain(r.products.iter()) {
            used[x.index()] = true;
        }
    }
    let unused: Vec<&str> =
        crn.species.ids().filter(|x| !used[x.index()]).map(|x| crn.species.name(x)).collect();
    if !unused.is_empty() {
        let _ = writeln!(out, "species {}", unused.join(" "));
    }
    for r in &crn.reactions {
        let _ = writeln!(out, "{}", r.display(&crn.species));
    }
    out
}

/// One block per non-blank line, species separated by spaces or commas.
/// Species not listed anywhere become singleton blocks.
pub fn parse_partition(text: &str, crn: &Crn) -> Result<SpeciesPartition, ParseError> {
    let n = crn.num_species();
    let mut assigned = vec![false; n];
    let mut blocks: Vec<Vec<SpeciesId>> = Vec::new();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(full);
        let mut block = Vec::new();
        for name in body.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()) {
            let x = crn
                .species
                .id(name)
                .ok_or_else(|| ParseError::UnknownSpecies { line, name: name.to_string() })?;
            if assigned[x.index()] {
                return Err(ParseError::DuplicateSpecies { line, name: name.to_string() });
            }
            assigned[x.index()] = true;
            block.push(x);
        }
        if !block.is_empty() {
            blocks.push(block);
        }
    }
    for x in crn.species.ids() {
        if !assigned[x.index()] {
            blocks.push(vec![x]);
        }
    }
    Ok(SpeciesPartition::from_blocks(n, blocks).expect("blocks cover every species exactly once"))
}

pub fn write_partition(p: &SpeciesPartition, table: &SpeciesTable) -> String {
    let mut out = String::new();
    for b in p.blocks() {
        let names: Vec<&str> = b.iter().map(|&x| table.name(x)).collect();
        let _ = writeln!(out, "{}", names.join(" "));
    }
    out
}

/// Parses `2A + C + D` (spaces optional) or `0`.
pub fn parse_state(text: &str, crn: &Crn) -> Result<Multiset, ParseError> {
    let body = strip_comment(text).trim_end_matches(['\r', '\n']);
    let lexed = lex(body, 1)?;
    if let Some((_, c)) = lexed.tokens.iter().find(|t| matches!(t.0, Token::Arrow | Token::At)) {
        return Err(ParseError::syntax(1, *c, "unexpected token in state"));
    }
    let end_col = body.chars().count() + 1;
    let terms = parse_side(&lexed.tokens, 1, end_col)?;
    let mut counts = Vec::with_capacity(terms.len());
    for (name, k) in terms {
        let x = crn
            .species
            .id(name)
            .ok_or_else(|| ParseError::UnknownSpecies { line: 1, name: name.to_string() })?;
        counts.push((x, k));
    }
    Ok(Multiset::from_counts(counts))
}
