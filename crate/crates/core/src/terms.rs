//! Magma terms and equations.
//!
//! A [`Term`] is a binary tree whose leaves are variables and whose internal
//! nodes are applications of the single magma operation. Text uses ASCII `*`
//! for the operation (`⋄` and `◇` are accepted on input). The operation is not
//! associative, so every nested application must be parenthesized; only the
//! outermost application of a term may be written bare.
//!
//! An [`Equation`] is always stored in canonical form, which makes value
//! equality coincide with "same law up to renaming of variables and symmetry
//! of equality".

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Names used when printing variables 0..6; later indices print as `x6`, `x7`, ...
pub const VAR_ALPHABET: [&str; 6] = ["x", "y", "z", "w", "u", "v"];

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(u8),
    App(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(index: u8) -> Term {
        Term::Var(index)
    }

    pub fn app(left: Term, right: Term) -> Term {
        Term::App(Box::new(left), Box::new(right))
    }

    /// Number of application nodes.
    pub fn op_count(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(l, r) => 1 + l.op_count() + r.op_count(),
        }
    }

    /// Number of nodes (applications plus leaves).
    pub fn size(&self) -> usize {
        2 * self.op_count() + 1
    }

    pub fn max_var(&self) -> u8 {
        match self {
            Term::Var(i) => *i,
            Term::App(l, r) => l.max_var().max(r.max_var()),
        }
    }

    /// Calls `f` on every variable occurrence, left to right.
    pub fn for_each_var(&self, f: &mut impl FnMut(u8)) {
        match self {
            Term::Var(i) => f(*i),
            Term::App(l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }

    /// Distinct variables in order of first occurrence.
    pub fn vars(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.for_each_var(&mut |v| {
            if !out.contains(&v) {
                out.push(v);
            }
        });
        out
    }

    /// Swaps the arguments of every application.
    pub fn mirror(&self) -> Term {
        match self {
            Term::Var(i) => Term::Var(*i),
            Term::App(l, r) => Term::app(r.mirror(), l.mirror()),
        }
    }

    /// Replaces every variable `i` by `map[i]`.
    pub fn rename(&self, map: &impl Fn(u8) -> u8) -> Term {
        match self {
            Term::Var(i) => Term::Var(map(*i)),
            Term::App(l, r) => Term::app(l.rename(map), r.rename(map)),
        }
    }

    /// Preorder token string with variables replaced by their first-occurrence
    /// rank within this term: applications encode as 0, rank `r` as `r + 1`.
    pub fn shape_key(&self) -> Vec<u8> {
        let mut ranks: Vec<u8> = Vec::new();
        let mut out = Vec::with_capacity(self.size());
        self.push_ranked(&mut ranks, &mut out);
        out
    }

    fn push_ranked(&self, ranks: &mut Vec<u8>, out: &mut Vec<u8>) {
        match self {
            Term::Var(i) => {
                let r = match ranks.iter().position(|v| v == i) {
                    Some(r) => r,
                    None => {
                        ranks.push(*i);
                        ranks.len() - 1
                    }
                };
                out.push(r as u8 + 1);
            }
            Term::App(l, r) => {
                out.push(0);
                l.push_ranked(ranks, out);
                r.push_ranked(ranks, out);
            }
        }
    }

    /// Plain preorder tokens, without reranking.
    fn push_tokens(&self, out: &mut Vec<u8>) {
        match self {
            Term::Var(i) => out.push(*i + 1),
            Term::App(l, r) => {
                out.push(0);
                l.push_tokens(out);
                r.push_tokens(out);
            }
        }
    }

    /// The subterm at `path` (false = left, true = right).
    pub fn subterm(&self, path: &[bool]) -> Option<&Term> {
        let mut cur = self;
        for &right in path {
            match cur {
                Term::Var(_) => return None,
                Term::App(l, r) => cur = if right { r } else { l },
            }
        }
        Some(cur)
    }

    /// A copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[bool], with: &Term) -> Option<Term> {
        match path.split_first() {
            None => Some(with.clone()),
            Some((&right, rest)) => match self {
                Term::Var(_) => None,
                Term::App(l, r) => {
                    if right {
                        Some(Term::app((**l).clone(), r.replace_at(rest, with)?))
                    } else {
                        Some(Term::app(l.replace_at(rest, with)?, (**r).clone()))
                    }
                }
            },
        }
    }

    /// Every position in preorder.
    pub fn positions(&self) -> Vec<Vec<bool>> {
        fn walk(t: &Term, path: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
            out.push(path.clone());
            if let Term::App(l, r) = t {
                path.push(false);
                walk(l, path, out);
                path.pop();
                path.push(true);
                walk(r, path, out);
                path.pop();
            }
        }
        let mut out = Vec::with_capacity(self.size());
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Displays with caller-provided variable names, falling back to the
    /// default alphabet for unnamed indices.
    pub fn display_with<'a>(&'a self, names: &'a VarNames) -> impl fmt::Display + 'a {
        NamedTerm {
            term: self,
            names: Some(names),
        }
    }
}

/// Default printed name of a variable index.
pub fn var_name(index: u8) -> String {
    match VAR_ALPHABET.get(index as usize) {
        Some(s) => (*s).to_string(),
        None => format!("x{index}"),
    }
}

struct NamedTerm<'a> {
    term: &'a Term,
    names: Option<&'a VarNames>,
}

impl NamedTerm<'_> {
    fn write(&self, t: &Term, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match t {
            Term::Var(i) => match self.names.and_then(|n| n.name_of(*i)) {
                Some(name) => f.write_str(name),
                None => f.write_str(&var_name(*i)),
            },
            Term::App(l, r) => {
                if nested {
                    f.write_str("(")?;
                }
                self.write(l, f, true)?;
                f.write_str(" * ")?;
                self.write(r, f, true)?;
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for NamedTerm<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.term, f, false)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        NamedTerm {
            term: self,
            names: None,
        }
        .fmt(f)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("missing operand")]
    MissingOperand,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("ambiguous application; nested applications must be parenthesized")]
    Ambiguous,
    #[error("expected `=`")]
    ExpectedEquals,
    #[error("unexpected trailing input")]
    Trailing,
    #[error("too many distinct variables")]
    TooManyVars,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// Bidirectional variable-name table shared by the terms of one equation.
///
/// Names from the printing alphabet keep their fixed index (`x`→0 ... `v`→5,
/// `xN`→N), so printing and parsing round-trip. Other names are numbered
/// after the largest fixed index, in order of first occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarNames {
    by_index: BTreeMap<u8, String>,
}

impl VarNames {
    /// Names for indices `0, 1, …` in order.
    pub fn from_names(names: impl IntoIterator<Item = String>) -> VarNames {
        VarNames {
            by_index: names
                .into_iter()
                .enumerate()
                .map(|(i, n)| (i as u8, n))
                .collect(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<u8> {
        self.by_index
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(i, _)| *i)
    }

    pub fn name_of(&self, index: u8) -> Option<&str> {
        self.by_index.get(&index).map(String::as_str)
    }

    pub fn indices(&self) -> impl Iterator<Item = u8> + '_ {
        self.by_index.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.by_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_index.is_empty()
    }
}

fn fixed_index(name: &str) -> Option<u8> {
    if let Some(i) = VAR_ALPHABET.iter().position(|n| *n == name) {
        return Some(i as u8);
    }
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<u8>().ok().filter(|&i| i < 64)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Star,
    LParen,
    RParen,
    Equals,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(off, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '*' | '⋄' | '◇' => {
                chars.next();
                out.push((off, Tok::Star));
            }
            '(' => {
                chars.next();
                out.push((off, Tok::LParen));
            }
            ')' => {
                chars.next();
                out.push((off, Tok::RParen));
            }
            '=' => {
                chars.next();
                out.push((off, Tok::Equals));
            }
            c if c.is_ascii_alphabetic() => {
                let mut name = String::new();
                name.push(c);
                chars.next();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        name.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((off, Tok::Name(name)));
            }
            other => {
                return Err(ParseError {
                    offset: off,
                    kind: ParseErrorKind::UnexpectedChar(other),
                })
            }
        }
    }
    Ok(out)
}

/// Raw tree over interned name ids.
enum Raw {
    Name(usize),
    App(Box<Raw>, Box<Raw>),
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
    names: Vec<String>,
}

impl Parser<'_> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind,
        }
    }

    fn expr(&mut self) -> Result<Raw, ParseError> {
        let left = self.operand()?;
        if self.peek() != Some(&Tok::Star) {
            return Ok(left);
        }
        self.pos += 1;
        let right = self.operand()?;
        if self.peek() == Some(&Tok::Star) {
            return Err(self.err(ParseErrorKind::Ambiguous));
        }
        Ok(Raw::App(Box::new(left), Box::new(right)))
    }

    fn operand(&mut self) -> Result<Raw, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Name(name)) => {
                self.pos += 1;
                let id = match self.names.iter().position(|n| *n == name) {
                    Some(id) => id,
                    None => {
                        self.names.push(name);
                        self.names.len() - 1
                    }
                };
                Ok(Raw::Name(id))
            }
            Some(Tok::LParen) => {
                let open = self.offset();
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(Tok::Star) => Err(self.err(ParseErrorKind::Ambiguous)),
                    _ => Err(ParseError {
                        offset: open,
                        kind: ParseErrorKind::Unbalanced,
                    }),
                }
            }
            Some(Tok::RParen) => Err(self.err(ParseErrorKind::MissingOperand)),
            _ => Err(self.err(ParseErrorKind::MissingOperand)),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::RParen) => Err(self.err(ParseErrorKind::Unbalanced)),
            Some(_) => Err(self.err(ParseErrorKind::Trailing)),
        }
    }

    /// Resolves interned names to indices per the [`VarNames`] rule.
    fn resolve(&self) -> Result<(Vec<u8>, VarNames), ParseError> {
        let fixed: Vec<Option<u8>> = self.names.iter().map(|n| fixed_index(n)).collect();
        let mut next = fixed
            .iter()
            .flatten()
            .map(|&i| i as usize + 1)
            .max()
            .unwrap_or(0);
        let mut table = Vec::with_capacity(self.names.len());
        let mut names = VarNames::default();
        for (name, fixed) in self.names.iter().zip(fixed) {
            let idx = match fixed {
                Some(i) => i,
                None => {
                    if next > u8::MAX as usize {
                        return Err(ParseError {
                            offset: 0,
                            kind: ParseErrorKind::TooManyVars,
                        });
                    }
                    next += 1;
                    (next - 1) as u8
                }
            };
            table.push(idx);
            names.by_index.insert(idx, name.clone());
        }
        Ok((table, names))
    }
}

fn build(raw: &Raw, table: &[u8]) -> Term {
    match raw {
        Raw::Name(id) => Term::Var(table[*id]),
        Raw::App(l, r) => Term::app(build(l, table), build(r, table)),
    }
}

/// Parses a single term.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        names: Vec::new(),
    };
    let raw = p.expr()?;
    p.finish()?;
    let (table, _) = p.resolve()?;
    Ok(build(&raw, &table))
}

/// Parses `LHS = RHS` without canonicalizing, returning the shared name table.
pub fn parse_sides(text: &str) -> Result<(Term, Term, VarNames), ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        names: Vec::new(),
    };
    let lhs = p.expr()?;
    match p.peek() {
        Some(Tok::Equals) => p.pos += 1,
        Some(Tok::RParen) => return Err(p.err(ParseErrorKind::Unbalanced)),
        _ => return Err(p.err(ParseErrorKind::ExpectedEquals)),
    }
    let rhs = p.expr()?;
    p.finish()?;
    let (table, names) = p.resolve()?;
    Ok((build(&lhs, &table), build(&rhs, &table), names))
}

/// Parses a term whose variable names must already exist in `names`.
pub fn parse_term_in(text: &str, names: &VarNames) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        names: Vec::new(),
    };
    let raw = p.expr()?;
    p.finish()?;
    let mut table = Vec::with_capacity(p.names.len());
    for name in &p.names {
        match names.index_of(name) {
            Some(i) => table.push(i),
            None => {
                let offset = toks
                    .iter()
                    .find(|(_, t)| matches!(t, Tok::Name(n) if n == name))
                    .map(|t| t.0)
                    .unwrap_or(0);
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::UnknownVariable(name.clone()),
                });
            }
        }
    }
    Ok(build(&raw, &table))
}

// ---------------------------------------------------------------------------
// Equations
// ---------------------------------------------------------------------------

/// A law `lhs = rhs` in canonical form.
///
/// Canonical form: the sides are ordered by `(op_count, shape_key)`, ties
/// broken by the smaller relabeled token string; variables are then
/// renumbered densely by first occurrence, scanning `lhs` before `rhs`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Equation {
    lhs: Term,
    rhs: Term,
    num_vars: usize,
}

/// Operation counts of the two sides, smaller first.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct Signature(pub usize, pub usize);

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Metrics {
    pub signature: Signature,
    pub num_vars: usize,
    pub op_total: usize,
}

fn relabel_pair(lhs: &Term, rhs: &Term) -> (Term, Term, usize) {
    let mut order: Vec<u8> = Vec::new();
    let mut note = |v: u8| {
        if !order.contains(&v) {
            order.push(v);
        }
    };
    lhs.for_each_var(&mut note);
    rhs.for_each_var(&mut note);
    let mut map: HashMap<u8, u8> = HashMap::with_capacity(order.len());
    for (rank, v) in order.iter().enumerate() {
        map.insert(*v, rank as u8);
    }
    let f = |v: u8| map[&v];
    (lhs.rename(&f), rhs.rename(&f), order.len())
}

fn pair_tokens(lhs: &Term, rhs: &Term) -> Vec<u8> {
    let mut out = Vec::with_capacity(lhs.size() + rhs.size() + 1);
    lhs.push_tokens(&mut out);
    out.push(u8::MAX);
    rhs.push_tokens(&mut out);
    out
}

/// Canonical form of the law `lhs = rhs`.
pub fn canonicalize(lhs: &Term, rhs: &Term) -> Equation {
    let kl = (lhs.op_count(), lhs.shape_key());
    let kr = (rhs.op_count(), rhs.shape_key());
    let (l, r, num_vars) = match kl.cmp(&kr) {
        std::cmp::Ordering::Less => relabel_pair(lhs, rhs),
        std::cmp::Ordering::Greater => relabel_pair(rhs, lhs),
        std::cmp::Ordering::Equal => {
            let a = relabel_pair(lhs, rhs);
            let b = relabel_pair(rhs, lhs);
            if pair_tokens(&a.0, &a.1) <= pair_tokens(&b.0, &b.1) {
                a
            } else {
                b
            }
        }
    };
    Equation {
        lhs: l,
        rhs: r,
        num_vars,
    }
}

impl Equation {
    pub fn new(lhs: &Term, rhs: &Term) -> Equation {
        canonicalize(lhs, rhs)
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &Term {
        &self.rhs
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn signature(&self) -> Signature {
        Signature(self.lhs.op_count(), self.rhs.op_count())
    }

    pub fn op_total(&self) -> usize {
        self.lhs.op_count() + self.rhs.op_count()
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            signature: self.signature(),
            num_vars: self.num_vars,
            op_total: self.op_total(),
        }
    }

    /// Mirror both sides and recanonicalize.
    pub fn conjugate(&self) -> Equation {
        canonicalize(&self.lhs.mirror(), &self.rhs.mirror())
    }

    pub fn is_self_conjugate(&self) -> bool {
        self.conjugate() == *self
    }

    /// Total order used for corpus sorting: `(op_total, signature, tokens)`.
    pub fn sort_key(&self) -> (usize, Signature, Vec<u8>) {
        (
            self.op_total(),
            self.signature(),
            pair_tokens(&self.lhs, &self.rhs),
        )
    }
}

impl PartialOrd for Equation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Equation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl fmt::Debug for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

impl FromStr for Equation {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (l, r, _) = parse_sides(s)?;
        Ok(canonicalize(&l, &r))
    }
}
