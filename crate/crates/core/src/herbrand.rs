//! Herbrand proofs between magma laws.
//!
//! A proof `(θ_1, …, θ_n) : ∀u. φ(u) ⊢ ∀x. ψ(x)` lists substitutions of the
//! source variables by terms over the target variables. It is valid when the
//! instances `φ[θ_i]` entail `ψ(x)` for fixed (arbitrary) `x`. Verification
//! treats each instance as a ground equation usable in both directions at
//! any position, with the target variables acting as constants, and searches
//! breadth-first from both sides of `ψ` for a connecting chain of rewrites.
//! A found chain is a checkable trace; failure within the bounds is not a
//! refutation. [`instance_countermodel`] looks for the opposite evidence: a
//! finite magma and an assignment where every instance holds but `ψ` fails.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::magma::Magma;
use crate::stone::{CompiledEquation, StoneError};
use crate::terms::{parse_sides, parse_term_in, ParseError, Term, VarNames};

pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_MAX_SIZE: usize = 32;
pub const DEFAULT_MAX_VISITED: usize = 200_000;

#[derive(Debug, Error)]
pub enum HerbrandError {
    #[error("parse error in {what}: {source}")]
    Parse { what: String, source: ParseError },
    #[error("substitution does not bind source variable `{0}`")]
    Unbound(String),
    #[error("`{0}` is not a variable of the source law")]
    NotASourceVariable(String),
    #[error("variable `{0}` bound twice")]
    DuplicateBinding(String),
    #[error("malformed binding `{0}` (expected `name -> term`)")]
    MalformedBinding(String),
    #[error("search limits must be positive")]
    BadLimits,
    #[error("a proof needs at least one substitution")]
    NoSteps,
    #[error("line {line}: {reason}")]
    ProofFile { line: usize, reason: String },
    #[error(transparent)]
    Stone(#[from] StoneError),
}

/// A law as written, with its own variable names (not canonicalized).
/// Variables are numbered densely in order of their fixed index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Law {
    pub lhs: Term,
    pub rhs: Term,
    pub names: VarNames,
}

impl Law {
    pub fn parse(text: &str) -> Result<Law, HerbrandError> {
        let (lhs, rhs, names) = parse_sides(text).map_err(|source| HerbrandError::Parse {
            what: text.to_string(),
            source,
        })?;
        let used: Vec<u8> = names.indices().collect();
        let dense = |v: u8| {
            used.iter()
                .position(|&u| u == v)
                .expect("variable is named") as u8
        };
        let names = VarNames::from_names(
            used.iter()
                .map(|&i| names.name_of(i).expect("named").to_string()),
        );
        Ok(Law {
            lhs: lhs.rename(&dense),
            rhs: rhs.rename(&dense),
            names,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn term_string(&self, t: &Term) -> String {
        t.display_with(&self.names).to_string()
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {}",
            self.lhs.display_with(&self.names),
            self.rhs.display_with(&self.names)
        )
    }
}

/// Source variable index ↦ term over target variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Substitution {
    pub map: BTreeMap<u8, Term>,
}

impl Substitution {
    pub fn identity(num_vars: usize) -> Substitution {
        Substitution {
            map: (0..num_vars as u8).map(|v| (v, Term::var(v))).collect(),
        }
    }

    /// Parses `u -> x, v -> y * z` (`↦` also accepted) against the two laws.
    pub fn parse(text: &str, source: &Law, target: &Law) -> Result<Substitution, HerbrandError> {
        let mut map = BTreeMap::new();
        for binding in split_bindings(text) {
            let binding = binding.trim();
            if binding.is_empty() {
                continue;
            }
            let (name, term) = binding
                .split_once("->")
                .or_else(|| binding.split_once('↦'))
                .ok_or_else(|| HerbrandError::MalformedBinding(binding.to_string()))?;
            let name = name.trim();
            let var = source
                .names
                .index_of(name)
                .ok_or_else(|| HerbrandError::NotASourceVariable(name.to_string()))?;
            let term = parse_term_in(term.trim(), &target.names).map_err(|source| {
                HerbrandError::Parse {
                    what: term.trim().to_string(),
                    source,
                }
            })?;
            if map.insert(var, term).is_some() {
                return Err(HerbrandError::DuplicateBinding(name.to_string()));
            }
        }
        let s = Substitution { map };
        s.check_total(source)?;
        Ok(s)
    }

    fn check_total(&self, source: &Law) -> Result<(), HerbrandError> {
        for v in source.names.indices() {
            if !self.map.contains_key(&v) {
                return Err(HerbrandError::Unbound(
                    source.names.name_of(v).unwrap_or("?").to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Simultaneous replacement of every variable of `t`.
    pub fn apply(&self, t: &Term) -> Result<Term, HerbrandError> {
        Ok(match t {
            Term::Var(v) => self
                .map
                .get(v)
                .cloned()
                .ok_or_else(|| HerbrandError::Unbound(crate::terms::var_name(*v)))?,
            Term::App(l, r) => Term::app(self.apply(l)?, self.apply(r)?),
        })
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Substitution) -> Result<Substitution, HerbrandError> {
        let map = inner
            .map
            .iter()
            .map(|(&v, t)| Ok((v, self.apply(t)?)))
            .collect::<Result<_, HerbrandError>>()?;
        Ok(Substitution { map })
    }

    pub fn display(&self, source: &Law, target: &Law) -> String {
        self.map
            .iter()
            .map(|(&v, t)| {
                format!(
                    "{} -> {}",
                    source.names.name_of(v).unwrap_or("?"),
                    t.display_with(&target.names)
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Splits on commas that are not inside parentheses.
fn split_bindings(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

/// The instance `φ[θ]` as an un-canonicalized pair of terms.
pub fn apply_substitution(law: &Law, theta: &Substitution) -> Result<(Term, Term), HerbrandError> {
    Ok((theta.apply(&law.lhs)?, theta.apply(&law.rhs)?))
}

/// How an instance is used as a rewrite rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleMode {
    /// The instance is a ground equation: target variables are constants.
    #[default]
    Ground,
    /// The instance's variables are pattern variables, matched afresh at
    /// each use. Sound for the implication (each instance is itself a
    /// consequence of the source law) but weaker evidence for the given
    /// substitutions. A direction whose replacement side has variables the
    /// pattern lacks is never applied.
    Schematic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchLimits {
    /// Rewrite steps explored from each side of the goal.
    pub depth: usize,
    /// Largest term (in nodes) kept during search.
    pub max_size: usize,
    /// Total distinct terms visited before giving up.
    pub max_visited: usize,
    pub mode: RuleMode,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            depth: DEFAULT_DEPTH,
            max_size: DEFAULT_MAX_SIZE,
            max_visited: DEFAULT_MAX_VISITED,
            mode: RuleMode::Ground,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HerbrandProof {
    pub source: Law,
    pub target: Law,
    pub steps: Vec<Substitution>,
    pub limits: SearchLimits,
}

impl HerbrandProof {
    pub fn new(
        source: Law,
        target: Law,
        steps: Vec<Substitution>,
    ) -> Result<HerbrandProof, HerbrandError> {
        if steps.is_empty() {
            return Err(HerbrandError::NoSteps);
        }
        for s in &steps {
            s.check_total(&source)?;
        }
        Ok(HerbrandProof {
            source,
            target,
            steps,
            limits: SearchLimits::default(),
        })
    }

    /// Reads the text format:
    ///
    /// ```text
    /// source: u = v * (u * v)
    /// target: x = (y * z) * (x * (y * z))
    /// step: u -> x, v -> y * z
    /// depth: 8
    /// max-size: 32
    /// ```
    pub fn parse(text: &str) -> Result<HerbrandProof, HerbrandError> {
        let (mut source, mut target) = (None, None);
        let mut raw_steps = Vec::new();
        let mut limits = SearchLimits::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) = t.split_once(':').ok_or(HerbrandError::ProofFile {
                line: line_no,
                reason: "expected `key: value`".into(),
            })?;
            let value = value.trim();
            let number = || {
                value
                    .parse::<usize>()
                    .map_err(|_| HerbrandError::ProofFile {
                        line: line_no,
                        reason: format!("bad number {value:?}"),
                    })
            };
            match key.trim() {
                "source" => source = Some(Law::parse(value)?),
                "target" => target = Some(Law::parse(value)?),
                "step" => raw_steps.push(value.to_string()),
                "depth" => limits.depth = number()?,
                "max-size" => limits.max_size = number()?,
                "max-visited" => limits.max_visited = number()?,
                "mode" => {
                    limits.mode = match value {
                        "ground" => RuleMode::Ground,
                        "schematic" => RuleMode::Schematic,
                        _ => {
                            return Err(HerbrandError::ProofFile {
                                line: line_no,
                                reason: format!("unknown mode {value:?}"),
                            })
                        }
                    }
                }
                other => {
                    return Err(HerbrandError::ProofFile {
                        line: line_no,
                        reason: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let missing = |what: &str| HerbrandError::ProofFile {
            line: 0,
            reason: format!("missing {what}"),
        };
        let source = source.ok_or_else(|| missing("source"))?;
        let target = target.ok_or_else(|| missing("target"))?;
        let steps = raw_steps
            .iter()
            .map(|s| Substitution::parse(s, &source, &target))
            .collect::<Result<Vec<_>, _>>()?;
        let mut proof = HerbrandProof::new(source, target, steps)?;
        proof.limits = limits;
        Ok(proof)
    }

    pub fn instances(&self) -> Result<Vec<(Term, Term)>, HerbrandError> {
        self.steps
            .iter()
            .map(|s| apply_substitution(&self.source, s))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Replace an occurrence of the instance's left side by its right side.
    LeftToRight,
    RightToLeft,
}

impl Direction {
    pub fn reversed(self) -> Direction {
        match self {
            Direction::LeftToRight => Direction::RightToLeft,
            Direction::RightToLeft => Direction::LeftToRight,
        }
    }

    /// `(pattern, replacement)` for this direction.
    pub fn sides(self, rule: &(Term, Term)) -> (&Term, &Term) {
        match self {
            Direction::LeftToRight => (&rule.0, &rule.1),
            Direction::RightToLeft => (&rule.1, &rule.0),
        }
    }
}

/// One rewrite: `after` is `before` with the instance side at `position`
/// replaced by the other side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub rule: usize,
    pub direction: Direction,
    /// Path from the root (`false` = left child).
    pub position: Vec<bool>,
    pub before: Term,
    pub after: Term,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Proved,
    NotFoundWithinBounds,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub verdict: Verdict,
    /// The instances used as rules, in step order.
    pub instances: Vec<(Term, Term)>,
    /// Set when an instance is the goal itself (then `trace` is empty).
    pub by_instance: Option<(usize, Direction)>,
    pub trace: Vec<RewriteStep>,
    /// Distinct terms reached by the search.
    pub explored: usize,
    pub mode: RuleMode,
}

#[derive(Clone, Debug)]
struct Visit {
    parent: Option<(Term, usize, Direction, Vec<bool>)>,
}

fn match_pattern(pattern: &Term, t: &Term, bound: &mut BTreeMap<u8, Term>) -> bool {
    match (pattern, t) {
        (Term::Var(v), _) => match bound.get(v) {
            Some(b) => b == t,
            None => {
                bound.insert(*v, t.clone());
                true
            }
        },
        (Term::App(pl, pr), Term::App(l, r)) => {
            match_pattern(pl, l, bound) && match_pattern(pr, r, bound)
        }
        _ => false,
    }
}

/// The replacement for `sub` when rewriting `from → to`, if it applies.
pub fn rewrite(sub: &Term, from: &Term, to: &Term, mode: RuleMode) -> Option<Term> {
    match mode {
        RuleMode::Ground => (sub == from).then(|| to.clone()),
        RuleMode::Schematic => {
            let mut bound = BTreeMap::new();
            if !match_pattern(from, sub, &mut bound) {
                return None;
            }
            Substitution { map: bound }.apply(to).ok()
        }
    }
}

fn neighbours(
    t: &Term,
    rules: &[(Term, Term)],
    limits: &SearchLimits,
) -> Vec<(Term, usize, Direction, Vec<bool>)> {
    let mut out = Vec::new();
    for pos in t.positions() {
        let sub = t.subterm(&pos).expect("valid position");
        for (i, rule) in rules.iter().enumerate() {
            for dir in [Direction::LeftToRight, Direction::RightToLeft] {
                let (from, to) = dir.sides(rule);
                if from == to {
                    continue;
                }
                if let Some(replacement) = rewrite(sub, from, to, limits.mode) {
                    let next = t.replace_at(&pos, &replacement).expect("valid position");
                    if next.size() <= limits.max_size && &next != t {
                        out.push((next, i, dir, pos.clone()));
                    }
                }
            }
        }
    }
    out
}

/// Bounded bidirectional search for a rewrite chain `lhs(ψ) → … → rhs(ψ)`.
pub fn verify(proof: &HerbrandProof) -> Result<Verification, HerbrandError> {
    let limits = proof.limits;
    if limits.depth == 0 || limits.max_size == 0 || limits.max_visited == 0 {
        return Err(HerbrandError::BadLimits);
    }
    let rules = proof.instances()?;
    let (start, goal) = (&proof.target.lhs, &proof.target.rhs);
    let done = |verdict, by_instance, trace, explored| Verification {
        verdict,
        instances: rules.clone(),
        by_instance,
        trace,
        explored,
        mode: limits.mode,
    };
    if start == goal {
        return Ok(done(Verdict::Proved, None, Vec::new(), 1));
    }
    for (i, r) in rules.iter().enumerate() {
        if (&r.0, &r.1) == (start, goal) {
            return Ok(done(
                Verdict::Proved,
                Some((i, Direction::LeftToRight)),
                Vec::new(),
                1,
            ));
        }
        if (&r.1, &r.0) == (start, goal) {
            return Ok(done(
                Verdict::Proved,
                Some((i, Direction::RightToLeft)),
                Vec::new(),
                1,
            ));
        }
    }

    let mut seen: [HashMap<Term, Visit>; 2] = [HashMap::new(), HashMap::new()];
    seen[0].insert(start.clone(), Visit { parent: None });
    seen[1].insert(goal.clone(), Visit { parent: None });
    let mut frontier: [Vec<Term>; 2] = [vec![start.clone()], vec![goal.clone()]];
    let mut depth = [0usize; 2];
    let mut meet: Option<Term> = None;
    'search: while depth[0] < limits.depth || depth[1] < limits.depth {
        for side in 0..2 {
            if depth[side] >= limits.depth || frontier[side].is_empty() {
                continue;
            }
            depth[side] += 1;
            let mut next = Vec::new();
            for t in std::mem::take(&mut frontier[side]) {
                for (n, rule, dir, pos) in neighbours(&t, &rules, &limits) {
                    if seen[side].contains_key(&n) {
                        continue;
                    }
                    seen[side].insert(
                        n.clone(),
                        Visit {
                            parent: Some((t.clone(), rule, dir, pos)),
                        },
                    );
                    if seen[1 - side].contains_key(&n) {
                        meet = Some(n);
                        break 'search;
                    }
                    if seen[0].len() + seen[1].len() >= limits.max_visited {
                        break 'search;
                    }
                    next.push(n);
                }
            }
            frontier[side] = next;
        }
        if frontier[0].is_empty() && frontier[1].is_empty() {
            break;
        }
    }
    let explored = seen[0].len() + seen[1].len();
    let Some(meet) = meet else {
        return Ok(done(
            Verdict::NotFoundWithinBounds,
            None,
            Vec::new(),
            explored,
        ));
    };
    // Forward half: parent pointers from the meeting term back to the start.
    let mut forward = Vec::new();
    let mut cur = meet.clone();
    while let Some((parent, rule, dir, pos)) = seen[0][&cur].parent.clone() {
        forward.push(RewriteStep {
            rule,
            direction: dir,
            position: pos,
            before: parent.clone(),
            after: cur,
        });
        cur = parent;
    }
    forward.reverse();
    // Backward half: each recorded step ran from the goal side, so replay it
    // in reverse.
    let mut cur = meet;
    while let Some((parent, rule, dir, pos)) = seen[1][&cur].parent.clone() {
        forward.push(RewriteStep {
            rule,
            direction: dir.reversed(),
            position: pos,
            before: cur,
            after: parent.clone(),
        });
        cur = parent;
    }
    Ok(done(Verdict::Proved, None, forward, explored))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("trace does not start at the goal's left side")]
    WrongStart,
    #[error("trace does not end at the goal's right side")]
    WrongEnd,
    #[error("step {0} does not continue from the previous term")]
    Discontinuous(usize),
    #[error("step {0} refers to an unknown rule")]
    UnknownRule(usize),
    #[error("step {0}: the rule side does not occur at the stated position")]
    NoMatch(usize),
    #[error("step {0}: the result is not the stated term")]
    WrongResult(usize),
    #[error("the claimed instance is not the goal")]
    NotTheGoal,
    #[error("the verdict is not `proved`")]
    NotProved,
}

/// Re-checks a `proved` verification step by step against the goal.
pub fn replay(v: &Verification, goal: (&Term, &Term)) -> Result<(), ReplayError> {
    if v.verdict != Verdict::Proved {
        return Err(ReplayError::NotProved);
    }
    if let Some((i, dir)) = v.by_instance {
        let rule = v.instances.get(i).ok_or(ReplayError::UnknownRule(0))?;
        let (a, b) = dir.sides(rule);
        return if (a, b) == goal {
            Ok(())
        } else {
            Err(ReplayError::NotTheGoal)
        };
    }
    if v.trace.is_empty() {
        return if goal.0 == goal.1 {
            Ok(())
        } else {
            Err(ReplayError::WrongEnd)
        };
    }
    if &v.trace[0].before != goal.0 {
        return Err(ReplayError::WrongStart);
    }
    for (k, step) in v.trace.iter().enumerate() {
        if k > 0 && step.before != v.trace[k - 1].after {
            return Err(ReplayError::Discontinuous(k));
        }
        let rule = v
            .instances
            .get(step.rule)
            .ok_or(ReplayError::UnknownRule(k))?;
        let (from, to) = step.direction.sides(rule);
        let Some(replacement) = step
            .before
            .subterm(&step.position)
            .and_then(|sub| rewrite(sub, from, to, v.mode))
        else {
            return Err(ReplayError::NoMatch(k));
        };
        if step
            .before
            .replace_at(&step.position, &replacement)
            .as_ref()
            != Some(&step.after)
        {
            return Err(ReplayError::WrongResult(k));
        }
    }
    if &v.trace.last().expect("nonempty").after != goal.1 {
        return Err(ReplayError::WrongEnd);
    }
    Ok(())
}

/// A magma and assignment refuting a claim.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub magma: usize,
    pub assignment: Vec<u8>,
}

fn assignments(size: usize, vars: usize) -> impl Iterator<Item = Vec<u8>> {
    let total = (size as u64).pow(vars as u32);
    (0..total).map(move |mut code| {
        let mut a = vec![0u8; vars];
        for slot in a.iter_mut().rev() {
            *slot = (code % size as u64) as u8;
            code /= size as u64;
        }
        a
    })
}

/// First magma that satisfies the source law but not the target, with a
/// failing assignment of the target variables.
pub fn verify_semantically(
    proof: &HerbrandProof,
    magmas: &[Magma],
) -> Result<Option<Counterexample>, HerbrandError> {
    let source = CompiledEquation::new(&proof.source.lhs, &proof.source.rhs)?;
    let target = CompiledEquation::new(&proof.target.lhs, &proof.target.rhs)?;
    let mut slots = Vec::new();
    for (l, m) in magmas.iter().enumerate() {
        if !source.holds_in(m) || target.holds_in(m) {
            continue;
        }
        let witness = assignments(m.size(), target.num_vars()).find(|a| {
            let (x, y) = target.eval_sides(m, a, &mut slots);
            x != y
        });
        return Ok(Some(Counterexample {
            magma: l,
            assignment: witness.expect("target fails somewhere"),
        }));
    }
    Ok(None)
}

/// A magma and assignment of the target variables where every instance of
/// the proof holds and the target fails. Such a model shows that no chain of
/// rewrites with these instances can exist.
pub fn instance_countermodel(
    proof: &HerbrandProof,
    magmas: &[Magma],
) -> Result<Option<Counterexample>, HerbrandError> {
    let vars = proof.target.num_vars().max(1);
    let rules: Vec<CompiledEquation> = proof
        .instances()?
        .iter()
        .map(|(l, r)| CompiledEquation::new(l, r))
        .collect::<Result<_, _>>()?;
    let target = CompiledEquation::new(&proof.target.lhs, &proof.target.rhs)?;
    let mut slots = Vec::new();
    for (l, m) in magmas.iter().enumerate() {
        for a in assignments(m.size(), vars) {
            let holds = |c: &CompiledEquation, slots: &mut Vec<u8>| {
                let (x, y) = c.eval_sides(m, &a, slots);
                x == y
            };
            if !holds(&target, &mut slots) && rules.iter().all(|r| holds(r, &mut slots)) {
                return Ok(Some(Counterexample {
                    magma: l,
                    assignment: a,
                }));
            }
        }
    }
    Ok(None)
}

/// Every magma on `size` elements (`size^(size²)` tables; `size ≤ 3`).
pub fn all_magmas(size: usize) -> Vec<Magma> {
    assert!(
        (1..=3).contains(&size),
        "exhaustive enumeration is limited to size 3"
    );
    assignments(size, size * size)
        .map(|table| Magma::new(size, table).expect("valid table"))
        .collect()
}

#[derive(Serialize)]
struct StepJson {
    rule: usize,
    direction: Direction,
    position: String,
    before: String,
    after: String,
}

#[derive(Serialize)]
struct VerificationJson<'a> {
    verdict: Verdict,
    source: String,
    target: String,
    substitutions: Vec<String>,
    instances: Vec<String>,
    by_instance: Option<(usize, Direction)>,
    steps: Vec<StepJson>,
    explored: usize,
    limits: &'a SearchLimits,
}

/// Position paths print as `L`/`R` strings; the root is `""`.
pub fn position_string(path: &[bool]) -> String {
    path.iter().map(|&r| if r { 'R' } else { 'L' }).collect()
}

pub fn verification_json(proof: &HerbrandProof, v: &Verification) -> serde_json::Value {
    let t = &proof.target;
    let json = VerificationJson {
        verdict: v.verdict,
        source: proof.source.to_string(),
        target: t.to_string(),
        substitutions: proof
            .steps
            .iter()
            .map(|s| s.display(&proof.source, t))
            .collect(),
        instances: v
            .instances
            .iter()
            .map(|(l, r)| format!("{} = {}", t.term_string(l), t.term_string(r)))
            .collect(),
        by_instance: v.by_instance,
        steps: v
            .trace
            .iter()
            .map(|s| StepJson {
                rule: s.rule,
                direction: s.direction,
                position: position_string(&s.position),
                before: t.term_string(&s.before),
                after: t.term_string(&s.after),
            })
            .collect(),
        explored: v.explored,
        limits: &proof.limits,
    };
    serde_json::to_value(json).expect("serializable")
}
