//! Reader and writer for a subset of the Cassandra `.pomdp` text format.
//!
//! Supported: `discount`, `values: reward`, `states`/`actions`/
//! `observations` (count or names), `start` (`uniform`, a state, or `|S|`
//! probabilities), and `T`, `O`, `R` entries with `*` wildcards. `T` and `O`
//! also accept the row and matrix forms, including the `uniform` and
//! (for `T`) `identity` keywords. Anything else is a parse error.
//!
//! Rewards `R(a, s, s', o)` are reduced to `R(s, a)` by taking the
//! expectation over `s'` and `o`.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::belief::Belief;
use crate::model::{ModelBuilder, PomdpModel};

use super::{ModelIoError, ParseError};

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for word in line.split_whitespace() {
            let mut rest = word;
            while let Some(pos) = rest.find(':') {
                if pos > 0 {
                    out.push(Token {
                        text: rest[..pos].to_string(),
                        line: i + 1,
                    });
                }
                out.push(Token {
                    text: ":".to_string(),
                    line: i + 1,
                });
                rest = &rest[pos + 1..];
            }
            if !rest.is_empty() {
                out.push(Token {
                    text: rest.to_string(),
                    line: i + 1,
                });
            }
        }
    }
    out
}

const KEYWORDS: &[&str] = &[
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
];

/// One dimension declaration: a count plus optional names.
#[derive(Debug, Clone, Default)]
struct Dimension {
    size: usize,
    names: Option<Vec<String>>,
}

impl Dimension {
    fn resolve(&self, tok: &Token, what: &str) -> Result<Option<usize>, ParseError> {
        if tok.text == "*" {
            return Ok(None);
        }
        if let Some(names) = &self.names {
            if let Some(i) = names.iter().position(|n| *n == tok.text) {
                return Ok(Some(i));
            }
        }
        match tok.text.parse::<usize>() {
            Ok(i) if i < self.size => Ok(Some(i)),
            Ok(i) => Err(ParseError::new(
                tok.line,
                format!("{what} index {i} out of range ({})", self.size),
            )),
            Err(_) => Err(ParseError::new(tok.line, format!("unknown {what} '{}'", tok.text))),
        }
    }

    fn expand(&self, spec: Option<usize>) -> std::ops::Range<usize> {
        match spec {
            Some(i) => i..i + 1,
            None => 0..self.size,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct RewardRule {
    next: Option<usize>,
    obs: Option<usize>,
    value: f64,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_text(&self, offset: usize) -> Option<&str> {
        self.tokens.get(self.pos + offset).map(|t| t.text.as_str())
    }

    fn last_line(&self) -> usize {
        self.tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map_or(0, |t| t.line)
    }

    fn next(&mut self, what: &str) -> Result<Token, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| ParseError::new(self.last_line(), format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect_colon(&mut self) -> Result<(), ParseError> {
        let tok = self.next("':'")?;
        if tok.text != ":" {
            return Err(ParseError::new(tok.line, format!("expected ':', found '{}'", tok.text)));
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let tok = self.next("a number")?;
        tok.text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ParseError::new(tok.line, format!("expected a number, found '{}'", tok.text)))
    }

    fn numbers(&mut self, count: usize) -> Result<Vec<f64>, ParseError> {
        (0..count).map(|_| self.number()).collect()
    }

    fn at_directive(&self) -> bool {
        matches!(
            (self.peek_text(0), self.peek_text(1)),
            (Some(_), Some(":")) | (None, _)
        )
    }

    fn dimension(&mut self) -> Result<Dimension, ParseError> {
        let first = self.next("a count or names")?;
        if let Ok(size) = first.text.parse::<usize>() {
            if self.at_directive() {
                if size == 0 {
                    return Err(ParseError::new(first.line, "dimension must be positive"));
                }
                return Ok(Dimension { size, names: None });
            }
        }
        let mut names = vec![first.text];
        while !self.at_directive() {
            names.push(self.next("a name")?.text);
        }
        Ok(Dimension {
            size: names.len(),
            names: Some(names),
        })
    }
}

/// Parses a `.pomdp` document.
pub fn parse_pomdp(text: &str) -> Result<PomdpModel, ModelIoError> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
    };
    let mut discount = None;
    let mut states: Option<Dimension> = None;
    let mut actions: Option<Dimension> = None;
    let mut observations: Option<Dimension> = None;
    let mut start: Option<(usize, StartSpec)> = None;
    let mut builder: Option<ModelBuilder> = None;
    let mut rewards: Vec<Vec<RewardRule>> = Vec::new();

    while let Some(tok) = p.peek().cloned() {
        p.pos += 1;
        let line = tok.line;
        match tok.text.as_str() {
            "discount" => {
                p.expect_colon()?;
                discount = Some(p.number()?);
            }
            "values" => {
                p.expect_colon()?;
                let kind = p.next("'reward'")?;
                if kind.text != "reward" {
                    return Err(ParseError::new(kind.line, format!("unsupported values type '{}'", kind.text)).into());
                }
            }
            "states" | "actions" | "observations" => {
                if builder.is_some() {
                    return Err(ParseError::new(line, format!("'{}' after model entries", tok.text)).into());
                }
                p.expect_colon()?;
                let dim = p.dimension()?;
                match tok.text.as_str() {
                    "states" => states = Some(dim),
                    "actions" => actions = Some(dim),
                    _ => observations = Some(dim),
                }
            }
            "start" => {
                if p.peek_text(0) != Some(":") {
                    let what = p.peek_text(0).unwrap_or("").to_string();
                    return Err(ParseError::new(line, format!("unsupported start form 'start {what}'")).into());
                }
                p.expect_colon()?;
                let s = states
                    .as_ref()
                    .ok_or_else(|| ParseError::new(line, "'start' before 'states'"))?;
                start = Some((line, parse_start(&mut p, s)?));
            }
            "T" | "O" | "R" => {
                let (s, a, o) = match (&states, &actions, &observations) {
                    (Some(s), Some(a), Some(o)) => (s, a, o),
                    _ => {
                        return Err(ParseError::new(
                            line,
                            "states, actions and observations must be declared before entries",
                        )
                        .into())
                    }
                };
                let b = builder.get_or_insert_with(|| ModelBuilder::new(s.size, a.size, o.size));
                if rewards.is_empty() {
                    rewards = vec![Vec::new(); a.size * s.size];
                }
                p.expect_colon()?;
                match tok.text.as_str() {
                    "T" => parse_transition(&mut p, b, s, a)?,
                    "O" => parse_observation(&mut p, b, s, a, o)?,
                    _ => parse_reward(&mut p, &mut rewards, s, a, o)?,
                }
            }
            other => {
                return Err(ParseError::new(line, format!("unsupported directive '{other}'")).into());
            }
        }
    }

    let line = p.last_line();
    let discount = discount.ok_or_else(|| ParseError::new(line, "missing 'discount'"))?;
    let (states, actions, observations) = match (states, actions, observations) {
        (Some(s), Some(a), Some(o)) => (s, a, o),
        _ => return Err(ParseError::new(line, "missing states, actions or observations").into()),
    };
    let mut builder = builder.unwrap_or_else(|| ModelBuilder::new(states.size, actions.size, observations.size));
    if rewards.is_empty() {
        rewards = vec![Vec::new(); actions.size * states.size];
    }
    builder.set_discount(discount);
    for a in 0..actions.size {
        for s in 0..states.size {
            let r = expected_reward(&builder, &rewards[a * states.size + s], a, s);
            builder.set_reward(a, s, r);
        }
    }
    let initial = match start {
        None | Some((_, StartSpec::Uniform)) => Belief::uniform(states.size),
        Some((_, StartSpec::State(s))) => Belief::point(states.size, s),
        Some((line, StartSpec::Dense(probs))) => {
            Belief::from_dense(&probs).map_err(|e| ParseError::new(line, format!("start: {e}")))?
        }
    };
    builder.set_initial_belief(initial);
    builder.set_names(states.names, actions.names, observations.names);
    Ok(builder.build()?)
}

enum StartSpec {
    Uniform,
    State(usize),
    Dense(Vec<f64>),
}

fn parse_start(p: &mut Parser, states: &Dimension) -> Result<StartSpec, ParseError> {
    match p.peek_text(0) {
        Some("uniform") => {
            p.pos += 1;
            Ok(StartSpec::Uniform)
        }
        Some(t) if t.parse::<f64>().is_err() => {
            let tok = p.next("a state")?;
            match states.resolve(&tok, "state")? {
                Some(s) => Ok(StartSpec::State(s)),
                None => Ok(StartSpec::Uniform),
            }
        }
        _ => Ok(StartSpec::Dense(p.numbers(states.size)?)),
    }
}

fn parse_transition(p: &mut Parser, b: &mut ModelBuilder, s: &Dimension, a: &Dimension) -> Result<(), ParseError> {
    let a_tok = p.next("an action")?;
    let action = a.resolve(&a_tok, "action")?;
    if p.peek_text(0) == Some(":") {
        p.pos += 1;
        let s_tok = p.next("a state")?;
        let from = s.resolve(&s_tok, "state")?;
        if p.peek_text(0) == Some(":") {
            p.pos += 1;
            let n_tok = p.next("a state")?;
            let to = s.resolve(&n_tok, "state")?;
            let prob = p.number()?;
            for ai in a.expand(action) {
                for si in s.expand(from) {
                    for ni in s.expand(to) {
                        b.set_transition(ai, si, ni, prob);
                    }
                }
            }
        } else {
            let row = row_or_uniform(p, s.size)?;
            for ai in a.expand(action) {
                for si in s.expand(from) {
                    b.set_transition_row(ai, si, &row);
                }
            }
        }
        return Ok(());
    }
    let ns = s.size;
    match p.peek_text(0) {
        Some("identity") => {
            p.pos += 1;
            for ai in a.expand(action) {
                for si in 0..ns {
                    let mut row = vec![0.0; ns];
                    row[si] = 1.0;
                    b.set_transition_row(ai, si, &row);
                }
            }
        }
        Some("uniform") => {
            p.pos += 1;
            let row = vec![1.0 / ns as f64; ns];
            for ai in a.expand(action) {
                for si in 0..ns {
                    b.set_transition_row(ai, si, &row);
                }
            }
        }
        _ => {
            let matrix = p.numbers(ns * ns)?;
            for ai in a.expand(action) {
                for si in 0..ns {
                    b.set_transition_row(ai, si, &matrix[si * ns..(si + 1) * ns]);
                }
            }
        }
    }
    Ok(())
}

fn row_or_uniform(p: &mut Parser, len: usize) -> Result<Vec<f64>, ParseError> {
    if p.peek_text(0) == Some("uniform") {
        p.pos += 1;
        return Ok(vec![1.0 / len as f64; len]);
    }
    p.numbers(len)
}

fn parse_observation(
    p: &mut Parser,
    b: &mut ModelBuilder,
    s: &Dimension,
    a: &Dimension,
    o: &Dimension,
) -> Result<(), ParseError> {
    let a_tok = p.next("an action")?;
    let action = a.resolve(&a_tok, "action")?;
    let no = o.size;
    if p.peek_text(0) == Some(":") {
        p.pos += 1;
        let s_tok = p.next("a state")?;
        let next = s.resolve(&s_tok, "state")?;
        if p.peek_text(0) == Some(":") {
            p.pos += 1;
            let o_tok = p.next("an observation")?;
            let obs = o.resolve(&o_tok, "observation")?;
            let prob = p.number()?;
            for ai in a.expand(action) {
                for si in s.expand(next) {
                    for oi in o.expand(obs) {
                        b.set_observation(ai, si, oi, prob);
                    }
                }
            }
        } else {
            let row = row_or_uniform(p, no)?;
            for ai in a.expand(action) {
                for si in s.expand(next) {
                    for (oi, &prob) in row.iter().enumerate() {
                        b.set_observation(ai, si, oi, prob);
                    }
                }
            }
        }
        return Ok(());
    }
    let matrix = if p.peek_text(0) == Some("uniform") {
        p.pos += 1;
        vec![1.0 / no as f64; s.size * no]
    } else {
        p.numbers(s.size * no)?
    };
    for ai in a.expand(action) {
        for si in 0..s.size {
            for oi in 0..no {
                b.set_observation(ai, si, oi, matrix[si * no + oi]);
            }
        }
    }
    Ok(())
}

fn parse_reward(
    p: &mut Parser,
    rewards: &mut [Vec<RewardRule>],
    s: &Dimension,
    a: &Dimension,
    o: &Dimension,
) -> Result<(), ParseError> {
    let a_tok = p.next("an action")?;
    let action = a.resolve(&a_tok, "action")?;
    p.expect_colon()?;
    let s_tok = p.next("a state")?;
    let from = s.resolve(&s_tok, "state")?;
    let colon = p.next("':'")?;
    if colon.text != ":" {
        return Err(ParseError::new(colon.line, "only the 'R: a : s : s' : o value' reward form is supported"));
    }
    let n_tok = p.next("a state")?;
    let next = s.resolve(&n_tok, "state")?;
    let colon = p.next("':'")?;
    if colon.text != ":" {
        return Err(ParseError::new(colon.line, "only the 'R: a : s : s' : o value' reward form is supported"));
    }
    let o_tok = p.next("an observation")?;
    let obs = o.resolve(&o_tok, "observation")?;
    let value = p.number()?;
    let rule = RewardRule { next, obs, value };
    for ai in a.expand(action) {
        for si in s.expand(from) {
            let rules = &mut rewards[ai * s.size + si];
            if next.is_none() && obs.is_none() {
                rules.clear();
            }
            rules.push(rule);
        }
    }
    Ok(())
}

/// `sum_{s', o} T(s, a, s') O(s', a, o) R(a, s, s', o)` with the last
/// matching rule taking precedence.
fn expected_reward(b: &ModelBuilder, rules: &[RewardRule], a: usize, s: usize) -> f64 {
    match rules {
        [] => 0.0,
        [RewardRule {
            next: None,
            obs: None,
            value,
        }] => *value,
        _ => {
            let mut total = 0.0;
            for &(next, t) in b.transition_row(a, s) {
                for o in 0..b.num_observations() {
                    let po = b.observation(next, a, o);
                    if t == 0.0 || po == 0.0 {
                        continue;
                    }
                    let matched = rules.iter().rev().find(|r| {
                        r.next.is_none_or(|n| n == next) && r.obs.is_none_or(|x| x == o)
                    });
                    if let Some(r) = matched {
                        total += t * po * r.value;
                    }
                }
            }
            total
        }
    }
}

fn valid_names(names: Option<&[String]>) -> Option<&[String]> {
    names.filter(|ns| {
        ns.iter().all(|n| {
            !n.is_empty()
                && !n.contains(|c: char| c.is_whitespace() || c == ':' || c == '#')
                && n != "*"
                && n.parse::<f64>().is_err()
                && !KEYWORDS.contains(&n.as_str())
        })
    })
}

/// Serializes a model so that [`parse_pomdp`] reproduces it exactly.
/// Rewards are written as `R: a : s : * : * r`.
pub fn write_pomdp<W: Write>(model: &PomdpModel, mut w: W) -> io::Result<()> {
    let mut buf = String::new();
    let dim = |buf: &mut String, key: &str, n: usize, names: Option<&[String]>| {
        match valid_names(names) {
            Some(names) => {
                let _ = writeln!(buf, "{key}: {}", names.join(" "));
            }
            None => {
                let _ = writeln!(buf, "{key}: {n}");
            }
        }
    };
    let _ = writeln!(buf, "discount: {:?}", model.discount());
    let _ = writeln!(buf, "values: reward");
    dim(&mut buf, "states", model.num_states(), model.state_names());
    dim(&mut buf, "actions", model.num_actions(), model.action_names());
    dim(
        &mut buf,
        "observations",
        model.num_observations(),
        model.observation_names(),
    );
    buf.push_str("start:");
    for p in model.initial_belief().to_dense() {
        let _ = write!(buf, " {p:?}");
    }
    buf.push('\n');
    w.write_all(buf.as_bytes())?;

    for a in 0..model.num_actions() {
        buf.clear();
        for s in 0..model.num_states() {
            for &(n, p) in model.transition_row(a, s) {
                let _ = writeln!(buf, "T: {a} : {s} : {n} {p:?}");
            }
        }
        for n in 0..model.num_states() {
            for (o, &p) in model.observation_row(a, n).iter().enumerate() {
                if p != 0.0 {
                    let _ = writeln!(buf, "O: {a} : {n} : {o} {p:?}");
                }
            }
        }
        for (s, &r) in model.reward_column(a).iter().enumerate() {
            if r != 0.0 {
                let _ = writeln!(buf, "R: {a} : {s} : * : * {r:?}");
            }
        }
        w.write_all(buf.as_bytes())?;
    }
    Ok(())
}
