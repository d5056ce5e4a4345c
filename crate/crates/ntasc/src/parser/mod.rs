//! `.nta` text format: parser, canonical serializer, and DOT export.

pub mod dot;

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::model::{Action, Atom, Automaton, Constraint, DiagAtom, Edge, Location, Network, Pos, Rel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: syntax error: expected {expected}, found {found}")]
    Syntax { pos: Pos, expected: String, found: String },
    #[error("{pos}: {msg}")]
    Semantic { pos: Pos, msg: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Semantic { pos, .. } => *pos,
        }
    }
}

const KEYWORDS: &[&str] =
    &["automaton", "clocks", "init", "loc", "inv", "edge", "when", "do", "sync", "eps", "reset", "copy", "pragma"];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    LBrace,
    RBrace,
    Semi,
    Comma,
    Arrow,
    Assign,
    AndAnd,
    Minus,
    Rel(Rel),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Rel(r) => format!("`{}`", r.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '@' | '.')
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '{' => {
                out.push((Tok::LBrace, pos));
                advance(1, &mut i, &mut col);
            }
            '}' => {
                out.push((Tok::RBrace, pos));
                advance(1, &mut i, &mut col);
            }
            ';' => {
                out.push((Tok::Semi, pos));
                advance(1, &mut i, &mut col);
            }
            ',' => {
                out.push((Tok::Comma, pos));
                advance(1, &mut i, &mut col);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, pos));
                advance(2, &mut i, &mut col);
            }
            '-' => {
                out.push((Tok::Minus, pos));
                advance(1, &mut i, &mut col);
            }
            ':' if chars.get(i + 1) == Some(&'=') => {
                out.push((Tok::Assign, pos));
                advance(2, &mut i, &mut col);
            }
            '&' if chars.get(i + 1) == Some(&'&') => {
                out.push((Tok::AndAnd, pos));
                advance(2, &mut i, &mut col);
            }
            '=' if chars.get(i + 1) == Some(&'=') => {
                out.push((Tok::Rel(Rel::Eq), pos));
                advance(2, &mut i, &mut col);
            }
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let r = match (c, eq) {
                    ('<', false) => Rel::Lt,
                    ('<', true) => Rel::Le,
                    ('>', false) => Rel::Gt,
                    _ => Rel::Ge,
                };
                out.push((Tok::Rel(r), pos));
                advance(if eq { 2 } else { 1 }, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                let n = s
                    .parse::<u64>()
                    .ok()
                    .filter(|n| *n <= i32::MAX as u64)
                    .ok_or_else(|| ParseError::Semantic { pos, msg: format!("constant `{s}` is too large") })?;
                out.push((Tok::Num(n), pos));
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                col += i - start;
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            }
            other => {
                return Err(ParseError::Syntax {
                    pos,
                    expected: "a token".into(),
                    found: format!("character {other:?}"),
                })
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    synthesized: bool,
}

/// Positions kept alongside the network for semantic diagnostics.
struct AutPositions {
    name: Pos,
    init: Pos,
    locs: Vec<Pos>,
    edges: Vec<Pos>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), expected: expected.into(), found: self.peek().describe() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Pos, ParseError> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            self.err(what)
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.err(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let p = self.bump().1;
                Ok((s, p))
            }
            _ => self.err("identifier"),
        }
    }

    fn nat(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n as u32)
            }
            _ => self.err("natural number"),
        }
    }

    fn rel(&mut self) -> Result<Rel, ParseError> {
        match self.peek().clone() {
            Tok::Rel(r) => {
                self.bump();
                Ok(r)
            }
            _ => self.err("one of `<`, `<=`, `==`, `>=`, `>`"),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<(String, Pos)>, ParseError> {
        let mut v = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn constraint(&mut self) -> Result<Constraint, ParseError> {
        let mut c = Constraint::truth();
        loop {
            let (x, pos) = self.ident()?;
            if *self.peek() == Tok::Minus {
                self.bump();
                let (y, _) = self.ident()?;
                let rel = self.rel()?;
                let neg = if *self.peek() == Tok::Minus {
                    self.bump();
                    true
                } else {
                    false
                };
                let k = self.nat()? as i32;
                if !self.synthesized {
                    return Err(ParseError::Semantic {
                        pos,
                        msg: format!("diagonal atom `{x} - {y}` is only allowed in synthesized output"),
                    });
                }
                c.diagonals.push(DiagAtom { x, y, rel, k: if neg { -k } else { k } });
            } else {
                let rel = self.rel()?;
                let k = self.nat()?;
                c.atoms.push(Atom { clock: x, rel, k });
            }
            if *self.peek() == Tok::AndAnd {
                self.bump();
            } else {
                return Ok(c);
            }
        }
    }

    fn automaton(&mut self) -> Result<(Automaton, AutPositions), ParseError> {
        self.keyword("automaton")?;
        let (name, name_pos) = self.ident()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut clocks = Vec::new();
        if self.is_kw("clocks") {
            self.bump();
            if *self.peek() != Tok::Semi {
                clocks = self.ident_list()?.into_iter().map(|(c, _)| c).collect();
            }
            self.expect(Tok::Semi, "`;`")?;
        }
        self.keyword("init")?;
        let (init, init_pos) = self.ident()?;
        self.expect(Tok::Semi, "`;`")?;
        let mut aut = Automaton { name, clocks, init, locations: Vec::new(), edges: Vec::new() };
        let mut ps = AutPositions { name: name_pos, init: init_pos, locs: Vec::new(), edges: Vec::new() };
        loop {
            if self.is_kw("loc") {
                self.bump();
                let (l, p) = self.ident()?;
                let inv = if self.is_kw("inv") {
                    self.bump();
                    self.constraint()?
                } else {
                    Constraint::truth()
                };
                self.expect(Tok::Semi, "`;`")?;
                aut.locations.push(Location { name: l, inv });
                ps.locs.push(p);
            } else if self.is_kw("edge") {
                let p = self.bump().1;
                let (src, _) = self.ident()?;
                self.expect(Tok::Arrow, "`->`")?;
                let (dst, _) = self.ident()?;
                let guard = if self.is_kw("when") {
                    self.bump();
                    self.constraint()?
                } else {
                    Constraint::truth()
                };
                let action = if self.is_kw("do") {
                    self.bump();
                    Action::Local(self.ident()?.0)
                } else if self.is_kw("sync") {
                    self.bump();
                    Action::Sync(self.ident()?.0)
                } else if self.is_kw("eps") {
                    self.bump();
                    Action::Eps
                } else {
                    return self.err("`do`, `sync` or `eps`");
                };
                let mut resets = Vec::new();
                if self.is_kw("reset") {
                    self.bump();
                    resets = self.ident_list()?.into_iter().map(|(c, _)| c).collect();
                }
                let mut copies = Vec::new();
                if self.is_kw("copy") {
                    let cp = self.bump().1;
                    loop {
                        let (t, _) = self.ident()?;
                        self.expect(Tok::Assign, "`:=`")?;
                        let (s, _) = self.ident()?;
                        copies.push((t, s));
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if !self.synthesized {
                        return Err(ParseError::Semantic {
                            pos: cp,
                            msg: "copy updates are only allowed in synthesized output".into(),
                        });
                    }
                }
                self.expect(Tok::Semi, "`;`")?;
                aut.edges.push(Edge { src, dst, guard, action, resets, copies });
                ps.edges.push(p);
            } else if *self.peek() == Tok::RBrace {
                self.bump();
                return Ok((aut, ps));
            } else {
                return self.err("`loc`, `edge` or `}`");
            }
        }
    }
}

/// Parse a network. Any number of automata is accepted syntactically; the
/// analyses require exactly two.
pub fn parse(text: &str) -> Result<Network, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, synthesized: false };
    while p.is_kw("pragma") {
        p.bump();
        let (key, pos) = p.ident()?;
        match key.as_str() {
            "synthesized" => p.synthesized = true,
            _ => return Err(ParseError::Semantic { pos, msg: format!("unknown pragma `{key}`") }),
        }
        p.expect(Tok::Semi, "`;`")?;
    }
    let mut automata = Vec::new();
    let mut positions = Vec::new();
    while *p.peek() != Tok::Eof {
        let (a, ps) = p.automaton()?;
        automata.push(a);
        positions.push(ps);
    }
    if automata.is_empty() {
        return p.err("`automaton`");
    }
    let net = Network { automata, synthesized: p.synthesized };
    check_names(&net, &positions)?;
    Ok(net)
}

fn check_names(net: &Network, positions: &[AutPositions]) -> Result<(), ParseError> {
    let sem = |pos: Pos, msg: String| Err(ParseError::Semantic { pos, msg });
    let mut clocks = BTreeSet::new();
    let mut names = BTreeSet::new();
    for (a, ps) in net.automata.iter().zip(positions) {
        if !names.insert(&a.name) {
            return sem(ps.name, format!("duplicate automaton `{}`", a.name));
        }
        for c in &a.clocks {
            if !clocks.insert(c.as_str()) {
                return sem(ps.name, format!("duplicate clock `{c}`"));
            }
        }
    }
    for (a, ps) in net.automata.iter().zip(positions) {
        let mut locs = BTreeSet::new();
        for (l, p) in a.locations.iter().zip(&ps.locs) {
            if !locs.insert(l.name.as_str()) {
                return sem(*p, format!("duplicate location `{}`", l.name));
            }
            for c in l.inv.clocks() {
                if !clocks.contains(c) {
                    return sem(*p, format!("undeclared clock `{c}`"));
                }
            }
        }
        if !locs.contains(a.init.as_str()) {
            return sem(ps.init, format!("undeclared location `{}`", a.init));
        }
        for (e, p) in a.edges.iter().zip(&ps.edges) {
            for l in [&e.src, &e.dst] {
                if !locs.contains(l.as_str()) {
                    return sem(*p, format!("undeclared location `{l}`"));
                }
            }
            let used = e
                .guard
                .clocks()
                .into_iter()
                .chain(e.resets.iter().map(String::as_str))
                .chain(e.copies.iter().flat_map(|(t, s)| [t.as_str(), s.as_str()]));
            for c in used {
                if !clocks.contains(c) {
                    return sem(*p, format!("undeclared clock `{c}`"));
                }
            }
        }
    }
    Ok(())
}

fn write_list(out: &mut String, items: &[String]) {
    out.push_str(&items.join(", "));
}

/// Canonical text form.
pub fn serialize(net: &Network) -> String {
    let mut out = String::new();
    if net.synthesized {
        out.push_str("pragma synthesized;\n\n");
    }
    for (i, a) in net.automata.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "automaton {} {{", a.name);
        if !a.clocks.is_empty() {
            out.push_str("  clocks ");
            write_list(&mut out, &a.clocks);
            out.push_str(";\n");
        }
        let _ = writeln!(out, "  init {};", a.init);
        for l in &a.locations {
            if l.inv.is_true() {
                let _ = writeln!(out, "  loc {};", l.name);
            } else {
                let _ = writeln!(out, "  loc {} inv {};", l.name, l.inv);
            }
        }
        for e in &a.edges {
            let _ = write!(out, "  edge {} -> {}", e.src, e.dst);
            if !e.guard.is_true() {
                let _ = write!(out, " when {}", e.guard);
            }
            match &e.action {
                Action::Eps => out.push_str(" eps"),
                Action::Local(l) => {
                    let _ = write!(out, " do {l}");
                }
                Action::Sync(l) => {
                    let _ = write!(out, " sync {l}");
                }
            }
            if !e.resets.is_empty() {
                out.push_str(" reset ");
                write_list(&mut out, &e.resets);
            }
            if !e.copies.is_empty() {
                out.push_str(" copy ");
                let parts: Vec<String> = e.copies.iter().map(|(t, s)| format!("{t} := {s}")).collect();
                write_list(&mut out, &parts);
            }
            out.push_str(";\n");
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_automaton_body() {
        let n = parse("automaton A {init l; loc l;}").unwrap();
        assert_eq!(n.automata.len(), 1);
        assert_eq!(n.automata[0].locations.len(), 1);
        assert!(n.automata[0].edges.is_empty());
    }

    #[test]
    fn diagonal_needs_synthesized_tier() {
        let text = "automaton A { clocks x, x'; init l; loc l; edge l -> l when x >= 1 && x' - x <= 0 do a; }";
        match parse(text) {
            Err(ParseError::Semantic { pos, .. }) => assert_eq!(pos.line, 1),
            other => panic!("unexpected {other:?}"),
        }
        let ok = format!("pragma synthesized;\n{text}");
        let n = parse(&ok).unwrap();
        assert_eq!(n.automata[0].edges[0].guard.diagonals[0].k, 0);
    }

    #[test]
    fn copies_round_trip() {
        let text = "pragma synthesized;\nautomaton A { clocks x; init l; loc l; edge l -> l sync s reset x; }\n\
                    automaton B { clocks x1; init q; loc q; edge q -> q when x1 - x < 1 sync s copy x1 := x; }";
        let n = parse(text).unwrap();
        let s = serialize(&n);
        assert!(s.contains("copy x1 := x"));
        assert!(s.contains("x1 - x < 1"));
        assert_eq!(parse(&s).unwrap(), n);
    }

    #[test]
    fn error_positions() {
        let e = parse("automaton A {\n  init l;\n  loc l inv x <= 1;\n}").unwrap_err();
        assert_eq!(e.pos(), Pos { line: 3, col: 7 });
        let e = parse("automaton A {\n  init l\n}").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { pos: Pos { line: 3, col: 1 }, .. }));
    }

    #[test]
    fn unknown_pragma_rejected() {
        assert!(parse("pragma fast; automaton A {init l; loc l;}").is_err());
    }
}
