//! CNF subset of the TPTP syntax: problems, watchlists, and proofs are all
//! sequences of `cnf(<name>, <role>, (<lit> | ... | <lit>)).` lines.
//!
//! `=` and `!=` are accepted as infix equality; `$false` stands for the empty
//! clause; `%` starts a comment. Variables are tokens starting with an
//! uppercase letter.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::logic::{Clause, ClauseId, Literal, Origin, Sym, SymbolTable, Term, Var};

pub const EQ_SYMBOL: &str = "=";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    Axiom,
    Hypothesis,
    NegatedConjecture,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Axiom => "axiom",
            Role::Hypothesis => "hypothesis",
            Role::NegatedConjecture => "negated_conjecture",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct ProblemClause {
    pub name: String,
    pub role: Role,
    pub clause: Clause,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub clauses: Vec<ProblemClause>,
}

impl Problem {
    pub fn negated_conjectures(&self) -> impl Iterator<Item = &ProblemClause> {
        self.clauses
            .iter()
            .filter(|c| c.role == Role::NegatedConjecture)
    }
}

/// Symbol arities seen so far. One instance is shared across every file of a
/// session so problem/watchlist signatures stay consistent.
#[derive(Default, Debug, Clone)]
pub struct Signature {
    pub symbols: SymbolTable,
    predicates: HashMap<Sym, usize>,
    functions: HashMap<Sym, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn predicate_arity(&self, s: Sym) -> Option<usize> {
        self.predicates.get(&s).copied()
    }

    pub fn is_predicate(&self, s: Sym) -> bool {
        self.predicates.contains_key(&s)
    }

    pub fn is_function(&self, s: Sym) -> bool {
        self.functions.contains_key(&s)
    }

    /// Predicate symbols in ascending id order.
    pub fn predicate_symbols(&self) -> Vec<Sym> {
        let mut v: Vec<Sym> = self.predicates.keys().copied().collect();
        v.sort_unstable();
        v
    }

    /// Function symbols in ascending id order.
    pub fn function_symbols(&self) -> Vec<Sym> {
        let mut v: Vec<Sym> = self.functions.keys().copied().collect();
        v.sort_unstable();
        v
    }

    fn check_predicate(&mut self, name: &str, s: Sym, arity: usize) -> Result<(), ParseError> {
        match self.predicates.insert(s, arity) {
            Some(prev) if prev != arity => Err(ParseError::ArityMismatch {
                symbol: name.to_string(),
                first: prev,
                second: arity,
            }),
            _ => Ok(()),
        }
    }

    fn check_function(&mut self, name: &str, s: Sym, arity: usize) -> Result<(), ParseError> {
        match self.functions.insert(s, arity) {
            Some(prev) if prev != arity => Err(ParseError::ArityMismatch {
                symbol: name.to_string(),
                first: prev,
                second: arity,
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: found {found}, expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        found: String,
        expected: String,
    },
    #[error("symbol `{symbol}` used with arities {first} and {second}")]
    ArityMismatch {
        symbol: String,
        first: usize,
        second: usize,
    },
    #[error("input is not valid UTF-8 at byte {offset}")]
    Encoding { offset: usize },
    #[error("no clauses in input")]
    Empty,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Lower(String),
    Upper(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Pipe,
    Tilde,
    Eq,
    Neq,
    DollarFalse,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Lower(s) | Tok::Upper(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Neq => f.write_str("`!=`"),
            Tok::DollarFalse => f.write_str("`$false`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, found: impl Into<String>, expected: &str) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            found: found.into(),
            expected: expected.to_string(),
        }
    }

    fn next_token(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        loop {
            match self.chars.peek() {
                None => return Ok((Tok::Eof, self.line, self.col)),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let c = self.bump().unwrap();
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '|' => Tok::Pipe,
            '~' => Tok::Tilde,
            '=' => Tok::Eq,
            '!' => {
                if self.chars.peek() == Some(&'=') {
                    self.bump();
                    Tok::Neq
                } else {
                    return Err(self.error("`!`", "`!=`"));
                }
            }
            '$' => {
                let mut word = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if word == "false" {
                    Tok::DollarFalse
                } else {
                    return Err(self.error(format!("`${word}`"), "`$false`"));
                }
            }
            c if c.is_ascii_lowercase() || c.is_ascii_digit() => {
                let mut word = String::new();
                word.push(c);
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Lower(word)
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                let mut word = String::new();
                word.push(c);
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Upper(word)
            }
            other => return Err(self.error(format!("`{other}`"), "a token")),
        };
        Ok((tok, line, col))
    }
}

struct Parser<'a, 'b> {
    lexer: Lexer<'a>,
    tok: Tok,
    line: usize,
    col: usize,
    sig: &'b mut Signature,
}

impl<'a, 'b> Parser<'a, 'b> {
    fn new(text: &'a str, sig: &'b mut Signature) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(text);
        let (tok, line, col) = lexer.next_token()?;
        Ok(Parser {
            lexer,
            tok,
            line,
            col,
            sig,
        })
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, line, col) = self.lexer.next_token()?;
        self.tok = tok;
        self.line = line;
        self.col = col;
        Ok(())
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            found: self.tok.to_string(),
            expected: expected.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.tok == tok {
            self.advance()
        } else {
            Err(self.error(expected))
        }
    }

    fn lower_word(&mut self, expected: &str) -> Result<String, ParseError> {
        if let Tok::Lower(w) = self.tok.clone() {
            self.advance()?;
            Ok(w)
        } else {
            Err(self.error(expected))
        }
    }

    fn parse_term(&mut self, vars: &mut HashMap<String, Var>) -> Result<Term, ParseError> {
        match self.tok.clone() {
            Tok::Upper(name) => {
                self.advance()?;
                let n = vars.len() as u32;
                let v = *vars.entry(name).or_insert(Var(n));
                Ok(Term::Var(v))
            }
            Tok::Lower(name) => {
                self.advance()?;
                let mut args = Vec::new();
                if self.tok == Tok::LParen {
                    self.advance()?;
                    loop {
                        args.push(self.parse_term(vars)?);
                        if self.tok == Tok::Comma {
                            self.advance()?;
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                }
                let s = self.sig.symbols.intern(&name);
                self.sig.check_function(&name, s, args.len())?;
                Ok(Term::App(s, args.into_boxed_slice()))
            }
            _ => Err(self.error("a term")),
        }
    }

    /// One disjunct. `$false` contributes no literal.
    fn parse_disjunct(
        &mut self,
        vars: &mut HashMap<String, Var>,
        out: &mut Vec<Literal>,
    ) -> Result<(), ParseError> {
        let mut positive = true;
        if self.tok == Tok::Tilde {
            positive = false;
            self.advance()?;
        }
        if self.tok == Tok::DollarFalse {
            if !positive {
                return Err(self.error("an atom after `~`"));
            }
            self.advance()?;
            return Ok(());
        }
        // Parse a term first; an infix `=`/`!=` turns it into an equality
        // literal, otherwise it must be a predicate application.
        let lhs = self.parse_term(vars)?;
        match self.tok {
            Tok::Eq | Tok::Neq => {
                if self.tok == Tok::Neq {
                    positive = !positive;
                }
                self.advance()?;
                let rhs = self.parse_term(vars)?;
                let eq = self.sig.symbols.intern(EQ_SYMBOL);
                self.sig.check_predicate(EQ_SYMBOL, eq, 2)?;
                out.push(Literal::new(positive, eq, vec![lhs, rhs]));
                Ok(())
            }
            _ => match lhs {
                Term::App(s, args) => {
                    // Reclassify: the head symbol is a predicate here.
                    let name = self.sig.symbols.name(s).to_string();
                    self.sig.functions.remove(&s);
                    self.sig.check_predicate(&name, s, args.len())?;
                    out.push(Literal {
                        positive,
                        predicate: s,
                        args,
                    });
                    Ok(())
                }
                Term::Var(_) => Err(self.error("a predicate or `=`/`!=`")),
            },
        }
    }

    fn parse_clause_body(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut vars = HashMap::new();
        let mut literals = Vec::new();
        let parenthesized = self.tok == Tok::LParen;
        if parenthesized {
            self.advance()?;
        }
        loop {
            self.parse_disjunct(&mut vars, &mut literals)?;
            if self.tok == Tok::Pipe {
                self.advance()?;
            } else {
                break;
            }
        }
        if parenthesized {
            self.expect(Tok::RParen, "`)` or `|`")?;
        }
        Ok(literals)
    }

    fn parse_cnf_line(&mut self, next_id: u32) -> Result<ProblemClause, ParseError> {
        let kw = self.lower_word("`cnf`")?;
        if kw != "cnf" {
            return Err(ParseError::Syntax {
                line: self.line,
                col: self.col,
                found: format!("`{kw}`"),
                expected: "`cnf`".to_string(),
            });
        }
        self.expect(Tok::LParen, "`(`")?;
        let name = self.lower_word("a clause name")?;
        self.expect(Tok::Comma, "`,`")?;
        let role_word = self.lower_word("a role")?;
        let role = match role_word.as_str() {
            "axiom" => Role::Axiom,
            "hypothesis" => Role::Hypothesis,
            "negated_conjecture" => Role::NegatedConjecture,
            _ => {
                return Err(ParseError::Syntax {
                    line: self.line,
                    col: self.col,
                    found: format!("`{role_word}`"),
                    expected: "axiom, hypothesis, or negated_conjecture".to_string(),
                })
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let literals = self.parse_clause_body()?;
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Dot, "`.`")?;
        Ok(ProblemClause {
            name,
            role,
            clause: Clause::new(ClauseId(next_id), literals, Origin::Input),
        })
    }
}

/// Parses a whole `.p`/`.w` file. Clause ids are provisional positions; the
/// search session renumbers when seeding.
pub fn parse_problem(bytes: &[u8], name: &str, sig: &mut Signature) -> Result<Problem, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ParseError::Encoding { offset: e.valid_up_to() })?;
    let mut parser = Parser::new(text, sig)?;
    let mut clauses = Vec::new();
    while parser.tok != Tok::Eof {
        let c = parser.parse_cnf_line(clauses.len() as u32)?;
        clauses.push(c);
    }
    if clauses.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(Problem {
        name: name.to_string(),
        clauses,
    })
}

fn write_term(out: &mut String, t: &Term, table: &SymbolTable) {
    match t {
        Term::Var(v) => {
            out.push('X');
            out.push_str(&v.0.to_string());
        }
        Term::App(f, args) => {
            out.push_str(table.name(*f));
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_term(out, a, table);
                }
                out.push(')');
            }
        }
    }
}

fn write_literal(out: &mut String, l: &Literal, table: &SymbolTable) {
    if table.name(l.predicate) == EQ_SYMBOL && l.args.len() == 2 {
        write_term(out, &l.args[0], table);
        out.push_str(if l.positive { " = " } else { " != " });
        write_term(out, &l.args[1], table);
        return;
    }
    if !l.positive {
        out.push('~');
    }
    out.push_str(table.name(l.predicate));
    if !l.args.is_empty() {
        out.push('(');
        for (i, a) in l.args.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_term(out, a, table);
        }
        out.push(')');
    }
}

/// Emits one `cnf(...)` line (no trailing newline). The empty clause is
/// rendered as `$false`.
pub fn serialize_clause(c: &Clause, name: &str, role: Role, table: &SymbolTable) -> String {
    let mut body = String::new();
    if c.is_empty() {
        body.push_str("$false");
    } else {
        for (i, l) in c.literals().iter().enumerate() {
            if i > 0 {
                body.push_str(" | ");
            }
            write_literal(&mut body, l, table);
        }
    }
    format!("cnf({name}, {role}, ({body})).")
}

pub fn serialize_problem(p: &Problem, table: &SymbolTable) -> String {
    let mut out = String::new();
    for pc in &p.clauses {
        out.push_str(&serialize_clause(&pc.clause, &pc.name, pc.role, table));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_two_literal_clause() {
        let mut sig = Signature::new();
        let p = parse_problem(b"cnf(c1, axiom, (p(X) | ~q(f(X)))).", "t", &mut sig).unwrap();
        assert_eq!(p.clauses.len(), 1);
        let pc = &p.clauses[0];
        assert_eq!(pc.name, "c1");
        assert_eq!(pc.role, Role::Axiom);
        assert_eq!(pc.clause.literals().len(), 2);
    }

    #[test]
    fn parses_negative_equality() {
        let mut sig = Signature::new();
        let p = parse_problem(b"cnf(c2, negated_conjecture, (a != b)).", "t", &mut sig).unwrap();
        let pc = &p.clauses[0];
        assert_eq!(pc.role, Role::NegatedConjecture);
        let lit = &pc.clause.literals()[0];
        assert!(!lit.positive);
        assert_eq!(sig.symbols.name(lit.predicate), EQ_SYMBOL);
    }

    #[test]
    fn reports_syntax_error_at_end_of_input() {
        let mut sig = Signature::new();
        let err = parse_problem(b"cnf(c3, axiom, (p(X)", "t", &mut sig).unwrap_err();
        match err {
            ParseError::Syntax { found, .. } => assert_eq!(found, "end of input"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn reports_arity_mismatch_with_both_arities() {
        let mut sig = Signature::new();
        let err = parse_problem(
            b"cnf(c1, axiom, (p(a))). cnf(c2, axiom, (p(a,a))).",
            "t",
            &mut sig,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ParseError::ArityMismatch {
                symbol: "p".to_string(),
                first: 1,
                second: 2
            }
        );
    }

    #[test]
    fn arity_checked_across_files_sharing_a_signature() {
        let mut sig = Signature::new();
        parse_problem(b"cnf(c1, axiom, (p(a))).", "one", &mut sig).unwrap();
        let err = parse_problem(b"cnf(c1, axiom, (p(a,b))).", "two", &mut sig).unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let mut sig = Signature::new();
        let text = b"% header\n\ncnf(c1, axiom, (p(a))). % tail\n%only comment\n";
        let p = parse_problem(text, "t", &mut sig).unwrap();
        assert_eq!(p.clauses.len(), 1);
    }

    #[test]
    fn serializes_unit_clause() {
        let mut sig = Signature::new();
        let p = parse_problem(b"cnf(c1, axiom, (p(X))).", "t", &mut sig).unwrap();
        let line = serialize_clause(&p.clauses[0].clause, "c1", Role::Axiom, &sig.symbols);
        assert_eq!(line, "cnf(c1, axiom, (p(X0))).");
    }

    #[test]
    fn serializes_empty_clause_as_false() {
        let mut sig = Signature::new();
        let c = Clause::new(ClauseId(0), vec![], Origin::Input);
        let line = serialize_clause(&c, "e", Role::Axiom, &sig.symbols);
        assert_eq!(line, "cnf(e, axiom, ($false)).");
        let back = parse_problem(line.as_bytes(), "t", &mut sig).unwrap();
        assert!(back.clauses[0].clause.is_empty());
    }

    #[test]
    fn equality_round_trips_infix() {
        let mut sig = Signature::new();
        let p = parse_problem(b"cnf(c1, axiom, (f(X) = a | b != c)).", "t", &mut sig).unwrap();
        let line = serialize_clause(&p.clauses[0].clause, "c1", Role::Axiom, &sig.symbols);
        let back = parse_problem(line.as_bytes(), "t", &mut sig).unwrap();
        assert_eq!(back.clauses[0].clause, p.clauses[0].clause);
    }

    fn random_problem_text(seed: u64) -> String {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(seed);
        let preds = ["p", "q", "r"];
        let funcs = ["f", "g"];
        let consts = ["a", "b", "c"];
        let vars = ["X", "Y", "Z"];
        fn term(
            rng: &mut StdRng,
            depth: usize,
            funcs: &[&str],
            consts: &[&str],
            vars: &[&str],
        ) -> String {
            if depth == 0 || rng.random_bool(0.5) {
                if rng.random_bool(0.5) {
                    vars[rng.random_range(0..vars.len())].to_string()
                } else {
                    consts[rng.random_range(0..consts.len())].to_string()
                }
            } else {
                let f = funcs[rng.random_range(0..funcs.len())];
                format!("{f}({})", term(rng, depth - 1, funcs, consts, vars))
            }
        }
        let n = rng.random_range(1..=4);
        let mut lines = Vec::new();
        for i in 0..n {
            let lits = rng.random_range(1..=3);
            let mut parts = Vec::new();
            for _ in 0..lits {
                let neg = if rng.random_bool(0.4) { "~" } else { "" };
                let p = preds[rng.random_range(0..preds.len())];
                let t = term(&mut rng, 2, &funcs, &consts, &vars);
                parts.push(format!("{neg}{p}({t})"));
            }
            let role = if rng.random_bool(0.2) {
                "negated_conjecture"
            } else {
                "axiom"
            };
            lines.push(format!("cnf(c{i}, {role}, ({})).", parts.join(" | ")));
        }
        lines.join("\n")
    }

    #[test]
    fn round_trip_is_identity_up_to_renaming() {
        for seed in 0..1000u64 {
            let text = random_problem_text(seed);
            let mut sig = Signature::new();
            let p1 = parse_problem(text.as_bytes(), "t", &mut sig).unwrap();
            let out = serialize_problem(&p1, &sig.symbols);
            let p2 = parse_problem(out.as_bytes(), "t", &mut sig).unwrap();
            assert_eq!(p1.clauses.len(), p2.clauses.len());
            for (a, b) in p1.clauses.iter().zip(p2.clauses.iter()) {
                assert_eq!(a.name, b.name);
                assert_eq!(a.role, b.role);
                assert_eq!(a.clause, b.clause, "in {text}");
            }
        }
    }

    proptest! {
        #[test]
        fn parser_never_panics_on_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let mut sig = Signature::new();
            let _ = parse_problem(&bytes, "fuzz", &mut sig);
        }

        #[test]
        fn parser_never_panics_on_cnf_like_text(s in "cnf\\([a-zA-Z0-9(),.|~=!_ $]{0,60}") {
            let mut sig = Signature::new();
            let _ = parse_problem(s.as_bytes(), "fuzz", &mut sig);
        }
    }
}
