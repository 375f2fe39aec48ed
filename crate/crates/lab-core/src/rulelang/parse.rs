//! Lexer and recursive-descent parser for the rule language.
//!
//! The concrete syntax is a plain ASCII rendering of the usual rule
//! notation: `cond` blocks with `?` / `!` / `?!` arms, `||` for simultaneous
//! rules, `;` for temporal sequencing, `pfor`/`for`/`repeat` loops,
//! `F := e` and delayed `F :=_p e` assignments, `F^j` neighbor references,
//! `amod`/`mod` operators, finite quantifiers `all`/`some`, `let` bindings,
//! `write(S, F[a..b])`, and `param NAME = "..."` string parameters.
//! `#` starts a comment running to the end of the line.

use super::ast::*;
use super::RuleProgram;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Question,
    Bang,
    QuestionBang,
    Parallel,
    Assign,
    AssignDelay(u32),
    Caret,
    DotDot,
    EqEq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Equals,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            at: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: &str) -> LabError {
        LabError::Parse(format!("{}:{}: {msg}", self.line, self.col))
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c == b'#' {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else if c.is_ascii_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let pos = Pos {
                line: self.line,
                col: self.col,
            };
            let Some(c) = self.peek() else {
                return Ok(out);
            };
            let tok = match c {
                b'{' => {
                    self.bump();
                    Tok::LBrace
                }
                b'}' => {
                    self.bump();
                    Tok::RBrace
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b'^' => {
                    self.bump();
                    Tok::Caret
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'?' => {
                    self.bump();
                    if self.peek() == Some(b'!') {
                        self.bump();
                        Tok::QuestionBang
                    } else {
                        Tok::Question
                    }
                }
                b'|' => {
                    self.bump();
                    if self.peek() == Some(b'|') {
                        self.bump();
                        Tok::Parallel
                    } else {
                        return Err(self.err("expected '||'"));
                    }
                }
                b':' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        if self.peek() == Some(b'_') {
                            self.bump();
                            let mut n: u32 = 0;
                            let mut any = false;
                            while let Some(d) = self.peek() {
                                if d.is_ascii_digit() {
                                    any = true;
                                    n = n * 10 + (d - b'0') as u32;
                                    self.bump();
                                } else {
                                    break;
                                }
                            }
                            if !any {
                                return Err(self.err("expected delay after ':=_'"));
                            }
                            Tok::AssignDelay(n)
                        } else {
                            Tok::Assign
                        }
                    } else {
                        Tok::Colon
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::EqEq
                    } else {
                        Tok::Equals
                    }
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ne
                    } else {
                        Tok::Bang
                    }
                }
                b'<' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Le
                    } else {
                        Tok::Lt
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                b'.' => {
                    self.bump();
                    if self.peek() == Some(b'.') {
                        self.bump();
                        Tok::DotDot
                    } else {
                        return Err(self.err("expected '..'"));
                    }
                }
                b'"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some(b'"') => break,
                            Some(b'\\') => match self.bump() {
                                Some(b'"') => s.push('"'),
                                Some(b'\\') => s.push('\\'),
                                Some(b'n') => s.push('\n'),
                                _ => return Err(self.err("bad escape in string")),
                            },
                            Some(c) => s.push(c as char),
                            None => return Err(self.err("unterminated string")),
                        }
                    }
                    Tok::Str(s)
                }
                c if c.is_ascii_digit() => {
                    let mut n: i64 = 0;
                    while let Some(d) = self.peek() {
                        if d.is_ascii_digit() {
                            n = n
                                .checked_mul(10)
                                .and_then(|n| n.checked_add((d - b'0') as i64))
                                .ok_or_else(|| self.err("integer literal overflows"))?;
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Int(n)
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut s = String::new();
                    while let Some(d) = self.peek() {
                        if d.is_ascii_alphanumeric() || d == b'_' {
                            s.push(d as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(self.err(&format!("unexpected character '{}'", other as char)))
                }
            };
            out.push((tok, pos));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    fields: Vec<FieldDecl>,
    params: Vec<(String, String)>,
    max_delay: Option<u32>,
    subrules: Vec<SubruleDecl>,
    rules: Vec<RuleDecl>,
    scopes: Vec<Vec<String>>,
}

impl Parser {
    fn pos(&self) -> Pos {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map(|(_, p)| *p)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn err(&self, msg: &str) -> LabError {
        let p = self.pos();
        LabError::Parse(format!("{}:{}: {msg}", p.line, p.col))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => Err(self.err(&format!("expected {what}"))),
        }
    }

    fn int(&mut self, what: &str) -> Result<i64> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.at += 1;
                Ok(n)
            }
            Some(Tok::Minus) => {
                self.at += 1;
                match self.peek() {
                    Some(Tok::Int(n)) => {
                        let n = -*n;
                        self.at += 1;
                        Ok(n)
                    }
                    _ => Err(self.err(&format!("expected {what}"))),
                }
            }
            _ => Err(self.err(&format!("expected {what}"))),
        }
    }

    fn keyword(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(k)) if k == s)
    }

    fn is_field(&self, name: &str) -> bool {
        self.fields.iter().any(|f| f.name == name)
    }

    fn is_param(&self, name: &str) -> bool {
        name == "Param_0" || self.params.iter().any(|(n, _)| n == name)
    }

    fn is_bound(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.iter().any(|v| v == name))
    }

    fn check_name(&self, name: &str) -> Result<()> {
        if self.is_field(name) || self.is_param(name) || self.is_bound(name) {
            Ok(())
        } else {
            Err(self.err(&format!("undeclared name '{name}'")))
        }
    }

    fn check_field(&self, name: &str) -> Result<()> {
        if self.is_field(name) {
            Ok(())
        } else {
            Err(self.err(&format!("undeclared field '{name}'")))
        }
    }

    fn program(mut self, source: &str) -> Result<RuleProgram> {
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Ident(k) if k == "field" => {
                    self.bump();
                    let name = self.ident("field name")?;
                    if RESERVED.contains(&name.as_str()) {
                        return Err(self.err(&format!("'{name}' is a reserved word")));
                    }
                    if self.is_field(&name) {
                        return Err(LabError::DuplicateField(name));
                    }
                    let width = self.int("field width")?;
                    if width < 1 || width > 64 {
                        return Err(self.err("field width must be in [1, 64]"));
                    }
                    let delayed = if self.keyword("delayed") {
                        self.bump();
                        true
                    } else {
                        false
                    };
                    self.fields.push(FieldDecl {
                        name,
                        width: width as u32,
                        delayed,
                    });
                }
                Tok::Ident(k) if k == "param" => {
                    self.bump();
                    let name = self.ident("parameter name")?;
                    if name == "Param_0" {
                        return Err(self.err("Param_0 is reserved for the program text"));
                    }
                    self.expect(Tok::Equals, "'='")?;
                    let value = match self.bump() {
                        Some(Tok::Str(s)) => s,
                        _ => return Err(self.err("expected string value")),
                    };
                    self.params.push((name, value));
                }
                Tok::Ident(k) if k == "maxdelay" => {
                    self.bump();
                    let p = self.int("maximum delay")?;
                    if p < 1 {
                        return Err(self.err("maxdelay must be at least 1"));
                    }
                    self.max_delay = Some(p as u32);
                }
                Tok::Ident(k) if k == "subrule" => {
                    self.bump();
                    let name = self.ident("subrule name")?;
                    self.expect(Tok::LParen, "'('")?;
                    let mut args = Vec::new();
                    while self.peek() != Some(&Tok::RParen) {
                        if !args.is_empty() {
                            self.expect(Tok::Comma, "','")?;
                        }
                        args.push(self.ident("argument name")?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    self.scopes.push(args.clone());
                    let body = self.block()?;
                    self.scopes.pop();
                    self.subrules.push(SubruleDecl { name, args, body });
                }
                Tok::Ident(k) if k == "rule" => {
                    self.bump();
                    let name = self.ident("rule name")?;
                    let body = self.block()?;
                    self.rules.push(RuleDecl { name, body });
                }
                _ => return Err(self.err("expected a declaration or rule")),
            }
        }
        RuleProgram::assemble(
            source.to_string(),
            self.fields,
            self.max_delay,
            self.params,
            self.subrules,
            self.rules,
        )
    }

    fn block(&mut self) -> Result<Stmt> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut phases = Vec::new();
        let mut current = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unbalanced '{': expected '}'")),
                Some(Tok::RBrace) => {
                    self.bump();
                    break;
                }
                Some(Tok::Semi) => {
                    self.bump();
                    phases.push(join_parallel(std::mem::take(&mut current))?);
                }
                Some(Tok::Parallel) => {
                    self.bump();
                    if current.is_empty() {
                        return Err(self.err("'||' needs a preceding statement"));
                    }
                }
                _ => current.push(self.stmt()?),
            }
        }
        phases.push(join_parallel(current)?);
        if phases.len() == 1 {
            Ok(phases.pop().unwrap())
        } else {
            Ok(Stmt::Seq(phases))
        }
    }

    fn stmt(&mut self) -> Result<Stmt> {
        match self.peek() {
            Some(Tok::LBrace) => self.block(),
            Some(Tok::Ident(k)) => match k.as_str() {
                "cond" => {
                    self.bump();
                    self.expect(Tok::LBrace, "'{' after cond")?;
                    let mut arms = Vec::new();
                    let mut default = None;
                    loop {
                        match self.peek() {
                            None => return Err(self.err("unbalanced 'cond {': expected '}'")),
                            Some(Tok::RBrace) => {
                                self.bump();
                                break;
                            }
                            Some(Tok::Question) => {
                                self.bump();
                                let c = self.expr()?;
                                self.expect(Tok::Bang, "'!' after condition")?;
                                let a = self.stmt()?;
                                arms.push((c, a));
                            }
                            Some(Tok::QuestionBang) => {
                                self.bump();
                                if default.is_some() {
                                    return Err(self.err("duplicate '?!' default"));
                                }
                                default = Some(Box::new(self.stmt()?));
                            }
                            _ => return Err(self.err("expected '?', '?!' or '}' in cond")),
                        }
                    }
                    Ok(Stmt::Cond { arms, default })
                }
                "let" => {
                    self.bump();
                    let var = self.ident("binding name")?;
                    self.expect(Tok::Equals, "'='")?;
                    let value = self.expr()?;
                    self.scopes.push(vec![var.clone()]);
                    let body = self.block()?;
                    self.scopes.pop();
                    Ok(Stmt::Let {
                        var,
                        value,
                        body: Box::new(body),
                    })
                }
                "pfor" | "for" => {
                    let parallel = k == "pfor";
                    self.bump();
                    let var = self.ident("loop variable")?;
                    if !self.keyword("in") {
                        return Err(self.err("expected 'in'"));
                    }
                    self.bump();
                    let values = self.index_set()?;
                    self.scopes.push(vec![var.clone()]);
                    let body = Box::new(self.block()?);
                    self.scopes.pop();
                    Ok(if parallel {
                        Stmt::PFor { var, values, body }
                    } else {
                        Stmt::For { var, values, body }
                    })
                }
                "repeat" => {
                    self.bump();
                    let count = self.expr()?;
                    if !self.keyword("times") {
                        return Err(self.err("expected 'times'"));
                    }
                    self.bump();
                    let body = Box::new(self.block()?);
                    Ok(Stmt::Repeat { count, body })
                }
                "write" => {
                    self.bump();
                    self.expect(Tok::LParen, "'('")?;
                    let source = match self.bump() {
                        Some(Tok::Str(s)) => WriteSource::Literal(s),
                        Some(Tok::Ident(p)) => {
                            if !self.is_param(&p) {
                                return Err(self.err(&format!("unknown parameter '{p}'")));
                            }
                            WriteSource::Param(p)
                        }
                        _ => return Err(self.err("expected string or parameter")),
                    };
                    self.expect(Tok::Comma, "','")?;
                    let field = self.ident("field name")?;
                    self.check_field(&field)?;
                    self.expect(Tok::LBracket, "'['")?;
                    let lo = self.expr()?;
                    self.expect(Tok::DotDot, "'..'")?;
                    let hi = self.expr()?;
                    self.expect(Tok::RBracket, "']'")?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Stmt::Write {
                        source,
                        field,
                        lo,
                        hi,
                    })
                }
                _ => {
                    // Assignment or subrule call.
                    let name = self.ident("statement")?;
                    match self.peek() {
                        Some(Tok::Assign) => {
                            self.bump();
                            self.check_field(&name)?;
                            let value = self.expr()?;
                            Ok(Stmt::Assign {
                                field: name,
                                delay: None,
                                value,
                            })
                        }
                        Some(Tok::AssignDelay(p)) => {
                            let p = *p;
                            self.bump();
                            self.check_field(&name)?;
                            let value = self.expr()?;
                            Ok(Stmt::Assign {
                                field: name,
                                delay: Some(p),
                                value,
                            })
                        }
                        Some(Tok::LParen) => {
                            self.bump();
                            if !self.subrules.iter().any(|s| s.name == name) {
                                return Err(self.err(&format!("unknown subrule '{name}'")));
                            }
                            let mut args = Vec::new();
                            while self.peek() != Some(&Tok::RParen) {
                                if !args.is_empty() {
                                    self.expect(Tok::Comma, "','")?;
                                }
                                args.push(self.expr()?);
                            }
                            self.expect(Tok::RParen, "')'")?;
                            Ok(Stmt::Call { name, args })
                        }
                        _ => Err(self.err("expected ':=' or '(' after identifier")),
                    }
                }
            },
            _ => Err(self.err("expected a statement")),
        }
    }

    fn index_set(&mut self) -> Result<Vec<i64>> {
        self.expect(Tok::LBrace, "'{'")?;
        let first = self.int("integer")?;
        let mut values = vec![first];
        if self.peek() == Some(&Tok::DotDot) {
            self.bump();
            let last = self.int("integer")?;
            if last < first {
                return Err(self.err("empty range"));
            }
            values = (first..=last).collect();
        } else {
            while self.peek() == Some(&Tok::Comma) {
                self.bump();
                values.push(self.int("integer")?);
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        Ok(values)
    }

    fn expr(&mut self) -> Result<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut e = self.and_expr()?;
        while self.keyword("or") {
            self.bump();
            let r = self.and_expr()?;
            e = Expr::Bin(BinOp::Or, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut e = self.cmp_expr()?;
        while self.keyword("and") {
            self.bump();
            let r = self.cmp_expr()?;
            e = Expr::Bin(BinOp::And, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        let e = self.add_expr()?;
        let op = match self.peek() {
            Some(Tok::EqEq) => Some(BinOp::Eq),
            Some(Tok::Ne) => Some(BinOp::Ne),
            Some(Tok::Lt) => Some(BinOp::Lt),
            Some(Tok::Le) => Some(BinOp::Le),
            Some(Tok::Gt) => Some(BinOp::Gt),
            Some(Tok::Ge) => Some(BinOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let r = self.add_expr()?;
            Ok(Expr::Bin(op, Box::new(e), Box::new(r)))
        } else {
            Ok(e)
        }
    }

    fn add_expr(&mut self) -> Result<Expr> {
        let mut e = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let r = self.mul_expr()?;
            e = Expr::Bin(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn mul_expr(&mut self) -> Result<Expr> {
        let mut e = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::Ident(k)) if k == "mod" => BinOp::Mod,
                Some(Tok::Ident(k)) if k == "amod" => BinOp::Amod,
                _ => break,
            };
            self.bump();
            let r = self.unary_expr()?;
            e = Expr::Bin(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn unary_expr(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary_expr()?)))
            }
            Some(Tok::Ident(k)) if k == "not" => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary_expr()?)))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(k)) if k == "all" || k == "some" => {
                self.bump();
                let var = self.ident("quantifier variable")?;
                if !self.keyword("in") {
                    return Err(self.err("expected 'in'"));
                }
                self.bump();
                let values = self.index_set()?;
                self.expect(Tok::Colon, "':'")?;
                self.scopes.push(vec![var.clone()]);
                let body = Box::new(self.expr()?);
                self.scopes.pop();
                Ok(Expr::Quant {
                    all: k == "all",
                    var,
                    values,
                    body,
                })
            }
            Some(Tok::Ident(name)) => {
                if RESERVED.contains(&name.as_str()) {
                    return Err(self.err(&format!("'{name}' is a reserved word")));
                }
                self.bump();
                if self.peek() == Some(&Tok::Caret) {
                    self.bump();
                    self.check_field(&name)?;
                    let nb = match self.peek().cloned() {
                        Some(Tok::Int(j)) => {
                            self.bump();
                            NeighborRef::Index(j)
                        }
                        Some(Tok::Minus) => {
                            self.bump();
                            let j = self.int("neighbor index")?;
                            NeighborRef::Index(-j)
                        }
                        Some(Tok::Ident(v)) => {
                            self.bump();
                            if !self.is_bound(&v) {
                                return Err(self.err(&format!("unbound neighbor index '{v}'")));
                            }
                            NeighborRef::Var(v)
                        }
                        _ => return Err(self.err("expected neighbor index after '^'")),
                    };
                    if let NeighborRef::Index(j) = nb {
                        if !(-1..=1).contains(&j) {
                            return Err(self.err("neighbor index must be -1, 0 or 1"));
                        }
                    }
                    Ok(Expr::Ref { name, nb })
                } else {
                    self.check_name(&name)?;
                    Ok(Expr::Ref {
                        name,
                        nb: NeighborRef::Own,
                    })
                }
            }
            _ => Err(self.err("expected an expression")),
        }
    }
}

fn join_parallel(mut stmts: Vec<Stmt>) -> Result<Stmt> {
    match stmts.len() {
        0 => Ok(Stmt::Parallel(Vec::new())),
        1 => Ok(stmts.pop().unwrap()),
        _ => Ok(Stmt::Parallel(stmts)),
    }
}

const RESERVED: &[&str] = &[
    "field", "param", "maxdelay", "rule", "subrule", "cond", "let", "pfor", "for", "repeat",
    "times", "write", "in", "all", "some", "mod", "amod", "and", "or", "not", "delayed",
];

/// Parses a program in the concrete syntax.
pub fn parse(source: &str) -> Result<RuleProgram> {
    let toks = Lexer::new(source).tokens()?;
    let parser = Parser {
        toks,
        at: 0,
        fields: Vec::new(),
        params: Vec::new(),
        max_delay: None,
        subrules: Vec::new(),
        rules: Vec::new(),
        scopes: Vec::new(),
    };
    parser.program(source)
}
