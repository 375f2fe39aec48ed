//! Syntax tree of the rule language, its pretty-printer and indented dump.

use std::fmt;

/// Neighbor selector on a field reference: `F` reads the own cell, `F^j`
/// reads the cell `j` sites away (`j` in `{-1, 0, 1}` or a bound variable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NeighborRef {
    Own,
    Index(i64),
    Var(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Amod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Amod => "amod",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Mod | BinOp::Amod => 5,
        }
    }
}

/// Integer expressions; comparisons and connectives yield 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    /// A field of a cell, or a let/loop/param name when `nb` is `Own` and
    /// the identifier resolves to a binding instead of a field.
    Ref { name: String, nb: NeighborRef },
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `all j in {..}: e` or `some j in {..}: e`.
    Quant {
        all: bool,
        var: String,
        values: Vec<i64>,
        body: Box<Expr>,
    },
}

/// Source of a `write` statement: a binary string literal or a parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WriteSource {
    Literal(String),
    Param(String),
}

/// Statements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    /// `F := e` or `F :=_p e` (delayed assignment through Fut/Wait).
    Assign {
        field: String,
        delay: Option<u32>,
        value: Expr,
    },
    /// `cond { ? c ! a ... ?! d }`.
    Cond {
        arms: Vec<(Expr, Stmt)>,
        default: Option<Box<Stmt>>,
    },
    /// Simultaneous statements (juxtaposition or `||` inside a block).
    Parallel(Vec<Stmt>),
    /// Temporal phases separated by `;`, realized through the Age field.
    Seq(Vec<Stmt>),
    /// Parallel instantiation over an index set.
    PFor {
        var: String,
        values: Vec<i64>,
        body: Box<Stmt>,
    },
    /// Temporal iteration over an index set.
    For {
        var: String,
        values: Vec<i64>,
        body: Box<Stmt>,
    },
    /// `repeat n times { .. }`; the count may use parameters.
    Repeat { count: Expr, body: Box<Stmt> },
    /// `let x = e { .. }`.
    Let {
        var: String,
        value: Expr,
        body: Box<Stmt>,
    },
    /// `write(S, F[a..b])`: cells whose address lies in `[a, b]` set `F`
    /// from their slice of the string `S`.
    Write {
        source: WriteSource,
        field: String,
        lo: Expr,
        hi: Expr,
    },
    /// Subrule invocation.
    Call { name: String, args: Vec<Expr> },
}

/// A field declaration: width in bits, packed in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub width: u32,
    pub delayed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubruleDecl {
    pub name: String,
    pub args: Vec<String>,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDecl {
    pub name: String,
    pub body: Stmt,
}

fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>, parent_prec: u8) -> fmt::Result {
    match e {
        Expr::Int(v) => write!(f, "{v}"),
        Expr::Ref { name, nb } => match nb {
            NeighborRef::Own => write!(f, "{name}"),
            NeighborRef::Index(j) => write!(f, "{name}^{j}"),
            NeighborRef::Var(v) => write!(f, "{name}^{v}"),
        },
        Expr::Neg(inner) => {
            write!(f, "-")?;
            fmt_expr(inner, f, 6)
        }
        Expr::Not(inner) => {
            write!(f, "not ")?;
            fmt_expr(inner, f, 6)
        }
        Expr::Bin(op, l, r) => {
            let prec = op.precedence();
            if prec < parent_prec {
                write!(f, "(")?;
            }
            // Comparisons do not chain in the grammar, so an equal-precedence
            // child on either side needs its own parentheses.
            let non_assoc = matches!(
                op,
                BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
            );
            fmt_expr(l, f, if non_assoc { prec + 1 } else { prec })?;
            write!(f, " {} ", op.symbol())?;
            fmt_expr(r, f, prec + 1)?;
            if prec < parent_prec {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Quant {
            all,
            var,
            values,
            body,
        } => {
            if parent_prec > 0 {
                write!(f, "(")?;
            }
            write!(
                f,
                "{} {var} in {}: ",
                if *all { "all" } else { "some" },
                fmt_set(values)
            )?;
            fmt_expr(body, f, 0)?;
            if parent_prec > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

fn fmt_set(values: &[i64]) -> String {
    let items: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f, 0)
    }
}

struct Indented<'a>(&'a Stmt, usize);

impl fmt::Display for Indented<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pad = "  ".repeat(self.1);
        let next = self.1 + 1;
        match self.0 {
            Stmt::Assign {
                field,
                delay,
                value,
            } => match delay {
                Some(p) => writeln!(f, "{pad}{field} :=_{p} {value}"),
                None => writeln!(f, "{pad}{field} := {value}"),
            },
            Stmt::Cond { arms, default } => {
                writeln!(f, "{pad}cond {{")?;
                for (c, a) in arms {
                    writeln!(f, "{pad}  ? {c}")?;
                    writeln!(f, "{pad}  ! {{")?;
                    write!(f, "{}", Indented(a, next + 1))?;
                    writeln!(f, "{pad}  }}")?;
                }
                if let Some(d) = default {
                    writeln!(f, "{pad}  ?! {{")?;
                    write!(f, "{}", Indented(d, next + 1))?;
                    writeln!(f, "{pad}  }}")?;
                }
                writeln!(f, "{pad}}}")
            }
            Stmt::Parallel(children) => {
                writeln!(f, "{pad}{{")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        writeln!(f, "{pad}||")?;
                    }
                    write!(f, "{}", Indented(c, next))?;
                }
                writeln!(f, "{pad}}}")
            }
            Stmt::Seq(phases) => {
                writeln!(f, "{pad}{{")?;
                for (i, p) in phases.iter().enumerate() {
                    if i > 0 {
                        writeln!(f, "{pad};")?;
                    }
                    write!(f, "{}", Indented(p, next))?;
                }
                writeln!(f, "{pad}}}")
            }
            Stmt::PFor { var, values, body } => {
                writeln!(f, "{pad}pfor {var} in {} {{", fmt_set(values))?;
                write!(f, "{}", Indented(body, next))?;
                writeln!(f, "{pad}}}")
            }
            Stmt::For { var, values, body } => {
                writeln!(f, "{pad}for {var} in {} {{", fmt_set(values))?;
                write!(f, "{}", Indented(body, next))?;
                writeln!(f, "{pad}}}")
            }
            Stmt::Repeat { count, body } => {
                writeln!(f, "{pad}repeat {count} times {{")?;
                write!(f, "{}", Indented(body, next))?;
                writeln!(f, "{pad}}}")
            }
            Stmt::Let { var, value, body } => {
                writeln!(f, "{pad}let {var} = {value} {{")?;
                write!(f, "{}", Indented(body, next))?;
                writeln!(f, "{pad}}}")
            }
            Stmt::Write {
                source,
                field,
                lo,
                hi,
            } => {
                let src = match source {
                    WriteSource::Literal(s) => format!("{s:?}"),
                    WriteSource::Param(p) => p.clone(),
                };
                writeln!(f, "{pad}write({src}, {field}[{lo}..{hi}])")
            }
            Stmt::Call { name, args } => {
                let items: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                writeln!(f, "{pad}{name}({})", items.join(", "))
            }
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Indented(self, 0))
    }
}

/// Whole program text in the concrete syntax; reparsing it yields an
/// identical tree.
pub fn pretty_program(
    fields: &[FieldDecl],
    max_delay: Option<u32>,
    params: &[(String, String)],
    subrules: &[SubruleDecl],
    rules: &[RuleDecl],
) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for fd in fields {
        let suffix = if fd.delayed { " delayed" } else { "" };
        let _ = writeln!(out, "field {} {}{}", fd.name, fd.width, suffix);
    }
    if let Some(p) = max_delay {
        let _ = writeln!(out, "maxdelay {p}");
    }
    for (name, value) in params {
        let _ = writeln!(out, "param {name} = {value:?}");
    }
    for s in subrules {
        let _ = writeln!(out, "subrule {}({}) {{", s.name, s.args.join(", "));
        let _ = write!(out, "{}", Indented(&s.body, 1));
        let _ = writeln!(out, "}}");
    }
    for r in rules {
        let _ = writeln!(out, "rule {} {{", r.name);
        let _ = write!(out, "{}", Indented(&r.body, 1));
        let _ = writeln!(out, "}}");
    }
    out
}

/// Indented structural dump used by `rulecheck`.
pub fn dump_stmt(s: &Stmt, depth: usize, out: &mut String) {
    use std::fmt::Write as _;
    let pad = "  ".repeat(depth);
    match s {
        Stmt::Assign {
            field,
            delay,
            value,
        } => {
            let d = delay.map(|p| format!(" delay={p}")).unwrap_or_default();
            let _ = writeln!(out, "{pad}assign {field}{d} <- {value}");
        }
        Stmt::Cond { arms, default } => {
            let _ = writeln!(out, "{pad}cond");
            for (c, a) in arms {
                let _ = writeln!(out, "{pad}  when {c}");
                dump_stmt(a, depth + 2, out);
            }
            if let Some(d) = default {
                let _ = writeln!(out, "{pad}  otherwise");
                dump_stmt(d, depth + 2, out);
            }
        }
        Stmt::Parallel(children) => {
            let _ = writeln!(out, "{pad}parallel");
            for c in children {
                dump_stmt(c, depth + 1, out);
            }
        }
        Stmt::Seq(phases) => {
            let _ = writeln!(out, "{pad}sequence");
            for p in phases {
                dump_stmt(p, depth + 1, out);
            }
        }
        Stmt::PFor { var, values, body } => {
            let _ = writeln!(out, "{pad}pfor {var} in {}", fmt_set(values));
            dump_stmt(body, depth + 1, out);
        }
        Stmt::For { var, values, body } => {
            let _ = writeln!(out, "{pad}for {var} in {}", fmt_set(values));
            dump_stmt(body, depth + 1, out);
        }
        Stmt::Repeat { count, body } => {
            let _ = writeln!(out, "{pad}repeat {count}");
            dump_stmt(body, depth + 1, out);
        }
        Stmt::Let { var, value, body } => {
            let _ = writeln!(out, "{pad}let {var} = {value}");
            dump_stmt(body, depth + 1, out);
        }
        Stmt::Write {
            source,
            field,
            lo,
            hi,
        } => {
            let src = match source {
                WriteSource::Literal(s) => format!("{s:?}"),
                WriteSource::Param(p) => format!("param {p}"),
            };
            let _ = writeln!(out, "{pad}write {src} -> {field}[{lo}..{hi}]");
        }
        Stmt::Call { name, args } => {
            let items: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "{pad}call {name}({})", items.join(", "));
        }
    }
}
