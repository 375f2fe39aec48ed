//! The rule language: parser, temporal lowering, and interpreter.
//!
//! A program declares bit fields (packed in declaration order), optional
//! delayed fields with a `maxdelay` bound, named string parameters, subrules
//! and rules. Rules are applied simultaneously each step with all reads
//! seeing the pre-step state; conflicting writes resolve in favor of the
//! later rule. Temporal structure (`;`, `for`, `repeat`) is lowered at parse
//! time into guards on the `Age` field with cumulative step offsets, exactly
//! the standard replacement of sequencing by age intervals.
//!
//! A delayed field `F` owns hidden `F.fut` and `F.wait` companions. The
//! assignment `F :=_p v` stores `v` into `F.fut` and `p` into `F.wait`;
//! afterwards the wait counter ticks down once per step and the pending
//! value commits into `F` as the counter reaches one, so a delay of 1 is an
//! ordinary assignment and a delay of `p` lands after `p` steps.

mod ast;
mod parse;

pub use ast::{
    dump_stmt, BinOp, Expr, FieldDecl, NeighborRef, RuleDecl, Stmt, SubruleDecl, WriteSource,
};
pub use parse::parse;

use crate::dynamics::TransitionFunction;
use crate::error::{LabError, Result};
use crate::state::{amod, Cell, FieldMap};

/// A parsed rule program.
#[derive(Debug, Clone)]
pub struct RuleProgram {
    source: String,
    fields: Vec<FieldDecl>,
    max_delay: u32,
    params: Vec<(String, String)>,
    subrules: Vec<SubruleDecl>,
    rules: Vec<RuleDecl>,
    /// Executable form: calls inlined, loops unrolled, sequencing lowered
    /// to Age guards.
    lowered: Vec<Stmt>,
    layout: FieldMap,
}

/// Upper bound on unrolled statements per rule, guarding runaway repeats.
const MAX_UNROLLED: usize = 1 << 16;

impl RuleProgram {
    pub(crate) fn assemble(
        source: String,
        fields: Vec<FieldDecl>,
        max_delay: Option<u32>,
        params: Vec<(String, String)>,
        subrules: Vec<SubruleDecl>,
        rules: Vec<RuleDecl>,
    ) -> Result<Self> {
        if fields.iter().any(|f| f.delayed) && max_delay.is_none() {
            return Err(LabError::Parse(
                "programs with delayed fields must declare 'maxdelay'".into(),
            ));
        }
        let max_delay = max_delay.unwrap_or(1);
        let mut layout_fields: Vec<(String, u32)> = fields
            .iter()
            .map(|f| (f.name.clone(), f.width))
            .collect();
        let wait_bits = 32 - max_delay.leading_zeros();
        for f in fields.iter().filter(|f| f.delayed) {
            layout_fields.push((format!("{}.fut", f.name), f.width));
            layout_fields.push((format!("{}.wait", f.name), wait_bits));
        }
        let refs: Vec<(&str, u32)> = layout_fields
            .iter()
            .map(|(n, w)| (n.as_str(), *w))
            .collect();
        let layout = FieldMap::packed(&refs)?;

        let mut prog = RuleProgram {
            source,
            fields,
            max_delay,
            params,
            subrules,
            rules,
            lowered: Vec::new(),
            layout,
        };
        prog.lowered = prog
            .rules
            .iter()
            .map(|r| prog.lower_rule(&r.body))
            .collect::<Result<Vec<_>>>()?;
        Ok(prog)
    }

    pub fn capacity(&self) -> u32 {
        self.layout.capacity()
    }

    /// Packed bit layout, including the hidden `.fut` / `.wait` companions.
    pub fn layout(&self) -> &FieldMap {
        &self.layout
    }

    pub fn fields(&self) -> &[FieldDecl] {
        &self.fields
    }

    pub fn rules(&self) -> &[RuleDecl] {
        &self.rules
    }

    pub fn subrules(&self) -> &[SubruleDecl] {
        &self.subrules
    }

    pub fn max_delay(&self) -> u32 {
        self.max_delay
    }

    /// Executable statements, one per rule, after lowering.
    pub fn lowered_rules(&self) -> &[Stmt] {
        &self.lowered
    }

    /// Named parameter value; `Param_0` is the program source itself.
    pub fn param(&self, name: &str) -> Option<&str> {
        if name == "Param_0" {
            return Some(&self.source);
        }
        self.params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn params(&self) -> &[(String, String)] {
        &self.params
    }

    /// Canonical concrete-syntax rendering; reparsing yields an equal AST.
    pub fn pretty(&self) -> String {
        let max_delay = if self.fields.iter().any(|f| f.delayed) {
            Some(self.max_delay)
        } else {
            None
        };
        ast::pretty_program(&self.fields, max_delay, &self.params, &self.subrules, &self.rules)
    }

    /// Indented structural dump of declarations and rule bodies.
    pub fn dump(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "program capacity={}", self.capacity());
        for f in &self.fields {
            let d = if f.delayed { " delayed" } else { "" };
            let idx = self.layout.indices(&f.name).unwrap();
            let _ = writeln!(
                out,
                "  field {} width={} bits={}..{}{d}",
                f.name,
                f.width,
                idx[0],
                idx[idx.len() - 1]
            );
        }
        for (name, value) in &self.params {
            let _ = writeln!(out, "  param {name} = {value:?}");
        }
        for s in &self.subrules {
            let _ = writeln!(out, "  subrule {}({})", s.name, s.args.join(", "));
            dump_stmt(&s.body, 2, &mut out);
        }
        for r in &self.rules {
            let _ = writeln!(out, "  rule {}", r.name);
            dump_stmt(&r.body, 2, &mut out);
        }
        out
    }

    fn field_decl(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    // ---- lowering -------------------------------------------------------

    fn lower_rule(&self, body: &Stmt) -> Result<Stmt> {
        let inlined = self.inline_calls(body, 0)?;
        let unrolled = self.unroll(&inlined)?;
        let total = duration(&unrolled);
        if total <= 1 {
            return Ok(unrolled);
        }
        if !self.layout.contains("Age") {
            return Err(LabError::Parse(
                "temporal sequencing needs a declared 'Age' field".into(),
            ));
        }
        Ok(self.guard_temporal(&unrolled, 0))
    }

    fn inline_calls(&self, s: &Stmt, depth: usize) -> Result<Stmt> {
        if depth > 16 {
            return Err(LabError::Parse("subrule calls nest too deeply".into()));
        }
        Ok(match s {
            Stmt::Call { name, args } => {
                let sub = self
                    .subrules
                    .iter()
                    .find(|d| d.name == *name)
                    .ok_or_else(|| LabError::Parse(format!("unknown subrule '{name}'")))?;
                if sub.args.len() != args.len() {
                    return Err(LabError::Parse(format!(
                        "subrule '{name}' expects {} arguments",
                        sub.args.len()
                    )));
                }
                let mut body = self.inline_calls(&sub.body, depth + 1)?;
                for (arg, value) in sub.args.iter().zip(args.iter()).rev() {
                    body = Stmt::Let {
                        var: arg.clone(),
                        value: value.clone(),
                        body: Box::new(body),
                    };
                }
                body
            }
            Stmt::Cond { arms, default } => Stmt::Cond {
                arms: arms
                    .iter()
                    .map(|(c, a)| Ok((c.clone(), self.inline_calls(a, depth)?)))
                    .collect::<Result<Vec<_>>>()?,
                default: match default {
                    Some(d) => Some(Box::new(self.inline_calls(d, depth)?)),
                    None => None,
                },
            },
            Stmt::Parallel(children) => Stmt::Parallel(
                children
                    .iter()
                    .map(|c| self.inline_calls(c, depth))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Stmt::Seq(phases) => Stmt::Seq(
                phases
                    .iter()
                    .map(|p| self.inline_calls(p, depth))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Stmt::PFor { var, values, body } => Stmt::PFor {
                var: var.clone(),
                values: values.clone(),
                body: Box::new(self.inline_calls(body, depth)?),
            },
            Stmt::For { var, values, body } => Stmt::For {
                var: var.clone(),
                values: values.clone(),
                body: Box::new(self.inline_calls(body, depth)?),
            },
            Stmt::Repeat { count, body } => Stmt::Repeat {
                count: count.clone(),
                body: Box::new(self.inline_calls(body, depth)?),
            },
            Stmt::Let { var, value, body } => Stmt::Let {
                var: var.clone(),
                value: value.clone(),
                body: Box::new(self.inline_calls(body, depth)?),
            },
            other => other.clone(),
        })
    }

    /// Evaluates an expression over parameters only (loop unrolling).
    fn const_eval(&self, e: &Expr) -> Result<i64> {
        match e {
            Expr::Int(v) => Ok(*v),
            Expr::Ref {
                name,
                nb: NeighborRef::Own,
            } => {
                let v = self.param(name).ok_or_else(|| {
                    LabError::Parse(format!("'{name}' is not a constant parameter"))
                })?;
                v.trim()
                    .parse::<i64>()
                    .map_err(|_| LabError::Parse(format!("parameter '{name}' is not numeric")))
            }
            Expr::Neg(inner) => Ok(-self.const_eval(inner)?),
            Expr::Bin(op, l, r) => {
                let l = self.const_eval(l)?;
                let r = self.const_eval(r)?;
                apply_binop(*op, l, r)
            }
            _ => Err(LabError::Parse(
                "loop bounds must be parameter constants".into(),
            )),
        }
    }

    fn unroll(&self, s: &Stmt) -> Result<Stmt> {
        Ok(match s {
            Stmt::Repeat { count, body } => {
                let n = self.const_eval(count)?;
                if n < 0 || n as usize > MAX_UNROLLED {
                    return Err(LabError::Parse(format!("repeat count {n} out of range")));
                }
                let body = self.unroll(body)?;
                Stmt::Seq((0..n).map(|_| body.clone()).collect())
            }
            Stmt::For { var, values, body } => {
                let body = self.unroll(body)?;
                Stmt::Seq(
                    values
                        .iter()
                        .map(|&v| Stmt::Let {
                            var: var.clone(),
                            value: Expr::Int(v),
                            body: Box::new(body.clone()),
                        })
                        .collect(),
                )
            }
            Stmt::PFor { var, values, body } => {
                let body = self.unroll(body)?;
                Stmt::Parallel(
                    values
                        .iter()
                        .map(|&v| Stmt::Let {
                            var: var.clone(),
                            value: Expr::Int(v),
                            body: Box::new(body.clone()),
                        })
                        .collect(),
                )
            }
            Stmt::Cond { arms, default } => Stmt::Cond {
                arms: arms
                    .iter()
                    .map(|(c, a)| Ok((c.clone(), self.unroll(a)?)))
                    .collect::<Result<Vec<_>>>()?,
                default: match default {
                    Some(d) => Some(Box::new(self.unroll(d)?)),
                    None => None,
                },
            },
            Stmt::Parallel(children) => Stmt::Parallel(
                children
                    .iter()
                    .map(|c| self.unroll(c))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Stmt::Seq(phases) => Stmt::Seq(
                phases
                    .iter()
                    .map(|p| self.unroll(p))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Stmt::Let { var, value, body } => Stmt::Let {
                var: var.clone(),
                value: value.clone(),
                body: Box::new(self.unroll(body)?),
            },
            other => other.clone(),
        })
    }

    /// Rewrites temporal structure into `Age` guards with cumulative step
    /// offsets (the constants `t_i`). `start` is the absolute offset of this
    /// statement within its rule.
    fn guard_temporal(&self, s: &Stmt, start: i64) -> Stmt {
        match s {
            Stmt::Seq(phases) => {
                let mut out = Vec::with_capacity(phases.len());
                let mut at = start;
                for p in phases {
                    out.push(self.guard_temporal(p, at));
                    at += duration(p) as i64;
                }
                Stmt::Parallel(out)
            }
            Stmt::Parallel(children) => Stmt::Parallel(
                children
                    .iter()
                    .map(|c| self.guard_temporal(c, start))
                    .collect(),
            ),
            Stmt::Cond { arms, default } => Stmt::Cond {
                arms: arms
                    .iter()
                    .map(|(c, a)| (c.clone(), self.guard_temporal(a, start)))
                    .collect(),
                default: default
                    .as_ref()
                    .map(|d| Box::new(self.guard_temporal(d, start))),
            },
            Stmt::Let { var, value, body } => Stmt::Let {
                var: var.clone(),
                value: value.clone(),
                body: Box::new(self.guard_temporal(body, start)),
            },
            atomic => {
                let age = Expr::Ref {
                    name: "Age".into(),
                    nb: NeighborRef::Own,
                };
                Stmt::Cond {
                    arms: vec![(
                        Expr::Bin(BinOp::Eq, Box::new(age), Box::new(Expr::Int(start))),
                        atomic.clone(),
                    )],
                    default: None,
                }
            }
        }
    }

    // ---- interpretation -------------------------------------------------

    /// Applies the program to a neighborhood of packed states.
    pub fn interpret(&self, left: u64, center: u64, right: u64) -> Result<u64> {
        self.interpret_cells(Cell::State(left), Cell::State(center), Cell::State(right))
    }

    /// Applies the program; vacant neighbors are allowed as long as no rule
    /// reads a field of them.
    pub fn interpret_cells(&self, left: Cell, center: Cell, right: Cell) -> Result<u64> {
        let center = center.state()?;
        let mut ctx = ExecCtx {
            prog: self,
            cells: [left, Cell::State(center), right],
            env: Vec::new(),
            writes: Vec::new(),
        };
        for rule in &self.lowered {
            ctx.exec(rule)?;
        }
        let ExecCtx { writes, .. } = ctx;
        // Plain writes land directly, later writes override earlier ones.
        let mut out = center;
        let mut delayed: Vec<(String, u64, u32)> = Vec::new();
        for w in writes {
            match w {
                WriteOp::Plain { field, value } => {
                    out = self.layout.set(out, &field, value)?;
                }
                WriteOp::Delayed { field, value, delay } => {
                    delayed.retain(|(f, _, _)| *f != field);
                    delayed.push((field, value, delay));
                }
            }
        }
        self.delayed_assign_step(out, &delayed)
    }

    /// Applies one step of the waiting discipline: pending writes set the
    /// `Fut`/`Wait` companions, then every delayed field ticks its wait
    /// counter down, committing `Fut` into the visible field at one.
    pub fn delayed_assign_step(&self, state: u64, writes: &[(String, u64, u32)]) -> Result<u64> {
        let mut out = state;
        for (field, value, delay) in writes {
            let decl = self
                .field_decl(field)
                .ok_or_else(|| LabError::UnknownField(field.clone()))?;
            if !decl.delayed {
                return Err(LabError::RuleRuntime(format!(
                    "field '{field}' is not delayed"
                )));
            }
            if *delay < 1 || *delay > self.max_delay {
                return Err(LabError::RuleRuntime(format!(
                    "delay {delay} outside [1, {}]",
                    self.max_delay
                )));
            }
            out = self.layout.set(out, &format!("{field}.fut"), *value)?;
            out = self.layout.set(out, &format!("{field}.wait"), *delay as u64)?;
        }
        for decl in self.fields.iter().filter(|f| f.delayed) {
            let wait_name = format!("{}.wait", decl.name);
            let wait = self.layout.get(out, &wait_name)?;
            if wait == 1 {
                let fut = self.layout.get(out, &format!("{}.fut", decl.name))?;
                out = self.layout.set(out, &decl.name, fut)?;
                out = self.layout.set(out, &wait_name, 0)?;
            } else if wait > 1 {
                out = self.layout.set(out, &wait_name, wait - 1)?;
            }
        }
        Ok(out)
    }
}

fn duration(s: &Stmt) -> usize {
    match s {
        Stmt::Seq(phases) => phases.iter().map(duration).sum::<usize>().max(1),
        Stmt::Parallel(children) => children.iter().map(duration).max().unwrap_or(1),
        Stmt::Cond { arms, default } => arms
            .iter()
            .map(|(_, a)| duration(a))
            .chain(default.iter().map(|d| duration(d)))
            .max()
            .unwrap_or(1),
        Stmt::Let { body, .. } => duration(body),
        Stmt::PFor { body, .. } => duration(body),
        // For/Repeat are unrolled before durations matter; treat one
        // iteration as the unit if they survive.
        Stmt::For { values, body, .. } => values.len() * duration(body),
        Stmt::Repeat { body, .. } => duration(body),
        _ => 1,
    }
}

fn apply_binop(op: BinOp, l: i64, r: i64) -> Result<i64> {
    Ok(match op {
        BinOp::Add => l.wrapping_add(r),
        BinOp::Sub => l.wrapping_sub(r),
        BinOp::Mul => l.wrapping_mul(r),
        BinOp::Div => {
            if r == 0 {
                return Err(LabError::RuleRuntime("division by zero".into()));
            }
            l.wrapping_div(r)
        }
        BinOp::Mod => {
            if r == 0 {
                return Err(LabError::RuleRuntime("mod by zero".into()));
            }
            l.rem_euclid(r)
        }
        BinOp::Amod => {
            if r <= 2 {
                return Err(LabError::RuleRuntime("amod needs a modulus above 2".into()));
            }
            amod(l, r)
        }
        BinOp::Eq => (l == r) as i64,
        BinOp::Ne => (l != r) as i64,
        BinOp::Lt => (l < r) as i64,
        BinOp::Le => (l <= r) as i64,
        BinOp::Gt => (l > r) as i64,
        BinOp::Ge => (l >= r) as i64,
        BinOp::And => ((l != 0) && (r != 0)) as i64,
        BinOp::Or => ((l != 0) || (r != 0)) as i64,
    })
}

enum WriteOp {
    Plain { field: String, value: u64 },
    Delayed { field: String, value: u64, delay: u32 },
}

struct ExecCtx<'a> {
    prog: &'a RuleProgram,
    cells: [Cell; 3],
    env: Vec<(String, i64)>,
    writes: Vec<WriteOp>,
}

impl ExecCtx<'_> {
    fn lookup(&self, name: &str) -> Option<i64> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    fn field_value(&self, name: &str, offset: i64) -> Result<i64> {
        let cell = self.cells[(offset + 1) as usize];
        let state = cell.state().map_err(|_| {
            LabError::RuleRuntime(format!(
                "read of field '{name}' from a vacant neighbor at offset {offset}"
            ))
        })?;
        Ok(self.prog.layout.get(state, name)? as i64)
    }

    fn eval(&mut self, e: &Expr) -> Result<i64> {
        match e {
            Expr::Int(v) => Ok(*v),
            Expr::Ref { name, nb } => match nb {
                NeighborRef::Own => {
                    if let Some(v) = self.lookup(name) {
                        return Ok(v);
                    }
                    if self.prog.layout.contains(name) {
                        return self.field_value(name, 0);
                    }
                    if let Some(v) = self.prog.param(name) {
                        return v.trim().parse::<i64>().map_err(|_| {
                            LabError::RuleRuntime(format!(
                                "parameter '{name}' used numerically but not numeric"
                            ))
                        });
                    }
                    Err(LabError::RuleRuntime(format!("unbound name '{name}'")))
                }
                NeighborRef::Index(j) => self.field_value(name, *j),
                NeighborRef::Var(v) => {
                    let j = self
                        .lookup(v)
                        .ok_or_else(|| LabError::RuleRuntime(format!("unbound index '{v}'")))?;
                    if !(-1..=1).contains(&j) {
                        return Err(LabError::RuleRuntime(format!(
                            "neighbor index {j} out of range"
                        )));
                    }
                    self.field_value(name, j)
                }
            },
            Expr::Neg(inner) => Ok(-self.eval(inner)?),
            Expr::Not(inner) => Ok((self.eval(inner)? == 0) as i64),
            Expr::Bin(op, l, r) => {
                // Short-circuit the connectives.
                match op {
                    BinOp::And => {
                        if self.eval(l)? == 0 {
                            return Ok(0);
                        }
                        return Ok((self.eval(r)? != 0) as i64);
                    }
                    BinOp::Or => {
                        if self.eval(l)? != 0 {
                            return Ok(1);
                        }
                        return Ok((self.eval(r)? != 0) as i64);
                    }
                    _ => {}
                }
                let lv = self.eval(l)?;
                let rv = self.eval(r)?;
                apply_binop(*op, lv, rv)
            }
            Expr::Quant {
                all,
                var,
                values,
                body,
            } => {
                for &v in values {
                    self.env.push((var.clone(), v));
                    let holds = self.eval(body)? != 0;
                    self.env.pop();
                    if *all && !holds {
                        return Ok(0);
                    }
                    if !*all && holds {
                        return Ok(1);
                    }
                }
                Ok(*all as i64)
            }
        }
    }

    fn exec(&mut self, s: &Stmt) -> Result<()> {
        match s {
            Stmt::Assign {
                field,
                delay,
                value,
            } => {
                let decl = self
                    .prog
                    .field_decl(field)
                    .ok_or_else(|| LabError::UnknownField(field.clone()))?;
                let v = self.eval(value)? as u64;
                let width_mask = if decl.width == 64 {
                    u64::MAX
                } else {
                    (1u64 << decl.width) - 1
                };
                if decl.delayed {
                    self.writes.push(WriteOp::Delayed {
                        field: field.clone(),
                        value: v & width_mask,
                        delay: delay.unwrap_or(1),
                    });
                } else {
                    if let Some(p) = delay {
                        if *p != 1 {
                            return Err(LabError::RuleRuntime(format!(
                                "field '{field}' is not delayed; ':=_{p}' needs a delayed field"
                            )));
                        }
                    }
                    self.writes.push(WriteOp::Plain {
                        field: field.clone(),
                        value: v & width_mask,
                    });
                }
                Ok(())
            }
            Stmt::Cond { arms, default } => {
                for (c, a) in arms {
                    if self.eval(c)? != 0 {
                        return self.exec(a);
                    }
                }
                if let Some(d) = default {
                    return self.exec(d);
                }
                Ok(())
            }
            Stmt::Parallel(children) => {
                for c in children {
                    self.exec(c)?;
                }
                Ok(())
            }
            Stmt::Let { var, value, body } => {
                let v = self.eval(value)?;
                self.env.push((var.clone(), v));
                let r = self.exec(body);
                self.env.pop();
                r
            }
            Stmt::Write {
                source,
                field,
                lo,
                hi,
            } => {
                let lo = self.eval(lo)?;
                let hi = self.eval(hi)?;
                if lo < 0 || hi < lo {
                    return Err(LabError::RuleRuntime(format!(
                        "malformed write interval [{lo}, {hi}]"
                    )));
                }
                if !self.prog.layout.contains("Addr") {
                    return Err(LabError::RuleRuntime(
                        "write needs a declared 'Addr' field".into(),
                    ));
                }
                let addr = self.field_value("Addr", 0)?;
                if addr < lo || addr > hi {
                    return Ok(());
                }
                let decl = self
                    .prog
                    .field_decl(field)
                    .ok_or_else(|| LabError::UnknownField(field.clone()))?;
                let bits = match source {
                    WriteSource::Literal(s) => string_bits(s)?,
                    WriteSource::Param(p) => {
                        let v = self
                            .prog
                            .param(p)
                            .ok_or_else(|| LabError::RuleRuntime(format!("unknown param '{p}'")))?;
                        string_bits(v)?
                    }
                };
                let offset = (addr - lo) as usize * decl.width as usize;
                let mut v = 0u64;
                for b in 0..decl.width as usize {
                    if bits.get(offset + b).copied().unwrap_or(false) {
                        v |= 1 << b;
                    }
                }
                if decl.delayed {
                    self.writes.push(WriteOp::Delayed {
                        field: field.clone(),
                        value: v,
                        delay: 1,
                    });
                } else {
                    self.writes.push(WriteOp::Plain {
                        field: field.clone(),
                        value: v,
                    });
                }
                Ok(())
            }
            Stmt::PFor { var, values, body } => {
                for &v in values {
                    self.env.push((var.clone(), v));
                    let r = self.exec(body);
                    self.env.pop();
                    r?;
                }
                Ok(())
            }
            Stmt::Seq(_) | Stmt::For { .. } | Stmt::Repeat { .. } | Stmt::Call { .. } => {
                Err(LabError::RuleRuntime(
                    "temporal or call statement survived lowering".into(),
                ))
            }
        }
    }
}

/// Bit view of a write source: strings of '0'/'1' map one character per bit;
/// any other string is encoded byte by byte, low bit first.
fn string_bits(s: &str) -> Result<Vec<bool>> {
    if s.bytes().all(|b| b == b'0' || b == b'1') {
        Ok(s.bytes().map(|b| b == b'1').collect())
    } else {
        let mut out = Vec::with_capacity(s.len() * 8);
        for byte in s.bytes() {
            for b in 0..8 {
                out.push(byte >> b & 1 == 1);
            }
        }
        Ok(out)
    }
}

/// Wraps a program as a transition function over its packed capacity.
pub fn compile_to_transition(prog: &RuleProgram) -> Result<TransitionFunction> {
    let prog = prog.clone();
    let name = format!(
        "rule-program[{}]",
        prog.rules
            .iter()
            .map(|r| r.name.as_str())
            .collect::<Vec<_>>()
            .join(",")
    );
    TransitionFunction::from_fallible_fn(&name, prog.capacity(), move |a, b, c| {
        prog.interpret(a, b, c)
    })
}
