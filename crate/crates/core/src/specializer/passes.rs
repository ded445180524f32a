//! The optimization passes run over a pinned function: constant substitution,
//! propagation + folding, dead-code elimination, and loop unrolling.
//!
//! Every pass preserves semantics exactly, including trap behavior: division
//! and modulo by zero are never folded, and statements whose evaluation could
//! trap are never deleted.

use crate::ir::{BinOp, CmpOp, Expr, FunctionDef, Stmt, Value};
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------------------
// Shared constant arithmetic (also used by the engine)
// ---------------------------------------------------------------------------

/// Integer arithmetic wraps on two's-complement overflow; `None` means the
/// operation traps at run time (division or modulo by zero).
pub fn int_bin(op: BinOp, a: i64, b: i64) -> Option<i64> {
    match op {
        BinOp::Add => Some(a.wrapping_add(b)),
        BinOp::Sub => Some(a.wrapping_sub(b)),
        BinOp::Mul => Some(a.wrapping_mul(b)),
        BinOp::Div => (b != 0).then(|| a.wrapping_div(b)),
        BinOp::Mod => (b != 0).then(|| a.wrapping_rem(b)),
    }
}

/// Float arithmetic; division by (exact) zero traps, mirroring the integer rule.
pub fn float_bin(op: BinOp, a: f64, b: f64) -> Option<f64> {
    match op {
        BinOp::Add => Some(a + b),
        BinOp::Sub => Some(a - b),
        BinOp::Mul => Some(a * b),
        BinOp::Div => (b != 0.0).then(|| a / b),
        BinOp::Mod => None,
    }
}

pub fn cmp_i64(op: CmpOp, a: i64, b: i64) -> bool {
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

pub fn cmp_f64(op: CmpOp, a: f64, b: f64) -> bool {
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

fn fold_bin(op: BinOp, lhs: &Value, rhs: &Value) -> Option<Value> {
    match (lhs, rhs) {
        (Value::Int(a), Value::Int(b)) => int_bin(op, *a, *b).map(Value::Int),
        (Value::Float(a), Value::Float(b)) => {
            // Literals must stay finite so the printed form re-parses.
            float_bin(op, *a, *b).filter(|v| v.is_finite()).map(Value::Float)
        }
        _ => None,
    }
}

fn fold_cmp(op: CmpOp, lhs: &Value, rhs: &Value) -> Option<bool> {
    match (lhs, rhs) {
        (Value::Int(a), Value::Int(b)) => Some(cmp_i64(op, *a, *b)),
        (Value::Float(a), Value::Float(b)) => Some(cmp_f64(op, *a, *b)),
        (Value::Bool(a), Value::Bool(b)) if !op.is_ordering() => {
            Some(if op == CmpOp::Eq { a == b } else { a != b })
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

/// Replace every read of the given variables with the pinned constants.
/// The caller has already checked that none of them is assigned in the body.
pub fn substitute_body(body: &mut [Stmt], pins: &BTreeMap<String, Value>) {
    for stmt in body {
        match stmt {
            Stmt::Assign { value, .. } => substitute_expr(value, pins),
            Stmt::Store { index, value, .. } => {
                substitute_expr(index, pins);
                substitute_expr(value, pins);
            }
            Stmt::For { lo, hi, step, body, .. } => {
                substitute_expr(lo, pins);
                substitute_expr(hi, pins);
                substitute_expr(step, pins);
                substitute_body(body, pins);
            }
            Stmt::If { cond, then_body, else_body } => {
                substitute_expr(cond, pins);
                substitute_body(then_body, pins);
                substitute_body(else_body, pins);
            }
            Stmt::Return(e) | Stmt::Emit { payload: e, .. } => substitute_expr(e, pins),
            Stmt::Call { args, .. } => {
                for a in args {
                    substitute_expr(a, pins);
                }
            }
            Stmt::Guard(exprs) => {
                for e in exprs {
                    substitute_expr(e, pins);
                }
            }
        }
    }
}

fn substitute_expr(expr: &mut Expr, pins: &BTreeMap<String, Value>) {
    match expr {
        Expr::Var(name) => {
            if let Some(v) = pins.get(name) {
                *expr = v.as_const_expr();
            }
        }
        Expr::Bin { lhs, rhs, .. } | Expr::Cmp { lhs, rhs, .. } => {
            substitute_expr(lhs, pins);
            substitute_expr(rhs, pins);
        }
        Expr::Load { index, .. } => substitute_expr(index, pins),
        _ => {}
    }
}

/// Names assigned anywhere in a body: `set` targets, `call ... into` targets.
/// Loop variables are scoped bindings, not assignments, and do not appear.
pub fn assigned_names(body: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in body {
        match stmt {
            Stmt::Assign { name, .. } => {
                out.insert(name.clone());
            }
            Stmt::Call { into: Some(name), .. } => {
                out.insert(name.clone());
            }
            Stmt::For { body, .. } => assigned_names(body, out),
            Stmt::If { then_body, else_body, .. } => {
                assigned_names(then_body, out);
                assigned_names(else_body, out);
            }
            _ => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Constant propagation and folding
// ---------------------------------------------------------------------------

/// Flow constants through assignment chains within straight-line regions and
/// fold constant operator nodes. Values assigned under non-constant control
/// flow are not propagated past the join (conservative kill-based meet).
pub fn propagate_and_fold(func: &FunctionDef) -> FunctionDef {
    let mut out = func.clone();
    let mut env = BTreeMap::new();
    propagate_body(&mut out.body, &mut env);
    out
}

fn propagate_body(body: &mut [Stmt], env: &mut BTreeMap<String, Value>) {
    for stmt in body {
        match stmt {
            Stmt::Assign { name, value } => {
                rewrite_expr(value, env);
                match value.as_const() {
                    Some(v) => {
                        env.insert(name.clone(), v);
                    }
                    None => {
                        env.remove(name);
                    }
                }
            }
            Stmt::Store { index, value, .. } => {
                rewrite_expr(index, env);
                rewrite_expr(value, env);
            }
            Stmt::For { lo, hi, step, body, var } => {
                rewrite_expr(lo, env);
                // The body re-runs; only constants that survive every
                // iteration may flow into hi, step, and the body itself.
                let mut killed = BTreeSet::new();
                assigned_names(body, &mut killed);
                let mut loop_env: BTreeMap<String, Value> = env
                    .iter()
                    .filter(|(k, _)| !killed.contains(*k) && *k != var)
                    .map(|(k, v)| (k.clone(), *v))
                    .collect();
                rewrite_expr(hi, &loop_env);
                rewrite_expr(step, &loop_env);
                propagate_body(body, &mut loop_env);
                for name in &killed {
                    env.remove(name);
                }
            }
            Stmt::If { cond, then_body, else_body } => {
                rewrite_expr(cond, env);
                let mut then_env = env.clone();
                propagate_body(then_body, &mut then_env);
                let mut else_env = env.clone();
                propagate_body(else_body, &mut else_env);
                let mut killed = BTreeSet::new();
                assigned_names(then_body, &mut killed);
                assigned_names(else_body, &mut killed);
                for name in &killed {
                    env.remove(name);
                }
            }
            Stmt::Return(e) | Stmt::Emit { payload: e, .. } => rewrite_expr(e, env),
            Stmt::Call { args, into, .. } => {
                for a in args.iter_mut() {
                    rewrite_expr(a, env);
                }
                if let Some(target) = into {
                    env.remove(target);
                }
            }
            Stmt::Guard(exprs) => {
                for e in exprs {
                    rewrite_expr(e, env);
                }
            }
        }
    }
}

/// Substitute known constants and fold bottom-up.
fn rewrite_expr(expr: &mut Expr, env: &BTreeMap<String, Value>) {
    match expr {
        Expr::Var(name) => {
            if let Some(v) = env.get(name) {
                *expr = v.as_const_expr();
            }
        }
        Expr::Bin { op, lhs, rhs } => {
            rewrite_expr(lhs, env);
            rewrite_expr(rhs, env);
            if let (Some(a), Some(b)) = (lhs.as_const(), rhs.as_const()) {
                if let Some(v) = fold_bin(*op, &a, &b) {
                    *expr = v.as_const_expr();
                    return;
                }
            }
            if let Some(simplified) = int_identity(*op, lhs, rhs) {
                *expr = simplified;
            }
        }
        Expr::Cmp { op, lhs, rhs } => {
            rewrite_expr(lhs, env);
            rewrite_expr(rhs, env);
            if let (Some(a), Some(b)) = (lhs.as_const(), rhs.as_const()) {
                if let Some(v) = fold_cmp(*op, &a, &b) {
                    *expr = Expr::ConstBool(v);
                }
            }
        }
        Expr::Load { index, .. } => rewrite_expr(index, env),
        _ => {}
    }
}

/// Algebraic identities, Int64 only (float identities are unsound around
/// -0.0 and NaN). A subtree is only dropped when it cannot trap.
fn int_identity(op: BinOp, lhs: &Expr, rhs: &Expr) -> Option<Expr> {
    let lc = lhs.as_const();
    let rc = rhs.as_const();
    let int_zero = |v: &Option<Value>| matches!(v, Some(Value::Int(0)));
    let int_one = |v: &Option<Value>| matches!(v, Some(Value::Int(1)));
    match op {
        BinOp::Add => {
            if int_zero(&lc) {
                return Some(rhs.clone());
            }
            if int_zero(&rc) {
                return Some(lhs.clone());
            }
        }
        BinOp::Sub => {
            if int_zero(&rc) {
                return Some(lhs.clone());
            }
        }
        BinOp::Mul => {
            if int_one(&lc) {
                return Some(rhs.clone());
            }
            if int_one(&rc) {
                return Some(lhs.clone());
            }
            if int_zero(&lc) && rhs.is_trap_free() {
                return Some(Expr::ConstInt(0));
            }
            if int_zero(&rc) && lhs.is_trap_free() {
                return Some(Expr::ConstInt(0));
            }
        }
        BinOp::Div => {
            if int_one(&rc) {
                return Some(lhs.clone());
            }
        }
        BinOp::Mod => {}
    }
    None
}

// ---------------------------------------------------------------------------
// Dead code elimination
// ---------------------------------------------------------------------------

/// Replace constant-condition Ifs by the live branch and drop assignments to
/// locals that are never read. Store, Emit, and Call are observable effects
/// and are never removed; an assignment whose right-hand side could trap is
/// kept as well.
pub fn eliminate_dead_code(func: &FunctionDef) -> FunctionDef {
    let mut out = func.clone();
    dce_body(&mut out.body);
    let dead = dead_assign_targets(&out.body);
    if !dead.is_empty() {
        remove_dead_assigns(&mut out.body, &dead);
    }
    out
}

fn dce_body(body: &mut Vec<Stmt>) {
    let mut result = Vec::with_capacity(body.len());
    for mut stmt in std::mem::take(body) {
        match &mut stmt {
            Stmt::If { cond, then_body, else_body } => {
                dce_body(then_body);
                dce_body(else_body);
                if let Some(Value::Bool(b)) = cond.as_const() {
                    let live = if b { then_body } else { else_body };
                    result.append(live);
                    continue;
                }
            }
            Stmt::For { body, .. } => dce_body(body),
            _ => {}
        }
        result.push(stmt);
    }
    *body = result;
}

/// Locals whose value is never observed: no read outside the right-hand
/// sides of assignments to the variable itself, and not bound by `into`.
fn dead_assign_targets(body: &[Stmt]) -> BTreeSet<String> {
    let mut assigned = BTreeSet::new();
    assigned_names(body, &mut assigned);
    let mut into_bound = BTreeSet::new();
    collect_into_targets(body, &mut into_bound);
    let mut observed = BTreeSet::new();
    collect_observed_reads(body, &mut observed);
    assigned
        .into_iter()
        .filter(|name| !observed.contains(name) && !into_bound.contains(name))
        .collect()
}

fn collect_into_targets(body: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in body {
        match stmt {
            Stmt::Call { into: Some(name), .. } => {
                out.insert(name.clone());
            }
            Stmt::For { body, .. } => collect_into_targets(body, out),
            Stmt::If { then_body, else_body, .. } => {
                collect_into_targets(then_body, out);
                collect_into_targets(else_body, out);
            }
            _ => {}
        }
    }
}

fn push_vars(expr: &Expr, out: &mut BTreeSet<String>) {
    let mut vars = Vec::new();
    expr.collect_vars(&mut vars);
    out.extend(vars.into_iter().map(str::to_string));
}

/// Reads that observe a variable's value: every VarRef except those in the
/// right-hand side of an assignment to the same variable.
fn collect_observed_reads(body: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in body {
        match stmt {
            Stmt::Assign { name, value } => {
                let mut vars = Vec::new();
                value.collect_vars(&mut vars);
                out.extend(vars.into_iter().filter(|v| v != name).map(str::to_string));
            }
            Stmt::Store { index, value, .. } => {
                push_vars(index, out);
                push_vars(value, out);
            }
            Stmt::For { lo, hi, step, body, .. } => {
                push_vars(lo, out);
                push_vars(hi, out);
                push_vars(step, out);
                collect_observed_reads(body, out);
            }
            Stmt::If { cond, then_body, else_body } => {
                push_vars(cond, out);
                collect_observed_reads(then_body, out);
                collect_observed_reads(else_body, out);
            }
            Stmt::Return(e) | Stmt::Emit { payload: e, .. } => push_vars(e, out),
            Stmt::Call { args, .. } => {
                for a in args {
                    push_vars(a, out);
                }
            }
            Stmt::Guard(exprs) => {
                for e in exprs {
                    push_vars(e, out);
                }
            }
        }
    }
}

fn remove_dead_assigns(body: &mut Vec<Stmt>, dead: &BTreeSet<String>) {
    body.retain_mut(|stmt| match stmt {
        Stmt::Assign { name, value } => !(dead.contains(name) && value.is_trap_free()),
        Stmt::For { body, .. } => {
            remove_dead_assigns(body, dead);
            true
        }
        Stmt::If { then_body, else_body, .. } => {
            remove_dead_assigns(then_body, dead);
            remove_dead_assigns(else_body, dead);
            true
        }
        _ => true,
    });
}

// ---------------------------------------------------------------------------
// Loop unrolling
// ---------------------------------------------------------------------------

/// Replace every For whose bounds are constants and whose trip count `t`
/// satisfies `1 <= t <= cap` by `t` body copies with the loop variable
/// substituted per iteration. Zero-trip and over-cap loops are untouched.
pub fn unroll_loops(func: &FunctionDef, cap: u32) -> FunctionDef {
    let mut out = func.clone();
    unroll_body(&mut out.body, cap);
    out
}

fn unroll_body(body: &mut Vec<Stmt>, cap: u32) {
    let mut result = Vec::with_capacity(body.len());
    for mut stmt in std::mem::take(body) {
        if let Stmt::For { var, lo, hi, step, body: inner } = &mut stmt {
            unroll_body(inner, cap);
            if let Some(values) = const_trip_values(lo, hi, step, cap) {
                for v in values {
                    let mut copy = inner.clone();
                    let mut pin = BTreeMap::new();
                    pin.insert(var.clone(), Value::Int(v));
                    substitute_body(&mut copy, &pin);
                    result.extend(copy);
                }
                continue;
            }
        } else if let Stmt::If { then_body, else_body, .. } = &mut stmt {
            unroll_body(then_body, cap);
            unroll_body(else_body, cap);
        }
        result.push(stmt);
    }
    *body = result;
}

/// The loop variable's iteration values when lo, hi, step are constants and
/// the trip count is in `1..=cap`. Non-positive steps are left to trap at
/// run time.
fn const_trip_values(lo: &Expr, hi: &Expr, step: &Expr, cap: u32) -> Option<Vec<i64>> {
    let (lo, hi, step) = match (lo.as_const(), hi.as_const(), step.as_const()) {
        (Some(Value::Int(a)), Some(Value::Int(b)), Some(Value::Int(s))) => (a, b, s),
        _ => return None,
    };
    if step < 1 || lo >= hi {
        return None;
    }
    let span = (hi as i128) - (lo as i128);
    let trips = (span + (step as i128) - 1) / (step as i128);
    if trips < 1 || trips > cap as i128 {
        return None;
    }
    Some(
        (0..trips as i64)
            .map(|k| (lo as i128 + k as i128 * step as i128) as i64)
            .collect(),
    )
}
