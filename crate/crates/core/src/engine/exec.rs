//! The reference evaluator: deterministic execution with exact dynamic-op
//! accounting.
//!
//! Counting table (identical programs and inputs give identical ops on every
//! platform):
//!
//! - Every statement executed charges 1 at entry (Assign, Store, If, Return,
//!   Call, Emit, Guard, and For at loop entry).
//! - Every expression node evaluated charges 1; a statement charges the nodes
//!   of each expression it evaluates.
//! - For: entry charges 1 (the statement) plus the nodes of `lo`, evaluated
//!   once. Every boundary check charges 1 plus 1 for the loop-variable read
//!   plus the nodes of `hi` (re-evaluated each check). Every completed
//!   iteration charges the body plus an increment of 1, plus 1 for the
//!   loop-variable read, plus the nodes of `step` (re-evaluated). The loop
//!   exits on the first failing check; a step value below 1 traps at the
//!   increment.
//! - If charges its condition nodes and the taken branch only.
//! - Call charges its argument nodes plus the callee's own accounting.
//! - Guard charges each conjunct's nodes left to right and stops at the
//!   first false conjunct.
//!
//! Example: `(for i 0 2 1 (set x i))` costs 2 (entry + lo) + 9 (three checks
//! at 1+1+1) + 4 (two Assign+VarRef bodies) + 6 (two increments at 1+1+1),
//! 21 in total.
//!
//! A Store evaluates its index, then its value, then bounds-checks.

use super::compile::{CompiledFunc, CompiledProgram, ParamSlot, RNode, RStmt};
use crate::ir::{CmpOp, ScalarType, Value};
use crate::specializer::passes::{cmp_f64, cmp_i64, float_bin, int_bin};
use std::fmt;
use std::sync::Arc;

/// Why a call aborted. Traps abort the call, never the process, and are
/// never optimized away by specialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapKind {
    DivByZero,
    OobIndex,
    Type,
    /// A For step evaluated to a value below 1.
    NonPositiveStep,
    /// Guard failure with no specialized fallback (a guard written directly
    /// in generic handler code).
    Guard,
}

impl fmt::Display for TrapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrapKind::DivByZero => "div_by_zero",
            TrapKind::OobIndex => "oob_index",
            TrapKind::Type => "type",
            TrapKind::NonPositiveStep => "non_positive_step",
            TrapKind::Guard => "guard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trap {
    pub kind: TrapKind,
    pub location: String,
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trap {} at {}", self.kind, self.location)
    }
}

impl std::error::Error for Trap {}

/// One recorded external side effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitRecord {
    pub tag: String,
    pub value: Value,
}

/// An array argument's final contents, cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrayValue {
    I64(Arc<Vec<i64>>),
    F64(Arc<Vec<f64>>),
}

pub(crate) enum ArrayBuf {
    I64(Vec<i64>),
    F64(Vec<f64>),
}

impl ArrayBuf {
    pub(crate) fn freeze(self) -> ArrayValue {
        match self {
            ArrayBuf::I64(v) => ArrayValue::I64(Arc::new(v)),
            ArrayBuf::F64(v) => ArrayValue::F64(Arc::new(v)),
        }
    }
}

/// A local variable watched for telemetry: assignments to `slot` in the
/// outermost frame are recorded under watch index `key`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SlotWatch {
    pub slot: u32,
    pub ty: ScalarType,
    pub key: u32,
}

pub(crate) enum Flow {
    Normal,
    Returned(u64),
    GuardFailed,
}

pub(crate) struct ExecOutcome {
    pub flow: Flow,
    pub ops: u64,
    pub effects: Vec<EmitRecord>,
    pub arrays: Vec<ArrayBuf>,
    /// (watch key, assigned value) pairs in assignment order.
    pub observations: Vec<(u32, Value)>,
}

struct Ctx<'a> {
    program: &'a CompiledProgram,
    ops: u64,
    effects: Vec<EmitRecord>,
    observations: Vec<(u32, Value)>,
    watches: &'a [SlotWatch],
    /// Watches apply to the outermost frame only.
    depth: u32,
    stmt_index: usize,
}

struct Frame<'a> {
    func: &'a CompiledFunc,
    slots: Vec<u64>,
    arrays: Vec<ArrayBuf>,
}

fn trap_at(kind: TrapKind, frame: &Frame, ctx: &Ctx) -> Trap {
    Trap {
        kind,
        location: format!("{}:stmt{}", frame.func.name, ctx.stmt_index),
    }
}

/// Execute a compiled function. `scalar_args` fills scalar slots and
/// `arrays` array storage, both already type-checked against the signature.
pub(crate) fn execute<'a>(
    program: &'a CompiledProgram,
    func: &'a CompiledFunc,
    scalar_args: &[(u32, u64)],
    arrays: Vec<ArrayBuf>,
    watches: &[SlotWatch],
) -> Result<ExecOutcome, Trap> {
    let mut ctx = Ctx {
        program,
        ops: 0,
        effects: Vec::new(),
        observations: Vec::new(),
        watches,
        depth: 0,
        stmt_index: 0,
    };
    let mut frame = Frame {
        func,
        slots: vec![0u64; func.n_slots as usize],
        arrays,
    };
    for (slot, bits) in scalar_args {
        frame.slots[*slot as usize] = *bits;
    }
    let flow = exec_body(&mut ctx, &mut frame, &func.body, true)?;
    Ok(ExecOutcome {
        flow,
        ops: ctx.ops,
        effects: ctx.effects,
        arrays: frame.arrays,
        observations: ctx.observations,
    })
}

fn exec_body<'a>(
    ctx: &mut Ctx<'a>,
    frame: &mut Frame<'a>,
    body: &'a [RStmt],
    top: bool,
) -> Result<Flow, Trap> {
    for (i, stmt) in body.iter().enumerate() {
        if top {
            ctx.stmt_index = i;
        }
        match exec_stmt(ctx, frame, stmt)? {
            Flow::Normal => {}
            other => return Ok(other),
        }
    }
    Ok(Flow::Normal)
}

fn exec_stmt<'a>(ctx: &mut Ctx<'a>, frame: &mut Frame<'a>, stmt: &'a RStmt) -> Result<Flow, Trap> {
    ctx.ops += 1;
    match stmt {
        RStmt::Assign { slot, value } => {
            let v = eval(ctx, frame, *value)?;
            frame.slots[*slot as usize] = v;
            if ctx.depth == 0 && !ctx.watches.is_empty() {
                for w in ctx.watches {
                    if w.slot == *slot {
                        ctx.observations.push((w.key, bits_to_value(v, w.ty)));
                    }
                }
            }
            Ok(Flow::Normal)
        }
        RStmt::Store { array, index, value } => {
            let idx = eval(ctx, frame, *index)? as i64;
            let v = eval(ctx, frame, *value)?;
            let buf = &mut frame.arrays[*array as usize];
            match buf {
                ArrayBuf::I64(d) => {
                    if idx < 0 || idx as usize >= d.len() {
                        return Err(trap_at(TrapKind::OobIndex, frame, ctx));
                    }
                    d[idx as usize] = v as i64;
                }
                ArrayBuf::F64(d) => {
                    if idx < 0 || idx as usize >= d.len() {
                        return Err(trap_at(TrapKind::OobIndex, frame, ctx));
                    }
                    d[idx as usize] = f64::from_bits(v);
                }
            }
            Ok(Flow::Normal)
        }
        RStmt::For { var, lo, hi, step, body } => {
            let lo_v = eval(ctx, frame, *lo)?;
            frame.slots[*var as usize] = lo_v;
            loop {
                // Boundary check: 1, plus the loop-variable read, plus hi.
                ctx.ops += 2;
                let hi_v = eval(ctx, frame, *hi)? as i64;
                if (frame.slots[*var as usize] as i64) >= hi_v {
                    return Ok(Flow::Normal);
                }
                match exec_body(ctx, frame, body, false)? {
                    Flow::Normal => {}
                    other => return Ok(other),
                }
                // Increment: 1, plus the loop-variable read, plus step.
                ctx.ops += 2;
                let step_v = eval(ctx, frame, *step)? as i64;
                if step_v < 1 {
                    return Err(trap_at(TrapKind::NonPositiveStep, frame, ctx));
                }
                let cur = frame.slots[*var as usize] as i64;
                frame.slots[*var as usize] = cur.wrapping_add(step_v) as u64;
            }
        }
        RStmt::If { cond, then_body, else_body } => {
            let c = eval(ctx, frame, *cond)?;
            let branch = if c != 0 { then_body } else { else_body };
            exec_body(ctx, frame, branch, false)
        }
        RStmt::Return(e) => {
            let v = eval(ctx, frame, *e)?;
            Ok(Flow::Returned(v))
        }
        RStmt::Call { callee, args, into } => {
            let callee_func = &ctx.program.funcs[*callee as usize];
            let mut callee_frame = Frame {
                func: callee_func,
                slots: vec![0u64; callee_func.n_slots as usize],
                arrays: Vec::new(),
            };
            for (arg, param) in args.iter().zip(&callee_func.params) {
                let bits = eval(ctx, frame, *arg)?;
                if let ParamSlot::Scalar { slot, .. } = param {
                    callee_frame.slots[*slot as usize] = bits;
                }
            }
            let saved_index = ctx.stmt_index;
            ctx.depth += 1;
            let flow = exec_body(ctx, &mut callee_frame, &callee_func.body, true);
            ctx.depth -= 1;
            ctx.stmt_index = saved_index;
            match flow? {
                Flow::GuardFailed => Ok(Flow::GuardFailed),
                Flow::Returned(v) => {
                    if let Some(slot) = into {
                        frame.slots[*slot as usize] = v;
                    }
                    Ok(Flow::Normal)
                }
                Flow::Normal => {
                    if let Some(slot) = into {
                        frame.slots[*slot as usize] =
                            value_to_bits(Value::zero_of(callee_func.return_type));
                    }
                    Ok(Flow::Normal)
                }
            }
        }
        RStmt::Emit { tag, payload, payload_ty } => {
            let v = eval(ctx, frame, *payload)?;
            ctx.effects.push(EmitRecord {
                tag: frame.func.tags[*tag as usize].clone(),
                value: bits_to_value(v, *payload_ty),
            });
            Ok(Flow::Normal)
        }
        RStmt::Guard(conjuncts) => {
            for c in conjuncts.iter() {
                if eval(ctx, frame, *c)? == 0 {
                    return Ok(Flow::GuardFailed);
                }
            }
            Ok(Flow::Normal)
        }
    }
}

pub(crate) fn value_to_bits(v: Value) -> u64 {
    match v {
        Value::Int(i) => i as u64,
        Value::Float(f) => f.to_bits(),
        Value::Bool(b) => b as u64,
    }
}

pub(crate) fn bits_to_value(bits: u64, ty: ScalarType) -> Value {
    match ty {
        ScalarType::Int64 => Value::Int(bits as i64),
        ScalarType::Float64 => Value::Float(f64::from_bits(bits)),
        ScalarType::Bool => Value::Bool(bits != 0),
    }
}

/// Evaluate an expression tree; every node visited charges one op.
fn eval(ctx: &mut Ctx, frame: &Frame, node: u32) -> Result<u64, Trap> {
    ctx.ops += 1;
    match frame.func.nodes[node as usize] {
        RNode::ConstI(v) => Ok(v as u64),
        RNode::ConstF(v) => Ok(v.to_bits()),
        RNode::ConstB(v) => Ok(v as u64),
        RNode::Var(slot) => Ok(frame.slots[slot as usize]),
        RNode::BinI(op, l, r) => {
            let a = eval(ctx, frame, l)? as i64;
            let b = eval(ctx, frame, r)? as i64;
            match int_bin(op, a, b) {
                Some(v) => Ok(v as u64),
                None => Err(trap_at(TrapKind::DivByZero, frame, ctx)),
            }
        }
        RNode::BinF(op, l, r) => {
            let a = f64::from_bits(eval(ctx, frame, l)?);
            let b = f64::from_bits(eval(ctx, frame, r)?);
            match float_bin(op, a, b) {
                Some(v) => Ok(v.to_bits()),
                None => Err(trap_at(TrapKind::DivByZero, frame, ctx)),
            }
        }
        RNode::CmpI(op, l, r) => {
            let a = eval(ctx, frame, l)? as i64;
            let b = eval(ctx, frame, r)? as i64;
            Ok(cmp_i64(op, a, b) as u64)
        }
        RNode::CmpF(op, l, r) => {
            let a = f64::from_bits(eval(ctx, frame, l)?);
            let b = f64::from_bits(eval(ctx, frame, r)?);
            Ok(cmp_f64(op, a, b) as u64)
        }
        RNode::CmpB(op, l, r) => {
            let a = eval(ctx, frame, l)?;
            let b = eval(ctx, frame, r)?;
            Ok(match op {
                CmpOp::Eq => (a == b) as u64,
                _ => (a != b) as u64,
            })
        }
        RNode::Load(array, index) => {
            let idx = eval(ctx, frame, index)? as i64;
            match &frame.arrays[array as usize] {
                ArrayBuf::I64(d) => {
                    if idx < 0 || idx as usize >= d.len() {
                        return Err(trap_at(TrapKind::OobIndex, frame, ctx));
                    }
                    Ok(d[idx as usize] as u64)
                }
                ArrayBuf::F64(d) => {
                    if idx < 0 || idx as usize >= d.len() {
                        return Err(trap_at(TrapKind::OobIndex, frame, ctx));
                    }
                    Ok(d[idx as usize].to_bits())
                }
            }
        }
    }
}
