//! Shared test support: a seeded random program generator producing valid
//! programs by construction, plus pin and argument generators for the
//! specialization equivalence suite.

#![allow(dead_code)]

use hotpin::engine::ArgValue;
use hotpin::ir::{
    validate, BinOp, CmpOp, Expr, FunctionDef, ParamType, Program, ScalarType, Stmt, Value,
};
use hotpin::specializer::PinSet;
use rand::rngs::StdRng;
use rand::Rng;
use std::collections::BTreeSet;

pub struct ProgramGen<'a> {
    rng: &'a mut StdRng,
    arrays: Vec<String>,
    scalars: Vec<(String, ScalarType)>,
    initialized: BTreeSet<String>,
    loop_depth: usize,
    stmt_budget: usize,
    callees: Vec<(String, Vec<ScalarType>, ScalarType)>,
}

const ARRAY_LEN: usize = 8;

impl<'a> ProgramGen<'a> {
    fn scalar_of_type(&self, ty: ScalarType) -> Vec<String> {
        self.scalars
            .iter()
            .filter(|(name, t)| *t == ty && self.initialized.contains(name))
            .map(|(name, _)| name.clone())
            .collect()
    }

    fn gen_expr(&mut self, ty: ScalarType, depth: usize) -> Expr {
        let leaf = depth == 0 || self.rng.gen_bool(0.35);
        if leaf {
            let vars = self.scalar_of_type(ty);
            if !vars.is_empty() && self.rng.gen_bool(0.6) {
                let name = vars[self.rng.gen_range(0..vars.len())].to_string();
                return Expr::Var(name);
            }
            return match ty {
                ScalarType::Int64 => Expr::ConstInt(self.rng.gen_range(-4..=8)),
                ScalarType::Float64 => {
                    Expr::ConstFloat(self.rng.gen_range(-40..=40) as f64 * 0.25)
                }
                ScalarType::Bool => Expr::ConstBool(self.rng.gen()),
            };
        }
        match ty {
            ScalarType::Bool => {
                let operand = if self.rng.gen_bool(0.7) {
                    ScalarType::Int64
                } else {
                    ScalarType::Float64
                };
                let op = match self.rng.gen_range(0..6) {
                    0 => CmpOp::Eq,
                    1 => CmpOp::Ne,
                    2 => CmpOp::Lt,
                    3 => CmpOp::Le,
                    4 => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                Expr::Cmp {
                    op,
                    lhs: Box::new(self.gen_expr(operand, depth - 1)),
                    rhs: Box::new(self.gen_expr(operand, depth - 1)),
                }
            }
            numeric => {
                if numeric == ScalarType::Int64 && !self.arrays.is_empty() && self.rng.gen_bool(0.2)
                {
                    let array = self.arrays[self.rng.gen_range(0..self.arrays.len())].clone();
                    return Expr::Load {
                        array,
                        index: Box::new(self.gen_index(depth - 1)),
                    };
                }
                let op = match self.rng.gen_range(0..10) {
                    0..=3 => BinOp::Add,
                    4..=5 => BinOp::Sub,
                    6..=7 => BinOp::Mul,
                    8 => BinOp::Div,
                    _ => {
                        if numeric == ScalarType::Int64 {
                            BinOp::Mod
                        } else {
                            BinOp::Mul
                        }
                    }
                };
                Expr::Bin {
                    op,
                    lhs: Box::new(self.gen_expr(numeric, depth - 1)),
                    rhs: Box::new(self.gen_expr(numeric, depth - 1)),
                }
            }
        }
    }

    /// Indices are biased in-bounds but may go out of range (traps are part
    /// of the compared behavior).
    fn gen_index(&mut self, depth: usize) -> Expr {
        if self.rng.gen_bool(0.7) {
            Expr::ConstInt(self.rng.gen_range(0..ARRAY_LEN as i64))
        } else {
            self.gen_expr(ScalarType::Int64, depth.min(1))
        }
    }

    fn gen_body(&mut self, depth: usize, force_return: Option<ScalarType>) -> Vec<Stmt> {
        let len = self.rng.gen_range(1..=4.min(self.stmt_budget.max(1)));
        let mut body = Vec::new();
        for _ in 0..len {
            if self.stmt_budget == 0 {
                break;
            }
            self.stmt_budget -= 1;
            body.push(self.gen_stmt(depth));
        }
        if let Some(ty) = force_return {
            body.push(Stmt::Return(self.gen_expr(ty, 2)));
        }
        body
    }

    /// Scalars legal as assignment targets (active loop variables are
    /// read-only).
    fn assignable(&self) -> Vec<(String, ScalarType)> {
        self.scalars
            .iter()
            .filter(|(name, _)| !name.starts_with('i'))
            .cloned()
            .collect()
    }

    fn gen_stmt(&mut self, depth: usize) -> Stmt {
        let choices = if depth == 0 { 4 } else { 7 };
        match self.rng.gen_range(0..choices) {
            0 | 1 => {
                let targets = self.assignable();
                let (name, ty) = targets[self.rng.gen_range(0..targets.len())].clone();
                let value = self.gen_expr(ty, 2);
                self.initialized.insert(name.clone());
                Stmt::Assign { name, value }
            }
            2 => {
                if self.arrays.is_empty() {
                    Stmt::Emit {
                        tag: "t".into(),
                        payload: self.gen_expr(ScalarType::Int64, 1),
                    }
                } else {
                    let array = self.arrays[self.rng.gen_range(0..self.arrays.len())].clone();
                    Stmt::Store {
                        array,
                        index: self.gen_index(1),
                        value: self.gen_expr(ScalarType::Int64, 2),
                    }
                }
            }
            3 => {
                if !self.callees.is_empty() && self.rng.gen_bool(0.5) {
                    let (callee, params, ret) =
                        self.callees[self.rng.gen_range(0..self.callees.len())].clone();
                    let args = params.iter().map(|t| self.gen_expr(*t, 1)).collect();
                    let into = self
                        .assignable()
                        .into_iter()
                        .filter(|(_, t)| *t == ret)
                        .map(|(n, _)| n)
                        .next();
                    if let Some(target) = &into {
                        self.initialized.insert(target.clone());
                    }
                    Stmt::Call { callee, args, into }
                } else {
                    Stmt::Emit {
                        tag: ["pkt", "log", "out"][self.rng.gen_range(0..3)].into(),
                        payload: self.gen_expr(ScalarType::Int64, 1),
                    }
                }
            }
            4 => {
                let cond = self.gen_expr(ScalarType::Bool, 2);
                let saved = self.initialized.clone();
                let then_body = self.gen_body(depth - 1, None);
                self.initialized = saved.clone();
                let else_body = if self.rng.gen_bool(0.6) {
                    self.gen_body(depth - 1, None)
                } else {
                    Vec::new()
                };
                self.initialized = saved;
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                }
            }
            _ => {
                let var = format!("i{}", self.loop_depth);
                let lo = Expr::ConstInt(self.rng.gen_range(0..2));
                let hi = if self.rng.gen_bool(0.75) {
                    Expr::ConstInt(self.rng.gen_range(1..6))
                } else {
                    match self.scalar_of_type(ScalarType::Int64).first() {
                        Some(name) => Expr::Var(name.to_string()),
                        None => Expr::ConstInt(3),
                    }
                };
                let step = Expr::ConstInt(self.rng.gen_range(1..=2));
                self.loop_depth += 1;
                self.scalars.push((var.clone(), ScalarType::Int64));
                self.initialized.insert(var.clone());
                let saved = self.initialized.clone();
                let body = self.gen_body(depth - 1, None);
                self.initialized = saved;
                self.initialized.remove(&var);
                self.scalars.pop();
                self.loop_depth -= 1;
                Stmt::For {
                    var,
                    lo,
                    hi,
                    step,
                    body,
                }
            }
        }
    }
}

fn gen_function(
    rng: &mut StdRng,
    name: &str,
    callees: Vec<(String, Vec<ScalarType>, ScalarType)>,
    allow_arrays: bool,
) -> FunctionDef {
    let mut params: Vec<(String, ParamType)> = Vec::new();
    let n_scalars = rng.gen_range(1..=3);
    for i in 0..n_scalars {
        let ty = match rng.gen_range(0..4) {
            0 => ScalarType::Float64,
            1 => ScalarType::Bool,
            _ => ScalarType::Int64,
        };
        params.push((format!("p{i}"), ParamType::Scalar(ty)));
    }
    let n_arrays = if allow_arrays { rng.gen_range(0..=2) } else { 0 };
    for i in 0..n_arrays {
        params.push((format!("a{i}"), ParamType::ArrayInt64));
    }
    let mut locals = Vec::new();
    for i in 0..rng.gen_range(1..=3) {
        let ty = if rng.gen_bool(0.75) {
            ScalarType::Int64
        } else {
            ScalarType::Float64
        };
        locals.push((format!("t{i}"), ty));
    }

    let scalars: Vec<(String, ScalarType)> = params
        .iter()
        .filter_map(|(n, t)| match t {
            ParamType::Scalar(st) => Some((n.clone(), *st)),
            _ => None,
        })
        .chain(locals.iter().cloned())
        .collect();
    let initialized: BTreeSet<String> = params.iter().map(|(n, _)| n.clone()).collect();
    let arrays: Vec<String> = params
        .iter()
        .filter(|(_, t)| t.is_array())
        .map(|(n, _)| n.clone())
        .collect();

    let return_type = if rng.gen_bool(0.8) {
        ScalarType::Int64
    } else {
        ScalarType::Float64
    };
    let mut gen = ProgramGen {
        rng,
        arrays,
        scalars,
        initialized,
        loop_depth: 0,
        stmt_budget: 14,
        callees,
    };
    let body = gen.gen_body(3, Some(return_type));
    FunctionDef {
        name: name.to_string(),
        params,
        locals,
        body,
        pure: false,
        return_type,
    }
}

/// A random valid program: 1-2 functions, the first callable from the
/// second. Panics if the generator ever emits an invalid program.
pub fn random_program(rng: &mut StdRng) -> Program {
    let mut program = Program::default();
    // Callee first (scalar params only, so calls are legal), entry after.
    let with_helper = rng.gen_bool(0.4);
    let mut callees = Vec::new();
    if with_helper {
        let helper = gen_function(rng, "helper", Vec::new(), false);
        callees.push((
            helper.name.clone(),
            helper
                .params
                .iter()
                .map(|(_, t)| match t {
                    ParamType::Scalar(st) => *st,
                    _ => unreachable!("helper has scalar params only"),
                })
                .collect(),
            helper.return_type,
        ));
        program.functions.push(helper);
    }
    program
        .functions
        .push(gen_function(rng, "entry", callees, true));

    let mut check = program.clone();
    let diags = validate(&mut check);
    // A diagnostic here is a generator bug worth seeing immediately.
    assert!(
        diags.is_empty(),
        "generator produced an invalid program: {diags:?}\n{}",
        hotpin::ir::pretty_print(&program)
    );
    check
}

/// Pick a pinnable (never-assigned) scalar parameter of the entry function.
pub fn random_pin(rng: &mut StdRng, program: &Program) -> Option<PinSet> {
    let func = program.function("entry")?;
    let mut assigned = BTreeSet::new();
    collect_assigned(&func.body, &mut assigned);
    let candidates: Vec<(String, ScalarType)> = func
        .params
        .iter()
        .filter_map(|(n, t)| match t {
            ParamType::Scalar(st) if !assigned.contains(n) => Some((n.clone(), *st)),
            _ => None,
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let count = rng.gen_range(1..=candidates.len().min(2));
    let mut pins = PinSet {
        function: "entry".into(),
        assignments: Default::default(),
    };
    let mut picked = candidates;
    for _ in 0..count {
        let idx = rng.gen_range(0..picked.len());
        let (name, ty) = picked.remove(idx);
        pins.assignments.insert(name, random_value(rng, ty));
    }
    Some(pins)
}

fn collect_assigned(body: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in body {
        match stmt {
            Stmt::Assign { name, .. } => {
                out.insert(name.clone());
            }
            Stmt::Call {
                into: Some(name), ..
            } => {
                out.insert(name.clone());
            }
            Stmt::For { body, .. } => collect_assigned(body, out),
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                collect_assigned(then_body, out);
                collect_assigned(else_body, out);
            }
            _ => {}
        }
    }
}

pub fn random_value(rng: &mut StdRng, ty: ScalarType) -> Value {
    match ty {
        ScalarType::Int64 => Value::Int(rng.gen_range(-8..=8)),
        ScalarType::Float64 => Value::Float(rng.gen_range(-16..=16) as f64 * 0.5),
        ScalarType::Bool => Value::Bool(rng.gen()),
    }
}

/// Argument vector for a function; when `satisfy` is set, pinned parameters
/// take exactly their pinned values.
pub fn random_args(
    rng: &mut StdRng,
    func: &FunctionDef,
    pins: Option<&PinSet>,
    satisfy: bool,
) -> Vec<ArgValue> {
    func.params
        .iter()
        .map(|(name, ty)| match ty {
            ParamType::Scalar(st) => {
                if satisfy {
                    if let Some(p) = pins.and_then(|p| p.assignments.get(name)) {
                        return ArgValue::from_value(*p);
                    }
                }
                ArgValue::from_value(random_value(rng, *st))
            }
            ParamType::ArrayInt64 => {
                ArgValue::ArrayI64((0..ARRAY_LEN).map(|_| rng.gen_range(-50..=50)).collect())
            }
            ParamType::ArrayFloat64 => ArgValue::ArrayF64(
                (0..ARRAY_LEN)
                    .map(|_| rng.gen_range(-16..=16) as f64 * 0.5)
                    .collect(),
            ),
        })
        .collect()
}

/// True if `args` satisfy every pin of `pins`.
pub fn args_satisfy(func: &FunctionDef, args: &[ArgValue], pins: &PinSet) -> bool {
    pins.assignments.iter().all(|(name, want)| {
        let idx = func.param_index(name).expect("pinned var is a parameter");
        args[idx].as_scalar() == Some(*want)
    })
}
