//! Resolution of validated IR into a slot-indexed executable form: variable
//! names become frame slots, expressions become arena nodes, call targets
//! become function indices. Purely an engine-internal speed layer; the
//! semantics are fixed by the IR.

use crate::ir::{BinOp, CmpOp, Expr, FunctionDef, ParamType, Program, ScalarType, Stmt};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy)]
pub(crate) enum RNode {
    ConstI(i64),
    ConstF(f64),
    ConstB(bool),
    Var(u32),
    BinI(BinOp, u32, u32),
    BinF(BinOp, u32, u32),
    CmpI(CmpOp, u32, u32),
    CmpF(CmpOp, u32, u32),
    CmpB(CmpOp, u32, u32),
    Load(u32, u32),
}

#[derive(Debug, Clone)]
pub(crate) enum RStmt {
    Assign {
        slot: u32,
        value: u32,
    },
    Store {
        array: u32,
        index: u32,
        value: u32,
    },
    For {
        var: u32,
        lo: u32,
        hi: u32,
        step: u32,
        body: Box<[RStmt]>,
    },
    If {
        cond: u32,
        then_body: Box<[RStmt]>,
        else_body: Box<[RStmt]>,
    },
    Return(u32),
    Call {
        callee: u32,
        args: Box<[u32]>,
        into: Option<u32>,
    },
    Emit {
        tag: u32,
        payload: u32,
        payload_ty: ScalarType,
    },
    Guard(Box<[u32]>),
}

/// Array arguments fill the frame's array table in parameter order.
#[derive(Debug, Clone, Copy)]
pub(crate) enum ParamSlot {
    Scalar { slot: u32, ty: ScalarType },
    Array { ty: ScalarType },
}

/// One function compiled against a fixed callee table.
#[derive(Debug, Clone)]
pub(crate) struct CompiledFunc {
    pub name: String,
    pub params: Vec<ParamSlot>,
    pub n_slots: u32,
    pub n_arrays: u32,
    pub return_type: ScalarType,
    pub nodes: Vec<RNode>,
    pub body: Box<[RStmt]>,
    pub tags: Vec<String>,
    /// Slot index and type of every scalar variable, for watch resolution.
    pub scalar_slots: BTreeMap<String, (u32, ScalarType)>,
}

struct Compiler<'a> {
    func_index: &'a BTreeMap<String, u32>,
    slots: BTreeMap<String, (u32, ScalarType)>,
    arrays: BTreeMap<String, (u32, ScalarType)>,
    nodes: Vec<RNode>,
    tags: Vec<String>,
    n_slots: u32,
}

impl<'a> Compiler<'a> {
    fn slot_for(&mut self, name: &str, ty: ScalarType) -> u32 {
        if let Some((slot, _)) = self.slots.get(name) {
            return *slot;
        }
        let slot = self.n_slots;
        self.n_slots += 1;
        self.slots.insert(name.to_string(), (slot, ty));
        slot
    }

    fn push(&mut self, node: RNode) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    fn expr(&mut self, expr: &Expr) -> (u32, ScalarType) {
        match expr {
            Expr::ConstInt(v) => (self.push(RNode::ConstI(*v)), ScalarType::Int64),
            Expr::ConstFloat(v) => (self.push(RNode::ConstF(*v)), ScalarType::Float64),
            Expr::ConstBool(v) => (self.push(RNode::ConstB(*v)), ScalarType::Bool),
            Expr::Var(name) => {
                let (slot, ty) = self.slots[name.as_str()];
                (self.push(RNode::Var(slot)), ty)
            }
            Expr::Bin { op, lhs, rhs } => {
                let (l, ty) = self.expr(lhs);
                let (r, _) = self.expr(rhs);
                let node = match ty {
                    ScalarType::Float64 => RNode::BinF(*op, l, r),
                    _ => RNode::BinI(*op, l, r),
                };
                (self.push(node), ty)
            }
            Expr::Cmp { op, lhs, rhs } => {
                let (l, ty) = self.expr(lhs);
                let (r, _) = self.expr(rhs);
                let node = match ty {
                    ScalarType::Int64 => RNode::CmpI(*op, l, r),
                    ScalarType::Float64 => RNode::CmpF(*op, l, r),
                    ScalarType::Bool => RNode::CmpB(*op, l, r),
                };
                (self.push(node), ScalarType::Bool)
            }
            Expr::Load { array, index } => {
                let (arr, ty) = self.arrays[array.as_str()];
                let (idx, _) = self.expr(index);
                (self.push(RNode::Load(arr, idx)), ty)
            }
        }
    }

    fn body(&mut self, stmts: &[Stmt]) -> Box<[RStmt]> {
        stmts.iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&mut self, stmt: &Stmt) -> RStmt {
        match stmt {
            Stmt::Assign { name, value } => {
                let (v, ty) = self.expr(value);
                RStmt::Assign {
                    slot: self.slot_for(name, ty),
                    value: v,
                }
            }
            Stmt::Store { array, index, value } => {
                let arr = self.arrays[array.as_str()].0;
                let (idx, _) = self.expr(index);
                let (v, _) = self.expr(value);
                RStmt::Store {
                    array: arr,
                    index: idx,
                    value: v,
                }
            }
            Stmt::For { var, lo, hi, step, body } => {
                let (lo, _) = self.expr(lo);
                let var_slot = self.slot_for(var, ScalarType::Int64);
                let (hi, _) = self.expr(hi);
                let (step, _) = self.expr(step);
                let body = self.body(body);
                RStmt::For {
                    var: var_slot,
                    lo,
                    hi,
                    step,
                    body,
                }
            }
            Stmt::If { cond, then_body, else_body } => {
                let (cond, _) = self.expr(cond);
                RStmt::If {
                    cond,
                    then_body: self.body(then_body),
                    else_body: self.body(else_body),
                }
            }
            Stmt::Return(e) => {
                let (v, _) = self.expr(e);
                RStmt::Return(v)
            }
            Stmt::Call { callee, args, into } => {
                let callee_idx = self.func_index[callee.as_str()];
                let args = args.iter().map(|a| self.expr(a).0).collect();
                let into = into.as_ref().map(|name| {
                    let ty = self.slots.get(name.as_str()).map(|(_, t)| *t);
                    self.slot_for(name, ty.unwrap_or(ScalarType::Int64))
                });
                RStmt::Call {
                    callee: callee_idx,
                    args,
                    into,
                }
            }
            Stmt::Emit { tag, payload } => {
                let tag_idx = match self.tags.iter().position(|t| t == tag) {
                    Some(i) => i as u32,
                    None => {
                        self.tags.push(tag.clone());
                        (self.tags.len() - 1) as u32
                    }
                };
                let (payload, payload_ty) = self.expr(payload);
                RStmt::Emit {
                    tag: tag_idx,
                    payload,
                    payload_ty,
                }
            }
            Stmt::Guard(exprs) => {
                RStmt::Guard(exprs.iter().map(|e| self.expr(e).0).collect())
            }
        }
    }
}

/// Compile one function body against the program's function index.
pub(crate) fn compile_func(func: &FunctionDef, func_index: &BTreeMap<String, u32>) -> CompiledFunc {
    let mut c = Compiler {
        func_index,
        slots: BTreeMap::new(),
        arrays: BTreeMap::new(),
        nodes: Vec::new(),
        tags: Vec::new(),
        n_slots: 0,
    };
    let mut params = Vec::new();
    let mut n_arrays = 0u32;
    for (name, ty) in &func.params {
        match ty {
            ParamType::Scalar(t) => {
                let slot = c.slot_for(name, *t);
                params.push(ParamSlot::Scalar { slot, ty: *t });
            }
            _ => {
                c.arrays.insert(name.clone(), (n_arrays, ty.element_type()));
                params.push(ParamSlot::Array {
                    ty: ty.element_type(),
                });
                n_arrays += 1;
            }
        }
    }
    for (name, ty) in &func.locals {
        c.slot_for(name, *ty);
    }
    let body = c.body(&func.body);
    CompiledFunc {
        name: func.name.clone(),
        params,
        n_slots: c.n_slots,
        n_arrays,
        return_type: func.return_type,
        nodes: c.nodes,
        body,
        tags: c.tags,
        scalar_slots: c.slots,
    }
}

/// All generic function bodies compiled against a shared index; IR-level
/// calls always execute the generic callee (specialization dispatch happens
/// only at the engine boundary).
#[derive(Debug, Clone)]
pub(crate) struct CompiledProgram {
    pub funcs: Vec<CompiledFunc>,
    pub index: BTreeMap<String, u32>,
}

pub(crate) fn compile_program(program: &Program) -> CompiledProgram {
    let index: BTreeMap<String, u32> = program
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.clone(), i as u32))
        .collect();
    let funcs = program
        .functions
        .iter()
        .map(|f| compile_func(f, &index))
        .collect();
    CompiledProgram { funcs, index }
}
