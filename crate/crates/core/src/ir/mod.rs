//! The kernel IR that all handler code is written in.
//!
//! A first-order, non-recursive language with structured control flow,
//! 64-bit integer / float / bool scalars, and runtime-sized 1-D arrays.
//! Programs are immutable after construction and safe to share read-only.

mod parse;
mod print;
mod validate;

pub use parse::{parse_program, ParseError};
pub use print::pretty_print;
pub use validate::{validate, Diagnostic};

use std::cmp::Ordering;
use std::fmt;

/// Scalar type of an expression or variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    Int64,
    Float64,
    Bool,
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarType::Int64 => "i64",
            ScalarType::Float64 => "f64",
            ScalarType::Bool => "bool",
        })
    }
}

/// Type of a function parameter: a scalar or a runtime-sized array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    Scalar(ScalarType),
    ArrayInt64,
    ArrayFloat64,
}

impl ParamType {
    pub fn is_array(self) -> bool {
        matches!(self, ParamType::ArrayInt64 | ParamType::ArrayFloat64)
    }

    /// Element type for array params, the scalar itself otherwise.
    pub fn element_type(self) -> ScalarType {
        match self {
            ParamType::Scalar(t) => t,
            ParamType::ArrayInt64 => ScalarType::Int64,
            ParamType::ArrayFloat64 => ScalarType::Float64,
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamType::Scalar(t) => t.fmt(f),
            ParamType::ArrayInt64 => f.write_str("arr-i64"),
            ParamType::ArrayFloat64 => f.write_str("arr-f64"),
        }
    }
}

/// Binary arithmetic operator. `%` is Int64-only; operands share a numeric type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }
}

/// Comparison operator; always yields Bool. Ordering ops require numeric operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge)
    }
}

/// Expression node. Every expression has exactly one [`ScalarType`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    ConstInt(i64),
    ConstFloat(f64),
    ConstBool(bool),
    Var(String),
    Bin {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Cmp {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Load {
        array: String,
        index: Box<Expr>,
    },
}

impl Expr {
    /// Number of nodes in the expression tree (the static cost of one full evaluation).
    pub fn node_count(&self) -> u64 {
        match self {
            Expr::ConstInt(_) | Expr::ConstFloat(_) | Expr::ConstBool(_) | Expr::Var(_) => 1,
            Expr::Bin { lhs, rhs, .. } | Expr::Cmp { lhs, rhs, .. } => {
                1 + lhs.node_count() + rhs.node_count()
            }
            Expr::Load { index, .. } => 1 + index.node_count(),
        }
    }

    /// True if the expression is a literal constant.
    pub fn as_const(&self) -> Option<Value> {
        match self {
            Expr::ConstInt(v) => Some(Value::Int(*v)),
            Expr::ConstFloat(v) => Some(Value::Float(*v)),
            Expr::ConstBool(v) => Some(Value::Bool(*v)),
            _ => None,
        }
    }

    /// True if evaluating the expression can never trap: no division, modulo,
    /// or array access anywhere in the tree.
    pub fn is_trap_free(&self) -> bool {
        match self {
            Expr::ConstInt(_) | Expr::ConstFloat(_) | Expr::ConstBool(_) | Expr::Var(_) => true,
            Expr::Bin { op, lhs, rhs } => {
                !matches!(op, BinOp::Div | BinOp::Mod) && lhs.is_trap_free() && rhs.is_trap_free()
            }
            Expr::Cmp { lhs, rhs, .. } => lhs.is_trap_free() && rhs.is_trap_free(),
            Expr::Load { .. } => false,
        }
    }

    /// All variable names referenced in the tree (arrays excluded), appended to `out`.
    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(name) => out.push(name),
            Expr::Bin { lhs, rhs, .. } | Expr::Cmp { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Load { index, .. } => index.collect_vars(out),
            _ => {}
        }
    }
}

/// Statement node.
///
/// `Guard` is emitted by the specializer (a conjunction of entry checks); a
/// failing conjunct raises the distinguished guard-failure outcome consumed
/// by the execution engine. `Emit` models an irreversible external side
/// effect and is never optimized away from live code.
#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        name: String,
        value: Expr,
    },
    Store {
        array: String,
        index: Expr,
        value: Expr,
    },
    /// Iterates `var` from `lo` while `var < hi`, stepping by `step`.
    /// `lo` is evaluated once at entry; `hi` and `step` are re-evaluated at
    /// every boundary check / increment. A non-positive step value traps at
    /// the increment.
    For {
        var: String,
        lo: Expr,
        hi: Expr,
        step: Expr,
        body: Vec<Stmt>,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    Return(Expr),
    Call {
        callee: String,
        args: Vec<Expr>,
        into: Option<String>,
    },
    Emit {
        tag: String,
        payload: Expr,
    },
    Guard(Vec<Expr>),
}

/// Total statement count of a body, counting nested statements.
pub fn stmt_count(body: &[Stmt]) -> u64 {
    let mut n = 0;
    for stmt in body {
        n += 1;
        match stmt {
            Stmt::For { body, .. } => n += stmt_count(body),
            Stmt::If {
                then_body,
                else_body,
                ..
            } => n += stmt_count(then_body) + stmt_count(else_body),
            _ => {}
        }
    }
    n
}

/// Total node count of a body: statements plus every expression node.
/// Used for the pass log (`nodes before -> nodes after`).
pub fn node_count(body: &[Stmt]) -> u64 {
    let mut n = 0;
    for stmt in body {
        n += 1;
        match stmt {
            Stmt::Assign { value, .. } => n += value.node_count(),
            Stmt::Store { index, value, .. } => n += index.node_count() + value.node_count(),
            Stmt::For {
                lo,
                hi,
                step,
                body,
                ..
            } => {
                n += lo.node_count() + hi.node_count() + step.node_count() + node_count(body);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => n += cond.node_count() + node_count(then_body) + node_count(else_body),
            Stmt::Return(e) => n += e.node_count(),
            Stmt::Call { args, .. } => n += args.iter().map(Expr::node_count).sum::<u64>(),
            Stmt::Emit { payload, .. } => n += payload.node_count(),
            Stmt::Guard(exprs) => n += exprs.iter().map(Expr::node_count).sum::<u64>(),
        }
    }
    n
}

/// A function definition. `pure` and `return_type` are derived during
/// validation, never declared in source.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<(String, ParamType)>,
    pub locals: Vec<(String, ScalarType)>,
    pub body: Vec<Stmt>,
    /// No Store, no Emit, only pure callees (transitively).
    pub pure: bool,
    /// Type of all Return statements; Int64 (yielding 0) when the body never returns.
    pub return_type: ScalarType,
}

impl FunctionDef {
    /// Scalar type of a named scalar parameter or local, if any.
    pub fn scalar_type_of(&self, var: &str) -> Option<ScalarType> {
        for (name, ty) in &self.params {
            if name == var {
                return match ty {
                    ParamType::Scalar(t) => Some(*t),
                    _ => None,
                };
            }
        }
        self.locals
            .iter()
            .find(|(name, _)| name == var)
            .map(|(_, t)| *t)
    }

    /// Index of a named parameter in the signature.
    pub fn param_index(&self, var: &str) -> Option<usize> {
        self.params.iter().position(|(name, _)| name == var)
    }
}

/// Kind of a specialization point: a workload knob arrives with requests, a
/// config knob is set by configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointKind {
    Workload,
    Config,
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointKind::Workload => "workload",
            PointKind::Config => "config",
        })
    }
}

/// In-source spec-point declaration: `(specpoint FUNC VAR kind)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecPointDecl {
    pub function: String,
    pub variable: String,
    pub kind: PointKind,
}

/// A validated program: functions in declaration order plus spec-point
/// declarations. Function names are unique, all call targets exist, and the
/// call graph is acyclic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
    pub spec_points: Vec<SpecPointDecl>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut FunctionDef> {
        self.functions.iter_mut().find(|f| f.name == name)
    }
}

/// A runtime scalar value.
#[derive(Debug, Clone, Copy)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Value {
    pub fn scalar_type(&self) -> ScalarType {
        match self {
            Value::Int(_) => ScalarType::Int64,
            Value::Float(_) => ScalarType::Float64,
            Value::Bool(_) => ScalarType::Bool,
        }
    }

    pub fn as_const_expr(&self) -> Expr {
        match self {
            Value::Int(v) => Expr::ConstInt(*v),
            Value::Float(v) => Expr::ConstFloat(*v),
            Value::Bool(v) => Expr::ConstBool(*v),
        }
    }

    /// Zero value of a scalar type; the result of falling off a function end.
    pub fn zero_of(ty: ScalarType) -> Value {
        match ty {
            ScalarType::Int64 => Value::Int(0),
            ScalarType::Float64 => Value::Float(0.0),
            ScalarType::Bool => Value::Bool(false),
        }
    }

    fn class_rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Bool(_) => 2,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    /// Total order: Int < Float < Bool by class; floats compared by
    /// `total_cmp` so values are usable as deterministic map keys.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            _ => self.class_rank().cmp(&other.class_rank()),
        }
    }
}
