//! Program validation: name resolution, typing, definite assignment,
//! loop-variable rules, call-graph acyclicity, and purity derivation.

use super::{
    BinOp, Expr, FunctionDef, ParamType, Program, ScalarType, Stmt,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// One validation finding: the function, the index of the offending top-level
/// statement when known, and the violated rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub function: String,
    pub stmt_index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stmt_index {
            Some(i) => write!(f, "{}: stmt {}: {}", self.function, i, self.message),
            None => write!(f, "{}: {}", self.function, self.message),
        }
    }
}

/// Validate a program, returning all diagnostics (empty means valid).
///
/// On a fully valid program this also derives each function's `pure` flag and
/// `return_type`; both are deterministic functions of the body.
pub fn validate(program: &mut Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    let mut seen = BTreeSet::new();
    for f in &program.functions {
        if !seen.insert(f.name.clone()) {
            diags.push(Diagnostic {
                function: f.name.clone(),
                stmt_index: None,
                message: "duplicate function name".into(),
            });
        }
    }

    let signatures: BTreeMap<String, Vec<ParamType>> = program
        .functions
        .iter()
        .map(|f| (f.name.clone(), f.params.iter().map(|(_, t)| *t).collect()))
        .collect();

    let mut return_types = BTreeMap::new();
    let mut return_types_by_name = BTreeMap::new();
    for (idx, f) in program.functions.iter().enumerate() {
        let mut ctx = FuncCtx::new(f, &signatures, &mut diags);
        let ret = ctx.check_function();
        return_types.insert(idx, ret);
        return_types_by_name.insert(f.name.clone(), ret);
    }

    // `into` targets need every callee's return type, which is only known
    // after all functions were typed.
    for f in &program.functions {
        check_into_types(f, &return_types_by_name, &mut diags);
    }

    check_call_graph(program, &mut diags);

    for decl in &program.spec_points {
        match program.function(&decl.function) {
            None => diags.push(Diagnostic {
                function: decl.function.clone(),
                stmt_index: None,
                message: format!("specpoint names unknown function `{}`", decl.function),
            }),
            Some(f) => {
                if f.scalar_type_of(&decl.variable).is_none() {
                    diags.push(Diagnostic {
                        function: decl.function.clone(),
                        stmt_index: None,
                        message: format!(
                            "specpoint variable `{}` is not a scalar parameter or local",
                            decl.variable
                        ),
                    });
                }
            }
        }
    }

    if diags.is_empty() {
        annotate(program, &return_types);
    }
    diags
}

// ---------------------------------------------------------------------------
// Per-function checks
// ---------------------------------------------------------------------------

struct FuncCtx<'a> {
    func: &'a FunctionDef,
    signatures: &'a BTreeMap<String, Vec<ParamType>>,
    diags: &'a mut Vec<Diagnostic>,
    /// Scalar variables currently in scope (params, locals, active loop vars).
    scalars: BTreeMap<String, ScalarType>,
    arrays: BTreeMap<String, ScalarType>,
    loop_stack: Vec<String>,
    return_type: Option<ScalarType>,
    current_stmt: usize,
}

impl<'a> FuncCtx<'a> {
    fn new(
        func: &'a FunctionDef,
        signatures: &'a BTreeMap<String, Vec<ParamType>>,
        diags: &'a mut Vec<Diagnostic>,
    ) -> Self {
        FuncCtx {
            func,
            signatures,
            diags,
            scalars: BTreeMap::new(),
            arrays: BTreeMap::new(),
            loop_stack: Vec::new(),
            return_type: None,
            current_stmt: 0,
        }
    }

    fn report(&mut self, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            function: self.func.name.clone(),
            stmt_index: Some(self.current_stmt),
            message: message.into(),
        });
    }

    fn check_function(&mut self) -> ScalarType {
        let mut names = BTreeSet::new();
        for (name, ty) in &self.func.params {
            if !names.insert(name.clone()) {
                self.report(format!("duplicate parameter `{name}`"));
            }
            match ty {
                ParamType::Scalar(t) => {
                    self.scalars.insert(name.clone(), *t);
                }
                _ => {
                    self.arrays.insert(name.clone(), ty.element_type());
                }
            }
        }
        for (name, ty) in &self.func.locals {
            if !names.insert(name.clone()) {
                self.report(format!("duplicate local `{name}`"));
            }
            self.scalars.insert(name.clone(), *ty);
        }

        // Parameters are defined at entry; locals only after assignment.
        let mut defined: BTreeSet<String> = self
            .func
            .params
            .iter()
            .map(|(n, _)| n.clone())
            .collect();
        self.check_body(&self.func.body, &mut defined, true);
        self.return_type.unwrap_or(ScalarType::Int64)
    }

    /// Type of an expression, reporting any violations. `defined` is the
    /// definitely-assigned set at this point.
    fn type_of(&mut self, expr: &Expr, defined: &BTreeSet<String>) -> Option<ScalarType> {
        match expr {
            Expr::ConstInt(_) => Some(ScalarType::Int64),
            Expr::ConstFloat(_) => Some(ScalarType::Float64),
            Expr::ConstBool(_) => Some(ScalarType::Bool),
            Expr::Var(name) => {
                if self.arrays.contains_key(name) {
                    self.report(format!("array `{name}` used as a scalar"));
                    return None;
                }
                match self.scalars.get(name).copied() {
                    Some(t) => {
                        if !defined.contains(name) {
                            self.report(format!("variable `{name}` used before definition"));
                        }
                        Some(t)
                    }
                    None => {
                        self.report(format!("unknown variable `{name}`"));
                        None
                    }
                }
            }
            Expr::Bin { op, lhs, rhs } => {
                let lt = self.type_of(lhs, defined)?;
                let rt = self.type_of(rhs, defined)?;
                if lt != rt {
                    self.report(format!(
                        "operands of `{}` have mixed types {lt} and {rt}",
                        op.symbol()
                    ));
                    return None;
                }
                if lt == ScalarType::Bool {
                    self.report(format!("operands of `{}` must be numeric", op.symbol()));
                    return None;
                }
                if *op == BinOp::Mod && lt != ScalarType::Int64 {
                    self.report("`%` is Int64-only");
                    return None;
                }
                Some(lt)
            }
            Expr::Cmp { op, lhs, rhs } => {
                let lt = self.type_of(lhs, defined)?;
                let rt = self.type_of(rhs, defined)?;
                if lt != rt {
                    self.report(format!(
                        "operands of `{}` have mixed types {lt} and {rt}",
                        op.symbol()
                    ));
                } else if op.is_ordering() && lt == ScalarType::Bool {
                    self.report(format!("operands of `{}` must be numeric", op.symbol()));
                }
                Some(ScalarType::Bool)
            }
            Expr::Load { array, index } => {
                let elem = match self.arrays.get(array).copied() {
                    Some(t) => Some(t),
                    None => {
                        self.report(format!("`{array}` is not an array parameter"));
                        None
                    }
                };
                if let Some(t) = self.type_of(index, defined) {
                    if t != ScalarType::Int64 {
                        self.report("load index must be Int64");
                    }
                }
                elem
            }
        }
    }

    fn check_assign_target(&mut self, name: &str, value_ty: Option<ScalarType>) {
        if self.loop_stack.iter().any(|v| v == name) {
            self.report(format!("loop variable `{name}` reassigned inside its loop"));
            return;
        }
        if self.arrays.contains_key(name) {
            self.report(format!("cannot assign to array `{name}`"));
            return;
        }
        match self.scalars.get(name).copied() {
            None => self.report(format!("assignment to undeclared variable `{name}`")),
            Some(t) => {
                if let Some(vt) = value_ty {
                    if vt != t {
                        self.report(format!(
                            "assignment to `{name}` of type {t} from value of type {vt}"
                        ));
                    }
                }
            }
        }
    }

    /// Walk a body, updating the definitely-assigned set in place.
    /// `top_level` controls whether statement indices are recorded.
    fn check_body(&mut self, body: &[Stmt], defined: &mut BTreeSet<String>, top_level: bool) {
        for (i, stmt) in body.iter().enumerate() {
            if top_level {
                self.current_stmt = i;
            }
            self.check_stmt(stmt, defined);
        }
    }

    fn check_stmt(&mut self, stmt: &Stmt, defined: &mut BTreeSet<String>) {
        match stmt {
            Stmt::Assign { name, value } => {
                let vt = self.type_of(value, defined);
                self.check_assign_target(name, vt);
                defined.insert(name.clone());
            }
            Stmt::Store { array, index, value } => {
                let elem = match self.arrays.get(array).copied() {
                    Some(t) => Some(t),
                    None => {
                        self.report(format!("`{array}` is not an array parameter"));
                        None
                    }
                };
                if let Some(t) = self.type_of(index, defined) {
                    if t != ScalarType::Int64 {
                        self.report("store index must be Int64");
                    }
                }
                if let (Some(vt), Some(et)) = (self.type_of(value, defined), elem) {
                    if vt != et {
                        self.report(format!(
                            "store of {vt} into array of {et} elements"
                        ));
                    }
                }
            }
            Stmt::For { var, lo, hi, step, body } => {
                for (what, e) in [("lo", lo), ("hi", hi), ("step", step)] {
                    let mut vars = Vec::new();
                    e.collect_vars(&mut vars);
                    if vars.contains(&var.as_str()) {
                        self.report(format!(
                            "loop variable `{var}` referenced in its own {what} bound"
                        ));
                    }
                    if let Some(t) = self.type_of(e, defined) {
                        if t != ScalarType::Int64 {
                            self.report(format!("loop {what} bound must be Int64"));
                        }
                    }
                }
                if self.scalars.contains_key(var) || self.arrays.contains_key(var) {
                    self.report(format!(
                        "loop variable `{var}` shadows an existing variable"
                    ));
                }
                self.scalars.insert(var.clone(), ScalarType::Int64);
                self.loop_stack.push(var.clone());
                defined.insert(var.clone());
                // The body may run zero times: assignments inside it do not
                // count as definite afterwards.
                let mut inner = defined.clone();
                self.check_body(body, &mut inner, false);
                self.loop_stack.pop();
                self.scalars.remove(var);
                defined.remove(var);
            }
            Stmt::If { cond, then_body, else_body } => {
                if let Some(t) = self.type_of(cond, defined) {
                    if t != ScalarType::Bool {
                        self.report("if condition must be Bool");
                    }
                }
                let mut then_defined = defined.clone();
                self.check_body(then_body, &mut then_defined, false);
                let mut else_defined = defined.clone();
                self.check_body(else_body, &mut else_defined, false);
                // Definite only if assigned on both paths.
                for name in then_defined.intersection(&else_defined) {
                    defined.insert(name.clone());
                }
            }
            Stmt::Return(expr) => {
                if let Some(t) = self.type_of(expr, defined) {
                    match self.return_type {
                        None => self.return_type = Some(t),
                        Some(prev) if prev != t => {
                            self.report(format!(
                                "inconsistent return types: {prev} then {t}"
                            ));
                        }
                        _ => {}
                    }
                }
            }
            Stmt::Call { callee, args, into } => {
                match self.signatures.get(callee) {
                    None => self.report(format!("call to unknown function `{callee}`")),
                    Some(params) => {
                        if params.iter().any(|t| t.is_array()) {
                            self.report(format!(
                                "cannot call `{callee}`: functions with array parameters \
                                 are only callable from the host"
                            ));
                        } else if params.len() != args.len() {
                            self.report(format!(
                                "call to `{callee}` with {} args, expected {}",
                                args.len(),
                                params.len()
                            ));
                        } else {
                            for (arg, want) in args.iter().zip(params) {
                                if let Some(t) = self.type_of(arg, defined) {
                                    if ParamType::Scalar(t) != *want {
                                        self.report(format!(
                                            "call to `{callee}`: argument of type {t}, \
                                             expected {want}"
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
                if let Some(target) = into {
                    // The callee's return type is checked during annotation;
                    // here the target just has to be an assignable scalar.
                    self.check_assign_target(target, None);
                    defined.insert(target.clone());
                }
            }
            Stmt::Emit { payload, .. } => {
                self.type_of(payload, defined);
            }
            Stmt::Guard(exprs) => {
                for e in exprs {
                    if let Some(t) = self.type_of(e, defined) {
                        if t != ScalarType::Bool {
                            self.report("guard conjunct must be Bool");
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Whole-program checks
// ---------------------------------------------------------------------------

fn check_into_types(
    func: &FunctionDef,
    return_types: &BTreeMap<String, ScalarType>,
    diags: &mut Vec<Diagnostic>,
) {
    fn walk(
        func: &FunctionDef,
        body: &[Stmt],
        return_types: &BTreeMap<String, ScalarType>,
        diags: &mut Vec<Diagnostic>,
    ) {
        for stmt in body {
            match stmt {
                Stmt::Call {
                    callee,
                    into: Some(target),
                    ..
                } => {
                    if let (Some(want), Some(&got)) =
                        (func.scalar_type_of(target), return_types.get(callee))
                    {
                        if want != got {
                            diags.push(Diagnostic {
                                function: func.name.clone(),
                                stmt_index: None,
                                message: format!(
                                    "call into `{target}` of type {want} from `{callee}` \
                                     returning {got}"
                                ),
                            });
                        }
                    }
                }
                Stmt::For { body, .. } => walk(func, body, return_types, diags),
                Stmt::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    walk(func, then_body, return_types, diags);
                    walk(func, else_body, return_types, diags);
                }
                _ => {}
            }
        }
    }
    walk(func, &func.body, return_types, diags);
}

fn check_call_graph(program: &Program, diags: &mut Vec<Diagnostic>) {
    let index: BTreeMap<&str, usize> = program
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i))
        .collect();
    let n = program.functions.len();
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, f) in program.functions.iter().enumerate() {
        let mut callees = Vec::new();
        collect_callees(&f.body, &mut callees);
        for callee in callees {
            if let Some(&j) = index.get(callee) {
                edges[i].push(j);
            }
        }
    }
    // Colors: 0 unvisited, 1 on stack, 2 done.
    let mut color = vec![0u8; n];
    for start in 0..n {
        if color[start] == 0 && has_cycle(start, &edges, &mut color) {
            diags.push(Diagnostic {
                function: program.functions[start].name.clone(),
                stmt_index: None,
                message: "recursion not allowed (call graph must be acyclic)".into(),
            });
        }
    }
}

fn has_cycle(node: usize, edges: &[Vec<usize>], color: &mut [u8]) -> bool {
    color[node] = 1;
    for &next in &edges[node] {
        match color[next] {
            1 => {
                color[node] = 2;
                return true;
            }
            0 => {
                if has_cycle(next, edges, color) {
                    color[node] = 2;
                    return true;
                }
            }
            _ => {}
        }
    }
    color[node] = 2;
    false
}

fn collect_callees<'a>(body: &'a [Stmt], out: &mut Vec<&'a str>) {
    for stmt in body {
        match stmt {
            Stmt::Call { callee, .. } => out.push(callee),
            Stmt::For { body, .. } => collect_callees(body, out),
            Stmt::If { then_body, else_body, .. } => {
                collect_callees(then_body, out);
                collect_callees(else_body, out);
            }
            _ => {}
        }
    }
}

fn body_has_effect(body: &[Stmt], impure_fns: &BTreeSet<String>) -> bool {
    body.iter().any(|stmt| match stmt {
        Stmt::Store { .. } | Stmt::Emit { .. } => true,
        Stmt::Call { callee, .. } => impure_fns.contains(callee),
        Stmt::For { body, .. } => body_has_effect(body, impure_fns),
        Stmt::If { then_body, else_body, .. } => {
            body_has_effect(then_body, impure_fns) || body_has_effect(else_body, impure_fns)
        }
        _ => false,
    })
}

/// Derive purity and store the typing pass's return types; only called once
/// validation passed.
fn annotate(program: &mut Program, return_types: &BTreeMap<usize, ScalarType>) {
    // Iterate purity to a fixed point; the call graph is acyclic so this
    // terminates in at most `functions` rounds.
    let mut impure: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut changed = false;
        for f in &program.functions {
            if !impure.contains(&f.name) && body_has_effect(&f.body, &impure) {
                impure.insert(f.name.clone());
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (idx, f) in program.functions.iter_mut().enumerate() {
        f.pure = !impure.contains(&f.name);
        f.return_type = return_types[&idx];
    }
}
