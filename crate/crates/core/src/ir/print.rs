//! Canonical text form of a program. `parse_program(pretty_print(p))` is
//! structurally identical to `p`.

use super::{Expr, FunctionDef, Program, Stmt};
use std::fmt::Write;

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(&mut out, f);
    }
    for decl in &program.spec_points {
        writeln!(
            out,
            "(specpoint {} {} {})",
            decl.function, decl.variable, decl.kind
        )
        .unwrap();
    }
    out
}

fn print_function(out: &mut String, f: &FunctionDef) {
    write!(out, "(func {} (", f.name).unwrap();
    for (i, (name, ty)) in f.params.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "({name} {ty})").unwrap();
    }
    out.push(')');
    if !f.locals.is_empty() {
        out.push_str(" (locals");
        for (name, ty) in &f.locals {
            write!(out, " ({name} {ty})").unwrap();
        }
        out.push(')');
    }
    out.push('\n');
    print_body(out, &f.body, 1);
    out.push_str(")\n");
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_body(out: &mut String, body: &[Stmt], depth: usize) {
    for stmt in body {
        print_stmt(out, stmt, depth);
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match stmt {
        Stmt::Assign { name, value } => {
            write!(out, "(set {name} {})", expr_str(value)).unwrap();
        }
        Stmt::Store { array, index, value } => {
            write!(out, "(store {array} {} {})", expr_str(index), expr_str(value)).unwrap();
        }
        Stmt::For { var, lo, hi, step, body } => {
            write!(
                out,
                "(for {var} {} {} {}",
                expr_str(lo),
                expr_str(hi),
                expr_str(step)
            )
            .unwrap();
            out.push('\n');
            print_body(out, body, depth + 1);
            indent(out, depth);
            out.push(')');
        }
        Stmt::If { cond, then_body, else_body } => {
            write!(out, "(if {}", expr_str(cond)).unwrap();
            out.push('\n');
            indent(out, depth + 1);
            out.push_str("(then\n");
            print_body(out, then_body, depth + 2);
            indent(out, depth + 1);
            out.push(')');
            if !else_body.is_empty() {
                out.push('\n');
                indent(out, depth + 1);
                out.push_str("(else\n");
                print_body(out, else_body, depth + 2);
                indent(out, depth + 1);
                out.push(')');
            }
            out.push(')');
        }
        Stmt::Return(e) => write!(out, "(return {})", expr_str(e)).unwrap(),
        Stmt::Call { callee, args, into } => {
            write!(out, "(call {callee} (").unwrap();
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&expr_str(arg));
            }
            out.push(')');
            if let Some(target) = into {
                write!(out, " into {target}").unwrap();
            }
            out.push(')');
        }
        Stmt::Emit { tag, payload } => {
            write!(out, "(emit \"{tag}\" {})", expr_str(payload)).unwrap();
        }
        Stmt::Guard(exprs) => {
            out.push_str("(guard");
            for e in exprs {
                out.push(' ');
                out.push_str(&expr_str(e));
            }
            out.push(')');
        }
    }
    out.push('\n');
}

pub(crate) fn expr_str(expr: &Expr) -> String {
    match expr {
        Expr::ConstInt(v) => format!("{v}"),
        // Debug formatting keeps a trailing `.0` and round-trips exactly.
        Expr::ConstFloat(v) => format!("{v:?}"),
        Expr::ConstBool(v) => format!("{v}"),
        Expr::Var(name) => name.clone(),
        Expr::Bin { op, lhs, rhs } => {
            format!("({} {} {})", op.symbol(), expr_str(lhs), expr_str(rhs))
        }
        Expr::Cmp { op, lhs, rhs } => {
            format!("({} {} {})", op.symbol(), expr_str(lhs), expr_str(rhs))
        }
        Expr::Load { array, index } => format!("(load {array} {})", expr_str(index)),
    }
}
