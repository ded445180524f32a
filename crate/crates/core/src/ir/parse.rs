//! Parser for the textual IR format (parenthesized, line-oriented, `;` comments).

use super::validate::validate;
use super::{
    BinOp, CmpOp, Expr, FunctionDef, ParamType, PointKind, Program, ScalarType, SpecPointDecl,
    Stmt,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("validation failed:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<super::Diagnostic>),
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Int(i64),
    Float(f64),
    Str(String),
    Sym(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, line: 1 }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b';' => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Result<Option<(Token, u32)>, ParseError> {
        self.skip_ws();
        let bytes = self.src.as_bytes();
        if self.pos >= bytes.len() {
            return Ok(None);
        }
        let line = self.line;
        match bytes[self.pos] {
            b'(' => {
                self.pos += 1;
                Ok(Some((Token::Open, line)))
            }
            b')' => {
                self.pos += 1;
                Ok(Some((Token::Close, line)))
            }
            b'"' => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < bytes.len() && bytes[self.pos] != b'"' {
                    if bytes[self.pos] == b'\n' {
                        return Err(self.err("unterminated string literal"));
                    }
                    self.pos += 1;
                }
                if self.pos >= bytes.len() {
                    return Err(self.err("unterminated string literal"));
                }
                let s = self.src[start..self.pos].to_string();
                self.pos += 1;
                Ok(Some((Token::Str(s), line)))
            }
            _ => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && !matches!(bytes[self.pos], b'(' | b')' | b'"' | b';' | b' ' | b'\t' | b'\r' | b'\n')
                {
                    self.pos += 1;
                }
                let word = &self.src[start..self.pos];
                Ok(Some((classify_word(word, line)?, line)))
            }
        }
    }
}

fn classify_word(word: &str, line: u32) -> Result<Token, ParseError> {
    let first = word.as_bytes()[0];
    let numeric_start = first.is_ascii_digit()
        || (first == b'-' && word.len() > 1 && word.as_bytes()[1].is_ascii_digit());
    if numeric_start {
        if word.contains('.') || word.contains('e') || word.contains('E') {
            let v: f64 = word.parse().map_err(|_| ParseError::Syntax {
                line,
                message: format!("invalid float literal `{word}`"),
            })?;
            if !v.is_finite() {
                return Err(ParseError::Syntax {
                    line,
                    message: format!("non-finite float literal `{word}`"),
                });
            }
            Ok(Token::Float(v))
        } else {
            let v: i64 = word.parse().map_err(|_| ParseError::Syntax {
                line,
                message: format!("invalid integer literal `{word}`"),
            })?;
            Ok(Token::Int(v))
        }
    } else {
        Ok(Token::Sym(word.to_string()))
    }
}

// ---------------------------------------------------------------------------
// S-expression layer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Sexp {
    Int(i64, u32),
    Float(f64, u32),
    Str(String, u32),
    Sym(String, u32),
    List(Vec<Sexp>, u32),
}

impl Sexp {
    fn line(&self) -> u32 {
        match self {
            Sexp::Int(_, l)
            | Sexp::Float(_, l)
            | Sexp::Str(_, l)
            | Sexp::Sym(_, l)
            | Sexp::List(_, l) => *l,
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line(),
            message: message.into(),
        }
    }

    fn as_sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            _ => None,
        }
    }

    fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            _ => None,
        }
    }

    fn head(&self) -> Option<&str> {
        self.as_list().and_then(|items| items.first()).and_then(Sexp::as_sym)
    }
}

fn read_all(src: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut lexer = Lexer::new(src);
    let mut stack: Vec<(Vec<Sexp>, u32)> = Vec::new();
    let mut top = Vec::new();
    while let Some((tok, line)) = lexer.next()? {
        let atom = match tok {
            Token::Open => {
                stack.push((Vec::new(), line));
                continue;
            }
            Token::Close => {
                let (items, open_line) = stack.pop().ok_or_else(|| ParseError::Syntax {
                    line,
                    message: "unmatched `)`".into(),
                })?;
                Sexp::List(items, open_line)
            }
            Token::Int(v) => Sexp::Int(v, line),
            Token::Float(v) => Sexp::Float(v, line),
            Token::Str(s) => Sexp::Str(s, line),
            Token::Sym(s) => Sexp::Sym(s, line),
        };
        match stack.last_mut() {
            Some((items, _)) => items.push(atom),
            None => top.push(atom),
        }
    }
    if let Some((_, line)) = stack.pop() {
        return Err(ParseError::Syntax {
            line,
            message: "unclosed `(`".into(),
        });
    }
    Ok(top)
}

// ---------------------------------------------------------------------------
// AST construction
// ---------------------------------------------------------------------------

/// Parse and validate IR source text into a [`Program`].
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let forms = read_all(text)?;
    let mut program = Program::default();
    for form in &forms {
        match form.head() {
            Some("func") => program.functions.push(parse_func(form)?),
            Some("specpoint") => program.spec_points.push(parse_specpoint(form)?),
            _ => {
                return Err(form.err("expected a top-level (func ...) or (specpoint ...) form"))
            }
        }
    }
    let diags = validate(&mut program);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(ParseError::Validation(diags))
    }
}

fn parse_specpoint(form: &Sexp) -> Result<SpecPointDecl, ParseError> {
    let items = form.as_list().unwrap();
    if items.len() != 4 {
        return Err(form.err("specpoint takes (specpoint FUNC VAR kind)"));
    }
    let function = items[1]
        .as_sym()
        .ok_or_else(|| items[1].err("expected function name"))?
        .to_string();
    let variable = items[2]
        .as_sym()
        .ok_or_else(|| items[2].err("expected variable name"))?
        .to_string();
    let kind = match items[3].as_sym() {
        Some("workload") => PointKind::Workload,
        Some("config") => PointKind::Config,
        _ => return Err(items[3].err("specpoint kind must be `workload` or `config`")),
    };
    Ok(SpecPointDecl {
        function,
        variable,
        kind,
    })
}

fn parse_type(sexp: &Sexp) -> Result<ParamType, ParseError> {
    match sexp.as_sym() {
        Some("i64") => Ok(ParamType::Scalar(ScalarType::Int64)),
        Some("f64") => Ok(ParamType::Scalar(ScalarType::Float64)),
        Some("bool") => Ok(ParamType::Scalar(ScalarType::Bool)),
        Some("arr-i64") => Ok(ParamType::ArrayInt64),
        Some("arr-f64") => Ok(ParamType::ArrayFloat64),
        _ => Err(sexp.err("expected a type: i64, f64, bool, arr-i64, arr-f64")),
    }
}

fn parse_name(sexp: &Sexp, what: &str) -> Result<String, ParseError> {
    sexp.as_sym()
        .filter(|s| !matches!(*s, "true" | "false"))
        .map(str::to_string)
        .ok_or_else(|| sexp.err(format!("expected {what}")))
}

fn parse_func(form: &Sexp) -> Result<FunctionDef, ParseError> {
    let items = form.as_list().unwrap();
    if items.len() < 3 {
        return Err(form.err("func takes (func NAME ((param TYPE) ...) [(locals ...)] STMT ...)"));
    }
    let name = parse_name(&items[1], "function name")?;
    let param_list = items[2]
        .as_list()
        .ok_or_else(|| items[2].err("expected parameter list"))?;
    let mut params = Vec::new();
    for p in param_list {
        let pair = p.as_list().ok_or_else(|| p.err("expected (name TYPE)"))?;
        if pair.len() != 2 {
            return Err(p.err("expected (name TYPE)"));
        }
        params.push((parse_name(&pair[0], "parameter name")?, parse_type(&pair[1])?));
    }

    let mut rest = &items[3..];
    let mut locals = Vec::new();
    if let Some(first) = rest.first() {
        if first.head() == Some("locals") {
            for l in &first.as_list().unwrap()[1..] {
                let pair = l.as_list().ok_or_else(|| l.err("expected (name TYPE)"))?;
                if pair.len() != 2 {
                    return Err(l.err("expected (name TYPE)"));
                }
                let ty = match parse_type(&pair[1])? {
                    ParamType::Scalar(t) => t,
                    _ => return Err(pair[1].err("locals must be scalar")),
                };
                locals.push((parse_name(&pair[0], "local name")?, ty));
            }
            rest = &rest[1..];
        }
    }

    let body = parse_body(rest)?;
    Ok(FunctionDef {
        name,
        params,
        locals,
        body,
        pure: false,
        return_type: ScalarType::Int64,
    })
}

fn parse_body(forms: &[Sexp]) -> Result<Vec<Stmt>, ParseError> {
    forms.iter().map(parse_stmt).collect()
}

fn parse_stmt(form: &Sexp) -> Result<Stmt, ParseError> {
    let items = form
        .as_list()
        .ok_or_else(|| form.err("expected a statement form"))?;
    match form.head() {
        Some("set") => {
            if items.len() != 3 {
                return Err(form.err("set takes (set NAME EXPR)"));
            }
            Ok(Stmt::Assign {
                name: parse_name(&items[1], "variable name")?,
                value: parse_expr(&items[2])?,
            })
        }
        Some("store") => {
            if items.len() != 4 {
                return Err(form.err("store takes (store NAME INDEX VALUE)"));
            }
            Ok(Stmt::Store {
                array: parse_name(&items[1], "array name")?,
                index: parse_expr(&items[2])?,
                value: parse_expr(&items[3])?,
            })
        }
        Some("for") => {
            if items.len() < 5 {
                return Err(form.err("for takes (for VAR LO HI STEP STMT ...)"));
            }
            Ok(Stmt::For {
                var: parse_name(&items[1], "loop variable")?,
                lo: parse_expr(&items[2])?,
                hi: parse_expr(&items[3])?,
                step: parse_expr(&items[4])?,
                body: parse_body(&items[5..])?,
            })
        }
        Some("if") => {
            if items.len() < 3 || items.len() > 4 {
                return Err(form.err("if takes (if EXPR (then ...) [(else ...)])"));
            }
            let cond = parse_expr(&items[1])?;
            if items[2].head() != Some("then") {
                return Err(items[2].err("expected (then ...)"));
            }
            let then_body = parse_body(&items[2].as_list().unwrap()[1..])?;
            let else_body = if let Some(e) = items.get(3) {
                if e.head() != Some("else") {
                    return Err(e.err("expected (else ...)"));
                }
                parse_body(&e.as_list().unwrap()[1..])?
            } else {
                Vec::new()
            };
            Ok(Stmt::If {
                cond,
                then_body,
                else_body,
            })
        }
        Some("return") => {
            if items.len() != 2 {
                return Err(form.err("return takes (return EXPR)"));
            }
            Ok(Stmt::Return(parse_expr(&items[1])?))
        }
        Some("call") => {
            if items.len() != 3 && items.len() != 5 {
                return Err(form.err("call takes (call NAME (EXPR ...) [into NAME])"));
            }
            let callee = parse_name(&items[1], "function name")?;
            let arg_list = items[2]
                .as_list()
                .ok_or_else(|| items[2].err("expected argument list"))?;
            let args = arg_list.iter().map(parse_expr).collect::<Result<_, _>>()?;
            let into = if items.len() == 5 {
                if items[3].as_sym() != Some("into") {
                    return Err(items[3].err("expected `into`"));
                }
                Some(parse_name(&items[4], "variable name")?)
            } else {
                None
            };
            Ok(Stmt::Call { callee, args, into })
        }
        Some("emit") => {
            if items.len() != 3 {
                return Err(form.err("emit takes (emit \"tag\" EXPR)"));
            }
            let tag = match &items[1] {
                Sexp::Str(s, _) => s.clone(),
                other => return Err(other.err("expected a string tag")),
            };
            Ok(Stmt::Emit {
                tag,
                payload: parse_expr(&items[2])?,
            })
        }
        Some("guard") => {
            if items.len() < 2 {
                return Err(form.err("guard takes (guard EXPR ...)"));
            }
            Ok(Stmt::Guard(
                items[1..].iter().map(parse_expr).collect::<Result<_, _>>()?,
            ))
        }
        _ => Err(form.err("unknown statement form")),
    }
}

fn parse_expr(form: &Sexp) -> Result<Expr, ParseError> {
    match form {
        Sexp::Int(v, _) => Ok(Expr::ConstInt(*v)),
        Sexp::Float(v, _) => Ok(Expr::ConstFloat(*v)),
        Sexp::Str(_, _) => Err(form.err("strings are only valid as emit tags")),
        Sexp::Sym(s, _) => match s.as_str() {
            "true" => Ok(Expr::ConstBool(true)),
            "false" => Ok(Expr::ConstBool(false)),
            _ => Ok(Expr::Var(s.clone())),
        },
        Sexp::List(items, _) => {
            let head = form
                .head()
                .ok_or_else(|| form.err("expected an operator"))?;
            if head == "load" {
                if items.len() != 3 {
                    return Err(form.err("load takes (load NAME EXPR)"));
                }
                return Ok(Expr::Load {
                    array: parse_name(&items[1], "array name")?,
                    index: Box::new(parse_expr(&items[2])?),
                });
            }
            if items.len() != 3 {
                return Err(form.err(format!("operator `{head}` takes two operands")));
            }
            let lhs = Box::new(parse_expr(&items[1])?);
            let rhs = Box::new(parse_expr(&items[2])?);
            let bin = match head {
                "+" => Some(BinOp::Add),
                "-" => Some(BinOp::Sub),
                "*" => Some(BinOp::Mul),
                "/" => Some(BinOp::Div),
                "%" => Some(BinOp::Mod),
                _ => None,
            };
            if let Some(op) = bin {
                return Ok(Expr::Bin { op, lhs, rhs });
            }
            let cmp = match head {
                "==" => CmpOp::Eq,
                "!=" => CmpOp::Ne,
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                ">" => CmpOp::Gt,
                ">=" => CmpOp::Ge,
                _ => return Err(form.err(format!("unknown operator `{head}`"))),
            };
            Ok(Expr::Cmp { op: cmp, lhs, rhs })
        }
    }
}
