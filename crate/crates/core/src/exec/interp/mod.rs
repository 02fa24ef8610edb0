//! In-process evaluator for heuristics written in a small numpy dialect:
//! straight-line function bodies of assignments and a final `return`, with
//! arithmetic, comparisons, conditional expressions, indexing and a set of
//! `np.*` routines. Anything else is rejected at parse time with
//! [`InterpError::Unsupported`] so the caller can fall back to a worker.

mod syntax;
mod value;

use std::borrow::Cow;
use std::collections::HashMap;

use thiserror::Error;

use crate::domain::Task;
use crate::problems::{Decider, Decision, DecisionError, DecisionQuery};

use syntax::{lex, BinOp, Expr, Index, Parser, Tok};
use value::{broadcast, index, numeric_kind, py_floordiv, py_mod, reduce, Kind, Reduce, Sub, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{0}")]
    Runtime(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Stmt {
    Assign(String, Expr),
    AugAssign(String, BinOp, Expr),
    Return(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Module {
    Numpy,
    Math,
}

/// A parsed heuristic function ready to answer decision queries.
#[derive(Debug, Clone)]
pub struct Program {
    task: Task,
    params: Vec<String>,
    body: Vec<Stmt>,
    modules: HashMap<String, Module>,
}

fn arity(task: Task) -> usize {
    match task {
        Task::Obp => 2,
        Task::Tsp => 4,
        Task::Cvrp => 6,
    }
}

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

/// Joins physical lines into logical lines (open brackets and trailing
/// backslashes continue a line) and drops blank or comment-only lines.
fn logical_lines(code: &str) -> Result<Vec<(usize, String)>, InterpError> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    let mut depth: i64 = 0;
    let mut in_doc: Option<&str> = None;
    for raw in code.lines() {
        if let Some(q) = in_doc {
            if raw.contains(q) {
                in_doc = None;
            }
            continue;
        }
        let trimmed = raw.trim();
        if pending.is_none() {
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(q) = ["\"\"\"", "'''"].into_iter().find(|q| trimmed.starts_with(q)) {
                if !trimmed[3..].contains(q) {
                    in_doc = Some(q);
                }
                out.push((indent_of(raw), "pass".to_string()));
                continue;
            }
        }
        let toks = lex(raw)?;
        for t in &toks {
            match t {
                Tok::Op("(" | "[") => depth += 1,
                Tok::Op(")" | "]") => depth -= 1,
                _ => {}
            }
        }
        let body = strip_comment(raw).trim_end().to_string();
        let (continues, body) = match body.strip_suffix('\\') {
            Some(b) => (true, b.to_string()),
            None => (false, body),
        };
        match &mut pending {
            Some((_, acc)) => {
                acc.push(' ');
                acc.push_str(body.trim());
            }
            None => pending = Some((indent_of(raw), body.trim().to_string())),
        }
        if depth <= 0 && !continues {
            out.push(pending.take().expect("line pending"));
            depth = 0;
        }
    }
    if pending.is_some() || in_doc.is_some() {
        return Err(InterpError::Syntax("unexpected end of source".into()));
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    for (i, c) in line.char_indices() {
        match (quote, c) {
            (None, '#') => return &line[..i],
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            _ => {}
        }
    }
    line
}

impl Program {
    pub fn parse(code: &str, task: Task) -> Result<Program, InterpError> {
        let lines = logical_lines(code)?;
        // the worker shim predefines these names, so code may omit imports
        let mut modules: HashMap<String, Module> = [("np", Module::Numpy), ("numpy", Module::Numpy), ("math", Module::Math)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let mut params = None;
        let mut body = Vec::new();
        let mut body_indent = None;
        let fname = task.function_name();

        for (indent, line) in &lines {
            if *indent == 0 {
                if params.is_some() {
                    return Err(InterpError::Unsupported("top-level code after the function".into()));
                }
                if let Some(rest) = line.strip_prefix("import ") {
                    for part in rest.split(',') {
                        let words: Vec<&str> = part.split_whitespace().collect();
                        let (name, alias) = match words.as_slice() {
                            [n] => (*n, *n),
                            [n, "as", a] => (*n, *a),
                            _ => return Err(InterpError::Syntax(format!("bad import `{line}`"))),
                        };
                        match name {
                            "numpy" => modules.insert(alias.to_string(), Module::Numpy),
                            "math" => modules.insert(alias.to_string(), Module::Math),
                            _ => None,
                        };
                    }
                } else if line.starts_with("from ") {
                    // names imported this way are never resolved
                } else if line == "pass" {
                } else if let Some(rest) = line.strip_prefix("def ") {
                    params = Some(parse_header(rest, fname)?);
                } else {
                    return Err(InterpError::Unsupported(format!("top-level statement `{line}`")));
                }
                continue;
            }
            if params.is_none() {
                return Err(InterpError::Syntax("indented code outside a function".into()));
            }
            match body_indent {
                None => body_indent = Some(*indent),
                Some(b) if b != *indent => {
                    return Err(InterpError::Unsupported("nested blocks".into()));
                }
                _ => {}
            }
            if let Some(stmt) = parse_stmt(line)? {
                body.push(stmt);
            }
        }
        let params = params.ok_or_else(|| InterpError::Syntax(format!("no `{fname}` function")))?;
        if params.len() != arity(task) {
            return Err(InterpError::Syntax(format!(
                "`{fname}` takes {} parameters, expected {}",
                params.len(),
                arity(task)
            )));
        }
        if !matches!(body.last(), Some(Stmt::Return(_))) {
            return Err(InterpError::Unsupported("function body must end with `return`".into()));
        }
        if body[..body.len() - 1].iter().any(|s| matches!(s, Stmt::Return(_))) {
            return Err(InterpError::Unsupported("early return".into()));
        }
        let program = Program {
            task,
            params,
            body,
            modules,
        };
        program.check_names()?;
        Ok(program)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    fn check_names(&self) -> Result<(), InterpError> {
        let mut known: Vec<&str> = self.params.iter().map(String::as_str).collect();
        for stmt in &self.body {
            match stmt {
                Stmt::Assign(name, e) => {
                    self.check_expr(e, &known)?;
                    known.push(name);
                }
                Stmt::AugAssign(name, _, e) => {
                    if !known.contains(&name.as_str()) {
                        return Err(InterpError::Syntax(format!("`{name}` used before assignment")));
                    }
                    self.check_expr(e, &known)?;
                }
                Stmt::Return(e) => self.check_expr(e, &known)?,
            }
        }
        Ok(())
    }

    fn check_expr(&self, e: &Expr, known: &[&str]) -> Result<(), InterpError> {
        match e {
            Expr::Num(_) => Ok(()),
            Expr::Name(n) => {
                if known.contains(&n.as_str()) {
                    Ok(())
                } else {
                    Err(InterpError::Unsupported(format!("unknown name `{n}`")))
                }
            }
            Expr::Attr(m, a) => {
                let module = self.module(m)?;
                constant(module, a).map(|_| ()).ok_or_else(|| InterpError::Unsupported(format!("`{m}.{a}`")))
            }
            Expr::Neg(x) | Expr::Not(x) => self.check_expr(x, known),
            Expr::Bin(_, a, b) => {
                self.check_expr(a, known)?;
                self.check_expr(b, known)
            }
            Expr::IfElse(c, a, b) => {
                self.check_expr(c, known)?;
                self.check_expr(a, known)?;
                self.check_expr(b, known)
            }
            Expr::Index(base, items) => {
                self.check_expr(base, known)?;
                for it in items {
                    match it {
                        Index::At(x) => self.check_expr(x, known)?,
                        Index::Slice(a, b) => {
                            for x in [a, b].into_iter().flatten() {
                                self.check_expr(x, known)?;
                            }
                        }
                    }
                }
                Ok(())
            }
            Expr::Call {
                module,
                func,
                args,
                kwargs,
            } => {
                let m = module.as_deref().map(|m| self.module(m)).transpose()?;
                if !function_known(m, func) {
                    let full = module.as_ref().map_or(func.clone(), |m| format!("{m}.{func}"));
                    return Err(InterpError::Unsupported(format!("function `{full}`")));
                }
                for (k, _) in kwargs {
                    if k != "axis" {
                        return Err(InterpError::Unsupported(format!("keyword argument `{k}`")));
                    }
                }
                for a in args.iter().chain(kwargs.iter().map(|(_, e)| e)) {
                    self.check_expr(a, known)?;
                }
                Ok(())
            }
        }
    }

    fn module(&self, name: &str) -> Result<Module, InterpError> {
        self.modules
            .get(name)
            .copied()
            .ok_or_else(|| InterpError::Unsupported(format!("module or object `{name}`")))
    }

    fn run<'a>(&self, args: Vec<Value<'a>>) -> Result<Value<'static>, InterpError> {
        let mut env: HashMap<&str, Value<'a>> = self.params.iter().map(String::as_str).zip(args).collect();
        for stmt in &self.body {
            match stmt {
                Stmt::Assign(name, e) => {
                    let v = self.eval(e, &env)?;
                    env.insert(name, v);
                }
                Stmt::AugAssign(name, op, e) => {
                    let rhs = self.eval(e, &env)?;
                    let lhs = env.get(name.as_str()).expect("checked at parse time");
                    let v = binary(*op, lhs, &rhs)?;
                    env.insert(name, v);
                }
                Stmt::Return(e) => return Ok(self.eval(e, &env)?.into_owned()),
            }
        }
        unreachable!("parse guarantees a trailing return")
    }

    fn eval<'a>(&self, e: &Expr, env: &HashMap<&str, Value<'a>>) -> Result<Value<'a>, InterpError> {
        Ok(match e {
            Expr::Num(v) => {
                let kind = if v.fract() == 0.0 { Kind::Int } else { Kind::Float };
                Value::scalar(*v, kind)
            }
            Expr::Name(n) => env.get(n.as_str()).cloned().ok_or_else(|| InterpError::Runtime(format!("name `{n}` is not defined")))?,
            Expr::Attr(m, a) => Value::float(constant(self.module(m)?, a).expect("checked at parse time")),
            Expr::Neg(x) => {
                let v = self.eval(x, env)?;
                let kind = if v.kind == Kind::Bool { Kind::Int } else { v.kind };
                v.map(kind, |a| -a)
            }
            Expr::Not(x) => Value::scalar(!self.eval(x, env)?.truthy()? as u8 as f64, Kind::Bool),
            Expr::Bin(BinOp::And, a, b) => {
                let lhs = self.eval(a, env)?;
                if lhs.truthy()? {
                    self.eval(b, env)?
                } else {
                    lhs
                }
            }
            Expr::Bin(BinOp::Or, a, b) => {
                let lhs = self.eval(a, env)?;
                if lhs.truthy()? {
                    lhs
                } else {
                    self.eval(b, env)?
                }
            }
            Expr::Bin(op, a, b) => binary(*op, &self.eval(a, env)?, &self.eval(b, env)?)?,
            Expr::IfElse(c, a, b) => {
                if self.eval(c, env)?.truthy()? {
                    self.eval(a, env)?
                } else {
                    self.eval(b, env)?
                }
            }
            Expr::Index(base, items) => {
                let base = self.eval(base, env)?;
                let mut vals: Vec<Value<'a>> = Vec::new();
                let mut bounds: Vec<(Option<f64>, Option<f64>)> = Vec::new();
                for it in items {
                    match it {
                        Index::At(x) => vals.push(self.eval(x, env)?),
                        Index::Slice(a, b) => {
                            let ev = |x: &Option<Expr>| -> Result<Option<f64>, InterpError> {
                                x.as_ref().map(|x| self.eval(x, env)?.as_scalar("slice bound")).transpose()
                            };
                            bounds.push((ev(a)?, ev(b)?));
                        }
                    }
                }
                let (mut vi, mut bi) = (vals.iter(), bounds.iter());
                let subs: Vec<Sub<'_, 'a>> = items
                    .iter()
                    .map(|it| match it {
                        Index::At(_) => Sub::Array(vi.next().expect("one value per index")),
                        Index::Slice(..) => {
                            let (a, b) = bi.next().expect("one bound pair per slice");
                            Sub::Slice(*a, *b)
                        }
                    })
                    .collect();
                if base.ndim == 2 && subs.len() == 1 {
                    if let Sub::Array(v) = &subs[0] {
                        if v.ndim == 0 {
                            // row view of a borrowed matrix
                            return row_view(base, v.data[0]);
                        }
                    }
                }
                index(&base, &subs)?
            }
            Expr::Call {
                module,
                func,
                args,
                kwargs,
            } => {
                let m = module.as_deref().map(|m| self.module(m)).transpose()?;
                let args = args.iter().map(|a| self.eval(a, env)).collect::<Result<Vec<_>, _>>()?;
                let axis = match kwargs.first() {
                    Some((_, e)) => Some(self.eval(e, env)?.as_scalar("axis")? as i64),
                    None => None,
                };
                call(m, func, &args, axis)?
            }
        })
    }
}

fn row_view<'a>(base: Value<'a>, at: f64) -> Result<Value<'a>, InterpError> {
    let i = index(&Value::vector((0..base.rows).map(|r| r as f64).collect(), Kind::Int), &[Sub::Scalar(at)])?.data[0] as usize;
    let cols = base.cols;
    let kind = base.kind;
    let data = match base.data {
        Cow::Borrowed(d) => Cow::Borrowed(&d[i * cols..(i + 1) * cols]),
        Cow::Owned(d) => Cow::Owned(d[i * cols..(i + 1) * cols].to_vec()),
    };
    Ok(Value {
        ndim: 1,
        rows: 1,
        cols,
        kind,
        data,
    })
}

fn parse_header(rest: &str, fname: &str) -> Result<Vec<String>, InterpError> {
    let open = rest.find('(').ok_or_else(|| InterpError::Syntax("malformed def".into()))?;
    let name = rest[..open].trim();
    if name != fname {
        return Err(InterpError::Unsupported(format!("helper function `{name}`")));
    }
    let close = rest.rfind(')').ok_or_else(|| InterpError::Syntax("malformed def".into()))?;
    if !rest[close..].trim_end().ends_with(':') {
        return Err(InterpError::Syntax("def header must end with `:`".into()));
    }
    let after = rest[close + 1..].trim().trim_end_matches(':').trim();
    if !(after.is_empty() || after.starts_with("->")) {
        return Err(InterpError::Unsupported("statement on the def line".into()));
    }
    let inner = &rest[open + 1..close];
    let mut params = Vec::new();
    let mut depth = 0;
    let mut current = String::new();
    for c in inner.chars().chain(std::iter::once(',')) {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                let p = current.split([':', '=']).next().unwrap_or("").trim().to_string();
                if !p.is_empty() {
                    if p.starts_with('*') {
                        return Err(InterpError::Unsupported("variadic parameters".into()));
                    }
                    params.push(p);
                }
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    Ok(params)
}

fn parse_stmt(line: &str) -> Result<Option<Stmt>, InterpError> {
    let toks = lex(line)?;
    match toks.first() {
        None => return Ok(None),
        Some(Tok::Ident(k)) if k == "pass" && toks.len() == 1 => return Ok(None),
        Some(Tok::Ident(k)) if k == "return" => {
            let mut p = Parser::new(&toks[1..]);
            return Ok(Some(Stmt::Return(p.finish_expr()?)));
        }
        Some(Tok::Ident(k))
            if matches!(
                k.as_str(),
                "if" | "elif" | "else" | "for" | "while" | "try" | "except" | "with" | "def" | "class" | "global" | "nonlocal" | "import" | "from" | "raise" | "assert" | "del"
            ) =>
        {
            return Err(InterpError::Unsupported(format!("`{k}` statement")));
        }
        Some(Tok::Str) if toks.len() == 1 => return Ok(None),
        _ => {}
    }
    if let (Some(Tok::Ident(name)), Some(Tok::Op(op))) = (toks.first(), toks.get(1)) {
        let aug = match *op {
            "=" => None,
            "+=" => Some(BinOp::Add),
            "-=" => Some(BinOp::Sub),
            "*=" => Some(BinOp::Mul),
            "/=" => Some(BinOp::Div),
            "//=" => Some(BinOp::FloorDiv),
            "**=" => Some(BinOp::Pow),
            _ => {
                return Err(InterpError::Unsupported(format!("statement `{line}`")));
            }
        };
        let mut p = Parser::new(&toks[2..]);
        let e = p.finish_expr()?;
        return Ok(Some(match aug {
            None => Stmt::Assign(name.clone(), e),
            Some(op) => Stmt::AugAssign(name.clone(), op, e),
        }));
    }
    Err(InterpError::Unsupported(format!("statement `{line}`")))
}

fn constant(module: Module, name: &str) -> Option<f64> {
    match (module, name) {
        (_, "inf") => Some(f64::INFINITY),
        (_, "pi") => Some(std::f64::consts::PI),
        (_, "e") => Some(std::f64::consts::E),
        (_, "nan") => Some(f64::NAN),
        _ => None,
    }
}

const UNARY: [&str; 13] = [
    "abs", "sqrt", "exp", "log", "log1p", "log2", "log10", "square", "floor", "ceil", "tanh", "isinf", "isfinite",
];

fn function_known(module: Option<Module>, func: &str) -> bool {
    match module {
        None => matches!(func, "len" | "float" | "int" | "abs" | "min" | "max" | "round" | "bool"),
        Some(Module::Math) => matches!(func, "sqrt" | "exp" | "log" | "fabs" | "floor" | "ceil" | "tanh" | "pow"),
        Some(Module::Numpy) => {
            UNARY.contains(&func)
                || matches!(
                    func,
                    "isnan"
                        | "minimum"
                        | "maximum"
                        | "power"
                        | "clip"
                        | "where"
                        | "argmin"
                        | "argmax"
                        | "min"
                        | "max"
                        | "amin"
                        | "amax"
                        | "sum"
                        | "mean"
                        | "std"
                        | "prod"
                        | "all"
                        | "any"
                        | "arange"
                        | "zeros_like"
                        | "ones_like"
                        | "full_like"
                        | "array"
                        | "asarray"
                        | "float64"
                        | "exp2"
                        | "sign"
                        | "reciprocal"
                )
        }
    }
}

fn rt(msg: impl Into<String>) -> InterpError {
    InterpError::Runtime(msg.into())
}

fn expect_args(func: &str, args: &[Value<'_>], n: std::ops::RangeInclusive<usize>) -> Result<(), InterpError> {
    if n.contains(&args.len()) {
        Ok(())
    } else {
        Err(rt(format!("{func}() got {} positional arguments", args.len())))
    }
}

fn unary_fn(name: &str) -> Option<(fn(f64) -> f64, Kind)> {
    Some(match name {
        "abs" | "fabs" => (f64::abs, Kind::Float),
        "sqrt" => (f64::sqrt, Kind::Float),
        "exp" => (f64::exp, Kind::Float),
        "exp2" => (f64::exp2, Kind::Float),
        "log" => (f64::ln, Kind::Float),
        "log1p" => (f64::ln_1p, Kind::Float),
        "log2" => (f64::log2, Kind::Float),
        "log10" => (f64::log10, Kind::Float),
        "square" => (|x| x * x, Kind::Float),
        "floor" => (f64::floor, Kind::Float),
        "ceil" => (f64::ceil, Kind::Float),
        "tanh" => (f64::tanh, Kind::Float),
        "reciprocal" => (|x| 1.0 / x, Kind::Float),
        "sign" => (|x: f64| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { x }, Kind::Float),
        "isinf" => (|x: f64| x.is_infinite() as u8 as f64, Kind::Bool),
        "isfinite" => (|x: f64| x.is_finite() as u8 as f64, Kind::Bool),
        "isnan" => (|x: f64| x.is_nan() as u8 as f64, Kind::Bool),
        _ => return None,
    })
}

fn call<'a>(module: Option<Module>, func: &str, args: &[Value<'a>], axis: Option<i64>) -> Result<Value<'a>, InterpError> {
    if module == Some(Module::Math) {
        if func == "pow" {
            expect_args(func, args, 2..=2)?;
            return binary(BinOp::Pow, &args[0], &args[1]);
        }
        expect_args(func, args, 1..=1)?;
        let x = args[0].as_scalar(func)?;
        let (f, _) = unary_fn(func).expect("math function in table");
        return Ok(Value::float(f(x)));
    }
    if module.is_none() && func != "abs" {
        return builtin(func, args);
    }
    if let Some((f, kind)) = unary_fn(func) {
        expect_args(func, args, 1..=1)?;
        let kind = if func == "abs" && args[0].kind == Kind::Int { Kind::Int } else { kind };
        return Ok(args[0].map(kind, f));
    }
    let reduction = match func {
        "min" | "amin" => Some(Reduce::Min),
        "max" | "amax" => Some(Reduce::Max),
        "sum" => Some(Reduce::Sum),
        "mean" => Some(Reduce::Mean),
        "std" => Some(Reduce::Std),
        "prod" => Some(Reduce::Prod),
        "argmin" => Some(Reduce::ArgMin),
        "argmax" => Some(Reduce::ArgMax),
        "all" => Some(Reduce::All),
        "any" => Some(Reduce::Any),
        _ => None,
    };
    if let Some(op) = reduction {
        expect_args(func, args, 1..=1)?;
        return reduce(op, &args[0], axis);
    }
    match func {
        "minimum" | "maximum" | "power" => {
            expect_args(func, args, 2..=2)?;
            let kind = numeric_kind(args[0].kind, args[1].kind);
            let f: fn(f64, f64) -> f64 = match func {
                "minimum" => |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) },
                "maximum" => |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) },
                _ => f64::powf,
            };
            broadcast(&[&args[0], &args[1]], kind, |x| f(x[0], x[1]))
        }
        "clip" => {
            expect_args(func, args, 3..=3)?;
            let kind = numeric_kind(args[0].kind, numeric_kind(args[1].kind, args[2].kind));
            broadcast(&[&args[0], &args[1], &args[2]], kind, |x| x[0].max(x[1]).min(x[2]))
        }
        "where" => {
            expect_args(func, args, 3..=3)?;
            let kind = if args[1].kind == args[2].kind { args[1].kind } else { numeric_kind(args[1].kind, args[2].kind) };
            broadcast(&[&args[0], &args[1], &args[2]], kind, |x| if x[0] != 0.0 { x[1] } else { x[2] })
        }
        "arange" => {
            expect_args(func, args, 1..=2)?;
            let (a, b) = if args.len() == 1 {
                (0.0, args[0].as_scalar("arange stop")?)
            } else {
                (args[0].as_scalar("arange start")?, args[1].as_scalar("arange stop")?)
            };
            let n = (b - a).ceil().max(0.0) as usize;
            let kind = if a.fract() == 0.0 && b.fract() == 0.0 { Kind::Int } else { Kind::Float };
            Ok(Value::vector((0..n).map(|i| a + i as f64).collect(), kind))
        }
        "zeros_like" | "ones_like" => {
            expect_args(func, args, 1..=1)?;
            let fill = if func == "zeros_like" { 0.0 } else { 1.0 };
            Ok(args[0].map(args[0].kind, |_| fill))
        }
        "full_like" => {
            expect_args(func, args, 2..=2)?;
            let fill = args[1].as_scalar("fill value")?;
            Ok(args[0].map(numeric_kind(args[0].kind, args[1].kind), |_| fill))
        }
        "array" | "asarray" => {
            expect_args(func, args, 1..=1)?;
            Ok(args[0].clone())
        }
        "float64" => {
            expect_args(func, args, 1..=1)?;
            Ok(args[0].map(Kind::Float, |x| x))
        }
        _ => Err(InterpError::Unsupported(format!("np.{func}"))),
    }
}

fn builtin<'a>(func: &str, args: &[Value<'a>]) -> Result<Value<'a>, InterpError> {
    match func {
        "len" => {
            expect_args(func, args, 1..=1)?;
            Ok(Value::int(args[0].len()?))
        }
        "float" => {
            expect_args(func, args, 1..=1)?;
            Ok(Value::float(args[0].as_scalar("float() argument")?))
        }
        "int" => {
            expect_args(func, args, 1..=1)?;
            let x = args[0].as_scalar("int() argument")?;
            if !x.is_finite() {
                return Err(rt("cannot convert float infinity or NaN to integer"));
            }
            Ok(Value::scalar(x.trunc(), Kind::Int))
        }
        "bool" => {
            expect_args(func, args, 1..=1)?;
            Ok(Value::scalar(args[0].truthy()? as u8 as f64, Kind::Bool))
        }
        "round" => {
            expect_args(func, args, 1..=1)?;
            let x = args[0].as_scalar("round() argument")?;
            // banker's rounding as in Python 3
            let r = x.round();
            let r = if (x - x.trunc()).abs() == 0.5 && r % 2.0 != 0.0 { r - x.signum() } else { r };
            Ok(Value::scalar(r, Kind::Int))
        }
        "min" | "max" => {
            let op = if func == "min" { Reduce::Min } else { Reduce::Max };
            if args.len() == 1 {
                if args[0].ndim == 0 {
                    return Err(rt(format!("'{}' object is not iterable", "float")));
                }
                return reduce(op, &args[0], None);
            }
            if args.is_empty() {
                return Err(rt(format!("{func} expected at least 1 argument")));
            }
            let mut best = args[0].clone();
            let mut best_v = best.as_scalar(func)?;
            for a in &args[1..] {
                let v = a.as_scalar(func)?;
                let better = if func == "min" { v < best_v } else { v > best_v };
                if better {
                    best = a.clone();
                    best_v = v;
                }
            }
            Ok(best)
        }
        _ => Err(InterpError::Unsupported(format!("builtin `{func}`"))),
    }
}

fn binary<'a>(op: BinOp, a: &Value<'_>, b: &Value<'_>) -> Result<Value<'a>, InterpError> {
    let num = numeric_kind(a.kind, b.kind);
    let (kind, f): (Kind, fn(f64, f64) -> f64) = match op {
        BinOp::Add => (num, |x, y| x + y),
        BinOp::Sub => (num, |x, y| x - y),
        BinOp::Mul => (num, |x, y| x * y),
        BinOp::Div => (Kind::Float, |x, y| x / y),
        BinOp::FloorDiv => (num, py_floordiv),
        BinOp::Mod => (num, py_mod),
        BinOp::Pow => (num, f64::powf),
        BinOp::Lt => (Kind::Bool, |x, y| (x < y) as u8 as f64),
        BinOp::Le => (Kind::Bool, |x, y| (x <= y) as u8 as f64),
        BinOp::Gt => (Kind::Bool, |x, y| (x > y) as u8 as f64),
        BinOp::Ge => (Kind::Bool, |x, y| (x >= y) as u8 as f64),
        BinOp::Eq => (Kind::Bool, |x, y| (x == y) as u8 as f64),
        BinOp::Ne => (Kind::Bool, |x, y| (x != y) as u8 as f64),
        BinOp::And | BinOp::Or => unreachable!("short-circuit operators are evaluated lazily"),
    };
    broadcast(&[a, b], kind, |x| f(x[0], x[1]))
}

fn usize_vector(xs: &[usize]) -> Value<'static> {
    Value::vector(xs.iter().map(|&x| x as f64).collect(), Kind::Int)
}

impl Program {
    /// Evaluates the function on one query and returns the raw result.
    fn call_query(&self, query: &DecisionQuery<'_>) -> Result<Value<'static>, InterpError> {
        let args: Vec<Value<'_>> = match (self.task, query) {
            (Task::Obp, DecisionQuery::Obp { item, bins }) => {
                vec![Value::float(*item), Value::vector(bins.to_vec(), Kind::Float)]
            }
            (
                Task::Tsp,
                DecisionQuery::Tsp {
                    current,
                    destination,
                    unvisited,
                    distances,
                },
            ) => {
                let n = distances.len();
                vec![
                    Value::int(*current),
                    Value::int(*destination),
                    usize_vector(unvisited),
                    Value::matrix(n, n, Cow::Borrowed(distances.as_slice()), Kind::Float),
                ]
            }
            (
                Task::Cvrp,
                DecisionQuery::Cvrp {
                    current,
                    depot,
                    unvisited,
                    rest_capacity,
                    demands,
                    distances,
                },
            ) => {
                let n = distances.len();
                vec![
                    Value::int(*current),
                    Value::int(*depot),
                    usize_vector(unvisited),
                    Value::float(*rest_capacity),
                    Value::vector(demands.to_vec(), Kind::Float),
                    Value::matrix(n, n, Cow::Borrowed(distances.as_slice()), Kind::Float),
                ]
            }
            _ => return Err(rt(format!("query does not match a {} heuristic", self.task))),
        };
        self.run(args)
    }
}

impl Decider for Program {
    fn decide(&self, query: &DecisionQuery<'_>) -> Result<Decision, DecisionError> {
        let out = self.call_query(query).map_err(|e| DecisionError(e.to_string()))?;
        match query {
            DecisionQuery::Obp { bins, .. } => match out.ndim {
                0 => Ok(Decision::Priorities(vec![out.data[0]; bins.len()])),
                1 => Ok(Decision::Priorities(out.data.into_owned())),
                _ => Err(DecisionError(format!("priority must be one-dimensional, got shape {}", out.shape_str()))),
            },
            _ => {
                let v = out
                    .as_scalar("returned node")
                    .map_err(|e| DecisionError(e.to_string()))?;
                if v.fract() != 0.0 || !v.is_finite() {
                    return Err(DecisionError(format!("returned node {v} is not an integer")));
                }
                Ok(Decision::Node(v as i64))
            }
        }
    }
}

#[cfg(test)]
mod tests;
