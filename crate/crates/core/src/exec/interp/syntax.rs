//! Lexer and expression parser for the supported Python subset.

use super::InterpError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Num(f64),
    Ident(String),
    Str,
    Op(&'static str),
}

const OPS: [&str; 28] = [
    "**=", "//=", "**", "//", "<=", ">=", "==", "!=", "+=", "-=", "*=", "/=", "->", "+", "-", "*", "/", "%", "<", ">",
    "(", ")", "[", "]", ",", ":", ".", "=",
];

pub(super) fn lex(line: &str) -> Result<Vec<Tok>, InterpError> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_') {
                // exponent sign
                if (bytes[i] == b'e' || bytes[i] == b'E') && matches!(bytes.get(i + 1), Some(b'+') | Some(b'-')) {
                    i += 1;
                }
                i += 1;
            }
            let text: String = line[start..i].chars().filter(|&ch| ch != '_').collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| InterpError::Syntax(format!("bad number literal `{text}`")))?;
            out.push(Tok::Num(v));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(line[start..i].to_string()));
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = bytes[i];
            i += 1;
            while i < bytes.len() && bytes[i] != quote {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            if i >= bytes.len() {
                return Err(InterpError::Syntax("unterminated string".into()));
            }
            i += 1;
            out.push(Tok::Str);
            continue;
        }
        match OPS.iter().find(|op| line[i..].starts_with(**op)) {
            Some(op) => {
                out.push(Tok::Op(op));
                i += op.len();
            }
            None => return Err(InterpError::Unsupported(format!("character `{c}`"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Index {
    At(Expr),
    Slice(Option<Expr>, Option<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Expr {
    Num(f64),
    Name(String),
    /// `module.attr` constants such as `np.inf`.
    Attr(String, String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `module.func(...)` when `module` is set, else a builtin.
    Call {
        module: Option<String>,
        func: String,
        args: Vec<Expr>,
        kwargs: Vec<(String, Expr)>,
    },
    Index(Box<Expr>, Vec<Index>),
    IfElse(Box<Expr>, Box<Expr>, Box<Expr>),
}

pub(super) struct Parser<'t> {
    toks: &'t [Tok],
    pos: usize,
}

type PResult<T> = Result<T, InterpError>;

impl<'t> Parser<'t> {
    pub(super) fn new(toks: &'t [Tok]) -> Self {
        Parser { toks, pos: 0 }
    }

    pub(super) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(Tok::Op(o)) if *o == op)
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.peek_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(InterpError::Syntax(format!("expected `{op}`, found {:?}", self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(InterpError::Syntax(format!("expected a name, found {other:?}"))),
        }
    }

    pub(super) fn expr(&mut self) -> PResult<Expr> {
        if self.peek_kw("lambda") {
            return Err(InterpError::Unsupported("lambda".into()));
        }
        let body = self.or_expr()?;
        if self.eat_kw("if") {
            let cond = self.or_expr()?;
            if !self.eat_kw("else") {
                return Err(InterpError::Syntax("conditional expression without `else`".into()));
            }
            let other = self.expr()?;
            return Ok(Expr::IfElse(Box::new(cond), Box::new(body), Box::new(other)));
        }
        Ok(body)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            lhs = Expr::Bin(BinOp::Or, Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            lhs = Expr::Bin(BinOp::And, Box::new(lhs), Box::new(self.not_expr()?));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.arith()?;
        let op = match self.peek() {
            Some(Tok::Op("<")) => BinOp::Lt,
            Some(Tok::Op("<=")) => BinOp::Le,
            Some(Tok::Op(">")) => BinOp::Gt,
            Some(Tok::Op(">=")) => BinOp::Ge,
            Some(Tok::Op("==")) => BinOp::Eq,
            Some(Tok::Op("!=")) => BinOp::Ne,
            Some(Tok::Ident(k)) if k == "in" || k == "is" => {
                return Err(InterpError::Unsupported(format!("`{k}` operator")))
            }
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.arith()?;
        if matches!(self.peek(), Some(Tok::Op("<" | "<=" | ">" | ">=" | "==" | "!="))) {
            return Err(InterpError::Unsupported("chained comparison".into()));
        }
        Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op("*") {
                BinOp::Mul
            } else if self.eat_op("/") {
                BinOp::Div
            } else if self.eat_op("//") {
                BinOp::FloorDiv
            } else if self.eat_op("%") {
                BinOp::Mod
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_op("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op("+") {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.postfix()?;
        if self.eat_op("**") {
            // right associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op("[") {
                let mut items = vec![self.index_item()?];
                while self.eat_op(",") {
                    if self.peek_op("]") {
                        break;
                    }
                    items.push(self.index_item()?);
                }
                self.expect_op("]")?;
                e = Expr::Index(Box::new(e), items);
            } else if self.peek_op(".") {
                let Expr::Name(module) = &e else {
                    return Err(InterpError::Unsupported("method or attribute access on a value".into()));
                };
                let module = module.clone();
                self.pos += 1;
                let attr = self.ident()?;
                if self.eat_op("(") {
                    let (args, kwargs) = self.call_args()?;
                    e = Expr::Call {
                        module: Some(module),
                        func: attr,
                        args,
                        kwargs,
                    };
                } else {
                    e = Expr::Attr(module, attr);
                }
                if self.peek_op(".") {
                    return Err(InterpError::Unsupported("nested attribute access".into()));
                }
            } else if self.peek_op("(") {
                let Expr::Name(func) = &e else {
                    return Err(InterpError::Unsupported("calling a computed value".into()));
                };
                let func = func.clone();
                self.pos += 1;
                let (args, kwargs) = self.call_args()?;
                e = Expr::Call {
                    module: None,
                    func,
                    args,
                    kwargs,
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn index_item(&mut self) -> PResult<Index> {
        let start = if self.peek_op(":") { None } else { Some(self.expr()?) };
        if self.eat_op(":") {
            let stop = if self.peek_op("]") || self.peek_op(",") {
                None
            } else {
                Some(self.expr()?)
            };
            if self.peek_op(":") {
                return Err(InterpError::Unsupported("slice step".into()));
            }
            return Ok(Index::Slice(start, stop));
        }
        Ok(Index::At(start.expect("non-slice index has an expression")))
    }

    fn call_args(&mut self) -> PResult<(Vec<Expr>, Vec<(String, Expr)>)> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.eat_op(")") {
            if let (Some(Tok::Ident(name)), Some(Tok::Op("="))) = (self.toks.get(self.pos), self.toks.get(self.pos + 1)) {
                let name = name.clone();
                self.pos += 2;
                kwargs.push((name, self.expr()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(InterpError::Syntax("positional argument after keyword".into()));
                }
                args.push(self.expr()?);
            }
            if !self.eat_op(",") {
                self.expect_op(")")?;
                break;
            }
        }
        Ok((args, kwargs))
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "True" => Ok(Expr::Num(1.0)),
                    "False" => Ok(Expr::Num(0.0)),
                    "None" | "lambda" | "for" | "yield" | "await" => Err(InterpError::Unsupported(format!("`{name}`"))),
                    _ => Ok(Expr::Name(name)),
                }
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek_op(",") {
                    return Err(InterpError::Unsupported("tuple".into()));
                }
                self.expect_op(")")?;
                Ok(e)
            }
            Some(Tok::Op("[")) => Err(InterpError::Unsupported("list literal".into())),
            Some(Tok::Str) => Err(InterpError::Unsupported("string value".into())),
            other => Err(InterpError::Syntax(format!("unexpected {other:?}"))),
        }
    }

    /// Parses the remainder as one expression.
    pub(super) fn finish_expr(&mut self) -> PResult<Expr> {
        let e = self.expr()?;
        if !self.at_end() {
            if self.peek_kw("for") {
                return Err(InterpError::Unsupported("comprehension".into()));
            }
            return Err(InterpError::Syntax(format!("trailing tokens after expression: {:?}", &self.toks[self.pos..])));
        }
        Ok(e)
    }
}
