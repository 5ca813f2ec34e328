//! Integrand expression trees.
//!
//! A [`LagrangianExpr`] holds a parsed integrand `L(x, y1..yN, v1..vN
//! [, p1..pr])`, where `vi` stands for the i-th component of the combined
//! Caputo derivative of the trajectory and `pj` are multiplier/parameter
//! slots. The grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            -- right-associative, binds tightest
//! atom    := number | identifier | call | '(' expr ')'
//! call    := name '(' expr (',' expr)* ')'
//! ```
//!
//! Identifiers are `x`, `y1..yN`, `v1..vN`, `p1..pr`, and the constant
//! `pi`. Functions: `sin cos exp ln sqrt abs gamma` (one argument) and
//! `mlf(alpha, z)` (the Mittag-Leffler function). Whitespace is
//! insignificant. Numbers may use scientific notation.
//!
//! Partial derivatives are exact (forward rule on the tree); `mlf`
//! differentiates in its second argument via the series derivative and
//! rejects differentiation through its first.

use std::fmt;

use crate::error::{Error, Result};
use crate::specfun;

/// Unary function names accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Gamma,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    /// Argument slot: 0 = x, 1..=N = y_i, N+1..=2N = v_i, 2N+1..=2N+r = p_j.
    Arg(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    Mlf(Box<Node>, Box<Node>),
}

/// Parsed integrand with fixed arity `1 + 2·n_components + n_params`.
///
/// Immutable after parse; evaluation and differentiation are reentrant and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct LagrangianExpr {
    ast: Node,
    n_components: usize,
    n_params: usize,
    source: String,
}

impl LagrangianExpr {
    /// Number of trajectory components N.
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Number of parameter slots r.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Total argument count: `1 + 2N + r`.
    pub fn arity(&self) -> usize {
        1 + 2 * self.n_components + self.n_params
    }

    /// The source text this expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when the tree references no slot other than `x` (a plain
    /// univariate function, as the derivative CLI expects).
    pub fn is_univariate(&self) -> bool {
        fn walk(node: &Node) -> bool {
            match node {
                Node::Const(_) => true,
                Node::Arg(slot) => *slot == 0,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Add(a, b)
                | Node::Sub(a, b)
                | Node::Mul(a, b)
                | Node::Div(a, b)
                | Node::Pow(a, b)
                | Node::Mlf(a, b) => walk(a) && walk(b),
            }
        }
        walk(&self.ast)
    }

    fn check_arity(&self, args: &[f64]) -> Result<()> {
        if args.len() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                got: args.len(),
            });
        }
        Ok(())
    }

    /// Evaluate at the argument vector `(x, y1..yN, v1..vN, p1..pr)`.
    pub fn eval(&self, args: &[f64]) -> Result<f64> {
        self.check_arity(args)?;
        eval_node(&self.ast, args)
    }

    /// Exact partial derivatives with respect to every slot, evaluated at
    /// `args`. Returns a vector of length [`arity`](Self::arity).
    pub fn partials(&self, args: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(args)?;
        (0..self.arity())
            .map(|slot| eval_node_d(&self.ast, args, slot).map(|(_, d)| d))
            .collect()
    }

    /// Partial derivative with respect to a single slot.
    pub fn partial(&self, args: &[f64], slot: usize) -> Result<f64> {
        self.check_arity(args)?;
        if slot >= self.arity() {
            return Err(Error::Invalid(format!(
                "slot {slot} out of range for arity {}",
                self.arity()
            )));
        }
        eval_node_d(&self.ast, args, slot).map(|(_, d)| d)
    }

    /// Linear combination `Σ c_k · expr_k` of expressions sharing arity.
    /// Coefficients are baked into the tree as constants.
    pub fn linear_combination(terms: &[(f64, &LagrangianExpr)]) -> Result<LagrangianExpr> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Invalid("empty linear combination".into()))?;
        let (n, r) = (first.1.n_components, first.1.n_params);
        let mut ast: Option<Node> = None;
        let mut sources = Vec::new();
        for &(c, e) in terms {
            if e.n_components != n || e.n_params != r {
                return Err(Error::Dimension(
                    "linear combination over expressions with differing shapes".into(),
                ));
            }
            let scaled = if c == 1.0 {
                e.ast.clone()
            } else {
                Node::Mul(Box::new(Node::Const(c)), Box::new(e.ast.clone()))
            };
            ast = Some(match ast {
                None => scaled,
                Some(a) => Node::Add(Box::new(a), Box::new(scaled)),
            });
            sources.push(format!("{c}*({})", e.source));
        }
        Ok(LagrangianExpr {
            ast: ast.unwrap(),
            n_components: n,
            n_params: r,
            source: sources.join(" + "),
        })
    }

    /// `self − Σ λ_j · gs_j`, with the multiplier values baked in as
    /// constants. Shapes must agree.
    pub fn subtract_scaled(&self, gs: &[(f64, &LagrangianExpr)]) -> Result<LagrangianExpr> {
        let mut ast = self.ast.clone();
        let mut source = self.source.clone();
        for &(lambda, g) in gs {
            if g.n_components != self.n_components || g.n_params != self.n_params {
                return Err(Error::Dimension(
                    "augmentation over expressions with differing shapes".into(),
                ));
            }
            ast = Node::Sub(
                Box::new(ast),
                Box::new(Node::Mul(
                    Box::new(Node::Const(lambda)),
                    Box::new(g.ast.clone()),
                )),
            );
            source = format!("{source} - {lambda}*({})", g.source);
        }
        Ok(LagrangianExpr {
            ast,
            n_components: self.n_components,
            n_params: self.n_params,
            source,
        })
    }
}

impl fmt::Display for LagrangianExpr {
    /// Canonical fully-parenthesized printout; re-parsing it yields a tree
    /// with identical evaluation.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.ast, self.n_components, f)
    }
}

fn fmt_node(node: &Node, n: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                write!(f, "({c:?})")
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Arg(0) => write!(f, "x"),
        Node::Arg(slot) => {
            if *slot <= n {
                write!(f, "y{slot}")
            } else if *slot <= 2 * n {
                write!(f, "v{}", slot - n)
            } else {
                write!(f, "p{}", slot - 2 * n)
            }
        }
        Node::Neg(a) => {
            write!(f, "(-")?;
            fmt_node(a, n, f)?;
            write!(f, ")")
        }
        Node::Add(a, b) => fmt_binary(a, "+", b, n, f),
        Node::Sub(a, b) => fmt_binary(a, "-", b, n, f),
        Node::Mul(a, b) => fmt_binary(a, "*", b, n, f),
        Node::Div(a, b) => fmt_binary(a, "/", b, n, f),
        Node::Pow(a, b) => fmt_binary(a, "^", b, n, f),
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            fmt_node(a, n, f)?;
            write!(f, ")")
        }
        Node::Mlf(a, b) => {
            write!(f, "mlf(")?;
            fmt_node(a, n, f)?;
            write!(f, ", ")?;
            fmt_node(b, n, f)?;
            write!(f, ")")
        }
    }
}

fn fmt_binary(a: &Node, op: &str, b: &Node, n: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "(")?;
    fmt_node(a, n, f)?;
    write!(f, " {op} ")?;
    fmt_node(b, n, f)?;
    write!(f, ")")
}

/// Parse `src` into an expression over N components and r parameters.
pub fn parse_lagrangian(src: &str, n_components: usize, n_params: usize) -> Result<LagrangianExpr> {
    if src.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            msg: "empty expression".into(),
        });
    }
    if n_components == 0 {
        return Err(Error::Invalid("n_components must be at least 1".into()));
    }
    let tokens = lex(src)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        n_components,
        n_params,
    };
    let ast = parser.parse_expr()?;
    if parser.pos != parser.tokens.len() {
        let tok = &parser.tokens[parser.pos];
        return Err(Error::Syntax {
            offset: tok.offset,
            msg: format!("unexpected `{}`", tok.text),
        });
    }
    Ok(LagrangianExpr {
        ast,
        n_components,
        n_params,
        source: src.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
    text: String,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            '+' => Some(TokKind::Plus),
            '-' => Some(TokKind::Minus),
            '*' => Some(TokKind::Star),
            '/' => Some(TokKind::Slash),
            '^' => Some(TokKind::Caret),
            '(' => Some(TokKind::LParen),
            ')' => Some(TokKind::RParen),
            ',' => Some(TokKind::Comma),
            _ => None,
        };
        if let Some(kind) = kind {
            i += 1;
            tokens.push(Token {
                kind,
                offset: start,
                text: c.to_string(),
            });
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                msg: format!("malformed number `{text}`"),
            })?;
            tokens.push(Token {
                kind: TokKind::Num(value),
                offset: start,
                text: text.to_string(),
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            let text = &src[start..i];
            tokens.push(Token {
                kind: TokKind::Ident(text.to_string()),
                offset: start,
                text: text.to_string(),
            });
            continue;
        }
        return Err(Error::Syntax {
            offset: start,
            msg: format!("unexpected character `{c}`"),
        });
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    n_components: usize,
    n_params: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn eof_offset(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.offset + t.text.len())
            .unwrap_or(0)
    }

    fn expect(&mut self, kind: &TokKind, what: &str) -> Result<()> {
        match self.peek() {
            Some(k) if k == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => {
                let tok = &self.tokens[self.pos];
                Err(Error::Syntax {
                    offset: tok.offset,
                    msg: format!("expected {what}, found `{}`", tok.text),
                })
            }
            None => Err(Error::Syntax {
                offset: self.eof_offset(),
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn parse_expr(&mut self) -> Result<Node> {
        let mut node = self.parse_term()?;
        loop {
            match self.peek() {
                Some(TokKind::Plus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    node = Node::Add(Box::new(node), Box::new(rhs));
                }
                Some(TokKind::Minus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    node = Node::Sub(Box::new(node), Box::new(rhs));
                }
                _ => return Ok(node),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Node> {
        let mut node = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(TokKind::Star) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    node = Node::Mul(Box::new(node), Box::new(rhs));
                }
                Some(TokKind::Slash) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    node = Node::Div(Box::new(node), Box::new(rhs));
                }
                _ => return Ok(node),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Node> {
        if let Some(TokKind::Minus) = self.peek() {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Node> {
        let base = self.parse_atom()?;
        if let Some(TokKind::Caret) = self.peek() {
            self.pos += 1;
            // right-associative; exponent may carry a unary minus
            let exp = self.parse_unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Node> {
        let tok = match self.tokens.get(self.pos) {
            Some(t) => t.clone(),
            None => {
                return Err(Error::Syntax {
                    offset: self.eof_offset(),
                    msg: "expected expression, found end of input".into(),
                })
            }
        };
        match tok.kind {
            TokKind::Num(v) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            TokKind::LParen => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.expect(&TokKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokKind::Ident(ref name) => {
                self.pos += 1;
                if let Some(TokKind::LParen) = self.peek() {
                    self.parse_call(name, tok.offset)
                } else {
                    self.resolve_identifier(name, tok.offset)
                }
            }
            _ => Err(Error::Syntax {
                offset: tok.offset,
                msg: format!("expected expression, found `{}`", tok.text),
            }),
        }
    }

    fn parse_call(&mut self, name: &str, offset: usize) -> Result<Node> {
        self.expect(&TokKind::LParen, "`(`")?;
        let mut args = vec![self.parse_expr()?];
        while let Some(TokKind::Comma) = self.peek() {
            self.pos += 1;
            args.push(self.parse_expr()?);
        }
        self.expect(&TokKind::RParen, "`)`")?;
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            "gamma" => Some(Func::Gamma),
            _ => None,
        };
        if let Some(func) = func {
            if args.len() != 1 {
                return Err(Error::Syntax {
                    offset,
                    msg: format!("{name} takes 1 argument, got {}", args.len()),
                });
            }
            return Ok(Node::Call(func, Box::new(args.pop().unwrap())));
        }
        if name == "mlf" {
            if args.len() != 2 {
                return Err(Error::Syntax {
                    offset,
                    msg: format!("mlf takes 2 arguments (alpha, z), got {}", args.len()),
                });
            }
            let z = args.pop().unwrap();
            let alpha = args.pop().unwrap();
            return Ok(Node::Mlf(Box::new(alpha), Box::new(z)));
        }
        Err(Error::Syntax {
            offset,
            msg: format!("unknown function `{name}`"),
        })
    }

    fn resolve_identifier(&self, name: &str, offset: usize) -> Result<Node> {
        if name == "x" {
            return Ok(Node::Arg(0));
        }
        if name == "pi" {
            return Ok(Node::Const(std::f64::consts::PI));
        }
        let (head, tail) = name.split_at(1);
        let index: Option<usize> = if tail.is_empty() || tail.starts_with('0') {
            None
        } else {
            tail.parse().ok()
        };
        let slot = match (head, index) {
            ("y", Some(i)) if i <= self.n_components => Some(i),
            ("v", Some(i)) if i <= self.n_components => Some(self.n_components + i),
            ("p", Some(j)) if j <= self.n_params => Some(2 * self.n_components + j),
            _ => None,
        };
        match slot {
            Some(slot) => Ok(Node::Arg(slot)),
            None => Err(Error::Syntax {
                offset,
                msg: format!(
                    "unknown identifier `{name}` (expected x, y1..y{}, v1..v{}{}, or pi)",
                    self.n_components,
                    self.n_components,
                    if self.n_params > 0 {
                        format!(", p1..p{}", self.n_params)
                    } else {
                        String::new()
                    }
                ),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation and exact differentiation
// ---------------------------------------------------------------------------

fn pow(base: f64, exp: f64) -> Result<f64> {
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(Error::Domain(format!(
            "non-integer power {exp} of negative base {base}"
        )));
    }
    if base == 0.0 && exp < 0.0 {
        return Err(Error::Domain("negative power of zero".into()));
    }
    Ok(base.powf(exp))
}

fn eval_node(node: &Node, args: &[f64]) -> Result<f64> {
    match node {
        Node::Const(c) => Ok(*c),
        Node::Arg(slot) => Ok(args[*slot]),
        Node::Neg(a) => Ok(-eval_node(a, args)?),
        Node::Add(a, b) => Ok(eval_node(a, args)? + eval_node(b, args)?),
        Node::Sub(a, b) => Ok(eval_node(a, args)? - eval_node(b, args)?),
        Node::Mul(a, b) => Ok(eval_node(a, args)? * eval_node(b, args)?),
        Node::Div(a, b) => {
            let d = eval_node(b, args)?;
            if d == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            Ok(eval_node(a, args)? / d)
        }
        Node::Pow(a, b) => pow(eval_node(a, args)?, eval_node(b, args)?),
        Node::Call(func, a) => {
            let v = eval_node(a, args)?;
            apply_func(*func, v)
        }
        Node::Mlf(a, z) => {
            let alpha = eval_node(a, args)?;
            let zz = eval_node(z, args)?;
            specfun::mittag_leffler(alpha, zz)
        }
    }
}

fn apply_func(func: Func, v: f64) -> Result<f64> {
    match func {
        Func::Sin => Ok(v.sin()),
        Func::Cos => Ok(v.cos()),
        Func::Exp => Ok(v.exp()),
        Func::Ln => {
            if v <= 0.0 {
                Err(Error::Domain(format!("ln of non-positive value {v}")))
            } else {
                Ok(v.ln())
            }
        }
        Func::Sqrt => {
            if v < 0.0 {
                Err(Error::Domain(format!("sqrt of negative value {v}")))
            } else {
                Ok(v.sqrt())
            }
        }
        Func::Abs => Ok(v.abs()),
        Func::Gamma => specfun::gamma_fn(v),
    }
}

/// Evaluate `(value, d value / d args[slot])` in one pass.
fn eval_node_d(node: &Node, args: &[f64], slot: usize) -> Result<(f64, f64)> {
    match node {
        Node::Const(c) => Ok((*c, 0.0)),
        Node::Arg(s) => Ok((args[*s], if *s == slot { 1.0 } else { 0.0 })),
        Node::Neg(a) => {
            let (v, d) = eval_node_d(a, args, slot)?;
            Ok((-v, -d))
        }
        Node::Add(a, b) => {
            let (va, da) = eval_node_d(a, args, slot)?;
            let (vb, db) = eval_node_d(b, args, slot)?;
            Ok((va + vb, da + db))
        }
        Node::Sub(a, b) => {
            let (va, da) = eval_node_d(a, args, slot)?;
            let (vb, db) = eval_node_d(b, args, slot)?;
            Ok((va - vb, da - db))
        }
        Node::Mul(a, b) => {
            let (va, da) = eval_node_d(a, args, slot)?;
            let (vb, db) = eval_node_d(b, args, slot)?;
            Ok((va * vb, da * vb + va * db))
        }
        Node::Div(a, b) => {
            let (va, da) = eval_node_d(a, args, slot)?;
            let (vb, db) = eval_node_d(b, args, slot)?;
            if vb == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            Ok((va / vb, (da * vb - va * db) / (vb * vb)))
        }
        Node::Pow(a, b) => {
            let (va, da) = eval_node_d(a, args, slot)?;
            let (vb, db) = eval_node_d(b, args, slot)?;
            let value = pow(va, vb)?;
            // d(u^w) = u^w (w'·ln u + w·u'/u), with the constant-exponent
            // short path w·u^{w-1}·u' when w' = 0
            let deriv = if db == 0.0 {
                if da == 0.0 {
                    0.0
                } else {
                    vb * pow(va, vb - 1.0)? * da
                }
            } else {
                if va <= 0.0 {
                    return Err(Error::Domain(format!(
                        "derivative of {va}^w with varying exponent requires a positive base"
                    )));
                }
                value * (db * va.ln() + vb * da / va)
            };
            Ok((value, deriv))
        }
        Node::Call(func, a) => {
            let (v, d) = eval_node_d(a, args, slot)?;
            let value = apply_func(*func, v)?;
            let chain = match func {
                Func::Sin => v.cos(),
                Func::Cos => -v.sin(),
                Func::Exp => value,
                Func::Ln => 1.0 / v,
                Func::Sqrt => {
                    if v == 0.0 && d != 0.0 {
                        return Err(Error::Domain("derivative of sqrt at zero".into()));
                    } else if d == 0.0 {
                        0.0
                    } else {
                        0.5 / value
                    }
                }
                Func::Abs => {
                    if v >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Func::Gamma => value * specfun::digamma(v)?,
            };
            Ok((value, chain * d))
        }
        Node::Mlf(a, z) => {
            let (alpha, dalpha) = eval_node_d(a, args, slot)?;
            let (zz, dz) = eval_node_d(z, args, slot)?;
            if dalpha != 0.0 {
                return Err(Error::Invalid(
                    "differentiation with respect to the alpha slot of mlf is not supported".into(),
                ));
            }
            let value = specfun::mittag_leffler(alpha, zz)?;
            let deriv = if dz == 0.0 {
                0.0
            } else {
                specfun::mittag_leffler_deriv(alpha, zz)? * dz
            };
            Ok((value, deriv))
        }
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // rounded reference values
mod tests {
    use super::*;

    fn p(src: &str, n: usize, r: usize) -> LagrangianExpr {
        parse_lagrangian(src, n, r).unwrap()
    }

    #[test]
    fn arity_matches_shape() {
        assert_eq!(p("v1^2", 1, 0).arity(), 3);
        assert_eq!(p("y1*v1 - p1*v1^2", 1, 1).arity(), 4);
        assert_eq!(p("y1+y2+v2", 2, 0).arity(), 5);
    }

    #[test]
    fn eval_simple_cases() {
        let e = p("v1^2", 1, 0);
        assert_eq!(e.eval(&[0.3, 7.0, 2.0]).unwrap(), 4.0);

        let e = p("0.5*(v1 - exp(x))^2", 1, 0);
        assert_eq!(e.eval(&[0.0, 0.0, 1.0]).unwrap(), 0.0);

        let e = p("gamma(x)", 1, 0);
        assert!((e.eval(&[5.0, 0.0, 0.0]).unwrap() - 24.0).abs() < 1e-12);

        let e = p("mlf(1, x)", 1, 0);
        assert!((e.eval(&[1.0, 0.0, 0.0]).unwrap() - 2.7182818285).abs() < 1e-9);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = p("2+3*4", 1, 0);
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]).unwrap(), 14.0);
        // ^ binds tighter than unary minus: -2^2 = -(2^2)
        let e = p("-2^2", 1, 0);
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]).unwrap(), -4.0);
        // right associativity: 2^3^2 = 2^9
        let e = p("2^3^2", 1, 0);
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]).unwrap(), 512.0);
        // pi is a constant
        let e = p("cos(pi)", 1, 0);
        assert!((e.eval(&[0.0, 0.0, 0.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_lagrangian("v1 + ", 1, 0) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_lagrangian("v1 $ 2", 1, 0) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifiers_rejected() {
        assert!(parse_lagrangian("y2", 1, 0).is_err());
        assert!(parse_lagrangian("p1", 1, 0).is_err());
        assert!(parse_lagrangian("foo", 1, 0).is_err());
        assert!(parse_lagrangian("y0", 1, 0).is_err());
        assert!(parse_lagrangian("q1", 1, 0).is_err());
        // function arity
        assert!(parse_lagrangian("mlf(1)", 1, 0).is_err());
        assert!(parse_lagrangian("sin(1, 2)", 1, 0).is_err());
        assert!(parse_lagrangian("nosuch(1)", 1, 0).is_err());
    }

    #[test]
    fn eval_arity_checked() {
        let e = p("v1^2", 1, 0);
        match e.eval(&[1.0, 2.0]) {
            Err(Error::Arity {
                expected: 3,
                got: 2,
            }) => {}
            other => panic!("expected arity error, got {other:?}"),
        }
    }

    #[test]
    fn partials_simple() {
        let e = p("v1^2", 1, 0);
        let d = e.partials(&[0.1, 0.2, 3.0]).unwrap();
        assert_eq!(d, vec![0.0, 0.0, 6.0]);

        let e = p("y1*v1", 1, 0);
        let d = e.partials(&[0.0, 2.0, 5.0]).unwrap();
        assert_eq!(d, vec![0.0, 5.0, 2.0]);
    }

    #[test]
    fn partials_against_central_differences() {
        let cases: [(&str, usize, usize, Vec<f64>); 6] = [
            ("sin(x)*v1 + y1^3", 1, 0, vec![0.7, 1.3, -0.4]),
            ("exp(y1)/(1 + v1^2)", 1, 0, vec![0.2, -0.3, 0.8]),
            ("sqrt(y1^2 + 1) * ln(2 + v1)", 1, 0, vec![0.5, 1.1, 0.6]),
            ("mlf(0.5, y1) + gamma(2 + v1^2)", 1, 0, vec![0.0, 0.9, 0.5]),
            (
                "y1*v2 - y2*v1 + p1*x",
                2,
                1,
                vec![0.3, 1.0, 2.0, -1.0, 0.5, 0.25],
            ),
            ("abs(y1 - 2)", 1, 0, vec![0.0, 0.5, 0.0]),
        ];
        for (src, n, r, args) in cases {
            let e = p(src, n, r);
            let grads = e.partials(&args).unwrap();
            for slot in 0..e.arity() {
                let h = 1e-6;
                let mut lo = args.clone();
                let mut hi = args.clone();
                lo[slot] -= h;
                hi[slot] += h;
                let fd = (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h);
                assert!(
                    (grads[slot] - fd).abs() <= 1e-6 * (1.0 + grads[slot].abs()),
                    "{src}: slot {slot}: exact {} vs fd {fd}",
                    grads[slot]
                );
            }
        }
    }

    #[test]
    fn mlf_alpha_slot_derivative_rejected() {
        let e = p("mlf(x, y1)", 1, 0);
        // derivative w.r.t. x flows through the alpha argument
        assert!(e.partials(&[0.5, 1.0, 0.0]).is_err());
        // but the y1 derivative of the same tree is fine
        assert!(e.partial(&[0.5, 1.0, 0.0], 1).is_ok());
    }

    #[test]
    fn domain_errors_propagate() {
        let e = p("ln(y1)", 1, 0);
        assert!(matches!(e.eval(&[0.0, -1.0, 0.0]), Err(Error::Domain(_))));
        let e = p("sqrt(y1)", 1, 0);
        assert!(matches!(e.eval(&[0.0, -1.0, 0.0]), Err(Error::Domain(_))));
        let e = p("y1^0.5", 1, 0);
        assert!(matches!(e.eval(&[0.0, -1.0, 0.0]), Err(Error::Domain(_))));
        let e = p("gamma(y1)", 1, 0);
        assert!(matches!(e.eval(&[0.0, -1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn print_reparse_identical_eval() {
        let sources = [
            "0.5*(v1 - exp(x))^2",
            "y1*v1 - p1*v1^2",
            "mlf(0.5, x^0.5)*v1",
            "-x + 2^-y1 / (1 + v1^2)",
        ];
        for src in sources {
            let e = p(src, 1, 1);
            let printed = e.to_string();
            let re = p(&printed, 1, 1);
            for k in 0..50 {
                let t = k as f64 / 50.0;
                let args = [t, 0.3 + t, 1.0 - t, 0.25];
                let a = e.eval(&args).unwrap();
                let b = re.eval(&args).unwrap();
                assert!(
                    (a - b).abs() <= 1e-15 * (1.0 + a.abs()),
                    "{src} vs {printed}"
                );
            }
        }
    }

    #[test]
    fn linear_combination_matches_weighted_sum() {
        let l1 = p("v1^2", 1, 0);
        let l2 = p("y1^2", 1, 0);
        let combo = LagrangianExpr::linear_combination(&[(0.5, &l1), (0.5, &l2)]).unwrap();
        let args = [0.3, 2.0, 3.0];
        assert!((combo.eval(&args).unwrap() - 6.5).abs() < 1e-15);
    }

    #[test]
    fn subtract_scaled_bakes_multipliers() {
        let l = p("y1*v1", 1, 0);
        let g = p("v1^2", 1, 0);
        let f = l.subtract_scaled(&[(0.5, &g)]).unwrap();
        let args = [0.1, 2.0, 3.0];
        assert!((f.eval(&args).unwrap() - (6.0 - 0.5 * 9.0)).abs() < 1e-15);
        // zero multiplier leaves the objective untouched
        let f0 = l.subtract_scaled(&[(0.0, &g)]).unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.05;
            let args = [t, 1.0 - t, t * t];
            assert!((f0.eval(&args).unwrap() - l.eval(&args).unwrap()).abs() <= 1e-15);
        }
    }
}
