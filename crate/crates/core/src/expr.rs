//! Scalar expressions over the state vector `x1..xn`.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Identifiers are state components `x1..xn`, declared symbols (parameters or
//! `delta`), or the functions `sin cos exp sqrt abs step` (one argument) and
//! `min max` (two arguments). `step(s)` is 1 for `s > 0` and 0 otherwise.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("function `{name}` expects {expected} argument(s), got {found} (byte {offset})")]
    Arity { offset: usize, name: String, expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Step,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "step" => Func::Step,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Step => "step",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    /// Zero-based state index.
    Var(usize),
    Sym(String),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed scalar expression with its declared state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    dim: usize,
}

pub fn parse_expr(text: &str, dim: usize) -> Result<Expr, ExprError> {
    Expr::parse(text, dim, &[])
}

pub fn eval(expr: &Expr, x: &[f64]) -> Result<f64, ExprError> {
    expr.eval(x)
}

pub fn grad(expr: &Expr, x: &[f64], h: Option<f64>) -> Result<Vec<f64>, ExprError> {
    expr.grad(x, h)
}

impl Expr {
    /// Parses `text`, accepting `x1..x{dim}` and the listed free symbols.
    pub fn parse(text: &str, dim: usize, symbols: &[&str]) -> Result<Expr, ExprError> {
        let mut p = Parser { src: text.as_bytes(), pos: 0, dim, symbols };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.syntax("unexpected trailing input"));
        }
        Ok(Expr { root, dim })
    }

    pub fn constant(value: f64, dim: usize) -> Expr {
        Expr { root: Node::Num(value), dim }
    }

    pub fn var(index: usize, dim: usize) -> Expr {
        assert!(index < dim, "state index out of range");
        Expr { root: Node::Var(index), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c * self`
    pub fn scaled(&self, c: f64) -> Expr {
        Expr { root: Node::Bin(BinOp::Mul, Box::new(Node::Num(c)), Box::new(self.root.clone())), dim: self.dim }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Substitutes bound symbols by their values.
    pub fn bind(&self, env: &BTreeMap<String, f64>) -> Expr {
        fn go(n: &Node, env: &BTreeMap<String, f64>) -> Node {
            match n {
                Node::Sym(s) => match env.get(s) {
                    Some(v) => Node::Num(*v),
                    None => n.clone(),
                },
                Node::Neg(a) => Node::Neg(Box::new(go(a, env))),
                Node::Bin(op, a, b) => Node::Bin(*op, Box::new(go(a, env)), Box::new(go(b, env))),
                Node::Call(f, args) => Node::Call(*f, args.iter().map(|a| go(a, env)).collect()),
                _ => n.clone(),
            }
        }
        Expr { root: go(&self.root, env), dim: self.dim }
    }

    /// Free symbols still present in the expression, sorted.
    pub fn symbols(&self) -> Vec<String> {
        fn go(n: &Node, out: &mut Vec<String>) {
            match n {
                Node::Sym(s) => out.push(s.clone()),
                Node::Neg(a) => go(a, out),
                Node::Bin(_, a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Node::Call(_, args) => args.iter().for_each(|a| go(a, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(&self.root, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// True when the expression uses `step`, the only discontinuous primitive.
    pub fn is_discontinuous(&self) -> bool {
        fn go(n: &Node) -> bool {
            match n {
                Node::Call(Func::Step, _) => true,
                Node::Neg(a) => go(a),
                Node::Bin(_, a, b) => go(a) || go(b),
                Node::Call(_, args) => args.iter().any(go),
                _ => false,
            }
        }
        go(&self.root)
    }

    /// The constant value, if the expression has no state or symbol dependence.
    pub fn as_constant(&self) -> Option<f64> {
        self.affine().filter(|(a, _)| a.iter().all(|c| *c == 0.0)).map(|(_, b)| b)
    }

    /// Coefficients `(a, b)` with `expr(x) = a·x + b`, when syntactically affine.
    pub fn affine(&self) -> Option<(Vec<f64>, f64)> {
        fn go(n: &Node, dim: usize) -> Option<(Vec<f64>, f64)> {
            match n {
                Node::Num(v) => Some((vec![0.0; dim], *v)),
                Node::Var(i) => {
                    let mut a = vec![0.0; dim];
                    a[*i] = 1.0;
                    Some((a, 0.0))
                }
                Node::Sym(_) | Node::Call(..) => None,
                Node::Neg(a) => go(a, dim).map(|(a, b)| (a.iter().map(|c| -c).collect(), -b)),
                Node::Bin(op, l, r) => {
                    let (la, lb) = go(l, dim)?;
                    let (ra, rb) = go(r, dim)?;
                    let lconst = la.iter().all(|c| *c == 0.0);
                    let rconst = ra.iter().all(|c| *c == 0.0);
                    match op {
                        BinOp::Add => Some((la.iter().zip(&ra).map(|(p, q)| p + q).collect(), lb + rb)),
                        BinOp::Sub => Some((la.iter().zip(&ra).map(|(p, q)| p - q).collect(), lb - rb)),
                        BinOp::Mul if lconst => Some((ra.iter().map(|c| c * lb).collect(), rb * lb)),
                        BinOp::Mul if rconst => Some((la.iter().map(|c| c * rb).collect(), lb * rb)),
                        BinOp::Div if rconst && rb != 0.0 => {
                            Some((la.iter().map(|c| c / rb).collect(), lb / rb))
                        }
                        BinOp::Pow if lconst && rconst => {
                            let v = lb.powf(rb);
                            v.is_finite().then(|| (vec![0.0; dim], v))
                        }
                        _ => None,
                    }
                }
            }
        }
        go(&self.root, self.dim)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        if x.len() != self.dim {
            return Err(ExprError::Dimension { expected: self.dim, found: x.len() });
        }
        let v = eval_node(&self.root, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("non-finite result {v}")))
        }
    }

    /// Central-difference gradient; default step `1e-6 * max(1, |x|)`.
    pub fn grad(&self, x: &[f64], h: Option<f64>) -> Result<Vec<f64>, ExprError> {
        if x.len() != self.dim {
            return Err(ExprError::Dimension { expected: self.dim, found: x.len() });
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = h.unwrap_or(1e-6 * norm.max(1.0));
        let mut xp = x.to_vec();
        let mut out = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = self.eval(&xp)?;
            xp[i] = x[i] - h;
            let fm = self.eval(&xp)?;
            xp[i] = x[i];
            out.push((fp - fm) / (2.0 * h));
        }
        Ok(out)
    }
}

fn eval_node(n: &Node, x: &[f64]) -> Result<f64, ExprError> {
    let v = match n {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::Sym(s) => return Err(ExprError::Unbound(s.clone())),
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Bin(op, l, r) => {
            let a = eval_node(l, x)?;
            let b = eval_node(r, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(ExprError::Domain("division by zero".into()));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let a = eval_node(&args[0], x)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(ExprError::Domain(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
                Func::Step => {
                    if a > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Func::Min => a.min(eval_node(&args[1], x)?),
                Func::Max => a.max(eval_node(&args[1], x)?),
            }
        }
    };
    if v.is_nan() {
        return Err(ExprError::Domain("NaN produced".into()));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
    symbols: &'a [&'a str],
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ExprError {
        ExprError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Node::Num(v)),
            Ok(_) => Err(ExprError::Syntax { offset: start, message: "non-finite literal".into() }),
            Err(_) => Err(ExprError::Syntax { offset: start, message: "malformed number".into() }),
        }
    }

    fn ident(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii ident");
        if let Some(f) = Func::lookup(name) {
            if !self.eat(b'(') {
                return Err(self.syntax("expected `(` after function name"));
            }
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.syntax("expected `)`"));
            }
            if args.len() != f.arity() {
                return Err(ExprError::Arity {
                    offset: start,
                    name: name.to_string(),
                    expected: f.arity(),
                    found: args.len(),
                });
            }
            return Ok(Node::Call(f, args));
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if idx >= 1 && idx <= self.dim && !name[1..].starts_with('0') {
                return Ok(Node::Var(idx - 1));
            }
            return Err(ExprError::UnknownIdentifier { offset: start, name: name.to_string() });
        }
        if self.symbols.contains(&name) {
            return Ok(Node::Sym(name.to_string()));
        }
        Err(ExprError::UnknownIdentifier { offset: start, name: name.to_string() })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "(-{:?})", -v),
        Node::Num(v) => write!(f, "{v:?}"),
        Node::Var(i) => write!(f, "x{}", i + 1),
        Node::Sym(s) => write!(f, "{s}"),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Bin(op, a, b) => {
            let s = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            write!(f, "(")?;
            write_node(a, f)?;
            write!(f, " {s} ")?;
            write_node(b, f)?;
            write!(f, ")")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_node(a, f)?;
            }
            write!(f, ")")
        }
    }
}

/// A vector of expressions sharing one state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VecExpr {
    components: Vec<Expr>,
    dim: usize,
}

impl VecExpr {
    pub fn new(components: Vec<Expr>) -> Result<VecExpr, ExprError> {
        let dim = components.first().map(|c| c.dim()).unwrap_or(0);
        for c in &components {
            if c.dim() != dim {
                return Err(ExprError::Dimension { expected: dim, found: c.dim() });
            }
        }
        Ok(VecExpr { components, dim })
    }

    pub fn parse(texts: &[&str], dim: usize, symbols: &[&str]) -> Result<VecExpr, ExprError> {
        let components = texts.iter().map(|t| Expr::parse(t, dim, symbols)).collect::<Result<Vec<_>, _>>()?;
        Ok(VecExpr { components, dim })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Number of output components.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Input (state) dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn bind(&self, env: &BTreeMap<String, f64>) -> VecExpr {
        VecExpr { components: self.components.iter().map(|c| c.bind(env)).collect(), dim: self.dim }
    }

    pub fn is_discontinuous(&self) -> bool {
        self.components.iter().any(Expr::is_discontinuous)
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = self.components.iter().flat_map(|c| c.symbols()).collect();
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, dim: usize, x: &[f64]) -> Result<f64, ExprError> {
        parse_expr(text, dim)?.eval(x)
    }

    #[test]
    fn precedence_and_unary() {
        assert_eq!(ev("-x1^2", 1, &[3.0]).unwrap(), -9.0);
        assert_eq!(ev("2^-1", 1, &[0.0]).unwrap(), 0.5);
        assert_eq!(ev("2^3^2", 1, &[0.0]).unwrap(), 512.0);
        assert_eq!(ev("1 - 2 - 3", 1, &[0.0]).unwrap(), -4.0);
        assert_eq!(ev("8 / 4 / 2", 1, &[0.0]).unwrap(), 1.0);
        assert_eq!(ev("1.5e1 + .5", 1, &[0.0]).unwrap(), 15.5);
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_expr("x1 + * 2", 1) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("x0", 2), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("x01", 2), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("min(x1)", 1), Err(ExprError::Arity { .. })));
        assert!(matches!(parse_expr("sin x1", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("1e999", 1), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(ev("1/x1", 1, &[0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(ev("exp(x1)", 1, &[1e6]), Err(ExprError::Domain(_))));
        assert!(matches!(ev("(-1)^0.5", 1, &[0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(ev("x1", 2, &[0.0]), Err(ExprError::Dimension { .. })));
    }

    #[test]
    fn symbols_bind() {
        let e = Expr::parse("delta * x1 + gamma", 1, &["delta", "gamma"]).unwrap();
        assert_eq!(e.symbols(), vec!["delta".to_string(), "gamma".to_string()]);
        assert!(matches!(e.eval(&[1.0]), Err(ExprError::Unbound(_))));
        let env = BTreeMap::from([("delta".to_string(), 0.5), ("gamma".to_string(), 2.0)]);
        assert_eq!(e.bind(&env).eval(&[4.0]).unwrap(), 4.0);
    }

    #[test]
    fn affine_forms() {
        let e = parse_expr("3*x1 - x2/2 + 1", 2).unwrap();
        assert_eq!(e.affine(), Some((vec![3.0, -0.5], 1.0)));
        assert_eq!(parse_expr("x1*x2", 2).unwrap().affine(), None);
        assert_eq!(parse_expr("2^3", 2).unwrap().as_constant(), Some(8.0));
    }

    #[test]
    fn step_and_discontinuity_flag() {
        let e = parse_expr("x1 + step(x1)*(1 - x1)", 1).unwrap();
        assert!(e.is_discontinuous());
        assert_eq!(e.eval(&[0.0]).unwrap(), 0.0);
        assert_eq!(e.eval(&[0.25]).unwrap(), 1.0);
        assert_eq!(e.eval(&[-0.25]).unwrap(), -0.25);
    }

    #[test]
    fn printing_negative_literals() {
        let e = parse_expr("x1 - -2", 1).unwrap();
        let printed = e.to_string();
        assert_eq!(parse_expr(&printed, 1).unwrap().eval(&[1.0]).unwrap(), 3.0);
    }
}
