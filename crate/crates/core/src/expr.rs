//! Expression language for Hamiltonians, tensor components and coordinate maps.
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;          (* right-associative *)
//! primary = number | ident | func , "(" , expr , ")" | "(" , expr , ")" ;
//! func    = "sqrt" | "sin" | "cos" | "exp" | "ln" ;
//! number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ] ;
//! ident   = letter , { letter | digit | "_" } ;
//! ```
//!
//! Exponents may reference parameters but not coordinates. Integer exponents
//! are evaluated by repeated squaring; other exponents as `exp(a ln b)` and
//! require a strictly positive base.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{Float, ToPrimitive, Zero};
use thiserror::Error;

use crate::jet::Jet2;
use crate::scalar::{Number, Scalar};

const FUNCTIONS: [&str; 5] = ["sqrt", "sin", "cos", "exp", "ln"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("column {column}: syntax error: {message}")]
    Syntax { column: usize, message: String },
    #[error("column {column}: undeclared identifier `{name}`")]
    Undeclared { column: usize, name: String },
    #[error("column {column}: malformed number `{text}`")]
    MalformedNumber { column: usize, text: String },
    #[error("invalid symbol table: {0}")]
    InvalidSymbols(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("expected {expected} variable values, got {got}")]
    Arity { expected: usize, got: usize },
}

/// Ordered coordinate names plus parameter names, fixed at parse time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<String>,
    params: Vec<String>,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SymbolTable {
    pub fn new<S: AsRef<str>, P: AsRef<str>>(symbols: &[S], params: &[P]) -> Result<Arc<Self>, ParseError> {
        let symbols: Vec<String> = symbols.iter().map(|s| s.as_ref().to_owned()).collect();
        let params: Vec<String> = params.iter().map(|s| s.as_ref().to_owned()).collect();
        if symbols.is_empty() {
            return Err(ParseError::InvalidSymbols(
                "at least one coordinate symbol is required".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in symbols.iter().chain(&params) {
            if !valid_name(name) {
                return Err(ParseError::InvalidSymbols(format!(
                    "`{name}` is not a valid identifier"
                )));
            }
            if FUNCTIONS.contains(&name.as_str()) {
                return Err(ParseError::InvalidSymbols(format!(
                    "`{name}` is a reserved function name"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(ParseError::InvalidSymbols(format!("`{name}` declared twice")));
            }
        }
        Ok(Arc::new(Self { symbols, params }))
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }

    /// Parameter values in table order, looked up in `bindings`.
    pub fn param_values(&self, bindings: &BTreeMap<String, f64>) -> Result<Vec<f64>, String> {
        self.params
            .iter()
            .map(|p| {
                bindings
                    .get(p)
                    .copied()
                    .ok_or_else(|| format!("parameter `{p}` has no value"))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Sin,
    Cos,
    Exp,
    Ln,
}

impl UnaryOp {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sqrt" => Self::Sqrt,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "exp" => Self::Exp,
            "ln" => Self::Ln,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Neg => "-",
            Self::Sqrt => "sqrt",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Exp => "exp",
            Self::Ln => "ln",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            Self::Add => "+",
            Self::Sub => "-",
            Self::Mul => "*",
            Self::Div => "/",
            Self::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Param(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

impl Node {
    fn has_var(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Const(_) | Node::Param(_) => false,
            Node::Unary(_, a) => a.has_var(),
            Node::Binary(_, a, b) => a.has_var() || b.has_var(),
        }
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Node::Var(i) => {
                if !out.contains(i) {
                    out.push(*i)
                }
            }
            Node::Const(_) | Node::Param(_) => {}
            Node::Unary(_, a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Immutable parsed expression.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    table: Arc<SymbolTable>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.table == other.table
    }
}

struct Display<'a> {
    node: &'a Node,
    table: &'a SymbolTable,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |node| Display {
            node,
            table: self.table,
        };
        match self.node {
            Node::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(i) => f.write_str(&self.table.symbols[*i]),
            Node::Param(i) => f.write_str(&self.table.params[*i]),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "(-{})", sub(a)),
            Node::Unary(op, a) => write!(f, "{}({})", op.name(), sub(a)),
            Node::Binary(op, a, b) => write!(f, "({} {} {})", sub(a), op.symbol(), sub(b)),
        }
    }
}

impl fmt::Display for Expr {
    /// Canonical, fully parenthesized form; re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display {
            node: &self.root,
            table: &self.table,
        }
        .fmt(f)
    }
}

impl Expr {
    pub fn parse(source: &str, table: &Arc<SymbolTable>) -> Result<Self, ParseError> {
        let tokens = lex(source)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            table,
            end_column: source.chars().count() + 1,
        };
        if p.tokens.is_empty() {
            return Err(ParseError::Syntax {
                column: 1,
                message: "empty expression".into(),
            });
        }
        let root = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(ParseError::Syntax {
                column: tok.column,
                message: format!("unexpected `{}`", tok.kind),
            });
        }
        Ok(Self {
            root,
            table: Arc::clone(table),
        })
    }

    /// Convenience: builds the symbol table from names and the map's keys.
    pub fn parse_with(source: &str, symbols: &[&str], params: &BTreeMap<String, f64>) -> Result<Self, ParseError> {
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let table = SymbolTable::new(symbols, &names)?;
        Self::parse(source, &table)
    }

    pub fn constant(c: f64, table: &Arc<SymbolTable>) -> Self {
        Self {
            root: Node::Const(c),
            table: Arc::clone(table),
        }
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Indices of the symbols that occur in the tree, in order of appearance.
    pub fn free_variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.root.collect_vars(&mut out);
        out
    }

    pub fn is_zero_constant(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }

    /// Evaluates into any [`Number`]; `vars` are indexed like the symbol table.
    pub fn eval<N: Number>(&self, vars: &[N], params: &[N::Real]) -> Result<N, EvalError> {
        if vars.len() != self.table.symbols.len() {
            return Err(EvalError::Arity {
                expected: self.table.symbols.len(),
                got: vars.len(),
            });
        }
        if params.len() != self.table.params.len() {
            return Err(EvalError::Arity {
                expected: self.table.params.len(),
                got: params.len(),
            });
        }
        let zero = vars[0].lift(N::Real::zero());
        self.eval_node(&self.root, vars, params, &zero)
    }

    pub fn eval_real<T: Scalar>(&self, vars: &[T], params: &[T]) -> Result<T, EvalError> {
        self.eval(vars, params)
    }

    /// Value, gradient and Hessian with respect to the symbols listed in
    /// `active` (by index); other symbols are held constant.
    pub fn eval_jet2<T: Scalar>(&self, point: &[T], active: &[usize], params: &[T]) -> Result<Jet2<T>, EvalError> {
        let dim = active.len();
        let vars: Vec<Jet2<T>> = point
            .iter()
            .enumerate()
            .map(|(i, &v)| match active.iter().position(|&a| a == i) {
                Some(slot) => Jet2::variable(v, slot, dim),
                None => Jet2::constant(v, dim),
            })
            .collect();
        self.eval(&vars, params)
    }

    fn domain<N: Number>(&self, node: &Node, reason: String) -> Result<N, EvalError> {
        Err(EvalError::Domain {
            subexpr: Display {
                node,
                table: &self.table,
            }
            .to_string(),
            reason,
        })
    }

    fn eval_const<T: Scalar>(&self, node: &Node, params: &[T]) -> Result<T, EvalError> {
        let dummy = vec![T::zero(); self.table.symbols.len()];
        self.eval_node(node, &dummy, params, &T::zero())
    }

    fn eval_node<N: Number>(&self, node: &Node, vars: &[N], params: &[N::Real], zero: &N) -> Result<N, EvalError> {
        Ok(match node {
            Node::Const(c) => zero.lift(N::Real::c(*c)),
            Node::Var(i) => vars[*i].clone(),
            Node::Param(i) => zero.lift(params[*i]),
            Node::Unary(op, a) => {
                let x = self.eval_node(a, vars, params, zero)?;
                let r = x.real();
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Sqrt | UnaryOp::Ln => {
                        if !(r > N::Real::zero()) {
                            return self.domain(node, format!("{} of non-positive argument {r}", op.name()));
                        }
                        if *op == UnaryOp::Sqrt {
                            x.sqrt()
                        } else {
                            x.ln()
                        }
                    }
                }
            }
            Node::Binary(BinaryOp::Pow, a, b) => {
                let base = self.eval_node(a, vars, params, zero)?;
                let exponent: N::Real = self.eval_const(b, params)?;
                let r = base.real();
                let is_int = exponent == exponent.round() && exponent.abs() < N::Real::c(2_147_483_647.0);
                if is_int {
                    let k = exponent.to_i32().unwrap_or(0);
                    if k < 0 && r == N::Real::zero() {
                        return self.domain(node, "zero raised to a negative power".into());
                    }
                    base.powi(k)
                } else {
                    if !(r > N::Real::zero()) {
                        return self.domain(
                            node,
                            format!("non-positive base {r} with fractional exponent {exponent}"),
                        );
                    }
                    base.powf(exponent)
                }
            }
            Node::Binary(op, a, b) => {
                let x = self.eval_node(a, vars, params, zero)?;
                let y = self.eval_node(b, vars, params, zero)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y.real() == N::Real::zero() {
                            return self.domain(node, "division by zero".into());
                        }
                        x / y
                    }
                    BinaryOp::Pow => unreachable!(),
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(v) => write!(f, "{v}"),
            TokenKind::Ident(s) => f.write_str(s),
            TokenKind::Op(c) => write!(f, "{c}"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // a letter glued to a number ("2x") is malformed
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or(ParseError::MalformedNumber { column, text })?;
            out.push(Token {
                kind: TokenKind::Number(value),
                column,
            });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                _ => {
                    return Err(ParseError::Syntax {
                        column,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push(Token { kind, column });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    table: &'a SymbolTable,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c), ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn column(&self) -> usize {
        self.peek().map_or(self.end_column, |t| t.column)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::RParen,
                ..
            }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::Syntax {
                column: self.column(),
                message: "expected `)`".into(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if op == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if op == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let column = self.column();
            let exponent = self.unary()?;
            if exponent.has_var() {
                return Err(ParseError::Syntax {
                    column,
                    message: "exponent must not depend on coordinates".into(),
                });
            }
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::Syntax {
                column: self.end_column,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Const(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if let Some(op) = UnaryOp::from_name(&name) {
                    match self.peek() {
                        Some(Token {
                            kind: TokenKind::LParen,
                            ..
                        }) => self.pos += 1,
                        _ => {
                            return Err(ParseError::Syntax {
                                column: self.column(),
                                message: format!("expected `(` after `{name}`"),
                            })
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Unary(op, Box::new(arg)));
                }
                if let Some(i) = self.table.symbols.iter().position(|s| *s == name) {
                    Ok(Node::Var(i))
                } else if let Some(i) = self.table.params.iter().position(|s| *s == name) {
                    Ok(Node::Param(i))
                } else {
                    Err(ParseError::Undeclared {
                        column: tok.column,
                        name,
                    })
                }
            }
            kind => Err(ParseError::Syntax {
                column: tok.column,
                message: format!("unexpected `{kind}`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(symbols: &[&str]) -> Arc<SymbolTable> {
        SymbolTable::new(symbols, &[] as &[&str]).unwrap()
    }

    #[test]
    fn half_p_squared() {
        let t = table(&["t", "q1", "p1"]);
        let e = Expr::parse("0.5*p1^2", &t).unwrap();
        assert_eq!(e.eval_real(&[0.0, 0.0, 3.0], &[]).unwrap(), 4.5);
    }

    #[test]
    fn rational_exponent() {
        let t = table(&["t"]);
        let e = Expr::parse("t^(9/2)", &t).unwrap();
        assert!((e.eval_real(&[4.0], &[]).unwrap() - 512.0).abs() < 1e-12);
        let d = Expr::parse("t^4.5", &t).unwrap();
        assert!((d.eval_real(&[4.0], &[]).unwrap() - 512.0).abs() < 1e-12);
    }

    #[test]
    fn fixture_r10_component() {
        let t = table(&["t", "q1", "q2"]);
        let e = Expr::parse("q1^2 + 0.5*q2^2/t", &t).unwrap();
        assert_eq!(e.eval_real(&[1.0, 2.0, 1.0], &[]).unwrap(), 4.5);
    }

    #[test]
    fn precedence_and_associativity() {
        let t = table(&["x"]);
        let eval = |s: &str, x: f64| Expr::parse(s, &t).unwrap().eval_real(&[x], &[]).unwrap();
        assert_eq!(eval("-x^2", 3.0), -9.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(eval("8 / 2 / 2", 0.0), 2.0);
        assert_eq!(eval("2*(x+1)", 2.0), 6.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("x*-2", 3.0), -6.0);
    }

    #[test]
    fn parameters_bound_at_eval() {
        let mut params = BTreeMap::new();
        params.insert("c".to_string(), 1.0);
        let e = Expr::parse_with("c*x^2", &["x"], &params).unwrap();
        assert_eq!(e.eval_real(&[2.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(e.eval_real(&[2.0], &[3.0]).unwrap(), 12.0);
    }

    #[test]
    fn jet_examples() {
        let t = table(&["q1", "p1"]);
        let e = Expr::parse("q1^2*p1", &t).unwrap();
        let j = e.eval_jet2(&[2.0, 3.0], &[0, 1], &[]).unwrap();
        assert_eq!(*j.value(), 12.0);
        assert_eq!(j.gradient(), &[12.0, 4.0]);
        assert_eq!((*j.hess(0, 0), *j.hess(0, 1), *j.hess(1, 1)), (6.0, 4.0, 0.0));

        let t = table(&["t", "q1"]);
        let e = Expr::parse("t*q1", &t).unwrap();
        let j = e.eval_jet2(&[2.0, 3.0], &[0, 1], &[]).unwrap();
        assert_eq!(*j.value(), 6.0);
        assert_eq!(j.gradient(), &[3.0, 2.0]);
        assert_eq!((*j.hess(0, 0), *j.hess(0, 1), *j.hess(1, 1)), (0.0, 1.0, 0.0));
    }

    #[test]
    fn empty_active_set_is_plain_evaluation() {
        let t = table(&["t", "q"]);
        let e = Expr::parse("sin(q)*exp(t) + sqrt(t)/q", &t).unwrap();
        let j = e.eval_jet2(&[0.7, 1.3], &[], &[]).unwrap();
        assert_eq!(*j.value(), e.eval_real(&[0.7, 1.3], &[]).unwrap());
    }

    #[test]
    fn errors_carry_columns() {
        let t = table(&["t", "q1"]);
        assert_eq!(
            Expr::parse("t + q3", &t).unwrap_err(),
            ParseError::Undeclared {
                column: 5,
                name: "q3".into()
            }
        );
        assert!(matches!(
            Expr::parse("1.2.3 + t", &t).unwrap_err(),
            ParseError::MalformedNumber { column: 1, .. }
        ));
        assert!(matches!(
            Expr::parse("(t + 1", &t).unwrap_err(),
            ParseError::Syntax { column: 7, .. }
        ));
        assert!(matches!(
            Expr::parse("t ^ q1", &t).unwrap_err(),
            ParseError::Syntax { column: 5, .. }
        ));
        assert!(matches!(
            Expr::parse("", &t).unwrap_err(),
            ParseError::Syntax { column: 1, .. }
        ));
        assert!(matches!(
            Expr::parse("t $ 2", &t).unwrap_err(),
            ParseError::Syntax { column: 3, .. }
        ));
        assert!(matches!(
            Expr::parse("2t", &t).unwrap_err(),
            ParseError::MalformedNumber { .. }
        ));
    }

    #[test]
    fn symbol_table_validation() {
        assert!(SymbolTable::new(&["t", "t"], &[] as &[&str]).is_err());
        assert!(SymbolTable::new(&["t"], &["t"]).is_err());
        assert!(SymbolTable::new(&["1x"], &[] as &[&str]).is_err());
        assert!(SymbolTable::new(&["sin"], &[] as &[&str]).is_err());
        assert!(SymbolTable::new(&["q_1", "Q2"], &["alpha1"]).is_ok());
    }

    #[test]
    fn domain_errors() {
        let t = table(&["t", "q"]);
        let err = Expr::parse("(q - 1)^(1/2)", &t)
            .unwrap()
            .eval_real(&[1.0, 0.5], &[])
            .unwrap_err();
        match err {
            EvalError::Domain { subexpr, .. } => assert!(subexpr.contains("q - 1")),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("ln(q)", &t).unwrap().eval_real(&[1.0, 0.0], &[]).is_err());
        assert!(Expr::parse("sqrt(q)", &t)
            .unwrap()
            .eval_real(&[1.0, -1.0], &[])
            .is_err());
        assert!(Expr::parse("t/q", &t).unwrap().eval_real(&[1.0, 0.0], &[]).is_err());
        // integer powers are fine on negative bases
        assert_eq!(
            Expr::parse("q^3", &t).unwrap().eval_real(&[1.0, -2.0], &[]).unwrap(),
            -8.0
        );
    }

    #[test]
    fn canonical_print_reparses() {
        let t = table(&["t", "q1"]);
        let e = Expr::parse("-t^(9/2)*q1 - 3e-2/(q1+1)", &t).unwrap();
        let printed = e.to_string();
        let again = Expr::parse(&printed, &t).unwrap();
        assert_eq!(again, e);
        assert_eq!(again.to_string(), printed);
    }

    #[test]
    fn evaluates_in_single_precision() {
        let t = table(&["x"]);
        let e = Expr::parse("x^2 + 1", &t).unwrap();
        let j = e.eval_jet2(&[2.0f32], &[0], &[]).unwrap();
        assert_eq!(*j.value(), 5.0f32);
        assert_eq!(*j.grad(0), 4.0f32);
    }
}
