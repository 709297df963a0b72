//! A small arithmetic expression language for boundary curves and density
//! fields given in configuration files.
//!
//! Grammar (highest precedence first): `^` (right-associative), unary `-`,
//! `*` `/`, `+` `-` (all left-associative). Atoms are decimal literals,
//! declared variables, the constant `pi`, function calls (`sin`, `cos`,
//! `exp`, `sqrt`, `abs`) and parenthesized subexpressions.
//!
//! Expressions are immutable after parsing and evaluation is pure, so they
//! can be shared freely across threads.

use std::fmt;

use thiserror::Error;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Pi,
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character '{ch}' at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("malformed number at position {pos}")]
    BadNumber { pos: usize },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token at position {pos}: expected {expected}")]
    UnexpectedToken { pos: usize, expected: &'static str },
    #[error("unbalanced parentheses at position {pos}")]
    Unbalanced { pos: usize },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("unknown function '{name}' at position {pos}")]
    UnknownFunction { name: String, pos: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("variable '{0}' is not bound")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(source: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let bytes = source.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // Optional exponent part: e.g. 1e-5, 2.5E10.
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| ParseError::BadNumber { pos: start })?;
                out.push((Tok::Num(value), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(source[start..i].to_string()), start));
            }
            _ => return Err(ParseError::UnexpectedChar { ch: c, pos: i }),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    allowed_vars: &'a [&'a str],
    source_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_pos(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.source_len)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    let rhs = self.unary()?;
                    lhs = Expr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.next();
                    let rhs = self.unary()?;
                    lhs = Expr::Binary(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.next();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            // Right-associative; the exponent may carry a unary minus.
            let exponent = self.unary()?;
            return Ok(Expr::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.peek_pos();
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Number(v)),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    let func = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        _ => return Err(ParseError::UnknownFunction { name, pos }),
                    };
                    self.next(); // consume '('
                    let arg = self.expr()?;
                    match self.next() {
                        Some(Tok::RParen) => Ok(Expr::Call(func, Box::new(arg))),
                        Some(_) => Err(ParseError::UnexpectedToken {
                            pos: self.peek_pos(),
                            expected: "')'",
                        }),
                        None => Err(ParseError::Unbalanced { pos }),
                    }
                } else if name == "pi" {
                    Ok(Expr::Pi)
                } else if self.allowed_vars.contains(&name.as_str()) {
                    Ok(Expr::Var(name))
                } else {
                    Err(ParseError::UnknownIdentifier { name, pos })
                }
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    Some(_) => Err(ParseError::UnexpectedToken {
                        pos: self.peek_pos(),
                        expected: "')'",
                    }),
                    None => Err(ParseError::Unbalanced { pos }),
                }
            }
            Some(Tok::RParen) => Err(ParseError::Unbalanced { pos }),
            Some(_) => Err(ParseError::UnexpectedToken {
                pos,
                expected: "a value",
            }),
            None => Err(ParseError::UnexpectedEnd),
        }
    }
}

/// Parses `source` into an [`Expr`]. Every identifier other than `pi` and
/// the function names must appear in `allowed_vars`.
pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = lex(source)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        allowed_vars,
        source_len: source.len(),
    };
    let expr = parser.expr()?;
    if parser.pos != parser.toks.len() {
        let pos = parser.peek_pos();
        return match parser.peek() {
            Some(Tok::RParen) => Err(ParseError::Unbalanced { pos }),
            _ => Err(ParseError::UnexpectedToken {
                pos,
                expected: "end of input",
            }),
        };
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

impl Expr {
    /// Evaluates the expression under the given variable bindings.
    ///
    /// Division by zero and any other non-finite intermediate result are
    /// reported as errors rather than propagated as NaN/inf.
    pub fn evaluate(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let v = self.eval_inner(bindings)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var(name) => bindings
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
            Expr::Neg(inner) => Ok(-inner.eval_inner(bindings)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval_inner(bindings)?;
                let b = b.eval_inner(bindings)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero)
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinOp::Pow => Ok(a.powf(b)),
                }
            }
            Expr::Call(func, arg) => Ok(func.apply(arg.eval_inner(bindings)?)),
        }
    }

    /// True if the expression mentions the variable `name`.
    pub fn references(&self, name: &str) -> bool {
        match self {
            Expr::Number(_) | Expr::Pi => false,
            Expr::Var(n) => n == name,
            Expr::Neg(inner) => inner.references(name),
            Expr::Binary(_, a, b) => a.references(name) || b.references(name),
            Expr::Call(_, arg) => arg.references(name),
        }
    }

    /// Compiles to a flat postfix program for fast repeated evaluation.
    /// `var_order` assigns slot indices to variable names.
    pub fn compile(&self, var_order: &[&str]) -> Program {
        let mut ops = Vec::new();
        self.emit(var_order, &mut ops);
        Program { ops }
    }

    fn emit(&self, var_order: &[&str], out: &mut Vec<Instr>) {
        match self {
            Expr::Number(v) => out.push(Instr::Push(*v)),
            Expr::Pi => out.push(Instr::Push(std::f64::consts::PI)),
            Expr::Var(name) => {
                let slot = var_order
                    .iter()
                    .position(|n| n == name)
                    .expect("compile: variable missing from var_order");
                out.push(Instr::Load(slot));
            }
            Expr::Neg(inner) => {
                inner.emit(var_order, out);
                out.push(Instr::Neg);
            }
            Expr::Binary(op, a, b) => {
                a.emit(var_order, out);
                b.emit(var_order, out);
                out.push(Instr::Bin(*op));
            }
            Expr::Call(func, arg) => {
                arg.emit(var_order, out);
                out.push(Instr::Fun(*func));
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Instr {
    Push(f64),
    Load(usize),
    Neg,
    Bin(BinOp),
    Fun(Func),
}

/// Stack program compiled from an [`Expr`]. Semantically identical to
/// [`Expr::evaluate`] except that non-finite values flow through as IEEE
/// NaN/inf; quadrature callers check finiteness of accumulated sums.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Instr>,
}

impl Program {
    pub fn eval(&self, vars: &[f64]) -> f64 {
        let mut stack = [0.0f64; 64];
        let mut sp = 0usize;
        for op in &self.ops {
            match op {
                Instr::Push(v) => {
                    stack[sp] = *v;
                    sp += 1;
                }
                Instr::Load(slot) => {
                    stack[sp] = vars[*slot];
                    sp += 1;
                }
                Instr::Neg => stack[sp - 1] = -stack[sp - 1],
                Instr::Bin(op) => {
                    let b = stack[sp - 1];
                    let a = stack[sp - 2];
                    sp -= 1;
                    stack[sp - 1] = match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div => a / b,
                        BinOp::Pow => a.powf(b),
                    };
                }
                Instr::Fun(f) => stack[sp - 1] = f.apply(stack[sp - 1]),
            }
        }
        stack[sp - 1]
    }
}

// ---------------------------------------------------------------------------
// Pretty printing
// ---------------------------------------------------------------------------

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, _, _) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, needs_parens: bool) -> fmt::Result {
            if needs_parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Neg(inner) => {
                write!(f, "-")?;
                child(f, inner, inner.precedence() < self.precedence())
            }
            Expr::Binary(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    // Right-associative: a left child of equal precedence
                    // keeps its parentheses; a unary-minus exponent does not
                    // need them ("2^-3" parses directly).
                    child(f, a, a.precedence() <= prec)?;
                    write!(f, "{sym}")?;
                    child(f, b, b.precedence() < prec && !matches!(**b, Expr::Neg(_)))
                } else {
                    child(f, a, a.precedence() < prec)?;
                    write!(f, " {sym} ")?;
                    // Left-associative: a right child of equal precedence
                    // must keep its parentheses.
                    child(f, b, b.precedence() <= prec)
                }
            }
            Expr::Call(func, arg) => write!(f, "{}({})", func.name(), arg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_str(src: &str, vars: &[&str], bindings: &[(&str, f64)]) -> f64 {
        parse(src, vars).unwrap().evaluate(bindings).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval_str("1+2*3", &[], &[]), 7.0);
        assert_eq!(eval_str("2^3^2", &[], &[]), 512.0);
        assert_eq!(eval_str("(2^3)^2", &[], &[]), 64.0);
        assert_eq!(eval_str("-2^2", &[], &[]), -4.0);
        assert_eq!(eval_str("2*-3", &[], &[]), -6.0);
        assert_eq!(eval_str("10-4-3", &[], &[]), 3.0);
        assert_eq!(eval_str("16/4/2", &[], &[]), 2.0);
    }

    #[test]
    fn curve_and_density_formulas() {
        let g_a = parse("0.2*sin(pi*(y-4)/3)+1", &["y"]).unwrap();
        assert!((g_a.evaluate(&[("y", 4.0)]).unwrap() - 1.0).abs() < 1e-15);

        let rho = parse("3/2 + sin((x^2+y^2)/5)/2", &["x", "y"]).unwrap();
        assert_eq!(rho.evaluate(&[("x", 0.0), ("y", 0.0)]).unwrap(), 1.5);
    }

    #[test]
    fn undeclared_variable_rejected() {
        let err = parse("x+z", &["x", "y"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "z".to_string(),
                pos: 2
            }
        );
    }

    #[test]
    fn unknown_function_rejected() {
        let err = parse("foo(1)", &[]).unwrap_err();
        assert!(matches!(err, ParseError::UnknownFunction { .. }));
    }

    #[test]
    fn unbalanced_parens_rejected() {
        assert!(matches!(
            parse("(1+2", &[]),
            Err(ParseError::Unbalanced { .. })
        ));
        assert!(matches!(
            parse("1+2)", &[]),
            Err(ParseError::Unbalanced { .. })
        ));
        assert!(matches!(
            parse("sin(1", &[]),
            Err(ParseError::Unbalanced { .. })
        ));
    }

    #[test]
    fn empty_source_rejected() {
        assert_eq!(parse("", &[]), Err(ParseError::Empty));
        assert_eq!(parse("   ", &[]), Err(ParseError::Empty));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse("1/x", &["x"]).unwrap();
        assert_eq!(e.evaluate(&[("x", 0.0)]), Err(EvalError::DivisionByZero));
        assert!((e.evaluate(&[("x", 2.0)]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_finite_results_are_errors() {
        let e = parse("sqrt(x)", &["x"]).unwrap();
        assert_eq!(e.evaluate(&[("x", -1.0)]), Err(EvalError::NonFinite));
        let e = parse("exp(x)", &["x"]).unwrap();
        assert_eq!(e.evaluate(&[("x", 1e9)]), Err(EvalError::NonFinite));
    }

    #[test]
    fn missing_binding_is_an_error() {
        let e = parse("x+y", &["x", "y"]).unwrap();
        assert_eq!(
            e.evaluate(&[("x", 1.0)]),
            Err(EvalError::UnboundVariable("y".to_string()))
        );
    }

    #[test]
    fn scientific_notation_literals() {
        assert_eq!(eval_str("1e-5", &[], &[]), 1e-5);
        assert_eq!(eval_str("2.5E3", &[], &[]), 2500.0);
    }

    #[test]
    fn compiled_program_matches_tree_evaluation() {
        let srcs = [
            "3/2 + sin((x^2+y^2)/5)/2",
            "0.2*sin(pi*(y-4)/3)+1",
            "exp(-x)*cos(y)+sqrt(abs(x*y))",
            "x^2 - y^2 + x*y/3",
        ];
        for src in srcs {
            let e = parse(src, &["x", "y"]).unwrap();
            let prog = e.compile(&["x", "y"]);
            for &(x, y) in &[(0.0, 0.0), (1.5, -2.0), (3.25, 9.75), (-0.5, 0.125)] {
                let tree = e.evaluate(&[("x", x), ("y", y)]).unwrap();
                let fast = prog.eval(&[x, y]);
                assert!(
                    (tree - fast).abs() <= 1e-15 * tree.abs().max(1.0),
                    "{src} at ({x},{y}): {tree} vs {fast}"
                );
            }
        }
    }

    mod properties {
        use super::super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (0.0..100.0f64).prop_map(Expr::Number),
                Just(Expr::Pi),
                prop_oneof![Just("x"), Just("y")].prop_map(|v| Expr::Var(v.to_string())),
            ];
            leaf.prop_recursive(6, 48, 3, |inner| {
                let op = prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div),
                    Just(BinOp::Pow),
                ];
                let func = prop_oneof![
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Exp),
                    Just(Func::Sqrt),
                    Just(Func::Abs),
                ];
                prop_oneof![
                    inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                    (op, inner.clone(), inner.clone())
                        .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
                    (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
                ]
            })
        }

        proptest! {
            // Printing then reparsing reproduces the tree exactly.
            #[test]
            fn printed_trees_reparse(e in arb_expr()) {
                let printed = e.to_string();
                let reparsed = parse(&printed, &["x", "y"])
                    .unwrap_or_else(|err| panic!("reparse of {printed:?}: {err}"));
                prop_assert_eq!(&e, &reparsed);
            }

            // The compiled program agrees with tree evaluation wherever the
            // tree evaluates cleanly.
            #[test]
            fn compiled_matches_tree(e in arb_expr(), x in -3.0..3.0f64, y in -3.0..3.0f64) {
                if let Ok(tree) = e.evaluate(&[("x", x), ("y", y)]) {
                    let fast = e.compile(&["x", "y"]).eval(&[x, y]);
                    prop_assert!(
                        (tree - fast).abs() <= 1e-12 * tree.abs().max(1.0),
                        "{e} at ({x}, {y}): {tree} vs {fast}"
                    );
                }
            }
        }
    }

    #[test]
    fn round_trip_corpus() {
        let corpus: &[&str] = &[
            "1+2*3",
            "2^3^2",
            "(1+2)*3",
            "-x",
            "--x",
            "-(x+y)",
            "-2^2",
            "2^-3",
            "x-y-1",
            "x-(y-1)",
            "x/y/2",
            "x/(y/2)",
            "x*y+y*x",
            "sin(x)",
            "cos(pi*x)",
            "exp(-x^2)",
            "sqrt(abs(x))",
            "abs(x-y)",
            "pi",
            "pi*pi",
            "3.5",
            "0.001",
            "1e-5",
            "2.5e3",
            "x",
            "x+1",
            "1-x",
            "x*2",
            "2/x",
            "x^2",
            "x^y",
            "(x+y)^2",
            "x^(y+1)",
            "sin(x+y)",
            "sin(x)*cos(y)",
            "sin(cos(x))",
            "1/(1+exp(-x))",
            "0.2*sin(pi*(y-4)/3)+1",
            "0.2*sin(pi*(y-4)/3)+6",
            "3/2 + sin((x^2+y^2)/5)/2",
            "x*x*x",
            "x+x+x",
            "x+y*2-3/x",
            "(x-1)*(x+1)",
            "sqrt(x^2+y^2)",
            "abs(sin(pi*y))",
            "exp(x)/exp(y)",
            "-sin(-x)",
            "2*pi*x",
            "x^2^2",
            "((x))",
            "1.5+0.5*sin(x*y)",
            "cos(x)^2+sin(x)^2",
            "x/3+y/7",
            "-(x*y)^2",
        ];
        assert!(corpus.len() >= 50);
        for src in corpus {
            let first = parse(src, &["x", "y"]).unwrap();
            let printed = first.to_string();
            let second = parse(&printed, &["x", "y"])
                .unwrap_or_else(|e| panic!("reparse of {printed:?} (from {src:?}): {e}"));
            assert_eq!(first, second, "round trip failed for {src:?} -> {printed:?}");
        }
    }
}
