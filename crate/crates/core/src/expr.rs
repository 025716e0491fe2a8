//! Arithmetic expressions over `x`, `y`, `t` for coefficient fields.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right-associative
//! atom    := number | 'x' | 'y' | 't' | 'pi' | func '(' args ')' | '(' expr ')'
//! func    := sin | cos | sqrt | exp | abs   (one argument)
//!          | min | max                      (two arguments)
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. Numbers accept
//! decimal and scientific notation.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
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
    Sqrt,
    Exp,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Abs => "abs",
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
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse(text)
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::T) => t,
            Expr::Neg(e) => -e.eval(x, y, t)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y, t)?, b.eval(x, y, t)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x, y, t)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::NegativeSqrt(a));
                        }
                        a.sqrt()
                    }
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval(x, y, t)?),
                    Func::Max => a.max(args[1].eval(x, y, t)?),
                }
            }
        })
    }
}

/// Canonical, fully parenthesized form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
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
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| ParseError {
                offset: start,
                message: format!("invalid number `{s}`"),
            })?;
            if !v.is_finite() {
                return Err(ParseError {
                    offset: start,
                    message: format!("number `{s}` out of range"),
                });
            }
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    let ch = text[start..].chars().next().unwrap_or(c);
                    return Err(ParseError {
                        offset: start,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            };
            out.push((start, tok));
            i += 1;
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var(Var::X)),
                "y" => Ok(Expr::Var(Var::Y)),
                "t" => Ok(Expr::Var(Var::T)),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseError {
                            offset: start,
                            message: format!("unknown identifier `{name}`"),
                        });
                    };
                    self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            offset: start,
                            message: format!(
                                "`{name}` takes {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                        });
                    }
                    Ok(Expr::Call(func, args))
                }
            },
            Tok::End => Err(ParseError {
                offset: start,
                message: "unexpected end of input".into(),
            }),
            Tok::RParen => Err(ParseError {
                offset: start,
                message: "unbalanced `)`".into(),
            }),
            tok => Err(ParseError {
                offset: start,
                message: format!("unexpected token {}", describe(&tok)),
            }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        Tok::RParen => p.error("unbalanced `)`"),
        t => {
            let msg = format!("unexpected token {}", describe(t));
            p.error(msg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, x: f64, y: f64) -> f64 {
        parse(s).unwrap().eval(x, y, 0.0).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("x + y*2", 1.0, 3.0), 7.0);
        assert_eq!(ev("-x^2", 2.0, 0.0), -4.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("-2*3", 0.0, 0.0), -6.0);
    }

    #[test]
    fn functions_and_literals() {
        assert!((ev("sin(3.141592653589793/2)", 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(ev("0.1*(2*y-500000)/500000", 0.0, 500000.0), 0.1);
        assert_eq!(ev("max(x, y) + min(x, y)", 2.0, 5.0), 7.0);
        assert_eq!(ev("2.5e3 + 1E-2", 0.0, 0.0), 2500.01);
        assert_eq!(ev("abs(-3) + sqrt(16) + exp(0) + cos(0)", 0.0, 0.0), 9.0);
        assert_eq!(parse("t").unwrap().eval(0.0, 0.0, 4.5).unwrap(), 4.5);
        assert!((ev("sin(pi*x)", 0.5, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evaluation_errors() {
        assert_eq!(parse("1/0").unwrap().eval(0.0, 0.0, 0.0), Err(EvalError::DivisionByZero));
        assert_eq!(parse("1/(x-x)").unwrap().eval(1.0, 0.0, 0.0), Err(EvalError::DivisionByZero));
        assert!(matches!(parse("sqrt(x)").unwrap().eval(-1.0, 0.0, 0.0), Err(EvalError::NegativeSqrt(_))));
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = parse("x + * y").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = parse("(x + y").unwrap_err();
        assert_eq!(e.offset, 6);
        assert!(e.message.contains("`)`"));
        let e = parse("x + y)").unwrap_err();
        assert_eq!((e.offset, e.message.as_str()), (5, "unbalanced `)`"));
        let e = parse("2 * viscosity").unwrap_err();
        assert_eq!(e.offset, 4);
        assert!(e.message.contains("unknown identifier `viscosity`"));
        let e = parse("min(x)").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.message.contains("takes 2"));
        let e = parse("sin(x, y)").unwrap_err();
        assert!(e.message.contains("takes 1"));
        assert_eq!(parse("x $ y").unwrap_err().offset, 2);
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("x y").unwrap_err().offset, 2);
    }

    #[test]
    fn matches_hand_coded_closure() {
        let e = parse("x^2 - 3*x*y + y").unwrap();
        let f = |x: f64, y: f64| x * x - 3.0 * x * y + y;
        let mut s: u64 = 12345;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 20.0 - 10.0
        };
        for _ in 0..100 {
            let (x, y) = (next(), next());
            let (a, b) = (e.eval(x, y, 0.0).unwrap(), f(x, y));
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            Just(Expr::Var(Var::X)),
            Just(Expr::Var(Var::Y)),
            Just(Expr::Var(Var::T)),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                inner.clone().prop_map(|e| Expr::Call(Func::Sin, vec![e])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_string(), printed);
        }

        #[test]
        fn evaluation_is_pure(e in arb_expr(), x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let a = e.eval(x, y, 1.0).map(f64::to_bits);
            let b = e.eval(x, y, 1.0).map(f64::to_bits);
            prop_assert_eq!(a, b);
        }
    }
}
