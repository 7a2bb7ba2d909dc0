//! Arithmetic expressions over `x`, `y`, `r`, `theta`.
//!
//! Grammar, lowest precedence first: comparisons (`<`, `<=`, `>`, `>=`,
//! yielding 1 or 0), `+ -`, `* /`, unary `±`, right-associative `^`, atoms.
//! Functions: `sin cos tan exp ln sqrt abs sign indicator min max`;
//! constants `pi`, `e`.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    /// 1-based character column inside the expression.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Var {
    X,
    Y,
    R,
    Theta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
    Indicator,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "exp" => (Func::Exp, 1),
            "ln" => (Func::Ln, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "sign" => (Func::Sign, 1),
            "indicator" => (Func::Indicator, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }

    fn apply(self, a: &[f64]) -> f64 {
        match self {
            Func::Sin => a[0].sin(),
            Func::Cos => a[0].cos(),
            Func::Tan => a[0].tan(),
            Func::Exp => a[0].exp(),
            Func::Ln => a[0].ln(),
            Func::Sqrt => a[0].sqrt(),
            Func::Abs => a[0].abs(),
            Func::Sign => {
                if a[0] > 0.0 {
                    1.0
                } else if a[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Func::Indicator => {
                if a[0] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Func::Min => a[0].min(a[1]),
            Func::Max => a[0].max(a[1]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.comparison()?;
        if let Some(t) = p.peek() {
            return Err(ParseError {
                column: t.column,
                message: format!("unexpected {}", t.kind),
            });
        }
        Ok(Self {
            root,
            source: src.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value at a point of ℝ¹ or ℝ²; `y = 0` in one dimension.
    pub fn eval(&self, p: &[f64]) -> f64 {
        let x = p.first().copied().unwrap_or(0.0);
        let y = p.get(1).copied().unwrap_or(0.0);
        eval(&self.root, &[x, y, x.hypot(y), y.atan2(x)])
    }

    /// Whether the expression reads any variable.
    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Num(_) => true,
                Node::Var(_) => false,
                Node::Neg(a) => walk(a),
                Node::Bin(_, a, b) => walk(a) && walk(b),
                Node::Call(_, args) => args.iter().all(walk),
            }
        }
        walk(&self.root)
    }
}

fn eval(n: &Node, vars: &[f64; 4]) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(v) => vars[*v as usize],
        Node::Neg(a) => -eval(a, vars),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, vars), eval(b, vars));
            let truth = |c: bool| if c { 1.0 } else { 0.0 };
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
                BinOp::Lt => truth(a < b),
                BinOp::Le => truth(a <= b),
                BinOp::Gt => truth(a > b),
                BinOp::Ge => truth(a >= b),
            }
        }
        Node::Call(f, args) => {
            let vals: Vec<f64> = args.iter().map(|a| eval(a, vars)).collect();
            f.apply(&vals)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Ident(s) => write!(f, "'{s}'"),
            Kind::Op(s) => write!(f, "'{s}'"),
            Kind::LParen => f.write_str("'('"),
            Kind::RParen => f.write_str("')'"),
            Kind::Comma => f.write_str("','"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Kind,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let kind = if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ParseError {
                column,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token {
                kind: Kind::Num(v),
                column,
            });
            continue;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Ident(chars[start..i].iter().collect()),
                column,
            });
            continue;
        } else {
            let next = chars.get(i + 1).copied();
            let (kind, len) = match (c, next) {
                ('<', Some('=')) => (Kind::Op("<="), 2),
                ('>', Some('=')) => (Kind::Op(">="), 2),
                ('<', _) => (Kind::Op("<"), 1),
                ('>', _) => (Kind::Op(">"), 1),
                ('+', _) => (Kind::Op("+"), 1),
                ('-', _) => (Kind::Op("-"), 1),
                ('*', _) => (Kind::Op("*"), 1),
                ('/', _) => (Kind::Op("/"), 1),
                ('^', _) => (Kind::Op("^"), 1),
                ('(', _) => (Kind::LParen, 1),
                (')', _) => (Kind::RParen, 1),
                (',', _) => (Kind::Comma, 1),
                _ => {
                    return Err(ParseError {
                        column,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            };
            i += len;
            kind
        };
        out.push(Token { kind, column });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn end_column(&self) -> usize {
        self.tokens.last().map(|t| t.column + 1).unwrap_or(1)
    }

    fn eat_op(&mut self, ops: &[&'static str]) -> Option<&'static str> {
        match self.peek() {
            Some(Token {
                kind: Kind::Op(o), ..
            }) if ops.contains(o) => {
                let o = *o;
                self.pos += 1;
                Some(o)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: Kind) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ParseError {
                column: t.column,
                message: format!("expected {kind}, found {}", t.kind),
            }),
            None => Err(ParseError {
                column: self.end_column(),
                message: format!("expected {kind} at end of input"),
            }),
        }
    }

    fn comparison(&mut self) -> Result<Node, ParseError> {
        let lhs = self.sum()?;
        if let Some(op) = self.eat_op(&["<", "<=", ">", ">="]) {
            let rhs = self.sum()?;
            let op = match op {
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                _ => BinOp::Ge,
            };
            return Ok(Node::Bin(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        while let Some(op) = self.eat_op(&["+", "-"]) {
            let rhs = self.product()?;
            let op = if op == "+" { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&["*", "/"]) {
            let rhs = self.unary()?;
            let op = if op == "*" { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.eat_op(&["-", "+"]) {
            Some("-") => Ok(Node::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat_op(&["^"]).is_some() {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError {
                column: self.end_column(),
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            Kind::Num(v) => Ok(Node::Num(v)),
            Kind::LParen => {
                let inner = self.comparison()?;
                self.expect(Kind::RParen)?;
                Ok(inner)
            }
            Kind::Ident(name) => {
                if let Some((func, arity)) = Func::lookup(&name) {
                    self.expect(Kind::LParen)?;
                    let mut args = vec![self.comparison()?];
                    while self.peek().map(|t| &t.kind) == Some(&Kind::Comma) {
                        self.pos += 1;
                        args.push(self.comparison()?);
                    }
                    self.expect(Kind::RParen)?;
                    if args.len() != arity {
                        return Err(ParseError {
                            column: tok.column,
                            message: format!(
                                "{name} takes {arity} argument(s), got {}",
                                args.len()
                            ),
                        });
                    }
                    return Ok(Node::Call(func, args));
                }
                match name.as_str() {
                    "x" => Ok(Node::Var(Var::X)),
                    "y" => Ok(Node::Var(Var::Y)),
                    "r" => Ok(Node::Var(Var::R)),
                    "theta" => Ok(Node::Var(Var::Theta)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(ParseError {
                        column: tok.column,
                        message: format!("unknown identifier '{name}'"),
                    }),
                }
            }
            other => Err(ParseError {
                column: tok.column,
                message: format!("unexpected {other}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, p: &[f64]) -> f64 {
        Expr::parse(src).unwrap().eval(p)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1 + 2 * 3", &[0.0]), 7.0);
        assert_eq!(at("2 ^ 3 ^ 2", &[0.0]), 512.0);
        assert_eq!(at("-2 ^ 2", &[0.0]), -4.0);
        assert_eq!(at("(1 + 2) * 3", &[0.0]), 9.0);
        assert_eq!(at("8 / 4 / 2", &[0.0]), 1.0);
        assert_eq!(at("1.5e2 + 2E-1", &[0.0]), 150.2);
    }

    #[test]
    fn variables_and_functions() {
        let p = [3.0, 4.0];
        assert_eq!(at("r", &p), 5.0);
        assert!((at("theta", &[0.0, 1.0]) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(at("max(x, y) - min(x, y)", &p), 1.0);
        assert_eq!(at("sign(-x) + abs(-y)", &p), 3.0);
        assert_eq!(at("indicator(y) + indicator(-y)", &p), 1.0);
        assert_eq!(at("indicator(r < 1.5)", &p), 0.0);
        assert_eq!(at("sqrt(x*x + y*y)", &p), 5.0);
        assert!((at("4/(3*r)-4/3", &[0.5, 0.0]) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_points() {
        assert_eq!(at("y", &[0.3]), 0.0);
        assert_eq!(at("r", &[-0.3]), 0.3);
    }

    #[test]
    fn errors_carry_columns() {
        let e = Expr::parse("1 + foo").unwrap_err();
        assert_eq!(e.column, 5);
        assert!(e.message.contains("foo"));
        let e = Expr::parse("sin(x").unwrap_err();
        assert!(e.message.contains("')'"), "{e}");
        let e = Expr::parse("2 $ 3").unwrap_err();
        assert_eq!(e.column, 3);
        let e = Expr::parse("max(x)").unwrap_err();
        assert!(e.message.contains("2 argument"));
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn constant_detection() {
        assert!(Expr::parse("2*pi").unwrap().is_constant());
        assert!(!Expr::parse("1 + x").unwrap().is_constant());
    }
}
