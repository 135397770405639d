use std::rc::Rc;

use super::ast::{
    ArithOp, EffCase, ExnCase, Expr, HandlerError, HandlerSpec, Ident, Label, LamKind, ValueCase,
};
use super::desugar::{desugar_continue, desugar_discontinue, desugar_let};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

const KEYWORDS: &[&str] = &[
    "lambda",
    "clambda",
    "raise",
    "perform",
    "handle",
    "let",
    "continue",
    "discontinue",
    "val",
    "exn",
    "eff",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Int(i64),
    Op(ArithOp),
    Word(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' | ')' => {
                chars.next();
                out.push(Token {
                    tok: if c == '(' { Tok::Open } else { Tok::Close },
                    line,
                    col,
                });
                col += 1;
            }
            _ => {
                let start = col;
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                    col += 1;
                }
                let err = |message: String| ParseError {
                    line,
                    col: start,
                    message,
                };
                let tok = if let Some(op) = ArithOp::from_symbol(&atom) {
                    Tok::Op(op)
                } else if atom.starts_with(|c: char| c.is_ascii_digit())
                    || (atom.starts_with('-') && atom.len() > 1)
                {
                    let n = atom
                        .parse::<i64>()
                        .map_err(|_| err(format!("invalid integer literal `{atom}`")))?;
                    Tok::Int(n)
                } else if is_ident(&atom) {
                    Tok::Word(atom)
                } else {
                    return Err(err(format!("invalid token `{atom}`")));
                };
                out.push(Token {
                    tok,
                    line,
                    col: start,
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.col)).unwrap_or(self.eof)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_open(&mut self) -> Result<(), ParseError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Open) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.error("expected `(`"),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.error("expected `)`"),
            None => self.error("unexpected end of input, expected `)`"),
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Word(w)) if !is_keyword(&w) => {
                self.pos += 1;
                Ok(Rc::from(w.as_str()))
            }
            Some(Tok::Word(w)) => self.error(format!("keyword `{w}` cannot be used as a name")),
            _ => self.error("expected identifier"),
        }
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        let name = self.ident()?;
        Ok(Label::new(&name))
    }

    fn expr(&mut self) -> Result<Rc<Expr>, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("unexpected end of input, expected expression");
        };
        match tok.tok {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(Expr::int(n))
            }
            Tok::Word(w) if !is_keyword(&w) => {
                self.pos += 1;
                Ok(Rc::new(Expr::Var(Rc::from(w.as_str()))))
            }
            Tok::Word(w) => self.error(format!("unexpected keyword `{w}`")),
            Tok::Op(_) => self.error("operator outside of head position"),
            Tok::Close => self.error("unexpected `)`"),
            Tok::Open => {
                self.pos += 1;
                self.compound()
            }
        }
    }

    fn compound(&mut self) -> Result<Rc<Expr>, ParseError> {
        let head = self.peek().map(|t| t.tok.clone());
        let e = match head {
            Some(Tok::Word(w)) if w == "lambda" || w == "clambda" => {
                self.pos += 1;
                let kind = if w == "lambda" {
                    LamKind::OCaml
                } else {
                    LamKind::C
                };
                self.expect_open()?;
                let param = self.ident()?;
                self.expect_close()?;
                let body = self.expr()?;
                Rc::new(Expr::Lam(kind, param, body))
            }
            Some(Tok::Op(op)) => {
                self.pos += 1;
                let lhs = self.expr()?;
                let rhs = self.expr()?;
                Expr::arith(op, lhs, rhs)
            }
            Some(Tok::Word(w)) if w == "raise" || w == "perform" => {
                self.pos += 1;
                let label = self.label()?;
                let payload = self.expr()?;
                if w == "raise" {
                    Rc::new(Expr::Raise(label, payload))
                } else {
                    Rc::new(Expr::Perform(label, payload))
                }
            }
            Some(Tok::Word(w)) if w == "handle" => {
                self.pos += 1;
                let body = self.expr()?;
                let spec = self.handler_cases()?;
                return Ok(Rc::new(Expr::Handle(body, Rc::new(spec))));
            }
            Some(Tok::Word(w)) if w == "let" => {
                self.pos += 1;
                self.expect_open()?;
                let name = self.ident()?;
                let bound = self.expr()?;
                self.expect_close()?;
                let body = self.expr()?;
                desugar_let(&name, bound, body)
            }
            Some(Tok::Word(w)) if w == "continue" => {
                self.pos += 1;
                let k = self.expr()?;
                let v = self.expr()?;
                desugar_continue(k, v)
            }
            Some(Tok::Word(w)) if w == "discontinue" => {
                self.pos += 1;
                let k = self.expr()?;
                let label = self.label()?;
                let v = self.expr()?;
                desugar_discontinue(k, label, v)
            }
            Some(Tok::Word(w)) if is_keyword(&w) => {
                return self.error(format!("`{w}` is not valid here"));
            }
            Some(Tok::Close) => return self.error("empty application"),
            None => return self.error("unexpected end of input"),
            _ => {
                // Application; `(f a b c)` associates to the left.
                let mut f = self.expr()?;
                if matches!(self.peek().map(|t| &t.tok), Some(Tok::Close)) {
                    return self.error("application needs an argument");
                }
                while !matches!(self.peek().map(|t| &t.tok), Some(Tok::Close) | None) {
                    let arg = self.expr()?;
                    f = Expr::app(f, arg);
                }
                f
            }
        };
        self.expect_close()?;
        Ok(e)
    }

    fn handler_cases(&mut self) -> Result<HandlerSpec, ParseError> {
        let mut value_case: Option<ValueCase> = None;
        let mut exn_cases = Vec::new();
        let mut eff_cases = Vec::new();
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Close) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Open) => {}
                None => return self.error("unexpected end of input in handler"),
                _ => return self.error("expected handler case"),
            }
            let start = self.here();
            self.pos += 1;
            let kw = match self.next().map(|t| t.tok) {
                Some(Tok::Word(w)) => w,
                _ => {
                    self.pos -= 1;
                    return self.error("expected `val`, `exn` or `eff`");
                }
            };
            let dup = |message: String| ParseError {
                line: start.0,
                col: start.1,
                message,
            };
            match kw.as_str() {
                "val" => {
                    let param = self.ident()?;
                    let body = self.expr()?;
                    if value_case.is_some() {
                        return Err(dup("duplicate value case".into()));
                    }
                    value_case = Some(ValueCase { param, body });
                }
                "exn" => {
                    let label = self.label()?;
                    let param = self.ident()?;
                    let body = self.expr()?;
                    exn_cases.push(ExnCase { label, param, body });
                }
                "eff" => {
                    let label = self.label()?;
                    let param = self.ident()?;
                    let kont_param = self.ident()?;
                    let body = self.expr()?;
                    eff_cases.push(EffCase {
                        label,
                        param,
                        kont_param,
                        body,
                    });
                }
                other => {
                    self.pos -= 1;
                    return self.error(format!("expected `val`, `exn` or `eff`, found `{other}`"));
                }
            }
            self.expect_close()?;
            if let Err(e) = (HandlerSpec {
                value_case: ValueCase {
                    param: Rc::from("_"),
                    body: Expr::int(0),
                },
                exn_cases: exn_cases.clone(),
                eff_cases: eff_cases.clone(),
            })
            .validate()
            {
                let msg = match e {
                    HandlerError::DuplicateExn(l) => format!("duplicate exception case `{l}`"),
                    HandlerError::DuplicateEff(l) => format!("duplicate effect case `{l}`"),
                };
                return Err(dup(msg));
            }
        }
        let Some(value_case) = value_case else {
            return self.error("handler is missing its value case");
        };
        Ok(HandlerSpec {
            value_case,
            exn_cases,
            eff_cases,
        })
    }
}

/// Parses one expression in the parenthesised prefix syntax.
pub fn parse(source: &str) -> Result<Rc<Expr>, ParseError> {
    let toks = lex(source)?;
    let eof = {
        let line = source.lines().count().max(1);
        let col = source
            .lines()
            .last()
            .map(|l| l.chars().count() + 1)
            .unwrap_or(1);
        (line, col)
    };
    let mut p = Parser { toks, pos: 0, eof };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.error("trailing input after expression");
    }
    Ok(e)
}
