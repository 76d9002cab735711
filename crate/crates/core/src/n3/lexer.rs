use crate::error::{Error, ErrorCode, Result};
use crate::n3::term::Pos;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    IriRef(String),
    PName { prefix: String, local: String },
    PrefixKw,
    Var(String),
    Str(String),
    Int(i64),
    Dec(String),
    Dot,
    Semi,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Implies,
    A,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::IriRef(i) => format!("<{i}>"),
            Tok::PName { prefix, local } => format!("{prefix}:{local}"),
            Tok::PrefixKw => "@prefix".into(),
            Tok::Var(v) => format!("?{v}"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Int(i) => i.to_string(),
            Tok::Dec(d) => d.clone(),
            Tok::Dot => "'.'".into(),
            Tok::Semi => "';'".into(),
            Tok::Comma => "','".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Implies => "'=>'".into(),
            Tok::A => "'a'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Lexer<'a> {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut lx = Lexer { chars: src.chars().collect(), i: 0, line: 1, col: 1, _src: src };
    let mut out = Vec::new();
    loop {
        lx.skip_ws();
        let pos = lx.pos();
        let Some(c) = lx.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            '.' => {
                lx.bump();
                Tok::Dot
            }
            ';' => {
                lx.bump();
                Tok::Semi
            }
            ',' => {
                lx.bump();
                Tok::Comma
            }
            '[' => {
                lx.bump();
                Tok::LBracket
            }
            ']' => {
                lx.bump();
                Tok::RBracket
            }
            '(' => {
                lx.bump();
                Tok::LParen
            }
            ')' => {
                lx.bump();
                Tok::RParen
            }
            '{' => {
                lx.bump();
                Tok::LBrace
            }
            '}' => {
                lx.bump();
                Tok::RBrace
            }
            '=' => {
                lx.bump();
                if lx.peek() == Some('>') {
                    lx.bump();
                    Tok::Implies
                } else {
                    return Err(Error::at(ErrorCode::Lex, pos, "expected '=>'"));
                }
            }
            '<' => lx.iri(pos)?,
            '?' => {
                lx.bump();
                let name = lx.take_while(is_name_char);
                if name.is_empty() {
                    return Err(Error::at(ErrorCode::Lex, pos, "empty variable name"));
                }
                Tok::Var(name)
            }
            '"' | '\'' => {
                let s = lx.string(pos, c)?;
                match lx.peek() {
                    Some('^') => {
                        return Err(Error::at(
                            ErrorCode::UnsupportedSyntax,
                            lx.pos(),
                            "datatype-suffixed literals are not supported",
                        ))
                    }
                    Some('@') => {
                        return Err(Error::at(
                            ErrorCode::UnsupportedSyntax,
                            lx.pos(),
                            "language-tagged literals are not supported",
                        ))
                    }
                    _ => Tok::Str(s),
                }
            }
            '@' => {
                lx.bump();
                let kw = lx.take_while(|c| c.is_alphabetic());
                match kw.as_str() {
                    "prefix" => Tok::PrefixKw,
                    "forAll" | "forSome" | "base" | "keywords" => {
                        return Err(Error::at(
                            ErrorCode::UnsupportedSyntax,
                            pos,
                            format!("@{kw} is not supported"),
                        ))
                    }
                    _ => return Err(Error::at(ErrorCode::Lex, pos, format!("unknown directive @{kw}"))),
                }
            }
            '_' if lx.peek_at(1) == Some(':') => {
                return Err(Error::at(
                    ErrorCode::UnsupportedSyntax,
                    pos,
                    "labeled blank nodes are not supported; use []",
                ))
            }
            c if c.is_ascii_digit() || ((c == '-' || c == '+') && lx.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                lx.number(pos)?
            }
            c if is_name_char(c) || c == ':' => {
                let prefix = lx.take_while(is_name_char);
                if lx.peek() == Some(':') {
                    lx.bump();
                    let mut local = lx.take_while(|c| is_name_char(c) || c == '.');
                    // a trailing '.' terminates the statement
                    while local.ends_with('.') {
                        local.pop();
                        lx.i -= 1;
                        lx.col -= 1;
                    }
                    Tok::PName { prefix, local }
                } else if prefix == "a" {
                    Tok::A
                } else {
                    return Err(Error::at(ErrorCode::Lex, pos, format!("unexpected bare word '{prefix}'")));
                }
            }
            other => return Err(Error::at(ErrorCode::Lex, pos, format!("unexpected character '{other}'"))),
        };
        out.push(Token { tok, pos });
    }
}

impl Lexer<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn iri(&mut self, pos: Pos) -> Result<Tok> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(Tok::IriRef(s)),
                Some(c) if c.is_whitespace() => {
                    return Err(Error::at(ErrorCode::Lex, pos, "whitespace inside IRI"))
                }
                Some(c) => s.push(c),
                None => return Err(Error::at(ErrorCode::Unbalanced, pos, "unterminated IRI")),
            }
        }
    }

    fn string(&mut self, pos: Pos, quote: char) -> Result<String> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some(c) if c == quote => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    Some(c @ ('"' | '\'' | '\\')) => s.push(c),
                    _ => return Err(Error::at(ErrorCode::Lex, pos, "invalid escape in string")),
                },
                Some('\n') => return Err(Error::at(ErrorCode::Lex, pos, "newline in string literal")),
                Some(c) => s.push(c),
                None => return Err(Error::at(ErrorCode::Unbalanced, pos, "unterminated string")),
            }
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Tok> {
        let mut s = String::new();
        if let Some(c @ ('-' | '+')) = self.peek() {
            s.push(c);
            self.bump();
        }
        s.push_str(&self.take_while(|c| c.is_ascii_digit()));
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            s.push('.');
            self.bump();
            s.push_str(&self.take_while(|c| c.is_ascii_digit()));
            return Ok(Tok::Dec(s.trim_start_matches('+').to_string()));
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            return Err(Error::at(ErrorCode::UnsupportedSyntax, pos, "double literals are not supported"));
        }
        s.trim_start_matches('+')
            .parse()
            .map(Tok::Int)
            .map_err(|_| Error::at(ErrorCode::Lex, pos, format!("integer out of range: {s}")))
    }
}
