//! The line/block document dialect shared by model files, scorer inputs, and
//! the compact spec strings embedded in traces.
//!
//! Statements end at a newline or `;`; `#` starts a comment; blocks nest in
//! braces. Every token carries a line/column, so the first error is precise.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{ParamMap, ParamValue};
use crate::value::{Value, ValueTypeTag};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The text does not lex/parse.
    Parse,
    /// The text parses but violates a semantic rule.
    Validation,
}

/// A located document error.
#[derive(Debug, Clone)]
pub struct FormatError {
    pub kind: ErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl FormatError {
    pub fn parse(pos: Pos, message: impl Into<String>) -> FormatError {
        FormatError { kind: ErrorKind::Parse, pos, message: message.into() }
    }

    pub fn validation(pos: Pos, message: impl Into<String>) -> FormatError {
        FormatError { kind: ErrorKind::Validation, pos, message: message.into() }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Parse => "parse error",
            ErrorKind::Validation => "validation error",
        };
        write!(f, "{kind} at {}: {}", self.pos, self.message)
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Integer(i64),
    Real(f64),
    Text(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Colon,
    Equals,
    Dot,
    Slash,
    Arrow,
    /// Statement separator: newline or `;`.
    Sep,
    End,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("`{name}`"),
            TokenKind::Integer(v) => format!("`{v}`"),
            TokenKind::Real(v) => format!("`{v}`"),
            TokenKind::Text(_) => "string literal".to_owned(),
            TokenKind::LBrace => "`{`".to_owned(),
            TokenKind::RBrace => "`}`".to_owned(),
            TokenKind::LBracket => "`[`".to_owned(),
            TokenKind::RBracket => "`]`".to_owned(),
            TokenKind::LParen => "`(`".to_owned(),
            TokenKind::RParen => "`)`".to_owned(),
            TokenKind::Comma => "`,`".to_owned(),
            TokenKind::Colon => "`:`".to_owned(),
            TokenKind::Equals => "`=`".to_owned(),
            TokenKind::Dot => "`.`".to_owned(),
            TokenKind::Slash => "`/`".to_owned(),
            TokenKind::Arrow => "`->`".to_owned(),
            TokenKind::Sep => "end of statement".to_owned(),
            TokenKind::End => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenizes a full document. `/` inside an identifier is accepted (flattened
/// component names); a leading `/` is its own token (path syntax).
pub fn tokenize(text: &str) -> Result<Vec<Token>, FormatError> {
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut column: u32 = 1;
    let mut chars = text.chars().peekable();

    macro_rules! here {
        () => {
            Pos { line, column }
        };
    }

    while let Some(&c) = chars.peek() {
        let pos = here!();
        match c {
            ' ' | '\t' | '\r' => {
                chars.next();
                column += 1;
            }
            '\n' => {
                chars.next();
                tokens.push(Token { kind: TokenKind::Sep, pos });
                line += 1;
                column = 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            ';' => {
                chars.next();
                column += 1;
                tokens.push(Token { kind: TokenKind::Sep, pos });
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' | ':' | '=' | '.' | '/' => {
                chars.next();
                column += 1;
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ',' => TokenKind::Comma,
                    ':' => TokenKind::Colon,
                    '=' => TokenKind::Equals,
                    '.' => TokenKind::Dot,
                    _ => TokenKind::Slash,
                };
                tokens.push(Token { kind, pos });
            }
            '-' => {
                chars.next();
                column += 1;
                match chars.peek() {
                    Some('>') => {
                        chars.next();
                        column += 1;
                        tokens.push(Token { kind: TokenKind::Arrow, pos });
                    }
                    Some(d) if d.is_ascii_digit() => {
                        let (kind, used) = lex_number(&mut chars, true)
                            .map_err(|m| FormatError::parse(pos, m))?;
                        column += used;
                        tokens.push(Token { kind, pos });
                    }
                    _ => return Err(FormatError::parse(pos, "expected `->` or a number after `-`")),
                }
            }
            '"' => {
                chars.next();
                column += 1;
                let mut value = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            column += 1;
                            break;
                        }
                        Some('\\') => {
                            column += 1;
                            match chars.next() {
                                Some('n') => value.push('\n'),
                                Some('t') => value.push('\t'),
                                Some(other) => value.push(other),
                                None => {
                                    return Err(FormatError::parse(pos, "unterminated string"))
                                }
                            }
                            column += 1;
                        }
                        Some('\n') => return Err(FormatError::parse(pos, "unterminated string")),
                        Some(other) => {
                            column += 1;
                            value.push(other);
                        }
                        None => return Err(FormatError::parse(pos, "unterminated string")),
                    }
                }
                tokens.push(Token { kind: TokenKind::Text(value), pos });
            }
            d if d.is_ascii_digit() => {
                let (kind, used) =
                    lex_number(&mut chars, false).map_err(|m| FormatError::parse(pos, m))?;
                column += used;
                tokens.push(Token { kind, pos });
            }
            c if is_ident_start(c) => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if is_ident_continue(c) {
                        name.push(c);
                        chars.next();
                        column += 1;
                    } else if c == '/' {
                        // `/` joins flattened name segments; it must sit
                        // between identifier characters.
                        let mut lookahead = chars.clone();
                        lookahead.next();
                        if lookahead.peek().copied().is_some_and(is_ident_start) {
                            name.push('/');
                            chars.next();
                            column += 1;
                        } else {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                tokens.push(Token { kind: TokenKind::Ident(name), pos });
            }
            other => {
                return Err(FormatError::parse(pos, format!("unexpected character `{other}`")))
            }
        }
    }
    tokens.push(Token { kind: TokenKind::End, pos: here!() });
    Ok(tokens)
}

fn lex_number(
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
    negative: bool,
) -> Result<(TokenKind, u32), String> {
    let mut text = String::new();
    if negative {
        text.push('-');
    }
    let mut used = 0u32;
    let mut is_real = false;
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            text.push(c);
            chars.next();
            used += 1;
        } else if c == '.' {
            // A dot starts a fraction only when digits follow; otherwise it
            // is port syntax (`1.x` never appears, but `gen.out` does).
            let mut lookahead = chars.clone();
            lookahead.next();
            if lookahead.peek().is_some_and(|d| d.is_ascii_digit()) {
                is_real = true;
                text.push('.');
                chars.next();
                used += 1;
            } else {
                break;
            }
        } else if c == 'e' || c == 'E' {
            let mut lookahead = chars.clone();
            lookahead.next();
            let next = lookahead.peek().copied();
            if next.is_some_and(|d| d.is_ascii_digit() || d == '+' || d == '-') {
                is_real = true;
                text.push(c);
                chars.next();
                used += 1;
                if let Some(&sign) = chars.peek() {
                    if sign == '+' || sign == '-' {
                        text.push(sign);
                        chars.next();
                        used += 1;
                    }
                }
            } else {
                break;
            }
        } else {
            break;
        }
    }
    if is_real {
        let value: f64 = text.parse().map_err(|_| format!("invalid number `{text}`"))?;
        Ok((TokenKind::Real(value), used))
    } else {
        let value: i64 = text.parse().map_err(|_| format!("integer out of range `{text}`"))?;
        Ok((TokenKind::Integer(value), used))
    }
}

/// A token cursor with the small helpers every grammar here needs.
pub struct Cursor<'a> {
    tokens: &'a [Token],
    index: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(tokens: &'a [Token]) -> Cursor<'a> {
        Cursor { tokens, index: 0 }
    }

    pub fn pos(&self) -> Pos {
        self.tokens[self.index.min(self.tokens.len() - 1)].pos
    }

    pub fn peek(&self) -> &TokenKind {
        &self.tokens[self.index.min(self.tokens.len() - 1)].kind
    }

    pub fn bump(&mut self) -> Token {
        let token = self.tokens[self.index.min(self.tokens.len() - 1)].clone();
        if self.index < self.tokens.len() - 1 {
            self.index += 1;
        }
        token
    }

    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, kind: &TokenKind) -> Result<Token, FormatError> {
        if self.peek() == kind {
            Ok(self.bump())
        } else {
            Err(FormatError::parse(
                self.pos(),
                format!("expected {}, found {}", kind.describe(), self.peek().describe()),
            ))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Pos), FormatError> {
        let pos = self.pos();
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.bump();
                Ok((name, pos))
            }
            other => {
                Err(FormatError::parse(pos, format!("expected identifier, found {}", other.describe())))
            }
        }
    }

    /// Consumes an identifier and requires it to equal `keyword`.
    pub fn expect_keyword(&mut self, keyword: &str) -> Result<Pos, FormatError> {
        let (name, pos) = self.expect_ident()?;
        if name == keyword {
            Ok(pos)
        } else {
            Err(FormatError::parse(pos, format!("expected `{keyword}`, found `{name}`")))
        }
    }

    pub fn skip_seps(&mut self) {
        while matches!(self.peek(), TokenKind::Sep) {
            self.bump();
        }
    }

    pub fn expect_end_of_statement(&mut self) -> Result<(), FormatError> {
        match self.peek() {
            TokenKind::Sep => {
                self.skip_seps();
                Ok(())
            }
            TokenKind::End | TokenKind::RBrace => Ok(()),
            other => Err(FormatError::parse(
                self.pos(),
                format!("expected end of statement, found {}", other.describe()),
            )),
        }
    }

    pub fn at_end(&self) -> bool {
        matches!(self.peek(), TokenKind::End)
    }
}

/// Parses a value literal: `7`, `2.5`, `true`, `"hi"`, `{a=1,b=2}`, `[1,2]`.
pub fn parse_value(cursor: &mut Cursor<'_>) -> Result<Value, FormatError> {
    let pos = cursor.pos();
    match cursor.peek().clone() {
        TokenKind::Integer(v) => {
            cursor.bump();
            Ok(Value::Integer(v))
        }
        TokenKind::Real(v) => {
            cursor.bump();
            Ok(Value::Real(v))
        }
        TokenKind::Text(v) => {
            cursor.bump();
            Ok(Value::Text(v))
        }
        TokenKind::Ident(name) if name == "true" => {
            cursor.bump();
            Ok(Value::Boolean(true))
        }
        TokenKind::Ident(name) if name == "false" => {
            cursor.bump();
            Ok(Value::Boolean(false))
        }
        TokenKind::LBrace => {
            cursor.bump();
            let mut fields = BTreeMap::new();
            if !cursor.eat(&TokenKind::RBrace) {
                loop {
                    let (name, field_pos) = cursor.expect_ident()?;
                    cursor.expect(&TokenKind::Equals)?;
                    let value = parse_value(cursor)?;
                    if fields.insert(name.clone(), value).is_some() {
                        return Err(FormatError::parse(
                            field_pos,
                            format!("duplicate record field `{name}`"),
                        ));
                    }
                    if cursor.eat(&TokenKind::Comma) {
                        continue;
                    }
                    cursor.expect(&TokenKind::RBrace)?;
                    break;
                }
            }
            Ok(Value::Record(fields))
        }
        TokenKind::LBracket => {
            cursor.bump();
            let mut items = Vec::new();
            if !cursor.eat(&TokenKind::RBracket) {
                loop {
                    items.push(parse_value(cursor)?);
                    if cursor.eat(&TokenKind::Comma) {
                        continue;
                    }
                    cursor.expect(&TokenKind::RBracket)?;
                    break;
                }
            }
            Ok(Value::List(items))
        }
        other => Err(FormatError::parse(pos, format!("expected a value, found {}", other.describe()))),
    }
}

/// Parses a type tag: `integer`, `real`, `boolean`, `text`,
/// `record{name: type, ...}`.
pub fn parse_type(cursor: &mut Cursor<'_>) -> Result<ValueTypeTag, FormatError> {
    let (name, pos) = cursor.expect_ident()?;
    match name.as_str() {
        "integer" => Ok(ValueTypeTag::Integer),
        "real" => Ok(ValueTypeTag::Real),
        "boolean" => Ok(ValueTypeTag::Boolean),
        "text" => Ok(ValueTypeTag::Text),
        "record" => {
            cursor.expect(&TokenKind::LBrace)?;
            let mut fields = BTreeMap::new();
            if !cursor.eat(&TokenKind::RBrace) {
                loop {
                    let (field, field_pos) = cursor.expect_ident()?;
                    cursor.expect(&TokenKind::Colon)?;
                    let tag = parse_type(cursor)?;
                    if fields.insert(field.clone(), tag).is_some() {
                        return Err(FormatError::parse(
                            field_pos,
                            format!("duplicate record field `{field}`"),
                        ));
                    }
                    if cursor.eat(&TokenKind::Comma) {
                        continue;
                    }
                    cursor.expect(&TokenKind::RBrace)?;
                    break;
                }
            }
            Ok(ValueTypeTag::Record(fields))
        }
        other => Err(FormatError::parse(pos, format!("unknown type `{other}`"))),
    }
}

/// Parses a behavior parameter value: a value, a type tag, or `inf`.
pub fn parse_param_value(cursor: &mut Cursor<'_>) -> Result<ParamValue, FormatError> {
    if let TokenKind::Ident(name) = cursor.peek() {
        match name.as_str() {
            "inf" => {
                cursor.bump();
                return Ok(ParamValue::Infinity);
            }
            "integer" | "real" | "boolean" | "text" | "record" => {
                return Ok(ParamValue::Type(parse_type(cursor)?));
            }
            _ => {}
        }
    }
    Ok(ParamValue::Value(parse_value(cursor)?))
}

/// Parses `( name=value, ... )`.
pub fn parse_params(cursor: &mut Cursor<'_>) -> Result<ParamMap, FormatError> {
    cursor.expect(&TokenKind::LParen)?;
    let mut params = ParamMap::new();
    if cursor.eat(&TokenKind::RParen) {
        return Ok(params);
    }
    loop {
        let (name, pos) = cursor.expect_ident()?;
        cursor.expect(&TokenKind::Equals)?;
        let value = parse_param_value(cursor)?;
        if params.insert(name.clone(), value).is_some() {
            return Err(FormatError::parse(pos, format!("duplicate parameter `{name}`")));
        }
        if cursor.eat(&TokenKind::Comma) {
            continue;
        }
        cursor.expect(&TokenKind::RParen)?;
        break;
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cursor_over(text: &str) -> (Vec<Token>, ()) {
        (tokenize(text).unwrap(), ())
    }

    #[test]
    fn lexes_statements_and_positions() {
        let tokens = tokenize("mode parallel\ncouple gen.out -> proc.in\n").unwrap();
        let kinds: Vec<&TokenKind> = tokens.iter().map(|t| &t.kind).collect();
        assert!(matches!(kinds[0], TokenKind::Ident(s) if s == "mode"));
        assert!(matches!(kinds[1], TokenKind::Ident(s) if s == "parallel"));
        assert!(matches!(kinds[2], TokenKind::Sep));
        let arrow = tokens.iter().find(|t| t.kind == TokenKind::Arrow).unwrap();
        assert_eq!(arrow.pos.line, 2);
    }

    #[test]
    fn lexes_flat_names_and_paths() {
        let tokens = tokenize("component sub/gen = x\npolicy executive_only /pool/exec\n").unwrap();
        assert!(tokens.iter().any(|t| matches!(&t.kind, TokenKind::Ident(s) if s == "sub/gen")));
        assert!(tokens.iter().any(|t| t.kind == TokenKind::Slash));
        assert!(tokens.iter().any(|t| matches!(&t.kind, TokenKind::Ident(s) if s == "pool/exec")));
    }

    #[test]
    fn value_literals_round_trip() {
        for text in ["7", "-3", "2.5", "true", "\"hi there\"", "{a=1,b=2.0}", "[1,2,3]"] {
            let (tokens, ()) = cursor_over(text);
            let mut cursor = Cursor::new(&tokens);
            let value = parse_value(&mut cursor).unwrap();
            let printed = value.to_string();
            let (tokens2, ()) = cursor_over(&printed);
            let mut cursor2 = Cursor::new(&tokens2);
            let reparsed = parse_value(&mut cursor2).unwrap();
            assert_eq!(value, reparsed, "{text} -> {printed}");
        }
    }

    #[test]
    fn type_literals_round_trip() {
        for text in ["integer", "real", "record{a: integer, b: record{c: text}}"] {
            let (tokens, ()) = cursor_over(text);
            let mut cursor = Cursor::new(&tokens);
            let tag = parse_type(&mut cursor).unwrap();
            let printed = tag.to_string();
            let (tokens2, ()) = cursor_over(&printed);
            let mut cursor2 = Cursor::new(&tokens2);
            assert_eq!(parse_type(&mut cursor2).unwrap(), tag, "{text} -> {printed}");
        }
    }

    #[test]
    fn error_positions_are_precise() {
        let err = tokenize("mode ???\n").unwrap_err();
        assert_eq!(err.pos.line, 1);
        assert_eq!(err.pos.column, 6);
    }
}
