//! A small reader for the Clojure-flavoured data syntax used by literals,
//! genome text and rendered programs.

use std::sync::Arc;

use thiserror::Error;

use crate::runtime::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    List(Vec<Datum>),
    Vector(Vec<Datum>),
    Symbol(String),
    Literal(Value),
    /// `^hint target`
    Meta(Box<Datum>, Box<Datum>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("read error at offset {offset}: {message}")]
pub struct ReadError {
    pub offset: usize,
    pub message: String,
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '"' | ';' | ',' | ':' | '^')
}

pub struct Reader<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> Reader<'s> {
    pub fn new(src: &'s str) -> Self {
        Self { src, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn err(&self, message: impl Into<String>) -> ReadError {
        ReadError { offset: self.pos, message: message.into() }
    }

    pub fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with(';') {
                let line = trimmed.find('\n').unwrap_or(trimmed.len());
                self.pos += line;
            } else {
                break;
            }
        }
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn advance(&mut self, c: char) {
        self.pos += c.len_utf8();
    }

    pub fn read(&mut self) -> Result<Datum, ReadError> {
        self.skip_ws();
        let c = self.peek().ok_or_else(|| self.err("unexpected end of input"))?;
        match c {
            '(' => {
                self.advance(c);
                Ok(Datum::List(self.read_seq(')')?))
            }
            '[' => {
                self.advance(c);
                Ok(Datum::Vector(self.read_seq(']')?))
            }
            ')' | ']' => Err(self.err(format!("unexpected '{c}'"))),
            '^' => {
                self.advance(c);
                let hint = self.read()?;
                let target = self.read()?;
                Ok(Datum::Meta(Box::new(hint), Box::new(target)))
            }
            '"' => {
                self.advance(c);
                self.read_string()
            }
            '\\' => {
                self.advance(c);
                self.read_char()
            }
            '#' if self.rest().starts_with("##") => {
                let tok = self.atom_token();
                match tok {
                    "##Inf" => Ok(Datum::Literal(Value::Double(f64::INFINITY))),
                    "##-Inf" => Ok(Datum::Literal(Value::Double(f64::NEG_INFINITY))),
                    "##NaN" => Ok(Datum::Literal(Value::Double(f64::NAN))),
                    _ => Err(self.err(format!("unknown symbolic value {tok}"))),
                }
            }
            _ => {
                let start = self.pos;
                let tok = self.atom_token();
                if tok.is_empty() {
                    return Err(ReadError { offset: start, message: format!("unexpected '{c}'") });
                }
                Ok(classify_atom(tok))
            }
        }
    }

    fn atom_token(&mut self) -> &'s str {
        let rest = self.rest();
        let end = rest.find(is_delim).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn read_seq(&mut self, close: char) -> Result<Vec<Datum>, ReadError> {
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.err(format!("missing '{close}'"))),
                Some(c) if c == close => {
                    self.advance(c);
                    return Ok(items);
                }
                Some(_) => items.push(self.read()?),
            }
        }
    }

    fn read_string(&mut self) -> Result<Datum, ReadError> {
        let mut out = String::new();
        loop {
            let c = self.peek().ok_or_else(|| self.err("unterminated string"))?;
            self.advance(c);
            match c {
                '"' => return Ok(Datum::Literal(Value::Str(Arc::from(out)))),
                '\\' => {
                    let e = self.peek().ok_or_else(|| self.err("unterminated escape"))?;
                    self.advance(e);
                    match e {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        '"' => out.push('"'),
                        '\\' => out.push('\\'),
                        'u' => out.push(self.read_unicode_escape()?),
                        _ => return Err(self.err(format!("unknown escape \\{e}"))),
                    }
                }
                _ => out.push(c),
            }
        }
    }

    fn read_unicode_escape(&mut self) -> Result<char, ReadError> {
        let hex = self.rest().get(..4).ok_or_else(|| self.err("short \\u escape"))?;
        let code = u32::from_str_radix(hex, 16).map_err(|_| self.err("bad \\u escape"))?;
        self.pos += 4;
        char::from_u32(code).ok_or_else(|| self.err("invalid code point"))
    }

    fn read_char(&mut self) -> Result<Datum, ReadError> {
        let first = self.peek().ok_or_else(|| self.err("dangling '\\'"))?;
        self.advance(first);
        let rest = self.rest();
        let name_len = rest.find(is_delim).unwrap_or(rest.len());
        if name_len == 0 {
            return Ok(Datum::Literal(Value::Char(first)));
        }
        let name = &self.src[self.pos - first.len_utf8()..self.pos + name_len];
        let c = match name {
            "space" => ' ',
            "newline" => '\n',
            "tab" => '\t',
            "return" => '\r',
            _ if first == 'u' && name_len == 4 => {
                let code = u32::from_str_radix(&name[1..], 16)
                    .map_err(|_| self.err("bad \\u character"))?;
                char::from_u32(code).ok_or_else(|| self.err("invalid code point"))?
            }
            _ => return Err(self.err(format!("unknown character name \\{name}"))),
        };
        self.pos += name_len;
        Ok(Datum::Literal(Value::Char(c)))
    }
}

fn classify_atom(tok: &str) -> Datum {
    match tok {
        "true" => return Datum::Literal(Value::Bool(true)),
        "false" => return Datum::Literal(Value::Bool(false)),
        "nil" => return Datum::Literal(Value::Nil),
        _ => {}
    }
    let body = tok.strip_prefix(['-', '+']).unwrap_or(tok);
    if body.starts_with(|c: char| c.is_ascii_digit()) {
        if body.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(i) = tok.parse::<i64>() {
                return Datum::Literal(Value::Int(i));
            }
        }
        if let Ok(d) = tok.parse::<f64>() {
            return Datum::Literal(Value::Double(d));
        }
    }
    Datum::Symbol(tok.to_string())
}

/// Reads exactly one datum from `src`, rejecting trailing input.
pub fn read_one(src: &str) -> Result<Datum, ReadError> {
    let mut r = Reader::new(src);
    let d = r.read()?;
    if !r.at_end() {
        return Err(r.err("trailing input"));
    }
    Ok(d)
}

/// Converts a datum holding only literal data into a value.
pub fn datum_to_value(d: &Datum) -> Option<Value> {
    match d {
        Datum::Literal(v) => Some(v.clone()),
        Datum::Vector(items) => {
            let vals = items.iter().map(datum_to_value).collect::<Option<Vec<_>>>()?;
            Some(Value::Seq(Arc::new(vals)))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_atoms() {
        assert_eq!(read_one("42").unwrap(), Datum::Literal(Value::Int(42)));
        assert_eq!(read_one("-5").unwrap(), Datum::Literal(Value::Int(-5)));
        assert_eq!(read_one("1.5").unwrap(), Datum::Literal(Value::Double(1.5)));
        assert_eq!(read_one("1e-7").unwrap(), Datum::Literal(Value::Double(1e-7)));
        assert_eq!(read_one("-").unwrap(), Datum::Symbol("-".into()));
        assert_eq!(read_one("double-<").unwrap(), Datum::Symbol("double-<".into()));
        assert_eq!(read_one("a-12").unwrap(), Datum::Symbol("a-12".into()));
        assert_eq!(read_one(r"\space").unwrap(), Datum::Literal(Value::Char(' ')));
        assert_eq!(read_one(r"\a").unwrap(), Datum::Literal(Value::Char('a')));
        assert_eq!(read_one(r"\(").unwrap(), Datum::Literal(Value::Char('(')));
        assert_eq!(
            read_one(r#""a\"b\n""#).unwrap(),
            Datum::Literal(Value::Str(Arc::from("a\"b\n")))
        );
    }

    #[test]
    fn reads_nested_forms() {
        let d = read_one("(let [f (fn [^Int x] (max 0 x))] (map f input))").unwrap();
        let Datum::List(items) = d else { panic!("not a list") };
        assert_eq!(items.len(), 3);
        assert!(matches!(&items[1], Datum::Vector(v) if v.len() == 2));
    }

    #[test]
    fn colon_terminates_atoms() {
        let mut r = Reader::new("0:Int");
        assert_eq!(r.read().unwrap(), Datum::Literal(Value::Int(0)));
        assert_eq!(r.rest(), ":Int");
    }

    #[test]
    fn reports_unbalanced() {
        assert!(read_one("(a b").is_err());
        assert!(read_one(")").is_err());
        assert!(read_one("a b").is_err());
    }
}
