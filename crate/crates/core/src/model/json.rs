//! A small strict-JSON reader that keeps line/column spans on every value,
//! so semantic errors in model documents can point into the source.
//! Duplicate object keys are rejected up front.

use super::Span;

#[derive(Debug)]
pub(super) struct JsonError {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone)]
pub(super) struct Key {
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub(super) enum JsonValue {
    Null,
    Bool(bool),
    Number(f64),
    String(String),
    Array(Vec<Spanned>),
    Object(Vec<(Key, Spanned)>),
}

#[derive(Debug, Clone)]
pub(super) struct Spanned {
    pub span: Span,
    pub value: JsonValue,
}

impl Spanned {
    pub fn span_for_error(&self) -> Span {
        self.span
    }
}

pub(super) fn parse(text: &str) -> Result<Spanned, JsonError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    let value = p.value()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("trailing content after the document"));
    }
    Ok(value)
}

struct Parser<'t> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    _text: &'t str,
}

impl<'t> Parser<'t> {
    fn new(text: &'t str) -> Self {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _text: text,
        }
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn error(&self, message: impl Into<String>) -> JsonError {
        JsonError {
            span: self.span(),
            message: message.into(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\n' | '\r')) {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), JsonError> {
        match self.peek() {
            Some(found) if found == c => {
                self.bump();
                Ok(())
            }
            Some(found) => Err(self.error(format!("expected {c:?}, found {found:?}"))),
            None => Err(self.error(format!("expected {c:?}, found end of input"))),
        }
    }

    fn value(&mut self) -> Result<Spanned, JsonError> {
        let span = self.span();
        let value = match self.peek() {
            Some('{') => self.object()?,
            Some('[') => self.array()?,
            Some('"') => JsonValue::String(self.string()?),
            Some('t') => {
                self.literal("true")?;
                JsonValue::Bool(true)
            }
            Some('f') => {
                self.literal("false")?;
                JsonValue::Bool(false)
            }
            Some('n') => {
                self.literal("null")?;
                JsonValue::Null
            }
            Some(c) if c == '-' || c.is_ascii_digit() => JsonValue::Number(self.number()?),
            Some(c) => return Err(self.error(format!("unexpected character {c:?}"))),
            None => return Err(self.error("unexpected end of input")),
        };
        Ok(Spanned { span, value })
    }

    fn literal(&mut self, word: &str) -> Result<(), JsonError> {
        for expected in word.chars() {
            match self.bump() {
                Some(c) if c == expected => {}
                _ => return Err(self.error(format!("invalid literal, expected {word:?}"))),
            }
        }
        Ok(())
    }

    fn object(&mut self) -> Result<JsonValue, JsonError> {
        self.expect('{')?;
        let mut fields: Vec<(Key, Spanned)> = Vec::new();
        self.skip_ws();
        if self.peek() == Some('}') {
            self.bump();
            return Ok(JsonValue::Object(fields));
        }
        loop {
            self.skip_ws();
            let key_span = self.span();
            let key = self.string()?;
            if fields.iter().any(|(k, _)| k.text == key) {
                return Err(JsonError {
                    span: key_span,
                    message: format!("duplicate key {key:?}"),
                });
            }
            self.skip_ws();
            self.expect(':')?;
            self.skip_ws();
            let value = self.value()?;
            fields.push((
                Key {
                    text: key,
                    span: key_span,
                },
                value,
            ));
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some('}') => {
                    self.bump();
                    return Ok(JsonValue::Object(fields));
                }
                Some(c) => return Err(self.error(format!("expected ',' or '}}', found {c:?}"))),
                None => return Err(self.error("unterminated object")),
            }
        }
    }

    fn array(&mut self) -> Result<JsonValue, JsonError> {
        self.expect('[')?;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(JsonValue::Array(items));
        }
        loop {
            self.skip_ws();
            items.push(self.value()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(']') => {
                    self.bump();
                    return Ok(JsonValue::Array(items));
                }
                Some(c) => return Err(self.error(format!("expected ',' or ']', found {c:?}"))),
                None => return Err(self.error("unterminated array")),
            }
        }
    }

    fn string(&mut self) -> Result<String, JsonError> {
        self.expect('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('/') => out.push('/'),
                    Some('b') => out.push('\u{0008}'),
                    Some('f') => out.push('\u{000c}'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('t') => out.push('\t'),
                    Some('u') => {
                        let high = self.hex4()?;
                        let c = if (0xD800..0xDC00).contains(&high) {
                            // Surrogate pair.
                            if self.bump() != Some('\\') || self.bump() != Some('u') {
                                return Err(self.error("unpaired surrogate escape"));
                            }
                            let low = self.hex4()?;
                            if !(0xDC00..0xE000).contains(&low) {
                                return Err(self.error("invalid low surrogate"));
                            }
                            let code =
                                0x10000 + ((high - 0xD800) << 10) + (low - 0xDC00);
                            char::from_u32(code)
                        } else {
                            char::from_u32(high)
                        };
                        match c {
                            Some(c) => out.push(c),
                            None => return Err(self.error("invalid unicode escape")),
                        }
                    }
                    Some(c) => return Err(self.error(format!("invalid escape \\{c}"))),
                    None => return Err(self.error("unterminated escape")),
                },
                Some(c) if (c as u32) < 0x20 => {
                    return Err(self.error("control character inside string"))
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn hex4(&mut self) -> Result<u32, JsonError> {
        let mut value = 0u32;
        for _ in 0..4 {
            let c = self
                .bump()
                .ok_or_else(|| self.error("unterminated unicode escape"))?;
            let digit = c
                .to_digit(16)
                .ok_or_else(|| self.error("invalid hex digit in unicode escape"))?;
            value = value * 16 + digit;
        }
        Ok(value)
    }

    fn number(&mut self) -> Result<f64, JsonError> {
        let start_span = self.span();
        let mut token = String::new();
        if self.peek() == Some('-') {
            token.push(self.bump().unwrap());
        }
        let digits = |p: &mut Self, token: &mut String| {
            let mut any = false;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                token.push(p.bump().unwrap());
                any = true;
            }
            any
        };
        if !digits(self, &mut token) {
            return Err(self.error("malformed number"));
        }
        if self.peek() == Some('.') {
            token.push(self.bump().unwrap());
            if !digits(self, &mut token) {
                return Err(self.error("malformed number: missing fraction digits"));
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            token.push(self.bump().unwrap());
            if matches!(self.peek(), Some('+' | '-')) {
                token.push(self.bump().unwrap());
            }
            if !digits(self, &mut token) {
                return Err(self.error("malformed number: missing exponent digits"));
            }
        }
        token.parse::<f64>().map_err(|_| JsonError {
            span: start_span,
            message: format!("number {token:?} does not fit a double"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_document() {
        let doc = r#"{"a": [1, 2.5, -3e-2], "b": {"c": "x\ny"}, "d": true, "e": null}"#;
        let parsed = parse(doc).unwrap();
        match parsed.value {
            JsonValue::Object(fields) => assert_eq!(fields.len(), 4),
            _ => panic!("expected object"),
        }
    }

    #[test]
    fn rejects_duplicate_keys() {
        let err = parse(r#"{"a": 1, "a": 2}"#).unwrap_err();
        assert!(err.message.contains("duplicate key"));
        assert_eq!(err.span.col, 10);
    }

    #[test]
    fn tracks_line_numbers() {
        let err = parse("{\n  \"a\": 1\n  \"b\": 2\n}").unwrap_err();
        assert_eq!(err.span.line, 3);
    }

    #[test]
    fn surrogate_pairs_decode() {
        let parsed = parse(r#""🤔""#).unwrap();
        match parsed.value {
            JsonValue::String(s) => assert_eq!(s, "\u{1F914}"),
            _ => panic!("expected string"),
        }
    }
}
