use std::fmt;

use crate::model::SourceLocation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier or keyword.
    Word(String),
    LBrace,
    RBrace,
    Semi,
    Comma,
    Dot,
    Colon,
    /// `->`
    Arrow,
    /// `-[`
    StereoOpen,
    /// `]->`
    StereoClose,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "`{w}`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::Semi => f.write_str("`;`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Dot => f.write_str("`.`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::StereoOpen => f.write_str("`-[`"),
            TokenKind::StereoClose => f.write_str("`]->`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub message: String,
    pub loc: SourceLocation,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn loc(&self) -> SourceLocation {
        SourceLocation::new(self.line, self.column)
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        let loc = cur.loc();
        let kind = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '/' => {
                cur.bump();
                match cur.bump() {
                    Some('/') => {
                        while cur.peek().is_some_and(|c| c != '\n') {
                            cur.bump();
                        }
                        continue;
                    }
                    Some('*') => {
                        let mut prev = None;
                        loop {
                            match cur.bump() {
                                Some('/') if prev == Some('*') => break,
                                Some(c) => prev = Some(c),
                                None => {
                                    return Err(LexError {
                                        message: "unterminated block comment".into(),
                                        loc,
                                    })
                                }
                            }
                        }
                        continue;
                    }
                    _ => {
                        return Err(LexError {
                            message: "unexpected character `/`".into(),
                            loc,
                        })
                    }
                }
            }
            '{' => single(&mut cur, TokenKind::LBrace),
            '}' => single(&mut cur, TokenKind::RBrace),
            ';' => single(&mut cur, TokenKind::Semi),
            ',' => single(&mut cur, TokenKind::Comma),
            '.' => single(&mut cur, TokenKind::Dot),
            ':' => single(&mut cur, TokenKind::Colon),
            '-' => {
                cur.bump();
                match cur.bump() {
                    Some('>') => TokenKind::Arrow,
                    Some('[') => TokenKind::StereoOpen,
                    _ => {
                        return Err(LexError {
                            message: "expected `->` or `-[`".into(),
                            loc,
                        })
                    }
                }
            }
            ']' => {
                cur.bump();
                if cur.bump() == Some('-') && cur.bump() == Some('>') {
                    TokenKind::StereoClose
                } else {
                    return Err(LexError {
                        message: "expected `]->`".into(),
                        loc,
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(c) = cur
                    .peek()
                    .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    word.push(c);
                    cur.bump();
                }
                TokenKind::Word(word)
            }
            other => {
                return Err(LexError {
                    message: format!("unexpected character `{other}`"),
                    loc,
                })
            }
        };
        out.push(Token { kind, loc });
    }
    out.push(Token {
        kind: TokenKind::Eof,
        loc: cur.loc(),
    });
    Ok(out)
}

fn single(cur: &mut Cursor<'_>, kind: TokenKind) -> TokenKind {
    cur.bump();
    kind
}
