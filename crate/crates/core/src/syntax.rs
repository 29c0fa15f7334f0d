//! Text syntax for words, relator lists and group-algebra expressions.
//!
//! Words are whitespace-separated generator names with optional integer powers:
//! `a b^-1 (a b)^3 [a^2, b^2]`. `1` is the empty word. Brackets denote the
//! commutator `[u, v] = u v u^-1 v^-1`.
//!
//! Element expressions are signed sums of terms `coef*word`:
//! `1 + 2*(x y^-1) - (x)`, `1/2 x + 1/2 x^-1`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::word::{Letter, Word};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, col });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n: BigInt = s
                .parse()
                .map_err(|_| Error::config(1, col, format!("bad integer `{s}`")))?;
            out.push(Token {
                tok: Tok::Int(n),
                col,
            });
            continue;
        }
        if c.is_alphabetic() {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let signed_index = d == '-'
                    && chars[i - 1] == '_'
                    && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
                if d.is_alphanumeric() || d == '_' || signed_index {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
            continue;
        }
        return Err(Error::config(1, col, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    names: &'a [String],
    end_col: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &str, names: &'a [String]) -> Result<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            names,
            end_col: text.chars().count() + 1,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.col).unwrap_or(self.end_col)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::config(1, self.col(), msg))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn at_atom_start(&self) -> bool {
        match self.peek() {
            Some(Tok::Ident(_)) | Some(Tok::LParen) | Some(Tok::LBracket) => true,
            Some(Tok::Int(n)) => n.is_one(),
            _ => false,
        }
    }

    fn generator(&self, name: &str) -> Result<u16> {
        match self.names.iter().position(|n| n == name) {
            Some(i) => Ok(i as u16),
            None => self.err(format!("unknown generator `{name}`")),
        }
    }

    fn signed_int(&mut self) -> Result<i64> {
        let neg = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                true
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        match self.bump() {
            Some(Tok::Int(n)) => {
                let v: i64 = n
                    .try_into()
                    .map_err(|_| Error::config(1, self.col(), "exponent too large"))?;
                Ok(if neg { -v } else { v })
            }
            _ => {
                self.pos -= 1;
                self.err("expected integer exponent")
            }
        }
    }

    fn primary(&mut self) -> Result<Word> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Ident(name)) => {
                self.pos -= 1;
                let g = self.generator(&name)?;
                self.pos += 1;
                Ok(Word::gen(g))
            }
            Some(Tok::Int(n)) if n.is_one() => Ok(Word::empty()),
            Some(Tok::LParen) => {
                let w = self.word()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(w)
            }
            Some(Tok::LBracket) => {
                let u = self.word()?;
                self.expect(Tok::Comma, "`,` in commutator")?;
                let v = self.word()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Word::commutator(&u, &v))
            }
            _ => Err(Error::config(1, col, "expected generator, `1`, `(` or `[`")),
        }
    }

    fn atom(&mut self) -> Result<Word> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let k = self.signed_int()?;
            Ok(base.pow(k))
        } else {
            Ok(base)
        }
    }

    fn word(&mut self) -> Result<Word> {
        let mut letters: Vec<Letter> = Vec::new();
        while self.at_atom_start() {
            letters.extend(self.atom()?.0);
        }
        Ok(Word(letters))
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            self.err("unexpected trailing input")
        } else {
            Ok(())
        }
    }
}

/// One `key = value` line of a config file.
#[derive(Clone, Debug)]
pub struct Entry {
    pub line: usize,
    pub value: String,
    /// 1-based column where the value starts.
    pub column: usize,
}

impl Entry {
    /// Error pointing at the value.
    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::config(self.line, self.column, message)
    }
}

/// Parses line-oriented `key = value` text. `#` starts a comment; keys outside
/// `keys` and duplicates of keys not in `repeatable` are errors.
pub fn parse_key_values(text: &str, keys: &[&str], repeatable: &[&str]) -> Result<BTreeMap<String, Vec<Entry>>> {
    let mut entries: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let key_col = content.len() - content.trim_start().len() + 1;
        let Some(eq) = content.find('=') else {
            return Err(Error::config(line, key_col, "expected `key = value`"));
        };
        let key = content[..eq].trim();
        if key.is_empty() {
            return Err(Error::config(line, key_col, "missing key before `=`"));
        }
        if !keys.contains(&key) {
            return Err(Error::config(line, key_col, format!("unknown key `{key}`")));
        }
        let after = &content[eq + 1..];
        let value = after.trim();
        let column = content[..eq + 1].chars().count() + (after.len() - after.trim_start().len()) + 1;
        if value.is_empty() {
            return Err(Error::config(line, column, format!("empty value for `{key}`")));
        }
        let slot = entries.entry(key.to_string()).or_default();
        if !repeatable.contains(&key) && !slot.is_empty() {
            return Err(Error::config(line, key_col, format!("duplicate key `{key}`")));
        }
        slot.push(Entry {
            line,
            value: value.to_string(),
            column,
        });
    }
    Ok(entries)
}

/// Parses a word over the named generators. The result is not reduced.
pub fn parse_word(text: &str, names: &[String]) -> Result<Word> {
    let mut p = Parser::new(text, names)?;
    let w = p.word()?;
    p.finish()?;
    Ok(w)
}

/// Parses a relator list. With top-level commas each comma-separated word is a
/// relator; otherwise every top-level atom is its own relator.
pub fn parse_relators(text: &str, names: &[String]) -> Result<Vec<Word>> {
    let mut p = Parser::new(text, names)?;
    let mut groups: Vec<Vec<Word>> = vec![Vec::new()];
    loop {
        if p.at_atom_start() {
            let a = p.atom()?;
            groups.last_mut().unwrap().push(a);
        } else if p.peek() == Some(&Tok::Comma) {
            p.pos += 1;
            groups.push(Vec::new());
        } else {
            break;
        }
    }
    p.finish()?;
    let out = if groups.len() == 1 {
        groups.pop().unwrap()
    } else {
        groups
            .into_iter()
            .map(|atoms| Word(atoms.into_iter().flat_map(|w| w.0).collect()))
            .collect()
    };
    Ok(out)
}

/// Parses a list of words separated by `;`.
pub fn parse_word_list(text: &str, names: &[String]) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in text.split(';') {
        if !part.trim().is_empty() {
            out.push(parse_word(part, names).map_err(|e| e.at_line(1, offset))?);
        }
        offset += part.chars().count() + 1;
    }
    Ok(out)
}

/// Parses an element expression into `(word, coefficient)` terms.
pub fn parse_expression(text: &str, names: &[String]) -> Result<Vec<(Word, BigRational)>> {
    let mut p = Parser::new(text, names)?;
    let mut terms = Vec::new();
    let mut first = true;
    loop {
        let mut negative = false;
        match p.peek() {
            Some(Tok::Plus) => {
                p.pos += 1;
            }
            Some(Tok::Minus) => {
                p.pos += 1;
                negative = true;
            }
            None if !first => break,
            None => return p.err("empty expression"),
            _ if first => {}
            _ => return p.err("expected `+` or `-`"),
        }
        first = false;
        let mut coef = BigRational::one();
        let mut had_coef = false;
        if let Some(Tok::Int(n)) = p.peek().cloned() {
            // `1` followed by a word-start or nothing is still a coefficient
            p.pos += 1;
            had_coef = true;
            let mut c = BigRational::from_integer(n);
            if p.peek() == Some(&Tok::Slash) {
                p.pos += 1;
                match p.bump() {
                    Some(Tok::Int(d)) if d != BigInt::from(0) => {
                        c /= BigRational::from_integer(d);
                    }
                    _ => {
                        p.pos -= 1;
                        return p.err("expected nonzero denominator");
                    }
                }
            }
            coef = c;
            if p.peek() == Some(&Tok::Star) {
                p.pos += 1;
                if !p.at_atom_start() {
                    return p.err("expected word after `*`");
                }
            }
        }
        let w = p.word()?;
        if !had_coef && w.is_empty() {
            return p.err("expected term");
        }
        if negative {
            coef = -coef;
        }
        terms.push((w, coef));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(s: &[&str]) -> Vec<String> {
        s.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn powers_and_groups() {
        let n = names(&["a", "b"]);
        let w = parse_word("a^2 (a b)^-1 1", &n).unwrap();
        assert_eq!(
            w,
            Word(vec![
                Letter::pos(0),
                Letter::pos(0),
                Letter::neg(1),
                Letter::neg(0)
            ])
        );
    }

    #[test]
    fn signed_index_names() {
        let n = names(&["t", "a_-1", "a_0", "a_1"]);
        let w = parse_word("t^-1 a_-1 t", &n).unwrap();
        assert_eq!(w, Word(vec![Letter::neg(0), Letter::pos(1), Letter::pos(0)]));
    }

    #[test]
    fn relator_lists() {
        let n = names(&["a", "b"]);
        let r = parse_relators("a^3 b^3 (a b)^3", &n).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[2].len(), 6);
        let r = parse_relators("a^2, b^2, a b a^-1 b^-1", &n).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[2].len(), 4);
        let r = parse_relators("[a, b] a^2", &n).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn expressions() {
        let n = names(&["x", "y"]);
        let t = parse_expression("1 + 2*(x y^-1) - (x)", &n).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t[0].0.is_empty());
        assert_eq!(t[1].1, BigRational::from_integer(2.into()));
        assert_eq!(t[2].1, BigRational::from_integer((-1).into()));
        let t = parse_expression("1/2 x + 1/2 x^-1", &n).unwrap();
        assert_eq!(t[0].1, BigRational::new(1.into(), 2.into()));
        let t = parse_expression("-x", &n).unwrap();
        assert_eq!(t[0].1, BigRational::from_integer((-1).into()));
    }

    #[test]
    fn errors_have_columns() {
        let n = names(&["a"]);
        match parse_word("a b", &n) {
            Err(Error::Config { column, .. }) => assert_eq!(column, 3),
            other => panic!("{other:?}"),
        }
        match parse_word("a ^", &n) {
            Err(Error::Config { .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_expression("", &n).is_err());
        assert!(parse_expression("x +", &n).is_err());
        assert!(parse_word("(a", &n).is_err());
    }
}
