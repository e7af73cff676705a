//! A lexical tokenizer for C-family source text.
//!
//! Rules, applied left to right:
//!
//! | input                                   | output                          |
//! |-----------------------------------------|---------------------------------|
//! | whitespace, `// ...`, `/* ... */`       | dropped                         |
//! | identifier `[A-Za-z_$][A-Za-z0-9_$]*`   | itself, or its sub-words when splitting |
//! | number starting with a digit            | `<num>` with placeholders, else itself |
//! | `"..."` or `'...'` (backslash escapes)  | `<str>` with placeholders, else itself |
//! | operator from [`OPERATORS`]             | itself (longest match)          |
//! | any other character                     | itself                          |
//!
//! Identifier splitting breaks on `_` and `$` and on case changes
//! (`fooBar` -> `foo`, `Bar`; `HTTPServer` -> `HTTP`, `Server`). Digits stay
//! attached to the preceding sub-word. Lowercasing applies to identifiers
//! after splitting.

use serde::{Deserialize, Serialize};

pub const NUM_PLACEHOLDER: &str = "<num>";
pub const STR_PLACEHOLDER: &str = "<str>";

/// Multi-character operators, longest first.
pub const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "->", "::", "<<", ">>",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tokenizer {
    pub split_identifiers: bool,
    pub literal_placeholders: bool,
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            split_identifiers: true,
            literal_placeholders: true,
            lowercase: true,
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Sub-words of an identifier, split on `_`, `$` and case boundaries.
pub fn split_identifier(ident: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    for chunk in ident.split(['_', '$']).filter(|c| !c.is_empty()) {
        let chars: Vec<(usize, char)> = chunk.char_indices().collect();
        let mut start = 0;
        for k in 1..chars.len() {
            let (pos, cur) = chars[k];
            let prev = chars[k - 1].1;
            let next_lower = chars.get(k + 1).is_some_and(|&(_, n)| n.is_ascii_lowercase());
            let boundary = cur.is_ascii_uppercase()
                && (prev.is_ascii_lowercase()
                    || prev.is_ascii_digit()
                    || (prev.is_ascii_uppercase() && next_lower));
            if boundary {
                parts.push(&chunk[start..pos]);
                start = pos;
            }
        }
        parts.push(&chunk[start..]);
    }
    parts
}

impl Tokenizer {
    pub fn tokenize(&self, code: &str) -> Vec<String> {
        let chars: Vec<char> = code.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c == '/' && chars.get(i + 1) == Some(&'/') {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            } else if c == '/' && chars.get(i + 1) == Some(&'*') {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    i += 1;
                }
                i = (i + 2).min(chars.len());
            } else if is_ident_start(c) {
                let start = i;
                while i < chars.len() && is_ident_continue(chars[i]) {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().collect();
                self.push_identifier(&ident, &mut out);
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || chars[i] == '_')
                {
                    i += 1;
                }
                out.push(if self.literal_placeholders {
                    NUM_PLACEHOLDER.to_string()
                } else {
                    chars[start..i].iter().collect()
                });
            } else if c == '"' || c == '\'' {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i] != c {
                    i += if chars[i] == '\\' { 2 } else { 1 };
                }
                i = (i + 1).min(chars.len());
                out.push(if self.literal_placeholders {
                    STR_PLACEHOLDER.to_string()
                } else {
                    chars[start..i].iter().collect()
                });
            } else if let Some(op) = OPERATORS
                .iter()
                .find(|op| op.chars().zip(&chars[i..]).filter(|(a, b)| a == *b).count() == op.len())
            {
                out.push((*op).to_string());
                i += op.len();
            } else {
                out.push(c.to_string());
                i += 1;
            }
        }
        out
    }

    fn push_identifier(&self, ident: &str, out: &mut Vec<String>) {
        let case = |s: &str| if self.lowercase { s.to_ascii_lowercase() } else { s.to_string() };
        if self.split_identifiers {
            let parts = split_identifier(ident);
            if parts.is_empty() {
                out.push(case(ident));
            } else {
                out.extend(parts.into_iter().map(case));
            }
        } else {
            out.push(case(ident));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        Tokenizer::default().tokenize(s)
    }

    #[test]
    fn declaration_with_split_and_placeholders() {
        // Hand-tokenized under the rule table above.
        assert_eq!(toks("int fooBar = 42;"), ["int", "foo", "bar", "=", "<num>", ";"]);
    }

    #[test]
    fn empty_input() {
        assert!(toks("").is_empty());
        assert!(toks("  \n\t// only a comment").is_empty());
    }

    #[test]
    fn flags_off_keeps_raw_tokens() {
        let t = Tokenizer {
            split_identifiers: false,
            literal_placeholders: false,
            lowercase: false,
        };
        assert_eq!(
            t.tokenize(r#"String s_name = "a\"b"; x >>>= 0x1F;"#),
            ["String", "s_name", "=", r#""a\"b""#, ";", "x", ">>>=", "0x1F", ";"]
        );
    }

    #[test]
    fn identifier_splitting_rules() {
        assert_eq!(split_identifier("HTTPServer"), ["HTTP", "Server"]);
        assert_eq!(split_identifier("snake_case_name"), ["snake", "case", "name"]);
        assert_eq!(split_identifier("parseXML2Doc"), ["parse", "XML2", "Doc"]);
        assert_eq!(split_identifier("__init__"), ["init"]);
        assert_eq!(split_identifier("x"), ["x"]);
    }

    #[test]
    fn comments_and_operators() {
        assert_eq!(
            toks("a /* skip */ += b->c; // tail"),
            ["a", "+=", "b", "->", "c", ";"]
        );
        assert_eq!(toks("'c' \"unterminated"), ["<str>", "<str>"]);
        assert_eq!(toks("__"), ["__"]);
    }

    proptest! {
        #[test]
        fn total_and_deterministic(s in "\\PC{0,200}") {
            let t = Tokenizer::default();
            prop_assert_eq!(t.tokenize(&s), t.tokenize(&s));
        }
    }
}
