//! Tokenizer.
//!
//! Rule table for `whitespace_punct` mode, applied to each whitespace-delimited
//! chunk:
//!
//! | position          | character class              | action              |
//! |-------------------|------------------------------|---------------------|
//! | leading           | parenthesis                  | standalone token    |
//! | leading           | other punctuation            | dropped             |
//! | interior          | anything                     | kept in the word    |
//! | trailing          | parenthesis, `. ! ? 。！？`  | standalone token    |
//! | trailing          | other punctuation            | dropped             |
//!
//! Punctuation is any character that is not alphanumeric. A chunk made only of
//! punctuation is treated as trailing punctuation. So `a-b` stays whole,
//! `(EDT),` becomes `( EDT )` and `d.` becomes `d .`.
//!
//! In `char_ngram` mode every CJK ideograph, kana or hangul character is its
//! own token, runs of other letters and digits form one token, parentheses and
//! sentence terminators are standalone, and remaining punctuation is dropped.
//!
//! Offsets are byte offsets into the source text, so
//! `&text[t.char_start..t.char_end] == t.surface` for every token.

use super::{LanguageProfile, TokenMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence(Vec<Token>);

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self(tokens)
    }

    pub fn as_slice(&self) -> &[Token] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.0.iter().map(|t| t.surface.as_str()).collect()
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn is_open_paren_char(c: char) -> bool {
    matches!(c, '(' | '（')
}

fn is_close_paren_char(c: char) -> bool {
    matches!(c, ')' | '）')
}

fn is_terminator_char(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '。' | '！' | '？')
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

pub fn is_open_paren(s: &str) -> bool {
    single_char(s).is_some_and(is_open_paren_char)
}

pub fn is_close_paren(s: &str) -> bool {
    single_char(s).is_some_and(is_close_paren_char)
}

pub fn is_paren(s: &str) -> bool {
    is_open_paren(s) || is_close_paren(s)
}

pub fn is_terminator(s: &str) -> bool {
    single_char(s).is_some_and(is_terminator_char)
}

/// Parentheses and sentence terminators: tokens that carry structure rather
/// than words.
pub fn is_structural(s: &str) -> bool {
    is_paren(s) || is_terminator(s)
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF      // hiragana, katakana
        | 0x31F0..=0x31FF    // katakana phonetic extensions
        | 0x3400..=0x4DBF    // CJK extension A
        | 0x4E00..=0x9FFF    // CJK unified ideographs
        | 0xAC00..=0xD7AF    // hangul syllables
        | 0xF900..=0xFAFF    // compatibility ideographs
        | 0xFF66..=0xFF9F    // halfwidth katakana
        | 0x20000..=0x2FA1F) // supplementary ideographs
}

pub fn tokenize(text: &str, profile: &LanguageProfile) -> TokenSequence {
    let mut out = Vec::new();
    match profile.token_mode() {
        TokenMode::WhitespacePunct => tokenize_words(text, &mut out),
        TokenMode::CharNgram => tokenize_chars(text, &mut out),
    }
    TokenSequence(out)
}

fn push(out: &mut Vec<Token>, text: &str, start: usize, end: usize) {
    debug_assert!(start < end);
    out.push(Token {
        surface: text[start..end].to_string(),
        char_start: start,
        char_end: end,
    });
}

fn tokenize_words(text: &str, out: &mut Vec<Token>) {
    let mut chunk_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                chunk(text, s, i, out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        chunk(text, s, text.len(), out);
    }
}

fn chunk(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let piece = &text[start..end];
    let core_start = piece.char_indices().find(|&(_, c)| !is_punct(c)).map(|(i, _)| i);
    let Some(core_start) = core_start else {
        emit_trailing(text, start, end, out);
        return;
    };
    let core_end = piece
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_punct(c))
        .map(|(i, c)| i + c.len_utf8())
        .expect("core exists");

    for (i, c) in piece[..core_start].char_indices() {
        if is_open_paren_char(c) || is_close_paren_char(c) {
            push(out, text, start + i, start + i + c.len_utf8());
        }
    }
    push(out, text, start + core_start, start + core_end);
    emit_trailing(text, start + core_end, end, out);
}

fn emit_trailing(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    for (i, c) in text[start..end].char_indices() {
        if is_open_paren_char(c) || is_close_paren_char(c) || is_terminator_char(c) {
            push(out, text, start + i, start + i + c.len_utf8());
        }
    }
}

fn tokenize_chars(text: &str, out: &mut Vec<Token>) {
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let end = i + c.len_utf8();
        if c.is_alphanumeric() && !is_cjk(c) {
            run_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = run_start.take() {
            push(out, text, s, i);
        }
        if is_cjk(c)
            || is_open_paren_char(c)
            || is_close_paren_char(c)
            || is_terminator_char(c)
        {
            push(out, text, i, end);
        }
    }
    if let Some(s) = run_start {
        push(out, text, s, text.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text, &LanguageProfile::english())
            .iter()
            .map(|t| t.surface.clone())
            .collect()
    }

    #[test]
    fn parenthetical_sentence() {
        assert_eq!(
            surfaces("Eastern Daylight Time (EDT) zone"),
            ["Eastern", "Daylight", "Time", "(", "EDT", ")", "zone"]
        );
    }

    #[test]
    fn empty_input() {
        assert!(surfaces("").is_empty());
        assert!(surfaces("   \n\t").is_empty());
    }

    #[test]
    fn internal_hyphen_kept() {
        assert_eq!(surfaces("a-b c"), ["a-b", "c"]);
    }

    #[test]
    fn rule_table() {
        // One row per rule of the module-level table.
        let cases: &[(&str, &[&str])] = &[
            ("(EDT),", &["(", "EDT", ")"]),
            ("\"quoted\"", &["quoted"]),
            ("end.", &["end", "."]),
            ("really?!", &["really", "?", "!"]),
            ("U.S.", &["U.S", "."]),
            ("AT&T's", &["AT&T's"]),
            ("(12)", &["(", "12", ")"]),
            ("( x )", &["(", "x", ")"]),
            ("...", &[".", ".", "."]),
            ("--", &[]),
            ("[ref]", &["ref"]),
            ("（EDT）", &["（", "EDT", "）"]),
        ];
        for (input, expected) in cases {
            assert_eq!(&surfaces(input), expected, "input {input:?}");
        }
    }

    #[test]
    fn offsets_point_at_surfaces() {
        let text = "Über (naïve) café.";
        let toks = tokenize(text, &LanguageProfile::english());
        for t in &toks {
            assert_eq!(&text[t.char_start..t.char_end], t.surface);
        }
    }

    #[test]
    fn japanese_characters() {
        let ja = LanguageProfile::for_code("ja").unwrap();
        let toks: Vec<_> = tokenize("日本放送協会（NHK）は、放送局。", &ja)
            .iter()
            .map(|t| t.surface.clone())
            .collect();
        assert_eq!(
            toks,
            ["日", "本", "放", "送", "協", "会", "（", "NHK", "）", "は", "放", "送", "局", "。"]
        );
    }
}
