//! Document ingestion, tokenization and the co-occurrence index.

mod index;
mod io;
mod sentences;
mod tokenize;

pub use index::{CorpusIndex, PairCounts};
pub use io::{load_corpus, parse_jsonl, read_jsonl, read_text_dir};
pub use sentences::{split_sentences, Span};
pub use tokenize::{
    is_close_paren, is_open_paren, is_paren, is_structural, is_terminator, tokenize, Token,
    TokenSequence,
};

use crate::{Error, Result};

/// How a language's text is cut into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenMode {
    /// Whitespace-delimited words with edge punctuation stripped.
    WhitespacePunct,
    /// One token per CJK character; other letter/digit runs stay whole.
    CharNgram,
}

/// Per-language case and segmentation rules.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LanguageProfile {
    code: String,
    case_sensitive: bool,
    token_mode: TokenMode,
}

impl LanguageProfile {
    pub fn new(code: &str, case_sensitive: bool, token_mode: TokenMode) -> Result<Self> {
        if code.trim().is_empty() {
            return Err(Error::Config("language code must be non-empty".into()));
        }
        if token_mode == TokenMode::CharNgram && case_sensitive {
            return Err(Error::Config(format!(
                "language {code}: char_ngram tokenization implies a case-insensitive script"
            )));
        }
        Ok(Self {
            code: code.to_string(),
            case_sensitive,
            token_mode,
        })
    }

    /// Built-in profile for an ISO-639-1 code. Japanese and Chinese use
    /// character tokens; everything else is treated as a cased,
    /// whitespace-delimited script.
    pub fn for_code(code: &str) -> Result<Self> {
        match code {
            "ja" | "zh" => Self::new(code, false, TokenMode::CharNgram),
            _ => Self::new(code, true, TokenMode::WhitespacePunct),
        }
    }

    pub fn english() -> Self {
        Self::for_code("en").expect("built-in profile")
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn case_sensitive(&self) -> bool {
        self.case_sensitive
    }

    pub fn token_mode(&self) -> TokenMode {
        self.token_mode
    }

    /// Canonical spelling of a short-form: kept as written in cased
    /// scripts, lowercased otherwise.
    pub fn normalize_short_form(&self, sf: &str) -> String {
        if self.case_sensitive {
            sf.trim().to_string()
        } else {
            sf.trim().to_lowercase()
        }
    }

    /// Canonical spelling of a long-form given as tokens.
    pub fn join_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> String {
        let sep = match self.token_mode {
            TokenMode::WhitespacePunct => " ",
            TokenMode::CharNgram => "",
        };
        tokens
            .iter()
            .map(|t| t.as_ref().to_lowercase())
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// Word tokens of a long-form string, structural punctuation removed.
    pub fn long_form_tokens(&self, lf: &str) -> Vec<String> {
        tokenize(lf, self)
            .iter()
            .filter(|t| !is_structural(&t.surface))
            .map(|t| t.surface.clone())
            .collect()
    }

    /// Canonical spelling of a long-form given as raw text.
    pub fn normalize_long_form(&self, lf: &str) -> String {
        self.join_tokens(&self.long_form_tokens(lf))
    }
}

/// A tokenized, sentence-split unit of text.
#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub tokens: TokenSequence,
    pub sentences: Vec<Span>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, profile: &LanguageProfile) -> Self {
        let text = text.into();
        let tokens = tokenize(&text, profile);
        let sentences = split_sentences(&tokens);
        Self {
            doc_id: doc_id.into(),
            text,
            tokens,
            sentences,
        }
    }

    pub fn sentence_tokens(&self, span: Span) -> &[Token] {
        &self.tokens.as_slice()[span.start..span.end]
    }
}

/// A set of documents sharing one language profile.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub profile: LanguageProfile,
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn from_texts<I, S, T>(profile: LanguageProfile, docs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let documents = docs
            .into_iter()
            .map(|(id, text)| Document::new(id, text, &profile))
            .collect();
        Self { profile, documents }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}
