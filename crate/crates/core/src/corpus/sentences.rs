use super::tokenize::{is_close_paren, is_open_paren, is_terminator, TokenSequence};

/// Half-open token index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, idx: usize) -> bool {
        (self.start..self.end).contains(&idx)
    }
}

/// Splits after sentence-final punctuation outside parentheses. A run of
/// terminators (`?!`, `...`) closes a single sentence. The spans partition
/// the token sequence.
pub fn split_sentences(tokens: &TokenSequence) -> Vec<Span> {
    let toks = tokens.as_slice();
    let mut spans = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, tok) in toks.iter().enumerate() {
        let s = tok.surface.as_str();
        if is_open_paren(s) {
            depth += 1;
        } else if is_close_paren(s) {
            depth = depth.saturating_sub(1);
        } else if depth == 0 && is_terminator(s) {
            let next_is_terminator = toks.get(i + 1).is_some_and(|t| is_terminator(&t.surface));
            if !next_is_terminator {
                spans.push(Span { start, end: i + 1 });
                start = i + 1;
            }
        }
    }
    if start < toks.len() {
        spans.push(Span {
            start,
            end: toks.len(),
        });
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, LanguageProfile};

    fn split(text: &str) -> Vec<Vec<String>> {
        let toks = tokenize(text, &LanguageProfile::english());
        split_sentences(&toks)
            .into_iter()
            .map(|s| {
                toks.as_slice()[s.start..s.end]
                    .iter()
                    .map(|t| t.surface.clone())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_sentences() {
        assert_eq!(split("A b. C d."), [vec!["A", "b", "."], vec!["C", "d", "."]]);
    }

    #[test]
    fn no_terminal_punctuation() {
        assert_eq!(split("A b C"), [vec!["A", "b", "C"]]);
        assert!(split("").is_empty());
    }

    #[test]
    fn parenthetical_period_does_not_split() {
        assert_eq!(
            split("A (B. C) d."),
            [vec!["A", "(", "B", ".", "C", ")", "d", "."]]
        );
    }

    #[test]
    fn terminator_runs() {
        assert_eq!(split("Wait... what?! Ok"), [
            vec!["Wait", ".", ".", "."],
            vec!["what", "?", "!"],
            vec!["Ok"]
        ]);
    }

    #[test]
    fn unbalanced_close_paren() {
        assert_eq!(split("a) b. c"), [vec!["a", ")", "b", "."], vec!["c"]]);
    }

    #[test]
    fn japanese_full_stop() {
        let ja = LanguageProfile::for_code("ja").unwrap();
        let toks = tokenize("日本。東京。", &ja);
        assert_eq!(split_sentences(&toks), [Span { start: 0, end: 3 }, Span { start: 3, end: 6 }]);
    }
}
