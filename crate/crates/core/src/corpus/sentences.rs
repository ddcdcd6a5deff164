//! Sentence splitting.

pub trait SentenceSplitter: Send + Sync {
    /// Byte ranges of each sentence in `text`, in order, trimmed of
    /// surrounding whitespace.
    fn split_spans(&self, text: &str) -> Vec<(usize, usize)>;

    fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        self.split_spans(text).into_iter().map(|(a, b)| &text[a..b]).collect()
    }
}

/// Splits after `.`, `!` or `?` when the next character is whitespace.
#[derive(Debug, Default, Clone, Copy)]
pub struct PunctuationSplitter;

impl SentenceSplitter for PunctuationSplitter {
    fn split_spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut start = None;
        let mut chars = text.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if start.is_none() && !c.is_whitespace() {
                start = Some(i);
            }
            if matches!(c, '.' | '!' | '?') {
                let at_break = chars.peek().is_none_or(|&(_, n)| n.is_whitespace());
                if at_break {
                    if let Some(s) = start.take() {
                        spans.push((s, i + c.len_utf8()));
                    }
                }
            }
        }
        if let Some(s) = start {
            let end = text.trim_end().len();
            if end > s {
                spans.push((s, end));
            }
        }
        spans
    }
}

pub fn split_sentences(text: &str) -> Vec<&str> {
    PunctuationSplitter.split(text)
}
