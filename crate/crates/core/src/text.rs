//! Shared lexical utilities: word tokenization, sentence segmentation,
//! and the word-count definition used by scoring and qualitative coding.

/// A word token with character offsets into the source text.
///
/// `normalized` is lowercase with curly apostrophes folded to `'`, so banned
/// forms like `isn't` compare against a single canonical spelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordToken {
    pub normalized: String,
    /// Character (not byte) offset of the first char.
    pub start: usize,
    /// Character offset one past the last char.
    pub end: usize,
    /// Index of the sentence this token belongs to.
    pub sentence: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\n')
}

/// Tokenize into lowercase word tokens.
///
/// A token is a maximal run of alphanumeric characters, where an apostrophe
/// joins the run only when flanked by alphanumerics on both sides (so
/// "isn't" stays one token while a quote in `'word'` does not attach).
/// Hyphens always split. Sentence indices advance on `.`, `!`, `?`, and
/// newline, so bigram exemptions never reach across a sentence boundary.
pub fn tokenize(text: &str) -> Vec<WordToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    let mut sentence = 0usize;

    let flush = |current: &mut String, start: usize, end: usize, sentence: usize, out: &mut Vec<WordToken>| {
        if !current.is_empty() {
            out.push(WordToken {
                normalized: current.clone(),
                start,
                end,
                sentence,
            });
            current.clear();
        }
    };

    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if is_word_char(c) {
            if current.is_empty() {
                start = i;
            }
            current.extend(c.to_lowercase());
            i += 1;
        } else if is_apostrophe(c)
            && !current.is_empty()
            && i + 1 < chars.len()
            && is_word_char(chars[i + 1])
        {
            current.push('\'');
            i += 1;
        } else {
            flush(&mut current, start, i, sentence, &mut tokens);
            if is_sentence_end(c) {
                sentence += 1;
            }
            i += 1;
        }
    }
    flush(&mut current, start, chars.len(), sentence, &mut tokens);
    tokens
}

/// Number of sentences that contain at least one word token.
pub fn sentence_count(tokens: &[WordToken]) -> usize {
    let mut count = 0usize;
    let mut last: Option<usize> = None;
    for t in tokens {
        if last != Some(t.sentence) {
            count += 1;
            last = Some(t.sentence);
        }
    }
    count
}

/// Word count: whitespace-delimited tokens after stripping markdown emphasis
/// markers (`*` and `_`). Other markdown syntax counts as written.
pub fn word_count(text: &str) -> usize {
    text.chars()
        .filter(|&c| c != '*' && c != '_')
        .collect::<String>()
        .split_whitespace()
        .count()
}

/// ±`window`-char context excerpt around a character span.
pub fn context_window(text: &str, start: usize, end: usize, window: usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    let lo = start.saturating_sub(window);
    let hi = (end + window).min(chars.len());
    chars[lo..hi].iter().collect()
}
