//! Identifier-aware tokenizer shared by indexing and querying.
//!
//! Text is split on every character that is neither alphanumeric nor `_`.
//! Each resulting word is lowercased and emitted; if it is a compound
//! identifier (underscores or camel-case humps) its parts are emitted after
//! it. Tokens shorter than two characters are dropped unless the whole
//! input is shorter than that.

fn split_camel(segment: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = segment.chars().collect();
    let mut start = 0;
    for i in 1..chars.len() {
        let (prev, cur) = (chars[i - 1], chars[i]);
        let lower_to_upper = (prev.is_lowercase() || prev.is_numeric()) && cur.is_uppercase();
        let acronym_end =
            prev.is_uppercase() && cur.is_uppercase() && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
        if lower_to_upper || acronym_end {
            out.push(chars[start..i].iter().collect());
            start = i;
        }
    }
    if start < chars.len() {
        out.push(chars[start..].iter().collect());
    }
}

/// Sub-parts of an identifier in original case, e.g. `applyGate_v2` ->
/// `apply`, `Gate`, `v2`.
pub fn identifier_parts(word: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for segment in word.split('_').filter(|s| !s.is_empty()) {
        split_camel(segment, &mut parts);
    }
    parts
}

pub fn tokenize(text: &str) -> Vec<String> {
    let keep_short = text.chars().count() < 2;
    let keep = |t: &str| keep_short || t.chars().count() >= 2;
    let mut tokens = Vec::new();

    for word in text.split(|c: char| !(c.is_alphanumeric() || c == '_')) {
        if !word.chars().any(char::is_alphanumeric) {
            continue;
        }
        let whole = word.to_lowercase();
        let parts = identifier_parts(word);
        let compound = parts.len() > 1 || parts.first().is_some_and(|p| p.to_lowercase() != whole);
        if keep(&whole) {
            tokens.push(whole);
        }
        if compound {
            tokens.extend(parts.iter().map(|p| p.to_lowercase()).filter(|p| keep(p)));
        }
    }
    tokens
}
