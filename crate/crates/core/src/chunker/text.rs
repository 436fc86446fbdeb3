use super::Span;

/// Char-offset view over a string. ASCII content skips the offset table.
pub(crate) struct CharMap<'a> {
    text: &'a str,
    /// Byte offset of every char boundary, `char_len + 1` entries.
    offsets: Option<Vec<usize>>,
}

impl<'a> CharMap<'a> {
    pub fn new(text: &'a str) -> Self {
        let offsets = if text.is_ascii() {
            None
        } else {
            let mut v: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
            v.push(text.len());
            Some(v)
        };
        Self { text, offsets }
    }

    pub fn char_len(&self) -> usize {
        match &self.offsets {
            None => self.text.len(),
            Some(v) => v.len() - 1,
        }
    }

    pub fn byte(&self, char_idx: usize) -> usize {
        match &self.offsets {
            None => char_idx,
            Some(v) => v[char_idx],
        }
    }

    pub fn slice(&self, span: Span) -> &'a str {
        &self.text[self.byte(span.start)..self.byte(span.end)]
    }
}
