//! Line-oriented, indentation-driven splitter for Python-style code.
//!
//! A declaration starts at a line whose first token is `class`, `def` or
//! `async def` (preceded by any decorator lines) and extends until the next
//! significant line at equal or lesser indentation. Lines that begin inside
//! an open bracket, a multi-line string, or after a backslash continuation
//! never start or end a declaration, so multi-line signatures and
//! docstrings with column-0 text stay attached to their owner.
//!
//! Per top-level class: one `class_header` chunk (decorators, signature,
//! docstring, class attributes and, when it is the first method, the
//! constructor) followed by one `method` chunk per remaining method.
//! Class-level statements between methods travel with the preceding method.
//! Nested classes are not split. Module-level functions become `function`
//! chunks; everything else is window-chunked with the fallback parameters.

use std::sync::LazyLock;

use regex::Regex;

use super::{finalize, window_spans, CharMap, Chunk, ChunkMeta, Span, StructuralKind};
use super::{CODE_FALLBACK_OVERLAP, CODE_FALLBACK_WINDOW};
use crate::error::Result;
use crate::ingest::Document;

static DEF_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:async\s+)?def\s+([^\W\d]\w*)").unwrap());
static CLASS_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^class\s+([^\W\d]\w*)").unwrap());

const TAB_WIDTH: usize = 8;

#[derive(Debug)]
struct Line<'a> {
    /// Char offsets, `end` excludes the newline.
    start: usize,
    end: usize,
    indent: usize,
    body: &'a str,
    blank: bool,
    comment: bool,
    continuation: bool,
}

impl Line<'_> {
    fn significant(&self) -> bool {
        !self.blank && !self.comment && !self.continuation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DeclKind {
    Class,
    Def,
}

#[derive(Debug)]
struct Decl {
    kind: DeclKind,
    name: String,
    /// First line, including decorators.
    start: usize,
    header: usize,
    /// Last line, inclusive.
    end: usize,
}

/// Splits `content` into lines and tracks bracket depth and string state
/// across them to flag continuation lines.
fn scan_lines(content: &str) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    let mut depth = 0usize;
    let mut string: Option<(char, bool)> = None;
    let mut backslash = false;
    let mut char_pos = 0usize;

    for raw in content.split('\n') {
        let continuation = depth > 0 || string.is_some() || backslash;
        backslash = false;

        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        let mut comment_at = None;
        while i < chars.len() {
            let c = chars[i];
            if let Some((q, triple)) = string {
                if c == '\\' {
                    i += 2;
                    continue;
                }
                if c == q {
                    if !triple {
                        string = None;
                    } else if chars.get(i + 1) == Some(&q) && chars.get(i + 2) == Some(&q) {
                        string = None;
                        i += 2;
                    }
                }
            } else {
                match c {
                    '#' => {
                        comment_at = Some(i);
                        break;
                    }
                    '"' | '\'' => {
                        if chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c) {
                            string = Some((c, true));
                            i += 2;
                        } else {
                            string = Some((c, false));
                        }
                    }
                    '(' | '[' | '{' => depth += 1,
                    ')' | ']' | '}' => depth = depth.saturating_sub(1),
                    _ => {}
                }
            }
            i += 1;
        }
        if comment_at.is_none() && string.is_none() {
            backslash = raw.trim_end().ends_with('\\');
        }
        if matches!(string, Some((_, false))) {
            // unterminated single-line string
            string = None;
        }

        let mut indent = 0;
        for c in raw.chars() {
            match c {
                ' ' => indent += 1,
                '\t' => indent = (indent / TAB_WIDTH + 1) * TAB_WIDTH,
                _ => break,
            }
        }
        let body = raw.trim();
        let blank = body.is_empty();
        let len = chars.len();
        lines.push(Line {
            start: char_pos,
            end: char_pos + len,
            indent,
            body,
            blank,
            comment: !continuation && body.starts_with('#'),
            continuation,
        });
        char_pos += len + 1;
    }
    lines
}

fn header_of(line: &Line<'_>) -> Option<(DeclKind, String)> {
    if let Some(c) = CLASS_RE.captures(line.body) {
        return Some((DeclKind::Class, c[1].to_string()));
    }
    DEF_RE.captures(line.body).map(|c| (DeclKind::Def, c[1].to_string()))
}

/// Last line of the declaration whose header is at `header`.
fn extent_end(lines: &[Line<'_>], header: usize, indent: usize, hi: usize) -> usize {
    let stop = (header + 1..hi)
        .find(|&k| lines[k].significant() && lines[k].indent <= indent)
        .unwrap_or(hi);
    (header + 1..stop)
        .rev()
        .find(|&k| !lines[k].blank && !(lines[k].comment && lines[k].indent <= indent))
        .unwrap_or(header)
}

/// Declarations whose header sits at exactly `indent` within `lo..hi`.
fn find_decls(lines: &[Line<'_>], lo: usize, hi: usize, indent: usize) -> Vec<Decl> {
    let mut decls = Vec::new();
    let mut decorators: Option<usize> = None;
    let mut i = lo;
    while i < hi {
        let line = &lines[i];
        if !line.significant() {
            i += 1;
            continue;
        }
        if line.indent != indent {
            if line.indent < indent {
                decorators = None;
            }
            i += 1;
            continue;
        }
        if line.body.starts_with('@') {
            decorators.get_or_insert(i);
            i += 1;
            continue;
        }
        if let Some((kind, name)) = header_of(line) {
            let end = extent_end(lines, i, indent, hi);
            decls.push(Decl {
                kind,
                name,
                start: decorators.take().unwrap_or(i),
                header: i,
                end,
            });
            i = end + 1;
            continue;
        }
        decorators = None;
        i += 1;
    }
    decls
}

fn last_nonblank(lines: &[Line<'_>], lo: usize, hi_inclusive: usize) -> usize {
    (lo..=hi_inclusive).rev().find(|&k| !lines[k].blank).unwrap_or(lo)
}

fn line_span(lines: &[Line<'_>], first: usize, last: usize) -> Span {
    Span::new(lines[first].start, lines[last].end)
}

struct Piece {
    first: usize,
    last: usize,
    kind: StructuralKind,
    symbol: Option<String>,
    parent: Option<String>,
}

fn class_pieces(lines: &[Line<'_>], class: &Decl, out: &mut Vec<Piece>) {
    let class_indent = lines[class.header].indent;
    let body_indent = (class.header + 1..=class.end)
        .find(|&k| lines[k].significant())
        .map(|k| lines[k].indent)
        .filter(|&ind| ind > class_indent);

    let methods: Vec<Decl> = match body_indent {
        Some(ind) => find_decls(lines, class.header + 1, class.end + 1, ind)
            .into_iter()
            .filter(|d| d.kind == DeclKind::Def)
            .collect(),
        None => Vec::new(),
    };

    // Each method owns everything up to the next method's first line.
    let regions: Vec<(usize, usize)> = methods
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let last = match methods.get(j + 1) {
                Some(next) => last_nonblank(lines, m.start, next.start - 1),
                None => class.end,
            };
            (m.start, last)
        })
        .collect();

    let ctor_first = methods.first().is_some_and(|m| m.name == "__init__");
    let header_last = match (methods.first(), ctor_first) {
        (None, _) => class.end,
        (Some(_), true) => regions[0].1,
        (Some(first), false) => last_nonblank(lines, class.start, first.start - 1),
    };
    out.push(Piece {
        first: class.start,
        last: header_last,
        kind: StructuralKind::ClassHeader,
        symbol: Some(class.name.clone()),
        parent: None,
    });

    let skip = usize::from(ctor_first);
    for (m, &(first, last)) in methods.iter().zip(&regions).skip(skip) {
        out.push(Piece {
            first,
            last,
            kind: StructuralKind::Method,
            symbol: Some(m.name.clone()),
            parent: Some(class.name.clone()),
        });
    }
}

/// Structural split with the default code fallback window.
pub fn split_code_structure(doc: &Document) -> Vec<Chunk> {
    split_with_fallback(doc, CODE_FALLBACK_WINDOW, CODE_FALLBACK_OVERLAP).expect("default fallback window is valid")
}

pub(crate) fn split_with_fallback(doc: &Document, window: usize, overlap: usize) -> Result<Vec<Chunk>> {
    let map = CharMap::new(&doc.content);
    let lines = scan_lines(&doc.content);

    let base = lines.iter().filter(|l| l.significant()).map(|l| l.indent).min();
    let decls = match base {
        Some(base) => find_decls(&lines, 0, lines.len(), base),
        None => Vec::new(),
    };
    if decls.is_empty() {
        return super::chunk_fixed(doc, window, overlap);
    }

    let mut pieces = Vec::new();
    for d in &decls {
        match d.kind {
            DeclKind::Class => class_pieces(&lines, d, &mut pieces),
            DeclKind::Def => pieces.push(Piece {
                first: d.start,
                last: d.end,
                kind: StructuralKind::Function,
                symbol: Some(d.name.clone()),
                parent: None,
            }),
        }
    }

    let mut out: Vec<(Span, ChunkMeta)> = Vec::new();
    let oversize = 2 * window;
    for p in pieces {
        let span = line_span(&lines, p.first, p.last);
        let meta = ChunkMeta {
            structural_kind: p.kind,
            symbol_name: p.symbol,
            parent_symbol: p.parent,
            source_kind: doc.kind,
        };
        if span.len() > oversize {
            for w in window_spans(span.len(), window, overlap)? {
                out.push((Span::new(span.start + w.start, span.start + w.end), meta.clone()));
            }
        } else {
            out.push((span, meta));
        }
    }

    // Top-level remainder: maximal runs of lines outside every declaration.
    let mut covered = vec![false; lines.len()];
    for d in &decls {
        covered[d.start..=d.end].iter_mut().for_each(|c| *c = true);
    }
    let mut k = 0;
    while k < lines.len() {
        if covered[k] || lines[k].blank {
            k += 1;
            continue;
        }
        let first = k;
        while k < lines.len() && !covered[k] {
            k += 1;
        }
        let last = last_nonblank(&lines, first, k - 1);
        let run = line_span(&lines, first, last);
        for w in window_spans(run.len(), window, overlap)? {
            out.push((
                Span::new(run.start + w.start, run.start + w.end),
                ChunkMeta::window(doc.kind),
            ));
        }
    }

    Ok(finalize(doc, &map, out))
}
