//! Text formats for trees.
//!
//! * compact: preorder child counts separated by whitespace, e.g. `2 0 0`
//! * nested: JSON-style nested arrays where a vertex is the array of its
//!   children, e.g. `[[],[]]`

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Tree;
use crate::error::{Error, Result};

fn parse_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

/// Collects vertices in preorder and converts them to level order.
struct PreorderSink {
    counts: Vec<u32>,
    depths: Vec<usize>,
    leaf_depth: Option<usize>,
}

impl PreorderSink {
    fn new() -> Self {
        Self { counts: Vec::new(), depths: Vec::new(), leaf_depth: None }
    }

    fn push(&mut self, count: u32, depth: usize, offset: usize) -> Result<()> {
        if count == 0 {
            match self.leaf_depth {
                None => self.leaf_depth = Some(depth),
                Some(d) if d != depth => {
                    return Err(parse_error(
                        offset,
                        format!("leaf at depth {depth}, earlier leaves are at depth {d}"),
                    ))
                }
                _ => {}
            }
        } else if self.leaf_depth.is_some_and(|d| depth >= d) {
            return Err(parse_error(offset, "internal vertex at or below the leaf depth"));
        }
        self.counts.push(count);
        self.depths.push(depth);
        Ok(())
    }

    fn into_tree(self) -> Result<Tree> {
        // Stable sort by depth of preorder positions yields level order.
        let mut order: Vec<usize> = (0..self.counts.len()).collect();
        order.sort_by_key(|&i| self.depths[i]);
        let level_counts: Vec<u32> = order.iter().map(|&i| self.counts[i]).collect();
        Tree::from_level_counts(&level_counts)
    }
}

impl Tree {
    /// Compact preorder child-count list.
    pub fn to_preorder_string(&self) -> String {
        let mut out = String::with_capacity(self.len() * 2);
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&self.child_count(v).to_string());
            stack.extend(self.children(v).rev());
        }
        out
    }

    pub fn from_preorder_str(text: &str) -> Result<Self> {
        let mut tokens = text
            .char_indices()
            .filter(|(i, c)| !c.is_whitespace() && (*i == 0 || text[..*i].ends_with(char::is_whitespace)))
            .map(|(start, _)| {
                let len = text[start..].find(char::is_whitespace).unwrap_or(text.len() - start);
                (start, &text[start..start + len])
            });
        let mut sink = PreorderSink::new();
        // remaining children to read for each open vertex
        let mut open: Vec<u32> = Vec::new();
        let mut started = false;
        loop {
            if started && open.is_empty() {
                break;
            }
            let Some((offset, tok)) = tokens.next() else {
                return Err(parse_error(text.len(), "unexpected end of input"));
            };
            let count: u32 = tok
                .parse()
                .map_err(|_| parse_error(offset, format!("expected a child count, found `{tok}`")))?;
            started = true;
            sink.push(count, open.len(), offset)?;
            if let Some(top) = open.last_mut() {
                *top -= 1;
            }
            open.push(count);
            while open.last() == Some(&0) {
                open.pop();
            }
        }
        if let Some((offset, tok)) = tokens.next() {
            return Err(parse_error(offset, format!("trailing input `{tok}`")));
        }
        sink.into_tree()
    }

    /// Nested-array form.
    pub fn to_nested_json(&self) -> String {
        let mut out = String::with_capacity(self.len() * 3);
        // (vertex, next child offset)
        let mut stack: Vec<(usize, usize)> = vec![(self.root(), 0)];
        out.push('[');
        while let Some((v, i)) = stack.last_mut() {
            let kids = self.children(*v);
            if *i < kids.len() {
                if *i > 0 {
                    out.push(',');
                }
                let c = kids.start + *i;
                *i += 1;
                out.push('[');
                stack.push((c, 0));
            } else {
                out.push(']');
                stack.pop();
            }
        }
        out
    }

    pub fn from_nested_json(text: &str) -> Result<Self> {
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let skip_ws = |pos: &mut usize| {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        };
        let mut sink = PreorderSink::new();
        // for each open array: (sink index, children seen, offset)
        let mut open: Vec<(usize, u32)> = Vec::new();
        skip_ws(&mut pos);
        if bytes.get(pos) != Some(&b'[') {
            return Err(parse_error(pos, "expected `[`"));
        }
        let mut pending: Vec<(usize, usize)> = Vec::new(); // (sink index, offset)
        // Counts are only known when an array closes, so record placeholders.
        sink.counts.push(0);
        sink.depths.push(0);
        pending.push((0, pos));
        open.push((0, 0));
        pos += 1;
        loop {
            skip_ws(&mut pos);
            match bytes.get(pos) {
                Some(b'[') => {
                    let (_, seen) = open.last().expect("inside an array");
                    if *seen > 0 {
                        return Err(parse_error(pos, "expected `,` or `]`"));
                    }
                    Self::open_child(&mut sink, &mut open, &mut pending, pos);
                    pos += 1;
                }
                Some(b',') => {
                    let (_, seen) = open.last().expect("inside an array");
                    if *seen == 0 {
                        return Err(parse_error(pos, "unexpected `,`"));
                    }
                    pos += 1;
                    skip_ws(&mut pos);
                    if bytes.get(pos) != Some(&b'[') {
                        return Err(parse_error(pos, "expected `[` after `,`"));
                    }
                    Self::open_child(&mut sink, &mut open, &mut pending, pos);
                    pos += 1;
                }
                Some(b']') => {
                    let (idx, seen) = open.pop().expect("inside an array");
                    sink.counts[idx] = seen;
                    pos += 1;
                    if open.is_empty() {
                        break;
                    }
                }
                Some(_) => return Err(parse_error(pos, "unexpected character")),
                None => return Err(parse_error(pos, "unexpected end of input")),
            }
        }
        skip_ws(&mut pos);
        if pos < bytes.len() {
            return Err(parse_error(pos, "trailing input"));
        }
        // Validate leaf depths now that counts are known.
        let mut checked = PreorderSink::new();
        for (i, &(idx, offset)) in pending.iter().enumerate() {
            debug_assert_eq!(i, idx);
            checked.push(sink.counts[idx], sink.depths[idx], offset)?;
        }
        checked.into_tree()
    }

    fn open_child(
        sink: &mut PreorderSink,
        open: &mut Vec<(usize, u32)>,
        pending: &mut Vec<(usize, usize)>,
        offset: usize,
    ) {
        let depth = open.len();
        open.last_mut().expect("inside an array").1 += 1;
        let idx = sink.counts.len();
        sink.counts.push(0);
        sink.depths.push(depth);
        pending.push((idx, offset));
        open.push((idx, 0));
    }
}

impl Serialize for Tree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_preorder_string())
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Tree::from_preorder_str(&text).map_err(serde::de::Error::custom)
    }
}
