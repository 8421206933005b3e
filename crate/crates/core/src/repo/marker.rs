//! Insertion-point anchors: lines of the form `### PF-MARKER: <name> ###`.

use std::ops::Range;
use std::sync::LazyLock;

use regex::bytes::Regex;

/// The substring every marker line contains.
pub const SENTINEL: &str = "PF-MARKER";

static MARKER_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*### PF-MARKER: ([A-Za-z0-9_.-]+) ###[ \t]*\r?$").expect("marker regex"));

/// The marker line for `name`, without a newline.
pub fn marker_line(name: &str) -> String {
    format!("### {SENTINEL}: {name} ###")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerHit {
    pub name: String,
    /// Byte range of the whole line, including its newline if there is one.
    pub line: Range<usize>,
}

pub fn find_markers(content: &[u8]) -> Vec<MarkerHit> {
    MARKER_LINE
        .captures_iter(content)
        .map(|caps| {
            let whole = caps.get(0).expect("group 0");
            let mut end = whole.end();
            if content.get(end) == Some(&b'\n') {
                end += 1;
            }
            MarkerHit {
                name: String::from_utf8_lossy(caps.get(1).expect("name group").as_bytes()).into_owned(),
                line: whole.start()..end,
            }
        })
        .collect()
}

pub fn contains_sentinel(content: &[u8]) -> bool {
    content.windows(SENTINEL.len()).any(|w| w == SENTINEL.as_bytes())
}
