use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::version::Version;

const VERSION_SLOT: &str = "{version}";

/// Anchored glob where `*` matches any run of characters (possibly empty)
/// and every other character matches itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    source: String,
    /// Literal pieces between stars.
    parts: Vec<String>,
}

impl Pattern {
    pub fn new(source: &str) -> Self {
        let parts: Vec<String> = source.split('*').map(ToString::to_string).collect();
        Self {
            source: source.to_string(),
            parts,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    pub fn matches(&self, text: &str) -> bool {
        if self.parts.len() == 1 {
            return text == self.parts[0];
        }
        let first = &self.parts[0];
        let last = &self.parts[self.parts.len() - 1];
        if !text.starts_with(first.as_str()) {
            return false;
        }
        let mut rest = &text[first.len()..];
        if rest.len() < last.len() || !rest.ends_with(last.as_str()) {
            return false;
        }
        rest = &rest[..rest.len() - last.len()];
        // middle pieces match greedily left to right; leftmost placement is
        // always safe when the gaps are unconstrained stars
        for mid in &self.parts[1..self.parts.len() - 1] {
            match rest.find(mid.as_str()) {
                Some(at) => rest = &rest[at + mid.len()..],
                None => return false,
            }
        }
        true
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// A glob with exactly one `{version}` slot, e.g. `OpenSSL {version} *`.
///
/// The slot captures a maximal version token; the globs on each side must
/// match the text before and after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionPattern {
    source: String,
    before: Pattern,
    after: Pattern,
}

impl VersionPattern {
    pub fn parse(source: &str) -> Option<Self> {
        let (before, after) = source.split_once(VERSION_SLOT)?;
        if after.contains(VERSION_SLOT) {
            return None;
        }
        Some(Self {
            source: source.to_string(),
            before: Pattern::new(before),
            after: Pattern::new(after),
        })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    /// Leftmost capture, if any.
    pub fn capture(&self, text: &str) -> Option<Version> {
        for (at, _) in text.char_indices() {
            if !text.as_bytes()[at].is_ascii_digit() {
                continue;
            }
            // a capture must start a token, not sit inside a longer number
            if at > 0 && text.as_bytes()[at - 1].is_ascii_digit() {
                continue;
            }
            if !self.before.matches(&text[..at]) {
                continue;
            }
            if let Some((version, used)) = Version::scan_prefix(&text[at..]) {
                if self.after.matches(&text[at + used..]) {
                    return Some(version);
                }
            }
        }
        None
    }
}

impl fmt::Display for VersionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}
