//! Text mining over CVE descriptions: which tracked products are named,
//! which versions are affected, which functions are blamed.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Relation, VersionConstraint};
use crate::fingerprint::SignatureSet;
use crate::version::Version;

/// Words that put the affected versions at or below the mentioned one.
const BEFORE_WORDS: [&str; 7] = [
    "before", "prior", "earlier", "through", "older", "below", "lower",
];
/// Words that put the affected versions at or above the mentioned one.
const AFTER_WORDS: [&str; 7] = [
    "after",
    "following",
    "successive",
    "later",
    "newer",
    "above",
    "higher",
];

pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiningOptions {
    /// Tokens inspected on each side of a version token.
    pub window: usize,
    /// Read BEFORE-class words as strictly below (`<`) instead of `<=`.
    pub strict_before: bool,
}

impl Default for MiningOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            strict_before: false,
        }
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-'
}

/// Case-insensitive whole-word search. `_` and `-` count as word
/// characters, so `libpng-like` does not mention `libpng`.
pub fn mentions(text: &str, name: &str) -> bool {
    let hay = text.as_bytes();
    let needle = name.as_bytes();
    if needle.is_empty() || needle.len() > hay.len() {
        return false;
    }
    (0..=hay.len() - needle.len()).any(|at| {
        hay[at..at + needle.len()].eq_ignore_ascii_case(needle)
            && (at == 0 || !is_word_byte(hay[at - 1]))
            && hay.get(at + needle.len()).is_none_or(|&b| !is_word_byte(b))
    })
}

/// Tracked products named in `description` (canonical name or alias), in
/// signature order.
pub fn detect_product(description: &str, products: &SignatureSet) -> Vec<String> {
    products
        .iter()
        .filter(|sig| sig.names().any(|n| mentions(description, n)))
        .map(|sig| sig.product.clone())
        .collect()
}

fn clean_token(raw: &str) -> &str {
    raw.trim_start_matches(['(', '[', '{', '"', '\'', '<', '`'])
        .trim_end_matches([
            '.', ',', ';', ':', '!', '?', ')', ']', '}', '"', '\'', '>', '`',
        ])
}

fn version_token(token: &str) -> Option<Version> {
    let token = clean_token(token);
    let token = match token.strip_prefix(['v', 'V']) {
        Some(rest) if rest.starts_with(|c: char| c.is_ascii_digit()) => rest,
        _ => token,
    };
    let (version, used) = Version::scan_prefix(token)?;
    (used == token.len()).then_some(version)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum WordClass {
    Before,
    After,
}

fn word_class(token: &str) -> Option<WordClass> {
    let word = clean_token(token).to_ascii_lowercase();
    if BEFORE_WORDS.contains(&word.as_str()) {
        Some(WordClass::Before)
    } else if AFTER_WORDS.contains(&word.as_str()) {
        Some(WordClass::After)
    } else {
        None
    }
}

/// Version constraints mined from free text.
///
/// Every version token (dotted numerics, optional letter suffix) yields one
/// constraint. A BEFORE-class word within the window makes it `at_most`
/// (or strictly `before`), an AFTER-class word makes it `at_least`,
/// otherwise it is `exactly`. Each relation word binds to the nearest
/// version token, preferring the one it precedes on a tie, so in
/// `1.0.1 before 1.0.1g` only `1.0.1g` is bounded.
pub fn extract_version_constraint(
    description: &str,
    opts: MiningOptions,
) -> Vec<VersionConstraint> {
    let tokens: Vec<&str> = description.split_whitespace().collect();
    let versions: Vec<(usize, Version)> = tokens
        .iter()
        .enumerate()
        .filter_map(|(i, t)| version_token(t).map(|v| (i, v)))
        .collect();
    // (distance, word-precedes-version, class) per version
    let mut bound: Vec<Option<(usize, bool, WordClass)>> = alloc::vec![None; versions.len()];
    for (w, token) in tokens.iter().enumerate() {
        let Some(class) = word_class(token) else {
            continue;
        };
        let mut best: Option<(usize, bool, usize)> = None;
        for (k, (v, _)) in versions.iter().enumerate() {
            let distance = v.abs_diff(w);
            if distance == 0 || distance > opts.window {
                continue;
            }
            let precedes = w < *v;
            let better = match best {
                None => true,
                Some((d, p, _)) => distance < d || (distance == d && precedes && !p),
            };
            if better {
                best = Some((distance, precedes, k));
            }
        }
        if let Some((distance, precedes, k)) = best {
            let replace = match bound[k] {
                None => true,
                Some((d, p, _)) => distance < d || (distance == d && precedes && !p),
            };
            if replace {
                bound[k] = Some((distance, precedes, class));
            }
        }
    }
    let mut out: Vec<VersionConstraint> = Vec::new();
    for ((_, version), binding) in versions.into_iter().zip(bound) {
        let relation = match binding.map(|(_, _, c)| c) {
            Some(WordClass::Before) if opts.strict_before => Relation::Before,
            Some(WordClass::Before) => Relation::AtMost,
            Some(WordClass::After) => Relation::AtLeast,
            None => Relation::Exactly,
        };
        let c = VersionConstraint { relation, version };
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

const SOURCE_EXTENSIONS: [&str; 9] = ["c", "cc", "cpp", "cxx", "h", "hh", "hpp", "m", "mm"];

fn looks_like_identifier(token: &str) -> bool {
    !token.is_empty()
        && token.bytes().any(|b| b.is_ascii_alphabetic())
        && token
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b':' || b == b'~')
        && !token.starts_with(|c: char| c.is_ascii_digit())
}

/// lowerCamelCase with at least two humps: a lowercase head of two or more
/// characters, then an uppercase letter followed by a lowercase one
/// (`makeSum`, `readPixels`; not `iOS`, `macOS`, `OpenSSL`).
fn is_camel_case(token: &str) -> bool {
    let b = token.as_bytes();
    if b.len() < 4 || !b.iter().all(u8::is_ascii_alphanumeric) {
        return false;
    }
    let head = b
        .iter()
        .take_while(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        .count();
    if head < 2 || !b[0].is_ascii_lowercase() {
        return false;
    }
    (head..b.len() - 1).any(|i| b[i].is_ascii_uppercase() && b[i + 1].is_ascii_lowercase())
}

/// Function names mentioned in free text: tokens carrying `_`, `::` or a
/// trailing `()`, and lowerCamelCase words. Source file names
/// (`d1_both.c`) and paths are not functions.
pub fn extract_function_names(description: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for raw in description.split_whitespace() {
        let mut token = raw
            .trim_start_matches(['(', '[', '{', '"', '\'', '<', '`'])
            .trim_end_matches(['.', ',', ';', ':', '!', '?', ']', '}', '"', '\'', '>', '`']);
        let mut called = false;
        if let Some(stripped) = token.strip_suffix("()") {
            token = stripped;
            called = true;
        }
        token = token.trim_end_matches(')');
        if let Some((stem, ext)) = token.rsplit_once('.') {
            if SOURCE_EXTENSIONS.contains(&ext) || stem.contains('/') {
                continue;
            }
        }
        if !looks_like_identifier(token) {
            continue;
        }
        let keep = called || token.contains('_') || token.contains("::") || is_camel_case(token);
        if keep && seen.insert(token.to_string()) {
            out.push(token.to_string());
        }
    }
    out
}
