//! Whitelist association of ELF evidence with known products.
//!
//! Each product carries literal-with-wildcard patterns over extracted
//! strings and function names, plus version patterns with a `{version}`
//! slot. Matching looks only at content, never at the library file name.

mod pattern;
mod signatures;

pub use pattern::{Pattern, VersionPattern};
pub use signatures::{parse_signatures, SignatureError, DEFAULT_SIGNATURES};

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::version::Version;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSignature {
    pub product: String,
    /// Extra names for the product in CVE text and feed product lists.
    pub aliases: Vec<String>,
    pub string_patterns: Vec<Pattern>,
    pub function_patterns: Vec<Pattern>,
    pub version_patterns: Vec<VersionPattern>,
}

impl ProductSignature {
    /// Canonical name followed by aliases.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        core::iter::once(self.product.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

/// Validated set of product signatures, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureSet {
    signatures: Vec<ProductSignature>,
}

impl SignatureSet {
    pub fn new(signatures: Vec<ProductSignature>) -> Result<Self, SignatureError> {
        for (i, sig) in signatures.iter().enumerate() {
            if sig.string_patterns.is_empty() && sig.function_patterns.is_empty() {
                return Err(SignatureError::EmptySignature {
                    product: sig.product.clone(),
                });
            }
            if signatures[..i]
                .iter()
                .any(|s| s.product.eq_ignore_ascii_case(&sig.product))
            {
                return Err(SignatureError::DuplicateProduct {
                    product: sig.product.clone(),
                    line: None,
                });
            }
        }
        Ok(Self { signatures })
    }

    /// The shipped signatures for the fifteen tracked products.
    pub fn default_set() -> Self {
        parse_signatures(DEFAULT_SIGNATURES).expect("shipped signature file is valid")
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ProductSignature> {
        self.signatures.iter()
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn get(&self, product: &str) -> Option<&ProductSignature> {
        self.signatures.iter().find(|s| s.product == product)
    }

    pub fn products(&self) -> Vec<String> {
        self.signatures.iter().map(|s| s.product.clone()).collect()
    }
}

impl<'a> IntoIterator for &'a SignatureSet {
    type Item = &'a ProductSignature;
    type IntoIter = core::slice::Iter<'a, ProductSignature>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStream {
    Strings,
    Functions,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub pattern: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductMatch {
    pub product: String,
    pub version: Option<Version>,
    pub evidence: Vec<Evidence>,
    pub via: MatchStream,
}

/// Function names are also tried wrapped in underscores so that a pattern
/// such as `*_cv_*` sees `cv` as a name component at either end
/// (`cv_resize_impl`).
fn function_matches(pattern: &Pattern, name: &str) -> bool {
    if pattern.matches(name) {
        return true;
    }
    let mut wrapped = String::with_capacity(name.len() + 2);
    wrapped.push('_');
    wrapped.push_str(name);
    wrapped.push('_');
    pattern.matches(&wrapped)
}

/// One match per product with at least one pattern hit. Evidence keeps the
/// first hit of every pattern that fired.
pub fn match_products<S: AsRef<str>, F: AsRef<str>>(
    strings: &[S],
    functions: &[F],
    sigs: &SignatureSet,
) -> Vec<ProductMatch> {
    let mut out = Vec::new();
    for sig in sigs {
        let mut evidence = Vec::new();
        let mut by_strings = false;
        let mut by_functions = false;
        for p in &sig.string_patterns {
            if let Some(hit) = strings.iter().map(AsRef::as_ref).find(|s| p.matches(s)) {
                by_strings = true;
                evidence.push(Evidence {
                    pattern: p.to_string(),
                    text: hit.to_string(),
                });
            }
        }
        for p in &sig.function_patterns {
            if let Some(hit) = functions
                .iter()
                .map(AsRef::as_ref)
                .find(|f| function_matches(p, f))
            {
                by_functions = true;
                evidence.push(Evidence {
                    pattern: p.to_string(),
                    text: hit.to_string(),
                });
            }
        }
        let via = match (by_strings, by_functions) {
            (true, true) => MatchStream::Both,
            (true, false) => MatchStream::Strings,
            (false, true) => MatchStream::Functions,
            (false, false) => continue,
        };
        out.push(ProductMatch {
            product: sig.product.clone(),
            version: extract_version(strings, sig),
            evidence,
            via,
        });
    }
    out
}

/// Re-checks a piece of evidence against its pattern.
pub fn evidence_reproduces(evidence: &Evidence, via_functions: bool) -> bool {
    let p = Pattern::new(&evidence.pattern);
    if via_functions {
        function_matches(&p, &evidence.text)
    } else {
        p.matches(&evidence.text)
    }
}

/// Version patterns are tried in order, each over all strings in order;
/// the first capture wins.
pub fn extract_version<S: AsRef<str>>(strings: &[S], sig: &ProductSignature) -> Option<Version> {
    sig.version_patterns
        .iter()
        .find_map(|p| strings.iter().find_map(|s| p.capture(s.as_ref())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn opencv() -> SignatureSet {
        parse_signatures(
            "product: OpenCV\n\
             strings: *General Configuration for OpenCV*\n\
             functions: *_cv_*\n\
             version: *General Configuration for OpenCV {version}*\n",
        )
        .unwrap()
    }

    #[test]
    fn opencv_banner_matches_with_version() {
        let m = match_products(
            &["junk", "General Configuration for OpenCV 4.1.0"],
            &[] as &[&str],
            &opencv(),
        );
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].product, "OpenCV");
        assert_eq!(m[0].via, MatchStream::Strings);
        assert_eq!(m[0].version.as_ref().unwrap().to_string(), "4.1.0");
    }

    #[test]
    fn opencv_function_component() {
        let m = match_products(&[] as &[&str], &["main", "cv_resize_impl"], &opencv());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].via, MatchStream::Functions);
        assert_eq!(m[0].evidence[0].text, "cv_resize_impl");
        assert!(m[0].version.is_none());
    }

    #[test]
    fn no_hits_no_matches() {
        assert!(match_products(&["hello world"], &["main"], &opencv()).is_empty());
        assert!(match_products(
            &["General Configuration for OpenCV 4.1.0"],
            &["cv_x"],
            &SignatureSet::default()
        )
        .is_empty());
    }

    #[test]
    fn first_version_pattern_wins() {
        let sigs = parse_signatures(
            "product: OpenSSL\n\
             strings: OpenSSL *\n\
             version: OpenSSL {version} *\n\
             version: *OpenSSL {version}\n",
        )
        .unwrap();
        let sig = sigs.get("OpenSSL").unwrap();
        let strings = ["built on OpenSSL 1.1.1k", "OpenSSL 1.0.1f 6 Jan 2014"];
        assert_eq!(
            extract_version(&strings, sig).unwrap().to_string(),
            "1.0.1f"
        );
        let strings = ["OpenSSL 1.0.1f 6 Jan 2014", "OpenSSL 1.0.2k  26 Jan 2017"];
        assert_eq!(
            extract_version(&strings, sig).unwrap().to_string(),
            "1.0.1f"
        );
        assert!(extract_version(&["OpenSSL"], sig).is_none());
    }

    #[test]
    fn multiple_products_retained() {
        let sigs = SignatureSet::default_set();
        let strings = [
            "OpenSSL 1.0.2k  26 Jan 2017",
            " libpng version 1.6.36 - December 1, 2018",
        ];
        let m = match_products(&strings, &["png_read_info"], &sigs);
        let names: Vec<_> = m.iter().map(|m| m.product.as_str()).collect();
        assert_eq!(names, vec!["OpenSSL", "Libpng"]);
    }

    proptest! {
        #[test]
        fn matches_are_subset_and_reproducible(
            strings in proptest::collection::vec("[ -~]{0,40}", 0..12),
            functions in proptest::collection::vec("[a-zA-Z_][a-zA-Z0-9_]{0,20}", 0..12),
            banner in prop_oneof![
                Just(String::new()),
                Just("OpenSSL 1.0.1f 6 Jan 2014".to_string()),
                Just("Lavc58.54.100".to_string()),
                Just(" libpng version 1.6.36 - December 1, 2018".to_string()),
            ],
            symbol in prop_oneof![Just(String::new()), Just("png_read_info".to_string()), Just("sqlite3_open".to_string())],
        ) {
            let sigs = SignatureSet::default_set();
            let mut strings = strings;
            strings.push(banner);
            let mut functions = functions;
            functions.push(symbol);
            let products = sigs.products();
            for m in match_products(&strings, &functions, &sigs) {
                prop_assert!(products.contains(&m.product));
                prop_assert!(!m.evidence.is_empty());
                for e in &m.evidence {
                    let from_strings = strings.iter().any(|s| s == &e.text) && evidence_reproduces(e, false);
                    let from_functions = functions.iter().any(|f| f == &e.text) && evidence_reproduces(e, true);
                    prop_assert!(from_strings || from_functions);
                }
                if let Some(v) = &m.version {
                    let sig = sigs.get(&m.product).unwrap();
                    prop_assert!(sig.version_patterns.iter().any(|p| strings.iter().any(|s| p.capture(s).as_ref() == Some(v))));
                }
            }
        }
    }
}
