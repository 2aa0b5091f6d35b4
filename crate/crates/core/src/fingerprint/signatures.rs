//! Parser for the signature file format.
//!
//! ```text
//! # comment
//! product: OpenSSL
//! alias: openssl
//! strings: OpenSSL *
//! functions: dtls1_*
//! version: OpenSSL {version} *
//! ```
//!
//! A block starts at `product:` and runs to the next one. `alias`,
//! `strings`, `functions` and `version` take one value per line and may
//! repeat. Values are trimmed; `*` is the only wildcard.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Pattern, ProductSignature, SignatureSet, VersionPattern};

pub const DEFAULT_SIGNATURES: &str = include_str!("../../data/signatures.sig");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("duplicate product `{product}`")]
    DuplicateProduct {
        product: String,
        line: Option<usize>,
    },
    #[error("product `{product}` has neither string nor function patterns")]
    EmptySignature { product: String },
}

pub fn parse_signatures(text: &str) -> Result<SignatureSet, SignatureError> {
    let mut signatures: Vec<ProductSignature> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: &str| SignatureError::ParseError {
            line,
            message: message.to_string(),
        };
        let (key, value) = trimmed
            .split_once(':')
            .ok_or_else(|| err("expected `key: value`"))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(err("empty value"));
        }
        if key == "product" {
            if let Some(prev) = signatures.last() {
                check_nonempty(prev)?;
            }
            if signatures
                .iter()
                .any(|s| s.product.eq_ignore_ascii_case(value))
            {
                return Err(SignatureError::DuplicateProduct {
                    product: value.to_string(),
                    line: Some(line),
                });
            }
            signatures.push(ProductSignature {
                product: value.to_string(),
                aliases: Vec::new(),
                string_patterns: Vec::new(),
                function_patterns: Vec::new(),
                version_patterns: Vec::new(),
            });
            continue;
        }
        let current = signatures
            .last_mut()
            .ok_or_else(|| err("pattern before any `product:` line"))?;
        match key {
            "alias" => current.aliases.push(value.to_string()),
            "strings" => current.string_patterns.push(Pattern::new(value)),
            "functions" => current.function_patterns.push(Pattern::new(value)),
            "version" => current.version_patterns.push(
                VersionPattern::parse(value)
                    .ok_or_else(|| err("version pattern needs exactly one `{version}`"))?,
            ),
            _ => return Err(err("unknown key")),
        }
    }
    if let Some(last) = signatures.last() {
        check_nonempty(last)?;
    }
    SignatureSet::new(signatures)
}

fn check_nonempty(sig: &ProductSignature) -> Result<(), SignatureError> {
    if sig.string_patterns.is_empty() && sig.function_patterns.is_empty() {
        return Err(SignatureError::EmptySignature {
            product: sig.product.clone(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_has_fifteen_products() {
        let set = SignatureSet::default_set();
        assert_eq!(set.len(), 15);
        assert_eq!(
            set.products(),
            [
                "OpenCV",
                "OpenSSL",
                "FFmpeg",
                "Libavcodec",
                "Libavformat",
                "Libswresample",
                "Sqlite 3",
                "LibWebp",
                "Libpng",
                "Libjpeg-turbo",
                "Lua",
                "Mono",
                "Folly",
                "Hermes",
                "React-Native",
            ]
        );
    }

    #[test]
    fn duplicate_product() {
        let text = "product: OpenCV\nstrings: a*\nproduct: OpenCV\nstrings: b*\n";
        assert_eq!(
            parse_signatures(text).unwrap_err(),
            SignatureError::DuplicateProduct {
                product: "OpenCV".into(),
                line: Some(3)
            }
        );
    }

    #[test]
    fn empty_file_is_empty_set() {
        assert!(parse_signatures("").unwrap().is_empty());
        assert!(parse_signatures("# only comments\n\n").unwrap().is_empty());
    }

    #[test]
    fn empty_signature() {
        let text = "product: Lua\nversion: Lua {version}*\nproduct: Mono\nfunctions: mono_*\n";
        assert_eq!(
            parse_signatures(text).unwrap_err(),
            SignatureError::EmptySignature {
                product: "Lua".into()
            }
        );
        assert!(matches!(
            parse_signatures("product: Lua\n"),
            Err(SignatureError::EmptySignature { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line() {
        let cases = [
            ("strings: x*\n", 1),
            ("product: A\nstrings x\n", 2),
            ("product: A\n\nbogus: x\n", 3),
            ("product: A\nstrings: a\nversion: no slot\n", 3),
            ("product: A\nstrings:\n", 2),
        ];
        for (text, line) in cases {
            match parse_signatures(text) {
                Err(SignatureError::ParseError { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn patterns_keep_colons() {
        let set = parse_signatures("product: Folly\nstrings: *folly::*\n").unwrap();
        assert_eq!(
            set.get("Folly").unwrap().string_patterns[0].as_str(),
            "*folly::*"
        );
    }
}
