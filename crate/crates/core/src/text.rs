//! String normalization shared by records, mapping and enrichment.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Storage normalization: NFC, trimmed, whitespace runs collapsed to a single
/// space. Case and diacritics are preserved.
pub fn normalize_value(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Matching-time folding: compatibility decomposition, combining marks
/// removed, lower-cased, whitespace collapsed.
pub fn fold(text: &str) -> String {
    let strip = |s: &str| -> String { s.nfkd().filter(|c| !is_combining_mark(*c)).collect() };
    // Lower-casing can introduce new combining marks (e.g. U+0130), so strip twice.
    let lowered = strip(&strip(text).to_lowercase());
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// IRI path segment for vocabulary terms: folded text with spaces turned into
/// hyphens; anything outside `[a-z0-9._~-]` is percent-encoded.
pub fn slug(text: &str) -> String {
    encode_segment(&fold(text).replace(' ', "-"))
}

/// Percent-encodes everything except ASCII alphanumerics and `-._~`.
pub fn encode_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_' | '~') {
            out.push(c);
        } else {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                out.push_str(&format!("%{b:02X}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_value("VMB 14527"), "VMB 14527");
        assert_eq!(normalize_value(""), "");
        assert_eq!(normalize_value("a\t\tb\n"), "a b");
        assert_eq!(normalize_value("  XVIIIe   siècle "), "XVIIIe siècle");
        // decomposed e + combining grave becomes the precomposed form
        assert_eq!(normalize_value("sie\u{300}cle"), "siècle");
    }

    #[test]
    fn fold_examples() {
        assert_eq!(fold("Brocatelle"), fold("brocatelle"));
        assert_eq!(fold("  Lé  de tenture"), "le de tenture");
        assert_eq!(fold("Damask"), "damask");
    }

    #[test]
    fn slug_examples() {
        assert_eq!(slug("lé de tenture"), "le-de-tenture");
        assert_eq!(slug("XVIIIe siècle"), "xviiie-siecle");
        assert_eq!(slug("N° d'inventaire"), "n%C2%B0-d%27inventaire");
        assert_eq!(slug("Château de Versailles"), "chateau-de-versailles");
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC*") {
            let once = normalize_value(&s);
            prop_assert_eq!(normalize_value(&once), once);
        }

        #[test]
        fn fold_is_idempotent(s in "\\PC*") {
            let once = fold(&s);
            prop_assert_eq!(fold(&once), once);
        }

        #[test]
        fn slug_is_iri_safe(s in "\\PC*") {
            let slug = slug(&s);
            prop_assert!(slug.chars().all(|c| c.is_ascii_alphanumeric() || "-._~%".contains(c)));
        }
    }
}
