//! IRI values with a single documented normalization pass.
//!
//! Equality is plain string equality *after* normalization, so two `Iri`s
//! compare equal iff their normalized forms are byte-identical. The pass:
//!
//! - the scheme is lowercased;
//! - for hierarchical IRIs (`scheme://authority/...`) the host is lowercased
//!   and the scheme's default port (`http:80`, `https:443`, `ftp:21`) is
//!   stripped;
//! - percent-encoding, path, query and fragment are left untouched.
//!
//! Nothing else is rewritten — in particular no trailing slash is added to
//! authority-only IRIs and percent-escapes are never decoded, so the stored
//! string stays recognizable as what the author wrote.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    /// Validate and normalize. Rejects empty strings, strings containing
    /// unescaped whitespace or control characters, and strings without a
    /// scheme (every stored IRI is absolute; relative references are
    /// resolved before they get here, see [`Iri::resolve`]).
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() {
            return Err(Error::InvalidIri("empty string".into()));
        }
        if value.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(Error::InvalidIri(format!(
                "unescaped whitespace in {value:?}"
            )));
        }
        let Some(scheme_len) = scheme_length(&value) else {
            return Err(Error::InvalidIri(format!("missing scheme in {value:?}")));
        };
        Ok(Iri(normalize(&value, scheme_len)))
    }

    /// Resolve `href` against `base`. Absolute hrefs pass straight through
    /// to [`Iri::new`]; the relative forms cover what interchange documents
    /// actually use (`//host/...`, `/path`, `#fragment`, sibling paths).
    pub fn resolve(base: &Iri, href: &str) -> Result<Self> {
        if scheme_length(href).is_some() {
            return Iri::new(href);
        }
        let base_str = base.as_str();
        let scheme_len = scheme_length(base_str).expect("stored IRIs always have a scheme");
        let resolved = if let Some(rest) = href.strip_prefix("//") {
            format!("{}://{}", &base_str[..scheme_len], rest)
        } else if href.starts_with('#') {
            let stem = base_str.split('#').next().unwrap_or(base_str);
            format!("{stem}{href}")
        } else if href.starts_with('/') {
            match authority_end(base_str, scheme_len) {
                Some(end) => format!("{}{}", &base_str[..end], href),
                None => format!("{}:{}", &base_str[..scheme_len], href),
            }
        } else {
            // Sibling reference: replace everything after the last '/'.
            let stem = base_str.split(['?', '#']).next().unwrap_or(base_str);
            match stem.rfind('/') {
                Some(slash) if slash > scheme_len => format!("{}{}", &stem[..=slash], href),
                _ => format!("{stem}/{href}"),
            }
        };
        Iri::new(resolved)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Length of a valid scheme (without the ':'), or None if `s` has no scheme.
fn scheme_length(s: &str) -> Option<usize> {
    let colon = s.find(':')?;
    if colon == 0 {
        return None;
    }
    let mut chars = s[..colon].chars();
    let first = chars.next()?;
    if !first.is_ascii_alphabetic() {
        return None;
    }
    if chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        Some(colon)
    } else {
        None
    }
}

/// End offset of `scheme://authority` in `s`, or None for non-hierarchical
/// IRIs such as `urn:...`.
fn authority_end(s: &str, scheme_len: usize) -> Option<usize> {
    let after = &s[scheme_len + 1..];
    after.strip_prefix("//")?;
    let auth_start = scheme_len + 3;
    let rel = &s[auth_start..];
    let end = rel.find(['/', '?', '#']).unwrap_or(rel.len());
    Some(auth_start + end)
}

fn normalize(value: &str, scheme_len: usize) -> String {
    let scheme = value[..scheme_len].to_ascii_lowercase();
    let rest = &value[scheme_len..]; // starts with ':'
    match authority_end(value, scheme_len) {
        None => format!("{scheme}{rest}"),
        Some(end) => {
            let authority = &value[scheme_len + 3..end];
            let tail = &value[end..];
            // Split userinfo@host:port without touching userinfo case.
            let (userinfo, hostport) = match authority.rfind('@') {
                Some(at) => (&authority[..=at], &authority[at + 1..]),
                None => ("", authority),
            };
            let (host, port) = match hostport.rfind(':') {
                // Only split if the tail is all digits; IPv6 literals keep
                // their colons.
                Some(c) if hostport[c + 1..].chars().all(|d| d.is_ascii_digit()) => {
                    (&hostport[..c], &hostport[c + 1..])
                }
                _ => (hostport, ""),
            };
            let host = host.to_ascii_lowercase();
            let default_port = matches!(
                (scheme.as_str(), port),
                ("http", "80") | ("https", "443") | ("ftp", "21")
            );
            let port_part = if port.is_empty() || default_port {
                String::new()
            } else {
                format!(":{port}")
            };
            format!("{scheme}://{userinfo}{host}{port_part}{tail}")
        }
    }
}
