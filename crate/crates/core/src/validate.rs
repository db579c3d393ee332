//! Structural validation of a sealed topic map.
//!
//! The checklist is fixed: unresolved references, auto-created stub
//! topics, untyped associations, role-less members, nameless topics,
//! scope elements that carried no themes in the source document, and
//! identical names in identical non-empty scope spread across distinct
//! topics (unmerged merge candidates). Diagnostics are deterministic:
//! equal maps produce equal lists, ordered by (code, subject).

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{Association, EmptyScopeNote, Scope, TopicMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
            Severity::Info => "INFO",
        })
    }
}

/// One finding. `subject` locates the construct: a topic id, or
/// `association[i]` where `i` indexes the canonically ordered
/// association list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity, self.code, self.subject, self.message
        )
    }
}

pub const DANGLING_REF: &str = "DANGLING_REF";
pub const DUPLICATE_NAME_ACROSS_TOPICS: &str = "DUPLICATE_NAME_ACROSS_TOPICS";
pub const EMPTY_SCOPE_ELEMENT: &str = "EMPTY_SCOPE_ELEMENT";
pub const IMPLICIT_TOPIC: &str = "IMPLICIT_TOPIC";
pub const MEMBER_WITHOUT_ROLE: &str = "MEMBER_WITHOUT_ROLE";
pub const TOPIC_WITHOUT_NAME: &str = "TOPIC_WITHOUT_NAME";
pub const UNTYPED_ASSOCIATION: &str = "UNTYPED_ASSOCIATION";

/// Run the full checklist. Read-only; safe on shared references.
pub fn validate(map: &TopicMap) -> Vec<Diagnostic> {
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut push = |code, severity, subject: String, message: String| {
        let d = Diagnostic {
            code,
            severity,
            subject,
            message,
        };
        if !diags.contains(&d) {
            diags.push(d);
        }
    };

    // Associations in canonical order, so association[i] subjects are
    // stable however the map was built.
    let mut assocs: Vec<&Association> = map.associations().iter().collect();
    assocs.sort();

    let resolves = |target: &str| map.resolve_id(target).is_some();

    for topic in map.topics() {
        if topic.implicit {
            push(
                IMPLICIT_TOPIC,
                Severity::Warning,
                topic.id.clone(),
                "topic was auto-created to satisfy a reference".into(),
            );
        }
        if topic.names.is_empty() {
            push(
                TOPIC_WITHOUT_NAME,
                Severity::Info,
                topic.id.clone(),
                "topic has no name".into(),
            );
        }
        let mut refs: Vec<&str> = topic.types.iter().map(|t| t.as_str()).collect();
        for name in &topic.names {
            refs.extend(name.scope.themes().map(|t| t.as_str()));
        }
        for occ in &topic.occurrences {
            refs.extend(occ.occurrence_type.iter().map(|t| t.as_str()));
            refs.extend(occ.scope.themes().map(|t| t.as_str()));
        }
        for target in refs {
            if !resolves(target) {
                push(
                    DANGLING_REF,
                    Severity::Error,
                    topic.id.clone(),
                    format!("reference to \"{target}\" does not resolve"),
                );
            }
        }
    }

    for (i, assoc) in assocs.iter().enumerate() {
        let subject = format!("association[{i}]");
        if assoc.association_type.is_none() {
            push(
                UNTYPED_ASSOCIATION,
                Severity::Warning,
                subject.clone(),
                "association has no type".into(),
            );
        }
        for (j, member) in assoc.members.iter().enumerate() {
            if member.role_type.is_none() {
                push(
                    MEMBER_WITHOUT_ROLE,
                    Severity::Warning,
                    subject.clone(),
                    format!("member {j} has no role"),
                );
            }
        }
        let mut refs: Vec<&str> = Vec::new();
        refs.extend(assoc.association_type.iter().map(|t| t.as_str()));
        refs.extend(assoc.scope.themes().map(|t| t.as_str()));
        for member in &assoc.members {
            refs.extend(member.role_type.iter().map(|t| t.as_str()));
            refs.extend(member.players.iter().map(|t| t.as_str()));
        }
        for target in refs {
            if !resolves(target) {
                push(
                    DANGLING_REF,
                    Severity::Error,
                    subject.clone(),
                    format!("reference to \"{target}\" does not resolve"),
                );
            }
        }
    }

    // Scope elements that were present in the source but carried no
    // themes; the model cannot distinguish them from absent scope, so
    // the parser records them as notes.
    for note in &map.empty_scope_notes {
        let (subject, message) = match note {
            EmptyScopeNote::Name { topic } => {
                (topic.clone(), "empty scope element on a name".to_owned())
            }
            EmptyScopeNote::Occurrence { topic } => (
                topic.clone(),
                "empty scope element on an occurrence".to_owned(),
            ),
            EmptyScopeNote::Association { assoc_type } => {
                let found = assocs.iter().position(|a| {
                    a.scope.is_universal()
                        && match (assoc_type, &a.association_type) {
                            (None, None) => true,
                            (Some(want), Some(have)) => {
                                map.resolve_id(want) == map.resolve_id(have.as_str())
                            }
                            _ => false,
                        }
                });
                let subject = match found {
                    Some(i) => format!("association[{i}]"),
                    None => "association[?]".to_owned(),
                };
                (subject, "empty scope element on an association".to_owned())
            }
        };
        push(EMPTY_SCOPE_ELEMENT, Severity::Warning, subject, message);
    }

    // Identical name in identical non-empty scope on distinct topics:
    // the name-based merge rule would fold these, so flag the pairs.
    let mut groups: BTreeMap<(&str, &Scope), Vec<&str>> = BTreeMap::new();
    for topic in map.topics() {
        for name in &topic.names {
            if name.scope.is_universal() {
                continue;
            }
            let group = groups.entry((name.value.as_str(), &name.scope)).or_default();
            if !group.contains(&topic.id.as_str()) {
                group.push(&topic.id);
            }
        }
    }
    for ((value, _scope), ids_in_group) in groups {
        for a in 0..ids_in_group.len() {
            for b in a + 1..ids_in_group.len() {
                let (x, y) = (ids_in_group[a], ids_in_group[b]);
                let (x, y) = if x <= y { (x, y) } else { (y, x) };
                push(
                    DUPLICATE_NAME_ACROSS_TOPICS,
                    Severity::Info,
                    format!("{x}+{y}"),
                    format!("topics share name \"{value}\" in the same scope"),
                );
            }
        }
    }

    diags.sort_by(|a, b| {
        (a.code, &a.subject, &a.message, a.severity).cmp(&(
            b.code,
            &b.subject,
            &b.message,
            b.severity,
        ))
    });
    diags
}

/// One diagnostic per line, `SEVERITY CODE subject: message`.
pub fn render(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}
