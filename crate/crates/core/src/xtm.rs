//! XTM 1.0 interchange: parser and canonical serializer.
//!
//! The recognized element subset is: `topicMap`, `topic` (`@id`),
//! `instanceOf`, `topicRef` (`@xlink:href`), `subjectIdentity`,
//! `subjectIndicatorRef` (`@xlink:href`), `baseName`, `baseNameString`,
//! `scope`, `occurrence`, `resourceRef` (`@xlink:href`), `resourceData`,
//! `association`, `member`, `roleSpec`. Elements in the XTM namespace but
//! outside this subset, and elements in any other namespace, are skipped
//! with a warning. Fragment hrefs (`#x`) are map-local topic references;
//! a non-fragment href inside `topicRef` is resolved through subject
//! identifiers, creating an implicit stub topic when nothing carries that
//! identifier. Any referenced-but-undeclared id is likewise reified as an
//! implicit stub at the end of the parse, so a successfully parsed map
//! never has dangling references.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Cursor;
use std::path::Path;

use xml::common::Position;
use xml::reader::{EventReader, ParserConfig, XmlEvent};

use crate::error::{Error, Result};
use crate::iri::Iri;
use crate::model::{
    self, Association, EmptyScopeNote, Member, Name, Occurrence, ResourceLink, Scope, Topic,
    TopicMap, TopicRef,
};

pub const XTM_NS: &str = "http://www.topicmaps.org/xtm/1.0/";
pub const XLINK_NS: &str = "http://www.w3.org/1999/xlink";

/// Marker prefixed to reference targets that stand for a non-fragment
/// `topicRef` href until end-of-parse resolution. `\u{1}` can never appear
/// in a real id (it is not an XML NameChar).
const IRI_REF_MARK: char = '\u{1}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParseSeverity {
    Error,
    Warning,
}

impl fmt::Display for ParseSeverity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseSeverity::Error => f.write_str("error"),
            ParseSeverity::Warning => f.write_str("warning"),
        }
    }
}

/// A recoverable problem found while parsing. Line and column are 1-based.
/// Fatal problems abort the parse as [`Error::Parse`] instead, so the
/// diagnostics attached to a returned document are warnings.
#[derive(Debug, Clone)]
pub struct ParseDiagnostic {
    pub severity: ParseSeverity,
    pub line: u64,
    pub column: u64,
    pub message: String,
    pub element_path: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {} ({})",
            self.line, self.column, self.severity, self.message, self.element_path
        )
    }
}

/// A parsed document: the sealed map plus parse diagnostics.
#[derive(Debug)]
pub struct XtmDocument {
    pub map: TopicMap,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub source_locator: Iri,
}

/// Parse an XTM document. `base_locator` is the IRI relative references
/// resolve against; it becomes the map's base locator.
pub fn parse_xtm(bytes: &[u8], base_locator: Iri) -> Result<XtmDocument> {
    Parser::new(bytes, base_locator).run()
}

/// Read and parse a file; the base locator is the canonical `file://` IRI
/// of the path.
pub fn load_file(path: impl AsRef<Path>) -> Result<XtmDocument> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let abs = path.canonicalize()?;
    let iri_path = abs.to_string_lossy().replace(' ', "%20");
    let base = Iri::new(format!("file://{iri_path}"))?;
    parse_xtm(&bytes, base)
}

struct Parser<'a> {
    reader: EventReader<Cursor<&'a [u8]>>,
    base: Iri,
    map: TopicMap,
    diagnostics: Vec<ParseDiagnostic>,
    path: Vec<String>,
    /// Referenced fragment ids → first-seen position.
    frag_refs: BTreeMap<String, (u64, u64)>,
    /// Non-fragment topicRef hrefs (normalized IRI) → first-seen position.
    iri_refs: BTreeMap<String, (u64, u64)>,
}

impl<'a> Parser<'a> {
    fn new(bytes: &'a [u8], base: Iri) -> Self {
        let config = ParserConfig::new()
            .ignore_comments(true)
            .cdata_to_characters(true);
        Parser {
            reader: config.create_reader(Cursor::new(bytes)),
            map: TopicMap::new(base.clone()),
            base,
            diagnostics: Vec::new(),
            path: Vec::new(),
            frag_refs: BTreeMap::new(),
            iri_refs: BTreeMap::new(),
        }
    }

    fn run(mut self) -> Result<XtmDocument> {
        // Find the root element.
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartDocument { .. } => continue,
                XmlEvent::StartElement {
                    name, attributes, ..
                } => {
                    if !is_xtm(&name.namespace_ref(), &name.local_name, "topicMap") {
                        return Err(parse_err(pos, "document root must be an XTM topicMap"));
                    }
                    let _ = attributes; // `version` and others are accepted silently
                    self.path.push("topicMap".into());
                    self.parse_topic_map()?;
                    self.path.pop();
                }
                XmlEvent::EndDocument => break,
                _ => continue,
            }
        }
        self.finalize()
    }

    fn parse_topic_map(&mut self) -> Result<()> {
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement {
                    name, attributes, ..
                } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("topic") => self.parse_topic(&attributes, pos)?,
                    Some("association") => self.parse_association(pos)?,
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => return Ok(()),
                _ => continue,
            }
        }
    }

    fn parse_topic(&mut self, attributes: &[xml::attribute::OwnedAttribute], pos: (u64, u64)) -> Result<()> {
        let Some(id) = plain_attr(attributes, "id") else {
            return Err(parse_err(pos, "topic element is missing its id attribute"));
        };
        self.path.push(format!("topic({id})"));
        let mut topic = Topic::new(id.clone());
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement { name, .. } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("instanceOf") => {
                        for r in self.parse_instance_of(pos)? {
                            topic.types.insert(r);
                        }
                    }
                    Some("subjectIdentity") => self.parse_subject_identity(&mut topic)?,
                    Some("baseName") => {
                        if let Some(name) = self.parse_base_name(&topic.id, pos)? {
                            topic.add_name(name);
                        }
                    }
                    Some("occurrence") => {
                        if let Some(occ) = self.parse_occurrence(&topic.id, pos)? {
                            topic.occurrences.push(occ);
                        }
                    }
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        self.path.pop();
        if let Err(Error::DuplicateId(id)) = self.map.add_topic(topic) {
            return Err(parse_err(pos, format!("duplicate topic id: {id}")));
        }
        Ok(())
    }

    /// `instanceOf` yields the referenced topics. The DTD allows exactly
    /// one reference; extras are accepted for topic typing (types form a
    /// set) and the caller decides what to do with them elsewhere.
    fn parse_instance_of(&mut self, _pos: (u64, u64)) -> Result<Vec<TopicRef>> {
        self.path.push("instanceOf".into());
        let mut refs = Vec::new();
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement {
                    name, attributes, ..
                } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("topicRef") => {
                        if let Some(r) = self.topic_ref_from(&attributes, pos)? {
                            refs.push(r);
                        }
                        self.skip_children()?;
                    }
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        if refs.is_empty() {
            self.warn_here("instanceOf without a topicRef, ignored");
        }
        self.path.pop();
        Ok(refs)
    }

    fn parse_subject_identity(&mut self, topic: &mut Topic) -> Result<()> {
        self.path.push("subjectIdentity".into());
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement {
                    name, attributes, ..
                } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("subjectIndicatorRef") => {
                        let Some(href) = xlink_href(&attributes) else {
                            return Err(parse_err(
                                pos,
                                "subjectIndicatorRef is missing xlink:href",
                            ));
                        };
                        match Iri::resolve(&self.base, &href) {
                            Ok(iri) => {
                                topic.subject_identifiers.insert(iri);
                            }
                            Err(e) => self.warn_at(pos, format!("{e}, identifier skipped")),
                        }
                        self.skip_children()?;
                    }
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        self.path.pop();
        Ok(())
    }

    fn parse_base_name(&mut self, topic_id: &str, _pos: (u64, u64)) -> Result<Option<Name>> {
        self.path.push("baseName".into());
        let mut scope: Option<Scope> = None;
        let mut value: Option<String> = None;
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement { name, .. } => {
                    match xtm_local(&name.namespace_ref(), &name.local_name) {
                        Some("scope") => {
                            let parsed = self.parse_scope(EmptyScopeNote::Name {
                                topic: topic_id.to_owned(),
                            })?;
                            scope = Some(match scope {
                                None => parsed,
                                Some(existing) => {
                                    self.warn_at(pos, "duplicate scope element, themes merged");
                                    existing.union(&parsed)
                                }
                            });
                        }
                        Some("baseNameString") => {
                            let text = self.read_leaf_text("baseNameString")?;
                            match value {
                                None => value = Some(text),
                                Some(_) => {
                                    self.warn_at(pos, "duplicate baseNameString, first one kept")
                                }
                            }
                        }
                        _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                    }
                }
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        self.path.pop();
        match value {
            Some(v) if !v.is_empty() => Ok(Some(Name::scoped(v, scope.unwrap_or_default()))),
            _ => {
                self.warn_here("baseName without a non-empty baseNameString, skipped");
                Ok(None)
            }
        }
    }

    fn parse_occurrence(&mut self, topic_id: &str, _pos: (u64, u64)) -> Result<Option<Occurrence>> {
        self.path.push("occurrence".into());
        let mut occurrence_type: Option<TopicRef> = None;
        let mut scope: Option<Scope> = None;
        let mut resource: Option<ResourceLink> = None;
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement {
                    name, attributes, ..
                } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("instanceOf") => {
                        let refs = self.parse_instance_of(pos)?;
                        let mut it = refs.into_iter();
                        if occurrence_type.is_none() {
                            occurrence_type = it.next();
                        }
                        if it.next().is_some() {
                            self.warn_at(pos, "occurrence has more than one type, first one kept");
                        }
                    }
                    Some("scope") => {
                        let parsed = self.parse_scope(EmptyScopeNote::Occurrence {
                            topic: topic_id.to_owned(),
                        })?;
                        scope = Some(match scope {
                            None => parsed,
                            Some(existing) => {
                                self.warn_at(pos, "duplicate scope element, themes merged");
                                existing.union(&parsed)
                            }
                        });
                    }
                    Some("resourceRef") => {
                        let Some(href) = xlink_href(&attributes) else {
                            return Err(parse_err(pos, "resourceRef is missing xlink:href"));
                        };
                        match Iri::resolve(&self.base, &href) {
                            Ok(iri) => {
                                if resource.is_none() {
                                    resource = Some(ResourceLink::Reference(iri));
                                } else {
                                    self.warn_at(pos, "occurrence already has a resource, extra resourceRef ignored");
                                }
                            }
                            Err(e) => self.warn_at(pos, format!("{e}, resourceRef skipped")),
                        }
                        self.skip_children()?;
                    }
                    Some("resourceData") => {
                        let text = self.read_leaf_text("resourceData")?;
                        if resource.is_none() {
                            resource = Some(ResourceLink::Inline(text));
                        } else {
                            self.warn_at(pos, "occurrence already has a resource, extra resourceData ignored");
                        }
                    }
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        self.path.pop();
        match resource {
            Some(resource) => Ok(Some(Occurrence {
                occurrence_type,
                scope: scope.unwrap_or_default(),
                resource,
            })),
            None => {
                self.warn_here("occurrence without resourceRef or resourceData, skipped");
                Ok(None)
            }
        }
    }

    fn parse_scope(&mut self, empty_note: EmptyScopeNote) -> Result<Scope> {
        self.path.push("scope".into());
        let mut scope = Scope::universal();
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement {
                    name, attributes, ..
                } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("topicRef") => {
                        if let Some(r) = self.topic_ref_from(&attributes, pos)? {
                            scope.insert(r);
                        }
                        self.skip_children()?;
                    }
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        if scope.is_universal() {
            self.map.empty_scope_notes.push(empty_note);
        }
        self.path.pop();
        Ok(scope)
    }

    fn parse_association(&mut self, _pos: (u64, u64)) -> Result<()> {
        self.path.push("association".into());
        let mut assoc = Association::new(None);
        let mut pending_empty_scope = false;
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement { name, .. } => {
                    match xtm_local(&name.namespace_ref(), &name.local_name) {
                        Some("instanceOf") => {
                            let refs = self.parse_instance_of(pos)?;
                            let mut it = refs.into_iter();
                            if assoc.association_type.is_none() {
                                assoc.association_type = it.next();
                            }
                            if it.next().is_some() {
                                self.warn_at(
                                    pos,
                                    "association has more than one type, first one kept",
                                );
                            }
                        }
                        Some("scope") => {
                            // The owning association's type may not be known
                            // yet; patch the note up after the loop.
                            let parsed =
                                self.parse_scope(EmptyScopeNote::Association { assoc_type: None })?;
                            if parsed.is_universal() {
                                pending_empty_scope = true;
                                self.map.empty_scope_notes.pop();
                            }
                            assoc.scope = assoc.scope.union(&parsed);
                        }
                        Some("member") => {
                            if let Some(member) = self.parse_member(pos)? {
                                assoc.members.push(member);
                            }
                        }
                        _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                    }
                }
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        self.path.pop();
        if pending_empty_scope {
            self.map.empty_scope_notes.push(EmptyScopeNote::Association {
                assoc_type: assoc.association_type.as_ref().map(|t| t.as_str().to_owned()),
            });
        }
        if assoc.members.is_empty() {
            self.warn_here("association without members, skipped");
            return Ok(());
        }
        self.map
            .add_association(assoc)
            .expect("members validated above");
        Ok(())
    }

    fn parse_member(&mut self, _pos: (u64, u64)) -> Result<Option<Member>> {
        self.path.push("member".into());
        let mut role_type: Option<TopicRef> = None;
        let mut players: Vec<TopicRef> = Vec::new();
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement {
                    name, attributes, ..
                } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("roleSpec") => {
                        let refs = self.parse_role_spec()?;
                        let mut it = refs.into_iter();
                        if role_type.is_none() {
                            role_type = it.next();
                        }
                        if it.next().is_some() {
                            self.warn_at(pos, "roleSpec with more than one topicRef, first one kept");
                        }
                    }
                    Some("topicRef") => {
                        if let Some(r) = self.topic_ref_from(&attributes, pos)? {
                            players.push(r);
                        }
                        self.skip_children()?;
                    }
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        self.path.pop();
        if players.is_empty() {
            self.warn_here("member without player topicRefs, skipped");
            Ok(None)
        } else {
            Ok(Some(Member::new(role_type, players)))
        }
    }

    fn parse_role_spec(&mut self) -> Result<Vec<TopicRef>> {
        self.path.push("roleSpec".into());
        let mut refs = Vec::new();
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::StartElement {
                    name, attributes, ..
                } => match xtm_local(&name.namespace_ref(), &name.local_name) {
                    Some("topicRef") => {
                        if let Some(r) = self.topic_ref_from(&attributes, pos)? {
                            refs.push(r);
                        }
                        self.skip_children()?;
                    }
                    _ => self.skip_unknown(&name.local_name, &name.namespace_ref(), pos)?,
                },
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        self.path.pop();
        Ok(refs)
    }

    /// Turn a topicRef's href into a reference: `#x` is the map-local id
    /// `x`; anything else is an external IRI resolved at end of parse
    /// (stored behind a marker until then).
    fn topic_ref_from(
        &mut self,
        attributes: &[xml::attribute::OwnedAttribute],
        pos: (u64, u64),
    ) -> Result<Option<TopicRef>> {
        let Some(href) = xlink_href(attributes) else {
            return Err(parse_err(pos, "topicRef is missing xlink:href"));
        };
        if let Some(frag) = href.strip_prefix('#') {
            if frag.is_empty() {
                self.warn_at(pos, "empty fragment reference, skipped");
                return Ok(None);
            }
            self.frag_refs.entry(frag.to_owned()).or_insert(pos);
            return Ok(Some(TopicRef::new(frag)));
        }
        match Iri::resolve(&self.base, &href) {
            Ok(iri) => {
                let key = iri.as_str().to_owned();
                self.iri_refs.entry(key.clone()).or_insert(pos);
                Ok(Some(TopicRef::new(format!("{IRI_REF_MARK}{key}"))))
            }
            Err(e) => {
                self.warn_at(pos, format!("{e}, reference skipped"));
                Ok(None)
            }
        }
    }

    /// End-of-parse: reify undeclared fragment targets as implicit stubs,
    /// bind external references to topics by subject identifier (creating
    /// identifier-bearing stubs when nothing matches), rewrite the interim
    /// markers, and seal.
    fn finalize(mut self) -> Result<XtmDocument> {
        let frag_refs = std::mem::take(&mut self.frag_refs);
        for (id, pos) in &frag_refs {
            if self.map.topic_by_id(id).is_none() {
                let mut stub = Topic::new(id.clone());
                stub.implicit = true;
                self.map.add_topic(stub).expect("undeclared id");
                self.diagnostics.push(ParseDiagnostic {
                    severity: ParseSeverity::Warning,
                    line: pos.0,
                    column: pos.1,
                    message: format!("implicit topic {id} created for undeclared reference"),
                    element_path: "topicMap".into(),
                });
            }
        }
        let iri_refs = std::mem::take(&mut self.iri_refs);
        let mut iri_to_id: BTreeMap<String, String> = BTreeMap::new();
        for (iri_str, pos) in &iri_refs {
            let iri = Iri::new(iri_str.clone()).expect("normalized on the way in");
            let existing = self
                .map
                .sid_index
                .get(&iri)
                .and_then(|ids| ids.iter().next().cloned());
            let id = match existing {
                Some(id) => id,
                None => {
                    let id = self.fresh_stub_id(iri_str);
                    let mut stub = Topic::new(id.clone());
                    stub.implicit = true;
                    stub.subject_identifiers.insert(iri);
                    self.map.add_topic(stub).expect("fresh id");
                    self.diagnostics.push(ParseDiagnostic {
                        severity: ParseSeverity::Warning,
                        line: pos.0,
                        column: pos.1,
                        message: format!(
                            "implicit topic {id} created for external reference {iri_str}"
                        ),
                        element_path: "topicMap".into(),
                    });
                    id
                }
            };
            iri_to_id.insert(format!("{IRI_REF_MARK}{iri_str}"), id);
        }
        if !iri_to_id.is_empty() {
            let rewrite = |target: &str| iri_to_id.get(target).cloned();
            let ids: Vec<String> = self.map.topics().map(|t| t.id.clone()).collect();
            for id in ids {
                let topic = self.map.topics_mut().get_mut(&id).expect("iterated id");
                model::rewrite_topic_refs(topic, &rewrite);
                let mut seen = BTreeSet::new();
                topic.names.retain(|n| seen.insert(n.clone()));
            }
            for assoc in self.map.associations_mut() {
                model::rewrite_assoc_refs(assoc, &rewrite);
            }
            for note in &mut self.map.empty_scope_notes {
                if let EmptyScopeNote::Association {
                    assoc_type: Some(t),
                } = note
                {
                    if let Some(id) = iri_to_id.get(t.as_str()) {
                        *t = id.clone();
                    }
                }
            }
            self.map.reindex();
        }
        self.map.recompute_dangling();
        self.map.seal();
        Ok(XtmDocument {
            map: self.map,
            diagnostics: self.diagnostics,
            source_locator: self.base,
        })
    }

    /// Deterministic, readable id for an external-reference stub: the IRI
    /// with every non-alphanumeric run collapsed to '-', uniquified with
    /// `~2`, `~3`, ... against existing ids.
    fn fresh_stub_id(&self, iri: &str) -> String {
        let mut base = String::new();
        let mut last_dash = true;
        for c in iri.chars() {
            if c.is_alphanumeric() {
                base.push(c);
                last_dash = false;
            } else if !last_dash {
                base.push('-');
                last_dash = true;
            }
        }
        let base = base.trim_end_matches('-').to_owned();
        let base = if base.is_empty() { "stub".to_owned() } else { base };
        if self.map.topic_by_id(&base).is_none() {
            return base;
        }
        let mut n = 2;
        loop {
            let candidate = format!("{base}~{n}");
            if self.map.topic_by_id(&candidate).is_none() {
                return candidate;
            }
            n += 1;
        }
    }

    /// Accumulate the text content of a leaf element. Child elements are
    /// not expected there; they are skipped with a warning. Content that
    /// is entirely whitespace is pretty-printing indentation and becomes
    /// the empty string; anything else is preserved byte for byte.
    fn read_leaf_text(&mut self, leaf: &str) -> Result<String> {
        let mut text = String::new();
        loop {
            let (event, pos) = self.next_event()?;
            match event {
                XmlEvent::Characters(s) | XmlEvent::Whitespace(s) => text.push_str(&s),
                XmlEvent::CData(s) => text.push_str(&s),
                XmlEvent::StartElement { name, .. } => {
                    self.warn_at(
                        pos,
                        format!("unexpected element {} inside {leaf}, skipped", name.local_name),
                    );
                    self.skip_children()?;
                }
                XmlEvent::EndElement { .. } => break,
                _ => continue,
            }
        }
        if text.chars().all(char::is_whitespace) {
            Ok(String::new())
        } else {
            Ok(text)
        }
    }

    fn skip_unknown(&mut self, local: &str, ns: &Option<&str>, pos: (u64, u64)) -> Result<()> {
        let message = match ns {
            Some(XTM_NS) => format!("element {local} is outside the supported XTM subset, skipped"),
            Some(other) => format!("element {local} in foreign namespace {other}, skipped"),
            None => format!("element {local} without a namespace, skipped"),
        };
        self.warn_at(pos, message);
        self.skip_children()
    }

    /// Consume events until the EndElement matching the already-consumed
    /// StartElement.
    fn skip_children(&mut self) -> Result<()> {
        let mut depth = 1u32;
        loop {
            match self.next_event()?.0 {
                XmlEvent::StartElement { .. } => depth += 1,
                XmlEvent::EndElement { .. } => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                _ => continue,
            }
        }
    }

    fn next_event(&mut self) -> Result<(XmlEvent, (u64, u64))> {
        match self.reader.next() {
            Ok(event) => {
                let pos = self.reader.position();
                Ok((event, (pos.row + 1, pos.column + 1)))
            }
            Err(e) => {
                let pos = e.position();
                Err(Error::Parse {
                    line: pos.row + 1,
                    column: pos.column + 1,
                    message: e.msg().to_owned(),
                })
            }
        }
    }

    fn warn_at(&mut self, pos: (u64, u64), message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic {
            severity: ParseSeverity::Warning,
            line: pos.0,
            column: pos.1,
            message: message.into(),
            element_path: self.path.join("/"),
        });
    }

    fn warn_here(&mut self, message: impl Into<String>) {
        let pos = self.reader.position();
        self.warn_at((pos.row + 1, pos.column + 1), message);
    }
}

fn parse_err(pos: (u64, u64), message: impl Into<String>) -> Error {
    Error::Parse {
        line: pos.0,
        column: pos.1,
        message: message.into(),
    }
}

fn is_xtm(ns: &Option<&str>, local: &str, expected: &str) -> bool {
    *ns == Some(XTM_NS) && local == expected
}

/// The local name if the element is in the XTM namespace, else None.
fn xtm_local<'n>(ns: &Option<&str>, local: &'n str) -> Option<&'n str> {
    if *ns == Some(XTM_NS) {
        Some(local)
    } else {
        None
    }
}

fn plain_attr(attributes: &[xml::attribute::OwnedAttribute], name: &str) -> Option<String> {
    attributes
        .iter()
        .find(|a| a.name.namespace.is_none() && a.name.local_name == name)
        .map(|a| a.value.clone())
}

fn xlink_href(attributes: &[xml::attribute::OwnedAttribute]) -> Option<String> {
    attributes
        .iter()
        .find(|a| a.name.namespace.as_deref() == Some(XLINK_NS) && a.name.local_name == "href")
        .map(|a| a.value.clone())
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Serialize a map to canonical XTM: topics sorted by id, names and
/// occurrences in stored order, associations (and members and players
/// within them) in canonical sorted order, scope themes sorted, 2-space
/// indent, UTF-8. Two equal maps serialize to identical bytes.
pub fn serialize_xtm(map: &TopicMap) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let root_attrs = format!("xmlns=\"{XTM_NS}\" xmlns:xlink=\"{XLINK_NS}\"");
    if map.topic_count() == 0 && map.association_count() == 0 {
        out.push_str(&format!("<topicMap {root_attrs}/>\n"));
        return out.into_bytes();
    }
    out.push_str(&format!("<topicMap {root_attrs}>\n"));
    for topic in map.topics() {
        write_topic(&mut out, topic);
    }
    let mut assocs: Vec<&Association> = map.associations().iter().collect();
    assocs.sort();
    for assoc in assocs {
        write_association(&mut out, assoc);
    }
    out.push_str("</topicMap>\n");
    out.into_bytes()
}

fn write_topic(out: &mut String, topic: &Topic) {
    let id = attr_escape(&topic.id);
    if topic.is_empty() {
        out.push_str(&format!("  <topic id=\"{id}\"/>\n"));
        return;
    }
    out.push_str(&format!("  <topic id=\"{id}\">\n"));
    for ty in &topic.types {
        out.push_str("    <instanceOf>\n");
        write_topic_ref(out, 6, ty);
        out.push_str("    </instanceOf>\n");
    }
    if !topic.subject_identifiers.is_empty() {
        out.push_str("    <subjectIdentity>\n");
        for sid in &topic.subject_identifiers {
            out.push_str(&format!(
                "      <subjectIndicatorRef xlink:href=\"{}\"/>\n",
                attr_escape(sid.as_str())
            ));
        }
        out.push_str("    </subjectIdentity>\n");
    }
    for name in &topic.names {
        out.push_str("    <baseName>\n");
        write_scope(out, 6, &name.scope);
        out.push_str(&format!(
            "      <baseNameString>{}</baseNameString>\n",
            text_escape(&name.value)
        ));
        out.push_str("    </baseName>\n");
    }
    for occ in &topic.occurrences {
        out.push_str("    <occurrence>\n");
        if let Some(ty) = &occ.occurrence_type {
            out.push_str("      <instanceOf>\n");
            write_topic_ref(out, 8, ty);
            out.push_str("      </instanceOf>\n");
        }
        write_scope(out, 6, &occ.scope);
        match &occ.resource {
            ResourceLink::Reference(iri) => out.push_str(&format!(
                "      <resourceRef xlink:href=\"{}\"/>\n",
                attr_escape(iri.as_str())
            )),
            ResourceLink::Inline(data) => out.push_str(&format!(
                "      <resourceData>{}</resourceData>\n",
                text_escape(data)
            )),
        }
        out.push_str("    </occurrence>\n");
    }
    out.push_str("  </topic>\n");
}

fn write_association(out: &mut String, assoc: &Association) {
    out.push_str("  <association>\n");
    if let Some(ty) = &assoc.association_type {
        out.push_str("    <instanceOf>\n");
        write_topic_ref(out, 6, ty);
        out.push_str("    </instanceOf>\n");
    }
    write_scope(out, 4, &assoc.scope);
    // Canonical member order: sorted by (role, sorted players).
    let mut members: Vec<(Option<&TopicRef>, Vec<&TopicRef>)> = assoc
        .members
        .iter()
        .map(|m| {
            let mut players: Vec<&TopicRef> = m.players.iter().collect();
            players.sort();
            (m.role_type.as_ref(), players)
        })
        .collect();
    members.sort();
    for (role, players) in members {
        out.push_str("    <member>\n");
        if let Some(role) = role {
            out.push_str("      <roleSpec>\n");
            write_topic_ref(out, 8, role);
            out.push_str("      </roleSpec>\n");
        }
        for player in players {
            write_topic_ref(out, 6, player);
        }
        out.push_str("    </member>\n");
    }
    out.push_str("  </association>\n");
}

fn write_scope(out: &mut String, indent: usize, scope: &Scope) {
    if scope.is_universal() {
        return;
    }
    let pad = " ".repeat(indent);
    out.push_str(&format!("{pad}<scope>\n"));
    for theme in scope.themes() {
        write_topic_ref(out, indent + 2, theme);
    }
    out.push_str(&format!("{pad}</scope>\n"));
}

fn write_topic_ref(out: &mut String, indent: usize, r: &TopicRef) {
    let pad = " ".repeat(indent);
    out.push_str(&format!(
        "{pad}<topicRef xlink:href=\"#{}\"/>\n",
        attr_escape(r.as_str())
    ));
}

fn attr_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
    out
}

fn text_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Iri {
        Iri::new("urn:test:doc").unwrap()
    }

    fn parse(doc: &str) -> XtmDocument {
        parse_xtm(doc.as_bytes(), base()).unwrap()
    }

    const TWO_TOPICS: &str = r##"<?xml version="1.0"?>
<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <topic id="professor">
    <baseName><baseNameString>Professor</baseNameString></baseName>
  </topic>
  <topic id="rajkumar-kannan">
    <instanceOf><topicRef xlink:href="#professor"/></instanceOf>
    <baseName><baseNameString>Rajkumar Kannan</baseNameString></baseName>
  </topic>
</topicMap>"##;

    #[test]
    fn parses_topics_types_and_names() {
        let doc = parse(TWO_TOPICS);
        assert_eq!(doc.map.topic_count(), 2);
        assert!(doc.diagnostics.is_empty());
        let rk = doc.map.topic_by_id("rajkumar-kannan").unwrap();
        assert!(rk.types.contains(&TopicRef::new("professor")));
        assert_eq!(rk.names[0].value, "Rajkumar Kannan");
        assert!(doc.map.check_coherence().is_ok());
    }

    #[test]
    fn empty_root_parses_to_empty_map() {
        let doc = parse(
            r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink"/>"##,
        );
        assert_eq!(doc.map.topic_count(), 0);
        assert_eq!(doc.map.association_count(), 0);
        assert!(doc.diagnostics.is_empty());
    }

    #[test]
    fn undeclared_references_become_implicit_stubs() {
        let doc = parse(
            r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <topic id="NCAKM10-paper">
    <instanceOf><topicRef xlink:href="#journal"/></instanceOf>
    <baseName><baseNameString>Advances in Knowledge Management special Issue</baseNameString></baseName>
    <occurrence>
      <instanceOf><topicRef xlink:href="#pdf-format"/></instanceOf>
      <resourceRef xlink:href="http://www.rajkumarkannan.org/pub/ncakm10.pdf"/>
    </occurrence>
  </topic>
</topicMap>"##,
        );
        assert_eq!(doc.map.topic_count(), 3);
        let journal = doc.map.topic_by_id("journal").unwrap();
        assert!(journal.implicit);
        let pdf = doc.map.topic_by_id("pdf-format").unwrap();
        assert!(pdf.implicit);
        assert_eq!(doc.diagnostics.len(), 2);
        assert!(doc.map.dangling().is_empty());
        let paper = doc.map.topic_by_id("NCAKM10-paper").unwrap();
        let occ = &paper.occurrences[0];
        assert_eq!(
            occ.resource.reference().unwrap().as_str(),
            "http://www.rajkumarkannan.org/pub/ncakm10.pdf"
        );
    }

    #[test]
    fn external_topic_ref_binds_by_subject_identifier() {
        let doc = parse(
            r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <topic id="rk">
    <subjectIdentity><subjectIndicatorRef xlink:href="http://example.org/rk"/></subjectIdentity>
  </topic>
  <topic id="paper">
    <instanceOf><topicRef xlink:href="http://example.org/rk"/></instanceOf>
  </topic>
</topicMap>"##,
        );
        // The external reference resolves to rk; no stub is created.
        assert_eq!(doc.map.topic_count(), 2);
        let paper = doc.map.topic_by_id("paper").unwrap();
        assert!(paper.types.contains(&TopicRef::new("rk")));
    }

    #[test]
    fn external_topic_ref_without_owner_creates_identifier_stub() {
        let doc = parse(
            r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <topic id="paper">
    <instanceOf><topicRef xlink:href="http://example.org/kinds/journal"/></instanceOf>
  </topic>
</topicMap>"##,
        );
        assert_eq!(doc.map.topic_count(), 2);
        let stub = doc.map.topic_by_id("http-example-org-kinds-journal").unwrap();
        assert!(stub.implicit);
        assert!(stub
            .subject_identifiers
            .contains(&Iri::new("http://example.org/kinds/journal").unwrap()));
    }

    #[test]
    fn missing_id_and_missing_href_are_errors() {
        let no_id = r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/"><topic/></topicMap>"##;
        assert!(matches!(
            parse_xtm(no_id.as_bytes(), base()),
            Err(Error::Parse { .. })
        ));
        let no_href = r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <topic id="t"><instanceOf><topicRef/></instanceOf></topic>
</topicMap>"##;
        assert!(matches!(
            parse_xtm(no_href.as_bytes(), base()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn malformed_xml_reports_position() {
        let err = parse_xtm(b"<topicMap xmlns=\"http://www.topicmaps.org/xtm/1.0/\">\n  <topic", base())
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert!(line >= 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_xtm_root_is_an_error() {
        assert!(parse_xtm(b"<notAMap/>", base()).is_err());
        let wrong_ns = r##"<topicMap xmlns="http://example.org/other"/>"##;
        assert!(parse_xtm(wrong_ns.as_bytes(), base()).is_err());
    }

    #[test]
    fn unknown_elements_warn_and_skip() {
        let doc = parse(
            r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <mergeMap xlink:href="#x"/>
  <topic id="t">
    <baseName><baseNameString>T</baseNameString></baseName>
  </topic>
</topicMap>"##,
        );
        assert_eq!(doc.map.topic_count(), 1);
        assert_eq!(doc.diagnostics.len(), 1);
        assert!(doc.diagnostics[0].message.contains("mergeMap"));
    }

    #[test]
    fn empty_scope_element_is_recorded() {
        let doc = parse(
            r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <topic id="t">
    <baseName><scope/><baseNameString>T</baseNameString></baseName>
  </topic>
</topicMap>"##,
        );
        assert_eq!(
            doc.map.empty_scope_notes,
            vec![EmptyScopeNote::Name {
                topic: "t".into()
            }]
        );
    }

    #[test]
    fn whitespace_only_leaf_content_is_empty() {
        let doc = parse(
            r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/" xmlns:xlink="http://www.w3.org/1999/xlink">
  <topic id="t">
    <baseName><baseNameString>
    </baseNameString></baseName>
    <occurrence><resourceData>  kept  text  </resourceData></occurrence>
  </topic>
</topicMap>"##,
        );
        let t = doc.map.topic_by_id("t").unwrap();
        // Whitespace-only name value was dropped with a warning...
        assert!(t.names.is_empty());
        assert!(!doc.diagnostics.is_empty());
        // ...while real text keeps its bytes exactly.
        assert_eq!(t.occurrences[0].resource.inline(), Some("  kept  text  "));
    }

    #[test]
    fn duplicate_topic_id_is_an_error() {
        let doc = r##"<topicMap xmlns="http://www.topicmaps.org/xtm/1.0/">
  <topic id="t"/>
  <topic id="t"/>
</topicMap>"##;
        assert!(matches!(
            parse_xtm(doc.as_bytes(), base()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn serialize_empty_map_is_bare_root() {
        let mut map = TopicMap::create("urn:test:empty").unwrap();
        map.seal();
        let bytes = serialize_xtm(&map);
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text,
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<topicMap xmlns=\"http://www.topicmaps.org/xtm/1.0/\" xmlns:xlink=\"http://www.w3.org/1999/xlink\"/>\n"
        );
    }

    #[test]
    fn serializer_output_reparses_equal() {
        let doc = parse(TWO_TOPICS);
        let bytes = serialize_xtm(&doc.map);
        let again = parse_xtm(&bytes, base()).unwrap();
        assert_eq!(again.map.topic_count(), 2);
        let rk = again.map.topic_by_id("rajkumar-kannan").unwrap();
        assert_eq!(rk.names[0].value, "Rajkumar Kannan");
        // Serialization is deterministic on the same map.
        assert_eq!(bytes, serialize_xtm(&doc.map));
        assert_eq!(bytes, serialize_xtm(&again.map));
    }

    #[test]
    fn escaping_round_trips_special_characters() {
        let mut map = TopicMap::create("urn:test:esc").unwrap();
        map.add_topic(
            Topic::new("amp")
                .with_name("Fish & <Chips> \"quoted\"")
                .with_occurrence(Occurrence::inline("a < b && c > d")),
        )
        .unwrap();
        map.seal();
        let bytes = serialize_xtm(&map);
        let doc = parse_xtm(&bytes, base()).unwrap();
        let t = doc.map.topic_by_id("amp").unwrap();
        assert_eq!(t.names[0].value, "Fish & <Chips> \"quoted\"");
        assert_eq!(t.occurrences[0].resource.inline(), Some("a < b && c > d"));
    }

    #[test]
    fn association_members_serialize_in_canonical_order() {
        let mut map = TopicMap::create("urn:test:assoc").unwrap();
        for id in ["works-for", "teaching", "employer", "rk", "uni"] {
            map.add_topic(Topic::new(id)).unwrap();
        }
        map.add_association(
            Association::typed("works-for")
                .with_member(Some("teaching".into()), vec!["rk".into()])
                .with_member(Some("employer".into()), vec!["uni".into()]),
        )
        .unwrap();
        map.seal();
        let text = String::from_utf8(serialize_xtm(&map)).unwrap();
        let employer_at = text.find("#employer").unwrap();
        let teaching_at = text.find("#teaching").unwrap();
        assert!(employer_at < teaching_at, "members must be sorted by role");
        assert!(text.contains("<roleSpec>"));
    }
}
