//! The query language: conjunctive filters with optional association
//! traversal.
//!
//! ```text
//! query    := filter { "and" filter } [ "->" step { "->" step } ]
//! filter   := name(STRING) | contains(STRING) | type(IDENT) | id(IDENT)
//!           | scope(IDENT {"," IDENT})
//! step     := assoc(IDENT) [".role(" IDENT ")"] [".to(" IDENT ")"]
//! ```
//!
//! Keywords are case-insensitive; `IDENT` is an XML NCName; `STRING` is
//! double-quoted with backslash escapes. `name` matches a name value
//! exactly (case-insensitively), `contains` by case-insensitive
//! substring. `scope(...)` does not itself shrink the topic set — it
//! declares the context in which name filters look at names, per the
//! subset rule: a name is visible when its scope is a subset of the
//! context, and unscoped names are visible everywhere. Without any
//! `scope(...)` filter (and no ambient context from the caller) there is
//! no context, and every name is visible.
//!
//! A step walks associations of the given type from each topic in the
//! current set: the topic must play `role` (any role if omitted), and
//! the step collects the players of `to` (all other players if omitted),
//! never including the source topic itself.
//!
//! An unknown id anywhere in a filter or step empties the result and
//! records an informational note instead of failing.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Name, Scope, TopicMap, TopicRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    /// Case-insensitive exact match on a name value. Never empty.
    Name(String),
    /// Case-insensitive substring match on a name value. Never empty.
    Contains(String),
    /// Topic is an instance of the given topic.
    Type(String),
    /// Topic has (or had, via the alias table) the given id.
    Id(String),
    /// Context themes for name visibility; not a set predicate.
    ScopeCtx(Vec<String>),
}

impl Filter {
    fn kind(&self) -> &'static str {
        match self {
            Filter::Name(_) => "name",
            Filter::Contains(_) => "contains",
            Filter::Type(_) => "type",
            Filter::Id(_) => "id",
            Filter::ScopeCtx(_) => "scope",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub association_type: String,
    pub via_role: Option<String>,
    pub to_role: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub filters: Vec<Filter>,
    pub steps: Vec<Step>,
}

/// Evaluation output: matching topics in ascending id order, the names
/// that satisfied name/contains filters per topic (empty after a
/// traversal — reached topics were not matched by name), and any
/// informational notes (unknown ids, skipped dangling references).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultSet {
    pub topics: Vec<TopicRef>,
    pub matched_names: BTreeMap<String, Vec<Name>>,
    pub notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct QueryParser<'a> {
    text: &'a str,
    pos: usize,
}

pub fn parse_query(text: &str) -> Result<Query> {
    let mut p = QueryParser { text, pos: 0 };
    let mut filters = vec![p.parse_filter()?];
    loop {
        p.skip_ws();
        let mark = p.pos;
        match p.peek_word() {
            Some(w) if w.eq_ignore_ascii_case("and") => {
                p.take_word();
                filters.push(p.parse_filter()?);
            }
            _ => {
                p.pos = mark;
                break;
            }
        }
    }
    let mut steps = Vec::new();
    loop {
        p.skip_ws();
        if p.rest().starts_with("->") {
            p.pos += 2;
            steps.push(p.parse_step()?);
        } else {
            break;
        }
    }
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(p.err("\"and\", \"->\", or end of query"));
    }
    Ok(Query { filters, steps })
}

impl<'a> QueryParser<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_whitespace()) {
            self.pos += self.rest().chars().next().map_or(0, char::len_utf8);
        }
    }

    fn err(&self, expected: &str) -> Error {
        Error::QuerySyntax {
            offset: self.pos,
            expected: expected.to_owned(),
        }
    }

    /// The identifier-shaped word at the cursor, without consuming it.
    fn peek_word(&self) -> Option<&'a str> {
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(_, c)| !is_ncname_char(*c))
            .map_or(rest.len(), |(i, _)| i);
        if end == 0 {
            None
        } else {
            Some(&rest[..end])
        }
    }

    fn take_word(&mut self) -> &'a str {
        let word = self.peek_word().unwrap_or("");
        self.pos += word.len();
        word
    }

    fn expect_char(&mut self, c: char, expected: &str) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(expected))
        }
    }

    fn parse_ident(&mut self) -> Result<String> {
        self.skip_ws();
        let Some(word) = self.peek_word() else {
            return Err(self.err("identifier"));
        };
        if !word.chars().next().is_some_and(is_ncname_start) {
            return Err(self.err("identifier"));
        }
        self.take_word();
        Ok(word.to_owned())
    }

    fn parse_string(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        if !self.rest().starts_with('"') {
            return Err(self.err("string literal"));
        }
        self.pos += 1;
        let mut value = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(value);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, 't')) => value.push('\t'),
                    Some((_, other)) => value.push(other),
                    None => break,
                },
                other => value.push(other),
            }
        }
        self.pos = start;
        Err(self.err("closing '\"'"))
    }

    fn parse_filter(&mut self) -> Result<Filter> {
        self.skip_ws();
        let keyword_at = self.pos;
        let Some(word) = self.peek_word() else {
            return Err(self.err("filter keyword (name, contains, type, id, scope)"));
        };
        let keyword = word.to_lowercase();
        self.take_word();
        let filter = match keyword.as_str() {
            "name" | "contains" => {
                self.expect_char('(', "'('")?;
                self.skip_ws();
                let literal_at = self.pos;
                let value = self.parse_string()?;
                if value.is_empty() {
                    return Err(Error::QuerySyntax {
                        offset: literal_at,
                        expected: "non-empty string literal".to_owned(),
                    });
                }
                self.expect_char(')', "')'")?;
                if keyword == "name" {
                    Filter::Name(value)
                } else {
                    Filter::Contains(value)
                }
            }
            "type" | "id" => {
                self.expect_char('(', "'('")?;
                let ident = self.parse_ident()?;
                self.expect_char(')', "')'")?;
                if keyword == "type" {
                    Filter::Type(ident)
                } else {
                    Filter::Id(ident)
                }
            }
            "scope" => {
                self.expect_char('(', "'('")?;
                let mut ids = vec![self.parse_ident()?];
                loop {
                    self.skip_ws();
                    if self.rest().starts_with(',') {
                        self.pos += 1;
                        ids.push(self.parse_ident()?);
                    } else {
                        break;
                    }
                }
                self.expect_char(')', "')'")?;
                Filter::ScopeCtx(ids)
            }
            _ => {
                self.pos = keyword_at;
                return Err(self.err("filter keyword (name, contains, type, id, scope)"));
            }
        };
        Ok(filter)
    }

    fn parse_step(&mut self) -> Result<Step> {
        self.skip_ws();
        let keyword_at = self.pos;
        let word = self.peek_word().unwrap_or("");
        if !word.eq_ignore_ascii_case("assoc") {
            self.pos = keyword_at;
            return Err(self.err("\"assoc\""));
        }
        self.take_word();
        self.expect_char('(', "'('")?;
        let association_type = self.parse_ident()?;
        self.expect_char(')', "')'")?;
        let mut via_role = None;
        let mut to_role = None;
        for slot in ["role", "to"] {
            self.skip_ws();
            let mark = self.pos;
            if !self.rest().starts_with('.') {
                break;
            }
            self.pos += 1;
            self.skip_ws();
            let word = self.peek_word().unwrap_or("");
            if word.eq_ignore_ascii_case("role") && slot == "role" {
                self.take_word();
                self.expect_char('(', "'('")?;
                via_role = Some(self.parse_ident()?);
                self.expect_char(')', "')'")?;
            } else if word.eq_ignore_ascii_case("to") {
                self.take_word();
                self.expect_char('(', "'('")?;
                to_role = Some(self.parse_ident()?);
                self.expect_char(')', "')'")?;
                break;
            } else {
                self.pos = mark;
                return Err(self.err(if slot == "role" {
                    "\".role(\" or \".to(\""
                } else {
                    "\".to(\""
                }));
            }
        }
        Ok(Step {
            association_type,
            via_role,
            to_role,
        })
    }
}

fn is_ncname_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ncname_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '.' | '-' | '_')
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluate with no ambient context: visibility is governed solely by
/// the query's own `scope(...)` filters.
pub fn eval(map: &TopicMap, q: &Query) -> ResultSet {
    eval_in_context(map, q, None)
}

/// Evaluate under an ambient context (for example, a CLI-supplied one).
/// The effective context is the union of the ambient themes and all
/// `scope(...)` filter themes; if neither exists there is no context and
/// every name is visible. An explicitly empty ambient context is
/// meaningful: only unscoped names are visible in it.
pub fn eval_in_context(map: &TopicMap, q: &Query, ambient: Option<&Scope>) -> ResultSet {
    run(map, q, ambient).0
}

/// A deterministic text trace: one line per filter with the candidate
/// count after it, one line per step with the reached count, notes as
/// they arise, and the final result size.
pub fn explain(map: &TopicMap, q: &Query) -> String {
    let mut lines = run(map, q, None).1;
    lines.push(String::new());
    lines.join("\n")
}

fn count_noun(n: usize, singular: &str, plural: &str) -> String {
    format!("{n} {}", if n == 1 { singular } else { plural })
}

fn run(map: &TopicMap, q: &Query, ambient: Option<&Scope>) -> (ResultSet, Vec<String>) {
    let mut notes: Vec<String> = Vec::new();
    let mut trace: Vec<String> = Vec::new();
    let mut failed = false;
    let note = |notes: &mut Vec<String>, trace: &mut Vec<String>, text: String| {
        trace.push(format!("note: {text}"));
        if !notes.contains(&text) {
            notes.push(text);
        }
    };

    // The context is assembled from every scope filter (plus the ambient
    // context) before any filter runs: conjunction is order-independent.
    let mut themes: BTreeSet<TopicRef> = ambient
        .map(|s| s.themes().cloned().collect())
        .unwrap_or_default();
    let mut have_context = ambient.is_some();
    let mut scope_notes: Vec<(usize, String)> = Vec::new();
    for (i, filter) in q.filters.iter().enumerate() {
        if let Filter::ScopeCtx(ids) = filter {
            have_context = true;
            for id in ids {
                match map.resolve_id(id) {
                    Some(live) => {
                        themes.insert(TopicRef::new(live));
                    }
                    None => {
                        failed = true;
                        scope_notes.push((i, format!("unknown id: {id}")));
                    }
                }
            }
        }
    }
    let context = have_context.then(|| Scope::of(themes));
    let context = context.as_ref();

    let mut set: BTreeSet<String> = if failed {
        BTreeSet::new()
    } else {
        map.topics().map(|t| t.id.clone()).collect()
    };

    for (i, filter) in q.filters.iter().enumerate() {
        match filter {
            Filter::Name(value) => {
                let needle = value.to_lowercase();
                set.retain(|id| {
                    let topic = map.topic_by_id(id).expect("set holds live ids");
                    topic
                        .names_in_context(context)
                        .iter()
                        .any(|n| n.value.to_lowercase() == needle)
                });
            }
            Filter::Contains(value) => {
                let needle = value.to_lowercase();
                set.retain(|id| {
                    let topic = map.topic_by_id(id).expect("set holds live ids");
                    topic
                        .names_in_context(context)
                        .iter()
                        .any(|n| n.value.to_lowercase().contains(&needle))
                });
            }
            Filter::Type(ty) => match map.resolve_id(ty) {
                Some(_) => {
                    let allowed: BTreeSet<String> = map
                        .topics_of_type(&TopicRef::new(ty.as_str()))
                        .into_iter()
                        .map(|t| t.id.clone())
                        .collect();
                    set.retain(|id| allowed.contains(id));
                }
                None => {
                    set.clear();
                    note(&mut notes, &mut trace, format!("unknown id: {ty}"));
                }
            },
            Filter::Id(id) => match map.resolve_id(id) {
                Some(live) => {
                    let live = live.to_owned();
                    set.retain(|candidate| *candidate == live);
                }
                None => {
                    set.clear();
                    note(&mut notes, &mut trace, format!("unknown id: {id}"));
                }
            },
            Filter::ScopeCtx(_) => {
                // Context only; the set is untouched. Unknown theme ids
                // were detected while assembling the context.
                for (_, text) in scope_notes.iter().filter(|(idx, _)| *idx == i) {
                    note(&mut notes, &mut trace, text.clone());
                }
            }
        }
        trace.push(format!(
            "filter {}: {}",
            filter.kind(),
            count_noun(set.len(), "candidate", "candidates")
        ));
    }

    // Names that satisfied the name/contains filters, while the set still
    // reflects filtering (a traversal clears this).
    let mut matched_names: BTreeMap<String, Vec<Name>> = BTreeMap::new();
    let name_needles: Vec<(bool, String)> = q
        .filters
        .iter()
        .filter_map(|f| match f {
            Filter::Name(v) => Some((true, v.to_lowercase())),
            Filter::Contains(v) => Some((false, v.to_lowercase())),
            _ => None,
        })
        .collect();
    if !name_needles.is_empty() {
        for id in &set {
            let topic = map.topic_by_id(id).expect("set holds live ids");
            let matched: Vec<Name> = topic
                .names_in_context(context)
                .into_iter()
                .filter(|n| {
                    let lower = n.value.to_lowercase();
                    name_needles.iter().any(|(exact, needle)| {
                        if *exact {
                            lower == *needle
                        } else {
                            lower.contains(needle)
                        }
                    })
                })
                .cloned()
                .collect();
            if !matched.is_empty() {
                matched_names.insert(id.clone(), matched);
            }
        }
    }

    for step in &q.steps {
        let mut reached: BTreeSet<String> = BTreeSet::new();
        let assoc_type = map.resolve_id(&step.association_type).map(str::to_owned);
        let via = step
            .via_role
            .as_ref()
            .map(|r| (r, map.resolve_id(r).map(str::to_owned)));
        let to = step
            .to_role
            .as_ref()
            .map(|r| (r, map.resolve_id(r).map(str::to_owned)));
        let mut step_ok = true;
        if assoc_type.is_none() {
            note(
                &mut notes,
                &mut trace,
                format!("unknown id: {}", step.association_type),
            );
            step_ok = false;
        }
        for (raw, resolved) in [&via, &to].into_iter().flatten() {
            if resolved.is_none() {
                note(&mut notes, &mut trace, format!("unknown id: {raw}"));
                step_ok = false;
            }
        }
        if step_ok {
            let assoc_type = assoc_type.as_deref().expect("checked above");
            let via = via.as_ref().and_then(|(_, r)| r.as_deref());
            let to = to.as_ref().and_then(|(_, r)| r.as_deref());
            for source in &set {
                for assoc in map.associations() {
                    let ty = assoc
                        .association_type
                        .as_ref()
                        .and_then(|t| map.resolve_id(t.as_str()));
                    if ty != Some(assoc_type) {
                        continue;
                    }
                    let plays = assoc.members.iter().any(|member| {
                        let in_member = member
                            .players
                            .iter()
                            .any(|p| map.resolve_id(p.as_str()) == Some(source.as_str()));
                        let role_ok = match via {
                            None => true,
                            Some(via) => member
                                .role_type
                                .as_ref()
                                .and_then(|r| map.resolve_id(r.as_str()))
                                == Some(via),
                        };
                        in_member && role_ok
                    });
                    if !plays {
                        continue;
                    }
                    for member in &assoc.members {
                        if let Some(to) = to {
                            let role = member
                                .role_type
                                .as_ref()
                                .and_then(|r| map.resolve_id(r.as_str()));
                            if role != Some(to) {
                                continue;
                            }
                        }
                        for player in &member.players {
                            match map.resolve_id(player.as_str()) {
                                Some(live) if live != source.as_str() => {
                                    reached.insert(live.to_owned());
                                }
                                Some(_) => {}
                                None => note(
                                    &mut notes,
                                    &mut trace,
                                    format!("dangling reference skipped: {}", player.as_str()),
                                ),
                            }
                        }
                    }
                }
            }
        }
        set = reached;
        matched_names.clear();
        trace.push(format!(
            "step assoc({}): {} reached",
            step.association_type,
            set.len()
        ));
    }

    trace.push(format!(
        "result: {}",
        count_noun(set.len(), "topic", "topics")
    ));
    let result = ResultSet {
        topics: set.into_iter().map(TopicRef::new).collect(),
        matched_names,
        notes,
    };
    (result, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Association, Occurrence, Topic};

    fn tirupathi_map() -> TopicMap {
        let mut map = TopicMap::create("urn:test:q").unwrap();
        map.add_topic(Topic::new("city").with_name("City")).unwrap();
        map.add_topic(Topic::new("person").with_name("Person")).unwrap();
        map.add_topic(
            Topic::new("tirupathi-city")
                .with_type("city")
                .with_name("Tirupathi"),
        )
        .unwrap();
        map.add_topic(
            Topic::new("tirupathi-person")
                .with_type("person")
                .with_name("Tirupathi"),
        )
        .unwrap();
        map.seal();
        map
    }

    fn faculty_map() -> TopicMap {
        let mut map = TopicMap::create("urn:test:f").unwrap();
        for id in ["professor", "university", "works-for", "employer", "teaching"] {
            map.add_topic(Topic::new(id)).unwrap();
        }
        map.add_topic(
            Topic::new("rajkumar-kannan")
                .with_type("professor")
                .with_name("Rajkumar Kannan")
                .with_scoped_name("Dr Rajkumar Kannan", Scope::of(["university"])),
        )
        .unwrap();
        map.add_association(
            Association::typed("works-for")
                .with_member(Some("employer".into()), vec!["university".into()])
                .with_member(Some("teaching".into()), vec!["rajkumar-kannan".into()]),
        )
        .unwrap();
        map.seal();
        map
    }

    fn ids(result: &ResultSet) -> Vec<&str> {
        result.topics.iter().map(|t| t.as_str()).collect()
    }

    #[test]
    fn grammar_parses_the_full_surface() {
        let q = parse_query(
            r#"name("Tirupathi") and type(city) AND contains("pathi") and id(tirupathi-city) and scope(a, b)"#,
        )
        .unwrap();
        assert_eq!(q.filters.len(), 5);
        assert_eq!(q.filters[0], Filter::Name("Tirupathi".into()));
        assert_eq!(q.filters[2], Filter::Contains("pathi".into()));
        assert_eq!(
            q.filters[4],
            Filter::ScopeCtx(vec!["a".into(), "b".into()])
        );
        assert!(q.steps.is_empty());

        let q = parse_query(
            "id(rajkumar-kannan) -> assoc(works-for).role(teaching).to(employer) -> Assoc(x)",
        )
        .unwrap();
        assert_eq!(q.steps.len(), 2);
        assert_eq!(
            q.steps[0],
            Step {
                association_type: "works-for".into(),
                via_role: Some("teaching".into()),
                to_role: Some("employer".into()),
            }
        );
        assert_eq!(q.steps[1].association_type, "x");
        assert_eq!(q.steps[1].via_role, None);
    }

    #[test]
    fn string_escapes() {
        let q = parse_query(r#"name("a \"quoted\" name\nwith\tescapes \x")"#).unwrap();
        assert_eq!(
            q.filters[0],
            Filter::Name("a \"quoted\" name\nwith\tescapes x".into())
        );
    }

    #[test]
    fn syntax_errors_carry_offset_and_expectation() {
        let err = parse_query("").unwrap_err();
        match err {
            Error::QuerySyntax { offset, expected } => {
                assert_eq!(offset, 0);
                assert!(expected.contains("filter keyword"));
            }
            other => panic!("unexpected {other:?}"),
        }

        let err = parse_query(r#"name("")"#).unwrap_err();
        match err {
            Error::QuerySyntax { offset, expected } => {
                assert_eq!(offset, 5);
                assert_eq!(expected, "non-empty string literal");
            }
            other => panic!("unexpected {other:?}"),
        }

        assert!(parse_query(r#"contains("")"#).is_err());
        assert!(parse_query("name(unquoted)").is_err());
        assert!(parse_query(r#"name("x") garbage"#).is_err());
        assert!(parse_query("scope()").is_err());
        assert!(parse_query(r#"name("x") ->"#).is_err());
        assert!(parse_query(r#"name("x") -> assoc(a).to(b).role(c)"#).is_err());
        assert!(parse_query(r#"name("unterminated"#).is_err());
        assert!(parse_query("type(1bad)").is_err());
    }

    #[test]
    fn name_then_type_narrows_to_the_city() {
        let map = tirupathi_map();
        let both = eval(&map, &parse_query(r#"name("Tirupathi")"#).unwrap());
        assert_eq!(ids(&both), vec!["tirupathi-city", "tirupathi-person"]);
        let city = eval(
            &map,
            &parse_query(r#"name("Tirupathi") and type(city)"#).unwrap(),
        );
        assert_eq!(ids(&city), vec!["tirupathi-city"]);
        assert_eq!(
            city.matched_names["tirupathi-city"][0].value,
            "Tirupathi"
        );
    }

    #[test]
    fn name_match_is_case_insensitive() {
        let map = tirupathi_map();
        let result = eval(&map, &parse_query(r#"name("tirupathi")"#).unwrap());
        assert_eq!(result.topics.len(), 2);
        let result = eval(&map, &parse_query(r#"contains("PATHI")"#).unwrap());
        assert_eq!(result.topics.len(), 2);
    }

    #[test]
    fn scope_filter_gates_name_visibility() {
        let map = faculty_map();
        let scoped = eval(
            &map,
            &parse_query(r#"name("Dr Rajkumar Kannan") and scope(university)"#).unwrap(),
        );
        assert_eq!(ids(&scoped), vec!["rajkumar-kannan"]);
        // No scope filter, no ambient: every name is visible.
        let open = eval(&map, &parse_query(r#"name("Dr Rajkumar Kannan")"#).unwrap());
        assert_eq!(ids(&open), vec!["rajkumar-kannan"]);
        // Explicit empty ambient context: the scoped name disappears...
        let empty_ctx = eval_in_context(
            &map,
            &parse_query(r#"name("Dr Rajkumar Kannan")"#).unwrap(),
            Some(&Scope::universal()),
        );
        assert!(empty_ctx.topics.is_empty());
        // ...while the unscoped one stays reachable in any context.
        for ambient in [None, Some(Scope::universal()), Some(Scope::of(["university"]))] {
            let r = eval_in_context(
                &map,
                &parse_query(r#"name("Rajkumar Kannan")"#).unwrap(),
                ambient.as_ref(),
            );
            assert_eq!(ids(&r), vec!["rajkumar-kannan"], "{ambient:?}");
        }
    }

    #[test]
    fn traversal_reaches_the_other_members() {
        let map = faculty_map();
        for query in [
            "id(rajkumar-kannan) -> assoc(works-for)",
            "id(rajkumar-kannan) -> assoc(works-for).role(teaching)",
            "id(rajkumar-kannan) -> assoc(works-for).to(employer)",
            "id(rajkumar-kannan) -> assoc(works-for).role(teaching).to(employer)",
        ] {
            let result = eval(&map, &parse_query(query).unwrap());
            assert_eq!(ids(&result), vec!["university"], "{query}");
            assert!(result.matched_names.is_empty(), "{query}");
        }
        // Wrong via-role: rajkumar-kannan does not play employer.
        let none = eval(
            &map,
            &parse_query("id(rajkumar-kannan) -> assoc(works-for).role(employer)").unwrap(),
        );
        assert!(none.topics.is_empty());
    }

    #[test]
    fn traversal_is_symmetric_without_role_constraints() {
        let map = faculty_map();
        let from_rk = eval(&map, &parse_query("id(rajkumar-kannan) -> assoc(works-for)").unwrap());
        assert_eq!(ids(&from_rk), vec!["university"]);
        let back = eval(&map, &parse_query("id(university) -> assoc(works-for)").unwrap());
        assert_eq!(ids(&back), vec!["rajkumar-kannan"]);
    }

    #[test]
    fn unknown_ids_empty_the_result_with_a_note() {
        let map = tirupathi_map();
        for query in [
            "type(nosuch)",
            "id(nosuch)",
            r#"name("Tirupathi") and scope(nosuch)"#,
            "id(tirupathi-city) -> assoc(nosuch)",
            "id(tirupathi-city) -> assoc(city).role(nosuch)",
        ] {
            let result = eval(&map, &parse_query(query).unwrap());
            assert!(result.topics.is_empty(), "{query}");
            assert_eq!(result.notes, vec!["unknown id: nosuch"], "{query}");
        }
    }

    #[test]
    fn conjunction_equals_intersection_of_predicate_filters() {
        let map = faculty_map();
        let a = eval(&map, &parse_query(r#"contains("Kannan")"#).unwrap());
        let b = eval(&map, &parse_query("type(professor)").unwrap());
        let both = eval(
            &map,
            &parse_query(r#"contains("Kannan") and type(professor)"#).unwrap(),
        );
        let expected: Vec<&str> = ids(&a)
            .into_iter()
            .filter(|id| ids(&b).contains(id))
            .collect();
        assert_eq!(ids(&both), expected);
    }

    #[test]
    fn explain_traces_filters_steps_and_result() {
        let map = tirupathi_map();
        let q = parse_query(r#"name("Tirupathi") and type(city)"#).unwrap();
        assert_eq!(
            explain(&map, &q),
            "filter name: 2 candidates\nfilter type: 1 candidate\nresult: 1 topic\n"
        );
        let map = faculty_map();
        let q = parse_query("id(rajkumar-kannan) -> assoc(works-for)").unwrap();
        assert_eq!(
            explain(&map, &q),
            "filter id: 1 candidate\nstep assoc(works-for): 1 reached\nresult: 1 topic\n"
        );
        let q = parse_query("type(ghost)").unwrap();
        assert_eq!(
            explain(&map, &q),
            "note: unknown id: ghost\nfilter type: 0 candidates\nresult: 0 topics\n"
        );
    }

    #[test]
    fn explain_on_empty_map_shows_zero_counts() {
        let mut map = TopicMap::create("urn:test:none").unwrap();
        map.seal();
        let q = parse_query(r#"contains("x")"#).unwrap();
        assert_eq!(
            explain(&map, &q),
            "filter contains: 0 candidates\nresult: 0 topics\n"
        );
    }

    #[test]
    fn dangling_player_is_skipped_with_a_note() {
        let mut map = TopicMap::create("urn:test:d").unwrap();
        map.add_topic(Topic::new("w")).unwrap();
        map.add_topic(Topic::new("rk")).unwrap();
        map.add_association(
            Association::typed("w").with_member(None, vec!["rk".into(), "ghost".into()]),
        )
        .unwrap();
        map.seal();
        let result = eval(&map, &parse_query("id(rk) -> assoc(w)").unwrap());
        assert!(result.topics.is_empty());
        assert_eq!(result.notes, vec!["dangling reference skipped: ghost"]);
    }

    #[test]
    fn occurrences_do_not_leak_into_query_results() {
        // Queries are name/type/id/scope driven; a topic found only via
        // its occurrence data must not appear.
        let mut map = TopicMap::create("urn:test:o").unwrap();
        map.add_topic(Topic::new("t").with_occurrence(Occurrence::inline("Tirupathi"))).unwrap();
        map.seal();
        let result = eval(&map, &parse_query(r#"name("Tirupathi")"#).unwrap());
        assert!(result.topics.is_empty());
    }
}
