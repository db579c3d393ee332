//! In-memory topic map model: topics, associations, occurrences, scopes,
//! and the map container with its lookup indexes.
//!
//! Everything here is deliberately deterministic: sets are `BTreeSet`s,
//! the topic collection is a `BTreeMap` keyed by id, and derived indexes
//! are plain sorted structures, so iteration order never depends on hash
//! seeds and serialized output is stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::iri::Iri;

/// Reference to a topic by its map-local id. The target may be an alias
/// (the id of a topic absorbed by a merge); [`TopicMap::topic_by_id`]
/// resolves through the alias table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopicRef(String);

impl TopicRef {
    pub fn new(target: impl Into<String>) -> Self {
        TopicRef(target.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TopicRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TopicRef {
    fn from(s: &str) -> Self {
        TopicRef::new(s)
    }
}

impl From<String> for TopicRef {
    fn from(s: String) -> Self {
        TopicRef::new(s)
    }
}

/// A set of topic references giving the context in which a name or
/// occurrence is valid. The empty scope is universal: it applies in
/// every context.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scope {
    themes: BTreeSet<TopicRef>,
}

impl Scope {
    /// The empty scope, valid everywhere.
    pub fn universal() -> Self {
        Scope::default()
    }

    pub fn of<I, T>(themes: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<TopicRef>,
    {
        Scope {
            themes: themes.into_iter().map(Into::into).collect(),
        }
    }

    pub fn insert(&mut self, theme: TopicRef) {
        self.themes.insert(theme);
    }

    pub fn is_universal(&self) -> bool {
        self.themes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.themes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.themes.is_empty()
    }

    pub fn contains(&self, theme: &TopicRef) -> bool {
        self.themes.contains(theme)
    }

    pub fn themes(&self) -> impl Iterator<Item = &TopicRef> {
        self.themes.iter()
    }

    /// The applicability rule: a scope applies in context `C` iff it is a
    /// subset of `C`. The empty scope is a subset of everything, which is
    /// exactly its "valid everywhere" reading.
    pub fn applies_in(&self, context: &Scope) -> bool {
        self.themes.is_subset(&context.themes)
    }

    /// Like [`Scope::applies_in`], with `None` meaning "no context
    /// filtering at all" — everything applies.
    pub fn applicable(&self, context: Option<&Scope>) -> bool {
        match context {
            None => true,
            Some(c) => self.applies_in(c),
        }
    }

    /// Union of two scopes (used to combine query context sources).
    pub fn union(&self, other: &Scope) -> Scope {
        Scope {
            themes: self.themes.union(&other.themes).cloned().collect(),
        }
    }
}

/// A scoped base name. Two names are equal iff value and scope are equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    pub value: String,
    pub scope: Scope,
}

impl Name {
    pub fn new(value: impl Into<String>) -> Self {
        Name {
            value: value.into(),
            scope: Scope::universal(),
        }
    }

    pub fn scoped(value: impl Into<String>, scope: Scope) -> Self {
        Name {
            value: value.into(),
            scope,
        }
    }
}

/// Link from a topic into resource space: either a reference to an
/// external resource or a literal inline string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceLink {
    Reference(Iri),
    Inline(String),
}

impl ResourceLink {
    pub fn reference(&self) -> Option<&Iri> {
        match self {
            ResourceLink::Reference(iri) => Some(iri),
            ResourceLink::Inline(_) => None,
        }
    }

    pub fn inline(&self) -> Option<&str> {
        match self {
            ResourceLink::Reference(_) => None,
            ResourceLink::Inline(data) => Some(data),
        }
    }
}

/// A typed, scoped link from a topic to an information resource.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub occurrence_type: Option<TopicRef>,
    pub scope: Scope,
    pub resource: ResourceLink,
}

impl Occurrence {
    pub fn reference(iri: Iri) -> Self {
        Occurrence {
            occurrence_type: None,
            scope: Scope::universal(),
            resource: ResourceLink::Reference(iri),
        }
    }

    pub fn inline(data: impl Into<String>) -> Self {
        Occurrence {
            occurrence_type: None,
            scope: Scope::universal(),
            resource: ResourceLink::Inline(data.into()),
        }
    }

    pub fn typed(mut self, occurrence_type: impl Into<TopicRef>) -> Self {
        self.occurrence_type = Some(occurrence_type.into());
        self
    }

    pub fn scoped(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }
}

/// A topic: map-local proxy for some subject, carrying identity, names,
/// type links, and occurrences.
#[derive(Debug, Clone)]
pub struct Topic {
    pub id: String,
    pub subject_identifiers: BTreeSet<Iri>,
    pub types: BTreeSet<TopicRef>,
    /// Document order preserved; duplicate (value, scope) pairs are
    /// collapsed by [`Topic::add_name`].
    pub names: Vec<Name>,
    pub occurrences: Vec<Occurrence>,
    /// True for stub topics auto-created when a reference targeted an
    /// undeclared id. Cleared when a merge folds in an authored topic.
    pub implicit: bool,
}

impl Topic {
    pub fn new(id: impl Into<String>) -> Self {
        Topic {
            id: id.into(),
            subject_identifiers: BTreeSet::new(),
            types: BTreeSet::new(),
            names: Vec::new(),
            occurrences: Vec::new(),
            implicit: false,
        }
    }

    pub fn with_name(mut self, value: impl Into<String>) -> Self {
        self.add_name(Name::new(value));
        self
    }

    pub fn with_scoped_name(mut self, value: impl Into<String>, scope: Scope) -> Self {
        self.add_name(Name::scoped(value, scope));
        self
    }

    pub fn with_type(mut self, type_ref: impl Into<TopicRef>) -> Self {
        self.types.insert(type_ref.into());
        self
    }

    pub fn with_subject_identifier(mut self, iri: Iri) -> Self {
        self.subject_identifiers.insert(iri);
        self
    }

    pub fn with_occurrence(mut self, occurrence: Occurrence) -> Self {
        self.occurrences.push(occurrence);
        self
    }

    /// Append a name, silently collapsing an exact (value, scope) duplicate.
    /// Returns true if the name was actually added.
    pub fn add_name(&mut self, name: Name) -> bool {
        if self.names.contains(&name) {
            return false;
        }
        self.names.push(name);
        true
    }

    /// Names applicable in `context`: all of them when `context` is absent,
    /// otherwise those whose scope is a subset of the context (which always
    /// includes unscoped names).
    pub fn names_in_context(&self, context: Option<&Scope>) -> Vec<&Name> {
        self.names
            .iter()
            .filter(|n| n.scope.applicable(context))
            .collect()
    }

    /// Occurrences passing the optional type filter and the same scope
    /// rule as [`Topic::names_in_context`]. The type filter compares
    /// references literally; callers holding a merged map should pass the
    /// surviving id.
    pub fn occurrences_of(
        &self,
        type_filter: Option<&TopicRef>,
        context: Option<&Scope>,
    ) -> Vec<&Occurrence> {
        self.occurrences
            .iter()
            .filter(|o| match type_filter {
                None => true,
                Some(t) => o.occurrence_type.as_ref() == Some(t),
            })
            .filter(|o| o.scope.applicable(context))
            .collect()
    }

    /// True when the topic carries nothing beyond its id — the shape a
    /// reified stub has before anything merges into it.
    pub fn is_empty(&self) -> bool {
        self.subject_identifiers.is_empty()
            && self.types.is_empty()
            && self.names.is_empty()
            && self.occurrences.is_empty()
    }
}

/// One member of an association: an optional role type and the topics
/// playing that role.
#[derive(Debug, Clone)]
pub struct Member {
    pub role_type: Option<TopicRef>,
    pub players: Vec<TopicRef>,
}

impl Member {
    pub fn new(role_type: Option<TopicRef>, players: Vec<TopicRef>) -> Self {
        Member { role_type, players }
    }
}

/// A typed n-ary relation between topics. There is no directionality:
/// equality, ordering and hashing all go through a canonical projection
/// in which members (and players within a member) are sorted, so two
/// associations differing only in member or player order are equal.
#[derive(Debug, Clone)]
pub struct Association {
    pub association_type: Option<TopicRef>,
    pub scope: Scope,
    pub members: Vec<Member>,
}

type AssocCanon<'a> = (
    Option<&'a TopicRef>,
    &'a Scope,
    Vec<(Option<&'a TopicRef>, Vec<&'a TopicRef>)>,
);

impl Association {
    pub fn new(association_type: Option<TopicRef>) -> Self {
        Association {
            association_type,
            scope: Scope::universal(),
            members: Vec::new(),
        }
    }

    pub fn typed(association_type: impl Into<TopicRef>) -> Self {
        Association::new(Some(association_type.into()))
    }

    pub fn with_member(mut self, role_type: Option<TopicRef>, players: Vec<TopicRef>) -> Self {
        self.members.push(Member::new(role_type, players));
        self
    }

    pub fn with_scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }

    /// All player references across all members, in stored order.
    pub fn players_flat(&self) -> impl Iterator<Item = &TopicRef> {
        self.members.iter().flat_map(|m| m.players.iter())
    }

    /// The order-insensitive view equality and ordering are defined over.
    pub(crate) fn canon(&self) -> AssocCanon<'_> {
        let mut members: Vec<(Option<&TopicRef>, Vec<&TopicRef>)> = self
            .members
            .iter()
            .map(|m| {
                let mut players: Vec<&TopicRef> = m.players.iter().collect();
                players.sort();
                (m.role_type.as_ref(), players)
            })
            .collect();
        members.sort();
        (self.association_type.as_ref(), &self.scope, members)
    }
}

impl PartialEq for Association {
    fn eq(&self, other: &Self) -> bool {
        self.canon() == other.canon()
    }
}

impl Eq for Association {}

impl PartialOrd for Association {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Association {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.canon().cmp(&other.canon())
    }
}

impl Hash for Association {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canon().hash(state);
    }
}

/// Handle returned by [`TopicMap::add_association`]: the position of the
/// association in insertion order. Stable for the lifetime of the map it
/// came from; a merge builds a fresh map with fresh handles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssocHandle(pub usize);

/// Result of [`TopicMap::players`]: resolvable players as topics, plus
/// any dangling references encountered instead of silently dropping them.
#[derive(Debug)]
pub struct Players<'a> {
    pub resolved: Vec<&'a Topic>,
    pub unresolved: Vec<&'a TopicRef>,
}

/// Parse-time fact that an empty `<scope/>` element was present. The
/// in-model representation of "no themes" is the universal scope, so
/// without this note the validator could not tell an omitted scope
/// element from an empty one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum EmptyScopeNote {
    Name { topic: String },
    Occurrence { topic: String },
    Association { assoc_type: Option<String> },
}

/// The topic map: topic space plus association list plus derived indexes.
///
/// Construction runs under a single-writer contract; after [`TopicMap::seal`]
/// the map is immutable (mutating operations return [`Error::Sealed`]) and
/// safely shareable across threads for reads. Read operations themselves
/// never require the seal — operations documented as expecting a sealed map
/// simply assume construction is finished.
#[derive(Debug, Clone)]
pub struct TopicMap {
    base_locator: Iri,
    topics: BTreeMap<String, Topic>,
    associations: Vec<Association>,
    /// absorbed id → surviving id; kept fully resolved (no entry maps to
    /// another absorbed id) and never shadowing a live topic id.
    aliases: BTreeMap<String, String>,
    /// Reference targets stored somewhere in the map that currently
    /// resolve to nothing (neither a topic nor an alias).
    dangling: BTreeSet<String>,
    /// Empty-scope-element facts recorded at parse time.
    pub(crate) empty_scope_notes: Vec<EmptyScopeNote>,
    sealed: bool,
    // Derived indexes, maintained on every mutation.
    pub(crate) name_index: BTreeMap<String, BTreeSet<String>>,
    pub(crate) sid_index: BTreeMap<Iri, BTreeSet<String>>,
    pub(crate) type_index: BTreeMap<String, BTreeSet<String>>,
    // Merge bookkeeping surfaced through MergeReport.
    pub(crate) self_type_drops: usize,
    pub(crate) union_collapsed_names: usize,
    pub(crate) union_collapsed_occurrences: usize,
}

impl TopicMap {
    pub fn new(base_locator: Iri) -> Self {
        TopicMap {
            base_locator,
            topics: BTreeMap::new(),
            associations: Vec::new(),
            aliases: BTreeMap::new(),
            dangling: BTreeSet::new(),
            empty_scope_notes: Vec::new(),
            sealed: false,
            name_index: BTreeMap::new(),
            sid_index: BTreeMap::new(),
            type_index: BTreeMap::new(),
            self_type_drops: 0,
            union_collapsed_names: 0,
            union_collapsed_occurrences: 0,
        }
    }

    /// Convenience constructor from a base locator string.
    pub fn create(base_locator: &str) -> Result<Self> {
        Ok(TopicMap::new(Iri::new(base_locator)?))
    }

    pub fn base_locator(&self) -> &Iri {
        &self.base_locator
    }

    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn topic_count(&self) -> usize {
        self.topics.len()
    }

    pub fn association_count(&self) -> usize {
        self.associations.len()
    }

    pub fn occurrence_count(&self) -> usize {
        self.topics.values().map(|t| t.occurrences.len()).sum()
    }

    /// Topics in id order.
    pub fn topics(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values()
    }

    pub fn associations(&self) -> &[Association] {
        &self.associations
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn dangling(&self) -> &BTreeSet<String> {
        &self.dangling
    }

    /// Insert a topic. Its id must be new; references it carries that do
    /// not (yet) resolve are recorded in the dangling ledger.
    pub fn add_topic(&mut self, topic: Topic) -> Result<TopicRef> {
        if self.sealed {
            return Err(Error::Sealed);
        }
        if self.topics.contains_key(&topic.id) {
            return Err(Error::DuplicateId(topic.id));
        }
        let id = topic.id.clone();
        // A live topic shadows nothing: drop a stale alias under this id,
        // and the id is no longer a dangling target.
        self.aliases.remove(&id);
        self.dangling.remove(&id);
        self.index_topic(&topic);
        for target in topic_ref_targets(&topic) {
            self.note_target(target);
        }
        self.topics.insert(id.clone(), topic);
        Ok(TopicRef::new(id))
    }

    /// Store an association. Members must be non-empty and every member
    /// must have at least one player.
    pub fn add_association(&mut self, assoc: Association) -> Result<AssocHandle> {
        if self.sealed {
            return Err(Error::Sealed);
        }
        if assoc.members.is_empty() {
            return Err(Error::EmptyAssociation);
        }
        if assoc.members.iter().any(|m| m.players.is_empty()) {
            return Err(Error::EmptyMember);
        }
        let targets: Vec<String> = assoc_ref_targets(&assoc).map(str::to_owned).collect();
        for target in targets {
            self.note_target(&target);
        }
        self.associations.push(assoc);
        Ok(AssocHandle(self.associations.len() - 1))
    }

    /// Look a topic up by id, following the alias table so that ids
    /// absorbed by merges keep resolving.
    pub fn topic_by_id(&self, id: &str) -> Option<&Topic> {
        match self.topics.get(id) {
            Some(t) => Some(t),
            None => self.aliases.get(id).and_then(|s| self.topics.get(s)),
        }
    }

    /// The live id `id` resolves to, if any.
    pub fn resolve_id<'a>(&'a self, id: &'a str) -> Option<&'a str> {
        if self.topics.contains_key(id) {
            Some(id)
        } else {
            self.aliases.get(id).map(String::as_str)
        }
    }

    /// Topics directly typed by `type_ref`, in id order. The reference is
    /// resolved through the alias table first, so querying by an absorbed
    /// type id matches its survivor.
    pub fn topics_of_type(&self, type_ref: &TopicRef) -> Vec<&Topic> {
        let key = self.resolve_id(type_ref.as_str()).unwrap_or(type_ref.as_str());
        match self.type_index.get(key) {
            None => Vec::new(),
            Some(ids) => ids.iter().filter_map(|id| self.topics.get(id)).collect(),
        }
    }

    /// Every association in which the topic appears as a player, together
    /// with the role types under which it plays there. `assoc_type` filters
    /// by association type, `role_type` keeps only associations where the
    /// topic plays that specific role. An association is reported once even
    /// when the topic plays several members.
    pub fn associations_of(
        &self,
        topic_id: &str,
        assoc_type: Option<&TopicRef>,
        role_type: Option<&TopicRef>,
    ) -> Vec<(&Association, Vec<Option<&TopicRef>>)> {
        let Some(live) = self.resolve_id(topic_id) else {
            return Vec::new();
        };
        let wanted_type = assoc_type.map(|t| self.resolve_id(t.as_str()).unwrap_or(t.as_str()));
        let wanted_role = role_type.map(|t| self.resolve_id(t.as_str()).unwrap_or(t.as_str()));
        let mut out = Vec::new();
        for assoc in &self.associations {
            if let Some(wt) = wanted_type {
                let matches = assoc
                    .association_type
                    .as_ref()
                    .map(|t| self.resolve_id(t.as_str()).unwrap_or(t.as_str()) == wt)
                    .unwrap_or(false);
                if !matches {
                    continue;
                }
            }
            let mut roles: Vec<Option<&TopicRef>> = Vec::new();
            for member in &assoc.members {
                let plays = member
                    .players
                    .iter()
                    .any(|p| self.resolve_id(p.as_str()) == Some(live));
                if plays && !roles.contains(&member.role_type.as_ref()) {
                    roles.push(member.role_type.as_ref());
                }
            }
            if roles.is_empty() {
                continue;
            }
            if let Some(wr) = wanted_role {
                let plays_role = roles.iter().any(|r| {
                    r.map(|t| self.resolve_id(t.as_str()).unwrap_or(t.as_str()) == wr)
                        .unwrap_or(false)
                });
                if !plays_role {
                    continue;
                }
            }
            out.push((assoc, roles));
        }
        out
    }

    /// Players of the association's members matching `role_type` (all
    /// members when absent). Dangling player references come back in
    /// `unresolved` rather than disappearing.
    pub fn players<'a>(
        &'a self,
        assoc: &'a Association,
        role_type: Option<&TopicRef>,
    ) -> Players<'a> {
        let wanted = role_type.map(|t| self.resolve_id(t.as_str()).unwrap_or(t.as_str()));
        let mut result = Players {
            resolved: Vec::new(),
            unresolved: Vec::new(),
        };
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for member in &assoc.members {
            if let Some(wr) = wanted {
                let matches = member
                    .role_type
                    .as_ref()
                    .map(|t| self.resolve_id(t.as_str()).unwrap_or(t.as_str()) == wr)
                    .unwrap_or(false);
                if !matches {
                    continue;
                }
            }
            for player in &member.players {
                if !seen.insert(player.as_str()) {
                    continue;
                }
                match self.topic_by_id(player.as_str()) {
                    Some(topic) => result.resolved.push(topic),
                    None => result.unresolved.push(player),
                }
            }
        }
        result
    }

    /// Exhaustive internal-consistency check: indexes equal a from-scratch
    /// rebuild, the alias table is resolved/acyclic/non-shadowing, the
    /// dangling ledger is exactly the set of unresolved targets, and
    /// per-topic invariants hold. Intended for tests and debugging.
    pub fn check_coherence(&self) -> std::result::Result<(), String> {
        let (names, sids, types) = self.build_indexes();
        if names != self.name_index {
            return Err("name index diverges from rebuild".into());
        }
        if sids != self.sid_index {
            return Err("subject identifier index diverges from rebuild".into());
        }
        if types != self.type_index {
            return Err("type index diverges from rebuild".into());
        }
        for (absorbed, survivor) in &self.aliases {
            if self.topics.contains_key(absorbed) {
                return Err(format!("alias {absorbed} shadows a live topic"));
            }
            if !self.topics.contains_key(survivor) {
                return Err(format!("alias {absorbed} -> {survivor} is unresolved"));
            }
        }
        let mut expected_dangling = BTreeSet::new();
        for target in self.all_ref_targets() {
            if !self.topics.contains_key(target) && !self.aliases.contains_key(target) {
                expected_dangling.insert(target.to_owned());
            }
        }
        if expected_dangling != self.dangling {
            return Err(format!(
                "dangling ledger {:?} does not match actual unresolved targets {:?}",
                self.dangling, expected_dangling
            ));
        }
        for topic in self.topics.values() {
            let mut seen = BTreeSet::new();
            for name in &topic.names {
                if !seen.insert(name) {
                    return Err(format!("duplicate name on topic {}", topic.id));
                }
            }
            if topic.types.contains(&TopicRef::new(&topic.id)) {
                return Err(format!("topic {} is its own type", topic.id));
            }
        }
        Ok(())
    }

    /// Rebuild all indexes from the stored topics (used after merge
    /// surgery and by the coherence check).
    pub(crate) fn reindex(&mut self) {
        let (names, sids, types) = self.build_indexes();
        self.name_index = names;
        self.sid_index = sids;
        self.type_index = types;
    }

    /// Recompute the dangling ledger from scratch.
    pub(crate) fn recompute_dangling(&mut self) {
        let mut dangling = BTreeSet::new();
        for target in self.all_ref_targets() {
            if !self.topics.contains_key(target) && !self.aliases.contains_key(target) {
                dangling.insert(target.to_owned());
            }
        }
        self.dangling = dangling;
    }

    pub(crate) fn topics_mut(&mut self) -> &mut BTreeMap<String, Topic> {
        &mut self.topics
    }

    pub(crate) fn associations_mut(&mut self) -> &mut Vec<Association> {
        &mut self.associations
    }

    pub(crate) fn aliases_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.aliases
    }

    fn build_indexes(
        &self,
    ) -> (
        BTreeMap<String, BTreeSet<String>>,
        BTreeMap<Iri, BTreeSet<String>>,
        BTreeMap<String, BTreeSet<String>>,
    ) {
        let mut names: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut sids: BTreeMap<Iri, BTreeSet<String>> = BTreeMap::new();
        let mut types: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for topic in self.topics.values() {
            for name in &topic.names {
                names
                    .entry(name.value.to_lowercase())
                    .or_default()
                    .insert(topic.id.clone());
            }
            for sid in &topic.subject_identifiers {
                sids.entry(sid.clone()).or_default().insert(topic.id.clone());
            }
            for ty in &topic.types {
                types
                    .entry(ty.as_str().to_owned())
                    .or_default()
                    .insert(topic.id.clone());
            }
        }
        (names, sids, types)
    }

    fn index_topic(&mut self, topic: &Topic) {
        for name in &topic.names {
            self.name_index
                .entry(name.value.to_lowercase())
                .or_default()
                .insert(topic.id.clone());
        }
        for sid in &topic.subject_identifiers {
            self.sid_index
                .entry(sid.clone())
                .or_default()
                .insert(topic.id.clone());
        }
        for ty in &topic.types {
            self.type_index
                .entry(ty.as_str().to_owned())
                .or_default()
                .insert(topic.id.clone());
        }
    }

    fn note_target(&mut self, target: &str) {
        if !self.topics.contains_key(target) && !self.aliases.contains_key(target) {
            self.dangling.insert(target.to_owned());
        }
    }

    /// Every reference target stored anywhere in the map.
    fn all_ref_targets(&self) -> impl Iterator<Item = &str> {
        let topic_refs = self.topics.values().flat_map(topic_ref_targets);
        let assoc_refs = self.associations.iter().flat_map(assoc_ref_targets);
        topic_refs.chain(assoc_refs)
    }
}

/// Reference targets inside one topic: types and scope themes of names
/// and occurrences, plus occurrence types.
fn topic_ref_targets(topic: &Topic) -> impl Iterator<Item = &str> {
    let types = topic.types.iter().map(TopicRef::as_str);
    let name_themes = topic
        .names
        .iter()
        .flat_map(|n| n.scope.themes())
        .map(TopicRef::as_str);
    let occ_refs = topic.occurrences.iter().flat_map(|o| {
        o.occurrence_type
            .iter()
            .map(TopicRef::as_str)
            .chain(o.scope.themes().map(TopicRef::as_str))
    });
    types.chain(name_themes).chain(occ_refs)
}

/// Rewrite every reference target inside a topic through `f`
/// (`None` keeps the target). Does not collapse name duplicates the
/// rewrite may create; callers dedup where their contract requires it.
pub(crate) fn rewrite_topic_refs(topic: &mut Topic, f: &dyn Fn(&str) -> Option<String>) {
    topic.types = topic
        .types
        .iter()
        .map(|t| rewritten_ref(t, f))
        .collect();
    for name in &mut topic.names {
        name.scope = rewrite_scope(&name.scope, f);
    }
    for occ in &mut topic.occurrences {
        if let Some(t) = &occ.occurrence_type {
            occ.occurrence_type = Some(rewritten_ref(t, f));
        }
        occ.scope = rewrite_scope(&occ.scope, f);
    }
}

/// Rewrite every reference target inside an association through `f`.
pub(crate) fn rewrite_assoc_refs(assoc: &mut Association, f: &dyn Fn(&str) -> Option<String>) {
    if let Some(t) = &assoc.association_type {
        assoc.association_type = Some(rewritten_ref(t, f));
    }
    assoc.scope = rewrite_scope(&assoc.scope, f);
    for member in &mut assoc.members {
        if let Some(t) = &member.role_type {
            member.role_type = Some(rewritten_ref(t, f));
        }
        for player in &mut member.players {
            *player = rewritten_ref(player, f);
        }
    }
}

fn rewrite_scope(scope: &Scope, f: &dyn Fn(&str) -> Option<String>) -> Scope {
    Scope {
        themes: scope.themes.iter().map(|t| rewritten_ref(t, f)).collect(),
    }
}

fn rewritten_ref(r: &TopicRef, f: &dyn Fn(&str) -> Option<String>) -> TopicRef {
    match f(r.as_str()) {
        Some(new_target) => TopicRef::new(new_target),
        None => r.clone(),
    }
}

/// Reference targets inside one association: type, scope themes, role
/// types, players.
fn assoc_ref_targets(assoc: &Association) -> impl Iterator<Item = &str> {
    let ty = assoc.association_type.iter().map(TopicRef::as_str);
    let themes = assoc.scope.themes().map(TopicRef::as_str);
    let members = assoc.members.iter().flat_map(|m| {
        m.role_type
            .iter()
            .map(TopicRef::as_str)
            .chain(m.players.iter().map(TopicRef::as_str))
    });
    ty.chain(themes).chain(members)
}
