//! Merging, deduplication, and the isomorphism oracle.
//!
//! Two topics are merge candidates when they share a subject identifier,
//! or when they carry an identical name in an identical *non-empty*
//! scope. Same-name topics with unscoped names stay distinct: a city and
//! a person may both be called "Tirupathi" without becoming one subject.
//! Auto-merging keeps the lexicographically smaller id; the absorbed id
//! goes into the map's alias table so old references keep resolving.
//!
//! [`merge_maps`] builds a fresh map from two sealed inputs: copy `a`,
//! copy `b` (renaming colliding ids with `~2`, `~3`, ... suffixes), run
//! [`merge_topics`] to a fixpoint over candidate pairs in sorted order,
//! then collapse structural duplicates. Merging rearranges the topic
//! layer only — the set of resources referenced by occurrences is the
//! union of the inputs' resources, never more, never less.
//!
//! [`isomorphic`] compares maps by canonical form: topics are first
//! keyed by their id-free content signature, then the partition is
//! refined by neighborhood structure (types, scope themes, association
//! participation — in both directions) until stable, individualizing
//! tied topics and taking the lexicographically smallest rendering.
//! Map-local ids, the base locator, implicit flags, aliases, and load
//! notes are ignored; dangling references compare by their raw target
//! string.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{
    self, Association, EmptyScopeNote, Scope, TopicMap, TopicRef,
};

/// Why a pair of topics was (or would be) merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MergeReason {
    /// The topics share a subject identifier.
    SubjectIdentifier,
    /// The topics carry an identical name in an identical non-empty scope.
    NameInScope,
    /// A caller asked for the merge directly.
    Explicit,
}

impl fmt::Display for MergeReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MergeReason::SubjectIdentifier => f.write_str("subject-identifier"),
            MergeReason::NameInScope => f.write_str("name-in-scope"),
            MergeReason::Explicit => f.write_str("explicit"),
        }
    }
}

/// How many structural duplicates a pass removed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DedupCounts {
    pub names: usize,
    pub occurrences: usize,
    pub associations: usize,
}

impl DedupCounts {
    pub fn is_zero(&self) -> bool {
        self.names == 0 && self.occurrences == 0 && self.associations == 0
    }
}

/// Everything [`merge_maps`] did, for callers that need traceability.
#[derive(Debug, Clone, Default)]
pub struct MergeReport {
    /// Each fixpoint step: (surviving id, absorbed id, reason).
    pub merged_pairs: Vec<(String, String, MergeReason)>,
    /// Absorbed id → surviving id, fully resolved and acyclic.
    pub alias_table: BTreeMap<String, String>,
    /// Structural duplicates removed by the final deduplication pass.
    pub dedup_counts: DedupCounts,
    /// Ids from the second map that had to be renamed to avoid collision:
    /// (original id, id in the result).
    pub renamed: Vec<(String, String)>,
    /// Names dropped while unioning merged topics because the survivor
    /// already carried an equal name.
    pub union_collapsed_names: usize,
    /// Occurrences dropped the same way.
    pub union_collapsed_occurrences: usize,
    /// Self-type references dropped after reference rewriting.
    pub self_type_drops: usize,
}

impl MergeReport {
    /// Line-oriented text form: one `survivor <= absorbed [reason]` per
    /// merged pair, in merge order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (survivor, absorbed, reason) in &self.merged_pairs {
            out.push_str(&format!("{survivor} <= {absorbed} [{reason}]\n"));
        }
        out
    }
}

/// All pairs that the merge rules would currently unify: topics sharing
/// a subject identifier, and topics sharing a (name value, identical
/// non-empty scope). Pairs are (smaller id, larger id), the list is
/// sorted, and a pair matched by both rules is reported once with the
/// subject-identifier reason.
pub fn find_merge_candidates(map: &TopicMap) -> Vec<(TopicRef, TopicRef, MergeReason)> {
    let mut candidates: Vec<(String, String, MergeReason)> = Vec::new();

    let mut sid_groups: BTreeMap<&crate::iri::Iri, BTreeSet<&str>> = BTreeMap::new();
    for topic in map.topics() {
        for sid in &topic.subject_identifiers {
            sid_groups.entry(sid).or_default().insert(&topic.id);
        }
    }
    for ids in sid_groups.values().filter(|ids| ids.len() > 1) {
        let ids: Vec<&str> = ids.iter().copied().collect();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                candidates.push((
                    ids[i].to_owned(),
                    ids[j].to_owned(),
                    MergeReason::SubjectIdentifier,
                ));
            }
        }
    }

    let mut name_groups: BTreeMap<(&str, &Scope), BTreeSet<&str>> = BTreeMap::new();
    for topic in map.topics() {
        for name in &topic.names {
            if !name.scope.is_universal() {
                name_groups
                    .entry((&name.value, &name.scope))
                    .or_default()
                    .insert(&topic.id);
            }
        }
    }
    for ids in name_groups.values().filter(|ids| ids.len() > 1) {
        let ids: Vec<&str> = ids.iter().copied().collect();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                candidates.push((
                    ids[i].to_owned(),
                    ids[j].to_owned(),
                    MergeReason::NameInScope,
                ));
            }
        }
    }

    candidates.sort();
    candidates.dedup_by(|next, kept| next.0 == kept.0 && next.1 == kept.1);
    candidates
        .into_iter()
        .map(|(a, b, reason)| (TopicRef::new(a), TopicRef::new(b), reason))
        .collect()
}

/// Merge `absorbed` into `survivor` in place. The survivor gains the
/// union of names, occurrences, types, and subject identifiers; every
/// reference to the absorbed topic anywhere in the map — topic type,
/// occurrence type, scope theme, association type, role type, player —
/// is rewritten to the survivor; self-type references created by the
/// rewrite are dropped; the absorbed id lands in the alias table.
///
/// Both arguments resolve through the alias table, so absorbed ids from
/// earlier merges are accepted. Merging a topic with itself is an error.
pub fn merge_topics(
    map: &mut TopicMap,
    survivor: impl Into<TopicRef>,
    absorbed: impl Into<TopicRef>,
) -> Result<TopicRef> {
    let survivor = survivor.into();
    let absorbed = absorbed.into();
    let survivor_id = map
        .resolve_id(survivor.as_str())
        .ok_or_else(|| Error::UnknownTopic(survivor.as_str().to_owned()))?
        .to_owned();
    let absorbed_id = map
        .resolve_id(absorbed.as_str())
        .ok_or_else(|| Error::UnknownTopic(absorbed.as_str().to_owned()))?
        .to_owned();
    if survivor_id == absorbed_id {
        return Err(Error::SelfMerge(survivor_id));
    }
    merge_resolved(map, &survivor_id, &absorbed_id);
    Ok(TopicRef::new(survivor_id))
}

/// The merge kernel: both ids are live and distinct.
fn merge_resolved(map: &mut TopicMap, survivor_id: &str, absorbed_id: &str) {
    // A topic that was already its own type (on either side) keeps that
    // fact through the merge; only a self-reference newly produced by
    // the absorbed→survivor rewrite is dropped.
    let pre_self = map
        .topic_by_id(survivor_id)
        .is_some_and(|t| t.types.contains(&TopicRef::new(survivor_id)))
        || map
            .topic_by_id(absorbed_id)
            .is_some_and(|t| t.types.contains(&TopicRef::new(absorbed_id)));
    let absorbed = map
        .topics_mut()
        .remove(absorbed_id)
        .expect("absorbed id is live");

    // Union content into the survivor.
    let (collapsed_names, collapsed_occurrences) = {
        let survivor = map
            .topics_mut()
            .get_mut(survivor_id)
            .expect("survivor id is live");
        let mut collapsed_names = 0usize;
        for name in absorbed.names {
            if !survivor.add_name(name) {
                collapsed_names += 1;
            }
        }
        let mut collapsed_occurrences = 0usize;
        for occ in absorbed.occurrences {
            if survivor.occurrences.contains(&occ) {
                collapsed_occurrences += 1;
            } else {
                survivor.occurrences.push(occ);
            }
        }
        survivor.types.extend(absorbed.types);
        survivor.subject_identifiers.extend(absorbed.subject_identifiers);
        // Merging an authored topic into a stub (or the reverse) yields
        // an authored topic; only two stubs stay implicit.
        survivor.implicit &= absorbed.implicit;
        (collapsed_names, collapsed_occurrences)
    };
    map.union_collapsed_names += collapsed_names;
    map.union_collapsed_occurrences += collapsed_occurrences;

    // Rewrite every reference to the absorbed id, then drop any self-type
    // the rewrite produced and collapse any name/occurrence duplicates
    // it revealed.
    let target = absorbed_id.to_owned();
    let replacement = survivor_id.to_owned();
    let rewrite = move |r: &str| {
        if r == target {
            Some(replacement.clone())
        } else {
            None
        }
    };
    let ids: Vec<String> = map.topics().map(|t| t.id.clone()).collect();
    let mut collapsed_names = 0usize;
    let mut collapsed_occurrences = 0usize;
    let mut self_type_drops = 0usize;
    for id in ids {
        let topic = map.topics_mut().get_mut(&id).expect("iterated id");
        model::rewrite_topic_refs(topic, &rewrite);
        // Only the survivor can gain a self-type from this rewrite.
        if id == survivor_id
            && !pre_self
            && topic.types.remove(&TopicRef::new(id.as_str()))
        {
            self_type_drops += 1;
        }
        let mut seen_names = BTreeSet::new();
        let before = topic.names.len();
        topic.names.retain(|n| seen_names.insert(n.clone()));
        collapsed_names += before - topic.names.len();
        let mut seen_occs = BTreeSet::new();
        let before = topic.occurrences.len();
        topic.occurrences.retain(|o| seen_occs.insert(o.clone()));
        collapsed_occurrences += before - topic.occurrences.len();
    }
    for assoc in map.associations_mut() {
        model::rewrite_assoc_refs(assoc, &rewrite);
    }
    for note in map.empty_scope_notes.iter_mut() {
        match note {
            EmptyScopeNote::Name { topic } | EmptyScopeNote::Occurrence { topic } => {
                if topic == absorbed_id {
                    *topic = survivor_id.to_owned();
                }
            }
            EmptyScopeNote::Association { assoc_type: Some(t) } => {
                if t == absorbed_id {
                    *t = survivor_id.to_owned();
                }
            }
            EmptyScopeNote::Association { assoc_type: None } => {}
        }
    }
    map.union_collapsed_names += collapsed_names;
    map.union_collapsed_occurrences += collapsed_occurrences;
    map.self_type_drops += self_type_drops;

    // Alias bookkeeping: everything that used to resolve to the absorbed
    // id now resolves to the survivor.
    for target in map.aliases_mut().values_mut() {
        if target == absorbed_id {
            *target = survivor_id.to_owned();
        }
    }
    map.aliases_mut()
        .insert(absorbed_id.to_owned(), survivor_id.to_owned());

    map.reindex();
    map.recompute_dangling();
}

/// Merge two sealed maps into a fresh sealed map.
///
/// The result takes `a`'s base locator and contains every topic and
/// association of both inputs. Ids of `b` colliding with anything
/// already present are renamed with `~2`, `~3`, ... suffixes (recorded
/// in the report, with all internal references updated); then candidate
/// pairs are merged in sorted order, recomputing candidates after every
/// step, until none remain; finally structural duplicates are collapsed.
pub fn merge_maps(a: &TopicMap, b: &TopicMap) -> (TopicMap, MergeReport) {
    let mut result = TopicMap::new(a.base_locator().clone());
    let mut report = MergeReport::default();

    // Copy a verbatim.
    for topic in a.topics() {
        result.add_topic(topic.clone()).expect("input map is coherent");
    }
    for assoc in a.associations() {
        result
            .add_association(assoc.clone())
            .expect("input map is coherent");
    }
    result.empty_scope_notes.extend(a.empty_scope_notes.iter().cloned());
    for (old, live) in a.aliases() {
        result.aliases_mut().insert(old.clone(), live.clone());
    }

    // Copy b, renaming colliding ids first so references can be rewritten
    // in one pass.
    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    let mut claimed: BTreeSet<String> = BTreeSet::new();
    for topic in b.topics() {
        let id = topic.id.as_str();
        let taken = |candidate: &str, claimed: &BTreeSet<String>| {
            result.topic_by_id(candidate).is_some() || claimed.contains(candidate)
        };
        let final_id = if !taken(id, &claimed) {
            id.to_owned()
        } else {
            let mut n = 2usize;
            loop {
                let candidate = format!("{id}~{n}");
                if !taken(&candidate, &claimed) {
                    break candidate;
                }
                n += 1;
            }
        };
        if final_id != id {
            rename.insert(id.to_owned(), final_id.clone());
            report.renamed.push((id.to_owned(), final_id.clone()));
        }
        claimed.insert(final_id);
    }
    let renamed_ref = |r: &str| rename.get(r).cloned();
    for topic in b.topics() {
        let mut copy = topic.clone();
        if let Some(new_id) = rename.get(&copy.id) {
            copy.id = new_id.clone();
        }
        model::rewrite_topic_refs(&mut copy, &renamed_ref);
        result.add_topic(copy).expect("collisions renamed away");
    }
    for assoc in b.associations() {
        let mut copy = assoc.clone();
        model::rewrite_assoc_refs(&mut copy, &renamed_ref);
        result
            .add_association(copy)
            .expect("input map is coherent");
    }
    for note in &b.empty_scope_notes {
        let mut copy = note.clone();
        match &mut copy {
            EmptyScopeNote::Name { topic } | EmptyScopeNote::Occurrence { topic } => {
                if let Some(new_id) = rename.get(topic.as_str()) {
                    *topic = new_id.clone();
                }
            }
            EmptyScopeNote::Association { assoc_type: Some(t) } => {
                if let Some(new_id) = rename.get(t.as_str()) {
                    *t = new_id.clone();
                }
            }
            EmptyScopeNote::Association { assoc_type: None } => {}
        }
        result.empty_scope_notes.push(copy);
    }
    // b's alias table comes along too (targets follow renames); entries
    // that would shadow a live id or an existing alias are dropped.
    for (old, live) in b.aliases() {
        if result.topic_by_id(old).is_some() || result.aliases().contains_key(old) {
            continue;
        }
        let live = rename.get(live).cloned().unwrap_or_else(|| live.clone());
        result.aliases_mut().insert(old.clone(), live);
    }

    // Fixpoint: merge the first candidate pair, recompute, repeat. Each
    // step removes a topic, so this terminates.
    loop {
        let Some((survivor, absorbed, reason)) =
            find_merge_candidates(&result).into_iter().next()
        else {
            break;
        };
        merge_resolved(&mut result, survivor.as_str(), absorbed.as_str());
        report
            .merged_pairs
            .push((survivor.as_str().to_owned(), absorbed.as_str().to_owned(), reason));
    }

    report.dedup_counts = dedup_in_place(&mut result);
    report.alias_table = result.aliases().clone();
    report.union_collapsed_names = result.union_collapsed_names;
    report.union_collapsed_occurrences = result.union_collapsed_occurrences;
    report.self_type_drops = result.self_type_drops;

    result.reindex();
    result.recompute_dangling();
    result.seal();
    (result, report)
}

/// Collapse structural duplicates: equal names and equal occurrences
/// within each topic, and equal associations (member and player order
/// disregarded) across the map. Returns the deduplicated copy and how
/// much was removed.
pub fn deduplicate(map: &TopicMap) -> (TopicMap, DedupCounts) {
    let mut copy = map.clone();
    let counts = dedup_in_place(&mut copy);
    copy.reindex();
    copy.recompute_dangling();
    (copy, counts)
}

fn dedup_in_place(map: &mut TopicMap) -> DedupCounts {
    let mut counts = DedupCounts::default();
    let ids: Vec<String> = map.topics().map(|t| t.id.clone()).collect();
    for id in ids {
        let topic = map.topics_mut().get_mut(&id).expect("iterated id");
        let mut seen_names = BTreeSet::new();
        let before = topic.names.len();
        topic.names.retain(|n| seen_names.insert(n.clone()));
        counts.names += before - topic.names.len();
        let mut seen_occs = BTreeSet::new();
        let before = topic.occurrences.len();
        topic.occurrences.retain(|o| seen_occs.insert(o.clone()));
        counts.occurrences += before - topic.occurrences.len();
    }
    let assocs = map.associations_mut();
    let mut seen: Vec<Association> = Vec::new();
    let before = assocs.len();
    assocs.retain(|a| {
        if seen.contains(a) {
            false
        } else {
            seen.push(a.clone());
            true
        }
    });
    counts.associations += before - assocs.len();
    counts
}

/// True when a content-preserving bijection exists between the topics of
/// the two maps: subject identifiers, names, occurrences, types, and
/// associations all correspond, map-local ids disregarded.
pub fn isomorphic(a: &TopicMap, b: &TopicMap) -> bool {
    // Cheap screens first; the canonical form settles the rest.
    if a.topic_count() != b.topic_count() || a.association_count() != b.association_count() {
        return false;
    }
    canonical_form(a) == canonical_form(b)
}

/// A rendering of the map that is identical for isomorphic maps and
/// different for non-isomorphic ones. Topic ids, the base locator,
/// implicit flags, aliases, and load notes do not participate; names and
/// occurrences compare as sets, associations as a multiset; dangling
/// references compare by their raw target string.
pub fn canonical_form(map: &TopicMap) -> String {
    let view = View::build(map);
    let colors = vec![0usize; view.n];
    view.canonical(colors)
}

/// A reference inside the canonical-form view: either the index of a
/// live topic or the raw target string of a dangling reference.
#[derive(Debug, Clone)]
enum CRef {
    Topic(usize),
    Dangling(String),
}

struct AssocView {
    ty: Option<CRef>,
    scope: Vec<CRef>,
    members: Vec<(Option<CRef>, Vec<CRef>)>,
}

/// An id-free projection of the map, with all references resolved to
/// topic indexes (through the alias table) or kept as dangling strings,
/// plus reverse adjacency for bidirectional refinement.
struct View {
    n: usize,
    /// Per topic: sorted subject identifiers.
    sids: Vec<Vec<String>>,
    /// Per topic: (name value, scope refs).
    names: Vec<Vec<(String, Vec<CRef>)>>,
    /// Per topic: (resource token, type ref, scope refs).
    occs: Vec<Vec<(String, Option<CRef>, Vec<CRef>)>>,
    /// Per topic: outgoing type refs.
    types: Vec<Vec<CRef>>,
    /// Per topic: indexes of topics typed by it.
    typed_by: Vec<Vec<usize>>,
    /// Per topic: (owner index, name value) of names scoped by it.
    name_theme_of: Vec<Vec<(usize, String)>>,
    /// Per topic: (owner index, resource token) of occurrences typed by it.
    occ_type_of: Vec<Vec<(usize, String)>>,
    /// Per topic: (owner index, resource token) of occurrences scoped by it.
    occ_theme_of: Vec<Vec<(usize, String)>>,
    assocs: Vec<AssocView>,
    /// Per topic: (assoc index, role ref of the member) for each member
    /// the topic plays in.
    plays: Vec<Vec<(usize, Option<CRef>)>>,
    /// Per topic: assoc indexes typed by it.
    assoc_type_of: Vec<Vec<usize>>,
    /// Per topic: assoc indexes with a member whose role is it (one entry
    /// per such member).
    assoc_role_of: Vec<Vec<usize>>,
    /// Per topic: assoc indexes scoped by it.
    assoc_theme_of: Vec<Vec<usize>>,
}

impl View {
    fn build(map: &TopicMap) -> View {
        let ids: Vec<&str> = map.topics().map(|t| t.id.as_str()).collect();
        let index: BTreeMap<&str, usize> =
            ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let n = ids.len();
        let resolve = |r: &TopicRef| -> CRef {
            match map.resolve_id(r.as_str()).and_then(|id| index.get(id)) {
                Some(&i) => CRef::Topic(i),
                None => CRef::Dangling(r.as_str().to_owned()),
            }
        };
        let resource_token = |occ: &crate::model::Occurrence| -> String {
            match &occ.resource {
                crate::model::ResourceLink::Reference(iri) => format!("ref:{}", iri.as_str()),
                crate::model::ResourceLink::Inline(data) => format!("data:{data}"),
            }
        };

        let mut view = View {
            n,
            sids: vec![Vec::new(); n],
            names: vec![Vec::new(); n],
            occs: vec![Vec::new(); n],
            types: vec![Vec::new(); n],
            typed_by: vec![Vec::new(); n],
            name_theme_of: vec![Vec::new(); n],
            occ_type_of: vec![Vec::new(); n],
            occ_theme_of: vec![Vec::new(); n],
            assocs: Vec::new(),
            plays: vec![Vec::new(); n],
            assoc_type_of: vec![Vec::new(); n],
            assoc_role_of: vec![Vec::new(); n],
            assoc_theme_of: vec![Vec::new(); n],
        };

        for (i, topic) in map.topics().enumerate() {
            view.sids[i] = topic
                .subject_identifiers
                .iter()
                .map(|s| s.as_str().to_owned())
                .collect();
            for name in &topic.names {
                let themes: Vec<CRef> = name.scope.themes().map(&resolve).collect();
                for theme in name.scope.themes() {
                    if let CRef::Topic(t) = resolve(theme) {
                        view.name_theme_of[t].push((i, name.value.clone()));
                    }
                }
                view.names[i].push((name.value.clone(), themes));
            }
            for occ in &topic.occurrences {
                let token = resource_token(occ);
                let ty = occ.occurrence_type.as_ref().map(&resolve);
                if let Some(CRef::Topic(t)) = &ty {
                    view.occ_type_of[*t].push((i, token.clone()));
                }
                let themes: Vec<CRef> = occ.scope.themes().map(&resolve).collect();
                for theme in occ.scope.themes() {
                    if let CRef::Topic(t) = resolve(theme) {
                        view.occ_theme_of[t].push((i, token.clone()));
                    }
                }
                view.occs[i].push((token, ty, themes));
            }
            for ty in &topic.types {
                let r = resolve(ty);
                if let CRef::Topic(t) = r {
                    view.typed_by[t].push(i);
                }
                view.types[i].push(r);
            }
        }

        for (k, assoc) in map.associations().iter().enumerate() {
            let ty = assoc.association_type.as_ref().map(&resolve);
            if let Some(CRef::Topic(t)) = &ty {
                view.assoc_type_of[*t].push(k);
            }
            let scope: Vec<CRef> = assoc.scope.themes().map(&resolve).collect();
            for theme in assoc.scope.themes() {
                if let CRef::Topic(t) = resolve(theme) {
                    view.assoc_theme_of[t].push(k);
                }
            }
            let mut members = Vec::new();
            for member in &assoc.members {
                let role = member.role_type.as_ref().map(&resolve);
                if let Some(CRef::Topic(t)) = &role {
                    view.assoc_role_of[*t].push(k);
                }
                let players: Vec<CRef> = member.players.iter().map(&resolve).collect();
                for player in &member.players {
                    if let CRef::Topic(t) = resolve(player) {
                        view.plays[t].push((k, role.clone()));
                    }
                }
                members.push((role, players));
            }
            view.assocs.push(AssocView { ty, scope, members });
        }
        view
    }

    fn tok(&self, r: &CRef, colors: &[usize]) -> String {
        match r {
            CRef::Topic(i) => format!("C{:08}", colors[*i]),
            CRef::Dangling(s) => format!("D{s}"),
        }
    }

    fn opt_tok(&self, r: &Option<CRef>, colors: &[usize]) -> String {
        match r {
            Some(r) => self.tok(r, colors),
            None => "-".to_owned(),
        }
    }

    /// The association's signature under a coloring: type, sorted scope,
    /// sorted members (role, sorted players).
    fn assoc_sig(&self, assoc: &AssocView, colors: &[usize]) -> String {
        let mut scope: Vec<String> = assoc.scope.iter().map(|r| self.tok(r, colors)).collect();
        scope.sort();
        let mut members: Vec<String> = assoc
            .members
            .iter()
            .map(|(role, players)| {
                let mut players: Vec<String> =
                    players.iter().map(|r| self.tok(r, colors)).collect();
                players.sort();
                js(&[self.opt_tok(role, colors), js(&players)])
            })
            .collect();
        members.sort();
        js(&[self.opt_tok(&assoc.ty, colors), js(&scope), js(&members)])
    }

    /// The topic's full signature under a coloring: its current color,
    /// its content, and its neighborhoods in every direction.
    fn topic_sig(&self, i: usize, colors: &[usize], assoc_sigs: &[String]) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(12);
        parts.push(format!("C{:08}", colors[i]));
        parts.push(js(&self.sids[i]));

        let mut names: Vec<String> = self.names[i]
            .iter()
            .map(|(value, themes)| {
                let mut themes: Vec<String> =
                    themes.iter().map(|r| self.tok(r, colors)).collect();
                themes.sort();
                js(&[value.clone(), js(&themes)])
            })
            .collect();
        names.sort();
        names.dedup();
        parts.push(js(&names));

        let mut occs: Vec<String> = self.occs[i]
            .iter()
            .map(|(token, ty, themes)| {
                let mut themes: Vec<String> =
                    themes.iter().map(|r| self.tok(r, colors)).collect();
                themes.sort();
                js(&[token.clone(), self.opt_tok(ty, colors), js(&themes)])
            })
            .collect();
        occs.sort();
        occs.dedup();
        parts.push(js(&occs));

        let mut types: Vec<String> =
            self.types[i].iter().map(|r| self.tok(r, colors)).collect();
        types.sort();
        parts.push(js(&types));

        let mut typed_by: Vec<String> = self.typed_by[i]
            .iter()
            .map(|&t| format!("C{:08}", colors[t]))
            .collect();
        typed_by.sort();
        parts.push(js(&typed_by));

        let mut name_theme_of: Vec<String> = self.name_theme_of[i]
            .iter()
            .map(|(owner, value)| js(&[format!("C{:08}", colors[*owner]), value.clone()]))
            .collect();
        name_theme_of.sort();
        parts.push(js(&name_theme_of));

        let mut occ_type_of: Vec<String> = self.occ_type_of[i]
            .iter()
            .map(|(owner, token)| js(&[format!("C{:08}", colors[*owner]), token.clone()]))
            .collect();
        occ_type_of.sort();
        parts.push(js(&occ_type_of));

        let mut occ_theme_of: Vec<String> = self.occ_theme_of[i]
            .iter()
            .map(|(owner, token)| js(&[format!("C{:08}", colors[*owner]), token.clone()]))
            .collect();
        occ_theme_of.sort();
        parts.push(js(&occ_theme_of));

        let mut plays: Vec<String> = self.plays[i]
            .iter()
            .map(|(k, role)| js(&[assoc_sigs[*k].clone(), self.opt_tok(role, colors)]))
            .collect();
        plays.sort();
        parts.push(js(&plays));

        let mut as_type: Vec<String> = self.assoc_type_of[i]
            .iter()
            .map(|&k| assoc_sigs[k].clone())
            .collect();
        as_type.sort();
        parts.push(js(&as_type));

        let mut as_role: Vec<String> = self.assoc_role_of[i]
            .iter()
            .map(|&k| assoc_sigs[k].clone())
            .collect();
        as_role.sort();
        parts.push(js(&as_role));

        let mut as_theme: Vec<String> = self.assoc_theme_of[i]
            .iter()
            .map(|&k| assoc_sigs[k].clone())
            .collect();
        as_theme.sort();
        parts.push(js(&as_theme));

        js(&parts)
    }

    /// One refinement round: recolor every topic by its signature. The
    /// old color is part of the signature, so partitions only refine.
    fn refine_round(&self, colors: &[usize]) -> Vec<usize> {
        let assoc_sigs: Vec<String> = self
            .assocs
            .iter()
            .map(|a| self.assoc_sig(a, colors))
            .collect();
        let sigs: Vec<String> = (0..self.n)
            .map(|i| self.topic_sig(i, colors, &assoc_sigs))
            .collect();
        let mut distinct: Vec<&String> = sigs.iter().collect();
        distinct.sort();
        distinct.dedup();
        sigs.iter()
            .map(|s| distinct.binary_search(&s).expect("interned above"))
            .collect()
    }

    fn refine_to_fixpoint(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let mut classes = count_distinct(&colors);
        loop {
            let next = self.refine_round(&colors);
            let next_classes = count_distinct(&next);
            colors = next;
            if next_classes == classes {
                return colors;
            }
            classes = next_classes;
        }
    }

    /// Individualization-refinement: refine; if topics remain tied, pick
    /// the first tied class, try promoting each member, and keep the
    /// smallest resulting rendering.
    fn canonical(&self, colors: Vec<usize>) -> String {
        let colors = self.refine_to_fixpoint(colors);
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &c) in colors.iter().enumerate() {
            classes.entry(c).or_default().push(i);
        }
        match classes.into_values().find(|members| members.len() > 1) {
            None => self.render(&colors),
            Some(tied) => tied
                .into_iter()
                .map(|member| {
                    let mut child = colors.clone();
                    child[member] = self.n; // fresh color above every rank
                    self.canonical(child)
                })
                .min()
                .expect("a tied class has members"),
        }
    }

    /// Full rendering under a discrete coloring: topics ordered by
    /// color, each with its complete signature, then the association
    /// multiset.
    fn render(&self, colors: &[usize]) -> String {
        let assoc_sigs: Vec<String> = self
            .assocs
            .iter()
            .map(|a| self.assoc_sig(a, colors))
            .collect();
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&i| colors[i]);
        let topics: Vec<String> = order
            .into_iter()
            .map(|i| self.topic_sig(i, colors, &assoc_sigs))
            .collect();
        let mut assocs = assoc_sigs;
        assocs.sort();
        js(&[js(&topics), js(&assocs)])
    }
}

fn count_distinct(colors: &[usize]) -> usize {
    let set: BTreeSet<usize> = colors.iter().copied().collect();
    set.len()
}

/// JSON-encode a list of strings: an unambiguous, order-preserving
/// composition step for signature strings.
fn js(parts: &[String]) -> String {
    serde_json::to_string(parts).expect("strings always encode")
}
