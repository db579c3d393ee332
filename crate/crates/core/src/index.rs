//! Inverted index over topic names, with scope-aware search.
//!
//! Indexing covers every name of every topic regardless of scope; scope
//! filtering happens at query time, so one index serves all contexts.
//! Terms are produced by [`tokenize`]: split on non-alphanumeric
//! characters, lowercase, drop empties. Scores are exact rational
//! numbers (matched distinct terms over total distinct query terms) and
//! are compared by cross-multiplication, never through floats.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Occurrence, Scope, TopicMap, TopicRef};

/// Split text into lowercase alphanumeric tokens. Positions are implied
/// by order; empty tokens (from runs of separators) are dropped. A
/// character that stops being alphanumeric after case folding (such as
/// the combining dot an `İ` lowercases into) is stripped, so feeding a
/// token back in yields the same token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .map(|word| {
            word.chars()
                .flat_map(char::to_lowercase)
                .filter(|c| c.is_alphanumeric())
                .collect::<String>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

/// One indexed token instance: which topic, which of its names (by
/// ordinal in stored order), and the token's position within that name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Posting {
    pub topic: String,
    pub name_ordinal: usize,
    pub position: usize,
}

/// Inverted index: term → sorted postings.
#[derive(Debug, Clone, Default)]
pub struct Index {
    terms: BTreeMap<String, Vec<Posting>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexStats {
    /// Distinct terms.
    pub terms: usize,
    /// Total postings across all terms.
    pub postings: usize,
    /// Distinct topics that appear in at least one posting.
    pub topics_covered: usize,
}

impl Index {
    /// Build the index over all names in the map.
    pub fn build(map: &TopicMap) -> Index {
        let mut terms: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for topic in map.topics() {
            for (name_ordinal, name) in topic.names.iter().enumerate() {
                for (position, token) in tokenize(&name.value).into_iter().enumerate() {
                    terms.entry(token).or_default().push(Posting {
                        topic: topic.id.clone(),
                        name_ordinal,
                        position,
                    });
                }
            }
        }
        for postings in terms.values_mut() {
            postings.sort();
        }
        Index { terms }
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.terms.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.terms.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn stats(&self) -> IndexStats {
        let postings = self.terms.values().map(Vec::len).sum();
        let covered: BTreeSet<&str> = self
            .terms
            .values()
            .flatten()
            .map(|p| p.topic.as_str())
            .collect();
        IndexStats {
            terms: self.terms.len(),
            postings,
            topics_covered: covered.len(),
        }
    }
}

/// Exact match ratio: `matched` distinct query terms found, out of
/// `total` distinct query terms. Ordered and compared by ratio value via
/// cross-multiplication (`1/2 == 2/4`; a zero total counts as zero);
/// displayed rounded to three decimals.
#[derive(Debug, Clone, Copy)]
pub struct Score {
    pub matched: usize,
    pub total: usize,
}

impl Score {
    pub fn as_f64(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }

    /// Numerator and denominator with `0/0` normalized to `0/1`, so the
    /// ordering below is total.
    fn ratio(&self) -> (u128, u128) {
        if self.total == 0 {
            (0, 1)
        } else {
            (self.matched as u128, self.total as u128)
        }
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // a/b vs c/d  ==  a*d vs c*b.
        let (a, b) = self.ratio();
        let (c, d) = other.ratio();
        (a * d).cmp(&(c * b))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.as_f64())
    }
}

/// One search result: the topic, its exact score, the applicable names
/// that matched at least one query term (in stored-name order), and the
/// topic's occurrences applicable in the query context.
#[derive(Debug, Clone)]
pub struct SearchHit {
    pub topic: String,
    pub score: Score,
    pub matched_names: Vec<String>,
    pub occurrences: Vec<Occurrence>,
}

/// Scope- and type-aware search over the index.
///
/// A topic qualifies when at least one distinct query term appears in at
/// least one of its names *applicable in `context`*; postings from
/// non-applicable names are invisible. `type_filter` keeps only topics
/// whose resolved type set contains the given topic. Results order by
/// score descending, then topic id ascending, truncated to `limit`.
pub fn search(
    index: &Index,
    map: &TopicMap,
    text: &str,
    type_filter: Option<&TopicRef>,
    context: Option<&Scope>,
    limit: usize,
) -> Vec<SearchHit> {
    let mut query_terms: Vec<String> = tokenize(text);
    query_terms.sort();
    query_terms.dedup();
    let total = query_terms.len();
    if total == 0 {
        return Vec::new();
    }

    let allowed: Option<BTreeSet<String>> = type_filter.map(|ty| {
        map.topics_of_type(ty)
            .into_iter()
            .map(|t| t.id.clone())
            .collect()
    });

    // topic id → set of matched distinct terms.
    let mut matched: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for term in &query_terms {
        for posting in index.postings(term) {
            if let Some(allowed) = &allowed {
                if !allowed.contains(&posting.topic) {
                    continue;
                }
            }
            let visible = map
                .topic_by_id(&posting.topic)
                .and_then(|t| t.names.get(posting.name_ordinal))
                .is_some_and(|n| n.scope.applicable(context));
            if visible {
                matched
                    .entry(posting.topic.clone())
                    .or_default()
                    .insert(term);
            }
        }
    }

    let mut hits: Vec<SearchHit> = matched
        .into_iter()
        .map(|(topic_id, terms)| {
            let topic = map.topic_by_id(&topic_id).expect("posting topic exists");
            let matched_names = topic
                .names
                .iter()
                .filter(|n| {
                    n.scope.applicable(context)
                        && tokenize(&n.value).iter().any(|t| terms.contains(t.as_str()))
                })
                .map(|n| n.value.clone())
                .collect();
            let occurrences = topic
                .occurrences_of(None, context)
                .into_iter()
                .cloned()
                .collect();
            SearchHit {
                topic: topic_id,
                score: Score {
                    matched: terms.len(),
                    total,
                },
                matched_names,
                occurrences,
            }
        })
        .collect();
    hits.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.topic.cmp(&b.topic)));
    hits.truncate(limit);
    hits
}
