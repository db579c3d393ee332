//! Structured JSON dump of a topic map.
//!
//! The schema is frozen so golden-file comparisons can be byte-exact:
//! object keys appear in the order written here, topics are sorted by
//! id, associations canonically, players within a member
//! lexicographically, and empty collections are omitted entirely.
//!
//! ```json
//! {
//!   "base_locator": "...",
//!   "topics": [
//!     {
//!       "id": "...",
//!       "implicit": true,
//!       "subject_identifiers": ["..."],
//!       "types": ["..."],
//!       "names": [{ "value": "...", "scope": ["..."] }],
//!       "occurrences": [{ "type": "...", "scope": ["..."],
//!                         "reference": "..." }]
//!     }
//!   ],
//!   "associations": [
//!     { "type": "...", "scope": ["..."],
//!       "members": [{ "role": "...", "players": ["..."] }] }
//!   ]
//! }
//! ```
//!
//! `implicit` appears only when true; an occurrence carries exactly one
//! of `reference` (a locator) or `data` (inline text).

use serde::Serialize;

use crate::model::{Association, ResourceLink, Scope, TopicMap};

#[derive(Serialize)]
struct MapDump {
    base_locator: String,
    topics: Vec<TopicDump>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    associations: Vec<AssociationDump>,
}

#[derive(Serialize)]
struct TopicDump {
    id: String,
    #[serde(skip_serializing_if = "is_false")]
    implicit: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    subject_identifiers: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    types: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    names: Vec<NameDump>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    occurrences: Vec<OccurrenceDump>,
}

#[derive(Serialize)]
struct NameDump {
    value: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    scope: Vec<String>,
}

#[derive(Serialize)]
struct OccurrenceDump {
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    occurrence_type: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    scope: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<String>,
}

#[derive(Serialize)]
struct AssociationDump {
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    association_type: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    scope: Vec<String>,
    members: Vec<MemberDump>,
}

#[derive(Serialize)]
struct MemberDump {
    #[serde(skip_serializing_if = "Option::is_none")]
    role: Option<String>,
    players: Vec<String>,
}

fn is_false(b: &bool) -> bool {
    !b
}

fn scope_dump(scope: &Scope) -> Vec<String> {
    scope.themes().map(|t| t.as_str().to_owned()).collect()
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json(map: &TopicMap) -> String {
    let topics = map
        .topics()
        .map(|topic| TopicDump {
            id: topic.id.clone(),
            implicit: topic.implicit,
            subject_identifiers: topic
                .subject_identifiers
                .iter()
                .map(|iri| iri.as_str().to_owned())
                .collect(),
            types: topic.types.iter().map(|t| t.as_str().to_owned()).collect(),
            names: topic
                .names
                .iter()
                .map(|name| NameDump {
                    value: name.value.clone(),
                    scope: scope_dump(&name.scope),
                })
                .collect(),
            occurrences: topic
                .occurrences
                .iter()
                .map(|occ| OccurrenceDump {
                    occurrence_type: occ
                        .occurrence_type
                        .as_ref()
                        .map(|t| t.as_str().to_owned()),
                    scope: scope_dump(&occ.scope),
                    reference: match &occ.resource {
                        ResourceLink::Reference(iri) => Some(iri.as_str().to_owned()),
                        ResourceLink::Inline(_) => None,
                    },
                    data: match &occ.resource {
                        ResourceLink::Reference(_) => None,
                        ResourceLink::Inline(text) => Some(text.clone()),
                    },
                })
                .collect(),
        })
        .collect();

    let mut assocs: Vec<&Association> = map.associations().iter().collect();
    assocs.sort();
    let associations = assocs
        .into_iter()
        .map(|assoc| {
            let mut members: Vec<MemberDump> = assoc
                .members
                .iter()
                .map(|member| {
                    let mut players: Vec<String> = member
                        .players
                        .iter()
                        .map(|p| p.as_str().to_owned())
                        .collect();
                    players.sort();
                    MemberDump {
                        role: member.role_type.as_ref().map(|r| r.as_str().to_owned()),
                        players,
                    }
                })
                .collect();
            members.sort_by(|a, b| (&a.role, &a.players).cmp(&(&b.role, &b.players)));
            AssociationDump {
                association_type: assoc
                    .association_type
                    .as_ref()
                    .map(|t| t.as_str().to_owned()),
                scope: scope_dump(&assoc.scope),
                members,
            }
        })
        .collect();

    let dump = MapDump {
        base_locator: map.base_locator().as_str().to_owned(),
        topics,
        associations,
    };
    let mut out = serde_json::to_string_pretty(&dump).expect("dump serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iri::Iri;
    use crate::model::{Association, Occurrence, Topic, TopicMap};

    #[test]
    fn frozen_shape_for_a_small_map() {
        let mut map = TopicMap::create("urn:test:e").unwrap();
        map.add_topic(Topic::new("city").with_name("City")).unwrap();
        let mut stub = Topic::new("fmt");
        stub.implicit = true;
        map.add_topic(stub).unwrap();
        map.add_topic(
            Topic::new("paper")
                .with_subject_identifier(Iri::new("http://example.org/paper").unwrap())
                .with_type("city")
                .with_scoped_name("The Journal", crate::model::Scope::of(["city"]))
                .with_occurrence(
                    Occurrence::reference(Iri::new("http://example.org/p.pdf").unwrap())
                        .typed("fmt"),
                )
                .with_occurrence(Occurrence::inline("plain text")),
        )
        .unwrap();
        map.add_association(
            Association::typed("city")
                .with_member(Some("fmt".into()), vec!["paper".into(), "city".into()]),
        )
        .unwrap();
        map.seal();
        assert_eq!(
            to_json(&map),
            r#"{
  "base_locator": "urn:test:e",
  "topics": [
    {
      "id": "city",
      "names": [
        {
          "value": "City"
        }
      ]
    },
    {
      "id": "fmt",
      "implicit": true
    },
    {
      "id": "paper",
      "subject_identifiers": [
        "http://example.org/paper"
      ],
      "types": [
        "city"
      ],
      "names": [
        {
          "value": "The Journal",
          "scope": [
            "city"
          ]
        }
      ],
      "occurrences": [
        {
          "type": "fmt",
          "reference": "http://example.org/p.pdf"
        },
        {
          "data": "plain text"
        }
      ]
    }
  ],
  "associations": [
    {
      "type": "city",
      "members": [
        {
          "role": "fmt",
          "players": [
            "city",
            "paper"
          ]
        }
      ]
    }
  ]
}
"#
        );
    }

    #[test]
    fn empty_map_still_has_topics_key() {
        let mut map = TopicMap::create("urn:test:e").unwrap();
        map.seal();
        assert_eq!(
            to_json(&map),
            "{\n  \"base_locator\": \"urn:test:e\",\n  \"topics\": []\n}\n"
        );
    }

    #[test]
    fn export_is_deterministic() {
        let mut map = TopicMap::create("urn:test:e").unwrap();
        map.add_topic(Topic::new("b").with_name("B")).unwrap();
        map.add_topic(Topic::new("a").with_name("A")).unwrap();
        map.seal();
        let one = to_json(&map);
        assert_eq!(one, to_json(&map));
        let a_pos = one.find("\"a\"").unwrap();
        let b_pos = one.find("\"b\"").unwrap();
        assert!(a_pos < b_pos);
    }
}
