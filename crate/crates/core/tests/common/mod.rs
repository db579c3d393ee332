//! Shared helpers for the integration suites: corpus paths, a seeded
//! random map generator, and small naive reference implementations used
//! to cross-check the library's fast paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topicmap::{Association, Iri, Name, Occurrence, Scope, Topic, TopicMap, TopicRef};

pub fn corpus_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(file)
}

pub fn fixture_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(file)
}

pub fn load_corpus(file: &str) -> topicmap::xtm::XtmDocument {
    topicmap::xtm::load_file(&corpus_path(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

/// Deterministic pseudo-random topic map. Every topic carries a stable
/// subject identifier derived from its ordinal (so two generations with
/// overlapping ordinal ranges share identifiers and exercise merging),
/// and all references point at topics that exist in the map.
pub struct MapGenerator {
    rng: ChaCha8Rng,
}

const WORDS: &[&str] = &[
    "alpha", "beacon", "cedar", "delta", "ember", "fjord", "granite", "harbor", "indigo",
    "juniper", "krypton", "lagoon", "meadow", "nimbus", "onyx", "prairie", "quartz", "russet",
    "summit", "timber",
];

impl MapGenerator {
    pub fn new(seed: u64) -> Self {
        MapGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generate a sealed map with topic ordinals drawn from
    /// `first..first + count`.
    pub fn generate(&mut self, first: usize, count: usize) -> TopicMap {
        let mut map = TopicMap::create("urn:gen:map").unwrap();
        let ids: Vec<String> = (first..first + count).map(|k| format!("t{k:03}")).collect();
        for (i, id) in ids.iter().enumerate() {
            let k = first + i;
            let mut topic = Topic::new(id.clone());
            topic
                .subject_identifiers
                .insert(Iri::new(format!("urn:test:subject:{k}")).unwrap());
            let name_count = self.rng.gen_range(0..3);
            for _ in 0..name_count {
                let value = format!(
                    "{} {}",
                    WORDS[self.rng.gen_range(0..WORDS.len())],
                    WORDS[self.rng.gen_range(0..WORDS.len())]
                );
                let name = if self.rng.gen_bool(0.3) {
                    Name::scoped(value, Scope::of([ids[self.rng.gen_range(0..ids.len())].as_str()]))
                } else {
                    Name::new(value)
                };
                topic.add_name(name);
            }
            if self.rng.gen_bool(0.3) && ids.len() > 1 {
                // A topic may not be its own type, so draw until the
                // type is some other topic.
                let ty = loop {
                    let j = self.rng.gen_range(0..ids.len());
                    if j != i {
                        break ids[j].as_str();
                    }
                };
                topic.types.insert(TopicRef::new(ty));
            }
            if self.rng.gen_bool(0.4) {
                let occ = if self.rng.gen_bool(0.5) {
                    Occurrence::reference(
                        Iri::new(format!("http://example.org/res/{k}")).unwrap(),
                    )
                } else {
                    Occurrence::inline(format!("data for {k}"))
                };
                topic.occurrences.push(occ);
            }
            map.add_topic(topic).unwrap();
        }
        let assoc_count = count / 3;
        for _ in 0..assoc_count {
            let ty = ids[self.rng.gen_range(0..ids.len())].clone();
            let mut assoc = Association::typed(ty);
            let members = self.rng.gen_range(1..4);
            for _ in 0..members {
                let role = if self.rng.gen_bool(0.8) {
                    Some(TopicRef::new(
                        ids[self.rng.gen_range(0..ids.len())].as_str(),
                    ))
                } else {
                    None
                };
                let player_count = self.rng.gen_range(1..3);
                let players: Vec<TopicRef> = (0..player_count)
                    .map(|_| TopicRef::new(ids[self.rng.gen_range(0..ids.len())].as_str()))
                    .collect();
                assoc.members.push(topicmap::Member::new(role, players));
            }
            map.add_association(assoc).unwrap();
        }
        map.seal();
        map
    }
}

/// Path of a committed golden expectation file.
pub fn golden_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(file)
}

/// Run the `tmctl` binary; returns (stdout, stderr, exit code).
pub fn run_tmctl<I, S>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_tmctl"))
        .args(args)
        .current_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../.."))
        .output()
        .expect("tmctl runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code().unwrap_or(-1),
    )
}

/// One documented CLI invocation with its expected standard output
/// (from a golden file, when stdout is non-empty) and exit code.
pub struct CliCase {
    pub name: &'static str,
    pub args: Vec<String>,
    pub golden: Option<&'static str>,
    pub want_exit: i32,
}

/// The documented invocation list shared by the CLI suite and the
/// acceptance run. `out_dir` receives files written by merge cases.
pub fn cli_cases(out_dir: &std::path::Path) -> Vec<CliCase> {
    let merged_out = out_dir.join("merged.xtm");
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        CliCase {
            name: "validate-clean",
            args: strs(&["validate", "corpus/fig2.xtm"]),
            golden: Some("validate-fig2.txt"),
            want_exit: 0,
        },
        CliCase {
            name: "validate-stubs",
            args: strs(&["validate", "corpus/fig4.xtm"]),
            golden: Some("validate-fig4.txt"),
            want_exit: 0,
        },
        CliCase {
            name: "query-name-and-type",
            args: strs(&[
                "query",
                "-m",
                "corpus/faculty-full.xtm",
                "name(\"Tirupathi\") and type(city)",
            ]),
            golden: Some("query-tirupathi-city.txt"),
            want_exit: 0,
        },
        CliCase {
            name: "query-traversal",
            args: strs(&[
                "query",
                "-m",
                "corpus/faculty-full.xtm",
                "id(rajkumar-kannan) -> assoc(works-for)",
            ]),
            golden: Some("query-works-for.txt"),
            want_exit: 0,
        },
        CliCase {
            name: "search-ranked",
            args: strs(&[
                "search",
                "-m",
                "corpus/faculty-full.xtm",
                "knowledge management",
                "--type",
                "journal",
            ]),
            golden: Some("search-knowledge-management.txt"),
            want_exit: 0,
        },
        CliCase {
            name: "export-json",
            args: strs(&["export", "-m", "corpus/fig4.xtm", "--format", "json"]),
            golden: Some("export-fig4.json"),
            want_exit: 0,
        },
        CliCase {
            name: "export-xtm",
            args: strs(&["export", "-m", "corpus/fig3.xtm", "--format", "xtm"]),
            golden: Some("export-fig3.xtm"),
            want_exit: 0,
        },
        CliCase {
            name: "stats",
            args: strs(&["stats", "-m", "corpus/faculty-full.xtm"]),
            golden: Some("stats-faculty-full.txt"),
            want_exit: 0,
        },
        CliCase {
            name: "merge-disjoint",
            args: vec![
                "merge".into(),
                "corpus/fig2.xtm".into(),
                "corpus/fig3.xtm".into(),
                "-o".into(),
                merged_out.to_string_lossy().into_owned(),
            ],
            golden: Some("merge-fig2-fig3.txt"),
            want_exit: 0,
        },
        CliCase {
            name: "unknown-flag",
            args: strs(&["validate", "--frobnicate", "corpus/fig2.xtm"]),
            golden: None,
            want_exit: 2,
        },
        CliCase {
            name: "unknown-subcommand",
            args: strs(&["go"]),
            golden: None,
            want_exit: 2,
        },
        CliCase {
            name: "bad-query-text",
            args: strs(&["query", "-m", "corpus/fig2.xtm", "name(\"\")"]),
            golden: None,
            want_exit: 2,
        },
        CliCase {
            name: "missing-file",
            args: strs(&["validate", "corpus/does-not-exist.xtm"]),
            golden: None,
            want_exit: 3,
        },
        CliCase {
            name: "malformed-xml",
            args: strs(&["validate", "crates/core/tests/fixtures/malformed.xtm"]),
            golden: None,
            want_exit: 1,
        },
    ]
}

/// Check one case; returns a failure description instead of panicking so
/// callers can aggregate.
pub fn check_cli_case(case: &CliCase) -> Result<(), String> {
    let (stdout, stderr, code) = run_tmctl(&case.args);
    if code != case.want_exit {
        return Err(format!(
            "{}: exit {code}, want {} (stderr: {})",
            case.name,
            case.want_exit,
            stderr.trim()
        ));
    }
    if let Some(golden) = case.golden {
        let want = std::fs::read_to_string(golden_path(golden))
            .map_err(|e| format!("{}: golden {golden}: {e}", case.name))?;
        // Goldens are checkout-location independent: the repository root
        // inside file:// locators is folded to a placeholder.
        let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../..")
            .canonicalize()
            .expect("repo root resolves");
        let stdout = stdout.replace(
            &format!("file://{}", root.to_string_lossy()),
            "file://ROOT",
        );
        if stdout != want {
            return Err(format!(
                "{}: stdout differs from {golden}\n--- got ---\n{stdout}\n--- want ---\n{want}",
                case.name
            ));
        }
    } else if case.want_exit != 0 && !stdout.is_empty() {
        return Err(format!(
            "{}: expected empty stdout on failure, got: {stdout}",
            case.name
        ));
    }
    Ok(())
}

/// Naive full-scan scope-aware name lookup: all (topic id, name value)
/// pairs whose lowercased value equals the query and whose scope applies
/// in the given context.
pub fn naive_name_lookup(map: &TopicMap, value: &str, context: Option<&Scope>) -> BTreeSet<String> {
    let needle = value.to_lowercase();
    let mut out = BTreeSet::new();
    for topic in map.topics() {
        for name in &topic.names {
            if name.value.to_lowercase() == needle && name.scope.applicable(context) {
                out.insert(topic.id.clone());
            }
        }
    }
    out
}

/// Naive substring search over applicable names.
pub fn naive_contains(map: &TopicMap, fragment: &str, context: Option<&Scope>) -> BTreeSet<String> {
    let needle = fragment.to_lowercase();
    let mut out = BTreeSet::new();
    for topic in map.topics() {
        for name in &topic.names {
            if name.value.to_lowercase().contains(&needle) && name.scope.applicable(context) {
                out.insert(topic.id.clone());
            }
        }
    }
    out
}

/// Naive postings count: (topic, name ordinal, token position) triples.
pub fn naive_postings(map: &TopicMap) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    for topic in map.topics() {
        for (ordinal, name) in topic.names.iter().enumerate() {
            for (position, _token) in topicmap::index::tokenize(&name.value).into_iter().enumerate()
            {
                out.push((topic.id.clone(), ordinal, position));
            }
        }
    }
    out
}

/// Occurrence resources across the whole map, as a multiset.
pub fn resource_multiset(map: &TopicMap) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for topic in map.topics() {
        for occ in &topic.occurrences {
            let key = match &occ.resource {
                topicmap::ResourceLink::Reference(iri) => format!("ref:{}", iri.as_str()),
                topicmap::ResourceLink::Inline(data) => format!("data:{data}"),
            };
            *out.entry(key).or_insert(0) += 1;
        }
    }
    out
}

/// Distinct occurrence resources across the whole map.
pub fn resource_set(map: &TopicMap) -> BTreeSet<String> {
    resource_multiset(map).into_keys().collect()
}
