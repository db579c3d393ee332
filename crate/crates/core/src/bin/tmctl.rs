//! `tmctl`: command-line front end for the topic map engine.
//!
//! Exit codes: 0 success; 1 error-severity findings (fatal parse errors,
//! validator errors); 2 usage errors or query syntax errors; 3 I/O
//! failures. All output is deterministic: identical arguments and files
//! produce byte-identical standard output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use topicmap::error::Error;
use topicmap::model::{Scope, TopicMap, TopicRef};
use topicmap::xtm::XtmDocument;
use topicmap::{export, index, merge, query, validate, xtm};

#[derive(Parser)]
#[command(
    name = "tmctl",
    about = "Topic map toolkit: validate, merge, query, search, export",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a topic map and print its diagnostics
    Validate {
        /// XTM file to check
        file: PathBuf,
    },
    /// Merge two topic maps into one
    Merge {
        /// First input (its base locator wins)
        a: PathBuf,
        /// Second input
        b: PathBuf,
        /// Where to write the merged map
        #[arg(short, long, value_name = "out.xtm")]
        output: PathBuf,
        /// Also write a merge report
        #[arg(long, value_name = "report.txt")]
        report: Option<PathBuf>,
    },
    /// Evaluate a query, one matching topic id per line
    Query {
        /// Map to query
        #[arg(short, long, value_name = "file.xtm")]
        map: PathBuf,
        /// Query text, e.g. 'name("Tirupathi") and type(city)'
        query: String,
        /// Ambient context: comma-separated theme ids ("" = empty context)
        #[arg(long, value_name = "id,...")]
        context: Option<String>,
    },
    /// Rank topics against search terms
    Search {
        /// Map to search
        #[arg(short, long, value_name = "file.xtm")]
        map: PathBuf,
        /// Search terms
        terms: String,
        /// Only topics of this type
        #[arg(long = "type", value_name = "id")]
        type_filter: Option<String>,
        /// Ambient context: comma-separated theme ids ("" = empty context)
        #[arg(long, value_name = "id,...")]
        context: Option<String>,
        /// Maximum number of hits
        #[arg(long, default_value_t = 10, value_name = "n")]
        limit: usize,
    },
    /// Write the map back out in a chosen format
    Export {
        /// Map to export
        #[arg(short, long, value_name = "file.xtm")]
        map: PathBuf,
        /// Output format
        #[arg(long, value_enum)]
        format: Format,
    },
    /// Print map and index statistics
    Stats {
        /// Map to measure
        #[arg(short, long, value_name = "file.xtm")]
        map: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Xtm,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn run(command: Command) -> Result<ExitCode, ExitCode> {
    match command {
        Command::Validate { file } => {
            let doc = load(&file)?;
            let diags = validate::validate(&doc.map);
            print!("{}", validate::render(&diags));
            let has_errors = diags
                .iter()
                .any(|d| d.severity == validate::Severity::Error);
            Ok(if has_errors {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Merge {
            a,
            b,
            output,
            report,
        } => {
            let doc_a = load(&a)?;
            let doc_b = load(&b)?;
            let (merged, merge_report) = merge::merge_maps(&doc_a.map, &doc_b.map);
            for (old, new) in &merge_report.renamed {
                eprintln!("note: renamed: {old} -> {new}");
            }
            write_out(&output, &xtm::serialize_xtm(&merged))?;
            if let Some(report_path) = report {
                write_out(&report_path, merge_report.render().as_bytes())?;
            }
            println!(
                "merged: {} pairs, result: {} topics, {} associations",
                merge_report.merged_pairs.len(),
                merged.topics().count(),
                merged.associations().len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Query {
            map,
            query: query_text,
            context,
        } => {
            let doc = load(&map)?;
            let parsed = match query::parse_query(&query_text) {
                Ok(parsed) => parsed,
                Err(err) => {
                    eprintln!("tmctl: {err}");
                    return Err(ExitCode::from(2));
                }
            };
            let (ambient, unknown) = ambient_context(&doc.map, context.as_deref());
            for id in &unknown {
                eprintln!("note: unknown id: {id}");
            }
            if !unknown.is_empty() {
                return Ok(ExitCode::SUCCESS);
            }
            let result = query::eval_in_context(&doc.map, &parsed, ambient.as_ref());
            for note in &result.notes {
                eprintln!("note: {note}");
            }
            for topic in &result.topics {
                println!("{}", topic.as_str());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Search {
            map,
            terms,
            type_filter,
            context,
            limit,
        } => {
            let doc = load(&map)?;
            let (ambient, mut unknown) = ambient_context(&doc.map, context.as_deref());
            let type_ref = type_filter.map(TopicRef::new);
            if let Some(t) = &type_ref {
                if doc.map.resolve_id(t.as_str()).is_none() {
                    unknown.push(t.as_str().to_owned());
                }
            }
            for id in &unknown {
                eprintln!("note: unknown id: {id}");
            }
            let hits = if unknown.is_empty() {
                let idx = index::Index::build(&doc.map);
                index::search(
                    &idx,
                    &doc.map,
                    &terms,
                    type_ref.as_ref(),
                    ambient.as_ref(),
                    limit,
                )
            } else {
                Vec::new()
            };
            print!("{}", search_table(&hits));
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { map, format } => {
            let doc = load(&map)?;
            match format {
                Format::Xtm => {
                    let bytes = xtm::serialize_xtm(&doc.map);
                    print!("{}", String::from_utf8(bytes).expect("serializer emits UTF-8"));
                }
                Format::Json => print!("{}", export::to_json(&doc.map)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { map } => {
            let doc = load(&map)?;
            let occurrences: usize = doc.map.topics().map(|t| t.occurrences.len()).sum();
            let idx = index::Index::build(&doc.map);
            let stats = idx.stats();
            println!("topics: {}", doc.map.topics().count());
            println!("associations: {}", doc.map.associations().len());
            println!("occurrences: {occurrences}");
            println!("index terms: {}", stats.terms);
            println!("index postings: {}", stats.postings);
            println!("index topics covered: {}", stats.topics_covered);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Load a map, forwarding parse warnings to standard error. Fatal parse
/// problems exit 1 (they are error-severity findings); I/O problems
/// exit 3.
fn load(path: &Path) -> Result<XtmDocument, ExitCode> {
    match xtm::load_file(path) {
        Ok(doc) => {
            for diagnostic in &doc.diagnostics {
                eprintln!("{}:{}", path.display(), diagnostic);
            }
            Ok(doc)
        }
        Err(err) => {
            eprintln!("tmctl: {}: {}", path.display(), err);
            Err(match err {
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            })
        }
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), ExitCode> {
    std::fs::write(path, bytes).map_err(|err| {
        eprintln!("tmctl: {}: {}", path.display(), err);
        ExitCode::from(3)
    })
}

/// Interpret `--context`: absent → no ambient context; `""` → the empty
/// (universal-only) context; otherwise the listed theme ids, which must
/// all resolve. Unresolved ids are returned for note-and-empty handling,
/// mirroring how unknown ids behave inside a query.
fn ambient_context(map: &TopicMap, raw: Option<&str>) -> (Option<Scope>, Vec<String>) {
    let Some(raw) = raw else {
        return (None, Vec::new());
    };
    let mut themes: Vec<TopicRef> = Vec::new();
    let mut unknown = Vec::new();
    for id in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match map.resolve_id(id) {
            Some(live) => themes.push(TopicRef::new(live)),
            None => unknown.push(id.to_owned()),
        }
    }
    (Some(Scope::of(themes)), unknown)
}

/// Fixed-width table: two-space gutters, columns sized to content,
/// header always present.
fn search_table(hits: &[index::SearchHit]) -> String {
    let header = ["rank", "score", "topic", "name", "occurrences"];
    let mut rows: Vec<[String; 5]> = Vec::new();
    for (i, hit) in hits.iter().enumerate() {
        rows.push([
            (i + 1).to_string(),
            hit.score.to_string(),
            hit.topic.clone(),
            hit.matched_names.first().cloned().unwrap_or_default(),
            hit.occurrences.len().to_string(),
        ]);
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let emit = |cells: [&str; 5], out: &mut String| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < cells.len() {
                for _ in cell.len()..widths[i] {
                    line.push(' ');
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    emit(header, &mut out);
    for row in &rows {
        emit(
            [
                row[0].as_str(),
                row[1].as_str(),
                row[2].as_str(),
                row[3].as_str(),
                row[4].as_str(),
            ],
            &mut out,
        );
    }
    out
}
