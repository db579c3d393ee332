//! Load the faculty corpus, run a query, and rank a search.
//!
//! Run from the workspace root with `cargo run --example faculty`.

use topicmap::index::{self, Index};
use topicmap::query::{eval, parse_query};
use topicmap::xtm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = xtm::load_file("corpus/faculty-full.xtm")?;
    let map = doc.map;
    println!("loaded {} topics", map.topic_count());

    // Conjunctive filters, then an association traversal.
    let q = parse_query("id(rajkumar-kannan) -> assoc(works-for)")?;
    for id in eval(&map, &q).topics {
        println!("works for: {id}");
    }

    // Every name of a topic is indexed, so a search for the formal
    // variant still finds the topic named informally elsewhere.
    let idx = Index::build(&map);
    for hit in index::search(&idx, &map, "Dr Kannan", None, None, 5) {
        println!("{} scored {}", hit.topic, hit.score);
    }
    Ok(())
}
