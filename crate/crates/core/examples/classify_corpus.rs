//! Classifies every bundled problem file and prints its ontology chain.

use std::path::PathBuf;

use opt_ontology::classify::{classify, ontology_chain};
use opt_ontology::problem::parse_problem;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".optproblem.json"))
        .collect();
    files.sort();
    for path in files {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).unwrap();
        match parse_problem(&text) {
            Ok(p) => {
                let c = classify(&p);
                println!("{name}: {}", c.headline());
                for line in ontology_chain(&c).lines() {
                    println!("    {line}");
                }
            }
            Err(e) => println!("{name}: rejected ({e})"),
        }
    }
}
