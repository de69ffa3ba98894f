fn main() {
    std::process::exit(opt_ontology::cli::main());
}
