fn main() {
    std::process::exit(comorbidity_hmm::cli::run(std::env::args_os()));
}
