fn main() -> std::process::ExitCode {
    vee_swarm::cli::main_entry()
}
