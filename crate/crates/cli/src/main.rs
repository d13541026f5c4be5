fn main() {
    std::process::exit(dihedral_cli::run(std::env::args_os()));
}
