fn main() {
    eprintln!("nodectl: under construction");
    std::process::exit(2);
}
