fn main() {
    h2grid::cli::main()
}
