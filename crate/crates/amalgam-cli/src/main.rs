use clap::Parser;

fn main() {
    let command = amalgam_cli::display_command();
    let cli = amalgam_cli::Cli::parse();
    std::process::exit(amalgam_cli::run(&cli, &command));
}
