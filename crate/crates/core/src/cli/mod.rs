//! Problem files and the `locvi` command line.

pub mod build;
pub mod parse;
pub mod run;

pub use build::{build, Model, Overrides};
pub use parse::{parse_str, Diagnostic, ProblemFile};
pub use run::{run_file, run_text, CliError, Command, CsvTable, Flags, RunReport};

/// Reads and validates a problem file with its own `[meta]` parameters.
pub fn parse(path: &std::path::Path) -> Result<ProblemFile, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![Diagnostic::new(0, "", format!("{}: {e}", path.display()))])?;
    let pf = parse_str(&text)?;
    build(&pf, &Overrides::default())?;
    Ok(pf)
}
