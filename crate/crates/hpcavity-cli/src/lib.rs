//! Command-line front end: scenario files in, CSV tables out.

pub mod commands;
pub mod error;
pub mod model;
pub mod output;
pub mod scenario;

use std::path::PathBuf;

use hpcavity::Exec;

pub use error::CliError;
pub use scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    TransmissionSweep,
    FieldMap,
    Sense,
    Compare,
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub fn run(cmd: Command, scenario: &std::path::Path, ov: &Overrides) -> Result<(), CliError> {
    let mut scn = Scenario::load(scenario)?;
    if let Some(seed) = ov.seed {
        scn.seed = seed;
    }
    let out = ov.out.clone().or_else(|| scn.out.clone());
    let exec = match ov.threads {
        Some(1) => Exec::Sequential,
        _ => Exec::Parallel,
    };
    let job = || -> Result<(), CliError> {
        let setup = model::Setup::new(&scn, exec)?;
        match cmd {
            Command::TransmissionSweep => commands::transmission_sweep(&scn, &setup)?.save(out.as_deref()),
            Command::FieldMap => commands::field_map(&scn, &setup)?.save(out.as_deref()),
            Command::Sense => commands::sense(&scn, &setup)?.save(out.as_deref()),
            Command::Compare => {
                let (table, summary) = commands::compare(&scn, &setup)?;
                table.save(out.as_deref())?;
                for s in &summary {
                    eprintln!(
                        "compare: ell = {} n_side = {} {} vs {}: max = {:.6e} rms = {:.6e}",
                        s.ell,
                        s.n_side,
                        s.route.label(),
                        s.reference.label(),
                        s.max,
                        s.rms
                    );
                }
                match &out {
                    Some(p) => commands::summary_table(&summary).save(Some(&summary_path(p))),
                    None => Ok(()),
                }
            }
        }
    };
    match ov.threads {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Unsupported(format!("thread pool: {e}")))?
            .install(job),
        _ => job(),
    }
}

/// `run.csv` → `run.summary.csv`.
pub fn summary_path(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}
