//! Batch execution of a directory of scenario files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{parse_scenario, ScenarioConfig};
use crate::error::{LabError, Result};
use crate::scenario::run_scenario;

/// Command-line overrides applied to every scenario before it runs.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub record_every: Option<usize>,
    pub max_steps: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.record_every {
            config.step.record_every = n;
        }
        if let Some(n) = self.max_steps {
            config.step.max_steps = n;
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Output root; each scenario's own `output_dir` otherwise.
    pub out: Option<PathBuf>,
    pub overrides: Overrides,
    /// Run everything a second time into `<out>/repeat/`, for the
    /// determinism check.
    pub repeat: bool,
}

#[derive(Debug)]
pub struct SuiteEntry {
    pub scenario: PathBuf,
    pub name: String,
    pub result: Result<PathBuf>,
}

/// Scenario files (`*.toml`) directly in `dir`, sorted.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| LabError::io(dir, e))? {
        let path = entry.map_err(|e| LabError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "toml") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(LabError::Usage(format!("no scenario files in {}", dir.display())));
    }
    Ok(files)
}

/// Parses every scenario in `dir` (all must parse before anything runs) and
/// runs them in parallel. Run failures are returned per entry.
pub fn run_suite(dir: &Path, options: &SuiteOptions) -> Result<Vec<SuiteEntry>> {
    let mut jobs = Vec::new();
    for path in scenario_files(dir)? {
        let mut config = parse_scenario(&path)?;
        options.overrides.apply(&mut config);
        config.validate()?;
        jobs.push((path, config));
    }
    let mut names: Vec<&str> = jobs.iter().map(|(_, c)| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(LabError::invalid("name", format!("scenario name {:?} used twice", w[0])));
    }

    let mut roots: Vec<Option<PathBuf>> = vec![options.out.clone()];
    if options.repeat {
        roots.push(Some(match &options.out {
            Some(out) => out.join("repeat"),
            None => PathBuf::from("runs/repeat"),
        }));
    }
    let work: Vec<(&PathBuf, &ScenarioConfig, Option<PathBuf>)> = roots
        .iter()
        .flat_map(|root| jobs.iter().map(move |(p, c)| (p, c, root.clone())))
        .collect();
    Ok(work
        .into_par_iter()
        .map(|(path, config, root)| SuiteEntry {
            scenario: path.clone(),
            name: config.name.clone(),
            result: run_scenario(config, root.as_deref()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"
name = "tiny"
roles = []
[initial]
kind = "sphere"
radius = 2.0
subdivisions = 1
[time]
gauge = "physical"
start = -1.0
end = -0.95
"#;

    #[test]
    fn runs_every_scenario_and_the_repeat() {
        let scenarios = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        std::fs::write(scenarios.path().join("tiny.toml"), TINY).unwrap();
        std::fs::write(scenarios.path().join("notes.txt"), "ignored").unwrap();
        let options = SuiteOptions {
            out: Some(out.path().to_path_buf()),
            overrides: Overrides {
                seed: Some(7),
                ..Default::default()
            },
            repeat: true,
        };
        let entries = run_suite(scenarios.path(), &options).unwrap();
        assert_eq!(entries.len(), 2);
        for e in &entries {
            let dir = e.result.as_ref().unwrap();
            let stored = std::fs::read_to_string(dir.join("config.toml")).unwrap();
            assert!(stored.contains("seed = 7"), "{stored}");
        }
        assert!(out.path().join("repeat/tiny/manifest.json").is_file());
    }

    #[test]
    fn empty_directory_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_suite(dir.path(), &SuiteOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.toml"), TINY).unwrap();
        std::fs::write(dir.path().join("b.toml"), TINY).unwrap();
        assert!(matches!(run_suite(dir.path(), &SuiteOptions::default()), Err(LabError::Validation { .. })));
    }
}
