//! Flat `key = value` run configuration.
//!
//! Blank lines are ignored and `#` starts a comment. Every key may appear at
//! most once and unknown keys are rejected. Missing keys take the defaults
//! of [`RunConfig::default_for`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use relhf::model::ShellSpec;
use relhf::{validate_system, AtomSystem, SolverOptions};
use serde::Serialize;

use crate::CliError;

/// Which verification suites `verify` runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suites {
    pub certificate: bool,
    pub decay: bool,
    pub kato: bool,
    pub herbst: bool,
    pub greens: bool,
    pub binding: bool,
}

impl Suites {
    pub fn needs_scf(&self) -> bool {
        self.certificate || self.decay
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: AtomSystem,
    pub options: SolverOptions,
    pub output_dir: PathBuf,
    pub suites: Suites,
    /// Fixed decay-fit window for every orbital; automatic when absent.
    pub decay_window: Option<(f64, f64)>,
    pub kato_count: usize,
    pub kato_seed: u64,
    pub herbst_l_max: usize,
    /// Kernel energy in Hartree; the kernel itself uses `alpha * greens_energy`.
    pub greens_energy: f64,
    pub greens_grid_size: usize,
    pub greens_r_max: f64,
    pub greens_tolerance: f64,
    pub binding_max_electrons: usize,
}

pub const KEYS: &[&str] = &[
    "z",
    "electrons",
    "alpha",
    "spin_states",
    "grid_size",
    "r_max",
    "max_iterations",
    "tol_energy",
    "tol_commutator",
    "algorithm",
    "level_shift",
    "initial_guess",
    "l_max",
    "include_p",
    "kinetic_model",
    "shells",
    "output_dir",
    "verify_certificate",
    "verify_decay",
    "verify_kato",
    "verify_herbst",
    "verify_greens",
    "verify_binding",
    "decay_window_start",
    "decay_window_end",
    "kato_count",
    "kato_seed",
    "herbst_l_max",
    "greens_energy",
    "greens_grid_size",
    "greens_r_max",
    "greens_tolerance",
    "binding_max_electrons",
];

impl RunConfig {
    pub fn default_for(system: AtomSystem) -> Self {
        Self {
            system,
            options: SolverOptions::default(),
            output_dir: PathBuf::from("out"),
            suites: Suites {
                certificate: true,
                decay: true,
                kato: true,
                herbst: true,
                greens: true,
                binding: false,
            },
            decay_window: None,
            kato_count: 100,
            kato_seed: 1,
            herbst_l_max: 2,
            greens_energy: -2.0,
            greens_grid_size: 400,
            greens_r_max: 10.0,
            greens_tolerance: 1e-3,
            binding_max_electrons: system.n_electrons,
        }
    }

    /// Reads a config file; a relative `output_dir` is taken relative to
    /// the directory holding the file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if config.output_dir.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected `key = value`, got `{line}`", no + 1)));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", no + 1)));
            }
            if entries.insert(key.to_string(), (no + 1, value.trim().to_string())).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", no + 1)));
            }
        }
        let mut t = Table { entries };

        let z: f64 = t.required("z")?;
        let electrons: usize = t.required("electrons")?;
        let alpha = t.get("alpha")?.unwrap_or(AtomSystem::PHYSICAL_ALPHA);
        let q = t.get("spin_states")?.unwrap_or(2);
        let system = AtomSystem::new(z, electrons, alpha).with_spin_states(q);
        let system = validate_system(system)?;

        let mut c = Self::default_for(system);
        let o = &mut c.options;
        t.set("grid_size", &mut o.grid_size)?;
        t.set("r_max", &mut o.r_max)?;
        t.set("max_iterations", &mut o.max_iterations)?;
        t.set("tol_energy", &mut o.tol_energy)?;
        t.set("tol_commutator", &mut o.tol_commutator)?;
        t.set("algorithm", &mut o.algorithm)?;
        t.set("level_shift", &mut o.level_shift)?;
        t.set("initial_guess", &mut o.initial_guess)?;
        o.l_max = t.get("l_max")?;
        t.set("include_p", &mut o.include_p)?;
        t.set("kinetic_model", &mut o.kinetic_model)?;
        if let Some((line, text)) = t.take("shells") {
            o.shells = Some(parse_shells(&text).map_err(|e| CliError::Config(format!("line {line}: shells: {e}")))?);
        }
        o.validate()?;

        if let Some((_, dir)) = t.take("output_dir") {
            c.output_dir = PathBuf::from(dir);
        }
        let s = &mut c.suites;
        t.set("verify_certificate", &mut s.certificate)?;
        t.set("verify_decay", &mut s.decay)?;
        t.set("verify_kato", &mut s.kato)?;
        t.set("verify_herbst", &mut s.herbst)?;
        t.set("verify_greens", &mut s.greens)?;
        t.set("verify_binding", &mut s.binding)?;
        let start: Option<f64> = t.get("decay_window_start")?;
        let end: Option<f64> = t.get("decay_window_end")?;
        c.decay_window = match (start, end) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => {
                return Err(CliError::Config(
                    "decay_window_start and decay_window_end must be given together".into(),
                ))
            }
        };
        t.set("kato_count", &mut c.kato_count)?;
        t.set("kato_seed", &mut c.kato_seed)?;
        t.set("herbst_l_max", &mut c.herbst_l_max)?;
        t.set("greens_energy", &mut c.greens_energy)?;
        t.set("greens_grid_size", &mut c.greens_grid_size)?;
        t.set("greens_r_max", &mut c.greens_r_max)?;
        t.set("greens_tolerance", &mut c.greens_tolerance)?;
        t.set("binding_max_electrons", &mut c.binding_max_electrons)?;
        debug_assert!(t.entries.is_empty());
        Ok(c)
    }
}

struct Table {
    entries: BTreeMap<String, (usize, String)>,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("line {line}: bad value `{v}` for key `{key}`: {e}"))),
        }
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }
}

/// `ell:spin:occupation` entries separated by commas, e.g. `0:0:1, 0:1:1`.
fn parse_shells(text: &str) -> Result<Vec<ShellSpec>, String> {
    text.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected `ell:spin:occupation`, got `{}`", item.trim()));
            }
            let ell = parts[0].trim().parse().map_err(|e| format!("ell `{}`: {e}", parts[0]))?;
            let spin = parts[1].trim().parse().map_err(|e| format!("spin `{}`: {e}", parts[1]))?;
            let occupation = parts[2].trim().parse().map_err(|e| format!("occupation `{}`: {e}", parts[2]))?;
            Ok(ShellSpec { ell, spin, occupation })
        })
        .collect()
}
