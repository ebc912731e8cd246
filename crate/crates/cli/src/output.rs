//! Output files. Numbers in CSV files are written as `{:.16e}` (17
//! significant digits), so repeated runs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use relhf::analysis::{orbital_label, BindingTable};
use relhf::coulomb::DensityMatrix;
use relhf::{RadialGrid, ScfReport};
use serde::Serialize;

use crate::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Seconds since the Unix epoch.
pub fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// `r` followed by `P(r)` of every orbital with non-zero occupation.
pub fn write_orbitals(path: &Path, gamma: &DensityMatrix, grid: &RadialGrid) -> Result<(), CliError> {
    let orbitals: Vec<_> = gamma.orbitals().filter(|o| o.lambda > 0.0).collect();
    let mut out = create(path)?;
    let mut header = String::from("r");
    for o in &orbitals {
        header.push(',');
        header.push_str(&orbital_label(o.ell, o.spin, o.index));
    }
    let mut body = header;
    body.push('\n');
    for (i, r) in grid.nodes().iter().enumerate() {
        body.push_str(&format!("{r:.16e}"));
        for o in &orbitals {
            body.push_str(&format!(",{:.16e}", o.p[i]));
        }
        body.push('\n');
    }
    out.write_all(body.as_bytes()).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// One row per energy evaluation; row 0 is the initial guess. Columns are
/// the fields of `EnergyBreakdown`: `total = kinetic - nuclear + direct - exchange`.
pub fn write_energy_trace(path: &Path, report: &ScfReport) -> Result<(), CliError> {
    let mut out = create(path)?;
    let mut body = String::from("iteration,total,kinetic,nuclear,direct,exchange\n");
    for (i, e) in report.energy_trace.iter().enumerate() {
        body.push_str(&format!(
            "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            e.total, e.kinetic, e.nuclear, e.direct, e.exchange
        ));
    }
    out.write_all(body.as_bytes()).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn write_sweep(path: &Path, table: &BindingTable) -> Result<(), CliError> {
    let mut out = create(path)?;
    let mut body = String::from("electrons,energy,homo,gap,required_gap\n");
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for r in &table.rows {
        body.push_str(&format!(
            "{},{:.16e},{:.16e},{},{}\n",
            r.n_electrons,
            r.energy,
            r.homo_hartree,
            opt(r.gap),
            opt(r.required_gap)
        ));
    }
    out.write_all(body.as_bytes()).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut out = create(path)?;
    f(&mut out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}
