//! CSV tables and whitespace-separated plot columns.
//!
//! Every float is written as `{:.16e}` (17 significant digits) so identical
//! runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::comparison::ComparisonProfile;
use crate::eigen::EigenResult;
use crate::error::{Error, Result};
use crate::pde::Trajectory;
use crate::verify::ModulusCurve;

/// Fixed-precision float formatting shared by all writers.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<'a>(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>> + 'a) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t,s,phi,phi_s`, one row per node and time slice.
pub fn write_profile_csv(path: &Path, profile: &ComparisonProfile) -> Result<()> {
    let s = profile.s();
    let rows = profile.times.iter().enumerate().flat_map(move |(k, &t)| {
        s.iter().enumerate().map(move |(i, &x)| vec![t, x, profile.values[k][i], profile.derivative[k][i]])
    });
    write_rows(path, &["t", "s", "phi", "phi_s"], rows)
}

/// Columns `t,s,u`, one row per node and snapshot.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let s = &traj.grid.nodes;
    let rows =
        traj.snapshots.iter().flat_map(move |snap| s.iter().zip(&snap.values).map(move |(&x, &u)| vec![snap.t, x, u]));
    write_rows(path, &["t", "s", "u"], rows)
}

/// Columns `s,phi,phi_s` of an eigenfunction.
pub fn write_eigen_csv(path: &Path, eig: &EigenResult) -> Result<()> {
    let rows = (0..eig.grid.len()).map(|i| vec![eig.grid[i], eig.eigenfunction[i], eig.derivative[i]]);
    write_rows(path, &["s", "phi", "phi_s"], rows)
}

/// Whitespace-separated columns under a `# name1 name2 ...` header.
pub fn write_columns(path: &Path, names: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    if names.len() != columns.len() || columns.is_empty() {
        return Err(Error::InvalidParameter("one name per column is required".into()));
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidParameter("columns differ in length".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {}", names.join(" "))?;
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Two columns `s omega`.
pub fn write_modulus_dat(path: &Path, curve: &ModulusCurve) -> Result<()> {
    write_columns(path, &["s", "omega"], &[curve.s.clone(), curve.omega.clone()])
}

/// Two columns `t log_sup_norm`.
pub fn write_sup_norm_dat(path: &Path, traj: &Trajectory) -> Result<()> {
    let logs = traj.sup_norms().iter().map(|v| v.ln()).collect();
    write_columns(path, &["t", "log_sup_norm"], &[traj.times(), logs])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("qcomp-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn columns_have_header_and_fixed_format() {
        let p = tmp("cols.dat");
        write_columns(&p, &["R", "lambda"], &[vec![1.0, 2.0], vec![0.1, 1.0 / 3.0]]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# R lambda");
        assert_eq!(lines[2], "2.0000000000000000e0 3.3333333333333331e-1");
        let back: f64 = lines[2].split(' ').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn mismatched_columns_are_rejected() {
        let p = tmp("bad.dat");
        assert!(write_columns(&p, &["a"], &[vec![1.0], vec![2.0]]).is_err());
        assert!(write_columns(&p, &["a", "b"], &[vec![1.0], vec![2.0, 3.0]]).is_err());
    }
}
