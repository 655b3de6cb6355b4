//! Scenario reports and run summaries.
//!
//! JSON floats are written as `{:.16e}` so identical runs are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use qcomp_core::io::fmt_f64;
use qcomp_core::verify::CheckReport;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

/// Pretty JSON with fixed-precision floats.
struct FixedFloat<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Serializes with fixed-precision floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub id: String,
    pub kind: String,
    pub description: String,
    pub control: bool,
    /// Every check passed and no error occurred.
    pub passed: bool,
    /// `passed` for ordinary scenarios, `!passed` for controls.
    pub ok: bool,
    pub error: Option<String>,
    pub checks: Vec<CheckReport>,
    pub metadata: BTreeMap<String, Value>,
    /// Files written next to the report, relative to the scenario directory.
    pub artifacts: Vec<String>,
}

impl ScenarioReport {
    /// Largest `worst_violation - tolerance_used` over the checks.
    pub fn worst_margin(&self) -> Option<f64> {
        self.checks
            .iter()
            .map(|c| c.worst_violation - c.tolerance_used)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Largest `|relative_gap|` recorded by eigenvalue checks.
    pub fn relative_gap(&self) -> Option<f64> {
        self.checks
            .iter()
            .filter_map(|c| c.meta_f64("relative_gap"))
            .map(f64::abs)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub id: String,
    pub kind: String,
    pub control: bool,
    pub passed: bool,
    pub ok: bool,
    pub checks: usize,
    pub worst_margin: Option<f64>,
    pub relative_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub seed: u64,
    pub total: usize,
    pub ok: usize,
    pub all_ok: bool,
    pub scenarios: Vec<SummaryRow>,
}

impl Summary {
    pub fn new(seed: u64, reports: &[ScenarioReport]) -> Self {
        let scenarios: Vec<SummaryRow> = reports
            .iter()
            .map(|r| SummaryRow {
                id: r.id.clone(),
                kind: r.kind.clone(),
                control: r.control,
                passed: r.passed,
                ok: r.ok,
                checks: r.checks.len(),
                worst_margin: r.worst_margin(),
                relative_gap: r.relative_gap(),
                error: r.error.clone(),
            })
            .collect();
        let ok = scenarios.iter().filter(|r| r.ok).count();
        Self {
            schema_version: crate::config::SCHEMA_VERSION,
            seed,
            total: scenarios.len(),
            ok,
            all_ok: ok == scenarios.len(),
            scenarios,
        }
    }

    pub fn write_csv(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["id", "kind", "control", "passed", "ok", "checks", "worst_margin", "relative_gap", "error"])?;
        for r in &self.scenarios {
            w.write_record([
                r.id.clone(),
                r.kind.clone(),
                r.control.to_string(),
                r.passed.to_string(),
                r.ok.to_string(),
                r.checks.to_string(),
                r.worst_margin.map(fmt_f64).unwrap_or_default(),
                r.relative_gap.map(fmt_f64).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
