//! Versioned JSON records and CSV tables with `#` metadata lines.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Clone, Debug, Serialize)]
pub struct CommandEcho {
    pub name: String,
    pub argv: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub library_version: &'static str,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord<P: Serialize> {
    pub schema_version: &'static str,
    pub command: CommandEcho,
    pub payload: P,
    pub provenance: Provenance,
}

/// Tolerances that govern the reported values.
pub fn tolerances() -> BTreeMap<&'static str, f64> {
    use spinj_core::{global, linalg, local, states, sweep};
    BTreeMap::from([
        ("bfy_tie", global::BFY_TOL),
        ("closed_form", sweep::CLOSED_FORM_TOL),
        ("d_invariance", local::D_INVARIANCE_TOL),
        ("fisher_condition_max", linalg::MAX_CONDITION),
        ("hermitian", linalg::HERMITIAN_TOL),
        ("ordering_relative", sweep::ORDER_TOL),
        ("rld_min_eigenvalue", local::RLD_RANK_TOL),
        ("state_trace", states::TRACE_TOL),
        ("x_star_constraint", local::X_STAR_TOL),
    ])
}

pub fn write_json<P: Serialize>(out: &mut dyn Write, record: &OutputRecord<P>) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, record)?;
    writeln!(out)
}

/// Metadata as `# key: value` lines, then a header row and one row per item.
pub fn write_csv<P: Serialize, R: Serialize>(
    out: &mut dyn Write,
    record: &OutputRecord<P>,
    rows: &[R],
) -> std::io::Result<()> {
    writeln!(out, "# schema_version: {}", record.schema_version)?;
    writeln!(out, "# command: {}", record.command.argv.join(" "))?;
    writeln!(out, "# library_version: {}", record.provenance.library_version)?;
    if let Some(seed) = record.provenance.seed {
        writeln!(out, "# seed: {seed}")?;
    }
    for (k, v) in &record.provenance.tolerances {
        writeln!(out, "# tolerance.{k}: {v:e}")?;
    }
    for w in &record.provenance.warnings {
        writeln!(out, "# warning: {w}")?;
    }
    let mut wtr = csv::Writer::from_writer(&mut *out);
    for r in rows {
        wtr.serialize(r).map_err(std::io::Error::other)?;
    }
    wtr.flush()
}

/// Reads rows written by [`write_csv`], skipping the metadata lines.
#[cfg(test)]
pub fn read_csv<R: serde::de::DeserializeOwned>(input: impl std::io::Read) -> csv::Result<Vec<R>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input)
        .deserialize()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinj_core::sweep::{run_sweep, FamilySweep, SweepRow, SweepSpec};

    #[test]
    fn sweep_rows_round_trip() {
        let spec = SweepSpec::new(FamilySweep::Delta { a: vec![0.0, -1.0] }, vec![2, 4, 6]);
        let rows = run_sweep(&spec).unwrap();
        let record = OutputRecord {
            schema_version: SCHEMA_VERSION,
            command: CommandEcho {
                name: "scan".into(),
                argv: vec!["spinj".into(), "scan".into()],
            },
            payload: (),
            provenance: Provenance {
                library_version: spinj_core::VERSION,
                seed: None,
                tolerances: tolerances(),
                warnings: vec!["example".into()],
            },
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &record, &rows).unwrap();
        let back: Vec<SweepRow> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }
}
