//! CSV and JSON emission.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::chasers::Run;
use crate::harness::analysis::{AmortizedReport, PotentialTrace};
use crate::{Error, Result};

/// One row per time step: `t, x_1..x_d, movement, hit, phi, delta_phi,
/// residual`. Row `t = 0` holds the start. Columns without data are left
/// empty.
pub fn write_run_csv(
    path: impl AsRef<Path>,
    run: &Run,
    trace: Option<&PotentialTrace>,
    amortized: Option<&AmortizedReport>,
) -> Result<()> {
    let d = run.trajectory.first().map_or(0, |p| p.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.extend(["movement", "hit", "phi", "delta_phi", "residual"].map(String::from));
    w.write_record(&header)?;
    for (t, x) in run.trajectory.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|c| c.to_string()));
        let rec = t.checked_sub(1).and_then(|i| run.records.get(i));
        row.push(rec.map(|r| r.movement.to_string()).unwrap_or_default());
        row.push(rec.map(|r| r.hit.to_string()).unwrap_or_default());
        row.push(trace.and_then(|tr| tr.phi.get(t)).map(|v| v.to_string()).unwrap_or_default());
        let step = t.checked_sub(1);
        row.push(step.and_then(|i| trace.and_then(|tr| tr.delta.get(i))).map(|v| v.to_string()).unwrap_or_default());
        row.push(step.and_then(|i| amortized.and_then(|a| a.residuals.get(i))).map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes any serializable row type as CSV with a header.
pub fn write_rows_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON. Non-finite numbers are written as `null`.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Schema { path: String::new(), message: e.to_string() })?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chasers::{run_chaser, Chaser, ChaserKind};
    use crate::functions::Quadratic;
    use crate::geometry::{FeasibleSet, NormTag, Point};
    use crate::instance::Instance;

    #[test]
    fn run_csv_layout() {
        let f = Quadratic::diagonal(&[2.0, 2.0], Point::zeros(2), 0.0).unwrap();
        let inst = Instance::new(Point::from_column_slice(&[1.0, 0.0]), FeasibleSet::WholeSpace, vec![f.clone().into(), f.into()]).unwrap();
        let mut c = Chaser::for_instance(ChaserKind::M2M(NormTag::L2), &inst, Default::default()).unwrap();
        let run = run_chaser(&mut c, &inst).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_run_csv(&path, &run, None, None).unwrap();
        let text = fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,movement,hit,phi,delta_phi,residual");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1,0,,"));
    }
}
