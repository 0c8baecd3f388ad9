//! CSV and JSON-lines output of simulation results.

use std::io::Write;

use super::{HarnessError, PointResult};
use crate::trainer::ThetaUpdate;

pub const CSV_HEADER: &str = "decoder,L,m,ebno_db,frames,errors,fer,avg_complexity,avg_timesteps,avg_attempts,train_acc,theta,sec_per_frame";

pub fn write_csv<W: Write>(out: W, rows: &[PointResult]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(mut out: W, rows: &[PointResult]) -> Result<(), HarnessError> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Threshold trajectory, one row per update.
pub fn write_theta_log<W: Write>(out: W, log: &[ThetaUpdate]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    if log.is_empty() {
        w.write_record(["update_index", "theta", "train_accuracy"]).map_err(csv_err)?;
    }
    for u in log {
        w.serialize(u).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}
