//! CSV interchange: raw surveillance records in, result tables out.
//!
//! The record format is a UTF-8 CSV with LF line endings and the exact
//! header `flight_id,timestamp_s,lat_deg,lon_deg,baro_alt_m`. The result
//! writers emit the small fixed-schema tables the pipeline produces:
//! per-run metrics, the MI-vs-k sweep, 2-D projections, and loss curves.
//! Floats are written in Rust's shortest round-trip form, so identical
//! runs produce identical bytes.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::traj::RawRecord;
use crate::Scalar;

const RECORD_HEADER: [&str; 5] = ["flight_id", "timestamp_s", "lat_deg", "lon_deg", "baro_alt_m"];

/// Reads raw surveillance records, validating the header.
pub fn read_records(r: impl Read) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(RECORD_HEADER) {
        return Err(Error::format(format!(
            "unexpected CSV header `{}`, expected `{}`",
            headers.iter().collect::<Vec<_>>().join(","),
            RECORD_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<RawRecord>() {
        out.push(rec?);
    }
    Ok(out)
}

/// Writes raw records back out in the interchange schema.
pub fn write_records(w: impl Write, records: &[RawRecord]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(RECORD_HEADER)?;
    for rec in records {
        wtr.serialize(rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row of the evaluation metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub dataset: String,
    pub epsilon: Scalar,
    pub tau: Scalar,
    pub seed: u64,
    pub acc: Scalar,
    pub nmi: Scalar,
    pub ari: Scalar,
}

pub fn write_metrics_csv(w: &mut impl Write, rows: &[MetricsRow]) -> Result<()> {
    writeln!(w, "dataset,epsilon,tau,seed,acc,nmi,ari")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.dataset, r.epsilon, r.tau, r.seed, r.acc, r.nmi, r.ari
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(w: &mut impl Write, rows: &[(usize, Scalar)]) -> Result<()> {
    writeln!(w, "k,mi")?;
    for (k, mi) in rows {
        writeln!(w, "{k},{mi}")?;
    }
    Ok(())
}

/// `(id, label, pc1, pc2)` rows of the 2-D projection export.
pub fn write_projection_csv(
    w: &mut impl Write,
    rows: &[(String, i32, Scalar, Scalar)],
) -> Result<()> {
    writeln!(w, "id,label,pc1,pc2")?;
    for (id, label, pc1, pc2) in rows {
        writeln!(w, "{id},{label},{pc1},{pc2}")?;
    }
    Ok(())
}

pub fn write_loss_curve_csv(w: &mut impl Write, curve: &[Scalar]) -> Result<()> {
    writeln!(w, "epoch,mean_loss")?;
    for (epoch, loss) in curve.iter().enumerate() {
        writeln!(w, "{},{}", epoch + 1, loss)?;
    }
    Ok(())
}
