//! CSV serialization of risk tables.
//!
//! Columns follow the [`RiskRow`] field order; floats are written in shortest
//! round-trip form and an absent runtime is an empty field.

use std::io::{Read, Write};
use std::path::Path;

use super::run::{RiskRow, RiskTable};
use crate::error::Result;

pub const HEADER: [&str; 12] = [
    "experiment",
    "n",
    "true_k",
    "signal",
    "noise",
    "estimator",
    "p",
    "replications",
    "mean_loss",
    "std_error",
    "mean_k_hat",
    "mean_runtime",
];

pub fn write_table_to<W: Write>(table: &RiskTable, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(HEADER)?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(table: &RiskTable, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_table_to(table, std::io::BufWriter::new(file))
}

pub fn read_table_from<R: Read>(reader: R) -> Result<RiskTable> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize::<RiskRow>().collect::<Result<Vec<_>, _>>()?;
    Ok(RiskTable { rows })
}

pub fn read_table(path: impl AsRef<Path>) -> Result<RiskTable> {
    read_table_from(std::fs::File::open(path)?)
}
