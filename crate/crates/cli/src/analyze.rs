use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use repeater_core::export::{
    bound_row, curve_rows, min_n_rows, plateau_rows, schedule_rows, BoundRow,
};
use repeater_core::store::ResultsStore;

use crate::output::{write_csv, write_json};
use crate::{AnalyzeArgs, AnalyzeTable, TableFormat};

fn emit<T: Serialize>(args: &AnalyzeArgs, rows: &[T]) -> Result<()> {
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match args.format {
        TableFormat::Csv => write_csv(sink, rows),
        TableFormat::Json => write_json(sink, &rows),
    }
}

fn grid_bounds(store: &ResultsStore) -> Result<Vec<BoundRow>> {
    let grid = &store.manifest().spec.grid;
    let mut rows = Vec::new();
    for &n in &grid.segments {
        for km in grid.distances.values_km() {
            let eta = (-km / grid.attenuation_length_km).exp();
            rows.push(bound_row(Some(km), eta, n - 1)?);
        }
    }
    Ok(rows)
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let store = ResultsStore::open(&args.store)?;
    if let AnalyzeTable::Bounds { eta, repeaters } = &args.table {
        let rows = if eta.is_empty() {
            grid_bounds(&store)?
        } else {
            let mut rows = Vec::new();
            for &e in eta {
                for &r in repeaters {
                    rows.push(bound_row(None, e, r)?);
                }
            }
            rows
        };
        return emit(args, &rows);
    }

    let records = store.records()?;
    if records.is_empty() {
        bail!("store {} contains no records", args.store.display());
    }
    match &args.table {
        AnalyzeTable::Plateau => emit(args, &plateau_rows(&records)?),
        AnalyzeTable::MinN => emit(args, &min_n_rows(&plateau_rows(&records)?)),
        AnalyzeTable::ExportCurves => emit(args, &curve_rows(&records)),
        AnalyzeTable::ExportSchedules => emit(args, &schedule_rows(&records)),
        AnalyzeTable::Bounds { .. } => unreachable!("handled above"),
    }
}
