use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use repeater_core::api::OptimizeResponse;

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct PolicyRow {
    pub policy: String,
    pub skr: f64,
    pub schedule: String,
}

/// The best schedule first, then each local baseline.
pub fn optimize_rows(r: &OptimizeResponse) -> Vec<PolicyRow> {
    let mut rows = vec![PolicyRow {
        policy: "gd".into(),
        skr: r.search.best_skr,
        schedule: r.search.best_schedule.to_string(),
    }];
    rows.extend(r.search.ld_baselines.iter().map(|b| PolicyRow {
        policy: b.policy.to_string(),
        skr: b.skr,
        schedule: b.schedule.to_string(),
    }));
    rows
}

pub fn optimize_text(r: &OptimizeResponse) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "best schedule: {}", r.search.best_schedule);
    let _ = writeln!(s, "best skr: {:e}", r.search.best_skr);
    let _ = writeln!(s, "evaluated: {} distinct schedules", r.search.evaluated);
    if r.search.all_zero {
        let _ = writeln!(s, "note: every evaluated schedule yields zero key");
    }
    for b in &r.search.ld_baselines {
        let _ = writeln!(s, "baseline {:<10} skr {:e}  schedule {}", b.policy.to_string(), b.skr, b.schedule);
    }
    s.push_str(&r.best.to_text());
    s
}
