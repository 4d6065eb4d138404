//! JSON schemas of every published document, generated from the types.

use schemars::{schema_for, Schema};

use crate::api::*;
use crate::export::{BoundRow, CurveRow, MinNRow, PlateauRow, ScheduleRow};
use crate::report::{LevelRow, RunReport};
use crate::store::Manifest;
use crate::sweep::{SweepRecord, SweepSpec};

/// `(file name, schema)` for each document type.
pub fn all() -> Vec<(&'static str, Schema)> {
    vec![
        ("run_report.schema.json", schema_for!(RunReport)),
        ("run_levels.schema.json", schema_for!(Vec<LevelRow>)),
        ("store_record.schema.json", schema_for!(SweepRecord)),
        ("manifest.schema.json", schema_for!(Manifest)),
        ("sweep_spec.schema.json", schema_for!(SweepSpec)),
        ("export_curves.schema.json", schema_for!(Vec<CurveRow>)),
        ("export_plateau.schema.json", schema_for!(Vec<PlateauRow>)),
        ("export_min_n.schema.json", schema_for!(Vec<MinNRow>)),
        ("export_bounds.schema.json", schema_for!(Vec<BoundRow>)),
        ("export_schedules.schema.json", schema_for!(Vec<ScheduleRow>)),
        ("evaluate_request.schema.json", schema_for!(EvaluateRequest)),
        ("evaluate_response.schema.json", schema_for!(EvaluateResponse)),
        ("optimize_request.schema.json", schema_for!(OptimizeRequest)),
        ("optimize_response.schema.json", schema_for!(OptimizeResponse)),
        ("params_response.schema.json", schema_for!(ParamsResponse)),
        ("bounds_response.schema.json", schema_for!(BoundsResponse)),
        ("sweep_list.schema.json", schema_for!(SweepList)),
        ("curves_response.schema.json", schema_for!(CurvesResponse)),
        ("error.schema.json", schema_for!(ErrorBody)),
    ]
}

/// Pretty-printed file contents for a schema.
pub fn render(schema: &Schema) -> String {
    let mut s = serde_json::to_string_pretty(schema).expect("schemas serialize");
    s.push('\n');
    s
}
