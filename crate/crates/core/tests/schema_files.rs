//! The committed schema files must equal the ones derived from the types.
//! Run with `UPDATE_SCHEMAS=1` to rewrite them.

use std::fs;
use std::path::PathBuf;

use repeater_core::schemas;

#[test]
fn committed_schemas_are_current() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let update = std::env::var_os("UPDATE_SCHEMAS").is_some();
    let mut stale = Vec::new();
    for (name, schema) in schemas::all() {
        let path = dir.join(name);
        let want = schemas::render(&schema);
        if update {
            fs::create_dir_all(&dir).unwrap();
            fs::write(&path, &want).unwrap();
        } else if fs::read_to_string(&path).ok().as_deref() != Some(want.as_str()) {
            stale.push(name);
        }
    }
    assert!(stale.is_empty(), "stale schema files (rerun with UPDATE_SCHEMAS=1): {stale:?}");
}
