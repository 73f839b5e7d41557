//! Writes the published JSON schemas to `schemas/v1/` (or the directory
//! given as the first argument).
//!
//! ```text
//! cargo run --example export_schemas
//! ```

use std::path::PathBuf;

use deliberate::service::schema_documents;

fn main() -> std::io::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas/v1"));
    std::fs::create_dir_all(&dir)?;
    for (name, schema) in schema_documents() {
        let path = dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(&schema).expect("schema serialises");
        text.push('\n');
        std::fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}
