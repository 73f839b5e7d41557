use std::path::Path;

use serde_json::Value;

use deliberate::service::schema_documents;

#[test]
fn committed_schemas_match_the_types() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/v1");
    let docs = schema_documents();
    for (name, doc) in &docs {
        let path = dir.join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let committed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(&committed, doc, "{name} is stale; run the export_schemas example");
        assert!(jsonschema::validator_for(doc).is_ok(), "{name} compiles");
    }
    let files = std::fs::read_dir(&dir).unwrap().count();
    assert_eq!(files, docs.len());
}
