use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::schema::{DatasetSchema, UserRecord};
use crate::error::{Error, Result};

/// Reads a JSONL dataset, validating each line against the schema.
pub fn load_jsonl(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Vec<UserRecord>> {
    let reader = BufReader::new(File::open(path)?);
    parse_lines(reader, schema)
}

pub fn parse_jsonl(text: &str, schema: &DatasetSchema) -> Result<Vec<UserRecord>> {
    parse_lines(text.as_bytes(), schema)
}

fn parse_lines(reader: impl BufRead, schema: &DatasetSchema) -> Result<Vec<UserRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UserRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        record
            .validate(schema)
            .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes one compact JSON object per line. Output bytes depend only on the records.
pub fn write_jsonl(path: impl AsRef<Path>, records: &[UserRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// SHA-256 over the canonical JSONL serialization of the records.
pub fn fingerprint(records: &[UserRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update(serde_json::to_vec(r).expect("records serialize"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TargetSpec;

    fn schema() -> DatasetSchema {
        DatasetSchema {
            sequence_names: vec!["s".into()],
            numeric_dim: 1,
            targets: vec![TargetSpec { name: "t".into(), classes: vec!["a".into(), "b".into()] }],
        }
    }

    const GOOD: &str = r#"{"sequences":{"s":["x","y"]},"numeric":[1.5],"targets":{"t":"a"}}
{"targets":{"t":"b"},"numeric":[0.0],"sequences":{"s":[]}}
{"sequences":{"s":["y"]},"numeric":[-2],"targets":{"t":"b"}}
"#;

    #[test]
    fn empty_file_is_empty() {
        assert!(parse_jsonl("", &schema()).unwrap().is_empty());
    }

    #[test]
    fn order_preserved() {
        let rs = parse_jsonl(GOOD, &schema()).unwrap();
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[0].numeric, vec![1.5]);
        assert_eq!(rs[2].numeric, vec![-2.0]);
    }

    #[test]
    fn missing_target_names_field_and_line() {
        let text = "{\"sequences\":{\"s\":[]},\"numeric\":[1],\"targets\":{\"t\":\"a\"}}\n\
                    {\"sequences\":{\"s\":[]},\"numeric\":[1],\"targets\":{}}\n";
        let err = parse_jsonl(text, &schema()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("`t`"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_keys_and_garbage_rejected() {
        let extra = r#"{"sequences":{"s":[]},"numeric":[1],"targets":{"t":"a"},"age":3}"#;
        assert!(matches!(parse_jsonl(extra, &schema()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_jsonl("{not json", &schema()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let rs = parse_jsonl(GOOD, &schema()).unwrap();
        write_jsonl(&path, &rs).unwrap();
        assert_eq!(load_jsonl(&path, &schema()).unwrap(), rs);
        assert_eq!(fingerprint(&rs), fingerprint(&rs.clone()));
        assert_ne!(fingerprint(&rs), fingerprint(&rs[..2]));
    }
}
