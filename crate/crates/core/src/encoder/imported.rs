use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::read_jsonl;
use crate::error::{Error, Result};

/// One line of a `vectors.jsonl` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    pub id: String,
    pub vector: Vec<f64>,
}

/// Precomputed snippet representations, looked up by snippet id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportedEncoder {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl ImportedEncoder {
    pub fn from_records(records: impl IntoIterator<Item = VectorRecord>) -> Result<Self> {
        let mut vectors = BTreeMap::new();
        let mut dim = None;
        for (i, r) in records.into_iter().enumerate() {
            let expected = *dim.get_or_insert(r.vector.len());
            if r.vector.len() != expected {
                return Err(Error::RaggedDimension {
                    line: i + 1,
                    expected,
                    got: r.vector.len(),
                });
            }
            if vectors.contains_key(&r.id) {
                return Err(Error::DuplicateId(r.id));
            }
            vectors.insert(r.id, r.vector);
        }
        match dim {
            None => Err(Error::Empty("no vectors to import".into())),
            Some(0) => Err(Error::Validation("imported vectors have dimension 0".into())),
            Some(dim) => Ok(Self { dim, vectors }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&[f64]> {
        self.vectors
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownSnippet(id.to_string()))
    }
}

/// Load a `vectors.jsonl` file.
pub fn import_embeddings(path: &Path) -> Result<ImportedEncoder> {
    ImportedEncoder::from_records(read_jsonl::<VectorRecord>(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, v: &[f64]) -> VectorRecord {
        VectorRecord {
            id: id.into(),
            vector: v.to_vec(),
        }
    }

    #[test]
    fn imports_uniform_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"a\",\"vector\":[1,2,3,4]}\n{\"id\":\"b\",\"vector\":[0,0,0,1]}\n{\"id\":\"c\",\"vector\":[0.5,0,0,0]}\n",
        )
        .unwrap();
        let e = import_embeddings(&path).unwrap();
        assert_eq!(e.dim(), 4);
        assert_eq!(e.len(), 3);
        assert_eq!(e.get("a").unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(e.get("zz"), Err(Error::UnknownSnippet(_))));
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = ImportedEncoder::from_records([rec("a", &[1.0; 4]), rec("b", &[1.0; 5])]);
        assert!(matches!(err, Err(Error::RaggedDimension { line: 2, expected: 4, got: 5 })));
    }

    #[test]
    fn duplicate_and_empty_rejected() {
        assert!(matches!(
            ImportedEncoder::from_records([rec("a", &[1.0]), rec("a", &[2.0])]),
            Err(Error::DuplicateId(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(import_embeddings(&path), Err(Error::Empty(_))));
    }
}
