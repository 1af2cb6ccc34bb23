//! Corpus directory loading and writing.
//!
//! A corpus directory holds one JSON file per article plus a `manifest.json`:
//!
//! ```text
//! corpus/
//!   manifest.json        {"documents": ["doc_a", ...], "dev_docs": ["doc_a", ...]}
//!   doc_a.json           one document, schema below
//!   ...
//! ```
//!
//! Document schema (all fields required unless noted):
//!
//! ```json
//! {
//!   "doc_id": "doc_a",
//!   "sentences": [["Transfection", "of", "R-Ras", "..."], ...],
//!   "event_mentions": [
//!     {"id": "e0", "sentence_index": 2, "start_token": 0, "end_token": 5,
//!      "label": "inhibition"}
//!   ],
//!   "context_mentions": [
//!     {"id": "c0", "sentence_index": 0, "start_token": 7, "end_token": 9,
//!      "grounding": "cellosaurus:CVCL_0481", "category": "cell_line"}
//!   ],
//!   "annotations": [
//!     {"event_id": "e0", "grounding": "cellosaurus:CVCL_0481"}
//!   ]
//! }
//! ```
//!
//! Token spans are half-open `[start_token, end_token)`. The optional
//! `category` field names one of `species | organ | tissue | cell_type |
//! cell_line`; when absent, the category is inferred from the grounding-id
//! namespace (the part before `:`): `taxonomy`/`species` map to species,
//! `uberon`/`organ` to organ, `tissuelist`/`tissue` to tissue,
//! `cl`/`celltype`/`cell_type` to cell type, and
//! `cellosaurus`/`cvcl`/`cellline`/`cell_line` to cell line. A grounding id
//! with no recognizable namespace and no explicit category is a load error.
//! Validation is eager: a corpus with any malformed document fails to load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ContextAnnotation, ContextCategory, ContextMention, ContextTypeId, Corpus, CorpusError,
    Document, EventMention, Sentence,
};

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    documents: Vec<String>,
    #[serde(default)]
    dev_docs: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentFile {
    doc_id: String,
    sentences: Vec<Vec<String>>,
    event_mentions: Vec<EventRecord>,
    context_mentions: Vec<ContextRecord>,
    annotations: Vec<AnnotationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRecord {
    id: String,
    sentence_index: usize,
    start_token: usize,
    end_token: usize,
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ContextRecord {
    id: String,
    sentence_index: usize,
    start_token: usize,
    end_token: usize,
    grounding: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<ContextCategory>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRecord {
    event_id: String,
    grounding: String,
}

fn category_from_namespace(grounding: &str) -> Option<ContextCategory> {
    let namespace = grounding.split(':').next().unwrap_or("");
    match namespace.to_ascii_lowercase().as_str() {
        "taxonomy" | "species" => Some(ContextCategory::Species),
        "uberon" | "organ" => Some(ContextCategory::Organ),
        "tissuelist" | "tissue" => Some(ContextCategory::Tissue),
        "cl" | "celltype" | "cell_type" => Some(ContextCategory::CellType),
        "cellosaurus" | "cvcl" | "cellline" | "cell_line" => Some(ContextCategory::CellLine),
        _ => None,
    }
}

fn resolve_category(
    path: &str,
    record: &str,
    grounding: &str,
    explicit: Option<ContextCategory>,
) -> Result<ContextCategory, CorpusError> {
    explicit
        .or_else(|| category_from_namespace(grounding))
        .ok_or_else(|| CorpusError::Record {
            path: path.to_string(),
            record: record.to_string(),
            detail: format!(
                "cannot infer a context category from grounding id {grounding:?}; \
                 add an explicit \"category\" field"
            ),
        })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CorpusError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Loads and fully validates one document file.
pub fn load_document(path: &Path) -> Result<Document, CorpusError> {
    let file: DocumentFile = read_json(path)?;
    let path_str = path.display().to_string();

    // The annotation records carry only a grounding id; its category comes
    // from the mentions of the same grounding in this document, falling back
    // to namespace inference for annotations of types mentioned elsewhere
    // (which validation later rejects, with the id on the error).
    let sentences = file
        .sentences
        .into_iter()
        .enumerate()
        .map(|(index, tokens)| Sentence { index, tokens })
        .collect();

    let event_mentions = file
        .event_mentions
        .into_iter()
        .map(|r| EventMention {
            event_id: r.id,
            sentence_index: r.sentence_index,
            start_token: r.start_token,
            end_token: r.end_token,
            event_label: r.label,
        })
        .collect();

    let mut context_mentions = Vec::new();
    for r in file.context_mentions {
        let category = resolve_category(&path_str, &r.id, &r.grounding, r.category)?;
        context_mentions.push(ContextMention {
            mention_id: r.id,
            sentence_index: r.sentence_index,
            start_token: r.start_token,
            end_token: r.end_token,
            context_type: ContextTypeId::new(r.grounding, category),
        });
    }

    let mut annotations = Vec::new();
    for r in file.annotations {
        let category = context_mentions
            .iter()
            .find(|m| m.context_type.grounding_id == r.grounding)
            .map(|m| m.context_type.category)
            .or_else(|| category_from_namespace(&r.grounding));
        let category = match category {
            Some(c) => c,
            None => {
                return Err(CorpusError::Record {
                    path: path_str,
                    record: format!("annotation {}→{}", r.event_id, r.grounding),
                    detail: "annotation grounding matches no mention and no known namespace".into(),
                })
            }
        };
        annotations.push(ContextAnnotation {
            event_id: r.event_id,
            context_type: ContextTypeId::new(r.grounding, category),
        });
    }

    Ok(Document {
        doc_id: file.doc_id,
        sentences,
        event_mentions,
        context_mentions,
        annotations,
    })
}

/// Loads a corpus directory, validating every document invariant eagerly.
/// Documents come back sorted by doc id.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(CorpusError::MissingManifest {
            path: dir.display().to_string(),
        });
    }
    let manifest: ManifestFile = read_json(&manifest_path)?;

    let mut documents = Vec::with_capacity(manifest.documents.len());
    for doc_id in &manifest.documents {
        let path = dir.join(format!("{doc_id}.json"));
        let doc = load_document(&path)?;
        if doc.doc_id != *doc_id {
            return Err(CorpusError::Record {
                path: path.display().to_string(),
                record: doc.doc_id.clone(),
                detail: format!("doc_id field does not match manifest entry {doc_id:?}"),
            });
        }
        documents.push(doc);
    }
    Corpus::new(documents, manifest.dev_docs)
}

/// Writes one document in the corpus schema.
pub fn write_document(doc: &Document, path: &Path) -> Result<(), CorpusError> {
    let file = DocumentFile {
        doc_id: doc.doc_id.clone(),
        sentences: doc.sentences.iter().map(|s| s.tokens.clone()).collect(),
        event_mentions: doc
            .event_mentions
            .iter()
            .map(|e| EventRecord {
                id: e.event_id.clone(),
                sentence_index: e.sentence_index,
                start_token: e.start_token,
                end_token: e.end_token,
                label: e.event_label.clone(),
            })
            .collect(),
        context_mentions: doc
            .context_mentions
            .iter()
            .map(|m| ContextRecord {
                id: m.mention_id.clone(),
                sentence_index: m.sentence_index,
                start_token: m.start_token,
                end_token: m.end_token,
                grounding: m.context_type.grounding_id.clone(),
                category: Some(m.context_type.category),
            })
            .collect(),
        annotations: doc
            .annotations
            .iter()
            .map(|a| AnnotationRecord {
                event_id: a.event_id.clone(),
                grounding: a.context_type.grounding_id.clone(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).expect("document serializes");
    fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a full corpus directory (manifest plus one file per document).
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for doc in &corpus.documents {
        write_document(doc, &dir.join(format!("{}.json", doc.doc_id)))?;
    }
    let manifest = ManifestFile {
        documents: corpus.documents.iter().map(|d| d.doc_id.clone()).collect(),
        dev_docs: corpus.dev_doc_ids.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), text).map_err(|source| CorpusError::Io {
        path: dir.join("manifest.json").display().to_string(),
        source,
    })
}
