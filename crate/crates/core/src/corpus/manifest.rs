use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    parse_tree_file, read_dependency_table, render_dependency_table, render_tree_file, Corpus,
    DepSentence, DepTableError, Document, Genre, Sentence, TextClass, TreeParseError,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("document {id:?}: unknown genre {genre:?}")]
    UnknownGenre { id: String, genre: String },
    #[error("document {id:?}: unknown class {class:?}")]
    UnknownClass { id: String, class: String },
    #[error("document {id:?}: file missing: {}", path.display())]
    FileMissing { id: String, path: PathBuf },
    #[error("document {id:?}: neither trees nor dependencies given")]
    NoViews { id: String },
    #[error("document {id:?}, sentence {sentence}: tree yield does not match dependency tokens")]
    YieldMismatch { id: String, sentence: usize },
    #[error("{}: {source}", path.display())]
    Tree {
        path: PathBuf,
        source: TreeParseError,
    },
    #[error("{}: {source}", path.display())]
    DepTable {
        path: PathBuf,
        source: DepTableError,
    },
    #[error("{}: bad manifest: {source}", path.display())]
    Manifest {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One manifest entry. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub genre: String,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deps: Option<PathBuf>,
}

fn read_file(id: &str, path: &Path) -> Result<String, CorpusError> {
    if !path.is_file() {
        return Err(CorpusError::FileMissing {
            id: id.to_string(),
            path: path.to_path_buf(),
        });
    }
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_document(base: &Path, entry: &ManifestEntry) -> Result<Document, CorpusError> {
    let id = entry.id.clone();
    let genre: Genre = entry.genre.parse().map_err(|genre| CorpusError::UnknownGenre {
        id: id.clone(),
        genre,
    })?;
    let class: TextClass = entry.class.parse().map_err(|class| CorpusError::UnknownClass {
        id: id.clone(),
        class,
    })?;

    let trees = match &entry.trees {
        Some(rel) => {
            let path = base.join(rel);
            let text = read_file(&id, &path)?;
            Some(parse_tree_file(&text).map_err(|source| CorpusError::Tree { path, source })?)
        }
        None => None,
    };
    let deps = match &entry.deps {
        Some(rel) => {
            let path = base.join(rel);
            let text = read_file(&id, &path)?;
            Some(
                read_dependency_table(&text)
                    .map_err(|source| CorpusError::DepTable { path, source })?,
            )
        }
        None => None,
    };

    let sentences = match (trees, deps) {
        (None, None) => return Err(CorpusError::NoViews { id }),
        (Some(trees), None) => trees.into_iter().map(Sentence::from_tree).collect(),
        (None, Some(deps)) => deps.into_iter().map(Sentence::from_deps).collect(),
        (Some(trees), Some(deps)) => {
            if trees.len() != deps.len() {
                return Err(CorpusError::YieldMismatch {
                    id,
                    sentence: trees.len().min(deps.len()),
                });
            }
            let mut out = Vec::with_capacity(trees.len());
            for (i, (tree, dep)) in trees.into_iter().zip(deps).enumerate() {
                let sentence = Sentence {
                    tokens: dep.tokens,
                    tree: Some(tree),
                    arcs: Some(dep.arcs),
                };
                if !sentence.yield_consistent() {
                    return Err(CorpusError::YieldMismatch { id, sentence: i });
                }
                out.push(sentence);
            }
            out
        }
    };
    Ok(Document {
        id,
        genre,
        class,
        sentences,
    })
}

/// Loads and validates every document listed in a JSON manifest.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(manifest_path).map_err(|source| CorpusError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|source| CorpusError::Manifest {
            path: manifest_path.to_path_buf(),
            source,
        })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut seen = std::collections::HashSet::new();
    for e in &entries {
        if !seen.insert(e.id.as_str()) {
            return Err(CorpusError::DuplicateId(e.id.clone()));
        }
    }

    let documents = entries
        .par_iter()
        .map(|e| load_document(base, e))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = Corpus::new(documents)?;
    for id in corpus.partial_documents() {
        log::warn!("document {id:?} has only one of trees/dependencies");
    }
    Ok(corpus)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a corpus as `manifest.json` plus `trees/<id>.mrg` and
/// `deps/<id>.dep` files under `dir`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<PathBuf, CorpusError> {
    let trees_dir = dir.join("trees");
    let deps_dir = dir.join("deps");
    fs::create_dir_all(&trees_dir).map_err(io_err(&trees_dir))?;
    fs::create_dir_all(&deps_dir).map_err(io_err(&deps_dir))?;

    let mut entries = Vec::with_capacity(corpus.len());
    for doc in &corpus.documents {
        let mut entry = ManifestEntry {
            id: doc.id.clone(),
            genre: doc.genre.to_string(),
            class: doc.class.to_string(),
            trees: None,
            deps: None,
        };
        if doc.has_trees() {
            let trees: Vec<_> = doc
                .sentences
                .iter()
                .filter_map(|s| s.tree.clone())
                .collect();
            let rel = PathBuf::from("trees").join(format!("{}.mrg", doc.id));
            let path = dir.join(&rel);
            fs::write(&path, render_tree_file(&trees)).map_err(io_err(&path))?;
            entry.trees = Some(rel);
        }
        if doc.has_deps() {
            let deps: Vec<_> = doc
                .sentences
                .iter()
                .map(|s| DepSentence {
                    tokens: s.tokens.clone(),
                    arcs: s.arcs.clone().unwrap_or_default(),
                })
                .collect();
            let rel = PathBuf::from("deps").join(format!("{}.dep", doc.id));
            let path = dir.join(&rel);
            fs::write(&path, render_dependency_table(&deps)).map_err(io_err(&path))?;
            entry.deps = Some(rel);
        }
        entries.push(entry);
    }
    let manifest = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&entries).expect("manifest serializes");
    json.push('\n');
    fs::write(&manifest, json).map_err(io_err(&manifest))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        fs::write(dir.join(name), text).unwrap();
    }

    fn manifest(dir: &Path, json: &str) -> PathBuf {
        let p = dir.join("manifest.json");
        fs::write(&p, json).unwrap();
        p
    }

    #[test]
    fn loads_one_doc_per_genre() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "t.mrg", "(IP (NP (PN 我们)) (VP (VV 照)))\n");
        write(dir.path(), "d.dep", "1\t我们\tPN\t2\tnsubj\n2\t照\tVV\t0\troot\n");
        let entries: Vec<String> = Genre::ALL
            .iter()
            .enumerate()
            .map(|(i, g)| {
                format!(
                    r#"{{"id":"d{i}","genre":"{g}","class":"original","trees":"t.mrg","deps":"d.dep"}}"#
                )
            })
            .collect();
        let m = manifest(dir.path(), &format!("[{}]", entries.join(",")));
        let corpus = load_corpus(&m).unwrap();
        assert_eq!(corpus.len(), 4);
        assert!(corpus.partial_documents().is_empty());
        assert_eq!(corpus.documents[1].genre, Genre::GeneralProse);
    }

    #[test]
    fn duplicate_id() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "t.mrg", "(IP (VP (VV 照)))\n");
        let m = manifest(
            dir.path(),
            r#"[{"id":"a","genre":"news","class":"original","trees":"t.mrg"},
                {"id":"a","genre":"news","class":"translated","trees":"t.mrg"}]"#,
        );
        assert!(matches!(load_corpus(&m), Err(CorpusError::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn unknown_labels_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(
            dir.path(),
            r#"[{"id":"a","genre":"poetry","class":"original","trees":"t.mrg"}]"#,
        );
        assert!(matches!(load_corpus(&m), Err(CorpusError::UnknownGenre { .. })));
        let m = manifest(
            dir.path(),
            r#"[{"id":"a","genre":"news","class":"other","trees":"t.mrg"}]"#,
        );
        assert!(matches!(load_corpus(&m), Err(CorpusError::UnknownClass { .. })));
        let m = manifest(
            dir.path(),
            r#"[{"id":"a","genre":"news","class":"original","trees":"nope.mrg"}]"#,
        );
        assert!(matches!(load_corpus(&m), Err(CorpusError::FileMissing { .. })));
    }

    #[test]
    fn yield_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "t.mrg", "(IP (NP (PN 我们)) (VP (VV 照)))\n");
        write(
            dir.path(),
            "d.dep",
            "1\t我们\tPN\t2\tnsubj\n2\t照\tVV\t0\troot\n3\t。\tPU\t2\tpunct\n",
        );
        let m = manifest(
            dir.path(),
            r#"[{"id":"a","genre":"news","class":"original","trees":"t.mrg","deps":"d.dep"}]"#,
        );
        assert!(matches!(
            load_corpus(&m),
            Err(CorpusError::YieldMismatch { sentence: 0, .. })
        ));
    }

    #[test]
    fn partial_documents_flagged() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "t.mrg", "(IP (VP (VV 照)))\n");
        let m = manifest(
            dir.path(),
            r#"[{"id":"a","genre":"news","class":"original","trees":"t.mrg"}]"#,
        );
        let corpus = load_corpus(&m).unwrap();
        assert_eq!(corpus.partial_documents(), vec!["a"]);
        assert_eq!(corpus.documents[0].sentences[0].tokens[0].pos, "VV");
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "t.mrg", "(IP (NP (PN 我们)) (VP (VV 照)))\n\n(IP (VP (VV 看)))\n");
        write(
            dir.path(),
            "d.dep",
            "1\t我们\tPN\t2\tnsubj\n2\t照\tVV\t0\troot\n\n1\t看\tVV\t0\troot\n",
        );
        let m = manifest(
            dir.path(),
            r#"[{"id":"a","genre":"science","class":"translated","trees":"t.mrg","deps":"d.dep"}]"#,
        );
        let corpus = load_corpus(&m).unwrap();
        let out = tempfile::tempdir().unwrap();
        let m2 = write_corpus(&corpus, out.path()).unwrap();
        assert_eq!(load_corpus(&m2).unwrap(), corpus);
    }
}
