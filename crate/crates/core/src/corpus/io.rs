use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{Corpus, Document, LanguageProfile};
use crate::{Error, Result};

#[derive(Deserialize)]
struct JsonDoc {
    id: String,
    text: String,
}

/// Reads a JSONL corpus: one `{"id": ..., "text": ...}` object per line.
/// Blank lines are skipped.
pub fn read_jsonl(path: &Path, profile: &LanguageProfile) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, &path.display().to_string(), profile)
}

/// [`read_jsonl`] over in-memory text; `source` names it in errors.
pub fn parse_jsonl(text: &str, source: &str, profile: &LanguageProfile) -> Result<Corpus> {
    let mut documents = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: JsonDoc =
            serde_json::from_str(line).map_err(|e| Error::parse(source, n + 1, e.to_string()))?;
        documents.push(Document::new(doc.id, doc.text, profile));
    }
    Ok(Corpus {
        profile: profile.clone(),
        documents,
    })
}

/// Reads every `.txt` file of a directory, sorted by file name. The file
/// stem is the document id.
pub fn read_text_dir(dir: &Path, profile: &LanguageProfile) -> Result<Corpus> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut documents = Vec::with_capacity(paths.len());
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let id = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        documents.push(Document::new(id, text, profile));
    }
    Ok(Corpus {
        profile: profile.clone(),
        documents,
    })
}

/// Directory of `.txt` files or a JSONL file, chosen by what `path` is.
pub fn load_corpus(path: &Path, profile: &LanguageProfile) -> Result<Corpus> {
    if path.is_dir() {
        read_text_dir(path, profile)
    } else {
        read_jsonl(path, profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_and_dir_agree() {
        let tmp = tempfile::tempdir().unwrap();
        let jsonl = tmp.path().join("c.jsonl");
        fs::write(
            &jsonl,
            "{\"id\":\"a\",\"text\":\"Alpha Beta (AB).\"}\n\n{\"id\":\"b\",\"text\":\"AB again\"}\n",
        )
        .unwrap();
        let dir = tmp.path().join("docs");
        fs::create_dir(&dir).unwrap();
        fs::write(dir.join("b.txt"), "AB again").unwrap();
        fs::write(dir.join("a.txt"), "Alpha Beta (AB).").unwrap();
        fs::write(dir.join("ignored.md"), "nope").unwrap();

        let en = LanguageProfile::english();
        let c1 = load_corpus(&jsonl, &en).unwrap();
        let c2 = load_corpus(&dir, &en).unwrap();
        assert_eq!(c1.len(), 2);
        for (x, y) in c1.documents.iter().zip(&c2.documents) {
            assert_eq!(x.doc_id, y.doc_id);
            assert_eq!(x.tokens, y.tokens);
        }
    }

    #[test]
    fn malformed_line_reports_position() {
        let tmp = tempfile::tempdir().unwrap();
        let jsonl = tmp.path().join("c.jsonl");
        fs::write(&jsonl, "{\"id\":\"a\",\"text\":\"x\"}\n{oops}\n").unwrap();
        let err = read_jsonl(&jsonl, &LanguageProfile::english()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
