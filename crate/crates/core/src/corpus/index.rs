use std::collections::HashMap;
use std::sync::RwLock;

use super::Corpus;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Posting {
    doc: u32,
    positions: Vec<u32>,
}

/// Occurrence statistics for one short-form / long-form pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    /// Documents containing both forms.
    pub cooc: u64,
    /// Smallest token distance between the first tokens of the two forms,
    /// over all co-occurring documents; `None` when they never co-occur.
    pub min_dist: Option<u32>,
    pub freq_sf: u64,
    pub freq_lf: u64,
}

/// Positional inverted index over a corpus.
///
/// Short-forms are matched on exact surface in cased languages and on
/// lowercase otherwise; long-forms always match case-insensitively as a
/// contiguous token run.
#[derive(Debug)]
pub struct CorpusIndex {
    case_sensitive: bool,
    doc_ids: Vec<String>,
    exact_ids: HashMap<String, u32>,
    exact_terms: Vec<String>,
    exact_postings: Vec<Vec<Posting>>,
    folded_ids: HashMap<String, u32>,
    folded_postings: Vec<Vec<Posting>>,
    doc_folded: Vec<Vec<u32>>,
    pair_stats: RwLock<HashMap<(String, Vec<String>), PairCounts>>,
}

fn intern(ids: &mut HashMap<String, u32>, postings: &mut Vec<Vec<Posting>>, term: &str) -> u32 {
    if let Some(&id) = ids.get(term) {
        return id;
    }
    let id = postings.len() as u32;
    ids.insert(term.to_string(), id);
    postings.push(Vec::new());
    id
}

fn post(list: &mut Vec<Posting>, doc: u32, pos: u32) {
    match list.last_mut() {
        Some(p) if p.doc == doc => p.positions.push(pos),
        _ => list.push(Posting {
            doc,
            positions: vec![pos],
        }),
    }
}

impl CorpusIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let mut exact_ids = HashMap::new();
        let mut exact_terms = Vec::new();
        let mut exact_postings = Vec::new();
        let mut folded_ids = HashMap::new();
        let mut folded_postings = Vec::new();
        let mut doc_folded = Vec::with_capacity(corpus.len());

        for (d, doc) in corpus.documents.iter().enumerate() {
            let d = d as u32;
            let mut folded_doc = Vec::with_capacity(doc.tokens.len());
            for (pos, tok) in doc.tokens.iter().enumerate() {
                let pos = pos as u32;
                let e = intern(&mut exact_ids, &mut exact_postings, &tok.surface);
                if e as usize == exact_terms.len() {
                    exact_terms.push(tok.surface.clone());
                }
                post(&mut exact_postings[e as usize], d, pos);
                let f = intern(&mut folded_ids, &mut folded_postings, &tok.surface.to_lowercase());
                post(&mut folded_postings[f as usize], d, pos);
                folded_doc.push(f);
            }
            doc_folded.push(folded_doc);
        }

        Self {
            case_sensitive: corpus.profile.case_sensitive(),
            doc_ids: corpus.documents.iter().map(|d| d.doc_id.clone()).collect(),
            exact_ids,
            exact_terms,
            exact_postings,
            folded_ids,
            folded_postings,
            doc_folded,
            pair_stats: RwLock::new(HashMap::new()),
        }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    fn sf_postings(&self, sf: &str) -> &[Posting] {
        let hit = if self.case_sensitive {
            self.exact_ids.get(sf).map(|&i| &self.exact_postings[i as usize])
        } else {
            self.folded_ids
                .get(&sf.to_lowercase())
                .map(|&i| &self.folded_postings[i as usize])
        };
        hit.map(Vec::as_slice).unwrap_or(&[])
    }

    /// Corpus-wide occurrence count of a single term, matched the way
    /// short-forms are matched.
    pub fn term_freq(&self, term: &str) -> u64 {
        self.sf_postings(term)
            .iter()
            .map(|p| p.positions.len() as u64)
            .sum()
    }

    /// Sorted ids of documents containing `term`.
    pub fn doc_postings(&self, term: &str) -> Vec<u32> {
        self.sf_postings(term).iter().map(|p| p.doc).collect()
    }

    /// Token positions of `term` per document.
    pub fn positions(&self, term: &str) -> impl Iterator<Item = (u32, &[u32])> {
        self.sf_postings(term)
            .iter()
            .map(|p| (p.doc, p.positions.as_slice()))
    }

    /// All distinct surfaces in first-seen order.
    pub fn terms(&self) -> &[String] {
        &self.exact_terms
    }

    /// Start positions of the long-form token run, per document.
    fn lf_occurrences(&self, lf: &[String]) -> Vec<(u32, Vec<u32>)> {
        let ids: Option<Vec<u32>> = lf
            .iter()
            .map(|t| self.folded_ids.get(&t.to_lowercase()).copied())
            .collect();
        let Some(ids) = ids.filter(|ids| !ids.is_empty()) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for p in &self.folded_postings[ids[0] as usize] {
            let toks = &self.doc_folded[p.doc as usize];
            let starts: Vec<u32> = p
                .positions
                .iter()
                .copied()
                .filter(|&s| {
                    let s = s as usize;
                    toks.get(s..s + ids.len()).is_some_and(|w| w == ids.as_slice())
                })
                .collect();
            if !starts.is_empty() {
                out.push((p.doc, starts));
            }
        }
        out
    }

    /// Number of documents in which the long-form token run occurs.
    pub fn lf_doc_freq(&self, lf: &[String]) -> usize {
        self.lf_occurrences(lf).len()
    }

    pub fn pair_counts(&self, sf: &str, lf: &[String]) -> PairCounts {
        let key = (sf.to_string(), lf.to_vec());
        if let Some(hit) = self.pair_stats.read().expect("cache lock").get(&key) {
            return *hit;
        }
        let counts = self.compute_pair_counts(sf, lf);
        self.pair_stats
            .write()
            .expect("cache lock")
            .insert(key, counts);
        counts
    }

    fn compute_pair_counts(&self, sf: &str, lf: &[String]) -> PairCounts {
        let sf_post = self.sf_postings(sf);
        let lf_occ = self.lf_occurrences(lf);
        let mut counts = PairCounts {
            freq_sf: sf_post.iter().map(|p| p.positions.len() as u64).sum(),
            freq_lf: lf_occ.iter().map(|(_, s)| s.len() as u64).sum(),
            ..PairCounts::default()
        };
        let (mut i, mut j) = (0, 0);
        while i < sf_post.len() && j < lf_occ.len() {
            let (a, b) = (sf_post[i].doc, lf_occ[j].0);
            if a < b {
                i += 1;
            } else if b < a {
                j += 1;
            } else {
                counts.cooc += 1;
                let d = min_gap(&sf_post[i].positions, &lf_occ[j].1);
                counts.min_dist = Some(counts.min_dist.map_or(d, |m| m.min(d)));
                i += 1;
                j += 1;
            }
        }
        counts
    }
}

/// Smallest |x - y| between two sorted, non-empty position lists.
fn min_gap(xs: &[u32], ys: &[u32]) -> u32 {
    let (mut i, mut j) = (0, 0);
    let mut best = u32::MAX;
    while i < xs.len() && j < ys.len() {
        best = best.min(xs[i].abs_diff(ys[j]));
        if xs[i] < ys[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}
