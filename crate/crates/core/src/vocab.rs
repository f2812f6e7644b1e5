//! Word vocabularies with corpus frequency counts.
//!
//! Tokenization is deliberately minimal: lowercase, drop the characters
//! `.,;:!?"()[]`, split on whitespace. Out-of-vocabulary words are dropped
//! when encoding rather than mapped to an unknown id.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '(', ')', '[', ']'];
const HEADER_PREFIX: &str = "#vocab v1 ";

/// Lowercases, strips punctuation and splits on whitespace.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|raw| {
        let tok: String = raw
            .chars()
            .filter(|c| !PUNCTUATION.contains(c))
            .flat_map(char::to_lowercase)
            .collect();
        (!tok.is_empty()).then_some(tok)
    })
}

/// A non-empty sequence of in-vocabulary token ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<u32>);

impl TokenSeq {
    pub fn new(ids: Vec<u32>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyEncoding);
        }
        Ok(TokenSeq(ids))
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_ids(self) -> Vec<u32> {
        self.0
    }
}

/// Corpus word counts indexed by token id.
///
/// Used only as a divisor inside the training energy; a zero count is read
/// as one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable(Vec<u64>);

impl FrequencyTable {
    pub fn new(counts: Vec<u64>) -> Self {
        FrequencyTable(counts)
    }

    pub fn uniform(len: usize) -> Self {
        FrequencyTable(vec![1; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    /// Divisor for `id`, guarded against zero.
    #[inline]
    pub fn divisor(&self, id: u32) -> f64 {
        self.0.get(id as usize).copied().unwrap_or(1).max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    id_of: HashMap<String, u32>,
    frequency: FrequencyTable,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs; ids follow the order given.
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        let mut id_of = HashMap::new();
        for (i, (tok, count)) in entries.into_iter().enumerate() {
            let tok = tok.into();
            if tok.is_empty() || tok.contains(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "token {tok:?} is empty or contains whitespace"
                )));
            }
            if id_of.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token {tok:?}")));
            }
            tokens.push(tok);
            counts.push(count);
        }
        Ok(Vocabulary {
            tokens,
            id_of,
            frequency: FrequencyTable(counts),
        })
    }

    /// Counts every token of `text` and keeps the `max_size` most frequent,
    /// ties going to the token seen first.
    pub fn from_text(text: &str, max_size: usize) -> Result<Self> {
        if max_size == 0 {
            return Err(Error::InvalidArgument("max_size must be positive".into()));
        }
        // (count, first occurrence)
        let mut stats: HashMap<String, (u64, usize)> = HashMap::new();
        let mut seen = 0usize;
        for line in text.lines() {
            for tok in tokenize(line) {
                let entry = stats.entry(tok).or_insert((0, seen));
                entry.0 += 1;
                seen += 1;
            }
        }
        if stats.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut ranked: Vec<(String, u64, usize)> = stats.into_iter().map(|(t, (c, f))| (t, c, f)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.truncate(max_size);
        Self::from_entries(ranked.into_iter().map(|(t, c, _)| (t, c)))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.id_of.get(token).copied()
    }

    pub fn frequencies(&self) -> &FrequencyTable {
        &self.frequency
    }

    /// Normalizes `text`, drops unknown words and truncates to `max_len` ids.
    pub fn encode(&self, text: &str, max_len: usize) -> Result<TokenSeq> {
        if max_len == 0 {
            return Err(Error::InvalidArgument("max_len must be positive".into()));
        }
        let ids: Vec<u32> = tokenize(text).filter_map(|t| self.id_of(&t)).take(max_len).collect();
        TokenSeq::new(ids)
    }

    /// Serializes to the TSV vocabulary format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::with_capacity(16 * self.len() + 32);
        let _ = writeln!(out, "{HEADER_PREFIX}{}", self.len());
        for (id, tok) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{tok}\t{id}\t{}", self.frequency.0[id]);
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let fmt = |line: usize, msg: String| Error::VocabFormat { line, msg };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| fmt(1, "missing header".into()))?;
        let declared: usize = header
            .strip_prefix(HEADER_PREFIX)
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| fmt(1, format!("bad header {header:?}")))?;

        let mut entries = Vec::with_capacity(declared);
        let mut seen = HashMap::with_capacity(declared);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(tok), Some(id), Some(freq), None) = (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(fmt(lineno, "expected 3 tab-separated fields".into()));
            };
            let id: usize = id.parse().map_err(|_| fmt(lineno, format!("bad id {id:?}")))?;
            let freq: u64 = freq
                .parse()
                .map_err(|_| fmt(lineno, format!("bad frequency {freq:?}")))?;
            if id != entries.len() {
                return Err(fmt(
                    lineno,
                    format!(
                        "ids must be dense and ascending: expected {}, found {id}",
                        entries.len()
                    ),
                ));
            }
            if seen.insert(tok.to_owned(), id).is_some() {
                return Err(fmt(lineno, format!("duplicate token {tok:?}")));
            }
            entries.push((tok.to_owned(), freq));
        }
        if entries.len() != declared {
            return Err(fmt(
                1,
                format!("header declares {declared} tokens, found {}", entries.len()),
            ));
        }
        Self::from_entries(entries).map_err(|e| fmt(0, e.to_string()))
    }

    /// SHA-256 of the serialized form; binds checkpoints to a vocabulary.
    pub fn checksum(&self) -> [u8; 32] {
        Sha256::digest(self.to_tsv().as_bytes()).into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }
}

/// Reads a UTF-8 corpus (one sentence per line) and builds its vocabulary.
pub fn build_vocab(corpus_path: impl AsRef<Path>, max_size: usize) -> Result<Vocabulary> {
    let path = corpus_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Vocabulary::from_text(&text, max_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_orders_by_frequency() {
        let v = Vocabulary::from_text("a b a\nc a", 10).unwrap();
        assert_eq!(v.tokens(), ["a", "b", "c"]);
        assert_eq!(v.frequencies().counts(), &[3, 1, 1]);
        assert_eq!(v.id_of("a"), Some(0));
    }

    #[test]
    fn singleton_and_cap() {
        let v = Vocabulary::from_text("x", 1).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.frequencies().counts(), &[1]);

        let v = Vocabulary::from_text("a b c", 2).unwrap();
        assert_eq!(v.tokens(), ["a", "b"]);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(Vocabulary::from_text(" \n.,!", 5), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn normalization() {
        let toks: Vec<_> = tokenize("Fly high, fly free!").collect();
        assert_eq!(toks, ["fly", "high", "fly", "free"]);
        let toks: Vec<_> = tokenize("(A) [b]; \"C\"?").collect();
        assert_eq!(toks, ["a", "b", "c"]);
    }

    #[test]
    fn encode_lookup_truncate_and_oov() {
        let v = Vocabulary::from_entries([("a", 2), ("b", 1)]).unwrap();
        assert_eq!(v.encode("a b a", 64).unwrap().ids(), &[0, 1, 0]);
        assert_eq!(v.encode("a b a b", 3).unwrap().ids(), &[0, 1, 0]);
        assert_eq!(v.encode("a z b", 64).unwrap().ids(), &[0, 1]);
        let only_a = Vocabulary::from_entries([("a", 1)]).unwrap();
        assert!(matches!(only_a.encode("z z z", 64), Err(Error::EmptyEncoding)));
    }

    #[test]
    fn tsv_round_trip() {
        let v = Vocabulary::from_text("the cat sat on the mat\nthe end", 100).unwrap();
        let text = v.to_tsv();
        assert!(text.starts_with("#vocab v1 6\nthe\t0\t3\n"));
        assert_eq!(Vocabulary::from_tsv(&text).unwrap(), v);
    }

    #[test]
    fn tsv_rejects_duplicates_and_gaps() {
        let dup = "#vocab v1 2\na\t0\t1\na\t1\t1\n";
        assert!(matches!(
            Vocabulary::from_tsv(dup),
            Err(Error::VocabFormat { line: 3, .. })
        ));
        let gap = "#vocab v1 2\na\t0\t1\nb\t2\t1\n";
        assert!(matches!(
            Vocabulary::from_tsv(gap),
            Err(Error::VocabFormat { line: 3, .. })
        ));
        let count = "#vocab v1 3\na\t0\t1\n";
        assert!(Vocabulary::from_tsv(count).is_err());
        assert!(Vocabulary::from_tsv("vocab 1\na\t0\t1\n").is_err());
        assert!(Vocabulary::from_tsv("#vocab v1 1\na\t0\n").is_err());
    }

    #[test]
    fn zero_frequency_is_guarded() {
        let p = FrequencyTable::new(vec![0, 4]);
        assert_eq!(p.divisor(0), 1.0);
        assert_eq!(p.divisor(1), 4.0);
    }
}
