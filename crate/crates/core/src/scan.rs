//! Streaming multi-pattern substring counting over files and directories.

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use aho_corasick::{AhoCorasick, AhoCorasickKind, MatchKind};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_CHUNK: usize = 1 << 20;
pub const MIN_PATTERN_LEN: usize = 3;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("no patterns given")]
    NoPatterns,
    #[error("pattern {index} is shorter than {MIN_PATTERN_LEN} bytes")]
    ShortPattern { index: usize },
    #[error("chunk size {chunk} is smaller than the longest pattern ({max})")]
    ChunkTooSmall { chunk: usize, max: usize },
    #[error("cannot build matcher: {0}")]
    Build(String),
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PatternCount {
    pub pattern: String,
    pub count: u64,
    pub files_with_hits: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IoFailure {
    pub path: String,
    pub error: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ScanReport {
    pub schema_version: u32,
    pub per_pattern: Vec<PatternCount>,
    pub bytes_scanned: u64,
    pub files_scanned: u64,
    pub io_errors: Vec<IoFailure>,
}

/// Collapse every run of ASCII whitespace into one space. `in_ws` carries
/// the state across calls.
pub fn normalize_ws(bytes: &[u8], in_ws: &mut bool, out: &mut Vec<u8>) {
    for &b in bytes {
        if b.is_ascii_whitespace() {
            if !*in_ws {
                out.push(b' ');
            }
            *in_ws = true;
        } else {
            out.push(b);
            *in_ws = false;
        }
    }
}

/// Compiled pattern set plus streaming parameters.
/// Per-pattern counts and bytes read for one file.
type FileCounts = (Vec<u64>, u64);

pub struct Scanner {
    patterns: Vec<Vec<u8>>,
    ac: AhoCorasick,
    max_len: usize,
    chunk: usize,
    normalize: bool,
}

impl Scanner {
    pub fn new(patterns: &[Vec<u8>]) -> Result<Self, ScanError> {
        Self::with_options(patterns, DEFAULT_CHUNK, false)
    }

    pub fn with_options(patterns: &[Vec<u8>], chunk: usize, normalize: bool) -> Result<Self, ScanError> {
        if patterns.is_empty() {
            return Err(ScanError::NoPatterns);
        }
        if let Some(index) = patterns.iter().position(|p| p.len() < MIN_PATTERN_LEN) {
            return Err(ScanError::ShortPattern { index });
        }
        let patterns: Vec<Vec<u8>> = if normalize {
            patterns
                .iter()
                .map(|p| {
                    let mut out = Vec::with_capacity(p.len());
                    normalize_ws(p, &mut false, &mut out);
                    out
                })
                .collect()
        } else {
            patterns.to_vec()
        };
        let max_len = patterns.iter().map(Vec::len).max().expect("non-empty");
        if chunk < max_len {
            return Err(ScanError::ChunkTooSmall { chunk, max: max_len });
        }
        let ac = AhoCorasick::builder()
            .match_kind(MatchKind::Standard)
            .kind(Some(AhoCorasickKind::DFA))
            .build(&patterns)
            .map_err(|e| ScanError::Build(e.to_string()))?;
        Ok(Self { patterns, ac, max_len, chunk, normalize })
    }

    pub fn patterns(&self) -> &[Vec<u8>] {
        &self.patterns
    }

    /// Count overlapping occurrences of each pattern in a stream. Returns
    /// the counts and the number of raw bytes read.
    pub fn scan_reader<R: Read>(&self, mut r: R) -> io::Result<(Vec<u64>, u64)> {
        let mut counts = vec![0u64; self.patterns.len()];
        let carry_max = self.max_len - 1;
        let mut buf: Vec<u8> = Vec::with_capacity(self.chunk + carry_max);
        let mut raw = vec![0u8; self.chunk];
        let mut total = 0u64;
        let mut in_ws = false;
        loop {
            let n = read_full(&mut r, &mut raw)?;
            if n == 0 {
                break;
            }
            total += n as u64;
            let carry = buf.len();
            if self.normalize {
                normalize_ws(&raw[..n], &mut in_ws, &mut buf);
            } else {
                buf.extend_from_slice(&raw[..n]);
            }
            for m in self.ac.find_overlapping_iter(&buf[..]) {
                if m.end() > carry {
                    counts[m.pattern().as_usize()] += 1;
                }
            }
            let keep = carry_max.min(buf.len());
            buf.drain(..buf.len() - keep);
        }
        Ok((counts, total))
    }

    pub fn scan_bytes(&self, bytes: &[u8]) -> Vec<u64> {
        self.scan_reader(bytes).expect("in-memory read").0
    }

    /// Scan files and directories (recursively, in sorted order) in
    /// parallel. Unreadable files are reported and skipped.
    pub fn scan_paths(&self, paths: &[PathBuf]) -> ScanReport {
        let mut files = Vec::new();
        let mut io_errors = Vec::new();
        for p in paths {
            collect_files(p, &mut files, &mut io_errors);
        }
        files.sort();
        let results: Vec<(PathBuf, io::Result<FileCounts>)> = files
            .par_iter()
            .map(|f| (f.clone(), File::open(f).and_then(|h| self.scan_reader(io::BufReader::with_capacity(1 << 16, h)))))
            .collect();
        let mut per_pattern: Vec<PatternCount> = self
            .patterns
            .iter()
            .map(|p| PatternCount { pattern: String::from_utf8_lossy(p).into_owned(), count: 0, files_with_hits: 0 })
            .collect();
        let mut bytes_scanned = 0;
        let mut files_scanned = 0;
        for (path, r) in results {
            match r {
                Ok((counts, bytes)) => {
                    files_scanned += 1;
                    bytes_scanned += bytes;
                    for (pc, c) in per_pattern.iter_mut().zip(counts) {
                        pc.count += c;
                        pc.files_with_hits += u64::from(c > 0);
                    }
                }
                Err(e) => {
                    tracing::warn!(path = %path.display(), error = %e, "skipping unreadable file");
                    io_errors.push(IoFailure { path: path.display().to_string(), error: e.to_string() });
                }
            }
        }
        ScanReport { schema_version: 1, per_pattern, bytes_scanned, files_scanned, io_errors }
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

fn collect_files(p: &Path, files: &mut Vec<PathBuf>, errors: &mut Vec<IoFailure>) {
    if p.is_dir() {
        for entry in walkdir::WalkDir::new(p).sort_by_file_name() {
            match entry {
                Ok(e) if e.file_type().is_file() => files.push(e.into_path()),
                Ok(_) => {}
                Err(e) => errors.push(IoFailure {
                    path: e.path().map_or_else(|| p.display().to_string(), |q| q.display().to_string()),
                    error: e.to_string(),
                }),
            }
        }
    } else {
        files.push(p.to_path_buf());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(hay: &[u8], pat: &[u8]) -> u64 {
        hay.windows(pat.len()).filter(|w| *w == pat).count() as u64
    }

    #[test]
    fn overlapping_matches_count() {
        let s = Scanner::new(&[b"aaa".to_vec()]).unwrap();
        assert_eq!(s.scan_bytes(b"aaaaa"), vec![3]);
    }

    #[test]
    fn straddling_chunks() {
        let pat = b"irrational_sqrt_two : irrational (sqrt 2)".to_vec();
        let mut hay = vec![b'x'; 200];
        for off in [30usize, 95, 150] {
            hay[off..off + pat.len()].copy_from_slice(&pat);
        }
        for chunk in [pat.len(), 50, 64, 1000] {
            let s = Scanner::with_options(std::slice::from_ref(&pat), chunk, false).unwrap();
            assert_eq!(s.scan_bytes(&hay), vec![naive(&hay, &pat)], "chunk {chunk}");
        }
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(matches!(Scanner::new(&[]), Err(ScanError::NoPatterns)));
        assert!(matches!(Scanner::new(&[b"ab".to_vec()]), Err(ScanError::ShortPattern { index: 0 })));
    }

    #[test]
    fn whitespace_normalization() {
        let s = Scanner::with_options(&[b"{ rcases h".to_vec()], 16, true).unwrap();
        assert_eq!(s.scan_bytes(b"{  rcases\n\th and {rcases h"), vec![1]);
    }

    #[test]
    fn empty_corpus() {
        let s = Scanner::new(&[b"abc".to_vec()]).unwrap();
        assert_eq!(s.scan_bytes(b""), vec![0]);
    }
}
