//! Embedding matrices, their vocabularies, and generators for baseline and
//! planted-structure spaces.
//!
//! Rows are stored in frequency order: row 0 is the most frequent word. Every
//! operation that truncates (`load_embeddings` with a limit, [`top_n`]) keeps a
//! prefix and therefore keeps the most frequent words.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::Serialize;

use crate::community::Partition;
use crate::error::{Error, Result};

/// Frequency-ranked token list with reverse lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            validate_token(tok)?;
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    /// Synthetic tokens `w0`, `w1`, ...
    pub fn synthetic(n: usize) -> Self {
        let tokens: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let index = tokens.iter().cloned().zip(0..).collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    fn prefix(&self, n: usize) -> Self {
        let tokens = self.tokens[..n].to_vec();
        let index = tokens.iter().cloned().zip(0..).collect();
        Vocabulary { tokens, index }
    }
}

fn validate_token(tok: &str) -> Result<()> {
    if tok.is_empty() {
        return Err(Error::invalid("empty token"));
    }
    if tok.chars().any(char::is_whitespace) {
        return Err(Error::invalid(format!("token {tok:?} contains whitespace")));
    }
    Ok(())
}

/// Dense `n × dim` matrix of word vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Vec<f64>,
    dim: usize,
    vocab: Vocabulary,
    source_tag: String,
}

impl EmbeddingMatrix {
    pub fn new(
        vocab: Vocabulary,
        dim: usize,
        data: Vec<f64>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::invalid("embedding matrix needs at least one row"));
        }
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let expected = vocab.len() * dim;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value in row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(EmbeddingMatrix {
            data,
            dim,
            vocab,
            source_tag: source_tag.into(),
        })
    }

    pub fn from_rows(vocab: Vocabulary, rows: &[Vec<f64>], source_tag: &str) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(vocab, dim, data, source_tag)
    }

    pub fn n(&self) -> usize {
        self.vocab.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }
}

/// Mean and population standard deviation over every matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingStats {
    pub mean: f64,
    pub std: f64,
}

pub fn load_embeddings(path: impl AsRef<Path>, limit: Option<usize>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_embeddings(BufReader::new(file), limit, &path.display().to_string())
}

/// Parses the plain-text embedding format: a `<n> <dim>` header followed by
/// `n` lines of `<token> <v1> ... <v_dim>`.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    limit: Option<usize>,
    source_tag: &str,
) -> Result<EmbeddingMatrix> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::parse(1, "header must be \"<n> <dim>\""));
    }
    let declared: usize = fields[0]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad row count {:?}", fields[0])))?;
    let dim: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad dimension {:?}", fields[1])))?;
    if declared == 0 || dim == 0 {
        return Err(Error::parse(1, "row count and dimension must be positive"));
    }
    let n = match limit {
        Some(0) => return Err(Error::invalid("limit must be at least 1")),
        Some(l) if l > declared => {
            return Err(Error::invalid(format!(
                "limit {l} exceeds the {declared} rows declared in the header"
            )))
        }
        Some(l) => l,
        None => declared,
    };

    let mut tokens = Vec::with_capacity(n);
    let mut seen: HashMap<String, usize> = HashMap::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for row in 0..n {
        let lineno = row + 2;
        let line = match lines.next() {
            Some(line) => line?,
            None => {
                return Err(Error::parse(
                    lineno,
                    format!("expected {declared} rows, file ends after {row}"),
                ))
            }
        };
        let mut fields = line.split_ascii_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, "blank line"))?;
        if let Some(first) = seen.insert(token.to_string(), lineno) {
            return Err(Error::parse(
                lineno,
                format!("duplicate token {token:?} (first seen on line {first})"),
            ));
        }
        let mut count = 0;
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric value {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite value {field:?}")));
            }
            count += 1;
            if count <= dim {
                data.push(v);
            }
        }
        if count != dim {
            return Err(Error::parse(
                lineno,
                format!("expected {dim} values, found {count}"),
            ));
        }
        tokens.push(token.to_string());
    }
    if limit.is_none() {
        if let Some(extra) = lines.next() {
            let extra = extra?;
            return Err(Error::parse(
                n + 2,
                if extra.trim().is_empty() {
                    "blank line after the declared rows".to_string()
                } else {
                    format!("more rows than the {declared} declared")
                },
            ));
        }
    }

    let vocab = Vocabulary {
        index: seen
            .into_iter()
            .map(|(tok, line)| (tok, line - 2))
            .collect(),
        tokens,
    };
    EmbeddingMatrix::new(vocab, dim, data, source_tag)
}

/// Writes `m` in the text format. Values use the shortest representation that
/// parses back to the same `f64`, so a save/load cycle is exact.
pub fn write_embeddings<W: Write>(m: &EmbeddingMatrix, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", m.n(), m.dim())?;
    for i in 0..m.n() {
        w.write_all(m.vocab.token(i).as_bytes())?;
        for v in m.row(i) {
            write!(w, " {v:?}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_embeddings(m, std::io::BufWriter::new(file))
}

/// Single-pass (Welford) mean and population standard deviation.
pub fn stats(m: &EmbeddingMatrix) -> EmbeddingStats {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (count, &x) in m.values().iter().enumerate() {
        let delta = x - mean;
        mean += delta / (count + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = m.values().len() as f64;
    EmbeddingStats {
        mean,
        std: (m2 / n).max(0.0).sqrt(),
    }
}

/// Uniform random embeddings on `[mean - std, mean + std]`, the baseline
/// space used to tell learned structure apart from random-point structure.
pub fn random_baseline(
    n: usize,
    dim: usize,
    stats: EmbeddingStats,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    if n == 0 || dim == 0 {
        return Err(Error::invalid("n and dim must be at least 1"));
    }
    if !(stats.mean.is_finite() && stats.std.is_finite() && stats.std >= 0.0) {
        return Err(Error::invalid("stats must be finite with std >= 0"));
    }
    let len = n * dim;
    let data = if stats.std == 0.0 {
        vec![stats.mean; len]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(stats.mean - stats.std, stats.mean + stats.std);
        (0..len).map(|_| dist.sample(&mut rng)).collect()
    };
    EmbeddingMatrix::new(
        Vocabulary::synthetic(n),
        dim,
        data,
        format!("random_baseline(seed={seed})"),
    )
}

/// Isotropic Gaussian clusters around well-separated centers, with the
/// ground-truth assignment. Point `i` belongs to cluster `i % clusters`.
///
/// When `clusters <= dim` the centers sit on a regular simplex with edge
/// length `separation`; otherwise they are spaced `separation` apart along
/// the first axis.
pub fn synth_mixture(
    n: usize,
    dim: usize,
    clusters: usize,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<(EmbeddingMatrix, Partition)> {
    if n == 0 || dim == 0 {
        return Err(Error::invalid("n and dim must be at least 1"));
    }
    if clusters == 0 {
        return Err(Error::invalid("clusters must be at least 1"));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::invalid("spread must be positive"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::invalid("separation must be non-negative"));
    }

    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|c| {
            let mut center = vec![0.0; dim];
            if clusters <= dim {
                center[c] = separation / std::f64::consts::SQRT_2;
            } else {
                center[0] = separation * c as f64;
            }
            center
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).expect("spread checked positive");
    let mut data = Vec::with_capacity(n * dim);
    let mut assignment = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % clusters;
        assignment.push(c);
        data.extend(centers[c].iter().map(|x| x + noise.sample(&mut rng)));
    }
    let matrix = EmbeddingMatrix::new(
        Vocabulary::synthetic(n),
        dim,
        data,
        format!("synth_mixture(clusters={clusters}, seed={seed})"),
    )?;
    Ok((matrix, Partition::from_assignment(&assignment)))
}

/// The `n` most frequent rows.
pub fn top_n(m: &EmbeddingMatrix, n: usize) -> Result<EmbeddingMatrix> {
    if n == 0 {
        return Err(Error::invalid("top_n needs n >= 1"));
    }
    if n > m.n() {
        return Err(Error::invalid(format!(
            "top_n({n}) exceeds the {} available rows",
            m.n()
        )));
    }
    Ok(EmbeddingMatrix {
        data: m.data[..n * m.dim].to_vec(),
        dim: m.dim,
        vocab: m.vocab.prefix(n),
        source_tag: m.source_tag.clone(),
    })
}
