//! Sparse observation sets: construction, text serialization, ratings-file
//! ingestion, and seeded synthetic generators.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

use crate::error::{Error, Result};
use crate::{lit, Scalar};

/// A sparse set of observed entries of an `rows x cols` matrix.
///
/// Indices are 0-based, unique, and in range; the set is never empty. The
/// entry order is fixed at construction so every reduction over the
/// observations is reproducible.
#[derive(Debug, Clone)]
pub struct ObservedMatrix<F> {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, F)>,
}

impl<F: Scalar> ObservedMatrix<F> {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<(usize, usize, F)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyObservations);
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for &(i, j, _) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::IndexOutOfRange {
                    row: i,
                    col: j,
                    rows,
                    cols,
                });
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEntry { row: i, col: j });
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Dense matrix given in row-major order, observed everywhere.
    pub fn fully_observed(rows: usize, cols: usize, values: &[F]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        let entries = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j, values[i * cols + j])))
            .collect();
        Self::from_entries(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_observed(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, F)] {
        &self.entries
    }

    /// Frobenius norm of the observed matrix (zeros elsewhere).
    pub fn frob_norm(&self) -> F {
        self.entries
            .iter()
            .fold(F::zero(), |acc, &(_, _, v)| acc + v * v)
            .sqrt()
    }

    /// Write `i j value` triplets, one observation per line.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        for &(i, j, v) in &self.entries {
            writeln!(w, "{i} {j} {v}")?;
        }
        Ok(())
    }

    /// Read `i j value` triplets; dimensions are the tightest fit.
    pub fn read_coo<R: BufRead>(r: R) -> Result<Self> {
        let mut entries = Vec::new();
        let mut rows = 0usize;
        let mut cols = 0usize;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>, what: &str| -> Result<String> {
                tok.map(str::to_owned).ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: format!("missing {what}"),
                })
            };
            let i: usize = parse(parts.next(), "row index")?
                .parse()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("bad row index: {e}"),
                })?;
            let j: usize = parse(parts.next(), "column index")?
                .parse()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("bad column index: {e}"),
                })?;
            let v: f64 = parse(parts.next(), "value")?
                .parse()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("bad value: {e}"),
                })?;
            rows = rows.max(i + 1);
            cols = cols.max(j + 1);
            entries.push((i, j, lit::<F>(v)));
        }
        Self::from_entries(rows, cols, entries)
    }
}

/// Parse `user,item,rating[,timestamp]` lines with 1-based ids. An optional
/// header line (non-numeric first field) is skipped; duplicate pairs and
/// zero ids are errors.
pub fn parse_ratings<F: Scalar, R: BufRead>(reader: R) -> Result<ObservedMatrix<F>> {
    let mut entries: Vec<(usize, usize, F)> = Vec::new();
    let mut max_user = 0usize;
    let mut max_item = 0usize;
    let mut first_data_line_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !first_data_line_seen && fields[0].parse::<usize>().is_err() {
            // header line
            first_data_line_seen = true;
            continue;
        }
        first_data_line_seen = true;
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected user,item,rating, got {} fields", fields.len()),
            });
        }
        let user: usize = fields[0].parse().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("bad user id: {e}"),
        })?;
        let item: usize = fields[1].parse().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("bad item id: {e}"),
        })?;
        let rating: f64 = fields[2].parse().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("bad rating: {e}"),
        })?;
        if user == 0 || item == 0 {
            return Err(Error::Parse {
                line: idx + 1,
                message: "ids are 1-based; 0 is not a valid id".into(),
            });
        }
        max_user = max_user.max(user);
        max_item = max_item.max(item);
        entries.push((user - 1, item - 1, lit::<F>(rating)));
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    ObservedMatrix::from_entries(max_user, max_item, entries)
}

pub fn load_ratings_csv<F: Scalar>(path: impl AsRef<Path>) -> Result<ObservedMatrix<F>> {
    let file = File::open(path)?;
    parse_ratings(BufReader::new(file))
}

/// Seeded rank-`rank` ground truth `G H^T` with entries observed
/// independently with probability `density` and optional additive Gaussian
/// noise. Deterministic given the seed.
pub fn generate_synthetic_mc<F>(
    rows: usize,
    cols: usize,
    rank: usize,
    density: f64,
    noise: f64,
    seed: u64,
) -> Result<ObservedMatrix<F>>
where
    F: Scalar,
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    if rank == 0 || rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(
            "rows, cols and rank must be positive".into(),
        ));
    }
    if density * (rows as f64) * (cols as f64) < 1.0 {
        return Err(Error::InvalidParameter(
            "expected observation count below one entry".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<F> = (0..rows * rank).map(|_| rng.sample(StandardNormal)).collect();
    let h: Vec<F> = (0..cols * rank).map(|_| rng.sample(StandardNormal)).collect();
    let density_f = lit::<F>(density);
    let noise_f = lit::<F>(noise);
    let mut entries = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let u: F = rng.sample(StandardUniform);
            if u < density_f {
                let mut v = F::zero();
                for k in 0..rank {
                    v = v + g[i * rank + k] * h[j * rank + k];
                }
                if noise > 0.0 {
                    let z: F = rng.sample(StandardNormal);
                    v = v + noise_f * z;
                }
                entries.push((i, j, v));
            }
        }
    }
    ObservedMatrix::from_entries(rows, cols, entries)
}

/// Seeded sign observations: the underlying matrix is rank-`rank` Gaussian,
/// and each observed entry is `+1` with the logistic probability of its
/// value, `-1` otherwise.
pub fn generate_synthetic_one_bit<F>(
    rows: usize,
    cols: usize,
    rank: usize,
    density: f64,
    seed: u64,
) -> Result<ObservedMatrix<F>>
where
    F: Scalar,
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    let base = generate_synthetic_mc::<F>(rows, cols, rank, density, 0.0, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let entries = base
        .entries()
        .iter()
        .map(|&(i, j, v)| {
            let p = F::one() / (F::one() + (-v).exp());
            let u: F = rng.sample(StandardUniform);
            let sign = if u < p { F::one() } else { -F::one() };
            (i, j, sign)
        })
        .collect();
    ObservedMatrix::from_entries(rows, cols, entries)
}
