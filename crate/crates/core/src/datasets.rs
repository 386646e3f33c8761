//! CSV ingestion, the percentage-returns transform, column scaling, and the
//! seeded synthetic "Lin" generator.

use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::scalar::Scalar;

/// Identity of the pseudo-random stream behind [`generate_lin`]. Changing any
/// part of it changes generated data, so it is recorded in output metadata.
pub const GENERATOR_NAME: &str = "ChaCha8Rng(rand_chacha 0.9, seed_from_u64) + StandardNormal(rand_distr 0.5 ziggurat) + Uniform(rand 0.9)";

/// How `noise_sigma` is interpreted.
pub const NOISE_NOTE: &str =
    "noise_sigma is the standard deviation of the additive Gaussian noise (N(0, 0.1) read as sd = 0.1, not variance)";

/// Recorded when no base matrix is supplied.
pub const SYNTHETIC_SOURCES_NOTE: &str =
    "source columns are seeded i.i.d. standard normal draws, not observed market returns";

/// Closing prices: rows are periods in chronological order, all entries positive.
#[derive(Clone, Debug)]
pub struct PriceTable<T> {
    pub column_names: Vec<String>,
    pub prices: RealMatrix<T>,
}

impl<T: Scalar> PriceTable<T> {
    pub fn new(column_names: Vec<String>, prices: RealMatrix<T>) -> Result<Self> {
        if column_names.len() != prices.cols() {
            return Err(Error::Shape(format!(
                "{} column names for {} columns",
                column_names.len(),
                prices.cols()
            )));
        }
        if prices.rows() < 2 {
            return Err(Error::InsufficientData(format!(
                "a price table needs at least 2 rows, got {}",
                prices.rows()
            )));
        }
        for i in 0..prices.rows() {
            for j in 0..prices.cols() {
                if !(prices.get(i, j) > T::zero()) {
                    return Err(Error::Parse {
                        row: i + 1,
                        col: j + 1,
                        message: format!("price {} is not positive", prices.get(i, j)),
                    });
                }
            }
        }
        Ok(Self {
            column_names,
            prices,
        })
    }
}

/// Percentage change between consecutive rows: `100·(c_{i+1} − c_i)/c_i`.
pub fn returns_transform<T: Scalar>(p: &PriceTable<T>) -> RealMatrix<T> {
    let c = &p.prices;
    let hundred = T::lit(100.0);
    RealMatrix::from_fn(c.rows() - 1, c.cols(), |i, j| {
        hundred * (c.get(i + 1, j) - c.get(i, j)) / c.get(i, j)
    })
}

/// Parameters of the Lin construction: `true_k` source columns followed by
/// `m − true_k` random linear combinations of them plus Gaussian noise.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub true_k: usize,
    pub noise_sigma: f64,
    pub mix_low: f64,
    pub mix_high: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Lin spec with the default mixing range `[-1, 1]` and noise sd 0.1.
    pub fn lin(n: usize, m: usize, true_k: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            true_k,
            noise_sigma: 0.1,
            mix_low: -1.0,
            mix_high: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        if self.true_k == 0 || self.true_k > self.m {
            return Err(Error::domain(format!(
                "true_k = {} outside 1..={}",
                self.true_k, self.m
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::domain("noise_sigma must be finite and nonnegative"));
        }
        if !(self.mix_low.is_finite() && self.mix_high.is_finite() && self.mix_low <= self.mix_high)
        {
            return Err(Error::domain(
                "mixing range must satisfy mix_low <= mix_high",
            ));
        }
        Ok(())
    }
}

/// Generates a Lin matrix.
///
/// Draw order from the seeded stream: sources row by row (only when `base`
/// is `None`), then mixing coefficients column by column, then noise row by
/// row over the mixed columns. Identical specs give bit-identical output.
pub fn generate_lin<T: Scalar>(
    spec: &SyntheticSpec,
    base: Option<&RealMatrix<T>>,
) -> Result<RealMatrix<T>> {
    spec.validate()?;
    let (n, m, k) = (spec.n, spec.m, spec.true_k);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let sources: Vec<f64> = match base {
        Some(b) => {
            if b.rows() != n || b.cols() < k {
                return Err(Error::Shape(format!(
                    "base is {}x{}, need {n} rows and at least {k} columns",
                    b.rows(),
                    b.cols()
                )));
            }
            (0..n)
                .flat_map(|i| (0..k).map(move |j| b.get(i, j).as_f64()))
                .collect()
        }
        None => (0..n * k)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect(),
    };

    let mix = Uniform::new_inclusive(spec.mix_low, spec.mix_high)
        .map_err(|e| Error::domain(format!("mixing range: {e}")))?;
    let coeffs: Vec<Vec<f64>> = (k..m)
        .map(|_| (0..k).map(|_| mix.sample(&mut rng)).collect())
        .collect();

    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        let src = &sources[i * k..(i + 1) * k];
        data.extend(src.iter().map(|&v| T::lit(v)));
        for c in &coeffs {
            let mixed: f64 = c.iter().zip(src).map(|(a, s)| a * s).sum();
            let noise: f64 = if spec.noise_sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                spec.noise_sigma * z
            } else {
                0.0
            };
            data.push(T::lit(mixed + noise));
        }
    }
    RealMatrix::new(n, m, data)
}

fn column_mean<T: Scalar>(x: &RealMatrix<T>, j: usize) -> T {
    let s: T = (0..x.rows()).map(|i| x.get(i, j)).sum();
    s / T::from_count(x.rows())
}

/// Subtracts each column's mean.
pub fn center_columns<T: Scalar>(x: &RealMatrix<T>) -> RealMatrix<T> {
    let means: Vec<T> = (0..x.cols()).map(|j| column_mean(x, j)).collect();
    RealMatrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j) - means[j])
}

/// Centers each column and scales it to unit sample standard deviation
/// (`n − 1` normalization).
pub fn standardize_columns<T: Scalar>(x: &RealMatrix<T>) -> Result<RealMatrix<T>> {
    if x.rows() < 2 {
        return Err(Error::InsufficientData(
            "standardizing needs at least 2 rows".into(),
        ));
    }
    let centered = center_columns(x);
    let denom = T::from_count(x.rows() - 1);
    let mut sds = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let ss: T = (0..x.rows()).map(|i| centered.get(i, j).powi(2)).sum();
        let sd = (ss / denom).sqrt();
        if !(sd > T::zero()) {
            return Err(Error::Degenerate(format!(
                "column {} is constant; cannot standardize",
                j + 1
            )));
        }
        sds.push(sd);
    }
    Ok(RealMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        centered.get(i, j) / sds[j]
    }))
}

/// Eigenvalues of the sample correlation matrix, largest first.
pub fn correlation_eigenvalues<T: Scalar>(x: &RealMatrix<T>) -> Result<Vec<T>> {
    let z = standardize_columns(x)?;
    let s = crate::matrix::svd(&z)?;
    let denom = T::from_count(x.rows() - 1);
    let mut eig: Vec<T> = s.singular_values().iter().map(|&l| l * l / denom).collect();
    // wide inputs have fewer singular values than columns
    eig.resize(x.cols(), T::zero());
    Ok(eig)
}

/// Named numeric table read from CSV.
#[derive(Clone, Debug)]
pub struct NumericTable<T> {
    pub column_names: Vec<String>,
    pub values: RealMatrix<T>,
}

/// Reads a comma-separated numeric table. Error coordinates are 1-based data
/// row (header excluded) and column.
pub fn read_numeric_csv<T: Scalar, R: Read>(
    reader: R,
    has_header: bool,
) -> Result<NumericTable<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Option<Vec<String>> = if has_header {
        Some(rdr.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };
    let mut width = header.as_ref().map(Vec::len).filter(|&w| w > 0);
    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record?;
        let row = rows + 1;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row,
                col: record.len().min(w) + 1,
                message: format!("expected {w} fields, found {}", record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                col: j + 1,
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    col: j + 1,
                    message: format!("{cell:?} is not finite"),
                });
            }
            data.push(T::lit(v));
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 data rows, found {rows}"
        )));
    }
    let cols = width.unwrap_or(0);
    let column_names = header.unwrap_or_else(|| (1..=cols).map(|j| format!("col_{j}")).collect());
    Ok(NumericTable {
        column_names,
        values: RealMatrix::new(rows, cols, data)?,
    })
}

/// Reads a numeric table from a file.
pub fn load_matrix_csv<T: Scalar>(
    path: impl AsRef<Path>,
    has_header: bool,
) -> Result<NumericTable<T>> {
    read_numeric_csv(std::fs::File::open(path)?, has_header)
}

/// Reads a price table; every price must be positive.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, has_header: bool) -> Result<PriceTable<T>> {
    let t = load_matrix_csv(path, has_header)?;
    PriceTable::new(t.column_names, t.values)
}

/// Writes a matrix as CSV with an optional header, `{}` (shortest round-trip)
/// formatting, no trailing delimiter.
pub fn write_matrix_csv<T: Scalar, W: std::io::Write>(
    out: W,
    x: &RealMatrix<T>,
    header: Option<&[String]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for i in 0..x.rows() {
        w.write_record(x.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
