//! Grid quantization of loadings matrices and the finite-model machinery used
//! to check the parameter-elimination sandwich by exhaustive summation.
//!
//! A loadings entry satisfies `|v| <= 1`, so rounding to the nearest multiple
//! of a step `ε = 1/N` places it on one of `2N + 1` grid points in `[-1, 1]`.
//! The step is kept as the integer `N`, which makes the "1/ε is an integer"
//! requirement hold by construction.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::scalar::{pairwise_sum, Scalar};

/// Quantization step `ε = 1 / inverse`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Epsilon {
    inverse: u64,
}

impl Epsilon {
    pub fn from_inverse(inverse: u64) -> Result<Self> {
        if inverse == 0 {
            return Err(Error::domain("1/epsilon must be a positive integer"));
        }
        Ok(Self { inverse })
    }

    /// Default step for `m` columns, `1/(2m)`.
    pub fn default_for(m: usize) -> Self {
        Self {
            inverse: 2 * m.max(1) as u64,
        }
    }

    /// Accepts a floating-point step whose reciprocal is an integer to within
    /// `1e-9` relative.
    pub fn from_value(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
            return Err(Error::domain(format!("epsilon {eps} must lie in (0, 1]")));
        }
        let inv = 1.0 / eps;
        let rounded = inv.round();
        if (inv - rounded).abs() > 1e-9 * rounded {
            return Err(Error::domain(format!(
                "1/epsilon = {inv} is not an integer"
            )));
        }
        Self::from_inverse(rounded as u64)
    }

    #[inline]
    pub fn inverse(self) -> u64 {
        self.inverse
    }

    #[inline]
    pub fn value<T: Scalar>(self) -> T {
        T::one() / T::from_u64(self.inverse).expect("grid size representable")
    }

    /// Requires `ε < 1/m`, i.e. `1/ε > m`.
    pub fn validate_for(self, m: usize) -> Result<Self> {
        if self.inverse as u128 > m as u128 {
            Ok(self)
        } else {
            Err(Error::domain(format!(
                "epsilon = 1/{} is not below 1/m = 1/{m}",
                self.inverse
            )))
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1/{}", self.inverse)
    }
}

/// Parses `"1/20"` or `"0.05"` exactly, without going through binary floating point.
impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::domain(format!("cannot parse epsilon from {s:?}"));
        let ratio: Ratio<u128> = if let Some((num, den)) = s.split_once('/') {
            let num: u128 = num.trim().parse().map_err(|_| bad())?;
            let den: u128 = den.trim().parse().map_err(|_| bad())?;
            if num == 0 || den == 0 {
                return Err(bad());
            }
            Ratio::new(num, den)
        } else {
            let (int, frac) = s.split_once('.').unwrap_or((s, ""));
            if int.is_empty() && frac.is_empty() || frac.len() > 30 {
                return Err(bad());
            }
            let digits = format!("{int}{frac}");
            if !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let num: u128 = digits.parse().map_err(|_| bad())?;
            if num == 0 {
                return Err(bad());
            }
            Ratio::new(num, 10u128.pow(frac.len() as u32))
        };
        if *ratio.numer() != 1 {
            return Err(Error::domain(format!(
                "1/epsilon = {} is not an integer",
                ratio.recip()
            )));
        }
        let inverse = u64::try_from(*ratio.denom()).map_err(|_| bad())?;
        Self::from_inverse(inverse)
    }
}

/// A loadings matrix rounded to the `ε` grid: `v_eps = v + ε·e_k` with every
/// entry of `e_k` in `[-1/2, 1/2]`.
#[derive(Clone, Debug)]
pub struct QuantizedLoadings<T> {
    pub epsilon: Epsilon,
    pub v_eps: RealMatrix<T>,
    pub e_k: RealMatrix<T>,
}

const RANGE_SLACK: f64 = 1e-12;

/// Rounds every entry of `v` to the nearest multiple of `epsilon`, halves away
/// from zero. `m` is the dimension the step is validated against.
pub fn quantize<T: Scalar>(
    v: &RealMatrix<T>,
    epsilon: Epsilon,
    m: usize,
) -> Result<QuantizedLoadings<T>> {
    epsilon.validate_for(m)?;
    let slack = T::lit(RANGE_SLACK);
    for i in 0..v.rows() {
        for j in 0..v.cols() {
            if v.get(i, j).abs() > T::one() + slack {
                return Err(Error::domain(format!(
                    "loadings entry ({i}, {j}) = {} lies outside [-1, 1]",
                    v.get(i, j)
                )));
            }
        }
    }
    let grid = T::from_u64(epsilon.inverse()).expect("grid size representable");
    let eps = epsilon.value::<T>();
    let v_eps = RealMatrix::from_fn(v.rows(), v.cols(), |i, j| {
        let steps = (v.get(i, j) * grid).round().max(-grid).min(grid);
        steps / grid
    });
    let e_k = RealMatrix::from_fn(v.rows(), v.cols(), |i, j| {
        (v_eps.get(i, j) - v.get(i, j)) / eps
    });
    Ok(QuantizedLoadings {
        epsilon,
        v_eps,
        e_k,
    })
}

/// The claimed bound `ε + mε²/4` on `|v_i^ε·v_j^ε − v_i·v_j|` for columns of a
/// quantized orthogonal matrix.
///
/// Note that this is not a worst-case guarantee: the first-order error term is
/// `ε/2·(‖v_i‖₁ + ‖v_j‖₁)`, which can reach `ε√m`. See
/// [`inner_product_perturbation_worst_case`].
pub fn inner_product_perturbation_bound<T: Scalar>(m: usize, epsilon: T) -> T {
    epsilon + T::from_count(m) * epsilon * epsilon / T::lit(4.0)
}

/// Worst-case bound `ε√m + mε²/4` on the same deviation, valid for any two
/// unit vectors of length `m` rounded to the `ε` grid.
pub fn inner_product_perturbation_worst_case<T: Scalar>(m: usize, epsilon: T) -> T {
    let m_t = T::from_count(m);
    epsilon * m_t.sqrt() + m_t * epsilon * epsilon / T::lit(4.0)
}

/// Largest `|v_i^ε·v_j^ε − v_i·v_j|` over distinct column pairs `i < j`.
pub fn max_pairwise_inner_product_deviation<T: Scalar>(
    v: &RealMatrix<T>,
    q: &QuantizedLoadings<T>,
) -> T {
    let exact = v.gram();
    let quant = q.v_eps.gram();
    let k = v.cols();
    let mut worst = T::zero();
    for i in 0..k {
        for j in i + 1..k {
            worst = worst.max((quant.get(i, j) - exact.get(i, j)).abs());
        }
    }
    worst
}

/// Log-count estimate of the number of `ε`-quantized `m x k` orthonormal
/// matrices:
///
/// `mk·[ln(2/ε + 1) − (1 − (1 + ε + ε²/4)/√m)/2] + (k − 1)·ln((ε + mε²/4)/π)`.
///
/// This is an approximate upper estimate; it is not compared against an
/// enumerated count.
pub fn lemma2_log_count_bound<T: Scalar>(m: usize, k: usize, epsilon: Epsilon) -> Result<T> {
    if k == 0 || m < 2 {
        return Err(Error::domain(format!(
            "need k >= 1 and m >= 2, got m = {m}, k = {k}"
        )));
    }
    epsilon.validate_for(m)?;
    let eps = epsilon.value::<T>();
    let (m_t, k_t) = (T::from_count(m), T::from_count(k));
    let two = T::lit(2.0);
    let norm_excess = (T::one() + eps + eps * eps / T::lit(4.0)) / m_t.sqrt();
    let per_entry = (two / eps + T::one()).ln() - (T::one() - norm_excess) / two;
    let first = m_t * k_t * per_entry;
    if k == 1 {
        return Ok(first);
    }
    let angle = inner_product_perturbation_bound(m, eps) / T::lit(std::f64::consts::PI);
    Ok(first + (k_t - T::one()) * angle.ln())
}

/// Finite model family `p(x | a, b)` on a weighted outcome grid, for exact
/// evaluation of maximized-likelihood integrals.
#[derive(Clone, Debug)]
pub struct DiscreteModel<T> {
    weights: Vec<T>,
    a_len: usize,
    b_len: usize,
    // x-major, then a, then b
    density: Vec<T>,
}

impl<T: Scalar> DiscreteModel<T> {
    /// Tabulates `likelihood(x, a, b)` over the grid `points` (with cell
    /// `weights`) and the two parameter families.
    pub fn from_fn<A, B>(
        points: &[T],
        weights: Vec<T>,
        a_family: &[A],
        b_family: &[B],
        likelihood: impl Fn(T, &A, &B) -> T,
    ) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} grid points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut density = Vec::with_capacity(points.len() * a_family.len() * b_family.len());
        for &x in points {
            for a in a_family {
                for b in b_family {
                    density.push(likelihood(x, a, b));
                }
            }
        }
        Self::from_parts(weights, a_family.len(), b_family.len(), density)
    }

    /// Builds a model from an explicit table `table[x][a][b]`.
    pub fn from_table(weights: Vec<T>, table: &[Vec<Vec<T>>]) -> Result<Self> {
        let a_len = table.first().map_or(0, Vec::len);
        let b_len = table.first().and_then(|t| t.first()).map_or(0, Vec::len);
        let mut density = Vec::new();
        for (xi, per_a) in table.iter().enumerate() {
            if per_a.len() != a_len || per_a.iter().any(|r| r.len() != b_len) {
                return Err(Error::Shape(format!(
                    "ragged likelihood table at grid cell {xi}"
                )));
            }
            for r in per_a {
                density.extend_from_slice(r);
            }
        }
        if table.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} grid cells but {} weights",
                table.len(),
                weights.len()
            )));
        }
        Self::from_parts(weights, a_len, b_len, density)
    }

    fn from_parts(weights: Vec<T>, a_len: usize, b_len: usize, density: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("empty outcome grid"));
        }
        if a_len == 0 || b_len == 0 {
            return Err(Error::domain("parameter families must be nonempty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::domain("grid weights must be finite and nonnegative"));
        }
        if let Some(p) = density
            .iter()
            .position(|d| !d.is_finite() || *d < T::zero())
        {
            let x = p / (a_len * b_len);
            return Err(Error::domain(format!(
                "likelihood at grid cell {x} is negative or non-finite"
            )));
        }
        Ok(Self {
            weights,
            a_len,
            b_len,
            density,
        })
    }

    pub fn grid_len(&self) -> usize {
        self.weights.len()
    }

    pub fn b_len(&self) -> usize {
        self.b_len
    }

    #[inline]
    fn at(&self, x: usize, a: usize, b: usize) -> T {
        self.density[(x * self.a_len + a) * self.b_len + b]
    }

    /// `max_a p(x | a, b)`.
    fn profile(&self, x: usize, b: usize) -> T {
        (0..self.a_len)
            .map(|a| self.at(x, a, b))
            .fold(T::zero(), T::max)
    }

    fn integrate(&self, per_cell: impl Fn(usize) -> T) -> T {
        let terms: Vec<T> = (0..self.grid_len())
            .map(|x| self.weights[x] * per_cell(x))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Which maximized likelihood to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NumeratorMode {
    /// Optimize both parameter blocks for every outcome.
    JointOpt,
    /// Optimize only `a`; hold `b` at the given index of the `b` family.
    FixedB(usize),
}

/// Integral (grid sum) of the maximized likelihood, i.e. the normalizer of
/// the normalized-maximum-likelihood distribution for the chosen mode.
pub fn nml_numerator_integral<T: Scalar>(
    model: &DiscreteModel<T>,
    mode: NumeratorMode,
) -> Result<T> {
    match mode {
        NumeratorMode::JointOpt => Ok(model.integrate(|x| {
            (0..model.b_len)
                .map(|b| model.profile(x, b))
                .fold(T::zero(), T::max)
        })),
        NumeratorMode::FixedB(b) if b < model.b_len => Ok(model.integrate(|x| model.profile(x, b))),
        NumeratorMode::FixedB(b) => Err(Error::domain(format!(
            "b index {b} outside family of size {}",
            model.b_len
        ))),
    }
}

/// How the discrete parameter is chosen for each outcome when forming the
/// joint integral in [`verify_lemma1_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BSelection {
    /// `b̂(x) = argmax_b max_a p(x | a, b)`, the maximum-likelihood choice.
    #[default]
    Maximizing,
    /// `b̂(x) = argmin_b max_a p(x | a, b)`, the selection rule exactly as
    /// printed in the lower-bound condition. Under this rule the lower bound
    /// generally fails; it is exposed to demonstrate that.
    Minimizing,
}

/// Result of checking `max_b I_b <= I_joint <= Σ_b I_b`.
#[derive(Clone, Debug)]
pub struct Lemma1Check<T> {
    pub upper_holds: bool,
    pub lower_holds: bool,
    /// `Σ_b I_b − I_joint`.
    pub slack_upper: T,
    /// `I_joint − max_b I_b`.
    pub slack_lower: T,
    pub joint: T,
    pub per_b: Vec<T>,
}

pub const LEMMA1_TOLERANCE: f64 = 1e-9;

pub fn verify_lemma1<T: Scalar>(model: &DiscreteModel<T>) -> Lemma1Check<T> {
    verify_lemma1_with(model, BSelection::Maximizing)
}

pub fn verify_lemma1_with<T: Scalar>(
    model: &DiscreteModel<T>,
    selection: BSelection,
) -> Lemma1Check<T> {
    let joint = match selection {
        BSelection::Maximizing => {
            nml_numerator_integral(model, NumeratorMode::JointOpt).expect("model is valid")
        }
        BSelection::Minimizing => model.integrate(|x| {
            (0..model.b_len)
                .map(|b| model.profile(x, b))
                .fold(T::infinity(), T::min)
        }),
    };
    let per_b: Vec<T> = (0..model.b_len)
        .map(|b| nml_numerator_integral(model, NumeratorMode::FixedB(b)).expect("index in range"))
        .collect();
    let total = pairwise_sum(&per_b);
    let best = per_b.iter().copied().fold(T::neg_infinity(), T::max);
    let slack_upper = total - joint;
    let slack_lower = joint - best;
    let tol = T::lit(LEMMA1_TOLERANCE);
    Lemma1Check {
        upper_holds: slack_upper >= -tol,
        lower_holds: slack_lower >= -tol,
        slack_upper,
        slack_lower,
        joint,
        per_b,
    }
}
