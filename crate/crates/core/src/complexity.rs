//! Stochastic-complexity scoring of PCA ranks.
//!
//! For an `n x m` matrix with singular values `λ`, rank `k` is scored by
//!
//! ```text
//! s(X; k) ≃ (nm − kn)·ln Σ_{i>k} λ_i²  +  nk·ln ‖XᵀX‖²_F
//!         + (mn − kn − 1)·ln(mn / (mn − kn))  −  (nk + 1)·ln(nk)  +  Δs,
//! 0 <= Δs <= mk·ln(2 / (mε)),
//! ```
//!
//! which is the linear-regression NML code length with `mn` observations,
//! `kn` parameters, residual energy `τ̂ = Σ_{i>k} λ_i²` and fit energy
//! `‖XᵀX‖²_F`. The selected rank minimizes either bound; both argmins are
//! reported, together with the interval they span.

use crate::error::{Error, Result};
use crate::matrix::{svd, tail_energy, RealMatrix, SvdResult};
use crate::quantization::Epsilon;
use crate::scalar::Scalar;

/// Residual energies below this are clamped before taking the logarithm.
pub const TAIL_FLOOR: f64 = 1e-300;

fn tail_floor<T: Scalar>() -> T {
    T::lit(TAIL_FLOOR).max(T::min_positive_value())
}

/// How the fit-energy term is aggregated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GramMode {
    /// `nk·ln ‖XᵀX‖²_F`.
    #[default]
    FullGram,
    /// `k·Σ_j ln(X_j X_jᵀ)`, summing the per-row approximation over rows.
    PerRowSum,
}

impl GramMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GramMode::FullGram => "full_gram",
            GramMode::PerRowSum => "per_row_sum",
        }
    }
}

/// The four code-length terms and the bound gap for one candidate rank.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityTerms<T> {
    pub k: usize,
    pub tail_term: T,
    pub gram_term: T,
    pub ratio_term: T,
    pub count_term: T,
    pub delta_lower: T,
    pub delta_upper: T,
    /// The residual energy was clamped to [`TAIL_FLOOR`].
    pub floored: bool,
}

impl<T: Scalar> ComplexityTerms<T> {
    pub fn lower_total(&self) -> T {
        self.tail_term + self.gram_term + self.ratio_term - self.count_term + self.delta_lower
    }

    pub fn upper_total(&self) -> T {
        self.lower_total() + self.delta_upper
    }
}

#[derive(Clone, Debug)]
pub struct ComplexityReport<T> {
    pub n: usize,
    pub m: usize,
    pub epsilon: Epsilon,
    pub gram_mode: GramMode,
    /// One entry per `k = 1..m-1`, ascending.
    pub per_k: Vec<ComplexityTerms<T>>,
    pub k_lower_opt: usize,
    pub k_upper_opt: usize,
    /// `(min, max)` of the two argmins.
    pub k_bracket: (usize, usize),
}

impl<T: Scalar> ComplexityReport<T> {
    pub fn bracket_contains(&self, k: usize) -> bool {
        self.k_bracket.0 <= k && k <= self.k_bracket.1
    }
}

/// Arguments of the linear-regression NML code length.
#[derive(Clone, Copy, Debug)]
pub struct RegressionNmlInputs<T> {
    pub n_obs: usize,
    pub n_params: usize,
    /// Maximum-likelihood residual energy.
    pub tau_hat: T,
    /// Squared norm of the fitted values.
    pub fit_energy: T,
}

/// Linear-regression NML code length
/// `(N − K)·ln τ̂ + K·ln F + (N − K − 1)·ln(N/(N − K)) − (K + 1)·ln K`.
pub fn regression_nml<T: Scalar>(inp: RegressionNmlInputs<T>) -> Result<T> {
    let RegressionNmlInputs {
        n_obs,
        n_params,
        tau_hat,
        fit_energy,
    } = inp;
    if n_params == 0 || n_params >= n_obs {
        return Err(Error::domain(format!(
            "need 1 <= n_params < n_obs, got n_params = {n_params}, n_obs = {n_obs}"
        )));
    }
    if !(tau_hat > T::zero()) || !(fit_energy > T::zero()) {
        return Err(Error::domain(format!(
            "tau_hat ({tau_hat}) and fit_energy ({fit_energy}) must be positive"
        )));
    }
    let big_n = T::from_count(n_obs);
    let big_k = T::from_count(n_params);
    let dof = T::from_count(n_obs - n_params);
    Ok(
        dof * tau_hat.ln() + big_k * fit_energy.ln() + (dof - T::one()) * (big_n / dof).ln()
            - (big_k + T::one()) * big_k.ln(),
    )
}

/// Per-rank terms using the full Gram statistic `gram_fro_sq = ‖XᵀX‖²_F`.
pub fn stochastic_complexity_terms<T: Scalar>(
    s: &SvdResult<T>,
    gram_fro_sq: T,
    n: usize,
    m: usize,
    k: usize,
    epsilon: Epsilon,
) -> Result<ComplexityTerms<T>> {
    if !(gram_fro_sq > T::zero()) {
        return Err(Error::domain(format!(
            "gram_fro_sq ({gram_fro_sq}) must be positive"
        )));
    }
    let log_fit = T::from_count(n) * gram_fro_sq.ln();
    terms_from_log_fit(s, log_fit, n, m, k, epsilon)
}

/// `log_fit` is the row-aggregated log fit energy: `n·ln ‖XᵀX‖²_F` for the
/// full Gram mode, `Σ_j ln(X_j X_jᵀ)` for the per-row mode. The gram term is
/// `k·log_fit`.
fn terms_from_log_fit<T: Scalar>(
    s: &SvdResult<T>,
    log_fit: T,
    n: usize,
    m: usize,
    k: usize,
    epsilon: Epsilon,
) -> Result<ComplexityTerms<T>> {
    if k == 0 || k >= m {
        return Err(Error::domain(format!(
            "k = {k} outside 1..={}",
            m.saturating_sub(1)
        )));
    }
    if s.u().rows() != n || s.v().rows() != m {
        return Err(Error::Shape(format!(
            "decomposition is of a {}x{} matrix, not {n}x{m}",
            s.u().rows(),
            s.v().rows()
        )));
    }
    epsilon.validate_for(m)?;

    let raw_tail = if k >= s.rank_capacity() {
        T::zero()
    } else {
        tail_energy(s, k)?
    };
    let floor = tail_floor::<T>();
    let floored = raw_tail < floor;
    let tail = raw_tail.max(floor);

    let (n_t, m_t, k_t) = (T::from_count(n), T::from_count(m), T::from_count(k));
    let nk = n_t * k_t;
    let resid_dof = n_t * (m_t - k_t);
    let eps = epsilon.value::<T>();

    Ok(ComplexityTerms {
        k,
        tail_term: resid_dof * tail.ln(),
        gram_term: k_t * log_fit,
        ratio_term: (resid_dof - T::one()) * (m_t / (m_t - k_t)).ln(),
        count_term: (nk + T::one()) * nk.ln(),
        delta_lower: T::zero(),
        delta_upper: m_t * k_t * (T::lit(2.0) / (m_t * eps)).ln(),
        floored,
    })
}

/// `Σ_j ln(X_j X_jᵀ)` over the rows of `x`.
fn per_row_log_energy<T: Scalar>(x: &RealMatrix<T>) -> Result<T> {
    let mut acc = T::zero();
    for j in 0..x.rows() {
        let e: T = x.row(j).iter().map(|&v| v * v).sum();
        if !(e > T::zero()) {
            return Err(Error::Degenerate(format!(
                "row {} is zero; per-row fit energy is undefined",
                j + 1
            )));
        }
        acc += e.ln();
    }
    Ok(acc)
}

/// Scores every `k = 1..m-1` and picks the minimizers of both bounds.
pub fn select_rank<T: Scalar>(
    x: &RealMatrix<T>,
    epsilon: Epsilon,
    gram_mode: GramMode,
) -> Result<ComplexityReport<T>> {
    check_selectable(x)?;
    let s = svd(x)?;
    select_rank_with_svd(x, &s, epsilon, gram_mode)
}

fn check_selectable<T: Scalar>(x: &RealMatrix<T>) -> Result<()> {
    if x.rows() < 2 || x.cols() < 2 {
        return Err(Error::InsufficientData(format!(
            "rank selection needs at least 2 rows and 2 columns, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    if x.is_zero() {
        return Err(Error::Degenerate(
            "all-zero matrix has no signal to rank".into(),
        ));
    }
    Ok(())
}

/// As [`select_rank`], reusing an existing decomposition of `x`.
pub fn select_rank_with_svd<T: Scalar>(
    x: &RealMatrix<T>,
    s: &SvdResult<T>,
    epsilon: Epsilon,
    gram_mode: GramMode,
) -> Result<ComplexityReport<T>> {
    check_selectable(x)?;
    let (n, m) = (x.rows(), x.cols());
    epsilon.validate_for(m)?;
    let log_fit = match gram_mode {
        GramMode::FullGram => {
            let g = x.gram().frobenius_sq();
            if !(g > T::zero()) || !g.is_finite() {
                return Err(Error::domain(format!(
                    "‖XᵀX‖²_F = {g} has no finite logarithm"
                )));
            }
            T::from_count(n) * g.ln()
        }
        GramMode::PerRowSum => per_row_log_energy(x)?,
    };
    let per_k = (1..m)
        .map(|k| terms_from_log_fit(s, log_fit, n, m, k, epsilon))
        .collect::<Result<Vec<_>>>()?;
    let k_lower_opt = argmin_smallest_k(per_k.iter().map(|t| (t.k, t.lower_total())))
        .expect("at least one candidate rank");
    let k_upper_opt = argmin_smallest_k(per_k.iter().map(|t| (t.k, t.upper_total())))
        .expect("at least one candidate rank");
    Ok(ComplexityReport {
        n,
        m,
        epsilon,
        gram_mode,
        per_k,
        k_lower_opt,
        k_upper_opt,
        k_bracket: (k_lower_opt.min(k_upper_opt), k_lower_opt.max(k_upper_opt)),
    })
}

/// Minimizing `k`; among equal values the smallest `k` wins, whatever the
/// iteration order.
pub fn argmin_smallest_k<T: Scalar>(scores: impl IntoIterator<Item = (usize, T)>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (k, v) in scores {
        best = match best {
            Some((bk, bv)) if bv < v || (bv == v && bk < k) => Some((bk, bv)),
            _ => Some((k, v)),
        };
    }
    best.map(|(k, _)| k)
}

/// `(upper − lower) / |lower|` per rank; `None` where the lower bound is zero.
pub fn bound_gap_ratio<T: Scalar>(r: &ComplexityReport<T>) -> Vec<(usize, Option<T>)> {
    r.per_k
        .iter()
        .map(|t| {
            let lower = t.lower_total();
            let ratio = if lower == T::zero() {
                None
            } else {
                Some((t.upper_total() - lower) / lower.abs())
            };
            (t.k, ratio)
        })
        .collect()
}
