//! Choosing the number of principal components by minimum description length.
//!
//! Each candidate rank `k` is scored with lower and upper bounds on the
//! normalized-maximum-likelihood code length of a `k`-component PCA model,
//! obtained by reducing the problem to linear regression with a quantized,
//! known loadings matrix. The crate also carries the classical Kaiser and
//! Kneedle heuristics, synthetic data generators, and exact finite-model
//! checks of the parameter-elimination sandwich the reduction relies on.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the tolerances in the test-suite
//! assume.
//!
//! ```
//! use nml_pca::{generate_lin, select_rank, Epsilon, GramMode, Matrix, SyntheticSpec};
//!
//! let x: Matrix = generate_lin(&SyntheticSpec::lin(200, 12, 4, 1), None).unwrap();
//! let report = select_rank(&x, Epsilon::default_for(12), GramMode::FullGram).unwrap();
//! assert!(report.bracket_contains(4));
//! ```

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod complexity;
pub mod datasets;
pub mod error;
pub mod matrix;
pub mod quantization;
pub mod scalar;

pub use baselines::{kaiser, kneedle, scree, ScreeCurve};
pub use complexity::{
    bound_gap_ratio, regression_nml, select_rank, select_rank_with_svd,
    stochastic_complexity_terms, ComplexityReport, ComplexityTerms, GramMode, RegressionNmlInputs,
};
pub use datasets::{
    correlation_eigenvalues, generate_lin, load_csv, load_matrix_csv, returns_transform,
    standardize_columns, PriceTable, SyntheticSpec,
};
pub use error::{Error, Result};
pub use matrix::{frobenius_sq, svd, tail_energy, truncate, RealMatrix, SvdResult};
pub use quantization::{
    inner_product_perturbation_bound, lemma2_log_count_bound, nml_numerator_integral, quantize,
    verify_lemma1, DiscreteModel, Epsilon, QuantizedLoadings,
};
pub use scalar::Scalar;

pub type Matrix = RealMatrix<f64>;
pub type Svd = SvdResult<f64>;
pub type Terms = ComplexityTerms<f64>;
pub type Report = ComplexityReport<f64>;
pub type Scree = ScreeCurve<f64>;
pub type Prices = PriceTable<f64>;
pub type Model = DiscreteModel<f64>;

pub type Matrix32 = RealMatrix<f32>;
pub type Svd32 = SvdResult<f32>;
pub type Report32 = ComplexityReport<f32>;
