//! Special functions.

mod complex_erf;
mod dawson;
mod hermite;
mod incgamma;
mod normal;

pub use complex_erf::{erf_complex, erf_complex_derivative, refine_erf_zero, ERF_DOMAIN};
pub use dawson::{dawson, dawson_unchecked};
pub use hermite::{hermite_eval, hermite_prob, hermite_zeros, PolyCoeffs, HERMITE_MAX_DEGREE};
pub use incgamma::{inv_lower_gamma, ln_gamma, reg_lower_gamma, reg_upper_gamma};
pub use normal::{norm_cdf, norm_pdf, norm_quantile_approx, std_normal, LN_SQRT_2PI};

/// A point of the complex plane.
pub type ComplexPoint = num_complex::Complex64;

/// Erf zeros in the first quadrant, to the ten significant digits
/// commonly tabulated. Use [`refine_erf_zero`] for full precision.
pub const ERF_ZEROS_TABULATED: [(f64, f64); 3] =
    [(1.4506161632, 1.8809430002), (2.2446592738, 2.6165751407), (2.8397410469, 3.1756280996)];
