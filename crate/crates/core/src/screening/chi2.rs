use statrs::function::erf::erfc;

use super::ScreeningError;

/// Upper tail `P(X > x)` of the chi-square distribution with one degree of
/// freedom, `erfc(sqrt(x / 2))`.
pub fn chi_square_sf_1df(x: f64) -> Result<f64, ScreeningError> {
    if !(x >= 0.0) {
        return Err(ScreeningError::Domain(format!("chi-square statistic {x} is negative or NaN")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(erfc((x / 2.0).sqrt()))
}
