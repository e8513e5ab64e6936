use super::{check_modulation_degree, Field};
use crate::error::{Error, Result};

/// One sinusoid `amplitude * sin(frequency * t)` of a field's spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierComponent {
    pub frequency: f64,
    pub amplitude: f64,
}

/// Period-averaged squared modulation envelope, `(3/8)(4/3 - M)^2 + 1/3`.
///
/// This is the factor by which amplitude modulation of depth `M` reduces the
/// mean field power.
pub fn power_suppression_factor(modulation_degree: f64) -> Result<f64> {
    check_modulation_degree(modulation_degree)?;
    let d = 4.0 / 3.0 - modulation_degree;
    Ok(0.375 * d * d + 1.0 / 3.0)
}

/// Field-dressed mass `m* = m sqrt(1 + e^2 <A^2> / m^2)` in units of `m`.
///
/// `<A^2>` is the variance of `eA` over the field's averaging window (flat top
/// for modulated fields, central-pulse FWHM for trains). A constant offset of
/// `A` is a shift of canonical momentum and does not dress the mass, so the
/// window mean is removed.
pub fn effective_mass(field: &Field) -> Result<f64> {
    Ok((1.0 + mean_square_potential(field)?).sqrt())
}

/// `<(eA - <eA>)^2>` over the averaging window, in units of `m^2`.
pub fn mean_square_potential(field: &Field) -> Result<f64> {
    let Some((a, b)) = field.config().averaging_window() else {
        return Ok(0.0);
    };
    if !(b > a) {
        return Err(Error::config(
            "field",
            "averaging window is empty (superposed fields have no common flat top)",
        ));
    }
    let Some(table) = field.table() else {
        return Ok(0.0);
    };
    let (m1, m2) = table.moments(a, b);
    let len = b - a;
    let mean = m1 / len;
    Ok((m2 / len - mean * mean).max(0.0))
}
