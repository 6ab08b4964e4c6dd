use alloc::string::String;
use alloc::vec::Vec;

use super::Matrix;
use crate::{Error, Result};

/// Floor on the denominator of [`relative_error`].
pub const GRAD_EPS_FLOOR: f64 = 1e-10;

/// A named parameter matrix handed to [`finite_diff_check`].
#[derive(Debug, Clone)]
pub struct Param {
    /// Display name used in the report.
    pub name: String,
    /// Current value.
    pub value: Matrix,
}

impl Param {
    /// Creates a named parameter.
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        Self {
            name: name.into(),
            value,
        }
    }
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest relative error over all checked entries.
    pub max_relative_error: f64,
    /// Largest relative error per parameter, in input order.
    pub per_parameter: Vec<(String, f64)>,
}

/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-10)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = libm::fabs(analytic)
        .max(libm::fabs(numeric))
        .max(GRAD_EPS_FLOOR);
    libm::fabs(analytic - numeric) / denom
}

/// Compares analytic gradients with central differences
/// `(f(p + h) − f(p − h)) / 2h`, entry by entry.
///
/// `loss` receives the full parameter list (one entry perturbed at a time)
/// in the order of `params`.
pub fn finite_diff_check<F>(
    params: &[Param],
    analytic: &[Matrix],
    h: f64,
    loss: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Matrix]) -> Result<f64>,
{
    check(params, analytic, h, false, loss)
}

/// Like [`finite_diff_check`], with the step chosen per entry.
///
/// Central differences `D_j` are taken at `h_max / 2^j`, `j = 0..LADDER`,
/// and combined into Richardson estimates `R_j = (4·D_{j+1} − D_j) / 3`,
/// which cancel the `O(h²)` term. The estimate whose neighbour agrees with
/// it most closely is used. Large steps that cross a kink and small steps
/// lost in roundoff both disagree with their neighbours, so the selection
/// lands on the stable stretch without looking at the analytic value.
pub fn finite_diff_check_adaptive<F>(
    params: &[Param],
    analytic: &[Matrix],
    h_max: f64,
    loss: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Matrix]) -> Result<f64>,
{
    check(params, analytic, h_max, true, loss)
}

/// Number of step halvings tried by [`finite_diff_check_adaptive`].
const LADDER: usize = 9;

fn check<F>(
    params: &[Param],
    analytic: &[Matrix],
    h: f64,
    extrapolate: bool,
    mut loss: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Matrix]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Config(alloc::format!("step h must be positive, got {h}")));
    }
    if params.len() != analytic.len() {
        return Err(Error::Config(alloc::format!(
            "{} parameters but {} gradients",
            params.len(),
            analytic.len()
        )));
    }
    for (p, g) in params.iter().zip(analytic) {
        if p.value.shape() != g.shape() {
            return Err(Error::Shape {
                op: "finite_diff_check",
                left: p.value.shape(),
                right: g.shape(),
            });
        }
    }
    let mut work: Vec<Matrix> = params.iter().map(|p| p.value.clone()).collect();
    let mut per_parameter = Vec::with_capacity(params.len());
    let mut max_relative_error: f64 = 0.0;
    for (pi, param) in params.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for e in 0..param.value.len() {
            let orig = work[pi].data()[e];
            let mut central = |step: f64| -> Result<f64> {
                work[pi].data_mut()[e] = orig + step;
                let plus = loss(&work)?;
                work[pi].data_mut()[e] = orig - step;
                let minus = loss(&work)?;
                work[pi].data_mut()[e] = orig;
                if !plus.is_finite() || !minus.is_finite() {
                    return Err(Error::NonFinite("finite_diff_check loss"));
                }
                Ok((plus - minus) / (2.0 * step))
            };
            let numeric = if extrapolate {
                let mut d = [0.0; LADDER];
                let mut step = h;
                for dj in d.iter_mut() {
                    *dj = central(step)?;
                    step /= 2.0;
                }
                let r: Vec<f64> = d.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
                let best = r
                    .windows(2)
                    .enumerate()
                    .min_by(|(_, x), (_, y)| {
                        libm::fabs(x[1] - x[0]).total_cmp(&libm::fabs(y[1] - y[0]))
                    })
                    .map_or(0, |(j, _)| j);
                r[best + 1]
            } else {
                central(h)?
            };
            worst = worst.max(relative_error(analytic[pi].data()[e], numeric));
        }
        max_relative_error = max_relative_error.max(worst);
        per_parameter.push((param.name.clone(), worst));
    }
    Ok(GradCheckReport {
        max_relative_error,
        per_parameter,
    })
}
