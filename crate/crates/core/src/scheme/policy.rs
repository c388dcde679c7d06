use crate::error::{Error, Result};
use crate::mesh::Cell;

/// How the stabilization coefficient `nu_K` is chosen per cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PenalizationPolicy {
    /// `nu_K = nu0 / m(K)`.
    FixedOverMeasure { nu0: f64 },
    /// `nu_K = nu0 * diam(K)^beta`.
    PowerOfDiameter { nu0: f64, beta: f64 },
    /// `nu_K = 0`; only valid on triangles.
    Zero,
}

impl Default for PenalizationPolicy {
    fn default() -> Self {
        PenalizationPolicy::FixedOverMeasure { nu0: 1e-9 }
    }
}

impl PenalizationPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PenalizationPolicy::FixedOverMeasure { nu0 } => {
                if !(nu0 > 0.0 && nu0.is_finite()) {
                    return Err(Error::Config(format!(
                        "penalization constant must be positive, got {nu0}"
                    )));
                }
            }
            PenalizationPolicy::PowerOfDiameter { nu0, beta } => {
                if !(nu0 > 0.0 && nu0.is_finite() && beta.is_finite()) {
                    return Err(Error::Config(format!(
                        "invalid power-of-diameter penalization nu0={nu0}, beta={beta}"
                    )));
                }
                if !(beta > -2.0 && beta < 0.0) {
                    log::warn!(
                        "penalization exponent {beta} is outside (-2, 0); convergence is not guaranteed"
                    );
                }
            }
            PenalizationPolicy::Zero => {}
        }
        Ok(())
    }

    pub fn nu(&self, cell: &Cell) -> f64 {
        match *self {
            PenalizationPolicy::FixedOverMeasure { nu0 } => nu0 / cell.area,
            PenalizationPolicy::PowerOfDiameter { nu0, beta } => nu0 * cell.diameter.powf(beta),
            PenalizationPolicy::Zero => 0.0,
        }
    }
}
