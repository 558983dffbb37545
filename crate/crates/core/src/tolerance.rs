use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::DEFAULT_ORDER;

/// Numerical thresholds shared by the analysis pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Jet truncation order used for all pointwise evaluations.
    pub jet_order: usize,
    /// A point is flat when `|Y|_g <= flat * |nabla P|_g`.
    #[serde(alias = "tol_flat")]
    pub flat: f64,
    /// Relative tolerance of the trace condition `g^ab P_ab = K`.
    #[serde(alias = "tol_trace")]
    pub trace: f64,
    /// A root is accepted when the normalized `|P(t)|` is below this.
    #[serde(alias = "tol_root")]
    pub root: f64,
    /// Separation below which a resultant is treated as vanishing.
    #[serde(alias = "tol_res_low")]
    pub res_low: f64,
    /// Separation above which a resultant is treated as nonzero.
    #[serde(alias = "tol_res_high")]
    pub res_high: f64,
    /// Residual bound for closed-form candidates.
    #[serde(alias = "tol_residual")]
    pub residual: f64,
    /// Residual bound for candidates reconstructed on a tracking grid.
    pub tracked_residual: f64,
    /// `sigma` counts as zero when `|sigma| < sigma_zero * rho^(5/3)`.
    pub sigma_zero: f64,
    /// Relative norm of `M_ab` below which it counts as zero.
    pub m_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            jet_order: DEFAULT_ORDER,
            flat: 1e-10,
            trace: 1e-8,
            root: 1e-7,
            res_low: 1e-10,
            res_high: 1e-8,
            residual: 1e-9,
            tracked_residual: 1e-6,
            sigma_zero: 1e-9,
            m_zero: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("flat", self.flat),
            ("trace", self.trace),
            ("root", self.root),
            ("res_low", self.res_low),
            ("res_high", self.res_high),
            ("residual", self.residual),
            ("tracked_residual", self.tracked_residual),
            ("sigma_zero", self.sigma_zero),
            ("m_zero", self.m_zero),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "tolerance `{name}` must be positive and finite, got {v}"
                )));
            }
        }
        if self.res_low > self.res_high {
            return Err(Error::Config(format!(
                "res_low ({}) must not exceed res_high ({})",
                self.res_low, self.res_high
            )));
        }
        if self.jet_order < 4 {
            return Err(Error::Config(format!(
                "jet_order must be at least 4, got {}",
                self.jet_order
            )));
        }
        Ok(())
    }
}
