//! Tolerance policy attached to every algebra instance.

use serde::{Deserialize, Serialize};

/// Numerical tolerances. All strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative residual accepted by identity checks and factorizations.
    #[serde(default = "default_rel_residual")]
    pub rel_residual: f64,
    /// Minimum relative smallest singular value for invertibility.
    #[serde(default = "default_inv_threshold")]
    pub inv_threshold: f64,
    /// Positivity / realness margin for spectra.
    #[serde(default = "default_spec_margin")]
    pub spec_margin: f64,
    /// Maximum trailing Fourier band energy fraction for loop elements.
    #[serde(default = "default_loop_smoothness")]
    pub loop_smoothness: f64,
}

fn default_rel_residual() -> f64 {
    1e-9
}
fn default_inv_threshold() -> f64 {
    1e-10
}
fn default_spec_margin() -> f64 {
    1e-10
}
fn default_loop_smoothness() -> f64 {
    1e-8
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rel_residual: default_rel_residual(),
            inv_threshold: default_inv_threshold(),
            spec_margin: default_spec_margin(),
            loop_smoothness: default_loop_smoothness(),
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        for (name, v) in [
            ("rel_residual", self.rel_residual),
            ("inv_threshold", self.inv_threshold),
            ("spec_margin", self.spec_margin),
            ("loop_smoothness", self.loop_smoothness),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(crate::error::FlagFactError::Invalid(format!(
                    "tolerance {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ToleranceConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive() {
        let mut t = ToleranceConfig::default();
        t.spec_margin = 0.0;
        assert!(t.validate().is_err());
    }
}
