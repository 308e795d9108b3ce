use crate::scene::{GridSpec, PropertyGradient};
use serde::{Deserialize, Serialize};

/// Keeps gradient entries whose cell centers lie within `radius` of `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

impl MaskSpec {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) <= self.radius
    }
}

/// Zeroes both gradient channels outside the mask; entries inside are untouched.
pub fn apply_sensitivity_mask(grad: &mut PropertyGradient, mask: &MaskSpec, grid: &GridSpec) {
    for (i, c) in grid.centers().enumerate() {
        if !mask.contains(c) {
            grad.d_eps_r[i] = 0.0;
            grad.d_sigma_e[i] = 0.0;
        }
    }
}
