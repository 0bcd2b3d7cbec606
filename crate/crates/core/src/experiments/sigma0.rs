//! `sigma0^2 = 2 E[W^2 exp(|W| / 3)]` with `W = 1 - Z^2`, `Z ~ N(0, 1)`.

use core::f64::consts::PI;

use crate::quad::GaussLegendre;

const ORDER: usize = 32;
const DEFAULT_PANELS: usize = 16;
/// Beyond this the integrand is below `exp(-260)`.
const UPPER: f64 = 40.0;

fn integrand(z: f64) -> f64 {
    let w = 1.0 - z * z;
    let density = libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI);
    w * w * libm::exp(w.abs() / 3.0) * density
}

/// Composite Gauss-Legendre with `panels` panels on each of `[0, 1]` and
/// `[1, 40]`, split at the kink of `|1 - z^2|` and doubled by symmetry.
pub fn sigma0_quadrature(panels: usize) -> f64 {
    let gl = GaussLegendre::new(ORDER);
    let panels = panels.max(1);
    let half = gl.integrate_panels(integrand, 0.0, 1.0, panels)
        + gl.integrate_panels(integrand, 1.0, UPPER, panels);
    2.0 * 2.0 * half
}

pub fn sigma0_constant() -> f64 {
    sigma0_quadrature(DEFAULT_PANELS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_high_precision_value() {
        assert!((sigma0_constant() - 55.075_106_898_635_3).abs() < 1e-9);
    }

    #[test]
    fn converged_under_doubling() {
        let a = sigma0_quadrature(DEFAULT_PANELS);
        let b = sigma0_quadrature(2 * DEFAULT_PANELS);
        assert!(((a - b) / b).abs() < 1e-8);
        assert!(a > 4.0);
    }
}
