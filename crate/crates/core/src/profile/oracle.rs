//! Independent profile oracle for the Thirring family. The density ρ = v² + u²
//! satisfies the separable equation ρ′² = 4ρ²(m² − (ω + ρᵏ/(k+1))²), so
//! x(ρ) is a quadrature and ρ(x) follows by inverting it. No ODE solver and
//! no collocation are involved.

use roots::{find_root_brent, SimpleConvergency};

use crate::error::{Error, Result};
use crate::model::{Family, ModelSpec};

const PANELS: usize = 2000;

/// x as a function of y = ln ρ. With y = y₀ − w² the integrand is smooth up
/// to the turning point, where it tends to 1/√(2mk(m − ω)).
fn x_of_log_rho(model: &ModelSpec, omega: f64, y: f64) -> f64 {
    let (m, k) = (model.m, model.k);
    let rho0k = (k + 1.0) * (m - omega);
    let y0 = rho0k.ln() / k;
    let top = (y0 - y).max(0.0).sqrt();
    if top == 0.0 {
        return 0.0;
    }
    let f = |w: f64| {
        if w == 0.0 {
            return 1.0 / (2.0 * m * k * (m - omega)).sqrt();
        }
        // m − a = (ρ₀ᵏ − ρᵏ)/(k+1), written without cancellation
        let lower = -rho0k * (-k * w * w).exp_m1() / (k + 1.0);
        let upper = 2.0 * m - lower;
        w / (lower * upper).sqrt()
    };
    let h = top / PANELS as f64;
    let mut s = f(0.0) + f(top);
    for i in 1..PANELS {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// ρ(x) for the Thirring family at the given abscissae.
pub fn mtm_density(model: &ModelSpec, omega: f64, xs: &[f64]) -> Result<Vec<f64>> {
    if model.family != Family::Mtm {
        return Err(Error::Parameter("the density quadrature applies to the Thirring family only".into()));
    }
    model.check_gap(omega)?;
    let (m, k) = (model.m, model.k);
    let y0 = ((k + 1.0) * (m - omega)).ln() / k;
    let kappa = (m * m - omega * omega).sqrt();
    xs.iter()
        .map(|&x| {
            let x = x.abs();
            if x == 0.0 {
                return Ok(y0.exp());
            }
            let lo = y0 - 2.0 * kappa * x - 60.0;
            let mut conv = SimpleConvergency { eps: 1e-14, max_iter: 200 };
            let y = find_root_brent(lo, y0, |y| x_of_log_rho(model, omega, y) - x, &mut conv)
                .map_err(|e| Error::RootSearch(e.to_string()))?;
            Ok(y.exp())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_model;

    #[test]
    fn peak_and_symmetry() {
        let model = make_model(Family::Mtm, 1.0, 1.0).unwrap();
        let r = mtm_density(&model, 0.5, &[0.0, -1.0, 1.0]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-14);
        assert_eq!(r[1], r[2]);
        assert!(r[1] < r[0]);
        assert!(mtm_density(&make_model(Family::Gn, 1.0, 1.0).unwrap(), 0.5, &[0.0]).is_err());
    }

    #[test]
    fn tail_decays_at_twice_kappa() {
        let model = make_model(Family::Mtm, 1.0, 1.0).unwrap();
        let r = mtm_density(&model, 0.5, &[10.0, 11.0]).unwrap();
        let rate = (r[0] / r[1]).ln();
        assert!((rate - 2.0 * 0.75f64.sqrt()).abs() < 1e-6, "rate {rate}");
    }
}
