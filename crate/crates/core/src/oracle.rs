//! Closed-form means and parameter derivatives for linear networks
//! (immigration `∅ → A` at rate `b`, linear death `A → ∅` at rate `δ·x`).
//!
//! The mean solves `m' = b − δ m`, so
//! `m(t) = x0 e^{−δt} + (b/δ)(1 − e^{−δt})`.

use crate::error::{Error, Result};

/// Which partial derivative of the birth-death mean, with `θ_1 = b`, `θ_2 = δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partial {
    Value,
    D1,
    D2,
    D11,
    D12,
    D22,
}

impl std::str::FromStr for Partial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mean" | "value" => Self::Value,
            "d1" => Self::D1,
            "d2" => Self::D2,
            "d11" => Self::D11,
            "d12" | "d21" => Self::D12,
            "d22" => Self::D22,
            other => return Err(Error::Config(format!("unknown partial \"{other}\""))),
        })
    }
}

fn check_death(th2: f64) -> Result<()> {
    if th2 > 0.0 && th2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRate(th2))
    }
}

/// `E[x(t)]` for immigration rate `th1` and per-capita death rate `th2`.
pub fn linear_bd_mean(x0: f64, th1: f64, th2: f64, t: f64) -> Result<f64> {
    check_death(th2)?;
    let e = (-th2 * t).exp();
    Ok(x0 * e + th1 / th2 * (1.0 - e))
}

/// Immigration only: `x0 + th1·t`.
pub fn immigration_mean(x0: f64, th1: f64, t: f64) -> f64 {
    x0 + th1 * t
}

/// Partials of [`linear_bd_mean`] in `(th1, th2)`.
pub fn linear_bd_sens(x0: f64, th1: f64, th2: f64, t: f64, which: Partial) -> Result<f64> {
    check_death(th2)?;
    let e = (-th2 * t).exp();
    // g(δ) = (1 − e^{−δt})/δ and its first two derivatives
    let g = (1.0 - e) / th2;
    let g1 = (th2 * t * e - (1.0 - e)) / (th2 * th2);
    let g2 = (2.0 - e * (th2 * th2 * t * t + 2.0 * th2 * t + 2.0)) / th2.powi(3);
    Ok(match which {
        Partial::Value => x0 * e + th1 * g,
        Partial::D1 => g,
        Partial::D2 => -x0 * t * e + th1 * g1,
        Partial::D11 => 0.0,
        Partial::D12 => g1,
        Partial::D22 => x0 * t * t * e + th1 * g2,
    })
}

/// Mean of the network with immigration rate `θ_1 θ_2` and death rate `θ_3 x`.
pub fn product_birth_mean(x0: f64, theta: [f64; 3], t: f64) -> Result<f64> {
    linear_bd_mean(x0, theta[0] * theta[1], theta[2], t)
}

/// `∂² / ∂θ_1∂θ_2` of [`product_birth_mean`]: `(1 − e^{−θ_3 t})/θ_3`.
pub fn product_birth_mixed(theta: [f64; 3], t: f64) -> Result<f64> {
    linear_bd_sens(0.0, 0.0, theta[2], t, Partial::D1)
}

/// Four-point difference
/// `[m(θ+(e_i+e_j)ε) − m(θ+e_iε) − m(θ+e_jε) + m(θ)] / ε²` of a mean function.
pub fn fd_on_oracle<F>(i: usize, j: usize, eps: f64, mean_fn: F, theta: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let at = |steps: &[(usize, f64)]| {
        let mut th = theta.to_vec();
        for &(q, h) in steps {
            th[q] += h;
        }
        mean_fn(&th)
    };
    let v1 = at(&[(i, eps), (j, eps)])?;
    let v2 = at(&[(i, eps)])?;
    let v3 = at(&[(j, eps)])?;
    let v4 = at(&[])?;
    Ok((v1 - v2 - v3 + v4) / (eps * eps))
}
