//! Sensitivity estimators.
//!
//! * [`sample_second_order`]: one unbiased realization of `∂²Ψ/∂θ_i∂θ_j`.
//! * [`sample_first_order`]: one unbiased realization of `∂Ψ/∂θ_q` (Poisson
//!   path form).
//! * [`sample_fd_second_order`]: the four-point finite-difference baseline.
//!
//! Along a simulated path, each visited state `x = X(σ_l)` with exit rate
//! `λ_0` contributes, for every reaction `k`,
//!
//! ```text
//! ∂λ_k · Δ_{ζ_k} f(x) · (Δt_l − Γ_l w_l)  +  Γ_l · sign(∂λ_k) · ρ_kl · Ŷ_kl / c
//! ```
//!
//! where `w_l = 1/λ_0`, `γ_l ~ Exp(λ_0)`, `Γ_l = 1{γ_l < t − σ_l}`,
//! `ρ_kl ~ Poisson(c w_l |∂λ_k|)` and `Ŷ_kl` is an unbiased estimate of a
//! difference between the chains started at `x + ζ_k` and `x`, evaluated
//! `t − σ_l − γ_l` time units ahead. For the second-order estimator `∂λ_k` is
//! `∂²λ_k/∂θ_i∂θ_j` (with `Ŷ` the output difference), `∂λ_k/∂θ_i` (with `Ŷ`
//! the `θ_j`-sensitivity difference) or `∂λ_k/∂θ_j` (with the `θ_i` one). In an absorbing state (`λ_0 = 0`) the
//! probe time is drawn uniformly on the remaining horizon instead, with
//! `Γ_l = 1` and `w_l = t − σ_l`; this keeps every term unbiased there.
//!
//! Sub-estimates are only simulated when their Poisson count is positive.

use crate::error::{Error, Result};
use crate::model::{Kinetics, OutputFunction, Parameters, ReactionNetwork};
use crate::rng::StreamKey;
use crate::simulate::{self, Channel, CoupledTrajectory, JumpRecord};

// stream-key coordinates under a sample (or sub-estimate) key
const PATH: u64 = 0;
const JUMPS: u64 = 1;
// under a jump key
const GAMMA: u64 = 0;
const RHO: u64 = 1;
const PAIR: u64 = 2;
// under a pair key
const INNER: u64 = 3;

const SLOT_I: u64 = 0;
const SLOT_J: u64 = 1;
const SLOT_IJ: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    /// Horizon.
    pub t: f64,
    /// Normalizing constant; sets how often sub-estimates are launched.
    pub c: f64,
    pub i: usize,
    pub j: usize,
    pub n_samples: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            c: 1.0,
            i: 0,
            j: 0,
            n_samples: 10_000,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self, net: &ReactionNetwork) -> Result<()> {
        check_horizon(self.t)?;
        check_c(self.c)?;
        check_param(net, self.i)?;
        check_param(net, self.j)
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("horizon t must be finite and nonnegative, got {t}")))
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("normalizing constant c must be positive, got {c}")))
    }
}

fn check_param(net: &ReactionNetwork, q: usize) -> Result<()> {
    if q < net.param_count() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "parameter index {q} out of range for {} parameters",
            net.param_count()
        )))
    }
}

/// `Γ = 1{γ < t − σ}`.
pub fn gamma_indicator(gamma: f64, sigma: f64, t: f64) -> u8 {
    u8::from(gamma < t - sigma)
}

/// Mean of the Poisson launch count: `c · |∂λ| / λ_0`.
pub fn poisson_channel_mean(c: f64, lambda0: f64, deriv_abs: f64) -> f64 {
    c * deriv_abs / lambda0
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Exponential probe after one jump.
#[derive(Clone, Copy, Debug)]
struct Probe {
    gamma: f64,
    hit: bool,
    weight: f64,
}

impl Probe {
    fn draw(lambda0: f64, remaining: f64, key: &StreamKey) -> Self {
        let u = key.stream().uniform();
        if lambda0 > 0.0 {
            let gamma = -u.ln() / lambda0;
            Self {
                gamma,
                hit: gamma_indicator(gamma, 0.0, remaining) == 1,
                weight: 1.0 / lambda0,
            }
        } else {
            Self {
                gamma: remaining * (1.0 - u),
                hit: remaining > 0.0,
                weight: remaining,
            }
        }
    }

    /// `Δt − Γ w`.
    fn compensated(&self, dt: f64) -> f64 {
        if self.hit {
            dt - self.weight
        } else {
            dt
        }
    }

    fn launches(&self, c: f64, deriv: f64, key: &StreamKey) -> Result<u64> {
        if !self.hit || deriv == 0.0 {
            return Ok(0);
        }
        key.stream().poisson(c * self.weight * deriv.abs())
    }
}

struct Estimator<'a> {
    kin: Kinetics<'a>,
    f: &'a OutputFunction,
    c: f64,
}

impl<'a> Estimator<'a> {
    fn new(net: &'a ReactionNetwork, theta: &'a Parameters, f: &'a OutputFunction, c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self {
            kin: Kinetics::new(net, theta)?,
            f,
            c,
        })
    }

    fn net(&self) -> &'a ReactionNetwork {
        self.kin.network()
    }

    /// First-order Poisson-path sum over a path on `[0, horizon]`. `keys[l]`
    /// names the stream coordinates of record `l` (defaults to `l`).
    fn first_order_over(
        &self,
        q: usize,
        records: &[JumpRecord],
        keys: Option<&[u64]>,
        horizon: f64,
        base: &StreamKey,
    ) -> Result<f64> {
        let net = self.net();
        let kk = net.reactions();
        let mut grads = vec![0.0; kk];
        let mut acc = 0.0;
        for (l, rec) in records.iter().enumerate() {
            let x = &rec.state;
            let mut any = false;
            for (k, g) in grads.iter_mut().enumerate() {
                *g = self.kin.gradient(k, x, q);
                any |= *g != 0.0;
            }
            if !any {
                continue;
            }
            let dt = JumpRecord::interval(records, l, horizon);
            let remaining = horizon - rec.sigma;
            let jump = base.child(JUMPS).child(keys.map_or(l as u64, |ks| ks[l]));
            let probe = Probe::draw(rec.lambda0, remaining, &jump.child(GAMMA));
            for (k, &g) in grads.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let zeta = net.stoich(k);
                acc += g * self.f.delta(x, zeta)? * probe.compensated(dt);
                let rho = probe.launches(self.c, g, &jump.child(RHO).child(k as u64).child(SLOT_I))?;
                if rho > 0 {
                    let d = simulate::output_difference(
                        &self.kin,
                        x,
                        zeta,
                        remaining - probe.gamma,
                        self.f,
                        &jump.child(PAIR).child(k as u64),
                    )?;
                    acc += sign(g) * rho as f64 * d / self.c;
                }
            }
        }
        Ok(acc)
    }

    /// `ŝ^{(q)}` on `Z1` minus `ŝ^{(q)}` on `Z2`, both read off one coupled
    /// trajectory. Draws at a joint event are keyed by the event index, so
    /// jumps shared by the two chains use common random numbers.
    fn sens_difference_on(&self, traj: &CoupledTrajectory, q: usize, base: &StreamKey) -> Result<f64> {
        let (r1, k1) = traj.component(&self.kin, Channel::First)?;
        let (r2, k2) = traj.component(&self.kin, Channel::Second)?;
        let s1 = self.first_order_over(q, &r1, Some(&k1), traj.duration, base)?;
        let s2 = self.first_order_over(q, &r2, Some(&k2), traj.duration, base)?;
        Ok(s1 - s2)
    }

    fn second_order(&self, x0: &[i64], t: f64, i: usize, j: usize, key: &StreamKey) -> Result<f64> {
        let net = self.net();
        let kk = net.reactions();
        let records = simulate::path(&self.kin, x0, t, &mut key.child(PATH).stream())?;
        let mut gi = vec![0.0; kk];
        let mut gj = vec![0.0; kk];
        let mut gij = vec![0.0; kk];
        let mut acc = 0.0;
        for (l, rec) in records.iter().enumerate() {
            let x = &rec.state;
            let mut any = false;
            for k in 0..kk {
                gi[k] = self.kin.gradient(k, x, i);
                gj[k] = self.kin.gradient(k, x, j);
                gij[k] = self.kin.hessian(k, x, i, j);
                any |= gi[k] != 0.0 || gj[k] != 0.0 || gij[k] != 0.0;
            }
            if !any {
                continue;
            }
            let dt = JumpRecord::interval(&records, l, t);
            let remaining = t - rec.sigma;
            let jump = key.child(JUMPS).child(l as u64);
            let probe = Probe::draw(rec.lambda0, remaining, &jump.child(GAMMA));
            for k in 0..kk {
                let zeta = net.stoich(k);
                if gij[k] != 0.0 {
                    acc += gij[k] * self.f.delta(x, zeta)? * probe.compensated(dt);
                }
                if !probe.hit {
                    continue;
                }
                let rho_key = jump.child(RHO).child(k as u64);
                let rho_i = probe.launches(self.c, gi[k], &rho_key.child(SLOT_I))?;
                let rho_j = probe.launches(self.c, gj[k], &rho_key.child(SLOT_J))?;
                let rho_ij = probe.launches(self.c, gij[k], &rho_key.child(SLOT_IJ))?;
                if rho_i == 0 && rho_j == 0 && rho_ij == 0 {
                    continue;
                }
                // one coupled pair per (k, l), shared by every sub-estimate
                let pair = jump.child(PAIR).child(k as u64);
                let z1 = crate::model::shifted(x, zeta)?;
                let traj = simulate::simulate_coupled_trajectory(
                    &self.kin,
                    &z1,
                    x,
                    remaining - probe.gamma,
                    &mut pair.stream(),
                )?;
                let mut term = 0.0;
                if rho_ij > 0 {
                    let d = self.f.eval(&traj.end.z1) - self.f.eval(&traj.end.z2);
                    term += sign(gij[k]) * rho_ij as f64 * d;
                }
                // a launch on ∂λ_k/∂θ_i needs the θ_j-sensitivity difference and vice versa
                let mut s_j = None;
                if rho_i > 0 {
                    let s = self.sens_difference_on(&traj, j, &pair.child(INNER).child(j as u64))?;
                    s_j = Some(s);
                    term += sign(gi[k]) * rho_i as f64 * s;
                }
                if rho_j > 0 {
                    let s = match s_j {
                        Some(s) if i == j => s,
                        _ => self.sens_difference_on(&traj, i, &pair.child(INNER).child(i as u64))?,
                    };
                    term += sign(gj[k]) * rho_j as f64 * s;
                }
                acc += term / self.c;
            }
        }
        Ok(acc)
    }
}

/// One realization of the unbiased second-order estimator for
/// `∂²E[f(X(t))]/∂θ_i∂θ_j` from `x0`.
pub fn sample_second_order(
    net: &ReactionNetwork,
    x0: &[i64],
    f: &OutputFunction,
    theta: &Parameters,
    config: &EstimatorConfig,
    key: &StreamKey,
) -> Result<f64> {
    config.validate(net)?;
    simulate::check_state(net, x0)?;
    Estimator::new(net, theta, f, config.c)?.second_order(x0, config.t, config.i, config.j, key)
}

/// One realization of the first-order Poisson-path estimator for
/// `∂E[f(X(t))]/∂θ_q` from `x0`.
#[allow(clippy::too_many_arguments)]
pub fn sample_first_order(
    net: &ReactionNetwork,
    x0: &[i64],
    f: &OutputFunction,
    theta: &Parameters,
    q: usize,
    t: f64,
    c: f64,
    key: &StreamKey,
) -> Result<f64> {
    check_horizon(t)?;
    check_param(net, q)?;
    simulate::check_state(net, x0)?;
    let est = Estimator::new(net, theta, f, c)?;
    let records = simulate::path(&est.kin, x0, t, &mut key.child(PATH).stream())?;
    est.first_order_over(q, &records, None, t, key)
}

/// `Ŝ^{(q)}`: difference of first-order estimates for the chains started at
/// `x + ζ` and `x`, run on one split-coupled trajectory of length `duration`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_sens_difference(
    net: &ReactionNetwork,
    x_base: &[i64],
    zeta: &[i64],
    theta: &Parameters,
    f: &OutputFunction,
    q: usize,
    duration: f64,
    c: f64,
    key: &StreamKey,
) -> Result<f64> {
    check_horizon(duration)?;
    check_param(net, q)?;
    simulate::check_state(net, x_base)?;
    let est = Estimator::new(net, theta, f, c)?;
    let z1 = crate::model::shifted(x_base, zeta)?;
    let traj = simulate::simulate_coupled_trajectory(&est.kin, &z1, x_base, duration, &mut key.stream())?;
    est.sens_difference_on(&traj, q, &key.child(INNER).child(q as u64))
}

/// Four-point finite difference
/// `[f(X_{θ+(e_i+e_j)ε}) − f(X_{θ+e_iε}) − f(X_{θ+e_jε}) + f(X_θ)] / ε²`
/// with all four paths driven by the same per-reaction streams.
#[allow(clippy::too_many_arguments)]
pub fn sample_fd_second_order(
    net: &ReactionNetwork,
    x0: &[i64],
    f: &OutputFunction,
    theta: &Parameters,
    i: usize,
    j: usize,
    t: f64,
    eps: f64,
    key: &StreamKey,
) -> Result<f64> {
    let fd = FiniteDifference::new(net, theta, i, j, eps)?;
    fd.sample(x0, f, t, key)
}

/// Perturbed parameter sets for the finite-difference baseline.
#[derive(Debug, Clone)]
pub struct FiniteDifference<'a> {
    net: &'a ReactionNetwork,
    thetas: [Parameters; 4],
    eps: f64,
}

impl<'a> FiniteDifference<'a> {
    pub fn new(net: &'a ReactionNetwork, theta: &Parameters, i: usize, j: usize, eps: f64) -> Result<Self> {
        check_param(net, i)?;
        check_param(net, j)?;
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("eps must be positive, got {eps}")));
        }
        let thetas = [
            theta.perturbed(&[(i, eps), (j, eps)]),
            theta.perturbed(&[(i, eps)]),
            theta.perturbed(&[(j, eps)]),
            theta.clone(),
        ];
        for th in &thetas {
            Kinetics::new(net, th)?;
        }
        Ok(Self { net, thetas, eps })
    }

    pub fn sample(&self, x0: &[i64], f: &OutputFunction, t: f64, key: &StreamKey) -> Result<f64> {
        check_horizon(t)?;
        simulate::check_state(self.net, x0)?;
        let mut values = [0.0; 4];
        for (v, th) in values.iter_mut().zip(&self.thetas) {
            let kin = Kinetics::new(self.net, th)?;
            *v = f.eval(&simulate::simulate_endpoint_rtc(&kin, x0, t, key)?);
        }
        Ok((values[0] - values[1] - values[2] + values[3]) / (self.eps * self.eps))
    }
}

/// One realization of `f(X_θ(t))`.
pub fn sample_output(
    net: &ReactionNetwork,
    x0: &[i64],
    f: &OutputFunction,
    theta: &Parameters,
    t: f64,
    key: &StreamKey,
) -> Result<f64> {
    simulate::check_state(net, x0)?;
    let kin = Kinetics::new(net, theta)?;
    let records = simulate::path(&kin, x0, t, &mut key.child(PATH).stream())?;
    Ok(f.eval(&records.last().expect("a path has at least one record").state))
}
