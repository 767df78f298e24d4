//! Exact path simulation: the direct-method SSA, the split-coupled pair
//! `(Z1, Z2)`, and a random-time-change simulator used for common random
//! numbers across parameter perturbations.

use crate::error::{Error, Result};
use crate::model::{apply_stoich, shifted, Kinetics, OutputFunction, Parameters, ReactionNetwork, State};
use crate::rng::{Stream, StreamKey};

/// One holding interval of a simulated path.
///
/// The process sits in `state` from `sigma` until the next record's `sigma`
/// (or the horizon, for the last record). `reaction` is the reaction that
/// ends the interval; it is `None` for the final, truncated interval.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpRecord {
    pub sigma: f64,
    pub state: State,
    pub lambda0: f64,
    pub reaction: Option<usize>,
}

impl JumpRecord {
    /// Length of interval `l` of `path` on the horizon `t`.
    pub fn interval(path: &[JumpRecord], l: usize, t: f64) -> f64 {
        match path.get(l + 1) {
            Some(next) => next.sigma - path[l].sigma,
            None => t - path[l].sigma,
        }
    }
}

/// Number of jumps strictly before the horizon (`η_t`).
pub fn jump_count(path: &[JumpRecord]) -> usize {
    path.len().saturating_sub(1)
}

/// Smallest `k` with `Σ_{m ≤ k} λ_m / λ_0 ≥ r2`, for `r2 ∈ (0, 1]`.
pub fn select_reaction(lambdas: &[f64], lambda0: f64, r2: f64) -> usize {
    let mut cum = 0.0;
    let mut last_active = 0;
    for (k, &l) in lambdas.iter().enumerate() {
        if l > 0.0 {
            last_active = k;
            cum += l / lambda0;
            if cum >= r2 {
                return k;
            }
        }
    }
    // rounding left the cumulative sum just below r2
    last_active
}

/// One direct-method step from given uniforms: `(−ln r1 / λ_0, k)`, or `None`
/// when `λ_0 = 0`.
pub fn ssa_step_from(lambdas: &[f64], r1: f64, r2: f64) -> Option<(f64, usize)> {
    let lambda0: f64 = lambdas.iter().sum();
    if lambda0 <= 0.0 {
        return None;
    }
    Some((-r1.ln() / lambda0, select_reaction(lambdas, lambda0, r2)))
}

/// Draws the next time increment and reaction; `None` signals an absorbing state.
pub fn ssa_step(
    net: &ReactionNetwork,
    x: &[i64],
    theta: &Parameters,
    stream: &mut Stream,
) -> Result<Option<(f64, usize)>> {
    let kin = Kinetics::new(net, theta)?;
    let mut lambdas = vec![0.0; net.reactions()];
    let lambda0 = kin.propensities(x, &mut lambdas)?;
    if lambda0 <= 0.0 {
        return Ok(None);
    }
    let r1 = stream.uniform();
    let r2 = stream.uniform();
    Ok(Some((-r1.ln() / lambda0, select_reaction(&lambdas, lambda0, r2))))
}

/// Simulates `X_θ` on `[0, t]`. An absorbing state is held until `t`.
pub fn simulate_path(
    net: &ReactionNetwork,
    x0: &[i64],
    theta: &Parameters,
    t: f64,
    stream: &mut Stream,
) -> Result<Vec<JumpRecord>> {
    check_state(net, x0)?;
    let kin = Kinetics::new(net, theta)?;
    path(&kin, x0, t, stream)
}

pub(crate) fn check_state(net: &ReactionNetwork, x: &[i64]) -> Result<()> {
    if x.len() != net.species() {
        return Err(Error::Model(format!(
            "state has {} entries, network has {} species",
            x.len(),
            net.species()
        )));
    }
    if let Some(s) = x.iter().position(|&v| v < 0) {
        return Err(Error::StateUnderflow { species: s, count: x[s] });
    }
    Ok(())
}

pub(crate) fn path(kin: &Kinetics<'_>, x0: &[i64], t: f64, stream: &mut Stream) -> Result<Vec<JumpRecord>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("horizon must be finite and nonnegative, got {t}")));
    }
    let net = kin.network();
    let mut lambdas = vec![0.0; net.reactions()];
    let mut x = x0.to_vec();
    let mut sigma = 0.0;
    let mut records = Vec::new();
    loop {
        let lambda0 = kin.propensities(&x, &mut lambdas)?;
        let step = if lambda0 > 0.0 && sigma < t {
            let r1 = stream.uniform();
            let r2 = stream.uniform();
            let ds = -r1.ln() / lambda0;
            (sigma + ds < t).then(|| (ds, select_reaction(&lambdas, lambda0, r2)))
        } else {
            None
        };
        match step {
            Some((ds, k)) => {
                records.push(JumpRecord {
                    sigma,
                    state: x.clone(),
                    lambda0,
                    reaction: Some(k),
                });
                apply_stoich(&mut x, net.stoich(k))?;
                sigma += ds;
            }
            None => {
                records.push(JumpRecord {
                    sigma,
                    state: x,
                    lambda0,
                    reaction: None,
                });
                return Ok(records);
            }
        }
    }
}

/// Which chain(s) a coupled channel moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Shared,
    First,
    Second,
}

/// Split of one reaction's rates across the three coupled channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRates {
    pub shared: f64,
    pub first: f64,
    pub second: f64,
}

/// `min(a, b)`, `a − min`, `b − min`.
#[inline]
pub fn split_rates(a: f64, b: f64) -> SplitRates {
    let shared = a.min(b);
    SplitRates {
        shared,
        first: a - shared,
        second: b - shared,
    }
}

/// Joint state of the coupled chains.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledPair {
    pub z1: State,
    pub z2: State,
    pub clock: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledEvent {
    pub time: f64,
    pub reaction: usize,
    pub channel: Channel,
}

impl CoupledEvent {
    pub fn moves(&self, side: Channel) -> bool {
        self.channel == Channel::Shared || self.channel == side
    }
}

/// Full event history of one coupled realization.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledTrajectory {
    pub start: CoupledPair,
    pub events: Vec<CoupledEvent>,
    pub end: CoupledPair,
    pub duration: f64,
}

impl CoupledTrajectory {
    /// The marginal path of one chain (`Channel::First` for `Z1`,
    /// `Channel::Second` for `Z2`) together with the joint event index of
    /// each record: 0 for the initial record, `e + 1` for a jump at event `e`.
    pub fn component(&self, kin: &Kinetics<'_>, side: Channel) -> Result<(Vec<JumpRecord>, Vec<u64>)> {
        let net = kin.network();
        let mut lambdas = vec![0.0; net.reactions()];
        let mut x = match side {
            Channel::First => self.start.z1.clone(),
            Channel::Second => self.start.z2.clone(),
            Channel::Shared => {
                return Err(Error::Config("a component path is either the first or second chain".into()))
            }
        };
        let mut records = Vec::new();
        let mut keys = vec![0];
        let mut sigma = 0.0;
        for (e, ev) in self.events.iter().enumerate().filter(|(_, ev)| ev.moves(side)) {
            let lambda0 = kin.propensities(&x, &mut lambdas)?;
            records.push(JumpRecord {
                sigma,
                state: x.clone(),
                lambda0,
                reaction: Some(ev.reaction),
            });
            apply_stoich(&mut x, net.stoich(ev.reaction))?;
            sigma = ev.time;
            keys.push(e as u64 + 1);
        }
        let lambda0 = kin.propensities(&x, &mut lambdas)?;
        records.push(JumpRecord {
            sigma,
            state: x,
            lambda0,
            reaction: None,
        });
        Ok((records, keys))
    }
}

/// Simulates the split-coupled pair by the direct method over `3K` channels
/// and returns the joint state at `duration`.
pub fn simulate_coupled_pair(
    net: &ReactionNetwork,
    z1_0: &[i64],
    z2_0: &[i64],
    theta: &Parameters,
    duration: f64,
    stream: &mut Stream,
) -> Result<CoupledPair> {
    check_state(net, z1_0)?;
    check_state(net, z2_0)?;
    let kin = Kinetics::new(net, theta)?;
    run_coupled(&kin, z1_0, z2_0, duration, stream, None)
}

/// As [`simulate_coupled_pair`], keeping every event.
pub fn simulate_coupled_trajectory(
    kin: &Kinetics<'_>,
    z1_0: &[i64],
    z2_0: &[i64],
    duration: f64,
    stream: &mut Stream,
) -> Result<CoupledTrajectory> {
    let mut events = Vec::new();
    let end = run_coupled(kin, z1_0, z2_0, duration, stream, Some(&mut events))?;
    Ok(CoupledTrajectory {
        start: CoupledPair {
            z1: z1_0.to_vec(),
            z2: z2_0.to_vec(),
            clock: 0.0,
        },
        events,
        end,
        duration,
    })
}

pub(crate) fn run_coupled(
    kin: &Kinetics<'_>,
    z1_0: &[i64],
    z2_0: &[i64],
    duration: f64,
    stream: &mut Stream,
    mut record: Option<&mut Vec<CoupledEvent>>,
) -> Result<CoupledPair> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::Config(format!("duration must be finite and nonnegative, got {duration}")));
    }
    let net = kin.network();
    let kk = net.reactions();
    let mut z1 = z1_0.to_vec();
    let mut z2 = z2_0.to_vec();
    let mut a = vec![0.0; kk];
    let mut b = vec![0.0; kk];
    // channel rates, laid out (shared_k, first_k, second_k) per reaction
    let mut rates = vec![0.0; 3 * kk];
    let mut clock = 0.0;
    while clock < duration {
        let merged = z1 == z2;
        let total = if merged {
            kin.propensities(&z1, &mut a)?;
            let mut total = 0.0;
            for k in 0..kk {
                rates[3 * k] = a[k];
                rates[3 * k + 1] = 0.0;
                rates[3 * k + 2] = 0.0;
                total += a[k] + 0.0 + 0.0;
            }
            total
        } else {
            kin.propensities(&z1, &mut a)?;
            kin.propensities(&z2, &mut b)?;
            let mut total = 0.0;
            for k in 0..kk {
                let s = split_rates(a[k], b[k]);
                rates[3 * k] = s.shared;
                rates[3 * k + 1] = s.first;
                rates[3 * k + 2] = s.second;
                total += s.shared + s.first + s.second;
            }
            total
        };
        if total <= 0.0 {
            break;
        }
        let r1 = stream.uniform();
        let r2 = stream.uniform();
        let dt = -r1.ln() / total;
        if clock + dt >= duration {
            break;
        }
        clock += dt;
        let c = select_reaction(&rates, total, r2);
        let (k, channel) = (c / 3, [Channel::Shared, Channel::First, Channel::Second][c % 3]);
        let zeta = net.stoich(k);
        match channel {
            Channel::Shared => {
                apply_stoich(&mut z1, zeta)?;
                apply_stoich(&mut z2, zeta)?;
            }
            Channel::First => apply_stoich(&mut z1, zeta)?,
            Channel::Second => apply_stoich(&mut z2, zeta)?,
        }
        if let Some(events) = record.as_deref_mut() {
            events.push(CoupledEvent {
                time: clock,
                reaction: k,
                channel,
            });
        }
    }
    Ok(CoupledPair {
        z1,
        z2,
        clock: duration,
    })
}

/// One realization of `f(Z1(τ)) − f(Z2(τ))` for the pair started at
/// `(x + ζ, x)`.
pub fn coupled_output_difference(
    net: &ReactionNetwork,
    x_base: &[i64],
    zeta: &[i64],
    theta: &Parameters,
    duration: f64,
    f: &OutputFunction,
    key: &StreamKey,
) -> Result<f64> {
    check_state(net, x_base)?;
    let kin = Kinetics::new(net, theta)?;
    output_difference(&kin, x_base, zeta, duration, f, key)
}

pub(crate) fn output_difference(
    kin: &Kinetics<'_>,
    x_base: &[i64],
    zeta: &[i64],
    duration: f64,
    f: &OutputFunction,
    key: &StreamKey,
) -> Result<f64> {
    let z1 = shifted(x_base, zeta)?;
    let end = run_coupled(kin, &z1, x_base, duration, &mut key.stream(), None)?;
    Ok(f.eval(&end.z1) - f.eval(&end.z2))
}

/// Endpoint of `X_θ(t)` simulated through the random time change
/// representation: reaction `k` consumes unit-rate exponential gaps from the
/// stream `key.child(k)`. Paths at different `θ` that share `key` are driven
/// by common random numbers.
pub fn simulate_endpoint_rtc(kin: &Kinetics<'_>, x0: &[i64], t: f64, key: &StreamKey) -> Result<State> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("horizon must be finite and nonnegative, got {t}")));
    }
    let net = kin.network();
    let kk = net.reactions();
    let mut streams: Vec<Stream> = (0..kk as u64).map(|k| key.child(k).stream()).collect();
    // internal time consumed by each unit Poisson process, and its next firing
    let mut internal = vec![0.0; kk];
    let mut next_fire: Vec<f64> = streams.iter_mut().map(|s| -s.uniform().ln()).collect();
    let mut lambdas = vec![0.0; kk];
    let mut x = x0.to_vec();
    let mut clock = 0.0;
    loop {
        kin.propensities(&x, &mut lambdas)?;
        let mut best: Option<(f64, usize)> = None;
        for k in 0..kk {
            if lambdas[k] > 0.0 {
                let wait = (next_fire[k] - internal[k]) / lambdas[k];
                if best.map_or(true, |(w, _)| wait < w) {
                    best = Some((wait, k));
                }
            }
        }
        let Some((wait, mu)) = best else {
            return Ok(x);
        };
        if clock + wait >= t {
            return Ok(x);
        }
        clock += wait;
        for k in 0..kk {
            internal[k] += lambdas[k] * wait;
        }
        // pin the fired clock exactly to its firing time
        internal[mu] = next_fire[mu];
        next_fire[mu] += -streams[mu].uniform().ln();
        apply_stoich(&mut x, net.stoich(mu))?;
    }
}
