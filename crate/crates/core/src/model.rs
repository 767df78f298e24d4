//! Reaction networks with parameterized propensities and polynomial outputs.
//!
//! A network has `d` species, `K` reactions and `p` parameters. Reaction `k`
//! moves the state `x` to `x + ζ_k` and fires at rate `λ_k(x, θ)`. Every
//! propensity exposes exact first and second partial derivatives in `θ`, which
//! the sensitivity estimators consume.

pub mod file;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Species counts. Entries are nonnegative in every reachable state.
pub type State = Vec<i64>;

/// One term `coeff · Π_q θ_q^{e_q}` of a rate polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// Sparse multivariate polynomial in the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePolynomial {
    param_count: usize,
    terms: Vec<Monomial>,
}

impl RatePolynomial {
    pub fn new(param_count: usize, terms: Vec<Monomial>) -> Result<Self> {
        for (n, term) in terms.iter().enumerate() {
            if term.exponents.len() != param_count {
                return Err(Error::Model(format!(
                    "rate term {n} has {} exponents, expected {param_count}",
                    term.exponents.len()
                )));
            }
            if !term.coeff.is_finite() {
                return Err(Error::Model(format!("rate term {n} has a non-finite coefficient")));
            }
        }
        Ok(Self { param_count, terms })
    }

    /// The polynomial `coeff · θ_q`.
    pub fn linear(param_count: usize, q: usize, coeff: f64) -> Self {
        Self::monomial(param_count, coeff, &[(q, 1)])
    }

    /// A single monomial given as `(parameter, exponent)` pairs.
    pub fn monomial(param_count: usize, coeff: f64, powers: &[(usize, u32)]) -> Self {
        let mut exponents = vec![0; param_count];
        for &(q, e) in powers {
            exponents[q] += e;
        }
        Self {
            param_count,
            terms: vec![Monomial { coeff, exponents }],
        }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Whether any term has a positive exponent on `θ_q`.
    pub fn references(&self, q: usize) -> bool {
        self.terms.iter().any(|t| t.exponents[q] > 0)
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * power_product(&t.exponents, theta, usize::MAX, usize::MAX))
            .sum()
    }

    pub fn partial(&self, theta: &[f64], q: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.exponents[q] > 0)
            .map(|t| {
                let e = t.exponents[q];
                t.coeff * f64::from(e) * theta[q].powi(e as i32 - 1)
                    * power_product(&t.exponents, theta, q, usize::MAX)
            })
            .sum()
    }

    pub fn partial2(&self, theta: &[f64], i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.terms
            .iter()
            .map(|t| {
                let ei = t.exponents[i];
                let ej = t.exponents[j];
                if i == j {
                    if ei < 2 {
                        return 0.0;
                    }
                    t.coeff * f64::from(ei * (ei - 1)) * theta[i].powi(ei as i32 - 2)
                        * power_product(&t.exponents, theta, i, usize::MAX)
                } else {
                    if ei == 0 || ej == 0 {
                        return 0.0;
                    }
                    t.coeff
                        * f64::from(ei)
                        * theta[i].powi(ei as i32 - 1)
                        * f64::from(ej)
                        * theta[j].powi(ej as i32 - 1)
                        * power_product(&t.exponents, theta, i, j)
                }
            })
            .sum()
    }
}

/// `Π_q θ_q^{e_q}` skipping the factors at `skip_a` and `skip_b`.
fn power_product(exponents: &[u32], theta: &[f64], skip_a: usize, skip_b: usize) -> f64 {
    exponents
        .iter()
        .zip(theta)
        .enumerate()
        .filter(|&(q, (&e, _))| e > 0 && q != skip_a && q != skip_b)
        .map(|(_, (&e, &th))| th.powi(e as i32))
        .product()
}

/// `Π_s x_s (x_s − 1) ··· (x_s − ν_s + 1)`; zero when some `x_s < ν_s`.
pub fn falling_factorial(x: &[i64], orders: &[u32]) -> f64 {
    let mut h = 1.0;
    for (&xs, &nu) in x.iter().zip(orders) {
        if xs < i64::from(nu) {
            return 0.0;
        }
        for m in 0..i64::from(nu) {
            h *= (xs - m) as f64;
        }
    }
    h
}

/// User-supplied propensity with exact parameter derivatives.
pub trait CustomPropensity: Send + Sync + fmt::Debug {
    fn value(&self, x: &[i64], theta: &[f64]) -> f64;
    fn gradient(&self, x: &[i64], theta: &[f64], q: usize) -> f64;
    fn hessian(&self, x: &[i64], theta: &[f64], i: usize, j: usize) -> f64;
    /// Parameters this propensity depends on. Defaults to all of them.
    fn references(&self, _q: usize) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub enum PropensitySpec {
    /// `rate(θ) · Π_s x_s^{(ν_s)}` with a falling-factorial monomial in `x`.
    MassActionPoly {
        rate: RatePolynomial,
        reactant_orders: Vec<u32>,
    },
    Custom(Arc<dyn CustomPropensity>),
}

impl PartialEq for PropensitySpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                Self::MassActionPoly { rate: a, reactant_orders: na },
                Self::MassActionPoly { rate: b, reactant_orders: nb },
            ) => a == b && na == nb,
            (Self::Custom(a), Self::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl PropensitySpec {
    pub fn mass_action(rate: RatePolynomial, reactant_orders: Vec<u32>) -> Self {
        Self::MassActionPoly { rate, reactant_orders }
    }

    pub fn value(&self, x: &[i64], theta: &[f64]) -> f64 {
        match self {
            Self::MassActionPoly { rate, reactant_orders } => {
                let h = falling_factorial(x, reactant_orders);
                if h == 0.0 {
                    0.0
                } else {
                    rate.value(theta) * h
                }
            }
            Self::Custom(c) => c.value(x, theta),
        }
    }

    pub fn gradient(&self, x: &[i64], theta: &[f64], q: usize) -> f64 {
        match self {
            Self::MassActionPoly { rate, reactant_orders } => {
                let h = falling_factorial(x, reactant_orders);
                if h == 0.0 {
                    0.0
                } else {
                    rate.partial(theta, q) * h
                }
            }
            Self::Custom(c) => c.gradient(x, theta, q),
        }
    }

    pub fn hessian(&self, x: &[i64], theta: &[f64], i: usize, j: usize) -> f64 {
        match self {
            Self::MassActionPoly { rate, reactant_orders } => {
                let h = falling_factorial(x, reactant_orders);
                if h == 0.0 {
                    0.0
                } else {
                    rate.partial2(theta, i, j) * h
                }
            }
            Self::Custom(c) => {
                // symmetric by construction regardless of the evaluator
                let (i, j) = if i <= j { (i, j) } else { (j, i) };
                c.hessian(x, theta, i, j)
            }
        }
    }

    pub fn references(&self, q: usize) -> bool {
        match self {
            Self::MassActionPoly { rate, .. } => rate.references(q),
            Self::Custom(c) => c.references(q),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    species: usize,
    stoich: Vec<Vec<i64>>,
    propensities: Vec<PropensitySpec>,
    param_count: usize,
}

impl ReactionNetwork {
    pub fn new(
        species: usize,
        param_count: usize,
        stoich: Vec<Vec<i64>>,
        propensities: Vec<PropensitySpec>,
    ) -> Result<Self> {
        if species == 0 {
            return Err(Error::Model("a network needs at least one species".into()));
        }
        if stoich.len() != propensities.len() {
            return Err(Error::Model(format!(
                "{} stoichiometric vectors but {} propensities",
                stoich.len(),
                propensities.len()
            )));
        }
        for (k, zeta) in stoich.iter().enumerate() {
            if zeta.len() != species {
                return Err(Error::Model(format!(
                    "reaction {k}: stoichiometric vector has length {}, expected {species}",
                    zeta.len()
                )));
            }
        }
        for (k, spec) in propensities.iter().enumerate() {
            if let PropensitySpec::MassActionPoly { rate, reactant_orders } = spec {
                if rate.param_count() != param_count {
                    return Err(Error::Model(format!(
                        "reaction {k}: rate polynomial has {} parameters, expected {param_count}",
                        rate.param_count()
                    )));
                }
                if reactant_orders.len() != species {
                    return Err(Error::Model(format!(
                        "reaction {k}: {} reactant orders, expected {species}",
                        reactant_orders.len()
                    )));
                }
            }
        }
        Ok(Self {
            species,
            stoich,
            propensities,
            param_count,
        })
    }

    /// Species count `d`.
    pub fn species(&self) -> usize {
        self.species
    }

    /// Reaction count `K`.
    pub fn reactions(&self) -> usize {
        self.stoich.len()
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn stoich(&self, k: usize) -> &[i64] {
        &self.stoich[k]
    }

    pub fn propensity(&self, k: usize) -> &PropensitySpec {
        &self.propensities[k]
    }

    /// Whether `θ_q` enters any propensity.
    pub fn references(&self, q: usize) -> bool {
        self.propensities.iter().any(|s| s.references(q))
    }
}

/// Parameter vector `θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters(Vec<f64>);

impl Parameters {
    pub fn new(net: &ReactionNetwork, values: Vec<f64>) -> Result<Self> {
        if values.len() != net.param_count() {
            return Err(Error::Model(format!(
                "{} parameter values for a network with {} parameters",
                values.len(),
                net.param_count()
            )));
        }
        Self::from_vec(values)
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if let Some(q) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Model(format!("parameter {q} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `θ + Σ steps[n].1 · e_{steps[n].0}`.
    pub fn perturbed(&self, steps: &[(usize, f64)]) -> Self {
        let mut v = self.0.clone();
        for &(q, h) in steps {
            v[q] += h;
        }
        Self(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputTerm {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Polynomial output `f(x) = Σ coeff · Π_s x_s^{powers_s}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFunction {
    terms: Vec<OutputTerm>,
}

impl OutputFunction {
    pub fn new(species: usize, terms: Vec<OutputTerm>) -> Result<Self> {
        for (n, t) in terms.iter().enumerate() {
            if t.powers.len() != species {
                return Err(Error::Model(format!(
                    "output term {n} has {} powers, expected {species}",
                    t.powers.len()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Model(format!("output term {n} has a non-finite coefficient")));
            }
        }
        Ok(Self { terms })
    }

    /// `f(x) = x_s`.
    pub fn species_count(species: usize, s: usize) -> Self {
        let mut powers = vec![0; species];
        powers[s] = 1;
        Self {
            terms: vec![OutputTerm { coeff: 1.0, powers }],
        }
    }

    pub fn terms(&self) -> &[OutputTerm] {
        &self.terms
    }

    pub fn eval(&self, x: &[i64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.powers
                        .iter()
                        .zip(x)
                        .filter(|(&e, _)| e > 0)
                        .map(|(&e, &xs)| (xs as f64).powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// `Δ_ζ f(x) = f(x + ζ) − f(x)`.
    pub fn delta(&self, x: &[i64], zeta: &[i64]) -> Result<f64> {
        let shifted = shifted(x, zeta)?;
        Ok(self.eval(&shifted) - self.eval(x))
    }
}

/// `x + ζ`, rejecting negative counts.
pub fn shifted(x: &[i64], zeta: &[i64]) -> Result<State> {
    let mut y = x.to_vec();
    apply_stoich(&mut y, zeta)?;
    Ok(y)
}

pub(crate) fn apply_stoich(x: &mut [i64], zeta: &[i64]) -> Result<()> {
    for (s, (xs, &z)) in x.iter_mut().zip(zeta).enumerate() {
        *xs += z;
        if *xs < 0 {
            return Err(Error::StateUnderflow { species: s, count: *xs });
        }
    }
    Ok(())
}

fn checked(k: usize, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidPropensity { reaction: k, value })
    }
}

pub fn propensity_value(net: &ReactionNetwork, k: usize, x: &[i64], theta: &Parameters) -> Result<f64> {
    checked(k, net.propensity(k).value(x, theta.as_slice()))
}

pub fn propensity_grad(
    net: &ReactionNetwork,
    k: usize,
    x: &[i64],
    theta: &Parameters,
    q: usize,
) -> Result<f64> {
    propensity_value(net, k, x, theta)?;
    Ok(net.propensity(k).gradient(x, theta.as_slice(), q))
}

pub fn propensity_hessian(
    net: &ReactionNetwork,
    k: usize,
    x: &[i64],
    theta: &Parameters,
    i: usize,
    j: usize,
) -> Result<f64> {
    propensity_value(net, k, x, theta)?;
    Ok(net.propensity(k).hessian(x, theta.as_slice(), i, j))
}

/// `λ_0(x, θ) = Σ_k λ_k(x, θ)`.
pub fn total_propensity(net: &ReactionNetwork, x: &[i64], theta: &Parameters) -> Result<f64> {
    (0..net.reactions()).try_fold(0.0, |acc, k| Ok(acc + propensity_value(net, k, x, theta)?))
}

/// A network bound to one parameter vector, with the parameter-only factors
/// of mass-action propensities and their derivatives precomputed.
#[derive(Debug)]
pub struct Kinetics<'a> {
    net: &'a ReactionNetwork,
    theta: &'a [f64],
    rate: Vec<f64>,
    // K × p first partials of the rate polynomials
    rate_grad: Vec<f64>,
    // K × p × p second partials
    rate_hess: Vec<f64>,
}

impl<'a> Kinetics<'a> {
    pub fn new(net: &'a ReactionNetwork, theta: &'a Parameters) -> Result<Self> {
        let p = net.param_count();
        if theta.len() != p {
            return Err(Error::Model(format!(
                "{} parameter values for a network with {p} parameters",
                theta.len()
            )));
        }
        let th = theta.as_slice();
        let kk = net.reactions();
        let mut rate = vec![f64::NAN; kk];
        let mut rate_grad = vec![0.0; kk * p];
        let mut rate_hess = vec![0.0; kk * p * p];
        for k in 0..kk {
            if let PropensitySpec::MassActionPoly { rate: poly, .. } = net.propensity(k) {
                rate[k] = checked(k, poly.value(th))?;
                for i in 0..p {
                    rate_grad[k * p + i] = poly.partial(th, i);
                    for j in 0..p {
                        rate_hess[(k * p + i) * p + j] = poly.partial2(th, i, j);
                    }
                }
            }
        }
        Ok(Self {
            net,
            theta: th,
            rate,
            rate_grad,
            rate_hess,
        })
    }

    pub fn network(&self) -> &'a ReactionNetwork {
        self.net
    }

    pub fn theta(&self) -> &'a [f64] {
        self.theta
    }

    #[inline]
    fn factor(&self, k: usize, x: &[i64]) -> Option<f64> {
        match self.net.propensity(k) {
            PropensitySpec::MassActionPoly { reactant_orders, .. } => {
                Some(falling_factorial(x, reactant_orders))
            }
            PropensitySpec::Custom(_) => None,
        }
    }

    #[inline]
    pub fn value(&self, k: usize, x: &[i64]) -> Result<f64> {
        match self.factor(k, x) {
            Some(h) if h == 0.0 => Ok(0.0),
            Some(h) => Ok(self.rate[k] * h),
            None => checked(k, self.net.propensity(k).value(x, self.theta)),
        }
    }

    pub fn gradient(&self, k: usize, x: &[i64], q: usize) -> f64 {
        let p = self.net.param_count();
        match self.factor(k, x) {
            Some(h) if h == 0.0 => 0.0,
            Some(h) => self.rate_grad[k * p + q] * h,
            None => self.net.propensity(k).gradient(x, self.theta, q),
        }
    }

    pub fn hessian(&self, k: usize, x: &[i64], i: usize, j: usize) -> f64 {
        let p = self.net.param_count();
        match self.factor(k, x) {
            Some(h) if h == 0.0 => 0.0,
            Some(h) => self.rate_hess[(k * p + i) * p + j] * h,
            None => self.net.propensity(k).hessian(x, self.theta, i, j),
        }
    }

    /// Fills `out` with every `λ_k(x)` and returns their sum.
    pub fn propensities(&self, x: &[i64], out: &mut [f64]) -> Result<f64> {
        let mut total = 0.0;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.value(k, x)?;
            total += *slot;
        }
        Ok(total)
    }
}
