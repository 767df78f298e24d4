#![allow(dead_code)]

use crn_sens::{OutputFunction, Parameters, PropensitySpec, RatePolynomial, ReactionNetwork, Stream};

/// ∅ → A at θ_0, A → ∅ at θ_1 · x_A.
pub fn birth_death() -> ReactionNetwork {
    ReactionNetwork::new(
        1,
        2,
        vec![vec![1], vec![-1]],
        vec![
            PropensitySpec::mass_action(RatePolynomial::linear(2, 0, 1.0), vec![0]),
            PropensitySpec::mass_action(RatePolynomial::linear(2, 1, 1.0), vec![1]),
        ],
    )
    .unwrap()
}

/// ∅ → A at θ_0 θ_1, A → ∅ at θ_2 · x_A.
pub fn product_birth() -> ReactionNetwork {
    ReactionNetwork::new(
        1,
        3,
        vec![vec![1], vec![-1]],
        vec![
            PropensitySpec::mass_action(RatePolynomial::monomial(3, 1.0, &[(0, 1), (1, 1)]), vec![0]),
            PropensitySpec::mass_action(RatePolynomial::linear(3, 2, 1.0), vec![1]),
        ],
    )
    .unwrap()
}

/// ∅ → A at θ_0 only.
pub fn immigration() -> ReactionNetwork {
    ReactionNetwork::new(
        1,
        1,
        vec![vec![1]],
        vec![PropensitySpec::mass_action(RatePolynomial::linear(1, 0, 1.0), vec![0])],
    )
    .unwrap()
}

pub fn theta(v: &[f64]) -> Parameters {
    Parameters::from_vec(v.to_vec()).unwrap()
}

pub fn count_a() -> OutputFunction {
    OutputFunction::species_count(1, 0)
}

fn below(s: &mut Stream, n: u64) -> u64 {
    ((s.uniform() * n as f64) as u64).min(n - 1)
}

/// Random mass-action network with polynomial rates. Reactions never consume
/// more than their reactant orders, so states stay nonnegative. Only
/// zero-order reactions add molecules overall, so paths cannot explode.
pub fn random_network(s: &mut Stream) -> (ReactionNetwork, usize) {
    let d = 1 + below(s, 3) as usize;
    let kk = 1 + below(s, 4) as usize;
    let p = 1 + below(s, 3) as usize;
    let mut stoich = Vec::new();
    let mut props = Vec::new();
    for _ in 0..kk {
        let orders: Vec<u32> = (0..d).map(|_| below(s, 3) as u32).collect();
        let growth = if orders.iter().sum::<u32>() <= 1 { 2 } else { 1 };
        let mut zeta: Vec<i64> = orders
            .iter()
            .map(|&nu| -(below(s, u64::from(nu) + 1) as i64) + below(s, growth) as i64)
            .collect();
        if orders.iter().sum::<u32>() == 1 {
            // conversions only: first-order reactions never add molecules
            while zeta.iter().sum::<i64>() > 0 {
                let q = zeta.iter().rposition(|&v| v > 0).unwrap();
                zeta[q] -= 1;
            }
        }
        let terms = 1 + below(s, 2) as usize;
        let monomials = (0..terms)
            .map(|_| crn_sens::model::Monomial {
                coeff: 0.1 + 2.0 * s.uniform(),
                exponents: (0..p).map(|_| below(s, 3) as u32).collect(),
            })
            .collect();
        stoich.push(zeta);
        props.push(PropensitySpec::mass_action(RatePolynomial::new(p, monomials).unwrap(), orders));
    }
    (ReactionNetwork::new(d, p, stoich, props).unwrap(), p)
}

pub fn random_theta(s: &mut Stream, p: usize) -> Parameters {
    theta(&(0..p).map(|_| 0.3 + 2.0 * s.uniform()).collect::<Vec<_>>())
}

pub fn random_state(s: &mut Stream, d: usize, max: u64) -> Vec<i64> {
    (0..d).map(|_| below(s, max + 1) as i64).collect()
}
