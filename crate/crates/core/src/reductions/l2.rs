//! The coin-damped collision tester and the Haar second-moment identity it is paired with.

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{frobenius_sq, haar_unitary, rng_from_seed, ComplexMatrix};

/// Probability vector over a finite outcome set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Argument("distribution needs finite non-negative entries".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("distribution sums to {total}")));
        }
        Ok(Distribution { probs })
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Distribution { probs }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        // Put the rounding residue on the largest entry so the sum is exact to an ulp or two.
        let residue = 1.0 - probs.iter().sum::<f64>();
        let big = (0..n).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap_or(0);
        probs[big] += residue;
        Distribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Which oracles the two queries go to, chosen by the three random bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Plan {
    Coin(bool),
    Same(usize),
    Cross,
}

fn plan(bits: [bool; 3]) -> Plan {
    match bits {
        [true, _, coin] => Plan::Coin(coin),
        [false, false, false] => Plan::Same(0),
        [false, false, true] => Plan::Same(1),
        [false, true, _] => Plan::Cross,
    }
}

/// One run: three random bits and two non-adaptive oracle queries.
pub fn l2_distinguisher_run(
    mut oracle0: impl FnMut() -> usize,
    mut oracle1: impl FnMut() -> usize,
    bits: [bool; 3],
) -> bool {
    match plan(bits) {
        Plan::Coin(c) => c,
        Plan::Same(0) => oracle0() == oracle0(),
        Plan::Same(_) => oracle1() == oracle1(),
        Plan::Cross => oracle0() != oracle1(),
    }
}

/// Exact output probability by expectation over the random bits and both query outcomes.
pub fn l2_distinguisher_probability<T>(d0: &[T], d1: &[T]) -> T
where
    T: Clone + Zero + One + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + std::ops::Div<Output = T>,
{
    let eighth = T::one() / (0..8).fold(T::zero(), |a, _| a + T::one());
    let n = d0.len().max(d1.len());
    let at = |d: &[T], i: usize| d.get(i).cloned().unwrap_or_else(T::zero);
    let mut total = T::zero();
    for v in 0..8u8 {
        let bits = [v & 4 != 0, v & 2 != 0, v & 1 != 0];
        let p = match plan(bits) {
            Plan::Coin(true) => T::one(),
            Plan::Coin(false) => T::zero(),
            Plan::Same(which) => {
                let d = if which == 0 { d0 } else { d1 };
                (0..n).fold(T::zero(), |a, i| a + at(d, i) * at(d, i))
            }
            Plan::Cross => {
                let mut s = T::zero();
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            s = s + at(d0, i) * at(d1, j);
                        }
                    }
                }
                s
            }
        };
        total = total + eighth.clone() * p;
    }
    total
}

/// `1/2 + ‖D₀ − D₁‖₂²/8`.
pub fn l2_closed_form<T>(d0: &[T], d1: &[T]) -> T
where
    T: Clone
        + Zero
        + One
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>,
{
    let two = T::one() + T::one();
    let eight = two.clone() * two.clone() * two.clone();
    let n = d0.len().max(d1.len());
    let at = |d: &[T], i: usize| d.get(i).cloned().unwrap_or_else(T::zero);
    let sq = (0..n).fold(T::zero(), |a, i| {
        let diff = at(d0, i) - at(d1, i);
        a + diff.clone() * diff
    });
    T::one() / two + sq / eight
}

/// Exact rational version of [`l2_distinguisher_probability`].
pub fn l2_distinguisher_exact(d0: &[Ratio<i128>], d1: &[Ratio<i128>]) -> Ratio<i128> {
    l2_distinguisher_probability(d0, d1)
}

/// Fraction of `runs` sampled executions that output 1.
pub fn l2_distinguisher_sampled(d0: &Distribution, d1: &Distribution, runs: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut other = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut ones = 0usize;
    for _ in 0..runs {
        let bits = [rng.gen(), rng.gen(), rng.gen()];
        ones += usize::from(l2_distinguisher_run(|| d0.sample(&mut rng), || d1.sample(&mut other), bits));
    }
    ones as f64 / runs as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct HaarCheck {
    pub estimate: f64,
    pub exact: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Monte-Carlo estimate of `E_U ‖D₀(U) − D₁(U)‖₂²` for computational-basis outcome distributions
/// after a shared Haar unitary, against `‖ρ − σ‖₂²/(d+1)`.
pub fn haar_l2_identity_check(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    samples: usize,
    seed: u64,
) -> Result<HaarCheck> {
    let d = rho.nrows();
    if sigma.shape() != rho.shape() || rho.ncols() != d {
        return Err(Error::Argument("states must share one square dimension".into()));
    }
    if samples < 2 {
        return Err(Error::Argument("need at least two samples".into()));
    }
    let diff = rho - sigma;
    let exact = frobenius_sq(&diff) / (d + 1) as f64;
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = haar_unitary(d, &mut rng);
        let rotated = &u * &diff * u.adjoint();
        values.push((0..d).map(|i| rotated[(i, i)].re.powi(2)).sum::<f64>());
    }
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(HaarCheck { estimate: mean, exact, standard_error: (var / samples as f64).sqrt(), samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::max_entangled;
    use crate::tensor::identity;

    fn ratios(v: &[i128], den: i128) -> Vec<Ratio<i128>> {
        v.iter().map(|&a| Ratio::new(a, den)).collect()
    }

    #[test]
    fn equal_distributions_give_one_half() {
        let d = ratios(&[1, 2, 3], 6);
        assert_eq!(l2_distinguisher_exact(&d, &d), Ratio::new(1, 2));
    }

    #[test]
    fn disjoint_point_masses_give_three_quarters() {
        let a = ratios(&[1, 0], 1);
        let b = ratios(&[0, 1], 1);
        assert_eq!(l2_distinguisher_exact(&a, &b), Ratio::new(3, 4));
    }

    #[test]
    fn rational_identity_on_uneven_supports() {
        let a = ratios(&[3, 1, 0, 4], 8);
        let b = ratios(&[1, 1, 1], 3);
        assert_eq!(l2_distinguisher_exact(&a, &b), l2_closed_form(&a, &b));
    }

    #[test]
    fn sampled_runs_converge() {
        let mut rng = rng_from_seed(3);
        let a = Distribution::random(8, &mut rng);
        let b = Distribution::random(8, &mut rng);
        let exact = l2_closed_form(a.probs(), b.probs());
        let runs = 100_000;
        let est = l2_distinguisher_sampled(&a, &b, runs, 11);
        let sigma = (exact * (1.0 - exact) / runs as f64).sqrt();
        assert!((est - exact).abs() <= 3.0 * sigma, "{est} vs {exact}");
    }

    #[test]
    fn haar_estimate_for_bell_versus_mixed() {
        let phi = max_entangled(2).into_matrix();
        let mixed = identity(4).unscale(4.0);
        let r = haar_l2_identity_check(&phi, &mixed, 2000, 5).unwrap();
        // Eigenvalues of Φ⁺ − I/4 are 3/4 and three times −1/4.
        assert!((r.exact - (9.0 / 16.0 + 3.0 / 16.0) / 5.0).abs() < 1e-12);
        assert!((r.estimate - r.exact).abs() <= 0.05 * r.exact, "{r:?}");
        let same = haar_l2_identity_check(&phi, &phi, 10, 1).unwrap();
        assert_eq!(same.exact, 0.0);
        assert!(same.estimate < 1e-20);
    }
}
