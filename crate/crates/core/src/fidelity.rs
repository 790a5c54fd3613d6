//! State fidelity (exact and direct fidelity estimation), cross-entropy based
//! information fidelity, and summary statistics of output distributions.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::noise::DepolarizingModel;
use crate::seed::{derive_seed, rng_from_seed};
use crate::state::{i_pow, PauliString, ProbDist, StateVector};

/// Floor applied to ideal probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-15;

/// Largest register for which the full Pauli spectrum is enumerated.
pub const DFE_MAX_QUBITS: usize = 10;

/// Overlap of a pure target with `state` after global depolarizing of
/// strength `epsilon`: `(1 - eps)|<t|psi>|^2 + eps/N`.
pub fn state_fidelity_exact(
    target: &StateVector,
    state: &StateVector,
    epsilon: f64,
) -> Result<f64> {
    let model = DepolarizingModel::new(epsilon)?;
    let overlap = target.inner(state)?.norm_sqr();
    let eps = model.epsilon();
    Ok((1.0 - eps) * overlap + eps / target.dim() as f64)
}

/// Exact `<psi|P|psi>`.
pub fn pauli_expectation(state: &StateVector, pauli: &PauliString) -> Result<f64> {
    if pauli.len() != state.n() {
        return Err(Error::Dimension {
            expected: state.n(),
            got: pauli.len(),
        });
    }
    let (flip, zmask, ny) = pauli.masks();
    let amps = state.amps();
    let mut acc = Complex64::default();
    for (x, &a) in amps.iter().enumerate() {
        let term = amps[x ^ flip].conj() * a;
        if (x & zmask).count_ones() % 2 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    Ok((i_pow(ny) * acc).re)
}

/// Mean of `shots` simulated ±1 outcomes of measuring `pauli`.
pub fn pauli_expectation_shots(
    state: &StateVector,
    pauli: &PauliString,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    let exact = pauli_expectation(state, pauli)?;
    sample_pm_one(exact, shots, seed)
}

fn sample_pm_one(expectation: f64, shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return arg("shots must be at least 1");
    }
    let p_plus = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
    let mut rng = rng_from_seed(seed);
    let plus = Binomial::new(shots, p_plus)
        .map_err(|e| Error::Argument(e.to_string()))?
        .sample(&mut rng);
    Ok((2.0 * plus as f64 - shots as f64) / shots as f64)
}

/// Every Pauli expectation of a pure state, indexed by `flip * 2^n + zmask`
/// (see [`PauliString::from_masks`]).
pub fn pauli_spectrum(state: &StateVector) -> Result<Vec<f64>> {
    let n = state.n();
    if n > DFE_MAX_QUBITS {
        return Err(Error::Size {
            n,
            min: 1,
            max: DFE_MAX_QUBITS,
        });
    }
    let dim = state.dim();
    let amps = state.amps();
    let mut out = vec![0.0; dim * dim];
    let mut buf = vec![Complex64::default(); dim];
    for flip in 0..dim {
        for (x, slot) in buf.iter_mut().enumerate() {
            *slot = amps[x ^ flip].conj() * amps[x];
        }
        walsh_hadamard(&mut buf);
        for (z, v) in buf.iter().enumerate() {
            let ny = (flip & z).count_ones() as usize;
            out[flip * dim + z] = (i_pow(ny) * v).re;
        }
    }
    Ok(out)
}

fn walsh_hadamard(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for base in (0..v.len()).step_by(h << 1) {
            for i in base..base + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h <<= 1;
    }
}

/// The prepared state fed to fidelity estimation: a pure state followed by
/// global depolarizing noise.
#[derive(Debug, Clone)]
pub struct NoisyState {
    pub state: StateVector,
    pub noise: DepolarizingModel,
}

impl NoisyState {
    pub fn new(state: StateVector, epsilon: f64) -> Result<Self> {
        Ok(NoisyState {
            state,
            noise: DepolarizingModel::new(epsilon)?,
        })
    }

    /// `Tr(rho P)`; the maximally mixed part only contributes to the identity.
    pub fn expectation(&self, pauli: &PauliString) -> Result<f64> {
        let eps = self.noise.epsilon();
        let pure = pauli_expectation(&self.state, pauli)?;
        let mixed = if pauli.is_identity() { 1.0 } else { 0.0 };
        Ok((1.0 - eps) * pure + eps * mixed)
    }
}

/// How Pauli expectations on the prepared state are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectations {
    Exact,
    Shots(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub r: usize,
    /// Shots per Pauli; zero when expectations are exact.
    pub shots: u64,
}

/// Direct fidelity estimation.
///
/// Samples `r` Pauli strings with probability `<P>_t^2 / N`, measures each on
/// the prepared state and averages `Tr(rho P) / <P>_t`. The mean is an
/// unbiased estimator of `Tr(rho rho_t)`. Sampling is with replacement, so
/// targets with fewer than `r` nonzero weights are fine. Estimates are not
/// clipped to `[0, 1]`.
pub fn dfe_estimate(
    target: &StateVector,
    prepared: &NoisyState,
    r: usize,
    expectations: Expectations,
    seed: u64,
) -> Result<FidelityEstimate> {
    if r == 0 {
        return arg("DFE needs at least one Pauli sample");
    }
    if prepared.state.n() != target.n() {
        return Err(Error::Dimension {
            expected: target.n(),
            got: prepared.state.n(),
        });
    }
    let n = target.n();
    let dim = target.dim();
    let spectrum = pauli_spectrum(target)?;
    let weights: Vec<f64> = spectrum.iter().map(|c| c * c).collect();
    let index = WeightedIndex::new(&weights).map_err(|e| Error::Argument(e.to_string()))?;
    let mut rng = rng_from_seed(seed);

    let mut ratios = Vec::with_capacity(r);
    for k in 0..r {
        let idx = index.sample(&mut rng);
        let pauli = PauliString::from_masks(n, idx / dim, idx % dim);
        let exact = prepared.expectation(&pauli)?;
        let measured = match expectations {
            Expectations::Exact => exact,
            Expectations::Shots(shots) => {
                sample_pm_one(exact, shots, derive_seed(seed, &[k as u64]))?
            }
        };
        ratios.push(measured / spectrum[idx]);
    }

    let (value, std_error) = mean_and_sem(&ratios);
    Ok(FidelityEstimate {
        value,
        std_error,
        r,
        shots: match expectations {
            Expectations::Exact => 0,
            Expectations::Shots(s) => s,
        },
    })
}

/// Sample mean and its standard error (zero for a single sample).
pub fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let len = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / len;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0);
    (mean, (var / len).sqrt())
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &ProbDist) -> f64 {
    p.probs()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum::<f64>()
        + 0.0
}

fn surprise(p: f64) -> f64 {
    -p.max(PROB_FLOOR).log2()
}

/// `(S_ideal, S_unif)`: the mean information `log2(1/p)` under the ideal
/// distribution and under the uniform distribution.
pub fn surprise_moments(p_ideal: &ProbDist) -> (f64, f64) {
    let p = p_ideal.probs();
    let s_ideal = p.iter().map(|&v| v * surprise(v)).sum();
    let s_unif = p.iter().map(|&v| surprise(v)).sum::<f64>() / p.len() as f64;
    (s_ideal, s_unif)
}

/// `H_c = sum_x p_meas(x) log2(1/p_ideal(x))`.
pub fn cross_entropy(p_meas: &ProbDist, p_ideal: &ProbDist) -> Result<f64> {
    check_same(p_meas, p_ideal)?;
    Ok(p_meas
        .probs()
        .iter()
        .zip(p_ideal.probs())
        .map(|(&m, &i)| m * surprise(i))
        .sum())
}

/// `(S_unif - H_c) / (S_unif - S_ideal)`.
pub fn information_fidelity(p_meas: &ProbDist, p_ideal: &ProbDist) -> Result<f64> {
    let h_c = cross_entropy(p_meas, p_ideal)?;
    let (s_ideal, s_unif) = surprise_moments(p_ideal);
    let denom = s_unif - s_ideal;
    if denom.abs() <= 1e-12 * s_unif.abs().max(1.0) {
        return Err(Error::DegenerateIdeal);
    }
    Ok((s_unif - h_c) / denom)
}

/// L1 distance divided by `N`.
pub fn l1_error(p_meas: &ProbDist, p_ideal: &ProbDist) -> Result<f64> {
    check_same(p_meas, p_ideal)?;
    let sum: f64 = p_meas
        .probs()
        .iter()
        .zip(p_ideal.probs())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / p_meas.dim() as f64)
}

fn check_same(a: &ProbDist, b: &ProbDist) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::Dimension {
            expected: b.n(),
            got: a.n(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistSummary {
    /// Always `1/N`.
    pub ave: f64,
    /// Population standard deviation of the `N` probabilities.
    pub std: f64,
    /// Bits.
    pub shannon: f64,
    /// `sum_x x p(x)`.
    pub mean_index: f64,
}

pub fn dist_summary(p: &ProbDist) -> DistSummary {
    let probs = p.probs();
    let dim = probs.len() as f64;
    let ave = 1.0 / dim;
    let var = probs.iter().map(|v| (v - ave).powi(2)).sum::<f64>() / dim;
    DistSummary {
        ave,
        std: var.sqrt(),
        shannon: shannon_entropy(p),
        mean_index: probs.iter().enumerate().map(|(x, v)| x as f64 * v).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_sampler, AngleEnsemble, SamplerSpec};
    use crate::noise::{depolarize_dist, depolarized_state_fidelity};
    use crate::state::Pauli;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn dist(v: &[f64]) -> ProbDist {
        ProbDist::new(v.to_vec()).unwrap()
    }

    fn bell() -> StateVector {
        let h = FRAC_1_SQRT_2;
        let z = Complex64::default();
        StateVector::from_amps(vec![Complex64::new(h, 0.0), z, z, Complex64::new(h, 0.0)]).unwrap()
    }

    fn sampler_state(n: usize, layers: usize, seed: u64) -> StateVector {
        let spec = SamplerSpec::random(n, layers, AngleEnsemble::Continuous, seed).unwrap();
        let mut s = StateVector::zero(n).unwrap();
        apply_sampler(&mut s, &spec).unwrap();
        s
    }

    #[test]
    fn exact_fidelity_examples() {
        let t = sampler_state(2, 2, 1);
        assert!((state_fidelity_exact(&t, &t, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let a = StateVector::basis(2, 0).unwrap();
        let b = StateVector::basis(2, 3).unwrap();
        assert_eq!(state_fidelity_exact(&a, &b, 0.0).unwrap(), 0.0);
        assert!((state_fidelity_exact(&t, &t, 0.1).unwrap() - 0.925).abs() < 1e-12);
        assert!(state_fidelity_exact(&a, &StateVector::zero(3).unwrap(), 0.0).is_err());
    }

    #[test]
    fn pauli_expectation_examples() {
        let zero = StateVector::zero(1).unwrap();
        assert_eq!(
            pauli_expectation(&zero, &"Z".parse().unwrap()).unwrap(),
            1.0
        );
        assert_eq!(
            pauli_expectation(&zero, &"X".parse().unwrap()).unwrap(),
            0.0
        );
        assert!((pauli_expectation(&bell(), &"ZZ".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((pauli_expectation(&bell(), &"YY".parse().unwrap()).unwrap() + 1.0).abs() < 1e-12);
        assert!(pauli_expectation(&zero, &"ZZ".parse().unwrap()).is_err());
    }

    #[test]
    fn shot_expectation_is_unbiased_within_noise() {
        let s = sampler_state(3, 2, 4);
        let p: PauliString = "XZY".parse().unwrap();
        let exact = pauli_expectation(&s, &p).unwrap();
        let shots = 200_000;
        let est = pauli_expectation_shots(&s, &p, shots, 3).unwrap();
        assert!((est - exact).abs() < 5.0 / (shots as f64).sqrt());
    }

    #[test]
    fn spectrum_matches_direct_expectations() {
        let s = sampler_state(3, 2, 9);
        let spec = pauli_spectrum(&s).unwrap();
        let dim = s.dim();
        for (idx, &value) in spec.iter().enumerate() {
            let p = PauliString::from_masks(3, idx / dim, idx % dim);
            let direct = pauli_expectation(&s, &p).unwrap();
            assert!((value - direct).abs() < 1e-12, "{p}");
        }
        // pure state: sum of squared expectations is N
        let total: f64 = spec.iter().map(|c| c * c).sum();
        assert!((total - dim as f64).abs() < 1e-9);
    }

    #[test]
    fn dfe_noiseless_exact_is_one() {
        let t = sampler_state(3, 3, 2);
        let prepared = NoisyState::new(t.clone(), 0.0).unwrap();
        let est = dfe_estimate(&t, &prepared, 8, Expectations::Exact, 5).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
        assert!(est.std_error < 1e-9);
        assert_eq!(est.shots, 0);
    }

    #[test]
    fn dfe_rejects_zero_samples() {
        let t = StateVector::zero(2).unwrap();
        let prepared = NoisyState::new(t.clone(), 0.0).unwrap();
        assert!(dfe_estimate(&t, &prepared, 0, Expectations::Exact, 0).is_err());
    }

    #[test]
    fn dfe_on_product_state_samples_with_replacement() {
        // |0><0| on 1 qubit has only I and Z weights; r = 8 > 2.
        let t = StateVector::zero(1).unwrap();
        let prepared = NoisyState::new(t.clone(), 0.4).unwrap();
        let est = dfe_estimate(&t, &prepared, 8, Expectations::Exact, 1).unwrap();
        // ratios are 1 (identity) or 0.6 (Z)
        assert!(est.value >= 0.6 - 1e-12 && est.value <= 1.0 + 1e-12);
    }

    #[test]
    fn dfe_unbiased_over_repetitions() {
        let t = sampler_state(3, 3, 21);
        let eps = 0.25;
        let prepared = NoisyState::new(t.clone(), eps).unwrap();
        let exact = state_fidelity_exact(&t, &t, eps).unwrap();
        let values: Vec<f64> = (0..200)
            .map(|k| {
                dfe_estimate(&t, &prepared, 8, Expectations::Exact, k)
                    .unwrap()
                    .value
            })
            .collect();
        let (mean, sem) = mean_and_sem(&values);
        assert!(
            (mean - exact).abs() < 3.0 * sem,
            "{mean} vs {exact} ± {sem}"
        );
    }

    #[test]
    fn dfe_with_shots_runs() {
        let t = sampler_state(3, 2, 8);
        let prepared = NoisyState::new(t.clone(), 0.2).unwrap();
        let est = dfe_estimate(&t, &prepared, 16, Expectations::Shots(8000), 3).unwrap();
        assert_eq!(est.shots, 8000);
        assert!(est.value.is_finite() && est.std_error > 0.0);
    }

    #[test]
    fn shannon_examples() {
        assert!((shannon_entropy(&ProbDist::uniform(4).unwrap()) - 4.0).abs() < 1e-12);
        assert_eq!(shannon_entropy(&ProbDist::delta(3, 5).unwrap()), 0.0);
        assert!((shannon_entropy(&dist(&[0.5, 0.25, 0.25, 0.0])) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn surprise_examples() {
        let (si, su) = surprise_moments(&ProbDist::uniform(3).unwrap());
        assert!((si - 3.0).abs() < 1e-12 && (su - 3.0).abs() < 1e-12);

        let (si, su) = surprise_moments(&dist(&[0.5, 0.5, 0.0, 0.0]));
        assert!((si - 1.0).abs() < 1e-12);
        let expected = (1.0 + 1.0 + 2.0 * (1e15f64).log2()) / 4.0;
        assert!((su - expected).abs() < 1e-9);
        assert!((su - 25.41).abs() < 0.01);
    }

    #[test]
    fn information_fidelity_examples() {
        let p = sampler_state(4, 3, 6).probabilities();
        assert!((information_fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-12);
        let u = ProbDist::uniform(4).unwrap();
        assert!(information_fidelity(&u, &p).unwrap().abs() < 1e-12);
        let m = depolarize_dist(&p, 0.35).unwrap();
        assert!((information_fidelity(&m, &p).unwrap() - 0.65).abs() < 1e-9);
        assert_eq!(information_fidelity(&p, &u), Err(Error::DegenerateIdeal));
    }

    #[test]
    fn depolarizing_duality_single_case() {
        let t = sampler_state(5, 4, 13);
        let p = t.probabilities();
        let eps = 0.37;
        let f = state_fidelity_exact(&t, &t, eps).unwrap();
        let f_in = information_fidelity(&depolarize_dist(&p, eps).unwrap(), &p).unwrap();
        assert!(((1.0 - f) - (1.0 - f_in) * (1.0 - 1.0 / 32.0)).abs() < 1e-9);
        assert!((f - depolarized_state_fidelity(eps, 5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn l1_examples() {
        let a = dist(&[0.3, 0.7]);
        assert_eq!(l1_error(&a, &a).unwrap(), 0.0);
        assert_eq!(
            l1_error(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(),
            1.0
        );
        assert!((l1_error(&dist(&[0.9, 0.1]), &dist(&[0.5, 0.5])).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn summary_examples() {
        let s = dist_summary(&ProbDist::uniform(2).unwrap());
        assert_eq!(
            (s.ave, s.std, s.shannon, s.mean_index),
            (0.25, 0.0, 2.0, 1.5)
        );

        // population std of {0, 0, 0, 1} about 1/4: sqrt((3/16 + 9/16) / 4)
        let s = dist_summary(&ProbDist::delta(2, 3).unwrap());
        assert!((s.std - (0.75f64 / 4.0).sqrt()).abs() < 1e-12);
        assert!((s.std - 0.4330).abs() < 1e-4);
        assert_eq!(s.mean_index, 3.0);

        assert_eq!(dist_summary(&dist(&[0.5, 0.5, 0.0, 0.0])).mean_index, 0.5);
    }

    #[test]
    fn single_pauli_helper() {
        let p = PauliString::single(3, 2, Pauli::Y).unwrap();
        assert_eq!(p.to_string(), "IYI");
        assert_eq!(p.masks(), (0b010, 0b010, 1));
    }
}
