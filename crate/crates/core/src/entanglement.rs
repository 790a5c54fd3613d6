//! Single-qubit purity based entanglement measures and their Haar averages.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::fidelity::mean_and_sem;
use crate::seed::{derive_seed, rng_from_seed, SimRng};
use crate::state::{SingleQubitRdm, StateVector};

/// Largest register accepted by the Haar sampler.
pub const HAAR_MAX_QUBITS: usize = 8;

/// `Tr(rho^2)`.
pub fn purity(rdm: &SingleQubitRdm) -> f64 {
    rdm.m00.norm_sqr() + rdm.m11.norm_sqr() + (rdm.m01 * rdm.m10).re * 2.0
}

/// Von Neumann entropy in bits.
pub fn von_neumann_bits(rdm: &SingleQubitRdm) -> f64 {
    rdm.eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub gammas: Vec<f64>,
    pub gamma_bar: f64,
    /// `2(1 - gamma_bar)`.
    pub q: f64,
    /// Mean second Renyi entropy, bits.
    pub s2: f64,
    /// Mean single-qubit entanglement entropy, bits.
    pub se: f64,
}

impl EntanglementReport {
    pub fn from_rdms(rdms: &[SingleQubitRdm]) -> Self {
        let n = rdms.len() as f64;
        let gammas: Vec<f64> = rdms.iter().map(purity).collect();
        let gamma_bar = gammas.iter().sum::<f64>() / n;
        // `+ 0.0` turns the -0.0 of pure states into 0.0
        let s2 = -gammas.iter().map(|g| g.log2()).sum::<f64>() / n + 0.0;
        let se = rdms.iter().map(von_neumann_bits).sum::<f64>() / n + 0.0;
        EntanglementReport {
            q: 2.0 * (1.0 - gamma_bar),
            gammas,
            gamma_bar,
            s2,
            se,
        }
    }
}

fn require_chain(state: &StateVector) -> Result<()> {
    if state.n() < 2 {
        return arg("entanglement measures need at least 2 qubits");
    }
    Ok(())
}

/// All measures from exact reduced density matrices.
pub fn entanglement_report(state: &StateVector) -> Result<EntanglementReport> {
    require_chain(state)?;
    let rdms = (1..=state.n())
        .map(|q| state.reduced_density_matrix(q))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntanglementReport::from_rdms(&rdms))
}

/// All measures from shot-based single-qubit tomography, one qubit at a time.
pub fn tomographic_report(
    state: &StateVector,
    shots: u64,
    seed: u64,
) -> Result<EntanglementReport> {
    require_chain(state)?;
    let rdms = (1..=state.n())
        .map(|q| state.tomographic_rdm(q, shots, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntanglementReport::from_rdms(&rdms))
}

pub fn q_measure(state: &StateVector) -> Result<f64> {
    Ok(entanglement_report(state)?.q)
}

pub fn renyi2(state: &StateVector) -> Result<f64> {
    Ok(entanglement_report(state)?.s2)
}

pub fn entanglement_entropy(state: &StateVector) -> Result<f64> {
    Ok(entanglement_report(state)?.se)
}

/// Haar average of the Q measure, `(N - 2)/(N + 1)`.
pub fn haar_q(n: usize) -> f64 {
    let dim = (1u64 << n) as f64;
    (dim - 2.0) / (dim + 1.0)
}

/// Haar-averaged entanglement entropy (bits) of a `d_a`-dimensional
/// subsystem of a random pure state on `d_a * d_b` dimensions.
pub fn page_entropy(d_a: u64, d_b: u64) -> Result<f64> {
    if d_a == 0 || d_b == 0 {
        return arg("subsystem dimensions must be at least 1");
    }
    if d_a > d_b {
        return arg(format!("page entropy needs d_a <= d_b, got {d_a} > {d_b}"));
    }
    let harmonic: f64 = (d_b + 1..=d_a * d_b).map(|k| 1.0 / k as f64).sum();
    let nats = harmonic - (d_a - 1) as f64 / (2 * d_b) as f64;
    Ok(nats / std::f64::consts::LN_2)
}

/// Tangent-line approximation of `S2` about the purity `gamma0`:
/// `a - b * gamma_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedRenyi {
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

pub fn linearized_renyi(gamma_bar: f64, gamma0: f64) -> Result<LinearizedRenyi> {
    if !(gamma0 > 0.0 && gamma0 <= 1.0) {
        return arg(format!("reference purity {gamma0} outside (0, 1]"));
    }
    let ln2 = std::f64::consts::LN_2;
    let a = (1.0 / gamma0).log2() + 1.0 / ln2;
    let b = 1.0 / (gamma0 * ln2);
    Ok(LinearizedRenyi {
        a,
        b,
        value: a - b * gamma_bar,
    })
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn haar_state(n: usize, rng: &mut SimRng) -> Result<StateVector> {
    let dim = 1usize.checked_shl(n as u32).unwrap_or(0);
    let amps = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    StateVector::normalized(amps)
}

/// Entanglement measures over a batch of Haar-random states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarSample {
    pub n: usize,
    pub q: Vec<f64>,
    pub s2: Vec<f64>,
    pub se: Vec<f64>,
}

impl HaarSample {
    pub fn q_stats(&self) -> (f64, f64) {
        mean_and_sem(&self.q)
    }

    pub fn s2_stats(&self) -> (f64, f64) {
        mean_and_sem(&self.s2)
    }

    pub fn se_stats(&self) -> (f64, f64) {
        mean_and_sem(&self.se)
    }
}

/// Draws `count` Haar states (draw `i` seeded by `derive_seed(seed, [i])`)
/// and evaluates Q, S2 and Se on each.
pub fn haar_reference_sample(n: usize, count: usize, seed: u64) -> Result<HaarSample> {
    if !(2..=HAAR_MAX_QUBITS).contains(&n) {
        return arg(format!(
            "Haar sampler supports 2 <= n <= {HAAR_MAX_QUBITS}, got {n}"
        ));
    }
    let reports = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
            entanglement_report(&haar_state(n, &mut rng)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HaarSample {
        n,
        q: reports.iter().map(|r| r.q).collect(),
        s2: reports.iter().map(|r| r.s2).collect(),
        se: reports.iter().map(|r| r.se).collect(),
    })
}
