//! Dense statevector representation and gate kernels.
//!
//! Qubits are labelled `1..=n` along the chain. Qubit 1 is the most
//! significant bit of a basis index, so qubit `q` lives at bit `n - q`.
//! Single-qubit kernels pair amplitudes whose indices differ only in that bit;
//! the full `2^n x 2^n` operator is never formed.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 14;

/// Default shot count per measured circuit.
pub const DEFAULT_SHOTS: u64 = 8000;

const NORM_TOL: f64 = 1e-9;

type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_size(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::Size {
            n,
            min: 1,
            max: MAX_QUBITS,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn has_z(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }
}

/// Tensor product of single-qubit Paulis, one label per qubit (qubit 1 first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(labels: Vec<Pauli>) -> Self {
        PauliString(labels)
    }

    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    /// A string that is the identity everywhere except `p` on qubit `q` (1-based).
    pub fn single(n: usize, q: usize, p: Pauli) -> Result<Self> {
        if q == 0 || q > n {
            return Err(Error::Index { q, n });
        }
        let mut labels = vec![Pauli::I; n];
        labels[q - 1] = p;
        Ok(PauliString(labels))
    }

    /// Builds the string with X-part `flip` and Z-part `zmask`, using the same
    /// bit convention as basis indices. A qubit in both masks carries Y.
    pub fn from_masks(n: usize, flip: usize, zmask: usize) -> Self {
        let labels = (1..=n)
            .map(|q| {
                let bit = 1 << (n - q);
                match (flip & bit != 0, zmask & bit != 0) {
                    (false, false) => Pauli::I,
                    (true, false) => Pauli::X,
                    (true, true) => Pauli::Y,
                    (false, true) => Pauli::Z,
                }
            })
            .collect();
        PauliString(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// `(flip mask, z mask, number of Y factors)`.
    pub fn masks(&self) -> (usize, usize, usize) {
        let n = self.0.len();
        let mut flip = 0;
        let mut zmask = 0;
        let mut ny = 0;
        for (i, &p) in self.0.iter().enumerate() {
            let bit = 1 << (n - 1 - i);
            if p.flips() {
                flip |= bit;
            }
            if p.has_z() {
                zmask |= bit;
            }
            if p == Pauli::Y {
                ny += 1;
            }
        }
        (flip, zmask, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            let ch = match p {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => arg(format!("invalid Pauli label {other:?}")),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

/// `i^k` for integer `k`.
pub(crate) fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Pure state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    /// Computational basis state `|x>`.
    pub fn basis(n: usize, x: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        if x >= dim {
            return Err(Error::BasisIndex { x, dim });
        }
        let mut amps = vec![Complex64::default(); dim];
        amps[x] = c(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Wraps an amplitude vector that must already be normalized.
    pub fn from_amps(amps: Vec<Complex64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return arg(format!("amplitudes have squared norm {norm}, expected 1"));
        }
        Ok(StateVector { n, amps })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return arg("cannot normalize a zero or non-finite vector");
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, x: usize) -> Complex64 {
        self.amps[x]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn mask(&self, q: usize) -> Result<usize> {
        if q == 0 || q > self.n {
            return Err(Error::Index { q, n: self.n });
        }
        Ok(1 << (self.n - q))
    }

    /// Applies a 2x2 matrix to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, m: &Mat2) -> Result<()> {
        let mask = self.mask(q)?;
        let dim = self.amps.len();
        for base in (0..dim).step_by(mask << 1) {
            for i in base..base + mask {
                let j = i | mask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// `u(θ, φ) = exp(-iφZ/2) exp(-iθY/2)` on qubit `q`; the y rotation acts first.
    pub fn apply_u(&mut self, q: usize, theta: f64, phi: f64) -> Result<()> {
        self.apply_1q(q, &u_matrix(theta, phi))
    }

    /// Inverse of [`apply_u`](Self::apply_u): `exp(+iθY/2) exp(+iφZ/2)`.
    pub fn apply_u_dagger(&mut self, q: usize, theta: f64, phi: f64) -> Result<()> {
        self.apply_1q(q, &dagger(&u_matrix(theta, phi)))
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        self.apply_1q(q, &[[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
    }

    pub fn apply_s_dagger(&mut self, q: usize) -> Result<()> {
        self.apply_1q(
            q,
            &[[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]],
        )
    }

    /// Controlled-Z: negates every amplitude with both qubits set.
    pub fn apply_cz(&mut self, q1: usize, q2: usize) -> Result<()> {
        if q1 == q2 {
            return arg(format!("CZ needs two distinct qubits, got {q1} twice"));
        }
        let both = self.mask(q1)? | self.mask(q2)?;
        for (x, a) in self.amps.iter_mut().enumerate() {
            if x & both == both {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Applies a tensor-product Pauli operator.
    pub fn apply_pauli(&mut self, pauli: &PauliString) -> Result<()> {
        if pauli.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: pauli.len(),
            });
        }
        let (flip, zmask, ny) = pauli.masks();
        // P = i^ny X^flip Z^zmask, and X^f Z^z |x> = (-1)^{x.z} |x ^ f>.
        let global = i_pow(ny);
        let mut out = vec![Complex64::default(); self.amps.len()];
        for (x, &a) in self.amps.iter().enumerate() {
            let sign = if (x & zmask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[x ^ flip] = global * a * sign;
        }
        self.amps = out;
        Ok(())
    }

    /// Computational-basis output distribution.
    pub fn probabilities(&self) -> ProbDist {
        ProbDist {
            n: self.n,
            p: self.amps.iter().map(|a| a.norm_sqr()).collect(),
        }
    }

    /// Exact single-qubit reduced density matrix of qubit `q`.
    pub fn reduced_density_matrix(&self, q: usize) -> Result<SingleQubitRdm> {
        let mask = self.mask(q)?;
        let mut m00 = 0.0;
        let mut m11 = 0.0;
        let mut m01 = Complex64::default();
        for (i, a) in self.amps.iter().enumerate() {
            if i & mask == 0 {
                let b = self.amps[i | mask];
                m00 += a.norm_sqr();
                m11 += b.norm_sqr();
                m01 += a * b.conj();
            }
        }
        Ok(SingleQubitRdm {
            m00: c(m00, 0.0),
            m01,
            m10: m01.conj(),
            m11: c(m11, 0.0),
        })
    }

    /// Exact `(<X_q>, <Y_q>, <Z_q>)`, each obtained as `P(0) - P(1)` after
    /// rotating qubit `q` into the corresponding measurement basis.
    pub fn bloch_expectations(&self, q: usize) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (slot, basis) in out.iter_mut().zip(MeasBasis::ALL) {
            let p0 = self.basis_zero_probability(q, basis)?;
            *slot = 2.0 * p0 - 1.0;
        }
        Ok(out)
    }

    fn basis_zero_probability(&self, q: usize, basis: MeasBasis) -> Result<f64> {
        let mut rotated = self.clone();
        match basis {
            MeasBasis::X => rotated.apply_hadamard(q)?,
            MeasBasis::Y => {
                rotated.apply_s_dagger(q)?;
                rotated.apply_hadamard(q)?;
            }
            MeasBasis::Z => {}
        }
        let [p0, _] = rotated.probabilities().marginal(q)?;
        Ok(p0.clamp(0.0, 1.0))
    }

    /// Shot-based single-qubit tomography of qubit `q`.
    ///
    /// Each of the X, Y and Z bases is measured `shots` times with its own
    /// seed derived from `seed`. Unphysical reconstructions are repaired by
    /// clipping negative eigenvalues and renormalizing the trace.
    pub fn tomographic_rdm(&self, q: usize, shots: u64, seed: u64) -> Result<SingleQubitRdm> {
        if shots == 0 {
            return arg("shots must be at least 1");
        }
        let mut bloch = [0.0; 3];
        for (k, (slot, basis)) in bloch.iter_mut().zip(MeasBasis::ALL).enumerate() {
            let p0 = self.basis_zero_probability(q, basis)?;
            let mut rng = rng_from_seed(derive_seed(seed, &[q as u64, k as u64]));
            let zeros = Binomial::new(shots, p0)
                .map_err(|e| Error::Argument(e.to_string()))?
                .sample(&mut rng);
            *slot = (2.0 * zeros as f64 - shots as f64) / shots as f64;
        }
        Ok(SingleQubitRdm::from_bloch(bloch).repaired())
    }
}

#[derive(Debug, Clone, Copy)]
enum MeasBasis {
    X,
    Y,
    Z,
}

impl MeasBasis {
    const ALL: [MeasBasis; 3] = [MeasBasis::X, MeasBasis::Y, MeasBasis::Z];
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if !len.is_power_of_two() || len < 2 {
        return arg(format!(
            "amplitude vector length {len} is not 2^n with n >= 1"
        ));
    }
    let n = len.trailing_zeros() as usize;
    check_size(n)?;
    Ok(n)
}

pub(crate) fn u_matrix(theta: f64, phi: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let em = Complex64::from_polar(1.0, -phi / 2.0);
    let ep = Complex64::from_polar(1.0, phi / 2.0);
    [[em * co, -em * s], [ep * s, ep * co]]
}

fn dagger(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

/// Probability distribution over the `2^n` computational basis states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    n: usize,
    p: Vec<f64>,
}

impl ProbDist {
    /// Validates nonnegativity and normalization (tolerance 1e-9).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let n = qubits_for_len(p.len())?;
        if let Some(bad) = p.iter().find(|&&v| !v.is_finite() || v < 0.0) {
            return arg(format!("probability {bad} is negative or not finite"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return arg(format!("probabilities sum to {total}, expected 1"));
        }
        Ok(ProbDist { n, p })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        Ok(ProbDist {
            n,
            p: vec![1.0 / dim as f64; dim],
        })
    }

    pub fn delta(n: usize, x: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        if x >= dim {
            return Err(Error::BasisIndex { x, dim });
        }
        let mut p = vec![0.0; dim];
        p[x] = 1.0;
        Ok(ProbDist { n, p })
    }

    pub(crate) fn from_raw(n: usize, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), 1 << n);
        ProbDist { n, p }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }

    /// `[P(qubit q = 0), P(qubit q = 1)]`.
    pub fn marginal(&self, q: usize) -> Result<[f64; 2]> {
        if q == 0 || q > self.n {
            return Err(Error::Index { q, n: self.n });
        }
        let mask = 1 << (self.n - q);
        let mut m = [0.0; 2];
        for (x, &v) in self.p.iter().enumerate() {
            m[usize::from(x & mask != 0)] += v;
        }
        Ok(m)
    }

    /// Multinomial draw of `shots` outcomes, returned as raw counts.
    pub fn sample_histogram(&self, shots: u64, seed: u64) -> Result<Vec<u64>> {
        if shots == 0 {
            return arg("shots must be at least 1");
        }
        let index = WeightedIndex::new(&self.p).map_err(|e| Error::Argument(e.to_string()))?;
        let mut rng = rng_from_seed(seed);
        let mut counts = vec![0u64; self.p.len()];
        for _ in 0..shots {
            counts[index.sample(&mut rng)] += 1;
        }
        Ok(counts)
    }

    /// Empirical frequencies of a `shots`-sample multinomial draw.
    pub fn sample_counts(&self, shots: u64, seed: u64) -> Result<ProbDist> {
        let counts = self.sample_histogram(shots, seed)?;
        let p = counts.iter().map(|&k| k as f64 / shots as f64).collect();
        Ok(ProbDist { n: self.n, p })
    }
}

/// Reduced state of a single qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitRdm {
    pub m00: Complex64,
    pub m01: Complex64,
    pub m10: Complex64,
    pub m11: Complex64,
}

impl SingleQubitRdm {
    /// `(I + rx X + ry Y + rz Z) / 2`.
    pub fn from_bloch([rx, ry, rz]: [f64; 3]) -> Self {
        SingleQubitRdm {
            m00: c((1.0 + rz) / 2.0, 0.0),
            m01: c(rx / 2.0, -ry / 2.0),
            m10: c(rx / 2.0, ry / 2.0),
            m11: c((1.0 - rz) / 2.0, 0.0),
        }
    }

    pub fn bloch(&self) -> [f64; 3] {
        [
            (self.m01 + self.m10).re,
            (self.m10 - self.m01).im,
            (self.m00 - self.m11).re,
        ]
    }

    pub fn trace(&self) -> f64 {
        (self.m00 + self.m11).re
    }

    /// Eigenvalues in ascending order, from trace and determinant.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let t = self.trace();
        let det = (self.m00 * self.m11 - self.m01 * self.m10).re;
        let disc = (t * t / 4.0 - det).max(0.0).sqrt();
        [t / 2.0 - disc, t / 2.0 + disc]
    }

    /// Projects onto the physical set: negative eigenvalues are clipped to
    /// zero and the trace is renormalized to one.
    pub fn repaired(&self) -> Self {
        let [lo, hi] = self.eigenvalues();
        if lo >= 0.0 && (self.trace() - 1.0).abs() < 1e-15 {
            return *self;
        }
        let (lo_c, hi_c) = (lo.max(0.0), hi.max(0.0));
        let total = lo_c + hi_c;
        if total <= 0.0 {
            return SingleQubitRdm::from_bloch([0.0; 3]);
        }
        let r = self.bloch();
        let len = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len == 0.0 {
            return SingleQubitRdm::from_bloch([0.0; 3]);
        }
        // rho = (lo P- + hi P+), P± = (I ± r̂·σ)/2; keep the eigenvectors.
        let scale = (hi_c - lo_c) / total / len;
        SingleQubitRdm::from_bloch([r[0] * scale, r[1] * scale, r[2] * scale])
    }

    pub fn max_abs_diff(&self, other: &SingleQubitRdm) -> f64 {
        [
            self.m00 - other.m00,
            self.m01 - other.m01,
            self.m10 - other.m10,
            self.m11 - other.m11,
        ]
        .iter()
        .map(|d| d.norm())
        .fold(0.0, f64::max)
    }
}
