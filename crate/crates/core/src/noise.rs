//! Global depolarizing noise and per-qubit readout confusion, both applied at
//! the level of output distributions and fidelities.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::state::ProbDist;

/// `rho -> (1 - eps) rho + eps I/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolarizingModel {
    epsilon: f64,
}

impl DepolarizingModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return arg(format!("depolarizing strength {epsilon} outside [0, 1]"));
        }
        Ok(DepolarizingModel { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn apply(&self, p: &ProbDist) -> ProbDist {
        let u = 1.0 / p.dim() as f64;
        let eps = self.epsilon;
        let mixed = p
            .probs()
            .iter()
            .map(|&v| (1.0 - eps) * v + eps * u)
            .collect();
        ProbDist::from_raw(p.n(), mixed)
    }

    /// Fidelity of the depolarized state with its pure target.
    pub fn state_fidelity(&self, n: usize) -> f64 {
        1.0 - self.epsilon * (1.0 - (0.5f64).powi(n as i32))
    }
}

pub fn depolarize_dist(p: &ProbDist, epsilon: f64) -> Result<ProbDist> {
    Ok(DepolarizingModel::new(epsilon)?.apply(p))
}

/// `F = 1 - eps (1 - 2^-n)`.
pub fn depolarized_state_fidelity(epsilon: f64, n: usize) -> Result<f64> {
    Ok(DepolarizingModel::new(epsilon)?.state_fidelity(n))
}

/// Default flip probability used when a readout model is requested without
/// explicit values.
pub const DEFAULT_READOUT_FLIP: f64 = 0.03;

/// Independent per-qubit readout errors. `flips[i] = [p01, p10]` for qubit
/// `i + 1`: `p01` is P(read 1 | 0) and `p10` is P(read 0 | 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReadout")]
pub struct ReadoutModel {
    flips: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct RawReadout {
    flips: Vec<[f64; 2]>,
}

impl TryFrom<RawReadout> for ReadoutModel {
    type Error = Error;

    fn try_from(raw: RawReadout) -> Result<Self> {
        ReadoutModel::new(raw.flips)
    }
}

impl ReadoutModel {
    pub fn new(flips: Vec<[f64; 2]>) -> Result<Self> {
        for (i, pair) in flips.iter().enumerate() {
            for &p in pair {
                if !(0.0..=0.5).contains(&p) {
                    return arg(format!(
                        "readout flip {p} for qubit {} outside [0, 0.5]",
                        i + 1
                    ));
                }
            }
        }
        Ok(ReadoutModel { flips })
    }

    pub fn symmetric(n: usize, flip: f64) -> Result<Self> {
        ReadoutModel::new(vec![[flip, flip]; n])
    }

    pub fn default_for(n: usize) -> Self {
        ReadoutModel {
            flips: vec![[DEFAULT_READOUT_FLIP; 2]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.flips.len()
    }

    pub fn flips(&self) -> &[[f64; 2]] {
        &self.flips
    }

    /// Column-stochastic confusion matrix of qubit `q` (1-based):
    /// `m[read][true]`.
    pub fn confusion(&self, q: usize) -> [[f64; 2]; 2] {
        let [p01, p10] = self.flips[q - 1];
        [[1.0 - p01, p10], [p01, 1.0 - p10]]
    }

    /// Applies the tensor product of per-qubit confusion matrices.
    pub fn apply(&self, p: &ProbDist) -> Result<ProbDist> {
        let n = p.n();
        if self.n() != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.n(),
            });
        }
        let mut v = p.probs().to_vec();
        for q in 1..=n {
            let m = self.confusion(q);
            let mask = 1usize << (n - q);
            for base in (0..v.len()).step_by(mask << 1) {
                for i in base..base + mask {
                    let (a0, a1) = (v[i], v[i | mask]);
                    v[i] = m[0][0] * a0 + m[0][1] * a1;
                    v[i | mask] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        Ok(ProbDist::from_raw(n, v))
    }
}

pub fn apply_readout_error(p: &ProbDist, model: &ReadoutModel) -> Result<ProbDist> {
    model.apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn depolarize_examples() {
        let p = ProbDist::new(vec![0.7, 0.1, 0.2, 0.0]).unwrap();
        assert_eq!(depolarize_dist(&p, 0.0).unwrap(), p);
        assert_vec_close(depolarize_dist(&p, 1.0).unwrap().probs(), &[0.25; 4], 1e-15);
        let d = ProbDist::delta(1, 0).unwrap();
        assert_vec_close(
            depolarize_dist(&d, 0.2).unwrap().probs(),
            &[0.9, 0.1],
            1e-15,
        );
        assert!(depolarize_dist(&p, 1.2).is_err());
        assert!(depolarize_dist(&p, -0.1).is_err());
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(depolarized_state_fidelity(0.0, 3).unwrap(), 1.0);
        assert!((depolarized_state_fidelity(0.1, 2).unwrap() - 0.925).abs() < 1e-15);
        assert!(depolarized_state_fidelity(1.0, 14).unwrap() < 1e-4);
        for eps in [0.0, 0.13, 0.5, 1.0] {
            for n in 1..8 {
                let f = depolarized_state_fidelity(eps, n).unwrap();
                let closed = 1.0 - (1.0 - (1.0 - eps)) * (1.0 - 0.5f64.powi(n as i32));
                assert!((f - closed).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn readout_examples() {
        let p = ProbDist::new(vec![0.3, 0.2, 0.4, 0.1]).unwrap();
        let ident = ReadoutModel::symmetric(2, 0.0).unwrap();
        assert_vec_close(ident.apply(&p).unwrap().probs(), p.probs(), 1e-15);

        let m = ReadoutModel::new(vec![[0.05, 0.0]]).unwrap();
        let out = m.apply(&ProbDist::delta(1, 0).unwrap()).unwrap();
        assert_vec_close(out.probs(), &[0.95, 0.05], 1e-15);

        let m = ReadoutModel::symmetric(2, 0.1).unwrap();
        let out = m.apply(&ProbDist::delta(2, 0).unwrap()).unwrap();
        assert_vec_close(out.probs(), &[0.81, 0.09, 0.09, 0.01], 1e-15);

        assert!(m.apply(&ProbDist::delta(3, 0).unwrap()).is_err());
        assert!(ReadoutModel::symmetric(2, 0.6).is_err());
    }

    #[test]
    fn asymmetric_readout_targets_the_right_qubit() {
        // qubit 1 is the high bit; only it mis-reads
        let m = ReadoutModel::new(vec![[0.2, 0.0], [0.0, 0.0]]).unwrap();
        let out = m.apply(&ProbDist::delta(2, 0).unwrap()).unwrap();
        assert_vec_close(out.probs(), &[0.8, 0.0, 0.2, 0.0], 1e-15);
    }

    #[test]
    fn confusion_columns_are_stochastic() {
        let m = ReadoutModel::new(vec![[0.03, 0.4], [0.5, 0.0]]).unwrap();
        for q in 1..=2 {
            let c = m.confusion(q);
            assert!((c[0][0] + c[1][0] - 1.0).abs() < 1e-15);
            assert!((c[0][1] + c[1][1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn readout_json() {
        let m: ReadoutModel =
            serde_json::from_str(r#"{"flips": [[0.01, 0.02], [0.03, 0.04]]}"#).unwrap();
        assert_eq!(m.flips(), &[[0.01, 0.02], [0.03, 0.04]]);
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"flips":[[0.01,0.02],[0.03,0.04]]}"#
        );
        assert!(serde_json::from_str::<ReadoutModel>(r#"{"flips": [[0.7, 0.0]]}"#).is_err());
    }
}
