//! Layered sampler circuits on a qubit chain.
//!
//! One layer is: a `u(θ, φ)` column on every qubit, CZs on the pairs
//! `(1,2), (3,4), ...`, a `u` column on the interior qubits `2..=n-1`, and
//! CZs on `(2,3), (4,5), ...`. That is `2n - 2` rotations, so a depth-`L`
//! circuit consumes `2(2n - 2)L` angles. Angles are read in pairs `(θ, φ)`,
//! top of the chain first.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::seed::rng_from_seed;
use crate::state::StateVector;

/// Number of embedded angles for a chain of `n` qubits and `layers` layers.
pub fn param_count(n: usize, layers: usize) -> Result<usize> {
    if n < 2 {
        return arg(format!("a sampler chain needs at least 2 qubits, got {n}"));
    }
    Ok(2 * (2 * n - 2) * layers)
}

fn per_layer(n: usize) -> usize {
    2 * (2 * n - 2)
}

/// Full description of one sampler circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SamplerSpec {
    n: usize,
    layers: usize,
    x: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    n: usize,
    #[serde(rename = "L")]
    layers: usize,
    x: Vec<f64>,
}

impl TryFrom<RawSpec> for SamplerSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        SamplerSpec::new(raw.n, raw.layers, raw.x)
    }
}

impl From<SamplerSpec> for RawSpec {
    fn from(s: SamplerSpec) -> Self {
        RawSpec {
            n: s.n,
            layers: s.layers,
            x: s.x,
        }
    }
}

impl SamplerSpec {
    pub fn new(n: usize, layers: usize, x: Vec<f64>) -> Result<Self> {
        let m = param_count(n, layers)?;
        if x.len() != m {
            return arg(format!(
                "parameter vector has length {}, expected 2(2n-2)L = {m}",
                x.len()
            ));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return arg(format!("non-finite angle {bad}"));
        }
        Ok(SamplerSpec { n, layers, x })
    }

    /// Spec with parameters drawn from `ensemble`.
    pub fn random(n: usize, layers: usize, ensemble: AngleEnsemble, seed: u64) -> Result<Self> {
        let x = random_params(n, layers, ensemble, seed)?;
        SamplerSpec::new(n, layers, x)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.x
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Argument(e.to_string()))
    }
}

/// Distribution of the random rotation angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleEnsemble {
    /// Uniform on `[-2π, 2π]`.
    #[default]
    Continuous,
    /// Multiples of `π/2` in `[-2π, 2π]`; every gate is Clifford.
    CliffordHalfPi,
    /// Multiples of `π/4` in `[-2π, 2π]`.
    EighthPi,
}

impl AngleEnsemble {
    pub fn as_str(&self) -> &'static str {
        match self {
            AngleEnsemble::Continuous => "continuous",
            AngleEnsemble::CliffordHalfPi => "clifford_half_pi",
            AngleEnsemble::EighthPi => "eighth_pi",
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            AngleEnsemble::Continuous => rng.random_range(-2.0 * PI..=2.0 * PI),
            AngleEnsemble::CliffordHalfPi => rng.random_range(-4i32..=4) as f64 * FRAC_PI_2,
            AngleEnsemble::EighthPi => rng.random_range(-8i32..=8) as f64 * FRAC_PI_4,
        }
    }
}

impl std::fmt::Display for AngleEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AngleEnsemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(AngleEnsemble::Continuous),
            "clifford_half_pi" => Ok(AngleEnsemble::CliffordHalfPi),
            "eighth_pi" => Ok(AngleEnsemble::EighthPi),
            other => arg(format!("unknown angle ensemble {other:?}")),
        }
    }
}

pub fn random_params(
    n: usize,
    layers: usize,
    ensemble: AngleEnsemble,
    seed: u64,
) -> Result<Vec<f64>> {
    let m = param_count(n, layers)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..m).map(|_| ensemble.draw(&mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    U {
        q: usize,
        theta: f64,
        phi: f64,
    },
    /// Inverse of `U` with the same angles.
    UDagger {
        q: usize,
        theta: f64,
        phi: f64,
    },
    Cz {
        q1: usize,
        q2: usize,
    },
}

impl Gate {
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::U { q, theta, phi } => Gate::UDagger { q, theta, phi },
            Gate::UDagger { q, theta, phi } => Gate::U { q, theta, phi },
            cz @ Gate::Cz { .. } => cz,
        }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match *self {
            Gate::U { q, theta, phi } => state.apply_u(q, theta, phi),
            Gate::UDagger { q, theta, phi } => state.apply_u_dagger(q, theta, phi),
            Gate::Cz { q1, q2 } => state.apply_cz(q1, q2),
        }
    }
}

/// Ordered gate list acting on an `n`-qubit chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateSequence {
    n: usize,
    gates: Vec<Gate>,
}

impl GateSequence {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count_u(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::U { .. } | Gate::UDagger { .. }))
            .count()
    }

    pub fn count_cz(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Cz { .. }))
            .count()
    }

    /// Reversed order with every gate inverted.
    pub fn inverse(&self) -> GateSequence {
        GateSequence {
            n: self.n,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.n() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: state.n(),
            });
        }
        self.gates.iter().try_for_each(|g| g.apply(state))
    }
}

/// Gates of a single layer; `params` must hold exactly `2(2n - 2)` angles.
pub fn build_layer(n: usize, params: &[f64]) -> Result<GateSequence> {
    let mut seq = GateSequence {
        n,
        gates: Vec::new(),
    };
    push_layer(&mut seq, n, params)?;
    Ok(seq)
}

fn push_layer(seq: &mut GateSequence, n: usize, params: &[f64]) -> Result<()> {
    let expected = param_count(n, 1)?;
    if params.len() != expected {
        return arg(format!(
            "layer needs {expected} angles for n = {n}, got {}",
            params.len()
        ));
    }
    let mut angles = params.chunks_exact(2);
    let mut rotate = |q: usize, gates: &mut Vec<Gate>| {
        let pair = angles.next().expect("angle count checked above");
        gates.push(Gate::U {
            q,
            theta: pair[0],
            phi: pair[1],
        });
    };
    for q in 1..=n {
        rotate(q, &mut seq.gates);
    }
    seq.gates
        .extend((1..n).step_by(2).map(|q| Gate::Cz { q1: q, q2: q + 1 }));
    for q in 2..n {
        rotate(q, &mut seq.gates);
    }
    seq.gates
        .extend((2..n).step_by(2).map(|q| Gate::Cz { q1: q, q2: q + 1 }));
    Ok(())
}

pub fn build_circuit(spec: &SamplerSpec) -> GateSequence {
    let n = spec.n;
    let mut seq = GateSequence {
        n,
        gates: Vec::with_capacity(spec.layers * 3 * n),
    };
    for chunk in spec.x.chunks_exact(per_layer(n)) {
        push_layer(&mut seq, n, chunk).expect("spec invariants guarantee slice length");
    }
    seq
}

/// Applies `U` for `spec` to `state`.
pub fn apply_sampler(state: &mut StateVector, spec: &SamplerSpec) -> Result<()> {
    build_circuit(spec).apply(state)
}

/// Applies `U†` for `spec` to `state`.
pub fn apply_inverse_sampler(state: &mut StateVector, spec: &SamplerSpec) -> Result<()> {
    build_circuit(spec).inverse().apply(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_count_examples() {
        assert_eq!(param_count(4, 1).unwrap(), 12);
        assert_eq!(param_count(6, 2).unwrap(), 40);
        assert_eq!(param_count(2, 0).unwrap(), 0);
        assert!(param_count(1, 3).is_err());
    }

    #[test]
    fn layer_shapes() {
        let l = build_layer(2, &[0.1; 4]).unwrap();
        assert_eq!((l.count_u(), l.count_cz()), (2, 1));
        assert_eq!(l.gates()[2], Gate::Cz { q1: 1, q2: 2 });

        let l = build_layer(4, &[0.1; 12]).unwrap();
        assert_eq!((l.count_u(), l.count_cz()), (6, 3));
        let czs: Vec<_> = l
            .gates()
            .iter()
            .filter_map(|g| match g {
                Gate::Cz { q1, q2 } => Some((*q1, *q2)),
                _ => None,
            })
            .collect();
        assert_eq!(czs, vec![(1, 2), (3, 4), (2, 3)]);

        let l = build_layer(6, &[0.1; 20]).unwrap();
        assert_eq!((l.count_u(), l.count_cz()), (10, 5));

        assert!(build_layer(4, &[0.1; 11]).is_err());
    }

    #[test]
    fn angle_mapping_is_top_to_bottom_theta_first() {
        let params: Vec<f64> = (0..12).map(f64::from).collect();
        let l = build_layer(4, &params).unwrap();
        assert_eq!(
            l.gates()[0],
            Gate::U {
                q: 1,
                theta: 0.0,
                phi: 1.0
            }
        );
        assert_eq!(
            l.gates()[3],
            Gate::U {
                q: 4,
                theta: 6.0,
                phi: 7.0
            }
        );
        // interior column after the first CZ column
        assert_eq!(
            l.gates()[6],
            Gate::U {
                q: 2,
                theta: 8.0,
                phi: 9.0
            }
        );
        assert_eq!(
            l.gates()[7],
            Gate::U {
                q: 3,
                theta: 10.0,
                phi: 11.0
            }
        );
    }

    #[test]
    fn circuit_examples() {
        let empty = SamplerSpec::new(3, 0, vec![]).unwrap();
        assert!(build_circuit(&empty).is_empty());

        let spec = SamplerSpec::random(4, 2, AngleEnsemble::Continuous, 1).unwrap();
        let c = build_circuit(&spec);
        assert_eq!((c.count_u(), c.count_cz()), (12, 6));
        assert_eq!(c, build_circuit(&spec));
    }

    #[test]
    fn spec_rejects_wrong_length() {
        assert!(SamplerSpec::new(4, 1, vec![0.0; 11]).is_err());
        assert!(SamplerSpec::new(4, 1, vec![f64::NAN; 12]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SamplerSpec::random(3, 1, AngleEnsemble::EighthPi, 5).unwrap();
        let json = spec.to_json();
        assert!(json.starts_with("{\"n\":3,\"L\":1,\"x\":["));
        assert_eq!(SamplerSpec::from_json(&json).unwrap(), spec);
        assert!(SamplerSpec::from_json(r#"{"n":3,"L":1,"x":[1.0]}"#).is_err());
    }

    #[test]
    fn zero_angles_leave_zero_state() {
        let spec = SamplerSpec::new(5, 3, vec![0.0; param_count(5, 3).unwrap()]).unwrap();
        let mut s = StateVector::zero(5).unwrap();
        apply_sampler(&mut s, &spec).unwrap();
        assert_eq!(s, StateVector::zero(5).unwrap());
    }

    #[test]
    fn forward_then_inverse() {
        let spec = SamplerSpec::random(5, 4, AngleEnsemble::Continuous, 17).unwrap();
        let mut s = StateVector::zero(5).unwrap();
        apply_sampler(&mut s, &spec).unwrap();
        apply_inverse_sampler(&mut s, &spec).unwrap();
        let zero = StateVector::zero(5).unwrap();
        for (a, b) in s.amps().iter().zip(zero.amps()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let spec = SamplerSpec::random(3, 1, AngleEnsemble::Continuous, 1).unwrap();
        let mut s = StateVector::zero(4).unwrap();
        assert!(matches!(
            apply_sampler(&mut s, &spec),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn ensemble_supports() {
        let x = random_params(5, 3, AngleEnsemble::CliffordHalfPi, 2).unwrap();
        for v in &x {
            let k = v / FRAC_PI_2;
            assert!((k - k.round()).abs() < 1e-12 && k.abs() <= 4.0 + 1e-12);
        }
        let x = random_params(5, 3, AngleEnsemble::EighthPi, 2).unwrap();
        for v in &x {
            let k = v / FRAC_PI_4;
            assert!((k - k.round()).abs() < 1e-12 && k.abs() <= 8.0 + 1e-12);
        }
        let x = random_params(5, 3, AngleEnsemble::Continuous, 2).unwrap();
        assert!(x.iter().all(|v| v.abs() <= 2.0 * PI));
        assert_eq!(
            x,
            random_params(5, 3, AngleEnsemble::Continuous, 2).unwrap()
        );
    }

    #[test]
    fn ensemble_names() {
        for e in [
            AngleEnsemble::Continuous,
            AngleEnsemble::CliffordHalfPi,
            AngleEnsemble::EighthPi,
        ] {
            assert_eq!(e.as_str().parse::<AngleEnsemble>().unwrap(), e);
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{e}\""));
        }
    }
}
