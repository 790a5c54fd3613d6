//! Porter-Thomas statistics and out-of-time-order correlators of sampler
//! circuits.
//!
//! The correlator is `F = Tr(W V W V) / N` with `V = Y_1` and
//! `W = U† X_n U`, where `U` is the sampler circuit. Each basis state
//! contributes `G(x) = <x|W V W V|x>`, evaluated by applying the operators to
//! `|x>` one at a time.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, GateSequence, SamplerSpec};
use crate::error::{arg, Error, Result};
use crate::seed::rng_from_seed;
use crate::state::{Pauli, PauliString, ProbDist, StateVector};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest register for which the full trace is evaluated.
pub const OTOC_EXACT_MAX_QUBITS: usize = 12;

/// Scale of `|Im G(x)|` above which a run is flagged.
pub const IMAG_WARN_LEVEL: f64 = 0.10;

/// Universal Porter-Thomas entropy value `n - 1 + γ`.
pub fn pt_entropy(n: usize) -> f64 {
    n as f64 - 1.0 + EULER_GAMMA
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtBin {
    /// Bin edges in the scaled variable `N p`.
    pub lo: f64,
    pub hi: f64,
    /// Observed density of `N p`.
    pub observed: f64,
    /// Porter-Thomas density `exp(-N p)` averaged over the bin.
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtHistogram {
    pub n: usize,
    pub bins: Vec<PtBin>,
    /// Fraction of values at or beyond the last edge.
    pub overflow: f64,
    pub samples: usize,
    pub one_over_n: f64,
}

impl PtHistogram {
    /// Integral of the observed density over the binned range.
    pub fn observed_mass(&self) -> f64 {
        self.bins.iter().map(|b| b.observed * (b.hi - b.lo)).sum()
    }
}

/// Pools the scaled probabilities `N p(x)` of every distribution into
/// `bins` equal bins on `[0, upper)`.
pub fn pt_histogram(dists: &[ProbDist], bins: usize, upper: f64) -> Result<PtHistogram> {
    let first = dists
        .first()
        .ok_or_else(|| Error::Argument("no distributions to histogram".into()))?;
    if bins == 0 || !upper.is_finite() || upper <= 0.0 {
        return arg("histogram needs at least one bin and a positive upper edge");
    }
    let n = first.n();
    if let Some(d) = dists.iter().find(|d| d.n() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: d.n(),
        });
    }
    let dim = first.dim() as f64;
    let width = upper / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut overflow = 0usize;
    for d in dists {
        for &p in d.probs() {
            let k = (p * dim / width).floor() as usize;
            match counts.get_mut(k) {
                Some(c) => *c += 1,
                None => overflow += 1,
            }
        }
    }
    let samples = dists.len() * first.dim();
    let bins = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let lo = k as f64 * width;
            let hi = lo + width;
            PtBin {
                lo,
                hi,
                observed: c as f64 / (samples as f64 * width),
                reference: ((-lo).exp() - (-hi).exp()) / width,
            }
        })
        .collect();
    Ok(PtHistogram {
        n,
        bins,
        overflow: overflow as f64 / samples as f64,
        samples,
        one_over_n: 1.0 / dim,
    })
}

/// The local operators of the correlator. Defaults to `V = Y_1`, `W0 = X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OtocOperators {
    pub v: PauliString,
    pub w0: PauliString,
}

impl OtocOperators {
    pub fn chain_ends(n: usize) -> Result<Self> {
        Ok(OtocOperators {
            v: PauliString::single(n, 1, Pauli::Y)?,
            w0: PauliString::single(n, n, Pauli::X)?,
        })
    }
}

/// Ordering of the four operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// `W V W V`, the out-of-time-order correlator.
    Wvwv,
    /// `W V V W`, ideally the identity.
    Wvvw,
}

/// Sampler circuit prepared for repeated correlator evaluation.
#[derive(Debug, Clone)]
pub struct Otoc {
    n: usize,
    forward: GateSequence,
    backward: GateSequence,
    ops: OtocOperators,
}

impl Otoc {
    pub fn new(spec: &SamplerSpec) -> Result<Self> {
        Self::with_operators(spec, OtocOperators::chain_ends(spec.n())?)
    }

    pub fn with_operators(spec: &SamplerSpec, ops: OtocOperators) -> Result<Self> {
        let n = spec.n();
        for p in [&ops.v, &ops.w0] {
            if p.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: p.len(),
                });
            }
        }
        let forward = build_circuit(spec);
        let backward = forward.inverse();
        Ok(Otoc {
            n,
            forward,
            backward,
            ops,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn apply_w(&self, s: &mut StateVector) -> Result<()> {
        self.forward.apply(s)?;
        s.apply_pauli(&self.ops.w0)?;
        self.backward.apply(s)
    }

    fn apply_v(&self, s: &mut StateVector) -> Result<()> {
        s.apply_pauli(&self.ops.v)
    }

    /// `<x|O|x>` for the chosen operator ordering.
    pub fn correlator(&self, x: usize, ordering: Ordering) -> Result<Complex64> {
        let mut s = StateVector::basis(self.n, x)?;
        // rightmost operator acts first
        match ordering {
            Ordering::Wvwv => {
                self.apply_v(&mut s)?;
                self.apply_w(&mut s)?;
                self.apply_v(&mut s)?;
                self.apply_w(&mut s)?;
            }
            Ordering::Wvvw => {
                self.apply_w(&mut s)?;
                self.apply_v(&mut s)?;
                self.apply_v(&mut s)?;
                self.apply_w(&mut s)?;
            }
        }
        Ok(s.amp(x))
    }

    /// `G(x) = <x|W V W V|x>`.
    pub fn g(&self, x: usize) -> Result<Complex64> {
        self.correlator(x, Ordering::Wvwv)
    }

    pub fn wvvw(&self, x: usize) -> Result<Complex64> {
        self.correlator(x, Ordering::Wvvw)
    }

    /// Correlator at each of `xs`, in the given order.
    pub fn correlators(&self, xs: &[usize], ordering: Ordering) -> Result<Vec<Complex64>> {
        xs.par_iter()
            .map(|&x| self.correlator(x, ordering))
            .collect()
    }

    /// Full trace over all `N` basis states.
    pub fn exact(&self) -> Result<OtocExact> {
        if self.n > OTOC_EXACT_MAX_QUBITS {
            return Err(Error::Size {
                n: self.n,
                min: 1,
                max: OTOC_EXACT_MAX_QUBITS,
            });
        }
        let xs: Vec<usize> = (0..self.dim()).collect();
        let g = self.correlators(&xs, Ordering::Wvwv)?;
        let sum: Complex64 = g.iter().sum();
        let f = sum / self.dim() as f64;
        if f.im.abs() > 1e-6 {
            return Err(Error::Consistency(format!(
                "OTOC trace has imaginary part {:e}",
                f.im
            )));
        }
        let max_im_g = max_imag(&g);
        Ok(OtocExact {
            f: f.re,
            c: 2.0 * (1.0 - f.re),
            g,
            max_im_g,
        })
    }

    /// `nu` distinct basis states drawn uniformly.
    pub fn sample_states(&self, nu: usize, seed: u64) -> Result<Vec<usize>> {
        if nu == 0 || nu > self.dim() {
            return arg(format!(
                "trace sample count {nu} outside [1, {}]",
                self.dim()
            ));
        }
        let mut rng = rng_from_seed(seed);
        Ok(rand::seq::index::sample(&mut rng, self.dim(), nu).into_vec())
    }

    pub fn stochastic(&self, nu: usize, seed: u64, mode: TraceMode) -> Result<f64> {
        let xs = self.sample_states(nu, seed)?;
        let g = self.correlators(&xs, Ordering::Wvwv)?;
        Ok(mode.average(&g))
    }
}

fn max_imag(g: &[Complex64]) -> f64 {
    g.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtocExact {
    /// Real OTOC trace.
    pub f: f64,
    /// `2(1 - F)`.
    pub c: f64,
    /// `G(x)` for every basis state, indexed by `x`.
    pub g: Vec<Complex64>,
    pub max_im_g: f64,
}

/// Reduction used by the stochastic trace estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Mean of `Re G(x)`; estimates `F`.
    RealPart,
    /// Mean of `|G(x)|`; estimates `|F|`.
    #[default]
    Abs,
}

impl TraceMode {
    pub fn average(&self, g: &[Complex64]) -> f64 {
        let total: f64 = match self {
            TraceMode::RealPart => g.iter().map(|v| v.re).sum(),
            TraceMode::Abs => g.iter().map(|v| v.norm()).sum(),
        };
        total / g.len() as f64
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TraceMode::RealPart => "real_part",
            TraceMode::Abs => "abs",
        }
    }
}

pub fn otoc_g(spec: &SamplerSpec, x: usize) -> Result<Complex64> {
    Otoc::new(spec)?.g(x)
}

/// `(F, C)` from the full trace.
pub fn otoc_f_exact(spec: &SamplerSpec) -> Result<(f64, f64)> {
    let e = Otoc::new(spec)?.exact()?;
    Ok((e.f, e.c))
}

pub fn otoc_f_stochastic(spec: &SamplerSpec, nu: usize, seed: u64, mode: TraceMode) -> Result<f64> {
    Otoc::new(spec)?.stochastic(nu, seed, mode)
}

pub fn wvvw_correlator(spec: &SamplerSpec, x: usize) -> Result<Complex64> {
    Otoc::new(spec)?.wvvw(x)
}

/// Correlator value seen through global depolarizing noise of strength
/// `epsilon` acting on the return-probability measurement: `|G|^2` becomes
/// `(1 - eps)|G|^2 + eps/N` and the phase of `G` is kept.
pub fn damp_correlator(g: Complex64, epsilon: f64, n: usize) -> Complex64 {
    if epsilon == 0.0 {
        return g;
    }
    let dim = (1u64 << n) as f64;
    let magnitude = ((1.0 - epsilon) * g.norm_sqr() + epsilon / dim).sqrt();
    if g.norm() > 0.0 {
        g / g.norm() * magnitude
    } else {
        Complex64::new(magnitude, 0.0)
    }
}

/// `|<WVWV>| / |<WVVW>|` over the basis states `xs`, both correlators
/// averaged over the same states.
pub fn otoc_ratio_over(otoc: &Otoc, xs: &[usize], epsilon: f64) -> Result<f64> {
    let n = otoc.n();
    let mean = |ordering| -> Result<Complex64> {
        let vals = otoc.correlators(xs, ordering)?;
        let sum: Complex64 = vals.iter().map(|&g| damp_correlator(g, epsilon, n)).sum();
        Ok(sum / xs.len() as f64)
    };
    let num = mean(Ordering::Wvwv)?.norm();
    let den = mean(Ordering::Wvvw)?.norm();
    if den < 1e-6 {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok(num / den)
}

/// Ratio metric over `nu` sampled basis states (`nu = N` gives the full trace).
pub fn otoc_ratio(spec: &SamplerSpec, nu: usize, seed: u64, epsilon: f64) -> Result<f64> {
    let otoc = Otoc::new(spec)?;
    let xs = otoc.sample_states(nu, seed)?;
    otoc_ratio_over(&otoc, &xs, epsilon)
}

/// Every correlator quantity for one circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtocRecord {
    pub spec: SamplerSpec,
    /// `(x, G(x))` for every basis state.
    pub g: Vec<(usize, Complex64)>,
    pub f_exact: f64,
    pub c: f64,
    pub f_stochastic: f64,
    pub nu: usize,
    pub mode: TraceMode,
    /// Mean `WVVW` correlator magnitude over the sampled states.
    pub wvvw: f64,
    pub ratio: f64,
    pub max_im_g: f64,
}

/// Evaluates the exact trace, the stochastic estimate over `nu` sampled
/// states, the `WVVW` reference and the ratio metric. With `epsilon > 0` the
/// sampled quantities pass through [`damp_correlator`]; `f_exact` is always
/// the noiseless trace.
pub fn otoc_record(
    spec: &SamplerSpec,
    nu: usize,
    seed: u64,
    mode: TraceMode,
    epsilon: f64,
) -> Result<OtocRecord> {
    if !(0.0..=1.0).contains(&epsilon) {
        return arg(format!("depolarizing strength {epsilon} outside [0, 1]"));
    }
    let otoc = Otoc::new(spec)?;
    let n = otoc.n();
    let exact = otoc.exact()?;
    let xs = otoc.sample_states(nu, seed)?;
    let g_sampled: Vec<Complex64> = xs
        .iter()
        .map(|&x| damp_correlator(exact.g[x], epsilon, n))
        .collect();
    let wvvw_sampled: Vec<Complex64> = otoc
        .correlators(&xs, Ordering::Wvvw)?
        .into_iter()
        .map(|v| damp_correlator(v, epsilon, n))
        .collect();
    let num: Complex64 = g_sampled.iter().sum::<Complex64>() / nu as f64;
    let den: Complex64 = wvvw_sampled.iter().sum::<Complex64>() / nu as f64;
    if den.norm() < 1e-6 {
        return Err(Error::DegenerateDenominator(den.norm()));
    }
    let max_im_g = max_imag(&exact.g);
    if max_im_g > IMAG_WARN_LEVEL {
        warn!(
            "max |Im G(x)| = {max_im_g:.3} exceeds {IMAG_WARN_LEVEL} (n = {}, L = {})",
            spec.n(),
            spec.layers()
        );
    }
    Ok(OtocRecord {
        spec: spec.clone(),
        g: exact.g.iter().copied().enumerate().collect(),
        f_exact: exact.f,
        c: exact.c,
        f_stochastic: mode.average(&g_sampled),
        nu,
        mode,
        wvvw: den.norm(),
        ratio: num.norm() / den.norm(),
        max_im_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::AngleEnsemble;

    fn spec(n: usize, layers: usize, e: AngleEnsemble, seed: u64) -> SamplerSpec {
        SamplerSpec::random(n, layers, e, seed).unwrap()
    }

    #[test]
    fn pt_entropy_values() {
        assert!((pt_entropy(1) - 0.577).abs() < 5e-4);
        assert!((pt_entropy(6) - 5.577).abs() < 5e-4);
        for n in 1..10 {
            assert!((n as f64 - pt_entropy(n) - 0.423).abs() < 5e-4);
        }
    }

    #[test]
    fn uniform_histogram_sits_at_one() {
        let h = pt_histogram(&[ProbDist::uniform(4).unwrap()], 8, 4.0).unwrap();
        let bin = h
            .bins
            .iter()
            .position(|b| b.lo <= 1.0 && 1.0 < b.hi)
            .unwrap();
        assert!((h.bins[bin].observed * (h.bins[bin].hi - h.bins[bin].lo) - 1.0).abs() < 1e-12);
        assert!((h.observed_mass() - 1.0).abs() < 1e-12);
        assert_eq!(h.one_over_n, 0.0625);
    }

    #[test]
    fn histogram_errors() {
        assert!(pt_histogram(&[], 4, 4.0).is_err());
        let mixed = [ProbDist::uniform(2).unwrap(), ProbDist::uniform(3).unwrap()];
        assert!(pt_histogram(&mixed, 4, 4.0).is_err());
        assert!(pt_histogram(&mixed[..1], 0, 4.0).is_err());
    }

    #[test]
    fn identity_circuit_does_not_scramble() {
        let s = SamplerSpec::new(4, 0, vec![]).unwrap();
        for x in 0..16 {
            assert!((otoc_g(&s, x).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let (f, c) = otoc_f_exact(&s).unwrap();
        assert!((f - 1.0).abs() < 1e-12 && c.abs() < 1e-12);
        for mode in [TraceMode::RealPart, TraceMode::Abs] {
            assert!((otoc_f_stochastic(&s, 5, 1, mode).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((wvvw_correlator(&s, 3).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clifford_correlators_are_unimodular() {
        let s = spec(4, 5, AngleEnsemble::CliffordHalfPi, 12);
        let otoc = Otoc::new(&s).unwrap();
        for x in 0..16 {
            assert!((otoc.g(x).unwrap().norm() - 1.0).abs() < 1e-9);
        }
        assert!((otoc.exact().unwrap().f.abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deep_continuous_circuit_scrambles() {
        let mut mean_abs = 0.0;
        for seed in 0..10 {
            let s = spec(5, 12, AngleEnsemble::Continuous, seed);
            let e = Otoc::new(&s).unwrap().exact().unwrap();
            assert!(e.g.iter().all(|g| g.norm() <= 1.0 + 1e-9));
            assert!((e.c - 2.0 * (1.0 - e.f)).abs() < 1e-12);
            mean_abs += e.f.abs() / 10.0;
        }
        assert!(mean_abs < 0.2, "{mean_abs}");
    }

    #[test]
    fn full_enumeration_matches_exact() {
        let s = spec(4, 3, AngleEnsemble::Continuous, 7);
        let otoc = Otoc::new(&s).unwrap();
        let e = otoc.exact().unwrap();
        let re = otoc.stochastic(16, 3, TraceMode::RealPart).unwrap();
        assert!((re - e.f).abs() < 1e-12);
        let abs = otoc.stochastic(16, 3, TraceMode::Abs).unwrap();
        assert!(abs >= e.f.abs() - 1e-12);
        assert!(otoc.stochastic(17, 3, TraceMode::Abs).is_err());
        assert!(otoc.stochastic(0, 3, TraceMode::Abs).is_err());
    }

    #[test]
    fn sampled_states_are_distinct() {
        let s = spec(5, 1, AngleEnsemble::Continuous, 1);
        let mut xs = Otoc::new(&s).unwrap().sample_states(20, 9).unwrap();
        xs.sort_unstable();
        xs.dedup();
        assert_eq!(xs.len(), 20);
    }

    #[test]
    fn wvvw_is_identity_and_ratio_matches_trace() {
        let s = spec(5, 4, AngleEnsemble::Continuous, 2);
        let otoc = Otoc::new(&s).unwrap();
        for x in [0, 7, 31] {
            assert!((otoc.wvvw(x).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        let (f, _) = otoc_f_exact(&s).unwrap();
        let ratio = otoc_ratio(&s, 32, 0, 0.0).unwrap();
        assert!((ratio - f.abs()).abs() < 1e-9);
    }

    #[test]
    fn noise_damps_wvvw() {
        let s = spec(4, 2, AngleEnsemble::Continuous, 3);
        let rec = otoc_record(&s, 16, 1, TraceMode::Abs, 0.2).unwrap();
        assert!(rec.wvvw < 1.0);
        let expected = (0.8f64 + 0.2 / 16.0).sqrt();
        assert!((rec.wvvw - expected).abs() < 1e-9);
        let clean = otoc_record(&s, 16, 1, TraceMode::Abs, 0.0).unwrap();
        assert!((clean.wvvw - 1.0).abs() < 1e-9);
        assert!((clean.ratio - clean.f_exact.abs()).abs() < 1e-9);
    }

    #[test]
    fn clifford_ratio_is_one_under_noise() {
        let s = spec(3, 3, AngleEnsemble::CliffordHalfPi, 5);
        let otoc = Otoc::new(&s).unwrap();
        let xs: Vec<usize> = (0..8).collect();
        let r = otoc_ratio_over(&otoc, &xs, 0.0).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn custom_operators_are_checked() {
        let s = spec(3, 1, AngleEnsemble::Continuous, 1);
        let ops = OtocOperators {
            v: "YI".parse().unwrap(),
            w0: "IIX".parse().unwrap(),
        };
        assert!(Otoc::with_operators(&s, ops).is_err());
    }
}
