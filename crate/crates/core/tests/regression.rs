//! Frozen OTOC decay baselines. These values come from this implementation
//! and guard against unintended changes to circuit layout, angle sampling
//! or seed derivation.

use jsampler::chaos::Otoc;
use jsampler::circuit::{AngleEnsemble, SamplerSpec};
use jsampler::seed::derive_seed;

const SEED: u64 = 0x5eed_ac7e;

fn mean_abs_f(ensemble: AngleEnsemble, layers: usize) -> f64 {
    (0..16u64)
        .map(|i| {
            let seed = derive_seed(SEED, &[7, layers as u64, i]);
            let spec = SamplerSpec::random(5, layers, ensemble, seed).unwrap();
            Otoc::new(&spec).unwrap().exact().unwrap().f.abs()
        })
        .sum::<f64>()
        / 16.0
}

#[test]
fn otoc_decay_baselines_n5() {
    let baselines = [
        (
            AngleEnsemble::EighthPi,
            [1.0, 0.921875000000000, 0.560166598670758, 0.105091363836755],
        ),
        (
            AngleEnsemble::Continuous,
            [1.0, 0.843495174777393, 0.588556794006567, 0.110159625352832],
        ),
    ];
    for (ensemble, values) in baselines {
        for (layers, expected) in [1, 2, 4, 8].into_iter().zip(values) {
            let got = mean_abs_f(ensemble, layers);
            assert!(
                (got - expected).abs() < 1e-9,
                "{ensemble} L={layers}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn seed_derivation_is_stable() {
    let spec = SamplerSpec::random(
        3,
        1,
        AngleEnsemble::CliffordHalfPi,
        derive_seed(SEED, &[1, 2, 3]),
    )
    .unwrap();
    let again = SamplerSpec::random(
        3,
        1,
        AngleEnsemble::CliffordHalfPi,
        derive_seed(SEED, &[1, 2, 3]),
    )
    .unwrap();
    assert_eq!(spec, again);
    let quarter = std::f64::consts::FRAC_PI_2;
    assert!(spec
        .params()
        .iter()
        .all(|x| (x / quarter - (x / quarter).round()).abs() < 1e-12));
}
