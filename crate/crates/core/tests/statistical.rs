//! Repeated-run statistical checks with fixed seeds.

mod common;

use std::collections::HashMap;

use common::{alpha_fiber, fiber_through};
use fibersis::enumerate::count_fiber;
use fibersis::genexp::{draw_cell, generate_indexed, CellBranch, GeneratorConfig, GeneratorKind};
use fibersis::model::{FiberSpec, ModelSpec, TableVector};
use fibersis::rng::substream;
use fibersis::sis::{estimate_count, sample_many, Sampler, SisConfig};
use fibersis::BoundMethod;
use num_traits::ToPrimitive;

fn fibers() -> Vec<FiberSpec> {
    let indep = |r, c, t: &str| {
        fiber_through(
            &ModelSpec::Independence { rows: r, cols: c },
            &t.parse().unwrap(),
        )
    };
    vec![
        alpha_fiber(8),
        indep(2, 3, "1 1 1 1 1 1"),
        fiber_through(
            &ModelSpec::UnivariateLogit { levels: 3 },
            &"2 1 3 1 2 0".parse().unwrap(),
        ),
        indep(3, 3, "2 0 1 1 2 0 0 1 2"),
        fiber_through(
            &ModelSpec::BivariateLogit {
                levels_i: 2,
                levels_j: 3,
            },
            &"1 2 0 1 1 2 2 0 1 1 0 1".parse().unwrap(),
        ),
    ]
}

#[test]
fn estimator_is_unbiased_within_three_standard_errors() {
    const RUNS: u64 = 40;
    for method in [BoundMethod::ExactIp, BoundMethod::LpRelaxation] {
        for sampler in [Sampler::Classical, Sampler::RejectionFree] {
            let t0 = std::time::Instant::now();
            let mut total = 0;
            let mut within = 0;
            for (f, fiber) in fibers().iter().enumerate() {
                let count = count_fiber(fiber, None).unwrap().as_u64().unwrap() as f64;
                assert!(count <= 1e5);
                for run in 0..RUNS {
                    let seed = 7919 * f as u64 + run;
                    let est = estimate_count(fiber, &SisConfig::new(sampler, method, 10_000, seed))
                        .unwrap();
                    total += 1;
                    within += usize::from((est.estimate - count).abs() <= 3.0 * est.std_error);
                }
            }
            let frac = within as f64 / total as f64;
            println!(
                "{sampler}/{method}: {within}/{total} within 3 se ({:.1}s)",
                t0.elapsed().as_secs_f64()
            );
            assert!(frac >= 0.99, "{sampler}/{method}: {within}/{total}");
        }
    }
}

#[test]
fn rejection_free_frequencies_match_inverse_weights() {
    let fiber = fiber_through(
        &ModelSpec::Independence { rows: 2, cols: 3 },
        &"2 1 0 0 1 2".parse().unwrap(),
    );
    let n = 100_000;
    let cfg = SisConfig::new(Sampler::RejectionFree, BoundMethod::ExactIp, n, 0xF4E9);
    let mut seen: HashMap<TableVector, (usize, f64)> = HashMap::new();
    for d in sample_many(&fiber, &cfg).unwrap() {
        let p = 1.0 / d.weight.to_f64().unwrap();
        let e = seen.entry(d.table.unwrap()).or_insert((0, p));
        assert_eq!(e.1, p, "weight of a table is path-determined");
        e.0 += 1;
    }
    let count = count_fiber(&fiber, None).unwrap().as_u64().unwrap();
    assert_eq!(seen.len() as u64, count);
    let total: f64 = seen.values().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (table, (hits, p)) in &seen {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let dev = (*hits as f64 - n as f64 * p).abs();
        assert!(
            dev <= 3.0 * sigma,
            "{table}: {hits} vs {:.1} (sigma {sigma:.1})",
            n as f64 * p
        );
    }
}

#[test]
fn generator_branch_probabilities() {
    let n = 100_000usize;
    let k = 20;
    let mut rng = substream(0x6E4, 0);
    let (mut large, mut zero) = (0usize, 0usize);
    for _ in 0..n {
        match draw_cell(GeneratorKind::Poisson { lambda: 1.0 }, k, &mut rng).0 {
            CellBranch::Large => large += 1,
            CellBranch::Zero => zero += 1,
            CellBranch::Small => {}
        }
    }
    let p_large = 5.0 / 2f64.powi(k as i32);
    let sd_large = (n as f64 * p_large * (1.0 - p_large)).sqrt();
    assert!(
        (large as f64 - n as f64 * p_large).abs() <= 3.0 * sd_large,
        "large={large}"
    );
    let sd_zero = (n as f64 * 0.25).sqrt();
    assert!(
        (zero as f64 - n as f64 * 0.5).abs() <= 3.0 * sd_zero,
        "zero={zero}"
    );
}

#[test]
fn generator_golden_table() {
    let cfg = GeneratorConfig {
        kind: GeneratorKind::Poisson { lambda: 1.0 },
        cells: 20,
        seed: 2012,
    };
    let table = generate_indexed(&cfg, 0).unwrap();
    let golden = include_str!("data/generator_option1_k20_seed2012.txt").trim();
    assert_eq!(table.to_string(), golden);
    assert_eq!(generate_indexed(&cfg, 0).unwrap(), table);
}
