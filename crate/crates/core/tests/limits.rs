use lecam_core::asymptotics::{
    draw_uniforms, lan_remainder, simulate_filtered, ProductExperimentSpec,
};
use lecam_core::gaussian::{BrownianPath, ItoIntegrator};
use lecam_core::hazard::{cumulative_variance, hazard_derivative};
use lecam_core::stats::{ks_distance, median};
use lecam_core::tangent::linear;
use lecam_core::{Executor, RngStreamSpec, TimeGrid};

/// Two-sample KS distance.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut b = b.to_vec();
    b.sort_by(f64::total_cmp);
    let ecdf_b = |x: f64| b.partition_point(|&v| v <= x) as f64 / b.len() as f64;
    let mut a_sorted = a.to_vec();
    a_sorted.sort_by(f64::total_cmp);
    let d1 = ks_distance(&a_sorted, ecdf_b);
    let ecdf_a = |x: f64| a_sorted.partition_point(|&v| v <= x) as f64 / a_sorted.len() as f64;
    d1.max(ks_distance(&b, ecdf_a))
}

#[test]
fn central_sequence_matches_ito_integral() {
    let spec = ProductExperimentSpec::single(linear(), 10_000).unwrap();
    let exec = Executor::new(4);
    let paths = simulate_filtered(&spec, 0, 2000, RngStreamSpec::new(31, 0), &exec).unwrap();
    let grid = TimeGrid::uniform(513, 1.0).unwrap();
    let ito = ItoIntegrator::new(&hazard_derivative(&linear()), &grid).unwrap();
    for (k, t) in [(16usize, 0.5), (32, 1.0)] {
        let z: Vec<f64> = paths.iter().map(|p| p.z[k]).collect();
        let idx = grid.index_of(t).unwrap();
        let w = exec.collect(RngStreamSpec::new(31, 1), 2000, |r| {
            let b = BrownianPath::sample(&grid, r);
            ito.log_path(&b)[idx]
                + 0.5 * cumulative_variance(&hazard_derivative(&linear()), t).unwrap()
        });
        let d = ks_two_sample(&z, &w);
        // two-sample 5% critical value at 2000/2000 is about 0.043
        assert!(d < 0.05, "t={t}: KS {d}");
    }
}

#[test]
fn lan_remainder_shrinks() {
    let meds: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let spec = ProductExperimentSpec::single(linear(), n).unwrap();
            let rems = Executor::new(4)
                .try_collect(RngStreamSpec::new(32, k as u64), 1000, |r| {
                    lan_remainder(&spec, 0, &draw_uniforms(n, r))
                })
                .unwrap();
            median(&rems)
        })
        .collect();
    assert!(meds[0] > meds[1] && meds[1] > meds[2], "{meds:?}");
}

#[test]
fn quadratic_variation_mean_path_is_nondecreasing() {
    let spec = ProductExperimentSpec::single(linear(), 1000).unwrap();
    let paths =
        simulate_filtered(&spec, 0, 500, RngStreamSpec::new(33, 0), &Executor::new(4)).unwrap();
    let k = paths[0].quadratic_variation.len();
    let means: Vec<f64> = (0..k)
        .map(|i| paths.iter().map(|p| p.quadratic_variation[i]).sum::<f64>() / paths.len() as f64)
        .collect();
    for w in means.windows(2) {
        assert!(w[1] >= w[0] - 1e-3, "{w:?}");
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let spec = ProductExperimentSpec::single(linear(), 200).unwrap();
    let a =
        simulate_filtered(&spec, 0, 9000, RngStreamSpec::new(34, 0), &Executor::new(1)).unwrap();
    let b =
        simulate_filtered(&spec, 0, 9000, RngStreamSpec::new(34, 0), &Executor::new(7)).unwrap();
    assert_eq!(a, b);
}
