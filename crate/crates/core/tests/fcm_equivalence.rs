//! Fuzzy-ITISC with the log distortion, `t1 = m − 1` and `t2 = 1` is fuzzy
//! c-means: the weights drop out of the center update and the reformulated
//! objective is the log of the FCM criterion.

use itisc::baselines::{fcm_reform_objective, fcm_solve, fcm_solve_from, FcmIterate, FcmOptions};
use itisc::engine::{
    ao_solve_from, reform_gradient, reform_objective, reform_solve_from, update_centers, AoIterate,
    AoOptions, ReformOptions,
};
use itisc::optimizer::finite_difference_gradient;
use itisc::synth::{builtin_spec, sample_mixture};
use itisc::{
    random_init, Centers, Dataset, DistortionKind, ImportanceWeights, Membership, Rng, Temperatures,
};
use ndarray::Array2;

const LOG: DistortionKind = DistortionKind::LogSquaredEuclidean;

fn c3() -> Dataset {
    sample_mixture(
        &builtin_spec("c3-default").unwrap(),
        &mut Rng::seed_from_u64(42),
    )
    .unwrap()
    .0
}

fn fcm_temps(m: f64) -> Temperatures {
    Temperatures::from_fuzzifier(m).unwrap()
}

#[test]
fn reform_objective_is_log_of_fcm_criterion() {
    let mut rng = Rng::seed_from_u64(10);
    for m in [1.5, 2.0, 3.0] {
        for _ in 0..10 {
            let data =
                Dataset::new(Array2::from_shape_fn((15, 2), |_| rng.standard_normal())).unwrap();
            let y = Centers::new(Array2::from_shape_fn((3, 2), |_| rng.standard_normal())).unwrap();
            let fuzzy = reform_objective(&data, &y, fcm_temps(m), LOG).unwrap();
            let fcm = fcm_reform_objective(&data, &y, m).unwrap();
            assert!(
                (fuzzy.exp() - fcm).abs() < 1e-10 * fcm,
                "m={m}: {} vs {fcm}",
                fuzzy.exp()
            );
        }
    }
}

#[test]
fn weights_cancel_from_the_center_update() {
    let mut rng = Rng::seed_from_u64(3);
    let data = Dataset::new(Array2::from_shape_fn((20, 2), |_| rng.standard_normal())).unwrap();
    for m in [1.5, 2.0, 3.0] {
        let mut u = Array2::from_shape_fn((20, 3), |_| rng.uniform() + 0.01);
        for mut row in u.rows_mut() {
            let s = row.sum();
            row /= s;
        }
        let u = Membership::new(u).unwrap();
        let raw: Vec<f64> = (0..20).map(|_| rng.uniform() + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let w = ImportanceWeights::new(raw.iter().map(|v| v / total).collect()).unwrap();
        let with_w = update_centers(&data, &u, &w, fcm_temps(m), LOG).unwrap();
        let uniform = update_centers(
            &data,
            &u,
            &ImportanceWeights::uniform(20),
            fcm_temps(m),
            LOG,
        )
        .unwrap();
        // FCM update Σ u^m x / Σ u^m computed directly
        let mut direct = Array2::<f64>::zeros((3, 2));
        for k in 0..3 {
            let mut den = 0.0;
            for i in 0..20 {
                let a = u.view()[[i, k]].powf(m);
                den += a;
                for s in 0..2 {
                    direct[[k, s]] += a * data.row(i)[s];
                }
            }
            for s in 0..2 {
                direct[[k, s]] /= den;
            }
        }
        let direct = Centers::new(direct).unwrap();
        assert!(with_w.frobenius_distance(&direct) < 1e-12);
        assert!(uniform.frobenius_distance(&direct) < 1e-12);
    }
}

fn assert_same_trajectory(data: &Dataset, init: &Centers, m: f64) {
    let mut fuzzy = Vec::new();
    let mut fcm = Vec::new();
    let mut on_ao = |it: &AoIterate<'_>| fuzzy.push(it.centers.clone());
    let mut on_fcm = |it: &FcmIterate<'_>| fcm.push(it.centers.clone());
    ao_solve_from(
        data,
        init,
        fcm_temps(m),
        LOG,
        &AoOptions::default(),
        Some(&mut on_ao),
    )
    .unwrap();
    fcm_solve_from(data, init, m, &FcmOptions::default(), Some(&mut on_fcm)).unwrap();
    assert_eq!(fuzzy.len(), fcm.len(), "m={m}");
    for (step, (a, b)) in fuzzy.iter().zip(&fcm).enumerate() {
        let diff = a
            .view()
            .iter()
            .zip(b.view().iter())
            .fold(0.0f64, |d, (p, q)| d.max((p - q).abs()));
        assert!(diff < 1e-9, "m={m}, sweep {step}: {diff}");
    }
}

#[test]
fn ao_and_fcm_share_every_iterate() {
    let data = c3();
    let init = random_init(&data, 3, &mut Rng::seed_from_u64(7))
        .unwrap()
        .centers;
    assert_same_trajectory(&data, &init, 2.0);
    // Off the data, no distance hits the log clamp, where FCM's crisp
    // handling of coinciding points and the clamped kernel part ways by
    // roughly (1e-12)^(1/(m-1)).
    let nudged = Centers::new(init.view().mapv(|v| v + 1e-3)).unwrap();
    for m in [1.5, 2.0, 3.0] {
        assert_same_trajectory(&data, &nudged, m);
    }
}

#[test]
fn minimizers_coincide() {
    let data = c3();
    let m = 2.0;
    let t = fcm_temps(m);
    let tight = FcmOptions {
        eps: 1e-10,
        max_iter: 5000,
    };
    let fcm = fcm_solve(&data, 3, m, &mut Rng::seed_from_u64(1), &tight).unwrap();
    assert!(fcm.converged);
    let g = reform_gradient(&data, &fcm.centers, t, LOG).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-4), "{g}");

    let init = random_init(&data, 3, &mut Rng::seed_from_u64(1))
        .unwrap()
        .centers;
    let fuzzy = reform_solve_from(&data, &init, t, LOG, &ReformOptions::default()).unwrap();
    assert!(fuzzy.converged);
    let fd = finite_difference_gradient(
        &|flat: &[f64]| {
            fcm_reform_objective(&data, &Centers::from_flat(flat, 3, 2).unwrap(), m)
                .unwrap()
                .ln()
        },
        &fuzzy.centers.to_flat(),
    );
    assert!(fd.iter().all(|v| v.abs() < 1e-4), "{fd:?}");

    let at_fcm = fcm_reform_objective(&data, &fcm.centers, m).unwrap().ln();
    assert!(
        (fuzzy.objective - at_fcm).abs() < 1e-6,
        "{} vs {at_fcm}",
        fuzzy.objective
    );
}
