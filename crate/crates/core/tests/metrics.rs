use ndarray::{Array2, ArrayView2};
use survstack::data::SurvivalDataset;
use survstack::eval::{crossval_brier, ipcw_brier, kaplan_meier, landmarks, KmTarget, StepCurve};
use survstack::rng::Stream;

fn flat_one() -> StepCurve {
    StepCurve {
        times: Vec::new(),
        values: Vec::new(),
    }
}

fn toy(y: Vec<f64>, e: Vec<bool>) -> SurvivalDataset {
    let n = y.len();
    SurvivalDataset::right_censored(Array2::zeros((n, 1)), y, e).unwrap()
}

/// Efron's redistribute-to-the-right construction: each censored subject
/// hands its mass in equal shares to everyone after it in time order.
fn redistribute_to_right(y: &[f64], e: &[bool], t: f64) -> f64 {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    // events before censorings at tied times
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(e[b].cmp(&e[a])));
    let mut mass = vec![1.0 / n as f64; n];
    for (k, &i) in order.iter().enumerate() {
        if !e[i] && k + 1 < n {
            let share = mass[i] / (n - k - 1) as f64;
            for &j in &order[k + 1..] {
                mass[j] += share;
            }
            mass[i] = 0.0;
        }
    }
    1.0 - (0..n).filter(|&i| e[i] && y[i] <= t).map(|i| mass[i]).sum::<f64>()
}

#[test]
fn kaplan_meier_matches_redistribution() {
    let mut s = Stream::new(301, 0);
    let mut done = 0;
    while done < 300 {
        let n = 1 + s.below(30) as usize;
        let y: Vec<f64> = (0..n).map(|_| 1.0 + s.below(10) as f64).collect();
        let e: Vec<bool> = (0..n).map(|_| s.uniform() < 0.6).collect();
        if !e.iter().any(|&v| v) {
            continue;
        }
        let km = kaplan_meier(&toy(y.clone(), e.clone()), KmTarget::Event).unwrap();
        for t in 0..=11 {
            let t = t as f64 + 0.5 * f64::from(u8::from(done % 2 == 0));
            let want = redistribute_to_right(&y, &e, t);
            assert!((km.at(t) - want).abs() < 1e-12, "{y:?} {e:?} t={t}");
        }
        done += 1;
    }
}

#[test]
fn censoring_curve_by_hand() {
    let d = toy(vec![1.0, 2.0, 3.0], vec![true, false, true]);
    let g = kaplan_meier(&d, KmTarget::Censoring).unwrap();
    assert_eq!(g.at(1.0), 1.0);
    assert_eq!(g.at(2.0), 0.5);
    assert_eq!(g.at(3.0), 0.5);
    assert_eq!(g.left_limit(2.0), 1.0);
}

#[test]
fn two_subject_brier_by_hand() {
    let d = toy(vec![1.0, 3.0], vec![true, true]);
    let b = ipcw_brier(&[0.4, 0.7], &d, 2.0, &flat_one()).unwrap();
    // (0.4² + 0.3²) / 2, with 0.3 formed as 1 − 0.7 in floating point
    let hand = (0.4f64 * 0.4 + (1.0f64 - 0.7) * (1.0 - 0.7)) / 2.0;
    assert_eq!(b.score, hand);
    assert!((b.score - 0.125).abs() < 1e-15);
    assert_eq!(b.excluded, 0);
}

#[test]
fn uncensored_brier_is_plain_brier() {
    let mut s = Stream::new(302, 0);
    for _ in 0..200 {
        let n = 2 + s.below(40) as usize;
        let y: Vec<f64> = (0..n).map(|_| 100.0 * s.uniform()).collect();
        let pred: Vec<f64> = (0..n).map(|_| s.uniform()).collect();
        let t = 100.0 * s.uniform();
        let d = toy(y.clone(), vec![true; n]);
        // no censored subjects, so the censoring curve has no jumps
        let g = kaplan_meier(&d, KmTarget::Censoring).unwrap_or_else(|_| flat_one());
        let got = ipcw_brier(&pred, &d, t, &g).unwrap().score;
        let plain = pred
            .iter()
            .zip(&y)
            .map(|(&p, &yi)| (p - f64::from(u8::from(yi > t))).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((got - plain).abs() <= 1e-12);
    }
}

#[test]
fn brier_is_invariant_to_subject_order() {
    let mut s = Stream::new(303, 0);
    for _ in 0..100 {
        let n = 5 + s.below(30) as usize;
        let y: Vec<f64> = (0..n).map(|_| 1.0 + s.below(8) as f64).collect();
        let mut e: Vec<bool> = (0..n).map(|_| s.uniform() < 0.7).collect();
        e[0] = false;
        let pred: Vec<f64> = (0..n).map(|_| s.uniform()).collect();
        let d = toy(y.clone(), e.clone());
        let g = kaplan_meier(&d, KmTarget::Censoring).unwrap();
        let t = 1.0 + s.below(6) as f64;
        let Ok(a) = ipcw_brier(&pred, &d, t, &g) else { continue };

        let mut perm: Vec<usize> = (0..n).collect();
        s.shuffle(&mut perm);
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let ep: Vec<bool> = perm.iter().map(|&i| e[i]).collect();
        let pp: Vec<f64> = perm.iter().map(|&i| pred[i]).collect();
        let dp = toy(yp, ep);
        let gp = kaplan_meier(&dp, KmTarget::Censoring).unwrap();
        let b = ipcw_brier(&pp, &dp, t, &gp).unwrap();
        assert!((a.score - b.score).abs() < 1e-12);
        assert_eq!(a.excluded, b.excluded);
    }
}

#[test]
fn zero_censoring_survival_at_landmark_is_undefined() {
    let d = toy(vec![1.0, 2.0], vec![true, false]);
    let g = kaplan_meier(&d, KmTarget::Censoring).unwrap();
    assert!(ipcw_brier(&[0.5, 0.5], &d, 2.5, &g).is_err());
}

#[test]
fn nearest_rank_landmark() {
    let d = toy(vec![1.0, 2.0, 3.0, 4.0], vec![true; 4]);
    assert_eq!(landmarks(&d, &[50]).unwrap(), vec![2.0]);
    assert_eq!(landmarks(&d, &[100]).unwrap(), vec![4.0]);
}

#[test]
fn kaplan_meier_method_scores_relative_one() {
    let mut s = Stream::new(304, 0);
    let n = 80;
    let y: Vec<f64> = (0..n).map(|_| 1.0 + 50.0 * s.uniform()).collect();
    let e: Vec<bool> = (0..n).map(|_| s.uniform() < 0.8).collect();
    let d = SurvivalDataset::right_censored(Array2::from_shape_fn((n, 1), |_| s.uniform()), y, e).unwrap();
    let km_method = |train: &SurvivalDataset, x: ArrayView2<'_, f64>, marks: &[f64]| {
        let km = kaplan_meier(train, KmTarget::Event)?;
        Ok(Array2::from_shape_fn((x.nrows(), marks.len()), |(_, j)| km.at(marks[j])))
    };
    let r = crossval_brier(&d, 5, &[50, 75, 90], 7, km_method).unwrap();
    for rel in &r.relative {
        assert!((rel - 1.0).abs() < 1e-12);
    }
    assert_eq!(crossval_brier(&d, 5, &[50, 75, 90], 7, km_method).unwrap(), r);
}
