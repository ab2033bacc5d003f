//! With the saturated empirical learner and every follow-up time on the
//! grid, the stacked estimator must collapse to the product-limit estimator.

use ndarray::Array2;
use survstack::data::{SurvivalDataset, TruncationMode};
use survstack::estimator::{fit_global, fit_retrospective, FitOptions, GridConfig, Mapping};
use survstack::learners::LearnerSpec;
use survstack::rng::Stream;

const TOL: f64 = 1e-10;

fn product() -> FitOptions {
    FitOptions {
        mapping: Mapping::Product,
        ..FitOptions::default()
    }
}

/// Integer-valued times so ties are frequent.
fn random_censored(s: &mut Stream, left_truncated: bool) -> SurvivalDataset {
    loop {
        let n = 2 + s.below(49) as usize;
        let span = 3 + s.below(20);
        let y: Vec<f64> = (0..n).map(|_| 1.0 + s.below(span) as f64).collect();
        let e: Vec<bool> = (0..n).map(|_| s.uniform() < 0.7).collect();
        let w: Vec<f64> = if left_truncated {
            y.iter().map(|&yi| s.below(yi as u64 + 1) as f64 * 0.999).collect()
        } else {
            vec![0.0; n]
        };
        if !e.iter().any(|&v| v) || (left_truncated && w.iter().all(|&v| v == 0.0)) {
            continue;
        }
        let x = Array2::from_shape_fn((n, 2), |_| s.uniform());
        let mode = if left_truncated { TruncationMode::Left } else { TruncationMode::None };
        return SurvivalDataset::new(x, y, e, w, mode).unwrap();
    }
}

/// Textbook product-limit estimate at `t`, risk set `{W ≤ u ≤ Y}`.
fn product_limit(y: &[f64], e: &[bool], w: &[f64], t: f64) -> f64 {
    let mut times: Vec<f64> = y.iter().zip(e).filter(|(_, &d)| d).map(|(&v, _)| v).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut s = 1.0;
    for u in times.into_iter().filter(|&u| u <= t) {
        let at_risk = (0..y.len()).filter(|&i| w[i] <= u && u <= y[i]).count() as f64;
        let deaths = (0..y.len()).filter(|&i| e[i] && y[i] == u).count() as f64;
        s *= 1.0 - deaths / at_risk;
    }
    s
}

fn check_against_product_limit(d: &SurvivalDataset) {
    let grids = GridConfig::all_follow_up(d).unwrap();
    let fit = fit_global(d, &LearnerSpec::Empirical, &grids, &product()).unwrap();
    let c = fit.predict_curve(d.covariates().view(), None).unwrap();
    for (j, &t) in c.times.iter().enumerate() {
        let want = product_limit(d.follow_up(), d.event(), d.entry(), t);
        for i in 0..d.len() {
            let got = c.values[[i, j]];
            assert!((got - want).abs() <= TOL, "t={t}: {got} vs {want}\n{d:?}");
        }
    }
}

#[test]
fn kaplan_meier_on_random_censored_data() {
    let mut s = Stream::new(101, 0);
    for _ in 0..200 {
        check_against_product_limit(&random_censored(&mut s, false));
    }
}

#[test]
fn delayed_entry_on_random_left_truncated_data() {
    let mut s = Stream::new(102, 0);
    for _ in 0..200 {
        check_against_product_limit(&random_censored(&mut s, true));
    }
}

/// Right-truncated sample: every subject has an event and `Y ≤ W`.
fn random_right_truncated(s: &mut Stream) -> SurvivalDataset {
    let n = 2 + s.below(39) as usize;
    let y: Vec<f64> = (0..n).map(|_| 1.0 + s.below(12) as f64).collect();
    let mut w: Vec<f64> = y.iter().map(|&v| v + s.below(6) as f64).collect();
    // keep every follow-up strictly before the reversal time
    let top = y.iter().cloned().fold(0.0, f64::max) + 1.0;
    w[0] = w[0].max(top);
    SurvivalDataset::new(Array2::zeros((n, 1)), y, vec![true; n], w, TruncationMode::Right).unwrap()
}

#[test]
fn retrospective_matches_reverse_time_product_limit() {
    let mut s = Stream::new(103, 0);
    for _ in 0..100 {
        let d = random_right_truncated(&mut s);
        let tau = d.entry().iter().cloned().fold(0.0, f64::max);
        let rev = d.reverse_time(tau).unwrap();
        let grids = GridConfig::all_follow_up(&rev).unwrap();
        let fit = fit_retrospective(&d, &LearnerSpec::Empirical, &grids, &product(), None).unwrap();
        assert_eq!(fit.tau, tau);

        // reversed sample computed here, independently of reverse_time
        let yr: Vec<f64> = d.follow_up().iter().map(|&y| tau - y).collect();
        let wr: Vec<f64> = d.entry().iter().map(|&w| tau - w).collect();
        let ev = vec![true; d.len()];
        let mut times: Vec<f64> = d.follow_up().to_vec();
        times.extend([0.0, 0.5, tau, tau + 1.0]);
        let c = fit.predict_curve(d.covariates().view(), Some(&times)).unwrap();
        for (j, &t) in times.iter().enumerate() {
            let want = if tau - t < 0.0 {
                0.0
            } else {
                1.0 - product_limit(&yr, &ev, &wr, tau - t)
            };
            assert!((c.values[[0, j]] - want).abs() <= TOL, "t={t}");
        }
        let values = c.values.row(0).to_vec();
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        assert!(order.windows(2).all(|p| values[p[1]] <= values[p[0]] + 1e-12));
    }
}

#[test]
fn reverse_time_is_an_involution() {
    let mut s = Stream::new(104, 0);
    for _ in 0..100 {
        let d = random_right_truncated(&mut s);
        let tau = d.default_tau();
        let back = d.reverse_time(tau).unwrap().reverse_time(tau).unwrap();
        assert_eq!(back.truncation(), TruncationMode::Right);
        assert_eq!(back.event(), d.event());
        for (a, b) in back.follow_up().iter().zip(d.follow_up()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in back.entry().iter().zip(d.entry()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn censoring_curve_equals_refit_on_flipped_indicators() {
    let mut s = Stream::new(105, 0);
    let mut checked = 0;
    while checked < 100 {
        let d = random_censored(&mut s, checked % 2 == 1);
        if d.n_events() == d.len() {
            continue;
        }
        let flipped = d.flip_events().unwrap();
        let grids = GridConfig::all_follow_up(&d).unwrap();
        for mapping in [Mapping::Product, Mapping::Exponential] {
            let opts = FitOptions {
                mapping,
                ..FitOptions::default()
            };
            let fit = fit_global(&d, &LearnerSpec::Empirical, &grids, &opts).unwrap();
            let refit = fit_global(&flipped, &LearnerSpec::Empirical, &grids, &opts).unwrap();
            let g = fit.predict_censoring_curve(d.covariates().view(), None).unwrap();
            let f = refit.predict_curve(d.covariates().view(), None).unwrap();
            for (a, b) in g.values.iter().zip(f.values.iter()) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
        checked += 1;
    }
}
