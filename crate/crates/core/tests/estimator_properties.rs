use std::collections::BTreeMap;

use hazcause_core::adjust::adjust_on;
use hazcause_core::cox::PartialLikelihood;
use hazcause_core::{
    brute_force_do, cox_fit, crude_curve, from_adjusted_counts, km_fit, to_daily_trials, AdjustError, AdjustOptions,
    Arm, CohortDataset, CoxOptions, DesignMatrix, SubjectRecord, Ties,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Row {
    x: bool,
    t: u64,
    event: bool,
    z: [u8; 2],
}

fn cohort_of(rows: &[Row], covariates: usize) -> CohortDataset {
    let subjects = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let covariates: BTreeMap<String, String> =
                (0..covariates).map(|k| (format!("Z{}", k + 1), r.z[k].to_string())).collect();
            SubjectRecord {
                id: i.to_string(),
                treatment: Arm::from_bit(r.x),
                survival_time: r.t,
                event: r.event,
                covariates,
            }
        })
        .collect();
    CohortDataset::new(subjects).unwrap()
}

/// Up to `max_n` subjects over days `0..=max_day`; the first two subjects are
/// one per arm so both arms are populated.
fn rows(max_n: usize, max_day: u64, p_event: f64) -> impl Strategy<Value = Vec<Row>> {
    proptest::collection::vec(
        (any::<bool>(), 0..=max_day, proptest::bool::weighted(p_event), 0u8..2, 0u8..2)
            .prop_map(|(x, t, event, z1, z2)| Row { x, t, event, z: [z1, z2] }),
        2..=max_n,
    )
    .prop_map(|mut rows| {
        rows[0].x = false;
        rows[1].x = true;
        rows
    })
}

fn covariate_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("Z{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn survival_matrix_is_monotone_with_expected_column_sums(rows in rows(30, 10, 0.7)) {
        let cohort = cohort_of(&rows, 0);
        let m = to_daily_trials(&cohort);
        let dense = m.to_dense();
        prop_assert_eq!(dense.len() as u64, cohort.t_max() + 1);
        for (j, r) in rows.iter().enumerate() {
            for day in 1..dense.len() {
                prop_assert!(dense[day][j] <= dense[day - 1][j]);
            }
            let alive_days: u64 = dense.iter().map(|row| u64::from(row[j])).sum();
            let expected = if r.event { r.t } else { cohort.t_max() + 1 };
            prop_assert_eq!(alive_days, expected);
        }
        for day in 0..=cohort.t_max() {
            let dead = rows.iter().filter(|r| r.event && r.t <= day).count();
            prop_assert_eq!(m.alive_count(day), rows.len() - dead);
        }
    }

    #[test]
    fn adjustment_matches_long_form_sum(rows in rows(30, 10, 0.7), k in 0usize..=2) {
        let cohort = cohort_of(&rows, k);
        let m = to_daily_trials(&cohort);
        let names = covariate_names(k);
        let curve = match adjust_on(&cohort, &m, &names, AdjustOptions::default()) {
            Ok(c) => c,
            Err(AdjustError::PositivityViolation { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for day in 0..=cohort.t_max() {
            for arm in Arm::BOTH {
                let oracle = brute_force_do(&cohort, &m, &names, day, arm).unwrap();
                prop_assert!((curve.survival_at(arm, day) - oracle).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn adjusted_curves_are_bounded_and_non_increasing(rows in rows(30, 10, 0.7), k in 0usize..=2, laplace in any::<bool>()) {
        let cohort = cohort_of(&rows, k);
        let m = to_daily_trials(&cohort);
        let opts = if laplace { AdjustOptions::laplace() } else { AdjustOptions::default() };
        let Ok(curve) = adjust_on(&cohort, &m, &covariate_names(k), opts) else { return Ok(()) };
        for arm in Arm::BOTH {
            let s = &curve.survival[arm.index()];
            for (k, v) in s.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(v));
                if k > 0 {
                    prop_assert!(*v <= s[k - 1] + 1e-15);
                }
            }
        }
    }

    #[test]
    fn pseudo_cohort_keeps_arm_sizes_and_rounding_bound(rows in rows(30, 10, 0.7), k in 0usize..=2) {
        let cohort = cohort_of(&rows, k);
        let m = to_daily_trials(&cohort);
        let Ok(curve) = adjust_on(&cohort, &m, &covariate_names(k), AdjustOptions::default()) else { return Ok(()) };
        let pseudo = from_adjusted_counts(&curve, cohort.arm_sizes()).unwrap();
        let groups: Vec<usize> = pseudo.treatments().iter().map(|a| a.index()).collect();
        let km = km_fit(&pseudo.times(), &pseudo.events(), &groups).unwrap();
        for arm in Arm::BOTH {
            let size = cohort.arm_sizes()[arm.index()];
            prop_assert_eq!(pseudo.arm_size(arm), size);
            let g = km.group(arm.index()).unwrap();
            for &day in &curve.days {
                let gap = (g.survival_at(day) - curve.survival_at(arm, day)).abs();
                prop_assert!(gap <= 0.5 / size as f64 + 1e-12, "day {day}: gap {gap}");
            }
        }
    }

    #[test]
    fn uncensored_cohort_round_trips(rows in rows(30, 10, 1.0)) {
        let cohort = cohort_of(&rows, 0);
        let m = to_daily_trials(&cohort);
        let pseudo = from_adjusted_counts(&crude_curve(&cohort, &m), cohort.arm_sizes()).unwrap();
        for arm in Arm::BOTH {
            let mut original: Vec<u64> = rows.iter().filter(|r| Arm::from_bit(r.x) == arm).map(|r| r.t).collect();
            let mut rebuilt: Vec<u64> =
                pseudo.subjects.iter().filter(|s| s.treatment == arm).map(|s| s.survival_time).collect();
            original.sort_unstable();
            rebuilt.sort_unstable();
            prop_assert_eq!(original, rebuilt);
        }
        prop_assert!(pseudo.subjects.iter().all(|s| s.event));
    }

    #[test]
    fn km_matches_recomputed_product(times in proptest::collection::vec((0u64..15, any::<bool>()), 1..40)) {
        let (t, e): (Vec<u64>, Vec<bool>) = times.iter().copied().unzip();
        let km = km_fit(&t, &e, &vec![0; t.len()]).unwrap();
        let g = km.group(0).unwrap();
        let mut s = 1.0;
        let mut expected = Vec::new();
        for day in 0..15u64 {
            let d = times.iter().filter(|(ti, ei)| *ti == day && *ei).count();
            if d == 0 {
                continue;
            }
            let n = times.iter().filter(|(ti, _)| *ti >= day).count();
            s *= (n - d) as f64 / n as f64;
            expected.push((day, n, d, s));
        }
        prop_assert_eq!(g.rows.len(), expected.len());
        for (row, (day, n, d, s)) in g.rows.iter().zip(expected) {
            prop_assert_eq!((row.time, row.at_risk, row.events), (day, n, d));
            prop_assert!((row.survival - s).abs() <= 1e-15);
        }
    }

    #[test]
    fn uncensored_km_is_empirical_survival(t in proptest::collection::vec(0u64..20, 1..60)) {
        let km = km_fit(&t, &vec![true; t.len()], &vec![0; t.len()]).unwrap();
        let g = km.group(0).unwrap();
        for day in 0..21u64 {
            let empirical = t.iter().filter(|&&ti| ti > day).count() as f64 / t.len() as f64;
            prop_assert!((g.survival_at(day) - empirical).abs() <= 1e-12);
        }
    }
}

#[derive(Debug, Clone)]
struct CoxData {
    times: Vec<f64>,
    events: Vec<bool>,
    columns: Vec<Vec<f64>>,
}

impl CoxData {
    fn design(&self) -> DesignMatrix {
        DesignMatrix::from_columns(self.columns.iter().enumerate().map(|(j, c)| (format!("x{j}"), c.clone())).collect())
    }
}

fn cox_data(max_n: usize, p: usize, distinct_times: bool) -> impl Strategy<Value = CoxData> {
    (4..=max_n).prop_flat_map(move |n| {
        let times = if distinct_times {
            Just((0..n).map(|i| i as f64 + 1.0).collect::<Vec<_>>()).prop_shuffle().boxed()
        } else {
            proptest::collection::vec((1u32..6).prop_map(f64::from), n).boxed()
        };
        (
            times,
            proptest::collection::vec(proptest::bool::weighted(0.8), n),
            proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, n), p),
        )
            .prop_map(|(times, mut events, columns)| {
                events[0] = true;
                CoxData { times, events, columns }
            })
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-10 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn score_vanishes_at_the_fit(d in cox_data(20, 2, false), breslow in any::<bool>()) {
        let ties = if breslow { Ties::Breslow } else { Ties::Efron };
        let Ok(fit) = cox_fit(&d.design(), &d.times, &d.events, CoxOptions { ties, ..CoxOptions::default() }) else {
            return Ok(());
        };
        prop_assume!(fit.converged);
        prop_assert!(fit.score.iter().all(|s| s.abs() <= 1e-6), "{:?}", fit.score);
        prop_assert!(fit.loglik >= fit.loglik_null - 1e-9);
    }

    #[test]
    fn derivatives_match_finite_differences(d in cox_data(15, 2, false), b0 in -1.0f64..1.0, b1 in -1.0f64..1.0, breslow in any::<bool>()) {
        let ties = if breslow { Ties::Breslow } else { Ties::Efron };
        let Ok(pl) = PartialLikelihood::new(&d.design(), &d.times, &d.events, ties) else { return Ok(()) };
        let beta = [b0, b1];
        let at = pl.evaluate(&beta);
        let h = 1e-5;
        for j in 0..2 {
            let (mut up, mut down) = (beta, beta);
            up[j] += h;
            down[j] -= h;
            let (eu, ed) = (pl.evaluate(&up), pl.evaluate(&down));
            let fd = (eu.loglik - ed.loglik) / (2.0 * h);
            prop_assert!((at.score[j] - fd).abs() <= 1e-4 * at.score[j].abs().max(1.0), "score {j}: {} vs {fd}", at.score[j]);
            for k in 0..2 {
                let fd = -(eu.score[k] - ed.score[k]) / (2.0 * h);
                let exact = at.information[j * 2 + k];
                prop_assert!((exact - fd).abs() <= 1e-4 * exact.abs().max(1.0), "info {j}{k}: {exact} vs {fd}");
            }
        }
        let info = &at.information;
        prop_assert!((info[1] - info[2]).abs() <= 1e-12 * info[1].abs().max(1.0));
        prop_assert!(info[0] >= 0.0 && info[3] >= 0.0 && info[0] * info[3] - info[1] * info[2] >= -1e-9);
    }

    #[test]
    fn newton_agrees_with_golden_section(d in cox_data(12, 1, true)) {
        let Ok(fit) = cox_fit(&d.design(), &d.times, &d.events, CoxOptions::default()) else { return Ok(()) };
        prop_assume!(fit.converged && fit.beta[0].abs() < 15.0);
        let pl = PartialLikelihood::new(&d.design(), &d.times, &d.events, Ties::Efron).unwrap();
        let best = golden_max(|b| pl.evaluate(&[b]).loglik, -20.0, 20.0);
        prop_assert!((fit.beta[0] - best).abs() <= 1e-4, "{} vs {best}", fit.beta[0]);
    }

    #[test]
    fn efron_equals_breslow_without_ties(d in cox_data(12, 2, true)) {
        let efron = cox_fit(&d.design(), &d.times, &d.events, CoxOptions::default());
        let breslow = cox_fit(&d.design(), &d.times, &d.events, CoxOptions { ties: Ties::Breslow, ..CoxOptions::default() });
        match (efron, breslow) {
            (Ok(e), Ok(b)) => {
                for (x, y) in e.beta.iter().zip(&b.beta) {
                    prop_assert!((x - y).abs() <= 1e-10);
                }
                prop_assert!((e.loglik - b.loglik).abs() <= 1e-10);
            }
            (Err(e), Err(b)) => prop_assert_eq!(e, b),
            (e, b) => prop_assert!(false, "{e:?} vs {b:?}"),
        }
    }
}

#[test]
fn newton_converges_quadratically_on_simulated_cohorts() {
    for seed in 0..20 {
        let c = hazcause_core::generate_cohort(&hazcause_core::SimConfig::default().with_seed(seed)).unwrap();
        let times: Vec<f64> = c.subjects().iter().map(|s| s.survival_time as f64).collect();
        let events: Vec<bool> = c.subjects().iter().map(|s| s.event).collect();
        let x: Vec<f64> = c.subjects().iter().map(|s| s.treatment.index() as f64).collect();
        let fit = cox_fit(&DesignMatrix::single("X", x), &times, &events, CoxOptions::default()).unwrap();
        assert!(fit.converged && fit.iterations <= 6, "seed {seed}: {} iterations", fit.iterations);
    }
}
