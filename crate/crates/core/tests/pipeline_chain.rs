use sil_core::pipeline::{lemma3_compare_values, lemma4_chain, scaling_study, PipelineConfig, StudyOptions};
use sil_core::{MultiplicativeFunction, ValueSeries};

// Constants from the calibration run at X = 1e5 and 1e6 (measured ratios
// 8e-4 to 1.4e-3 for the rough term, 4e-4 for the boundary terms, 3.3e-3 for
// the assembled bound), with a wide margin.
const C_ROUGH: f64 = 0.05;
const C_BOUNDARY: f64 = 0.05;
const C_LEMMA4: f64 = 0.05;
const C_CLOSING: f64 = 1.0;

#[test]
fn chain_terms_against_their_scales() {
    let x = 100_000;
    let c = PipelineConfig::new(x, 0.5).unwrap().with_window(3.0, 46.0);
    let t = (x as f64).sqrt();
    let r = lemma4_chain(&c, t).unwrap();
    assert!(r.all_accepted);
    for term in [&r.total, &r.low_t, &r.product, &r.qf_max, &r.rough, &r.boundary_lower, &r.boundary_upper] {
        assert!(term.measured.is_finite() && term.measured >= 0.0, "{}", term.name);
        assert!(term.ratio.is_finite() && term.ratio >= 0.0, "{}", term.name);
    }
    assert!(r.rough.ratio <= C_ROUGH, "{}", r.rough.ratio);
    assert!(r.boundary_lower.ratio <= C_BOUNDARY && r.boundary_upper.ratio <= C_BOUNDARY);
    assert!(r.total_over_lemma4_bound <= C_LEMMA4);
    assert!(r.total_over_closing_bound <= C_CLOSING);
    // The split [0, T₀] ∪ [T₀, T] accounts for the whole integral.
    let total = c.clone();
    let low = lemma4_chain(&total, r.t0).unwrap();
    assert!(low.product.estimate.is_none());
    assert!(r.low_t.measured <= r.total.measured);
}

#[test]
fn chain_rejects_large_t_and_empty_default_window() {
    let c = PipelineConfig::new(100_000, 0.5).unwrap().with_window(3.0, 46.0);
    assert!(lemma4_chain(&c, 200_000.0).is_err());
    let d = PipelineConfig::new(100_000, 0.5).unwrap();
    assert!(lemma4_chain(&d, 100.0).is_err());
}

#[test]
fn lemma3_sides_for_small_x() {
    let x = 2000;
    let f = MultiplicativeFunction::liouville();
    let v = ValueSeries::evaluate(&f, x..2 * x + 100).unwrap();
    let r = lemma3_compare_values(&v, x, 0.5, false, 2e9).unwrap();
    assert!(r.lhs > 0.0 && r.rhs > 0.0 && r.ratio.is_finite());
    assert!(r.is_stable(0.05));
    assert!(r.dyadic.windows(2).all(|w| w[1].t == 2.0 * w[0].t));
    assert!(r.sampled_up_to <= r.dyadic_ceiling);
    assert!(lemma3_compare_values(&v, x, 0.5, false, 10.0).is_err());
}

#[test]
fn study_rows_and_general_f() {
    let opts = StudyOptions {
        lemma3_max_x: 3000,
        mvt_max_x: 3000,
        t_budget: 1e9,
        ..StudyOptions::default()
    };
    let study = scaling_study(&[0.5, 0.3], &[20_000, 3000], &MultiplicativeFunction::random_sign_on_primes(5), &opts).unwrap();
    assert_eq!(study.rows.len(), 4);
    assert!(study.rows.windows(2).all(|w| (w[0].x, w[0].delta) < (w[1].x, w[1].delta)));
    assert!(study.flags.is_empty(), "{:?}", study.flags);
    assert!(study.rows[0].lhs_lemma3.is_some() && study.rows[3].lhs_lemma3.is_none());
    assert!(study.rows.iter().all(|r| r.seconds.is_none()));

    let one = StudyOptions {
        subtract_mean: true,
        lemma3_max_x: 0,
        mvt_max_x: 0,
        ..StudyOptions::default()
    };
    let s = scaling_study(&[0.5], &[1000, 10_000, 50_000], &MultiplicativeFunction::constant_one(), &one).unwrap();
    for r in &s.rows {
        let x = r.x as f64;
        assert!((r.variance - 1.0 / (x * x)).abs() <= 1e-9 / (x * x));
        assert_eq!(r.exceptional_fraction, 0.0);
    }
    assert!(scaling_study(&[], &[1000], &MultiplicativeFunction::liouville(), &one).is_err());
}
