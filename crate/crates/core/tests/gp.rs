use mcgpmp::gp::{gp_prior_error, interpolate, phi, q_between, SegmentPrior};
use mcgpmp::{GpModel, PlannerState};
use nalgebra::{Cholesky, DMatrix, DVector};
use proptest::prelude::*;

/// `A A^T + I/2` from a flat list of entries.
fn spd(d: usize, entries: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(d, d, &entries[..d * d]);
    &a * a.transpose() + DMatrix::identity(d, d) * 0.5
}

/// `int_0^s Phi(s, r) L Qc L^T Phi(s, r)^T dr` by composite Simpson.
fn q_simpson(s: f64, qc: &DMatrix<f64>, panels: usize) -> DMatrix<f64> {
    let d = qc.nrows();
    let f = |r: f64| {
        let p = phi(d, s, r).unwrap();
        let mut lql = DMatrix::zeros(2 * d, 2 * d);
        lql.view_mut((d, d), (d, d)).copy_from(qc);
        &p * lql * p.transpose()
    };
    let h = s / panels as f64;
    let mut acc = f(0.0) + f(s);
    for k in 1..panels {
        acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

fn state(v: &[f64]) -> PlannerState {
    PlannerState(DVector::from_column_slice(v))
}

proptest! {
    #[test]
    fn transition_composes(d in 1usize..4, t1 in -5.0..5.0f64, a in 0.0..3.0f64, b in 0.0..3.0f64) {
        let (t2, t3) = (t1 + a, t1 + a + b);
        let lhs = phi(d, t3, t1).unwrap();
        let rhs = phi(d, t3, t2).unwrap() * phi(d, t2, t1).unwrap();
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn segment_covariance_is_spd(
        d in 1usize..4,
        dt in 1e-3..10.0f64,
        entries in prop::collection::vec(-2.0..2.0f64, 9),
    ) {
        let qc = spd(d, &entries);
        let q = q_between(1.0, 1.0 + dt, &qc).unwrap();
        prop_assert!((&q - q.transpose()).amax() <= 1e-12 * q.amax());
        prop_assert!(Cholesky::new(q).is_some());
    }

    #[test]
    fn segment_covariance_matches_quadrature(
        dt in 0.05..4.0f64,
        entries in prop::collection::vec(-2.0..2.0f64, 4),
    ) {
        let qc = spd(2, &entries);
        let q = q_between(0.3, 0.3 + dt, &qc).unwrap();
        let oracle = q_simpson(dt, &qc, 16);
        prop_assert!((&q - &oracle).amax() <= 1e-8 * oracle.amax().max(1.0));
    }

    #[test]
    fn prior_jacobians_match_finite_differences(
        x in prop::collection::vec(-10.0..10.0f64, 8),
        dt in 0.1..3.0f64,
    ) {
        let qc = DMatrix::identity(2, 2) * 2.5;
        let prior = SegmentPrior::new(2, &qc, 0.0, dt).unwrap();
        let (a, b) = (state(&x[..4]), state(&x[4..]));
        let e = gp_prior_error(&a, &b, &prior);
        let h = 1e-6;
        for k in 0..8 {
            let shifted = |delta: f64| {
                let mut v = x.clone();
                v[k] += delta;
                gp_prior_error(&state(&v[..4]), &state(&v[4..]), &prior).residual
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let analytic = if k < 4 { e.jac_first.column(k).into_owned() } else { e.jac_second.column(k - 4).into_owned() };
            let scale = analytic.amax().max(1.0);
            prop_assert!((fd - analytic).amax() <= 1e-5 * scale);
        }
    }

    #[test]
    fn interpolation_is_linear_in_its_endpoints(
        x in prop::collection::vec(-10.0..10.0f64, 16),
        alpha in -2.0..2.0f64,
        frac in 0.0..1.0f64,
    ) {
        let model = GpModel::uniform(2, 1.0, 3.0, 3).unwrap();
        let (ta, tb) = model.segment_bounds(1);
        let tau = ta + frac * (tb - ta);
        let at = |a: &[f64], b: &[f64]| interpolate(&state(a), &state(b), tau, &model, 1).unwrap().0 .0;
        let combo = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(p, q)| p + alpha * q).collect() };
        let lhs = at(&combo(&x[..4], &x[8..12]), &combo(&x[4..8], &x[12..]));
        let rhs = at(&x[..4], &x[4..8]) + at(&x[8..12], &x[12..]) * alpha;
        prop_assert!((lhs - rhs).amax() <= 1e-9);
    }

    #[test]
    fn constant_velocity_pairs_interpolate_onto_their_line(
        p in prop::collection::vec(-100.0..100.0f64, 2),
        v in prop::collection::vec(-20.0..20.0f64, 2),
        frac in 0.0..1.0f64,
    ) {
        let model = GpModel::uniform(2, 7.0, 2.0, 4).unwrap();
        let (ta, tb) = model.segment_bounds(2);
        let at = |t: f64| state(&[p[0] + v[0] * t, p[1] + v[1] * t, v[0], v[1]]);
        let tau = ta + frac * (tb - ta);
        let got = interpolate(&at(ta), &at(tb), tau, &model, 2).unwrap().0;
        prop_assert!((got.0 - at(tau).0).amax() <= 1e-9);
    }

    #[test]
    fn straight_line_has_zero_prior_error(
        start in prop::collection::vec(-500.0..500.0f64, 2),
        goal in prop::collection::vec(-500.0..500.0f64, 2),
        segments in 1usize..12,
        total in 0.5..20.0f64,
    ) {
        let model = GpModel::uniform(2, 10.0, total, segments).unwrap();
        let line = model.straight_line(&start, &goal).unwrap();
        for s in 0..segments {
            let prior = model.segment_prior(s).unwrap();
            let e = gp_prior_error(&line[s], &line[s + 1], &prior);
            prop_assert!(e.residual.amax() <= 1e-9 * (1.0 + e.jac_first.amax()));
        }
    }
}

#[test]
fn interpolation_matches_gp_conditioning_on_uneven_segments() {
    // Prior x(0) ~ N(0, I) propagated through the SDE; the interpolated mean
    // is E[x(tau) | x(a), x(b)] of the joint Gaussian.
    let d = 2;
    let qc = DMatrix::from_row_slice(2, 2, &[1.2, -0.4, -0.4, 0.8]);
    let ts = vec![0.0, 0.4, 1.5, 1.9];
    let model = GpModel::with_timestamps(d, qc.clone(), ts.clone()).unwrap();
    let kss = |s: f64| {
        let p = phi(d, s, 0.0).unwrap();
        &p * p.transpose() + q_simpson(s, &qc, 8)
    };
    let cov = |t: f64, s: f64| -> DMatrix<f64> {
        if t >= s {
            phi(d, t, s).unwrap() * kss(s)
        } else {
            (phi(d, s, t).unwrap() * kss(t)).transpose()
        }
    };
    let a = state(&[1.0, -2.0, 0.5, 0.3]);
    let b = state(&[4.0, 1.0, -0.2, 0.9]);
    for seg in 0..3 {
        let (ta, tb) = (ts[seg], ts[seg + 1]);
        for frac in [0.1, 0.37, 0.5, 0.81] {
            let tau = ta + frac * (tb - ta);
            let mut kab = DMatrix::zeros(8, 8);
            let mut kta = DMatrix::zeros(4, 8);
            for (i, &ti) in [ta, tb].iter().enumerate() {
                kta.view_mut((0, 4 * i), (4, 4)).copy_from(&cov(tau, ti));
                for (j, &tj) in [ta, tb].iter().enumerate() {
                    kab.view_mut((4 * i, 4 * j), (4, 4)).copy_from(&cov(ti, tj));
                }
            }
            let mut y = DVector::zeros(8);
            y.rows_mut(0, 4).copy_from(&a.0);
            y.rows_mut(4, 4).copy_from(&b.0);
            let want = &kta * Cholesky::new(kab).unwrap().solve(&y);
            let got = interpolate(&a, &b, tau, &model, seg).unwrap().0;
            assert!((got.0 - want).amax() <= 1e-8, "segment {seg}, tau {tau}");
        }
    }
}
