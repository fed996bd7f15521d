//! Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
//! line with the measured quantity next to its threshold.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! to see the report in order.

mod common;

use std::f64::consts::{FRAC_PI_3, PI};
use std::time::Instant;

use cusp_ricci::assembly::{self, laplacian_summary, metric_class_distance};
use cusp_ricci::flow::{run_flow, FlowConfig, FlowResult, Scheme};
use cusp_ricci::tetra::{self, classify, extended_angles, tet_jacobian, tet_volume, TetMetric};
use cusp_ricci::{CuspedTriangulation, EdgeLengths};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("AC{id:<2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "AC{id} {name} failed: {detail}");
}

/// Angles of every tet within `tol` of π/3.
fn max_angle_error(t: &CuspedTriangulation, l: &EdgeLengths) -> f64 {
    (0..t.num_tets())
        .flat_map(|j| extended_angles(&assembly::tet_metric(t, l, j)).0)
        .map(|a| (a - FRAC_PI_3).abs())
        .fold(0.0, f64::max)
}

fn figure8_random_inits(seed: u64, count: usize, range: f64) -> Vec<EdgeLengths> {
    let t = figure8();
    let c = t.cusp_matrix().unwrap();
    let mut r = rng(seed);
    (0..count)
        .map(|_| c.gauge_project(&uniform_lengths(&mut r, 2, range)).unwrap())
        .collect()
}

fn capped(scheme: Scheme) -> FlowConfig {
    FlowConfig {
        max_steps: 10_000,
        ..FlowConfig::with_scheme(scheme)
    }
}

/// Random nondegenerate tet: random pair exponents in [-1, 1], split
/// randomly across the two opposite slots, kept only if nondegenerate.
fn random_nondegenerate(r: &mut ChaCha8Rng) -> TetMetric {
    loop {
        let x: [f64; 3] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let split: [f64; 3] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let mut l = [0.0; 6];
        for p in 0..3 {
            l[p] = x[p] + split[p];
            l[p + 3] = x[p] - split[p];
        }
        let m = TetMetric(l);
        if classify(&m).is_nondegenerate() {
            return m;
        }
    }
}

#[test]
fn oracle_constants() {
    // the frozen volume agrees with both independent evaluations of 6Λ(π/3)
    let quad = 6.0 * lobachevsky_quadrature(FRAC_PI_3);
    let fourier = 6.0 * lobachevsky_fourier(FRAC_PI_3, 1_000_000);
    assert!((quad - FIGURE8_VOLUME).abs() < 1e-9, "{quad}");
    assert!((fourier - FIGURE8_VOLUME).abs() < 6.0 / 2e6, "{fourier}");
}

#[test]
fn ac01_figure8_convergence() {
    let t = figure8();
    let cfg = capped(Scheme::NewtonHybrid);
    let start = Instant::now();
    let runs: Vec<FlowResult> = figure8_random_inits(1, 20, 1.0)
        .iter()
        .map(|l0| run_flow(&t, l0, &cfg).unwrap())
        .collect();
    let elapsed = start.elapsed().as_secs_f64();

    let all_converged = runs.iter().all(|r| r.converged && r.final_curvature_norm < 1e-10);
    let max_steps = runs.iter().map(|r| r.steps_taken).max().unwrap();
    let angle_err = runs
        .iter()
        .map(|r| max_angle_error(&t, &r.final_lengths()))
        .fold(0.0, f64::max);
    let vol_err = runs
        .iter()
        .map(|r| (r.final_volume - FIGURE8_VOLUME).abs())
        .fold(0.0, f64::max);
    let pass = all_converged && max_steps <= 10_000 && angle_err < 1e-8 && vol_err < 1e-8 && elapsed < 5.0;
    report(
        1,
        "figure-eight convergence",
        pass,
        format!(
            "20 runs converged={all_converged}, max steps {max_steps} (<= 1e4), angle err {angle_err:.2e} (< 1e-8), \
             volume err {vol_err:.2e} (< 1e-8), {elapsed:.3}s (< 5s)"
        ),
    );
}

#[test]
fn ac02_jacobian_consistency() {
    let mut r = rng(2);
    let h = 1e-5;
    let nulls: [[f64; 6]; 4] = [
        [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, 1.0, 1.0],
        [0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 1.0, 1.0, 0.0],
    ];
    let mut worst_rel = 0.0f64;
    let mut worst_null = 0.0f64;
    for _ in 0..100 {
        let m = random_nondegenerate(&mut r);
        let j = tet_jacobian(&m).unwrap();
        let mut fd = nalgebra::Matrix6::<f64>::zeros();
        for col in 0..6 {
            let mut p = m;
            let mut q = m;
            p.0[col] += h;
            q.0[col] -= h;
            let (ap, aq) = (extended_angles(&p), extended_angles(&q));
            for row in 0..6 {
                fd[(row, col)] = (ap.0[row] - aq.0[row]) / (2.0 * h);
            }
        }
        worst_rel = worst_rel.max((j - fd).amax() / j.amax());
        for v in &nulls {
            let jv = j * nalgebra::Vector6::from_column_slice(v);
            worst_null = worst_null.max(jv.amax());
        }
    }
    report(
        2,
        "Jacobian consistency",
        worst_rel < 1e-6 && worst_null < 1e-10,
        format!("100 tets, FD rel err {worst_rel:.2e} (< 1e-6), null-vector residual {worst_null:.2e} (< 1e-10)"),
    );
}

#[test]
fn ac03_laplacian_structure() {
    let t = figure8();
    let c = t.cusp_matrix().unwrap();
    let mut r = rng(3);
    let (mut asym, mut max_eig, mut gauge, mut max_restricted) = (0.0f64, f64::MIN, 0.0f64, f64::MIN);
    let mut points = 0;
    while points < 20 {
        let l = uniform_lengths(&mut r, 2, 1.0);
        let state = assembly::curvature(&t, &l).unwrap();
        if !state.all_nondegenerate() {
            continue;
        }
        points += 1;
        let lap = assembly::laplacian(&t, &l).unwrap();
        let s = laplacian_summary(&lap, &c);
        asym = asym.max(s.asymmetry);
        max_eig = max_eig.max(*s.eigenvalues.last().unwrap());
        gauge = gauge.max(s.gauge_residual);
        max_restricted = max_restricted.max(*s.kernel_restricted_eigenvalues.last().unwrap());
    }
    report(
        3,
        "Laplacian structure",
        asym < 1e-12 && max_eig <= 1e-10 && gauge < 1e-8 && max_restricted < 0.0,
        format!(
            "20 points, asymmetry {asym:.2e} (< 1e-12), max eig {max_eig:.2e} (<= 1e-10), \
             |Λ Cᵀ| {gauge:.2e} (< 1e-8), max eig on Ker(C) {max_restricted:.3e} (< 0)"
        ),
    );
}

#[test]
fn ac04_energy_gradient() {
    let t = figure8();
    let mut r = rng(4);
    let (mut worst, mut degenerate, mut nondegenerate) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let l = uniform_lengths(&mut r, 2, 1.5);
        if assembly::curvature(&t, &l).unwrap().all_nondegenerate() {
            nondegenerate += 1;
        } else {
            degenerate += 1;
        }
        let chk = assembly::energy_gradient_check(&t, &l, 1e-6).unwrap();
        worst = worst.max(chk.max_rel_err);
    }
    report(
        4,
        "energy gradient",
        worst < 1e-5 && degenerate > 0 && nondegenerate > 0,
        format!("50 points ({nondegenerate} nondegenerate, {degenerate} degenerate), rel err {worst:.2e} (< 1e-5)"),
    );
}

#[test]
fn ac05_gauge_invariance() {
    let t = figure8();
    let c = t.cusp_matrix().unwrap();
    let mut drift = 0.0f64;
    let mut traces = 0;
    let mut inits = figure8_random_inits(5, 10, 1.0);
    inits.push(EdgeLengths::from(vec![3.0, -3.0]));
    for scheme in [Scheme::NewtonHybrid, Scheme::Euler, Scheme::Rk4] {
        for l0 in &inits {
            let res = run_flow(&t, l0, &capped(scheme)).unwrap();
            drift = drift.max(res.trace.max_gauge_drift());
            traces += 1;
        }
    }
    // without the gauge projection C·l is still conserved, just not zero
    let off_slice = FlowConfig {
        gauge_fix: false,
        ..capped(Scheme::Euler)
    };
    let res = run_flow(&t, &EdgeLengths::from(vec![1.3, 0.2]), &off_slice).unwrap();
    drift = drift.max(res.trace.max_gauge_drift());
    traces += 1;

    let mut r = rng(55);
    let mut k_shift = 0.0f64;
    for _ in 0..10 {
        let l = uniform_lengths(&mut r, 2, 2.0);
        let x = DVector::from_element(1, r.gen_range(-3.0..3.0));
        let shifted = EdgeLengths(&l.0 + c.matrix().transpose() * x);
        let k = assembly::curvature(&t, &l).unwrap().k;
        let k2 = assembly::curvature(&t, &shifted).unwrap().k;
        k_shift = k_shift.max((k - k2).amax());
    }
    report(
        5,
        "gauge invariance",
        drift < 1e-8 && k_shift < 1e-9,
        format!("{traces} traces, max |C l(t) - C l(0)| {drift:.2e} (< 1e-8), |K(l + Cᵀx) - K(l)| {k_shift:.2e} (< 1e-9)"),
    );
}

#[test]
fn ac06_energy_monotonicity() {
    let t = figure8();
    let mut inits = figure8_random_inits(6, 10, 1.0);
    inits.push(EdgeLengths::from(vec![3.0, -3.0]));
    inits.push(EdgeLengths::from(vec![-2.5, 2.5]));

    let euler = capped(Scheme::Euler);
    let h = euler.step;
    let mut euler_violations = 0;
    let mut worst_excess = f64::MIN;
    let mut newton_violations = 0;
    let mut newton_steps = 0;
    for l0 in &inits {
        let res = run_flow(&t, l0, &euler).unwrap();
        for w in res.trace.rows.windows(2) {
            let k2 = w[0].knorm_2 * w[0].knorm_2;
            // F̃ itself is only evaluated to a few ulps; near convergence the
            // slack term drops far below that.
            let roundoff = 4.0 * f64::EPSILON * w[0].energy.abs();
            let excess = w[1].energy - w[0].energy - 10.0 * h * h * k2 - roundoff;
            worst_excess = worst_excess.max(excess);
            if excess > 0.0 {
                euler_violations += 1;
            }
        }
        let res = run_flow(&t, l0, &capped(Scheme::NewtonHybrid)).unwrap();
        newton_steps += res.newton_steps;
        newton_violations += res.trace.rows.windows(2).filter(|w| !(w[1].energy < w[0].energy)).count();
    }
    report(
        6,
        "energy monotonicity",
        euler_violations == 0 && newton_violations == 0 && newton_steps > 0,
        format!(
            "{} runs per scheme; Euler slack violations {euler_violations} (max excess {worst_excess:.2e}), \
             newton-hybrid non-decreasing steps {newton_violations} over {newton_steps} Newton steps",
            inits.len()
        ),
    );
}

#[test]
fn ac07_extension_continuity() {
    let mut r = rng(7);
    let mut worst_gap = 0.0f64;
    let mut exact_degenerate_side = true;
    for _ in 0..10 {
        // from a nondegenerate point towards a point where one pair dominates
        let p = random_nondegenerate(&mut r);
        let pair = r.gen_range(0..3);
        let mut q = p.0;
        q[pair] += 6.0;
        q[pair + 3] += r.gen_range(0.0..2.0);
        let at = |u: f64| TetMetric(std::array::from_fn(|i| p.0[i] + u * (q[i] - p.0[i])));
        assert!(!classify(&at(1.0)).is_nondegenerate());
        // bisection for the crossing parameter
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if classify(&at(mid)).is_nondegenerate() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let inside = extended_angles(&at(lo - 1e-6));
        let outside = extended_angles(&at(hi + 1e-6));
        let gap = (0..6).map(|i| (inside.0[i] - outside.0[i]).abs()).fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
        for i in 0..6 {
            let want = if i % 3 == pair { PI } else { 0.0 };
            exact_degenerate_side &= outside.0[i] == want;
        }
    }
    report(
        7,
        "extension continuity",
        worst_gap < 1e-4 && exact_degenerate_side,
        format!(
            "10 segments, angle gap at ±1e-6 {worst_gap:.2e} (< 1e-4), degenerate side exactly π/0: {exact_degenerate_side}"
        ),
    );
}

#[test]
fn ac08_rigidity_and_uniqueness() {
    let t = figure8();
    let c = t.cusp_matrix().unwrap();
    let mut r = rng(8);
    let mut worst_shift = 0.0f64;
    let mut worst_scheme = 0.0f64;
    let mut all_converged = true;
    for _ in 0..5 {
        let l0 = uniform_lengths(&mut r, 2, 1.0);
        let x = DVector::from_element(1, r.gen_range(-2.0..2.0));
        let l1 = EdgeLengths(&l0.0 + c.matrix().transpose() * x);
        let free = FlowConfig {
            gauge_fix: false,
            ..capped(Scheme::NewtonHybrid)
        };
        let a = run_flow(&t, &l0, &free).unwrap();
        let b = run_flow(&t, &l1, &free).unwrap();
        worst_shift = worst_shift.max(metric_class_distance(&c, &a.final_lengths(), &b.final_lengths()));

        let e = run_flow(&t, &l0, &capped(Scheme::Euler)).unwrap();
        let k = run_flow(&t, &l0, &capped(Scheme::Rk4)).unwrap();
        worst_scheme = worst_scheme.max(metric_class_distance(&c, &e.final_lengths(), &k.final_lengths()));
        all_converged &= a.converged && b.converged && e.converged && k.converged;
    }
    report(
        8,
        "rigidity and uniqueness",
        all_converged && worst_shift < 1e-6 && worst_scheme < 1e-6,
        format!(
            "5 pairs, decoration-shifted limits residual {worst_shift:.2e} (< 1e-6), euler vs rk4 residual {worst_scheme:.2e} (< 1e-6)"
        ),
    );
}

#[test]
fn ac09_degenerate_start() {
    let t = figure8();
    let c = t.cusp_matrix().unwrap();
    let regular = EdgeLengths::zeros(2);
    let mut worst_class = 0.0f64;
    let mut worst_angle = 0.0f64;
    let mut ok = true;
    for l0 in [vec![3.0, -3.0], vec![0.5, 4.0], vec![-6.0, 2.0]] {
        let l0 = EdgeLengths::from(l0);
        let start = assembly::curvature(&t, &c.gauge_project(&l0).unwrap()).unwrap();
        ok &= !start.degenerate_tets.is_empty();
        for scheme in [Scheme::NewtonHybrid, Scheme::Euler, Scheme::Rk4] {
            let res = run_flow(&t, &l0, &capped(scheme)).unwrap();
            ok &= res.converged;
            worst_class = worst_class.max(metric_class_distance(&c, &res.final_lengths(), &regular));
            worst_angle = worst_angle.max(max_angle_error(&t, &res.final_lengths()));
        }
    }
    report(
        9,
        "degenerate start",
        ok && worst_class < 1e-6 && worst_angle < 1e-8,
        format!(
            "3 degenerate starts x 3 schemes converged={ok}, distance to regular class {worst_class:.2e} (< 1e-6), \
             angle err {worst_angle:.2e} (< 1e-8)"
        ),
    );
}

#[test]
fn ac10_schlafli() {
    let mut r = rng(10);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = random_nondegenerate(&mut r);
        let d: [f64; 6] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let at = |u: f64| TetMetric(std::array::from_fn(|i| m.0[i] + u * d[i]));
        let dvol = (tet_volume(&at(h)) - tet_volume(&at(-h))) / (2.0 * h);
        let (ap, am) = (extended_angles(&at(h)), extended_angles(&at(-h)));
        let rhs: f64 = (0..6).map(|i| m.0[i] * (ap.0[i] - am.0[i]) / (2.0 * h)).sum();
        let lhs = -2.0 * dvol;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    report(
        10,
        "Schläfli identity",
        worst < 1e-5,
        format!("10 paths, rel err {worst:.2e} (< 1e-5)"),
    );
}

#[test]
fn lobachevsky_matches_quadrature() {
    for theta in [0.2, FRAC_PI_3, 1.1, 2.0, 2.9] {
        let q = lobachevsky_quadrature(theta);
        assert!((tetra::lobachevsky_default(theta) - q).abs() < 1e-9, "θ = {theta}");
    }
}
