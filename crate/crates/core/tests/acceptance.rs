//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qig_core::channel::{dpi_scan, monotonicity_check, ChannelFamily};
use qig_core::entropy::QZParams;
use qig_core::fd::{
    criticality_check, hessian_metric, random_nonkernel_tangent, skewness_tensor, DiagonalChart, QzPullback,
};
use qig_core::linalg::ComplexMatrix;
use qig_core::metric::{
    apply_metric, default_radial_sequence, e_coefficients, metric_qz, petz_monotone_function,
    petz_tangential_coefficient, qubit_metric_closed_form, qubit_q1_tangential_coefficient,
    qubit_tangential_coefficient, radial_limit_qubit, special_metric, SpecialMetric, TangentVector,
};
use qig_core::state::{kernel_basis, random_probabilities, random_unfolded_with, ProbabilityVector, SimplexTangent, UnfoldedState};
use qig_core::su_basis::build_su_basis;

struct Outcome {
    passed: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn qz(q: f64, z: f64) -> QZParams {
    QZParams::new(q, z).unwrap()
}

fn pv(p: Vec<f64>) -> ProbabilityVector {
    ProbabilityVector::new(p).unwrap()
}

fn w_grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect()
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        let basis = build_su_basis(n).unwrap();
        for trial in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * n as u64 + trial);
            let q = rng.random_range(0.2..=0.8);
            let z = rng.random_range(0.5..=2.0);
            let params = qz(q, z);
            let base = random_unfolded_with(n, 0.02, &mut rng).unwrap();
            let closed = metric_qz(base.probabilities(), params, &basis).unwrap();
            let chart = DiagonalChart::new(base, &basis).unwrap();
            let h = hessian_metric(&QzPullback(params), &chart).unwrap();
            for _ in 0..20 {
                let v = random_nonkernel_tangent(&chart.base, &basis, &mut rng).unwrap();
                let want = apply_metric(&closed, &v, &v).unwrap();
                worst = worst.max(((h.form(&chart, &v, &v) - want) / want).abs());
            }
        }
    }
    Outcome {
        passed: worst < 1e-3,
        detail: format!("max relative error {worst:.3e} (tol 1e-3)"),
    }
}

fn qubit_closed_form() -> Outcome {
    let b = build_su_basis(2).unwrap();
    let mut worst: f64 = 0.0;
    for &w in &w_grid(10) {
        for &q in &w_grid(10) {
            for z in (1..=10).map(|i| 0.25 * i as f64) {
                let params = qz(q, z);
                let p = pv(vec![(1.0 + w) / 2.0, (1.0 - w) / 2.0]);
                let g = metric_qz(&p, params, &b).unwrap();
                let c = qubit_metric_closed_form(w, params).unwrap();
                for (x, y) in g.tangential.iter().zip(&c.tangential) {
                    worst = worst.max(rel(*x, *y));
                }
                let dw = TangentVector::new(SimplexTangent::new(vec![0.5, -0.5]).unwrap(), vec![0.0; 3]);
                let t_general = apply_metric(&g, &dw, &dw).unwrap();
                let t_closed = apply_metric(&c, &dw, &dw).unwrap();
                worst = worst.max(rel(t_general, t_closed)).max(rel(t_closed, 1.0 / (1.0 - w * w)));
            }
        }
    }
    Outcome {
        passed: worst < 1e-12,
        detail: format!("max deviation {worst:.3e} over 1000 grid points (tol 1e-12)"),
    }
}

fn max_tangential_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max(rel(*x, *y)))
}

fn special_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (mut bures, mut wy, mut tsallis) = (0.0f64, 0.0f64, 0.0f64);
    for n in 2..=4 {
        let basis = build_su_basis(n).unwrap();
        for _ in 0..5 {
            let p = random_probabilities(n, 0.01, &mut rng).unwrap();
            let gb = metric_qz(&p, QZParams::BURES, &basis).unwrap();
            let sb = special_metric(&p, SpecialMetric::Bures, &basis).unwrap();
            bures = bures.max(max_tangential_gap(&gb.tangential, &sb.tangential));
            let gw = metric_qz(&p, QZParams::WIGNER_YANASE, &basis).unwrap();
            let sw = special_metric(&p, SpecialMetric::WignerYanase, &basis).unwrap();
            wy = wy.max(max_tangential_gap(&gw.tangential, &sw.tangential));
            for &q in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                let gt = metric_qz(&p, qz(q, 1.0), &basis).unwrap();
                let st = special_metric(&p, SpecialMetric::Tsallis { q }, &basis).unwrap();
                tsallis = tsallis.max(max_tangential_gap(&gt.tangential, &st.tangential));
            }
        }
    }
    let (mut bures_w, mut wy_w, mut vn_w, mut limit_form) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &w in &w_grid(20) {
        bures_w = bures_w.max(rel(qubit_tangential_coefficient(w, QZParams::BURES), 4.0 * w * w));
        let wy_closed = 8.0 * (1.0 - (1.0 - w * w).sqrt());
        wy_w = wy_w.max(rel(qubit_tangential_coefficient(w, QZParams::WIGNER_YANASE), wy_closed));
        let vn = 2.0 * w * ((1.0 + w) / (1.0 - w)).ln();
        vn_w = vn_w.max(rel(qubit_tangential_coefficient(w, qz(1.0 - 1e-5, 1.0)), vn));
        limit_form = limit_form.max(rel(qubit_q1_tangential_coefficient(w), vn));
    }
    let a = bures.max(bures_w) < 1e-12;
    let b = wy.max(wy_w) < 1e-12;
    let c = tsallis < 1e-12;
    let d = vn_w < 1e-4 && limit_form < 1e-12;
    Outcome {
        passed: a && b && c && d,
        detail: format!(
            "bures {:.2e}, wigner-yanase {:.2e}, tsallis {tsallis:.2e}, q->1 limit form {limit_form:.2e} (tol 1e-12); q=1-1e-5 {vn_w:.2e} (tol 1e-4)",
            bures.max(bures_w),
            wy.max(wy_w)
        ),
    }
}

fn petz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut recast: f64 = 0.0;
    let mut samples = Vec::new();
    for _ in 0..50 {
        let w = rng.random_range(0.01..0.99);
        let params = qz(rng.random_range(0.05..0.95), rng.random_range(0.2..3.0));
        samples.push(params);
        let a = petz_tangential_coefficient(w, params).unwrap();
        let b = qubit_metric_closed_form(w, params).unwrap().tangential_at(0, 0);
        recast = recast.max(rel(a, b));
    }
    let ts: Vec<f64> = (0..=60).map(|i| 10f64.powf(-3.0 + 0.1 * i as f64)).collect();
    let mut symmetry: f64 = 0.0;
    for params in samples.iter().chain([QZParams::BURES, QZParams::WIGNER_YANASE].iter()) {
        for &t in &ts {
            let f = petz_monotone_function(t, *params).unwrap();
            let g = t * petz_monotone_function(1.0 / t, *params).unwrap();
            symmetry = symmetry.max((f - g).abs() / f.abs().max(1.0));
        }
    }
    let mut named: f64 = 0.0;
    for &t in &ts {
        let b = petz_monotone_function(t, QZParams::BURES).unwrap();
        named = named.max(rel(b, (1.0 + t) / 8.0));
        let w = petz_monotone_function(t, QZParams::WIGNER_YANASE).unwrap();
        named = named.max(rel(w, (t.sqrt() + 1.0).powi(2) / 16.0));
    }
    Outcome {
        passed: recast < 1e-10 && symmetry < 1e-12 && named < 1e-14,
        detail: format!(
            "recast {recast:.2e} (tol 1e-10), f(t)=t f(1/t) {symmetry:.2e} (tol 1e-12), named f {named:.2e} (tol 1e-14)"
        ),
    }
}

fn radial_limit() -> Outcome {
    let seq = default_radial_sequence();
    let mut parts = Vec::new();
    let mut ok = true;
    for &(q, z) in &[(0.5, 1.0), (0.5, 0.5), (0.3, 1.5)] {
        let r = radial_limit_qubit(qz(q, z), &seq).unwrap();
        let raw = ((r.last - r.expected) / r.expected).abs();
        ok &= r.relative_error() < 1e-3;
        parts.push(format!("({q},{z}) extrapolated {:.1e} raw {raw:.1e}", r.relative_error()));
    }
    let r = radial_limit_qubit(qz(1.0 - 1e-3, 1.0), &seq).unwrap();
    ok &= !r.settled;
    parts.push(format!("q=1-1e-3 contraction {:.4} settled={}", r.contraction, r.settled));
    Outcome {
        passed: ok,
        detail: format!("{} (tol 1e-3)", parts.join("; ")),
    }
}

fn potential_property() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=3 {
        let basis = build_su_basis(n).unwrap();
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + 10 * n as u64 + seed);
            let params = qz(rng.random_range(0.2..0.8), rng.random_range(0.5..2.0));
            let chart = DiagonalChart::new(random_unfolded_with(n, 0.02, &mut rng).unwrap(), &basis).unwrap();
            worst = worst.max(criticality_check(&QzPullback(params), &chart).unwrap());
        }
    }
    Outcome {
        passed: worst < 1e-6,
        detail: format!("max gradient {worst:.3e} (tol 1e-6)"),
    }
}

fn tensor_identities() -> Outcome {
    let (mut slot, mut mixed, mut skew, mut half) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for n in 2..=3 {
        let basis = build_su_basis(n).unwrap();
        for seed in 0..2u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(700 + 10 * n as u64 + seed);
            let params = qz(rng.random_range(0.2..0.8), rng.random_range(0.5..2.0));
            let chart = DiagonalChart::new(random_unfolded_with(n, 0.05, &mut rng).unwrap(), &basis).unwrap();
            let s = QzPullback(params);
            let h = hessian_metric(&s, &chart).unwrap();
            slot = slot.max(h.ll.relative_distance(&h.g)).max(h.rr.relative_distance(&h.g));
            mixed = mixed.max(h.mixed_max);
            skew = skew.max(skewness_tensor(&s, &chart).unwrap().identity_defect());
            let sym = skewness_tensor(&QzPullback(qz(0.5, params.z)), &chart).unwrap();
            skew = skew.max(sym.identity_defect());
            half = half.max(sym.t.max_abs());
        }
    }
    Outcome {
        passed: slot < 2e-4 && mixed < 1e-5 && skew < 5e-3 && half < 5e-3,
        detail: format!(
            "g_ll/g_rr vs -g_lr {slot:.2e} (tol 2e-4), mixed block {mixed:.2e} (tol 1e-5), \
             skewness identities {skew:.2e} (tol 5e-3), |T| at q=1/2 {half:.2e} (tol 5e-3)"
        ),
    }
}

fn kernel_annihilation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst: f64 = 0.0;
    let mut bases: Vec<UnfoldedState> = (2..=4)
        .flat_map(|n| (0..3).map(move |_| n))
        .map(|n| random_unfolded_with(n, 0.01, &mut rng).unwrap())
        .collect();
    bases.push(UnfoldedState::new(ComplexMatrix::identity(3), pv(vec![0.4, 0.4, 0.2])).unwrap());
    bases.push(UnfoldedState::new(ComplexMatrix::identity(4), pv(vec![0.25; 4])).unwrap());
    let mut directions = 0;
    for s in &bases {
        let basis = build_su_basis(s.dim()).unwrap();
        for params in [qz(0.3, 1.4), QZParams::BURES, qz(0.8, 0.6)] {
            let g = metric_qz(s.probabilities(), params, &basis).unwrap();
            for k in kernel_basis(s) {
                let v = TangentVector::tangential(basis.decompose(&k).unwrap());
                worst = worst.max(apply_metric(&g, &v, &v).unwrap().abs());
                directions += 1;
            }
        }
    }
    Outcome {
        passed: worst < 1e-12,
        detail: format!("max |g(K,K)| {worst:.3e} over {directions} kernel directions (tol 1e-12)"),
    }
}

fn dpi_monotonicity() -> Outcome {
    let points = [(0.25, 1.0), (0.5, 1.0), (0.75, 1.0), (0.6, 0.6), (0.9, 0.9), (0.5, 0.5)];
    let mut violations = 0;
    let mut worst_gap = f64::INFINITY;
    for n in 2..=3 {
        for (i, &(q, z)) in points.iter().enumerate() {
            let r = dpi_scan(&[q], &[z], n, 100, 900 + i as u64, ChannelFamily::Random { env_dim: 2 }).unwrap();
            violations += r.total_violations();
            worst_gap = worst_gap.min(r.grid[0].worst_gap);
        }
    }
    let mut mono_failures = 0;
    let mut worst_margin = f64::INFINITY;
    for (i, params) in [QZParams::BURES, QZParams::WIGNER_YANASE].into_iter().enumerate() {
        let r = monotonicity_check(params, 2, 50, 950 + i as u64).unwrap();
        mono_failures += r.failures;
        worst_margin = worst_margin.min(r.worst_margin);
    }
    Outcome {
        passed: violations == 0 && mono_failures == 0,
        detail: format!(
            "DPI violations {violations} (worst gap {worst_gap:.2e}), monotonicity failures {mono_failures} \
             (worst margin {worst_margin:.2e}, tol 1e-5)"
        ),
    }
}

fn qutrit_structure() -> Outcome {
    let basis = build_su_basis(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = random_probabilities(3, 0.01, &mut rng).unwrap();
        let params = qz(rng.random_range(0.1..0.9), rng.random_range(0.3..2.5));
        let g = metric_qz(&p, params, &basis).unwrap();
        let e = e_coefficients(&p, params).unwrap();
        let c = 2.0 * params.z / (params.q * (1.0 - params.q));
        let mut want = vec![0.0; 64];
        for ((i, j), ev) in [((0, 1), e.at(0, 1)), ((3, 4), e.at(0, 2)), ((5, 6), e.at(1, 2))] {
            want[i * 8 + i] = c * ev;
            want[j * 8 + j] = c * ev;
        }
        worst = worst.max(max_tangential_gap(&g.tangential, &want));
    }
    Outcome {
        passed: worst < 1e-12,
        detail: format!("max deviation from three scalar SU(2) blocks {worst:.3e} (tol 1e-12)"),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, f64, fn() -> Outcome); 10] = [
        ("oracle equivalence: FD Hessian vs closed form, n=2,3,4", 60.0, oracle_equivalence),
        ("qubit closed form on 10x10x10 (w,q,z) grid", 5.0, qubit_closed_form),
        ("special limits: Bures, Wigner-Yanase, Tsallis, q->1", 10.0, special_limits),
        ("Petz representation", 5.0, petz),
        ("weak radial limit", 1.0, radial_limit),
        ("potential-function criticality", 10.0, potential_property),
        ("slot and skewness identities", 60.0, tensor_identities),
        ("kernel annihilation", 5.0, kernel_annihilation),
        ("DPI and monotonicity on the proven set", 120.0, dpi_monotonicity),
        ("qutrit block structure", 1.0, qutrit_structure),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *budget;
        let ok = out.passed && in_time;
        if !ok {
            failures += 1;
        }
        println!(
            "{} [{:>2}] {name}: {} [{secs:.2}s / {budget}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
