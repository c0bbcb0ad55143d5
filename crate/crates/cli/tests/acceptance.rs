//! Acceptance criteria, one PASS/FAIL line each. Runtime budgets are part of
//! every verdict.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use tmlab_core::bounds::{kantorovich, kk_factors, phi_factors, psi_factors};
use tmlab_core::connection::{
    ando_hiai_g, geometric, harmonic_like, power, power_lift, square, transpose_fn, ConnectionFunction,
};
use tmlab_core::harness::ensemble::{complex_gaussian, random_unitary, trial_rng};
use tmlab_core::harness::{
    enforce_premise, run_suite, EnsembleKind, EnsembleSpec, ExperimentConfig, PremiseDirection, SuiteId,
};
use tmlab_core::means::{mean_pd, mean_recursive};
use tmlab_core::processing::{fusion_gap, transform_gap, DominationPair, DominationSide, PositiveLinearMap};
use tmlab_core::{HermitianTensor, Tensor, TensorShape};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn criterion(results: &mut Vec<bool>, id: u32, name: &str, budget_s: u64, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_budget = elapsed <= Duration::from_secs(budget_s);
    let ok = o.ok && in_budget;
    println!(
        "{} {id:>2} {name}: {} [{:.2} s of {budget_s} s]",
        if ok { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    results.push(ok);
}

fn shape(dims: &[usize]) -> TensorShape {
    TensorShape::new(dims.to_vec()).unwrap()
}

fn rel(a: &HermitianTensor, b: &HermitianTensor) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

fn pd_pairs(dims: &[usize], n: u64, seed: u64) -> Vec<(HermitianTensor, HermitianTensor)> {
    let kind = EnsembleKind::SpectrumBounded { m: 0.5, big_m: 2.0 };
    let x = EnsembleSpec::new(shape(dims), kind, seed).unwrap();
    let y = EnsembleSpec::new(shape(dims), kind, seed ^ 0x9e37_79b9_7f4a_7c15).unwrap();
    (0..n).map(|t| (x.sample(t), y.sample(t))).collect()
}

fn kantorovich_exactness() -> Outcome {
    let oracle = |m: f64, big: f64| (big + m).powi(2) / (4.0 * m * big);
    let fixed = [(1.0, 2.0, 1.125), (1.0, 4.0, 1.5625)];
    let mut worst = 0.0f64;
    for (m, big, expect) in fixed {
        let k = kantorovich(m, big, 2.0).unwrap();
        worst = worst.max((k - expect).abs()).max((k - oracle(m, big)).abs());
    }
    let mut rng = trial_rng(1, 0);
    for _ in 0..50 {
        let m = rng.random_range(0.01..10.0);
        let big = m * rng.random_range(1.0..50.0);
        let k = kantorovich(m, big, 2.0).unwrap();
        worst = worst.max((k - oracle(m, big)).abs() / oracle(m, big).max(1.0));
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.2e} (limit 1e-12)"))
}

/// `(A *_2 B)_{i1 i2, j1 j2} = sum_{k1 k2} A_{i1 i2, k1 k2} B_{k1 k2, j1 j2}`.
fn einstein_by_indices(a: &Tensor, b: &Tensor) -> Vec<num_complex::Complex64> {
    let n = 2;
    let mut out = Vec::with_capacity(16 * 16);
    let idx = |f: usize| [f / n, f % n];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = num_complex::Complex64::new(0.0, 0.0);
            for k in 0..4 {
                s += a.entry(&idx(i), &idx(k)).unwrap() * b.entry(&idx(k), &idx(j)).unwrap();
            }
            out.push(s);
        }
    }
    out
}

fn unfolding_homomorphism() -> Outcome {
    let sh = shape(&[2, 2]);
    let mut worst = 0.0f64;
    for t in 0..500 {
        let mut rng = trial_rng(2, t);
        let a = Tensor::fold(&sh, complex_gaussian(&mut rng, 4, 4)).unwrap();
        let b = Tensor::fold(&sh, complex_gaussian(&mut rng, 4, 4)).unwrap();
        let scale = a.frobenius_norm() * b.frobenius_norm();
        let prod = a.einstein(&b).unwrap();
        let direct = a.unfold() * b.unfold();
        let by_index = einstein_by_indices(&a, &b);
        for (p, (d, e)) in prod.entries().iter().zip(direct.transpose().iter().zip(&by_index)) {
            worst = worst.max((p - d).norm() / scale).max((p - e).norm() / scale);
        }
    }
    outcome(worst <= 1e-10, format!("max relative entry deviation {worst:.2e} (limit 1e-10)"))
}

fn mean_algebra() -> Outcome {
    let fns = [geometric(), square(), harmonic_like()];
    let mut worst = [0.0f64; 3];
    for (x, y) in pd_pairs(&[4], 200, 3) {
        for g in &fns {
            worst[0] = worst[0].max(rel(&mean_pd(&x, &x, g).unwrap(), &x));
            let m = mean_pd(&x, &y, g).unwrap();
            for c in [0.1, 3.0] {
                let scaled = mean_pd(&x.scale(c), &y.scale(c), g).unwrap();
                worst[1] = worst[1].max(rel(&scaled, &m.scale(c)));
            }
            let swapped = mean_pd(&y, &x, &transpose_fn(g)).unwrap();
            worst[2] = worst[2].max(rel(&swapped, &m));
        }
    }
    let ok = worst.iter().all(|&w| w <= 1e-9);
    outcome(
        ok,
        format!(
            "idempotence {:.2e}, homogeneity {:.2e}, transposition {:.2e} (limit 1e-9)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn recursion_consistency() -> Outcome {
    let f = geometric();
    let mut worst = 0.0f64;
    for (x, y) in pd_pairs(&[2, 2], 100, 4) {
        for n in 2..=6 {
            let rec = mean_recursive(&x, &y, &f, n).unwrap();
            let direct = mean_pd(&x, &y, &power_lift(&f, n)).unwrap();
            worst = worst.max(rel(&rec, &direct));
        }
    }
    outcome(worst <= 1e-8, format!("max relative deviation {worst:.2e} (limit 1e-8)"))
}

fn ando_hiai_suite() -> Outcome {
    let f = power(0.5);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut suite_violations = 0;
    for m in [2u32, 3] {
        let lifted = power_lift(&f, m);
        let g = ando_hiai_g(&f, m).unwrap();
        for q in [0.5, 1.0, 2.0] {
            let mut cfg = ExperimentConfig::default();
            cfg.exponents.m = m;
            cfg.exponents.q = q;
            cfg.function = Some("power:0.5".into());
            suite_violations += run_suite(SuiteId::T1AndoHiaiGeneralized, &cfg).unwrap().violations;
            // Direct absolute check on the same ensembles: lambda_max <= prod K_k + 1e-8.
            let xs = cfg.ensemble(cfg.ensembles.x, "x");
            let ys = cfg.ensemble(cfg.ensembles.y, "y");
            for t in 0..cfg.trials as u64 {
                let (x, y, _) =
                    enforce_premise(&xs.sample(t), &ys.sample(t), &lifted, PremiseDirection::BelowIdentity).unwrap();
                let lhs = mean_pd(&x.powf(q).unwrap(), &y.powf(q).unwrap(), &lifted).unwrap().lambda_max();
                let bound = kk_factors(&x, &g, m, q, 1).unwrap().product;
                worst_excess = worst_excess.max(lhs - bound);
            }
        }
    }
    outcome(
        suite_violations == 0 && worst_excess <= 1e-8,
        format!("suite violations {suite_violations}, max lambda_max - prod K_k = {worst_excess:.2e} (limit 1e-8)"),
    )
}

fn lie_trotter_convergence() -> Outcome {
    let cfg = ExperimentConfig { trials: 200, ..ExperimentConfig::default() };
    let r = run_suite(SuiteId::T2LieTrotterLimit, &cfg).unwrap();
    outcome(
        r.violations == 0,
        format!("{} of {} trials violate, max commuting defect or final error {:.2e}", r.violations, r.trials, r.max_violation),
    )
}

fn psd_limit() -> Outcome {
    let cfg = ExperimentConfig::default();
    let r = run_suite(SuiteId::T63PsdLimit, &cfg).unwrap();
    let worst: Vec<&String> = r.regime_notes.iter().filter(|n| n.contains("worst final")).collect();
    outcome(
        r.violations == 0,
        format!("{} of {} trials violate; {}", r.violations, r.trials, worst.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ")),
    )
}

fn fusion_inequality() -> Outcome {
    let g = square();
    let pairs = pd_pairs(&[2, 2], 2000, 8);
    let mut worst = f64::INFINITY;
    for q in pairs.chunks(2) {
        let p1 = DominationPair::new(q[0].0.clone(), q[0].1.clone(), DominationSide::LeftDominated).unwrap();
        let p2 = DominationPair::new(q[1].0.clone(), q[1].1.clone(), DominationSide::LeftDominated).unwrap();
        worst = worst.min(fusion_gap(&p1, &p2, &g, 1e-8).unwrap().0);
    }
    // Scalar case: x1^2/y1 + x2^2/y2 - (x1+x2)^2/(y1+y2) = (x1 y2 - x2 y1)^2 / (y1 y2 (y1+y2)).
    let s = shape(&[1]);
    let one = |v: f64| HermitianTensor::diagonal(&s, &[v]).unwrap();
    let mut rng = trial_rng(8, 1);
    let mut scalar_dev = 0.0f64;
    for _ in 0..200 {
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..5.0)).collect();
        let (x1, y1, x2, y2) = (v[0], v[1], v[2], v[3]);
        let p1 = DominationPair::new(one(x1), one(y1), DominationSide::LeftDominated).unwrap();
        let p2 = DominationPair::new(one(x2), one(y2), DominationSide::LeftDominated).unwrap();
        let gap = fusion_gap(&p1, &p2, &g, 1e-8).unwrap().0;
        let expect = (x1 * y2 - x2 * y1).powi(2) / (y1 * y2 * (y1 + y2));
        scalar_dev = scalar_dev.max((gap - expect).abs() / expect.max(1.0));
    }
    outcome(
        worst >= -1e-8 && scalar_dev <= 1e-10,
        format!("min lambda_min(RHS - LHS) {worst:.2e} (limit -1e-8), scalar closed-form deviation {scalar_dev:.2e} (limit 1e-10)"),
    )
}

fn linear_transform() -> Outcome {
    let g = square();
    let sh = shape(&[2, 2]);
    let pinching = PositiveLinearMap::pinching(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
    let mut worst = f64::INFINITY;
    let mut unitary = 0.0f64;
    for (t, (x, y)) in pd_pairs(&[2, 2], 1000, 9).into_iter().enumerate() {
        let p = DominationPair::new(x, y, DominationSide::LeftDominated).unwrap();
        let mut rng = trial_rng(9, t as u64);
        let k = PositiveLinearMap::Congruence(Tensor::fold(&sh, complex_gaussian(&mut rng, 4, 4)).unwrap());
        let u = PositiveLinearMap::Congruence(Tensor::fold(&sh, random_unitary(&mut rng, 4)).unwrap());
        for map in [&k, &pinching] {
            worst = worst.min(transform_gap(map, &p, &g, 1e-8).unwrap().0);
        }
        let (_, v) = transform_gap(&u, &p, &g, 1e-8).unwrap();
        unitary = unitary.max(v.diff_min.abs()).max(v.diff_max.abs());
    }
    outcome(
        worst >= -1e-8 && unitary <= 1e-9,
        format!("min lambda_min(L(X#Y) - L(X)#L(Y)) {worst:.2e} (limit -1e-8), unitary gap {unitary:.2e} (limit 1e-9)"),
    )
}

fn markov_tails() -> Outcome {
    let cfg = ExperimentConfig { trials: 2000, ..ExperimentConfig::default() };
    let r = run_suite(SuiteId::L3MarkovChebyshev, &cfg).unwrap();
    outcome(
        r.violations == 0,
        format!(
            "{} failing configurations; worst empirical {:.4} vs bound {:.4} (stderr {:.2e})",
            r.violations, r.empirical_prob, r.bound_value, r.mc_stderr
        ),
    )
}

fn ratio_collapse() -> Outcome {
    let fns: Vec<ConnectionFunction> = vec![power(0.5), power(0.25), power(2.0), power(-1.0)];
    let mut worst = 0.0f64;
    for (x, y) in pd_pairs(&[2, 2], 100, 11) {
        for f in &fns {
            for q in [1.5, 3.0, 6.0] {
                let p = psi_factors(q, f, &x, &y).unwrap();
                let h = phi_factors(q, f, &x, &y).unwrap();
                for v in [p.lower, p.upper, h.lower, h.upper] {
                    worst = worst.max((v - 1.0).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |factor - 1| {worst:.2e} (limit 1e-10)"))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("tmlab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |name: &str| {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_tmlab"))
            .args(["verify", "--suite", "all", "--config", "default", "--seed", "20240611", "--out"])
            .arg(&out)
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        (status.code(), std::fs::read(&out).unwrap_or_default())
    };
    let (c1, a) = run("first.json");
    let (c2, b) = run("second.json");
    let _ = std::fs::remove_dir_all(&dir);
    let same = !a.is_empty() && a == b && c1 == c2;
    outcome(same, format!("{} report bytes, identical: {same}, exit codes {c1:?} / {c2:?}", a.len()))
}

#[test]
fn acceptance() {
    let mut r = Vec::new();
    criterion(&mut r, 1, "Kantorovich exactness", 1, kantorovich_exactness);
    criterion(&mut r, 2, "Unfolding homomorphism", 5, unfolding_homomorphism);
    criterion(&mut r, 3, "Mean algebra", 10, mean_algebra);
    criterion(&mut r, 4, "Recursion consistency", 10, recursion_consistency);
    criterion(&mut r, 5, "Ando-Hiai suite, m in {2,3}, q in {0.5,1,2}", 60, ando_hiai_suite);
    criterion(&mut r, 6, "Lie-Trotter convergence", 30, lie_trotter_convergence);
    criterion(&mut r, 7, "PSD limit", 10, psd_limit);
    criterion(&mut r, 8, "Fusion inequality", 30, fusion_inequality);
    criterion(&mut r, 9, "Linear-transform inequality", 30, linear_transform);
    criterion(&mut r, 10, "Markov-Chebyshev tail bounds", 60, markov_tails);
    criterion(&mut r, 11, "Psi/Phi power-function collapse", 10, ratio_collapse);
    criterion(&mut r, 12, "Determinism of verify --suite all", 300, determinism);
    let failed = r.iter().filter(|ok| !**ok).count();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
