//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines come out in order and
//! unbuffered. `ACCEPTANCE_ONLY=4,5` restricts the run to some criteria;
//! skipped ones print SKIP and do not count as failures.
//! `ACCEPTANCE_FULL=1` uses the full training budget (200 epochs, 20
//! restarts) for the simulated benchmarks instead of the reduced one.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use prsb::baselines::{eda_rank, rsb_train, single_model, EdaConfig, RsbConfig};
use prsb::eval::{aupr, rank_features, test_error};
use prsb::gradient::exact::ExactProblem;
use prsb::gradient::{conditional_means, ensemble_predict_is};
use prsb::io::{parse_delimited, parse_idx, DelimitedOptions, IdxTensor};
use prsb::learners;
use prsb::network::{lambda_sweep, synthetic_network};
use prsb::rng::{self, StreamRng};
use prsb::sampling::{effective_sample_size, importance_weight, importance_weight_without, pmf, sample_subset};
use prsb::simdata::{generate, SimData, SimKind, SimProblemSpec};
use prsb::{
    train, Dataset, Ensemble, FeatureSubset, FusedSpec, LearnerSpec, LossSpec, Prediction, RegularizerSpec,
    SelectionProbs, Target, TaskKind, TrainConfig,
};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn full_budget() -> bool {
    std::env::var("ACCEPTANCE_FULL").is_ok_and(|v| v == "1")
}

/// Epochs and restarts for the simulated benchmarks.
fn sim_budget(restarts: usize) -> (usize, usize) {
    if full_budget() {
        (200, 20)
    } else {
        (50, restarts)
    }
}

fn sim(kind: SimKind, seed: u64) -> SimData {
    generate(&SimProblemSpec::new(kind, seed))
        .and_then(|s| s.normalized())
        .expect("simulated data")
}

fn prsb_fit(data: &SimData, learner: LearnerSpec, epochs: usize, restarts: usize, seed: u64) -> (f64, f64, f64) {
    let cfg = TrainConfig {
        n_epochs: epochs,
        restarts,
        seed,
        ..TrainConfig::default()
    };
    let out = train(&data.train, &learner, &LossSpec::for_task(data.train.task()), &cfg).expect("training");
    let err = test_error(&out.ensemble.predict_dataset(&data.test), data.test.target()).unwrap();
    let ranking = rank_features(out.alpha.as_slice());
    let ap = aupr(&ranking, &data.relevant, out.alpha.len()).unwrap();
    (err, ap, out.alpha.sum())
}

fn single_error(data: &SimData, learner: LearnerSpec) -> f64 {
    let e = single_model(&learner, &data.train);
    test_error(&e.predict_dataset(&data.test), data.test.target()).unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(" "))
}

// ---------------------------------------------------------------------------
// Independent oracles. These enumerate subsets with their own Bernoulli
// product and never call the library's probability code.

fn oracle_prob(bits: u64, alpha: &[f64]) -> f64 {
    alpha
        .iter()
        .enumerate()
        .map(|(j, &a)| if bits >> j & 1 == 1 { a } else { 1.0 - a })
        .product()
}

/// F(alpha) for a table of outputs `table[(i << m | z) * dim + c]`.
fn oracle_objective(m: usize, dim: usize, targets: &[f64], table: &[f64], alpha: &[f64], ce: bool) -> f64 {
    let mut total = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let mut e = vec![0.0; dim];
        for z in 0..1u64 << m {
            let p = oracle_prob(z, alpha);
            let at = ((i << m) | z as usize) * dim;
            for c in 0..dim {
                e[c] += p * table[at + c];
            }
        }
        total += if ce {
            let s: f64 = e.iter().sum();
            -(e[y as usize] / s).ln()
        } else {
            (y - e[0]).powi(2)
        };
    }
    total / targets.len() as f64
}

/// E[f_z] under beta, and E[f_z | z_j = side] for every j, for one output table.
fn oracle_expectations(f: &[f64], m: usize, beta: &[f64]) -> (f64, Vec<[f64; 2]>) {
    let mut e = 0.0;
    let mut cond = vec![[0.0; 2]; m];
    for z in 0..1u64 << m {
        e += oracle_prob(z, beta) * f[z as usize];
        for (j, c) in cond.iter_mut().enumerate() {
            let side = (z >> j & 1) as usize;
            let p_side = if side == 1 { beta[j] } else { 1.0 - beta[j] };
            c[side] += oracle_prob(z, beta) / p_side * f[z as usize];
        }
    }
    (e, cond)
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut r = rng::stream(101, 0);
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for case in 0..50 {
        let m = [4, 6, 8][case % 3];
        let ce = case % 2 == 1;
        let n = 3;
        let dim = if ce { 3 } else { 1 };
        let mut table = Vec::with_capacity(n * (1 << m) * dim);
        for _ in 0..n << m {
            if ce {
                let raw: Vec<f64> = (0..dim).map(|_| r.random_range(0.05..1.0)).collect();
                let s: f64 = raw.iter().sum();
                table.extend(raw.iter().map(|v| v / s));
            } else {
                table.push(StandardNormal.sample(&mut r));
            }
        }
        let targets: Vec<f64> = (0..n)
            .map(|_| if ce { r.random_range(0..dim) as f64 } else { StandardNormal.sample(&mut r) })
            .collect();
        let alpha: Vec<f64> = (0..m).map(|_| r.random_range(0.05..0.95)).collect();
        let loss = if ce { LossSpec::cross_entropy() } else { LossSpec::mse() };
        let problem = ExactProblem::new(m, dim, targets.clone(), table.clone()).unwrap();
        let analytic = problem.gradient(&SelectionProbs::new(alpha.clone()).unwrap(), &loss);
        let fd: Vec<f64> = (0..m)
            .map(|j| {
                let mut up = alpha.clone();
                let mut down = alpha.clone();
                up[j] += h;
                down[j] -= h;
                (oracle_objective(m, dim, &targets, &table, &up, ce)
                    - oracle_objective(m, dim, &targets, &table, &down, ce))
                    / (2.0 * h)
            })
            .collect();
        let diff = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = fd.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-300);
        worst = worst.max(diff / norm);
    }
    let t = start.elapsed();
    verdict(
        worst < 1e-6 && within(t, 10),
        format!("max relative error {worst:.2e} over 50 cases (< 1e-6), {:.1}s (< 10s)", t.as_secs_f64()),
    )
}

/// An ensemble of constant models reproducing `f[z]` for each sampled subset z.
fn table_ensemble(f: &[f64], m: usize, alpha: &SelectionProbs, t: usize, r: &mut StreamRng) -> Ensemble {
    let x = Array2::zeros((1 << m, m));
    let data = Dataset::new(x, Target::Regression(f.to_vec())).unwrap();
    let models = (0..t)
        .map(|_| {
            let z = sample_subset(alpha, r);
            let bits: usize = z.active().iter().map(|&j| 1 << j).sum();
            learners::fit(&LearnerSpec::Constant, &data, &z, &[bits])
        })
        .collect();
    Ensemble::new(models, alpha.clone(), TaskKind::Regression, 1)
}

fn point(p: Prediction) -> f64 {
    p.point()
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut r = rng::stream(202, 0);
    let loss = LossSpec::mse();
    let x = [0.0];

    // beta == alpha: the weighted estimates are the plain averages.
    let mut exact_equal = true;
    for _ in 0..20 {
        let m = r.random_range(3..=6);
        let f: Vec<f64> = (0..1 << m).map(|_| StandardNormal.sample(&mut r)).collect();
        let alpha = SelectionProbs::new((0..m).map(|_| r.random_range(0.1..0.9)).collect()).unwrap();
        let ens = table_ensemble(&f, m, &alpha, 200, &mut r);
        let state = prsb::sampling::ImportanceState::new(alpha.clone(), ens.subsets());
        let outs: Vec<f64> = ens.models().iter().map(|md| md.predict(&x).point()).collect();
        let plain = outs.iter().sum::<f64>() / outs.len() as f64;
        let is = point(ensemble_predict_is(&ens, &state, &alpha, &x, &loss).unwrap());
        exact_equal &= is.to_bits() == plain.to_bits();
        for j in 0..m {
            let (f0, f1) = conditional_means(&ens, &state, &alpha, &x, j).unwrap();
            for (side, est) in [(false, f0), (true, f1)] {
                let group: Vec<f64> = ens
                    .models()
                    .iter()
                    .zip(&outs)
                    .filter(|(md, _)| md.subset().contains(j) == side)
                    .map(|(_, &v)| v)
                    .collect();
                if let Some(est) = est {
                    let plain = group.iter().sum::<f64>() / group.len() as f64;
                    exact_equal &= est[0].to_bits() == plain.to_bits();
                } else {
                    exact_equal &= group.is_empty();
                }
            }
        }
    }

    // beta != alpha: 2,000 models against the enumerated expectations.
    let t = 2000;
    let mut misses = 0;
    let mut checks = 0;
    let mut worst_z: f64 = 0.0;
    for _ in 0..20 {
        let m = r.random_range(3..=6);
        let f: Vec<f64> = (0..1 << m).map(|_| StandardNormal.sample(&mut r)).collect();
        let a: Vec<f64> = (0..m).map(|_| r.random_range(0.2..0.8)).collect();
        let b: Vec<f64> = a.iter().map(|&v| (v + r.random_range(-0.1..0.1)).clamp(0.05, 0.95)).collect();
        let alpha = SelectionProbs::new(a).unwrap();
        let beta = SelectionProbs::new(b.clone()).unwrap();
        let ens = table_ensemble(&f, m, &alpha, t, &mut r);
        let state = prsb::sampling::ImportanceState::new(alpha.clone(), ens.subsets());
        let (exact_e, exact_cond) = oracle_expectations(&f, m, &b);

        let terms: Vec<f64> = ens
            .models()
            .iter()
            .map(|md| importance_weight(md.subset(), &alpha, &beta).unwrap() * md.predict(&x).point())
            .collect();
        let est = point(ensemble_predict_is(&ens, &state, &beta, &x, &loss).unwrap());
        let z = (est - exact_e).abs() / standard_error(&terms);
        worst_z = worst_z.max(z);
        misses += (z > 3.0) as usize;
        checks += 1;

        for (j, exact) in exact_cond.iter().enumerate() {
            let (f0, f1) = conditional_means(&ens, &state, &beta, &x, j).unwrap();
            for (side, est) in [(0, f0), (1, f1)] {
                let terms: Vec<f64> = ens
                    .models()
                    .iter()
                    .filter(|md| md.subset().contains(j) == (side == 1))
                    .map(|md| importance_weight_without(md.subset(), &alpha, &beta, j).unwrap() * md.predict(&x).point())
                    .collect();
                let est = est.expect("both sides sampled")[0];
                let z = (est - exact[side]).abs() / standard_error(&terms);
                worst_z = worst_z.max(z);
                misses += (z > 3.0) as usize;
                checks += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        exact_equal && misses == 0 && within(elapsed, 30),
        format!(
            "beta=alpha bit-exact: {exact_equal}; beta!=alpha: {misses}/{checks} estimates beyond 3 SE (max {worst_z:.2} SE); {:.1}s (< 30s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn standard_error(terms: &[f64]) -> f64 {
    let n = terms.len() as f64;
    let mu = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut r = rng::stream(303, 0);
    let mut pmf_err: f64 = 0.0;
    for m in 1..=12 {
        for _ in 0..3 {
            let alpha = SelectionProbs::new((0..m).map(|_| r.random_range(0.0..=1.0)).collect()).unwrap();
            let total: f64 = (0..1u64 << m).map(|b| pmf(&FeatureSubset::from_bits(m, b), &alpha)).sum();
            pmf_err = pmf_err.max((total - 1.0).abs());
        }
    }

    let mut ess_ok = true;
    for case in 0..500 {
        let t = r.random_range(1..=200);
        let w: Vec<f64> = if case % 5 == 0 {
            vec![r.random_range(0.1..3.0); t]
        } else {
            (0..t).map(|_| r.random_range(0.0..2.0)).collect()
        };
        if w.iter().all(|&v| v == 0.0) {
            continue;
        }
        let ess = effective_sample_size(&w).unwrap();
        let tf = t as f64;
        let all_equal = w.iter().all(|&v| v == w[0]);
        ess_ok &= ess >= 1.0 - 1e-12 && ess <= tf + 1e-9 * tf;
        // Equality at T exactly when the weights are equal.
        ess_ok &= if all_equal { (ess - tf).abs() <= 1e-9 * tf } else { ess < tf * (1.0 - 1e-12) };
        let c = r.random_range(1e-3..1e3);
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        ess_ok &= (effective_sample_size(&scaled).unwrap() - ess).abs() <= 1e-9 * ess;
        // Direct oracle.
        let s: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|v| v * v).sum();
        ess_ok &= (ess - s * s / s2).abs() <= 1e-9 * ess;
    }
    let t = start.elapsed();
    verdict(
        pmf_err < 1e-12 && ess_ok && within(t, 5),
        format!(
            "max |sum p - 1| {pmf_err:.1e} (< 1e-12); ESS bounds/equality/scale invariance hold: {ess_ok}; {:.2}s (< 5s)",
            t.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let (epochs, restarts) = sim_budget(5);
    let mut single = Vec::new();
    let mut tree = Vec::new();
    let mut knn = Vec::new();
    let mut knn_sum = Vec::new();
    let mut knn_aupr = Vec::new();
    for seed in 0..10 {
        let d = sim(SimKind::Hypercube, seed);
        single.push(single_error(&d, LearnerSpec::tree()));
        tree.push(prsb_fit(&d, LearnerSpec::tree(), epochs, restarts, seed).0);
        let (e, ap, s) = prsb_fit(&d, LearnerSpec::knn(), epochs, restarts, seed);
        knn.push(e);
        knn_aupr.push(ap);
        knn_sum.push(s);
    }
    let t = start.elapsed();
    let (s, tr, k, ks, ka) = (mean(&single), mean(&tree), mean(&knn), mean(&knn_sum), mean(&knn_aupr));
    let pass = (0.10..=0.40).contains(&s) && tr <= 0.20 && k <= 0.15 && ks <= 30.0 && ka >= 0.80 && within(t, 7200);
    verdict(
        pass,
        format!(
            "single tree {s:.3} in [0.10,0.40]; PRSB-tree {tr:.3} <= 0.20; PRSB-kNN {k:.3} <= 0.15, sum alpha {ks:.2} <= 30, AUPR {ka:.3} >= 0.80; \
             {epochs} epochs x {restarts} restarts, {:.0}s (<= 7200s); per-seed PRSB-tree {}",
            t.as_secs_f64(),
            fmt(&tree)
        ),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let (epochs, restarts) = sim_budget(1);
    let mut err = Vec::new();
    let mut ap = Vec::new();
    for seed in 0..10 {
        let d = sim(SimKind::Friedman, seed);
        let (e, a, _) = prsb_fit(&d, LearnerSpec::tree(), epochs, restarts, seed);
        err.push(e);
        ap.push(a);
    }
    let (e, a) = (mean(&err), mean(&ap));
    verdict(
        e <= 2.2 && a >= 0.90,
        format!(
            "PRSB-tree MSE {e:.3} <= 2.2, AUPR {a:.3} >= 0.90; {epochs} epochs x {restarts} restarts, {:.0}s; per-seed AUPR {}",
            start.elapsed().as_secs_f64(),
            fmt(&ap)
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut wins = 0;
    let mut knn_gap = Vec::new();
    for seed in 0..10 {
        let d = sim(SimKind::Hypercube, seed);
        let rsb_err = |learner: LearnerSpec| {
            let out = rsb_train(&d.train, &learner, &RsbConfig::default(), &mut rng::stream(seed, 0)).unwrap();
            test_error(&out.ensemble.predict_dataset(&d.test), d.test.target()).unwrap()
        };
        if rsb_err(LearnerSpec::tree()) < single_error(&d, LearnerSpec::tree()) {
            wins += 1;
        }
        knn_gap.push(single_error(&d, LearnerSpec::knn()) - rsb_err(LearnerSpec::knn()));
    }
    let gap = mean(&knn_gap);
    verdict(
        wins >= 7 && gap <= 0.05,
        format!("RSB-tree beats single tree on {wins}/10 seeds (>= 7); RSB-kNN improves on single kNN by {gap:.3} (<= 0.05)"),
    )
}

fn noise_regression(seed: u64) -> Dataset {
    let mut r = rng::stream(seed, 7);
    let x = Array2::from_shape_fn((200, 30), |_| r.random_range(-1.0..1.0));
    let y = (0..200).map(|_| StandardNormal.sample(&mut r)).collect();
    Dataset::new(x, Target::Regression(y)).unwrap()
}

/// Smooth 8x8 "images": i.i.d. pixels averaged over their 3x3
/// neighbourhood, so neighbouring pixels carry overlapping information. The
/// target is the sum over the central 4x4 block plus noise.
fn grid_task(seed: u64) -> Dataset {
    let mut r = rng::stream(seed, 8);
    let n = 300;
    let raw = Array2::from_shape_fn((n, 64), |_| {
        let e: f64 = StandardNormal.sample(&mut r);
        e
    });
    let x = Array2::from_shape_fn((n, 64), |(i, p)| {
        let (pr, pc) = ((p / 8) as i64, (p % 8) as i64);
        let mut sum = 0.0;
        let mut count = 0.0;
        for a in pr - 1..=pr + 1 {
            for b in pc - 1..=pc + 1 {
                if (0..8).contains(&a) && (0..8).contains(&b) {
                    sum += raw[[i, (a * 8 + b) as usize]];
                    count += 1.0;
                }
            }
        }
        sum / count
    });
    let block: Vec<usize> = (2..6).flat_map(|row| (2..6).map(move |col| row * 8 + col)).collect();
    let y = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut r);
            block.iter().map(|&p| x[[i, p]]).sum::<f64>() / 4.0 + 0.3 * e
        })
        .collect();
    Dataset::new(x, Target::Regression(y)).unwrap()
}

fn total_variation(alpha: &[f64], h: usize, w: usize) -> f64 {
    let mut tv = 0.0;
    for row in 0..h {
        for col in 0..w {
            let a = alpha[row * w + col];
            if col + 1 < w {
                tv += (a - alpha[row * w + col + 1]).abs();
            }
            if row + 1 < h {
                tv += (a - alpha[(row + 1) * w + col]).abs();
            }
        }
    }
    tv
}

fn criterion_7() -> Verdict {
    let base = TrainConfig {
        n_epochs: 20,
        restarts: 1,
        ..TrainConfig::default()
    };
    let mut plain = Vec::new();
    let mut penalized = Vec::new();
    for seed in 0..5 {
        let d = noise_regression(seed);
        for (lambda, out) in [(0.0, &mut plain), (0.01, &mut penalized)] {
            let cfg = TrainConfig {
                seed,
                regularizer: RegularizerSpec {
                    lambda_l1: lambda,
                    ..RegularizerSpec::default()
                },
                ..base.clone()
            };
            out.push(train(&d, &LearnerSpec::tree(), &LossSpec::mse(), &cfg).unwrap().alpha.sum());
        }
    }
    let (p0, p1) = (mean(&plain), mean(&penalized));
    let l1_ok = p1 <= 0.5 * p0;

    let lambdas = [0.0, 1e-3, 1e-2];
    let mut tv = [0.0; 3];
    for seed in 0..3 {
        let d = grid_task(seed);
        for (k, &l) in lambdas.iter().enumerate() {
            let cfg = TrainConfig {
                seed,
                regularizer: RegularizerSpec {
                    fused: Some(FusedSpec {
                        height: 8,
                        width: 8,
                        lambda: l,
                    }),
                    ..RegularizerSpec::default()
                },
                ..base.clone()
            };
            let a = train(&d, &LearnerSpec::knn(), &LossSpec::mse(), &cfg).unwrap().alpha;
            tv[k] += total_variation(a.as_slice(), 8, 8) / 3.0;
        }
    }
    let tv_ok = tv[0] > tv[1] && tv[1] > tv[2];
    verdict(
        l1_ok && tv_ok,
        format!(
            "L1: mean sum alpha {p0:.2} -> {p1:.2} (need <= 50%); fused: mean TV over lambda {{0,1e-3,1e-2}} = {} (strictly decreasing)",
            fmt(&tv)
        ),
    )
}

fn criterion_8() -> Verdict {
    let (epochs, restarts) = sim_budget(5);
    let mut prsb_ap = Vec::new();
    let mut eda_ap = Vec::new();
    for seed in 0..5 {
        let d = sim(SimKind::Friedman, seed);
        prsb_ap.push(prsb_fit(&d, LearnerSpec::knn(), epochs, restarts, seed).1);
        let out = eda_rank(&d.train, &LearnerSpec::knn(), &EdaConfig::default(), &mut rng::stream(seed, 0)).unwrap();
        let m = out.alpha.len();
        eda_ap.push(aupr(&rank_features(out.alpha.as_slice()), &d.relevant, m).unwrap());
    }
    let (p, e) = (mean(&prsb_ap), mean(&eda_ap));
    verdict(
        p >= e,
        format!("Friedman AUPR: PRSB-kNN {p:.3} >= EDA-kNN {e:.3}; per-seed EDA {}", fmt(&eda_ap)),
    )
}

/// The default lambda grid is scaled for expression values in a narrow
/// range. This generator emits unit-variance drivers, where the penalty only
/// starts removing rows around 0.1, so the sweep spans that range.
const GRN_GRID: [f64; 6] = [0.0, 0.01, 0.03, 0.1, 0.3, 1.0];

fn criterion_9() -> Verdict {
    let cfg = TrainConfig {
        n_epochs: 10,
        restarts: 1,
        ..TrainConfig::default()
    };
    let mut ok = true;
    let mut lines = Vec::new();
    for seed in 0..3 {
        let problem = synthetic_network(20, 6, 3, 200, seed).unwrap();
        let gold = problem.gold().unwrap().to_vec();
        let prevalence = gold.len() as f64 / (20.0 * 19.0);
        let cfg = TrainConfig { seed, ..cfg.clone() };
        let sweep = lambda_sweep(&problem, &LearnerSpec::knn(), &cfg, &GRN_GRID).unwrap();
        let ap = sweep.chosen_fit().ranking.aupr(&gold).unwrap();
        let active: Vec<usize> = sweep.fits.iter().map(|f| f.active_rows(0.01)).collect();
        let monotone = active.windows(2).all(|w| w[1] <= w[0]);
        ok &= ap >= 3.0 * prevalence && monotone;
        lines.push(format!(
            "seed {seed}: lambda {} AUPR {ap:.3} vs 3x prevalence {:.3}, active rows {active:?}",
            sweep.chosen,
            3.0 * prevalence
        ));
    }
    verdict(ok, lines.join("; "))
}

fn mutate(base: &[u8], r: &mut StreamRng) -> Vec<u8> {
    let mut b = base.to_vec();
    match r.random_range(0..4) {
        0 => b.truncate(r.random_range(0..=b.len())),
        1 => {
            for _ in 0..r.random_range(1..=4) {
                if !b.is_empty() {
                    let i = r.random_range(0..b.len());
                    b[i] = r.random();
                }
            }
        }
        2 => {
            let i = r.random_range(0..=b.len());
            let extra: Vec<u8> = (0..r.random_range(1..8)).map(|_| r.random()).collect();
            b.splice(i..i, extra);
        }
        _ => {
            if !b.is_empty() {
                let i = r.random_range(0..b.len());
                let j = r.random_range(i..=b.len());
                b.drain(i..j);
            }
        }
    }
    b
}

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let mut r = rng::stream(1010, 0);
    let idx = IdxTensor {
        dims: vec![6, 4, 3],
        data: (0..72).map(|v| (v * 3) as u8).collect(),
    }
    .to_bytes();
    let csv = b"a,b,c,label\n0.5,1,2,x\n-1,2.5,3,y\n4,5,6e-1,x\n7,8,9,y\n".to_vec();
    let opts = DelimitedOptions::default();
    let mut crashes = 0;
    let mut unlocated = 0;
    let mut errors = 0;
    for case in 0..10_000 {
        let bytes = mutate(if case % 2 == 0 { &idx } else { &csv }, &mut r);
        let result = catch_unwind(AssertUnwindSafe(|| {
            if case % 2 == 0 {
                parse_idx(&bytes).err().map(|_| true)
            } else {
                parse_delimited(&bytes, b',', &opts).err().map(|e| e.location().is_some())
            }
        }));
        match result {
            Err(_) => crashes += 1,
            Ok(Some(located)) => {
                errors += 1;
                unlocated += (!located) as usize;
            }
            Ok(None) => {}
        }
    }
    let t = start.elapsed();
    verdict(
        crashes == 0 && unlocated == 0 && within(t, 60),
        format!(
            "10000 mutated inputs: {crashes} crashes, {errors} errors of which {unlocated} without location; {:.1}s (< 60s)",
            t.as_secs_f64()
        ),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_prsb"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn criterion_11() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let sim_ok = run_cli(&["simulate", "--problem", "hypercube", "--seed", "3", "--out-dir", &p("data")]);
    let (train, test, rel) = (p("data/train.csv"), p("data/test.csv"), p("data/relevant.txt"));
    let grn_dir = p("grn");
    std::fs::create_dir_all(&grn_dir).unwrap();
    let expression = write_expression(Path::new(&grn_dir));

    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "train",
            ["train", "--train", &train, "--test", &test, "--relevant", &rel, "--models", "10", "--epochs", "2", "--restarts", "2", "--seed", "5"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "baseline-rsb",
            ["baseline", "--method", "rsb", "--train", &train, "--test", &test, "--models", "10", "--cv-folds", "3", "--seed", "5"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "baseline-eda",
            [
                "baseline", "--method", "eda", "--learner", "knn", "--train", &train, "--relevant", &rel, "--population", "20",
                "--restarts", "2", "--max-iterations", "3", "--cv-folds", "3", "--seed", "5",
            ]
            .map(String::from)
            .to_vec(),
        ),
        (
            "grn",
            [
                "grn", "--expression", &expression, "--lambda-grid", "0,0.01", "--models", "10", "--epochs", "2",
                "--restarts", "1", "--seed", "5",
            ]
            .map(String::from)
            .to_vec(),
        ),
    ];

    let mut identical = sim_ok;
    let mut names = Vec::new();
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let alpha = p(&format!("{name}-{rep}.alpha"));
            let report = p(&format!("{name}-{rep}.csv"));
            let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
            if *name == "grn" {
                full.extend(["--edges-out", &alpha, "--report-out", &report]);
            } else {
                full.extend(["--alpha-out", &alpha, "--report-out", &report]);
            }
            let ok = run_cli(&full);
            outputs.push((ok, std::fs::read(&alpha).ok(), std::fs::read(&report).ok()));
        }
        let same = outputs[0].0
            && outputs[1].0
            && outputs[0].1.is_some()
            && outputs[0].2.is_some()
            && outputs[0].1 == outputs[1].1
            && outputs[0].2 == outputs[1].2;
        identical &= same;
        names.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    verdict(identical, format!("repeated runs with the same seed: {}", names.join(", ")))
}

fn write_expression(dir: &Path) -> String {
    let problem = synthetic_network(8, 3, 2, 40, 11).unwrap();
    let x = problem.expression();
    let mut text = (1..=x.ncols()).map(|g| format!("g{g}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for row in x.outer_iter() {
        text.push_str(&row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    let path = dir.join("expression.csv");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Verdict); 11] = [
        (1, "gradient matches finite differences", criterion_1),
        (2, "importance-sampled estimates are consistent", criterion_2),
        (3, "PMF and effective sample size properties", criterion_3),
        (4, "hypercube benchmark", criterion_4),
        (5, "Friedman benchmark", criterion_5),
        (6, "ensembling helps trees, not kNN", criterion_6),
        (7, "regularizers shrink and smooth alpha", criterion_7),
        (8, "PRSB ranks Friedman features at least as well as UMDA", criterion_8),
        (9, "network inference on a synthetic 20-gene network", criterion_9),
        (10, "readers survive corrupted input", criterion_10),
        (11, "CLI runs are deterministic", criterion_11),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            println!("SKIP criterion {id}: {name}");
            continue;
        }
        let v = catch_unwind(check).unwrap_or_else(|_| verdict(false, "panicked".into()));
        println!("{} criterion {id}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
