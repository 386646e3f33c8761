//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use nml_pca::quantization::max_pairwise_inner_product_deviation;
use nml_pca::{
    generate_lin, inner_product_perturbation_bound, kaiser, kneedle, lemma2_log_count_bound,
    quantize, select_rank, stochastic_complexity_terms, svd, tail_energy, truncate, verify_lemma1,
    DiscreteModel, Epsilon, GramMode, Matrix, Model, Scree, Svd, SyntheticSpec,
};
use nml_pca_cli::report::RUN_REPORT_SCHEMA;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut impl Rng, n: usize, m: usize) -> Matrix {
    Matrix::from_fn(n, m, |_, _| r.sample(StandardNormal))
}

fn random_orthogonal(r: &mut impl Rng, m: usize) -> Matrix {
    let g = gaussian(r, m, m);
    let q = DMatrix::from_row_slice(m, m, g.as_slice()).qr().q();
    Matrix::from_fn(m, m, |i, j| q[(i, j)])
}

fn within(label: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed > limit {
        Err(format!("{label} took {elapsed:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn eckart_young() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1001);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for case in 0..100 {
        let m = r.random_range(3..=30);
        let n = r.random_range(m.max(5)..=60);
        let x = gaussian(&mut r, n, m);
        let s = svd(&x).map_err(|e| e.to_string())?;
        let scale = x.frobenius_sq().max(1.0);
        for k in 0..=m {
            let residual = x.sub(&truncate(&s, k).unwrap()).unwrap().frobenius_sq();
            let err = (residual - tail_energy(&s, k).unwrap()).abs() / scale;
            worst = worst.max(err);
            checks += 1;
            if err > 1e-8 {
                return Err(format!(
                    "case {case} ({n}x{m}) k={k}: relative error {err:.3e}"
                ));
            }
        }
    }
    within("100 matrices", start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "{checks} (matrix, k) pairs, worst scaled error {worst:.2e}, {:.2?}",
        start.elapsed()
    ))
}

fn random_model(seed: u64) -> Model {
    let mut r = rng(seed);
    let cells = r.random_range(1..40);
    let a_len = r.random_range(1..6);
    let b_len = r.random_range(1..6);
    let weights: Vec<f64> = (0..cells).map(|_| r.random_range(0.01..1.0)).collect();
    let table: Vec<Vec<Vec<f64>>> = (0..cells)
        .map(|_| {
            (0..a_len)
                .map(|_| {
                    (0..b_len)
                        .map(|_| {
                            if r.random_bool(0.2) {
                                0.0
                            } else {
                                r.random_range(0.0..3.0)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    DiscreteModel::from_table(weights, &table).unwrap()
}

fn lemma1_sandwich() -> Outcome {
    let start = Instant::now();
    let mut models: Vec<(String, Model)> = (0..20)
        .map(|s| (format!("seed {s}"), random_model(s)))
        .collect();

    let point = DiscreteModel::from_table(vec![1.0], &[vec![vec![1.0]]]).unwrap();
    let grid: Vec<f64> = (0..5).map(f64::from).collect();
    let single_b = DiscreteModel::from_fn(&grid, vec![1.0; 5], &[0.0, 2.0], &[1.0], |x, a, _| {
        (-(x - a).abs()).exp()
    })
    .unwrap();
    // b₀ dominates every cell; b₁ and b₂ are supported on different cells
    let three_cell = DiscreteModel::from_table(
        vec![1.0; 3],
        &[
            vec![vec![3.0, 1.0, 0.0]],
            vec![vec![2.0, 0.0, 0.0]],
            vec![vec![1.0, 0.0, 1.0]],
        ],
    )
    .unwrap();
    models.push(("single point".into(), point));
    models.push(("single b".into(), single_b));
    models.push(("three cell".into(), three_cell));

    let mut min_upper = f64::INFINITY;
    let mut min_lower = f64::INFINITY;
    for (name, m) in &models {
        let c = verify_lemma1(m);
        if !(c.upper_holds && c.lower_holds) || c.slack_upper < -1e-9 || c.slack_lower < -1e-9 {
            return Err(format!("{name}: {c:?}"));
        }
        min_upper = min_upper.min(c.slack_upper);
        min_lower = min_lower.min(c.slack_lower);
    }

    let c = verify_lemma1(&models[20].1);
    if c.joint != 1.0 || c.slack_upper != 0.0 || c.slack_lower != 0.0 {
        return Err(format!("single point fixture: {c:?}"));
    }
    let c = verify_lemma1(&models[21].1);
    if c.slack_upper != 0.0 || c.slack_lower != 0.0 {
        return Err(format!("single b fixture: {c:?}"));
    }
    let c = verify_lemma1(&models[22].1);
    if c.slack_upper != c.per_b[1] + c.per_b[2] || c.slack_upper != 2.0 {
        return Err(format!(
            "three cell fixture: upper slack {} != 2",
            c.slack_upper
        ));
    }
    within("sandwich", start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "{} models, min slack upper {min_upper:.3e} lower {min_lower:.3e}",
        models.len()
    ))
}

fn score_arithmetic() -> Outcome {
    // 40-digit evaluations of 8 ln 2 + 4 ln 100 + 7 ln 1.5 − 5 ln 4 and 20 ln 4
    const WORKED: f64 = 19.872_642_139_589_625_527_155_559_202_809;
    const DELTA: f64 = 27.725_887_222_397_812_376_689_284_858_327;

    let u = Matrix::from_fn(4, 3, |i, j| if i == j { 1.0 } else { 0.0 });
    let s = Svd::from_parts(u, vec![98f64.sqrt(), 1.0, 1.0], Matrix::identity(3)).unwrap();
    let t = stochastic_complexity_terms(&s, 100.0, 4, 3, 1, Epsilon::from_inverse(6).unwrap())
        .map_err(|e| e.to_string())?;
    let worked_err = (t.lower_total() - WORKED).abs();

    let s10 = Svd::from_parts(
        Matrix::from_fn(12, 10, |i, j| if i == j { 1.0 } else { 0.0 }),
        vec![1.0; 10],
        Matrix::identity(10),
    )
    .unwrap();
    let eps = "0.05".parse::<Epsilon>().map_err(|e| e.to_string())?;
    let t10 = stochastic_complexity_terms(&s10, 1.0, 12, 10, 2, eps).map_err(|e| e.to_string())?;
    let delta_err = (t10.delta_upper - DELTA).abs();

    if worked_err > 1e-9 || delta_err > 1e-12 {
        return Err(format!(
            "worked value {} (err {worked_err:.2e}), delta_upper {} (err {delta_err:.2e})",
            t.lower_total(),
            t10.delta_upper
        ));
    }
    Ok(format!(
        "worked err {worked_err:.1e}, delta err {delta_err:.1e}"
    ))
}

fn low_rank_plus_noise(
    r: &mut impl Rng,
    n: usize,
    m: usize,
    rank: usize,
    rel_noise: f64,
) -> Matrix {
    let clean = gaussian(r, n, rank).matmul(&gaussian(r, rank, m)).unwrap();
    let sigma = rel_noise * svd(&clean).unwrap().singular_values()[rank - 1];
    Matrix::from_fn(n, m, |i, j| {
        let z: f64 = r.sample(StandardNormal);
        clean.get(i, j) + sigma * z
    })
}

fn exact_rank_recovery() -> Outcome {
    let start = Instant::now();
    let mut r = rng(4004);
    let mut runs = 0;
    for i in 0..20 {
        let rank = [2, 3, 5][i % 3];
        let m = rank + 2 + r.random_range(1..=8);
        let x = low_rank_plus_noise(&mut r, 10 * m, m, rank, 1e-6);
        let rep = select_rank(&x, Epsilon::default_for(m), GramMode::FullGram)
            .map_err(|e| e.to_string())?;
        if rep.k_lower_opt != rank || rep.k_upper_opt != rank {
            return Err(format!(
                "run {i}: rank {rank}, m {m}: got ({}, {})",
                rep.k_lower_opt, rep.k_upper_opt
            ));
        }
        runs += 1;
    }
    within("rank recovery", start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{runs}/20 runs exact, {:.2?}", start.elapsed()))
}

fn lin_brackets() -> Outcome {
    let mut found = Vec::new();
    for true_k in [10, 5] {
        let x: Matrix = generate_lin(&SyntheticSpec::lin(500, 30, true_k, 7), None)
            .map_err(|e| e.to_string())?;
        let rep = select_rank(&x, Epsilon::default_for(30), GramMode::FullGram)
            .map_err(|e| e.to_string())?;
        if !rep.bracket_contains(true_k) {
            return Err(format!("Lin{true_k}: bracket {:?}", rep.k_bracket));
        }
        found.push(format!("Lin{true_k} {:?}", rep.k_bracket));
    }
    Ok(found.join(", "))
}

fn quantization_bounds() -> Outcome {
    let mut r = rng(6006);
    let (mut entry_bad, mut pair_bad, mut pairs) = (0usize, 0usize, 0usize);
    let mut worst_ratio = 0.0f64;
    for _ in 0..200 {
        let m = r.random_range(2..=16);
        let v = random_orthogonal(&mut r, m);
        for inv in [8u64, 16, 32] {
            if inv as usize <= m {
                continue;
            }
            let eps = Epsilon::from_inverse(inv).unwrap();
            let e = eps.value::<f64>();
            let q = quantize(&v, eps, m).map_err(|e| e.to_string())?;
            if q.v_eps.sub(&v).unwrap().max_abs() > e / 2.0 {
                entry_bad += 1;
            }
            let bound = inner_product_perturbation_bound(m, e);
            for i in 0..m {
                for j in i + 1..m {
                    let cols = Matrix::from_fn(m, 2, |a, b| v.get(a, if b == 0 { i } else { j }));
                    let qc = quantize(&cols, eps, m).unwrap();
                    let dev = max_pairwise_inner_product_deviation(&cols, &qc);
                    pairs += 1;
                    worst_ratio = worst_ratio.max(dev / bound);
                    if dev > bound {
                        pair_bad += 1;
                    }
                }
            }
        }
    }
    let summary = format!(
        "entrywise violations {entry_bad}, inner-product violations {pair_bad}/{pairs}, worst deviation/bound {worst_ratio:.3}"
    );
    if entry_bad + pair_bad > 0 {
        Err(summary)
    } else {
        Ok(summary)
    }
}

fn lemma2() -> Outcome {
    // 40-digit evaluation of 8(ln 21 − (1 − 1.1025/2)/2) + ln(0.11/π)
    const ORACLE: f64 = 19.209_174_702_748_262_973_887_317_160_169;
    let eps = Epsilon::from_inverse(10).unwrap();
    let v: f64 = lemma2_log_count_bound(4, 2, eps).map_err(|e| e.to_string())?;
    if (v - ORACLE).abs() > 1e-2 {
        return Err(format!("lemma2(4, 2, 0.1) = {v}"));
    }
    for (m, inv) in [(4usize, 10u64), (7, 16), (12, 32)] {
        let e = Epsilon::from_inverse(inv).unwrap();
        let k1: f64 = lemma2_log_count_bound(m, 1, e).unwrap();
        let ev = e.value::<f64>();
        let m_f = m as f64;
        let first =
            m_f * ((2.0 / ev + 1.0).ln() - (1.0 - (1.0 + ev + ev * ev / 4.0) / m_f.sqrt()) / 2.0);
        if k1 != first {
            return Err(format!("k=1 identity at m={m}: {k1} vs {first}"));
        }
    }
    Ok(format!("lemma2(4, 2, 0.1) = {v:.6}, k=1 identity exact"))
}

fn chord_oracle(y: &[f64]) -> usize {
    let n = y.len();
    let (x1, y0, y1) = ((n - 1) as f64, y[0], y[n - 1]);
    let dy = y1 - y0;
    let len = (x1 * x1 + dy * dy).sqrt();
    (0..n)
        .map(|i| ((dy * i as f64 - x1 * y[i] + x1 * y0).abs() / len, i))
        .fold((f64::NEG_INFINITY, 0), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
        .1
}

fn baselines() -> Outcome {
    let k = kaiser(&[2.5, 1.2, 0.8, 0.5]);
    if k != 2 {
        return Err(format!("kaiser gave {k}"));
    }
    let ys: Vec<f64> = (0..10).map(|x| 1.0 / (x as f64 + 1.0)).collect();
    let knee = kneedle(&Scree::new(ys.clone(), false).unwrap(), 1.0).map_err(|e| e.to_string())?;
    if knee != Some(chord_oracle(&ys)) {
        return Err(format!("kneedle {knee:?} vs chord {}", chord_oracle(&ys)));
    }
    let mut r = rng(8008);
    for c in 0..50 {
        let len = r.random_range(4..30);
        let mut y: Vec<f64> = (0..len).map(|_| r.random_range(0.0..10.0)).collect();
        y.sort_by(|p, q| q.partial_cmp(p).unwrap());
        let a = r.random_range(0.1..20.0);
        let b = r.random_range(0.0..10.0);
        let moved: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let k1 = kneedle(&Scree::new(y, false).unwrap(), 1.0).unwrap();
        let k2 = kneedle(&Scree::new(moved, false).unwrap(), 1.0).unwrap();
        if k1 != k2 {
            return Err(format!("curve {c}: {k1:?} vs {k2:?} after a={a}, b={b}"));
        }
    }
    Ok(format!(
        "kaiser 2, kneedle {knee:?} = chord, 50 affine curves agree"
    ))
}

fn end_to_end_cli() -> Outcome {
    let start = Instant::now();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/prices_30.csv");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_nml-pca"))
            .args(["select", "--input"])
            .arg(&fixture)
            .args(["--prices", "--center", "--reproducible"])
            .output()
            .map_err(|e| e.to_string())
    };
    let a = run()?;
    let b = run()?;
    if a.status.code() != Some(0) || b.status.code() != Some(0) {
        return Err(format!(
            "exit {:?}: {}",
            a.status.code(),
            String::from_utf8_lossy(&a.stderr)
        ));
    }
    if a.stdout != b.stdout {
        return Err("reproducible runs differ".into());
    }
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).map_err(|e| e.to_string())?;
    let schema: serde_json::Value = serde_json::from_str(RUN_REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let errors: Vec<String> = validator
        .iter_errors(&report)
        .map(|e| e.to_string())
        .collect();
    if !errors.is_empty() {
        return Err(format!("schema: {errors:?}"));
    }
    if report["m"] != 30 {
        return Err(format!("fixture has {} columns", report["m"]));
    }
    within("two runs", start.elapsed(), Duration::from_secs(20))?;
    Ok(format!(
        "exit 0, schema-valid, byte-identical, {:.2?}",
        start.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 eckart-young identity", eckart_young),
        ("2 parameter sandwich", lemma1_sandwich),
        ("3 score arithmetic", score_arithmetic),
        ("4 exact rank recovery", exact_rank_recovery),
        ("5 lin brackets", lin_brackets),
        ("6 quantization bounds", quantization_bounds),
        ("7 quantized count bound", lemma2),
        ("8 baselines", baselines),
        ("9 end-to-end cli", end_to_end_cli),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {}/9 passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
