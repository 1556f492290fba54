//! Acceptance suite. Runs every criterion in sequence (the timing criterion
//! must not share the CPU with other work) and prints one PASS/FAIL line per
//! criterion. Exits nonzero if any criterion fails.
//!
//! Run alone with `cargo test -p jgcs-core --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use jgcs::gradcheck::run_gradcheck;
use jgcs::harness::align::{run_alignment_experiment, AlignConfig};
use jgcs::harness::bench::{analyze_scaling, run_runtime_benchmark, BenchConfig, BenchMode, BenchmarkRecord, LossKind};
use jgcs::harness::noise::{run_noise_experiment, REFERENCE_MEANS};
use jgcs::harness::output::{self, Metadata};
use jgcs::linalg::random_orthogonal;
use jgcs::losses::{angular_equilibrium, gha_contrastive_value, info_nce_value, sample_negatives, Batch, LossConfig, NegScheme, NegativeAssignment};
use jgcs::nn::TrainConfig;
use jgcs::rng;
use jgcs::similarity::{cos_theta_rows, cosine, phi3, similarity_rows};
use jgcs::Exec;

/// Outcome of one criterion: pass/fail and a one-line summary of what was measured.
struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < budget, format!("{:.1}s of {:.0}s", t.as_secs_f64(), budget.as_secs_f64()))
}

fn noise_robustness() -> Outcome {
    let start = Instant::now();
    let report = run_noise_experiment(42).expect("noise experiment");
    let means: Vec<f64> = report.levels.iter().map(|l| l.mean).collect();
    let ratios: Vec<f64> = means.iter().zip(REFERENCE_MEANS).map(|(m, r)| m / r).collect();
    let in_band = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    let (fast, time) = within_budget(start, Duration::from_secs(10));
    check(
        in_band && report.strictly_increasing && report.fit.r_squared >= 0.95 && fast,
        format!(
            "means {:?}, ratio to published {:?}, increasing {}, R^2 {:.4}, {time}",
            means.iter().map(|m| format!("{m:.5}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(),
            report.strictly_increasing,
            report.fit.r_squared
        ),
    )
}

fn gaussian_rows(r: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(r)).collect()).collect()
}

fn cos_of(rows: &[Vec<f64>]) -> f64 {
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    cos_theta_rows(&refs).expect("valid tuple")
}

fn identity_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(2024);
    let mut worst = [0.0f64; 7];

    for _ in 0..1000 {
        let d = r.random_range(3..=64);
        let t = gaussian_rows(&mut r, 3, d);
        let res = similarity_rows(&[&t[0], &t[1], &t[2]]).unwrap();
        let p = phi3(&t[0], &t[1], &t[2]).unwrap();
        worst[0] = worst[0].max((res.cos_theta * res.cos_theta - p).abs());
    }

    for trial in 0..1000u64 {
        let n = 2 + (trial % 7) as usize;
        let d = r.random_range(n..=n + 12);
        let rows = gaussian_rows(&mut r, n, d);
        let c = cos_of(&rows);

        let q = random_orthogonal(d, 10_000 + trial);
        let rotated: Vec<Vec<f64>> = rows.iter().map(|row| (0..d).map(|i| jgcs::linalg::dot(q.row(i), row)).collect()).collect();
        worst[1] = worst[1].max((cos_of(&rotated) - c).abs());

        let mut permuted = rows.clone();
        permuted.rotate_left(1 + trial as usize % n);
        permuted.swap(0, n - 1);
        worst[2] = worst[2].max((cos_of(&permuted) - c).abs());

        let mut negated = rows.clone();
        let which = trial as usize % n;
        negated[which].iter_mut().for_each(|v| *v = -*v);
        worst[3] = worst[3].max((cos_of(&negated) - c).abs());

        let mut scaled = rows.clone();
        let factor = 10f64.powf(r.random_range(-3.0..3.0));
        scaled[which].iter_mut().for_each(|v| *v *= factor);
        worst[4] = worst[4].max((cos_of(&scaled) - c).abs());

        // n = 2 on nonnegative vectors against the ordinary cosine.
        let pair: Vec<Vec<f64>> = gaussian_rows(&mut r, 2, d).into_iter().map(|v| v.into_iter().map(f64::abs).collect()).collect();
        worst[5] = worst[5].max((cos_of(&pair) - cosine(&pair[0], &pair[1]).unwrap()).abs());
    }

    // Extremal cases: dependent rows and orthogonal rows.
    let mut extremal_ok = true;
    for trial in 0..200u64 {
        let n = 2 + (trial % 7) as usize;
        let d = n + 4;
        let mut rows = gaussian_rows(&mut r, n, d);
        let last: Vec<f64> = (0..d).map(|i| rows[0][i] * 0.7 - rows[1][i] * 1.3).collect();
        rows[n - 1] = last;
        if n == 2 {
            rows[1] = rows[0].iter().map(|v| -2.5 * v).collect();
        }
        extremal_ok &= (cos_of(&rows) - 1.0).abs() <= 1e-6;
        let q = random_orthogonal(d, 20_000 + trial);
        let orth: Vec<Vec<f64>> = (0..n).map(|i| q.row(i).iter().map(|v| v * (1.0 + i as f64)).collect()).collect();
        worst[6] = worst[6].max(cos_of(&orth));
    }

    let limits = [1e-9, 1e-8, 1e-12, 1e-12, 1e-10, 1e-12, 1e-9];
    let ok = worst.iter().zip(limits).all(|(w, l)| *w < l) && extremal_ok;
    let (fast, time) = within_budget(start, Duration::from_secs(30));
    check(
        ok && fast,
        format!(
            "max |cos^2-phi3| {:.1e}, rotation {:.1e}, permutation {:.1e}, negation {:.1e}, scale {:.1e}, n=2 {:.1e}, orthogonal {:.1e}, dependent within 1e-6: {extremal_ok}, {time}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5], worst[6]
        ),
    )
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, d) in [(2, 4), (3, 8), (3, 16), (4, 12)] {
        let report = run_gradcheck(n, d, 7).expect("gradient check");
        ok &= report.passed();
        let worst = report
            .components
            .iter()
            .map(|c| format!("{}={:.1e}", c.name, c.max_rel_error))
            .collect::<Vec<_>>()
            .join(" ");
        parts.push(format!("n={n} D={d}: {worst}"));
    }
    let (fast, time) = within_budget(start, Duration::from_secs(60));
    check(ok && fast, format!("{}; {time}", parts.join("; ")))
}

fn alignment_simulation() -> Outcome {
    let start = Instant::now();
    let cfg = AlignConfig::default();
    match run_alignment_experiment(&cfg) {
        Ok(report) => {
            let first = report.history.first().map_or(f64::NAN, |h| h.l_total);
            let last = report.history.last().map_or(f64::NAN, |h| h.l_total);
            let gain = report.final_mean_cos_pos - report.initial_mean_cos_pos;
            let (fast, time) = within_budget(start, Duration::from_secs(15 * 60));
            check(
                report.final_mean_cos_pos >= 0.9 && gain >= 0.2 && last < first && fast,
                format!(
                    "mean cos_pos {:.4} -> {:.4} (gain {gain:.4}) over {} epochs, L_GHA {first:.4} -> {last:.4}, {time}",
                    report.initial_mean_cos_pos,
                    report.final_mean_cos_pos,
                    report.history.len()
                ),
            )
        }
        Err(e) => check(false, format!("training aborted: {e}")),
    }
}

fn mean_of(records: &[BenchmarkRecord], kind: LossKind, n: usize, k: usize) -> f64 {
    records.iter().find(|r| r.kind == kind && r.n == n && r.k == k).map_or(f64::NAN, |r| r.mean_ms)
}

fn runtime_comparison() -> Outcome {
    let start = Instant::now();
    let by_k = run_runtime_benchmark(&BenchConfig { mode: BenchMode::ByNegatives, ..BenchConfig::default() }).expect("benchmark");
    let ks: Vec<usize> = (1..=10).map(|i| 5 * i).collect();
    let slower: Vec<usize> = ks
        .iter()
        .copied()
        .filter(|&k| mean_of(&by_k, LossKind::Gha, 3, k) >= mean_of(&by_k, LossKind::Dual, 3, k))
        .collect();
    let ratio_k50 = mean_of(&by_k, LossKind::Gha, 3, 50) / mean_of(&by_k, LossKind::Dual, 3, 50);

    let by_n = run_runtime_benchmark(&BenchConfig { mode: BenchMode::ByModalities, ..BenchConfig::default() }).expect("benchmark");
    let s = analyze_scaling(&by_n).expect("scaling analysis");
    let (fast, time) = within_budget(start, Duration::from_secs(5 * 60));
    check(
        slower.is_empty() && s.ratio_last > s.ratio_first && s.gha_linear_r_squared >= 0.9 && s.dual_residual_ratio >= 2.0 && fast,
        format!(
            "GHA slower at K={slower:?}; GHA/Dual at K=50 {ratio_k50:.3}; Dual/GHA n=3 {:.3} -> n=12 {:.3}; GHA linear R^2 {:.4}; Dual linear/quadratic RSS {:.1}; {time}",
            s.ratio_first, s.ratio_last, s.gha_linear_r_squared, s.dual_residual_ratio
        ),
    )
}

fn loss_closed_forms() -> Outcome {
    let exec = Exec::Sequential;
    // Every feature identical: every cosΘ is 1, so all K+1 logits are equal.
    let k = 7;
    let uniform = Batch::new(8, 3, 4, vec![0.5; 8 * 3 * 4]).unwrap();
    let neg = sample_negatives(8, 3, k, NegScheme::AnchorFixed, &mut rng::seeded(1)).unwrap();
    let cfg = LossConfig { negatives: k, ..LossConfig::default() };
    let e1 = (gha_contrastive_value(&uniform, &neg, &cfg, exec).unwrap() - ((k + 1) as f64).ln()).abs();

    // Sample 0 = (e1, e1), sample 1 = (e2, e2): positives are parallel, the
    // single negative of each sample mixes e1 with e2 and is orthogonal.
    let pair = Batch::new(2, 2, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
    let neg = NegativeAssignment::from_indices(2, 2, 1, vec![0, 1, 1, 0]).unwrap();
    let cfg = LossConfig { tau: 1.0, negatives: 1, ..LossConfig::default() };
    let want = (1.0 + (-1.0f64).exp()).ln();
    let e2 = (gha_contrastive_value(&pair, &neg, &cfg, exec).unwrap() - want).abs();
    let e2_direct = (info_nce_value(&[1.0, 0.0], 1.0) - want).abs();

    // Pairwise cosines (1, 0, 0): f1 = f2 = e1, f3 = e2.
    let angular = Batch::new(2, 3, 2, [1.0, 0.0, 1.0, 0.0, 0.0, 1.0].repeat(2)).unwrap();
    let e3 = (angular_equilibrium(&angular, exec).unwrap().value - 2.0 / 9.0).abs();

    check(
        e1 < 1e-12 && e2 < 1e-12 && e2_direct < 1e-12 && e3 < 1e-12,
        format!("|L_C - log(K+1)| {e1:.1e}, |L_C - log(1+e^-1)| {e2:.1e}, |L_A - 2/9| {e3:.1e}"),
    )
}

fn read_without_timing(path: &Path, timing_columns: &[&str]) -> String {
    let text = fs::read_to_string(path).expect("output file");
    let mut header: Vec<String> = Vec::new();
    let mut out = String::new();
    for line in text.lines() {
        if line.starts_with('#') {
            out.push_str(line);
            out.push('\n');
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if header.is_empty() {
            header = fields.iter().map(|s| s.to_string()).collect();
        }
        let kept: Vec<&str> = fields
            .iter()
            .zip(&header)
            .filter(|(_, h)| !timing_columns.contains(&h.as_str()))
            .map(|(f, _)| *f)
            .collect();
        out.push_str(&kept.join(","));
        out.push('\n');
    }
    out
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().expect("temp dir");
    let run = |tag: &str| -> Vec<(String, String)> {
        let dir = root.path().join(tag);
        let mut files = Vec::new();

        let noise = run_noise_experiment(7).unwrap();
        let meta = Metadata::new("noise", 7);
        files.push(output::write_noise_report(&dir, &noise, &meta).unwrap());
        files.push(output::write_noise_summary(&dir, &noise, &meta).unwrap());

        // Reduced size; the full-size run is exercised by the alignment criterion.
        let cfg = AlignConfig {
            count: 400,
            dim: 32,
            train: TrainConfig { epochs: 3, hidden: 32, ..TrainConfig::default() },
            ..AlignConfig::default()
        };
        let align = run_alignment_experiment(&cfg).unwrap();
        let meta = Metadata::new("align", cfg.train.seed).with_json("config", &cfg).unwrap();
        files.push(output::write_history(&dir, &align.history, &meta).unwrap());
        files.push(output::write_embeddings(&dir, output::EMBEDDINGS_BEFORE, &align.before, &meta).unwrap());
        files.push(output::write_embeddings(&dir, output::EMBEDDINGS_AFTER, &align.after, &meta).unwrap());

        let bench_cfg = BenchConfig { mode: BenchMode::ByModalities, batch: 16, dim: 16, repetitions: 2, warmups: 0, ..BenchConfig::default() };
        let records = run_runtime_benchmark(&bench_cfg).unwrap();
        files.push(output::write_bench(&dir, &records, None, &Metadata::new("bench", bench_cfg.seed)).unwrap());

        let timing = ["mean_ms", "std_ms", "median_of_means_ms", "sampler_ms"];
        files
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), read_without_timing(p, &timing)))
            .collect()
    };
    let (a, b) = (run("first"), run("second"));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let checkgrad_same = run_gradcheck(3, 8, 11).unwrap() == run_gradcheck(3, 8, 11).unwrap();
    check(
        differing.is_empty() && checkgrad_same && a.len() == 6,
        format!("{} files compared byte-for-byte (timing columns excluded); differing: {differing:?}; gradient report identical: {checkgrad_same}", a.len()),
    )
}

fn main() -> ExitCode {
    // libtest-style arguments (filters, --nocapture, ...) are accepted and ignored.
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 noise robustness", noise_robustness),
        ("2 identity and oracle suite", identity_oracles),
        ("3 gradient correctness", gradient_correctness),
        ("4 alignment simulation", alignment_simulation),
        ("5 runtime comparison", runtime_comparison),
        ("6 loss closed forms", loss_closed_forms),
        ("7 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = run();
        if !outcome.passed {
            failed += 1;
        }
        println!("{} criterion {name}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
