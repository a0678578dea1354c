//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test -p teamshock --test acceptance` runs all eight; pass criterion
//! numbers after `--` to run a subset, e.g. `-- 1 2 7`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StudentT};

use teamshock::calendar::YearMonth;
use teamshock::cohort::{coefficient_of_variation, off_segment_length, shannon_entropy, HourActivityVector};
use teamshock::counterfactual::{Model, Outcome};
use teamshock::effects::{conformal_interval, conformal_rank, ks_statistic, ks_two_sample};
use teamshock::heterogeneity::{
    bootstrap_regress, cluster_features, design_with_intercept, ols, spearman, spearman_matrix, standardize, vif,
    BootstrapConfig, RepresentativeRule,
};
use teamshock::pipeline::{analysis, analyze, Inputs, ModelKind, PipelineConfig};
use teamshock::synth::{generate_synthetic, ShockSpec, SyntheticSpec};
use teamshock::timeseries::{forecast_with_intervals, Metric, MonthlySeries, StlParams};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ------------------------------------------------------------------ oracles

fn entropy_oracle(c: &[f64]) -> f64 {
    let t: f64 = c.iter().sum();
    t.ln() - c.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>() / t
}

fn cv_oracle(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    if m <= 0.0 {
        return None;
    }
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (n - 1) as f64).sqrt() / m)
}

/// Mid-ranks by counting smaller and equal values.
fn rank_count(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let eq = x.iter().filter(|&&w| w == v).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

fn pearson_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

fn spearman_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson_oracle(&rank_count(a), &rank_count(b))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Diagonal of the inverse by Gauss-Jordan on `[A | I]`.
fn inverse_diagonal(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    (0..n).map(|i| m[i][n + i]).collect()
}

fn vif_oracle(cols: &[Vec<f64>]) -> Vec<f64> {
    let p = cols.len();
    let r: Vec<Vec<f64>> =
        (0..p).map(|i| (0..p).map(|j| pearson_oracle(&cols[i], &cols[j]).unwrap()).collect()).collect();
    inverse_diagonal(&r)
}

fn ols_oracle(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect() };
    let k = cols.len() + 1;
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        let r = row(i);
        for a in 0..k {
            xty[a] += r[a] * y[i];
            for b in 0..k {
                xtx[a][b] += r[a] * r[b];
            }
        }
    }
    gauss_solve(xtx, xty)
}

/// Largest gap between the two empirical CDFs, checked at every sample point.
fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
}

/// Tries every start hour and run length.
fn off_segment_oracle(counts: &[u32; 24], threshold: u32) -> u32 {
    let mut best = 0;
    for start in 0..24 {
        for len in 1..=24 {
            if (start..start + len).all(|h| counts[h % 24] < threshold) {
                best = best.max(len as u32);
            }
        }
    }
    best
}

// --------------------------------------------------------------- criterion 1

fn criterion_1() -> Verdict {
    let mut r = rng(101);
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |what: &str, i: usize, msg: String| {
        if failures.len() < 5 {
            failures.push(format!("{what}#{i}: {msg}"));
        }
    };
    const N: usize = 1000;

    for i in 0..N {
        let len = r.gen_range(1..=48);
        let mut c: Vec<f64> = (0..len).map(|_| if r.gen_bool(0.3) { 0.0 } else { r.gen_range(1..=50) as f64 }).collect();
        c[0] += 1.0;
        let got = shannon_entropy(&c).unwrap();
        let want = entropy_oracle(&c);
        if !close(got, want, 1e-12) {
            fail("entropy", i, format!("{got} vs {want}"));
        }
    }

    for i in 0..N {
        let len = r.gen_range(0..=30);
        let x: Vec<f64> = (0..len).map(|_| r.gen_range(-2.0..10.0)).collect();
        let (got, want) = (coefficient_of_variation(&x), cv_oracle(&x));
        let ok = match (got, want) {
            (Some(g), Some(w)) => close(g, w, 1e-12),
            (None, None) => true,
            _ => false,
        };
        if !ok {
            fail("cv", i, format!("{got:?} vs {want:?}"));
        }
    }

    for i in 0..N {
        let n = r.gen_range(2..=40);
        let levels = r.gen_range(1..=8);
        let a: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| if r.gen_bool(0.5) { *v } else { r.gen_range(0..levels) as f64 }).collect();
        let (got, want) = (spearman(&a, &b), spearman_oracle(&a, &b));
        let ok = match (got, want) {
            (Some(g), Some(w)) => close(g, w, 1e-12),
            (None, None) => true,
            _ => false,
        };
        if !ok {
            fail("spearman", i, format!("{got:?} vs {want:?}"));
        }
    }

    let normal = Normal::new(0.0, 1.0).unwrap();
    for i in 0..N {
        let n = r.gen_range(40..=120);
        let p = r.gen_range(2..=6);
        let mix: f64 = r.gen_range(0.0..0.9);
        let base: Vec<f64> = (0..n).map(|_| normal.sample(&mut r)).collect();
        let cols: Vec<Vec<f64>> =
            (0..p).map(|_| (0..n).map(|k| mix * base[k] + normal.sample(&mut r)).collect()).collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let got = vif(&names, &cols).unwrap();
        let want = vif_oracle(&cols);
        if let Some(j) = (0..p).find(|&j| !close(got[j], want[j], 1e-6)) {
            fail("vif", i, format!("column {j}: {} vs {}", got[j], want[j]));
        }
    }

    for i in 0..N {
        let n = r.gen_range(20..=80);
        let p = r.gen_range(1..=6);
        let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| r.gen_range(-3.0..3.0)).collect()).collect();
        let beta: Vec<f64> = (0..=p).map(|_| r.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|k| beta[0] + (0..p).map(|j| beta[j + 1] * cols[j][k]).sum::<f64>() + 0.5 * normal.sample(&mut r))
            .collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let got = ols(&names, &cols, &y).unwrap().coefficients;
        let want = ols_oracle(&cols, &y);
        if let Some(j) = (0..=p).find(|&j| !close(got[j], want[j], 1e-8)) {
            fail("ols", i, format!("coefficient {j}: {} vs {}", got[j], want[j]));
        }
    }

    for i in 0..N {
        let (na, nb) = (r.gen_range(1..=50), r.gen_range(1..=50));
        let shift = r.gen_range(0..5);
        let a: Vec<f64> = (0..na).map(|_| r.gen_range(0..20) as f64).collect();
        let b: Vec<f64> = (0..nb).map(|_| (r.gen_range(0..20) + shift) as f64).collect();
        let (got, want) = (ks_statistic(&a, &b), ks_oracle(&a, &b));
        if !close(got, want, 1e-12) {
            fail("ks", i, format!("{got} vs {want}"));
        }
    }

    let mut off_checked = 0;
    for i in 0..10_000 {
        let mut v = HourActivityVector::default();
        let hi = r.gen_range(1..=12);
        for c in v.counts.iter_mut() {
            *c = r.gen_range(0..=hi);
        }
        let t = r.gen_range(0..=hi + 1);
        let (got, want) = (off_segment_length(&v, t), off_segment_oracle(&v.counts, t));
        off_checked += 1;
        if got != want {
            fail("off_segment", i, format!("{:?} t={t}: {got} vs {want}", v.counts));
        }
    }
    // active 07:00-20:59, quiet 21:00-06:59
    let mut night = HourActivityVector::default();
    for h in 7..21 {
        night.counts[h] = 30;
    }
    if off_segment_length(&night, 1) != 10 {
        fail("off_segment", 0, format!("21:00-07:00 gives {}", off_segment_length(&night, 1)));
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!("6 kernels x {N} instances, {off_checked} hour vectors + 21:00-07:00 case")
    } else {
        failures.join("; ")
    };
    verdict(pass, detail)
}

// --------------------------------------------------------------- criterion 2

fn criterion_2() -> Verdict {
    let (n, m, alpha, reps) = (500, 1000, 0.05, 200);
    let mut r = rng(202);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let t3 = StudentT::new(3.0).unwrap();
    let exp = Exp::new(1.0).unwrap();
    let mut total = 0.0;
    for rep in 0..reps {
        let scale = r.gen_range(0.1..2.0);
        let draw = |r: &mut ChaCha8Rng| -> f64 {
            scale
                * match rep % 3 {
                    0 => normal.sample(r),
                    1 => t3.sample(r),
                    _ => exp.sample(r) * if r.gen_bool(0.5) { 1.0 } else { -1.0 },
                }
        };
        let calib: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
        let ci = conformal_interval(&calib, alpha).unwrap();
        let covered = (0..m).filter(|_| ci.covers(draw(&mut r))).count();
        total += covered as f64 / m as f64;
    }
    let coverage = total / reps as f64;

    // hand-ranked k = ceil((n + 1)(1 - alpha))
    let ranks = [(19, 0.1, 18), (19, 0.05, 19), (500, 0.05, 476), (39, 0.1, 36), (99, 0.01, 99), (9, 0.05, 10)];
    let ranks_ok = ranks.iter().all(|&(n, a, k)| conformal_rank(n, a) == k);
    let res = [0.5, -3.0, 1.0, -2.0, 4.0, 0.25, -0.75, 6.0, -5.0, 1.5, 2.5, -0.1, 3.5, -4.5, 0.9, 7.0, -6.5, 2.0, 0.0];
    // |r| sorted: 0 .1 .25 .5 .75 .9 1 1.5 2 2 2.5 3 3.5 4 4.5 5 6 6.5 7
    let hand = [(0.1, 6.5), (0.05, 7.0), (0.5, 2.0)];
    let hand_ok = hand.iter().all(|&(a, d)| conformal_interval(&res, a).unwrap().d == d)
        && conformal_interval(&res[..9], 0.05).unwrap().d.is_infinite();

    verdict(
        coverage >= 0.93 && ranks_ok && hand_ok,
        format!("mean coverage {coverage:.4} over {reps} replications; hand-ranked k ok: {}", ranks_ok && hand_ok),
    )
}

// --------------------------------------------------------------- criterion 3

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let spec = SyntheticSpec { n_repos: 2000, n_background: 100, ..SyntheticSpec::default() };
    let s = generate_synthetic(&spec, 303).unwrap();
    let inputs = Inputs { corpus: s.corpus(), profiles: s.profile_table(), languages: s.language_table() };
    let cfg = PipelineConfig {
        months: vec![1],
        compare_models: true,
        gbdt_n_trees: vec![200],
        gbdt_learning_rate: vec![0.05],
        gbdt_max_depth: vec![3],
        gbdt_min_samples_leaf: vec![20],
        rf_n_trees: vec![200],
        rf_max_depth: vec![0],
        rf_max_features: vec!["sqrt".into()],
        rf_min_samples_leaf: vec![10],
        ..PipelineConfig::default()
    };
    let ref_repos = analysis::select(&inputs, &cfg, cfg.reference_year).unwrap();
    let reference = analysis::build_cohort(&inputs, &cfg, cfg.reference_year, &ref_repos).unwrap();
    let train = analysis::train(&reference, &cfg).unwrap();
    let p = Outcome::Productivity;
    let gbdt = train.model(ModelKind::Gbdt, p, 1).unwrap();
    let rf = train.model(ModelKind::Rf, p, 1).unwrap();
    let base = train.baselines.iter().find(|b| b.report.outcome == Some(p) && b.report.month == Some(1)).unwrap();
    let (g_r2, b_r2) = (gbdt.eval.r2.unwrap_or(f64::NAN), base.report.r2.unwrap_or(f64::NAN));
    let monotone = train
        .fits
        .iter()
        .filter_map(|f| match &f.file.model {
            Model::Gbdt(m) => Some(m),
            _ => None,
        })
        .all(|m| m.train_mse.len() == m.trees.len() + 1 && m.train_mse.windows(2).all(|w| w[1] <= w[0]));
    let mse_gap = (rf.eval.mse - gbdt.eval.mse).abs() / gbdt.eval.mse;
    let elapsed = start.elapsed();
    verdict(
        g_r2 - b_r2 >= 0.2 && monotone && mse_gap <= 0.15 && elapsed < Duration::from_secs(300),
        format!(
            "{} reference teams; R2 gbdt {g_r2:.3} vs baseline {b_r2:.3}; train MSE non-increasing: {monotone}; \
             test MSE gbdt {:.4} rf {:.4} (gap {:.1}%); {:.0}s",
            reference.features.rows.len(),
            gbdt.eval.mse,
            rf.eval.mse,
            100.0 * mse_gap,
            elapsed.as_secs_f64()
        ),
    )
}

// --------------------------------------------------------------- criterion 4

fn criterion_4() -> Verdict {
    let (fit_len, horizon, reps) = (60, 12, 200);
    let mut r = rng(404);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let stl = StlParams::default();
    let start = YearMonth { year: 2015, month: 1 };
    let (mut mape_sum, mut mape_max) = (0.0, 0.0f64);
    let (mut inside, mut points) = (0usize, 0usize);
    for _ in 0..reps {
        let level = r.gen_range(50.0..500.0);
        let slope = r.gen_range(0.0..0.01) * level;
        let amp = r.gen_range(0.05..0.15) * level;
        let phase = r.gen_range(0.0..std::f64::consts::TAU);
        let y: Vec<f64> = (0..fit_len + horizon)
            .map(|t| {
                let trend = level + slope * t as f64;
                let season = amp * (std::f64::consts::TAU * t as f64 / 12.0 + phase).sin();
                (trend + season) * (1.0 + 0.02 * normal.sample(&mut r))
            })
            .collect();
        let series = MonthlySeries { metric: Metric::TotalPushes, start_month: start, values: y[..fit_len].to_vec() };
        let f = forecast_with_intervals(&series, horizon, &[80.0, 95.0], &stl).unwrap();
        let band = f.band(95.0).unwrap();
        let truth = &y[fit_len..];
        let mape = truth.iter().zip(&f.point).map(|(a, p)| ((a - p) / a).abs()).sum::<f64>() / horizon as f64;
        mape_sum += mape;
        mape_max = mape_max.max(mape);
        inside += (0..horizon).filter(|&h| band.lower[h] <= truth[h] && truth[h] <= band.upper[h]).count();
        points += horizon;
    }
    let mape = mape_sum / reps as f64;
    let coverage = inside as f64 / points as f64;
    let flat = MonthlySeries { metric: Metric::TotalPushes, start_month: start, values: vec![42.0; fit_len] };
    let ff = forecast_with_intervals(&flat, horizon, &[80.0, 95.0], &stl).unwrap();
    let flat_ok = ff.point.iter().all(|&p| p == 42.0)
        && ff.bands.iter().all(|b| b.lower.iter().chain(&b.upper).all(|&v| v == 42.0));
    verdict(
        mape < 0.05 && (0.90..=0.99).contains(&coverage) && flat_ok,
        format!(
            "mean 12-month MAPE {:.2}% (max {:.2}%); 95% band coverage {:.1}% over {reps} series; constant series flat: {flat_ok}",
            100.0 * mape,
            100.0 * mape_max,
            100.0 * coverage
        ),
    )
}

// --------------------------------------------------------------- criterion 5

fn fast_config() -> PipelineConfig {
    PipelineConfig {
        compare_models: false,
        gbdt_n_trees: vec![100],
        gbdt_learning_rate: vec![0.05],
        gbdt_max_depth: vec![3],
        gbdt_min_samples_leaf: vec![20],
        ..PipelineConfig::default()
    }
}

fn run_synthetic(spec: &SyntheticSpec, seed: u64, cfg: &PipelineConfig, regression: bool) -> (teamshock::synth::SyntheticCorpus, teamshock::pipeline::Analysis) {
    let s = generate_synthetic(spec, seed).unwrap();
    let inputs = Inputs { corpus: s.corpus(), profiles: s.profile_table(), languages: s.language_table() };
    let a = analyze(&inputs, &PipelineConfig { seed, ..cfg.clone() }, regression).unwrap();
    (s, a)
}

/// Largest |estimated - true| mean ITE over every outcome and month 1-6.
fn worst_ate_error(s: &teamshock::synth::SyntheticCorpus, a: &teamshock::pipeline::Analysis) -> f64 {
    let ids = a.target.repo_ids();
    let mut worst: f64 = 0.0;
    for o in Outcome::ALL {
        for m in 1..=6 {
            let est = a.effects.summary(o, m).unwrap().ate;
            let truth = s.truth.mean_ite(o, m, Some(&ids)).unwrap();
            worst = worst.max((est - truth).abs());
        }
    }
    worst
}

fn shocked_cell(outcome: Outcome, month: u32) -> bool {
    match outcome {
        Outcome::Productivity => (1..=6).contains(&month),
        Outcome::TeamSize => (4..=6).contains(&month),
    }
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let cfg = fast_config();

    // recovery on one seeded corpus
    let seeded = SyntheticSpec { n_repos: 1000, n_background: 50, ..SyntheticSpec::default() };
    let (s, a) = run_synthetic(&seeded, 5, &cfg, false);
    let seeded_err = worst_ate_error(&s, &a);
    let n_target = a.target.features.rows.len();

    // KS decisions over replications
    let reps: u64 = 100;
    let base = SyntheticSpec { n_repos: 300, n_background: 30, ..SyntheticSpec::default() };
    let cells: Vec<(Outcome, u32)> = Outcome::ALL.iter().flat_map(|&o| (1..=6).map(move |m| (o, m))).collect();
    let mut recovered = 0;
    let mut sizes = (0, 0);
    let mut reject: BTreeMap<(Outcome, u32), usize> = BTreeMap::new();
    let mut null_keep: BTreeMap<(Outcome, u32), usize> = BTreeMap::new();
    for rep in 0..reps {
        for null in [false, true] {
            let spec = SyntheticSpec { shock: if null { ShockSpec::none() } else { ShockSpec::default() }, ..base.clone() };
            let (s, a) = run_synthetic(&spec, 5000 + rep, &cfg, false);
            let d = &a.effects.summary(Outcome::Productivity, 1).unwrap().distribution;
            sizes = (d.residuals.n, d.effects.n);
            if !null {
                recovered += (worst_ate_error(&s, &a) <= 0.05) as usize;
            }
            for &(o, m) in &cells {
                let p = a.effects.summary(o, m).unwrap().distribution.ks.p_value;
                if null {
                    *null_keep.entry((o, m)).or_default() += (p > 0.1) as usize;
                } else if shocked_cell(o, m) {
                    *reject.entry((o, m)).or_default() += (p < 0.01) as usize;
                }
            }
        }
    }
    // the same decision on exchangeable normal samples of the same sizes
    let mut r = rng(505);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let draws = 2000;
    let kept = (0..draws)
        .filter(|_| {
            let a: Vec<f64> = (0..sizes.0).map(|_| normal.sample(&mut r)).collect();
            let b: Vec<f64> = (0..sizes.1).map(|_| normal.sample(&mut r)).collect();
            ks_two_sample(&a, &b).unwrap().p_value > 0.1
        })
        .count();
    let exchangeable = kept as f64 / draws as f64;
    let elapsed = start.elapsed();
    let min_reject = reject.values().copied().min().unwrap_or(0);
    let null_total: usize = null_keep.values().sum();
    let null_rate = null_total as f64 / (reps as f64 * cells.len() as f64);
    let min_null = null_keep.values().copied().min().unwrap_or(0);
    let pass = seeded_err <= 0.05
        && min_reject as f64 >= 0.9 * reps as f64
        && null_rate >= 0.9
        && elapsed < Duration::from_secs(600);
    verdict(
        pass,
        format!(
            "seeded corpus ({n_target} target teams): worst per-month ATE error {seeded_err:.3}; \
             KS p<0.01 in shocked cells: min {min_reject}/{reps}; null p>0.1: {:.1}% pooled (min cell {min_null}/{reps}; \
             exchangeable {}/{} samples: {:.1}%); \
             300-team replications within 0.05 in every cell: {recovered}/{reps}; {:.0}s",
            100.0 * null_rate,
            sizes.0,
            sizes.1,
            100.0 * exchangeable,
            elapsed.as_secs_f64()
        ),
    )
}

// --------------------------------------------------------------- criterion 6

const PLANTED: &str = "emoji_post_proportion";

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let reps: u64 = 100;
    let mut spec = SyntheticSpec { n_repos: 300, n_background: 30, ..SyntheticSpec::default() };
    spec.planted.insert(PLANTED.into(), 0.2);
    let cfg = PipelineConfig { months: vec![1], bootstrap_iterations: 1000, ..fast_config() };
    let mut planted_hits = 0;
    let mut flagged: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_null = Vec::new();
    let mut oracle_flagged: BTreeMap<String, usize> = BTreeMap::new();
    for rep in 0..reps {
        let seed = 6000 + rep;
        let (s, a) = run_synthetic(&spec, seed, &cfg, true);
        // same regression with the true untreated outcome as the prediction
        let truth: std::collections::HashMap<(&str, u32, Outcome), f64> =
            s.truth.records.iter().map(|t| ((t.repo_id.as_str(), t.month, t.outcome), t.untreated)).collect();
        let oracle_preds: Vec<_> = a
            .predictions
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.predicted = truth[&(p.repo_id.as_str(), p.month, p.outcome)];
                q
            })
            .collect();
        let oracle = analysis::regress(&a.target, &a.train.test_predictions, &oracle_preds, &a.effects, &PipelineConfig { seed, ..cfg.clone() })
            .unwrap();
        for c in &oracle.regression(Outcome::Productivity, 1).unwrap().coefficients {
            if c.name != teamshock::heterogeneity::INTERCEPT && c.name != PLANTED {
                *oracle_flagged.entry(c.name.clone()).or_default() += c.significant as usize;
            }
        }
        let reg = a.regression.unwrap();
        let report = reg.regression(Outcome::Productivity, 1).unwrap();
        let mut nulls = 0;
        for c in &report.coefficients {
            if c.name == teamshock::heterogeneity::INTERCEPT {
                continue;
            }
            if c.name == PLANTED {
                planted_hits += (c.significant && c.median > 0.0) as usize;
            } else {
                nulls += 1;
                *flagged.entry(c.name.clone()).or_default() += c.significant as usize;
            }
        }
        n_null.push(nulls);
    }
    let worst = flagged.iter().max_by_key(|(_, &v)| v).map(|(k, &v)| (k.clone(), v)).unwrap_or_default();
    let over: Vec<String> = flagged.iter().filter(|(_, &v)| v > 10).map(|(k, v)| format!("{k} {v}")).collect();

    // d = 0 keeps only zero residuals: every draw is the plain OLS fit
    let mut r = rng(606);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 200;
    let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| normal.sample(&mut r)).collect()).collect();
    let yhat: Vec<f64> = (0..n).map(|_| normal.sample(&mut r)).collect();
    let y: Vec<f64> = (0..n).map(|i| yhat[i] + 0.2 * cols[0][i] + 0.3 * normal.sample(&mut r)).collect();
    let names: Vec<String> = (0..4).map(|j| format!("x{j}")).collect();
    let (dn, x) = design_with_intercept(&names, &standardize(&cols)).unwrap();
    let pool: Vec<f64> = std::iter::once(0.0).chain((0..300).map(|_| normal.sample(&mut r))).collect();
    let boot = bootstrap_regress(dn, &x, &y, &yhat, &pool, 0.0, &BootstrapConfig { iterations: 200, seed: 1, ..Default::default() })
        .unwrap();
    let diff: Vec<f64> = y.iter().zip(&yhat).map(|(a, b)| a - b).collect();
    let plain = ols(&names, &standardize(&cols), &diff).unwrap();
    let collapse = boot.coefficients.iter().zip(&plain.coefficients).all(|(c, b)| close(c.median, *b, 1e-12) && c.lower == c.upper);

    let oracle_max = oracle_flagged.values().copied().max().unwrap_or(0);
    let elapsed = start.elapsed();
    let nulls_min = n_null.iter().min().copied().unwrap_or(0);
    let nulls_max = n_null.iter().max().copied().unwrap_or(0);
    verdict(
        planted_hits >= 95 && over.is_empty() && collapse,
        format!(
            "planted {PLANTED} flagged positive {planted_hits}/{reps}; {nulls_min}-{nulls_max} null features per run, \
             most flagged {} {}/{reps}{}; with true counterfactuals most flagged null {oracle_max}/{reps}; \
             d=0 equals OLS: {collapse}; {:.0}s",
            worst.0,
            worst.1,
            if over.is_empty() { String::new() } else { format!(" (over 10: {})", over.join(", ")) },
            elapsed.as_secs_f64()
        ),
    )
}

// --------------------------------------------------------------- criterion 7

fn criterion_7() -> Verdict {
    let mut r = rng(707);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (n, n_factors, n_cols, reps) = (400, 26, 45, 50);
    let mut failures = Vec::new();
    let mut max_vif: f64 = 0.0;
    for rep in 0..reps {
        let factors: Vec<Vec<f64>> = (0..n_factors).map(|_| (0..n).map(|_| normal.sample(&mut r)).collect()).collect();
        // every factor gets one column, the rest go to random factors
        let mut owner: Vec<usize> = (0..n_factors).chain((n_factors..n_cols).map(|_| r.gen_range(0..n_factors))).collect();
        for i in (1..owner.len()).rev() {
            owner.swap(i, r.gen_range(0..=i));
        }
        let cols: Vec<Vec<f64>> = owner
            .iter()
            .map(|&f| {
                let noise = r.gen_range(0.05..0.3);
                let mono = r.gen_bool(0.3);
                factors[f]
                    .iter()
                    .map(|&v| {
                        let x = v + noise * normal.sample(&mut r);
                        if mono { x.exp() } else { x }
                    })
                    .collect()
            })
            .collect();
        let names: Vec<String> = (0..n_cols).map(|j| format!("f{j}")).collect();
        let corr = spearman_matrix(&names, &cols).unwrap();
        let sel = cluster_features(&corr, 0.7, RepresentativeRule::MostCentral);
        let mut truth: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (j, &f) in owner.iter().enumerate() {
            truth.entry(f).or_default().push(j);
        }
        let mut want: Vec<Vec<usize>> = truth.into_values().collect();
        want.sort();
        let mut got = sel.clusters.clone();
        got.sort();
        let reps_ok = sel.clusters.iter().zip(&sel.representatives).all(|(c, r)| c.contains(r));
        let chosen = sel.selected();
        let chosen_cols: Vec<Vec<f64>> = chosen.iter().map(|&j| cols[j].clone()).collect();
        let chosen_names: Vec<String> = chosen.iter().map(|&j| names[j].clone()).collect();
        let v = vif(&chosen_names, &standardize(&chosen_cols)).unwrap();
        let vmax = v.iter().copied().fold(0.0, f64::max);
        max_vif = max_vif.max(vmax);
        if got != want || !reps_ok || chosen.len() != n_factors || vmax >= 10.0 {
            failures.push(format!("registry {rep}: {} clusters, max VIF {vmax:.2}", got.len()));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{reps} registries of {n_cols} columns over {n_factors} factors; one representative per cluster, max VIF {max_vif:.2}")
        } else {
            failures.into_iter().take(3).collect::<Vec<_>>().join("; ")
        },
    )
}

// --------------------------------------------------------------- criterion 8

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_teamshock")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn criterion_8() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = dir.join("data");
    let run = |out: &Path| -> Result<(), String> {
        cli(&[
            "run",
            "--seed",
            "17",
            "--events",
            data.join("events.jsonl").to_str().unwrap(),
            "--profiles",
            data.join("profiles.csv").to_str().unwrap(),
            "--languages",
            data.join("languages.csv").to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--gbdt-n-trees",
            "50,100",
            "--gbdt-max-depth",
            "3",
            "--gbdt-learning-rate",
            "0.1",
            "--gbdt-min-samples-leaf",
            "10",
            "--rf-n-trees",
            "50",
            "--rf-max-depth",
            "0",
            "--rf-max-features",
            "sqrt",
            "--folds",
            "3",
            "--bootstrap-iterations",
            "200",
        ])
    };
    let outcome = (|| -> Result<(bool, String), String> {
        cli(&["synth", "--seed", "8", "--out", data.to_str().unwrap(), "--n-repos", "150", "--n-background", "30"])?;
        let (a, b) = (dir.join("run_a"), dir.join("run_b"));
        run(&a)?;
        run(&b)?;
        let ma = std::fs::read(a.join("manifest.json")).map_err(|e| e.to_string())?;
        let mb = std::fs::read(b.join("manifest.json")).map_err(|e| e.to_string())?;
        let manifest: serde_json::Value = serde_json::from_slice(&ma).map_err(|e| e.to_string())?;
        let files: Vec<String> = manifest["files"]
            .as_array()
            .map(|v| {
                v.iter()
                    .filter(|f| f["role"] == "output")
                    .filter_map(|f| f["path"].as_str().map(String::from))
                    .collect()
            })
            .unwrap_or_default();
        let differing: Vec<&String> = files
            .iter()
            .filter(|p| std::fs::read(a.join(p.as_str())).ok() != std::fs::read(b.join(p.as_str())).ok())
            .collect();
        Ok((
            ma == mb && !files.is_empty() && differing.is_empty(),
            format!(
                "manifests identical: {}; {} output files, {} differ",
                ma == mb,
                files.len(),
                differing.len()
            ),
        ))
    })();
    match outcome {
        Ok((pass, detail)) => verdict(pass, detail),
        Err(e) => verdict(false, e),
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Verdict); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let v = check();
        println!("criterion {id} {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += (!v.pass) as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
