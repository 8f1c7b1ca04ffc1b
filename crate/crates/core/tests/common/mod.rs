//! Independent oracles and the acceptance checks built on them. Each check
//! returns a one-line detail on success and a reason on failure.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use venuerank::context::{season_score, SeasonDistribution};
use venuerank::eval::{
    evaluate_rankings, mrr, ndcg_at_k, precision_at_k, reciprocal_rank, QrelSet,
};
use venuerank::frequency::{build_profile, similarity_score, ItemKind, ProfileError};
use venuerank::harness::config::PipelineConfig;
use venuerank::harness::persist::{load_models, save_models};
use venuerank::harness::pipeline::train;
use venuerank::harness::synth::{generate_synthetic, SynthConfig};
use venuerank::ltr::{
    lambda_gradients, train_lambdamart, FeatureVector, LambdaMartConfig, QueryGroup,
    RankingInstance, FEATURE_COUNT,
};
use venuerank::model::{Catalog, RatedVenue, Season, Source, UserHistory, VenueRecord};
use venuerank::review::{train_linear_svm, Label, LabeledDocument, SparseVector, SvmConfig};

pub type Outcome = Result<String, String>;

pub fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took <= limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- frequency

pub struct FrequencyCase {
    pub catalog: Catalog,
    pub history: UserHistory,
    pub queries: Vec<Vec<String>>,
}

const CATEGORY_POOL: [&str; 4] = ["cafe", "museum", "park", "bar"];

pub fn random_frequency_case(seed: u64) -> FrequencyCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_venues = rng.gen_range(1..=6);
    let mut venues = Vec::new();
    let mut ratings = Vec::new();
    for i in 0..n_venues {
        let mut v = VenueRecord::new(format!("v{i}"));
        let k = rng.gen_range(0..=CATEGORY_POOL.len());
        let cats: Vec<String> = CATEGORY_POOL
            .choose_multiple(&mut rng, k)
            .map(|c| {
                if rng.gen_bool(0.3) {
                    c.to_uppercase()
                } else {
                    c.to_string()
                }
            })
            .collect();
        v.categories_by_source.insert(Source::Foursquare, cats);
        venues.push(v);
        ratings.push(RatedVenue::new(format!("v{i}"), rng.gen_range(0..=4)));
    }
    let queries = (0..5)
        .map(|_| {
            let k = rng.gen_range(0..=3);
            let mut q: Vec<String> = (0..k)
                .map(|_| CATEGORY_POOL[rng.gen_range(0..CATEGORY_POOL.len())].to_string())
                .collect();
            if rng.gen_bool(0.2) {
                q.push("unseen".into());
            }
            q
        })
        .collect();
    FrequencyCase {
        catalog: Catalog::new(venues),
        history: UserHistory {
            user_id: "u".into(),
            rated: ratings,
        },
        queries,
    }
}

/// Brute-force counts: per item, how many positive (rating ≥ 3) and negative
/// (rating ≤ 1) venues carry it, plus the total item slots over both sides.
pub fn count_oracle(case: &FrequencyCase) -> (BTreeMap<String, i64>, BTreeMap<String, i64>, i64) {
    let mut pos = BTreeMap::new();
    let mut neg = BTreeMap::new();
    let mut slots = 0;
    for r in &case.history.rated {
        let side = match r.rating {
            3..=4 => &mut pos,
            0..=1 => &mut neg,
            _ => continue,
        };
        let venue = case.catalog.get(&r.venue_id).unwrap();
        let items: BTreeSet<String> = venue
            .categories(Source::Foursquare)
            .iter()
            .map(|c| c.to_lowercase())
            .collect();
        slots += items.len() as i64;
        for it in items {
            *side.entry(it).or_insert(0) += 1;
        }
    }
    (pos, neg, slots)
}

pub fn check_frequency_case(seed: u64) -> Result<(), String> {
    let case = random_frequency_case(seed);
    let (pos, neg, slots) = count_oracle(&case);
    let has_positive = case.history.rated.iter().any(|r| r.rating >= 3);
    let built = build_profile(
        &case.history,
        &case.catalog,
        ItemKind::Category(Source::Foursquare),
    );
    let profile = match (built, has_positive, slots) {
        (Err(ProfileError::ProfileUnderflow(_)), false, _) => return Ok(()),
        (Err(ProfileError::EmptyProfile { .. }), true, 0) => return Ok(()),
        (Ok(p), true, s) if s > 0 => p,
        (other, _, _) => return Err(format!("seed {seed}: unexpected outcome {other:?}")),
    };
    ensure(profile.denominator() as i64 == slots, || {
        format!("seed {seed}: denominator")
    })?;
    let mut total = 0.0;
    for c in CATEGORY_POOL {
        let p = *pos.get(c).unwrap_or(&0) as f64 / slots as f64;
        let n = *neg.get(c).unwrap_or(&0) as f64 / slots as f64;
        ensure(
            profile.positive_frequency(c) == p && profile.negative_frequency(c) == n,
            || format!("seed {seed}: frequency of {c}"),
        )?;
        total += p + n;
    }
    ensure((total - 1.0).abs() <= 1e-12, || {
        format!("seed {seed}: Σcf = {total}")
    })?;
    for q in &case.queries {
        let distinct: BTreeSet<&str> = q.iter().map(String::as_str).collect();
        let net: i64 = distinct
            .iter()
            .map(|c| pos.get(*c).unwrap_or(&0) - neg.get(*c).unwrap_or(&0))
            .sum();
        let expected = net as f64 / slots as f64;
        let got = similarity_score(&profile, q);
        ensure(got == expected, || {
            format!("seed {seed}: similarity {got} vs oracle {expected} for {q:?}")
        })?;
    }
    Ok(())
}

pub fn criterion_frequency() -> Outcome {
    let started = Instant::now();
    for seed in 0..1000 {
        check_frequency_case(seed)?;
    }
    let took = within(Duration::from_secs(5), started)?;
    Ok(format!(
        "1000 histories match the counting oracle ({took:.2?})"
    ))
}

// ------------------------------------------------------------------ context

pub fn criterion_season() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let counts: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0..500) as f64);
        let d = SeasonDistribution(counts);
        let scores: Vec<f64> = Season::ALL.iter().map(|&s| season_score(s, &d)).collect();
        let sum: f64 = scores.iter().sum();
        ensure(sum.abs() <= 1e-9, || {
            format!("case {case}: scores sum to {sum}")
        })?;
        let k = rng.gen_range(1..20) as f64;
        let scaled = SeasonDistribution(counts.map(|c| c * k));
        for (s, base) in Season::ALL.iter().zip(&scores) {
            let got = season_score(*s, &scaled);
            ensure(
                (got - k * base).abs() <= 1e-9 * (1.0 + (k * base).abs()),
                || {
                    format!(
                        "case {case}: scaling by {k} gave {got}, expected {}",
                        k * base
                    )
                },
            )?;
        }
        let level = rng.gen_range(0..100) as f64;
        let uniform = SeasonDistribution([level; 4]);
        ensure(
            Season::ALL
                .iter()
                .all(|&s| season_score(s, &uniform) == 0.0),
            || format!("case {case}: uniform distribution scored non-zero"),
        )?;
    }
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!(
        "1000 distributions: zero-sum, uniform = 0, homogeneous ({took:.2?})"
    ))
}

// ---------------------------------------------------------------------- svm

pub fn dense_doc(xs: &[f64], label: Label) -> LabeledDocument {
    LabeledDocument {
        vector: SparseVector::from_pairs(
            xs.iter().enumerate().map(|(i, &x)| (i as u32, x)).collect(),
        ),
        label,
    }
}

/// Two classes in opposite quadrants with a gap of at least 2 along x + y.
pub fn blobs(n_pos: usize, n_neg: usize, seed: u64) -> Vec<LabeledDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (n, centre, label) in [
        (n_pos, 2.0, Label::Positive),
        (n_neg, -2.0, Label::Negative),
    ] {
        for _ in 0..n {
            let p = [
                centre + rng.gen_range(-0.9..0.9),
                centre + rng.gen_range(-0.9..0.9),
            ];
            out.push(dense_doc(&p, label));
        }
    }
    out
}

pub fn criterion_svm() -> Outcome {
    let started = Instant::now();
    let two = [
        dense_doc(&[1.0], Label::Positive),
        dense_doc(&[-1.0], Label::Negative),
    ];
    let converged = SvmConfig {
        lambda_reg: 0.1,
        epochs: 5000,
        seed: 42,
    };
    let m = train_linear_svm(&two, 1, &converged).map_err(|e| e.to_string())?;
    let offset = m.bias.abs() / m.weights[0].abs();
    ensure(m.weights[0] > 0.0 && offset <= 1e-3, || {
        format!("2-point: w={} b={}", m.weights[0], m.bias)
    })?;

    let data = blobs(20, 20, 11);
    let m = train_linear_svm(&data, 2, &SvmConfig::default()).map_err(|e| e.to_string())?;
    let correct = data
        .iter()
        .filter(|d| m.predict(&d.vector) == d.label)
        .count();
    ensure(correct == data.len(), || {
        format!("blobs accuracy {correct}/{}", data.len())
    })?;

    let data = blobs(45, 5, 12);
    let m = train_linear_svm(&data, 2, &SvmConfig::default()).map_err(|e| e.to_string())?;
    let minority: Vec<_> = data.iter().filter(|d| d.label == Label::Negative).collect();
    let recalled = minority
        .iter()
        .filter(|d| m.predict(&d.vector) == Label::Negative)
        .count();
    ensure(recalled == minority.len(), || {
        format!("minority recall {recalled}/{}", minority.len())
    })?;

    let took = within(Duration::from_secs(10), started)?;
    Ok(format!(
        "2-point |b|/|w| = {offset:.1e}; blobs accuracy 1.0; 90/10 minority recall 1.0 ({took:.2?})"
    ))
}

// ------------------------------------------------------------------- lambda

fn oracle_dcg(grades_in_order: &[u8]) -> f64 {
    grades_in_order
        .iter()
        .take(5)
        .enumerate()
        .map(|(i, &g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// Lambdas by enumerating every swap and recomputing NDCG@5 from scratch.
pub fn lambda_oracle(labels: &[u8], scores: &[f64], ids: &[String]) -> (Vec<f64>, Vec<f64>) {
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let mut ideal: Vec<u8> = labels.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = oracle_dcg(&ideal);
    let mut lambdas = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    if idcg == 0.0 {
        return (lambdas, hessians);
    }
    let ndcg_of =
        |ord: &[usize]| oracle_dcg(&ord.iter().map(|&i| labels[i]).collect::<Vec<_>>()) / idcg;
    let base = ndcg_of(&order);
    for i in 0..n {
        for j in 0..n {
            if labels[i] <= labels[j] {
                continue;
            }
            let mut swapped = order.clone();
            let pi = swapped.iter().position(|&x| x == i).unwrap();
            let pj = swapped.iter().position(|&x| x == j).unwrap();
            swapped.swap(pi, pj);
            let delta = (ndcg_of(&swapped) - base).abs();
            let rho = 1.0 / (1.0 + (scores[i] - scores[j]).exp());
            lambdas[i] += delta * rho;
            lambdas[j] -= delta * rho;
            hessians[i] += delta * rho * (1.0 - rho);
            hessians[j] += delta * rho * (1.0 - rho);
        }
    }
    (lambdas, hessians)
}

pub fn check_lambda_case(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5);
    let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=4)).collect();
    let tied = rng.gen_bool(0.3);
    let scores: Vec<f64> = (0..n)
        .map(|_| {
            if tied {
                rng.gen_range(0..2) as f64
            } else {
                rng.gen_range(-3.0..3.0)
            }
        })
        .collect();
    let mut ids: Vec<String> = ["a", "b", "c", "d", "e"][..n]
        .iter()
        .map(|s| s.to_string())
        .collect();
    ids.shuffle(&mut rng);
    let instances: Vec<RankingInstance> = (0..n)
        .map(|i| RankingInstance {
            query_id: "q".into(),
            venue_id: ids[i].clone(),
            features: FeatureVector::all_missing(),
            label: Some(labels[i]),
        })
        .collect();
    let (l, h) = lambda_gradients(&instances, &scores).map_err(|e| e.to_string())?;
    let (ol, oh) = lambda_oracle(&labels, &scores, &ids);
    for i in 0..n {
        ensure(
            (l[i] - ol[i]).abs() <= 1e-9 && (h[i] - oh[i]).abs() <= 1e-9,
            || {
                format!("seed {seed}: labels {labels:?} scores {scores:?}: λ {l:?} vs {ol:?}, h {h:?} vs {oh:?}")
            },
        )?;
    }
    Ok(())
}

pub fn criterion_lambda() -> Outcome {
    let started = Instant::now();
    for seed in 0..500 {
        check_lambda_case(seed)?;
    }
    Ok(format!(
        "500 queries match swap enumeration within 1e-9 ({:.2?})",
        started.elapsed()
    ))
}

// --------------------------------------------------------------- lambdamart

fn instance(q: usize, i: usize, values: [f64; FEATURE_COUNT], label: u8) -> RankingInstance {
    RankingInstance {
        query_id: format!("q{q:02}"),
        venue_id: format!("v{i:02}"),
        features: FeatureVector::from_slots(values.map(Some)),
        label: Some(label),
    }
}

/// Feature 0 determines the grade; the other features are noise.
pub fn single_feature_fixture(queries: usize, per_query: usize, seed: u64) -> Vec<QueryGroup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..queries)
        .map(|q| QueryGroup {
            query_id: format!("q{q:02}"),
            instances: (0..per_query)
                .map(|i| {
                    let x: f64 = rng.gen_range(0.0..1.0);
                    let mut values: [f64; FEATURE_COUNT] =
                        std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                    values[0] = x;
                    instance(q, i, values, (x * 5.0).floor().min(4.0) as u8)
                })
                .collect(),
        })
        .collect()
}

pub fn random_label_fixture(queries: usize, per_query: usize, seed: u64) -> Vec<QueryGroup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..queries)
        .map(|q| QueryGroup {
            query_id: format!("q{q:02}"),
            instances: (0..per_query)
                .map(|i| {
                    let values = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                    instance(q, i, values, rng.gen_range(0..=4))
                })
                .collect(),
        })
        .collect()
}

/// Grade depends on an interaction of features 1 and 2.
pub fn interaction_fixture(queries: usize, per_query: usize, seed: u64) -> Vec<QueryGroup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..queries)
        .map(|q| QueryGroup {
            query_id: format!("q{q:02}"),
            instances: (0..per_query)
                .map(|i| {
                    let values: [f64; FEATURE_COUNT] =
                        std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                    let label = match (values[1] > 0.0, values[2] > 0.0) {
                        (true, true) => 4,
                        (true, false) | (false, true) => 1,
                        _ => 0,
                    };
                    instance(q, i, values, label)
                })
                .collect(),
        })
        .collect()
}

pub fn criterion_lambdamart() -> Outcome {
    let started = Instant::now();
    let config = LambdaMartConfig {
        n_trees: 50,
        ..LambdaMartConfig::default()
    };
    let model =
        train_lambdamart(&single_feature_fixture(20, 10, 5), &config).map_err(|e| e.to_string())?;
    let reached = model
        .training_ndcg
        .iter()
        .position(|&n| n >= 1.0 - 1e-12)
        .ok_or_else(|| {
            format!(
                "NDCG@5 never reached 1.0: final {:?}",
                model.training_ndcg.last()
            )
        })?;

    let fixtures = [
        ("single-feature", single_feature_fixture(20, 10, 5)),
        ("random-label", random_label_fixture(20, 10, 6)),
        ("interaction", interaction_fixture(20, 10, 7)),
    ];
    for (name, data) in &fixtures {
        let m = train_lambdamart(data, &LambdaMartConfig::default()).map_err(|e| e.to_string())?;
        let (first, last) = (m.training_ndcg[0], *m.training_ndcg.last().unwrap());
        ensure(last >= first, || {
            format!("{name}: training NDCG fell from {first} to {last}")
        })?;
    }
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!(
        "20x10 fixture reaches NDCG@5 = 1.0 by round {reached}; no fixture regresses ({took:.2?})"
    ))
}

// ------------------------------------------------------------------ metrics

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

pub fn criterion_metrics() -> Outcome {
    let mut qrels = QrelSet::new();
    for (v, g) in [("a", 0), ("b", 3), ("c", 0), ("d", 4), ("e", 1), ("f", 3)] {
        qrels.insert("q1", v, g);
    }
    let ranking = ["a", "b", "c", "d", "e", "f"];
    let ln = |x: f64| x.log2();
    let dcg = 7.0 / ln(3.0) + 15.0 / ln(5.0) + 1.0 / ln(6.0);
    let idcg = 15.0 + 7.0 / ln(3.0) + 7.0 / 2.0 + 1.0 / ln(5.0);
    let checks = [
        ("P@5", precision_at_k(&ranking, &qrels, "q1", 5), 0.4),
        ("RR", reciprocal_rank(&ranking, &qrels, "q1"), 0.5),
        ("NDCG@5", ndcg_at_k(&ranking, &qrels, "q1", 5), dcg / idcg),
        (
            "short P@5",
            precision_at_k(&["b", "a"], &qrels, "q1", 5),
            0.2,
        ),
        (
            "no relevant RR",
            reciprocal_rank(&["a", "c", "e"], &qrels, "q1"),
            0.0,
        ),
    ];
    for (name, got, want) in checks {
        ensure(close(got, want), || format!("{name}: {got} vs {want}"))?;
    }
    qrels.insert("q2", "x", 4);
    qrels.insert("q2", "y", 0);
    let runs = vec![
        ("q1".to_string(), vec!["a", "b"]),
        ("q2".to_string(), vec!["x", "y"]),
    ];
    let m = mrr(&runs, &qrels);
    ensure(close(m, 0.75), || format!("MRR {m} vs 0.75"))?;
    let mut zero = QrelSet::new();
    zero.insert("q3", "a", 0);
    let n = ndcg_at_k(&["a"], &zero, "q3", 5);
    ensure(n == 0.0, || format!("all-zero NDCG {n}"))?;
    let (_, summary) = evaluate_rankings(&runs, &qrels);
    ensure(
        close(summary.mrr, 0.75) && close(summary.p5, (0.2 + 0.2) / 2.0),
        || format!("summary {summary:?}"),
    )?;
    Ok("hand-computed P@5, MRR and NDCG@5 cases exact within 1e-9".into())
}

// --------------------------------------------------------------------- cli

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_venuerank")
}

pub fn run_cli(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(bin())
        .args(args)
        .output()
        .map_err(|e| e.to_string())
}

pub fn run_ok(args: &[&str]) -> Result<std::process::Output, String> {
    let out = run_cli(args)?;
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!(
            "`venuerank {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

pub fn cv_summary(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let last = text.lines().last().ok_or("empty cv report")?;
    serde_json::from_str(last).map_err(|e| e.to_string())
}

pub fn criterion_pipeline() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let out = dir.path().join("cv");
    let (data_s, out_s) = (data.to_str().unwrap(), out.to_str().unwrap());
    run_ok(&["synth", "--seed", "42", "--out", data_s])?;
    run_ok(&["cv", "--seed", "42", "--data", data_s, "--out", out_s])?;
    let took = within(Duration::from_secs(120), started)?;
    let s = cv_summary(&out.join("cv.jsonl"))?;
    let get = |k: &str| s[k].as_f64().ok_or(format!("missing {k}"));
    let (p5, mrr, random) = (get("mean_p5")?, get("mean_mrr")?, get("random_p5")?);
    let detail = format!(
        "P@5 {p5:.3}, MRR {mrr:.3}, random P@5 {random:.3}, lift {:.3} ({took:.2?})",
        p5 - random
    );
    ensure(p5 >= 0.8 && mrr >= 0.85 && p5 - random >= 0.3, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn dir_snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = entry.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

pub const SMALL_CONFIG: &str =
    "synth.n_users = 20\nsynth.n_venues = 150\nsynth.history_size = 40\ncv.k = 4\n";

/// Runs every subcommand twice on identical inputs and compares outputs.
pub fn check_cli_determinism() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).display().to_string();
    std::fs::write(p("small.cfg"), SMALL_CONFIG).map_err(|e| e.to_string())?;
    let cfg = p("small.cfg");
    for rep in ["1", "2"] {
        let base = ["--seed", "7", "--config", cfg.as_str()];
        let with = |extra: &[&str]| -> Vec<String> {
            base.iter().chain(extra).map(|s| s.to_string()).collect()
        };
        let data = p("data1");
        let steps: Vec<Vec<String>> = vec![
            with(&["synth", "--out", &p(&format!("data{rep}"))]),
            with(&[
                "train",
                "--data",
                &data,
                "--out",
                &p(&format!("models{rep}")),
            ]),
            with(&[
                "rank",
                "--data",
                &data,
                "--models",
                &p("models1"),
                "--out",
                &p(&format!("rank{rep}")),
            ]),
            with(&[
                "eval",
                "--run",
                &p("rank1/run.tsv"),
                "--qrels",
                &p("data1/qrels.jsonl"),
                "--out",
                &p(&format!("eval{rep}")),
            ]),
            with(&["cv", "--data", &data, "--out", &p(&format!("cv{rep}"))]),
        ];
        for args in steps {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            run_ok(&args)?;
        }
    }
    for stage in ["data", "models", "rank", "eval", "cv"] {
        let a = dir_snapshot(&dir.path().join(format!("{stage}1")))?;
        let b = dir_snapshot(&dir.path().join(format!("{stage}2")))?;
        ensure(!a.is_empty() && a == b, || {
            format!("{stage} outputs differ between runs")
        })?;
    }
    Ok(())
}

/// Saves, reloads, and compares decisions on 100 random inputs per model.
pub fn check_persistence_round_trip() -> Result<usize, String> {
    let mut config = PipelineConfig::with_seed(5);
    config.synth = SynthConfig {
        n_users: 10,
        n_venues: 120,
        history_size: 40,
        n_candidates_per_request: 20,
        seed: 5,
        ..SynthConfig::default()
    };
    config.ltr.n_trees = 20;
    let (bundle, _) = generate_synthetic(&config.synth).map_err(|e| e.to_string())?;
    let models = train(&bundle, &config).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_models(dir.path(), &models).map_err(|e| e.to_string())?;
    let loaded = load_models(dir.path()).map_err(|e| e.to_string())?;
    ensure(loaded == models, || {
        "reloaded models differ structurally".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut compared = 0;
    for _ in 0..100 {
        let x: [f64; FEATURE_COUNT] = std::array::from_fn(|_| rng.gen_range(-30.0..30.0));
        let (a, b) = (models.ranker.predict(&x), loaded.ranker.predict(&x));
        ensure(a.to_bits() == b.to_bits(), || {
            format!("ranker score {a} vs {b}")
        })?;
        compared += 1;
    }
    for (key, m) in &models.review {
        let l = &loaded.review[key];
        let dim = m.svm.weights.len() as u32;
        for _ in 0..100 {
            let pairs: Vec<(u32, f64)> = (0..rng.gen_range(1..10))
                .map(|_| (rng.gen_range(0..dim.max(1)), rng.gen_range(0.0..1.0)))
                .collect();
            let v = SparseVector::from_pairs(pairs);
            let (a, b) = (m.svm.decision(&v), l.svm.decision(&v));
            ensure(a.to_bits() == b.to_bits(), || {
                format!("{key:?}: decision {a} vs {b}")
            })?;
            compared += 1;
        }
    }
    Ok(compared)
}

pub fn criterion_determinism() -> Outcome {
    let started = Instant::now();
    check_cli_determinism()?;
    let compared = check_persistence_round_trip()?;
    Ok(format!(
        "synth/train/rank/eval/cv byte-identical on repeat; {compared} reloaded scores bit-exact ({:.2?})",
        started.elapsed()
    ))
}
