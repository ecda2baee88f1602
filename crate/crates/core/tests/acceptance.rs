//! One PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cuegrade::corpus::{Language, Rubric, RubricItem};
use cuegrade::cue::{answer_spans, assign_spans, extract_spans, task_metrics};
use cuegrade::eval::{nine_class, pearson};
use cuegrade::grading::{
    model_to_json, scoring_vector_fuzzy, scoring_vector_hard, summation_grade, tree_fit, tree_predict,
    SummationParams, TreeParams,
};
use cuegrade::pipeline::{Pipeline, PipelineConfig, TrainReport, EXPLANATIONS, TRAIN_REPORT};
use cuegrade::similarity::{edit_similarity, embed_score, is_content, jaccard, rouge_l, EmbeddingTable};
use cuegrade::text::AnnotatedDoc;
use cuegrade::weak::{hmm_fit, hmm_posterior, log_likelihood, HmmConfig, HmmParams, Vote, VoteMatrix, CUE};

type Check = Result<String, String>;
type CheckFn = fn() -> Check;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- metrics

fn all_sequences(max_len: usize, symbols: u8) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<u8>| {
                (0..symbols).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

fn is_subsequence(sub: &[u8], of: &[u8]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|c| it.any(|d| d == c))
}

/// Longest subsequence of `a` (by enumerating all 2^|a| of them) found in `b`.
fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let sub: Vec<u8> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            is_subsequence(&sub, b).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

/// The edit-distance recurrence, memoized on suffix lengths.
fn brute_levenshtein(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], memo: &mut BTreeMap<(usize, usize), usize>) -> usize {
        if let Some(&d) = memo.get(&(a.len(), b.len())) {
            return d;
        }
        let d = match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => (go(ra, b, memo) + 1)
                .min(go(a, rb, memo) + 1)
                .min(go(ra, rb, memo) + usize::from(x != y)),
        };
        memo.insert((a.len(), b.len()), d);
        d
    }
    go(a, b, &mut BTreeMap::new())
}

fn metric_oracles() -> Check {
    let mut elapsed = Duration::ZERO;
    let mut timed = |f: &mut dyn FnMut()| {
        let t = Instant::now();
        f();
        elapsed += t.elapsed();
    };
    let seqs = all_sequences(5, 3);
    let mut pairs = 0usize;
    for a in &seqs {
        for b in &seqs {
            let l = brute_lcs(a, b);
            let want_rouge = if l == 0 {
                0.0
            } else {
                let (p, r) = (l as f64 / a.len() as f64, l as f64 / b.len() as f64);
                2.0 * p * r / (p + r)
            };
            let (mut got, mut got_edit, mut got_jac) = (0.0, 0.0, 0.0);
            timed(&mut || {
                got = rouge_l(a, b);
                got_edit = edit_similarity(a, b);
                got_jac = jaccard(a, b);
            });
            ensure!(got == want_rouge, "rouge_l({a:?}, {b:?}) = {got}, oracle {want_rouge}");

            let longest = a.len().max(b.len());
            let want_edit = if longest == 0 {
                1.0
            } else {
                1.0 - brute_levenshtein(a, b) as f64 / longest as f64
            };
            ensure!(got_edit == want_edit, "edit_similarity({a:?}, {b:?}) = {got_edit}, oracle {want_edit}");

            let (sa, sb): (BTreeSet<u8>, BTreeSet<u8>) = (a.iter().copied().collect(), b.iter().copied().collect());
            let union = sa.union(&sb).count();
            let want_jac = if union == 0 {
                1.0
            } else {
                sa.intersection(&sb).count() as f64 / union as f64
            };
            ensure!(got_jac == want_jac, "jaccard({a:?}, {b:?}) = {got_jac}, oracle {want_jac}");
            pairs += 1;
        }
    }

    let vocab: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
    let table: EmbeddingTable<f64> = EmbeddingTable::one_hot(&vocab).unwrap();
    let mut r = rng(11);
    for _ in 0..200 {
        let draw = |r: &mut ChaCha8Rng| -> Vec<&String> {
            let n = r.gen_range(1..=7);
            (0..n).map(|_| &vocab[r.gen_range(0..vocab.len())]).collect()
        };
        let (c, f) = (draw(&mut r), draw(&mut r));
        let cv: Vec<&[f64]> = c.iter().map(|w| table.get_static(w)).collect();
        let fv: Vec<&[f64]> = f.iter().map(|w| table.get_static(w)).collect();
        let mut got = None;
        timed(&mut || got = Some(embed_score(&cv, &fv)));
        let got = got.unwrap();
        let p = c.iter().filter(|w| f.contains(w)).count() as f64 / c.len() as f64;
        let rc = f.iter().filter(|w| c.contains(w)).count() as f64 / f.len() as f64;
        let f1 = if p + rc > 0.0 { 2.0 * p * rc / (p + rc) } else { 0.0 };
        ensure!(
            (got.precision - p).abs() < 1e-12 && (got.recall - rc).abs() < 1e-12 && (got.f1 - f1).abs() < 1e-12,
            "embed_score {c:?} vs {f:?}: {got:?}, oracle ({p}, {rc}, {f1})"
        );
    }
    ensure!(elapsed < Duration::from_secs(5), "metrics took {elapsed:?}");
    Ok(format!(
        "{pairs} sequence pairs exact, 200 one-hot pairs within 1e-12, metrics {:.2}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- hmm

fn random_matrix(r: &mut ChaCha8Rng, t: usize, j: usize) -> VoteMatrix<f64> {
    let rows = (0..j)
        .map(|_| {
            (0..t)
                .map(|_| match r.gen_range(0..4) {
                    0 => None,
                    1 => Some(1.0),
                    2 => Some(0.0),
                    _ => Some(r.gen::<f64>()),
                })
                .collect()
        })
        .collect();
    VoteMatrix::from_rows("a", rows)
}

fn random_params(r: &mut ChaCha8Rng, j: usize) -> HmmParams<f64> {
    let mut unit = || 0.05 + 0.9 * r.gen::<f64>();
    let (a, b, c) = (unit(), unit(), unit());
    HmmParams {
        initial: [a, 1.0 - a],
        transition: [[b, 1.0 - b], [c, 1.0 - c]],
        emission: (0..j).map(|_| [unit(), unit()]).collect(),
    }
}

fn emission(params: &HmmParams<f64>, votes: &[Vote<f64>], s: usize) -> f64 {
    votes
        .iter()
        .zip(&params.emission)
        .filter_map(|(v, th)| v.map(|v| th[s].powf(v) * (1.0 - th[s]).powf(1.0 - v)))
        .product()
}

/// P(CUE at t | votes) by summing over all 2^T state paths.
fn enumerate_posterior(params: &HmmParams<f64>, m: &VoteMatrix<f64>) -> Vec<f64> {
    let t_len = m.num_tokens();
    let cols: Vec<Vec<Vote<f64>>> = (0..t_len).map(|t| m.column(t).collect()).collect();
    let mut total = 0.0;
    let mut cue = vec![0.0; t_len];
    for path in 0u32..1 << t_len {
        let s = |t: usize| (path >> t & 1) as usize;
        let mut p = params.initial[s(0)] * emission(params, &cols[0], s(0));
        for t in 1..t_len {
            p *= params.transition[s(t - 1)][s(t)] * emission(params, &cols[t], s(t));
        }
        total += p;
        for (t, c) in cue.iter_mut().enumerate() {
            if s(t) == CUE {
                *c += p;
            }
        }
    }
    cue.iter().map(|c| c / total).collect()
}

fn hmm_correctness() -> Check {
    let mut r = rng(21);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (t, j) = (r.gen_range(1..=10), r.gen_range(1..=3));
        let m = random_matrix(&mut r, t, j);
        let params = random_params(&mut r, j);
        let got = hmm_posterior(&params, &m).map_err(|e| e.to_string())?;
        for (g, w) in got.probs.iter().zip(enumerate_posterior(&params, &m)) {
            worst = worst.max((g - w).abs());
        }
    }
    ensure!(worst <= 1e-9, "posterior off by {worst:e}");

    let mut rounds = 0;
    for _ in 0..100 {
        let j = r.gen_range(1..=4);
        let corpus: Vec<_> = (0..r.gen_range(2..=8))
            .map(|_| {
                let t = r.gen_range(1..=15);
                random_matrix(&mut r, t, j)
            })
            .collect();
        let fit = hmm_fit(&corpus, &HmmConfig::default()).map_err(|e| e.to_string())?;
        ensure!(fit.objective.len() == 5, "{} objective entries", fit.objective.len());
        for w in fit.objective.windows(2) {
            ensure!(w[1] >= w[0] - 1e-9, "objective decreased: {:?}", fit.objective);
            rounds += 1;
        }
        let ll: f64 = corpus.iter().map(|m| log_likelihood(&fit.params, m).unwrap()).sum();
        ensure!(ll.is_finite(), "non-finite likelihood");
    }

    let corpus: Vec<_> = (0..50)
        .map(|i| {
            let row = (0..8 + i % 5).map(|k| Some(if (k + i) % 4 < 2 { 1.0 } else { 0.0 })).collect();
            VoteMatrix::from_rows(format!("a{i}"), vec![row])
        })
        .collect();
    let fit = hmm_fit(&corpus, &HmmConfig::default()).map_err(|e| e.to_string())?;
    let (mut lo_cue, mut hi_rest) = (1.0f64, 0.0f64);
    for m in &corpus {
        let post = hmm_posterior(&fit.params, m).map_err(|e| e.to_string())?;
        for (t, p) in post.probs.iter().enumerate() {
            if m.get(0, t) == Some(1.0) {
                lo_cue = lo_cue.min(*p);
            } else {
                hi_rest = hi_rest.max(*p);
            }
        }
    }
    ensure!(lo_cue >= 0.9 && hi_rest <= 0.1, "noiseless corpus: min cue {lo_cue}, max other {hi_rest}");
    Ok(format!(
        "enumeration max error {worst:.1e}; {rounds} EM steps non-decreasing; noiseless min cue {lo_cue:.4}, max other {hi_rest:.4}"
    ))
}

// ---------------------------------------------------------------- spans

fn brute_runs(probs: &[f64], thr: f64) -> Vec<(usize, usize)> {
    let n = probs.len();
    let above = |i: usize| probs[i] > thr;
    let mut out = Vec::new();
    for s in 0..n {
        for e in s + 1..=n {
            let inside = (s..e).all(above);
            let maximal = (s == 0 || !above(s - 1)) && (e == n || !above(e));
            if inside && maximal {
                out.push((s, e));
            }
        }
    }
    out
}

fn span_extraction() -> Check {
    let mut r = rng(31);
    let grid = [0.0, 0.25, 0.5, 0.5, 0.75, 1.0];
    for case in 0..1000 {
        let t = r.gen_range(0..=64);
        let probs: Vec<f64> = (0..t)
            .map(|_| if r.gen_bool(0.5) { grid[r.gen_range(0..grid.len())] } else { r.gen() })
            .collect();
        let got: Vec<(usize, usize)> = extract_spans(&probs, 0.5).iter().map(|s| (s.start, s.end)).collect();
        let want = brute_runs(&probs, 0.5);
        ensure!(got == want, "case {case}: {got:?} vs {want:?} for {probs:?}");
    }
    Ok("1000 vectors match the run finder".into())
}

// ---------------------------------------------------------------- scoring vectors

const VOCAB: [&str; 12] = [
    "hash", "key", "index", "array", "time", "constant", "server", "client", "the", "a", "of", "sends",
];

fn random_doc(r: &mut ChaCha8Rng, id: &str, max_len: usize) -> AnnotatedDoc {
    let n = r.gen_range(1..=max_len);
    let words: Vec<&str> = (0..n).map(|_| VOCAB[r.gen_range(0..VOCAB.len())]).collect();
    AnnotatedDoc::new(id, &words.join(" "), Language::En)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let (na, nb) = (a.iter().map(|x| x * x).sum::<f64>(), b.iter().map(|x| x * x).sum::<f64>());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb).sqrt()).clamp(0.0, 1.0)
    }
}

fn oracle_f1(table: &EmbeddingTable<f64>, a: &AnnotatedDoc, range: (usize, usize), b: &AnnotatedDoc) -> f64 {
    let vecs = |d: &AnnotatedDoc, s: usize, e: usize| -> Vec<Vec<f64>> {
        d.tokens[s..e].iter().filter(|t| is_content(t)).map(|t| table.get_static(&t.text).to_vec()).collect()
    };
    let (c, f) = (vecs(a, range.0, range.1), vecs(b, 0, b.len()));
    if c.is_empty() || f.is_empty() {
        return 0.0;
    }
    let best = |x: &[f64], ys: &[Vec<f64>]| ys.iter().map(|y| cosine(x, y)).fold(0.0, f64::max);
    let p = c.iter().map(|x| best(x, &f)).sum::<f64>() / c.len() as f64;
    let rc = f.iter().map(|y| best(y, &c)).sum::<f64>() / f.len() as f64;
    if p + rc > 0.0 {
        2.0 * p * rc / (p + rc)
    } else {
        0.0
    }
}

fn scoring_vectors() -> Check {
    let mut r = rng(41);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for case in 0..500 {
        let table = EmbeddingTable::from_static(
            3,
            VOCAB.iter().map(|w| (w.to_string(), (0..3).map(|_| r.gen_range(-1.0..1.0)).collect())),
        )
        .unwrap();
        let answer = random_doc(&mut r, "ans", 14);
        let items: Vec<AnnotatedDoc> =
            (0..r.gen_range(1..=4)).map(|i| random_doc(&mut r, &format!("q#{i}"), 6)).collect();
        let probs: Vec<f64> = (0..answer.len()).map(|_| r.gen()).collect();
        let mut spans = answer_spans(&answer, &probs, 0.5).map_err(|e| e.to_string())?;
        let fuzzy = scoring_vector_fuzzy(&answer, "q", &spans, &items, &table);
        for (i, item) in items.iter().enumerate() {
            let want = spans.iter().map(|s| oracle_f1(&table, &answer, (s.start, s.end), item)).fold(0.0, f64::max);
            worst = worst.max((fuzzy.values[i] - want).abs());
        }
        assign_spans(&answer, &mut spans, &items, &table).map_err(|e| e.to_string())?;
        let hard = scoring_vector_hard(&answer.id, "q", &spans, items.len()).map_err(|e| e.to_string())?;
        for (h, f) in hard.values.iter().zip(&fuzzy.values) {
            ensure!(h <= f, "case {case}: hard {:?} exceeds fuzzy {:?}", hard.values, fuzzy.values);
            compared += 1;
        }
    }
    ensure!(worst <= 1e-12, "fuzzy off by {worst:e}");
    Ok(format!("fuzzy max error {worst:.1e}; hard <= fuzzy on {compared} entries"))
}

// ---------------------------------------------------------------- heads

fn summation_fixture() -> Check {
    let rubric = Rubric {
        question_id: "q".into(),
        language: None,
        items: [0.5, 0.25, 0.25]
            .iter()
            .enumerate()
            .map(|(item_id, &points)| RubricItem {
                item_id,
                key_element: format!("item {item_id}"),
                points,
            })
            .collect(),
        max_points: 1.0,
    };
    let got = summation_grade(&[0.6, 0.4, 0.9], &rubric, &SummationParams { threshold: 0.5 }).map_err(|e| e.to_string())?;
    ensure!(got == 0.75, "grade {got}");
    Ok("[0.6, 0.4, 0.9] grades 0.75".into())
}

fn decision_trees() -> Check {
    let mut r = rng(51);
    let params = TreeParams::unbounded();
    let mut max_rmse = 0.0f64;
    for case in 0..100 {
        let d = r.gen_range(1..=5);
        let mut seen = BTreeSet::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for _ in 0..r.gen_range(1..=40) {
            let v: Vec<u8> = (0..d).map(|_| r.gen_range(0..=8)).collect();
            if seen.insert(v.clone()) {
                rows.push(v.iter().map(|&k| f64::from(k) / 8.0).collect());
            }
        }
        let y: Vec<f64> = rows.iter().map(|_| r.gen()).collect();
        let fits: Vec<String> = (0..3)
            .map(|_| model_to_json(&tree_fit("q", &rows, &y, &params).unwrap()).unwrap())
            .collect();
        ensure!(fits[0] == fits[1] && fits[1] == fits[2], "case {case}: serializations differ");
        let model = tree_fit("q", &rows, &y, &params).map_err(|e| e.to_string())?;
        let se: f64 = rows.iter().zip(&y).map(|(x, t)| (tree_predict(&model, x).unwrap() - t).powi(2)).sum();
        max_rmse = max_rmse.max((se / rows.len() as f64).sqrt());
    }
    ensure!(max_rmse == 0.0, "training RMSE {max_rmse}");
    Ok("100 datasets interpolated exactly; 3 serializations identical".into())
}

// ---------------------------------------------------------------- task metrics and grid

fn fig4_triple() -> Check {
    let probs: Vec<f64> = (0..58).map(|t| if (5..15).contains(&t) || (30..40).contains(&t) { 0.9 } else { 0.1 }).collect();
    let spans = extract_spans(&probs, 0.5);
    let m = task_metrics(&spans, probs.len()).map_err(|e| e.to_string())?;
    ensure!(m.num_cues == 2, "num_cues {}", m.num_cues);
    ensure!(m.avg_tokens_per_cue == 10.0, "avg {}", m.avg_tokens_per_cue);
    ensure!((m.pct_cue_tokens - 0.345).abs() <= 0.0005, "pct {}", m.pct_cue_tokens);
    Ok(format!("(2, 10.0, {:.4})", m.pct_cue_tokens))
}

fn nine_class_grid() -> Check {
    for k in 0..=1000i64 {
        // nearest j minimizes |k/1000 - j/8|, i.e. |8k - 1000j|; ties go up
        let want = (0..=8i64).min_by_key(|&j| ((8 * k - 1000 * j).abs(), -j)).unwrap() as usize;
        let got = nine_class(k as f64 / 1000.0);
        ensure!(got == want, "{}/1000 → {got}, want {want}", k);
    }
    for j in 0..=8 {
        ensure!(nine_class(j as f64 / 8.0) == j, "grid point {j}/8 moved");
    }
    Ok("1001 values plus 9 fixed points".into())
}

// ---------------------------------------------------------------- end to end

fn micro_run(workdir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let cfg_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/micro/config.toml");
    let cfg = PipelineConfig::load(&cfg_path).map_err(|e| e.to_string())?;
    let pipeline = Pipeline::new(cfg, workdir).map_err(|e| e.to_string())?;
    pipeline.run_all().map_err(|e| e.to_string())?;
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(workdir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        files.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&path).map_err(|e| e.to_string())?,
        );
    }
    Ok(files)
}

fn end_to_end() -> Check {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let started = Instant::now();
    let first = pool.install(|| micro_run(a.path()))?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "single-threaded run took {elapsed:?}");
    let second = pool.install(|| micro_run(b.path()))?;
    ensure!(first.keys().eq(second.keys()), "artifact sets differ");
    for (name, bytes) in &first {
        ensure!(second[name] == *bytes, "{name} differs between runs");
    }

    let explanations =
        cuegrade::corpus::load_explanations::<f64>(&a.path().join(EXPLANATIONS)).map_err(|e| e.to_string())?;
    ensure!(explanations.len() == 24, "{} graded answers", explanations.len());
    ensure!(
        explanations.iter().all(|e| (0.0..=1.0).contains(&e.final_score)),
        "grade outside [0,1]"
    );
    let report: TrainReport =
        cuegrade::pipeline::read_json(&a.path().join(TRAIN_REPORT)).map_err(|e| e.to_string())?;
    let overall = report.overall.ok_or("no training answers")?;
    for (q, f) in &report.questions {
        ensure!(f.fit.tree_rmse <= f.fit.summation_rmse, "{q}: tree {} > summation {}", f.fit.tree_rmse, f.fit.summation_rmse);
    }
    ensure!(overall.tree_rmse <= overall.summation_rmse, "overall tree RMSE above summation");
    Ok(format!(
        "{:.2}s single-threaded; {} artifacts identical; train RMSE tree {:.4} <= summation {:.4}",
        elapsed.as_secs_f64(),
        first.len(),
        overall.tree_rmse,
        overall.summation_rmse
    ))
}

// ---------------------------------------------------------------- pearson

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// r from exact sums; p from the even-df closed form
/// p = 1 − |r| Σ_{k<ν/2} c_k (1 − r²)^k, c_0 = 1, c_k = c_{k−1}(2k − 1)/(2k).
fn pearson_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = BigRational::from_integer(BigInt::from(x.len()));
    let (xs, ys): (Vec<_>, Vec<_>) = (x.iter().map(|&v| exact(v)).collect(), y.iter().map(|&v| exact(v)).collect());
    let mx = xs.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let my = ys.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let (mut sxy, mut sxx, mut syy) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for (a, b) in xs.iter().zip(&ys) {
        let (da, db) = (a - &mx, b - &my);
        sxy += &da * &db;
        sxx += &da * &da;
        syy += &db * &db;
    }
    let r2 = &sxy * &sxy / (sxx * syy);
    let r = r2.to_f64().unwrap().sqrt() * if sxy.is_negative() { -1.0 } else { 1.0 };
    let df = x.len() - 2;
    assert!(df.is_multiple_of(2));
    let one = BigRational::from_integer(BigInt::from(1));
    let q = &one - &r2;
    let (mut c, mut pow, mut sum) = (one.clone(), one.clone(), BigRational::zero());
    for k in 0..df / 2 {
        if k > 0 {
            c *= BigRational::new(BigInt::from(2 * k - 1), BigInt::from(2 * k));
            pow *= &q;
        }
        sum += &c * &pow;
    }
    (r, 1.0 - r.abs() * sum.to_f64().unwrap())
}

fn pearson_check() -> Check {
    let mut r = rng(61);
    let (mut worst_r, mut worst_p) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let slope = r.gen_range(-1.5..1.5);
        let x: Vec<f64> = (0..20).map(|_| r.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + r.gen_range(-2.0..2.0)).collect();
        let got = pearson(&x, &y).map_err(|e| e.to_string())?;
        let (want_r, want_p) = pearson_oracle(&x, &y);
        worst_r = worst_r.max((got.r - want_r).abs());
        worst_p = worst_p.max((got.p_value - want_p).abs());
    }
    ensure!(worst_r <= 1e-10 && worst_p <= 1e-10, "r off by {worst_r:e}, p off by {worst_p:e}");
    let x: Vec<f64> = (0..20).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let anchor = pearson(&x, &y).map_err(|e| e.to_string())?;
    ensure!((anchor.r - 1.0).abs() <= 1e-12, "r(x, 2x+1) = {}", anchor.r);
    Ok(format!("max error r {worst_r:.1e}, p {worst_p:.1e}; r(x, 2x+1) = {}", anchor.r))
}

fn main() {
    let checks: [(&str, CheckFn); 10] = [
        ("metric oracles", metric_oracles),
        ("hmm correctness", hmm_correctness),
        ("span extraction", span_extraction),
        ("scoring vectors", scoring_vectors),
        ("summation fixture", summation_fixture),
        ("decision trees", decision_trees),
        ("task metrics triple", fig4_triple),
        ("nine-class grid", nine_class_grid),
        ("end to end", end_to_end),
        ("pearson", pearson_check),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
