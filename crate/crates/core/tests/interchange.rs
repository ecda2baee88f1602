use std::collections::BTreeMap;
use std::path::Path;

use cuegrade::cue::{load_external_probs, tagger_record_from_tokens, write_tagger_records, Provenance};
use cuegrade::jsonl::{self, FORMAT_VERSION};
use cuegrade::pipeline::{load_annotations, load_span_records, Pipeline, PipelineConfig, ANNOTATIONS, SILVER, SPANS};
use cuegrade::similarity::{ContextualHeader, ContextualRecord, ContextualSpan, EmbeddingSource};
use cuegrade::text::AnnotatedDoc;
use cuegrade::weak::load_silver_labels;

fn micro() -> PipelineConfig {
    PipelineConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/micro/config.toml")).unwrap()
}

#[test]
fn tagger_file_from_silver_labels_reproduces_silver_spans() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(micro(), dir.path()).unwrap();
    p.annotate().unwrap();
    p.silver().unwrap();
    p.spans(None).unwrap();
    let baseline = load_span_records(&dir.path().join(SPANS)).unwrap();

    let ann = load_annotations(&dir.path().join(ANNOTATIONS)).unwrap();
    let silver = load_silver_labels::<f64>(&dir.path().join(SILVER)).unwrap();
    let records: Vec<_> = ann
        .answers
        .iter()
        .zip(&silver)
        .map(|((_, d), s)| tagger_record_from_tokens(d, &s.probs, "silver-copy"))
        .collect();
    let tagger = dir.path().join("tagger.jsonl");
    write_tagger_records(&records, &tagger).unwrap();

    let docs: BTreeMap<String, AnnotatedDoc> = ann.answers.iter().map(|(_, d)| (d.id.clone(), d.clone())).collect();
    let loaded = load_external_probs::<f64>(&tagger, &docs).unwrap();
    assert_eq!(loaded.len(), ann.answers.len());
    for (out, s) in loaded.iter().zip(&silver) {
        assert_eq!(out.answer_id, s.answer_id);
        assert_eq!(out.provenance, Provenance::External);
        for (a, b) in out.token_probs.iter().zip(&s.probs) {
            assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", out.answer_id);
        }
    }

    p.spans(Some(&tagger)).unwrap();
    let external = load_span_records(&dir.path().join(SPANS)).unwrap();
    assert_eq!(external.len(), baseline.len());
    for (e, b) in external.iter().zip(&baseline) {
        assert_eq!(e.provenance, Provenance::External);
        let bounds = |r: &cuegrade::pipeline::SpanRecord| r.spans.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>();
        assert_eq!(bounds(e), bounds(b), "{}", e.answer_id);
    }
}

fn write_contextual_export(docs: &[&AnnotatedDoc], dim: usize, path: &Path) {
    let header = ContextualHeader {
        format_version: FORMAT_VERSION.to_string(),
        dim,
        model_id: "fixture".into(),
    };
    let mut text = serde_json::to_string(&header).unwrap();
    text.push('\n');
    let records = docs.iter().map(|d| ContextualRecord {
        answer_id: d.id.clone(),
        spans: d
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| ContextualSpan {
                char_start: t.char_start,
                char_end: t.char_end,
                vector: (0..dim).map(|k| ((i * 7 + k * 3 + t.text.len()) % 5) as f64 - 2.0).collect(),
            })
            .collect(),
    });
    text.push_str(&jsonl::to_lines(records).unwrap());
    std::fs::write(path, text).unwrap();
}

#[test]
fn contextual_export_loads_for_every_document_and_drives_grading() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = micro();
    let p = Pipeline::new(cfg.clone(), dir.path()).unwrap();
    p.annotate().unwrap();
    let ann = load_annotations(&dir.path().join(ANNOTATIONS)).unwrap();
    let docs: Vec<&AnnotatedDoc> = ann.answers.iter().map(|(_, d)| d).chain(ann.items.values().flatten()).collect();
    assert_eq!(docs.len(), 24 + 7);
    assert!(docs.iter().any(|d| d.id == "q2#3"));

    let export = dir.path().join("contextual.jsonl");
    write_contextual_export(&docs, 16, &export);
    cfg.paths.contextual_embeddings = Some(export);
    let p = Pipeline::new(cfg, dir.path()).unwrap();
    let table = p.embedding_table(&ann).unwrap();
    assert_eq!(table.source(), EmbeddingSource::ContextualExport);
    for d in &docs {
        for (i, t) in d.tokens.iter().enumerate() {
            let v = table.token_vector(&d.id, i, t);
            assert_eq!(v.len(), 16);
            assert_eq!(v[0], ((i * 7 + t.text.len()) % 5) as f64 - 2.0);
        }
    }
    p.silver().unwrap();
    p.spans(None).unwrap();
    p.score_vectors().unwrap();
    p.train_head().unwrap();
    p.grade().unwrap();
    let (_, report) = p.evaluate().unwrap();
    assert!(report.splits.values().all(|s| s.rmse >= 0.0 && s.rmse <= 1.0));
}
