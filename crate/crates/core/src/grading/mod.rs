//! Scoring vectors and the two grading heads.

mod explain;
mod summation;
mod tree;
mod vector;

pub use explain::{explain, HeadResult};
pub use summation::{awarded_points, summation_grade, SummationParams};
pub use tree::{
    load_models, model_from_json, model_to_json, tree_fit, tree_path, tree_predict, write_models,
    DecisionTreeModel, Node, TreeParams,
};
pub use vector::{
    load_scoring_vectors, scoring_vector_fuzzy, scoring_vector_hard, write_scoring_vectors, ScoringVector, Strategy,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Language, Rubric, RubricItem};
    use crate::cue::JustificationSpan;
    use crate::similarity::EmbeddingTable;
    use crate::text::AnnotatedDoc;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    fn rubric(points: &[f64], max_points: f64) -> Rubric {
        Rubric {
            question_id: "q".into(),
            language: None,
            items: points
                .iter()
                .enumerate()
                .map(|(i, &p)| RubricItem {
                    item_id: i,
                    key_element: format!("item {i}"),
                    points: p,
                })
                .collect(),
            max_points,
        }
    }

    fn span(start: usize, end: usize, item: Option<usize>, sim: Option<f64>) -> JustificationSpan<f64> {
        JustificationSpan {
            start,
            end,
            char_start: 0,
            char_end: 0,
            mean_prob: 0.9,
            matched_item_id: item,
            match_similarity: sim,
        }
    }

    #[test]
    fn summation_fixture() {
        let r = rubric(&[0.5, 0.25, 0.25], 1.0);
        let p = SummationParams::default();
        assert_eq!(summation_grade(&[0.6, 0.4, 0.9], &r, &p).unwrap(), 0.75);
        let awarded = awarded_points(&[0.6, 0.4, 0.9], &r, &p).unwrap();
        assert_eq!(awarded.iter().map(|a| a.item_id).collect::<Vec<_>>(), [0, 2]);
        assert_eq!(summation_grade(&[0.0; 3], &r, &p).unwrap(), 0.0);
        let over = rubric(&[1.0, 1.0, 1.0], 2.0);
        assert_eq!(summation_grade(&[1.0; 3], &over, &p).unwrap(), 1.0);
        // strict threshold
        assert_eq!(summation_grade(&[0.5, 0.5, 0.5], &r, &p).unwrap(), 0.0);
        assert!(summation_grade(&[0.6, 0.4, 0.9], &rubric(&[0.5, 0.25, 0.25], 0.0), &p).is_err());
        assert!(summation_grade(&[0.6], &r, &p).is_err());
    }

    #[test]
    fn hard_vectors() {
        let spans = [span(0, 1, Some(1), Some(0.4)), span(2, 3, Some(1), Some(0.9))];
        assert_eq!(scoring_vector_hard("a", "q", &spans, 3).unwrap().values, [0.0, 0.9, 0.0]);
        assert_eq!(scoring_vector_hard::<f64>("a", "q", &[], 3).unwrap().values, [0.0; 3]);
        let ones: Vec<_> = (0..3).map(|i| span(i, i + 1, Some(i), Some(1.0))).collect();
        assert_eq!(scoring_vector_hard("a", "q", &ones, 3).unwrap().values, [1.0; 3]);
        assert!(scoring_vector_hard("a", "q", &[span(0, 1, Some(3), Some(1.0))], 3).is_err());
    }

    fn one_hot() -> EmbeddingTable<f64> {
        EmbeddingTable::one_hot(&["routing", "tables", "smaller", "header", "simpler", "addresses"]).unwrap()
    }

    #[test]
    fn fuzzy_vectors() {
        let items = [
            AnnotatedDoc::new("q#0", "smaller routing tables", Language::En),
            AnnotatedDoc::new("q#1", "simpler header", Language::En),
        ];
        let answer = AnnotatedDoc::new("a", "smaller routing tables and a header", Language::En);
        let table = one_hot();
        let v = scoring_vector_fuzzy(&answer, "q", &[span(0, 3, None, None)], &items, &table);
        assert_eq!(v.values, [1.0, 0.0]);
        let v = scoring_vector_fuzzy(&answer, "q", &[span(0, 6, None, None)], &items, &table);
        // 4 content tokens against 2: precision 1/4, recall 1/2
        assert!((v.values[1] - 2.0 * 0.25 * 0.5 / 0.75).abs() < 1e-12);
        assert_eq!(scoring_vector_fuzzy::<f64>(&answer, "q", &[], &items, &table).values, [0.0, 0.0]);
    }

    #[test]
    fn explanation_shapes() {
        let answer = AnnotatedDoc::new("a", "routing tables", Language::En);
        let r = rubric(&[0.5, 0.25, 0.25], 1.0);
        let vector = ScoringVector {
            answer_id: "a".into(),
            question_id: "q".into(),
            strategy: Strategy::Fuzzy,
            values: vec![0.6, 0.4, 0.9],
        };
        let p = SummationParams::default();
        let head = HeadResult::Summation {
            score: summation_grade(&vector.values, &r, &p).unwrap(),
            awarded: awarded_points(&vector.values, &r, &p).unwrap(),
        };
        let mut s = span(0, 2, Some(0), Some(0.6));
        s = s.locate(&answer);
        let e = explain(&answer, &[s], &vector, head);
        assert_eq!(e.final_score, 0.75);
        assert_eq!(e.awarded.iter().map(|a| a.item_id).collect::<Vec<_>>(), [0, 2]);
        assert_eq!(e.spans[0].text, "routing tables");
        e.validate(3).unwrap();

        let zero: ScoringVector<f64> = ScoringVector::zeros("a", "q", Strategy::Fuzzy, 3);
        let head = HeadResult::Summation {
            score: summation_grade(&zero.values, &r, &p).unwrap(),
            awarded: vec![],
        };
        let e = explain(&answer, &[], &zero, head);
        assert!(e.spans.is_empty());
        assert_eq!(e.final_score, 0.0);

        let model = tree_fit("q", &[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]], &[1.0, 0.0], &TreeParams::default()).unwrap();
        let (score, path) = tree_path(&model, &vector.values).unwrap();
        let e = explain(&answer, &[], &vector, HeadResult::Tree { score, path });
        assert_eq!(e.path.len(), 1);
        assert_eq!((e.path[0].feature_index, e.path[0].threshold), (0, 0.5));
        assert_eq!(e.final_score, 1.0);
    }

    proptest! {
        #[test]
        fn hard_le_fuzzy(
            words in prop::collection::vec(0usize..6, 1..12),
            cuts in prop::collection::vec((0usize..12, 1usize..4), 0..4),
        ) {
            let vocab = ["routing", "tables", "smaller", "header", "simpler", "addresses"];
            let text = words.iter().map(|&w| vocab[w]).collect::<Vec<_>>().join(" ");
            let answer = AnnotatedDoc::new("a", &text, Language::En);
            let items = [
                AnnotatedDoc::new("q#0", "smaller routing tables", Language::En),
                AnnotatedDoc::new("q#1", "simpler header", Language::En),
                AnnotatedDoc::new("q#2", "addresses", Language::En),
            ];
            let table = one_hot();
            let mut spans: Vec<JustificationSpan<f64>> = Vec::new();
            for (s, l) in cuts {
                let s = s % answer.len();
                let e = (s + l).min(answer.len());
                spans.push(span(s, e, None, None));
            }
            crate::cue::assign_spans(&answer, &mut spans, &items, &table).unwrap();
            let fuzzy = scoring_vector_fuzzy(&answer, "q", &spans, &items, &table);
            let hard = scoring_vector_hard("a", "q", &spans, 3).unwrap();
            for (h, f) in hard.values.iter().zip(&fuzzy.values) {
                prop_assert!(h <= f);
            }
            // adding a span never lowers a fuzzy entry
            let mut more = spans.clone();
            more.push(span(0, answer.len(), None, None));
            let bigger = scoring_vector_fuzzy(&answer, "q", &more, &items, &table);
            for (b, f) in bigger.values.iter().zip(&fuzzy.values) {
                prop_assert!(b >= f);
            }
        }

        #[test]
        fn summation_monotone(values in prop::collection::vec(0.0f64..=1.0, 3), i in 0usize..3, bump in 0.0f64..=1.0) {
            let r = rubric(&[0.5, 0.25, 0.25], 1.0);
            let p = SummationParams::default();
            let base = summation_grade(&values, &r, &p).unwrap();
            let mut up = values.clone();
            up[i] = (up[i] + bump).min(1.0);
            prop_assert!(summation_grade(&up, &r, &p).unwrap() >= base);
            let mut below = values.clone();
            if below[i] < 0.5 {
                below[i] *= bump;
                prop_assert_eq!(summation_grade(&below, &r, &p).unwrap(), base);
            }
        }
    }
}
