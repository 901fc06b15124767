use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use crate::error::Result;

use super::model::NerModel;
use super::{spans_from_bio, EntitySpan, Label, Tag, TaggedSentence};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LabelScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold spans with this label.
    pub support: usize,
    pub predicted: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_label: BTreeMap<Label, LabelScores>,
    /// Mean F1 over labels that occur in either gold or predictions.
    pub macro_f1: f64,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn macro_f1(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Exact-match span scoring: a prediction counts only if start, end and
/// label all agree with a gold span of the same sentence.
pub fn evaluate_spans(gold: &[Vec<EntitySpan>], pred: &[Vec<EntitySpan>]) -> EvalReport {
    assert_eq!(gold.len(), pred.len(), "gold and predicted sentence counts differ");
    let mut counts: BTreeMap<Label, LabelScores> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        let gs: HashSet<&EntitySpan> = g.iter().collect();
        for s in &gs {
            counts.entry(s.label).or_default().support += 1;
        }
        let ps: HashSet<&EntitySpan> = p.iter().collect();
        for s in &ps {
            let c = counts.entry(s.label).or_default();
            c.predicted += 1;
            if gs.contains(s) {
                c.correct += 1;
            }
        }
    }
    for c in counts.values_mut() {
        c.precision = ratio(c.correct, c.predicted);
        c.recall = ratio(c.correct, c.support);
        c.f1 = f1_score(c.precision, c.recall);
    }
    let f1s: Vec<f64> = counts.values().map(|c| c.f1).collect();
    EvalReport { macro_f1: macro_f1(&f1s), per_label: counts }
}

pub fn evaluate_tags(gold: &[Vec<Tag>], pred: &[Vec<Tag>]) -> EvalReport {
    let g: Vec<_> = gold.iter().map(|t| spans_from_bio(t)).collect();
    let p: Vec<_> = pred.iter().map(|t| spans_from_bio(t)).collect();
    evaluate_spans(&g, &p)
}

pub fn evaluate(model: &NerModel, gold: &[TaggedSentence]) -> EvalReport {
    let g: Vec<Vec<Tag>> = gold.iter().map(|s| s.tags.clone()).collect();
    let p: Vec<Vec<Tag>> = gold.iter().map(|s| model.predict(&s.tokens)).collect();
    evaluate_tags(&g, &p)
}

impl EvalReport {
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "label\tprecision\trecall\tf1\tsupport\tpredicted")?;
        for (l, c) in &self.per_label {
            writeln!(
                w,
                "{l}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}",
                c.precision, c.recall, c.f1, c.support, c.predicted
            )?;
        }
        writeln!(w, "macro\t\t\t{:.4}\t\t", self.macro_f1)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn span(start: usize, end: usize, label: Label) -> EntitySpan {
        EntitySpan { start, end, label }
    }

    #[test]
    fn hand_computed_scores() {
        // DRUG: 2 gold, 2 predicted, 1 exact (the other is off by one token).
        // DIS: 1 gold, 0 predicted. PER: 0 gold, 1 predicted.
        let gold = vec![
            vec![span(0, 3, Label::Drug), span(4, 5, Label::Dis)],
            vec![span(1, 2, Label::Drug)],
        ];
        let pred = vec![vec![span(0, 2, Label::Drug)], vec![span(1, 2, Label::Drug), span(3, 4, Label::Per)]];
        let r = evaluate_spans(&gold, &pred);
        let drug = r.per_label[&Label::Drug];
        assert_eq!((drug.support, drug.predicted, drug.correct), (2, 2, 1));
        assert_eq!(drug.f1, 0.5);
        assert_eq!(r.per_label[&Label::Dis].f1, 0.0);
        assert_eq!(r.per_label[&Label::Per].f1, 0.0);
        assert!(!r.per_label.contains_key(&Label::Org));
        assert!((r.macro_f1 - 0.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f1_edge_cases() {
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        assert_eq!(f1_score(1.0, 1.0), 1.0);
        assert!((f1_score(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(macro_f1(&[]), 0.0);
        let table = [0.9772, 0.8804, 0.9316, 0.9571];
        assert!((macro_f1(&table) - 0.936575).abs() < 1e-9);
    }

    #[test]
    fn empty_input_scores_zero() {
        let r = evaluate_spans(&[], &[]);
        assert!(r.per_label.is_empty());
        assert_eq!(r.macro_f1, 0.0);
    }

    #[test]
    fn tsv_has_one_row_per_label() {
        let r = evaluate_spans(&[vec![span(0, 1, Label::Org)]], &[vec![span(0, 1, Label::Org)]]);
        let mut out = Vec::new();
        r.write_tsv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("ORG\t1.0000\t1.0000\t1.0000\t1\t1"));
    }

    fn arb_spans() -> impl Strategy<Value = Vec<EntitySpan>> {
        proptest::collection::vec((0usize..8, 1usize..3, 0usize..4), 0..5)
            .prop_map(|v| v.into_iter().map(|(s, l, k)| span(s, s + l, Label::ALL[k])).collect())
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_perfect_on_self(
            gold in proptest::collection::vec(arb_spans(), 0..6),
            pred in proptest::collection::vec(arb_spans(), 0..6),
        ) {
            let n = gold.len().min(pred.len());
            let r = evaluate_spans(&gold[..n], &pred[..n]);
            prop_assert!((0.0..=1.0).contains(&r.macro_f1));
            for c in r.per_label.values() {
                prop_assert!(c.correct <= c.support.min(c.predicted));
                prop_assert!((0.0..=1.0).contains(&c.f1));
            }
            let same = evaluate_spans(&gold, &gold);
            if same.per_label.is_empty() {
                prop_assert_eq!(same.macro_f1, 0.0);
            } else {
                prop_assert_eq!(same.macro_f1, 1.0);
            }
        }

        #[test]
        fn entity_free_sentences_change_nothing(
            gold in proptest::collection::vec(arb_spans(), 1..6),
            pred in proptest::collection::vec(arb_spans(), 1..6),
            at in 0usize..6,
        ) {
            let n = gold.len().min(pred.len());
            let (mut g, mut p) = (gold[..n].to_vec(), pred[..n].to_vec());
            let before = evaluate_spans(&g, &p);
            let at = at.min(n);
            g.insert(at, Vec::new());
            p.insert(at, Vec::new());
            prop_assert_eq!(evaluate_spans(&g, &p), before);
        }
    }
}
