//! Plot-ready aggregate tables. Every writer emits a header row and sorts
//! its rows, so identical inputs give identical bytes.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use chrono::NaiveDate;

use crate::corpus::Post;
use crate::error::Result;
use crate::lda::LdaModel;
use crate::ner::{ApplyRecord, Label};
use crate::questions::Question;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    /// Descending by count, then ascending by key.
    pub rows: Vec<(String, u64)>,
}

impl FrequencyTable {
    pub fn from_counts(counts: HashMap<String, u64>) -> Self {
        let mut rows: Vec<(String, u64)> = counts.into_iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        FrequencyTable { rows }
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        self.rows.iter().find(|r| r.0 == key).map(|r| r.1)
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W, key_header: &str) -> Result<()> {
        writeln!(w, "{key_header}\tcount")?;
        for (k, c) in &self.rows {
            writeln!(w, "{k}\t{c}")?;
        }
        Ok(())
    }
}

/// One count per (post, matched keyword).
pub fn keyword_histogram(posts: &[Post]) -> FrequencyTable {
    let mut counts = HashMap::new();
    for p in posts {
        for k in &p.keywords {
            *counts.entry(k.clone()).or_insert(0) += 1;
        }
    }
    FrequencyTable::from_counts(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DailyRow {
    pub date: NaiveDate,
    pub posts: u64,
    pub questions: u64,
}

/// Every date from the earliest to the latest timestamp seen in either
/// input, with zero rows for quiet days.
pub fn daily_timeseries(posts: &[Post], questions: &[Question]) -> Vec<DailyRow> {
    let mut p: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    let mut q: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for post in posts {
        *p.entry(post.timestamp.date_naive()).or_insert(0) += 1;
    }
    for question in questions {
        *q.entry(question.timestamp.date_naive()).or_insert(0) += 1;
    }
    let first = p.keys().next().into_iter().chain(q.keys().next()).min().copied();
    let last = p.keys().next_back().into_iter().chain(q.keys().next_back()).max().copied();
    let (Some(first), Some(last)) = (first, last) else {
        return Vec::new();
    };
    first
        .iter_days()
        .take_while(|d| *d <= last)
        .map(|date| DailyRow {
            date,
            posts: p.get(&date).copied().unwrap_or(0),
            questions: q.get(&date).copied().unwrap_or(0),
        })
        .collect()
}

pub fn write_daily_tsv<W: Write>(mut w: W, rows: &[DailyRow]) -> Result<()> {
    writeln!(w, "date\tposts\tquestions")?;
    for r in rows {
        writeln!(w, "{}\t{}\t{}", r.date, r.posts, r.questions)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicMonthRow {
    pub month: String,
    pub topic: usize,
    pub doc_count: u64,
}

/// Number of documents per dominant topic for each month's model. Topics
/// with no documents still get a zero row.
pub fn topic_month_distribution(models: &BTreeMap<String, LdaModel>) -> Vec<TopicMonthRow> {
    let mut rows = Vec::new();
    for (month, model) in models {
        if model.num_docs() == 0 {
            continue;
        }
        let mut counts = vec![0u64; model.num_topics()];
        for d in 0..model.num_docs() {
            counts[model.dominant_topic(d)] += 1;
        }
        rows.extend(counts.into_iter().enumerate().map(|(topic, doc_count)| TopicMonthRow {
            month: month.clone(),
            topic,
            doc_count,
        }));
    }
    rows
}

pub fn write_topic_month_tsv<W: Write>(mut w: W, rows: &[TopicMonthRow]) -> Result<()> {
    writeln!(w, "month\ttopic\tdoc_count")?;
    for r in rows {
        writeln!(w, "{}\t{}\t{}", r.month, r.topic, r.doc_count)?;
    }
    Ok(())
}

/// `month, topic, rank, term, weight` for the top `n` terms of every topic.
pub fn write_topic_terms_tsv<W: Write>(mut w: W, models: &BTreeMap<String, LdaModel>, n: usize) -> Result<()> {
    writeln!(w, "month\ttopic\trank\tterm\tweight")?;
    for (month, model) in models {
        for t in 0..model.num_topics() {
            for (rank, (term, weight)) in model.top_terms(t, n)?.terms.iter().enumerate() {
                writeln!(w, "{month}\t{t}\t{}\t{term}\t{weight:.6}", rank + 1)?;
            }
        }
    }
    Ok(())
}

/// Word-cloud data: lowercased span text counted per category. All four
/// categories are always present.
pub fn entity_frequencies(records: &[ApplyRecord]) -> BTreeMap<Label, FrequencyTable> {
    let mut counts: BTreeMap<Label, HashMap<String, u64>> = Label::ALL.iter().map(|&l| (l, HashMap::new())).collect();
    for r in records {
        for s in &r.spans {
            *counts.get_mut(&s.label).expect("all labels present").entry(s.text.to_lowercase()).or_insert(0) += 1;
        }
    }
    counts.into_iter().map(|(l, c)| (l, FrequencyTable::from_counts(c))).collect()
}

/// All categories in one file: `label, entity, count`.
pub fn write_entity_tsv<W: Write>(mut w: W, tables: &BTreeMap<Label, FrequencyTable>) -> Result<()> {
    writeln!(w, "label\tentity\tcount")?;
    for (label, table) in tables {
        for (k, c) in &table.rows {
            writeln!(w, "{label}\t{k}\t{c}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::{build_vocabulary, fit, LdaParams};
    use crate::ner::SpanRecord;
    use crate::preprocess::ProcessedDoc;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn post(id: &str, day: u32, keywords: &[&str]) -> Post {
        Post {
            id: id.into(),
            timestamp: Utc.with_ymd_and_hms(2020, 3, day, 12, 0, 0).unwrap(),
            text: String::new(),
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
            lang_score: 0.0,
        }
    }

    fn question(id: &str, day: u32) -> Question {
        Question {
            post_id: id.into(),
            index: 0,
            timestamp: Utc.with_ymd_and_hms(2020, 3, day, 8, 0, 0).unwrap(),
            text: "?".into(),
        }
    }

    #[test]
    fn keyword_examples() {
        let t = keyword_histogram(&[post("1", 1, &["corona", "covid"])]);
        assert_eq!(t.get("corona"), Some(1));
        assert_eq!(t.get("covid"), Some(1));
        assert!(keyword_histogram(&[]).is_empty());
        let t = keyword_histogram(&[post("1", 1, &["b"]), post("2", 1, &["a", "b"]), post("3", 1, &["c"])]);
        assert_eq!(t.rows, [("b".into(), 2), ("a".into(), 1), ("c".into(), 1)]);
        let mut out = Vec::new();
        t.write_tsv(&mut out, "keyword").unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "keyword\tcount\nb\t2\na\t1\nc\t1\n");
    }

    #[test]
    fn timeseries_examples() {
        assert!(daily_timeseries(&[], &[]).is_empty());
        let rows = daily_timeseries(&[post("1", 5, &[])], &[question("1", 5)]);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].posts, rows[0].questions), (1, 1));
        let rows = daily_timeseries(&[post("1", 2, &[]), post("2", 2, &[]), post("3", 6, &[])], &[question("1", 2)]);
        assert_eq!(rows.len(), 5);
        assert_eq!(rows.iter().map(|r| r.posts).collect::<Vec<_>>(), [2, 0, 0, 0, 1]);
        assert_eq!(rows.iter().map(|r| r.questions).sum::<u64>(), 1);
        let mut out = Vec::new();
        write_daily_tsv(&mut out, &rows[..1]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "date\tposts\tquestions\n2020-03-02\t2\t1\n");
    }

    fn model(docs: &[&[&str]], k: usize) -> LdaModel {
        let docs: Vec<ProcessedDoc> = docs
            .iter()
            .enumerate()
            .map(|(i, t)| ProcessedDoc {
                doc_id: i.to_string(),
                tokens: t.iter().map(|s| s.to_string()).collect(),
                timestamp: None,
            })
            .collect();
        let (vocab, bows) = build_vocabulary(&docs, 1, 1.0);
        let params = LdaParams { k, alpha: Some(0.1), iterations: 200, burn_in: 100, sample_lag: 10, seed: 3, ..LdaParams::default() };
        fit(&bows, &vocab, &params).unwrap()
    }

    #[test]
    fn topic_month_examples() {
        let mut models = BTreeMap::new();
        models.insert("2020-03".to_string(), model(&[&["a", "b"], &["c"], &["a"]], 1));
        let rows = topic_month_distribution(&models);
        assert_eq!(rows, [TopicMonthRow { month: "2020-03".into(), topic: 0, doc_count: 3 }]);
        assert!(topic_month_distribution(&BTreeMap::new()).is_empty());

        // two separable themes, 4 docs each
        let a: &[&str] = &["x1", "x2", "x3", "x1", "x2", "x3"];
        let b: &[&str] = &["y1", "y2", "y3", "y1", "y2", "y3"];
        models.insert("2020-04".to_string(), model(&[a, b, a, b, a, b, a, b], 2));
        let rows = topic_month_distribution(&models);
        let april: Vec<u64> = rows.iter().filter(|r| r.month == "2020-04").map(|r| r.doc_count).collect();
        assert_eq!(april, [4, 4]);
    }

    fn rec(spans: &[(Label, &str)]) -> ApplyRecord {
        ApplyRecord {
            doc_id: "d".into(),
            spans: spans
                .iter()
                .map(|&(label, text)| SpanRecord { start: 0, end: 1, label, text: text.into() })
                .collect(),
        }
    }

    #[test]
    fn entity_examples() {
        let t = entity_frequencies(&[]);
        assert_eq!(t.len(), 4);
        assert!(t.values().all(FrequencyTable::is_empty));
        let t = entity_frequencies(&[rec(&[(Label::Drug, "cloroquina")])]);
        assert_eq!(t[&Label::Drug].rows, [("cloroquina".into(), 1)]);
        let t = entity_frequencies(&[rec(&[(Label::Drug, "Cloroquina"), (Label::Per, "Bolsonaro")]), rec(&[(Label::Drug, "cloroquina")])]);
        assert_eq!(t[&Label::Drug].get("cloroquina"), Some(2));
        let mut out = Vec::new();
        write_entity_tsv(&mut out, &t).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "label\tentity\tcount\nDRUG\tcloroquina\t2\nPER\tbolsonaro\t1\n");
    }

    proptest! {
        #[test]
        fn tables_conserve_counts(
            kws in proptest::collection::vec(proptest::collection::btree_set("[a-d]", 0..4), 0..30),
            days in proptest::collection::vec(1u32..28, 1..30),
        ) {
            let posts: Vec<Post> = kws
                .iter()
                .zip(days.iter().cycle())
                .enumerate()
                .map(|(i, (k, &d))| {
                    let k: Vec<&str> = k.iter().map(String::as_str).collect();
                    post(&i.to_string(), d, &k)
                })
                .collect();
            let t = keyword_histogram(&posts);
            prop_assert_eq!(t.total(), kws.iter().map(|k| k.len() as u64).sum::<u64>());
            for w in t.rows.windows(2) {
                prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
            }
            let qs: Vec<Question> = posts.iter().map(|p| question(&p.id, p.timestamp.format("%d").to_string().parse().unwrap())).collect();
            let rows = daily_timeseries(&posts, &qs);
            prop_assert_eq!(rows.iter().map(|r| r.posts).sum::<u64>(), posts.len() as u64);
            prop_assert_eq!(rows.iter().map(|r| r.questions).sum::<u64>(), qs.len() as u64);
            for w in rows.windows(2) {
                prop_assert_eq!(w[0].date.succ_opt().unwrap(), w[1].date);
            }
        }
    }
}
