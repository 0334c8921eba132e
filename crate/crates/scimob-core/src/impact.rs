//! Citation-impact indicators by mobility class.
//!
//! Each paper's citation count is normalized by its field-year baseline
//! (NCS); MNCS is the arithmetic mean of NCS over a stratum; PPtop10% is
//! the share of papers in the top decile of their field-year cell,
//! ties-inclusive. Strata are author-publication pairs of eligible
//! researchers: a pair inherits the mobility label of its author's year,
//! so a multi-author paper may legitimately count in several strata.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{BaselineMap, FieldYearBaseline, PublicationRecord};
use crate::mobility::{MobilityEvent, MobilityLabel};
use crate::{CoreError, Result, Year};

/// Aggregate indicators for one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationIndicators {
    pub paper_count: u64,
    pub total_citations: u64,
    pub mean_citations: f64,
    pub mncs: f64,
    pub pp_top10: f64,
}

/// A paper's citations divided by its field-year mean.
///
/// A zero baseline mean with zero citations scores 0; a zero mean with
/// positive citations cannot happen when the baseline derives from the same
/// corpus and is rejected as inconsistent data. A baseline from a different
/// cell is a caller bug.
pub fn normalized_citation_score(
    record: &PublicationRecord,
    baseline: &FieldYearBaseline,
) -> Result<f64> {
    if record.field != baseline.field || record.year != baseline.year {
        return Err(CoreError::Contract(format!(
            "baseline cell ({}, {}) does not match paper cell ({}, {})",
            baseline.field, baseline.year, record.field, record.year
        )));
    }
    let mean = baseline.mean_citations();
    if mean == 0.0 {
        if record.citations == 0 {
            return Ok(0.0);
        }
        return Err(CoreError::Contract(format!(
            "paper {} has {} citations but its field-year baseline mean is 0",
            record.pub_id, record.citations
        )));
    }
    Ok(record.citations as f64 / mean)
}

/// Arithmetic mean of a non-empty NCS set. An empty stratum is reported as
/// an absent row upstream, never as zero.
pub fn mncs(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(CoreError::Empty("empty stratum".into()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Corpus-wide MNCS over all papers with a field label. With baselines
/// derived from the same corpus and no all-zero cells this is exactly 1.
pub fn corpus_mncs(records: &[PublicationRecord], baselines: &BaselineMap) -> Result<f64> {
    let mut scores = Vec::new();
    for record in records {
        if record.field.is_empty() {
            continue;
        }
        let baseline = baselines
            .get(&(record.field.clone(), record.year))
            .ok_or_else(|| {
                CoreError::Contract(format!(
                    "no baseline for cell ({}, {})",
                    record.field, record.year
                ))
            })?;
        scores.push(normalized_citation_score(record, baseline)?);
    }
    mncs(&scores)
}

/// Indicators per mobility label over author-publication pairs.
///
/// For every record and every listed author who is an eligible, classified
/// researcher, the pair joins the stratum of that author's year label.
/// Papers without a field label are outside the baselines and excluded;
/// author-years with no label at the chosen level (possible at city or
/// organization level when those fields are blank) contribute no pair.
pub fn indicators_by_mobility_class(
    records: &[PublicationRecord],
    events_by_author: &BTreeMap<String, Vec<MobilityEvent>>,
    baselines: &BaselineMap,
) -> Result<BTreeMap<MobilityLabel, CitationIndicators>> {
    let mut label_of: BTreeMap<(&str, Year), MobilityLabel> = BTreeMap::new();
    for (author, events) in events_by_author {
        for event in events {
            label_of.insert((author.as_str(), event.year), event.label);
        }
    }

    #[derive(Default)]
    struct Accumulator {
        scores: Vec<f64>,
        total_citations: u64,
        top10: u64,
    }
    let mut strata: BTreeMap<MobilityLabel, Accumulator> = BTreeMap::new();

    for record in records {
        if record.field.is_empty() {
            continue;
        }
        let cell = (record.field.clone(), record.year);
        let mut cached: Option<(f64, bool)> = None;
        for entry in &record.author_entries {
            let Some(label) = label_of.get(&(entry.author_id.as_str(), record.year)) else {
                continue;
            };
            let (ncs, is_top) = match cached {
                Some(pair) => pair,
                None => {
                    let baseline = baselines.get(&cell).ok_or_else(|| {
                        CoreError::Contract(format!(
                            "no baseline for cell ({}, {})",
                            record.field, record.year
                        ))
                    })?;
                    let pair = (
                        normalized_citation_score(record, baseline)?,
                        baseline.is_top10(record.citations),
                    );
                    cached = Some(pair);
                    pair
                }
            };
            let acc = strata.entry(*label).or_default();
            acc.scores.push(ncs);
            acc.total_citations += record.citations;
            acc.top10 += is_top as u64;
        }
    }

    let mut result = BTreeMap::new();
    for (label, acc) in strata {
        let count = acc.scores.len() as u64;
        result.insert(
            label,
            CitationIndicators {
                paper_count: count,
                total_citations: acc.total_citations,
                mean_citations: acc.total_citations as f64 / count as f64,
                mncs: mncs(&acc.scores)?,
                pp_top10: acc.top10 as f64 / count as f64,
            },
        );
    }
    Ok(result)
}

/// Indicator table export, one row per present stratum, floats to four
/// decimals.
pub fn indicators_to_csv(strata: &BTreeMap<MobilityLabel, CitationIndicators>) -> String {
    let mut out =
        String::from("label,paper_count,total_citations,mean_citations,mncs,pp_top10\n");
    for label in MobilityLabel::ALL {
        if let Some(ind) = strata.get(&label) {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4}\n",
                label,
                ind.paper_count,
                ind.total_citations,
                ind.mean_citations,
                ind.mncs,
                ind.pp_top10
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        build_author_histories, compute_field_year_baselines, parse_publication_line,
    };
    use crate::mobility::{classify_all, ClassifyOptions};

    fn record(pub_id: &str, year: Year, field: &str, citations: u64, authors: &[(&str, &[&str])]) -> PublicationRecord {
        let author_json: Vec<String> = authors
            .iter()
            .map(|(id, countries)| {
                let affs: Vec<String> = countries
                    .iter()
                    .map(|c| format!(r#"{{"org":"","city":"","country":"{c}"}}"#))
                    .collect();
                format!(r#"{{"author_id":"{id}","affiliations":[{}]}}"#, affs.join(","))
            })
            .collect();
        let line = format!(
            r#"{{"pub_id":"{pub_id}","year":{year},"field":"{field}","citations":{citations},"authors":[{}]}}"#,
            author_json.join(",")
        );
        parse_publication_line(&line, 1).unwrap()
    }

    fn baseline(field: &str, year: Year, total: u64, count: u64) -> FieldYearBaseline {
        FieldYearBaseline {
            field: field.to_string(),
            year,
            total_citations: total,
            paper_count: count,
            top10_threshold: u64::MAX,
        }
    }

    #[test]
    fn ncs_is_citations_over_cell_mean() {
        let paper = record("p1", 2004, "BIO", 10, &[("a", &["NL"])]);
        assert_eq!(
            normalized_citation_score(&paper, &baseline("BIO", 2004, 50, 10)).unwrap(),
            2.0
        );
        let zero = record("p2", 2004, "BIO", 0, &[("a", &["NL"])]);
        assert_eq!(
            normalized_citation_score(&zero, &baseline("BIO", 2004, 50, 10)).unwrap(),
            0.0
        );
        let par = record("p3", 2004, "BIO", 3, &[("a", &["NL"])]);
        assert_eq!(
            normalized_citation_score(&par, &baseline("BIO", 2004, 9, 3)).unwrap(),
            1.0
        );
    }

    #[test]
    fn ncs_zero_mean_cases() {
        let silent = record("p1", 2004, "BIO", 0, &[("a", &["NL"])]);
        assert_eq!(
            normalized_citation_score(&silent, &baseline("BIO", 2004, 0, 5)).unwrap(),
            0.0
        );
        let cited = record("p2", 2004, "BIO", 3, &[("a", &["NL"])]);
        assert!(matches!(
            normalized_citation_score(&cited, &baseline("BIO", 2004, 0, 5)),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn ncs_rejects_mismatched_cell() {
        let paper = record("p1", 2004, "BIO", 1, &[("a", &["NL"])]);
        assert!(matches!(
            normalized_citation_score(&paper, &baseline("PHYS", 2004, 5, 1)),
            Err(CoreError::Contract(_))
        ));
        assert!(matches!(
            normalized_citation_score(&paper, &baseline("BIO", 2005, 5, 1)),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn mncs_mean_and_empty_stratum() {
        assert_eq!(mncs(&[2.0, 0.0]).unwrap(), 1.0);
        assert_eq!(mncs(&[1.0]).unwrap(), 1.0);
        assert!(matches!(mncs(&[]), Err(CoreError::Empty(_))));
    }

    fn pipeline(
        records: &[PublicationRecord],
    ) -> (BTreeMap<String, Vec<MobilityEvent>>, BaselineMap) {
        let histories = build_author_histories(records);
        let events = classify_all(&histories, ClassifyOptions::default());
        let baselines = compute_field_year_baselines(records);
        (events, baselines)
    }

    #[test]
    fn corpus_identity_with_self_derived_baselines() {
        let records = vec![
            record("p1", 2003, "BIO", 4, &[("a", &["NL"])]),
            record("p2", 2003, "BIO", 0, &[("b", &["US"])]),
            record("p3", 2003, "PHYS", 7, &[("a", &["NL"])]),
            record("p4", 2004, "BIO", 2, &[("b", &["US"])]),
            record("p5", 2004, "BIO", 6, &[("c", &["ES"])]),
            record("p6", 2004, "PHYS", 1, &[("c", &["ES"])]),
        ];
        let baselines = compute_field_year_baselines(&records);
        let value = corpus_mncs(&records, &baselines).unwrap();
        assert!((value - 1.0).abs() < 1e-9, "corpus MNCS {value}");
    }

    #[test]
    fn all_non_mobile_corpus_has_single_stratum() {
        let records = vec![
            record("p1", 2003, "BIO", 4, &[("a", &["NL"])]),
            record("p2", 2004, "BIO", 2, &[("a", &["NL"])]),
        ];
        let (events, baselines) = pipeline(&records);
        let strata = indicators_by_mobility_class(&records, &events, &baselines).unwrap();
        assert_eq!(strata.len(), 1);
        assert!(strata.contains_key(&MobilityLabel::NonMobile));
        assert_eq!(strata[&MobilityLabel::NonMobile].paper_count, 2);
    }

    #[test]
    fn singleton_mobile_stratum_mncs() {
        // author a: NL in 2003 (1 paper, 2 cits), US in 2004 (1 paper, 4 cits).
        // 2004 BIO cell = {p2: 4, p3: 0} → mean 2 → NCS(p2) = 2.0
        let records = vec![
            record("p1", 2003, "BIO", 2, &[("a", &["NL"])]),
            record("p2", 2004, "BIO", 4, &[("a", &["US"])]),
            record("p3", 2004, "BIO", 0, &[("x", &["FR"])]),
        ];
        let (events, baselines) = pipeline(&records);
        let strata = indicators_by_mobility_class(&records, &events, &baselines).unwrap();
        let mobile = &strata[&MobilityLabel::Mobile];
        assert_eq!(mobile.paper_count, 1);
        assert!((mobile.mncs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pairs_count_per_author_not_per_paper() {
        // shared paper in 2004: author a is MOBILE that year, author b is not
        let records = vec![
            record("p1", 2003, "BIO", 0, &[("a", &["NL"]), ("b", &["US"])]),
            record("p2", 2004, "BIO", 3, &[("a", &["FR"]), ("b", &["US"])]),
        ];
        let (events, baselines) = pipeline(&records);
        let strata = indicators_by_mobility_class(&records, &events, &baselines).unwrap();
        assert_eq!(strata[&MobilityLabel::Mobile].paper_count, 1);
        assert_eq!(strata[&MobilityLabel::NonMobile].paper_count, 3);
        let total_pairs: u64 = strata.values().map(|s| s.paper_count).sum();
        // p1: 2 pairs; p2: 2 pairs
        assert_eq!(total_pairs, 4);
    }

    #[test]
    fn stratum_mncs_is_input_order_invariant() {
        let mut records = vec![
            record("p1", 2003, "BIO", 2, &[("a", &["NL"])]),
            record("p2", 2004, "BIO", 4, &[("a", &["US"])]),
            record("p3", 2004, "BIO", 1, &[("b", &["FR"])]),
            record("p4", 2003, "PHYS", 9, &[("b", &["FR"])]),
        ];
        let (events, baselines) = pipeline(&records);
        let forward = indicators_by_mobility_class(&records, &events, &baselines).unwrap();
        records.reverse();
        let (events_r, baselines_r) = pipeline(&records);
        let reversed = indicators_by_mobility_class(&records, &events_r, &baselines_r).unwrap();
        assert_eq!(forward.keys().collect::<Vec<_>>(), reversed.keys().collect::<Vec<_>>());
        for (label, ind) in &forward {
            assert_eq!(ind.mncs, reversed[label].mncs);
            assert_eq!(ind.paper_count, reversed[label].paper_count);
        }
    }

    #[test]
    fn top10_share_uses_tie_inclusive_rule() {
        // 2004 BIO cell: citations 0..9 over ten single-author papers; only
        // the 9-citation paper is top decile
        let mut records: Vec<PublicationRecord> = (0..10)
            .map(|i| {
                record(
                    &format!("p{i}"),
                    2004,
                    "BIO",
                    i,
                    &[(&format!("a{i}") as &str, &["NL"] as &[&str])],
                )
            })
            .collect();
        // make each author eligible with a second, earlier paper
        for i in 0..10 {
            records.push(record(
                &format!("q{i}"),
                2003,
                "BIO",
                0,
                &[(&format!("a{i}") as &str, &["NL"] as &[&str])],
            ));
        }
        let (events, baselines) = pipeline(&records);
        let strata = indicators_by_mobility_class(&records, &events, &baselines).unwrap();
        let non_mobile = &strata[&MobilityLabel::NonMobile];
        assert_eq!(non_mobile.paper_count, 20);
        // exactly one of the twenty pairs (the 9-citation 2004 paper) is top:
        // the 2003 cell is all-tied at 0, so all ten 2003 papers are top too
        let top_2004 = 1.0;
        let top_2003 = 10.0;
        assert!((non_mobile.pp_top10 - (top_2004 + top_2003) / 20.0).abs() < 1e-12);
    }

    #[test]
    fn csv_lists_strata_in_label_order() {
        let records = vec![
            record("p1", 2003, "BIO", 2, &[("a", &["NL"])]),
            record("p2", 2004, "BIO", 4, &[("a", &["US"])]),
        ];
        let (events, baselines) = pipeline(&records);
        let strata = indicators_by_mobility_class(&records, &events, &baselines).unwrap();
        let csv = indicators_to_csv(&strata);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "label,paper_count,total_citations,mean_citations,mncs,pp_top10");
        assert!(lines[1].starts_with("NON_MOBILE,1,2,"));
        assert!(lines[2].starts_with("MOBILE,1,4,"));
    }
}
