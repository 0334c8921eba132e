use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PublicationRecord;
use crate::Year;

/// Citation reference values for one (field, year) cell, computed over the
/// whole ingested corpus.
///
/// The mean is kept as an exact sum/count pair. `top10_threshold` is the
/// smallest citation count in the cell for which strictly fewer than 10% of
/// the cell's papers are cited more often; the ties-inclusive top-10% rule
/// reduces to `citations >= top10_threshold`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldYearBaseline {
    pub field: String,
    pub year: Year,
    pub total_citations: u64,
    pub paper_count: u64,
    pub top10_threshold: u64,
}

impl FieldYearBaseline {
    pub fn mean_citations(&self) -> f64 {
        self.total_citations as f64 / self.paper_count as f64
    }

    /// Ties-inclusive top-10% rule: true iff the fraction of cell papers
    /// with strictly more citations is below 0.10.
    pub fn is_top10(&self, citations: u64) -> bool {
        citations >= self.top10_threshold
    }
}

pub type BaselineMap = BTreeMap<(String, Year), FieldYearBaseline>;

/// One baseline per (field, year) cell present in the corpus. Records with
/// an empty field label carry no baseline and are skipped.
pub fn compute_field_year_baselines(records: &[PublicationRecord]) -> BaselineMap {
    let mut cells: BTreeMap<(String, Year), Vec<u64>> = BTreeMap::new();
    for record in records {
        if record.field.is_empty() {
            continue;
        }
        cells
            .entry((record.field.clone(), record.year))
            .or_default()
            .push(record.citations);
    }

    cells
        .into_iter()
        .map(|((field, year), mut citations)| {
            citations.sort_unstable();
            let n = citations.len() as u64;
            let total: u64 = citations.iter().sum();
            // Smallest cell value v with 10 * |{x > v}| < n. The maximum
            // always qualifies, so the scan cannot fall through.
            let mut threshold = *citations.last().expect("cell is non-empty");
            for (idx, &value) in citations.iter().enumerate() {
                if idx + 1 < citations.len() && citations[idx + 1] == value {
                    continue; // only the last occurrence gives the right count
                }
                let greater = n - (idx as u64 + 1);
                if 10 * greater < n {
                    threshold = value;
                    break;
                }
            }
            let baseline = FieldYearBaseline {
                field: field.clone(),
                year,
                total_citations: total,
                paper_count: n,
                top10_threshold: threshold,
            };
            ((field, year), baseline)
        })
        .collect()
}

/// Delimited export of a baseline map (mean to 6 decimal places).
pub fn baselines_to_csv(baselines: &BaselineMap) -> String {
    let mut out = String::from("field,year,paper_count,mean_citations,top10_threshold\n");
    for baseline in baselines.values() {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            baseline.field,
            baseline.year,
            baseline.paper_count,
            baseline.mean_citations(),
            baseline.top10_threshold
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_publication_line;

    fn rec(pub_id: &str, year: Year, field: &str, citations: u64) -> PublicationRecord {
        let line = format!(
            r#"{{"pub_id":"{pub_id}","year":{year},"field":"{field}","citations":{citations},"authors":[]}}"#
        );
        parse_publication_line(&line, 1).unwrap()
    }

    // Brute-force evaluation of the strictly-greater-fraction rule, kept
    // independent of the threshold construction.
    fn oracle_is_top10(cell: &[u64], citations: u64) -> bool {
        let greater = cell.iter().filter(|&&c| c > citations).count();
        (greater as f64) / (cell.len() as f64) < 0.10
    }

    #[test]
    fn mean_of_two_papers() {
        let records = vec![rec("p1", 2004, "f", 0), rec("p2", 2004, "f", 10)];
        let baselines = compute_field_year_baselines(&records);
        let b = &baselines[&("f".to_string(), 2004)];
        assert_eq!(b.paper_count, 2);
        assert_eq!(b.mean_citations(), 5.0);
    }

    #[test]
    fn single_paper_cell() {
        let baselines = compute_field_year_baselines(&[rec("p1", 2004, "f", 7)]);
        let b = &baselines[&("f".to_string(), 2004)];
        assert_eq!(b.mean_citations(), 7.0);
        assert!(b.is_top10(7));
    }

    #[test]
    fn all_zero_cell_has_zero_mean() {
        let records = vec![rec("p1", 2004, "f", 0), rec("p2", 2004, "f", 0)];
        let baselines = compute_field_year_baselines(&records);
        let b = &baselines[&("f".to_string(), 2004)];
        assert_eq!(b.mean_citations(), 0.0);
        // all papers tied: every paper is top-10% under the ties rule
        assert!(b.is_top10(0));
    }

    #[test]
    fn threshold_matches_bruteforce_on_ten_paper_cell() {
        let cell: Vec<u64> = (0..10).collect();
        let records: Vec<PublicationRecord> = cell
            .iter()
            .enumerate()
            .map(|(i, &c)| rec(&format!("p{i}"), 2004, "f", c))
            .collect();
        let baselines = compute_field_year_baselines(&records);
        let b = &baselines[&("f".to_string(), 2004)];
        for &c in &cell {
            assert_eq!(
                b.is_top10(c),
                oracle_is_top10(&cell, c),
                "citation count {c}"
            );
        }
        assert!(b.is_top10(9));
        assert!(!b.is_top10(8));
    }

    #[test]
    fn threshold_matches_bruteforce_with_ties() {
        let cells: Vec<Vec<u64>> = vec![
            vec![5, 5, 5, 5],
            vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 9],
            vec![1, 2, 2, 2, 3, 3, 10, 10, 10, 10],
            vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19],
            vec![3],
        ];
        for cell in cells {
            let records: Vec<PublicationRecord> = cell
                .iter()
                .enumerate()
                .map(|(i, &c)| rec(&format!("p{i}"), 2004, "f", c))
                .collect();
            let baselines = compute_field_year_baselines(&records);
            let b = &baselines[&("f".to_string(), 2004)];
            for probe in 0..=21u64 {
                assert_eq!(
                    b.is_top10(probe),
                    oracle_is_top10(&cell, probe),
                    "cell {cell:?} probe {probe}"
                );
            }
        }
    }

    #[test]
    fn paper_counts_sum_to_records_with_field() {
        let records = vec![
            rec("p1", 2004, "f", 1),
            rec("p2", 2004, "g", 2),
            rec("p3", 2005, "f", 3),
            rec("p4", 2005, "", 4), // no field -> no baseline
        ];
        let baselines = compute_field_year_baselines(&records);
        let total: u64 = baselines.values().map(|b| b.paper_count).sum();
        assert_eq!(total, 3);
    }
}
