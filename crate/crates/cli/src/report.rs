//! Aggregation over streams of JSON result records.

use serde::Serialize;
use serde_json::Value;

use lindqg::Rational;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub kind: &'static str,
    pub records: u64,
    pub with_ratio: u64,
    pub violations: u64,
    pub max_ratio: Option<Rational>,
    /// Position (0-based) of the first record attaining `max_ratio`.
    pub max_ratio_at: Option<u64>,
    pub max_ratio_witness: Option<Value>,
}

fn ratio_of(record: &Value) -> Option<Rational> {
    record.get("ratio")?.as_str()?.parse().ok()
}

fn is_violation(record: &Value) -> bool {
    record.get("all_hold") == Some(&Value::Bool(false))
        || record.get("holds") == Some(&Value::Bool(false))
        || record.get("kind").and_then(Value::as_str) == Some("failure")
}

/// Counts records, flags violations, and keeps the record with the largest
/// `"ratio"` field (first occurrence on ties). The result depends only on the
/// sequence of records.
pub fn report_summary<'a, I: IntoIterator<Item = &'a Value>>(records: I) -> Summary {
    let mut s = Summary { kind: "summary", ..Summary::default() };
    for (pos, record) in records.into_iter().enumerate() {
        s.records += 1;
        if is_violation(record) {
            s.violations += 1;
        }
        if let Some(r) = ratio_of(record) {
            s.with_ratio += 1;
            if s.max_ratio.as_ref().map_or(true, |m| r > *m) {
                s.max_ratio = Some(r);
                s.max_ratio_at = Some(pos as u64);
                s.max_ratio_witness = Some(record.clone());
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_stream() {
        let s = report_summary(&[]);
        assert_eq!(s.records, 0);
        assert_eq!(s.with_ratio, 0);
        assert_eq!(s.violations, 0);
        assert!(s.max_ratio.is_none());
    }

    #[test]
    fn max_ratio_first_on_ties() {
        let recs = vec![
            json!({"ratio": "1/2"}),
            json!({"ratio": "3/2", "id": 1}),
            json!({"other": 1}),
            json!({"ratio": "3/2", "id": 2}),
            json!({"all_hold": false}),
        ];
        let s = report_summary(&recs);
        assert_eq!(s.records, 5);
        assert_eq!(s.with_ratio, 3);
        assert_eq!(s.violations, 1);
        assert_eq!(s.max_ratio, Some(Rational::new(3, 2)));
        assert_eq!(s.max_ratio_at, Some(1));
        assert_eq!(s.max_ratio_witness.unwrap()["id"], 1);
    }
}
