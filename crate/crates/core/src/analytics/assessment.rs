use serde::{Deserialize, Serialize};

use crate::ingest::TestResult;

use super::AnalyticsError;

/// Pre/post test comparison. `relative_gain` is the fraction of the
/// available headroom gained, `None` when the pretest was already at max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestComparison {
    pub pre_score: f64,
    pub post_score: f64,
    pub max_score: f64,
    pub delta: f64,
    pub relative_gain: Option<f64>,
}

pub fn compare_tests(pre: &TestResult, post: &TestResult) -> Result<TestComparison, AnalyticsError> {
    if pre.max_score != post.max_score {
        return Err(AnalyticsError::MismatchedScales { pre: pre.max_score, post: post.max_score });
    }
    let max_score = pre.max_score;
    let delta = post.score - pre.score;
    let relative_gain = (max_score > pre.score).then(|| delta / (max_score - pre.score));
    Ok(TestComparison { pre_score: pre.score, post_score: post.score, max_score, delta, relative_gain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TestKind;

    fn t(kind: TestKind, score: f64, max: f64) -> TestResult {
        TestResult::new(kind, score, max, None).unwrap()
    }

    #[test]
    fn gain_over_headroom() {
        let c = compare_tests(&t(TestKind::Pretest, 40.0, 100.0), &t(TestKind::Posttest, 70.0, 100.0)).unwrap();
        assert_eq!((c.delta, c.relative_gain), (30.0, Some(0.5)));
    }

    #[test]
    fn no_change() {
        let c = compare_tests(&t(TestKind::Pretest, 55.0, 100.0), &t(TestKind::Posttest, 55.0, 100.0)).unwrap();
        assert_eq!((c.delta, c.relative_gain), (0.0, Some(0.0)));
    }

    #[test]
    fn pretest_at_max() {
        let c = compare_tests(&t(TestKind::Pretest, 100.0, 100.0), &t(TestKind::Posttest, 90.0, 100.0)).unwrap();
        assert_eq!((c.delta, c.relative_gain), (-10.0, None));
        assert_eq!(serde_json::to_value(&c).unwrap()["relative_gain"], serde_json::Value::Null);
    }

    #[test]
    fn mismatched_scales() {
        assert!(matches!(
            compare_tests(&t(TestKind::Pretest, 4.0, 10.0), &t(TestKind::Posttest, 70.0, 100.0)),
            Err(AnalyticsError::MismatchedScales { .. })
        ));
    }
}
