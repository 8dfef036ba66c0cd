//! Trajectory-level evaluation statistics: Pass@k (exact rational unbiased
//! estimator and the early-stopped variant), bootstrap confidence intervals,
//! consumed-trajectory diagnostics, tool-matching rates, zero-call
//! accounting, self-consistency, and grouped breakdowns.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{BigInt, One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::EoTask;
use crate::judge::{Judge, JudgeError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid pass@k arguments: {0}")]
    InvalidArguments(String),
    #[error("no question results")]
    EmptyResults,
    #[error("question {0} has a zero reference call count")]
    InvalidReference(String),
    #[error(transparent)]
    Judge(#[from] JudgeError),
}

/// One generated rollout of a question, in generation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// Judge verdict on the final answer. Zero-call attempts are counted as
    /// failures regardless of this flag.
    pub correct: bool,
    pub zero_call: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    /// Canonical tool names in call order.
    pub tool_sequence: Vec<String>,
    pub call_count: u32,
    /// Calls whose observations were empty or errors.
    pub illegal_calls: u32,
}

impl AttemptRecord {
    pub fn is_success(&self) -> bool {
        self.correct && !self.zero_call
    }
}

/// Everything the metrics engine needs to know about one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub task_id: String,
    pub eo_task: EoTask,
    pub reference_answer: String,
    pub reference_tools: Vec<String>,
    /// Reference function-call count L (>= 1).
    pub reference_call_count: u32,
    /// Attempt order must be generation order; early stopping and consumed
    /// prefixes depend on it.
    pub attempts: Vec<AttemptRecord>,
}

// ---------------------------------------------------------------------
// pass@k

/// Unbiased estimator `1 - C(n-c, k) / C(n, k)` in exact rational
/// arithmetic (multiplicative form, no factorial overflow).
pub fn pass_at_k_rational(n: u64, c: u64, k: u64) -> Result<BigRational, MetricsError> {
    if c > n {
        return Err(MetricsError::InvalidArguments(format!("c={c} > n={n}")));
    }
    if k < 1 || k > n {
        return Err(MetricsError::InvalidArguments(format!(
            "k={k} outside 1..={n}"
        )));
    }
    let mut failure = BigRational::one();
    for i in 0..k {
        if n - c < i + 1 {
            failure = BigRational::zero();
            break;
        }
        failure *= BigRational::new(BigInt::from(n - c - i), BigInt::from(n - i));
    }
    Ok(BigRational::one() - failure)
}

pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, MetricsError> {
    Ok(pass_at_k_rational(n, c, k)?
        .to_f64()
        .expect("ratio fits in f64"))
}

/// Per-question success indicator under dynamic early stopping: the question
/// counts as solved for `k` iff any of its first `min(k, generated)` attempts
/// is a success.
pub fn early_stopped_indicator(result: &QuestionResult, k: u64) -> f64 {
    let upto = (k as usize).min(result.attempts.len());
    if result.attempts[..upto].iter().any(|a| a.is_success()) {
        1.0
    } else {
        0.0
    }
}

/// Dataset-level early-stopped Pass@k: mean of the per-question indicators.
pub fn pass_at_k_early_stopped(results: &[QuestionResult], k: u64) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyResults);
    }
    let sum: f64 = results.iter().map(|r| early_stopped_indicator(r, k)).sum();
    Ok(sum / results.len() as f64)
}

// ---------------------------------------------------------------------
// bootstrap

fn mix_seed(master: u64, index: u64) -> u64 {
    let mut x = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Percentile bootstrap interval over question-level resampling: `b` means
/// of resamples drawn with replacement, interpolated at the two percentile
/// ranks. Deterministic for a fixed seed; each resample derives its own RNG
/// from (seed, resample index) so the loop may be parallelized without
/// changing results.
pub fn bootstrap_ci(
    values: &[f64],
    b: u32,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyResults);
    }
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(MetricsError::InvalidArguments(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let n = values.len();
    let mut means = Vec::with_capacity(b as usize);
    for i in 0..b {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let mut sum = 0.0;
        for _ in 0..n {
            sum += values[rng.gen_range(0..n)];
        }
        means.push(sum / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite means"));
    let alpha = (1.0 - level) / 2.0;
    Ok((
        crate::datalake::quantile_sorted(&means, alpha),
        crate::datalake::quantile_sorted(&means, 1.0 - alpha),
    ))
}

// ---------------------------------------------------------------------
// consumed attempts and diagnostics

/// The attempts evaluated sequentially until the first success, inclusive;
/// all attempts when no success occurred.
pub fn consumed_attempts(result: &QuestionResult) -> &[AttemptRecord] {
    match result.attempts.iter().position(|a| a.is_success()) {
        Some(i) => &result.attempts[..=i],
        None => &result.attempts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolMatch {
    pub exact: bool,
    pub in_order: bool,
    pub any: bool,
}

/// Sequence alignment flags between a predicted and a reference tool path:
/// `exact` equality, `in_order` reference-as-subsequence, `any` multiset
/// coverage of the reference (duplicates must be covered by count).
pub fn tool_match(predicted: &[String], reference: &[String]) -> ToolMatch {
    let exact = predicted == reference;
    let mut it = predicted.iter();
    let in_order = reference
        .iter()
        .all(|want| it.by_ref().any(|have| have == want));
    let mut counts: BTreeMap<&str, i64> = BTreeMap::new();
    for p in predicted {
        *counts.entry(p.as_str()).or_default() += 1;
    }
    let any = reference.iter().all(|r| {
        let c = counts.entry(r.as_str()).or_default();
        *c -= 1;
        *c >= 0
    });
    ToolMatch {
        exact,
        in_order,
        any,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub tool_call_ratio: f64,
    pub illegal_rate: f64,
    pub tool_exact_rate: f64,
    pub tool_in_order_rate: f64,
    pub tool_any_rate: f64,
    pub zero_call_rate: f64,
}

fn mean(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    if count == 0 {
        return 0.0;
    }
    values.sum::<f64>() / count as f64
}

/// Execution diagnostics over consumed attempts. Each metric is averaged
/// over a question's consumed attempts first, then averaged across
/// questions with equal weight.
pub fn diagnostics(results: &[QuestionResult]) -> Result<Diagnostics, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyResults);
    }
    let mut per_question = Vec::with_capacity(results.len());
    for result in results {
        if result.reference_call_count == 0 {
            return Err(MetricsError::InvalidReference(result.task_id.clone()));
        }
        let consumed = consumed_attempts(result);
        let n = consumed.len();
        let ratio = mean(
            consumed
                .iter()
                .map(|a| a.call_count as f64 / result.reference_call_count as f64),
            n,
        );
        let illegal = mean(
            consumed.iter().map(|a| {
                if a.call_count == 0 {
                    0.0
                } else {
                    a.illegal_calls as f64 / a.call_count as f64
                }
            }),
            n,
        );
        let matches: Vec<ToolMatch> = consumed
            .iter()
            .map(|a| tool_match(&a.tool_sequence, &result.reference_tools))
            .collect();
        let flag = |f: fn(&ToolMatch) -> bool| {
            mean(
                matches.iter().map(|m| if f(m) { 1.0 } else { 0.0 }),
                n,
            )
        };
        let zero = mean(
            consumed.iter().map(|a| if a.zero_call { 1.0 } else { 0.0 }),
            n,
        );
        per_question.push(Diagnostics {
            tool_call_ratio: ratio,
            illegal_rate: illegal,
            tool_exact_rate: flag(|m| m.exact),
            tool_in_order_rate: flag(|m| m.in_order),
            tool_any_rate: flag(|m| m.any),
            zero_call_rate: zero,
        });
    }
    let n = per_question.len();
    Ok(Diagnostics {
        tool_call_ratio: mean(per_question.iter().map(|d| d.tool_call_ratio), n),
        illegal_rate: mean(per_question.iter().map(|d| d.illegal_rate), n),
        tool_exact_rate: mean(per_question.iter().map(|d| d.tool_exact_rate), n),
        tool_in_order_rate: mean(per_question.iter().map(|d| d.tool_in_order_rate), n),
        tool_any_rate: mean(per_question.iter().map(|d| d.tool_any_rate), n),
        zero_call_rate: mean(per_question.iter().map(|d| d.zero_call_rate), n),
    })
}

// ---------------------------------------------------------------------
// self-consistency

/// Correctness of the majority-voted answer over all generated attempts.
///
/// Answers are clustered by pairwise judge equivalence (transitive closure);
/// the representative of the largest cluster (earliest attempt wins ties) is
/// judged against the reference.
pub fn self_consistency(
    result: &QuestionResult,
    judge: &dyn Judge,
) -> Result<bool, MetricsError> {
    let answers: Vec<Option<&str>> = result
        .attempts
        .iter()
        .map(|a| a.answer.as_deref())
        .collect();
    if answers.is_empty() {
        return Ok(false);
    }
    let n = answers.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let same = match (answers[i], answers[j]) {
                (Some(a), Some(b)) => judge.judge(None, a, b)?.is_same_meaning,
                (None, None) => true,
                _ => false,
            };
            if same {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    let (lo, hi) = (ri.min(rj), ri.max(rj));
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        clusters.entry(root).or_default().push(i);
    }
    // largest cluster; ties go to the one whose earliest attempt is earliest
    let (_, members) = clusters
        .iter()
        .max_by(|(ra, a), (rb, b)| a.len().cmp(&b.len()).then(rb.cmp(ra)))
        .expect("non-empty");
    let representative = members[0];
    match answers[representative] {
        None => Ok(false),
        Some(answer) => Ok(judge
            .judge(None, &result.reference_answer, answer)?
            .is_same_meaning),
    }
}

// ---------------------------------------------------------------------
// report assembly

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassEstimator {
    /// Success iff any of the first `min(k, generated)` attempts succeeded
    /// (the dynamic-early-stopping protocol).
    FirstK,
    /// Unbiased `1 - C(n-c,k)/C(n,k)` per question; requires `n >= k`
    /// generated attempts for every question.
    Unbiased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub ks: Vec<u64>,
    pub estimator: PassEstimator,
    pub bootstrap_resamples: u32,
    pub confidence_level: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ks: vec![1, 2, 3],
            estimator: PassEstimator::FirstK,
            bootstrap_resamples: 1000,
            confidence_level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtK {
    pub k: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub question_count: usize,
    pub pass_at_k: Vec<PassAtK>,
    pub tool_call_ratio: f64,
    pub illegal_rate: f64,
    pub tool_exact_rate: f64,
    pub tool_in_order_rate: f64,
    pub tool_any_rate: f64,
    pub zero_call_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_consistency: Option<f64>,
}

/// Full evaluation report: overall metrics plus per-task-family and
/// per-reference-call-count breakdowns. Serialization is byte-deterministic
/// for a fixed input and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub estimator: PassEstimator,
    pub overall: MetricsBlock,
    pub by_eo_task: BTreeMap<String, MetricsBlock>,
    pub by_reference_calls: BTreeMap<String, MetricsBlock>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn pass_values(
    results: &[QuestionResult],
    k: u64,
    estimator: PassEstimator,
) -> Result<Vec<f64>, MetricsError> {
    match estimator {
        PassEstimator::FirstK => Ok(results
            .iter()
            .map(|r| early_stopped_indicator(r, k))
            .collect()),
        PassEstimator::Unbiased => results
            .iter()
            .map(|r| {
                let n = r.attempts.len() as u64;
                let c = r.attempts.iter().filter(|a| a.is_success()).count() as u64;
                pass_at_k(n, c, k)
            })
            .collect(),
    }
}

fn metrics_block(
    results: &[QuestionResult],
    config: &EvalConfig,
    judge: Option<&dyn Judge>,
    seed: u64,
) -> Result<MetricsBlock, MetricsError> {
    let diag = diagnostics(results)?;
    let mut pass_at_k = Vec::new();
    for (i, &k) in config.ks.iter().enumerate() {
        let values = pass_values(results, k, config.estimator)?;
        let estimate = values.iter().sum::<f64>() / values.len() as f64;
        let (ci_lo, ci_hi) = bootstrap_ci(
            &values,
            config.bootstrap_resamples,
            config.confidence_level,
            mix_seed(seed, i as u64),
        )?;
        pass_at_k.push(PassAtK {
            k,
            estimate,
            ci_lo,
            ci_hi,
        });
    }
    let self_consistency = match judge {
        None => None,
        Some(judge) => {
            let mut successes = 0usize;
            for result in results {
                if self_consistency(result, judge)? {
                    successes += 1;
                }
            }
            Some(successes as f64 / results.len() as f64)
        }
    };
    Ok(MetricsBlock {
        question_count: results.len(),
        pass_at_k,
        tool_call_ratio: diag.tool_call_ratio,
        illegal_rate: diag.illegal_rate,
        tool_exact_rate: diag.tool_exact_rate,
        tool_in_order_rate: diag.tool_in_order_rate,
        tool_any_rate: diag.tool_any_rate,
        zero_call_rate: diag.zero_call_rate,
        self_consistency,
    })
}

/// Reference-call-count buckets used for breakdowns.
pub fn l_bucket(reference_call_count: u32) -> &'static str {
    match reference_call_count {
        1 => "1",
        2 => "2",
        3 => "3",
        _ => "4+",
    }
}

/// Builds the full report. Pass a judge to include self-consistency (it
/// re-judges answer pairs, so the exact backend keeps this deterministic).
pub fn report(
    results: &[QuestionResult],
    config: &EvalConfig,
    judge: Option<&dyn Judge>,
) -> Result<EvalReport, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyResults);
    }
    let overall = metrics_block(results, config, judge, config.seed)?;
    let mut by_eo_task = BTreeMap::new();
    let mut task_groups: BTreeMap<String, Vec<QuestionResult>> = BTreeMap::new();
    let mut l_groups: BTreeMap<String, Vec<QuestionResult>> = BTreeMap::new();
    for result in results {
        task_groups
            .entry(result.eo_task.as_str().to_string())
            .or_default()
            .push(result.clone());
        l_groups
            .entry(l_bucket(result.reference_call_count).to_string())
            .or_default()
            .push(result.clone());
    }
    for (i, (name, group)) in task_groups.into_iter().enumerate() {
        by_eo_task.insert(
            name,
            metrics_block(&group, config, judge, mix_seed(config.seed, 1_000 + i as u64))?,
        );
    }
    let mut by_reference_calls = BTreeMap::new();
    for (i, (name, group)) in l_groups.into_iter().enumerate() {
        by_reference_calls.insert(
            name,
            metrics_block(&group, config, judge, mix_seed(config.seed, 2_000 + i as u64))?,
        );
    }
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        estimator: config.estimator,
        overall,
        by_eo_task,
        by_reference_calls,
    })
}

/// Aligned human-readable rendering of a report.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let header = format!(
        "{:<24} {:>5} {}{:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "group",
        "n",
        report
            .overall
            .pass_at_k
            .iter()
            .map(|p| format!("{:>8}", format!("P@{}", p.k)))
            .collect::<Vec<_>>()
            .join(" ")
            + " ",
        "tc-ratio",
        "illegal",
        "exact",
        "inorder",
        "any",
        "zerocall",
    );
    out.push_str(&header);
    let mut row = |name: &str, block: &MetricsBlock| {
        let passes = block
            .pass_at_k
            .iter()
            .map(|p| format!("{:>8.3}", p.estimate))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{:<24} {:>5} {} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}\n",
            name,
            block.question_count,
            passes,
            block.tool_call_ratio,
            block.illegal_rate,
            block.tool_exact_rate,
            block.tool_in_order_rate,
            block.tool_any_rate,
            block.zero_call_rate,
        ));
    };
    row("overall", &report.overall);
    for (name, block) in &report.by_eo_task {
        row(name, block);
    }
    for (name, block) in &report.by_reference_calls {
        row(&format!("L={name}"), block);
    }
    out
}

/// Per-question CSV export (one row per question).
pub fn question_csv(results: &[QuestionResult]) -> String {
    let mut out = String::from(
        "task_id,eo_task,reference_calls,attempts,consumed,first_success,zero_calls\n",
    );
    for r in results {
        let consumed = consumed_attempts(r);
        let first_success = r
            .attempts
            .iter()
            .position(|a| a.is_success())
            .map(|i| (i + 1).to_string())
            .unwrap_or_else(|| "".to_string());
        let zero = r.attempts.iter().filter(|a| a.zero_call).count();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.task_id,
            r.eo_task.as_str(),
            r.reference_call_count,
            r.attempts.len(),
            consumed.len(),
            first_success,
            zero,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::ExactJudge;

    fn attempt(correct: bool, calls: u32, illegal: u32, tools: &[&str]) -> AttemptRecord {
        AttemptRecord {
            correct,
            zero_call: false,
            answer: Some(if correct { "yes" } else { "no" }.to_string()),
            tool_sequence: tools.iter().map(|s| s.to_string()).collect(),
            call_count: calls,
            illegal_calls: illegal,
        }
    }

    fn question(id: &str, l: u32, attempts: Vec<AttemptRecord>) -> QuestionResult {
        QuestionResult {
            task_id: id.into(),
            eo_task: EoTask::ObjectCounting,
            reference_answer: "yes".into(),
            reference_tools: vec!["a".into(), "c".into()],
            reference_call_count: l,
            attempts,
        }
    }

    #[test]
    fn pass_at_k_boundaries_and_exact_value() {
        assert_eq!(pass_at_k(3, 0, 3).unwrap(), 0.0);
        assert_eq!(pass_at_k(3, 3, 1).unwrap(), 1.0);
        // 1 - C(6,3)/C(10,3) = 1 - 20/120
        let r = pass_at_k_rational(10, 4, 3).unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(5), BigInt::from(6)));
        assert!(matches!(pass_at_k(3, 4, 1), Err(MetricsError::InvalidArguments(_))));
        assert!(matches!(pass_at_k(3, 1, 4), Err(MetricsError::InvalidArguments(_))));
        assert!(matches!(pass_at_k(3, 1, 0), Err(MetricsError::InvalidArguments(_))));
    }

    #[test]
    fn pass_at_k_matches_subset_enumeration_small() {
        // oracle: enumerate all k-subsets of n attempts, count those hitting
        // at least one of the c successes (successes = first c indices)
        for n in 1..=8u64 {
            for c in 0..=n {
                for k in 1..=n {
                    let mut hits = 0u64;
                    let mut total = 0u64;
                    for mask in 0u32..(1 << n) {
                        if mask.count_ones() as u64 != k {
                            continue;
                        }
                        total += 1;
                        if (mask & ((1u32 << c) - 1)) != 0 {
                            hits += 1;
                        }
                    }
                    let oracle = BigRational::new(BigInt::from(hits), BigInt::from(total));
                    assert_eq!(pass_at_k_rational(n, c, k).unwrap(), oracle, "n={n} c={c} k={k}");
                }
            }
        }
    }

    #[test]
    fn pass_at_k_monotone_in_k_and_c() {
        for n in 1..=10u64 {
            for c in 0..=n {
                let mut prev = 0.0;
                for k in 1..=n {
                    let v = pass_at_k(n, c, k).unwrap();
                    assert!(v >= prev - 1e-15);
                    prev = v;
                }
                assert!((pass_at_k(n, c, 1).unwrap() - c as f64 / n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn early_stopping_indicator_counts_prefix_success() {
        let solved_first = question("q", 1, vec![attempt(true, 1, 0, &["a", "c"])]);
        assert_eq!(early_stopped_indicator(&solved_first, 3), 1.0);
        let all_wrong = question(
            "q",
            1,
            vec![
                attempt(false, 1, 0, &["a"]),
                attempt(false, 1, 0, &["a"]),
                attempt(false, 1, 0, &["a"]),
            ],
        );
        assert_eq!(early_stopped_indicator(&all_wrong, 3), 0.0);
        let late = question(
            "q",
            1,
            vec![
                attempt(false, 1, 0, &["a"]),
                attempt(false, 1, 0, &["a"]),
                attempt(true, 1, 0, &["a"]),
            ],
        );
        assert_eq!(early_stopped_indicator(&late, 2), 0.0);
        assert_eq!(early_stopped_indicator(&late, 3), 1.0);
    }

    #[test]
    fn zero_call_attempts_never_count_correct() {
        let mut a = attempt(true, 0, 0, &[]);
        a.zero_call = true;
        let q = question("q", 1, vec![a]);
        assert_eq!(early_stopped_indicator(&q, 1), 0.0);
        assert_eq!(consumed_attempts(&q).len(), 1);
    }

    #[test]
    fn consumed_prefix_rules() {
        let q = question(
            "q",
            1,
            vec![
                attempt(false, 1, 0, &["a"]),
                attempt(true, 1, 0, &["a"]),
                attempt(true, 1, 0, &["a"]),
            ],
        );
        assert_eq!(consumed_attempts(&q).len(), 2);
        let solved_first = question("q", 1, vec![attempt(true, 1, 0, &["a"])]);
        assert_eq!(consumed_attempts(&solved_first).len(), 1);
        let none = question("q", 1, vec![attempt(false, 1, 0, &["a"]); 3]);
        assert_eq!(consumed_attempts(&none).len(), 3);
    }

    #[test]
    fn tool_match_flags() {
        let seq = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let m = tool_match(&seq(&["a", "b", "c"]), &seq(&["a", "c"]));
        assert!(!m.exact && m.in_order && m.any);
        let m = tool_match(&seq(&["c", "a"]), &seq(&["a", "c"]));
        assert!(!m.exact && !m.in_order && m.any);
        let m = tool_match(&seq(&["a", "c"]), &seq(&["a", "c"]));
        assert!(m.exact && m.in_order && m.any);
        // multiset semantics: duplicated reference tools need duplicates
        let m = tool_match(&seq(&["a", "c"]), &seq(&["a", "a"]));
        assert!(!m.any);
        let m = tool_match(&seq(&["a", "x", "a"]), &seq(&["a", "a"]));
        assert!(m.in_order && m.any);
    }

    #[test]
    fn tool_match_implication_chain_randomized() {
        let mut state = 7u64;
        let mut next = |n: u64| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % n
        };
        let vocab = ["a", "b", "c", "d", "e"];
        for _ in 0..2000 {
            let plen = next(7) as usize;
            let rlen = 1 + next(5) as usize;
            let pred: Vec<String> =
                (0..plen).map(|_| vocab[next(5) as usize].to_string()).collect();
            let reference: Vec<String> =
                (0..rlen).map(|_| vocab[next(5) as usize].to_string()).collect();
            let m = tool_match(&pred, &reference);
            if m.exact {
                assert!(m.in_order);
            }
            if m.in_order {
                assert!(m.any, "pred={pred:?} ref={reference:?}");
            }
        }
    }

    #[test]
    fn diagnostics_worked_example() {
        // one question, consumed attempt with 2 bad observations of 4 calls
        let q = question("q", 2, vec![attempt(false, 4, 2, &["a", "b", "b", "c"])]);
        let d = diagnostics(&[q]).unwrap();
        assert_eq!(d.illegal_rate, 0.5);
        assert_eq!(d.tool_call_ratio, 2.0);
        assert_eq!(d.tool_any_rate, 1.0);
        assert_eq!(d.tool_exact_rate, 0.0);
    }

    #[test]
    fn diagnostics_match_scalar_loop_oracle() {
        let mut results = Vec::new();
        for i in 0..10u32 {
            let attempts = vec![
                attempt(false, 3 + i % 2, 1, &["a", "b", "c"]),
                attempt(i % 3 == 0, 2, 0, &["a", "c"]),
                attempt(false, 5, 5, &["b"]),
            ];
            results.push(question(&format!("q{i}"), 2, attempts));
        }
        let d = diagnostics(&results).unwrap();
        // straight-line re-implementation
        let mut ratio_sum = 0.0;
        let mut illegal_sum = 0.0;
        let mut any_sum = 0.0;
        for r in &results {
            let consumed = consumed_attempts(r);
            let mut ratio = 0.0;
            let mut illegal = 0.0;
            let mut any = 0.0;
            for a in consumed {
                ratio += a.call_count as f64 / r.reference_call_count as f64;
                illegal += a.illegal_calls as f64 / a.call_count.max(1) as f64;
                let mut counts = std::collections::HashMap::new();
                for t in &a.tool_sequence {
                    *counts.entry(t.clone()).or_insert(0i64) += 1;
                }
                let covered = r.reference_tools.iter().all(|t| {
                    let c = counts.entry(t.clone()).or_insert(0);
                    *c -= 1;
                    *c >= 0
                });
                if covered {
                    any += 1.0;
                }
            }
            ratio_sum += ratio / consumed.len() as f64;
            illegal_sum += illegal / consumed.len() as f64;
            any_sum += any / consumed.len() as f64;
        }
        let n = results.len() as f64;
        assert!((d.tool_call_ratio - ratio_sum / n).abs() < 1e-12);
        assert!((d.illegal_rate - illegal_sum / n).abs() < 1e-12);
        assert!((d.tool_any_rate - any_sum / n).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_interval_basics() {
        let constant = vec![0.7; 50];
        let (lo, hi) = bootstrap_ci(&constant, 200, 0.95, 1).unwrap();
        assert_eq!(lo, hi);
        assert!((lo - 0.7).abs() < 1e-12);
        let (a1, b1) = bootstrap_ci(&[0.0, 1.0, 1.0, 0.0], 500, 0.95, 42).unwrap();
        let (a2, b2) = bootstrap_ci(&[0.0, 1.0, 1.0, 0.0], 500, 0.95, 42).unwrap();
        assert_eq!((a1, b1), (a2, b2));
        assert!(bootstrap_ci(&[], 10, 0.95, 0).is_err());
    }

    #[test]
    fn bootstrap_matches_binomial_quantiles_for_balanced_sample() {
        let mut values = vec![0.0; 500];
        values.extend(vec![1.0; 500]);
        let (lo, hi) = bootstrap_ci(&values, 1000, 0.95, 7).unwrap();
        // binomial-quantile oracle: resample mean is Binomial(1000, 0.5)/1000
        let (exp_lo, exp_hi) = binomial_mean_quantiles(1000, 0.5, 0.025);
        assert!((lo - exp_lo).abs() < 0.01, "lo {lo} vs {exp_lo}");
        assert!((hi - exp_hi).abs() < 0.01, "hi {hi} vs {exp_hi}");
    }

    fn binomial_mean_quantiles(n: u64, p: f64, alpha: f64) -> (f64, f64) {
        let ln_fact = |m: u64| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
        let pmf = |k: u64| {
            (ln_fact(n) - ln_fact(k) - ln_fact(n - k)
                + k as f64 * p.ln()
                + (n - k) as f64 * (1.0 - p).ln())
            .exp()
        };
        let mut cdf = 0.0;
        let mut lo = None;
        let mut hi = None;
        for k in 0..=n {
            cdf += pmf(k);
            if lo.is_none() && cdf >= alpha {
                lo = Some(k as f64 / n as f64);
            }
            if hi.is_none() && cdf >= 1.0 - alpha {
                hi = Some(k as f64 / n as f64);
            }
        }
        (lo.unwrap(), hi.unwrap_or(1.0))
    }

    #[test]
    fn self_consistency_majority_vote() {
        let judge = ExactJudge;
        let mut q = question("q", 1, vec![]);
        q.reference_answer = "A".into();
        let mk = |answer: &str, correct: bool| AttemptRecord {
            correct,
            zero_call: false,
            answer: Some(answer.to_string()),
            tool_sequence: vec!["a".into()],
            call_count: 1,
            illegal_calls: 0,
        };
        q.attempts = vec![mk("A", true), mk("A", true), mk("B", false)];
        assert!(self_consistency(&q, &judge).unwrap());
        q.attempts = vec![mk("B", false), mk("C", false), mk("D", false)];
        assert!(!self_consistency(&q, &judge).unwrap());
        // tie between {A} and {B}: earliest cluster wins
        q.attempts = vec![mk("A", true), mk("B", false)];
        assert!(self_consistency(&q, &judge).unwrap());
    }

    #[test]
    fn report_groups_recombine_to_global_mean() {
        let mut results = Vec::new();
        for i in 0..12u32 {
            let l = 1 + (i % 4);
            let mut q = question(&format!("q{i}"), l, vec![attempt(i % 2 == 0, l, 0, &["a", "c"])]);
            q.eo_task = EoTask::ALL[(i % 6) as usize];
            results.push(q);
        }
        let config = EvalConfig {
            ks: vec![1],
            ..EvalConfig::default()
        };
        let judge = ExactJudge;
        let report = report(&results, &config, Some(&judge)).unwrap();
        let weighted: f64 = report
            .by_reference_calls
            .values()
            .map(|b| b.pass_at_k[0].estimate * b.question_count as f64)
            .sum::<f64>()
            / results.len() as f64;
        assert!((report.overall.pass_at_k[0].estimate - weighted).abs() < 1e-12);
        let csv = question_csv(&results);
        assert_eq!(csv.lines().count(), 13);
        let table = render_table(&report);
        assert!(table.contains("overall") && table.contains("L=4+"));
    }

    #[test]
    fn ci_contains_point_estimate() {
        let mut results = Vec::new();
        for i in 0..40u32 {
            results.push(question(
                &format!("q{i}"),
                1,
                vec![attempt(i % 3 != 0, 1, 0, &["a", "c"])],
            ));
        }
        let config = EvalConfig::default();
        let rep = report(&results, &config, None).unwrap();
        for p in &rep.overall.pass_at_k {
            assert!(p.ci_lo <= p.estimate + 1e-12 && p.estimate <= p.ci_hi + 1e-12);
        }
    }
}
