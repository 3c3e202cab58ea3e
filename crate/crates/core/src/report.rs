//! Deterministic JSON reports: fixed field order, sorted distributions, and
//! no timestamps, so identical inputs serialize to identical bytes.

use serde::Serialize;

use crate::analytic::AnalyticPrediction;
use crate::bits::BitString;
use crate::database::{DatabaseTable, UserQuery};
use crate::error::Result;
use crate::pipeline::{RunConfig, RunOutcome};

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// What produced this report: "recommend", "reproduce-one",
    /// "reproduce-two", or "analytic".
    pub source: String,
    pub query: String,
    pub config: ConfigEcho,
    pub table_digest: String,
    pub stages: Vec<StageReport>,
    pub c0: C0Report,
    pub recommended: Vec<DistEntry>,
    pub analytic: AnalyticReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub shots: u64,
    pub max_attempts: u32,
    pub exact: bool,
    pub marked_features: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u32>,
    pub auto_iterations: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub name: String,
    pub distribution: Vec<DistEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistEntry {
    pub id: String,
    pub feature: String,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct C0Report {
    pub successes: u64,
    pub failures: u64,
    pub exhausted_shots: u64,
    pub empirical_p0: f64,
    pub expected_p0: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticReport {
    pub p_c0_zero: f64,
    pub expected_attempts: f64,
    /// Post-selected scoring distribution, ascending by id.
    pub conditional_knn: Vec<DistEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_grover: Option<Vec<DistEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<f64>>,
    pub marked_ids: Vec<String>,
    pub g: usize,
}

fn entries_by_id(
    table: &DatabaseTable,
    probs: impl Fn(&BitString) -> f64,
) -> Vec<DistEntry> {
    let mut records: Vec<_> = table.records().iter().collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    records
        .into_iter()
        .map(|rec| DistEntry {
            id: rec.id.to_string(),
            feature: rec.feature.to_string(),
            p: probs(&rec.id),
        })
        .collect()
}

fn config_echo(config: &RunConfig, analytic: &AnalyticPrediction) -> ConfigEcho {
    let resolved = analytic.resolved.as_ref();
    ConfigEcho {
        seed: config.seed,
        shots: config.shots,
        max_attempts: config.max_attempts,
        exact: config.exact,
        marked_features: resolved
            .map(|r| r.marked_features.iter().map(|f| f.to_string()).collect())
            .unwrap_or_default(),
        iterations: resolved.map(|r| r.iterations),
        auto_iterations: resolved.map(|r| r.auto_iterations).unwrap_or(false),
    }
}

fn analytic_report(table: &DatabaseTable, analytic: &AnalyticPrediction) -> AnalyticReport {
    let resolved = analytic.resolved.as_ref();
    AnalyticReport {
        p_c0_zero: analytic.p_c0_zero,
        expected_attempts: analytic.expected_attempts,
        conditional_knn: entries_by_id(table, |id| analytic.conditional_knn[id]),
        post_grover: analytic
            .post_grover
            .as_ref()
            .map(|post| entries_by_id(table, |id| post[id])),
        trajectory: analytic.trajectory.clone(),
        marked_ids: resolved
            .map(|r| r.marked_ids.iter().map(|i| i.to_string()).collect())
            .unwrap_or_default(),
        g: resolved.map(|r| r.g).unwrap_or(0),
    }
}

/// Report for a completed pipeline run.
pub fn run_report(
    source: &str,
    table: &DatabaseTable,
    query: &UserQuery,
    config: &RunConfig,
    outcome: &RunOutcome,
) -> Report {
    Report {
        source: source.to_string(),
        query: query.feature.to_string(),
        config: config_echo(config, &outcome.analytic),
        table_digest: outcome.table_digest.clone(),
        stages: outcome
            .stages
            .iter()
            .map(|s| StageReport {
                name: s.name.to_string(),
                distribution: s
                    .distribution
                    .iter()
                    .map(|(id, feature, p)| DistEntry {
                        id: id.to_string(),
                        feature: feature.to_string(),
                        p: *p,
                    })
                    .collect(),
                trajectory: s.trajectory.clone(),
            })
            .collect(),
        c0: C0Report {
            successes: outcome.c0.successes,
            failures: outcome.c0.failures,
            exhausted_shots: outcome.c0.exhausted_shots,
            empirical_p0: outcome.c0.empirical_p0,
            expected_p0: outcome.c0.expected_p0,
        },
        recommended: outcome
            .recommended
            .iter()
            .map(|(id, feature, p)| DistEntry {
                id: id.to_string(),
                feature: feature.to_string(),
                p: *p,
            })
            .collect(),
        analytic: analytic_report(table, &outcome.analytic),
        p_max: outcome.analytic.p_max,
    }
}

/// Report for a closed-form prediction alone (nothing simulated or sampled).
pub fn predict_report(
    table: &DatabaseTable,
    query: &UserQuery,
    prediction: &AnalyticPrediction,
) -> Report {
    let final_probs: &std::collections::BTreeMap<BitString, f64> = prediction
        .post_grover
        .as_ref()
        .unwrap_or(&prediction.conditional_knn);
    let mut recommended = entries_by_id(table, |id| final_probs[id]);
    recommended.sort_by(|a, b| {
        b.p.partial_cmp(&a.p)
            .expect("finite probabilities")
            .then_with(|| a.id.cmp(&b.id))
    });
    let n = table.len() as f64;
    let mut stages = vec![
        StageReport {
            name: "post_init".into(),
            distribution: entries_by_id(table, |_| 1.0 / n),
            trajectory: None,
        },
        StageReport {
            name: "post_knn".into(),
            distribution: entries_by_id(table, |id| prediction.conditional_knn[id]),
            trajectory: None,
        },
    ];
    if let Some(post) = &prediction.post_grover {
        stages.push(StageReport {
            name: "post_grover".into(),
            distribution: entries_by_id(table, |id| post[id]),
            trajectory: prediction.trajectory.clone(),
        });
    }
    let config = RunConfig::default();
    Report {
        source: "analytic".into(),
        query: query.feature.to_string(),
        config: ConfigEcho {
            shots: 0,
            ..config_echo(&config, prediction)
        },
        table_digest: table.digest(),
        stages,
        c0: C0Report {
            successes: 0,
            failures: 0,
            exhausted_shots: 0,
            empirical_p0: prediction.p_c0_zero,
            expected_p0: prediction.p_c0_zero,
        },
        recommended,
        analytic: analytic_report(table, prediction),
        p_max: prediction.p_max,
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| crate::error::Error::Config(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::predict;
    use crate::database::example_table;
    use crate::grover::AmplificationPlan;
    use crate::pipeline::run;

    #[test]
    fn run_reports_serialize_identically_for_identical_runs() {
        let table = example_table();
        let query = UserQuery::parse("101011").unwrap();
        let config = RunConfig {
            seed: 3,
            shots: 64,
            exact: false,
            amplification: Some(AmplificationPlan::default()),
            ..RunConfig::default()
        };
        let a = run(&table, &query, &config).unwrap();
        let b = run(&table, &query, &config).unwrap();
        let ja = to_json_string(&run_report("recommend", &table, &query, &config, &a)).unwrap();
        let jb = to_json_string(&run_report("recommend", &table, &query, &config, &b)).unwrap();
        assert_eq!(ja, jb);
        assert!(ja.ends_with('\n'));
        assert!(ja.contains("\"source\": \"recommend\""));
        assert!(ja.contains("\"post_knn\""));
        assert!(ja.contains("\"post_grover\""));
    }

    #[test]
    fn predict_report_ranks_by_probability() {
        let table = example_table();
        let query = UserQuery::parse("101011").unwrap();
        let plan = AmplificationPlan::default();
        let prediction = predict(&table, &query, Some(&plan)).unwrap();
        let report = predict_report(&table, &query, &prediction);
        assert_eq!(report.source, "analytic");
        assert_eq!(report.c0.successes, 0);
        assert_eq!(report.recommended[0].id, "1010");
        for pair in report.recommended.windows(2) {
            assert!(pair[0].p >= pair[1].p);
        }
        assert_eq!(report.config.marked_features, vec!["101011".to_string()]);
        assert_eq!(report.config.iterations, Some(3));
        assert!(report.config.auto_iterations);
        assert_eq!(report.analytic.g, 1);
        assert!(report.p_max.is_some());
    }

    #[test]
    fn reports_without_a_plan_omit_amplification_sections() {
        let table = example_table();
        let query = UserQuery::parse("101011").unwrap();
        let prediction = predict(&table, &query, None).unwrap();
        let report = predict_report(&table, &query, &prediction);
        assert_eq!(report.stages.len(), 2);
        assert!(report.p_max.is_none());
        assert!(report.analytic.post_grover.is_none());
        let json = to_json_string(&report).unwrap();
        assert!(!json.contains("post_grover"));
        assert!(!json.contains("\"p_max\""));
    }
}
