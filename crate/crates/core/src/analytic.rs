//! Closed-form predictions for every stage of the pipeline, independent of
//! the statevector path. The simulator is checked against these, never the
//! other way around.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bits::BitString;
use crate::database::{DatabaseTable, UserQuery};
use crate::error::{Error, Result};
use crate::grover::{
    compute_biham_stats, exact_iteration_trajectory, resolve_plan, AmplificationPlan, ResolvedPlan,
};
use crate::qknn::hamming_distance;

/// Smallest acceptance probability treated as nonzero.
const DEGENERATE_TOL: f64 = 1e-15;

/// Everything the closed forms say about a table/query pair, optionally
/// including an amplification plan.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticPrediction {
    /// P(c0 = 0) = (1/N) Σ_p cos²(π d_p / 2l).
    pub p_c0_zero: f64,
    /// Expected scoring attempts until acceptance, 1/P(c0 = 0).
    pub expected_attempts: f64,
    /// Post-selected distribution over record ids,
    /// P(p) = cos²(π d_p / 2l) / Σ_q cos²(π d_q / 2l).
    pub conditional_knn: BTreeMap<BitString, f64>,
    /// Distribution over record ids after the planned iterations.
    pub post_grover: Option<BTreeMap<BitString, f64>>,
    /// Marked probability after each iteration.
    pub trajectory: Option<Vec<f64>>,
    /// Amplification ceiling; `Some(1.0)` when every record is marked, `None`
    /// when nothing is.
    pub p_max: Option<f64>,
    pub resolved: Option<ResolvedPlan>,
}

/// Per-record conditional weights in table order, plus P(c0 = 0).
pub fn record_weights(table: &DatabaseTable, query: &UserQuery) -> Result<(Vec<f64>, f64)> {
    table.check_query(query)?;
    let l = table.feature_width() as f64;
    let mut weights = Vec::with_capacity(table.len());
    for rec in table.records() {
        let d = hamming_distance(&rec.feature, &query.feature)? as f64;
        weights.push((PI * d / (2.0 * l)).cos().powi(2));
    }
    let total: f64 = weights.iter().sum();
    let p0 = total / table.len() as f64;
    if p0 < DEGENERATE_TOL {
        return Err(Error::Degenerate(
            "every record is maximally distant from the query; \
             the ancilla never accepts"
                .into(),
        ));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok((weights, p0))
}

/// Evaluates the closed forms for `table` and `query`; when `plan` is given,
/// also the amplification trajectory, the final distribution, and the
/// reachable ceiling.
pub fn predict(
    table: &DatabaseTable,
    query: &UserQuery,
    plan: Option<&AmplificationPlan>,
) -> Result<AnalyticPrediction> {
    let (weights, p0) = record_weights(table, query)?;
    let conditional_knn: BTreeMap<BitString, f64> = table
        .records()
        .iter()
        .zip(&weights)
        .map(|(rec, &w)| (rec.id.clone(), w))
        .collect();

    let mut prediction = AnalyticPrediction {
        p_c0_zero: p0,
        expected_attempts: 1.0 / p0,
        conditional_knn,
        post_grover: None,
        trajectory: None,
        p_max: None,
        resolved: None,
    };
    let Some(plan) = plan else {
        return Ok(prediction);
    };

    let resolved = resolve_plan(plan, table, query, &weights)?;
    let n = table.len();
    if resolved.g == 0 {
        prediction.trajectory = Some(vec![0.0; resolved.iterations as usize]);
        prediction.post_grover = Some(prediction.conditional_knn.clone());
        prediction.resolved = Some(resolved);
        return Ok(prediction);
    }

    let amps: Vec<Complex64> = weights
        .iter()
        .map(|&w| Complex64::new(w.sqrt(), 0.0))
        .collect();
    let (final_amps, trajectory) =
        exact_iteration_trajectory(&amps, &resolved.marked_rows, resolved.iterations)?;
    prediction.post_grover = Some(
        table
            .records()
            .iter()
            .zip(&final_amps)
            .map(|(rec, a)| (rec.id.clone(), a.norm_sqr()))
            .collect(),
    );
    prediction.trajectory = Some(trajectory);
    prediction.p_max = if resolved.g == n {
        Some(1.0)
    } else {
        Some(compute_biham_stats(&amps, &resolved.marked_rows)?.p_max)
    };
    prediction.resolved = Some(resolved);
    Ok(prediction)
}
