//! End-to-end runs: prepare, score, amplify, and tally — exactly (reading
//! probabilities off the state) or by seeded sampling of the ancilla and the
//! final measurement.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{predict, AnalyticPrediction};
use crate::bits::BitString;
use crate::database::{example_table, DatabaseTable, UserQuery};
use crate::error::{Error, Result};
use crate::grover::{
    run_amplification, AmplificationPlan, IterationCount, MarkedSpec,
};
use crate::qknn::scored_state;
use crate::statevec::QuantumState;

/// How a run executes.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Base seed; shot s uses seed.wrapping_add(s).
    pub seed: u64,
    pub shots: u64,
    /// Scoring attempts allowed per shot before it is abandoned.
    pub max_attempts: u32,
    /// Read exact probabilities instead of sampling.
    pub exact: bool,
    pub amplification: Option<AmplificationPlan>,
    /// Attach full statevector dumps to the stage snapshots.
    pub emit_stage_dumps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            shots: 1,
            max_attempts: 100,
            exact: true,
            amplification: None,
            emit_stage_dumps: false,
        }
    }
}

/// Exact distribution over records after one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageSnapshot {
    /// "post_init", "post_knn", or "post_grover".
    pub name: &'static str,
    /// (id, feature, probability), ascending by id.
    pub distribution: Vec<(BitString, BitString, f64)>,
    /// Marked probability per iteration (amplification stage only).
    pub trajectory: Option<Vec<f64>>,
    /// CSV statevector dump, when requested.
    pub state_dump: Option<String>,
}

/// Ancilla bookkeeping across all shots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C0Stats {
    pub successes: u64,
    pub failures: u64,
    /// Shots that burned max_attempts without an acceptance.
    pub exhausted_shots: u64,
    pub empirical_p0: f64,
    pub expected_p0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    /// (id, feature, probability), best first (ties by ascending id). Exact
    /// probabilities in exact mode, measured frequencies otherwise.
    pub recommended: Vec<(BitString, BitString, f64)>,
    pub stages: Vec<StageSnapshot>,
    pub c0: C0Stats,
    pub analytic: AnalyticPrediction,
    pub table_digest: String,
}

fn dump_state(state: &QuantumState) -> Result<String> {
    let mut buf = Vec::new();
    state.dump_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("dump is ascii"))
}

fn snapshot(
    name: &'static str,
    table: &DatabaseTable,
    probs: &[f64],
    trajectory: Option<Vec<f64>>,
    state: Option<&QuantumState>,
) -> Result<StageSnapshot> {
    let mut distribution: Vec<(BitString, BitString, f64)> = table
        .records()
        .iter()
        .zip(probs)
        .map(|(rec, &p)| (rec.id.clone(), rec.feature.clone(), p))
        .collect();
    distribution.sort_by(|a, b| a.0.cmp(&b.0));
    let state_dump = match state {
        Some(s) => Some(dump_state(s)?),
        None => None,
    };
    Ok(StageSnapshot { name, distribution, trajectory, state_dump })
}

/// Runs the full pipeline on `table` for `query`.
///
/// Stage snapshots always carry exact distributions; only `recommended` and
/// the ancilla tallies reflect sampling. A shot that exhausts its attempts is
/// recorded and skipped; the run fails with [`Error::RetryExhausted`] only
/// when every shot does.
pub fn run(table: &DatabaseTable, query: &UserQuery, config: &RunConfig) -> Result<RunOutcome> {
    if config.shots == 0 {
        return Err(Error::Config("shots must be >= 1".into()));
    }
    if config.max_attempts == 0 {
        return Err(Error::Config("max attempts must be >= 1".into()));
    }
    let analytic = predict(table, query, config.amplification.as_ref())?;
    let layout = table.layout()?;
    let prepared = table.prepare_query_state(query)?;

    let n = table.len();
    let init_probs: Vec<f64> = table
        .records()
        .iter()
        .map(|rec| {
            let ket = layout.compose(
                rec.id.to_value(),
                rec.feature.to_value(),
                query.feature.to_value(),
                0,
            );
            prepared.amplitude(ket).norm_sqr()
        })
        .collect();

    let (knn_state, p0) = scored_state(&prepared)?;
    let knn_kets = crate::grover::branch_kets(&layout, table, query)?;
    let knn_probs: Vec<f64> = knn_kets
        .iter()
        .map(|&k| knn_state.amplitude(k).norm_sqr())
        .collect();

    let dumps = config.emit_stage_dumps;
    let mut stages = vec![
        snapshot("post_init", table, &init_probs, None, dumps.then_some(&prepared))?,
        snapshot("post_knn", table, &knn_probs, None, dumps.then_some(&knn_state))?,
    ];

    let final_probs: Vec<f64> = match &config.amplification {
        Some(plan) => {
            let out = run_amplification(knn_state, table, query, plan)?;
            let probs: Vec<f64> = knn_kets
                .iter()
                .map(|&k| out.state.amplitude(k).norm_sqr())
                .collect();
            stages.push(snapshot(
                "post_grover",
                table,
                &probs,
                Some(out.trajectory.clone()),
                dumps.then_some(&out.state),
            )?);
            probs
        }
        None => knn_probs,
    };

    let mut successes = 0u64;
    let mut failures = 0u64;
    let mut exhausted_shots = 0u64;
    let mut counts = vec![0u64; n];
    if config.exact {
        successes = config.shots;
    } else {
        for shot in 0..config.shots {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(shot));
            let mut accepted = false;
            for _ in 0..config.max_attempts {
                if rng.gen::<f64>() < p0 {
                    accepted = true;
                    break;
                }
                failures += 1;
            }
            if accepted {
                successes += 1;
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                let mut idx = n - 1;
                for (i, &p) in final_probs.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        idx = i;
                        break;
                    }
                }
                counts[idx] += 1;
            } else {
                exhausted_shots += 1;
            }
        }
        if successes == 0 {
            return Err(Error::RetryExhausted {
                attempts: u32::try_from(failures).unwrap_or(u32::MAX),
                p_c0_zero: p0,
            });
        }
    }
    let c0 = C0Stats {
        successes,
        failures,
        exhausted_shots,
        empirical_p0: if config.exact {
            p0
        } else {
            successes as f64 / (successes + failures) as f64
        },
        expected_p0: p0,
    };

    let probs: Vec<f64> = if config.exact {
        final_probs
    } else {
        counts.iter().map(|&c| c as f64 / successes as f64).collect()
    };
    let mut recommended: Vec<(BitString, BitString, f64)> = table
        .records()
        .iter()
        .zip(&probs)
        .map(|(rec, &p)| (rec.id.clone(), rec.feature.clone(), p))
        .collect();
    recommended.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .expect("finite probabilities")
            .then_with(|| a.0.cmp(&b.0))
    });

    Ok(RunOutcome { recommended, stages, c0, analytic, table_digest: table.digest() })
}

/// The two bundled demonstration runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReproduceCase {
    /// Amplify the single record matching the query "101011".
    One,
    /// Amplify the two records nearest to "110001", at the iteration count
    /// that maximizes their combined probability.
    Two,
}

impl ReproduceCase {
    pub fn label(&self) -> &'static str {
        match self {
            ReproduceCase::One => "one",
            ReproduceCase::Two => "two",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReproduceOutput {
    pub case: &'static str,
    pub table: DatabaseTable,
    pub query: UserQuery,
    pub config: RunConfig,
    pub outcome: RunOutcome,
}

/// Runs a bundled demonstration case on the example catalogue, exactly.
pub fn reproduce(case: ReproduceCase) -> Result<ReproduceOutput> {
    let table = example_table();
    let (query, plan) = match case {
        ReproduceCase::One => (
            UserQuery::parse("101011")?,
            AmplificationPlan::default(),
        ),
        ReproduceCase::Two => {
            let query = UserQuery::parse("110001")?;
            let marked = MarkedSpec::TopDistinct(2);
            let probe = AmplificationPlan { marked: marked.clone(), iterations: IterationCount::Auto };
            let g = predict(&table, &query, Some(&probe))?
                .resolved
                .expect("plan was given")
                .g;
            if g == 0 {
                return Err(Error::Degenerate("no record matches the marked set".into()));
            }
            // scan one full oscillation window for the best iteration count
            let window =
                2 * ((PI / 4.0) * (table.len() as f64 / g as f64).sqrt()).ceil() as u32;
            let scan = AmplificationPlan {
                marked: marked.clone(),
                iterations: IterationCount::Fixed(window),
            };
            let trajectory = predict(&table, &query, Some(&scan))?
                .trajectory
                .expect("plan was given");
            let best = trajectory
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite").then(b.0.cmp(&a.0)))
                .map(|(i, _)| i as u32 + 1)
                .expect("window is nonempty");
            (query, AmplificationPlan { marked, iterations: IterationCount::Fixed(best) })
        }
    };
    let config = RunConfig {
        amplification: Some(plan),
        ..RunConfig::default()
    };
    let outcome = run(&table, &query, &config)?;
    Ok(ReproduceOutput { case: case.label(), table, query, config, outcome })
}
