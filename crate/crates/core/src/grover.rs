//! Amplitude amplification of recommended records, plus the closed-form
//! predictor of the best reachable success probability.
//!
//! Marking happens at the feature level: a marked feature pattern is
//! translated to its similarity-segment image and every record carrying that
//! feature contributes one branch to g. The iteration applied here is the
//! phase oracle as an explicit gate program followed by a reflection about
//! the uniform superposition of the record branches — the inversion-about-
//! average step expressed directly on the register, which stays exact even
//! though the id segment is entangled with the similarity bits.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bits::BitString;
use crate::circuits::build_phase_oracle;
use crate::database::{DatabaseTable, UserQuery};
use crate::error::{Error, Result};
use crate::statevec::{QuantumState, RegisterLayout};

/// Which feature patterns the oracle marks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkedSpec {
    /// Mark the query pattern itself (the default).
    UserFeature,
    /// Mark these explicit feature patterns.
    Features(Vec<BitString>),
    /// Mark the k distinct feature patterns with the largest probability in
    /// the scoring distribution (ties broken by ascending feature bits).
    TopDistinct(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterationCount {
    /// round((π/4)·sqrt(N/g)) iterations.
    Auto,
    Fixed(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmplificationPlan {
    pub marked: MarkedSpec,
    pub iterations: IterationCount,
}

impl Default for AmplificationPlan {
    fn default() -> Self {
        AmplificationPlan { marked: MarkedSpec::UserFeature, iterations: IterationCount::Auto }
    }
}

/// A plan bound to a concrete table and query.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedPlan {
    /// Distinct marked feature patterns, ascending.
    pub marked_features: Vec<BitString>,
    /// Ids of the marked records, ascending.
    pub marked_ids: Vec<BitString>,
    /// Row indices of the marked records, in table order.
    pub marked_rows: Vec<usize>,
    /// Number of marked branches.
    pub g: usize,
    pub iterations: u32,
    pub auto_iterations: bool,
}

/// The default iteration count round((π/4)·sqrt(branches/g)); 0 when nothing
/// is marked.
pub fn auto_iterations(branches: usize, g: usize) -> u32 {
    if g == 0 {
        return 0;
    }
    ((PI / 4.0) * (branches as f64 / g as f64).sqrt()).round() as u32
}

/// Binds a plan to a table and query. `record_weights` are per-record
/// probabilities in table order (only consulted by
/// [`MarkedSpec::TopDistinct`]).
pub fn resolve_plan(
    plan: &AmplificationPlan,
    table: &DatabaseTable,
    query: &UserQuery,
    record_weights: &[f64],
) -> Result<ResolvedPlan> {
    table.check_query(query)?;
    let l = table.feature_width();
    let marked_features: Vec<BitString> = match &plan.marked {
        MarkedSpec::UserFeature => vec![query.feature.clone()],
        MarkedSpec::Features(patterns) => {
            if patterns.is_empty() {
                return Err(Error::Config("marked feature set is empty".into()));
            }
            let mut set = BTreeSet::new();
            for p in patterns {
                if p.width() != l {
                    return Err(Error::WidthMismatch(format!(
                        "marked pattern {p} has width {}, feature width is {l}",
                        p.width()
                    )));
                }
                set.insert(p.clone());
            }
            set.into_iter().collect()
        }
        MarkedSpec::TopDistinct(k) => {
            let k = *k;
            if k == 0 {
                return Err(Error::Config("top-k marking needs k >= 1".into()));
            }
            if record_weights.len() != table.len() {
                return Err(Error::Config(format!(
                    "{} record weights for {} records",
                    record_weights.len(),
                    table.len()
                )));
            }
            let mut by_feature: BTreeMap<BitString, f64> = BTreeMap::new();
            for (rec, w) in table.records().iter().zip(record_weights) {
                *by_feature.entry(rec.feature.clone()).or_insert(0.0) += w;
            }
            let mut ranked: Vec<(BitString, f64)> = by_feature.into_iter().collect();
            // weight descending, then feature ascending (BTreeMap order is
            // already ascending, so a stable sort keeps the tie-break)
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite weights"));
            ranked.truncate(k);
            let mut features: Vec<BitString> = ranked.into_iter().map(|(f, _)| f).collect();
            features.sort();
            features
        }
    };

    let marked_set: BTreeSet<&BitString> = marked_features.iter().collect();
    let marked_rows: Vec<usize> = table
        .records()
        .iter()
        .enumerate()
        .filter(|(_, rec)| marked_set.contains(&rec.feature))
        .map(|(i, _)| i)
        .collect();
    let mut marked_ids: Vec<BitString> = marked_rows
        .iter()
        .map(|&i| table.records()[i].id.clone())
        .collect();
    marked_ids.sort();
    let g = marked_rows.len();
    let (iterations, auto) = match plan.iterations {
        IterationCount::Auto => (auto_iterations(table.len(), g), true),
        IterationCount::Fixed(t) => (t, false),
    };
    Ok(ResolvedPlan { marked_features, marked_ids, marked_rows, g, iterations, auto_iterations: auto })
}

/// Qubit-free reference dynamics: sign flip on marked entries, then
/// reflection of every entry about the mean, `t` times.
pub fn exact_iteration_oracle(
    amplitudes: &[Complex64],
    marked: &[usize],
    t: u32,
) -> Result<Vec<Complex64>> {
    Ok(exact_iteration_trajectory(amplitudes, marked, t)?.0)
}

/// As [`exact_iteration_oracle`], also returning the marked probability after
/// each iteration.
pub fn exact_iteration_trajectory(
    amplitudes: &[Complex64],
    marked: &[usize],
    t: u32,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    check_indices(amplitudes.len(), marked)?;
    let mut amps = amplitudes.to_vec();
    let l = amps.len() as f64;
    let mut trajectory = Vec::with_capacity(t as usize);
    for _ in 0..t {
        for &i in marked {
            amps[i] = -amps[i];
        }
        let mean: Complex64 = amps.iter().sum::<Complex64>() / l;
        for a in &mut amps {
            *a = mean * 2.0 - *a;
        }
        trajectory.push(marked.iter().map(|&i| amps[i].norm_sqr()).sum());
    }
    Ok((amps, trajectory))
}

fn check_indices(len: usize, marked: &[usize]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &i in marked {
        if i >= len {
            return Err(Error::Config(format!("marked index {i} out of range (L={len})")));
        }
        if !seen.insert(i) {
            return Err(Error::Config(format!("duplicate marked index {i}")));
        }
    }
    Ok(())
}

/// First- and second-moment statistics of an initial amplitude distribution,
/// and the maximum success probability amplification can reach from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BihamStats {
    pub mean_marked: Complex64,
    pub mean_unmarked: Complex64,
    pub var_unmarked: f64,
    pub p_max: f64,
}

/// Evaluates the amplification ceiling
/// p_max = 1 − (L−g)σ² − ½((L−g)|m̄ⁿ|² + g|m̄ʳ|²) + ½|(L−g)(m̄ⁿ)² + g(m̄ʳ)²|
/// with m̄ʳ/m̄ⁿ the marked/unmarked means and σ² the unmarked variance.
/// The unmarked mean divides by L−g, matching its definition as a mean over
/// the unmarked set.
pub fn compute_biham_stats(amplitudes: &[Complex64], marked: &[usize]) -> Result<BihamStats> {
    let l = amplitudes.len();
    let g = marked.len();
    if g == 0 {
        return Err(Error::Config("marked set is empty".into()));
    }
    check_indices(l, marked)?;
    if g == l {
        return Err(Error::Degenerate(
            "every branch is marked; amplification statistics are undefined".into(),
        ));
    }
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "amplitude list has norm^2 = {norm}, expected 1"
        )));
    }
    let marked_set: BTreeSet<usize> = marked.iter().copied().collect();
    let mut sum_r = Complex64::new(0.0, 0.0);
    let mut sum_nr = Complex64::new(0.0, 0.0);
    for (i, a) in amplitudes.iter().enumerate() {
        if marked_set.contains(&i) {
            sum_r += a;
        } else {
            sum_nr += a;
        }
    }
    let mean_marked = sum_r / g as f64;
    let mean_unmarked = sum_nr / (l - g) as f64;
    let var_unmarked: f64 = amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| !marked_set.contains(i))
        .map(|(_, a)| (a - mean_unmarked).norm_sqr())
        .sum::<f64>()
        / (l - g) as f64;
    let lg = (l - g) as f64;
    let gf = g as f64;
    let p_max = 1.0 - lg * var_unmarked
        - 0.5 * (lg * mean_unmarked.norm_sqr() + gf * mean_marked.norm_sqr())
        + 0.5 * (mean_unmarked * mean_unmarked * lg + mean_marked * mean_marked * gf).norm();
    Ok(BihamStats { mean_marked, mean_unmarked, var_unmarked, p_max })
}

/// Result of running the amplification stage.
#[derive(Clone, Debug)]
pub struct AmplificationOutcome {
    pub state: QuantumState,
    /// Marked probability after each iteration.
    pub trajectory: Vec<f64>,
    pub resolved: ResolvedPlan,
    /// Set when the marked patterns matched no record: the oracle marks
    /// nothing and the state is returned unchanged.
    pub no_op: bool,
}

/// Amplitude indices of the record branches of a post-scoring state:
/// |id_p, s_p, t, 0> with s_p the similarity image of the record's feature.
pub fn branch_kets(
    layout: &RegisterLayout,
    table: &DatabaseTable,
    query: &UserQuery,
) -> Result<Vec<usize>> {
    table.check_query(query)?;
    let mut kets = Vec::with_capacity(table.len());
    for rec in table.records() {
        let sim = crate::qknn::similarity_pattern(&rec.feature, &query.feature)?;
        kets.push(layout.compose(rec.id.to_value(), sim.to_value(), query.feature.to_value(), 0));
    }
    Ok(kets)
}

/// Runs `plan` on a post-scoring state (ancilla already post-selected to 0).
///
/// Each iteration applies the gate-built phase oracle for the marked
/// similarity patterns, then reflects the register about the uniform
/// superposition of all record branches. The trajectory records the marked
/// probability after every iteration.
pub fn run_amplification(
    mut state: QuantumState,
    table: &DatabaseTable,
    query: &UserQuery,
    plan: &AmplificationPlan,
) -> Result<AmplificationOutcome> {
    let layout = table.layout()?;
    if state.layout() != &layout {
        return Err(Error::Config("state layout does not match the table".into()));
    }
    let c0_mask = layout.qubit_mask(layout.c0());
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() > 0.0 && i & c0_mask != 0 {
            return Err(Error::Config(
                "amplification requires the ancilla c0 post-selected to |0>".into(),
            ));
        }
    }
    let kets = branch_kets(&layout, table, query)?;
    let support: f64 = kets.iter().map(|&k| state.amplitude(k).norm_sqr()).sum();
    if (support - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "state support on record branches is {support}, expected 1"
        )));
    }
    let weights: Vec<f64> = kets.iter().map(|&k| state.amplitude(k).norm_sqr()).collect();
    let resolved = resolve_plan(plan, table, query, &weights)?;

    if resolved.g == 0 {
        let trajectory = vec![0.0; resolved.iterations as usize];
        return Ok(AmplificationOutcome { state, trajectory, resolved, no_op: true });
    }

    let mut uniform_amps = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
    let w = 1.0 / (table.len() as f64).sqrt();
    for &k in &kets {
        uniform_amps[k] = Complex64::new(w, 0.0);
    }
    let reference = QuantumState::from_amplitudes(&layout, uniform_amps)?;

    let sim_patterns: Vec<BitString> = resolved
        .marked_features
        .iter()
        .map(|f| crate::qknn::similarity_pattern(f, &query.feature))
        .collect::<Result<Vec<_>>>()?;
    let oracle = build_phase_oracle(&layout, &sim_patterns)?;

    let marked_kets: Vec<usize> = resolved.marked_rows.iter().map(|&p| kets[p]).collect();
    let mut trajectory = Vec::with_capacity(resolved.iterations as usize);
    for _ in 0..resolved.iterations {
        oracle.apply_to(&mut state)?;
        state.reflect_about(&reference)?;
        trajectory.push(marked_kets.iter().map(|&k| state.amplitude(k).norm_sqr()).sum());
    }
    Ok(AmplificationOutcome { state, trajectory, resolved, no_op: false })
}
