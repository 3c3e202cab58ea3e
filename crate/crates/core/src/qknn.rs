//! The scoring stage: runs the Hamming-distance program, measures the
//! ancilla, and on failure restores the register and tries again.
//!
//! After the stage, branch p (a record at distance d_p from the query)
//! carries amplitude factor cos(πd_p/2l) on c0=0 and -i·sin(πd_p/2l) on
//! c0=1, so P(c0=0) = (1/N) Σ_p cos²(πd_p/2l). Measuring c0=0 post-selects
//! the cos²-weighted mixture that favors near records.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::circuits::build_hamming_stage;
use crate::error::{Error, Result};
use crate::statevec::{MeasurementRecord, QuantumState};

/// Minimum accepted fidelity when verifying that the stage adjoint restores
/// the pre-stage register.
pub const RESTORE_TOL: f64 = 1e-10;

/// Number of differing positions between two equal-width bit strings.
pub fn hamming_distance(a: &BitString, b: &BitString) -> Result<usize> {
    if a.width() != b.width() {
        return Err(Error::WidthMismatch(format!(
            "hamming distance of widths {} and {}",
            a.width(),
            b.width()
        )));
    }
    Ok((0..a.width()).filter(|&i| a.bit(i) != b.bit(i)).count())
}

/// The similarity image the stage writes into the database feature segment:
/// bit i is 1 where `feature` and `query` agree.
pub fn similarity_pattern(feature: &BitString, query: &BitString) -> Result<BitString> {
    if feature.width() != query.width() {
        return Err(Error::WidthMismatch(format!(
            "similarity of widths {} and {}",
            feature.width(),
            query.width()
        )));
    }
    Ok(BitString::from_bits(
        (0..feature.width())
            .map(|i| feature.bit(i) == query.bit(i))
            .collect(),
    ))
}

/// Result of one or more scoring attempts.
#[derive(Clone, Debug)]
pub struct KnnOutcome {
    /// Measured ancilla value of the latest attempt; `false` is success.
    pub c0_bit: bool,
    /// Exact P(c0 = 0), read off the pre-measurement state.
    pub p_c0_zero: f64,
    /// Post-measurement state, ancilla collapsed and renormalized.
    pub post_state: QuantumState,
    /// Total stage executions so far (≥ 1).
    pub attempts: u32,
    /// Measurement record of the latest attempt.
    pub record: MeasurementRecord,
    prepared: QuantumState,
}

impl KnnOutcome {
    pub fn succeeded(&self) -> bool {
        !self.c0_bit
    }

    /// The pre-stage register, retained for the retry path.
    pub fn prepared(&self) -> &QuantumState {
        &self.prepared
    }
}

fn check_prestage(state: &QuantumState) -> Result<()> {
    let c0 = state.layout().c0();
    let mask = state.layout().qubit_mask(c0);
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() > 0.0 && i & mask != 0 {
            return Err(Error::Config(
                "scoring stage requires the ancilla c0 in |0>".into(),
            ));
        }
    }
    Ok(())
}

fn execute_attempt(
    prepared: &QuantumState,
    rng: &mut ChaCha8Rng,
) -> Result<(bool, f64, QuantumState, MeasurementRecord)> {
    let mut state = prepared.clone();
    build_hamming_stage(state.layout()).apply_to(&mut state)?;
    let c0 = state.layout().c0();
    let p0 = state.outcome_probabilities(&[c0])[0];
    let record = state.measure_qubits(&[c0], rng)?;
    let bit = record.observed.bit(0);
    Ok((bit, p0, state, record))
}

/// Runs the scoring stage once on the prepared register (database
/// superposition with the query loaded, ancilla in |0>) and measures c0.
pub fn run_knn_stage(prepared: &QuantumState, seed: u64) -> Result<KnnOutcome> {
    check_prestage(prepared)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c0_bit, p_c0_zero, post_state, mut record) = execute_attempt(prepared, &mut rng)?;
    record.seed = Some(seed);
    Ok(KnnOutcome {
        c0_bit,
        p_c0_zero,
        post_state,
        attempts: 1,
        record,
        prepared: prepared.clone(),
    })
}

/// Applies the stage program followed by its adjoint to the (unmeasured)
/// prepared register and returns the round-trip fidelity.
pub fn verify_adjoint_restoration(prepared: &QuantumState) -> Result<f64> {
    let program = build_hamming_stage(prepared.layout());
    let mut state = prepared.clone();
    program.apply_to(&mut state)?;
    program.adjoint()?.apply_to(&mut state)?;
    state.fidelity(prepared)
}

/// Retry path after measuring c0 = 1.
///
/// Measurement is destructive, so the register is restored from the retained
/// pre-stage state rather than by running the adjoint on the collapsed copy;
/// the adjoint-restoration claim is still verified on the unmeasured branch
/// every time, so a broken stage inverse cannot hide behind the shortcut.
/// Attempts accumulate across the original run and all retries.
pub fn uncompute_and_retry(
    outcome: &KnnOutcome,
    max_attempts: u32,
    seed: u64,
) -> Result<KnnOutcome> {
    if !outcome.c0_bit {
        return Err(Error::Config(
            "retry requires a failed attempt (c0 = 1)".into(),
        ));
    }
    let fidelity = verify_adjoint_restoration(&outcome.prepared)?;
    if fidelity < 1.0 - RESTORE_TOL {
        return Err(Error::Config(format!(
            "adjoint restoration fidelity {fidelity} below tolerance"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = outcome.attempts;
    loop {
        if attempts >= max_attempts {
            return Err(Error::RetryExhausted {
                attempts,
                p_c0_zero: outcome.p_c0_zero,
            });
        }
        let (c0_bit, p0, post_state, record) = execute_attempt(&outcome.prepared, &mut rng)?;
        attempts += 1;
        if !c0_bit {
            return Ok(KnnOutcome {
                c0_bit,
                p_c0_zero: p0,
                post_state,
                attempts,
                record,
                prepared: outcome.prepared.clone(),
            });
        }
    }
}

/// Deterministic form of the stage for exact-mode pipelines: applies the
/// program and post-selects c0 = 0 instead of sampling. Returns the
/// post-selected state and P(c0 = 0).
pub fn scored_state(prepared: &QuantumState) -> Result<(QuantumState, f64)> {
    check_prestage(prepared)?;
    let mut state = prepared.clone();
    build_hamming_stage(state.layout()).apply_to(&mut state)?;
    let c0 = state.layout().c0();
    let p0 = state.post_select(&[c0], &BitString::zeros(1))?;
    Ok((state, p0))
}

/// Expected repetitions to estimate a Bernoulli rate p within ±epsilon:
/// p(1-p)/epsilon².
pub fn repetitions_estimate(p: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("probability {p} outside [0,1]")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(p * (1.0 - p) / (epsilon * epsilon))
}
