//! Gate vocabulary and circuit programs.
//!
//! Gates are single-qubit matrices plus native `(qubit, required_bit)`
//! controls — negative controls are first-class, so no X sandwiches are
//! needed to condition on a 0 bit. Programs carry a stage tag and can be
//! inverted exactly (reversed order, per-gate adjoint), which is what the
//! retry path of the k-NN stage relies on.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::statevec::{QuantumState, RegisterLayout, Segment};

/// Max |entry| deviation of U†U from I accepted as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    /// diag(e^{-iπ/(2l)}, 1): the per-qubit score phase, applied to each
    /// similarity qubit holding 0 (a disagreeing feature bit).
    P1 { l: usize },
    /// diag(e^{+iπ/l}, 1) = P1^{-2}: the ancilla-controlled correction that
    /// flips the sign of the accumulated score phase on the c0=1 branch.
    P1InvSq { l: usize },
    /// diag(e^{iθ}, 1): phase on the |0> component.
    ZeroPhase { theta: f64 },
    /// diag(1, e^{iθ}): phase on the |1> component.
    Phase { theta: f64 },
    /// Arbitrary single-qubit unitary, validated within [`UNITARY_TOL`].
    Unitary2 { m: [[Complex64; 2]; 2] },
}

impl GateKind {
    pub fn matrix(&self) -> Result<[[Complex64; 2]; 2]> {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        Ok(match self {
            GateKind::H => {
                let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[s, s], [s, -s]]
            }
            GateKind::X => [[z, o], [o, z]],
            GateKind::Y => [[z, -Complex64::i()], [Complex64::i(), z]],
            GateKind::Z => [[o, z], [z, -o]],
            GateKind::P1 { l } => {
                let l = positive_l(*l)?;
                [[Complex64::from_polar(1.0, -PI / (2.0 * l)), z], [z, o]]
            }
            GateKind::P1InvSq { l } => {
                let l = positive_l(*l)?;
                [[Complex64::from_polar(1.0, PI / l), z], [z, o]]
            }
            GateKind::ZeroPhase { theta } => [[Complex64::from_polar(1.0, *theta), z], [z, o]],
            GateKind::Phase { theta } => [[o, z], [z, Complex64::from_polar(1.0, *theta)]],
            GateKind::Unitary2 { m } => {
                check_unitary(m)?;
                *m
            }
        })
    }

    pub fn adjoint(&self) -> Result<GateKind> {
        Ok(match self {
            GateKind::H | GateKind::X | GateKind::Y | GateKind::Z => self.clone(),
            GateKind::P1 { l } => GateKind::ZeroPhase { theta: PI / (2.0 * positive_l(*l)?) },
            GateKind::P1InvSq { l } => GateKind::ZeroPhase { theta: -PI / positive_l(*l)? },
            GateKind::ZeroPhase { theta } => GateKind::ZeroPhase { theta: -theta },
            GateKind::Phase { theta } => GateKind::Phase { theta: -theta },
            GateKind::Unitary2 { m } => {
                check_unitary(m)?;
                GateKind::Unitary2 { m: dagger(m) }
            }
        })
    }

    fn token(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::P1 { .. } => "P1",
            GateKind::P1InvSq { .. } => "P1INVSQ",
            GateKind::ZeroPhase { .. } => "PHASE0",
            GateKind::Phase { .. } => "PHASE",
            GateKind::Unitary2 { .. } => "U2",
        }
    }
}

fn positive_l(l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::Config("phase gate parameter l must be positive".into()));
    }
    Ok(l as f64)
}

fn dagger(m: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

fn check_unitary(m: &[[Complex64; 2]; 2]) -> Result<()> {
    let d = dagger(m);
    for r in 0..2 {
        for c in 0..2 {
            let e: Complex64 = (0..2).map(|k| d[r][k] * m[k][c]).sum();
            let want = if r == c { 1.0 } else { 0.0 };
            if (e - want).norm() > UNITARY_TOL {
                return Err(Error::NonUnitary);
            }
        }
    }
    Ok(())
}

/// One gate application: a single-qubit kind on `target`, restricted to the
/// subspace where every `(qubit, bit)` control holds.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<(usize, bool)>,
}

impl GateOp {
    pub fn new(kind: GateKind, target: usize) -> Self {
        GateOp { kind, target, controls: Vec::new() }
    }

    pub fn controlled(kind: GateKind, target: usize, controls: Vec<(usize, bool)>) -> Self {
        GateOp { kind, target, controls }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::controlled(GateKind::X, target, vec![(control, true)])
    }

    /// Validated arbitrary single-qubit unitary.
    pub fn unitary2(
        m: [[Complex64; 2]; 2],
        target: usize,
        controls: Vec<(usize, bool)>,
    ) -> Result<Self> {
        check_unitary(&m)?;
        Ok(GateOp::controlled(GateKind::Unitary2 { m }, target, controls))
    }

    pub fn adjoint(&self) -> Result<GateOp> {
        Ok(GateOp {
            kind: self.kind.adjoint()?,
            target: self.target,
            controls: self.controls.clone(),
        })
    }

    pub fn apply_to(&self, state: &mut QuantumState) -> Result<()> {
        let m = self.kind.matrix()?;
        state.apply_unitary2(self.target, &self.controls, &m)
    }

    fn text_line(&self) -> String {
        let mut line = format!("{} {}", self.kind.token(), self.target);
        if !self.controls.is_empty() {
            let parts: Vec<String> = self
                .controls
                .iter()
                .map(|(q, b)| format!("{q}:{}", if *b { 1 } else { 0 }))
                .collect();
            line.push_str(&format!(" ctrl=({})", parts.join(",")));
        }
        match &self.kind {
            GateKind::P1 { l } => line.push_str(&format!(" theta={:.16e}", -PI / (2.0 * *l as f64))),
            GateKind::P1InvSq { l } => line.push_str(&format!(" theta={:.16e}", PI / *l as f64)),
            GateKind::ZeroPhase { theta } | GateKind::Phase { theta } => {
                line.push_str(&format!(" theta={theta:.16e}"))
            }
            GateKind::Unitary2 { m } => {
                let mut parts = Vec::with_capacity(8);
                for row in m {
                    for e in row {
                        parts.push(format!("{:.16e}", e.re));
                        parts.push(format!("{:.16e}", e.im));
                    }
                }
                line.push_str(&format!(" m=({})", parts.join(",")));
            }
            _ => {}
        }
        line
    }
}

/// Which pipeline stage a program implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageTag {
    Init,
    Knn,
    Grover,
}

impl fmt::Display for StageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageTag::Init => "init",
            StageTag::Knn => "knn",
            StageTag::Grover => "grover",
        })
    }
}

/// An ordered list of gates tagged with the stage it implements.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitProgram {
    pub stage: StageTag,
    gates: Vec<GateOp>,
}

impl CircuitProgram {
    pub fn new(stage: StageTag) -> Self {
        CircuitProgram { stage, gates: Vec::new() }
    }

    pub fn push(&mut self, op: GateOp) {
        self.gates.push(op);
    }

    pub fn extend_from(&mut self, other: &CircuitProgram) {
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn apply_to(&self, state: &mut QuantumState) -> Result<()> {
        for op in &self.gates {
            op.apply_to(state)?;
        }
        Ok(())
    }

    /// Exact inverse: gates reversed, each replaced by its adjoint.
    pub fn adjoint(&self) -> Result<CircuitProgram> {
        let mut gates = Vec::with_capacity(self.gates.len());
        for op in self.gates.iter().rev() {
            gates.push(op.adjoint()?);
        }
        Ok(CircuitProgram { stage: self.stage, gates })
    }

    /// Plain-text listing: a `# stage:` header, then one gate per line as
    /// `KIND target [ctrl=(q:b,...)] [theta=...|m=(...)]`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# stage: {}\n", self.stage);
        for op in &self.gates {
            out.push_str(&op.text_line());
            out.push('\n');
        }
        out
    }
}

/// The Hamming-score stage: turns database feature bits into similarity bits
/// (1 = agrees with the query), accumulates the distance phase qubit by
/// qubit, and interferes the two ancilla branches.
///
/// After this program, on a branch at Hamming distance d the register
/// carries amplitude factor cos(πd/2l) on c0=0 and -i·sin(πd/2l) on c0=1.
pub fn build_hamming_stage(layout: &RegisterLayout) -> CircuitProgram {
    let l = layout.feature_width();
    let fdb = layout.segment(Segment::FeatureDb);
    let fu = layout.segment(Segment::FeatureUser);
    let c0 = layout.c0();
    let mut prog = CircuitProgram::new(StageTag::Knn);
    prog.push(GateOp::new(GateKind::H, c0));
    // fdb[k] <- NOT (fdb[k] XOR fu[k]): similarity encoding in place
    for k in 0..l {
        prog.push(GateOp::cnot(fu.start + k, fdb.start + k));
        prog.push(GateOp::new(GateKind::X, fdb.start + k));
    }
    // each disagreeing bit (similarity 0) contributes e^{-iπ/2l}
    for k in 0..l {
        prog.push(GateOp::new(GateKind::P1 { l }, fdb.start + k));
    }
    // on the c0=1 branch, undo twice: net phase e^{+iπd/2l}
    for k in 0..l {
        prog.push(GateOp::controlled(
            GateKind::P1InvSq { l },
            fdb.start + k,
            vec![(c0, true)],
        ));
    }
    prog.push(GateOp::new(GateKind::H, c0));
    prog
}

/// Phase oracle over the similarity segment: flips the sign of every branch
/// whose `feature_db` qubits match one of `patterns`. Built the textbook way,
/// X-sandwiching the 0 bits around a fully-controlled Z.
pub fn build_phase_oracle(
    layout: &RegisterLayout,
    patterns: &[crate::bits::BitString],
) -> Result<CircuitProgram> {
    let l = layout.feature_width();
    let fdb = layout.segment(Segment::FeatureDb);
    let mut prog = CircuitProgram::new(StageTag::Grover);
    for pat in patterns {
        if pat.width() != l {
            return Err(Error::WidthMismatch(format!(
                "oracle pattern {pat} has width {}, feature width is {l}",
                pat.width()
            )));
        }
        let zeros: Vec<usize> = (0..l).filter(|&k| !pat.bit(k)).collect();
        for &k in &zeros {
            prog.push(GateOp::new(GateKind::X, fdb.start + k));
        }
        prog.push(segment_z(fdb.clone()));
        for &k in &zeros {
            prog.push(GateOp::new(GateKind::X, fdb.start + k));
        }
    }
    Ok(prog)
}

/// Inversion about the mean of the similarity segment: H, X on every
/// `feature_db` qubit around a fully-controlled Z.
pub fn build_diffusion(layout: &RegisterLayout) -> CircuitProgram {
    let fdb = layout.segment(Segment::FeatureDb);
    let mut prog = CircuitProgram::new(StageTag::Grover);
    for q in fdb.clone() {
        prog.push(GateOp::new(GateKind::H, q));
    }
    for q in fdb.clone() {
        prog.push(GateOp::new(GateKind::X, q));
    }
    prog.push(segment_z(fdb.clone()));
    for q in fdb.clone() {
        prog.push(GateOp::new(GateKind::X, q));
    }
    for q in fdb {
        prog.push(GateOp::new(GateKind::H, q));
    }
    prog
}

/// One amplification round as an explicit gate program: phase oracle on the
/// marked similarity patterns, then diffusion over the similarity segment.
///
/// Exact on a register whose other segments are unentangled with
/// `feature_db`; the pipeline's amplification step handles the entangled
/// case by reflecting about the branch-uniform state instead.
pub fn build_grover_iteration(
    layout: &RegisterLayout,
    patterns: &[crate::bits::BitString],
) -> Result<CircuitProgram> {
    let mut prog = build_phase_oracle(layout, patterns)?;
    prog.extend_from(&build_diffusion(layout));
    Ok(prog)
}

/// Z on the last qubit of `range`, controlled on every other qubit being 1 —
/// the "all ones" phase flip of a segment.
fn segment_z(range: std::ops::Range<usize>) -> GateOp {
    let last = range.end - 1;
    let controls: Vec<(usize, bool)> = range.take_while(|&q| q < last).map(|q| (q, true)).collect();
    GateOp::controlled(GateKind::Z, last, controls)
}

/// Closed-form gate-count estimates for the three stage families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GateCountReport {
    /// feature width
    pub l: u64,
    /// number of database records
    pub n: u64,
    /// zero bits in the marked pattern
    pub c: u64,
    /// encoding stage
    pub o1: u64,
    /// scoring stage
    pub o2: u64,
    /// one amplification round
    pub o3: u64,
}

/// Evaluates the stage cost estimators
/// o1 = 2l + n(n-1)/2, o2 = 3l + 2, o3 = 7l + 2c + 3.
///
/// These are reporting estimates of the dominant terms, not literal lengths
/// of the programs built here (the scoring program, for instance, spends
/// 4l + 2 native ops because negative controls are free in this simulator).
pub fn estimate_gate_counts(l: u64, n: u64, c: u64) -> Result<GateCountReport> {
    if l == 0 {
        return Err(Error::Config("feature width l must be positive".into()));
    }
    if n == 0 {
        return Err(Error::Config("record count n must be positive".into()));
    }
    let pairs = n
        .checked_mul(n - 1)
        .map(|p| p / 2)
        .ok_or_else(|| Error::Config("gate count overflow in n(n-1)/2".into()))?;
    let o1 = l
        .checked_mul(2)
        .and_then(|t| t.checked_add(pairs))
        .ok_or_else(|| Error::Config("gate count overflow in o1".into()))?;
    let o2 = 3 * l + 2;
    let o3 = l
        .checked_mul(7)
        .and_then(|t| t.checked_add(2 * c))
        .and_then(|t| t.checked_add(3))
        .ok_or_else(|| Error::Config("gate count overflow in o3".into()))?;
    Ok(GateCountReport { l, n, c, o1, o2, o3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn builtin_matrices_are_unitary() {
        let kinds = [
            GateKind::H,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::P1 { l: 6 },
            GateKind::P1InvSq { l: 6 },
            GateKind::ZeroPhase { theta: 0.37 },
            GateKind::Phase { theta: -1.2 },
        ];
        for kind in kinds {
            let m = kind.matrix().unwrap();
            check_unitary(&m).unwrap();
        }
    }

    #[test]
    fn unitary2_rejects_non_unitary_matrix() {
        let o = Complex64::new(1.0, 0.0);
        let m = [[o, o], [o, o]];
        match GateOp::unitary2(m, 0, vec![]) {
            Err(Error::NonUnitary) => {}
            other => panic!("expected NonUnitary, got {other:?}"),
        }
    }

    #[test]
    fn phase_gates_put_phases_on_the_stated_components() {
        let l = 4usize;
        let m = GateKind::P1 { l }.matrix().unwrap();
        assert!(close(m[0][0], Complex64::from_polar(1.0, -PI / 8.0), 1e-15));
        assert!(close(m[1][1], Complex64::new(1.0, 0.0), 1e-15));
        let m = GateKind::P1InvSq { l }.matrix().unwrap();
        assert!(close(m[0][0], Complex64::from_polar(1.0, PI / 4.0), 1e-15));
        let m = GateKind::Phase { theta: 0.3 }.matrix().unwrap();
        assert!(close(m[0][0], Complex64::new(1.0, 0.0), 1e-15));
        assert!(close(m[1][1], Complex64::from_polar(1.0, 0.3), 1e-15));
    }

    #[test]
    fn controlled_score_correction_matches_its_two_qubit_matrix() {
        // Controlled P1InvSq with l=2 on (control, target) acts as
        // diag(1, 1, i, 1) in the basis |00>,|01>,|10>,|11> (control first).
        let layout = RegisterLayout::new(0, 1, 1).unwrap(); // qubits: fdb=0, fu=1, aux=2
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::i(),
            Complex64::new(1.0, 0.0),
        ];
        for (value, want) in expected.iter().enumerate() {
            let mut bits = BitString::zeros(3);
            bits.set(0, value & 2 != 0); // control
            bits.set(1, value & 1 != 0); // target
            let mut st = QuantumState::basis_state(&layout, &bits).unwrap();
            GateOp::controlled(GateKind::P1InvSq { l: 2 }, 1, vec![(0, true)])
                .apply_to(&mut st)
                .unwrap();
            let idx = bits.to_value() as usize;
            assert!(
                close(st.amplitude(idx), *want, 1e-12),
                "basis {value:02b}: got {}, want {want}",
                st.amplitude(idx)
            );
        }
    }

    fn random_kind(rng: &mut impl Rng) -> GateKind {
        match rng.gen_range(0..8) {
            0 => GateKind::H,
            1 => GateKind::X,
            2 => GateKind::Y,
            3 => GateKind::Z,
            4 => GateKind::P1 { l: rng.gen_range(1..8) },
            5 => GateKind::P1InvSq { l: rng.gen_range(1..8) },
            6 => GateKind::ZeroPhase { theta: rng.gen::<f64>() * 6.0 - 3.0 },
            _ => GateKind::Phase { theta: rng.gen::<f64>() * 6.0 - 3.0 },
        }
    }

    fn random_op(rng: &mut impl Rng, n: usize) -> GateOp {
        let target = rng.gen_range(0..n);
        let mut controls = Vec::new();
        for q in 0..n {
            if q != target && rng.gen_bool(0.3) {
                controls.push((q, rng.gen_bool(0.5)));
            }
        }
        GateOp::controlled(random_kind(rng), target, controls)
    }

    /// Embeds a gate op into a full 2^n x 2^n matrix by columns.
    fn full_matrix(op: &GateOp, n: usize) -> Vec<Vec<Complex64>> {
        let dim = 1usize << n;
        let m = op.kind.matrix().unwrap();
        let tshift = n - 1 - op.target;
        let mut full = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for col in 0..dim {
            let satisfied = op
                .controls
                .iter()
                .all(|&(q, b)| (col >> (n - 1 - q) & 1 == 1) == b);
            if !satisfied {
                full[col][col] = Complex64::new(1.0, 0.0);
                continue;
            }
            let b = col >> tshift & 1;
            for bp in 0..2 {
                let row = (col & !(1 << tshift)) | (bp << tshift);
                full[row][col] += m[bp][b];
            }
        }
        full
    }

    fn mat_vec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
        (0..m.len())
            .map(|r| (0..v.len()).map(|c| m[r][c] * v[c]).sum())
            .collect()
    }

    #[test]
    fn gate_application_matches_explicit_matrix_embedding() {
        // Brute-force oracle: random controlled gates on 4 qubits, checked
        // against the Kronecker-style embedded matrix acting on the vector.
        let layout = RegisterLayout::new(1, 1, 1).unwrap(); // 4 qubits
        let n = layout.num_qubits();
        let dim = 1usize << n;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let mut amps: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in &mut amps {
                *a /= norm;
            }
            let mut st = QuantumState::from_amplitudes(&layout, amps.clone()).unwrap();
            let mut reference = amps;
            for _ in 0..6 {
                let op = random_op(&mut rng, n);
                op.apply_to(&mut st).unwrap();
                reference = mat_vec(&full_matrix(&op, n), &reference);
            }
            for (i, want) in reference.iter().enumerate() {
                assert!(
                    close(st.amplitude(i), *want, 1e-10),
                    "amplitude {i} diverged from matrix product"
                );
            }
        }
    }

    #[test]
    fn adjoint_program_undoes_the_original() {
        let layout = RegisterLayout::new(1, 1, 1).unwrap();
        let n = layout.num_qubits();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let mut prog = CircuitProgram::new(StageTag::Knn);
            for _ in 0..10 {
                prog.push(random_op(&mut rng, n));
            }
            let mut st = QuantumState::zero_state(&layout).unwrap();
            let original = st.clone();
            prog.apply_to(&mut st).unwrap();
            prog.adjoint().unwrap().apply_to(&mut st).unwrap();
            assert!(st.fidelity(&original).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn adjoint_reverses_gate_order() {
        let mut prog = CircuitProgram::new(StageTag::Init);
        prog.push(GateOp::new(GateKind::H, 0));
        prog.push(GateOp::new(GateKind::P1 { l: 3 }, 1));
        let adj = prog.adjoint().unwrap();
        assert_eq!(adj.gates()[0].kind, GateKind::ZeroPhase { theta: PI / 6.0 });
        assert_eq!(adj.gates()[0].target, 1);
        assert_eq!(adj.gates()[1].kind, GateKind::H);
    }

    #[test]
    fn hamming_stage_has_fixed_shape() {
        let layout = RegisterLayout::new(1, 2, 1).unwrap();
        let prog = build_hamming_stage(&layout);
        assert_eq!(prog.stage, StageTag::Knn);
        assert_eq!(prog.len(), 4 * 2 + 2);
        // opens and closes with H on the ancilla
        assert_eq!(prog.gates()[0], GateOp::new(GateKind::H, layout.c0()));
        assert_eq!(prog.gates()[prog.len() - 1], GateOp::new(GateKind::H, layout.c0()));
    }

    #[test]
    fn grover_iteration_rotates_uniform_search_to_marked_pattern() {
        // Classic 4-item search: one iteration takes the uniform state to the
        // marked pattern with certainty, including patterns that need the
        // X sandwich.
        for marked in ["11", "10", "00"] {
            let layout = RegisterLayout::new(0, 2, 1).unwrap();
            let mut st = QuantumState::zero_state(&layout).unwrap();
            let fdb = layout.segment(Segment::FeatureDb);
            for q in fdb.clone() {
                GateOp::new(GateKind::H, q).apply_to(&mut st).unwrap();
            }
            let pattern: BitString = marked.parse().unwrap();
            let prog = build_grover_iteration(&layout, &[pattern.clone()]).unwrap();
            prog.apply_to(&mut st).unwrap();
            let qubits: Vec<usize> = fdb.collect();
            let dist = st.distribution(&qubits).unwrap();
            assert!(
                (dist[&pattern] - 1.0).abs() < 1e-12,
                "marked {marked}: p = {}",
                dist[&pattern]
            );
        }
    }

    #[test]
    fn oracle_rejects_wrong_width_pattern() {
        let layout = RegisterLayout::new(0, 2, 1).unwrap();
        let bad: BitString = "101".parse().unwrap();
        assert!(build_phase_oracle(&layout, &[bad]).is_err());
    }

    #[test]
    fn gate_count_formulas() {
        let r = estimate_gate_counts(6, 16, 10).unwrap();
        assert_eq!((r.o1, r.o2, r.o3), (132, 20, 65));
        let r = estimate_gate_counts(6, 16, 4).unwrap();
        assert_eq!(r.o3, 53);
        let r = estimate_gate_counts(1, 1, 0).unwrap();
        assert_eq!((r.o1, r.o2, r.o3), (2, 5, 10));
    }

    #[test]
    fn gate_count_guards_against_overflow_and_zero() {
        assert!(estimate_gate_counts(0, 4, 1).is_err());
        assert!(estimate_gate_counts(4, 0, 1).is_err());
        assert!(estimate_gate_counts(4, u64::MAX, 1).is_err());
    }

    #[test]
    fn text_export_lists_stage_and_gates() {
        let layout = RegisterLayout::new(1, 2, 1).unwrap();
        let text = build_hamming_stage(&layout).to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# stage: knn");
        assert_eq!(lines[1], "H 5"); // c0 = 1 + 2*2
        assert_eq!(lines[2], "X 1 ctrl=(3:1)");
        assert_eq!(lines[3], "X 1");
        let p1 = format!("P1 1 theta={:.16e}", -PI / 4.0);
        assert_eq!(lines[6], p1);
        let corr = format!("P1INVSQ 1 ctrl=(5:1) theta={:.16e}", PI / 2.0);
        assert_eq!(lines[8], corr);
        assert_eq!(lines.len(), 1 + 10);
    }
}
