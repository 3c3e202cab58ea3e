//! Dense statevector simulation over a four-segment register.
//!
//! The register is laid out as four contiguous named segments:
//! `id` (record identifiers), `feature_db` (database feature bits, later
//! overwritten in place by similarity bits), `feature_user` (the query
//! pattern) and `aux` (the post-selection ancilla `c0` lives in its first
//! qubit).
//!
//! Qubit `i` of the register maps to bit `n - 1 - i` of the amplitude index,
//! i.e. the ket string read left to right equals the index read MSB to LSB.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Largest register size accepted without the explicit opt-out
/// (2^26 amplitudes = 1 GiB).
pub const QUBIT_SOFT_CAP: usize = 26;

/// Tolerance on the state norm.
pub const NORM_TOL: f64 = 1e-12;

/// Probability below which a requested projection counts as impossible.
const IMPOSSIBLE_TOL: f64 = 1e-15;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Segment {
    Id,
    FeatureDb,
    FeatureUser,
    Aux,
}

impl Segment {
    pub fn name(self) -> &'static str {
        match self {
            Segment::Id => "id",
            Segment::FeatureDb => "feature_db",
            Segment::FeatureUser => "feature_user",
            Segment::Aux => "aux",
        }
    }
}

/// Named, contiguous, non-overlapping qubit segments covering the register.
///
/// Segment order is fixed: `id`, `feature_db`, `feature_user`, `aux`. The two
/// feature segments always share one width.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegisterLayout {
    id_width: usize,
    feature_width: usize,
    aux_width: usize,
}

impl RegisterLayout {
    pub fn new(id_width: usize, feature_width: usize, aux_width: usize) -> Result<Self> {
        if feature_width == 0 {
            return Err(Error::Config("feature segments need at least one qubit".into()));
        }
        if aux_width == 0 {
            return Err(Error::Config("aux segment needs at least one qubit".into()));
        }
        Ok(RegisterLayout { id_width, feature_width, aux_width })
    }

    pub fn num_qubits(&self) -> usize {
        self.id_width + 2 * self.feature_width + self.aux_width
    }

    pub fn id_width(&self) -> usize {
        self.id_width
    }

    pub fn feature_width(&self) -> usize {
        self.feature_width
    }

    pub fn aux_width(&self) -> usize {
        self.aux_width
    }

    pub fn segment(&self, s: Segment) -> std::ops::Range<usize> {
        let q = self.id_width;
        let l = self.feature_width;
        match s {
            Segment::Id => 0..q,
            Segment::FeatureDb => q..q + l,
            Segment::FeatureUser => q + l..q + 2 * l,
            Segment::Aux => q + 2 * l..q + 2 * l + self.aux_width,
        }
    }

    pub fn segments(&self) -> [(Segment, std::ops::Range<usize>); 4] {
        [
            (Segment::Id, self.segment(Segment::Id)),
            (Segment::FeatureDb, self.segment(Segment::FeatureDb)),
            (Segment::FeatureUser, self.segment(Segment::FeatureUser)),
            (Segment::Aux, self.segment(Segment::Aux)),
        ]
    }

    /// The post-selection ancilla: first qubit of the aux segment.
    pub fn c0(&self) -> usize {
        self.segment(Segment::Aux).start
    }

    /// Index-space mask of one qubit (qubit 0 is the MSB of the index).
    pub fn qubit_mask(&self, qubit: usize) -> usize {
        1usize << (self.num_qubits() - 1 - qubit)
    }

    /// Extracts the value of a qubit range from an amplitude index.
    pub fn extract(&self, index: usize, range: std::ops::Range<usize>) -> u64 {
        let n = self.num_qubits();
        let mut v = 0u64;
        for q in range {
            v = v << 1 | (index >> (n - 1 - q) & 1) as u64;
        }
        v
    }

    pub fn extract_bits(&self, index: usize, range: std::ops::Range<usize>) -> BitString {
        let width = range.len();
        BitString::from_value(self.extract(index, range), width).expect("segment value fits")
    }

    /// Composes an amplitude index from per-segment values.
    pub fn compose(&self, id: u64, feature_db: u64, feature_user: u64, aux: u64) -> usize {
        let l = self.feature_width as u32;
        let idx = ((id << l | feature_db) << l | feature_user) << self.aux_width as u32 | aux;
        idx as usize
    }

    /// Ket string of an amplitude index with `|` between segments.
    pub fn ket_string(&self, index: usize) -> String {
        let mut parts = Vec::with_capacity(4);
        for (_, range) in self.segments() {
            if range.is_empty() {
                continue;
            }
            parts.push(self.extract_bits(index, range).to_string());
        }
        parts.join("|")
    }
}

/// Outcome of measuring a set of qubits.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub qubits: Vec<usize>,
    pub observed: BitString,
    pub probability: f64,
    /// Seed of the generator that produced the draw, when one was supplied
    /// explicitly rather than as a running stream.
    pub seed: Option<u64>,
}

/// Dense statevector over a [`RegisterLayout`].
#[derive(Clone, Debug)]
pub struct QuantumState {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// |bits> as a computational basis state. Fails above the 26-qubit soft
    /// cap; use [`QuantumState::basis_state_uncapped`] to override.
    pub fn basis_state(layout: &RegisterLayout, bits: &BitString) -> Result<Self> {
        check_cap(layout)?;
        Self::basis_state_uncapped(layout, bits)
    }

    pub fn basis_state_uncapped(layout: &RegisterLayout, bits: &BitString) -> Result<Self> {
        let n = layout.num_qubits();
        if bits.width() != n {
            return Err(Error::WidthMismatch(format!(
                "basis pattern has {} bits, register has {n} qubits",
                bits.width()
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
        amps[bits.to_value() as usize] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { layout: layout.clone(), amps })
    }

    /// |0...0> over the layout.
    pub fn zero_state(layout: &RegisterLayout) -> Result<Self> {
        Self::basis_state(layout, &BitString::zeros(layout.num_qubits()))
    }

    /// Builds a state from explicit amplitudes; the vector must be normalized
    /// within [`NORM_TOL`].
    pub fn from_amplitudes(layout: &RegisterLayout, amps: Vec<Complex64>) -> Result<Self> {
        check_cap(layout)?;
        let n = layout.num_qubits();
        if amps.len() != 1usize << n {
            return Err(Error::Config(format!(
                "amplitude vector has {} entries, expected {}",
                amps.len(),
                1usize << n
            )));
        }
        let state = QuantumState { layout: layout.clone(), amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Config(format!("state norm^2 = {norm}, expected 1")));
        }
        Ok(state)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies a (possibly controlled) single-qubit unitary in place.
    ///
    /// `controls` are `(qubit, required_bit)` pairs; the matrix acts on the
    /// subspace where every control qubit holds its required bit.
    pub fn apply_unitary2(
        &mut self,
        target: usize,
        controls: &[(usize, bool)],
        m: &[[Complex64; 2]; 2],
    ) -> Result<()> {
        let n = self.num_qubits();
        if target >= n {
            return Err(Error::Config(format!("target qubit {target} out of range (n={n})")));
        }
        let mut cmask = 0usize;
        let mut cval = 0usize;
        for &(q, b) in controls {
            if q >= n {
                return Err(Error::Config(format!("control qubit {q} out of range (n={n})")));
            }
            if q == target {
                return Err(Error::Config(format!("qubit {q} is both control and target")));
            }
            let mask = self.layout.qubit_mask(q);
            if cmask & mask != 0 {
                return Err(Error::Config(format!("duplicate control qubit {q}")));
            }
            cmask |= mask;
            if b {
                cval |= mask;
            }
        }
        let tmask = self.layout.qubit_mask(target);
        let (m00, m01, m10, m11) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        for i in 0..self.amps.len() {
            if i & tmask == 0 && i & cmask == cval {
                let j = i | tmask;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m00 * a + m01 * b;
                self.amps[j] = m10 * a + m11 * b;
            }
        }
        Ok(())
    }

    /// Exact joint distribution of a set of qubits, including zero-probability
    /// outcomes, keyed by observed bit pattern.
    pub fn distribution(&self, qubits: &[usize]) -> Result<BTreeMap<BitString, f64>> {
        self.check_qubits(qubits)?;
        if qubits.len() > 24 {
            return Err(Error::Config(format!(
                "distribution over {} qubits is too large",
                qubits.len()
            )));
        }
        let probs = self.outcome_probabilities(qubits);
        let mut map = BTreeMap::new();
        for (value, p) in probs.iter().enumerate() {
            let key = BitString::from_value(value as u64, qubits.len())?;
            map.insert(key, *p);
        }
        Ok(map)
    }

    /// Probability vector over the 2^k outcomes of `qubits` (no key objects).
    pub fn outcome_probabilities(&self, qubits: &[usize]) -> Vec<f64> {
        let n = self.num_qubits();
        let mut probs = vec![0.0f64; 1usize << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut outcome = 0usize;
            for &q in qubits {
                outcome = outcome << 1 | (i >> (n - 1 - q) & 1);
            }
            probs[outcome] += p;
        }
        probs
    }

    /// Measures `qubits`, collapsing the state. The draw consumes exactly one
    /// `f64` from `rng`, so equal seeds give equal outcomes on equal states.
    pub fn measure_qubits(
        &mut self,
        qubits: &[usize],
        rng: &mut impl Rng,
    ) -> Result<MeasurementRecord> {
        self.check_qubits(qubits)?;
        let probs = self.outcome_probabilities(qubits);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = probs.len() - 1;
        for (outcome, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = outcome;
                break;
            }
        }
        let p = probs[chosen];
        self.project(qubits, chosen, p)?;
        Ok(MeasurementRecord {
            qubits: qubits.to_vec(),
            observed: BitString::from_value(chosen as u64, qubits.len())?,
            probability: p,
            seed: None,
        })
    }

    /// [`QuantumState::measure_qubits`] with a one-shot ChaCha8 generator
    /// seeded from `seed`.
    pub fn measure_qubits_seeded(
        &mut self,
        qubits: &[usize],
        seed: u64,
    ) -> Result<MeasurementRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut record = self.measure_qubits(qubits, &mut rng)?;
        record.seed = Some(seed);
        Ok(record)
    }

    /// Projects `qubits` onto `value` and renormalizes, returning the
    /// probability of that branch. Zero-probability branches are an error.
    pub fn post_select(&mut self, qubits: &[usize], value: &BitString) -> Result<f64> {
        self.check_qubits(qubits)?;
        if value.width() != qubits.len() {
            return Err(Error::WidthMismatch(format!(
                "projection pattern has {} bits for {} qubits",
                value.width(),
                qubits.len()
            )));
        }
        let probs = self.outcome_probabilities(qubits);
        let outcome = value.to_value() as usize;
        let p = probs[outcome];
        if p < IMPOSSIBLE_TOL {
            return Err(Error::ImpossibleBranch(format!(
                "outcome {value} on qubits {qubits:?} has probability {p:.3e}"
            )));
        }
        self.project(qubits, outcome, p)?;
        Ok(p)
    }

    fn project(&mut self, qubits: &[usize], outcome: usize, p: f64) -> Result<()> {
        if p <= 0.0 {
            return Err(Error::ImpossibleBranch(format!(
                "outcome {outcome} on qubits {qubits:?} has probability 0"
            )));
        }
        let n = self.num_qubits();
        let scale = 1.0 / p.sqrt();
        for i in 0..self.amps.len() {
            let mut o = 0usize;
            for &q in qubits {
                o = o << 1 | (i >> (n - 1 - q) & 1);
            }
            if o == outcome {
                self.amps[i] *= scale;
            } else {
                self.amps[i] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(())
    }

    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::Config("states have different layouts".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Householder-style reflection 2|u><u| - I about `reference`.
    ///
    /// With `reference` the uniform superposition over a branch set, this is
    /// the inversion-about-average step of amplitude amplification expressed
    /// directly on the statevector.
    pub fn reflect_about(&mut self, reference: &QuantumState) -> Result<()> {
        if self.layout != reference.layout {
            return Err(Error::Config("reflection reference has a different layout".into()));
        }
        let overlap: Complex64 = reference
            .amps
            .iter()
            .zip(&self.amps)
            .map(|(u, a)| u.conj() * a)
            .sum();
        let two_overlap = overlap * 2.0;
        for (a, u) in self.amps.iter_mut().zip(&reference.amps) {
            *a = two_overlap * u - *a;
        }
        Ok(())
    }

    /// Writes the full vector as CSV rows `index,ket,re,im`, ket segments
    /// separated by `|`. Row order is ascending index.
    pub fn dump_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "index,ket,re,im")?;
        for (i, a) in self.amps.iter().enumerate() {
            writeln!(w, "{i},{},{:.16e},{:.16e}", self.layout.ket_string(i), a.re, a.im)?;
        }
        Ok(())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        let n = self.num_qubits();
        if qubits.is_empty() {
            return Err(Error::Config("empty qubit list".into()));
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= n {
                return Err(Error::Config(format!("qubit {q} out of range (n={n})")));
            }
            if qubits[..i].contains(&q) {
                return Err(Error::Config(format!("duplicate qubit {q}")));
            }
        }
        Ok(())
    }
}

fn check_cap(layout: &RegisterLayout) -> Result<()> {
    let n = layout.num_qubits();
    if n > QUBIT_SOFT_CAP {
        return Err(Error::Config(format!(
            "register of {n} qubits exceeds the {QUBIT_SOFT_CAP}-qubit soft cap \
             (use the uncapped constructor to override)"
        )));
    }
    Ok(())
}
