//! Catalogue tables: parsing, digests, and loading into the register.
//!
//! A table is CSV with header `id,feature` and optional `#` comment lines.
//! Ids made only of 0/1 characters are read as binary strings (width = the
//! longest token, shorter ones left-padded); anything else must parse as
//! decimal, with the id width derived from the largest value. Features are
//! fixed-width bit strings.

use std::collections::HashSet;
use std::io::Read;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::circuits::{CircuitProgram, GateKind, GateOp, StageTag};
use crate::error::{Error, Result};
use crate::statevec::{QuantumState, RegisterLayout, Segment};

/// Widest id/feature accepted by the parser; registers hit the memory cap
/// long before this.
const MAX_FIELD_WIDTH: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatabaseRecord {
    pub id: BitString,
    pub feature: BitString,
}

/// The user's feature pattern, matched against every record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserQuery {
    pub feature: BitString,
}

impl UserQuery {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(UserQuery { feature: s.parse()? })
    }
}

impl std::fmt::Display for UserQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.feature.fmt(f)
    }
}

/// A validated catalogue: at least one record, uniform widths, unique ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatabaseTable {
    records: Vec<DatabaseRecord>,
    id_width: usize,
    feature_width: usize,
}

impl DatabaseTable {
    pub fn new(records: Vec<DatabaseRecord>) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Config("table has no records".into()))?;
        let id_width = first.id.width();
        let feature_width = first.feature.width();
        if feature_width == 0 {
            return Err(Error::Config("features need at least one bit".into()));
        }
        if id_width > MAX_FIELD_WIDTH || feature_width > MAX_FIELD_WIDTH {
            return Err(Error::Config(format!(
                "id/feature widths above {MAX_FIELD_WIDTH} bits are not supported"
            )));
        }
        let mut seen = HashSet::new();
        for rec in &records {
            if rec.id.width() != id_width {
                return Err(Error::WidthMismatch(format!(
                    "id {} has width {}, expected {id_width}",
                    rec.id,
                    rec.id.width()
                )));
            }
            if rec.feature.width() != feature_width {
                return Err(Error::WidthMismatch(format!(
                    "feature {} has width {}, expected {feature_width}",
                    rec.feature,
                    rec.feature.width()
                )));
            }
            if !seen.insert(rec.id.clone()) {
                return Err(Error::Config(format!("duplicate id {}", rec.id)));
            }
        }
        Ok(DatabaseTable { records, id_width, feature_width })
    }

    pub fn records(&self) -> &[DatabaseRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one record
    }

    pub fn id_width(&self) -> usize {
        self.id_width
    }

    pub fn feature_width(&self) -> usize {
        self.feature_width
    }

    /// Register layout for this table: id, two feature segments, one ancilla.
    pub fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new(self.id_width, self.feature_width, 1)
    }

    pub fn check_query(&self, query: &UserQuery) -> Result<()> {
        if query.feature.width() != self.feature_width {
            return Err(Error::WidthMismatch(format!(
                "query {} has width {}, table features have width {}",
                query.feature,
                query.feature.width(),
                self.feature_width
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical row set (sorted `id,feature` lines), so the
    /// digest identifies the catalogue independent of row order or comments.
    pub fn digest(&self) -> String {
        let mut rows: Vec<String> = self
            .records
            .iter()
            .map(|r| format!("{},{}\n", r.id, r.feature))
            .collect();
        rows.sort();
        let mut hasher = Sha256::new();
        for row in &rows {
            hasher.update(row.as_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// The equal-weight superposition of all records:
    /// (1/sqrt N) sum_p |id_p>|f_p>|0...0>|0>, written directly.
    pub fn prepare_database_state(&self) -> Result<QuantumState> {
        let layout = self.layout()?;
        let dim = 1usize
            .checked_shl(layout.num_qubits() as u32)
            .ok_or_else(|| Error::Config("register too large".into()))?;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        let w = Complex64::new(1.0 / (self.len() as f64).sqrt(), 0.0);
        for rec in &self.records {
            amps[layout.compose(rec.id.to_value(), rec.feature.to_value(), 0, 0)] = w;
        }
        QuantumState::from_amplitudes(&layout, amps)
    }

    /// Writes the query pattern into the (still empty) user segment.
    pub fn inject_user_feature(&self, state: &mut QuantumState, query: &UserQuery) -> Result<()> {
        self.check_query(query)?;
        let layout = state.layout().clone();
        let fu = layout.segment(Segment::FeatureUser);
        for (i, a) in state.amplitudes().iter().enumerate() {
            if a.norm_sqr() > 0.0 && layout.extract(i, fu.clone()) != 0 {
                return Err(Error::Config(
                    "user feature segment is already loaded".into(),
                ));
            }
        }
        let x = GateKind::X.matrix()?;
        for k in 0..self.feature_width {
            if query.feature.bit(k) {
                state.apply_unitary2(fu.start + k, &[], &x)?;
            }
        }
        Ok(())
    }

    /// [`DatabaseTable::prepare_database_state`] followed by
    /// [`DatabaseTable::inject_user_feature`].
    pub fn prepare_query_state(&self, query: &UserQuery) -> Result<QuantumState> {
        let mut state = self.prepare_database_state()?;
        self.inject_user_feature(&mut state, query)?;
        Ok(state)
    }

    /// Gate-level encoder for the same state: uniform id superposition
    /// (plain Hadamards when the table fills the id space, a prefix tree of
    /// controlled rotations otherwise), record features written by
    /// id-controlled X gates, then the query pattern.
    pub fn build_init_circuit(&self, query: &UserQuery) -> Result<CircuitProgram> {
        self.check_query(query)?;
        let layout = self.layout()?;
        let ids = layout.segment(Segment::Id);
        let fdb = layout.segment(Segment::FeatureDb);
        let fu = layout.segment(Segment::FeatureUser);
        let mut prog = CircuitProgram::new(StageTag::Init);

        let full = self.id_width < 64 && self.len() as u64 == 1u64 << self.id_width;
        if full {
            for q in ids.clone() {
                prog.push(GateOp::new(GateKind::H, q));
            }
        } else {
            let mut values: Vec<u64> = self.records.iter().map(|r| r.id.to_value()).collect();
            values.sort_unstable();
            let mut prefix = Vec::new();
            prefix_tree(&mut prog, &values, self.id_width, ids.start, 0, &mut prefix)?;
        }

        for rec in &self.records {
            let controls: Vec<(usize, bool)> =
                (0..self.id_width).map(|j| (ids.start + j, rec.id.bit(j))).collect();
            for k in 0..self.feature_width {
                if rec.feature.bit(k) {
                    prog.push(GateOp::controlled(GateKind::X, fdb.start + k, controls.clone()));
                }
            }
        }

        for k in 0..self.feature_width {
            if query.feature.bit(k) {
                prog.push(GateOp::new(GateKind::X, fu.start + k));
            }
        }
        Ok(prog)
    }
}

/// Emits, for one id-qubit, the rotation that splits the remaining records by
/// their next id bit, conditioned on the bits already fixed; then recurses
/// into both halves. `values` must be sorted ascending.
fn prefix_tree(
    prog: &mut CircuitProgram,
    values: &[u64],
    q: usize,
    id_base: usize,
    depth: usize,
    prefix: &mut Vec<(usize, bool)>,
) -> Result<()> {
    if depth == q {
        return Ok(());
    }
    let shift = q - 1 - depth;
    let split = values.partition_point(|&v| v >> shift & 1 == 0);
    let (zeros, ones) = values.split_at(split);
    let target = id_base + depth;
    if zeros.is_empty() {
        prog.push(GateOp::controlled(GateKind::X, target, prefix.clone()));
    } else if !ones.is_empty() {
        let half = (ones.len() as f64 / values.len() as f64).sqrt().asin();
        let (c, s) = (half.cos(), half.sin());
        let m = [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ];
        prog.push(GateOp::unitary2(m, target, prefix.clone())?);
    }
    if !zeros.is_empty() {
        prefix.push((target, false));
        prefix_tree(prog, zeros, q, id_base, depth + 1, prefix)?;
        prefix.pop();
    }
    if !ones.is_empty() {
        prefix.push((target, true));
        prefix_tree(prog, ones, q, id_base, depth + 1, prefix)?;
        prefix.pop();
    }
    Ok(())
}

/// Parses a catalogue table from CSV (see module docs for the format).
pub fn parse_table(reader: impl Read) -> Result<DatabaseTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(reader);

    {
        let headers = rdr.headers().map_err(csv_error)?;
        let fields: Vec<&str> = headers.iter().collect();
        if fields != ["id", "feature"] {
            return Err(Error::Parse {
                line: 1,
                msg: "header must be exactly `id,feature`".into(),
            });
        }
    }

    let mut raw: Vec<(String, String, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        raw.push((rec[0].to_string(), rec[1].to_string(), line));
    }
    if raw.is_empty() {
        return Err(Error::Config("table has no records".into()));
    }

    // feature column: uniform width, 0/1 only
    let feature_width = raw[0].1.chars().count();
    let mut features = Vec::with_capacity(raw.len());
    for (_, f, line) in &raw {
        let bits: BitString = f.parse().map_err(|e| Error::Parse {
            line: *line,
            msg: format!("feature: {e}"),
        })?;
        if bits.width() != feature_width {
            return Err(Error::Parse {
                line: *line,
                msg: format!(
                    "feature {f} has width {}, expected {feature_width}",
                    bits.width()
                ),
            });
        }
        features.push(bits);
    }
    if feature_width > MAX_FIELD_WIDTH {
        return Err(Error::Config(format!(
            "feature width {feature_width} exceeds the {MAX_FIELD_WIDTH}-bit limit"
        )));
    }

    // id column: binary mode when every token is 0/1 characters only
    let binary = raw
        .iter()
        .all(|(id, _, _)| !id.is_empty() && id.chars().all(|c| c == '0' || c == '1'));
    let ids: Vec<BitString> = if binary {
        let id_width = raw.iter().map(|(id, _, _)| id.chars().count()).max().unwrap_or(1);
        if id_width > MAX_FIELD_WIDTH {
            return Err(Error::Config(format!(
                "id width {id_width} exceeds the {MAX_FIELD_WIDTH}-bit limit"
            )));
        }
        let mut out = Vec::with_capacity(raw.len());
        for (id, _, line) in &raw {
            let bits: BitString = id.parse().map_err(|e| Error::Parse {
                line: *line,
                msg: format!("id: {e}"),
            })?;
            out.push(bits.widened(id_width).map_err(|e| Error::Parse {
                line: *line,
                msg: format!("id: {e}"),
            })?);
        }
        out
    } else {
        let mut values = Vec::with_capacity(raw.len());
        for (id, _, line) in &raw {
            let v: u64 = id.parse().map_err(|_| Error::Parse {
                line: *line,
                msg: format!("id `{id}` is neither a bit string nor a decimal number"),
            })?;
            values.push(v);
        }
        let max = *values.iter().max().unwrap();
        let id_width = (64 - max.leading_zeros() as usize).max(1);
        if id_width > MAX_FIELD_WIDTH {
            return Err(Error::Config(format!(
                "id width {id_width} exceeds the {MAX_FIELD_WIDTH}-bit limit"
            )));
        }
        values
            .iter()
            .map(|&v| BitString::from_value(v, id_width))
            .collect::<Result<Vec<_>>>()?
    };

    let mut seen: HashSet<BitString> = HashSet::new();
    for (bits, (_, _, line)) in ids.iter().zip(&raw) {
        if !seen.insert(bits.clone()) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("duplicate id {bits}"),
            });
        }
    }

    let records = ids
        .into_iter()
        .zip(features)
        .map(|(id, feature)| DatabaseRecord { id, feature })
        .collect();
    DatabaseTable::new(records)
}

pub fn parse_table_str(s: &str) -> Result<DatabaseTable> {
    parse_table(s.as_bytes())
}

fn csv_error(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    Error::Parse { line, msg: e.to_string() }
}

/// The catalogue shipped with the crate: 16 records, 4-bit ids, 6-bit
/// features.
pub fn example_table() -> DatabaseTable {
    parse_table_str(include_str!("../data/example16.csv"))
        .expect("bundled table parses")
}
