use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hilbert::CVec;
use crate::{Error, Result};

/// Repeating part of a product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum StateTail {
    Constant(CVec),
    /// Site α holds `states[(α - 1) % len]`.
    Periodic(Vec<CVec>),
}

impl StateTail {
    pub fn period(&self) -> usize {
        match self {
            StateTail::Constant(_) => 1,
            StateTail::Periodic(states) => states.len(),
        }
    }

    /// Tail state for residue `r` = (α − 1) mod period.
    pub fn at_residue(&self, r: usize) -> &CVec {
        match self {
            StateTail::Constant(v) => v,
            StateTail::Periodic(states) => &states[r],
        }
    }
}

/// A product state ⊗_α |ψ_α⟩ over sites α = 1, 2, ...: a periodic tail with
/// finitely many sites overridden.
///
/// JSON form:
/// `{"local_dim": 2, "tail": {"kind": "periodic", "data": [[[re, im], ...], ...]}, "deviations": {"3": [[re, im], ...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProductState")]
pub struct ProductStateSpec {
    local_dim: usize,
    tail: StateTail,
    deviations: BTreeMap<u64, CVec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProductState {
    local_dim: usize,
    tail: StateTail,
    #[serde(default)]
    deviations: BTreeMap<u64, CVec>,
}

impl TryFrom<RawProductState> for ProductStateSpec {
    type Error = Error;

    fn try_from(raw: RawProductState) -> Result<Self> {
        Self::new(raw.local_dim, raw.tail, raw.deviations)
    }
}

impl ProductStateSpec {
    pub fn new(local_dim: usize, tail: StateTail, deviations: BTreeMap<u64, CVec>) -> Result<Self> {
        if local_dim < 1 {
            return Err(Error::InvalidSequence("local_dim must be >= 1".into()));
        }
        if tail.period() == 0 {
            return Err(Error::InvalidSequence(
                "periodic tail needs at least one state".into(),
            ));
        }
        let tail_states: Vec<&CVec> = (0..tail.period()).map(|r| tail.at_residue(r)).collect();
        for (what, v) in tail_states
            .iter()
            .enumerate()
            .map(|(r, v)| (format!("tail state {r}"), *v))
            .chain(
                deviations
                    .iter()
                    .map(|(a, v)| (format!("deviation at site {a}"), v)),
            )
        {
            if v.dim() != local_dim {
                return Err(Error::InvalidSequence(format!(
                    "{what} has dim {} (local_dim {local_dim})",
                    v.dim()
                )));
            }
            if !v.is_unit() {
                return Err(Error::InvalidSequence(format!(
                    "{what} has norm {}",
                    v.norm()
                )));
            }
        }
        if deviations.contains_key(&0) {
            return Err(Error::InvalidSequence("site indices start at 1".into()));
        }
        Ok(Self {
            local_dim,
            tail,
            deviations,
        })
    }

    pub fn constant(state: CVec) -> Result<Self> {
        Self::new(state.dim(), StateTail::Constant(state), BTreeMap::new())
    }

    pub fn periodic(states: Vec<CVec>) -> Result<Self> {
        let dim = states.first().map(CVec::dim).unwrap_or(0);
        Self::new(dim, StateTail::Periodic(states), BTreeMap::new())
    }

    /// Replaces the state at `site`.
    pub fn with_deviation(self, site: u64, state: CVec) -> Result<Self> {
        let mut deviations = self.deviations;
        deviations.insert(site, state);
        Self::new(self.local_dim, self.tail, deviations)
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn tail(&self) -> &StateTail {
        &self.tail
    }

    pub fn deviations(&self) -> &BTreeMap<u64, CVec> {
        &self.deviations
    }

    pub fn period(&self) -> usize {
        self.tail.period()
    }

    pub fn last_deviation(&self) -> Option<u64> {
        self.deviations.keys().next_back().copied()
    }

    pub fn tail_state(&self, site: u64) -> &CVec {
        self.tail
            .at_residue(((site - 1) % self.period() as u64) as usize)
    }

    /// |ψ_α⟩ at a 1-based site.
    pub fn state(&self, site: u64) -> &CVec {
        assert!(site >= 1, "site indices start at 1");
        self.deviations
            .get(&site)
            .unwrap_or_else(|| self.tail_state(site))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSequence(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}
