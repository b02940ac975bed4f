//! Kochen-Specker {0,1}-colorability.
//!
//! The search assigns every distinct ray a value so that each context holds
//! exactly one 1. It branches on "which ray of this context is the 1",
//! always picking the undecided context with the fewest open rays, and
//! propagates after each choice. The search is exhaustive, so a `None`
//! answer certifies the instance is not colorable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Context;
use crate::hilbert::{CVec, Ray, RayMap};
use crate::{Error, Result};

/// A finite set of vectors and the contexts (index sets) built from them.
#[derive(Debug, Clone, Serialize)]
pub struct KsInstance {
    dim: usize,
    vectors: Vec<CVec>,
    contexts: Vec<Vec<usize>>,
}

/// On-disk form: `{"dim": d, "vectors": [[[re, im], ...], ...], "contexts": [[i, ...], ...]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KsInstanceFile {
    dim: usize,
    vectors: Vec<Vec<Complex64>>,
    contexts: Vec<Vec<usize>>,
}

impl KsInstance {
    /// Vectors are normalized on entry; each context must materialize to a
    /// valid [`Context`].
    pub fn new(dim: usize, vectors: Vec<CVec>, contexts: Vec<Vec<usize>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::MalformedInstance("dim must be >= 2".into()));
        }
        let vectors = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v.dim() != dim {
                    return Err(Error::MalformedInstance(format!(
                        "vectors[{i}] has dim {} (expected {dim})",
                        v.dim()
                    )));
                }
                if (v.norm_sqr() - 1.0).abs() <= 8.0 * f64::EPSILON {
                    // unit up to rounding; rescaling would only perturb the last bits
                    return Ok(v);
                }
                v.normalized()
                    .map_err(|_| Error::MalformedInstance(format!("vectors[{i}] is zero")))
            })
            .collect::<Result<Vec<_>>>()?;
        for (ci, ctx) in contexts.iter().enumerate() {
            if ctx.len() != dim {
                return Err(Error::MalformedInstance(format!(
                    "contexts[{ci}] has {} members (expected {dim})",
                    ctx.len()
                )));
            }
            if let Some(&bad) = ctx.iter().find(|&&i| i >= vectors.len()) {
                return Err(Error::MalformedInstance(format!(
                    "contexts[{ci}] references vector {bad}, only {} given",
                    vectors.len()
                )));
            }
            let basis = ctx.iter().map(|&i| vectors[i].clone()).collect();
            Context::new(basis)
                .map_err(|e| Error::MalformedInstance(format!("contexts[{ci}]: {e}")))?;
        }
        Ok(Self {
            dim,
            vectors,
            contexts,
        })
    }

    /// Parses the JSON file format; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: KsInstanceFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedInstance(e.to_string()))?;
        let vectors = raw
            .vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                CVec::new(v).map_err(|_| Error::MalformedInstance(format!("vectors[{i}] is empty")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.dim, vectors, raw.contexts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    pub fn materialize(&self) -> Vec<Context> {
        self.contexts
            .iter()
            .enumerate()
            .map(|(ci, ctx)| {
                Context::new(ctx.iter().map(|&i| self.vectors[i].clone()).collect())
                    .expect("validated at construction")
                    .with_label(format!("context {ci}"))
            })
            .collect()
    }

    /// The 18-vector, 9-context set in dimension 4 (Cabello, Estebaranz and
    /// García-Alcaine). Every vector lies in exactly two of the nine
    /// contexts, so no {0,1} coloring exists.
    pub fn cabello18() -> Self {
        const BASES: [[[i8; 4]; 4]; 9] = [
            [[0, 0, 0, 1], [0, 0, 1, 0], [1, 1, 0, 0], [1, -1, 0, 0]],
            [[0, 0, 0, 1], [0, 1, 0, 0], [1, 0, 1, 0], [1, 0, -1, 0]],
            [[1, -1, 1, -1], [1, -1, -1, 1], [1, 1, 0, 0], [0, 0, 1, 1]],
            [[1, -1, 1, -1], [1, 1, 1, 1], [1, 0, -1, 0], [0, 1, 0, -1]],
            [[0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 1], [1, 0, 0, -1]],
            [[1, -1, -1, 1], [1, 1, 1, 1], [1, 0, 0, -1], [0, 1, -1, 0]],
            [[1, 1, -1, 1], [1, 1, 1, -1], [1, -1, 0, 0], [0, 0, 1, 1]],
            [[1, 1, -1, 1], [-1, 1, 1, 1], [1, 0, 1, 0], [0, 1, 0, -1]],
            [[1, 1, 1, -1], [-1, 1, 1, 1], [1, 0, 0, 1], [0, 1, -1, 0]],
        ];
        Self::from_integer_bases(4, &BASES.iter().map(|b| b.to_vec()).collect::<Vec<_>>())
    }

    /// Two contexts in dimension 3 sharing one ray. Colorable.
    pub fn control() -> Self {
        let bases = vec![
            vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            vec![[1, 0, 0], [0, 1, 1], [0, 1, -1]],
        ];
        Self::from_integer_bases(3, &bases)
    }

    /// Builds an instance from integer bases, merging repeated vectors.
    fn from_integer_bases<const D: usize>(dim: usize, bases: &[Vec<[i8; D]>]) -> Self {
        let mut vectors: Vec<[i8; D]> = Vec::new();
        let mut contexts = Vec::new();
        for basis in bases {
            let ctx = basis
                .iter()
                .map(|v| {
                    vectors.iter().position(|w| w == v).unwrap_or_else(|| {
                        vectors.push(*v);
                        vectors.len() - 1
                    })
                })
                .collect();
            contexts.push(ctx);
        }
        let vectors = vectors
            .iter()
            .map(|v| CVec::from_real(&v.map(f64::from)).expect("nonempty"))
            .collect();
        Self::new(dim, vectors, contexts).expect("embedded instance is valid")
    }
}

/// A {0,1} value per ray.
#[derive(Debug, Clone)]
pub struct ValueAssignment {
    values: RayMap<bool>,
}

impl ValueAssignment {
    pub fn value(&self, ray: &Ray) -> Option<bool> {
        self.values.get(ray).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ray, bool)> {
        self.values.iter().map(|(r, &v)| (r, v))
    }

    /// Value of each instance vector, in instance order.
    pub fn vector_values(&self, instance: &KsInstance) -> Option<Vec<u8>> {
        instance
            .vectors()
            .iter()
            .map(|v| self.value(&Ray::new(v).ok()?).map(u8::from))
            .collect()
    }

    /// Exactly one ray valued 1 in every context of `instance`.
    pub fn satisfies(&self, instance: &KsInstance) -> bool {
        let Some(values) = self.vector_values(instance) else {
            return false;
        };
        instance
            .contexts()
            .iter()
            .all(|ctx| ctx.iter().map(|&i| usize::from(values[i])).sum::<usize>() == 1)
    }
}

/// Result of an exhaustive colorability search.
#[derive(Debug, Clone)]
pub struct KsOutcome {
    pub assignment: Option<ValueAssignment>,
    pub rays: usize,
    pub contexts_checked: usize,
    /// Branching decisions explored.
    pub nodes: u64,
}

pub fn ks_colorability(instance: &KsInstance) -> Option<ValueAssignment> {
    ks_search(instance).assignment
}

pub fn ks_search(instance: &KsInstance) -> KsOutcome {
    // merge vectors that define the same ray
    let mut classes: RayMap<usize> = RayMap::new();
    let mut class_of = Vec::with_capacity(instance.vectors.len());
    for v in &instance.vectors {
        let ray = Ray::new(v).expect("normalized at construction");
        let next = classes.len();
        let id = match classes.get(&ray) {
            Some(&id) => id,
            None => {
                classes.insert(ray, next);
                next
            }
        };
        class_of.push(id);
    }
    let contexts: Vec<Vec<usize>> = instance
        .contexts
        .iter()
        .map(|ctx| ctx.iter().map(|&i| class_of[i]).collect())
        .collect();
    let mut occurs = vec![Vec::new(); classes.len()];
    for (ci, ctx) in contexts.iter().enumerate() {
        for &r in ctx {
            occurs[r].push(ci);
        }
    }

    let mut search = Search {
        contexts: &contexts,
        occurs: &occurs,
        nodes: 0,
    };
    let mut state = vec![Cell::Open; classes.len()];
    let all: Vec<usize> = (0..contexts.len()).collect();
    let solved = search.propagate(&mut state, all) && search.solve(&mut state);

    let assignment = solved.then(|| ValueAssignment {
        values: classes
            .iter()
            // rays in no context are unconstrained
            .map(|(ray, &id)| (ray.clone(), state[id] == Cell::One))
            .collect(),
    });
    KsOutcome {
        assignment,
        rays: classes.len(),
        contexts_checked: contexts.len(),
        nodes: search.nodes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Open,
    Zero,
    One,
}

struct Search<'a> {
    contexts: &'a [Vec<usize>],
    occurs: &'a [Vec<usize>],
    nodes: u64,
}

impl Search<'_> {
    fn solve(&mut self, state: &mut Vec<Cell>) -> bool {
        // undecided context with fewest open members
        let mut pick: Option<(usize, usize)> = None;
        for (ci, ctx) in self.contexts.iter().enumerate() {
            if ctx.iter().any(|&r| state[r] == Cell::One) {
                continue;
            }
            let open = ctx.iter().filter(|&&r| state[r] == Cell::Open).count();
            if pick.is_none_or(|(_, best)| open < best) {
                pick = Some((ci, open));
            }
        }
        let Some((ci, _)) = pick else {
            return true;
        };
        let candidates: Vec<usize> = self.contexts[ci]
            .iter()
            .copied()
            .filter(|&r| state[r] == Cell::Open)
            .collect();
        for r in candidates {
            self.nodes += 1;
            let mut trial = state.clone();
            trial[r] = Cell::One;
            if self.propagate(&mut trial, self.occurs[r].clone()) && self.solve(&mut trial) {
                *state = trial;
                return true;
            }
        }
        false
    }

    /// Unit propagation to a fixpoint; false on conflict.
    fn propagate(&self, state: &mut [Cell], mut queue: Vec<usize>) -> bool {
        while let Some(ci) = queue.pop() {
            let ctx = &self.contexts[ci];
            let ones = ctx.iter().filter(|&&r| state[r] == Cell::One).count();
            let open: Vec<usize> = ctx
                .iter()
                .copied()
                .filter(|&r| state[r] == Cell::Open)
                .collect();
            let forced = match (ones, open.len()) {
                (0, 0) => return false,
                (0, 1) => Cell::One,
                (1, _) => Cell::Zero,
                (0, _) => continue,
                _ => return false,
            };
            for r in open {
                state[r] = forced;
                queue.extend(self.occurs[r].iter().copied());
            }
        }
        true
    }
}
