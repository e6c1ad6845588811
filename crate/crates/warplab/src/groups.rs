//! Finitely generated groups with word metrics.
//!
//! Elements are stored in a canonical geodesic form, so `word.len()` is the
//! word length with respect to the symmetric generating set. Supported
//! groups: free abelian Z^d, free groups F_k, finite cyclic Z/n, and direct
//! products of any of these (with the union generating set, under which the
//! product word length is the sum of component lengths).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub type GenId = usize;

/// Default cap on enumerated ball sizes.
pub const DEFAULT_BALL_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Z^rank, generators +-e_i.
    Integers { rank: usize },
    /// Free group on `rank` letters.
    Free { rank: usize },
    /// Z/order, generators +-1.
    Cyclic { order: usize },
    /// Direct product, generating set = union of the factors' sets.
    Product(Box<GroupKind>, Box<GroupKind>),
}

impl GroupKind {
    fn generator_count(&self) -> usize {
        match self {
            GroupKind::Integers { rank } => 2 * rank,
            GroupKind::Free { rank } => 2 * rank,
            GroupKind::Cyclic { order: _ } => 2,
            GroupKind::Product(a, b) => a.generator_count() + b.generator_count(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorInfo {
    pub label: String,
    pub inverse: GenId,
}

/// A group presentation with a fixed symmetric generating set.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    name: String,
    kind: GroupKind,
    gens: Vec<GeneratorInfo>,
}

/// Canonical-form element. Ordering is (length, word), which makes sorted
/// enumerations deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    word: Vec<GenId>,
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.word
            .len()
            .cmp(&other.word.len())
            .then_with(|| self.word.cmp(&other.word))
    }
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { word: Vec::new() }
    }

    pub fn word(&self) -> &[GenId] {
        &self.word
    }

    /// Word length of the canonical (geodesic) form.
    #[allow(clippy::len_without_is_empty)] // emptiness is spelled is_identity
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
}

fn free_letters(rank: usize) -> Result<Vec<GeneratorInfo>> {
    if rank == 0 || rank > 26 {
        return Err(Error::invalid(format!(
            "free rank must be in 1..=26, got {rank}"
        )));
    }
    let mut gens = Vec::with_capacity(2 * rank);
    for i in 0..rank {
        let lower = (b'a' + i as u8) as char;
        let upper = lower.to_ascii_uppercase();
        gens.push(GeneratorInfo {
            label: lower.to_string(),
            inverse: 2 * i + 1,
        });
        gens.push(GeneratorInfo {
            label: upper.to_string(),
            inverse: 2 * i,
        });
    }
    Ok(gens)
}

impl GroupSpec {
    pub fn integers(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::invalid("Z^d needs rank >= 1"));
        }
        let mut gens = Vec::with_capacity(2 * rank);
        for i in 0..rank {
            gens.push(GeneratorInfo {
                label: format!("+e{}", i + 1),
                inverse: 2 * i + 1,
            });
            gens.push(GeneratorInfo {
                label: format!("-e{}", i + 1),
                inverse: 2 * i,
            });
        }
        Ok(GroupSpec {
            name: if rank == 1 {
                "Z".to_string()
            } else {
                format!("Z^{rank}")
            },
            kind: GroupKind::Integers { rank },
            gens,
        })
    }

    /// The one-element group: no generators, every word is the identity.
    pub fn trivial() -> Self {
        GroupSpec {
            name: "1".to_string(),
            kind: GroupKind::Cyclic { order: 1 },
            gens: Vec::new(),
        }
    }

    pub fn free(rank: usize) -> Result<Self> {
        Ok(GroupSpec {
            name: format!("F{rank}"),
            kind: GroupKind::Free { rank },
            gens: free_letters(rank)?,
        })
    }

    pub fn cyclic(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("cyclic order must be >= 1"));
        }
        Ok(GroupSpec {
            name: format!("Z/{order}"),
            kind: GroupKind::Cyclic { order },
            gens: vec![
                GeneratorInfo {
                    label: "+1".to_string(),
                    inverse: 1,
                },
                GeneratorInfo {
                    label: "-1".to_string(),
                    inverse: 0,
                },
            ],
        })
    }

    /// Direct product. Generator labels are prefixed by factor index to stay
    /// unambiguous.
    pub fn product(a: GroupSpec, b: GroupSpec) -> GroupSpec {
        let offset = a.gens.len();
        let mut gens = Vec::with_capacity(a.gens.len() + b.gens.len());
        for g in &a.gens {
            gens.push(GeneratorInfo {
                label: format!("0.{}", g.label),
                inverse: g.inverse,
            });
        }
        for g in &b.gens {
            gens.push(GeneratorInfo {
                label: format!("1.{}", g.label),
                inverse: g.inverse + offset,
            });
        }
        GroupSpec {
            name: format!("{} x {}", a.name, b.name),
            kind: GroupKind::Product(Box::new(a.kind), Box::new(b.kind)),
            gens,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn generator_count(&self) -> usize {
        self.gens.len()
    }

    pub fn generator(&self, id: GenId) -> &GeneratorInfo {
        &self.gens[id]
    }

    pub fn inverse_gen(&self, id: GenId) -> GenId {
        self.gens[id].inverse
    }

    pub fn generator_by_label(&self, label: &str) -> Result<GenId> {
        self.gens
            .iter()
            .position(|g| g.label == label)
            .ok_or_else(|| Error::invalid(format!("unknown generator label '{label}'")))
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity()
    }

    /// Single-generator element.
    pub fn gen_element(&self, id: GenId) -> GroupElement {
        debug_assert!(id < self.gens.len());
        GroupElement { word: vec![id] }
    }

    /// Canonical geodesic form of an arbitrary word.
    pub fn canonical(&self, word: &[GenId]) -> Result<Vec<GenId>> {
        for &g in word {
            if g >= self.gens.len() {
                return Err(Error::invalid(format!(
                    "generator id {g} out of range for {}",
                    self.name
                )));
            }
        }
        Ok(canonical_kind(&self.kind, word))
    }

    pub fn element_from_word(&self, word: &[GenId]) -> Result<GroupElement> {
        Ok(GroupElement {
            word: self.canonical(word)?,
        })
    }

    pub fn element_from_labels(&self, labels: &[&str]) -> Result<GroupElement> {
        let word = labels
            .iter()
            .map(|l| self.generator_by_label(l))
            .collect::<Result<Vec<_>>>()?;
        self.element_from_word(&word)
    }

    /// Word length of an arbitrary word given by labels.
    pub fn word_length(&self, labels: &[&str]) -> Result<usize> {
        Ok(self.element_from_labels(labels)?.len())
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut w = Vec::with_capacity(a.word.len() + b.word.len());
        w.extend_from_slice(&a.word);
        w.extend_from_slice(&b.word);
        GroupElement {
            word: canonical_kind(&self.kind, &w),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        let w: Vec<GenId> = a.word.iter().rev().map(|&g| self.gens[g].inverse).collect();
        GroupElement {
            word: canonical_kind(&self.kind, &w),
        }
    }

    /// Human-readable form, `e` for the identity.
    pub fn describe(&self, a: &GroupElement) -> String {
        if a.is_identity() {
            return "e".to_string();
        }
        a.word
            .iter()
            .map(|&g| self.gens[g].label.as_str())
            .collect::<Vec<_>>()
            .join(".")
    }

    /// Closed ball of radius `r` in the word metric, sorted by (length, word).
    pub fn word_ball(&self, r: usize, cap: usize) -> Result<Vec<GroupElement>> {
        let mut seen: HashMap<Vec<GenId>, ()> = HashMap::new();
        let mut out = vec![GroupElement::identity()];
        seen.insert(Vec::new(), ());
        let mut frontier = vec![GroupElement::identity()];
        for _layer in 0..r {
            let mut next = Vec::new();
            for elem in &frontier {
                for g in 0..self.gens.len() {
                    let prod = self.multiply(elem, &self.gen_element(g));
                    if !seen.contains_key(&prod.word) {
                        if out.len() + next.len() + 1 > cap {
                            return Err(Error::ResourceLimit {
                                what: "word ball",
                                cap,
                                requested: out.len() + next.len() + 1,
                            });
                        }
                        seen.insert(prod.word.clone(), ());
                        next.push(prod);
                    }
                }
            }
            next.sort();
            out.extend(next.iter().cloned());
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        Ok(out)
    }

    /// Cayley graph restricted to the ball of radius `r`.
    /// Returns (sorted ball, graph over ball positions).
    pub fn cayley_ball_graph(&self, r: usize, cap: usize) -> Result<(Vec<GroupElement>, Graph)> {
        let ball = self.word_ball(r, cap)?;
        let index: HashMap<&[GenId], usize> = ball
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.as_slice(), i))
            .collect();
        let mut graph = Graph::new(ball.len());
        for (i, elem) in ball.iter().enumerate() {
            for g in 0..self.gens.len() {
                let prod = self.multiply(elem, &self.gen_element(g));
                if let Some(&j) = index.get(prod.word.as_slice()) {
                    if i != j {
                        graph.add_edge(i as u32, j as u32)?;
                    }
                }
            }
        }
        Ok((ball, graph))
    }
}

fn canonical_kind(kind: &GroupKind, word: &[GenId]) -> Vec<GenId> {
    match kind {
        GroupKind::Integers { rank } => {
            let mut exps = vec![0i64; *rank];
            for &g in word {
                let coord = g / 2;
                if g % 2 == 0 {
                    exps[coord] += 1;
                } else {
                    exps[coord] -= 1;
                }
            }
            let mut out = Vec::new();
            for (i, &e) in exps.iter().enumerate() {
                let gen = if e >= 0 { 2 * i } else { 2 * i + 1 };
                for _ in 0..e.unsigned_abs() {
                    out.push(gen);
                }
            }
            out
        }
        GroupKind::Free { rank: _ } => {
            let mut stack: Vec<GenId> = Vec::with_capacity(word.len());
            for &g in word {
                let inv = g ^ 1; // letters are paired (2i, 2i+1)
                if stack.last() == Some(&inv) {
                    stack.pop();
                } else {
                    stack.push(g);
                }
            }
            stack
        }
        GroupKind::Cyclic { order } => {
            let n = *order as i64;
            let mut net = 0i64;
            for &g in word {
                net += if g == 0 { 1 } else { -1 };
            }
            let r = net.rem_euclid(n);
            if r == 0 {
                Vec::new()
            } else if 2 * r <= n {
                vec![0; r as usize]
            } else {
                vec![1; (n - r) as usize]
            }
        }
        GroupKind::Product(a, b) => {
            let na = a.generator_count();
            let (wa, wb): (Vec<GenId>, Vec<GenId>) = word.iter().partition(|&&g| g < na);
            let wb: Vec<GenId> = wb.into_iter().map(|g| g - na).collect();
            let mut out = canonical_kind(a, &wa);
            out.extend(canonical_kind(b, &wb).into_iter().map(|g| g + na));
            out
        }
    }
}
