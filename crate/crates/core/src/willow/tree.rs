use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{WillowSchedule, MAX_NODES};
use crate::error::{Error, Result};
use crate::numerics::dyadic::Dyadic;
use crate::numerics::pow2;

/// A closed interval `[left, left + 2^{-e}]` of the construction.
#[derive(Clone, Debug)]
pub struct Node {
    /// Generation (0 for the unit interval).
    pub k: usize,
    /// Family index within the generation.
    pub j: u64,
    pub left: Dyadic,
    pub e: u64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Frostman mass.
    pub weight: BigRational,
}

impl Node {
    pub fn lo(&self) -> BigRational {
        self.left.to_rational()
    }

    pub fn hi(&self) -> BigRational {
        self.left.to_rational() + pow2(-(self.e as i64))
    }

    pub fn length(&self) -> BigRational {
        pow2(-(self.e as i64))
    }
}

/// Children of one parent interval.
#[derive(Clone, Debug)]
pub struct GenerationBlock {
    /// `(j, left endpoint)` in increasing order of `j`, then position.
    pub children: Vec<(u64, Dyadic)>,
    /// `N_{k,j}` for `j = 1..=M_k`.
    pub counts: Vec<u64>,
}

/// Generation-`k` intervals inside `[parent_left, parent_left + 2^{-parent_e}]`.
///
/// Family `j` takes every grid point `l / 2^{n_k + j}` (odd `l` when `j > 1`,
/// so a point on a coarser grid goes to the smaller `j`) whose interval of
/// length `A(k, j)` fits in the parent.
pub fn build_generation(s: &WillowSchedule, k: usize, parent_left: &Dyadic, parent_e: u64) -> Result<GenerationBlock> {
    let g = s.generation(k);
    if !g.enumerable {
        return Err(Error::NonEnumerable {
            generation: k,
            reason: format!("M_{k} = {} with e(k, M_k) = {}", g.m, s.e(k, g.m)),
        });
    }
    let a = parent_left.to_rational();
    let top = &a + pow2(-(parent_e as i64));
    let mut children = Vec::new();
    let mut counts = Vec::with_capacity(g.m as usize);
    for j in 1..=g.m {
        let grid = g.n + j;
        let e = s.e(k, j).value().expect("enumerable generations have small exponents");
        let scale = BigRational::from_integer(BigInt::one() << grid as usize);
        let mut lo = (&a * &scale).ceil().to_integer();
        let hi = ((&top - pow2(-(e as i64))) * &scale).floor().to_integer();
        if j > 1 && lo.is_even() {
            lo += 1;
        }
        let step = if j > 1 { 2 } else { 1 };
        let mut count = 0u64;
        let mut l = lo;
        while l <= hi {
            children.push((j, Dyadic::new(l.clone(), grid)));
            count += 1;
            if children.len() > MAX_NODES {
                return Err(Error::NonEnumerable {
                    generation: k,
                    reason: format!("more than {MAX_NODES} intervals below one parent"),
                });
            }
            l += step;
        }
        counts.push(count);
    }
    Ok(GenerationBlock { children, counts })
}

/// The construction down to generation `K` with its Frostman measure.
#[derive(Clone, Debug)]
pub struct MeasureTree {
    pub nodes: Vec<Node>,
    /// Node indices per generation, sorted by left endpoint.
    pub by_generation: Vec<Vec<usize>>,
}

/// Builds generations `1..=K`, giving each interval of family `j` below `J`
/// the mass `mu(J) / (M_k N_{k,j}(J))`.
pub fn frostman_measure(s: &WillowSchedule, depth: usize) -> Result<MeasureTree> {
    if depth == 0 || depth > s.depth() {
        return Err(Error::domain(format!("depth must lie in 1..={}", s.depth())));
    }
    let mut nodes = vec![Node {
        k: 0,
        j: 0,
        left: Dyadic::zero(),
        e: 0,
        parent: None,
        children: Vec::new(),
        weight: BigRational::one(),
    }];
    let mut by_generation = vec![vec![0usize]];
    for k in 1..=depth {
        let m = s.generation(k).m;
        let mut layer = Vec::new();
        for &p in &by_generation[k - 1] {
            let block = build_generation(s, k, &nodes[p].left, nodes[p].e)?;
            let mut kids = Vec::with_capacity(block.children.len());
            for (j, left) in block.children {
                let n_kj = block.counts[(j - 1) as usize];
                let weight = &nodes[p].weight / BigRational::from_integer(BigInt::from(m) * BigInt::from(n_kj));
                let e = s.e(k, j).value().expect("enumerable");
                kids.push(nodes.len());
                nodes.push(Node {
                    k,
                    j,
                    left,
                    e,
                    parent: Some(p),
                    children: Vec::new(),
                    weight,
                });
                if nodes.len() > MAX_NODES {
                    return Err(Error::NonEnumerable {
                        generation: k,
                        reason: format!("tree exceeds {MAX_NODES} intervals"),
                    });
                }
            }
            layer.extend_from_slice(&kids);
            nodes[p].children = kids;
        }
        layer.sort_by_cached_key(|&i| nodes[i].lo());
        by_generation.push(layer);
    }
    for i in 0..nodes.len() {
        let mut kids = std::mem::take(&mut nodes[i].children);
        kids.sort_by_cached_key(|&c| nodes[c].lo());
        nodes[i].children = kids;
    }
    Ok(MeasureTree { nodes, by_generation })
}

impl MeasureTree {
    pub fn depth(&self) -> usize {
        self.by_generation.len() - 1
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// `mu([lo, hi])`, taking the mass uniform inside leaves.
    pub fn measure(&self, lo: &BigRational, hi: &BigRational) -> BigRational {
        let mut total = BigRational::zero();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            let (a, b) = (node.lo(), node.hi());
            let left = if lo > &a { lo.clone() } else { a.clone() };
            let right = if hi < &b { hi.clone() } else { b.clone() };
            if right <= left {
                continue;
            }
            if left == a && right == b {
                total += &node.weight;
            } else if node.children.is_empty() {
                total += &node.weight * (right - left) / node.length();
            } else {
                stack.extend(node.children.iter().copied());
            }
        }
        total
    }
}
