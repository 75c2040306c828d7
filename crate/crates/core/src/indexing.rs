//! Enumeration of the flow graph's arcs and of the admissible y/z variable
//! keys, with dense column numbering.
//!
//! The graph has one node per (city, stage) pair; an arc `(i, r, j)` carries
//! flow from city `i` at stage `r` to city `j` at stage `r+1`. The visit
//! restrictions are realized as an elimination rule on the index space: keys
//! that pair a city with two different stages (or two cities with one stage)
//! are never materialized as columns.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{City, Stage};

/// Smallest supported city count. The stage index ranges of the layering
/// constraints are vacuous below this.
pub const MIN_N: usize = 5;

/// An arc of the flow graph: city `i` at stage `r`, city `j` at stage `r+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arc {
    pub i: City,
    pub r: Stage,
    pub j: City,
}

impl Arc {
    pub fn new(i: City, r: Stage, j: City) -> Self {
        debug_assert!(i != j);
        Self { i, r, j }
    }
}

// Ordered by (stage, tail, head) so stages group together.
impl Ord for Arc {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.r, self.i, self.j).cmp(&(other.r, other.i, other.j))
    }
}

impl PartialOrd for Arc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Key of a y variable: an ordered pair of arcs with `a.r <= b.r`.
/// `a == b` is the diagonal key carrying the arc's flow indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YKey {
    pub a: Arc,
    pub b: Arc,
}

/// Key of a z variable: three arcs at strictly increasing stages, pairwise
/// admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZKey {
    pub a: Arc,
    pub b: Arc,
    pub c: Arc,
}

/// Pair admissibility for `a.r <= b.r`:
/// same stage requires identical arcs; adjacent stages require head-to-tail
/// chaining with a fresh third city; otherwise all four cities must be
/// pairwise distinct. This is the pair-level statement that a city occupies
/// at most one stage and a stage at most one city.
pub fn pair_admissible(a: Arc, b: Arc) -> bool {
    debug_assert!(a.r <= b.r);
    if a.r == b.r {
        return a == b;
    }
    if b.r == a.r + 1 {
        return b.i == a.j && b.j != a.i;
    }
    a.i != b.i && a.i != b.j && a.j != b.i && a.j != b.j
}

/// Triple admissibility: strictly increasing stages and pairwise admissible.
pub fn triple_admissible(a: Arc, b: Arc, c: Arc) -> bool {
    a.r < b.r
        && b.r < c.r
        && pair_admissible(a, b)
        && pair_admissible(b, c)
        && pair_admissible(a, c)
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_N {
        Err(Error::UnsupportedSize { n, min: MIN_N })
    } else {
        Ok(())
    }
}

/// All arcs `(i, r, j)` with `i, j` in `M`, `i != j`, `r` in `1..=n-2`,
/// in (stage, tail, head) order.
pub fn admissible_arcs(n: usize) -> Result<Vec<Arc>> {
    check_n(n)?;
    let mut arcs = Vec::with_capacity((n - 1) * (n - 2) * (n - 2));
    for r in 1..=(n - 2) as Stage {
        for i in 2..=n as City {
            for j in 2..=n as City {
                if i != j {
                    arcs.push(Arc::new(i, r, j));
                }
            }
        }
    }
    Ok(arcs)
}

/// A column of the model, either a y key or a z key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKey {
    Y(YKey),
    Z(ZKey),
}

impl ColumnKey {
    /// Stable column name: `Y_i_r_j_k_s_t` / `Z_i_r_j_u_p_v_k_s_t`.
    pub fn name(&self) -> String {
        match self {
            ColumnKey::Y(y) => format!(
                "Y_{}_{}_{}_{}_{}_{}",
                y.a.i, y.a.r, y.a.j, y.b.i, y.b.r, y.b.j
            ),
            ColumnKey::Z(z) => format!(
                "Z_{}_{}_{}_{}_{}_{}_{}_{}_{}",
                z.a.i, z.a.r, z.a.j, z.b.i, z.b.r, z.b.j, z.c.i, z.c.r, z.c.j
            ),
        }
    }
}

/// The admissible key space with dense, deterministic column numbering:
/// the y block first, then the z block, each in componentwise key order.
#[derive(Debug, Clone)]
pub struct VariableSpace {
    n: usize,
    arcs: Vec<Arc>,
    arcs_by_stage: Vec<Vec<Arc>>,
    y_keys: Vec<YKey>,
    z_keys: Vec<ZKey>,
    y_col: HashMap<YKey, u32>,
    z_col: HashMap<ZKey, u32>,
    /// Column of the diagonal y key of each arc, aligned with `arcs`.
    diag_cols: Vec<u32>,
}

impl VariableSpace {
    pub fn new(n: usize) -> Result<Self> {
        check_n(n)?;
        let arcs = admissible_arcs(n)?;
        let stages = n - 2;
        let mut arcs_by_stage = vec![Vec::new(); stages + 1];
        for &a in &arcs {
            arcs_by_stage[a.r as usize].push(a);
        }

        let mut y_keys = Vec::new();
        for &a in &arcs {
            for &b in arcs.iter().filter(|b| b.r >= a.r) {
                if pair_admissible(a, b) {
                    y_keys.push(YKey { a, b });
                }
            }
        }
        // Arc order is (r, i, j)-lexicographic, so scanning (a, b) in arc
        // order yields componentwise-sorted keys.
        debug_assert!(y_keys.windows(2).all(|w| w[0] < w[1]));

        let mut z_keys = Vec::new();
        for &a in &arcs {
            for &b in arcs.iter().filter(|b| b.r > a.r) {
                if !pair_admissible(a, b) {
                    continue;
                }
                for &c in arcs.iter().filter(|c| c.r > b.r) {
                    if pair_admissible(b, c) && pair_admissible(a, c) {
                        z_keys.push(ZKey { a, b, c });
                    }
                }
            }
        }
        debug_assert!(z_keys.windows(2).all(|w| w[0] < w[1]));

        let y_col: HashMap<YKey, u32> =
            y_keys.iter().enumerate().map(|(c, &k)| (k, c as u32)).collect();
        let n_y = y_keys.len() as u32;
        let z_col: HashMap<ZKey, u32> =
            z_keys.iter().enumerate().map(|(c, &k)| (k, n_y + c as u32)).collect();
        let diag_cols = arcs.iter().map(|&a| y_col[&YKey { a, b: a }]).collect();

        Ok(Self { n, arcs, arcs_by_stage, y_keys, z_keys, y_col, z_col, diag_cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stages(&self) -> usize {
        self.n - 2
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Arcs originating at stage `r`.
    pub fn arcs_at(&self, r: Stage) -> &[Arc] {
        &self.arcs_by_stage[r as usize]
    }

    pub fn y_keys(&self) -> &[YKey] {
        &self.y_keys
    }

    pub fn z_keys(&self) -> &[ZKey] {
        &self.z_keys
    }

    pub fn n_y(&self) -> usize {
        self.y_keys.len()
    }

    pub fn n_z(&self) -> usize {
        self.z_keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.y_keys.len() + self.z_keys.len()
    }

    pub fn y_column(&self, a: Arc, b: Arc) -> Option<u32> {
        self.y_col.get(&YKey { a, b }).copied()
    }

    pub fn z_column(&self, a: Arc, b: Arc, c: Arc) -> Option<u32> {
        self.z_col.get(&ZKey { a, b, c }).copied()
    }

    /// Column of `y(a, a)`, the flow indicator of arc `a`.
    pub fn diag_column(&self, a: Arc) -> Option<u32> {
        let idx = self.arcs.binary_search(&a).ok()?;
        Some(self.diag_cols[idx])
    }

    /// Column of the k-th arc's diagonal, aligned with `arcs()`.
    pub fn diag_column_of(&self, arc_idx: usize) -> u32 {
        self.diag_cols[arc_idx]
    }

    pub fn key_of(&self, col: u32) -> ColumnKey {
        let c = col as usize;
        if c < self.y_keys.len() {
            ColumnKey::Y(self.y_keys[c])
        } else {
            ColumnKey::Z(self.z_keys[c - self.y_keys.len()])
        }
    }

    pub fn column_name(&self, col: u32) -> String {
        self.key_of(col).name()
    }
}
