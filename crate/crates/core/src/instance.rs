//! TSP instances, instance generators, the stage-indexed cost transform and
//! closed-tour cost evaluation.
//!
//! Cities are 1-based; city 1 is the fixed start/end of travel and
//! `M = {2, .., n}` are the cities to be sequenced. The diagonal of the cost
//! matrix is a "forbidden" sentinel (`f64::INFINITY`) and is never fed into
//! arithmetic.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// 1-based city index. City 1 is the depot.
pub type City = u8;
/// Travel stage, `1..=n-2`.
pub type Stage = u8;

/// A TSP instance: city count and travel-cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    n: usize,
    /// Row-major `n x n`, diagonal stored as `f64::INFINITY`.
    t: Vec<f64>,
    label: String,
}

impl TspInstance {
    /// Builds an instance from a full cost matrix. The diagonal must be
    /// `f64::INFINITY`; all off-diagonal costs must be finite.
    pub fn new(n: usize, t: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInstance(format!("n = {n}, need n >= 3")));
        }
        if t.len() != n * n {
            return Err(Error::InvalidInstance(format!(
                "cost matrix has {} entries, expected {}",
                t.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = t[i * n + j];
                if i == j {
                    if !v.is_infinite() {
                        return Err(Error::InvalidInstance(format!(
                            "diagonal entry ({},{}) must be the infinity sentinel",
                            i + 1,
                            i + 1
                        )));
                    }
                } else if !v.is_finite() {
                    return Err(Error::InvalidInstance(format!(
                        "off-diagonal cost ({},{}) is not finite",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { n, t, label: label.into() })
    }

    /// Instance with every off-diagonal cost equal to `v`.
    pub fn constant(n: usize, v: f64, label: impl Into<String>) -> Result<Self> {
        let mut t = vec![v; n * n];
        for i in 0..n {
            t[i * n + i] = f64::INFINITY;
        }
        Self::new(n, t, label)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    /// Travel cost from city `i` to city `j` (1-based, `i != j`).
    pub fn cost(&self, i: City, j: City) -> f64 {
        debug_assert!(i != j, "diagonal cost queried");
        self.t[(i as usize - 1) * self.n + (j as usize - 1)]
    }

    /// True if every off-diagonal cost is an integer value.
    pub fn is_integral(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| i == j || self.t[i * self.n + j].fract() == 0.0)
        })
    }

    /// Number of travel stages, `|R| = n - 2`.
    pub fn stages(&self) -> usize {
        self.n - 2
    }

    /// The stage-indexed cost `c_{i,r,j}`: the plain leg cost plus the
    /// departure leg from city 1 at the first stage and the return leg to
    /// city 1 at the last stage. For `n = 3` the single stage carries both
    /// corrections, which makes it the true 3-city closed-tour cost.
    pub fn stage_cost(&self, i: City, r: Stage, j: City) -> Result<f64> {
        let n = self.n as u8;
        if i == j {
            return Err(Error::Index(format!("stage cost with i = j = {i}")));
        }
        if i < 2 || i > n || j < 2 || j > n {
            return Err(Error::Index(format!("cities ({i},{j}) outside M for n = {n}")));
        }
        if r < 1 || r as usize > self.stages() {
            return Err(Error::Index(format!("stage {r} outside 1..={}", self.stages())));
        }
        let mut c = self.cost(i, j);
        if r == 1 {
            c += self.cost(1, i);
        }
        if r as usize == self.stages() {
            c += self.cost(j, 1);
        }
        Ok(c)
    }

    /// Cost of the closed tour `1 -> l_1 -> .. -> l_{n-1} -> 1`.
    pub fn tour_cost(&self, tour: &Tour) -> Result<f64> {
        if tour.order().len() != self.n - 1 {
            return Err(Error::InvalidTour(format!(
                "tour visits {} cities, instance has {}",
                tour.order().len() + 1,
                self.n
            )));
        }
        let order = tour.order();
        let mut c = self.cost(1, order[0]);
        for w in order.windows(2) {
            c += self.cost(w[0], w[1]);
        }
        c += self.cost(*order.last().unwrap(), 1);
        Ok(c)
    }

    /// Plain-text rendering: line 1 is `n`, then `n` rows of costs with the
    /// diagonal written as `inf`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.n));
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    if i == j {
                        "inf".to_string()
                    } else {
                        format!("{}", self.t[i * self.n + j])
                    }
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the plain-text instance format produced by [`to_text`].
    ///
    /// [`to_text`]: TspInstance::to_text
    pub fn from_text(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty instance file".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad city count: {e}")))?;
        let mut t = Vec::with_capacity(n * n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing cost row {}", i + 1)))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != n {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {n}",
                    i + 1,
                    fields.len()
                )));
            }
            for f in fields {
                if f.eq_ignore_ascii_case("inf") {
                    t.push(f64::INFINITY);
                } else {
                    t.push(
                        f.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad cost '{f}': {e}")))?,
                    );
                }
            }
        }
        Self::new(n, t, label)
    }
}

/// A tour given as the visiting order of the cities in `M`; city 1 is the
/// implicit start and end.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tour {
    order: Vec<City>,
}

impl Tour {
    /// Validates that `order` is a permutation of `{2, .., n}`.
    pub fn new(n: usize, order: Vec<City>) -> Result<Self> {
        if order.len() != n - 1 {
            return Err(Error::InvalidTour(format!(
                "order has {} cities, expected {}",
                order.len(),
                n - 1
            )));
        }
        let mut seen = vec![false; n + 1];
        for &c in &order {
            if (c as usize) < 2 || c as usize > n || seen[c as usize] {
                return Err(Error::InvalidTour(format!(
                    "order is not a permutation of 2..={n}"
                )));
            }
            seen[c as usize] = true;
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[City] {
        &self.order
    }

    /// City visited at stage `s` (`1..=n-1`).
    pub fn city_at(&self, s: usize) -> City {
        self.order[s - 1]
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1")?;
        for c in &self.order {
            write!(f, "-{c}")?;
        }
        write!(f, "-1")
    }
}

/// The three fixed "extreme-symmetry" cost patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeKind {
    /// All costs -1 except `t[1][2] = t[2][1] = 1`.
    X71,
    /// All costs 1 except `t[1][2] = t[2][1] = -100`.
    X72,
    /// All costs 0 except `t[1][2] = t[2][1] = 1`.
    X73,
}

impl ExtremeKind {
    fn params(self) -> (f64, f64, &'static str) {
        match self {
            ExtremeKind::X71 => (-1.0, 1.0, "1"),
            ExtremeKind::X72 => (1.0, -100.0, "2"),
            ExtremeKind::X73 => (0.0, 1.0, "3"),
        }
    }
}

impl FromStr for ExtremeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x71" | "xtsp71" | "1" => Ok(ExtremeKind::X71),
            "x72" | "xtsp72" | "2" => Ok(ExtremeKind::X72),
            "x73" | "xtsp73" | "3" => Ok(ExtremeKind::X73),
            other => Err(Error::Parse(format!("unknown extreme-instance kind '{other}'"))),
        }
    }
}

/// Random instance with off-diagonal costs drawn uniformly from `[1, 300]`.
///
/// The generator is ChaCha8 seeded with `seed`, so matrices are reproducible
/// across machines. Asymmetric instances fill all ordered pairs row-major;
/// symmetric instances draw each unordered pair once and mirror it.
pub fn generate_random(n: usize, seed: u64, symmetric: bool) -> Result<TspInstance> {
    if n < 3 {
        return Err(Error::InvalidInstance(format!("n = {n}, need n >= 3")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = vec![f64::INFINITY; n * n];
    if symmetric {
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.gen_range(1..=300) as f64;
                t[i * n + j] = v;
                t[j * n + i] = v;
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    t[i * n + j] = rng.gen_range(1..=300) as f64;
                }
            }
        }
    }
    let kind = if symmetric { "stsp" } else { "atsp" };
    TspInstance::new(n, t, format!("{kind}{n}-seed{seed}"))
}

/// One of the fixed "extreme-symmetry" instances at city count `n`.
pub fn generate_extreme(kind: ExtremeKind, n: usize) -> Result<TspInstance> {
    if n < 3 {
        return Err(Error::InvalidInstance(format!("n = {n}, need n >= 3")));
    }
    let (fill, special, suffix) = kind.params();
    let mut inst = TspInstance::constant(n, fill, format!("xtsp{n}{suffix}"))?;
    inst.t[1] = special; // t[1][2]
    inst.t[n] = special; // t[2][1]
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_costs_in_range_and_deterministic() {
        let a = generate_random(7, 42, false).unwrap();
        let b = generate_random(7, 42, false).unwrap();
        assert_eq!(a, b);
        for i in 1..=7u8 {
            for j in 1..=7u8 {
                if i != j {
                    let c = a.cost(i, j);
                    assert!((1.0..=300.0).contains(&c) && c.fract() == 0.0);
                }
            }
        }
        let c = generate_random(7, 43, false).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn symmetric_matrix_equals_transpose() {
        let a = generate_random(7, 7, true).unwrap();
        for i in 1..=7u8 {
            for j in 1..=7u8 {
                if i != j {
                    assert_eq!(a.cost(i, j), a.cost(j, i));
                }
            }
        }
    }

    #[test]
    fn extreme_patterns_cell_by_cell() {
        let x71 = generate_extreme(ExtremeKind::X71, 7).unwrap();
        assert_eq!(x71.cost(3, 5), -1.0);
        assert_eq!(x71.cost(1, 2), 1.0);
        assert_eq!(x71.cost(2, 1), 1.0);
        let x72 = generate_extreme(ExtremeKind::X72, 7).unwrap();
        assert_eq!(x72.cost(2, 1), -100.0);
        assert_eq!(x72.cost(4, 6), 1.0);
        let x73 = generate_extreme(ExtremeKind::X73, 7).unwrap();
        assert_eq!(x73.cost(1, 2), 1.0);
        for i in 1..=7u8 {
            for j in 1..=7u8 {
                if i != j && !((i, j) == (1, 2) || (i, j) == (2, 1)) {
                    assert_eq!(x73.cost(i, j), 0.0);
                }
            }
        }
        assert_eq!(x71.label(), "xtsp71");
    }

    #[test]
    fn stage_cost_cases() {
        // t_{1,3} = 5, t_{3,4} = 7 at the first stage.
        let mut t = vec![0.0; 49];
        for i in 0..7 {
            t[i * 7 + i] = f64::INFINITY;
        }
        t[2] = 5.0; // (1,3)
        t[2 * 7 + 3] = 7.0; // (3,4)
        let inst = TspInstance::new(7, t, "hand").unwrap();
        assert_eq!(inst.stage_cost(3, 1, 4).unwrap(), 12.0);
        assert_eq!(inst.stage_cost(3, 2, 4).unwrap(), 7.0);
        assert_eq!(inst.stage_cost(3, 3, 4).unwrap(), 7.0);

        let zero = TspInstance::constant(7, 0.0, "z").unwrap();
        for r in 1..=5u8 {
            assert_eq!(zero.stage_cost(2, r, 6).unwrap(), 0.0);
        }
        assert!(inst.stage_cost(3, 0, 4).is_err());
        assert!(inst.stage_cost(3, 6, 4).is_err());
        assert!(inst.stage_cost(3, 1, 3).is_err());
    }

    #[test]
    fn n3_single_stage_carries_both_corrections() {
        let mut t = vec![f64::INFINITY; 9];
        t[1] = 10.0; // (1,2)
        t[2] = 20.0; // (1,3)
        t[3] = 1.0; // (2,1)
        t[5] = 2.0; // (2,3)
        t[6] = 3.0; // (3,1)
        t[7] = 4.0; // (3,2)
        let inst = TspInstance::new(3, t, "n3").unwrap();
        // c_{2,1,3} = t_{1,2} + t_{2,3} + t_{3,1}
        assert_eq!(inst.stage_cost(2, 1, 3).unwrap(), 10.0 + 2.0 + 3.0);
        let tour = Tour::new(3, vec![2, 3]).unwrap();
        assert_eq!(inst.tour_cost(&tour).unwrap(), inst.stage_cost(2, 1, 3).unwrap());
    }

    #[test]
    fn tour_cost_examples() {
        let x72 = generate_extreme(ExtremeKind::X72, 7).unwrap();
        let tour = Tour::new(7, vec![2, 3, 4, 5, 6, 7]).unwrap();
        assert_eq!(x72.tour_cost(&tour).unwrap(), -94.0);

        let x71 = generate_extreme(ExtremeKind::X71, 7).unwrap();
        let tour = Tour::new(7, vec![3, 2, 4, 5, 6, 7]).unwrap();
        assert_eq!(x71.tour_cost(&tour).unwrap(), -7.0);

        let zero = TspInstance::constant(7, 0.0, "z").unwrap();
        assert_eq!(zero.tour_cost(&tour).unwrap(), 0.0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(generate_random(2, 0, false).is_err());
        assert!(Tour::new(7, vec![2, 3, 4, 5, 6, 6]).is_err());
        assert!(Tour::new(7, vec![2, 3, 4, 5]).is_err());
        assert!(Tour::new(7, vec![1, 3, 4, 5, 6, 7]).is_err());
        assert!("x99".parse::<ExtremeKind>().is_err());
    }

    #[test]
    fn text_round_trip() {
        let a = generate_random(6, 5, true).unwrap();
        let text = a.to_text();
        let b = TspInstance::from_text(&text, a.label()).unwrap();
        assert_eq!(a, b);
    }
}
