//! Finite windows of ℕ₀ⁿ, ℤⁿ and the directed n-ary tree 𝒟ₙ.
//!
//! Vertices are addressed by `usize` indices. Lattice windows use row-major
//! order over the box, tree windows use depth-first (preorder) order with
//! children visited `1, …, n`. Both orders are topological: every edge goes
//! from a smaller to a larger index.
//!
//! Distances are `Option<u64>` with `None` standing for `∞`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of vertices in a window.
pub const MAX_WINDOW_VERTICES: u128 = 1 << 36;

/// The three digraph families and their window parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `{0, …, side−1}ⁿ` inside ℕ₀ⁿ.
    NaturalLattice { dim: usize, side: usize },
    /// `{−margin, …, side−1}ⁿ` inside ℤⁿ. The observed vertices are those
    /// with all coordinates `≥ 0`; the margin only supplies coverers.
    IntegerLattice {
        dim: usize,
        side: usize,
        margin: usize,
    },
    /// Words of length `≤ depth` over `{1, …, arity}`.
    DirectedTree { arity: usize, depth: usize },
}

/// Vertices `x` with `d(x, y) < ∞` that lie in the window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coverers {
    pub vertices: Vec<usize>,
    /// True when coverers outside the window exist (ℤⁿ only).
    pub truncated: bool,
}

/// Open ball `{y : d(x, y) < r}` intersected with the window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ball {
    pub center: usize,
    pub radius: u64,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphWindow {
    family: Family,
    len: usize,
    /// Lattice: vertices per axis. Tree: unused.
    extent: usize,
    /// Lattice: coordinate of the first vertex on each axis.
    lower: i64,
    /// Tree: `subtree[h]` is the size of a full subtree of height `h`.
    subtree: Vec<usize>,
}

impl GraphWindow {
    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::NaturalLattice { dim, side } => Self::lattice(family, dim, side, 0),
            Family::IntegerLattice { dim, side, margin } => {
                Self::lattice(family, dim, side, margin)
            }
            Family::DirectedTree { arity, depth } => {
                if arity < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "tree arity must be >= 2, got {arity}"
                    )));
                }
                let mut subtree = Vec::with_capacity(depth + 1);
                let mut size: u128 = 1;
                subtree.push(1usize);
                for _ in 0..depth {
                    size = size * arity as u128 + 1;
                    if size > MAX_WINDOW_VERTICES {
                        return Err(too_large(size));
                    }
                    subtree.push(size as usize);
                }
                Ok(Self {
                    family,
                    len: size as usize,
                    extent: 0,
                    lower: 0,
                    subtree,
                })
            }
        }
    }

    fn lattice(family: Family, dim: usize, side: usize, margin: usize) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(Error::InvalidArgument(format!(
                "lattice window needs dim >= 1 and side >= 1, got dim {dim}, side {side}"
            )));
        }
        let extent = side + margin;
        let len = (extent as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        if len > MAX_WINDOW_VERTICES {
            return Err(too_large(len));
        }
        Ok(Self {
            family,
            len: len as usize,
            extent,
            lower: -(margin as i64),
            subtree: Vec::new(),
        })
    }

    pub fn natural(dim: usize, side: usize) -> Result<Self> {
        Self::new(Family::NaturalLattice { dim, side })
    }

    pub fn integer(dim: usize, side: usize, margin: usize) -> Result<Self> {
        Self::new(Family::IntegerLattice { dim, side, margin })
    }

    pub fn tree(arity: usize, depth: usize) -> Result<Self> {
        Self::new(Family::DirectedTree { arity, depth })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.family, Family::DirectedTree { .. })
    }

    /// Lattice dimension, or `None` for trees.
    pub fn dim(&self) -> Option<usize> {
        match self.family {
            Family::NaturalLattice { dim, .. } | Family::IntegerLattice { dim, .. } => Some(dim),
            Family::DirectedTree { .. } => None,
        }
    }

    /// Vertices per lattice axis (including the margin).
    pub fn extent(&self) -> usize {
        self.extent
    }

    /// Lowest lattice coordinate (`−margin`).
    pub fn lower(&self) -> i64 {
        self.lower
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.len {
            Ok(())
        } else {
            Err(Error::OutOfWindow(format!("index {v} (window has {})", self.len)))
        }
    }

    // ---- lattice codec ----

    /// Coordinates of a lattice vertex.
    pub fn coords(&self, v: usize) -> Result<Vec<i64>> {
        self.check(v)?;
        let dim = self.dim().ok_or_else(|| {
            Error::InvalidArgument("coords are only defined for lattice windows".into())
        })?;
        let mut out = vec![0i64; dim];
        let mut r = v;
        for c in out.iter_mut().rev() {
            *c = (r % self.extent) as i64 + self.lower;
            r /= self.extent;
        }
        Ok(out)
    }

    pub fn index_of_coords(&self, coords: &[i64]) -> Result<usize> {
        let dim = self.dim().ok_or_else(|| {
            Error::InvalidArgument("coords are only defined for lattice windows".into())
        })?;
        if coords.len() != dim {
            return Err(Error::OutOfWindow(format!("{coords:?} has the wrong dimension")));
        }
        let upper = self.lower + self.extent as i64;
        let mut idx = 0usize;
        for &c in coords {
            if c < self.lower || c >= upper {
                return Err(Error::OutOfWindow(format!("{coords:?}")));
            }
            idx = idx * self.extent + (c - self.lower) as usize;
        }
        Ok(idx)
    }

    // ---- tree codec ----

    fn tree_params(&self) -> Result<(usize, usize)> {
        match self.family {
            Family::DirectedTree { arity, depth } => Ok((arity, depth)),
            _ => Err(Error::InvalidArgument("words are only defined for tree windows".into())),
        }
    }

    /// The word `(j_1, …, j_k)` with letters in `1..=arity`; the root is `[]`.
    pub fn word(&self, v: usize) -> Result<Vec<usize>> {
        self.check(v)?;
        let (_, depth) = self.tree_params()?;
        let mut word = Vec::new();
        let mut r = v;
        let mut height = depth;
        while r > 0 {
            r -= 1;
            height -= 1;
            let size = self.subtree[height];
            word.push(r / size + 1);
            r %= size;
        }
        Ok(word)
    }

    pub fn index_of_word(&self, word: &[usize]) -> Result<usize> {
        let (arity, depth) = self.tree_params()?;
        if word.len() > depth || word.iter().any(|&j| j == 0 || j > arity) {
            return Err(Error::OutOfWindow(format!("{word:?}")));
        }
        let mut idx = 0;
        for (k, &j) in word.iter().enumerate() {
            idx += 1 + (j - 1) * self.subtree[depth - k - 1];
        }
        Ok(idx)
    }

    /// Depth `d(∅, v)` of a tree vertex.
    pub fn depth_of(&self, v: usize) -> Result<usize> {
        Ok(self.word(v)?.len())
    }

    // ---- metric ----

    /// `d(x, y)`: number of edges on a directed path from `x` to `y`, or
    /// `None` if `y` is not reachable from `x`.
    pub fn distance(&self, x: usize, y: usize) -> Result<Option<u64>> {
        self.check(x)?;
        self.check(y)?;
        if self.is_tree() {
            let (_, depth) = self.tree_params()?;
            let dx = self.depth_of(x)?;
            let dy = self.depth_of(y)?;
            let span = self.subtree[depth - dx];
            return Ok((y >= x && y < x + span).then(|| (dy - dx) as u64));
        }
        let a = self.coords(x)?;
        let b = self.coords(y)?;
        let mut d = 0u64;
        for (ai, bi) in a.iter().zip(&b) {
            if bi < ai {
                return Ok(None);
            }
            d += (bi - ai) as u64;
        }
        Ok(Some(d))
    }

    /// Exact enumeration of `B_r(x)` within the window, sorted by index.
    pub fn ball(&self, x: usize, r: u64) -> Result<Ball> {
        self.check(x)?;
        let mut vertices = Vec::new();
        if r > 0 {
            if self.is_tree() {
                let (arity, depth) = self.tree_params()?;
                let dx = self.depth_of(x)?;
                let reach = (r - 1).min((depth - dx) as u64) as usize;
                self.collect_descendants(x, depth - dx, reach, arity, &mut vertices);
            } else {
                let start = self.coords(x)?;
                let mut cur = start.clone();
                self.collect_simplex(&mut cur, 0, r - 1, &mut vertices)?;
            }
            vertices.sort_unstable();
        }
        Ok(Ball {
            center: x,
            radius: r,
            vertices,
        })
    }

    fn collect_descendants(
        &self,
        v: usize,
        height: usize,
        levels: usize,
        arity: usize,
        out: &mut Vec<usize>,
    ) {
        out.push(v);
        if levels == 0 || height == 0 {
            return;
        }
        let child_size = self.subtree[height - 1];
        for j in 0..arity {
            self.collect_descendants(v + 1 + j * child_size, height - 1, levels - 1, arity, out);
        }
    }

    fn collect_simplex(
        &self,
        cur: &mut Vec<i64>,
        axis: usize,
        budget: u64,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        if axis == cur.len() {
            out.push(self.index_of_coords(cur)?);
            return Ok(());
        }
        let base = cur[axis];
        let upper = self.lower + self.extent as i64 - 1;
        let mut step = 0u64;
        while step <= budget && base + step as i64 <= upper {
            cur[axis] = base + step as i64;
            self.collect_simplex(cur, axis + 1, budget - step, out)?;
            step += 1;
        }
        cur[axis] = base;
        Ok(())
    }

    /// All window vertices that can reach `y`: the box below `y` on lattices,
    /// the ancestor chain (including `y`) on trees.
    pub fn in_coverers(&self, y: usize) -> Result<Coverers> {
        self.check(y)?;
        if self.is_tree() {
            let (_, depth) = self.tree_params()?;
            let word = self.word(y)?;
            let mut vertices = Vec::with_capacity(word.len() + 1);
            let mut idx = 0;
            vertices.push(0);
            for (k, &j) in word.iter().enumerate() {
                idx += 1 + (j - 1) * self.subtree[depth - k - 1];
                vertices.push(idx);
            }
            return Ok(Coverers {
                vertices,
                truncated: false,
            });
        }
        let top = self.coords(y)?;
        let mut vertices = Vec::new();
        let mut cur = vec![self.lower; top.len()];
        loop {
            vertices.push(self.index_of_coords(&cur)?);
            let mut axis = top.len();
            loop {
                if axis == 0 {
                    return Ok(Coverers {
                        vertices,
                        truncated: matches!(self.family, Family::IntegerLattice { .. }),
                    });
                }
                axis -= 1;
                if cur[axis] < top[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = self.lower;
            }
        }
    }

    /// Whether `v` counts towards uncovered statistics (ℤⁿ margin excluded).
    pub fn is_observed(&self, v: usize) -> bool {
        match self.family {
            Family::IntegerLattice { .. } => self
                .coords(v)
                .map(|c| c.iter().all(|&x| x >= 0))
                .unwrap_or(false),
            _ => v < self.len,
        }
    }

    /// Whether `v` lies within distance 1 of the far boundary of the window:
    /// some coordinate `≥ side − 2` on lattices, depth `≥ depth − 1` on trees.
    pub fn near_far_boundary(&self, v: usize) -> bool {
        match self.family {
            Family::DirectedTree { depth, .. } => {
                self.depth_of(v).map(|d| d + 1 >= depth).unwrap_or(false)
            }
            Family::NaturalLattice { side, .. } | Family::IntegerLattice { side, .. } => self
                .coords(v)
                .map(|c| c.iter().any(|&x| x + 2 >= side as i64))
                .unwrap_or(false),
        }
    }
}

fn too_large(size: u128) -> Error {
    Error::InvalidArgument(format!(
        "window with {size} vertices exceeds the limit of {MAX_WINDOW_VERTICES}"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_distance_examples() {
        let w = GraphWindow::natural(2, 5).unwrap();
        let o = w.index_of_coords(&[0, 0]).unwrap();
        let p = w.index_of_coords(&[2, 3]).unwrap();
        assert_eq!(w.distance(o, p).unwrap(), Some(5));
        assert_eq!(w.distance(p, o).unwrap(), None);
        assert_eq!(w.distance(p, p).unwrap(), Some(0));
        assert!(w.distance(o, 25).is_err());
    }

    #[test]
    fn tree_distance_examples() {
        let w = GraphWindow::tree(2, 3).unwrap();
        let root = w.index_of_word(&[]).unwrap();
        let v = w.index_of_word(&[1, 2, 1]).unwrap();
        assert_eq!(w.distance(root, v).unwrap(), Some(3));
        let a = w.index_of_word(&[1]).unwrap();
        let b = w.index_of_word(&[2, 1]).unwrap();
        assert_eq!(w.distance(a, b).unwrap(), None);
        assert_eq!(w.distance(v, v).unwrap(), Some(0));
        assert_eq!(w.distance(v, root).unwrap(), None);
    }

    #[test]
    fn tree_codec_round_trips() {
        let w = GraphWindow::tree(3, 4).unwrap();
        assert_eq!(w.len(), 1 + 3 + 9 + 27 + 81);
        for v in 0..w.len() {
            let word = w.word(v).unwrap();
            assert_eq!(w.index_of_word(&word).unwrap(), v);
        }
        assert!(w.index_of_word(&[4]).is_err());
        assert!(w.index_of_word(&[1, 1, 1, 1, 1]).is_err());
    }

    #[test]
    fn ball_examples() {
        let w = GraphWindow::tree(2, 3).unwrap();
        assert!(w.ball(0, 0).unwrap().vertices.is_empty());
        assert_eq!(w.ball(5, 1).unwrap().vertices, vec![5]);
        let b = w.ball(0, 2).unwrap().vertices;
        let expect: Vec<usize> = [vec![], vec![1], vec![2]]
            .iter()
            .map(|wd| w.index_of_word(wd).unwrap())
            .collect();
        assert_eq!(b, expect);

        let l = GraphWindow::natural(2, 4).unwrap();
        let b = l.ball(0, 2).unwrap().vertices;
        let mut expect = vec![
            l.index_of_coords(&[0, 0]).unwrap(),
            l.index_of_coords(&[1, 0]).unwrap(),
            l.index_of_coords(&[0, 1]).unwrap(),
        ];
        expect.sort_unstable();
        assert_eq!(b, expect);
    }

    #[test]
    fn tree_level_sizes() {
        let w = GraphWindow::tree(3, 5).unwrap();
        for m in 0..=5usize {
            let count = (0..w.len()).filter(|&v| w.depth_of(v).unwrap() == m).count();
            assert_eq!(count, 3usize.pow(m as u32));
        }
    }

    #[test]
    fn coverer_examples() {
        let l = GraphWindow::natural(1, 10).unwrap();
        let c = l.in_coverers(3).unwrap();
        assert_eq!(c.vertices, vec![0, 1, 2, 3]);
        assert!(!c.truncated);

        let t = GraphWindow::tree(2, 3).unwrap();
        let y = t.index_of_word(&[1, 2]).unwrap();
        let expect: Vec<usize> = [vec![], vec![1], vec![1, 2]]
            .iter()
            .map(|wd| t.index_of_word(wd).unwrap())
            .collect();
        assert_eq!(t.in_coverers(y).unwrap().vertices, expect);

        let z = GraphWindow::integer(1, 6, 5).unwrap();
        let y = z.index_of_coords(&[0]).unwrap();
        let c = z.in_coverers(y).unwrap();
        let coords: Vec<i64> = c.vertices.iter().map(|&v| z.coords(v).unwrap()[0]).collect();
        assert_eq!(coords, vec![-5, -4, -3, -2, -1, 0]);
        assert!(c.truncated);
        assert!(z.is_observed(y));
        assert!(!z.is_observed(0));
    }

    #[test]
    fn coverers_match_distance_scan() {
        for w in [
            GraphWindow::natural(2, 5).unwrap(),
            GraphWindow::integer(2, 3, 2).unwrap(),
            GraphWindow::tree(2, 3).unwrap(),
        ] {
            for y in 0..w.len() {
                let scan: Vec<usize> = (0..w.len())
                    .filter(|&x| w.distance(x, y).unwrap().is_some())
                    .collect();
                assert_eq!(w.in_coverers(y).unwrap().vertices, scan);
            }
        }
    }

    #[test]
    fn ball_matches_distance_scan() {
        for w in [
            GraphWindow::natural(2, 5).unwrap(),
            GraphWindow::natural(3, 3).unwrap(),
            GraphWindow::tree(3, 3).unwrap(),
        ] {
            for x in 0..w.len() {
                for r in 0..5u64 {
                    let scan: Vec<usize> = (0..w.len())
                        .filter(|&y| matches!(w.distance(x, y).unwrap(), Some(d) if d < r))
                        .collect();
                    assert_eq!(w.ball(x, r).unwrap().vertices, scan, "x={x} r={r}");
                }
            }
        }
    }

    #[test]
    fn far_boundary() {
        let l = GraphWindow::natural(1, 10).unwrap();
        assert!(!l.near_far_boundary(7));
        assert!(l.near_far_boundary(8));
        let t = GraphWindow::tree(2, 3).unwrap();
        assert!(!t.near_far_boundary(1));
        assert!(t.near_far_boundary(2));
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(GraphWindow::tree(1, 3).is_err());
        assert!(GraphWindow::natural(0, 3).is_err());
        assert!(GraphWindow::natural(40, 10).is_err());
        assert!(GraphWindow::tree(2, 80).is_err());
    }
}
