//! Disjoint-set helpers over plain `u32` parent arrays.

/// Root of `x` with path halving.
#[inline]
pub(crate) fn find(zpar: &mut [u32], mut x: u32) -> u32 {
    while zpar[x as usize] != x {
        let up = zpar[zpar[x as usize] as usize];
        zpar[x as usize] = up;
        x = up;
    }
    x
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        find(&mut self.parent, x)
    }

    /// The smaller root becomes the representative.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        true
    }
}
