/// Disjoint sets over `0..n` where the smaller root always survives a union.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Joins the classes of `a` and `b`. Returns `(survivor, absorbed)` roots
    /// when they were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return None;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        Some((lo, hi))
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn components(&mut self) -> usize {
        (0..self.parent.len())
            .filter(|&i| self.find(i) == i)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_root_survives() {
        let mut uf = UnionFind::new(5);
        assert_eq!(uf.union(3, 1), Some((1, 3)));
        assert_eq!(uf.union(4, 3), Some((1, 4)));
        assert_eq!(uf.union(1, 4), None);
        assert_eq!(uf.union(0, 2), Some((0, 2)));
        assert_eq!(uf.components(), 2);
        assert!(uf.same(3, 4));
        assert!(!uf.same(0, 4));
    }
}
