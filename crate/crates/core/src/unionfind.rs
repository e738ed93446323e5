/// Disjoint sets over dense `u32` ids with an explicit choice of surviving root.
#[derive(Debug, Clone, Default)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Hangs root `child` under root `root`.
    pub fn attach(&mut self, child: u32, root: u32) {
        debug_assert_eq!(self.parent[child as usize], child);
        debug_assert_eq!(self.parent[root as usize], root);
        self.parent[child as usize] = root;
    }
}
