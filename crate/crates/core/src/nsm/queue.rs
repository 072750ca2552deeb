/// Indexed binary min-heap over per-voxel next-event times.
///
/// Every voxel is present exactly once; ties are broken by voxel index so the
/// pop order is fully deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EventQueue {
    heap: Vec<u32>,
    pos: Vec<u32>,
    key: Vec<f64>,
}

impl EventQueue {
    pub fn new(keys: Vec<f64>) -> Self {
        let n = keys.len();
        let mut q = Self {
            heap: (0..n as u32).collect(),
            pos: (0..n as u32).collect(),
            key: keys,
        };
        for i in (0..n / 2).rev() {
            q.sift_down(i);
        }
        q
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Voxel with the earliest next-event time.
    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&v| (v as usize, self.key[v as usize]))
    }

    pub fn key(&self, voxel: usize) -> f64 {
        self.key[voxel]
    }

    /// Sets the next-event time of `voxel` and restores the heap in `O(log K)`.
    pub fn update(&mut self, voxel: usize, time: f64) {
        let old = self.key[voxel];
        self.key[voxel] = time;
        let i = self.pos[voxel] as usize;
        if time < old {
            self.sift_up(i);
        } else {
            self.sift_down(i);
        }
    }

    fn less(&self, a: u32, b: u32) -> bool {
        let (ka, kb) = (self.key[a as usize], self.key[b as usize]);
        ka < kb || (ka == kb && a < b)
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i] as usize] = i as u32;
        self.pos[self.heap[j] as usize] = j as u32;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.less(self.heap[i], self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut m = i;
            if l < n && self.less(self.heap[l], self.heap[m]) {
                m = l;
            }
            if r < n && self.less(self.heap[r], self.heap[m]) {
                m = r;
            }
            if m == i {
                break;
            }
            self.swap(i, m);
            i = m;
        }
    }

    /// Heap property and index consistency.
    pub fn is_consistent(&self) -> bool {
        let n = self.heap.len();
        (0..n).all(|i| self.pos[self.heap[i] as usize] as usize == i)
            && (1..n).all(|i| !self.less(self.heap[i], self.heap[(i - 1) / 2]))
    }
}
