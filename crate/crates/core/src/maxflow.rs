//! Dinic's blocking-flow maximum flow on an adjacency-list network.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: u64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    graph: Vec<Vec<Edge>>,
    level: Vec<u32>,
    iter: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            graph: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            iter: vec![0; nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: u64) {
        let rev_from = self.graph[to].len() + usize::from(from == to);
        let rev_to = self.graph[from].len();
        self.graph[from].push(Edge {
            to,
            rev: rev_from,
            cap,
        });
        self.graph[to].push(Edge {
            to: from,
            rev: rev_to,
            cap: 0,
        });
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = u32::MAX);
        self.level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > 0 && self.level[e.to] == u32::MAX {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        self.level[sink] != u32::MAX
    }

    /// Iterative blocking-flow search along the level graph.
    fn augment(&mut self, source: usize, sink: usize, limit: u64) -> u64 {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut v = source;
        loop {
            if v == sink {
                let pushed = path
                    .iter()
                    .map(|&(u, i)| self.graph[u][i].cap)
                    .min()
                    .unwrap_or(limit)
                    .min(limit);
                for &(u, i) in &path {
                    let e = &mut self.graph[u][i];
                    e.cap -= pushed;
                    let (to, rev) = (e.to, e.rev);
                    self.graph[to][rev].cap += pushed;
                }
                return pushed;
            }
            let mut advanced = false;
            while self.iter[v] < self.graph[v].len() {
                let e = &self.graph[v][self.iter[v]];
                if e.cap > 0 && self.level[e.to] == self.level[v] + 1 {
                    path.push((v, self.iter[v]));
                    v = e.to;
                    advanced = true;
                    break;
                }
                self.iter[v] += 1;
            }
            if !advanced {
                // dead end: retreat and skip the edge that led here
                self.level[v] = u32::MAX;
                match path.pop() {
                    Some((u, i)) => {
                        self.iter[u] = i + 1;
                        v = u;
                    }
                    None => return 0,
                }
            }
        }
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> u64 {
        let mut total = 0;
        while self.bfs(source, sink) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.augment(source, sink, u64::MAX);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}
