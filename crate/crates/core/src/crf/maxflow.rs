//! Dinic max-flow over f64 capacities, used for exact binary MRF inference.

const FLOW_EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: f64,
    rev: usize,
}

pub struct FlowNetwork {
    arcs: Vec<Vec<Arc>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            arcs: vec![Vec::new(); nodes],
        }
    }

    /// Directed arc with a zero-capacity reverse arc.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) {
        debug_assert!(cap >= 0.0);
        let rev_from = self.arcs[to].len();
        let rev_to = self.arcs[from].len();
        self.arcs[from].push(Arc {
            to,
            cap,
            rev: rev_from,
        });
        self.arcs[to].push(Arc {
            to: from,
            cap: 0.0,
            rev: rev_to,
        });
    }

    /// Symmetric pair of arcs, one per direction.
    pub fn add_edge(&mut self, a: usize, b: usize, cap: f64) {
        debug_assert!(cap >= 0.0);
        let rev_a = self.arcs[b].len();
        let rev_b = self.arcs[a].len();
        self.arcs[a].push(Arc {
            to: b,
            cap,
            rev: rev_a,
        });
        self.arcs[b].push(Arc {
            to: a,
            cap,
            rev: rev_b,
        });
    }

    fn bfs_levels(&self, source: usize, sink: usize) -> Option<Vec<i32>> {
        let mut level = vec![-1; self.arcs.len()];
        let mut queue = std::collections::VecDeque::new();
        level[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for arc in &self.arcs[u] {
                if arc.cap > FLOW_EPS && level[arc.to] < 0 {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        (level[sink] >= 0).then_some(level)
    }

    fn dfs_push(
        &mut self,
        u: usize,
        sink: usize,
        pushed: f64,
        level: &[i32],
        iter: &mut [usize],
    ) -> f64 {
        if u == sink {
            return pushed;
        }
        while iter[u] < self.arcs[u].len() {
            let (to, cap, rev) = {
                let a = &self.arcs[u][iter[u]];
                (a.to, a.cap, a.rev)
            };
            if cap > FLOW_EPS && level[to] == level[u] + 1 {
                let d = self.dfs_push(to, sink, pushed.min(cap), level, iter);
                if d > FLOW_EPS {
                    self.arcs[u][iter[u]].cap -= d;
                    self.arcs[to][rev].cap += d;
                    return d;
                }
            }
            iter[u] += 1;
        }
        0.0
    }

    /// Run max-flow and return (flow value, source-side reachability in the
    /// residual graph). Nodes reachable from the source form the minimum
    /// cut's source side.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> (f64, Vec<bool>) {
        let mut flow = 0.0;
        while let Some(level) = self.bfs_levels(source, sink) {
            let mut iter = vec![0usize; self.arcs.len()];
            loop {
                let pushed = self.dfs_push(source, sink, f64::INFINITY, &level, &mut iter);
                if pushed <= FLOW_EPS {
                    break;
                }
                flow += pushed;
            }
        }
        let mut reach = vec![false; self.arcs.len()];
        let mut stack = vec![source];
        reach[source] = true;
        while let Some(u) = stack.pop() {
            for arc in &self.arcs[u] {
                if arc.cap > FLOW_EPS && !reach[arc.to] {
                    reach[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        (flow, reach)
    }
}
