//! Undirected binary graphs and the change statistics that turn a random
//! graph model into a logit regression: one pseudo-observation per ordered
//! pair of actors, with covariates equal to the difference in graph
//! statistics from toggling that edge on and off.

use std::path::Path;

use crate::error::{QilError, Result};
use crate::glm::RegressionData;

/// Undirected simple graph on `n_actors` nodes.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    n_actors: usize,
    adj: Vec<bool>,
}

impl NetworkGraph {
    pub fn new(n_actors: usize) -> Self {
        Self {
            n_actors,
            adj: vec![false; n_actors * n_actors],
        }
    }

    /// Build from 1-based undirected edge pairs.
    pub fn from_edges(n_actors: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n_actors);
        for &(i, j) in edges {
            if i == 0 || j == 0 || i > n_actors || j > n_actors {
                return Err(QilError::InvalidGraph(format!(
                    "edge ({i},{j}) outside 1..={n_actors}"
                )));
            }
            if i == j {
                return Err(QilError::InvalidGraph(format!("self-loop at {i}")));
            }
            g.set_edge(i - 1, j - 1, true);
        }
        Ok(g)
    }

    /// Edge-list CSV with header `i,j`, one 1-based pair per row; the actor
    /// count is the largest id seen unless `n_actors` forces it.
    pub fn from_edge_csv(path: &Path, n_actors: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut edges = Vec::new();
        let mut max_id = 0usize;
        for (no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .and_then(|s| s.trim().parse::<usize>().ok())
                    .ok_or_else(|| QilError::Parse(format!("line {}: bad edge", no + 1)))
            };
            let (i, j) = (next()?, next()?);
            max_id = max_id.max(i).max(j);
            edges.push((i, j));
        }
        Self::from_edges(n_actors.unwrap_or(max_id), &edges)
    }

    /// The business-tie network among the sixteen Renaissance Florentine
    /// families, bundled as a fixture.
    pub fn florentine() -> Self {
        let edges = [
            (3, 5),
            (3, 6),
            (3, 9),
            (3, 11),
            (4, 7),
            (4, 8),
            (4, 11),
            (5, 8),
            (5, 11),
            (6, 9),
            (7, 8),
            (8, 11),
            (9, 10),
            (9, 14),
            (9, 16),
        ];
        Self::from_edges(16, &edges).unwrap()
    }

    pub fn n_actors(&self) -> usize {
        self.n_actors
    }

    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n_actors + j]
    }

    pub fn set_edge(&mut self, i: usize, j: usize, v: bool) {
        assert_ne!(i, j, "no self-loops");
        self.adj[i * self.n_actors + j] = v;
        self.adj[j * self.n_actors + i] = v;
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n_actors).filter(|&u| self.edge(v, u)).count()
    }

    /// Number of edges, sum over unordered pairs.
    pub fn edge_count(&self) -> usize {
        (0..self.n_actors)
            .map(|i| ((i + 1)..self.n_actors).filter(|&j| self.edge(i, j)).count())
            .sum()
    }

    /// Number of two-stars: pairs of edges sharing a node,
    /// sum_v C(deg v, 2).
    pub fn two_star_count(&self) -> usize {
        (0..self.n_actors)
            .map(|v| {
                let d = self.degree(v);
                d * (d.saturating_sub(1)) / 2
            })
            .sum()
    }

    /// All 1-based edges, for serialization.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_actors {
            for j in (i + 1)..self.n_actors {
                if self.edge(i, j) {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }
}

/// Graph statistics available as regression covariates. The quadratic terms
/// give the squared statistics and their interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgStat {
    Edges,
    TwoStars,
    EdgesSquared,
    TwoStarsSquared,
    EdgesTwoStars,
}

impl ErgStat {
    /// The covariate sets used for the network analyses.
    pub fn linear() -> Vec<ErgStat> {
        vec![ErgStat::Edges, ErgStat::TwoStars]
    }

    pub fn quadratic() -> Vec<ErgStat> {
        vec![
            ErgStat::Edges,
            ErgStat::TwoStars,
            ErgStat::EdgesSquared,
            ErgStat::TwoStarsSquared,
            ErgStat::EdgesTwoStars,
        ]
    }
}

/// One pseudo-observation per ordered actor pair (j, k), j != k, in row
/// order j outer then k: y is the edge indicator, covariates are the
/// statistic differences between the graph with that edge present and
/// absent. No intercept column.
pub fn erg_change_statistics(graph: &NetworkGraph, stats: &[ErgStat]) -> Result<RegressionData> {
    let n = graph.n_actors();
    for i in 0..n {
        if graph.edge(i, i) {
            return Err(QilError::InvalidGraph(format!("self-loop at {}", i + 1)));
        }
        for j in 0..n {
            if graph.edge(i, j) != graph.edge(j, i) {
                return Err(QilError::InvalidGraph("asymmetric adjacency".into()));
            }
        }
    }
    let x1 = graph.edge_count() as f64;
    let x2 = graph.two_star_count() as f64;
    let mut x = Vec::with_capacity(n * (n - 1));
    let mut y = Vec::with_capacity(n * (n - 1));
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let present = graph.edge(j, k);
            let yjk = if present { 1.0 } else { 0.0 };
            // statistics with the (j,k) edge removed
            let deg_j = graph.degree(j) as f64 - yjk;
            let deg_k = graph.degree(k) as f64 - yjk;
            let delta2 = deg_j + deg_k;
            let x1_minus = x1 - yjk;
            let x2_minus = x2 - yjk * delta2;
            let x1_plus = x1_minus + 1.0;
            let x2_plus = x2_minus + delta2;
            let row: Vec<f64> = stats
                .iter()
                .map(|s| match s {
                    ErgStat::Edges => 1.0,
                    ErgStat::TwoStars => delta2,
                    ErgStat::EdgesSquared => x1_plus * x1_plus - x1_minus * x1_minus,
                    ErgStat::TwoStarsSquared => x2_plus * x2_plus - x2_minus * x2_minus,
                    ErgStat::EdgesTwoStars => x1_plus * x2_plus - x1_minus * x2_minus,
                })
                .collect();
            x.push(row);
            y.push(yjk);
        }
    }
    Ok(RegressionData { x, y })
}

/// Brute-force change statistic: evaluate the full statistics on the graph
/// with the edge set and unset. The independent oracle for
/// `erg_change_statistics`.
pub fn change_stat_brute_force(
    graph: &NetworkGraph,
    j: usize,
    k: usize,
    stat: ErgStat,
) -> f64 {
    let mut plus = graph.clone();
    plus.set_edge(j, k, true);
    let mut minus = graph.clone();
    minus.set_edge(j, k, false);
    let eval = |g: &NetworkGraph| -> f64 {
        let x1 = g.edge_count() as f64;
        let x2 = g.two_star_count() as f64;
        match stat {
            ErgStat::Edges => x1,
            ErgStat::TwoStars => x2,
            ErgStat::EdgesSquared => x1 * x1,
            ErgStat::TwoStarsSquared => x2 * x2,
            ErgStat::EdgesTwoStars => x1 * x2,
        }
    };
    eval(&plus) - eval(&minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn florentine_counts() {
        let g = NetworkGraph::florentine();
        assert_eq!(g.edge_count(), 15);
        assert_eq!(g.n_actors(), 16);
        let data = erg_change_statistics(&g, &ErgStat::linear()).unwrap();
        assert_eq!(data.x.len(), 240);
        assert_eq!(data.y.iter().filter(|&&v| v == 1.0).count(), 30);
    }

    #[test]
    fn empty_graph_edge_changes() {
        let g = NetworkGraph::new(5);
        let data = erg_change_statistics(&g, &[ErgStat::Edges]).unwrap();
        assert!(data.x.iter().all(|r| r[0] == 1.0));
        assert!(data.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn triangle_two_star_change() {
        let g = NetworkGraph::from_edges(3, &[(1, 2), (1, 3), (2, 3)]).unwrap();
        // toggling (1,2): with it 3 two-stars, without it 1
        let delta = change_stat_brute_force(&g, 0, 1, ErgStat::TwoStars);
        assert_eq!(delta, 2.0);
        let data = erg_change_statistics(&g, &[ErgStat::TwoStars]).unwrap();
        // row for ordered pair (0,1) is the first row
        assert_eq!(data.x[0][0], 2.0);
    }

    #[test]
    fn change_stats_match_brute_force_on_random_graphs() {
        let mut rng = Rng::from_seed(37);
        let stats = ErgStat::quadratic();
        for _ in 0..40 {
            let n = 3 + rng.below(6);
            let mut g = NetworkGraph::new(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.uniform() < 0.4 {
                        g.set_edge(i, j, true);
                    }
                }
            }
            let data = erg_change_statistics(&g, &stats).unwrap();
            let mut row = 0;
            for j in 0..n {
                for k in 0..n {
                    if j == k {
                        continue;
                    }
                    for (s_idx, &s) in stats.iter().enumerate() {
                        let oracle = change_stat_brute_force(&g, j, k, s);
                        assert_eq!(
                            data.x[row][s_idx], oracle,
                            "pair ({j},{k}) stat {s:?}"
                        );
                    }
                    row += 1;
                }
            }
        }
    }

    #[test]
    fn csv_roundtrip() {
        let dir = std::env::temp_dir().join("qil_net_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("edges.csv");
        let g = NetworkGraph::florentine();
        let mut text = String::from("i,j\n");
        for (i, j) in g.edges() {
            text.push_str(&format!("{i},{j}\n"));
        }
        std::fs::write(&path, text).unwrap();
        let back = NetworkGraph::from_edge_csv(&path, None).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.n_actors(), 16);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(NetworkGraph::from_edges(4, &[(1, 1)]).is_err());
        assert!(NetworkGraph::from_edges(4, &[(1, 9)]).is_err());
    }
}
