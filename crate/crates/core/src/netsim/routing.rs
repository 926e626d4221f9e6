use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Node indices from source to destination inclusive.
    pub path: Vec<usize>,
    pub total_loss: f64,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }

    pub fn next_hop(&self) -> usize {
        self.path[1]
    }
}

/// Best route per ordered `(source, destination)` pair; absent pairs are
/// unreachable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoutingTable {
    routes: BTreeMap<(usize, usize), Route>,
}

impl RoutingTable {
    pub fn get(&self, src: usize, dst: usize) -> Option<&Route> {
        self.routes.get(&(src, dst))
    }

    pub fn next_hop(&self, src: usize, dst: usize) -> Option<usize> {
        self.get(src, dst).map(Route::next_hop)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Route)> {
        self.routes.iter()
    }
}

fn better(a: &(usize, f64, Vec<usize>), b: &(usize, f64, Vec<usize>)) -> bool {
    match a.0.cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        _ => match a.1.total_cmp(&b.1) {
            Ordering::Less => true,
            Ordering::Greater => false,
            _ => a.2 < b.2,
        },
    }
}

/// Shortest paths over up links: fewest hops, then lowest summed loss, then
/// the lexicographically smallest node sequence. `links` holds
/// `(a, b, loss)` for usable undirected links; node indices follow node id
/// order, so index order breaks ties by id.
pub fn compute_routes(node_count: usize, links: &[(usize, usize, f64)]) -> RoutingTable {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); node_count];
    for &(a, b, loss) in links {
        adj[a].push((b, loss));
        adj[b].push((a, loss));
    }
    for list in &mut adj {
        list.sort_by_key(|e| e.0);
    }
    let mut routes = BTreeMap::new();
    for src in 0..node_count {
        let mut best: Vec<Option<(usize, f64, Vec<usize>)>> = vec![None; node_count];
        let mut done = vec![false; node_count];
        best[src] = Some((0, 0.0, vec![src]));
        loop {
            let next = (0..node_count)
                .filter(|&i| !done[i] && best[i].is_some())
                .min_by(|&i, &j| {
                    let (a, b) = (best[i].as_ref().unwrap(), best[j].as_ref().unwrap());
                    if better(a, b) {
                        Ordering::Less
                    } else if better(b, a) {
                        Ordering::Greater
                    } else {
                        i.cmp(&j)
                    }
                });
            let Some(u) = next else { break };
            done[u] = true;
            let (hops, loss, path) = best[u].clone().unwrap();
            for &(v, l) in &adj[u] {
                if done[v] {
                    continue;
                }
                let mut p = path.clone();
                p.push(v);
                let cand = (hops + 1, loss + l, p);
                if best[v].as_ref().is_none_or(|cur| better(&cand, cur)) {
                    best[v] = Some(cand);
                }
            }
        }
        for (dst, entry) in best.into_iter().enumerate() {
            if dst == src {
                continue;
            }
            if let Some((_, total_loss, path)) = entry {
                routes.insert((src, dst), Route { path, total_loss });
            }
        }
    }
    RoutingTable { routes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_mesh_is_direct() {
        let t = compute_routes(3, &[(0, 1, 80.0), (0, 2, 85.0), (1, 2, 70.0)]);
        for s in 0..3 {
            for d in 0..3 {
                if s != d {
                    assert_eq!(t.get(s, d).unwrap().hops(), 1);
                }
            }
        }
    }

    #[test]
    fn relays_when_direct_is_down() {
        // 0 = base, 1 = hd2, 2 = warthog
        let t = compute_routes(3, &[(0, 2, 84.0), (1, 2, 72.0)]);
        assert_eq!(t.get(0, 1).unwrap().path, vec![0, 2, 1]);
        assert_eq!(t.next_hop(1, 0), Some(2));
    }

    #[test]
    fn isolated_is_unreachable_and_loss_breaks_ties() {
        let t = compute_routes(4, &[(0, 1, 50.0), (1, 3, 50.0), (0, 2, 40.0), (2, 3, 40.0)]);
        assert_eq!(t.get(0, 3).unwrap().path, vec![0, 2, 3]);
        let t = compute_routes(3, &[(0, 1, 50.0)]);
        assert!(t.get(0, 2).is_none());
        let t = compute_routes(4, &[(0, 1, 50.0), (1, 3, 50.0), (0, 2, 50.0), (2, 3, 50.0)]);
        assert_eq!(t.get(0, 3).unwrap().path, vec![0, 1, 3]);
    }
}
