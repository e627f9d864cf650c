//! Euclidean TSP instances, tours with cached cost, nearest-neighbor
//! construction and the swap / 2-opt neighborhoods.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub cities: Vec<[f64; 2]>,
    pub seed: u64,
    pub side: f64,
    #[serde(skip)]
    dist: Vec<f64>,
}

impl TspInstance {
    pub fn from_cities(cities: Vec<[f64; 2]>, seed: u64, side: f64) -> Result<Self> {
        if cities.len() < 3 {
            return domain(format!("need at least 3 cities, got {}", cities.len()));
        }
        if cities.iter().flatten().any(|c| !c.is_finite()) {
            return domain("city coordinates must be finite");
        }
        let n = cities.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclid(cities[i], cities[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self { cities, seed, side, dist })
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.cities.len() + j]
    }

    /// Closed-tour length computed from scratch.
    pub fn tour_cost(&self, order: &[usize]) -> f64 {
        let n = order.len();
        (0..n).map(|k| self.dist(order[k], order[(k + 1) % n])).sum()
    }

    pub fn tour(&self, order: Vec<usize>) -> Result<Tour> {
        if !is_permutation(&order, self.len()) {
            return domain("order is not a permutation of the cities");
        }
        let cost = self.tour_cost(&order);
        Ok(Tour { order, cost })
    }

    /// Reads `x,y` rows after an `x,y` header.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
            return domain("instance file must start with an `x,y` header");
        }
        let mut cities = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (x, y) = rec?;
            cities.push([x, y]);
        }
        let side = cities
            .iter()
            .flatten()
            .fold(0.0f64, |m, &c| m.max(c.abs()));
        Self::from_cities(cities, 0, side)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y"])?;
        for c in &self.cities {
            wtr.serialize((c[0], c[1]))?;
        }
        wtr.flush().map_err(Error::from)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n || seen[c] {
            return false;
        }
        seen[c] = true;
    }
    true
}

/// `n` cities i.i.d. uniform on `[0, side]²`.
pub fn generate_instance(n: usize, side: f64, seed: u64) -> Result<TspInstance> {
    if n < 3 {
        return domain(format!("need at least 3 cities, got {n}"));
    }
    if !(side > 0.0) {
        return domain(format!("side must be positive, got {side}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cities = (0..n)
        .map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side])
        .collect();
    TspInstance::from_cities(cities, seed, side)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: f64,
}

/// Greedy tour; ties go to the lowest city index.
pub fn nearest_neighbor(inst: &TspInstance, start: usize) -> Result<Tour> {
    let n = inst.len();
    if start >= n {
        return domain(format!("start city {start} out of range 0..{n}"));
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, &v) in visited.iter().enumerate() {
            if !v && inst.dist(cur, j) < best_d {
                best_d = inst.dist(cur, j);
                best = j;
            }
        }
        visited[best] = true;
        order.push(best);
        cur = best;
    }
    let cost = inst.tour_cost(&order);
    Ok(Tour { order, cost })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    Swap,
    #[default]
    TwoOpt,
}

impl std::str::FromStr for Neighborhood {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "swap" => Ok(Self::Swap),
            "two_opt" | "2opt" | "2-opt" => Ok(Self::TwoOpt),
            _ => domain(format!("unknown neighborhood `{s}` (swap | two_opt)")),
        }
    }
}

fn two_positions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i.min(j), i.max(j))
}

impl Tour {
    /// Cost change from exchanging positions `i` and `j`.
    pub fn swap_delta(&self, inst: &TspInstance, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let n = self.order.len();
        if i == j {
            return 0.0;
        }
        let o = &self.order;
        let at = |k: usize| o[k % n];
        let (a, b) = (o[i], o[j]);
        let (pi, ni) = (at(i + n - 1), at(i + 1));
        let (pj, nj) = (at(j + n - 1), at(j + 1));
        if j - i == 1 {
            inst.dist(pi, b) + inst.dist(a, nj) - inst.dist(pi, a) - inst.dist(b, nj)
        } else if i == 0 && j == n - 1 {
            inst.dist(pj, a) + inst.dist(b, ni) - inst.dist(pj, b) - inst.dist(a, ni)
        } else {
            inst.dist(pi, b) + inst.dist(b, ni) + inst.dist(pj, a) + inst.dist(a, nj)
                - inst.dist(pi, a)
                - inst.dist(a, ni)
                - inst.dist(pj, b)
                - inst.dist(b, nj)
        }
    }

    pub fn swapped(&self, inst: &TspInstance, i: usize, j: usize) -> Tour {
        let (i, j) = (i.min(j), i.max(j));
        let mut t = self.clone();
        if i == j {
            return t;
        }
        t.cost += self.swap_delta(inst, i, j);
        t.order.swap(i, j);
        t
    }

    /// Cost change from reversing the segment between positions `i` and `j`
    /// inclusive.
    pub fn two_opt_delta(&self, inst: &TspInstance, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let n = self.order.len();
        if i == j || (i == 0 && j == n - 1) {
            return 0.0;
        }
        let o = &self.order;
        let a = o[(i + n - 1) % n];
        let b = o[i];
        let c = o[j];
        let d = o[(j + 1) % n];
        inst.dist(a, c) + inst.dist(b, d) - inst.dist(a, b) - inst.dist(c, d)
    }

    pub fn reversed_segment(&self, inst: &TspInstance, i: usize, j: usize) -> Tour {
        let (i, j) = (i.min(j), i.max(j));
        let mut t = self.clone();
        t.cost += self.two_opt_delta(inst, i, j);
        t.order[i..=j].reverse();
        t
    }

    pub fn neighbor<R: Rng + ?Sized>(&self, inst: &TspInstance, nb: Neighborhood, rng: &mut R) -> Tour {
        match nb {
            Neighborhood::Swap => random_swap(self, inst, rng),
            Neighborhood::TwoOpt => random_two_opt(self, inst, rng),
        }
    }
}

/// Exchange two distinct random positions; cost updated incrementally.
pub fn random_swap<R: Rng + ?Sized>(t: &Tour, inst: &TspInstance, rng: &mut R) -> Tour {
    let (i, j) = two_positions(t.order.len(), rng);
    t.swapped(inst, i, j)
}

/// Reverse a random segment; cost updated incrementally.
pub fn random_two_opt<R: Rng + ?Sized>(t: &Tour, inst: &TspInstance, rng: &mut R) -> Tour {
    let (i, j) = two_positions(t.order.len(), rng);
    t.reversed_segment(inst, i, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(pts: &[[f64; 2]]) -> TspInstance {
        TspInstance::from_cities(pts.to_vec(), 0, 2.0).unwrap()
    }

    #[test]
    fn collinear_and_square() {
        let t = nearest_neighbor(&inst(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), 0).unwrap();
        assert_eq!(t.order, vec![0, 1, 2]);
        assert_eq!(t.cost, 4.0);
        let sq = inst(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert_eq!(nearest_neighbor(&sq, 0).unwrap().cost, 4.0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let i = inst(&[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 5.0]]);
        assert_eq!(nearest_neighbor(&i, 0).unwrap().order[1], 1);
    }

    #[test]
    fn rejects_small() {
        assert!(generate_instance(2, 1.0, 0).is_err());
        assert!(nearest_neighbor(&generate_instance(5, 1.0, 0).unwrap(), 5).is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_instance(50, 300.0, 7).unwrap();
        assert_eq!(a, generate_instance(50, 300.0, 7).unwrap());
        assert_ne!(a, generate_instance(50, 300.0, 8).unwrap());
        let t = generate_instance(3, 1.0, 3).unwrap();
        assert!(t.cities.iter().flatten().all(|&c| (0.0..=1.0).contains(&c)));
    }

    #[test]
    fn csv_roundtrip() {
        let a = generate_instance(12, 10.0, 1).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x,y\n"));
        let b = TspInstance::read_csv(&buf[..]).unwrap();
        assert_eq!(a.cities, b.cities);
        assert!(TspInstance::read_csv(&b"a,b\n1,2\n"[..]).is_err());
    }

    #[test]
    fn swap_is_involution() {
        let i = generate_instance(20, 1.0, 2).unwrap();
        let t = nearest_neighbor(&i, 0).unwrap();
        for (a, b) in [(0, 1), (0, 19), (3, 9), (18, 19)] {
            let back = t.swapped(&i, a, b).swapped(&i, a, b);
            assert_eq!(back.order, t.order);
            assert!((back.cost - t.cost).abs() < 1e-9);
        }
    }
}
