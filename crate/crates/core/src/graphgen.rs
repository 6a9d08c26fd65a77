//! Sampling correlated Erdős–Rényi pairs.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Attr, AttrMatrix, EdgeDistribution, GraphPair, Labeling};

/// Deterministic random stream addressed by `(master_seed, stream_id)`.
///
/// Backed by ChaCha8 with its 64-bit stream selector, so trial `t` of an
/// experiment can own stream `t` regardless of which thread runs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// How the hidden labeling of the second graph is chosen.
#[derive(Debug, Clone)]
pub enum Truth {
    Given(Labeling),
    UniformRandom,
}

/// Inverse-CDF sampler over the flattened `ell^2` alphabet.
#[derive(Debug, Clone)]
pub struct PairSampler {
    ell: usize,
    cumulative: Vec<f64>,
    last_supported: usize,
}

impl PairSampler {
    pub fn new(dist: &EdgeDistribution) -> Self {
        let mut acc = 0.0;
        let cumulative = dist
            .joint_flat()
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        let last_supported = dist.joint_flat().iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self { ell: dist.ell(), cumulative, last_supported }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Attr, Attr) {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.last_supported);
        ((k / self.ell) as Attr, (k % self.ell) as Attr)
    }
}

/// Draws one correlated pair. For every unordered label pair `{a, b}` a
/// draw `(x, y)` from the joint law sets `adj1[a][b] = x` and puts `y` on
/// the second graph's vertex pair carrying labels `a` and `b`.
pub fn sample_pair<R: Rng + ?Sized>(n: usize, dist: &EdgeDistribution, truth: Truth, rng: &mut R) -> Result<GraphPair> {
    if n < 2 {
        return Err(Error::InvalidN(n));
    }
    let truth = match truth {
        Truth::Given(l) => {
            if l.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: l.len() });
            }
            l
        }
        Truth::UniformRandom => Labeling::random(n, rng),
    };
    let sampler = PairSampler::new(dist);
    let vertex_of = truth.inverse();
    let mut adj1 = AttrMatrix::zeros(n);
    let mut adj2 = AttrMatrix::zeros(n);
    for a in 0..n {
        for b in a + 1..n {
            let (x, y) = sampler.sample(rng);
            adj1.set_pair(a, b, x);
            adj2.set_pair(vertex_of.get(a), vertex_of.get(b), y);
        }
    }
    GraphPair::new(adj1, adj2, truth, dist.clone())
}

/// `out[sigma(i)][sigma(j)] = adj[i][j]`.
pub fn relabel(adj: &AttrMatrix, sigma: &Labeling) -> Result<AttrMatrix> {
    let n = adj.n();
    if sigma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.len() });
    }
    let mut out = AttrMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            out.set_pair(sigma.get(i), sigma.get(j), adj.get(i, j));
        }
    }
    Ok(out)
}

/// Debug dump: one line `i j attr1 attr2` per pair, 1-based, `i < j`,
/// with both attributes read from the raw (vertex-indexed) matrices.
pub fn edge_list(pair: &GraphPair) -> String {
    let n = pair.n();
    let mut out = String::new();
    for i in 0..n {
        for j in i + 1..n {
            let _ = writeln!(out, "{} {} {} {}", i + 1, j + 1, pair.adj1.get(i, j), pair.adj2.get(i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ut_of;

    fn aligned_type(pair: &GraphPair) -> Vec<f64> {
        let ell = pair.dist.ell();
        let u1 = ut_of(&pair.adj1);
        let u2 = ut_of(&relabel(&pair.adj2, &pair.truth).unwrap());
        let mut counts = vec![0.0; ell * ell];
        for (&x, &y) in u1.as_slice().iter().zip(u2.as_slice()) {
            counts[x as usize * ell + y as usize] += 1.0;
        }
        let total = u1.len() as f64;
        counts.iter().map(|c| c / total).collect()
    }

    #[test]
    fn point_mass_gives_complete_graphs() {
        let d = EdgeDistribution::new(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let p = sample_pair(6, &d, Truth::Given(Labeling::identity(6)), &mut rng).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = u8::from(i != j);
                assert_eq!(p.adj1.get(i, j), expect);
                assert_eq!(p.adj2.get(i, j), expect);
            }
        }
    }

    #[test]
    fn rejects_tiny_n() {
        let d = EdgeDistribution::binary_symmetric(0.2).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        assert!(matches!(sample_pair(1, &d, Truth::UniformRandom, &mut rng), Err(Error::InvalidN(1))));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let d = EdgeDistribution::binary_symmetric(0.2).unwrap();
        let a = sample_pair(12, &d, Truth::UniformRandom, &mut RngStream::new(9, 3).rng()).unwrap();
        let b = sample_pair(12, &d, Truth::UniformRandom, &mut RngStream::new(9, 3).rng()).unwrap();
        let c = sample_pair(12, &d, Truth::UniformRandom, &mut RngStream::new(9, 4).rng()).unwrap();
        assert_eq!(a.adj1, b.adj1);
        assert_eq!(a.adj2, b.adj2);
        assert_eq!(a.truth, b.truth);
        assert_ne!(a.adj1, c.adj1);
    }

    #[test]
    fn product_law_is_uncorrelated() {
        let d = EdgeDistribution::product(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        let pair = sample_pair(142, &d, Truth::UniformRandom, &mut rng).unwrap(); // ~10k pairs
        let u1 = ut_of(&pair.adj1);
        let u2 = ut_of(&relabel(&pair.adj2, &pair.truth).unwrap());
        let xs: Vec<f64> = u1.as_slice().iter().map(|&v| v as f64).collect();
        let ys: Vec<f64> = u2.as_slice().iter().map(|&v| v as f64).collect();
        let m = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / m;
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / m;
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / m;
        assert!((cov / (vx * vy).sqrt()).abs() < 0.05);
    }

    #[test]
    fn aligned_type_tracks_joint_law() {
        let d = EdgeDistribution::new(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let mut close = 0;
        for t in 0..100 {
            let pair = sample_pair(200, &d, Truth::UniformRandom, &mut RngStream::new(77, t).rng()).unwrap();
            let ty = aligned_type(&pair);
            let linf = ty.iter().zip(d.joint_flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if linf <= 0.02 {
                close += 1;
            }
        }
        assert!(close >= 95, "{close}");
    }

    #[test]
    fn marginal_edge_density() {
        let d = EdgeDistribution::new(&[vec![0.6, 0.1], vec![0.05, 0.25]]).unwrap();
        let pair = sample_pair(150, &d, Truth::UniformRandom, &mut RngStream::new(3, 1).rng()).unwrap();
        let u1 = ut_of(&pair.adj1);
        let u2 = ut_of(&pair.adj2);
        let dens = |u: &crate::model::UtVector| u.as_slice().iter().filter(|&&v| v == 1).count() as f64 / u.len() as f64;
        assert!((dens(&u1) - 0.30).abs() < 0.02);
        assert!((dens(&u2) - 0.35).abs() < 0.02);
    }

    #[test]
    fn relabel_examples() {
        let mut a = AttrMatrix::zeros(3);
        a.set_pair(0, 1, 1);
        assert_eq!(relabel(&a, &Labeling::identity(3)).unwrap(), a);
        let sigma = Labeling::new(vec![1, 2, 0]).unwrap();
        let r = relabel(&a, &sigma).unwrap();
        let mut expect = AttrMatrix::zeros(3);
        expect.set_pair(1, 2, 1);
        assert_eq!(r, expect);
        assert_eq!(relabel(&r, &sigma.inverse()).unwrap(), a);
        assert!(relabel(&a, &Labeling::identity(4)).is_err());
    }

    #[test]
    fn edge_list_format() {
        let d = EdgeDistribution::new(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = sample_pair(3, &d, Truth::Given(Labeling::identity(3)), &mut RngStream::new(0, 0).rng()).unwrap();
        assert_eq!(edge_list(&p), "1 2 1 1\n1 3 1 1\n2 3 1 1\n");
    }
}
