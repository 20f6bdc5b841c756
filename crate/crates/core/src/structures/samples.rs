use crate::expr::Expr;
use crate::tensor::{ChartedManifold, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of random fields drawn per sample point.
pub const FIELDS_PER_SAMPLE: usize = 3;

/// One sample: a point in the chart box and random polynomial fields.
#[derive(Debug, Clone)]
pub struct Sample {
    pub point: Vec<f64>,
    pub fields: [VectorField; FIELDS_PER_SAMPLE],
}

/// Seeded sample set. Sample `i` depends only on `(seed, i)`, so a smaller set
/// is always a prefix of a larger one with the same seed.
#[derive(Debug, Clone)]
pub struct Samples {
    seed: u64,
    items: Vec<Sample>,
}

/// Mixes a base seed with a stream index (splitmix64 finalizer).
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a name (FNV-1a), used to derive per-check seeds.
pub fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl Samples {
    pub fn generate(m: &ChartedManifold, seed: u64, count: usize) -> Self {
        let items = (0..count)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
                let point = random_point(m, &mut rng);
                let fields = std::array::from_fn(|_| random_polynomial_field(m, &mut rng));
                Sample { point, fields }
            })
            .collect();
        Samples { seed, items }
    }

    /// Sample set with explicit points and fields.
    pub fn from_items(seed: u64, items: Vec<Sample>) -> Self {
        Samples { seed, items }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Sample] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.items.iter()
    }

    pub fn truncated(&self, n: usize) -> Samples {
        Samples { seed: self.seed, items: self.items[..n.min(self.items.len())].to_vec() }
    }
}

pub fn random_point(m: &ChartedManifold, rng: &mut impl Rng) -> Vec<f64> {
    m.bounds()
        .iter()
        .map(|b| if b[0] == b[1] { b[0] } else { rng.gen_range(b[0]..b[1]) })
        .collect()
}

/// Vector field whose components are polynomials of degree ≤ 2 in the chart
/// coordinates with coefficients uniform in [-1, 1].
pub fn random_polynomial_field(m: &ChartedManifold, rng: &mut impl Rng) -> VectorField {
    let coords = m.coords();
    let d = coords.len();
    let comps = (0..d)
        .map(|_| {
            let mut e = Expr::Const(rng.gen_range(-1.0..1.0));
            for i in 0..d {
                let c: f64 = rng.gen_range(-1.0..1.0);
                e = e + Expr::Const(c) * Expr::var(coords[i].clone());
            }
            for i in 0..d {
                for j in i..d {
                    let c: f64 = rng.gen_range(-1.0..1.0);
                    e = e + Expr::Const(c) * Expr::var(coords[i].clone()) * Expr::var(coords[j].clone());
                }
            }
            e
        })
        .collect();
    VectorField::new(comps)
}

/// Coordinate fields plus the first `random` fields of a sample.
pub fn test_fields(dim: usize, sample: &Sample, random: usize) -> Vec<VectorField> {
    let mut out: Vec<VectorField> = (0..dim).map(|i| VectorField::coordinate(dim, i)).collect();
    out.extend(sample.fields.iter().take(random).cloned());
    out
}

/// All ordered pairs of coordinate fields plus the sample's random pair.
pub fn test_pairs(dim: usize, sample: &Sample) -> Vec<(VectorField, VectorField)> {
    let mut out = Vec::with_capacity(dim * dim + 1);
    for i in 0..dim {
        for j in 0..dim {
            out.push((VectorField::coordinate(dim, i), VectorField::coordinate(dim, j)));
        }
    }
    out.push((sample.fields[0].clone(), sample.fields[1].clone()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_stable_and_in_box() {
        let m = ChartedManifold::euclidean("r3", &["x", "y", "z"], vec![[-1.0, 1.0], [0.0, 2.0], [5.0, 5.0]])
            .unwrap();
        let a = Samples::generate(&m, 7, 10);
        let b = Samples::generate(&m, 7, 4);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.point, y.point);
            assert_eq!(x.fields, y.fields);
        }
        assert!(a.iter().all(|s| m.contains(&s.point)));
        assert_ne!(Samples::generate(&m, 8, 1).items()[0].point, a.items()[0].point);
    }
}
