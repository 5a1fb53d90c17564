//! Multiresolution hash-grid features.
//!
//! A stack of 2D lattices at geometrically growing resolutions, each backed
//! by a trainable feature table. Coarse lattices store one feature row per
//! vertex; once a lattice outgrows the table its vertices share rows through
//! a spatial hash. Queries interpolate the four surrounding vertices
//! bilinearly, so features are continuous in the input and gradients flow
//! both into the table rows and back out through the query coordinates.

use std::rc::Rc;

use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::autodiff::{CustomGrad, Tape, Tensor, Var};
use crate::rng;
use crate::Real;

const HASH_PRIME_X: u64 = 1;
const HASH_PRIME_Y: u64 = 2_654_435_761;

/// How resolutions grow from one level to the next.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Fixed per-level ratio.
    Ratio(f64),
    /// Derive the ratio so the last level lands on this resolution.
    FinestResolution(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashGridConfig {
    pub levels: usize,
    /// Table holds `2^table_size_log2` rows.
    pub table_size_log2: u32,
    /// Feature columns per row.
    pub features: usize,
    /// Coarsest lattice resolution.
    pub base_resolution: usize,
    pub growth: Growth,
}

impl HashGridConfig {
    pub fn table_size(&self) -> usize {
        1 << self.table_size_log2
    }

    pub fn growth_factor(&self) -> f64 {
        match self.growth {
            Growth::Ratio(b) => b,
            Growth::FinestResolution(finest) => {
                if self.levels <= 1 {
                    1.0
                } else {
                    (((finest as f64).ln() - (self.base_resolution as f64).ln())
                        / (self.levels - 1) as f64)
                        .exp()
                }
            }
        }
    }

    /// Lattice resolution (cells per axis) at `level`.
    pub fn resolution(&self, level: usize) -> usize {
        assert!(level < self.levels, "level {level} out of {}", self.levels);
        match self.growth {
            Growth::FinestResolution(finest) if level + 1 == self.levels => finest,
            _ => {
                let b = self.growth_factor();
                (self.base_resolution as f64 * b.powi(level as i32)).floor() as usize
            }
        }
    }

    /// A level is dense when every lattice vertex gets its own table row.
    pub fn is_dense(&self, level: usize) -> bool {
        let n = self.resolution(level);
        (n + 1) * (n + 1) <= self.table_size()
    }

    /// Rows actually allocated for `level`.
    pub fn rows(&self, level: usize) -> usize {
        let n = self.resolution(level);
        ((n + 1) * (n + 1)).min(self.table_size())
    }

    /// Feature width of the concatenated encoding.
    pub fn output_dim(&self) -> usize {
        self.levels * self.features
    }
}

/// Table row index of lattice vertex `(ix, iy)` at `level`.
///
/// Dense levels index row-major with `ix` fastest; hashed levels combine the
/// coordinates by XOR of prime multiples, reduced modulo the table size.
pub fn hash_index(config: &HashGridConfig, level: usize, ix: usize, iy: usize) -> usize {
    let n = config.resolution(level);
    debug_assert!(ix <= n && iy <= n, "vertex ({ix},{iy}) outside lattice {n}");
    if config.is_dense(level) {
        iy * (n + 1) + ix
    } else {
        ((ix as u64 * HASH_PRIME_X) ^ (iy as u64 * HASH_PRIME_Y)) as usize % config.table_size()
    }
}

/// Trainable feature tables for every level of a [`HashGridConfig`].
#[derive(Clone, Debug)]
pub struct HashGrid<T: Real> {
    config: HashGridConfig,
    tables: Vec<Tensor<T>>,
}

impl<T: Real> HashGrid<T> {
    /// Tables start uniform in `[-1e-4, 1e-4]`.
    pub fn init(config: HashGridConfig, rng: &mut impl RngCore) -> Self {
        let tables = (0..config.levels)
            .map(|level| {
                let rows = config.rows(level);
                let data = (0..rows * config.features)
                    .map(|_| rng::uniform(rng, -1e-4, 1e-4))
                    .collect();
                Tensor::from_vec(vec![rows, config.features], data)
            })
            .collect();
        Self { config, tables }
    }

    pub fn from_tables(config: HashGridConfig, tables: Vec<Tensor<T>>) -> Self {
        assert_eq!(tables.len(), config.levels);
        for (level, t) in tables.iter().enumerate() {
            assert_eq!(t.shape(), &[config.rows(level), config.features]);
        }
        Self { config, tables }
    }

    pub fn config(&self) -> &HashGridConfig {
        &self.config
    }

    pub fn tables(&self) -> &[Tensor<T>] {
        &self.tables
    }

    pub fn tables_mut(&mut self) -> &mut Vec<Tensor<T>> {
        &mut self.tables
    }
}

/// Encode `[p, 2]` coordinates through every level and concatenate to
/// `[p, levels * features]`. `tables` must hold one registered `Var` per
/// level, in level order.
pub fn hash_encode<T: Real>(
    tape: &mut Tape<T>,
    config: &HashGridConfig,
    coords: Var,
    tables: &[Var],
) -> Var {
    assert_eq!(tables.len(), config.levels, "one table per level");
    assert_eq!(tape.value(coords).cols(), 2, "hash encoding is 2D");
    let per_level: Vec<Var> = (0..config.levels)
        .map(|level| {
            let op = HashLevelOp::new(config, level);
            let value = op.forward(tape.value(coords), tape.value(tables[level]));
            tape.custom(&[coords, tables[level]], value, Rc::new(op))
        })
        .collect();
    tape.concat_cols(&per_level)
}

/// One lattice level: bilinear gather against its feature table.
struct HashLevelOp {
    resolution: usize,
    features: usize,
    dense: bool,
    table_size: usize,
}

impl HashLevelOp {
    fn new(config: &HashGridConfig, level: usize) -> Self {
        Self {
            resolution: config.resolution(level),
            features: config.features,
            dense: config.is_dense(level),
            table_size: config.table_size(),
        }
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        if self.dense {
            iy * (self.resolution + 1) + ix
        } else {
            ((ix as u64 * HASH_PRIME_X) ^ (iy as u64 * HASH_PRIME_Y)) as usize % self.table_size
        }
    }

    /// Cell-local setup for one query point: base vertex, fractional
    /// coordinates, and whether each axis was clamped out of `[-1, 1]`.
    fn locate<T: Real>(&self, x: T, y: T) -> CellQuery<T> {
        let one = T::one();
        let n = self.resolution;
        let half_n = T::from_usize(n).unwrap() / (one + one);
        let clamp = |c: T| {
            if c > one {
                (one, false)
            } else if c < -one {
                (-one, false)
            } else {
                (c, true)
            }
        };
        let (xc, x_inside) = clamp(x);
        let (yc, y_inside) = clamp(y);
        let u = (xc + one) * half_n;
        let v = (yc + one) * half_n;
        let ix0 = (u.to_f64().unwrap().floor() as usize).min(n.saturating_sub(1));
        let iy0 = (v.to_f64().unwrap().floor() as usize).min(n.saturating_sub(1));
        CellQuery {
            ix0,
            iy0,
            fx: u - T::from_usize(ix0).unwrap(),
            fy: v - T::from_usize(iy0).unwrap(),
            x_inside,
            y_inside,
            half_n,
        }
    }

    fn forward<T: Real>(&self, coords: &Tensor<T>, table: &Tensor<T>) -> Tensor<T> {
        let p = coords.rows();
        let f = self.features;
        let mut out = vec![T::zero(); p * f];
        for (r, pt) in coords.data().chunks_exact(2).enumerate() {
            let q = self.locate(pt[0], pt[1]);
            for (corner, w) in q.corners() {
                let row = &table.data()[self.index(corner.0, corner.1) * f..][..f];
                for (o, &e) in out[r * f..(r + 1) * f].iter_mut().zip(row) {
                    *o += w * e;
                }
            }
        }
        Tensor::from_vec(vec![p, f], out)
    }
}

struct CellQuery<T> {
    ix0: usize,
    iy0: usize,
    fx: T,
    fy: T,
    x_inside: bool,
    y_inside: bool,
    /// d(lattice coordinate)/d(input coordinate) before clamping.
    half_n: T,
}

impl<T: Real> CellQuery<T> {
    /// The four surrounding vertices with their bilinear weights.
    fn corners(&self) -> [((usize, usize), T); 4] {
        let one = T::one();
        let (fx, fy) = (self.fx, self.fy);
        [
            ((self.ix0, self.iy0), (one - fx) * (one - fy)),
            ((self.ix0 + 1, self.iy0), fx * (one - fy)),
            ((self.ix0, self.iy0 + 1), (one - fx) * fy),
            ((self.ix0 + 1, self.iy0 + 1), fx * fy),
        ]
    }

    /// Weight derivatives with respect to the two lattice coordinates.
    fn corner_grads(&self) -> [((usize, usize), T, T); 4] {
        let one = T::one();
        let (fx, fy) = (self.fx, self.fy);
        [
            ((self.ix0, self.iy0), -(one - fy), -(one - fx)),
            ((self.ix0 + 1, self.iy0), one - fy, -fx),
            ((self.ix0, self.iy0 + 1), -fy, one - fx),
            ((self.ix0 + 1, self.iy0 + 1), fy, fx),
        ]
    }
}

impl<T: Real> CustomGrad<T> for HashLevelOp {
    fn name(&self) -> &'static str {
        "hash_level"
    }

    fn backward(
        &self,
        inputs: &[Tensor<T>],
        grad_out: &Tensor<T>,
        acc: &mut dyn FnMut(usize, Tensor<T>),
    ) {
        let (coords, table) = (&inputs[0], &inputs[1]);
        let p = coords.rows();
        let f = self.features;
        let mut dcoords = vec![T::zero(); p * 2];
        let mut dtable = vec![T::zero(); table.len()];
        for (r, pt) in coords.data().chunks_exact(2).enumerate() {
            let q = self.locate(pt[0], pt[1]);
            let g = &grad_out.data()[r * f..(r + 1) * f];
            let mut du = T::zero();
            let mut dv = T::zero();
            for ((corner, w), (_, wu, wv)) in q.corners().iter().zip(q.corner_grads()) {
                let idx = self.index(corner.0, corner.1);
                let row = &table.data()[idx * f..][..f];
                let mut dot = T::zero();
                for (k, &gk) in g.iter().enumerate() {
                    dtable[idx * f + k] += *w * gk;
                    dot += gk * row[k];
                }
                du += wu * dot;
                dv += wv * dot;
            }
            if q.x_inside {
                dcoords[2 * r] = du * q.half_n;
            }
            if q.y_inside {
                dcoords[2 * r + 1] = dv * q.half_n;
            }
        }
        acc(0, Tensor::from_vec(vec![p, 2], dcoords));
        acc(1, Tensor::from_vec(table.shape().to_vec(), dtable));
    }
}
