//! The dynamic-aware implicit representation.
//!
//! Two coordinate networks share the work of modelling a dynamic sequence:
//! a deformation network warps each frame's pixel lattice into a canonical
//! frame, and a canonical network renders complex intensities there from
//! multiresolution hash features. Time enters only through the deformation
//! network, and the canonical frame is pinned by construction — at its time
//! point the deformation is exactly zero rather than learned.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::encoding::{frequency_features, hash_encode, HashGrid, HashGridConfig};
use crate::image::ComplexImage;
use crate::model::features::FeatureExtractor;
use crate::model::mlp::{BoundMlp, Mlp};
use crate::mri::channels_to_complex;
use crate::rng;
use crate::{real, Error, Real, Result};

/// Settings for the optional frozen feature pathway.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub channels: usize,
    pub layers: usize,
    /// 1 for reconstruction, 2 for temporal interpolation (two neighbors).
    pub input_frames: usize,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self { channels: 16, layers: 3, input_frames: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaInrConfig {
    /// Training image side length.
    pub grid: usize,
    /// Frequency bands for spatial coordinates.
    pub spatial_bands: usize,
    /// Frequency bands for time.
    pub temporal_bands: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub hash: HashGridConfig,
    /// Frame index rendered without deformation (its time maps to 0).
    pub canonical_index: usize,
    pub features: Option<FeatureSettings>,
}

impl DaInrConfig {
    /// Defaults sized for quick experiments: full-strength networks, a hash
    /// pyramid that tops out at the image resolution, no feature pathway.
    pub fn for_grid(grid: usize) -> Self {
        Self {
            grid,
            spatial_bands: 10,
            temporal_bands: 6,
            hidden_width: 64,
            hidden_layers: 5,
            hash: HashGridConfig {
                levels: 8,
                table_size_log2: 14,
                features: 2,
                base_resolution: 4,
                growth: crate::encoding::Growth::FinestResolution(grid.max(8)),
            },
            canonical_index: 0,
            features: None,
        }
    }

    /// Width of the deformation network's input.
    pub fn deform_input_dim(&self) -> usize {
        2 * (2 * self.spatial_bands) + 2 * self.temporal_bands
    }

    /// Width of the canonical network's input.
    pub fn canonical_input_dim(&self) -> usize {
        self.hash.output_dim() + self.features.map_or(0, |f| f.channels)
    }
}

#[derive(Clone)]
pub struct DaInrModel<T: Real> {
    config: DaInrConfig,
    deform: Mlp<T>,
    canonical: Mlp<T>,
    grid: HashGrid<T>,
    extractor: Option<FeatureExtractor<T>>,
}

impl<T: Real> DaInrModel<T> {
    pub fn new(config: DaInrConfig, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let mut deform = Mlp::new(
            config.deform_input_dim(),
            config.hidden_width,
            config.hidden_layers,
            2,
            &mut r,
        );
        // Start with near-zero deformations so early training stays close to
        // the canonical solution.
        deform.last_layer_mut().scale(1e-4);
        let canonical = Mlp::new(
            config.canonical_input_dim(),
            config.hidden_width,
            config.hidden_layers,
            2,
            &mut r,
        );
        let grid = HashGrid::init(config.hash, &mut r);
        let extractor = config
            .features
            .map(|f| FeatureExtractor::new(f.input_frames, f.channels, f.layers, seed ^ 0x5eed));
        Self { config, deform, canonical, grid, extractor }
    }

    pub fn config(&self) -> &DaInrConfig {
        &self.config
    }

    pub fn extractor(&self) -> Option<&FeatureExtractor<T>> {
        self.extractor.as_ref()
    }

    pub fn deform_net(&self) -> &Mlp<T> {
        &self.deform
    }

    pub fn canonical_net(&self) -> &Mlp<T> {
        &self.canonical
    }

    pub fn hash_grid(&self) -> &HashGrid<T> {
        &self.grid
    }

    /// Trainable parameters in a fixed order: deformation net, canonical
    /// net, hash tables. The frozen extractor is deliberately absent.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out = self.deform.params();
        out.extend(self.canonical.params());
        out.extend(self.grid.tables().iter());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = self.deform.params_mut();
        out.extend(self.canonical.params_mut());
        out.extend(self.grid.tables_mut().iter_mut());
        out
    }

    /// Every stored tensor with its checkpoint name, trainables first
    /// (deformation net, canonical net, hash tables), then the frozen
    /// extractor.
    pub fn named_tensors(&self) -> Vec<(String, Tensor<T>)> {
        let mut out = Vec::new();
        for (prefix, net) in [("deform", &self.deform), ("canonical", &self.canonical)] {
            for (i, l) in net.layers().iter().enumerate() {
                out.push((format!("{prefix}.layer{i}.weight"), l.weight.clone()));
                out.push((format!("{prefix}.layer{i}.bias"), l.bias.clone()));
            }
        }
        for (l, t) in self.grid.tables().iter().enumerate() {
            out.push((format!("hash.level{l}"), t.clone()));
        }
        if let Some(fx) = &self.extractor {
            out.extend(fx.tensors());
        }
        out
    }

    /// Overwrite every stored tensor from a checkpoint's name/tensor list.
    pub fn set_named_tensors(&mut self, tensors: &[(String, Tensor<T>)]) -> Result<()> {
        let expected: Vec<(String, Tensor<T>)> = self.named_tensors();
        if tensors.len() != expected.len() {
            return Err(Error::Dataset(format!(
                "checkpoint holds {} tensors, model needs {}",
                tensors.len(),
                expected.len()
            )));
        }
        for ((name, tensor), (want_name, want)) in tensors.iter().zip(&expected) {
            if name != want_name {
                return Err(Error::Dataset(format!(
                    "unexpected tensor '{name}' where '{want_name}' belongs"
                )));
            }
            if tensor.shape() != want.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor '{name}': {:?} vs {:?}",
                    tensor.shape(),
                    want.shape()
                )));
            }
        }
        let n_train = self.params().len();
        for (target, (_, tensor)) in self.params_mut().into_iter().zip(tensors) {
            *target = tensor.clone();
        }
        if let Some(fx) = &mut self.extractor {
            let rest: Vec<Tensor<T>> = tensors[n_train..].iter().map(|(_, t)| t.clone()).collect();
            fx.load_tensors(&rest)?;
        }
        Ok(())
    }

    /// Register every trainable parameter on a fresh tape.
    pub fn bind(&self, tape: &mut Tape<T>) -> BoundDaInr {
        let deform = self.deform.bind(tape);
        let canonical = self.canonical.bind(tape);
        let tables = self.grid.tables().iter().map(|t| tape.param(t.clone())).collect();
        BoundDaInr { deform, canonical, tables }
    }

    /// Normalized time of frame `k` out of `total`: spacing `1/(total-1)`
    /// with the canonical frame exactly at zero, so every time stays within
    /// `[-1, 1]`.
    pub fn frame_time(&self, k: usize, total: usize) -> T {
        frame_time_with_canonical(k, total, self.config.canonical_index)
    }

    /// Precompute the pixel lattice for an output resolution: row-major
    /// pixel-centered coordinates in `[-1, 1)²` and their frequency
    /// features.
    pub fn lattice(&self, out_size: usize) -> RenderLattice<T> {
        let coords = lattice_coords(out_size);
        let spatial = frequency_features(&coords, self.config.spatial_bands);
        RenderLattice { size: out_size, coords, spatial }
    }

    /// Render one frame on the tape: returns the `[p, 2]` (Re, Im) output.
    ///
    /// `features` must be present exactly when the feature pathway is
    /// enabled; it is a per-pixel constant block from
    /// [`FeatureExtractor::extract`] at this lattice's resolution.
    pub fn render_on_tape(
        &self,
        tape: &mut Tape<T>,
        bound: &BoundDaInr,
        lattice: &RenderLattice<T>,
        t: T,
        features: Option<&Tensor<T>>,
    ) -> Result<Var> {
        let p = lattice.size * lattice.size;
        match (&self.extractor, features) {
            (Some(fx), Some(f)) if f.shape() != [p, fx.channels()] => {
                return Err(Error::ShapeMismatch(format!(
                    "feature block {:?} does not match lattice {p}x{}",
                    f.shape(),
                    fx.channels()
                )));
            }
            (Some(_), None) => {
                return Err(Error::InvalidArgument(
                    "feature pathway enabled but no features supplied".into(),
                ));
            }
            (None, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "features supplied but the pathway is disabled".into(),
                ));
            }
            _ => {}
        }

        let coords = tape.constant(lattice.coords.clone());
        let warped = if t == T::zero() {
            // Canonical frame: the deformation is identically zero by
            // definition, not through the network.
            coords
        } else {
            let input = tape.constant(self.deform_input(lattice, t));
            let delta = bound.deform.forward(tape, input);
            tape.add(coords, delta)
        };

        let mut encoded = hash_encode(tape, &self.config.hash, warped, &bound.tables);
        if let Some(f) = features {
            let fv = tape.constant(f.clone());
            encoded = tape.concat_cols(&[encoded, fv]);
        }
        Ok(bound.canonical.forward(tape, encoded))
    }

    /// Deformation-network input: spatial frequency features of the lattice
    /// with the frame's temporal features appended to every row.
    fn deform_input(&self, lattice: &RenderLattice<T>, t: T) -> Tensor<T> {
        let p = lattice.size * lattice.size;
        let t_feat = frequency_features(&Tensor::from_vec(vec![1, 1], vec![t]), self.config.temporal_bands);
        let (sw, tw) = (lattice.spatial.cols(), t_feat.len());
        let width = sw + tw;
        let mut out = vec![T::zero(); p * width];
        for (row, spatial) in out.chunks_exact_mut(width).zip(lattice.spatial.data().chunks_exact(sw)) {
            row[..sw].copy_from_slice(spatial);
            row[sw..].copy_from_slice(t_feat.data());
        }
        Tensor::from_vec(vec![p, width], out)
    }

    /// Convenience inference path: render the frame at `t` scaled by `r ≥ 1`
    /// into a complex image of side `round(r · grid)`.
    pub fn render_image(
        &self,
        t: T,
        r: f64,
        features: Option<&Tensor<T>>,
    ) -> Result<ComplexImage<T>> {
        if r < 1.0 {
            return Err(Error::InvalidArgument(format!("scale ratio {r} < 1")));
        }
        let out_size = (r * self.config.grid as f64).round() as usize;
        let lattice = self.lattice(out_size);
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let out = self.render_on_tape(&mut tape, &bound, &lattice, t, features)?;
        Ok(ComplexImage::from_vec(out_size, channels_to_complex(tape.value(out))))
    }
}

/// Time mapping shared by the model and the baselines.
pub fn frame_time_with_canonical<T: Real>(k: usize, total: usize, canonical: usize) -> T {
    assert!(k < total, "frame {k} out of {total}");
    assert!(canonical < total, "canonical frame {canonical} out of {total}");
    if total == 1 {
        return T::zero();
    }
    real((k as f64 - canonical as f64) / (total as f64 - 1.0))
}

/// Evenly spaced `[-1, 1)` coordinate of pixel `i` on an `n`-point axis:
/// `(i - n/2) / (n/2)`, the same centering the discrete Fourier transform
/// assumes. Lattices of different sizes nest (a half-resolution grid is the
/// even subset of the full one), so renders at different scales stay aligned.
fn lattice_coord<T: Real>(i: usize, n: usize) -> T {
    let half = n as f64 / 2.0;
    real((i as f64 - half) / half)
}

/// Row-major `[n², 2]` tensor of pixel coordinates in `[-1, 1)²` — the input
/// lattice shared by every coordinate network here.
pub fn lattice_coords<T: Real>(n: usize) -> Tensor<T> {
    assert!(n > 1, "lattice needs at least 2 pixels per side");
    let p = n * n;
    let mut coords = Vec::with_capacity(2 * p);
    for iy in 0..n {
        let y = lattice_coord::<T>(iy, n);
        for ix in 0..n {
            coords.push(lattice_coord::<T>(ix, n));
            coords.push(y);
        }
    }
    Tensor::from_vec(vec![p, 2], coords)
}

/// Tape-registered parameter handles for one optimization step.
pub struct BoundDaInr {
    pub deform: BoundMlp,
    pub canonical: BoundMlp,
    pub tables: Vec<Var>,
}

impl BoundDaInr {
    /// Vars in the same order as [`DaInrModel::params`].
    pub fn param_vars(&self) -> Vec<Var> {
        let mut out = self.deform.param_vars();
        out.extend(self.canonical.param_vars());
        out.extend(self.tables.iter().copied());
        out
    }
}

/// Coordinates and cached spatial features of a render lattice.
pub struct RenderLattice<T> {
    size: usize,
    coords: Tensor<T>,
    spatial: Tensor<T>,
}

impl<T: Real> RenderLattice<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coords(&self) -> &Tensor<T> {
        &self.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny_config() -> DaInrConfig {
        let mut c = DaInrConfig::for_grid(8);
        c.hidden_width = 16;
        c.hidden_layers = 2;
        c.hash.levels = 3;
        c.hash.table_size_log2 = 8;
        c.hash.growth = crate::encoding::Growth::FinestResolution(8);
        c
    }

    #[test]
    fn config_dimensions_match_architecture() {
        let c = DaInrConfig::for_grid(128);
        assert_eq!(c.deform_input_dim(), 52);
        assert_eq!(c.canonical_input_dim(), c.hash.levels * c.hash.features);
        let with_features =
            DaInrConfig { features: Some(FeatureSettings::default()), ..c.clone() };
        assert_eq!(with_features.canonical_input_dim(), c.canonical_input_dim() + 16);
    }

    #[test]
    fn frame_times_stay_in_range_with_canonical_zero() {
        let m = DaInrModel::<f64>::new(tiny_config(), 1);
        let total = 9;
        assert_eq!(m.frame_time(0, total), 0.0);
        for k in 0..total {
            let t: f64 = m.frame_time(k, total);
            assert!((-1.0..=1.0).contains(&t));
        }
        assert_relative_eq!(m.frame_time(8, total), 1.0);
    }

    #[test]
    fn canonical_frame_renders_without_deformation() {
        let model = DaInrModel::<f64>::new(tiny_config(), 5);
        let lattice = model.lattice(8);

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let through = model
            .render_on_tape(&mut tape, &bound, &lattice, 0.0, None)
            .unwrap();

        // Bypass: hash-encode the raw lattice and run the canonical net.
        let mut tape2 = Tape::new();
        let bound2 = model.bind(&mut tape2);
        let coords = tape2.constant(lattice.coords.clone());
        let enc = hash_encode(&mut tape2, &model.config().hash, coords, &bound2.tables);
        let bypass = bound2.canonical.forward(&mut tape2, enc);

        assert_eq!(tape.value(through).data(), tape2.value(bypass).data());
    }

    #[test]
    fn noncanonical_frames_actually_deform() {
        let mut config = tiny_config();
        config.hidden_width = 32;
        let mut model = DaInrModel::<f64>::new(config, 5);
        // Undo the near-zero final layer so the deformation is visible.
        model.deform.last_layer_mut().scale(1e6);
        let lattice = model.lattice(8);
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let a = model.render_on_tape(&mut tape, &bound, &lattice, 0.0, None).unwrap();
        let b = model.render_on_tape(&mut tape, &bound, &lattice, 0.5, None).unwrap();
        let (av, bv) = (tape.value(a).data(), tape.value(b).data());
        assert!(av.iter().zip(bv).any(|(x, y)| (x - y).abs() > 1e-9));
    }

    #[test]
    fn every_parameter_reaches_the_loss_off_canonical() {
        let model = DaInrModel::<f64>::new(tiny_config(), 2);
        let lattice = model.lattice(8);
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let out = model.render_on_tape(&mut tape, &bound, &lattice, 0.625, None).unwrap();
        let sq = tape.mul(out, out);
        let loss = tape.sum(sq);
        let grads = tape.backward(loss).unwrap();
        for (var, p) in bound.param_vars().iter().zip(model.params()) {
            let g = grads.get(*var);
            assert!(g.is_some(), "parameter of shape {:?} unreached", p.shape());
        }
    }

    #[test]
    fn canonical_gradient_matches_finite_differences() {
        let model = DaInrModel::<f64>::new(tiny_config(), 12);
        let lattice = model.lattice(6);
        let t = 0.375;

        let loss_of = |m: &DaInrModel<f64>| -> f64 {
            let mut tape = Tape::new();
            let bound = m.bind(&mut tape);
            let out = m.render_on_tape(&mut tape, &bound, &lattice, t, None).unwrap();
            let loss = tape.sum(out);
            tape.value(loss).item()
        };

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let out = model.render_on_tape(&mut tape, &bound, &lattice, t, None).unwrap();
        let loss = tape.sum(out);
        let grads = tape.backward(loss).unwrap();

        // Probe a handful of entries in the first hash table.
        let table_var = bound.tables[0];
        let analytic = grads.of(table_var, &model.grid.tables()[0]);
        let h = 1e-4;
        for k in [0usize, 3, 7, 11] {
            let mut plus = model.clone();
            plus.grid.tables_mut()[0].data_mut()[k] += h;
            let mut minus = model.clone();
            minus.grid.tables_mut()[0].data_mut()[k] -= h;
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            if fd.abs() > 1e-12 || analytic.data()[k].abs() > 1e-12 {
                assert_relative_eq!(analytic.data()[k], fd, max_relative = 1e-4, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn render_image_validates_scale() {
        let model = DaInrModel::<f64>::new(tiny_config(), 3);
        assert!(matches!(model.render_image(0.0, 0.5, None), Err(Error::InvalidArgument(_))));
        let img = model.render_image(0.0, 1.0, None).unwrap();
        assert_eq!(img.size(), 8);
        let up = model.render_image(0.0, 2.0, None).unwrap();
        assert_eq!(up.size(), 16);
    }

    #[test]
    fn feature_pathway_is_all_or_nothing() {
        let model = DaInrModel::<f64>::new(tiny_config(), 3);
        let lattice = model.lattice(8);
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let fake = Tensor::<f64>::zeros(vec![64, 16]);
        assert!(model
            .render_on_tape(&mut tape, &bound, &lattice, 0.0, Some(&fake))
            .is_err());

        let mut config = tiny_config();
        config.features = Some(FeatureSettings::default());
        let with_fx = DaInrModel::<f64>::new(config, 3);
        let mut tape2 = Tape::new();
        let bound2 = with_fx.bind(&mut tape2);
        assert!(with_fx
            .render_on_tape(&mut tape2, &bound2, &lattice, 0.0, None)
            .is_err());
    }
}
