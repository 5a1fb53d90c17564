//! `simulate`: synthesize a phantom dataset directory.

use std::path::Path;

use dainr::phantom::{
    add_acquisition_noise, generate_coil_maps, generate_phantom, retrospective_undersample,
    DatasetBundle, DynamicPhantomSpec,
};

use crate::artifacts::claim_out_dir;
use crate::config::{PhantomKind, RunConfig};
use crate::error::Result;
use crate::preview;

/// The phantom math runs in double precision; the dataset format quantizes
/// to `f32` on disk either way.
pub fn run(config: &RunConfig, out: &Path, force: bool) -> Result<()> {
    claim_out_dir(out, force)?;

    let p = &config.phantom;
    let spec = match p.kind {
        PhantomKind::Beating => DynamicPhantomSpec::<f64>::beating(p.size, p.frames),
        PhantomKind::Uptake => DynamicPhantomSpec::<f64>::uptake(p.size, p.frames),
    };
    let gt = generate_phantom(&spec)?;
    let maps = generate_coil_maps(p.coils, p.size, config.seed);
    let mut acq =
        retrospective_undersample(&gt, &maps, config.sampling.spokes, config.sampling.start)?;
    if p.noise > 0.0 {
        // Separate stream from the coil-map perturbations.
        add_acquisition_noise(&mut acq, p.noise, config.seed.wrapping_add(1));
    }

    let bundle = DatasetBundle::new(Some(gt), maps, acq, config.seed, p.noise)?;
    bundle.save(out)?;
    preview::sequence_previews(
        out,
        "preview",
        bundle.ground_truth.as_ref().expect("simulated dataset always has ground truth"),
        config.output.png,
    )?;
    config.echo(out)?;

    eprintln!(
        "simulated {kind:?} phantom: {n}x{n} pixels, {frames} frames, {coils} coils, \
         {spokes} spokes/frame (acceleration {af:.1})",
        kind = p.kind,
        n = p.size,
        frames = p.frames,
        coils = p.coils,
        spokes = config.sampling.spokes,
        af = bundle.manifest.acceleration_factor,
    );
    Ok(())
}
