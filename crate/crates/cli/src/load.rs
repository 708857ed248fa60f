use std::path::{Path, PathBuf};

use mfdepth::io::{
    depth_from_pfm, depth_to_pfm, image_from_pfm, image_from_pnm, image_to_pnm, mask_from_pgm, mask_to_pgm,
    read_file, read_json, write_file, write_json,
};
use mfdepth::{BinaryMask, CameraIntrinsics, DepthMap, ImagePlane, RigidPose};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::failure::{CmdResult, Failure, InputContext, OutputContext};

fn is_pfm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
}

/// PFM files load as float rasters, anything else as binary PGM/PPM.
pub fn image(path: &Path) -> CmdResult<ImagePlane> {
    let bytes = read_file(path).input(path)?;
    if is_pfm(path) {
        image_from_pfm(&bytes).input(path)
    } else {
        image_from_pnm(&bytes).input(path)
    }
}

pub fn depth(path: &Path) -> CmdResult<DepthMap> {
    depth_from_pfm(&read_file(path).input(path)?).input(path)
}

pub fn mask(path: &Path) -> CmdResult<BinaryMask> {
    mask_from_pgm(&read_file(path).input(path)?).input(path)
}

pub fn json<T: DeserializeOwned>(path: &Path) -> CmdResult<T> {
    read_json(path).input(path)
}

pub fn pose(path: &Path) -> CmdResult<RigidPose> {
    json(path)
}

pub fn intrinsics(path: Option<&Path>) -> CmdResult<CameraIntrinsics> {
    match path {
        Some(p) => json(p),
        None => Err(Failure::bad("--intrinsics <json> is required")),
    }
}

/// Output directory writer.
pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn create(dir: &Path) -> CmdResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Internal(anyhow::Error::new(e).context(format!("creating {}", dir.display()))))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn bytes(&self, name: &str, bytes: mfdepth::Result<Vec<u8>>) -> CmdResult {
        let path = self.path(name);
        write_file(&path, &bytes.output(&path)?).output(&path)
    }

    pub fn image(&self, name: &str, image: &ImagePlane) -> CmdResult {
        self.bytes(name, image_to_pnm(image))
    }

    pub fn depth(&self, name: &str, depth: &DepthMap) -> CmdResult {
        self.bytes(name, depth_to_pfm(depth))
    }

    pub fn mask(&self, name: &str, mask: &BinaryMask) -> CmdResult {
        self.bytes(name, mask_to_pgm(mask))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CmdResult {
        let path = self.path(name);
        write_json(&path, value).output(&path)
    }
}
