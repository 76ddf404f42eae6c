use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::DatasetError;

/// Row-major 16-bit depth image; units are defined by the camera depth scale
/// (millimeters everywhere in this crate). Zero means no measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl DepthMap {
    pub fn zeros(width: u32, height: u32) -> Self {
        DepthMap {
            width,
            height,
            data: vec![0; (width * height) as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.data[(y * self.width + x) as usize]
    }

    pub fn save_png(&self, path: &Path) -> Result<(), DatasetError> {
        let img: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width, self.height, self.data.clone())
                .expect("buffer matches dimensions");
        img.save(path).map_err(|e| DatasetError::Image {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    pub fn load_png(path: &Path) -> Result<Self, DatasetError> {
        let img = image::open(path)
            .map_err(|e| DatasetError::Image {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?
            .into_luma16();
        Ok(DepthMap {
            width: img.width(),
            height: img.height(),
            data: img.into_raw(),
        })
    }
}

/// A color frame with aligned (or to-be-aligned) depth and a per-pixel
/// validity flag. `rgb` and `validity` are row-major at `width` x `height`;
/// `depth` may start at a different resolution until alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbdFrame {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<[u8; 3]>,
    pub depth: DepthMap,
    pub validity: Vec<bool>,
}

impl RgbdFrame {
    /// All-black, all-invalid frame with aligned depth.
    pub fn empty(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        RgbdFrame {
            width,
            height,
            rgb: vec![[0; 3]; n],
            depth: DepthMap::zeros(width, height),
            validity: vec![false; n],
        }
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn valid_count(&self) -> usize {
        self.validity.iter().filter(|v| **v).count()
    }

    pub fn save_rgb_png(&self, path: &Path) -> Result<(), DatasetError> {
        let mut img = RgbImage::new(self.width, self.height);
        for (i, p) in img.pixels_mut().enumerate() {
            *p = Rgb(self.rgb[i]);
        }
        img.save(path).map_err(|e| DatasetError::Image {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    pub fn save_validity_png(&self, path: &Path) -> Result<(), DatasetError> {
        save_mask_png(&self.validity, self.width, self.height, path)
    }

    /// Load RGB + depth + validity PNGs written by the save methods.
    pub fn load_pngs(
        rgb_path: &Path,
        depth_path: &Path,
        validity_path: &Path,
    ) -> Result<Self, DatasetError> {
        let rgb_img = image::open(rgb_path)
            .map_err(|e| DatasetError::Image {
                path: rgb_path.to_path_buf(),
                detail: e.to_string(),
            })?
            .into_rgb8();
        let (width, height) = (rgb_img.width(), rgb_img.height());
        let rgb = rgb_img.pixels().map(|p| p.0).collect();
        let depth = DepthMap::load_png(depth_path)?;
        let validity = load_mask_png(validity_path)?.0;
        Ok(RgbdFrame {
            width,
            height,
            rgb,
            depth,
            validity,
        })
    }
}

/// Write raw RGB pixel rows as a PNG.
pub fn write_rgb_png(
    rgb: &[[u8; 3]],
    width: u32,
    height: u32,
    path: &Path,
) -> Result<(), DatasetError> {
    let mut img = RgbImage::new(width, height);
    for (i, p) in img.pixels_mut().enumerate() {
        *p = Rgb(rgb[i]);
    }
    img.save(path).map_err(|e| DatasetError::Image {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Read a plain RGB PNG as pixel rows plus dimensions.
pub fn load_rgb_png(path: &Path) -> Result<(Vec<[u8; 3]>, u32, u32), DatasetError> {
    let img = image::open(path)
        .map_err(|e| DatasetError::Image {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?
        .into_rgb8();
    let (w, h) = (img.width(), img.height());
    Ok((img.pixels().map(|p| p.0).collect(), w, h))
}

/// Write a boolean mask as an 8-bit grayscale PNG (255 = set).
pub fn save_mask_png(
    mask: &[bool],
    width: u32,
    height: u32,
    path: &Path,
) -> Result<(), DatasetError> {
    let data: Vec<u8> = mask.iter().map(|&v| if v { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(width, height, data).expect("buffer matches dimensions");
    img.save(path).map_err(|e| DatasetError::Image {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Read a boolean mask from a grayscale PNG; nonzero pixels are set.
pub fn load_mask_png(path: &Path) -> Result<(Vec<bool>, u32, u32), DatasetError> {
    let img = image::open(path)
        .map_err(|e| DatasetError::Image {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?
        .into_luma8();
    let (w, h) = (img.width(), img.height());
    Ok((img.into_raw().into_iter().map(|v| v != 0).collect(), w, h))
}
