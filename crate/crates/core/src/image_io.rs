//! PNG and photo I/O for covers, containers, and diff figures.

use std::path::Path;

use image::imageops::FilterType;
use image::{GrayImage, RgbImage};

use crate::audio::IMAGE_SIDE;
use crate::error::{Result, StegoError};
use crate::lsb::ByteImage;
use crate::tensor::PlanarTensor;

fn image_err(path: &Path, e: impl ToString) -> StegoError {
    StegoError::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Decodes any supported image as 8-bit RGB; grayscale is replicated.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(StegoError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    Ok(image::open(path).map_err(|e| image_err(path, e))?.to_rgb8())
}

/// Bilinear resize to `IMAGE_SIDE` × `IMAGE_SIDE`.
pub fn resize_to_grid(img: &RgbImage) -> RgbImage {
    if img.dimensions() == (IMAGE_SIDE as u32, IMAGE_SIDE as u32) {
        return img.clone();
    }
    image::imageops::resize(img, IMAGE_SIDE as u32, IMAGE_SIDE as u32, FilterType::Triangle)
}

pub fn rgb_to_bytes(img: &RgbImage) -> ByteImage {
    ByteImage::new(img.height() as usize, img.width() as usize, img.as_raw().clone())
        .expect("rgb buffer size")
}

pub fn bytes_to_rgb(img: &ByteImage) -> RgbImage {
    RgbImage::from_raw(img.width as u32, img.height as u32, img.values.clone()).expect("rgb buffer size")
}

pub fn load_byte_image(path: impl AsRef<Path>) -> Result<ByteImage> {
    Ok(rgb_to_bytes(&load_rgb(path)?))
}

/// Loads a 255×255 cover as a [0, 1] tensor.
pub fn load_cover(path: impl AsRef<Path>) -> Result<PlanarTensor<f32>> {
    let img = load_byte_image(path)?;
    if (img.height, img.width) != (IMAGE_SIDE, IMAGE_SIDE) {
        return Err(StegoError::shape(
            format!("{IMAGE_SIDE}x{IMAGE_SIDE} cover"),
            format!("{}x{}", img.height, img.width),
        ));
    }
    Ok(img.to_tensor())
}

/// Rejects any output path that is not `.png`.
pub fn require_png(path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("png") => Ok(()),
        _ => Err(StegoError::LossyFormat(path.to_path_buf())),
    }
}

pub fn save_png(img: &ByteImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    require_png(path)?;
    bytes_to_rgb(img).save(path).map_err(|e| image_err(path, e))
}

/// Writes a single-channel [0, 1] tensor as an 8-bit grayscale PNG.
pub fn save_gray_png(t: &PlanarTensor<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    require_png(path)?;
    if t.channels() != 1 {
        return Err(StegoError::shape("HxWx1", t.shape_string()));
    }
    let pixels = t
        .values()
        .iter()
        .map(|&v| (v as f64 * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::from_raw(t.width() as u32, t.height() as u32, pixels)
        .expect("gray buffer size")
        .save(path)
        .map_err(|e| image_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_and_lossy_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let img = ByteImage::new(3, 5, (0..45).map(|v| v as u8 * 5).collect()).unwrap();
        let p = dir.path().join("x.PNG");
        save_png(&img, &p).unwrap();
        assert_eq!(load_byte_image(&p).unwrap(), img);
        assert!(matches!(
            save_png(&img, dir.path().join("x.jpg")),
            Err(StegoError::LossyFormat(_))
        ));
    }

    #[test]
    fn resize_and_grayscale_replication() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        GrayImage::from_fn(512, 384, |x, y| image::Luma([((x + y) % 256) as u8]))
            .save(&p)
            .unwrap();
        let rgb = load_rgb(&p).unwrap();
        assert!(rgb.pixels().all(|px| px[0] == px[1] && px[1] == px[2]));
        let r = resize_to_grid(&rgb);
        assert_eq!(r.dimensions(), (255, 255));
    }

    #[test]
    fn tensor_quantization() {
        let t = PlanarTensor::new(1, 1, 3, vec![0.0f32, 0.5, 1.0]).unwrap();
        assert_eq!(ByteImage::from_tensor(&t).unwrap().values, vec![0, 128, 255]);
    }
}
