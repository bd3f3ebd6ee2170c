//! Hologram frame sources: image files, directories of frames, raw dump
//! streams and the synthetic generator, with optional sensor downsampling.

mod source;

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::dump::{self, Record, FIELD_MAGIC, IMAGE_MAGIC};
use crate::error::{Error, Result};
use crate::field::{Grid, RealImage};

pub use source::{
    open_source, DirectorySource, FileSource, FrameSource, NewestFrame, RawStreamSource,
    SourceConfig, SourceKind, SyntheticSource,
};

/// Reads a grayscale intensity image.
///
/// PNG and PGM files (8 or 16 bit) keep their integer levels as values and
/// get `pitch` on both axes. `RIMG` dumps are returned as stored, pitch
/// included. `CFLD` dumps are converted to intensity `|u|^2`.
pub fn read_grayscale(path: impl AsRef<Path>, pitch: f64) -> Result<RealImage> {
    let path = path.as_ref();
    let mut magic = [0u8; 4];
    let got = {
        let mut file = File::open(path)?;
        let mut filled = 0;
        while filled < 4 {
            match file.read(&mut magic[filled..])? {
                0 => break,
                n => filled += n,
            }
        }
        filled
    };
    if got == 4 && (magic == IMAGE_MAGIC || magic == FIELD_MAGIC) {
        return match dump::read_record(BufReader::new(File::open(path)?))? {
            Some(Record::Image(img)) => Ok(img),
            Some(Record::Field(field)) => RealImage::new(
                field.grid(),
                field.samples().iter().map(|c| c.norm_sqr()).collect(),
            ),
            None => Err(Error::Truncated(format!("{} is empty", path.display()))),
        };
    }

    let reader = ImageReader::open(path)?.with_guessed_format()?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat(format!(
            "{}: not PNG, PGM or a dump",
            path.display()
        )));
    }
    let grid = |w: u32, h: u32| Grid::new(w as usize, h as usize, pitch, pitch);
    match reader.decode()? {
        DynamicImage::ImageLuma8(buf) => RealImage::new(
            grid(buf.width(), buf.height())?,
            buf.as_raw().iter().map(|&v| f64::from(v)).collect(),
        ),
        DynamicImage::ImageLuma16(buf) => RealImage::new(
            grid(buf.width(), buf.height())?,
            buf.as_raw().iter().map(|&v| f64::from(v)).collect(),
        ),
        other => Err(Error::GrayscaleRequired(format!(
            "{:?} in {}",
            other.color(),
            path.display()
        ))),
    }
}

/// Overlap weights of each target cell with the source cells along one axis,
/// normalized to sum to 1: `(first source index, weights)` per target index.
fn area_weights(source: usize, target: usize) -> Vec<(usize, Vec<f64>)> {
    let scale = source as f64 / target as f64;
    (0..target)
        .map(|j| {
            let lo = j as f64 * scale;
            let hi = (j + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(source);
            let weights = (first..last)
                .map(|k| (hi.min((k + 1) as f64) - lo.max(k as f64)).max(0.0) / scale)
                .collect();
            (first, weights)
        })
        .collect()
}

/// Area-weighted resampling to `target_width x target_height`. The pitch
/// grows by `source / target` per axis so the physical extent is unchanged.
pub fn downsample(img: &RealImage, target_width: usize, target_height: usize) -> Result<RealImage> {
    let (w, h) = (img.width(), img.height());
    if target_width == 0 || target_height == 0 {
        return Err(Error::InvalidParameter(
            "downsample target must be non-empty".into(),
        ));
    }
    if target_width > w || target_height > h {
        return Err(Error::InvalidParameter(format!(
            "cannot downsample {w}x{h} to larger {target_width}x{target_height}"
        )));
    }
    let grid = Grid::new(
        target_width,
        target_height,
        img.pitch_x() * w as f64 / target_width as f64,
        img.pitch_y() * h as f64 / target_height as f64,
    )?;
    if (target_width, target_height) == (w, h) {
        return RealImage::new(grid, img.values().to_vec());
    }

    let wx = area_weights(w, target_width);
    let wy = area_weights(h, target_height);
    let src = img.values();

    let mut rows = vec![0.0; h * target_width];
    for n in 0..h {
        let row = &src[n * w..(n + 1) * w];
        for (j, (first, weights)) in wx.iter().enumerate() {
            rows[n * target_width + j] =
                weights.iter().zip(&row[*first..]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; target_width * target_height];
    for (i, (first, weights)) in wy.iter().enumerate() {
        let dst = &mut out[i * target_width..(i + 1) * target_width];
        for (k, weight) in weights.iter().enumerate() {
            let src_row = &rows[(first + k) * target_width..(first + k + 1) * target_width];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += weight * s;
            }
        }
    }
    RealImage::new(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use image::{GrayImage, ImageBuffer, Luma, RgbImage};
    use proptest::prelude::*;

    #[test]
    fn eight_bit_levels_kept() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        GrayImage::from_raw(3, 1, vec![0, 17, 255])
            .unwrap()
            .save(&path)
            .unwrap();
        let img = read_grayscale(&path, 2.5e-6).unwrap();
        assert_eq!(img.values(), &[0.0, 17.0, 255.0]);
        assert_eq!(img.pitch_x(), 2.5e-6);
    }

    #[test]
    fn sixteen_bit_and_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let png = dir.path().join("b.png");
        ImageBuffer::<Luma<u16>, _>::from_raw(2, 1, vec![1000u16, 65535])
            .unwrap()
            .save(&png)
            .unwrap();
        assert_eq!(
            read_grayscale(&png, 1e-6).unwrap().values(),
            &[1000.0, 65535.0]
        );

        let pgm = dir.path().join("c.pgm");
        std::fs::write(&pgm, b"P5\n2 2\n255\n\x01\x02\x03\x04").unwrap();
        let img = read_grayscale(&pgm, 1e-6).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rgb_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        RgbImage::new(2, 2).save(&path).unwrap();
        let err = read_grayscale(&path, 1e-6).unwrap_err();
        assert!(matches!(err, Error::GrayscaleRequired(_)));
        assert!(err.to_string().contains("grayscale required"));
    }

    #[test]
    fn unknown_bytes_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        std::fs::write(&path, b"hello world").unwrap();
        assert!(matches!(
            read_grayscale(&path, 1e-6),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn dumps_are_sniffed() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(3, 2, 1.5e-6, 2e-6).unwrap();
        let img = RealImage::new(grid, vec![0.1, 0.2, 0.3, 1e300, 5.0, 0.0]).unwrap();
        let path = dir.path().join("frame.rimg");
        dump::save_image(&path, &img).unwrap();
        assert_eq!(read_grayscale(&path, 9.0).unwrap(), img);

        let field = crate::field::ComplexField::filled(grid, num_complex::Complex64::new(3.0, 4.0))
            .unwrap();
        let path = dir.path().join("field.cfld");
        dump::save_field(&path, &field).unwrap();
        let intensity = read_grayscale(&path, 9.0).unwrap();
        assert!(intensity.values().iter().all(|&v| (v - 25.0).abs() < 1e-12));

        let path = dir.path().join("short.rimg");
        std::fs::write(&path, b"RIMG\x01").unwrap();
        assert!(matches!(
            read_grayscale(&path, 1e-6),
            Err(Error::Truncated(_))
        ));
    }

    #[test]
    fn table_one_geometry() {
        let grid = Grid::new(3264, 2448, 1.47e-6, 1.47e-6).unwrap();
        let img = RealImage::filled(grid, 100.0).unwrap();
        let out = downsample(&img, 1920, 1440).unwrap();
        assert_eq!((out.width(), out.height()), (1920, 1440));
        assert_relative_eq!(
            out.pitch_x(),
            1.47e-6 * 3264.0 / 1920.0,
            max_relative = 1e-15
        );
        assert!((out.pitch_x() - 2.499e-6).abs() < 1e-12);
        assert!((out.pitch_y() - 2.50e-6).abs() < 0.01e-6);
    }

    #[test]
    fn identity_when_same_size() {
        let grid = Grid::new(3, 2, 1e-6, 1e-6).unwrap();
        let img = RealImage::new(grid, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(downsample(&img, 3, 2).unwrap(), img);
        assert!(downsample(&img, 4, 2).is_err());
        assert!(downsample(&img, 0, 2).is_err());
    }

    #[test]
    fn fractional_cells_are_weighted() {
        // 3 -> 2: each output cell covers 1.5 inputs.
        let grid = Grid::new(3, 1, 1e-6, 1e-6).unwrap();
        let img = RealImage::new(grid, vec![0.0, 3.0, 6.0]).unwrap();
        let out = downsample(&img, 2, 1).unwrap();
        assert_relative_eq!(
            out.values()[0],
            (0.0 + 0.5 * 3.0) / 1.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            out.values()[1],
            (0.5 * 3.0 + 6.0) / 1.5,
            max_relative = 1e-15
        );
    }

    proptest! {
        #[test]
        fn mean_and_extent_preserved(
            w in 2usize..40, h in 2usize..40, tw_frac in 0.05f64..1.0, th_frac in 0.05f64..1.0, seed in any::<u64>()
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let grid = Grid::new(w, h, 1.47e-6, 1.3e-6).unwrap();
            let img = RealImage::new(grid, (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect()).unwrap();
            let tw = ((w as f64 * tw_frac).ceil() as usize).clamp(1, w);
            let th = ((h as f64 * th_frac).ceil() as usize).clamp(1, h);
            let out = downsample(&img, tw, th).unwrap();
            prop_assert!((out.mean() - img.mean()).abs() <= 1e-9 * img.mean());
            prop_assert!((out.pitch_x() * tw as f64 - img.pitch_x() * w as f64).abs() <= 1e-18 + img.pitch_x());
            prop_assert!((out.pitch_y() * th as f64 - img.pitch_y() * h as f64).abs() <= 1e-18 + img.pitch_y());
        }
    }
}
