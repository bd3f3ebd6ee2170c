use std::io::Cursor;

use holo_core::dump;
use holo_core::field::{Grid, RealImage};
use holo_core::ingest::{
    open_source, DirectorySource, FrameSource, NewestFrame, RawStreamSource, SourceConfig,
    SourceKind, SyntheticSource,
};
use holo_core::sim::ObjectSpec;
use holo_core::test_support::{optics, PITCH, Z0};
use image::{GrayImage, Luma};

fn write_png(dir: &std::path::Path, name: &str, value: u8) {
    GrayImage::from_pixel(8, 6, Luma([value]))
        .save(dir.join(name))
        .unwrap();
}

fn first_pixel(source: &mut dyn FrameSource) -> Option<f64> {
    source.next_frame().unwrap().map(|f| f.image.get(0, 0))
}

#[test]
fn directory_is_read_in_file_name_order() {
    let dir = tempfile::tempdir().unwrap();
    write_png(dir.path(), "b.png", 20);
    write_png(dir.path(), "a.png", 10);
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let mut source = DirectorySource::new(dir.path(), PITCH, optics(), false, None).unwrap();
    assert_eq!(first_pixel(&mut source), Some(10.0));
    assert_eq!(first_pixel(&mut source), Some(20.0));
    assert_eq!(first_pixel(&mut source), None);
}

#[test]
fn looping_directory_wraps() {
    let dir = tempfile::tempdir().unwrap();
    write_png(dir.path(), "a.png", 10);
    write_png(dir.path(), "b.png", 20);
    let mut source = DirectorySource::new(dir.path(), PITCH, optics(), true, None).unwrap();
    let seen: Vec<_> = (0..5).map(|_| first_pixel(&mut source).unwrap()).collect();
    assert_eq!(seen, vec![10.0, 20.0, 10.0, 20.0, 10.0]);
}

#[test]
fn directory_frames_carry_configured_pitch() {
    let dir = tempfile::tempdir().unwrap();
    write_png(dir.path(), "a.png", 10);
    let mut source =
        DirectorySource::new(dir.path(), 1.47e-6, optics(), false, Some([4, 3])).unwrap();
    let frame = source.next_frame().unwrap().unwrap();
    assert_eq!((frame.image.width(), frame.image.height()), (4, 3));
    assert!((frame.image.pitch_x() - 2.94e-6).abs() < 1e-18);
    assert_eq!(frame.object_distance, None);
}

#[test]
fn synthetic_source_knows_its_distance() {
    let grid = Grid::square(64, PITCH).unwrap();
    let mut source =
        SyntheticSource::new(ObjectSpec::opaque_disk(20e-6), Z0, grid, optics(), false).unwrap();
    assert_eq!(source.grid(), Some(grid));
    let frame = source.next_frame().unwrap().unwrap();
    assert_eq!(frame.object_distance, Some(Z0));
    assert!(source.next_frame().unwrap().is_none());
}

#[test]
fn synthetic_config_from_toml() {
    let text = r#"
        kind = "synthetic"
        distance = 0.011
        width = 64
        height = 48
        pitch = 2.5e-6
        loop = true
        noise = 0.01
        seed = 3

        [object]
        kind = "opaque_disk"
        radius = 2e-5
    "#;
    let config: SourceConfig = toml::from_str(text).unwrap();
    assert!(matches!(
        config.kind,
        SourceKind::Synthetic { width: 64, .. }
    ));
    let mut source = open_source(&config, optics()).unwrap();
    let a = source.next_frame().unwrap().unwrap();
    let b = source.next_frame().unwrap().unwrap();
    assert_eq!((a.image.width(), a.image.height()), (64, 48));
    // Noise is reseeded per frame.
    assert_ne!(a.image.values(), b.image.values());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut config = SourceConfig {
        kind: SourceKind::Synthetic {
            object: ObjectSpec::Empty,
            distance: Z0,
            width: 64,
            height: 64,
            noise: 0.0,
            seed: 0,
        },
        pitch: PITCH,
        downsample: Some([128, 64]),
        looping: false,
    };
    assert!(open_source(&config, optics()).is_err());
    config.downsample = None;
    config.pitch = 0.0;
    assert!(open_source(&config, optics()).is_err());
    let missing = SourceConfig {
        kind: SourceKind::DirectorySequence {
            path: "/definitely/not/here".into(),
        },
        pitch: PITCH,
        downsample: None,
        looping: false,
    };
    assert!(open_source(&missing, optics()).is_err());
}

fn image(value: f64) -> RealImage {
    RealImage::filled(Grid::new(5, 4, 3e-6, 3e-6).unwrap(), value).unwrap()
}

#[test]
fn raw_stream_reads_consecutive_records() {
    let mut bytes = Vec::new();
    for v in [1.0, 2.0, 3.0] {
        dump::write_image(&mut bytes, &image(v)).unwrap();
    }
    let mut source = RawStreamSource::new(Cursor::new(bytes), optics(), None);
    let values: Vec<_> = std::iter::from_fn(|| first_pixel(&mut source)).collect();
    assert_eq!(values, vec![1.0, 2.0, 3.0]);
}

#[test]
fn truncated_stream_errors_then_ends() {
    let mut bytes = Vec::new();
    dump::write_image(&mut bytes, &image(1.0)).unwrap();
    dump::write_image(&mut bytes, &image(2.0)).unwrap();
    bytes.truncate(bytes.len() - 3);
    let mut source = RawStreamSource::new(Cursor::new(bytes), optics(), None);
    assert_eq!(first_pixel(&mut source), Some(1.0));
    assert!(source.next_frame().is_err());
    assert!(source.next_frame().unwrap().is_none());
}

#[test]
fn newest_frame_drains_finite_source() {
    let grid = Grid::square(64, PITCH).unwrap();
    let inner = SyntheticSource::new(ObjectSpec::Empty, Z0, grid, optics(), false).unwrap();
    let mut newest = NewestFrame::spawn(Box::new(inner));
    assert_eq!(newest.grid(), Some(grid));
    assert!(newest.next_frame().unwrap().is_some());
    assert!(newest.next_frame().unwrap().is_none());
}

#[test]
fn newest_frame_skips_stale_frames() {
    let mut bytes = Vec::new();
    for v in 0..200 {
        dump::write_image(&mut bytes, &image(v as f64)).unwrap();
    }
    let mut newest = NewestFrame::spawn(Box::new(RawStreamSource::new(
        Cursor::new(bytes),
        optics(),
        None,
    )));
    std::thread::sleep(std::time::Duration::from_millis(100));
    let values: Vec<_> = std::iter::from_fn(|| first_pixel(&mut newest)).collect();
    assert_eq!(values, vec![199.0]);
    assert_eq!(newest.dropped(), 199);
}
