use ncut_lesion::raster::{load_grayscale, luma_bt601, save_image, BinaryMask, GrayImage, Raster, RgbImage};
use ncut_lesion::Error;
use proptest::prelude::*;

#[test]
fn gray_png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.png");
    let img = GrayImage::from_fn(13, 7, |x, y| (x * 19 + y * 7) as u8).unwrap();
    save_image(&img, &path).unwrap();
    assert_eq!(load_grayscale(&path).unwrap(), img);
}

#[test]
fn mask_is_stored_as_0_255() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.png");
    let mask = BinaryMask::from_bits(3, 2, &[0, 1, 1, 0, 0, 1]).unwrap();
    save_image(&mask, &path).unwrap();
    let back = load_grayscale(&path).unwrap();
    assert_eq!(back.data(), &[0, 255, 255, 0, 0, 255]);
    assert_eq!(BinaryMask::from_nonzero(&back), mask);
}

#[test]
fn binary_pgm_decodes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.pgm");
    let mut bytes = b"P5\n# comment\n4 2\n255\n".to_vec();
    bytes.extend([0, 10, 20, 30, 200, 210, 220, 255]);
    std::fs::write(&path, bytes).unwrap();
    let img = load_grayscale(&path).unwrap();
    assert_eq!((img.width(), img.height()), (4, 2));
    assert_eq!(img.data(), &[0, 10, 20, 30, 200, 210, 220, 255]);
}

#[test]
fn rgb_png_reduces_to_luma() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.png");
    let px = [[255, 0, 0], [0, 255, 0], [0, 0, 255], [10, 20, 30]];
    save_image(&RgbImage::new(4, 1, px.to_vec()).unwrap(), &path).unwrap();
    let img = load_grayscale(&path).unwrap();
    // 0.299 * 255 = 76.245, 0.587 * 255 = 149.685, 0.114 * 255 = 29.07
    assert_eq!(img.data(), &[76, 150, 29, 18]);
}

#[test]
fn load_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_grayscale(dir.path().join("none.png")), Err(Error::FileNotFound(_))));

    let txt = dir.path().join("x.png");
    std::fs::write(&txt, b"definitely not an image").unwrap();
    assert!(matches!(load_grayscale(&txt), Err(Error::UnsupportedFormat { .. })));

    let cut = dir.path().join("cut.png");
    let img = GrayImage::filled(32, 32, 9).unwrap();
    save_image(&img, &cut).unwrap();
    let bytes = std::fs::read(&cut).unwrap();
    std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_grayscale(&cut), Err(Error::CorruptImage { .. })));
}

#[test]
fn sixteen_bit_png_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wide.png");
    let bytes: Vec<u8> = (0..8u16).flat_map(|v| (v * 1000).to_be_bytes()).collect();
    image::save_buffer(&path, &bytes, 4, 2, image::ExtendedColorType::L16).unwrap();
    assert!(matches!(load_grayscale(&path), Err(Error::UnsupportedFormat { .. })));
}

proptest! {
    #[test]
    fn luma_stays_between_channel_extremes(r: u8, g: u8, b: u8) {
        let y = luma_bt601(r, g, b);
        prop_assert!(y >= r.min(g).min(b) && y <= r.max(g).max(b));
        prop_assert_eq!(luma_bt601(r, r, r), r);
    }
}
