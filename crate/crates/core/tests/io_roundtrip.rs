use proptest::prelude::*;

use scalar_qve::config::RasterScale;
use scalar_qve::export::{
    decode_raster, encode_raster, export_raster, parse_spectrum_csv, spectrum_csv,
};
use scalar_qve::field::{EllipticPulse, FieldConfig};
use scalar_qve::integrator::SolverSettings;
use scalar_qve::sweep::{compute_spectrum, AxisRange, MomentumGrid, Spectrum, SweepOptions};

fn small_spectrum() -> Spectrum {
    let field = FieldConfig::single(EllipticPulse::new(0.4, 0.5, 0.5, 6.0)).unwrap();
    let grid = MomentumGrid::new(
        AxisRange::new(-0.8, 0.6, 7).unwrap(),
        AxisRange::centered(0.5, 5).unwrap(),
        0.1,
    )
    .unwrap();
    compute_spectrum(
        &field,
        &grid,
        &SolverSettings::production(),
        &SweepOptions::default(),
    )
    .unwrap()
}

#[test]
fn computed_spectrum_survives_csv_and_raster() {
    let s = small_spectrum();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    std::fs::write(&path, spectrum_csv(&s)).unwrap();
    let back = parse_spectrum_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.values, s.values);
    assert_eq!(back.grid, s.grid);
    assert_eq!(back.metadata.config_hash, s.metadata.config_hash);
    assert_eq!(back.metadata.settings, s.metadata.settings);
    assert_eq!(back.metadata.final_potential, s.metadata.final_potential);

    let bin = decode_raster(&encode_raster(&s)).unwrap();
    assert_eq!(bin.values, s.values);
}

#[test]
fn png_export_is_reproducible() {
    let s = small_spectrum();
    let dir = tempfile::tempdir().unwrap();
    for scale in [RasterScale::Linear, RasterScale::Log] {
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        export_raster(&s, &a, scale).unwrap();
        export_raster(&s, &b, scale).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let img = image::open(&a).unwrap();
        assert_eq!((img.width(), img.height()), (7, 5));
        assert!(dir.path().join("a.png.json").exists());
    }
}

#[test]
fn export_to_missing_directory_fails() {
    let s = small_spectrum();
    let dir = tempfile::tempdir().unwrap();
    let err = export_raster(&s, &dir.path().join("no/such/dir.png"), RasterScale::Log).unwrap_err();
    assert!(matches!(err, scalar_qve::Error::Io { .. }));
}

proptest! {
    #[test]
    fn raster_round_trip(
        nx in 2usize..9,
        ny in 2usize..9,
        lo in -3.0f64..0.0,
        width in 0.1f64..4.0,
        seed in any::<u64>(),
    ) {
        let grid = MomentumGrid::new(
            AxisRange::new(lo, lo + width, nx).unwrap(),
            AxisRange::new(-width, width, ny).unwrap(),
            0.0,
        ).unwrap();
        let values = (0..nx * ny)
            .map(|i| f64::from_bits(seed.rotate_left(i as u32) >> 2))
            .collect();
        let s = Spectrum::from_values(grid, values).unwrap();
        let bytes = encode_raster(&s);
        let back = decode_raster(&bytes).unwrap();
        prop_assert_eq!(encode_raster(&back), bytes);
        prop_assert_eq!(back.grid, s.grid);
    }
}
