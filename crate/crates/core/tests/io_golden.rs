use std::path::PathBuf;

use landmark_core::io::{self, CloudEncoding, CloudFormat};
use landmark_core::{Point3, PointCloud};

fn fixture(name: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn expected() -> PointCloud {
    let rows = [
        [0.0, 0.0, 0.0],
        [0.5, -0.25, 1.125],
        [1.5, 0.75, -2.0],
        [0.1, 0.2, 0.3],
        [-0.007, 0.0625, 3.5],
        [0.7123, -0.0421, 0.8834],
    ];
    // stored as 4-byte floats
    PointCloud::new(
        rows.iter()
            .map(|r| Point3::new(r[0] as f32 as f64, r[1] as f32 as f64, r[2] as f32 as f64))
            .collect(),
    )
    .unwrap()
}

fn read(name: &str) -> io::LoadedCloud {
    let format = CloudFormat::from_path(name.as_ref()).unwrap();
    io::read_point_cloud(&fixture(name), format).unwrap()
}

#[test]
fn canonical_files_rewrite_byte_for_byte() {
    for (name, encoding) in [
        ("canonical_ascii.pcd", CloudEncoding::PcdAscii),
        ("canonical_binary.pcd", CloudEncoding::PcdBinary),
        ("canonical.ply", CloudEncoding::PlyAscii),
    ] {
        let loaded = read(name);
        assert_eq!(loaded.cloud, expected(), "{name}");
        assert_eq!(io::write_point_cloud(&loaded.cloud, encoding), fixture(name), "{name}");
    }
}

#[test]
fn foreign_layouts_read_the_same_points() {
    let sensor = read("sensor_crlf.pcd");
    assert_eq!(sensor.cloud, expected());
    assert_eq!(sensor.dropped_non_finite, 1);
    assert_eq!(read("interleaved_binary.pcd").cloud, expected());
    // doubles in the file, but the values are the same decimal literals
    let mesh = read("mesh.ply").cloud;
    assert_eq!(mesh.len(), 6);
    for (a, b) in mesh.iter().zip(expected().iter()) {
        assert!((a - b).norm() < 1e-7);
    }
}

#[test]
fn every_cloud_survives_every_encoding() {
    for name in [
        "canonical_ascii.pcd",
        "canonical_binary.pcd",
        "canonical.ply",
        "sensor_crlf.pcd",
        "interleaved_binary.pcd",
        "mesh.ply",
    ] {
        let cloud = read(name).cloud;
        for (encoding, format) in [
            (CloudEncoding::PcdAscii, CloudFormat::Pcd),
            (CloudEncoding::PcdBinary, CloudFormat::Pcd),
            (CloudEncoding::PlyAscii, CloudFormat::Ply),
        ] {
            let again = io::read_point_cloud(&io::write_point_cloud(&cloud, encoding), format).unwrap();
            assert_eq!(again.cloud, cloud, "{name} via {encoding:?}");
            assert_eq!(again.dropped_non_finite, 0);
        }
    }
}

#[test]
fn landmark_file_round_trips_exactly() {
    let bytes = fixture("landmark.json");
    let landmark = io::load_landmark(&bytes).unwrap();
    assert_eq!(landmark.name(), "corner");
    assert_eq!(landmark.cloud().len(), 4);
    assert_eq!(landmark.cloud().points()[3].x, 0.512345678901);
    assert_eq!(landmark.metadata().created_at, "2024-05-17T09:30:00Z");
    assert_eq!(io::save_landmark(&landmark), bytes);
    assert_eq!(io::load_landmark(&io::save_landmark(&landmark)).unwrap(), landmark);
}

#[test]
fn landmark_file_rejections() {
    let text = String::from_utf8(fixture("landmark.json")).unwrap();
    let cases = [
        (text.replace("\"schema_version\": 1", "\"schema_version\": 2"), "schema_version"),
        (text.replace("\"corner\"", "\"  \""), "name"),
        (text.replace("2024-05-17T09:30:00Z", "yesterday"), "created_at"),
        (text.replace("0.512345678901", "3.0"), "points[3]"),
        (text.replace("\"orientation\": [\n      0.8", "\"orientation\": [\n      0.9"), "orientation"),
        (text.replace("\"scene_id\"", "\"scene\""), "scene"),
    ];
    for (doc, needle) in cases {
        let err = io::load_landmark(doc.as_bytes()).unwrap_err().to_string();
        assert!(err.contains(needle), "{needle}: {err}");
    }
}
