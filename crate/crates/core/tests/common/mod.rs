#![allow(dead_code)]

use std::path::PathBuf;

use calibcodec::codec::{encode_frame, FrameCodec};
use calibcodec::latent_source::generate;
use calibcodec::{Dims, Epsilon, Profile, SigmaGrid, SkipConfig, SymbolAlphabet};

pub struct GoldenCase {
    pub name: &'static str,
    pub seed: u64,
    pub epsilon: Option<f32>,
    pub min_coded_level: u8,
}

pub const CASES: [GoldenCase; 3] = [
    GoldenCase {
        name: "seed1",
        seed: 1,
        epsilon: Some(1e-3),
        min_coded_level: 0,
    },
    GoldenCase {
        name: "seed2",
        seed: 2,
        epsilon: Some(1e-2),
        min_coded_level: 6,
    },
    GoldenCase {
        name: "seed3",
        seed: 3,
        epsilon: None,
        min_coded_level: 0,
    },
];

pub fn golden_dims() -> Dims {
    Dims::new(4, 12, 20).unwrap()
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn default_codec() -> FrameCodec {
    FrameCodec::new(SigmaGrid::default(), SymbolAlphabet::default()).unwrap()
}

/// Container bytes and the LTNT checksum of the source frame.
pub fn golden_output(case: &GoldenCase, codec: &FrameCodec) -> (Vec<u8>, u32) {
    let frame = generate(case.seed, golden_dims(), &Profile::default()).unwrap();
    let eps = case.epsilon.map(|e| Epsilon::new(e).unwrap());
    let skip = SkipConfig::from_level(case.min_coded_level, codec.grid()).unwrap();
    let coded = encode_frame(&frame, codec, eps, skip).unwrap();
    (coded.to_bytes(), frame.checksum())
}

pub fn tables_bytes(codec: &FrameCodec) -> Vec<u8> {
    let mut out = Vec::new();
    codec.tables().write_cdft(&mut out).unwrap();
    out
}

/// `name crc32-hex` lines for every golden artifact.
pub fn manifest(codec: &FrameCodec) -> String {
    let mut s = format!("tables.cdft {:08x}\n", crc32fast::hash(&tables_bytes(codec)));
    s += &format!("cdf-checksum {:08x}\n", codec.tables().checksum());
    for case in &CASES {
        let (bytes, gen) = golden_output(case, codec);
        s += &format!("{}.cpnc {:08x}\n", case.name, crc32fast::hash(&bytes));
        s += &format!("{}.ltnt {:08x}\n", case.name, gen);
    }
    s
}

/// Compare freshly computed artifacts against the committed files. With
/// `CALIBCODEC_BLESS=1` the files are rewritten instead.
pub fn check_golden() -> Result<(), String> {
    let codec = default_codec();
    let dir = golden_dir();
    let mut files: Vec<(String, Vec<u8>)> = vec![("tables.cdft".into(), tables_bytes(&codec))];
    for case in &CASES {
        files.push((format!("{}.cpnc", case.name), golden_output(case, &codec).0));
    }
    files.push(("MANIFEST".into(), manifest(&codec).into_bytes()));
    if std::env::var_os("CALIBCODEC_BLESS").is_some() {
        for (name, bytes) in &files {
            std::fs::write(dir.join(name), bytes).map_err(|e| e.to_string())?;
        }
        return Ok(());
    }
    for (name, bytes) in &files {
        let want = std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        if &want != bytes {
            return Err(format!("{name} differs from the committed golden file"));
        }
    }
    Ok(())
}
