//! On-disk formats.
//!
//! PA coefficient file (TOML):
//!
//! ```toml
//! schema_version = 1
//! k_terms = 2
//! l_taps = 2
//! # row-major b[k][l], each entry [re, im]
//! coeffs = [[1.0, 0.0], [0.05, -0.03], [-0.02, 0.008], [0.002, -0.001]]
//! ```
//!
//! Waveform capture (little-endian):
//!
//! | offset | type   | field                      |
//! |--------|--------|----------------------------|
//! | 0      | [u8;4] | magic `FDWF`               |
//! | 4      | u32    | version (1)                |
//! | 8      | f64    | sample rate, Hz            |
//! | 16     | u64    | number of complex samples  |
//! | 24     | f64 x2n| interleaved re, im         |

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::impairments::HammersteinModel;
use crate::signal::Waveform;
use crate::{FdError, Result, C64};

pub const PA_SCHEMA_VERSION: u32 = 1;
pub const WAVEFORM_MAGIC: [u8; 4] = *b"FDWF";
pub const WAVEFORM_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaFile {
    schema_version: u32,
    k_terms: usize,
    l_taps: usize,
    coeffs: Vec<[f64; 2]>,
}

pub fn pa_model_to_toml(model: &HammersteinModel) -> String {
    let file = PaFile {
        schema_version: PA_SCHEMA_VERSION,
        k_terms: model.k_terms(),
        l_taps: model.l_taps(),
        coeffs: model.coeffs().iter().map(|c| [c.re, c.im]).collect(),
    };
    toml::to_string(&file).expect("PA file serializes")
}

pub fn pa_model_from_toml(text: &str) -> Result<HammersteinModel> {
    let file: PaFile = toml::from_str(text).map_err(|e| FdError::Parse(e.to_string()))?;
    if file.schema_version != PA_SCHEMA_VERSION {
        return Err(FdError::Parse(format!(
            "unsupported PA schema_version {} (expected {PA_SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let coeffs = file.coeffs.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    HammersteinModel::new(file.k_terms, file.l_taps, coeffs)
}

pub fn read_pa_model(path: &Path) -> Result<HammersteinModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FdError::Io(format!("{}: {e}", path.display())))?;
    pa_model_from_toml(&text).map_err(|e| match e {
        FdError::Parse(m) => FdError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_pa_model(path: &Path, model: &HammersteinModel) -> Result<()> {
    std::fs::write(path, pa_model_to_toml(model))
        .map_err(|e| FdError::Io(format!("{}: {e}", path.display())))
}

pub fn write_waveform<W: Write>(mut w: W, wave: &Waveform) -> Result<()> {
    w.write_all(&WAVEFORM_MAGIC)?;
    w.write_all(&WAVEFORM_VERSION.to_le_bytes())?;
    w.write_all(&wave.sample_rate_hz.to_le_bytes())?;
    w.write_all(&(wave.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * wave.len());
    for s in &wave.samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_waveform<R: Read>(mut r: R) -> Result<Waveform> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head)
        .map_err(|_| FdError::Parse("waveform header truncated".into()))?;
    if head[..4] != WAVEFORM_MAGIC {
        return Err(FdError::Parse("not a waveform capture (bad magic)".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != WAVEFORM_VERSION {
        return Err(FdError::Parse(format!("unsupported waveform version {version}")));
    }
    let rate = f64::from_le_bytes(head[8..16].try_into().unwrap());
    let n = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 16 * n {
        return Err(FdError::Parse(format!(
            "header announces {n} samples, body holds {} bytes",
            body.len()
        )));
    }
    let samples: Vec<C64> = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let wave = Waveform::new(samples, rate);
    if !wave.is_finite() || !(rate > 0.0) {
        return Err(FdError::Parse("waveform holds non-finite values".into()));
    }
    Ok(wave)
}

pub fn read_waveform_file(path: &Path) -> Result<Waveform> {
    let f = std::fs::File::open(path).map_err(|e| FdError::Io(format!("{}: {e}", path.display())))?;
    read_waveform(std::io::BufReader::new(f))
}

pub fn write_waveform_file(path: &Path, wave: &Waveform) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| FdError::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(f);
    write_waveform(&mut w, wave)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pa_round_trip() {
        let m = HammersteinModel::new(
            2,
            2,
            vec![
                C64::new(1.0, 0.0),
                C64::new(0.05, -0.03),
                C64::new(-0.02, 0.008),
                C64::new(1.0 / 3.0, -1e-17),
            ],
        )
        .unwrap();
        let back = pa_model_from_toml(&pa_model_to_toml(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn pa_rejects_unknown_key_and_shape() {
        let e = pa_model_from_toml("schema_version = 1\nk_terms = 1\nl_taps = 1\ncoeffs = [[1.0, 0.0]]\nextra = 3\n")
            .unwrap_err();
        assert!(e.to_string().contains("extra"), "{e}");
        assert!(pa_model_from_toml("schema_version = 1\nk_terms = 2\nl_taps = 1\ncoeffs = [[1.0, 0.0]]\n").is_err());
        assert!(pa_model_from_toml("schema_version = 9\nk_terms = 1\nl_taps = 1\ncoeffs = [[1.0, 0.0]]\n").is_err());
    }

    #[test]
    fn waveform_round_trip_is_bit_exact() {
        let w = Waveform::new(
            vec![C64::new(0.1, -0.2), C64::new(f64::MIN_POSITIVE, 1e300), C64::new(-0.0, 3.0)],
            3.84e6,
        );
        let mut bytes = Vec::new();
        write_waveform(&mut bytes, &w).unwrap();
        assert_eq!(bytes.len(), 24 + 48);
        assert_eq!(&bytes[..4], b"FDWF");
        let back = read_waveform(&bytes[..]).unwrap();
        assert_eq!(back.sample_rate_hz, w.sample_rate_hz);
        for (a, b) in back.samples.iter().zip(&w.samples) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn waveform_rejects_truncation() {
        let w = Waveform::new(vec![C64::new(1.0, 1.0); 4], 1.0);
        let mut bytes = Vec::new();
        write_waveform(&mut bytes, &w).unwrap();
        assert!(read_waveform(&bytes[..bytes.len() - 1]).is_err());
        assert!(read_waveform(&bytes[..10]).is_err());
        bytes[0] = b'X';
        assert!(read_waveform(&bytes[..]).is_err());
    }
}
