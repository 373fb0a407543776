//! Self-describing binary serialization for parameter vectors.
//!
//! Layout: magic `SKYP`, format version, entry count, then per entry a
//! length-prefixed name, the (rows, cols) shape, and the f64 payload in
//! little-endian order. Round-trips are bitwise.

use super::{NnError, ParamVector, Tensor};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SKYP";
pub const PARAM_FORMAT_VERSION: u32 = 1;

pub fn save_params(params: &ParamVector, path: &Path) -> Result<(), NnError> {
    let mut buf: Vec<u8> = Vec::with_capacity(16 + params.scalar_count() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&PARAM_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(t.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(t.cols as u32).to_le_bytes());
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ParamVector, NnError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8], NnError> {
        if *cursor + n > bytes.len() {
            return Err(NnError::Corrupt("unexpected end of file".into()));
        }
        let s = &bytes[*cursor..*cursor + n];
        *cursor += n;
        Ok(s)
    };
    if take(&mut cursor, 4)? != MAGIC {
        return Err(NnError::Corrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
    if version != PARAM_FORMAT_VERSION {
        return Err(NnError::Corrupt(format!("unsupported format version {version}")));
    }
    let count = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let mut params = ParamVector::new();
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut cursor, name_len)?.to_vec())
            .map_err(|_| NnError::Corrupt("tensor name is not utf-8".into()))?;
        let rows = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| NnError::Corrupt("shape overflow".into()))?;
        let raw = take(&mut cursor, n * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.push(name, Tensor { rows, cols, data });
    }
    if cursor != bytes.len() {
        return Err(NnError::Corrupt("trailing bytes".into()));
    }
    Ok(params)
}

/// Check a loaded parameter vector against the layout a spec expects.
pub fn validate_layout(params: &ParamVector, expected: &ParamVector) -> Result<(), NnError> {
    if !params.same_layout(expected) {
        return Err(NnError::ShapeMismatch(
            "loaded parameters do not match the expected network layout".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LstmSpec, MlpSpec, Squash};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = LstmSpec::new(4, 2, 6, 3).init_params(&mut rng);
        let dir = std::env::temp_dir().join("skypath_io_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.params");
        save_params(&params, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn wrong_spec_is_structural_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let params = MlpSpec::new(3, vec![4], 1, Squash::None).init_params(&mut rng);
        let other = MlpSpec::new(3, vec![5], 1, Squash::None).init_params(&mut rng);
        assert!(validate_layout(&params, &other).is_err());
    }

    #[test]
    fn corrupt_file_is_rejected() {
        let dir = std::env::temp_dir().join("skypath_io_corrupt");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.params");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_params(&path), Err(NnError::Corrupt(_))));
    }

    #[test]
    fn serialized_bytes_are_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let params = MlpSpec::new(2, vec![3], 1, Squash::Tanh).init_params(&mut rng);
        let dir = std::env::temp_dir().join("skypath_io_stable");
        std::fs::create_dir_all(&dir).unwrap();
        let a = dir.join("a.params");
        let b = dir.join("b.params");
        save_params(&params, &a).unwrap();
        save_params(&params, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
