//! Flat binary model files.
//!
//! All integers are little-endian `u32` unless noted, floats are
//! little-endian `f64`. Field order:
//!
//! ```text
//! magic            8 bytes  "GZMSVM\0\0"
//! version          u32      (currently 1)
//! n_features       u32
//! feature names    n_features x (u32 byte length, UTF-8 bytes)
//! kernel           u8       0 = linear, 1 = rbf
//! gamma            f64      (0 for linear)
//! C, tol           f64, f64
//! max_iter         u64
//! seed             u64
//! perm repeats     u32
//! means, stds      n_features f64 each
//! n_pairs          u32      (always 3)
//! per pair         u8 positive class, u8 negative class, f64 bias,
//!                  u32 n_sv, n_sv x (f64 coef, n_features f64)
//! n_training       u32
//! per row          u8 class, n_features f64
//! end marker       4 bytes  "END\0"
//! ```
//!
//! Class codes are 0 = expert, 1 = intermediate, 2 = novice.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::multiclass::{MulticlassModel, PairModel};
use super::smo::BinarySvmModel;
use super::standardize::Standardizer;
use super::{Kernel, SvmConfig};
use crate::error::{Error, Result};
use crate::ingest::ExpertiseClass;

pub const MODEL_MAGIC: [u8; 8] = *b"GZMSVM\0\0";
pub const MODEL_VERSION: u32 = 1;
const END_MARKER: [u8; 4] = *b"END\0";
const MAX_COUNT: u32 = 1 << 24;

fn write_f64s<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_f64::<LE>(*x)?;
    }
    Ok(())
}

fn len_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::SchemaMismatch(format!("count {n} too large for model file")))
}

pub fn save_model<W: Write>(model: &MulticlassModel, mut w: W) -> Result<()> {
    let d = model.schema.len();
    w.write_all(&MODEL_MAGIC)?;
    w.write_u32::<LE>(MODEL_VERSION)?;
    w.write_u32::<LE>(len_u32(d)?)?;
    for name in &model.schema {
        w.write_u32::<LE>(len_u32(name.len())?)?;
        w.write_all(name.as_bytes())?;
    }
    let cfg = &model.config;
    match cfg.kernel {
        Kernel::Linear => {
            w.write_u8(0)?;
            w.write_f64::<LE>(0.0)?;
        }
        Kernel::Rbf { gamma } => {
            w.write_u8(1)?;
            w.write_f64::<LE>(gamma)?;
        }
    }
    w.write_f64::<LE>(cfg.c)?;
    w.write_f64::<LE>(cfg.tol)?;
    w.write_u64::<LE>(cfg.max_iter as u64)?;
    w.write_u64::<LE>(cfg.seed)?;
    w.write_u32::<LE>(len_u32(cfg.permutation_repeats)?)?;
    write_f64s(&mut w, &model.standardizer.mean)?;
    write_f64s(&mut w, &model.standardizer.std)?;
    w.write_u32::<LE>(len_u32(model.pairs.len())?)?;
    for p in &model.pairs {
        w.write_u8(p.positive.index() as u8)?;
        w.write_u8(p.negative.index() as u8)?;
        w.write_f64::<LE>(p.model.bias)?;
        w.write_u32::<LE>(len_u32(p.model.coef.len())?)?;
        for (c, sv) in p.model.coef.iter().zip(&p.model.support_vectors) {
            w.write_f64::<LE>(*c)?;
            write_f64s(&mut w, sv)?;
        }
    }
    w.write_u32::<LE>(len_u32(model.training.len())?)?;
    for (c, z) in &model.training {
        w.write_u8(c.index() as u8)?;
        write_f64s(&mut w, z)?;
    }
    w.write_all(&END_MARKER)?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::SchemaMismatch(format!("model file: {}", msg.into()))
}

fn read_count<R: Read>(r: &mut R) -> Result<usize> {
    let n = r.read_u32::<LE>()?;
    if n > MAX_COUNT {
        return Err(bad(format!("implausible count {n}")));
    }
    Ok(n as usize)
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| Ok(r.read_f64::<LE>()?)).collect()
}

fn read_class<R: Read>(r: &mut R) -> Result<ExpertiseClass> {
    let code = r.read_u8()?;
    ExpertiseClass::from_index(code as usize).ok_or_else(|| bad(format!("unknown class code {code}")))
}

pub fn load_model<R: Read>(mut r: R) -> Result<MulticlassModel> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MODEL_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.read_u32::<LE>()?;
    if version != MODEL_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let d = read_count(&mut r)?;
    let schema = (0..d)
        .map(|_| {
            let len = read_count(&mut r)?;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            String::from_utf8(buf).map_err(|_| bad("feature name is not UTF-8"))
        })
        .collect::<Result<Vec<_>>>()?;
    let kernel = match r.read_u8()? {
        0 => {
            r.read_f64::<LE>()?;
            Kernel::Linear
        }
        1 => Kernel::Rbf { gamma: r.read_f64::<LE>()? },
        k => return Err(bad(format!("unknown kernel code {k}"))),
    };
    let c = r.read_f64::<LE>()?;
    let tol = r.read_f64::<LE>()?;
    let max_iter = r.read_u64::<LE>()? as usize;
    let seed = r.read_u64::<LE>()?;
    let permutation_repeats = read_count(&mut r)?;
    let config = SvmConfig {
        kernel,
        c,
        tol,
        max_iter,
        seed,
        permutation_repeats,
    };
    let standardizer = Standardizer {
        mean: read_f64s(&mut r, d)?,
        std: read_f64s(&mut r, d)?,
    };
    let n_pairs = read_count(&mut r)?;
    if n_pairs != 3 {
        return Err(bad(format!("expected 3 pairwise models, found {n_pairs}")));
    }
    let mut pairs = Vec::with_capacity(3);
    for _ in 0..n_pairs {
        let positive = read_class(&mut r)?;
        let negative = read_class(&mut r)?;
        let bias = r.read_f64::<LE>()?;
        let n_sv = read_count(&mut r)?;
        let mut coef = Vec::with_capacity(n_sv);
        let mut support_vectors = Vec::with_capacity(n_sv);
        for _ in 0..n_sv {
            coef.push(r.read_f64::<LE>()?);
            support_vectors.push(read_f64s(&mut r, d)?);
        }
        pairs.push(PairModel {
            positive,
            negative,
            model: BinarySvmModel {
                kernel,
                c,
                bias,
                coef,
                support_vectors,
            },
        });
    }
    let n_train = read_count(&mut r)?;
    let training = (0..n_train)
        .map(|_| Ok((read_class(&mut r)?, read_f64s(&mut r, d)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut end = [0u8; 4];
    r.read_exact(&mut end)?;
    if end != END_MARKER {
        return Err(bad("missing end marker"));
    }
    Ok(MulticlassModel {
        schema,
        standardizer,
        pairs,
        config,
        training,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::svm::train_multiclass;

    fn model(kernel: Kernel) -> MulticlassModel {
        let mut m = FeatureMatrix::with_full_schema();
        m.columns = vec!["a".into(), "b".into()];
        for (k, c) in ExpertiseClass::ALL.into_iter().enumerate() {
            for i in 0..3 {
                m.ids.push(format!("{c}{i}"));
                m.labels.push(Some(c));
                m.rows.push(vec![k as f64 * 3.0 + i as f64 * 0.1, (k * k) as f64 - i as f64 * 0.2]);
                m.masks.push(vec![true, true]);
            }
        }
        let cfg = SvmConfig { kernel, seed: 9, ..Default::default() };
        train_multiclass(&m, &cfg).unwrap()
    }

    #[test]
    fn round_trip() {
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.3 }] {
            let m = model(kernel);
            let mut buf = Vec::new();
            save_model(&m, &mut buf).unwrap();
            assert_eq!(&buf[..8], &MODEL_MAGIC);
            assert_eq!(load_model(buf.as_slice()).unwrap(), m);
        }
    }

    #[test]
    fn rejects_corrupt_files() {
        let m = model(Kernel::Linear);
        let mut buf = Vec::new();
        save_model(&m, &mut buf).unwrap();

        let mut wrong_magic = buf.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(load_model(wrong_magic.as_slice()), Err(Error::SchemaMismatch(_))));

        let mut wrong_version = buf.clone();
        wrong_version[8] = 2;
        assert!(matches!(load_model(wrong_version.as_slice()), Err(Error::SchemaMismatch(_))));

        let truncated = &buf[..buf.len() - 6];
        assert!(load_model(truncated).is_err());
    }
}
