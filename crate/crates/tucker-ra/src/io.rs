//! Binary tensor container.
//!
//! Tensor file layout, all little-endian:
//!   magic "TNSR" | format version u16 | order N u16 | N shape entries u64
//!   | prod(shape) IEEE-754 binary64 values in mode-0-fastest order.
//!
//! A model file is the same container extended: the core as a full TNSR
//! record, followed by one block per factor matrix, each block being
//! rows u64 | cols u64 | rows*cols binary64 values column-major.

use crate::error::{Result, TensorError};
use crate::hosvd::TuckerModel;
use crate::tensor::{DenseTensor, Matrix};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"TNSR";
pub const FORMAT_VERSION: u16 = 1;

fn write_tensor_record<W: Write>(w: &mut W, t: &DenseTensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let order = u16::try_from(t.order())
        .map_err(|_| TensorError::InvalidArgument("tensor order exceeds u16".into()))?;
    w.write_all(&order.to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &x in t.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| TensorError::BadFile("truncated file".into()))?;
    Ok(buf)
}

fn read_f64_block<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| TensorError::BadFile("truncated data block".into()))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn read_tensor_record<R: Read>(r: &mut R) -> Result<DenseTensor> {
    let magic = read_exact::<_, 4>(r)?;
    if &magic != MAGIC {
        return Err(TensorError::BadFile(format!(
            "bad magic bytes {magic:?}, expected \"TNSR\""
        )));
    }
    let version = u16::from_le_bytes(read_exact::<_, 2>(r)?);
    if version != FORMAT_VERSION {
        return Err(TensorError::BadFile(format!(
            "unsupported format version {version}"
        )));
    }
    let order = u16::from_le_bytes(read_exact::<_, 2>(r)?) as usize;
    if order == 0 {
        return Err(TensorError::BadFile("tensor order is zero".into()));
    }
    let mut shape = Vec::with_capacity(order);
    for _ in 0..order {
        let d = u64::from_le_bytes(read_exact::<_, 8>(r)?);
        shape.push(usize::try_from(d).map_err(|_| TensorError::BadFile("dimension overflow".into()))?);
    }
    let len: usize = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| {
        TensorError::BadFile("tensor size overflow".into())
    })?;
    let data = read_f64_block(r, len)?;
    DenseTensor::from_vec(shape, data)
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_tensor_record(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let t = read_tensor_record(&mut r)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(TensorError::BadFile("trailing bytes after tensor data".into()));
    }
    Ok(t)
}

pub fn write_model(path: &Path, model: &TuckerModel) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_tensor_record(&mut w, &model.core)?;
    for f in &model.factors {
        w.write_all(&(f.rows() as u64).to_le_bytes())?;
        w.write_all(&(f.cols() as u64).to_le_bytes())?;
        for &x in f.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<TuckerModel> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let core = read_tensor_record(&mut r)?;
    let mut factors = Vec::with_capacity(core.order());
    for _ in 0..core.order() {
        let rows = u64::from_le_bytes(read_exact::<_, 8>(&mut r)?) as usize;
        let cols = u64::from_le_bytes(read_exact::<_, 8>(&mut r)?) as usize;
        let data = read_f64_block(&mut r, rows * cols)?;
        factors.push(Matrix::from_col_major(rows, cols, data)?);
    }
    TuckerModel::new(core, factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hosvd::{t_hosvd_rank, Truncation};
    use crate::synth;

    #[test]
    fn tensor_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.tnsr");
        let t = synth::random_low_rank_tensor(&[4, 5, 3], &[2, 2, 2], 7).unwrap();
        write_tensor(&path, &t).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn expected_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.tnsr");
        let t = DenseTensor::zeros(vec![3, 2]).unwrap();
        write_tensor(&path, &t).unwrap();
        let size = std::fs::metadata(&path).unwrap().len();
        assert_eq!(size, 4 + 2 + 2 + 2 * 8 + 6 * 8);
    }

    #[test]
    fn corrupted_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tnsr");
        std::fs::write(&path, b"XXXX rest does not matter").unwrap();
        assert!(matches!(read_tensor(&path), Err(TensorError::BadFile(_))));
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.tnsr");
        let t = DenseTensor::zeros(vec![4, 4]).unwrap();
        write_tensor(&path, &t).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_tensor(&path).is_err());
    }

    #[test]
    fn model_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tmod");
        let a = synth::random_low_rank_tensor(&[5, 6, 4], &[2, 3, 2], 9).unwrap();
        let model = t_hosvd_rank(&a, &Truncation::new(vec![2, 3, 2]).unwrap()).unwrap();
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.core, model.core);
        for (x, y) in back.factors.iter().zip(&model.factors) {
            assert_eq!(x.data(), y.data());
        }
    }
}
