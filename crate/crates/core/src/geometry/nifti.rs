//! NIfTI-1 single-file (`.nii`, `.nii.gz`) reader and writer.
//!
//! Only what the pipeline needs: 1-3 spatial dimensions (a trailing time
//! axis of length 1 is accepted), the common integer and float datatypes,
//! and sform/qform/pixdim affine resolution in that priority order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::volume::{DataType, Volume};
use crate::linalg::{Mat3, Mat4, Vec3};
use crate::{Error, Result};

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

struct Reader<'a> {
    buf: &'a [u8],
    endian: Endian,
}

impl Reader<'_> {
    fn bytes<const N: usize>(&self, off: usize) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.buf[off..off + N]);
        b
    }

    fn i16(&self, off: usize) -> i16 {
        match self.endian {
            Endian::Little => i16::from_le_bytes(self.bytes(off)),
            Endian::Big => i16::from_be_bytes(self.bytes(off)),
        }
    }

    fn f32(&self, off: usize) -> f32 {
        match self.endian {
            Endian::Little => f32::from_le_bytes(self.bytes(off)),
            Endian::Big => f32::from_be_bytes(self.bytes(off)),
        }
    }
}

/// Header floats are single precision; go through the shortest decimal
/// representation so that e.g. a stored `0.8f32` reads back as `0.8f64`.
fn widen(x: f32) -> f64 {
    format!("{x}").parse().unwrap_or(x as f64)
}

fn parse_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Parse {
        field,
        reason: reason.into(),
    }
}

/// Loads a NIfTI-1 volume; gzip compression is detected from the content.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        raw = out;
    }
    parse_volume(&raw)
}

/// Parses an uncompressed single-file NIfTI-1 image from memory.
pub fn parse_volume(buf: &[u8]) -> Result<Volume> {
    if buf.len() < HEADER_SIZE {
        return Err(parse_err(
            "sizeof_hdr",
            format!("file has only {} bytes", buf.len()),
        ));
    }
    let endian = if i32::from_le_bytes(buf[0..4].try_into().unwrap()) == HEADER_SIZE as i32 {
        Endian::Little
    } else if i32::from_be_bytes(buf[0..4].try_into().unwrap()) == HEADER_SIZE as i32 {
        Endian::Big
    } else {
        return Err(parse_err("sizeof_hdr", "expected 348"));
    };
    let r = Reader { buf, endian };

    let magic = &buf[344..348];
    if magic != b"n+1\0" {
        return Err(parse_err(
            "magic",
            format!("expected \"n+1\", got {magic:?}"),
        ));
    }

    let ndim = r.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(parse_err("dim", format!("dim[0] = {ndim} out of range")));
    }
    let mut dims = [1usize; 3];
    for d in 1..=ndim as usize {
        let v = r.i16(40 + 2 * d);
        if v < 1 {
            return Err(parse_err("dim", format!("dim[{d}] = {v}")));
        }
        if d <= 3 {
            dims[d - 1] = v as usize;
        } else if v != 1 {
            return Err(parse_err("dim", format!("non-singleton dim[{d}] = {v}")));
        }
    }

    let datatype = DataType::from_nifti_code(r.i16(70))?;
    let bitpix = r.i16(72);
    if bitpix as usize != datatype.size_bytes() * 8 {
        return Err(parse_err(
            "bitpix",
            format!(
                "{bitpix} does not match datatype ({} bits)",
                datatype.size_bytes() * 8
            ),
        ));
    }

    let pixdim: Vec<f32> = (0..8).map(|i| r.f32(76 + 4 * i)).collect();
    let mut voxel_size = [0.0f64; 3];
    for i in 0..3 {
        let v = widen(pixdim[i + 1]).abs();
        if !(v > 0.0 && v.is_finite()) {
            return Err(parse_err(
                "pixdim",
                format!("pixdim[{}] = {}", i + 1, pixdim[i + 1]),
            ));
        }
        voxel_size[i] = v;
    }

    let vox_offset = r.f32(108);
    if !(vox_offset >= HEADER_SIZE as f32) || vox_offset.fract() != 0.0 {
        return Err(parse_err("vox_offset", format!("{vox_offset}")));
    }
    let vox_offset = vox_offset as usize;
    let slope = r.f32(112);
    let inter = r.f32(116);

    let qform_code = r.i16(252);
    let sform_code = r.i16(254);
    let affine = if sform_code > 0 {
        let mut m = Mat4::identity();
        for (row, off) in [280usize, 296, 312].into_iter().enumerate() {
            for c in 0..4 {
                m.m[row][c] = widen(r.f32(off + 4 * c));
            }
        }
        m
    } else if qform_code > 0 {
        qform_affine(&r, &pixdim, voxel_size)
    } else {
        let mut m = Mat4::identity();
        for i in 0..3 {
            m.m[i][i] = voxel_size[i];
        }
        m
    };
    if affine.m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(parse_err("srow", "non-finite affine entry"));
    }

    let n: usize = dims.iter().product();
    let nbytes = n * datatype.size_bytes();
    if buf.len() < vox_offset + nbytes {
        return Err(parse_err(
            "vox_offset",
            format!("data truncated: need {nbytes} bytes at offset {vox_offset}"),
        ));
    }
    let mut data = decode(&buf[vox_offset..vox_offset + nbytes], datatype, endian);

    let mut datatype = datatype;
    let scaled = slope.is_finite() && slope != 0.0 && (slope != 1.0 || inter != 0.0);
    if scaled {
        let (s, b) = (widen(slope), widen(inter));
        for v in &mut data {
            *v = *v * s + b;
        }
        datatype = DataType::F64;
    }

    Volume::new(dims, voxel_size, affine, datatype, data)
}

fn qform_affine(r: &Reader<'_>, pixdim: &[f32], voxel_size: [f64; 3]) -> Mat4<f64> {
    let b = widen(r.f32(256));
    let c = widen(r.f32(260));
    let d = widen(r.f32(264));
    let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
    let rot = Mat3 {
        m: [
            [
                a * a + b * b - c * c - d * d,
                2.0 * (b * c - a * d),
                2.0 * (b * d + a * c),
            ],
            [
                2.0 * (b * c + a * d),
                a * a + c * c - b * b - d * d,
                2.0 * (c * d - a * b),
            ],
            [
                2.0 * (b * d - a * c),
                2.0 * (c * d + a * b),
                a * a + d * d - c * c - b * b,
            ],
        ],
    };
    let qfac = if pixdim[0] < 0.0 { -1.0 } else { 1.0 };
    let scale = Mat3::diag([voxel_size[0], voxel_size[1], qfac * voxel_size[2]]);
    let t = Vec3::new(widen(r.f32(268)), widen(r.f32(272)), widen(r.f32(276)));
    Mat4::from_linear_translation(&rot.mul_mat(&scale), t)
}

fn decode(bytes: &[u8], dt: DataType, endian: Endian) -> Vec<f64> {
    macro_rules! conv {
        ($t:ty, $n:expr) => {
            bytes
                .chunks_exact($n)
                .map(|c| {
                    let arr: [u8; $n] = c.try_into().unwrap();
                    (match endian {
                        Endian::Little => <$t>::from_le_bytes(arr),
                        Endian::Big => <$t>::from_be_bytes(arr),
                    }) as f64
                })
                .collect()
        };
    }
    match dt {
        DataType::U8 => bytes.iter().map(|&b| b as f64).collect(),
        DataType::I8 => bytes.iter().map(|&b| b as i8 as f64).collect(),
        DataType::I16 => conv!(i16, 2),
        DataType::U16 => conv!(u16, 2),
        DataType::I32 => conv!(i32, 4),
        DataType::U32 => conv!(u32, 4),
        DataType::F32 => bytes
            .chunks_exact(4)
            .map(|c| {
                let arr: [u8; 4] = c.try_into().unwrap();
                let v = match endian {
                    Endian::Little => f32::from_le_bytes(arr),
                    Endian::Big => f32::from_be_bytes(arr),
                };
                v as f64
            })
            .collect(),
        DataType::F64 => conv!(f64, 8),
    }
}

fn encode(data: &[f64], dt: DataType, out: &mut Vec<u8>) {
    for &v in data {
        match dt {
            DataType::U8 => out.push(v as u8),
            DataType::I8 => out.push(v as i8 as u8),
            DataType::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            DataType::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
            DataType::I32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
            DataType::U32 => out.extend_from_slice(&(v as u32).to_le_bytes()),
            DataType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            DataType::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
}

/// Serialises a volume as little-endian NIfTI-1 with an sform affine.
pub fn encode_volume(vol: &Volume) -> Vec<u8> {
    let mut h = vec![0u8; DATA_OFFSET];
    let put_i16 =
        |h: &mut Vec<u8>, off: usize, v: i16| h[off..off + 2].copy_from_slice(&v.to_le_bytes());
    let put_f32 =
        |h: &mut Vec<u8>, off: usize, v: f32| h[off..off + 4].copy_from_slice(&v.to_le_bytes());

    h[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    let dims = vol.dims();
    put_i16(&mut h, 40, 3);
    for (i, &d) in dims.iter().enumerate() {
        put_i16(&mut h, 42 + 2 * i, d as i16);
    }
    for i in 3..7 {
        put_i16(&mut h, 42 + 2 * i, 1);
    }
    let dt = vol.datatype();
    put_i16(&mut h, 70, dt.nifti_code());
    put_i16(&mut h, 72, (dt.size_bytes() * 8) as i16);
    put_f32(&mut h, 76, 1.0);
    for (i, &v) in vol.voxel_size().iter().enumerate() {
        put_f32(&mut h, 80 + 4 * i, v as f32);
    }
    put_f32(&mut h, 108, DATA_OFFSET as f32);
    put_f32(&mut h, 112, 1.0);
    h[123] = 2; // xyzt_units: mm
    put_i16(&mut h, 254, 2); // sform_code: aligned anatomical
    let a = vol.affine();
    for (row, off) in [280usize, 296, 312].into_iter().enumerate() {
        for c in 0..4 {
            put_f32(&mut h, off + 4 * c, a.m[row][c] as f32);
        }
    }
    h[344..348].copy_from_slice(b"n+1\0");
    encode(vol.data(), dt, &mut h);
    h
}

/// Writes a volume; a `.gz` extension selects gzip compression.
pub fn save_volume(vol: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_volume(vol);
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let res = if gz {
        let mut enc = GzEncoder::new(BufWriter::new(f), Compression::default());
        enc.write_all(&bytes).and_then(|_| enc.finish().map(|_| ()))
    } else {
        let mut w = BufWriter::new(f);
        w.write_all(&bytes).and_then(|_| w.flush())
    };
    res.map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Volume {
        let data = (0..24).map(|v| (v % 7) as f64).collect();
        let mut aff = Mat4::identity();
        aff.m[0][0] = -0.8;
        aff.m[1][1] = 0.8;
        aff.m[2][2] = 1.5;
        aff.m[0][3] = 12.5;
        Volume::new([2, 3, 4], [0.8, 0.8, 1.5], aff, DataType::I16, data).unwrap()
    }

    #[test]
    fn roundtrip_in_memory() {
        let v = sample();
        let back = parse_volume(&encode_volume(&v)).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn bad_magic_names_field() {
        let mut b = encode_volume(&sample());
        b[344] = b'x';
        match parse_volume(&b).unwrap_err() {
            Error::Parse { field, .. } => assert_eq!(field, "magic"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unsupported_datatype() {
        let mut b = encode_volume(&sample());
        b[70..72].copy_from_slice(&128i16.to_le_bytes()); // RGB24
        assert!(matches!(parse_volume(&b), Err(Error::UnsupportedType(128))));
    }

    #[test]
    fn truncated_data() {
        let b = encode_volume(&sample());
        assert!(matches!(
            parse_volume(&b[..b.len() - 3]),
            Err(Error::Parse {
                field: "vox_offset",
                ..
            })
        ));
    }

    #[test]
    fn scaling_is_applied() {
        let mut b = encode_volume(&sample());
        b[112..116].copy_from_slice(&2.0f32.to_le_bytes());
        b[116..120].copy_from_slice(&1.0f32.to_le_bytes());
        let v = parse_volume(&b).unwrap();
        assert_eq!(v.datatype(), DataType::F64);
        assert_eq!(v.data()[3], 7.0);
    }
}
