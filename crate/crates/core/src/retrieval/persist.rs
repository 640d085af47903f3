//! `SOLIDDB1` binary database files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "SOLIDDB1" | u16 version | u16 flags | u32 n_r | u32 n_a | u32 n_e
//! | f64 l_max | f64 f_up | f64 f_down | u64 record count
//! record: u64 frame_id | [f64 × 3 position if flags bit 0] | f64 × n_r | f64 × n_a
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::DescriptorDatabase;
use crate::descriptor::{GridSpec, SolidDescriptor};
use crate::error::DbError;
use crate::scalar::Scalar;

pub const DB_MAGIC: &[u8; 8] = b"SOLIDDB1";
pub const DB_VERSION: u16 = 1;
const FLAG_POSITIONS: u16 = 1;
const HEADER_BYTES: usize = 8 + 2 + 2 + 4 * 3 + 8 * 3 + 8;

pub fn write_db<T: Scalar>(db: &DescriptorDatabase<T>) -> Vec<u8> {
    let g = db.grid();
    let with_pos = db.has_positions();
    let record_bytes = 8 + if with_pos { 24 } else { 0 } + 8 * (g.n_r + g.n_a);
    let mut out = Vec::with_capacity(HEADER_BYTES + record_bytes * db.len());
    out.extend_from_slice(DB_MAGIC);
    out.extend_from_slice(&DB_VERSION.to_le_bytes());
    out.extend_from_slice(&(if with_pos { FLAG_POSITIONS } else { 0 }).to_le_bytes());
    for n in [g.n_r, g.n_a, g.n_e] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in [g.l_max, g.f_up, g.f_down] {
        put_f64(&mut out, v);
    }
    out.extend_from_slice(&(db.len() as u64).to_le_bytes());
    for rec in db.records() {
        out.extend_from_slice(&rec.frame_id().to_le_bytes());
        if let Some(p) = rec.position {
            p.iter().for_each(|&c| put_f64(&mut out, c));
        }
        for &v in rec.descriptor.r_solid.iter().chain(&rec.descriptor.a_solid) {
            put_f64(&mut out, v);
        }
    }
    out
}

fn put_f64<T: Scalar>(out: &mut Vec<u8>, v: T) {
    out.extend_from_slice(&v.to_f64().expect("finite descriptor value").to_le_bytes());
}

pub fn save_db<T: Scalar>(
    db: &DescriptorDatabase<T>,
    path: impl AsRef<Path>,
) -> Result<(), DbError> {
    let path = path.as_ref();
    let io = |source| DbError::Io {
        path: path.into(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(&write_db(db)).map_err(io)?;
    file.sync_all().map_err(io)
}

pub fn load_db<T: Scalar>(path: impl AsRef<Path>) -> Result<DescriptorDatabase<T>, DbError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DbError::Io {
        path: path.into(),
        source,
    })?;
    read_db(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let slice = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(slice)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2)
            .map(|b| u16::from_le_bytes(b.try_into().unwrap()))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64s<T: Scalar>(&mut self, n: usize) -> Option<Vec<T>> {
        (0..n).map(|_| self.f64().map(T::lit)).collect()
    }
}

pub fn read_db<T: Scalar>(bytes: &[u8]) -> Result<DescriptorDatabase<T>, DbError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(8).unwrap_or(bytes);
    if magic != DB_MAGIC {
        return Err(DbError::BadMagic {
            found: magic.to_vec(),
        });
    }
    let version = cur.u16().ok_or(DbError::TruncatedHeader)?;
    if version != DB_VERSION {
        return Err(DbError::VersionMismatch { found: version });
    }
    let header = (|| {
        let flags = cur.u16()?;
        let (n_r, n_a, n_e) = (cur.u32()?, cur.u32()?, cur.u32()?);
        let (l_max, f_up, f_down) = (cur.f64()?, cur.f64()?, cur.f64()?);
        let count = cur.u64()?;
        Some((
            flags,
            n_r as usize,
            n_a as usize,
            n_e as usize,
            l_max,
            f_up,
            f_down,
            count,
        ))
    })();
    let (flags, n_r, n_a, n_e, l_max, f_up, f_down, count) =
        header.ok_or(DbError::TruncatedHeader)?;
    if flags & !FLAG_POSITIONS != 0 {
        return Err(DbError::InvalidHeader(format!(
            "unknown flag bits {flags:#06x}"
        )));
    }
    let grid = GridSpec {
        n_r,
        n_a,
        n_e,
        l_max: T::lit(l_max),
        f_up: T::lit(f_up),
        f_down: T::lit(f_down),
    };
    grid.validate().map_err(DbError::InvalidHeader)?;

    let with_pos = flags & FLAG_POSITIONS != 0;
    let mut db = DescriptorDatabase::new(grid);
    for index in 0..count {
        let truncated = DbError::TruncatedRecord { index };
        let frame_id = cur.u64().ok_or(truncated)?;
        let position = if with_pos {
            let p = cur.f64s::<T>(3).ok_or(DbError::TruncatedRecord { index })?;
            Some([p[0], p[1], p[2]])
        } else {
            None
        };
        let r_solid = cur.f64s(n_r).ok_or(DbError::TruncatedRecord { index })?;
        let a_solid = cur.f64s(n_a).ok_or(DbError::TruncatedRecord { index })?;
        db.push(
            SolidDescriptor {
                frame_id,
                r_solid,
                a_solid,
            },
            position,
        )?;
    }
    let extra = bytes.len() - cur.pos;
    if extra != 0 {
        return Err(DbError::TrailingBytes { extra });
    }
    Ok(db)
}
