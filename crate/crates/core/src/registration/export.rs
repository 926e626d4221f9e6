//! Versioned binary map format (little-endian):
//!
//! ```text
//! magic      4 bytes  "IMAP"
//! version    u16      1
//! voxel      f32      meters
//! frame_len  u16      byte length of origin_frame
//! frame      utf-8    origin_frame
//! count      u32      point records that follow
//! record     12 bytes x f32 | y f32 | descriptor u8 | level u8 | distance u16 (mm)
//! ```
//!
//! Level codes: 0 unannotated, 1 yellow, 2 orange, 3 red. Distance is 0 for
//! unannotated points and saturates at 65.535 m.

use std::fmt::Write as _;

use thiserror::Error;

use super::AnnotatedMap;
use crate::geometry::Point2;
use crate::radiation::{RadiationAnnotation, RadiationLevel};
use crate::scalar::Real;

pub const MAP_MAGIC: &[u8; 4] = b"IMAP";
pub const MAP_FORMAT_VERSION: u16 = 1;
pub const POINT_RECORD_BYTES: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum MapFormatError {
    #[error("truncated map data: need {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported map format version {0}")]
    UnsupportedVersion(u16),
    #[error("origin frame is not valid utf-8")]
    BadFrame,
    #[error("invalid annotation level code {0}")]
    BadLevel(u8),
    #[error("invalid voxel size {0}")]
    BadVoxel(f32),
    #[error("point {index} duplicates an occupied voxel")]
    DuplicateVoxel { index: usize },
}

pub fn encode_map<T: Real>(map: &AnnotatedMap<T>) -> Vec<u8> {
    let frame = map.origin_frame().as_bytes();
    let mut out = Vec::with_capacity(16 + frame.len() + map.len() * POINT_RECORD_BYTES);
    out.extend_from_slice(MAP_MAGIC);
    out.extend_from_slice(&MAP_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&map.voxel().to_f32().unwrap_or(0.0).to_le_bytes());
    out.extend_from_slice(&(frame.len() as u16).to_le_bytes());
    out.extend_from_slice(frame);
    out.extend_from_slice(&(map.len() as u32).to_le_bytes());
    for (i, p) in map.points().iter().enumerate() {
        out.extend_from_slice(&p.x.to_f32().unwrap_or(0.0).to_le_bytes());
        out.extend_from_slice(&p.y.to_f32().unwrap_or(0.0).to_le_bytes());
        out.push(descriptor_byte(map.descriptors()[i]));
        let (level, dist) = match map.annotation(i) {
            Some(a) => (level_code(Some(a.level)), distance_mm(a.observation_distance)),
            None => (0, 0),
        };
        out.push(level);
        out.extend_from_slice(&dist.to_le_bytes());
    }
    out
}

pub fn descriptor_byte<T: Real>(d: T) -> u8 {
    d.to_f64().unwrap_or(0.0).round().clamp(0.0, 255.0) as u8
}

pub fn level_code(level: Option<RadiationLevel>) -> u8 {
    match level {
        None => 0,
        Some(RadiationLevel::Yellow) => 1,
        Some(RadiationLevel::Orange) => 2,
        Some(RadiationLevel::Red) => 3,
    }
}

fn level_from_code(code: u8) -> Result<Option<RadiationLevel>, MapFormatError> {
    Ok(match code {
        0 => None,
        1 => Some(RadiationLevel::Yellow),
        2 => Some(RadiationLevel::Orange),
        3 => Some(RadiationLevel::Red),
        other => return Err(MapFormatError::BadLevel(other)),
    })
}

pub fn distance_mm(d: f64) -> u16 {
    (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16
}

struct Reader<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MapFormatError> {
        if self.data.len() < self.offset + n {
            return Err(MapFormatError::Truncated {
                offset: self.offset,
                needed: n,
            });
        }
        let s = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, MapFormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, MapFormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, MapFormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses a map export. Annotation timestamps are not part of the format
/// and decode as 0.
pub fn decode_map<T: Real>(data: &[u8]) -> Result<AnnotatedMap<T>, MapFormatError> {
    let mut r = Reader { data, offset: 0 };
    if r.take(4)? != MAP_MAGIC {
        return Err(MapFormatError::BadMagic);
    }
    let version = r.u16()?;
    if version != MAP_FORMAT_VERSION {
        return Err(MapFormatError::UnsupportedVersion(version));
    }
    let voxel = r.f32()?;
    if !(voxel > 0.0 && voxel.is_finite()) {
        return Err(MapFormatError::BadVoxel(voxel));
    }
    let frame_len = r.u16()? as usize;
    let frame = std::str::from_utf8(r.take(frame_len)?).map_err(|_| MapFormatError::BadFrame)?;
    let count = r.u32()? as usize;
    let mut map = AnnotatedMap::new(T::lit(voxel as f64), frame);
    for index in 0..count {
        let x = r.f32()?;
        let y = r.f32()?;
        let rec = r.take(4)?;
        let level = level_from_code(rec[1])?;
        let dist = u16::from_le_bytes([rec[2], rec[3]]) as f64 / 1000.0;
        let ann = level.map(|level| RadiationAnnotation {
            level,
            observation_distance: dist,
            observed_at: 0.0,
        });
        let fresh = map.push_raw(Point2::new(T::lit(x as f64), T::lit(y as f64)), T::lit(rec[0] as f64), ann);
        if !fresh {
            return Err(MapFormatError::DuplicateVoxel { index });
        }
    }
    Ok(map)
}

/// One point per line: `x y descriptor level distance`.
pub fn export_text<T: Real>(map: &AnnotatedMap<T>) -> String {
    let mut out = format!(
        "# map v{} voxel={} origin_frame={} points={}\n# x y descriptor level distance_m\n",
        MAP_FORMAT_VERSION,
        map.voxel().to_f32().unwrap_or(0.0),
        map.origin_frame(),
        map.len()
    );
    for (i, p) in map.points().iter().enumerate() {
        let (level, dist) = match map.annotation(i) {
            Some(a) => (a.level.name(), a.observation_distance),
            None => ("none", 0.0),
        };
        let _ = writeln!(
            out,
            "{:.3} {:.3} {} {} {:.3}",
            p.x.to_f32().unwrap_or(0.0),
            p.y.to_f32().unwrap_or(0.0),
            descriptor_byte(map.descriptors()[i]),
            level,
            dist
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiation::UpdateRule;
    use proptest::prelude::*;

    #[test]
    fn empty_map_is_header_only() {
        let map = AnnotatedMap::<f64>::new(0.1, "warthog");
        let bytes = encode_map(&map);
        assert_eq!(bytes.len(), 4 + 2 + 4 + 2 + 7 + 4);
        assert_eq!(&bytes[..4], b"IMAP");
        let back: AnnotatedMap<f64> = decode_map(&bytes).unwrap();
        assert_eq!(back.len(), 0);
        assert_eq!(back.origin_frame(), "warthog");
    }

    #[test]
    fn record_layout() {
        let mut map = AnnotatedMap::<f64>::new(0.1, "m");
        let (i, _) = map.insert(Point2::new(1.5, -2.25), 130.4);
        map.annotate(
            i,
            RadiationAnnotation {
                level: RadiationLevel::Red,
                observation_distance: 1.234,
                observed_at: 3.0,
            },
            UpdateRule::CloserWins,
        );
        let bytes = encode_map(&map);
        let rec = &bytes[bytes.len() - 12..];
        assert_eq!(f32::from_le_bytes(rec[0..4].try_into().unwrap()), 1.5);
        assert_eq!(f32::from_le_bytes(rec[4..8].try_into().unwrap()), -2.25);
        assert_eq!(rec[8], 130);
        assert_eq!(rec[9], 3);
        assert_eq!(u16::from_le_bytes([rec[10], rec[11]]), 1234);
        assert!(export_text(&map).contains("1.500 -2.250 130 red 1.234"));
    }

    #[test]
    fn rejects_corrupt_input() {
        assert_eq!(decode_map::<f64>(b"NOPE").unwrap_err(), MapFormatError::BadMagic);
        let map = AnnotatedMap::<f64>::new(0.1, "m");
        let mut bytes = encode_map(&map);
        bytes[4] = 9;
        assert_eq!(decode_map::<f64>(&bytes).unwrap_err(), MapFormatError::UnsupportedVersion(9));
        let bytes = encode_map(&map);
        assert!(matches!(decode_map::<f64>(&bytes[..10]), Err(MapFormatError::Truncated { .. })));
    }

    proptest! {
        #[test]
        fn encode_decode_encode_is_stable(pts in proptest::collection::vec((-100.0..100.0f64, -100.0..100.0f64, 0.0..255.0f64), 0..200)) {
            let mut map = AnnotatedMap::<f64>::new(0.1, "frame");
            for (k, (x, y, d)) in pts.iter().enumerate() {
                let (i, fresh) = map.insert(Point2::new(*x, *y), *d);
                if fresh && k % 3 == 0 {
                    map.annotate(i, RadiationAnnotation { level: RadiationLevel::Orange, observation_distance: 2.5, observed_at: 0.0 }, UpdateRule::CloserWins);
                }
            }
            let bytes = encode_map(&map);
            prop_assert_eq!(bytes.len(), 21 + map.len() * POINT_RECORD_BYTES);
            let back: AnnotatedMap<f64> = decode_map(&bytes).unwrap();
            prop_assert_eq!(encode_map(&back), bytes);
        }
    }
}
