//! `LGF1` binary and CSV serialization of fields.
//!
//! Layout: magic `LGF1`, little-endian `u32` channels, `u32` nx, `u32` ny,
//! `f64` h, then `channels·nx·ny` little-endian `f64` in
//! `(channel, i, j)` row-major order.
//!
//! A [`DualField`] is written as `n·d` channels on an `(nx+1) × (ny+1)`
//! face grid (`(nx+1) × 1` in 1D); channel `r·d + k` at position `(i, j)`
//! holds the flux through the axis-`k` face with lower corner `(i, j)`.
//! Unused slots are zero.

use std::io::{Read, Write};

use crate::energy::{DualField, Field};
use crate::error::{Error, Result};
use crate::geometry::GridDomain;

const MAGIC: &[u8; 4] = b"LGF1";

/// Raw `LGF1` contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Lgf1 {
    pub channels: usize,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub data: Vec<f64>,
}

impl Lgf1 {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.channels, self.nx, self.ny] {
            let v = u32::try_from(v).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.h.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing LGF1 header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let channels = u32_at(4);
        let nx = u32_at(8);
        let ny = u32_at(12);
        let h = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let count = channels
            .checked_mul(nx)
            .and_then(|v| v.checked_mul(ny))
            .ok_or_else(|| Error::Format("LGF1 dimensions overflow".into()))?;
        let body = &bytes[24..];
        if body.len() != count * 8 {
            return Err(Error::Format(format!(
                "LGF1 payload has {} bytes, expected {}",
                body.len(),
                count * 8
            )));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            channels,
            nx,
            ny,
            h,
            data,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.data.len() * 8);
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }
}

impl Field {
    pub fn to_lgf1(&self) -> Lgf1 {
        Lgf1 {
            channels: self.channels(),
            nx: self.nx(),
            ny: self.ny(),
            h: self.h(),
            data: self.as_slice().to_vec(),
        }
    }

    pub fn from_lgf1(raw: Lgf1) -> Result<Self> {
        Field::new(raw.channels, raw.nx, raw.ny, raw.h, raw.data)
    }

    /// CSV with header `x,y,channel,value`, inside cells only.
    pub fn to_csv(&self, domain: &GridDomain) -> Result<String> {
        self.check_compatible(domain)?;
        let mut s = String::from("x,y,channel,value\n");
        for ch in 0..self.channels() {
            for &c in domain.cells() {
                let p = domain.center(c);
                s.push_str(&format!("{},{},{},{}\n", p[0], p[1], ch, self.get(ch, c)));
            }
        }
        Ok(s)
    }
}

impl DualField {
    /// Face-grid `LGF1` representation.
    pub fn to_lgf1(&self, domain: &GridDomain) -> Result<Lgf1> {
        self.check_compatible(domain)?;
        let n = self.channels();
        let d = self.dim();
        let (nx, ny) = (domain.nx(), domain.ny());
        let (fx, fy) = (nx + 1, if d == 1 { 1 } else { ny + 1 });
        let hd1 = domain.h().powi(d as i32 - 1);
        let mut data = vec![0.0; n * d * fx * fy];
        let slot = |ch: usize, i: usize, j: usize| (ch * fx + i) * fy + j;
        for &c in domain.cells() {
            let (i, j) = domain.ij(c);
            for k in 0..d {
                if domain.neighbor(c, k, 1).is_none() {
                    continue;
                }
                let (fi, fj) = if k == 0 { (i + 1, j) } else { (i, j + 1) };
                for r in 0..n {
                    data[slot(r * d + k, fi, fj)] = self.at(c)[r * d + k];
                }
            }
        }
        for (b, face) in domain.boundary_faces().iter().enumerate() {
            let (i, j) = domain.ij(face.cell);
            let fwd = usize::from(face.side > 0);
            let (fi, fj) = if face.axis == 0 {
                (i + fwd, j)
            } else {
                (i, j + fwd)
            };
            for r in 0..n {
                let flux = if face.weight > 0.0 {
                    face.side as f64 * self.trace(b)[r] * face.weight / hd1
                } else {
                    0.0
                };
                data[slot(r * d + face.axis, fi, fj)] = flux;
            }
        }
        Ok(Lgf1 {
            channels: n * d,
            nx: fx,
            ny: fy,
            h: domain.h(),
            data,
        })
    }

    /// Inverse of [`DualField::to_lgf1`].
    pub fn from_lgf1(domain: &GridDomain, raw: &Lgf1) -> Result<Self> {
        let d = domain.dim();
        let (nx, ny) = (domain.nx(), domain.ny());
        let (fx, fy) = (nx + 1, if d == 1 { 1 } else { ny + 1 });
        if raw.nx != fx || raw.ny != fy || !raw.channels.is_multiple_of(d) || raw.channels == 0 {
            return Err(Error::Format(format!(
                "dual field layout {}x{}x{} does not match the domain face grid {}x{}",
                raw.channels, raw.nx, raw.ny, fx, fy
            )));
        }
        let n = raw.channels / d;
        let hd1 = domain.h().powi(d as i32 - 1);
        let slot = |ch: usize, i: usize, j: usize| (ch * fx + i) * fy + j;
        let mut cells = vec![0.0; domain.n_cells_total() * n * d];
        for &c in domain.cells() {
            let (i, j) = domain.ij(c);
            for k in 0..d {
                if domain.neighbor(c, k, 1).is_none() {
                    continue;
                }
                let (fi, fj) = if k == 0 { (i + 1, j) } else { (i, j + 1) };
                for r in 0..n {
                    cells[c * n * d + r * d + k] = raw.data[slot(r * d + k, fi, fj)];
                }
            }
        }
        let mut boundary = vec![0.0; domain.boundary_faces().len() * n];
        for (b, face) in domain.boundary_faces().iter().enumerate() {
            let (i, j) = domain.ij(face.cell);
            let fwd = usize::from(face.side > 0);
            let (fi, fj) = if face.axis == 0 {
                (i + fwd, j)
            } else {
                (i, j + fwd)
            };
            for r in 0..n {
                let flux = raw.data[slot(r * d + face.axis, fi, fj)];
                boundary[b * n + r] = if face.weight > 0.0 {
                    face.side as f64 * flux * hd1 / face.weight
                } else {
                    0.0
                };
            }
        }
        if cells.iter().chain(&boundary).any(|v| !v.is_finite()) {
            return Err(Error::InvalidField(
                "dual field contains non-finite values".into(),
            ));
        }
        DualField::from_parts(domain, n, cells, boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, Shape};

    #[test]
    fn field_round_trip() {
        let dom = build_domain(Shape::Disk { r: 1.0 }, 16).unwrap();
        let u = Field::from_scalar_fn(&dom, |x| x[0] - 2.0 * x[1]);
        let bytes = u.to_lgf1().to_bytes();
        assert_eq!(&bytes[..4], b"LGF1");
        let back = Field::from_lgf1(Lgf1::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn dual_round_trip() {
        let dom = build_domain(
            Shape::Annulus {
                r_in: 0.4,
                r_out: 1.0,
            },
            32,
        )
        .unwrap();
        let z = DualField::from_fn(&dom, 1, |x| vec![x[0] * 0.3, -x[1] * 0.5]).unwrap();
        let raw = z.to_lgf1(&dom).unwrap();
        assert_eq!((raw.channels, raw.nx, raw.ny), (2, 33, 33));
        let back = DualField::from_lgf1(&dom, &raw).unwrap();
        for (a, b) in back.cell_values().iter().zip(z.cell_values()) {
            assert_eq!(a, b);
        }
        for (a, b) in back.boundary_values().iter().zip(z.boundary_values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = Lgf1 {
            channels: 1,
            nx: 2,
            ny: 2,
            h: 0.5,
            data: vec![1.0; 4],
        }
        .to_bytes();
        bytes.pop();
        assert!(matches!(Lgf1::from_bytes(&bytes), Err(Error::Format(_))));
        assert!(Lgf1::from_bytes(b"XXXX").is_err());
    }

    #[test]
    fn csv_header() {
        let dom = build_domain(Shape::Interval { a: 0.0, b: 1.0 }, 16).unwrap();
        let u = Field::from_scalar_fn(&dom, |x| x[0]);
        let csv = u.to_csv(&dom).unwrap();
        assert!(csv.starts_with("x,y,channel,value\n"));
        assert_eq!(csv.lines().count(), 17);
    }
}
