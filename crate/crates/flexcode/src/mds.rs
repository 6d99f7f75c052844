//! Flexible MDS codes: the layered framework instantiated with systematic
//! Reed-Solomon inner codes per row.
//!
//! Evaluation points follow a fixed order per field — 0, 1, g, g^2, ... —
//! with the information at the first `k_j` points and the extra parities at
//! the last `k_j - k_a` points, so the smallest usable field has
//! `|F| >= n + k_1 - k_a`.

use crate::field::Field;
use crate::layered::{
    layered_decode, layered_encode, validate_profile, CodewordArray, EncodedRow, Family,
    FlexProfile, LayerPlan, RowCodec,
};
use crate::{Error, Result};

/// Canonical evaluation-point sequence for a field: 0, 1, g, g^2, ...
pub fn canonical_points(field: &Field, count: usize) -> Result<Vec<u64>> {
    if count as u64 > field.order() {
        return Err(Error::Unsupported(format!(
            "{count} evaluation points need a field of at least that order, got {}",
            field.order()
        )));
    }
    let mut pts = Vec::with_capacity(count);
    if count > 0 {
        pts.push(0);
    }
    let mut v = 1u64;
    for _ in 1..count {
        pts.push(v);
        v = field.mul(v, field.generator_repr());
    }
    Ok(pts)
}

/// Lagrange interpolation: value at `x` of the unique polynomial through
/// the given (point, value) pairs.
fn lagrange_eval(field: &Field, pairs: &[(u64, u64)], x: u64) -> Result<u64> {
    let f = field;
    let mut acc = 0u64;
    for (i, &(xi, yi)) in pairs.iter().enumerate() {
        if yi == 0 {
            continue;
        }
        let mut num = 1u64;
        let mut den = 1u64;
        for (j, &(xj, _)) in pairs.iter().enumerate() {
            if i == j {
                continue;
            }
            num = f.mul(num, f.sub(x, xj));
            den = f.mul(den, f.sub(xi, xj));
        }
        acc = f.add(acc, f.mul(yi, f.div(num, den)?));
    }
    Ok(acc)
}

/// One systematic Reed-Solomon row code: any `dim` of the `len` positions
/// decode the row.
#[derive(Debug, Clone)]
pub struct RsRowCode {
    field: Field,
    /// Total inner length `n + k_j - k_a`.
    len: usize,
    /// Dimension `k_j`; information sits at the first `dim` points.
    dim: usize,
    points: Vec<u64>,
}

impl RsRowCode {
    pub fn new(field: &Field, len: usize, dim: usize) -> Result<RsRowCode> {
        if dim == 0 || dim > len {
            return Err(Error::Dimension(format!(
                "row code dimension {dim} incompatible with length {len}"
            )));
        }
        Ok(RsRowCode {
            field: field.clone(),
            len,
            dim,
            points: canonical_points(field, len)?,
        })
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    /// Systematic encode: the information appears verbatim at the first
    /// `dim` positions; the rest are evaluations of the interpolant.
    pub fn encode(&self, info: &[u64]) -> Result<Vec<u64>> {
        if info.len() != self.dim {
            return Err(Error::Dimension(format!(
                "expected {} information symbols, got {}",
                self.dim,
                info.len()
            )));
        }
        let pairs: Vec<(u64, u64)> = self.points[..self.dim]
            .iter()
            .copied()
            .zip(info.iter().copied())
            .collect();
        let mut out = info.to_vec();
        for &x in &self.points[self.dim..] {
            out.push(lagrange_eval(&self.field, &pairs, x)?);
        }
        Ok(out)
    }

    /// Recover the full row from any `dim` known (position, value) pairs.
    pub fn decode(&self, known: &[(usize, u64)]) -> Result<Vec<u64>> {
        if known.len() < self.dim {
            return Err(Error::RankDeficient {
                have: known.len(),
                need: self.dim,
            });
        }
        let pairs: Vec<(u64, u64)> = known[..self.dim]
            .iter()
            .map(|&(pos, v)| (self.points[pos], v))
            .collect();
        let mut out = Vec::with_capacity(self.len);
        for (pos, &x) in self.points.iter().enumerate() {
            if let Some(&(_, v)) = known.iter().find(|&&(p, _)| p == pos) {
                out.push(v);
            } else {
                out.push(lagrange_eval(&self.field, &pairs, x)?);
            }
        }
        Ok(out)
    }
}

/// Per-layer RS codecs for one flexible MDS profile.
pub struct RsLayerCodec {
    stored: usize,
    rows: Vec<RsRowCode>,
}

impl RsLayerCodec {
    pub fn new(field: &Field, plan: &LayerPlan) -> Result<RsLayerCodec> {
        let rows = (0..plan.layer_count())
            .map(|j| {
                let g = plan.geometry(j);
                RsRowCode::new(field, g.inner_len, g.dim)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RsLayerCodec {
            stored: plan.profile.n,
            rows,
        })
    }

    pub fn row_code(&self, layer: usize) -> &RsRowCode {
        &self.rows[layer]
    }
}

impl RowCodec<u64> for RsLayerCodec {
    fn encode_row(&self, layer: usize, _row: usize, info: &[u64]) -> Result<EncodedRow<u64>> {
        let mut full = self.rows[layer].encode(info)?;
        let extras = full.split_off(self.stored);
        Ok(EncodedRow {
            stored: full,
            extras,
        })
    }

    fn decode_row(&self, layer: usize, _row: usize, known: &[(usize, u64)]) -> Result<Vec<u64>> {
        let full = self.rows[layer].decode(known)?;
        Ok(full[..self.rows[layer].dim].to_vec())
    }
}

/// Smallest canonical field able to host the profile's longest inner row.
pub fn default_field(profile: &FlexProfile) -> Result<Field> {
    let need = (profile.n + profile.tuples[0].dim - profile.k) as u64;
    let order = (need.max(2)..).find(|&o| crate::field::prime_power(o).is_some());
    Field::gf(order.unwrap())
}

/// Encode `k*l` symbols under a flexible MDS profile.
pub fn flex_mds_encode(
    field: &Field,
    profile: &FlexProfile,
    info: &[u64],
) -> Result<CodewordArray<u64>> {
    if profile.family != Family::Mds {
        return Err(Error::Config("profile family must be MDS".into()));
    }
    let plan = validate_profile(profile)?;
    let codec = RsLayerCodec::new(field, &plan)?;
    layered_encode(info, &plan, &codec)
}

/// Decode from `k_j` node columns carrying their first `l_j` symbols.
pub fn flex_mds_decode(
    field: &Field,
    profile: &FlexProfile,
    layer: usize,
    columns: &[(usize, Vec<u64>)],
) -> Result<Vec<u64>> {
    if profile.family != Family::Mds {
        return Err(Error::Config("profile family must be MDS".into()));
    }
    let plan = validate_profile(profile)?;
    let codec = RsLayerCodec::new(field, &plan)?;
    layered_decode(&plan, &codec, layer, columns)
}
