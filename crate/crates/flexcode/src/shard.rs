//! On-disk artifacts: the shard file format (header + column-major payload),
//! the profile configuration document, and the encode manifest.
//!
//! Shards are self-describing: the header carries the family, the full
//! tuple profile, the field (characteristic, degree and modulus, so encoded
//! data stays portable), the node index and payload framing, protected by a
//! CRC32. Symbols are fixed-width big-endian; an MSR cell stores its L
//! coordinates consecutively.

use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::layered::{Family, FlexProfile, LayerTuple};
use crate::msr::CoefficientStrategy;
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FLXC";
pub const FORMAT_VERSION: u16 = 1;

/// CRC-32 (IEEE, reflected 0xEDB88320), bitwise.
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ 0xEDB8_8320
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

/// Bytes a stored symbol occupies: enough for order - 1.
pub fn symbol_out_width(order: u64) -> usize {
    let bits = 64 - (order - 1).leading_zeros();
    (bits.div_ceil(8)).max(1) as usize
}

/// Bytes of raw input a symbol can carry losslessly: the largest b with
/// 256^b <= order. None when the field is smaller than a byte.
pub fn symbol_in_width(order: u64) -> Option<usize> {
    let mut b = 0usize;
    let mut cap = 1u128;
    while cap * 256 <= order as u128 {
        cap *= 256;
        b += 1;
    }
    (b >= 1).then_some(b)
}

fn family_tag(family: &Family) -> (u8, u16) {
    match family {
        Family::Mds => (0, 0),
        Family::Lrc { locality } => (1, *locality as u16),
        Family::Pmds { symbol_failures } => (2, *symbol_failures as u16),
        Family::Msr => (3, 0),
    }
}

fn family_from_tag(tag: u8, param: u16) -> Result<Family> {
    Ok(match tag {
        0 => Family::Mds,
        1 => Family::Lrc {
            locality: param as usize,
        },
        2 => Family::Pmds {
            symbol_failures: param as usize,
        },
        3 => Family::Msr,
        _ => return Err(Error::ShardFormat(format!("unknown family tag {tag}"))),
    })
}

/// Everything a reader needs to rebuild the code and locate the payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardHeader {
    pub profile: FlexProfile,
    pub field_char: u64,
    pub field_degree: u32,
    /// Little-endian modulus coefficients, length degree + 1 (empty for
    /// prime fields).
    pub modulus: Vec<u64>,
    /// MSR only: degree of the base field E over the prime field.
    pub msr_base_degree: u16,
    /// 0 = none, 1 = per-row, 2 = per-layer.
    pub msr_strategy: u8,
    /// Symbols per cell: L for MSR, 1 otherwise.
    pub cell_symbols: u16,
    pub node: u16,
    pub symbol_width: u8,
    /// True byte length of the original input.
    pub input_len: u64,
    pub stripes: u32,
    pub payload_len: u64,
}

impl ShardHeader {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_be_bytes());
        let (tag, param) = family_tag(&self.profile.family);
        out.push(tag);
        out.extend_from_slice(&param.to_be_bytes());
        out.extend_from_slice(&(self.profile.n as u16).to_be_bytes());
        out.extend_from_slice(&(self.profile.k as u16).to_be_bytes());
        out.extend_from_slice(&(self.profile.ell as u16).to_be_bytes());
        out.push(self.profile.tuples.len() as u8);
        for t in &self.profile.tuples {
            out.extend_from_slice(&(t.threshold as u16).to_be_bytes());
            out.extend_from_slice(&(t.dim as u16).to_be_bytes());
            out.extend_from_slice(&(t.rows as u16).to_be_bytes());
        }
        out.push(self.field_char as u8);
        out.push(self.field_degree as u8);
        out.push(self.modulus.len() as u8);
        for &c in &self.modulus {
            out.push(c as u8);
        }
        out.extend_from_slice(&self.msr_base_degree.to_be_bytes());
        out.push(self.msr_strategy);
        out.extend_from_slice(&self.cell_symbols.to_be_bytes());
        out.extend_from_slice(&self.node.to_be_bytes());
        out.push(self.symbol_width);
        out.extend_from_slice(&self.input_len.to_be_bytes());
        out.extend_from_slice(&self.stripes.to_be_bytes());
        out.extend_from_slice(&self.payload_len.to_be_bytes());
        let crc = crc32(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        out
    }

    /// Parse and verify; returns the header and its byte length.
    pub fn from_bytes(data: &[u8]) -> Result<(ShardHeader, usize)> {
        let need = |n: usize| -> Result<()> {
            if data.len() < n {
                Err(Error::ShardFormat("truncated header".into()))
            } else {
                Ok(())
            }
        };
        need(16)?;
        if data[0..4] != MAGIC {
            return Err(Error::ShardFormat("bad magic".into()));
        }
        let version = u16::from_be_bytes([data[4], data[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::ShardFormat(format!("unsupported version {version}")));
        }
        let tag = data[6];
        let param = u16::from_be_bytes([data[7], data[8]]);
        let n = u16::from_be_bytes([data[9], data[10]]) as usize;
        let k = u16::from_be_bytes([data[11], data[12]]) as usize;
        let ell = u16::from_be_bytes([data[13], data[14]]) as usize;
        let a = data[15] as usize;
        let mut off = 16;
        need(off + 6 * a)?;
        let mut tuples = Vec::with_capacity(a);
        for _ in 0..a {
            let threshold = u16::from_be_bytes([data[off], data[off + 1]]) as usize;
            let dim = u16::from_be_bytes([data[off + 2], data[off + 3]]) as usize;
            let rows = u16::from_be_bytes([data[off + 4], data[off + 5]]) as usize;
            tuples.push(LayerTuple {
                threshold,
                dim,
                rows,
            });
            off += 6;
        }
        need(off + 3)?;
        let field_char = data[off] as u64;
        let field_degree = data[off + 1] as u32;
        let mod_len = data[off + 2] as usize;
        off += 3;
        need(off + mod_len)?;
        let modulus: Vec<u64> = data[off..off + mod_len].iter().map(|&b| b as u64).collect();
        off += mod_len;
        need(off + 28)?;
        let msr_base_degree = u16::from_be_bytes([data[off], data[off + 1]]);
        let msr_strategy = data[off + 2];
        let cell_symbols = u16::from_be_bytes([data[off + 3], data[off + 4]]);
        let node = u16::from_be_bytes([data[off + 5], data[off + 6]]);
        let symbol_width = data[off + 7];
        let input_len = u64::from_be_bytes(data[off + 8..off + 16].try_into().unwrap());
        let stripes = u32::from_be_bytes(data[off + 16..off + 20].try_into().unwrap());
        let payload_len = u64::from_be_bytes(data[off + 20..off + 28].try_into().unwrap());
        off += 28;
        let crc = u32::from_be_bytes(data[off..off + 4].try_into().unwrap());
        if crc != crc32(&data[..off]) {
            return Err(Error::Checksum);
        }
        off += 4;
        let profile = FlexProfile {
            n,
            k,
            ell,
            family: family_from_tag(tag, param)?,
            tuples,
        };
        Ok((
            ShardHeader {
                profile,
                field_char,
                field_degree,
                modulus,
                msr_base_degree,
                msr_strategy,
                cell_symbols,
                node,
                symbol_width,
                input_len,
                stripes,
                payload_len,
            },
            off,
        ))
    }

    /// Rebuild the field, verifying the recorded modulus is the canonical
    /// one for (p, degree) so payload symbols decode identically.
    pub fn field(&self) -> Result<Field> {
        let f = Field::extension(self.field_char, self.field_degree)?;
        let canonical: Vec<u64> = if self.field_degree == 1 {
            Vec::new()
        } else {
            f.modulus().to_vec()
        };
        if canonical != self.modulus {
            return Err(Error::ShardFormat(
                "non-canonical field modulus in header".into(),
            ));
        }
        Ok(f)
    }
}

/// Pack symbols as fixed-width big-endian bytes.
pub fn symbols_to_bytes(symbols: &[u64], width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * width);
    for &s in symbols {
        out.extend_from_slice(&s.to_be_bytes()[8 - width..]);
    }
    out
}

/// Inverse of [`symbols_to_bytes`]; rejects values outside the field.
pub fn bytes_to_symbols(bytes: &[u8], width: usize, order: u64) -> Result<Vec<u64>> {
    if bytes.len() % width != 0 {
        return Err(Error::ShardFormat(format!(
            "payload length {} is not a multiple of the symbol width {width}",
            bytes.len()
        )));
    }
    bytes
        .chunks(width)
        .map(|c| {
            let mut v = 0u64;
            for &b in c {
                v = (v << 8) | b as u64;
            }
            if v >= order {
                Err(Error::ShardFormat(format!("symbol {v} outside GF({order})")))
            } else {
                Ok(v)
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Profile configuration (TOML)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldConfig {
    pub p: u64,
    pub degree: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrcConfig {
    pub locality: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmdsConfig {
    pub symbol_failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsrConfig {
    /// Degree of the base field E over GF(2); derived when absent.
    pub base_degree: Option<u32>,
    /// "per-layer" (default) or "per-row".
    pub strategy: Option<String>,
}

/// The structured profile document consumed by `--profile`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    /// `[k_j, l_j]` pairs, top layer first.
    pub tuples: Vec<[usize; 2]>,
    pub field: Option<FieldConfig>,
    pub lrc: Option<LrcConfig>,
    pub pmds: Option<PmdsConfig>,
    pub msr: Option<MsrConfig>,
}

/// A parsed and resolved configuration: validated profile plus fields.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub profile: FlexProfile,
    /// Symbol field for MDS/LRC/MSR; PMDS derives its own.
    pub field: Option<Field>,
    pub msr_base: Option<Field>,
    pub msr_strategy: CoefficientStrategy,
}

impl ProfileConfig {
    pub fn parse(text: &str) -> Result<ProfileConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("profile config: {e}")))
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let family = match self.family.as_str() {
            "mds" => Family::Mds,
            "lrc" => Family::Lrc {
                locality: self
                    .lrc
                    .as_ref()
                    .ok_or_else(|| Error::Config("lrc family needs [lrc] locality".into()))?
                    .locality,
            },
            "pmds" => Family::Pmds {
                symbol_failures: self
                    .pmds
                    .as_ref()
                    .ok_or_else(|| Error::Config("pmds family needs [pmds] symbol_failures".into()))?
                    .symbol_failures,
            },
            "msr" => Family::Msr,
            other => return Err(Error::Config(format!("unknown family {other:?}"))),
        };
        let dims: Vec<(usize, usize)> = self.tuples.iter().map(|t| (t[0], t[1])).collect();
        let profile = FlexProfile::new(self.n, self.k, self.ell, family, &dims);
        crate::layered::validate_profile(&profile)?;
        let explicit = self
            .field
            .as_ref()
            .map(|fc| Field::extension(fc.p, fc.degree))
            .transpose()?;
        let msr_strategy = match self.msr.as_ref().and_then(|m| m.strategy.as_deref()) {
            None | Some("per-layer") => CoefficientStrategy::PerLayer,
            Some("per-row") => CoefficientStrategy::PerRow,
            Some(other) => {
                return Err(Error::Config(format!("unknown msr strategy {other:?}")))
            }
        };
        let (field, msr_base) = match family {
            Family::Mds => (
                Some(match explicit {
                    Some(f) => f,
                    None => crate::mds::default_field(&profile)?,
                }),
                None,
            ),
            Family::Lrc { .. } => (
                Some(match explicit {
                    Some(f) => f,
                    None => crate::lrc::default_field(&profile)?,
                }),
                None,
            ),
            Family::Pmds { .. } => {
                if explicit.is_some() {
                    return Err(Error::Config(
                        "pmds derives its field from the profile; drop [field]".into(),
                    ));
                }
                (None, None)
            }
            Family::Msr => {
                let plan = crate::layered::validate_profile(&profile)?;
                let needed = crate::msr::required_coefficients(&plan, msr_strategy);
                let (default_base, default_f) =
                    crate::msr::default_fields(self.n, self.k, needed)?;
                let base = match self.msr.as_ref().and_then(|m| m.base_degree) {
                    Some(d) => Field::extension(2, d)?,
                    None => default_base.clone(),
                };
                let f = match explicit {
                    Some(f) => f,
                    None if base == default_base => default_f,
                    None => {
                        return Err(Error::Config(
                            "custom msr base_degree needs an explicit [field]".into(),
                        ))
                    }
                };
                (Some(f), Some(base))
            }
        };
        Ok(ResolvedConfig {
            profile,
            field,
            msr_base,
            msr_strategy,
        })
    }
}

/// Encode-run manifest written beside the shards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub input_len: u64,
    pub stripes: u32,
    pub family: String,
    pub field: String,
    pub symbol_width: u8,
    pub cell_symbols: u16,
    pub shards: Vec<String>,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        toml::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))
    }
}
