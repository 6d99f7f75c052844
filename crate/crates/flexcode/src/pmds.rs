//! Flexible partial-MDS codes: a Gabidulin outer code over GF(q^N) whose
//! coordinates fill the layer rows, each row wrapped by a systematic (n, k_j)
//! MDS code with parity coefficients in GF(q). Reading the first `l_J` rows,
//! the code tolerates up to `n - k_J` node erasures plus `s` arbitrary symbol
//! erasures; every surviving symbol is a GF(q)-combination of Gabidulin
//! evaluations, and any K independent ones recover the information.

use crate::field::Field;
use crate::layered::{validate_profile, Family, FlexProfile, LayerPlan};
use crate::linalg::Matrix;
use crate::mds::RsRowCode;
use crate::{Error, Result};

/// Evaluation code of a linearized polynomial `f(x) = sum u_i x^(q^i)`.
///
/// Points are the power basis 1, x, ..., x^(N-1) of GF(q^N) over GF(q),
/// independent by construction; any K points that stay independent over
/// GF(q) determine the information.
#[derive(Debug, Clone)]
pub struct GabidulinCode {
    pub field: Field,
    pub q: u64,
    pub len: usize,
    pub dim: usize,
    points: Vec<u64>,
}

impl GabidulinCode {
    pub fn new(field: &Field, q: u64, len: usize, dim: usize) -> Result<GabidulinCode> {
        if q != field.characteristic() {
            // GF(q) coordinates below assume the prime subfield
            return Err(Error::Unsupported(format!(
                "Gabidulin base order {q} must be the field characteristic {}",
                field.characteristic()
            )));
        }
        field.subfield_exponent(q)?;
        if len as u32 != field.degree() || dim > len {
            return Err(Error::Dimension(format!(
                "(N, K) = ({len}, {dim}) incompatible with {field:?}"
            )));
        }
        let g = field.generator_repr();
        let mut points = Vec::with_capacity(len);
        let mut v = 1u64;
        for _ in 0..len {
            points.push(v);
            v = field.mul(v, g);
        }
        Ok(GabidulinCode {
            field: field.clone(),
            q,
            len,
            dim,
            points,
        })
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    /// f(alpha) for the linearized polynomial with coefficients `u`.
    pub fn evaluate(&self, u: &[u64], alpha: u64) -> u64 {
        let f = &self.field;
        let mut acc = 0u64;
        let mut frob = alpha; // alpha^(q^i), starting at i = 0
        for &c in u {
            acc = f.add(acc, f.mul(c, frob));
            frob = f.frobenius(frob, 1, self.q).expect("validated base");
        }
        acc
    }

    /// Codeword: evaluations at all N points.
    pub fn encode(&self, u: &[u64]) -> Result<Vec<u64>> {
        if u.len() != self.dim {
            return Err(Error::Dimension(format!(
                "expected {} information symbols, got {}",
                self.dim,
                u.len()
            )));
        }
        Ok(self.points.iter().map(|&a| self.evaluate(u, a)).collect())
    }

    /// Recover `u` from evaluation pairs whose points span at least K
    /// dimensions over GF(q); solves the K x K linearized-Moore system.
    pub fn erasure_decode(&self, pairs: &[(u64, u64)]) -> Result<Vec<u64>> {
        let f = &self.field;
        let k = self.dim;
        // greedy GF(q)-independent subset via digit echelon
        let mut echelon: Vec<Vec<u64>> = Vec::new();
        let mut chosen: Vec<(u64, u64)> = Vec::new();
        'next: for &(pt, val) in pairs {
            if chosen.len() == k {
                break;
            }
            let mut v = f.digits(pt);
            for row in &echelon {
                let lead = row.iter().position(|&c| c != 0).unwrap();
                if v[lead] != 0 {
                    // v -= (v[lead] / row[lead]) * row, over GF(q)
                    let factor = mulmod_prime(v[lead], invmod_prime(row[lead], self.q), self.q);
                    for (c, &rc) in v.iter_mut().zip(row.iter()) {
                        *c = (*c + (self.q - mulmod_prime(factor, rc, self.q)) % self.q) % self.q;
                    }
                }
            }
            if v.iter().all(|&c| c == 0) {
                continue 'next;
            }
            echelon.push(v);
            chosen.push((pt, val));
        }
        if chosen.len() < k {
            return Err(Error::RankDeficient {
                have: chosen.len(),
                need: k,
            });
        }
        // Moore matrix M[s][i] = pt_s^(q^i)
        let mut m = Matrix::zeros(f, k, k);
        for (s, &(pt, _)) in chosen.iter().enumerate() {
            let mut frob = pt;
            for i in 0..k {
                m.set(s, i, frob);
                frob = f.frobenius(frob, 1, self.q)?;
            }
        }
        let rhs = Matrix::col_vec(f, &chosen.iter().map(|&(_, v)| v).collect::<Vec<_>>());
        Ok(m.solve(&rhs)?.column(0))
    }
}

fn mulmod_prime(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn invmod_prime(a: u64, p: u64) -> u64 {
    // Fermat
    let mut acc = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_prime(acc, base, p);
        }
        base = mulmod_prime(base, base, p);
        e >>= 1;
    }
    acc
}

/// A flexible PMDS code instance: derived field, Gabidulin outer code and
/// per-layer parity-generation matrices over GF(q).
pub struct PmdsCode {
    pub profile: FlexProfile,
    pub plan: LayerPlan,
    pub symbol_failures: usize,
    /// Base order: the smallest prime >= n, so Vandermonde row codes exist
    /// and GF(q)-coordinates coincide with prime-field digits.
    pub q: u64,
    pub field: Field,
    pub gabidulin: GabidulinCode,
    /// parity[j][i][p]: GF(q) coefficient of row-info symbol i in parity p.
    parity: Vec<Vec<Vec<u64>>>,
    /// Coordinate offset of each global row into the Gabidulin codeword.
    row_offset: Vec<usize>,
}

impl PmdsCode {
    pub fn new(profile: &FlexProfile) -> Result<PmdsCode> {
        let Family::Pmds { symbol_failures: s } = profile.family else {
            return Err(Error::Config("profile family must be PMDS".into()));
        };
        let plan = validate_profile(profile)?;
        let q = (profile.n.max(2) as u64..)
            .find(|&v| {
                let mut d = 2u64;
                while d * d <= v {
                    if v % d == 0 {
                        return false;
                    }
                    d += 1;
                }
                true
            })
            .unwrap();
        let big_n: usize = (0..plan.layer_count())
            .map(|j| plan.geometry(j).dim * plan.geometry(j).rows)
            .sum();
        let dim = profile
            .k
            .checked_mul(profile.ell)
            .and_then(|v| v.checked_sub(s))
            .ok_or_else(|| Error::Config("s exceeds k*l".into()))?;
        let field = Field::extension(q, big_n as u32)?;
        let gabidulin = GabidulinCode::new(&field, q, big_n, dim)?;
        let small = Field::prime(q)?;
        let mut parity = Vec::with_capacity(plan.layer_count());
        for j in 0..plan.layer_count() {
            let k_j = plan.geometry(j).dim;
            let rs = RsRowCode::new(&small, profile.n, k_j)?;
            let mut p_j = vec![vec![0u64; profile.n - k_j]; k_j];
            for (i, row) in p_j.iter_mut().enumerate() {
                let mut unit = vec![0u64; k_j];
                unit[i] = 1;
                let enc = rs.encode(&unit)?;
                row.copy_from_slice(&enc[k_j..]);
            }
            parity.push(p_j);
        }
        let mut row_offset = Vec::with_capacity(profile.ell);
        let mut off = 0usize;
        for j in 0..plan.layer_count() {
            for _ in 0..plan.geometry(j).rows {
                row_offset.push(off);
                off += plan.geometry(j).dim;
            }
        }
        debug_assert_eq!(off, big_n);
        Ok(PmdsCode {
            profile: profile.clone(),
            plan,
            symbol_failures: s,
            q,
            field,
            gabidulin,
            parity,
            row_offset,
        })
    }

    /// Layer index of a global row.
    pub fn layer_of_row(&self, row: usize) -> usize {
        (0..self.plan.layer_count())
            .find(|&j| {
                let g = self.plan.geometry(j);
                row >= g.row_start && row < g.row_start + g.rows
            })
            .expect("row in range")
    }

    /// Number of information symbols (K = k*l - s).
    pub fn dim(&self) -> usize {
        self.gabidulin.dim
    }

    /// Encode K information symbols of GF(q^N) into the l x n array.
    pub fn encode(&self, info: &[u64]) -> Result<Vec<Vec<u64>>> {
        let codeword = self.gabidulin.encode(info)?;
        let f = &self.field;
        let n = self.profile.n;
        let mut grid = Vec::with_capacity(self.profile.ell);
        for row in 0..self.profile.ell {
            let j = self.layer_of_row(row);
            let k_j = self.plan.geometry(j).dim;
            let off = self.row_offset[row];
            let mut cells: Vec<u64> = codeword[off..off + k_j].to_vec();
            for p in 0..n - k_j {
                let mut acc = 0u64;
                for i in 0..k_j {
                    let coeff = self.parity[j][i][p];
                    if coeff != 0 {
                        acc = f.add(acc, f.mul(coeff, cells[i]));
                    }
                }
                cells.push(acc);
            }
            grid.push(cells);
        }
        Ok(grid)
    }

    /// Effective Gabidulin evaluation point of one array cell: row-info
    /// cells are codeword points, parity cells GF(q)-combinations of them.
    pub fn effective_point(&self, row: usize, col: usize) -> u64 {
        let f = &self.field;
        let j = self.layer_of_row(row);
        let k_j = self.plan.geometry(j).dim;
        let off = self.row_offset[row];
        if col < k_j {
            self.gabidulin.points()[off + col]
        } else {
            let mut acc = 0u64;
            for i in 0..k_j {
                let coeff = self.parity[j][i][col - k_j];
                if coeff != 0 {
                    acc = f.add(acc, f.mul(coeff, self.gabidulin.points()[off + i]));
                }
            }
            acc
        }
    }

    /// Decode from surviving symbols of the first `l_J` rows (`layer` is J,
    /// 0-based). Fails — never mis-decodes — when the survivors span fewer
    /// than K dimensions over GF(q).
    pub fn decode(&self, layer: usize, survivors: &[(usize, usize, u64)]) -> Result<Vec<u64>> {
        if layer >= self.plan.layer_count() {
            return Err(Error::IndexRange(format!("layer {layer}")));
        }
        let rows_allowed = self.plan.geometry(layer).row_start + self.plan.geometry(layer).rows;
        let mut seen = std::collections::HashSet::new();
        for &(r, c, _) in survivors {
            if r >= rows_allowed || c >= self.profile.n {
                return Err(Error::IndexRange(format!(
                    "cell ({r}, {c}) outside the first {rows_allowed} rows"
                )));
            }
            if !seen.insert((r, c)) {
                return Err(Error::IndexRange(format!("duplicate cell ({r}, {c})")));
            }
        }
        let pairs: Vec<(u64, u64)> = survivors
            .iter()
            .map(|&(r, c, v)| (self.effective_point(r, c), v))
            .collect();
        self.gabidulin.erasure_decode(&pairs)
    }
}

/// Encode under a flexible PMDS profile (info length k*l - s).
pub fn flex_pmds_encode(profile: &FlexProfile, info: &[u64]) -> Result<Vec<Vec<u64>>> {
    PmdsCode::new(profile)?.encode(info)
}

/// Decode the first `l_J` rows given the surviving `(row, col, value)` cells.
pub fn flex_pmds_decode(
    profile: &FlexProfile,
    layer: usize,
    survivors: &[(usize, usize, u64)],
) -> Result<Vec<u64>> {
    PmdsCode::new(profile)?.decode(layer, survivors)
}
