//! Flexible minimum-storage-regenerating vector codes built on Ye–Barg
//! diagonal parity checks.
//!
//! The base `(n, k)` construction lives in E^L with `L = r^n`, `r = n - k`:
//! `A_i` is the diagonal matrix with entries `lambda_{i, z_i}` (`z_i` the
//! i-th digit of the r-ary expansion of z), a stored column of a parity
//! check is `[I; bA_i; ...; b^(r-1)A_i^(r-1)]` for an additional coefficient
//! `b`, and the repair selector `S_* = Diag(D_*, ..., D_*)` keeps only the
//! coordinates whose expansion agrees after deleting digit `*`, so every
//! helper ships `L/r` symbols per row. Additional coefficients are coset
//! representatives of E* in F*; within each row's check matrix the
//! coefficients that multiply the same `A_i` must stay pairwise distinct,
//! which keeps every per-diagonal slice a Vandermonde system (an MDS code).

use crate::field::{coset_reps, CosetPartition, Field};
use crate::layered::{
    layered_decode, layered_encode, validate_profile, CodewordArray, EncodedRow, Family,
    FlexProfile, LayerPlan, RowCodec,
};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// One vector symbol: L coordinates over the ambient field.
pub type Block = Vec<u64>;

/// Desk-scale caps: L = r^n grows fast.
const MAX_N: usize = 5;
const MAX_R: usize = 3;

/// Base-code description: fields, lambdas and derived dimensions.
#[derive(Debug, Clone)]
pub struct YeBargSpec {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    /// Sub-packetization L = r^n.
    pub l: usize,
    pub base_field: Field,
    pub field: Field,
    /// lambda[i][z] for i < n, z < r: distinct elements of E, embedded in F.
    lambdas: Vec<Vec<u64>>,
    pub cosets: CosetPartition,
}

/// Build the base spec: requires |E| > rn and E a subfield of F.
pub fn build_yebarg(n: usize, k: usize, base_field: &Field, field: &Field) -> Result<YeBargSpec> {
    if k == 0 || k >= n {
        return Err(Error::Config(format!("need 0 < k < n, got ({n}, {k})")));
    }
    let r = n - k;
    if n > MAX_N || r > MAX_R {
        return Err(Error::Unsupported(format!(
            "sub-packetization cap: n <= {MAX_N} and r = n-k <= {MAX_R}, got ({n}, {k})"
        )));
    }
    if base_field.order() <= (r * n) as u64 {
        return Err(Error::Unsupported(format!(
            "need |E| > r*n = {}, got {}",
            r * n,
            base_field.order()
        )));
    }
    let embed = field.embedding(base_field)?;
    let g = base_field.generator_repr();
    let mut lambdas = Vec::with_capacity(n);
    let mut v = 1u64;
    for _ in 0..n {
        let mut per_node = Vec::with_capacity(r);
        for _ in 0..r {
            per_node.push(embed.map(v));
            v = base_field.mul(v, g);
        }
        lambdas.push(per_node);
    }
    let total = ((field.order() - 1) / (base_field.order() - 1)) as usize;
    let cosets = coset_reps(field, base_field, total)?;
    Ok(YeBargSpec {
        n,
        k,
        r,
        l: r.pow(n as u32),
        base_field: base_field.clone(),
        field: field.clone(),
        lambdas,
        cosets,
    })
}

impl YeBargSpec {
    /// i-th r-ary digit of z (digit 0 is the least significant).
    fn digit(&self, z: usize, i: usize) -> usize {
        (z / self.r.pow(i as u32)) % self.r
    }

    /// Diagonal of A_i: lambda_{i, z_i} at coordinate z.
    pub fn a_diagonal(&self, i: usize) -> Vec<u64> {
        (0..self.l).map(|z| self.lambdas[i][self.digit(z, i)]).collect()
    }

    /// L/r x L selector: entry (x, y) = 1 iff the expansion of y with digit
    /// `star` deleted equals the expansion of x.
    pub fn d_matrix(&self, star: usize) -> Matrix {
        let rows = self.l / self.r;
        Matrix::from_fn(&self.field, rows, self.l, |x, y| {
            let mut xx = x;
            let mut matches = true;
            for i in 0..self.n {
                if i == star {
                    continue;
                }
                if self.digit(y, i) != xx % self.r {
                    matches = false;
                    break;
                }
                xx /= self.r;
            }
            u64::from(matches)
        })
    }

    /// L x rL repair selector S_* = Diag(D_*, ..., D_*).
    pub fn s_matrix(&self, star: usize) -> Matrix {
        let d = self.d_matrix(star);
        let rows = self.l / self.r;
        Matrix::from_fn(&self.field, self.l, self.r * self.l, |x, y| {
            let (bx, by) = (x / rows, y / self.l);
            if bx == by {
                d.get(x % rows, y % self.l)
            } else {
                0
            }
        })
    }

    /// rL x L stored-column matrix [I; b A_i; ...; b^(r-1) A_i^(r-1)].
    pub fn h_column(&self, beta: u64, i: usize) -> Matrix {
        let f = &self.field;
        let diag = self.a_diagonal(i);
        Matrix::from_fn(f, self.r * self.l, self.l, |row, col| {
            let w = row / self.l;
            if row % self.l != col {
                return 0;
            }
            let coeff = f.pow(beta, w as u64);
            f.mul(coeff, f.pow(diag[col], w as u64))
        })
    }
}

/// How additional coefficients are assigned to rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientStrategy {
    /// A distinct coset representative per global row (needs l of them).
    PerRow,
    /// Distinct representatives per layer, cycled within the layer; needs
    /// `1 + sum_j ceil((k_{j-1} - k_j)/k_j)` of them.
    PerLayer,
}

/// Additional coefficients: one per global row.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub strategy: CoefficientStrategy,
    pub row_beta: Vec<u64>,
    /// How many coset representatives the assignment consumed.
    pub reps_used: usize,
}

/// Coset representatives required by a strategy on this profile.
pub fn required_coefficients(plan: &LayerPlan, strategy: CoefficientStrategy) -> usize {
    match strategy {
        CoefficientStrategy::PerRow => plan.profile.ell,
        CoefficientStrategy::PerLayer => {
            let dims: Vec<usize> = plan.profile.tuples.iter().map(|t| t.dim).collect();
            1 + (1..dims.len())
                .map(|j| (dims[j - 1] - dims[j]).div_ceil(dims[j]))
                .sum::<usize>()
        }
    }
}

/// Assign additional coefficients satisfying the distinctness condition:
/// in every row's check matrix, coefficients multiplying the same A_i are
/// pairwise distinct.
pub fn assign_coefficients(
    plan: &LayerPlan,
    spec: &YeBargSpec,
    strategy: CoefficientStrategy,
) -> Result<CoefficientTable> {
    let needed = required_coefficients(plan, strategy);
    let available = spec.cosets.reps.len();
    if needed > available {
        return Err(Error::CosetCount {
            requested: needed,
            available,
        });
    }
    let reps = &spec.cosets.reps;
    let mut row_beta = Vec::with_capacity(plan.profile.ell);
    match strategy {
        CoefficientStrategy::PerRow => {
            row_beta.extend_from_slice(&reps[..plan.profile.ell]);
        }
        CoefficientStrategy::PerLayer => {
            let mut next = 1usize; // reps[0] is reserved for layer 0
            for j in 0..plan.layer_count() {
                let geom = plan.geometry(j);
                if j == 0 {
                    row_beta.extend(std::iter::repeat_n(reps[0], geom.rows));
                    continue;
                }
                let prev_dim = plan.geometry(j - 1).dim;
                let pool_size = (prev_dim - geom.dim).div_ceil(geom.dim);
                let pool = &reps[next..next + pool_size];
                next += pool_size;
                for x in 0..geom.rows {
                    row_beta.push(pool[x % pool_size]);
                }
            }
        }
    }
    Ok(CoefficientTable {
        strategy,
        row_beta,
        reps_used: needed,
    })
}

/// Whether a parity-check column is a stored node or a copied extra parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Stored,
    /// Extra parity equal to (global row, node) of a lower layer.
    Extra { target_row: usize, target_node: usize },
}

/// Audit metadata of one parity-check column.
#[derive(Debug, Clone, Copy)]
pub struct ColumnMeta {
    /// Which A_i the column is built from (the node identity).
    pub a_index: usize,
    /// Additional coefficient multiplying that A_i, when known.
    pub beta: Option<u64>,
    pub kind: ColumnKind,
}

struct MsrRow {
    /// rL x (n + extras)L parity-check matrix.
    h: Matrix,
    cols: Vec<ColumnMeta>,
}

/// A concrete flexible MSR instance: per-row parity checks, repair
/// selectors, and optional diagonal metadata for the full audit.
pub struct MsrCode {
    pub plan: LayerPlan,
    pub field: Field,
    pub n: usize,
    pub r: usize,
    /// Coordinates per vector symbol.
    pub l: usize,
    s_mats: Vec<Matrix>,
    rows: Vec<MsrRow>,
    spec: Option<YeBargSpec>,
}

/// Assemble the flexible code from a base spec and a coefficient table.
pub fn msr_code(
    profile: &FlexProfile,
    spec: &YeBargSpec,
    coeffs: &CoefficientTable,
) -> Result<MsrCode> {
    if profile.family != Family::Msr {
        return Err(Error::Config("profile family must be MSR".into()));
    }
    if profile.n != spec.n || profile.k != spec.k {
        return Err(Error::Config(format!(
            "profile is ({}, {}), base code is ({}, {})",
            profile.n, profile.k, spec.n, spec.k
        )));
    }
    let plan = validate_profile(profile)?;
    if coeffs.row_beta.len() != profile.ell {
        return Err(Error::Config("coefficient table must cover every row".into()));
    }
    let mut rows = Vec::with_capacity(profile.ell);
    for j in 0..plan.layer_count() {
        let geom = plan.geometry(j).clone();
        for x in 0..geom.rows {
            let g = geom.row_start + x;
            let mut h: Option<Matrix> = None;
            let mut cols = Vec::with_capacity(geom.inner_len);
            for i in 0..profile.n {
                let col = spec.h_column(coeffs.row_beta[g], i);
                h = Some(match h {
                    None => col,
                    Some(m) => m.hstack(&col),
                });
                cols.push(ColumnMeta {
                    a_index: i,
                    beta: Some(coeffs.row_beta[g]),
                    kind: ColumnKind::Stored,
                });
            }
            for y in 0..geom.extras {
                let r = crate::layered::extra_parity_target(&plan, j, x, y)?;
                let (tj, tx, ty) = r.target;
                let tg = plan.geometry(tj).row_start + tx;
                let col = spec.h_column(coeffs.row_beta[tg], ty);
                h = Some(h.unwrap().hstack(&col));
                cols.push(ColumnMeta {
                    a_index: ty,
                    beta: Some(coeffs.row_beta[tg]),
                    kind: ColumnKind::Extra {
                        target_row: tg,
                        target_node: ty,
                    },
                });
            }
            rows.push(MsrRow {
                h: h.unwrap(),
                cols,
            });
        }
    }
    let s_mats = (0..profile.n).map(|star| spec.s_matrix(star)).collect();
    Ok(MsrCode {
        plan,
        field: spec.field.clone(),
        n: profile.n,
        r: spec.r,
        l: spec.l,
        s_mats,
        rows,
        spec: Some(spec.clone()),
    })
}

fn matvec(m: &Matrix, v: &[u64]) -> Vec<u64> {
    let f = m.field();
    (0..m.rows())
        .map(|r| {
            let mut acc = 0u64;
            for (c, &x) in v.iter().enumerate() {
                let a = m.get(r, c);
                if a != 0 && x != 0 {
                    acc = f.add(acc, f.mul(a, x));
                }
            }
            acc
        })
        .collect()
}

/// Greedily pick independent columns of `m` (a column-space basis).
fn column_basis(m: &Matrix) -> Matrix {
    let f = m.field().clone();
    let mut kept: Vec<usize> = Vec::new();
    let mut echelon: Vec<Vec<u64>> = Vec::new();
    for c in 0..m.cols() {
        let mut v = m.column(c);
        for row in &echelon {
            let lead = row.iter().position(|&x| x != 0).unwrap();
            if v[lead] != 0 {
                let factor = f.div(v[lead], row[lead]).unwrap();
                for (cell, &rv) in v.iter_mut().zip(row.iter()) {
                    *cell = f.sub(*cell, f.mul(factor, rv));
                }
            }
        }
        if v.iter().any(|&x| x != 0) {
            echelon.push(v);
            kept.push(c);
        }
    }
    m.select_columns(&kept)
}

/// Repair accounting: symbols over F shipped by the helpers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairReport {
    /// Sub-symbols actually transmitted.
    pub transmitted: usize,
    /// The optimal-bandwidth target l * (n-1) * L / r.
    pub bound: usize,
    /// Symbols a naive decode would move: k * l * L.
    pub naive: usize,
}

struct MsrRowCodec<'a> {
    code: &'a MsrCode,
}

impl MsrRowCodec<'_> {
    /// Solve the row's parity system given symbols at `known` positions.
    fn solve_row(
        &self,
        layer: usize,
        row: usize,
        known: &[(usize, Block)],
    ) -> Result<Vec<Block>> {
        let code = self.code;
        let geom = code.plan.geometry(layer);
        let g = geom.row_start + row;
        let h = &code.rows[g].h;
        let f = &code.field;
        let l = code.l;
        let total = geom.inner_len;
        let mut have: Vec<Option<&Block>> = vec![None; total];
        for (pos, b) in known {
            if *pos >= total || b.len() != l {
                return Err(Error::IndexRange(format!("row position {pos}")));
            }
            have[*pos] = Some(b);
        }
        let missing: Vec<usize> = (0..total).filter(|&p| have[p].is_none()).collect();
        if missing.len() > code.r {
            return Err(Error::RankDeficient {
                have: total - missing.len(),
                need: total - code.r,
            });
        }
        // rhs = - sum over known columns of H_col * block
        let mut rhs = vec![0u64; code.r * l];
        for (pos, b) in known {
            for (rr, acc) in rhs.iter_mut().enumerate() {
                for (d, &x) in b.iter().enumerate() {
                    if x != 0 {
                        let a = h.get(rr, pos * l + d);
                        if a != 0 {
                            *acc = f.add(*acc, f.mul(a, x));
                        }
                    }
                }
            }
        }
        for v in &mut rhs {
            *v = f.neg(*v);
        }
        let mut out: Vec<Block> = have
            .iter()
            .map(|b| b.cloned().unwrap_or_default())
            .collect();
        if !missing.is_empty() {
            let unknown_cols: Vec<usize> = missing
                .iter()
                .flat_map(|&p| p * l..(p + 1) * l)
                .collect();
            let a = h.select_columns(&unknown_cols);
            let x = a.solve(&Matrix::col_vec(f, &rhs))?;
            for (mi, &p) in missing.iter().enumerate() {
                out[p] = (0..l).map(|d| x.get(mi * l + d, 0)).collect();
            }
        }
        Ok(out)
    }
}

impl RowCodec<Block> for MsrRowCodec<'_> {
    fn encode_row(&self, layer: usize, row: usize, info: &[Block]) -> Result<EncodedRow<Block>> {
        let geom = self.code.plan.geometry(layer);
        if info.len() != geom.dim {
            return Err(Error::Dimension(format!(
                "expected {} information blocks, got {}",
                geom.dim,
                info.len()
            )));
        }
        let known: Vec<(usize, Block)> =
            info.iter().enumerate().map(|(p, b)| (p, b.clone())).collect();
        let mut full = self.solve_row(layer, row, &known)?;
        let extras = full.split_off(self.code.plan.profile.n);
        Ok(EncodedRow {
            stored: full,
            extras,
        })
    }

    fn decode_row(&self, layer: usize, row: usize, known: &[(usize, Block)]) -> Result<Vec<Block>> {
        let full = self.solve_row(layer, row, known)?;
        Ok(full[..self.code.plan.geometry(layer).dim].to_vec())
    }
}

impl MsrCode {
    pub fn profile(&self) -> &FlexProfile {
        &self.plan.profile
    }

    pub fn s_matrix(&self, star: usize) -> &Matrix {
        &self.s_mats[star]
    }

    /// rL x L column of one row's parity check.
    pub fn h_column_of(&self, global_row: usize, position: usize) -> Matrix {
        let h = &self.rows[global_row].h;
        let cols: Vec<usize> = (position * self.l..(position + 1) * self.l).collect();
        h.select_columns(&cols)
    }

    pub fn column_meta(&self, global_row: usize) -> &[ColumnMeta] {
        &self.rows[global_row].cols
    }

    /// The row's full check matrix applied to stored symbols plus extras.
    pub fn check_row(&self, global_row: usize, symbols: &[Block]) -> Vec<u64> {
        let flat: Vec<u64> = symbols.iter().flatten().copied().collect();
        matvec(&self.rows[global_row].h, &flat)
    }

    /// Encode k*l information blocks into the stored l x n array.
    pub fn encode(&self, info: &[Block]) -> Result<CodewordArray<Block>> {
        for b in info {
            if b.len() != self.l {
                return Err(Error::Dimension(format!(
                    "blocks must have {} coordinates",
                    self.l
                )));
            }
        }
        let codec = MsrRowCodec { code: self };
        layered_encode(info, &self.plan, &codec)
    }

    /// Decode from `k_j` node columns carrying their first `l_j` blocks.
    pub fn decode(&self, layer: usize, columns: &[(usize, Vec<Block>)]) -> Result<Vec<Block>> {
        let codec = MsrRowCodec { code: self };
        layered_decode(&self.plan, &codec, layer, columns)
    }

    /// Rebuild node `star` from the other n-1 columns.
    ///
    /// Processes rows bottom-up: each helper ships the L/r-dimensional
    /// projection `S_* h_i C_i` per row (transmitted as coordinates over a
    /// column-space basis), and extra-parity terms are reused from the
    /// lower-layer repair at zero extra cost — either the cached helper
    /// projection or, for the failed node's own column, recomputed from the
    /// already-repaired block.
    pub fn repair(
        &self,
        columns: &[Option<Vec<Block>>],
        star: usize,
    ) -> Result<(Vec<Block>, RepairReport)> {
        let p = &self.plan.profile;
        if columns.len() != p.n || star >= p.n {
            return Err(Error::IndexRange(format!("node {star}")));
        }
        for (i, c) in columns.iter().enumerate() {
            match c {
                None if i != star => return Err(Error::RepairFailureCount),
                Some(_) if i == star => return Err(Error::RepairFailureCount),
                Some(col) if col.len() != p.ell || col.iter().any(|b| b.len() != self.l) => {
                    return Err(Error::Dimension(format!("column {i} malformed")));
                }
                _ => {}
            }
        }
        let f = &self.field;
        let s = &self.s_mats[star];
        let mut transmitted = 0usize;
        // cache[(global row, node)] -> S_* h C projection of stored columns
        let mut cache: std::collections::HashMap<(usize, usize), Vec<u64>> =
            std::collections::HashMap::new();
        let mut repaired: Vec<Option<Block>> = vec![None; p.ell];
        for g in (0..p.ell).rev() {
            let layer = (0..self.plan.layer_count())
                .find(|&j| {
                    let geom = self.plan.geometry(j);
                    g >= geom.row_start && g < geom.row_start + geom.rows
                })
                .unwrap();
            let geom = self.plan.geometry(layer);
            let mut rhs = vec![0u64; self.l];
            let mut lhs: Option<Matrix> = None;
            for (pos, meta) in self.rows[g].cols.iter().enumerate() {
                let proj = s.mul(&self.h_column_of(g, pos)); // L x L
                match meta.kind {
                    ColumnKind::Stored if pos == star => {
                        lhs = Some(proj);
                        continue;
                    }
                    ColumnKind::Stored => {
                        let block = &columns[pos].as_ref().unwrap()[g];
                        let t = matvec(&proj, block);
                        // helper ships coordinates over a basis of the
                        // projection's column space: L/r symbols
                        let basis = column_basis(&proj);
                        let coords = basis.solve(&Matrix::col_vec(f, &t))?;
                        transmitted += coords.rows();
                        let rebuilt = matvec(&basis, &coords.column(0));
                        debug_assert_eq!(rebuilt, t);
                        for (acc, v) in rhs.iter_mut().zip(rebuilt.iter()) {
                            *acc = f.add(*acc, *v);
                        }
                        cache.insert((g, pos), t);
                    }
                    ColumnKind::Extra {
                        target_row,
                        target_node,
                    } => {
                        let t = if target_node == star {
                            let block = repaired[target_row]
                                .as_ref()
                                .expect("lower rows repaired first");
                            matvec(&proj, block)
                        } else {
                            cache
                                .get(&(target_row, target_node))
                                .expect("lower-layer projection cached")
                                .clone()
                        };
                        for (acc, v) in rhs.iter_mut().zip(t.iter()) {
                            *acc = f.add(*acc, *v);
                        }
                    }
                }
            }
            for v in &mut rhs {
                *v = f.neg(*v);
            }
            let lhs = lhs.ok_or(Error::Singular)?;
            let x = lhs.solve(&Matrix::col_vec(f, &rhs))?;
            repaired[g] = Some(x.column(0));
            let _ = geom;
        }
        let out: Vec<Block> = repaired.into_iter().map(|b| b.unwrap()).collect();
        let report = RepairReport {
            transmitted,
            bound: p.ell * (p.n - 1) * self.l / self.r,
            naive: p.k * p.ell * self.l,
        };
        Ok((out, report))
    }

    /// Structural audit: per-diagonal Vandermonde distinctness (MDS), the
    /// repair rank condition for every column, and coefficient
    /// distinctness per A_i. The first and last checks need the diagonal
    /// metadata of a built instance; hand-wired instances audit the rank
    /// condition only.
    pub fn audit(&self) -> MsrAudit {
        let mut audit = MsrAudit {
            rank_violations: Vec::new(),
            condition1_violations: Vec::new(),
            slice_violations: Vec::new(),
            slices_checked: false,
        };
        let f = &self.field;
        for star in 0..self.n {
            let s = &self.s_mats[star];
            for (g, row) in self.rows.iter().enumerate() {
                for (pos, meta) in row.cols.iter().enumerate() {
                    let proj = s.mul(&self.h_column_of(g, pos));
                    let expect = if meta.a_index == star {
                        self.l
                    } else {
                        self.l / self.r
                    };
                    if proj.rank() != expect {
                        audit.rank_violations.push((star, g, pos));
                    }
                }
            }
        }
        for (g, row) in self.rows.iter().enumerate() {
            let mut per_a: std::collections::HashMap<usize, Vec<u64>> =
                std::collections::HashMap::new();
            for meta in &row.cols {
                if let Some(beta) = meta.beta {
                    per_a.entry(meta.a_index).or_default().push(beta);
                }
            }
            for (a_index, betas) in per_a {
                let mut sorted = betas.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != betas.len() {
                    audit.condition1_violations.push((g, a_index));
                }
            }
        }
        if let Some(spec) = &self.spec {
            audit.slices_checked = true;
            for (g, row) in self.rows.iter().enumerate() {
                for z in 0..self.l {
                    let mut points = Vec::with_capacity(row.cols.len());
                    for meta in &row.cols {
                        let lam = spec.lambdas[meta.a_index][spec.digit(z, meta.a_index)];
                        points.push(f.mul(meta.beta.expect("built instance"), lam));
                    }
                    let mut sorted = points.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != points.len() {
                        audit.slice_violations.push((g, z));
                    }
                }
            }
        }
        audit
    }
}

/// Audit outcome; empty violation lists mean the checks passed.
#[derive(Debug, Clone)]
pub struct MsrAudit {
    /// (star, global row, column) where rank(S_* h) was wrong.
    pub rank_violations: Vec<(usize, usize, usize)>,
    /// (global row, a_index) with duplicated additional coefficients.
    pub condition1_violations: Vec<(usize, usize)>,
    /// (global row, diagonal index) whose scalar points collide.
    pub slice_violations: Vec<(usize, usize)>,
    /// Whether the per-diagonal MDS check ran (needs diagonal metadata).
    pub slices_checked: bool,
}

impl MsrAudit {
    pub fn pass(&self) -> bool {
        self.rank_violations.is_empty()
            && self.condition1_violations.is_empty()
            && self.slice_violations.is_empty()
    }
}

impl std::fmt::Display for MsrAudit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "rank condition: {}",
            if self.rank_violations.is_empty() {
                "ok".into()
            } else {
                format!("{} violations {:?}", self.rank_violations.len(), self.rank_violations)
            }
        )?;
        writeln!(
            f,
            "coefficient distinctness: {}",
            if self.condition1_violations.is_empty() {
                "ok".into()
            } else {
                format!(
                    "{} violations {:?}",
                    self.condition1_violations.len(),
                    self.condition1_violations
                )
            }
        )?;
        if self.slices_checked {
            writeln!(
                f,
                "per-diagonal MDS distinctness: {}",
                if self.slice_violations.is_empty() {
                    "ok".into()
                } else {
                    format!("{} violations {:?}", self.slice_violations.len(), self.slice_violations)
                }
            )?;
        } else {
            writeln!(f, "per-diagonal MDS distinctness: skipped (no diagonal metadata)")?;
        }
        Ok(())
    }
}

/// Hand-wired (4, 2, 3) two-layer MSR regression instance over GF(4) with
/// two-coordinate blocks: literal base columns, one beta-scaled extra column
/// per first-layer row, and fixed repair selectors.
pub fn reference_code() -> Result<MsrCode> {
    let f = Field::gf(4)?;
    let beta = f.generator_repr();
    let profile = FlexProfile::new(4, 2, 3, Family::Msr, &[(3, 2), (2, 3)]);
    let plan = validate_profile(&profile)?;
    let l = 2usize;
    let h1: [[[u64; 2]; 2]; 4] = [
        [[0, 1], [1, 1]],
        [[1, 0], [1, 1]],
        [[1, 0], [0, 1]],
        [[0, 0], [0, 0]],
    ];
    let h2: [[[u64; 2]; 2]; 4] = [
        [[0, 1], [1, 0]],
        [[1, 1], [1, 0]],
        [[0, 0], [0, 0]],
        [[1, 0], [0, 1]],
    ];
    // stored column i with the second block-row scaled by `scale`
    let column = |i: usize, scale: u64| -> Matrix {
        Matrix::from_fn(&f, 2 * l, l, |r, c| {
            let v = if r < l { h1[i][r][c] } else { h2[i][r - l][c] };
            if r < l {
                v
            } else {
                f.mul(scale, v)
            }
        })
    };
    let s_rows: [[[u64; 4]; 2]; 4] = [
        [[1, 0, 0, 0], [0, 0, 0, 1]],
        [[1, 0, 0, 0], [0, 0, 1, 0]],
        [[1, 0, 1, 0], [0, 1, 1, 0]],
        [[0, 1, 1, 0], [0, 0, 0, 1]],
    ];
    let s_mats: Vec<Matrix> = s_rows
        .iter()
        .map(|rows| Matrix::from_fn(&f, l, 2 * l, |r, c| rows[r][c]))
        .collect();

    let mut rows = Vec::new();
    // first-layer rows: plain stored columns plus one extra column copied
    // from the second-layer check for nodes 0 and 1
    for x in 0..2usize {
        let mut h = column(0, 1);
        let mut cols = vec![ColumnMeta {
            a_index: 0,
            beta: None,
            kind: ColumnKind::Stored,
        }];
        for i in 1..4 {
            h = h.hstack(&column(i, 1));
            cols.push(ColumnMeta {
                a_index: i,
                beta: None,
                kind: ColumnKind::Stored,
            });
        }
        h = h.hstack(&column(x, beta));
        cols.push(ColumnMeta {
            a_index: x,
            beta: None,
            kind: ColumnKind::Extra {
                target_row: 2,
                target_node: x,
            },
        });
        rows.push(MsrRow { h, cols });
    }
    // second layer: beta-scaled columns for nodes 0 and 1, plain for 2 and 3
    let mut h = column(0, beta);
    let mut cols = vec![ColumnMeta {
        a_index: 0,
        beta: None,
        kind: ColumnKind::Stored,
    }];
    for i in 1..4 {
        h = h.hstack(&column(i, if i == 1 { beta } else { 1 }));
        cols.push(ColumnMeta {
            a_index: i,
            beta: None,
            kind: ColumnKind::Stored,
        });
    }
    rows.push(MsrRow { h, cols });

    Ok(MsrCode {
        plan,
        field: f,
        n: 4,
        r: 2,
        l,
        s_mats,
        rows,
        spec: None,
    })
}

/// Base fields for a fresh (n, k) instance: the smallest binary E with
/// |E| > rn, and the smallest extension F of E with enough cosets.
pub fn default_fields(
    n: usize,
    k: usize,
    coefficients_needed: usize,
) -> Result<(Field, Field)> {
    let r = n.checked_sub(k).filter(|&r| r > 0).ok_or_else(|| {
        Error::Config(format!("need 0 < k < n, got ({n}, {k})"))
    })?;
    let mut w = 1u32;
    while (1u64 << w) <= (r * n) as u64 {
        w += 1;
    }
    let base = Field::extension(2, w)?;
    let mut m = 1u32;
    loop {
        m += 1;
        let order = (base.order() as u128).pow(m);
        if order > (1u128 << 40) {
            return Err(Error::Unsupported(
                "no reasonably sized extension field found".into(),
            ));
        }
        let cosets = (order - 1) / (base.order() as u128 - 1);
        if cosets >= coefficients_needed as u128 {
            return Ok((base.clone(), Field::extension(2, w * m)?));
        }
    }
}
