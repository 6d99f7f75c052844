//! Flexible locally recoverable codes built from Tamo–Barg rows: a good
//! polynomial `g(x) = x^(r+1)` constant on multiplicative cosets, evaluation
//! groups of size `r+1`, single-node repair from the `r` in-group peers, and
//! flexible global decoding at `R_j = k_j + k_j/r - 1` nodes.
//!
//! A row of dimension `k` encodes coefficients `u` as
//! `f(x) = sum_i x^i * sum_t u[i*(k/r)+t] * g(x)^t` (`i < r`, `t < k/r`),
//! a polynomial of degree at most `k + k/r - 2` that restricts to degree
//! `r - 1` on every group. Stored symbols are the evaluations on the first
//! `n/(r+1)` groups; each layer's extra parities are the first `r`
//! evaluations on as many further groups as it needs, the omitted group
//! point being recoverable by locality.

use crate::field::Field;
use crate::layered::{
    layered_decode, layered_encode, validate_profile, CodewordArray, EncodedRow, Family,
    FlexProfile, LayerPlan, RowCodec,
};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Evaluation-group geometry shared by all layers of one code.
#[derive(Debug, Clone)]
pub struct LrcLayout {
    pub field: Field,
    pub n: usize,
    pub locality: usize,
    /// `n/(r+1)` stored point groups, each of size r+1.
    pub stored_groups: Vec<Vec<u64>>,
    /// Point groups backing extra parities, shared across layers.
    pub extra_groups: Vec<Vec<u64>>,
}

impl LrcLayout {
    /// The good polynomial: g(x) = x^(r+1), constant on every group.
    pub fn good_poly(&self, x: u64) -> u64 {
        self.field.pow(x, (self.locality + 1) as u64)
    }

    /// Evaluation point of stored node i.
    pub fn stored_point(&self, node: usize) -> u64 {
        self.stored_groups[node / (self.locality + 1)][node % (self.locality + 1)]
    }

    /// Structured-basis exponent of coefficient index c for dimension k:
    /// c = i*(k/r) + t maps to x^(i + (r+1)t).
    fn monomial_exp(&self, dim: usize, c: usize) -> u64 {
        let per = dim / self.locality;
        let i = c / per;
        let t = c % per;
        (i + (self.locality + 1) * t) as u64
    }

    /// Evaluate the row polynomial for coefficients `u` (dimension k) at x.
    pub fn eval_row_poly(&self, coeffs: &[u64], x: u64) -> u64 {
        let f = &self.field;
        let mut acc = 0u64;
        for (c, &u) in coeffs.iter().enumerate() {
            if u != 0 {
                let e = self.monomial_exp(coeffs.len(), c);
                acc = f.add(acc, f.mul(u, f.pow(x, e)));
            }
        }
        acc
    }
}

/// Pick the evaluation groups for an `(n, r)` layout able to host the
/// profile's widest layer. Groups are cosets of the order-(r+1) subgroup of
/// F*, taken in generator order.
pub fn build_layout(
    field: &Field,
    n: usize,
    locality: usize,
    profile: &FlexProfile,
) -> Result<LrcLayout> {
    let r = locality;
    let q1 = field.order() - 1;
    if q1 % (r + 1) as u64 != 0 {
        return Err(Error::Unsupported(format!(
            "group size {} must divide |F*| = {q1}",
            r + 1
        )));
    }
    if n % (r + 1) != 0 {
        return Err(Error::Config(format!("(r+1) = {} must divide n = {n}", r + 1)));
    }
    let cosets = (q1 / (r + 1) as u64) as usize;
    let max_extra_groups = profile
        .tuples
        .iter()
        .map(|t| (t.dim - profile.k) / r)
        .max()
        .unwrap_or(0);
    let needed = n / (r + 1) + max_extra_groups;
    if cosets < needed {
        return Err(Error::Unsupported(format!(
            "need {needed} evaluation groups but GF({}) only has {cosets}",
            field.order()
        )));
    }
    // the order-(r+1) subgroup is generated by g^cosets
    let g = field.generator_repr();
    let h = field.pow(g, cosets as u64);
    let mut groups = Vec::with_capacity(needed);
    let mut rep = 1u64;
    for _ in 0..needed {
        let mut grp = Vec::with_capacity(r + 1);
        let mut v = rep;
        for _ in 0..=r {
            grp.push(v);
            v = field.mul(v, h);
        }
        groups.push(grp);
        rep = field.mul(rep, g);
    }
    let extra = groups.split_off(n / (r + 1));
    Ok(LrcLayout {
        field: field.clone(),
        n,
        locality: r,
        stored_groups: groups,
        extra_groups: extra,
    })
}

/// Smallest canonical field hosting the layout: at least
/// `n + (k_1 - k_a)(r+1)/r` usable points with `(r+1) | (|F| - 1)`.
pub fn default_field(profile: &FlexProfile) -> Result<Field> {
    let Family::Lrc { locality: r } = profile.family else {
        return Err(Error::Config("profile family must be LRC".into()));
    };
    let extra = (profile.tuples[0].dim - profile.k) * (r + 1) / r;
    let min_points = (profile.n + extra) as u64;
    for order in 2u64.. {
        if crate::field::prime_power(order).is_none() {
            continue;
        }
        if (order - 1) % (r as u64 + 1) == 0 && order > min_points {
            return Field::gf(order);
        }
    }
    unreachable!()
}

/// Row codecs for one flexible LRC profile.
pub struct LrcCodec {
    layout: LrcLayout,
    dims: Vec<usize>,
}

impl LrcCodec {
    pub fn new(layout: LrcLayout, plan: &LayerPlan) -> LrcCodec {
        let dims = (0..plan.layer_count())
            .map(|j| plan.geometry(j).dim)
            .collect();
        LrcCodec { layout, dims }
    }

    fn extra_point(&self, index: usize) -> u64 {
        let r = self.layout.locality;
        self.layout.extra_groups[index / r][index % r]
    }

    /// Solve for the k coefficients from evaluation pairs (needs rank k).
    fn solve_coeffs(&self, dim: usize, pairs: &[(u64, u64)]) -> Result<Vec<u64>> {
        if pairs.len() < dim {
            return Err(Error::RankDeficient {
                have: pairs.len(),
                need: dim,
            });
        }
        let f = &self.layout.field;
        let m = Matrix::from_fn(f, pairs.len(), dim, |row, c| {
            f.pow(pairs[row].0, self.layout.monomial_exp(dim, c))
        });
        let rhs = Matrix::col_vec(f, &pairs.iter().map(|&(_, v)| v).collect::<Vec<_>>());
        let x = m.solve(&rhs)?;
        Ok(x.column(0))
    }
}

impl RowCodec<u64> for LrcCodec {
    fn encode_row(&self, layer: usize, _row: usize, info: &[u64]) -> Result<EncodedRow<u64>> {
        let dim = self.dims[layer];
        if info.len() != dim {
            return Err(Error::Dimension(format!(
                "expected {dim} coefficients, got {}",
                info.len()
            )));
        }
        let stored = (0..self.layout.n)
            .map(|i| self.layout.eval_row_poly(info, self.layout.stored_point(i)))
            .collect();
        let extras_count = dim - *self.dims.last().unwrap();
        let extras = (0..extras_count)
            .map(|y| self.layout.eval_row_poly(info, self.extra_point(y)))
            .collect();
        Ok(EncodedRow { stored, extras })
    }

    fn decode_row(&self, layer: usize, _row: usize, known: &[(usize, u64)]) -> Result<Vec<u64>> {
        let dim = self.dims[layer];
        let r = self.layout.locality;
        let f = &self.layout.field;
        let mut pairs: Vec<(u64, u64)> = Vec::with_capacity(known.len() + known.len() / r);
        let mut extra_seen: std::collections::BTreeMap<usize, Vec<(u64, u64)>> =
            std::collections::BTreeMap::new();
        for &(pos, v) in known {
            if pos < self.layout.n {
                pairs.push((self.layout.stored_point(pos), v));
            } else {
                let y = pos - self.layout.n;
                extra_seen
                    .entry(y / r)
                    .or_default()
                    .push((self.extra_point(y), v));
            }
        }
        // locality completion: a full set of r extras in a group pins the
        // in-group degree-(r-1) restriction, giving the omitted point too
        for (grp, pts) in extra_seen {
            for &p in &pts {
                pairs.push(p);
            }
            if pts.len() == r {
                let omitted = self.layout.extra_groups[grp][r];
                pairs.push((omitted, in_group_eval(f, &pts, omitted)?));
            }
        }
        self.solve_coeffs(dim, &pairs)
    }
}

/// Lagrange evaluation within a group (degree <= len-1 restriction).
fn in_group_eval(field: &Field, pts: &[(u64, u64)], x: u64) -> Result<u64> {
    let f = field;
    let mut acc = 0u64;
    for (i, &(xi, yi)) in pts.iter().enumerate() {
        if yi == 0 {
            continue;
        }
        let mut num = 1u64;
        let mut den = 1u64;
        for (j, &(xj, _)) in pts.iter().enumerate() {
            if i != j {
                num = f.mul(num, f.sub(x, xj));
                den = f.mul(den, f.sub(xi, xj));
            }
        }
        acc = f.add(acc, f.mul(yi, f.div(num, den)?));
    }
    Ok(acc)
}

/// Rebuild all `l` symbols of one failed node from its `r` group peers,
/// reading exactly `r * l` symbols.
pub fn local_repair(
    layout: &LrcLayout,
    columns: &[Option<Vec<u64>>],
    failed: usize,
) -> Result<(Vec<u64>, usize)> {
    let r = layout.locality;
    if failed >= layout.n || columns.len() != layout.n {
        return Err(Error::IndexRange(format!("node {failed}")));
    }
    let group = failed / (r + 1);
    let peers: Vec<usize> = (group * (r + 1)..(group + 1) * (r + 1))
        .filter(|&i| i != failed)
        .collect();
    let mut peer_cols = Vec::with_capacity(r);
    for &p in &peers {
        match &columns[p] {
            Some(c) => peer_cols.push((layout.stored_point(p), c)),
            None => return Err(Error::MissingHelper(p)),
        }
    }
    let rows = peer_cols[0].1.len();
    if peer_cols.iter().any(|(_, c)| c.len() != rows) {
        return Err(Error::Dimension("helper columns differ in length".into()));
    }
    let x = layout.stored_point(failed);
    let mut out = Vec::with_capacity(rows);
    for row in 0..rows {
        let pts: Vec<(u64, u64)> = peer_cols.iter().map(|&(p, c)| (p, c[row])).collect();
        out.push(in_group_eval(&layout.field, &pts, x)?);
    }
    Ok((out, r * rows))
}

/// Encode `k*l` coefficients under a flexible LRC profile.
pub fn flex_lrc_encode(
    field: &Field,
    profile: &FlexProfile,
    info: &[u64],
) -> Result<CodewordArray<u64>> {
    let Family::Lrc { locality } = profile.family else {
        return Err(Error::Config("profile family must be LRC".into()));
    };
    let plan = validate_profile(profile)?;
    let layout = build_layout(field, profile.n, locality, profile)?;
    let codec = LrcCodec::new(layout, &plan);
    layered_encode(info, &plan, &codec)
}

/// Decode from `R_j = k_j + k_j/r - 1` node columns carrying their first
/// `l_j` symbols.
pub fn flex_lrc_decode(
    field: &Field,
    profile: &FlexProfile,
    layer: usize,
    columns: &[(usize, Vec<u64>)],
) -> Result<Vec<u64>> {
    let Family::Lrc { locality } = profile.family else {
        return Err(Error::Config("profile family must be LRC".into()));
    };
    let plan = validate_profile(profile)?;
    let layout = build_layout(field, profile.n, locality, profile)?;
    let codec = LrcCodec::new(layout, &plan);
    layered_decode(&plan, &codec, layer, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    fn example_profile() -> FlexProfile {
        FlexProfile::new(12, 4, 3, Family::Lrc { locality: 2 }, &[(6, 2), (4, 3)])
    }

    fn gf16() -> Field {
        Field::gf(16).unwrap()
    }

    #[test]
    fn thresholds_follow_the_lrc_rule() {
        let p = example_profile();
        assert_eq!(p.tuples[0].threshold, 8);
        assert_eq!(p.tuples[1].threshold, 5);
    }

    #[test]
    fn layout_matches_the_coset_structure() {
        let f = gf16();
        let layout = build_layout(&f, 12, 2, &example_profile()).unwrap();
        let a = f.generator_repr();
        let pow = |e: u64| f.pow(a, e);
        assert_eq!(layout.stored_groups.len(), 4);
        assert_eq!(layout.extra_groups.len(), 1);
        assert_eq!(layout.stored_groups[0], vec![1, pow(5), pow(10)]);
        assert_eq!(layout.stored_groups[1], vec![pow(1), pow(6), pow(11)]);
        assert_eq!(layout.stored_groups[2], vec![pow(2), pow(7), pow(12)]);
        assert_eq!(layout.stored_groups[3], vec![pow(3), pow(8), pow(13)]);
        assert_eq!(layout.extra_groups[0], vec![pow(4), pow(9), pow(14)]);
    }

    #[test]
    fn good_polynomial_constant_on_groups() {
        let f = gf16();
        let layout = build_layout(&f, 12, 2, &example_profile()).unwrap();
        for grp in layout.stored_groups.iter().chain(layout.extra_groups.iter()) {
            let v = layout.good_poly(grp[0]);
            for &x in grp {
                assert_eq!(layout.good_poly(x), v);
            }
        }
    }

    #[test]
    fn insufficient_cosets_error() {
        // GF(16) has 5 cosets of size 3; n = 15 already needs all of them,
        // leaving none for extras
        let f = gf16();
        let p = FlexProfile::new(15, 5, 3, Family::Lrc { locality: 2 }, &[(15, 1), (5, 3)]);
        assert!(build_layout(&f, 15, 2, &p).is_err());
    }

    #[test]
    fn default_field_for_example_is_gf16() {
        assert_eq!(default_field(&example_profile()).unwrap().order(), 16);
    }

    #[test]
    fn zero_info_encodes_to_zero() {
        let f = gf16();
        let arr = flex_lrc_encode(&f, &example_profile(), &[0; 12]).unwrap();
        assert!(arr.grid.iter().flatten().all(|&v| v == 0));
    }

    #[test]
    fn layer2_row_matches_reference_polynomial() {
        // row 3 encodes the four layer-1 extras e as
        // (e0 + e1*g(x)) + x*(e2 + e3*g(x))
        let f = gf16();
        let profile = example_profile();
        let plan = validate_profile(&profile).unwrap();
        let layout = build_layout(&f, 12, 2, &profile).unwrap();
        let codec = LrcCodec::new(layout.clone(), &plan);
        let info: Vec<u64> = (1..=12u64).map(|v| v % 16).collect();
        let arr = layered_encode(&info, &plan, &codec).unwrap();

        // recompute the extras directly: f_m at the first two extra points
        let mut extras = Vec::new();
        for m in 0..2 {
            let coeffs = &info[m * 6..(m + 1) * 6];
            for t in 0..2 {
                extras.push(layout.eval_row_poly(coeffs, layout.extra_groups[0][t]));
            }
        }
        for node in 0..12 {
            let x = layout.stored_point(node);
            let g = layout.good_poly(x);
            let expect = f.add(
                f.add(extras[0], f.mul(extras[1], g)),
                f.mul(x, f.add(extras[2], f.mul(extras[3], g))),
            );
            assert_eq!(arr.grid[2][node], expect, "row 3 mismatch at node {node}");
        }
    }

    #[test]
    fn in_group_relation_predicts_the_last_point() {
        let f = gf16();
        let profile = example_profile();
        let layout = build_layout(&f, 12, 2, &profile).unwrap();
        let coeffs = [7u64, 3, 0, 1, 9, 12];
        for grp in layout.stored_groups.iter().chain(layout.extra_groups.iter()) {
            let pts: Vec<(u64, u64)> = grp[..2]
                .iter()
                .map(|&x| (x, layout.eval_row_poly(&coeffs, x)))
                .collect();
            let predicted = in_group_eval(&f, &pts, grp[2]).unwrap();
            assert_eq!(predicted, layout.eval_row_poly(&coeffs, grp[2]));
        }
    }

    #[test]
    fn local_repair_every_node() {
        let f = gf16();
        let profile = example_profile();
        let info: Vec<u64> = (0..12u64).map(|v| (v * 7 + 1) % 16).collect();
        let arr = flex_lrc_encode(&f, &profile, &info).unwrap();
        let layout = build_layout(&f, 12, 2, &profile).unwrap();
        for failed in 0..12 {
            let mut cols: Vec<Option<Vec<u64>>> =
                (0..12).map(|c| Some(arr.node_column(c))).collect();
            cols[failed] = None;
            let (rebuilt, read) = local_repair(&layout, &cols, failed).unwrap();
            assert_eq!(rebuilt, arr.node_column(failed));
            assert_eq!(read, 2 * 3);
        }
        // repair of an all-zero codeword gives zeros
        let zero = flex_lrc_encode(&f, &profile, &[0; 12]).unwrap();
        let cols: Vec<Option<Vec<u64>>> = (0..12).map(|c| Some(zero.node_column(c))).collect();
        assert_eq!(local_repair(&layout, &cols, 5).unwrap().0, vec![0; 3]);
    }

    #[test]
    fn local_repair_requires_group_peers() {
        let f = gf16();
        let profile = example_profile();
        let arr = flex_lrc_encode(&f, &profile, &[1; 12]).unwrap();
        let layout = build_layout(&f, 12, 2, &profile).unwrap();
        let mut cols: Vec<Option<Vec<u64>>> = (0..12).map(|c| Some(arr.node_column(c))).collect();
        cols[0] = None;
        cols[1] = None; // peer of node 0
        assert!(matches!(
            local_repair(&layout, &cols, 0),
            Err(Error::MissingHelper(1))
        ));
    }

    #[test]
    fn flexible_decode_spot_checks() {
        let f = gf16();
        let profile = example_profile();
        let info: Vec<u64> = (0..12u64).map(|v| (v * 3 + 2) % 16).collect();
        let arr = flex_lrc_encode(&f, &profile, &info).unwrap();
        // eight nodes, two rows
        for subset in [(0..8).collect_vec(), vec![0, 2, 3, 5, 7, 8, 10, 11]] {
            let cols: Vec<(usize, Vec<u64>)> = subset
                .iter()
                .map(|&c| (c, arr.grid[..2].iter().map(|r| r[c]).collect()))
                .collect();
            assert_eq!(flex_lrc_decode(&f, &profile, 0, &cols).unwrap(), info);
        }
        // five nodes, all three rows: forces the locality-completion path
        for subset in [vec![0usize, 1, 2, 3, 4], vec![7usize, 8, 9, 10, 11]] {
            let cols: Vec<(usize, Vec<u64>)> = subset
                .iter()
                .map(|&c| (c, arr.node_column(c)))
                .collect();
            assert_eq!(flex_lrc_decode(&f, &profile, 1, &cols).unwrap(), info);
        }
    }
}
