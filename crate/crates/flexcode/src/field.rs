//! Finite fields GF(p) and GF(p^d): canonical primitive moduli, log/antilog
//! tables for orders up to 2^16 and generic reduced-polynomial arithmetic
//! above that, Frobenius powers, explicit subfield embeddings, and
//! multiplicative coset partitions of F* by a subfield's E*.
//!
//! Elements are encoded as integers: the polynomial `c_0 + c_1 x + ...`
//! over GF(p) is stored as `c_0 + c_1 p + c_2 p^2 + ...`. Zero is `0`,
//! one is `1`, and the canonical generator is the class of `x` (the modulus
//! is always chosen so that `x` is primitive), so `generator() == p` for
//! proper extensions.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

/// Orders up to this bound get log/antilog multiplication tables.
const TABLE_LIMIT: u64 = 1 << 16;

/// Hard cap so digit encodings and log products stay well inside u64.
const ORDER_LIMIT: u64 = 1 << 62;

// ---------------------------------------------------------------------------
// Integer utilities
// ---------------------------------------------------------------------------

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Distinct prime factors by trial division (fine at desk scale, n < 2^62
/// with all factors found below sqrt(n) or a single large prime cofactor).
fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Decompose `order` as p^d with p prime; `None` if it is not a prime power.
pub fn prime_power(order: u64) -> Option<(u64, u32)> {
    if order < 2 {
        return None;
    }
    let factors = distinct_prime_factors(order);
    if factors.len() != 1 {
        return None;
    }
    let p = factors[0];
    let mut d = 0u32;
    let mut m = order;
    while m > 1 {
        if m % p != 0 {
            return None;
        }
        m /= p;
        d += 1;
    }
    Some((p, d))
}

fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, m);
        }
        base = mod_mul(base, base, m);
        exp >>= 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// Dense polynomials over GF(p), little-endian coefficient vectors
// ---------------------------------------------------------------------------

mod poly {
    pub fn trim(v: &mut Vec<u64>) {
        while v.last() == Some(&0) {
            v.pop();
        }
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + ai * bj) % p;
            }
        }
        trim(&mut out);
        out
    }

    /// Remainder of `a` modulo the monic polynomial `m`.
    pub fn rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        let mut r: Vec<u64> = a.to_vec();
        trim(&mut r);
        let dm = m.len() - 1;
        while r.len() > dm {
            let lead = *r.last().unwrap();
            let shift = r.len() - 1 - dm;
            if lead != 0 {
                for (i, &mi) in m.iter().enumerate() {
                    let idx = i + shift;
                    let sub = (lead * mi) % p;
                    r[idx] = (r[idx] + p - sub) % p;
                }
            }
            trim(&mut r);
            if r.is_empty() {
                break;
            }
        }
        r
    }

    pub fn modmul(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        rem(&mul(a, b, p), m, p)
    }

    pub fn modpow(base: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = rem(base, m, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = modmul(&acc, &b, m, p);
            }
            b = modmul(&b, &b, m, p);
            e >>= 1;
        }
        acc
    }

    /// gcd of two polynomials, monic result (or empty for gcd(0,0)).
    pub fn gcd(a: &[u64], b: &[u64], p: u64, inv_mod_p: impl Fn(u64) -> u64) -> Vec<u64> {
        let mut x: Vec<u64> = a.to_vec();
        let mut y: Vec<u64> = b.to_vec();
        trim(&mut x);
        trim(&mut y);
        while !y.is_empty() {
            // reduce x mod y (y made monic first)
            let lead_inv = inv_mod_p(*y.last().unwrap());
            let monic: Vec<u64> = y.iter().map(|&c| (c * lead_inv) % p).collect();
            let r = rem(&x, &monic, p);
            x = y;
            y = r;
        }
        if let Some(&lead) = x.last() {
            let li = inv_mod_p(lead);
            for c in &mut x {
                *c = (*c * li) % p;
            }
        }
        x
    }
}

fn inv_mod_prime(a: u64, p: u64) -> u64 {
    mod_pow(a, p - 2, p)
}

/// Irreducibility over GF(p) via the derivative-free Rabin test:
/// x^(p^d) == x mod f, and gcd(x^(p^(d/t)) - x, f) == 1 for prime t | d.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let d = (f.len() - 1) as u32;
    let x = vec![0u64, 1];
    let inv = |a: u64| inv_mod_prime(a, p);
    // x^(p^k) computed by exponentiating by p, k times
    let frob_power = |k: u32| -> Vec<u64> {
        let mut acc = x.clone();
        for _ in 0..k {
            acc = poly::modpow(&acc, p, f, p);
        }
        acc
    };
    let xpd = frob_power(d);
    if xpd != x {
        return false;
    }
    for t in distinct_prime_factors(d as u64) {
        let h = frob_power(d / t as u32);
        // h - x
        let mut diff = h;
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] = (diff[1] + p - 1) % p;
        poly::trim(&mut diff);
        let g = poly::gcd(&diff, f, p, inv);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

/// True when the class of x generates the multiplicative group mod `f`.
fn x_is_primitive(f: &[u64], p: u64, order: u64, order_factors: &[u64]) -> bool {
    let x = vec![0u64, 1];
    for &q in order_factors {
        let e = (order - 1) / q;
        if poly::modpow(&x, e, f, p) == [1] {
            return false;
        }
    }
    true
}

/// Canonical modulus for GF(p^d): the monic degree-d polynomial with the
/// smallest integer encoding that is irreducible with x primitive. This makes
/// the generator equal to the class of x for every extension field.
fn canonical_modulus(p: u64, d: u32, order: u64, order_factors: &[u64]) -> Result<Vec<u64>> {
    let pd: u64 = order; // p^d
    let low_count = pd; // number of candidate low parts
    for m in 0..low_count {
        let mut f = Vec::with_capacity(d as usize + 1);
        let mut rest = m;
        for _ in 0..d {
            f.push(rest % p);
            rest /= p;
        }
        f.push(1); // monic
        if f[0] == 0 {
            continue; // reducible: x divides
        }
        if is_irreducible(&f, p) && x_is_primitive(&f, p, order, order_factors) {
            return Ok(f);
        }
    }
    Err(Error::UnsupportedField(format!(
        "no primitive modulus found for GF({p}^{d})"
    )))
}

fn smallest_primitive_root(p: u64, order_factors: &[u64]) -> u64 {
    'outer: for g in 2..p {
        for &q in order_factors {
            if mod_pow(g, (p - 1) / q, p) == 1 {
                continue 'outer;
            }
        }
        return g;
    }
    1 // GF(2)
}

// ---------------------------------------------------------------------------
// Field core and handle
// ---------------------------------------------------------------------------

struct FieldCore {
    p: u64,
    degree: u32,
    order: u64,
    /// Monic irreducible modulus, little-endian, length degree+1.
    /// For prime fields this is [0, 1] (the polynomial x), unused.
    modulus: Vec<u64>,
    /// Primitive element: smallest primitive root for GF(p), class of x above.
    generator: u64,
    /// exp[i] = generator^i for i in 0..2*(order-1), when order <= TABLE_LIMIT.
    exp: Option<Vec<u64>>,
    /// log[a] with log[generator^i] = i; log[0] unused.
    log: Option<Vec<u32>>,
}

/// Cheap, clonable handle to an immutable field description.
///
/// Two handles compare equal when they describe the same (p, degree, modulus);
/// the global registry deduplicates canonical fields, so handle clones share
/// tables.
#[derive(Clone)]
pub struct Field(Arc<FieldCore>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p
                && self.0.degree == other.0.degree
                && self.0.modulus == other.0.modulus)
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.degree == 1 {
            write!(f, "GF({})", self.0.p)
        } else {
            write!(f, "GF({}^{})", self.0.p, self.0.degree)
        }
    }
}

fn registry() -> &'static Mutex<HashMap<(u64, u32), Field>> {
    static REG: OnceLock<Mutex<HashMap<(u64, u32), Field>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Field {
    /// The field GF(order); `order` must be a prime power below 2^62.
    pub fn gf(order: u64) -> Result<Field> {
        let (p, d) = prime_power(order).ok_or(Error::NotAPrimePower(order))?;
        Field::extension(p, d)
    }

    /// GF(p^degree) with the canonical primitive modulus for (p, degree).
    pub fn extension(p: u64, degree: u32) -> Result<Field> {
        if degree == 0 || !is_prime(p) {
            return Err(Error::NotAPrimePower(p));
        }
        if let Some(f) = registry().lock().unwrap().get(&(p, degree)) {
            return Ok(f.clone());
        }
        let mut order: u64 = 1;
        for _ in 0..degree {
            order = order
                .checked_mul(p)
                .filter(|&o| o < ORDER_LIMIT)
                .ok_or_else(|| {
                    Error::UnsupportedField(format!("GF({p}^{degree}) exceeds the 2^62 cap"))
                })?;
        }
        let order_factors = distinct_prime_factors(order - 1);
        let (modulus, generator) = if degree == 1 {
            (vec![0, 1], smallest_primitive_root(p, &order_factors))
        } else {
            (canonical_modulus(p, degree, order, &order_factors)?, p)
        };
        let mut core = FieldCore {
            p,
            degree,
            order,
            modulus,
            generator,
            exp: None,
            log: None,
        };
        if order <= TABLE_LIMIT {
            let span = (order - 1) as usize;
            let mut exp = vec![0u64; 2 * span.max(1)];
            let mut log = vec![0u32; order as usize];
            let mut v = 1u64;
            for i in 0..span {
                exp[i] = v;
                exp[i + span] = v;
                log[v as usize] = i as u32;
                v = core.mul_raw(v, core.generator);
            }
            core.exp = Some(exp);
            core.log = Some(log);
        }
        let field = Field(Arc::new(core));
        registry()
            .lock()
            .unwrap()
            .insert((p, degree), field.clone());
        Ok(field)
    }

    /// Prime field GF(p).
    pub fn prime(p: u64) -> Result<Field> {
        Field::extension(p, 1)
    }

    pub fn order(&self) -> u64 {
        self.0.order
    }

    pub fn characteristic(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.degree
    }

    /// Modulus coefficients, little-endian (constant term first).
    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }

    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    /// A fixed primitive element of the multiplicative group.
    pub fn generator(&self) -> FieldElement {
        self.elem(self.0.generator)
    }

    pub fn generator_repr(&self) -> u64 {
        self.0.generator
    }

    /// Wrap an integer encoding as an element. Panics if out of range.
    pub fn elem(&self, repr: u64) -> FieldElement {
        assert!(repr < self.0.order, "element {repr} out of range");
        FieldElement {
            field: self.clone(),
            repr,
        }
    }

    /// All element encodings, 0..order.
    pub fn elements(&self) -> impl Iterator<Item = u64> {
        0..self.0.order
    }

    // -- raw arithmetic on integer encodings --------------------------------

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let c = &self.0;
        if c.degree == 1 {
            return (a + b) % c.p;
        }
        if c.p == 2 {
            return a ^ b;
        }
        let mut out = 0u64;
        let mut scale = 1u64;
        let (mut x, mut y) = (a, b);
        for _ in 0..c.degree {
            out += ((x % c.p + y % c.p) % c.p) * scale;
            x /= c.p;
            y /= c.p;
            scale *= c.p;
        }
        out
    }

    pub fn neg(&self, a: u64) -> u64 {
        let c = &self.0;
        if c.degree == 1 {
            return (c.p - a % c.p) % c.p;
        }
        if c.p == 2 {
            return a;
        }
        let mut out = 0u64;
        let mut scale = 1u64;
        let mut x = a;
        for _ in 0..c.degree {
            out += ((c.p - x % c.p) % c.p) * scale;
            x /= c.p;
            scale *= c.p;
        }
        out
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.0.mul_raw(a, b)
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        let c = &self.0;
        if let (Some(exp), Some(log)) = (&c.exp, &c.log) {
            let span = (c.order - 1) as usize;
            let l = log[a as usize] as usize;
            return Ok(exp[(span - l) % span]);
        }
        Ok(self.pow(a, c.order - 2))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a^e with the convention 0^0 = 1.
    pub fn pow(&self, a: u64, e: u64) -> u64 {
        let c = &self.0;
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        if let (Some(exp), Some(log)) = (&c.exp, &c.log) {
            let span = c.order - 1;
            let l = log[a as usize] as u64;
            let idx = ((l as u128 * (e % span) as u128) % span as u128) as usize;
            return exp[idx];
        }
        let mut acc = 1u64;
        let mut base = a;
        let mut e = e % (c.order - 1);
        if e == 0 {
            return 1;
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = c.mul_raw(acc, base);
            }
            base = c.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }

    /// a^(q^i) where q is the order of a declared subfield.
    pub fn frobenius(&self, a: u64, i: u32, q: u64) -> Result<u64> {
        self.subfield_exponent(q)?;
        if a == 0 {
            return Ok(0);
        }
        let span = self.0.order - 1;
        let e = mod_pow(q % span, i as u64, span);
        Ok(self.pow(a, e))
    }

    /// Degree s with q = p^s dividing our degree; error if q is not a
    /// subfield order.
    pub fn subfield_exponent(&self, q: u64) -> Result<u32> {
        let (qp, s) = prime_power(q).ok_or(Error::NotASubfield(q, self.0.order))?;
        if qp != self.0.p || self.0.degree % s != 0 {
            return Err(Error::NotASubfield(q, self.0.order));
        }
        Ok(s)
    }

    /// The canonical field GF(q) for a declared subfield order q.
    pub fn subfield(&self, q: u64) -> Result<Field> {
        let s = self.subfield_exponent(q)?;
        Field::extension(self.0.p, s)
    }

    /// Explicit embedding of `sub` into this field (coordinate map stored).
    pub fn embedding(&self, sub: &Field) -> Result<Embedding> {
        if sub.characteristic() != self.characteristic()
            || self.0.degree % sub.0.degree != 0
        {
            return Err(Error::NotASubfield(sub.order(), self.order()));
        }
        if sub.0.degree == 1 {
            // prime subfield: constants embed as themselves
            return Ok(Embedding {
                from: sub.clone(),
                to: self.clone(),
                zeta_powers: vec![1],
            });
        }
        if self.order() > TABLE_LIMIT {
            return Err(Error::UnsupportedField(format!(
                "embedding scan only supported for ambient order <= {TABLE_LIMIT}"
            )));
        }
        // smallest root of sub's modulus inside self; its powers carry the
        // coordinate map
        let m = &sub.0.modulus;
        let root = self
            .elements()
            .find(|&x| {
                // Horner over self, modulus coefficients are prime-field constants
                let mut acc = 0u64;
                for &c in m.iter().rev() {
                    acc = self.add(self.mul(acc, x), c);
                }
                acc == 0
            })
            .ok_or_else(|| Error::NotASubfield(sub.order(), self.order()))?;
        let mut zeta_powers = Vec::with_capacity(sub.0.degree as usize);
        let mut z = 1u64;
        for _ in 0..sub.0.degree {
            zeta_powers.push(z);
            z = self.mul(z, root);
        }
        Ok(Embedding {
            from: sub.clone(),
            to: self.clone(),
            zeta_powers,
        })
    }

    /// Base-p digits of an encoding, length = degree.
    pub(crate) fn digits(&self, a: u64) -> Vec<u64> {
        let c = &self.0;
        let mut out = Vec::with_capacity(c.degree as usize);
        let mut x = a;
        for _ in 0..c.degree {
            out.push(x % c.p);
            x /= c.p;
        }
        out
    }
}

impl FieldCore {
    fn mul_raw(&self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.degree == 1 {
            return mod_mul(a, b, self.p);
        }
        if let (Some(exp), Some(log)) = (&self.exp, &self.log) {
            return exp[log[a as usize] as usize + log[b as usize] as usize];
        }
        // generic path: decode digits, convolve, reduce
        let d = self.degree as usize;
        let mut da = Vec::with_capacity(d);
        let mut db = Vec::with_capacity(d);
        let (mut x, mut y) = (a, b);
        for _ in 0..d {
            da.push(x % self.p);
            db.push(y % self.p);
            x /= self.p;
            y /= self.p;
        }
        let prod = poly::mul(&da, &db, self.p);
        let red = poly::rem(&prod, &self.modulus, self.p);
        let mut out = 0u64;
        for &c in red.iter().rev() {
            out = out * self.p + c;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

/// An element of a specific [`Field`], canonical integer encoding.
#[derive(Clone)]
pub struct FieldElement {
    field: Field,
    repr: u64,
}

impl FieldElement {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn repr(&self) -> u64 {
        self.repr
    }

    pub fn is_zero(&self) -> bool {
        self.repr == 0
    }

    pub fn pow(&self, e: u64) -> FieldElement {
        self.field.elem(self.field.pow(self.repr, e))
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(self.field.elem(self.field.inv(self.repr)?))
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.repr == other.repr
    }
}
impl Eq for FieldElement {}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{:?}", self.repr, self.field)
    }
}

/// The four basic arithmetic operations of [`ff_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked field arithmetic: errors on mixed fields and division by zero.
pub fn ff_arith(a: &FieldElement, b: &FieldElement, op: FieldOp) -> Result<FieldElement> {
    if a.field != b.field {
        return Err(Error::FieldMismatch);
    }
    let f = &a.field;
    let r = match op {
        FieldOp::Add => f.add(a.repr, b.repr),
        FieldOp::Sub => f.sub(a.repr, b.repr),
        FieldOp::Mul => f.mul(a.repr, b.repr),
        FieldOp::Div => f.div(a.repr, b.repr)?,
    };
    Ok(f.elem(r))
}

macro_rules! elem_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl $trait for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                ff_arith(&self, &rhs, $op).expect("field operation failed")
            }
        }
        impl $trait<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                ff_arith(self, rhs, $op).expect("field operation failed")
            }
        }
    };
}

elem_binop!(Add, add, FieldOp::Add);
elem_binop!(Sub, sub, FieldOp::Sub);
elem_binop!(Mul, mul, FieldOp::Mul);
elem_binop!(Div, div, FieldOp::Div);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let r = self.field.neg(self.repr);
        self.field.elem(r)
    }
}

// ---------------------------------------------------------------------------
// Embeddings, cosets, rank over a base field
// ---------------------------------------------------------------------------

/// Explicit subfield embedding: the canonical generator of `from` maps to a
/// fixed root of `from`'s modulus inside `to`.
#[derive(Clone, Debug)]
pub struct Embedding {
    from: Field,
    to: Field,
    /// zeta^j for j < [from : prime field]; the coordinate map.
    zeta_powers: Vec<u64>,
}

impl Embedding {
    pub fn from_field(&self) -> &Field {
        &self.from
    }

    pub fn to_field(&self) -> &Field {
        &self.to
    }

    /// Image of a `from`-element inside `to`.
    pub fn map(&self, a: u64) -> u64 {
        if self.from.degree() == 1 {
            return a; // prime-field constants share their encoding
        }
        let digits = self.from.digits(a);
        let mut acc = 0u64;
        for (j, &c) in digits.iter().enumerate() {
            if c != 0 {
                acc = self.to.add(acc, self.to.mul(c, self.zeta_powers[j]));
            }
        }
        acc
    }
}

/// A partition of F* into cosets of E* for a subfield E, with fixed
/// representatives (the first one is always 1).
#[derive(Clone, Debug)]
pub struct CosetPartition {
    pub ambient: Field,
    pub base: Field,
    pub reps: Vec<u64>,
}

impl CosetPartition {
    /// Number of cosets of E* in F*.
    pub fn total_cosets(&self) -> usize {
        ((self.ambient.order() - 1) / (self.base.order() - 1)) as usize
    }

    /// True when x and y lie in the same coset of E*.
    pub fn same_coset(&self, x: u64, y: u64) -> Result<bool> {
        if x == 0 || y == 0 {
            return Err(Error::Domain("coset test needs nonzero elements".into()));
        }
        let f = &self.ambient;
        let ratio = f.div(x, y)?;
        Ok(f.pow(ratio, self.base.order() - 1) == 1)
    }

    /// Index of the coset containing x, or None if x matches no stored rep.
    pub fn coset_index(&self, x: u64) -> Option<usize> {
        self.reps
            .iter()
            .position(|&r| self.same_coset(x, r).unwrap_or(false))
    }
}

/// `count` representatives of pairwise-distinct cosets of E* in F*.
///
/// Representatives are consecutive generator powers g^0 = 1, g^1, ...,
/// which land in distinct cosets by construction.
pub fn coset_reps(ambient: &Field, base: &Field, count: usize) -> Result<CosetPartition> {
    if base.characteristic() != ambient.characteristic()
        || ambient.degree() % base.degree() != 0
    {
        return Err(Error::NotASubfield(base.order(), ambient.order()));
    }
    let available = ((ambient.order() - 1) / (base.order() - 1)) as usize;
    if count > available {
        return Err(Error::CosetCount {
            requested: count,
            available,
        });
    }
    let g = ambient.generator_repr();
    let mut reps = Vec::with_capacity(count);
    let mut v = 1u64;
    for _ in 0..count {
        reps.push(v);
        v = ambient.mul(v, g);
    }
    Ok(CosetPartition {
        ambient: ambient.clone(),
        base: base.clone(),
        reps,
    })
}

/// Dimension of the E-linear span of `elems` inside their common field F.
///
/// For a non-prime base, the span is expanded through an explicit embedding:
/// dim_E = rank_p({zeta^j * b_i}) / [E : GF(p)].
pub fn rank_over_base(field: &Field, elems: &[u64], base: &Field) -> Result<usize> {
    let s = field.subfield_exponent(base.order())?;
    let p = field.characteristic();
    let rows: Vec<u64> = if s == 1 {
        elems.to_vec()
    } else {
        let emb = field.embedding(base)?;
        let mut prods = Vec::with_capacity(elems.len() * s as usize);
        for &b in elems {
            for j in 0..s as usize {
                prods.push(field.mul(emb.zeta_powers[j], b));
            }
        }
        prods
    };
    // rank of the digit matrix over GF(p)
    let d = field.degree() as usize;
    let mut mat: Vec<Vec<u64>> = rows.iter().map(|&r| field.digits(r)).collect();
    let mut rank = 0usize;
    for col in 0..d {
        let Some(pivot) = (rank..mat.len()).find(|&r| mat[r][col] != 0) else {
            continue;
        };
        mat.swap(rank, pivot);
        let inv = inv_mod_prime(mat[rank][col], p);
        for c in &mut mat[rank] {
            *c = (*c * inv) % p;
        }
        for r in 0..mat.len() {
            if r != rank && mat[r][col] != 0 {
                let factor = mat[r][col];
                let pivot_row = mat[rank].clone();
                for (cell, &pv) in mat[r].iter_mut().zip(pivot_row.iter()) {
                    *cell = (*cell + (p - factor % p) * pv) % p;
                }
            }
        }
        rank += 1;
        if rank == mat.len() {
            break;
        }
    }
    if s == 1 {
        Ok(rank)
    } else {
        debug_assert_eq!(rank % s as usize, 0);
        Ok(rank / s as usize)
    }
}
