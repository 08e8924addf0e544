//! Exact integer coefficients of the `(H_ρ)_{n,m}` polynomials and their
//! evaluation in fixed-point arithmetic.
//!
//! For `n, m ≥ 1`
//!
//! ```text
//! (H_ρ)_{n,m} = Σ_{k=max(n−m,0)}^{n} (−1)^{n−k} C(k+m−1, k+m−n) C(n,k) ρ^{2k+m−n}
//! ```
//!
//! The terms alternate in sign and grow like `C(2Ñ, Ñ)`, so evaluating the sum
//! in double precision is hopeless beyond modest orders. Coefficients are kept
//! as exact integers and the polynomial is evaluated by Horner's rule on a
//! fixed-point integer representation of `ρ²` with a configurable number of
//! fractional bits. The rounding error of that evaluation is an absolute
//! `O(degree · 2^-bits)`, independent of the coefficient magnitudes.

use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Float, ToPrimitive, Zero};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
struct PolyEntry {
    first: u32,
    count: u16,
    lowest_power: u16,
}

#[derive(Clone, Copy, Debug)]
struct Coeff {
    offset: u32,
    len: u16,
    negative: bool,
}

/// Coefficient table for `n ∈ 1..=rows`, `m ∈ 1..=cols`.
///
/// Storage is a flat limb pool; a full `200 × 200` table holds about
/// 2.7 million coefficients.
#[derive(Debug)]
pub struct HCoefficients {
    rows: usize,
    cols: usize,
    polys: Vec<PolyEntry>,
    coeffs: Vec<Coeff>,
    limbs: Vec<u32>,
}

/// View of one `(n, m)` polynomial `ρ^{lowest_power} · Σ_j c_j (ρ²)^j`.
#[derive(Clone, Copy, Debug)]
pub struct HPolynomial<'a> {
    table: &'a HCoefficients,
    entry: PolyEntry,
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

struct RowBuild {
    polys: Vec<PolyEntry>,
    coeffs: Vec<Coeff>,
    limbs: Vec<u32>,
}

fn build_row(n: usize, cols: usize) -> RowBuild {
    let mut out = RowBuild {
        polys: Vec::with_capacity(cols),
        coeffs: Vec::new(),
        limbs: Vec::new(),
    };
    let n64 = n as u64;
    for m in 1..=cols {
        let m64 = m as u64;
        let k0 = n64.saturating_sub(m64);
        // First term: C(k0+m−1, k0+m−n)·C(n, k0).
        let mut t = if m64 >= n64 {
            binomial(m64 - 1, m64 - n64)
        } else {
            binomial(n64, n64 - m64)
        };
        let first = out.coeffs.len() as u32;
        for k in k0..=n64 {
            let digits = t.to_u32_digits();
            out.coeffs.push(Coeff {
                offset: out.limbs.len() as u32,
                len: digits.len() as u16,
                negative: (n64 - k) % 2 == 1,
            });
            out.limbs.extend_from_slice(&digits);
            if k < n64 {
                // t_{k+1} = t_k (k+m)(n−k) / ((k+m+1−n)(k+1)), exact.
                t *= (k + m64) * (n64 - k);
                t /= (k + m64 + 1 - n64) * (k + 1);
            }
        }
        out.polys.push(PolyEntry {
            first,
            count: (n64 - k0 + 1) as u16,
            lowest_power: (2 * k0 + m64 - n64) as u16,
        });
    }
    out
}

impl HCoefficients {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "coefficient table needs at least one row and column");
        let built: Vec<RowBuild> = (1..=rows).into_par_iter().map(|n| build_row(n, cols)).collect();
        let mut table = Self {
            rows,
            cols,
            polys: Vec::with_capacity(rows * cols),
            coeffs: Vec::with_capacity(built.iter().map(|r| r.coeffs.len()).sum()),
            limbs: Vec::with_capacity(built.iter().map(|r| r.limbs.len()).sum()),
        };
        for row in built {
            let coeff_base = table.coeffs.len() as u32;
            let limb_base = table.limbs.len() as u32;
            table.polys.extend(row.polys.into_iter().map(|mut p| {
                p.first += coeff_base;
                p
            }));
            table.coeffs.extend(row.coeffs.into_iter().map(|mut c| {
                c.offset += limb_base;
                c
            }));
            table.limbs.extend(row.limbs);
        }
        table
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn covers(&self, rows: usize, cols: usize) -> bool {
        self.rows >= rows && self.cols >= cols
    }

    /// Polynomial for `n, m ≥ 1`.
    pub fn poly(&self, n: usize, m: usize) -> HPolynomial<'_> {
        assert!(
            (1..=self.rows).contains(&n) && (1..=self.cols).contains(&m),
            "({n}, {m}) outside the {}×{} table",
            self.rows,
            self.cols
        );
        HPolynomial {
            table: self,
            entry: self.polys[(n - 1) * self.cols + (m - 1)],
        }
    }

    fn coefficient(&self, index: usize) -> BigInt {
        let c = self.coeffs[index];
        let start = c.offset as usize;
        let magnitude = BigUint::from_slice(&self.limbs[start..start + c.len as usize]);
        let sign = if c.negative { Sign::Minus } else { Sign::Plus };
        BigInt::from_biguint(sign, magnitude)
    }
}

impl HPolynomial<'_> {
    /// Smallest power of `ρ` present, `|n − m|`.
    pub fn lowest_power(&self) -> u32 {
        self.entry.lowest_power as u32
    }

    pub fn len(&self) -> usize {
        self.entry.count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.entry.count == 0
    }

    /// Coefficients of `(ρ²)^j`, ascending in `j`.
    pub fn coefficients(&self) -> Vec<BigInt> {
        let first = self.entry.first as usize;
        (first..first + self.len())
            .map(|i| self.table.coefficient(i))
            .collect()
    }

    /// `(power of ρ, coefficient)` pairs, ascending.
    pub fn terms(&self) -> Vec<(u32, BigInt)> {
        self.coefficients()
            .into_iter()
            .enumerate()
            .map(|(j, c)| (self.lowest_power() + 2 * j as u32, c))
            .collect()
    }

    /// Value at `ρ` using `x.bits` fractional bits.
    pub(crate) fn evaluate(&self, x: &FixedSquare) -> f64 {
        let bits = x.bits as usize;
        let first = self.entry.first as usize;
        let mut acc = BigInt::zero();
        for i in (first..first + self.len()).rev() {
            acc *= &x.value;
            acc >>= bits;
            acc += self.table.coefficient(i) << bits;
        }
        let q = fixed_to_f64(&acc, x.bits);
        if q == 0.0 {
            return 0.0;
        }
        q * x.rho.powi(self.lowest_power() as i32)
    }
}

/// `ρ²` as an integer scaled by `2^bits`.
pub(crate) struct FixedSquare {
    pub(crate) bits: u32,
    pub(crate) rho: f64,
    value: BigInt,
}

impl FixedSquare {
    pub(crate) fn new(rho: f64, bits: u32) -> Self {
        let scaled = to_fixed(rho, bits);
        let value = (&scaled * &scaled) >> bits as usize;
        Self { bits, rho, value }
    }
}

/// `v·2^bits` truncated to an integer; exact whenever `v` has no bits below `2^-bits`.
fn to_fixed(v: f64, bits: u32) -> BigInt {
    let (mantissa, exponent, sign) = v.integer_decode();
    let magnitude = BigInt::from(mantissa);
    let shift = exponent as i64 + bits as i64;
    let scaled = if shift >= 0 {
        magnitude << shift as usize
    } else {
        magnitude >> (-shift) as usize
    };
    if sign < 0 {
        -scaled
    } else {
        scaled
    }
}

fn fixed_to_f64(v: &BigInt, frac_bits: u32) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let total = v.bits();
    let drop = total.saturating_sub(64);
    let top = (v.magnitude() >> drop).to_u64().expect("at most 64 bits remain") as f64;
    let signed = if v.sign() == Sign::Minus { -top } else { top };
    scale_by_power_of_two(signed, drop as i64 - frac_bits as i64)
}

fn scale_by_power_of_two(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

fn tables() -> &'static Mutex<Vec<Arc<HCoefficients>>> {
    static TABLES: OnceLock<Mutex<Vec<Arc<HCoefficients>>>> = OnceLock::new();
    TABLES.get_or_init(|| Mutex::new(Vec::new()))
}

/// Process-wide table covering at least `rows × cols`, built on first use.
pub(crate) fn shared_table(rows: usize, cols: usize) -> Arc<HCoefficients> {
    let mut cache = tables().lock().expect("coefficient table cache poisoned");
    if let Some(t) = cache.iter().find(|t| t.covers(rows, cols)) {
        return Arc::clone(t);
    }
    let table = Arc::new(HCoefficients::new(rows, cols));
    // A larger table makes any table it covers redundant.
    cache.retain(|t| !table.covers(t.rows, t.cols));
    cache.push(Arc::clone(&table));
    table
}

/// The square `Ñ × Ñ` coefficient table, cached for the life of the process.
pub fn h_polynomial_coefficients(order: usize) -> Arc<HCoefficients> {
    shared_table(order, order)
}
