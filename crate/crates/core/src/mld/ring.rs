use crate::{Error, Result};

/// Largest supported extension degree.
pub const MAX_DEGREE: usize = 16;

/// Irreducible polynomials over GF(2), indexed by degree, as bitmasks
/// including the leading term.
const IRREDUCIBLE: [u32; MAX_DEGREE + 1] = [
    0, 0b11, 0b111, 0b1011, 0x13, 0x25, 0x43, 0x83, 0x11B, 0x211, 0x409, 0x805, 0x1053, 0x201B,
    0x4443, 0x8003, 0x1100B,
];

/// Extension degree used for a degree bound `k`: `max(1, ⌈log2(2k)⌉ + 2)`.
pub fn extension_degree(k: usize) -> usize {
    if k == 0 {
        return 1;
    }
    let ceil_log = usize::BITS - (2 * k - 1).leading_zeros();
    (ceil_log as usize + 2).max(1)
}

/// Tabulated irreducible polynomial of degree `d`.
pub fn irreducible(d: usize) -> Result<u32> {
    IRREDUCIBLE
        .get(d)
        .copied()
        .filter(|&q| q != 0)
        .ok_or_else(|| Error::InvalidParameter(format!("no irreducible polynomial of degree {d}")))
}

/// `Z_{2^{k+1}}[z] / (q(z))`, with `q` irreducible over GF(2) of degree `d`.
///
/// Elements are `d` coefficients stored low degree first, each kept reduced
/// modulo `2^{k+1}` by masking. Wrapping `u64` arithmetic is exact modulo
/// `2^{k+1}` as long as `k + 1 <= 64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ring {
    k: usize,
    d: usize,
    q: u32,
    mask: u64,
}

impl Ring {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        Self::with_modulus(k, d, irreducible(d)?)
    }

    pub fn with_modulus(k: usize, d: usize, q: u32) -> Result<Self> {
        if k == 0 || k >= 63 {
            return Err(Error::InvalidParameter(format!("degree bound {k} out of range")));
        }
        if d == 0 || d > MAX_DEGREE || q >> d != 1 {
            return Err(Error::InvalidParameter(format!("modulus {q:#x} is not of degree {d}")));
        }
        Ok(Self { k, d, q, mask: (1u64 << (k + 1)) - 1 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.d]
    }

    pub fn one(&self) -> Vec<u64> {
        let mut e = self.zero();
        e[0] = 1;
        e
    }

    /// Lifts a GF(2^d) element given as a bitmask.
    pub fn from_bits(&self, bits: u32) -> Vec<u64> {
        (0..self.d).map(|i| (bits >> i & 1) as u64).collect()
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| x.wrapping_add(*y) & self.mask).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = self.zero();
        let mut wide = [0u64; 2 * MAX_DEGREE];
        self.mul_into(a, b, &mut out, &mut wide);
        out
    }

    /// `out = a * b`; `wide` is scratch of at least `2d - 1` words.
    #[inline]
    pub fn mul_into(&self, a: &[u64], b: &[u64], out: &mut [u64], wide: &mut [u64]) {
        let d = self.d;
        wide[..2 * d - 1].fill(0);
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                wide[i + j] = wide[i + j].wrapping_add(x.wrapping_mul(y));
            }
        }
        self.reduce_into(wide, out);
    }

    /// Reduces a `2d - 1` word product modulo `q` and `2^{k+1}`.
    #[inline]
    pub fn reduce_into(&self, wide: &mut [u64], out: &mut [u64]) {
        let d = self.d;
        let low = self.q & ((1 << d) - 1);
        for j in (d..2 * d - 1).rev() {
            let top = wide[j];
            if top == 0 {
                continue;
            }
            let mut bits = low;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                wide[j - d + i] = wide[j - d + i].wrapping_sub(top);
                bits &= bits - 1;
            }
        }
        for (o, &w) in out.iter_mut().zip(wide.iter()) {
            *o = w & self.mask;
        }
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&x| x & self.mask == 0)
    }
}

/// Trial-division irreducibility test over GF(2).
pub fn is_irreducible(q: u32) -> bool {
    let deg = 31 - q.leading_zeros();
    if q == 0 || deg == 0 {
        return false;
    }
    let gf2_rem = |mut a: u32, b: u32| {
        let db = 31 - b.leading_zeros();
        while a != 0 && 31 - a.leading_zeros() >= db {
            a ^= b << (31 - a.leading_zeros() - db);
        }
        a
    };
    (2u32..1 << (deg / 2 + 1)).filter(|&p| 31 - p.leading_zeros() <= deg / 2).all(|p| gf2_rem(q, p) != 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_is_irreducible() {
        for d in 1..=MAX_DEGREE {
            let q = irreducible(d).unwrap();
            assert_eq!(31 - q.leading_zeros(), d as u32);
            assert!(is_irreducible(q), "degree {d}");
        }
        assert!(!is_irreducible(0b101));
        assert!(!is_irreducible(0b1111));
    }

    #[test]
    fn extension_degrees() {
        assert_eq!(extension_degree(1), 3);
        assert_eq!(extension_degree(2), 4);
        assert_eq!(extension_degree(3), 5);
        assert_eq!(extension_degree(4), 5);
        assert_eq!(extension_degree(10), 7);
    }

    #[test]
    fn square_of_z_plus_one() {
        // In Z_8[z]/(z^2+z+1): (z+1)^2 = z^2 + 2z + 1 = (-z - 1) + 2z + 1 = z.
        let r = Ring::new(2, 2).unwrap();
        assert_eq!(r.mul(&[1, 1], &[1, 1]), vec![0, 1]);
    }

    #[test]
    fn masking_wraps() {
        let r = Ring::new(2, 2).unwrap();
        assert_eq!(r.add(&[7, 4], &[1, 4]), vec![0, 0]);
        assert_eq!(r.mul(&[2, 0], &[4, 0]), vec![0, 0]);
    }

    fn element(d: usize) -> impl Strategy<Value = Vec<u64>> {
        proptest::collection::vec(0u64..64, d)
    }

    proptest! {
        #[test]
        fn ring_axioms(a in element(4), b in element(4), c in element(4)) {
            let r = Ring::new(5, 4).unwrap();
            let m = |v: &Vec<u64>| v.iter().map(|x| x & r.mask()).collect::<Vec<_>>();
            let (a, b, c) = (m(&a), m(&b), m(&c));
            prop_assert_eq!(r.mul(&a, &b), r.mul(&b, &a));
            prop_assert_eq!(r.mul(&r.mul(&a, &b), &c), r.mul(&a, &r.mul(&b, &c)));
            prop_assert_eq!(r.mul(&a, &r.add(&b, &c)), r.add(&r.mul(&a, &b), &r.mul(&a, &c)));
            prop_assert_eq!(r.mul(&a, &r.one()), a.clone());
        }

        #[test]
        fn nonzero_field_elements_have_no_zero_products(x in 1u32..32, y in 1u32..32) {
            // Reduced mod 2 the ring is GF(2^5), which has no zero divisors.
            let r = Ring::new(1, 5).unwrap();
            let p = r.mul(&r.from_bits(x), &r.from_bits(y));
            prop_assert!(p.iter().any(|c| c & 1 == 1));
        }
    }
}
