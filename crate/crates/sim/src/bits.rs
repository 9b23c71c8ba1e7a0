//! Fixed-length bit strings, read as little-endian integers for modular
//! arithmetic.

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    len: usize,
    limbs: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            limbs: vec![0; len.div_ceil(64)],
        }
    }

    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        let mut b = Self {
            len,
            limbs: (0..len.div_ceil(64)).map(|_| rng.random()).collect(),
        };
        b.mask_top();
        b
    }

    pub fn from_u128(value: u128, len: usize) -> Self {
        let mut b = Self::zeros(len);
        for i in 0..len.min(128) {
            b.set(i, (value >> i) & 1 == 1);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.limbs[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        let m = 1u64 << (i % 64);
        if v {
            self.limbs[i / 64] |= m;
        } else {
            self.limbs[i / 64] &= !m;
        }
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a ^= b;
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.limbs.iter().map(|l| l.count_ones()).sum()
    }

    pub fn slice(&self, start: usize, len: usize) -> Bits {
        let mut out = Bits::zeros(len);
        for i in 0..len {
            out.set(i, self.get(start + i));
        }
        out
    }

    pub fn concat(parts: &[&Bits]) -> Bits {
        let mut out = Bits::zeros(parts.iter().map(|p| p.len).sum());
        let mut at = 0;
        for p in parts {
            for i in 0..p.len {
                out.set(at + i, p.get(i));
            }
            at += p.len;
        }
        out
    }

    pub fn to_u128(&self) -> Option<u128> {
        if self.len > 128 {
            return None;
        }
        Some(
            self.limbs
                .iter()
                .enumerate()
                .fold(0u128, |acc, (k, &l)| acc | (u128::from(l) << (64 * k))),
        )
    }

    fn mask_top(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.limbs.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    /// `self + other mod 2^len`, with `other` truncated to `len` bits.
    pub fn add_mod(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        let mut carry = 0u64;
        for (k, a) in out.limbs.iter_mut().enumerate() {
            let b = other.limbs.get(k).copied().unwrap_or(0);
            let (s1, c1) = a.overflowing_add(b);
            let (s2, c2) = s1.overflowing_add(carry);
            *a = s2;
            carry = u64::from(c1 || c2);
        }
        out.mask_top();
        out
    }

    /// `self - other mod 2^len`.
    pub fn sub_mod(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        let mut borrow = 0u64;
        for (k, a) in out.limbs.iter_mut().enumerate() {
            let b = other.limbs.get(k).copied().unwrap_or(0);
            let (s1, c1) = a.overflowing_sub(b);
            let (s2, c2) = s1.overflowing_sub(borrow);
            *a = s2;
            borrow = u64::from(c1 || c2);
        }
        out.mask_top();
        out
    }

    /// The first `len` bits, zero-extended if `self` is shorter.
    pub fn prefix(&self, len: usize) -> Bits {
        let mut out = Bits::zeros(len);
        for i in 0..len.min(self.len) {
            out.set(i, self.get(i));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn modular_arithmetic_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [0, 1, 7, 64, 65, 130] {
            let a = Bits::random(len, &mut rng);
            let k = Bits::random(len, &mut rng);
            assert_eq!(a.add_mod(&k).sub_mod(&k), a);
        }
    }

    #[test]
    fn addition_wraps() {
        let a = Bits::from_u128(0b111, 3);
        let b = Bits::from_u128(1, 3);
        assert_eq!(a.add_mod(&b).to_u128(), Some(0));
        let big = Bits::from_u128(u64::MAX as u128, 70);
        assert_eq!(big.add_mod(&Bits::from_u128(1, 70)).to_u128(), Some(1u128 << 64));
    }

    #[test]
    fn slicing_and_concatenation() {
        let a = Bits::from_u128(0b1011, 4);
        let b = Bits::from_u128(0b01, 2);
        let c = Bits::concat(&[&a, &b]);
        assert_eq!(c.to_u128(), Some(0b011011));
        assert_eq!(c.slice(4, 2), b);
        assert_eq!(c.prefix(8).to_u128(), Some(0b011011));
    }
}
