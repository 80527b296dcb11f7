//! Bit-vector circuits over BDD nodes.
//!
//! A `BitVec` is a little-endian vector of functions, one per bit, with
//! two's-complement semantics. Arithmetic wraps at the vector width;
//! right shift replicates the sign bit. All widths of the operands of a
//! binary circuit must agree.

use super::{Bdd, BddError, NodeRef, Result, FALSE, TRUE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitVec {
    bits: Vec<NodeRef>,
}

impl BitVec {
    pub fn new(bits: Vec<NodeRef>) -> Self {
        BitVec { bits }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, i: usize) -> NodeRef {
        self.bits[i]
    }

    pub fn bits(&self) -> &[NodeRef] {
        &self.bits
    }

    pub fn msb(&self) -> NodeRef {
        *self.bits.last().expect("zero-width bit-vector")
    }
}

fn check_widths(a: &BitVec, b: &BitVec) -> Result<()> {
    if a.width() != b.width() {
        return Err(BddError::WidthMismatch { left: a.width(), right: b.width() });
    }
    Ok(())
}

/// Vector of fresh variables at the given levels (LSB first).
pub fn bv_var(bdd: &mut Bdd, levels: &[u32]) -> Result<BitVec> {
    let bits = levels.iter().map(|&l| bdd.var(l)).collect::<Result<_>>()?;
    Ok(BitVec::new(bits))
}

/// Constant vector. `value` must already be reduced to `width` bits
/// (callers wrap negative numbers to two's complement first).
pub fn bv_const(width: usize, value: u64) -> Result<BitVec> {
    if width < 64 && value >> width != 0 {
        return Err(BddError::WidthOverflow { value, width });
    }
    let bits = (0..width)
        .map(|i| if (value >> i) & 1 == 1 { TRUE } else { FALSE })
        .collect();
    Ok(BitVec::new(bits))
}

/// Reads a constant vector back, sign-extending to i64. `None` if any bit
/// is symbolic.
pub fn bv_as_const(v: &BitVec) -> Option<i64> {
    let mut raw: u64 = 0;
    for (i, &bit) in v.bits.iter().enumerate() {
        match bit {
            TRUE => raw |= 1 << i,
            FALSE => {}
            _ => return None,
        }
    }
    let w = v.width();
    if w < 64 && raw >> (w - 1) & 1 == 1 {
        raw |= u64::MAX << w;
    }
    Some(raw as i64)
}

pub fn bv_not(bdd: &mut Bdd, a: &BitVec) -> Result<BitVec> {
    let bits = a.bits.iter().map(|&b| bdd.not(b)).collect::<Result<_>>()?;
    Ok(BitVec::new(bits))
}

fn zip(
    bdd: &mut Bdd,
    a: &BitVec,
    b: &BitVec,
    f: impl Fn(&mut Bdd, NodeRef, NodeRef) -> Result<NodeRef>,
) -> Result<BitVec> {
    check_widths(a, b)?;
    let bits = a
        .bits
        .iter()
        .zip(&b.bits)
        .map(|(&x, &y)| f(bdd, x, y))
        .collect::<Result<_>>()?;
    Ok(BitVec::new(bits))
}

pub fn bv_and(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<BitVec> {
    zip(bdd, a, b, Bdd::and)
}

pub fn bv_or(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<BitVec> {
    zip(bdd, a, b, Bdd::or)
}

pub fn bv_xor(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<BitVec> {
    zip(bdd, a, b, Bdd::xor)
}

fn ripple(bdd: &mut Bdd, a: &BitVec, b: &BitVec, mut carry: NodeRef) -> Result<BitVec> {
    check_widths(a, b)?;
    let mut bits = Vec::with_capacity(a.width());
    for i in 0..a.width() {
        let (x, y) = (a.bits[i], b.bits[i]);
        let xy = bdd.xor(x, y)?;
        bits.push(bdd.xor(xy, carry)?);
        // carry' = (x ∧ y) ∨ (carry ∧ (x ⊕ y))
        let gen = bdd.and(x, y)?;
        let prop = bdd.and(carry, xy)?;
        carry = bdd.or(gen, prop)?;
    }
    Ok(BitVec::new(bits))
}

/// Wrapping addition.
pub fn bv_add(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<BitVec> {
    ripple(bdd, a, b, FALSE)
}

/// Wrapping subtraction: a + ¬b + 1.
pub fn bv_sub(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<BitVec> {
    let nb = bv_not(bdd, b)?;
    ripple(bdd, a, &nb, TRUE)
}

/// Two's-complement negation.
pub fn bv_neg(bdd: &mut Bdd, a: &BitVec) -> Result<BitVec> {
    let zero = bv_const(a.width(), 0)?;
    bv_sub(bdd, &zero, a)
}

/// Wrapping shift-and-add multiplication.
pub fn bv_mul(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<BitVec> {
    check_widths(a, b)?;
    let w = a.width();
    let mut acc = bv_const(w, 0)?;
    for i in 0..w {
        let gate = b.bits[i];
        if gate == FALSE {
            continue;
        }
        // (a << i) gated by bit i of b.
        let mut addend = Vec::with_capacity(w);
        for j in 0..w {
            let src = if j < i { FALSE } else { a.bits[j - i] };
            addend.push(bdd.and(src, gate)?);
        }
        acc = bv_add(bdd, &acc, &BitVec::new(addend))?;
    }
    Ok(acc)
}

pub fn bv_eq(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<NodeRef> {
    check_widths(a, b)?;
    let mut acc = TRUE;
    for i in 0..a.width() {
        let e = bdd.iff(a.bits[i], b.bits[i])?;
        acc = bdd.and(acc, e)?;
    }
    Ok(acc)
}

/// Unsigned less-than, built lexicographically (MSB decides last, so it
/// dominates).
pub fn bv_ult(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<NodeRef> {
    check_widths(a, b)?;
    let mut acc = FALSE;
    for i in 0..a.width() {
        let (x, y) = (a.bits[i], b.bits[i]);
        let nx = bdd.not(x)?;
        let strict = bdd.and(nx, y)?;
        let eq = bdd.iff(x, y)?;
        let keep = bdd.and(eq, acc)?;
        acc = bdd.or(strict, keep)?;
    }
    Ok(acc)
}

/// Signed less-than: unsigned comparison with both sign bits flipped.
pub fn bv_slt(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<NodeRef> {
    check_widths(a, b)?;
    let mut af = a.clone();
    let mut bf = b.clone();
    let w = a.width();
    af.bits[w - 1] = bdd.not(a.bits[w - 1])?;
    bf.bits[w - 1] = bdd.not(b.bits[w - 1])?;
    bv_ult(bdd, &af, &bf)
}

pub fn bv_sle(bdd: &mut Bdd, a: &BitVec, b: &BitVec) -> Result<NodeRef> {
    let gt = bv_slt(bdd, b, a)?;
    bdd.not(gt)
}

/// Left shift by a constant; vacated bits are zero.
pub fn bv_shl_const(bdd: &mut Bdd, a: &BitVec, k: usize) -> Result<BitVec> {
    let _ = bdd;
    let w = a.width();
    if k >= w {
        return Err(BddError::ShiftOutOfRange { amount: k, width: w });
    }
    let mut bits = vec![FALSE; k];
    bits.extend_from_slice(&a.bits[..w - k]);
    Ok(BitVec::new(bits))
}

/// Arithmetic right shift by a constant; vacated bits copy the sign.
pub fn bv_shr_const(bdd: &mut Bdd, a: &BitVec, k: usize) -> Result<BitVec> {
    let _ = bdd;
    let w = a.width();
    if k >= w {
        return Err(BddError::ShiftOutOfRange { amount: k, width: w });
    }
    let mut bits: Vec<NodeRef> = a.bits[k..].to_vec();
    bits.extend(std::iter::repeat(a.msb()).take(k));
    Ok(BitVec::new(bits))
}

/// Per-bit if-then-else.
pub fn bv_ite(bdd: &mut Bdd, cond: NodeRef, a: &BitVec, b: &BitVec) -> Result<BitVec> {
    check_widths(a, b)?;
    let bits = a
        .bits
        .iter()
        .zip(&b.bits)
        .map(|(&x, &y)| bdd.ite(cond, x, y))
        .collect::<Result<_>>()?;
    Ok(BitVec::new(bits))
}

/// Nonzero test: OR of all bits.
pub fn bv_nonzero(bdd: &mut Bdd, a: &BitVec) -> Result<NodeRef> {
    let mut acc = FALSE;
    for &bit in &a.bits {
        acc = bdd.or(acc, bit)?;
    }
    Ok(acc)
}

/// Unsigned quotient and remainder by a nonzero constant divisor, via
/// restoring division. A constant divisor keeps the circuit small: the
/// remainder register always holds a value below the divisor, so each
/// step's functions carry at most log2(divisor) bits of information
/// about the dividend prefix regardless of the vector width.
pub fn bv_udivrem_const(bdd: &mut Bdd, x: &BitVec, d: u64) -> Result<(BitVec, BitVec)> {
    debug_assert!(d != 0, "constant divisor must be nonzero");
    let w = x.width();
    // One extra bit: the remainder can reach 2*d - 1 after the shift-in,
    // and d itself can occupy all w bits.
    let ext = w + 1;
    let dvec = bv_const(ext, d)?;
    let mut r = bv_const(ext, 0)?;
    let mut qbits = vec![FALSE; w];
    for i in (0..w).rev() {
        let mut bits = Vec::with_capacity(ext);
        bits.push(x.bit(i));
        bits.extend_from_slice(&r.bits[..ext - 1]);
        let shifted = BitVec::new(bits);
        let lt = bv_ult(bdd, &shifted, &dvec)?;
        let ge = bdd.not(lt)?;
        let diff = bv_sub(bdd, &shifted, &dvec)?;
        r = bv_ite(bdd, ge, &diff, &shifted)?;
        qbits[i] = ge;
    }
    let rem = BitVec::new(r.bits[..w].to_vec());
    Ok((BitVec::new(qbits), rem))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh() -> Bdd {
        Bdd::new(1 << 22)
    }

    fn wrap(width: usize, v: i64) -> u64 {
        (v as u64) & if width == 64 { u64::MAX } else { (1u64 << width) - 1 }
    }

    fn sext(width: usize, raw: u64) -> i64 {
        let mut r = raw;
        if width < 64 && (raw >> (width - 1)) & 1 == 1 {
            r |= u64::MAX << width;
        }
        r as i64
    }

    #[test]
    fn const_roundtrip_and_overflow() {
        let v = bv_const(4, 0b1011).unwrap();
        assert_eq!(bv_as_const(&v), Some(sext(4, 0b1011)));
        assert_eq!(
            bv_const(4, 16),
            Err(BddError::WidthOverflow { value: 16, width: 4 })
        );
        // -1 at width 4 arrives pre-wrapped.
        let m1 = bv_const(4, wrap(4, -1)).unwrap();
        assert_eq!(bv_as_const(&m1), Some(-1));
    }

    #[test]
    fn add_sub_mul_on_constants_match_i64_wrapping() {
        let mut bdd = fresh();
        let w = 6;
        for a in -8i64..8 {
            for b in -8i64..8 {
                let va = bv_const(w, wrap(w, a)).unwrap();
                let vb = bv_const(w, wrap(w, b)).unwrap();
                let sum = bv_add(&mut bdd, &va, &vb).unwrap();
                let dif = bv_sub(&mut bdd, &va, &vb).unwrap();
                let pro = bv_mul(&mut bdd, &va, &vb).unwrap();
                assert_eq!(bv_as_const(&sum), Some(sext(w, wrap(w, a + b))));
                assert_eq!(bv_as_const(&dif), Some(sext(w, wrap(w, a - b))));
                assert_eq!(bv_as_const(&pro), Some(sext(w, wrap(w, a * b))));
            }
        }
    }

    #[test]
    fn udivrem_const_exhaustive_small_width() {
        let mut bdd = fresh();
        let w = 6;
        // Symbolic dividend over all values, every nonzero divisor.
        let levels: Vec<u32> = (0..w as u32).collect();
        let x = bv_var(&mut bdd, &levels).unwrap();
        for d in 1u64..(1 << w) {
            let (q, r) = bv_udivrem_const(&mut bdd, &x, d).unwrap();
            for val in 0u64..(1 << w) {
                let env: Vec<bool> = (0..w).map(|i| (val >> i) & 1 == 1).collect();
                let qv: u64 = (0..w)
                    .map(|i| (bdd.eval(q.bit(i), &env).unwrap() as u64) << i)
                    .sum();
                let rv: u64 = (0..w)
                    .map(|i| (bdd.eval(r.bit(i), &env).unwrap() as u64) << i)
                    .sum();
                assert_eq!(qv, val / d, "quotient {val}/{d}");
                assert_eq!(rv, val % d, "remainder {val}%{d}");
            }
        }
    }

    #[test]
    fn comparisons_on_constants() {
        let mut bdd = fresh();
        let w = 5;
        for a in -10i64..10 {
            for b in -10i64..10 {
                let va = bv_const(w, wrap(w, a)).unwrap();
                let vb = bv_const(w, wrap(w, b)).unwrap();
                assert_eq!(bv_eq(&mut bdd, &va, &vb).unwrap() == TRUE, a == b);
                assert_eq!(bv_slt(&mut bdd, &va, &vb).unwrap() == TRUE, a < b);
                assert_eq!(bv_sle(&mut bdd, &va, &vb).unwrap() == TRUE, a <= b);
                assert_eq!(
                    bv_ult(&mut bdd, &va, &vb).unwrap() == TRUE,
                    wrap(w, a) < wrap(w, b)
                );
            }
        }
    }

    #[test]
    fn symbolic_addition_commutes() {
        let mut bdd = fresh();
        let a = bv_var(&mut bdd, &[0, 2, 4]).unwrap();
        let b = bv_var(&mut bdd, &[1, 3, 5]).unwrap();
        let ab = bv_add(&mut bdd, &a, &b).unwrap();
        let ba = bv_add(&mut bdd, &b, &a).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn shifts() {
        let mut bdd = fresh();
        let v = bv_const(8, wrap(8, -100)).unwrap();
        let l = bv_shl_const(&mut bdd, &v, 2).unwrap();
        assert_eq!(bv_as_const(&l), Some(sext(8, wrap(8, -100i64 << 2))));
        let r = bv_shr_const(&mut bdd, &v, 2).unwrap();
        assert_eq!(bv_as_const(&r), Some(-100i64 >> 2));
        assert_eq!(
            bv_shl_const(&mut bdd, &v, 8),
            Err(BddError::ShiftOutOfRange { amount: 8, width: 8 })
        );
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mut bdd = fresh();
        let a = bv_const(4, 1).unwrap();
        let b = bv_const(5, 1).unwrap();
        assert_eq!(
            bv_add(&mut bdd, &a, &b),
            Err(BddError::WidthMismatch { left: 4, right: 5 })
        );
    }

    #[test]
    fn nonzero_and_ite() {
        let mut bdd = fresh();
        let zero = bv_const(4, 0).unwrap();
        let one = bv_const(4, 1).unwrap();
        assert_eq!(bv_nonzero(&mut bdd, &zero).unwrap(), FALSE);
        assert_eq!(bv_nonzero(&mut bdd, &one).unwrap(), TRUE);
        let c = bdd.var(9).unwrap();
        let picked = bv_ite(&mut bdd, c, &one, &zero).unwrap();
        // Under c=1 the result is 1, under c=0 it is 0: bit 0 equals c.
        assert_eq!(picked.bit(0), c);
        assert_eq!(bv_as_const(&picked), None);
    }

    #[test]
    fn negation_is_sub_from_zero() {
        let mut bdd = fresh();
        for a in -8i64..8 {
            let v = bv_const(5, wrap(5, a)).unwrap();
            let n = bv_neg(&mut bdd, &v).unwrap();
            assert_eq!(bv_as_const(&n), Some(sext(5, wrap(5, -a))));
        }
    }
}
