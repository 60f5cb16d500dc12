#include "bitfloat/bitfloat.hpp"

#include <stdexcept>

namespace bitfloat {

namespace {

constexpr std::uint64_t kFracMask = (std::uint64_t(1) << kFractionBits) - 1;

std::uint64_t grid_bits(const FixedPoint& f) {
  return (std::uint64_t(f.integer) << kFractionBits) | f.frac;
}

FixedPoint from_grid(std::uint64_t guard_int_frac) {
  FixedPoint f;
  f.guard = (guard_int_frac >> (kFractionBits + 1)) & 1;
  f.integer = (guard_int_frac >> kFractionBits) & 1;
  f.frac = guard_int_frac & kFracMask;
  return f;
}

}  // namespace

Fp32Bits make_bits(bool negative, std::uint32_t exponent, std::uint32_t mantissa) {
  if (exponent > 0xff || mantissa > 0x7fffffu) throw std::invalid_argument("field out of range");
  return Fp32Bits{(std::uint32_t(negative) << 31) | (exponent << 23) | mantissa};
}

std::string to_hex(Fp32Bits b) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x00000000";
  for (int i = 0; i < 8; ++i) s[9 - i] = digits[(b.word >> (4 * i)) & 0xf];
  return s;
}

void validate(Fp32Bits b) {
  if ((b.word >> 30) & 1u)
    throw std::invalid_argument("magnitude not below 2 (bit 30 set): " + to_hex(b));
  if (exponent_field(b) == 0 && mantissa_field(b) != 0)
    throw std::invalid_argument("subnormal patterns are not supported: " + to_hex(b));
}

util::Rational decode(Fp32Bits b) {
  validate(b);
  if (is_zero(b)) return util::Rational(0);
  std::uint32_t e = exponent_field(b);
  if (e < 88)
    throw std::domain_error("exponent below exact-rational floor: " + to_hex(b));
  std::int64_t significand = std::int64_t(mantissa_field(b)) | (std::int64_t(1) << kMantissaBits);
  if (sign_bit(b)) significand = -significand;
  // value = significand * 2^(e-127-23); the exponent field tops out at 127, so
  // the scale is always a division
  return util::Rational(significand, std::int64_t(1) << (127 + kMantissaBits - int(e)));
}

Fp32Bits encode(const util::Rational& v) {
  if (v.is_zero()) return Fp32Bits{0};
  util::Rational mag = v.abs();
  if (mag >= util::Rational(2)) throw std::invalid_argument("magnitude must be below 2: " + v.to_string());
  int k = 0;
  while (mag < util::Rational(1)) {
    mag = mag * util::Rational(2);
    if (++k > 126) return Fp32Bits{0};  // below the smallest supported normal
  }
  // mag in [1,2); peel 23 fraction bits, truncating the remainder
  std::uint32_t mantissa = 0;
  util::Rational rest = mag - util::Rational(1);
  for (int i = 0; i < kMantissaBits; ++i) {
    rest = rest * util::Rational(2);
    mantissa <<= 1;
    if (rest >= util::Rational(1)) {
      mantissa |= 1;
      rest = rest - util::Rational(1);
    }
  }
  return make_bits(v.negative(), std::uint32_t(127 - k), mantissa);
}

MagnitudeOrder compare_magnitude(Fp32Bits w, Fp32Bits j) {
  std::uint32_t mw = w.word & 0x7fffffffu, mj = j.word & 0x7fffffffu;
  if (mw > mj) return MagnitudeOrder::WeightGreater;
  if (mw < mj) return MagnitudeOrder::WeightLess;
  return MagnitudeOrder::Same;
}

SignOpResolution resolve_sign_op(MagnitudeOrder order, bool w_negative, bool j_negative) {
  SignOpResolution r;
  if (w_negative != j_negative) {
    r.op = UpdateOp::Add;
    r.result_negative = w_negative;
    return r;
  }
  r.op = UpdateOp::Subtract;
  switch (order) {
    case MagnitudeOrder::WeightGreater: r.result_negative = w_negative; break;
    case MagnitudeOrder::WeightLess: r.result_negative = !w_negative; break;
    case MagnitudeOrder::Same: r.result_negative = false; break;
  }
  return r;
}

AlignResult align(Fp32Bits b, int sticky_budget) {
  validate(b);
  AlignResult r;
  if (is_zero(b)) return r;
  int shift = 127 - int(exponent_field(b));
  r.shift_count = shift;
  std::uint64_t sig = std::uint64_t(mantissa_field(b)) | (std::uint64_t(1) << kMantissaBits);
  std::uint64_t grid = sig << (kFractionBits - kMantissaBits);  // implicit 1 at the integer slot
  grid = shift >= 64 ? 0 : grid >> shift;
  int kept_fractions = kMantissaBits + sticky_budget;
  if (kept_fractions < kFractionBits)
    grid &= ~((std::uint64_t(1) << (kFractionBits - kept_fractions)) - 1);
  r.fixed = from_grid(grid);
  return r;
}

FixedPoint add_magnitudes(const FixedPoint& a, const FixedPoint& b) {
  if (a.guard || b.guard) throw std::logic_error("guard bits must be clear before adding");
  return from_grid(grid_bits(a) + grid_bits(b));
}

FixedPoint sub_magnitudes(const FixedPoint& a, const FixedPoint& b) {
  if (a.guard || b.guard) throw std::logic_error("guard bits must be clear before subtracting");
  std::uint64_t av = grid_bits(a), bv = grid_bits(b);
  if (av < bv) throw std::logic_error("subtraction requires the larger magnitude first");
  // digit-serial with the carry forwarded into the next subtrahend position
  std::uint64_t out = 0;
  int carry = 0;
  for (int i = 0; i <= kFractionBits; ++i) {
    int d = int((av >> i) & 1) - int((bv >> i) & 1) - carry;
    carry = 0;
    if (d < 0) {
      d += 2;
      carry = 1;
    }
    out |= std::uint64_t(d) << i;
  }
  if (carry != 0) throw std::logic_error("underflow in magnitude subtraction");
  return from_grid(out);
}

NormalizeResult normalize(const FixedPoint& f) {
  if (f.guard) throw std::logic_error("normalize requires a resolved guard bit");
  NormalizeResult r;
  std::uint64_t grid = grid_bits(f);
  if (grid == 0) {
    r.zero = true;
    return r;
  }
  int lead = 0;
  while (((grid >> (kFractionBits - lead)) & 1) == 0) ++lead;
  if (lead > kNormalizeCap) {
    r.zero = true;  // below the normalizer's reach: flushes to zero
    return r;
  }
  r.shifts = lead;
  std::uint64_t shifted = grid << lead;
  r.mantissa = std::uint32_t((shifted >> (kFractionBits - kMantissaBits)) & 0x7fffffu);
  return r;
}

UpdateOutcome update_weight(Fp32Bits w, const util::Rational& j) {
  validate(w);
  UpdateOutcome out;
  if (j.is_zero()) {
    out.result = w;
    out.op = UpdateOp::ZeroBypass;
    return out;
  }
  Fp32Bits jb = encode(j);
  out.magnitude = compare_magnitude(w, jb);
  SignOpResolution res = resolve_sign_op(out.magnitude, sign_bit(w), sign_bit(jb));
  out.op = res.op;

  AlignResult aw = align(w, kStickyBudgetW);
  AlignResult aj = align(jb, kStickyBudgetJ);
  out.align_shifts_w = aw.shift_count;
  out.align_shifts_j = aj.shift_count;

  FixedPoint sum;
  if (res.op == UpdateOp::Add) {
    sum = add_magnitudes(aw.fixed, aj.fixed);
    if (sum.guard) {
      out.saturated = true;
      out.result = make_bits(res.result_negative, 127, 0x7fffffu);
      return out;
    }
  } else {
    const FixedPoint& big = out.magnitude == MagnitudeOrder::WeightLess ? aj.fixed : aw.fixed;
    const FixedPoint& small = out.magnitude == MagnitudeOrder::WeightLess ? aw.fixed : aj.fixed;
    sum = sub_magnitudes(big, small);
  }

  NormalizeResult norm = normalize(sum);
  if (norm.zero) {
    out.result = Fp32Bits{0};  // canonical positive zero
    return out;
  }
  out.norm_shifts = norm.shifts;
  out.result = make_bits(res.result_negative, std::uint32_t(new_exponent(norm.shifts)), norm.mantissa);
  return out;
}

}  // namespace bitfloat
