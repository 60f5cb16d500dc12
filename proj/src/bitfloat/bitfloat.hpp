#pragma once

#include <cstdint>
#include <string>

#include "util/rational.hpp"

// Bit-level binary32 weight arithmetic on a fixed-point grid aligned to
// exponent 0. This module is the behavioural reference for the token-based
// weight-update pipeline: both must agree bit for bit.
//
// Supported values: finite, |v| < 2 (so bit 30 is always clear), no
// subnormals. Results are truncated toward zero; a carry out of the integer
// position saturates to +/-(2 - 2^-23).

namespace bitfloat {

constexpr int kMantissaBits = 23;
constexpr int kFractionBits = 47;   // 23 mantissa + 24 sticky positions
constexpr int kStickyBudgetW = 24;  // weight path: up to 126 alignment shifts
constexpr int kStickyBudgetJ = 4;   // update-term path: at most 4 shifts
constexpr int kNormalizeCap = 24;   // shifts available to the normalizer

struct Fp32Bits {
  std::uint32_t word = 0;

  bool operator==(const Fp32Bits&) const = default;
};

inline bool sign_bit(Fp32Bits b) { return (b.word >> 31) & 1u; }
inline std::uint32_t exponent_field(Fp32Bits b) { return (b.word >> 23) & 0xffu; }
inline std::uint32_t mantissa_field(Fp32Bits b) { return b.word & 0x7fffffu; }
inline bool is_zero(Fp32Bits b) { return (b.word & 0x7fffffffu) == 0; }

Fp32Bits make_bits(bool negative, std::uint32_t exponent, std::uint32_t mantissa);
std::string to_hex(Fp32Bits b);

// Throws std::invalid_argument unless the pattern is a supported weight:
// bit 30 clear (exponent <= 127, magnitude < 2) and not subnormal.
void validate(Fp32Bits b);

// Exact value of a supported pattern. Exponents below 88 would need a
// denominator beyond 2^62 and are rejected; every value the toolkit can
// produce stays far above that floor (the normalizer never emits an exponent
// under 103).
util::Rational decode(Fp32Bits b);

// Truncates |v| toward zero onto the binary32 grid. Magnitudes below the
// smallest supported normal collapse to +0. Pre: |v| < 2.
Fp32Bits encode(const util::Rational& v);

enum class MagnitudeOrder : std::uint8_t { WeightGreater, WeightLess, Same };

// Lexicographic comparison of bits 30..0, equivalent to comparing |w| and
// |j| numerically for supported patterns.
MagnitudeOrder compare_magnitude(Fp32Bits w, Fp32Bits j);

enum class UpdateOp : std::uint8_t { Add, Subtract, ZeroBypass };

struct SignOpResolution {
  UpdateOp op = UpdateOp::Add;
  bool result_negative = false;
};

// Decides add vs subtract and the result sign for w - j from the operand
// sign bits and the magnitude order. Equal magnitudes with equal signs give
// a canonical positive zero.
SignOpResolution resolve_sign_op(MagnitudeOrder order, bool w_negative, bool j_negative);

// Magnitude on the exponent-0 grid: guard (2^1), integer (2^0) and 47
// fraction bits with f1 stored at bit 46 of `frac` down to f47 at bit 0.
struct FixedPoint {
  bool guard = false;
  bool integer = false;
  std::uint64_t frac = 0;

  bool operator==(const FixedPoint&) const = default;
  bool all_zero() const { return !guard && !integer && frac == 0; }
};

struct AlignResult {
  FixedPoint fixed;
  int shift_count = 0;  // 127 - exponent; 0 for a zero input
};

// Places |b| onto the grid by shifting the significand right once per
// exponent step below 127. Fraction positions beyond 23 + sticky_budget are
// discarded (truncation toward zero).
AlignResult align(Fp32Bits b, int sticky_budget);

// Pre for both: operands already aligned to the same grid.
FixedPoint add_magnitudes(const FixedPoint& a, const FixedPoint& b);
// Schoolbook subtraction with the carry forwarded to the next minuend digit
// instead of borrowing. Pre: |a| >= |b|; guard bits clear.
FixedPoint sub_magnitudes(const FixedPoint& a, const FixedPoint& b);

struct NormalizeResult {
  std::uint32_t mantissa = 0;  // 23 bits
  int shifts = 0;
  bool zero = false;
};

// Shifts left until the integer bit holds a one, then truncates the fraction
// to 23 bits. An all-zero input, or one that would need more than
// kNormalizeCap shifts, yields the zero flag (encoded downstream as +0).
// Pre: guard resolved (clear).
NormalizeResult normalize(const FixedPoint& f);

inline int new_exponent(int norm_shifts) { return 127 - norm_shifts; }

struct UpdateOutcome {
  Fp32Bits result;
  MagnitudeOrder magnitude = MagnitudeOrder::Same;
  UpdateOp op = UpdateOp::ZeroBypass;
  int align_shifts_w = 0;
  int align_shifts_j = 0;
  int norm_shifts = 0;
  bool saturated = false;
};

// w_new = w - j for j in {0, +/-0.1 .. +/-0.9}; j is first truncated onto
// the binary32 grid by encode(). Exact-zero differences encode as +0.
// Unless saturated, |decode(result) - (decode(w) - decode(encode(j)))|
// stays within 2^-22.
UpdateOutcome update_weight(Fp32Bits w, const util::Rational& j);

}  // namespace bitfloat
