#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

// Small exact rationals. Domain values in this project are integers and
// tenths, so int64 components are plenty; arithmetic checks stay exact by
// cross-multiplying through __int128.

namespace util {

class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(implicit)
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) { reduce(); }

  static Rational tenths(std::int64_t t) { return Rational(t, 10); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  bool negative() const { return num_ < 0; }

  std::int64_t as_integer() const {
    if (den_ != 1) throw std::logic_error("rational is not an integer: " + to_string());
    return num_;
  }

  Rational operator-() const { return Rational(-num_, den_, NoReduce{}); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return Rational(a.num_ * b.den_, a.den_ * b.num_);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return (__int128)a.num_ * b.den_ < (__int128)b.num_ * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  Rational abs() const { return num_ < 0 ? -*this : *this; }

  double to_double() const { return double(num_) / double(den_); }

  // Exact decimal when the denominator is 2^a*5^b, else "num/den".
  std::string to_string() const {
    std::int64_t d = den_;
    int twos = 0, fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
    int k = twos > fives ? twos : fives;
    __int128 scaled = num_;
    for (int i = 0; i < k; ++i) scaled *= 10;
    scaled /= den_;
    bool neg = scaled < 0;
    if (neg) scaled = -scaled;
    std::string digits;
    if (scaled == 0) digits = "0";
    while (scaled > 0) {
      digits.insert(digits.begin(), char('0' + int(scaled % 10)));
      scaled /= 10;
    }
    while (int(digits.size()) <= k) digits.insert(digits.begin(), '0');
    if (k > 0) digits.insert(digits.end() - k, '.');
    return (neg ? "-" : "") + digits;
  }

  std::uint64_t hash() const {
    std::uint64_t h = std::uint64_t(num_) * 0x9e3779b97f4a7c15ull;
    return h ^ (std::uint64_t(den_) + 0x7f4a7c15u + (h << 6) + (h >> 2));
  }

 private:
  struct NoReduce {};
  Rational(std::int64_t num, std::int64_t den, NoReduce) : num_(num), den_(den) {}

  void reduce() {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (den_ < 0) { num_ = -num_; den_ = -den_; }
    std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) { num_ /= g; den_ /= g; }
    if (num_ == 0) den_ = 1;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace util
