#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faf/types.hpp"

namespace faf {

/// Injective scalar encoding of bounded vectors via ternary digit
/// interleaving. Each input coordinate in [0,1] is quantized to
/// `precision_m` binary digits; the output places digit j of coordinate p
/// (doubled, so it lies in {0,2}) at ternary position d*(j-1)+p. Distinct
/// quantized inputs map to distinct codewords, and the codeword always
/// lies in the Cantor set at the encoded precision.
///
/// Codewords with up to kMaxExactDigits ternary digits round-trip exactly
/// through a long double; beyond that the encoding is evaluated in
/// floating point (deep digits underflow) and decoding is refused.
class KaEncoder {
 public:
  static constexpr int kMaxExactDigits = 40;

  explicit KaEncoder(int precision_m = 20) : m_(precision_m) {
    if (m_ < 1 || m_ > kMaxExactDigits) {
      throw DataError("ka precision must be in [1, " + std::to_string(kMaxExactDigits) + "]");
    }
  }

  int precision() const { return m_; }

  /// Quantizes x in [0,1] to its first m binary digits; x = 1 maps to the
  /// all-ones digit string.
  std::uint64_t quantize(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw DataError("ka input " + std::to_string(x) + " outside [0, 1]");
    }
    const double scaled = std::ldexp(x, m_);
    auto q = static_cast<std::uint64_t>(scaled);
    const std::uint64_t top = (std::uint64_t{1} << m_) - 1;
    return q > top ? top : q;
  }

  /// Monotone map into the Cantor set: binary digits b_1..b_m of x become
  /// ternary digits 2*b_j.
  double phi_scalar(double x) const {
    const std::uint64_t q = quantize(x);
    std::uint64_t num = 0;  // sum of 2*b_j * 3^(m-j), exact
    for (int j = 1; j <= m_; ++j) {
      const std::uint64_t bit = (q >> (m_ - j)) & 1u;
      num += 2 * bit * pow3_u64(m_ - j);
    }
    return static_cast<double>(static_cast<long double>(num) / pow3_ld(m_));
  }

  /// Interleaved encoding of an ordered list of d >= 1 values in [0,1].
  long double aggregate(std::span<const double> values) const {
    const int d = static_cast<int>(values.size());
    if (d < 1) throw DataError("ka aggregate requires at least one value");
    std::vector<std::uint64_t> q(values.size());
    for (int p = 0; p < d; ++p) q[static_cast<std::size_t>(p)] = quantize(values[static_cast<std::size_t>(p)]);

    const long long digits = static_cast<long long>(d) * m_;
    if (digits <= kMaxExactDigits) {
      std::uint64_t num = 0;  // sum of t_pos * 3^(digits - pos), exact
      for (int j = 1; j <= m_; ++j) {
        for (int p = 1; p <= d; ++p) {
          const int pos = d * (j - 1) + p;
          const std::uint64_t bit = (q[static_cast<std::size_t>(p - 1)] >> (m_ - j)) & 1u;
          num += 2 * bit * pow3_u64(static_cast<int>(digits) - pos);
        }
      }
      return static_cast<long double>(num) / pow3_ld(static_cast<int>(digits));
    }

    // Too many digits for exact arithmetic: Horner evaluation, deepest
    // digit first. Positions beyond long double precision underflow.
    long double z = 0.0L;
    for (long long pos = digits; pos >= 1; --pos) {
      const int j = static_cast<int>((pos - 1) / d) + 1;
      const int p = static_cast<int>((pos - 1) % d) + 1;
      const std::uint64_t bit = (q[static_cast<std::size_t>(p - 1)] >> (m_ - j)) & 1u;
      z = (z + static_cast<long double>(2 * bit)) / 3.0L;
    }
    return z;
  }

  /// Recovers the d quantized coordinates from a codeword. Requires
  /// d * precision <= kMaxExactDigits; rejects any value whose ternary
  /// digit window contains a 1 (not a codeword).
  std::vector<double> decode(long double z, int d) const {
    if (d < 1) throw DataError("ka decode requires d >= 1");
    const long long digits = static_cast<long long>(d) * m_;
    if (digits > kMaxExactDigits) {
      throw DataError("ka decode: " + std::to_string(digits) + " ternary digits exceed the exactly decodable " +
                      std::to_string(kMaxExactDigits));
    }
    if (!(z >= 0.0L && z < 1.0L)) throw DataError("ka decode: codeword outside [0, 1)");

    const int n = static_cast<int>(digits);
    const std::uint64_t scale = pow3_u64(n);
    const unsigned __int128 codeword = reconstruct_numerator(z, scale);
    if (codeword >= scale) throw DataError("ka decode: value is not a codeword at this precision");

    // Peel ternary digits, least significant (deepest position) first.
    std::vector<std::uint64_t> q(static_cast<std::size_t>(d), 0);
    unsigned __int128 rest = codeword;
    for (int pos = n; pos >= 1; --pos) {
      const auto t = static_cast<int>(rest % 3);
      rest /= 3;
      if (t == 1) {
        throw DataError("ka decode: ternary digit 1 at position " + std::to_string(pos) + "; not a codeword");
      }
      if (t == 2) {
        const int j = (pos - 1) / d + 1;
        const int p = (pos - 1) % d + 1;
        q[static_cast<std::size_t>(p - 1)] |= std::uint64_t{1} << (m_ - j);
      }
    }

    std::vector<double> out(static_cast<std::size_t>(d));
    for (int p = 0; p < d; ++p) {
      out[static_cast<std::size_t>(p)] = std::ldexp(static_cast<double>(q[static_cast<std::size_t>(p)]), -m_);
    }
    return out;
  }

 private:
  /// Integer numerator round(z * scale), computed without floating-point
  /// products so the half-ulp error of z cannot be amplified past 1/2.
  static unsigned __int128 reconstruct_numerator(long double z, std::uint64_t scale) {
    if (z == 0.0L) return 0;
    int exp = 0;
    const long double frac = std::frexp(z, &exp);           // z = frac * 2^exp, frac in [0.5, 1)
    const auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 64));  // exact: 64-bit significand
    const unsigned __int128 prod = static_cast<unsigned __int128>(mant) * scale;
    const int shift = 64 - exp;  // z * scale = prod * 2^(-shift)
    if (shift <= 0) return prod << (-shift);
    if (shift >= 128) return 0;
    return (prod + (static_cast<unsigned __int128>(1) << (shift - 1))) >> shift;
  }

  static std::uint64_t pow3_u64(int e) {
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) r *= 3;
    return r;
  }

  static long double pow3_ld(int e) { return static_cast<long double>(pow3_u64(e)); }

  int m_;
};

}  // namespace faf
