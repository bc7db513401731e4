#ifndef BON_RATIO_HPP
#define BON_RATIO_HPP

// Exact nonnegative rational, used for the scheduling objective P/(L+1).
// Comparison is integer cross-multiplication, so equal objectives compare
// equal regardless of magnitude and ties are never decided by float rounding.

#include <cstdint>
#include <stdexcept>

namespace bon {

struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Ratio() = default;
  Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (d <= 0) throw std::invalid_argument("Ratio: denominator must be positive");
    if (n < 0) throw std::invalid_argument("Ratio: negative value");
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator!=(const Ratio& a, const Ratio& b) { return !(a == b); }
  friend bool operator<(const Ratio& a, const Ratio& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator>(const Ratio& a, const Ratio& b) { return b < a; }
  friend bool operator<=(const Ratio& a, const Ratio& b) { return !(b < a); }
  friend bool operator>=(const Ratio& a, const Ratio& b) { return !(a < b); }
};

}  // namespace bon

#endif  // BON_RATIO_HPP
