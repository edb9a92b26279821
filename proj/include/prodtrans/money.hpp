#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace prodtrans {

/// Exact monetary amount stored as a signed count of millionths.
///
/// Instance data (revenues, unit costs) is read from decimal text and must
/// round-trip without loss, and objective values are compared for exact
/// equality between solvers. Every arithmetic operation checks for int64
/// overflow and throws std::overflow_error instead of wrapping.
class Money {
 public:
  static constexpr std::int64_t kScale = 1'000'000;
  static constexpr int kDecimals = 6;

  constexpr Money() = default;

  static constexpr Money from_micros(std::int64_t micros) {
    Money m;
    m.micros_ = micros;
    return m;
  }
  static Money from_units(std::int64_t units);

  /// Parses "12", "-3.25", "0.000001". More than six fractional digits, an
  /// exponent, or trailing garbage throws std::invalid_argument.
  static Money parse(std::string_view text);

  /// Converts a double that is an exact multiple of 1e-6 (within 1e-9
  /// relative slack); anything else throws std::invalid_argument.
  static Money from_double(double value);

  constexpr std::int64_t micros() const { return micros_; }
  double to_double() const { return static_cast<double>(micros_) / kScale; }
  bool is_integral() const { return micros_ % kScale == 0; }
  /// Whole units; only meaningful when is_integral().
  std::int64_t units() const { return micros_ / kScale; }

  /// Shortest decimal representation ("12", "12.5", "-0.000001").
  std::string to_string() const;

  Money operator-() const;
  Money& operator+=(Money other);
  Money& operator-=(Money other);
  Money& operator*=(std::int64_t factor);

  friend Money operator+(Money a, Money b) { return a += b; }
  friend Money operator-(Money a, Money b) { return a -= b; }
  friend Money operator*(Money a, std::int64_t k) { return a *= k; }
  friend Money operator*(std::int64_t k, Money a) { return a *= k; }

  friend constexpr bool operator==(Money, Money) = default;
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  std::int64_t micros_ = 0;
};

}  // namespace prodtrans
