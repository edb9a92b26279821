#include "prodtrans/money.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace prodtrans {

namespace {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("Money: addition overflow");
  return out;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("Money: multiplication overflow");
  return out;
}

}  // namespace

Money Money::from_units(std::int64_t units) { return from_micros(checked_mul(units, kScale)); }

Money Money::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&]() -> Money {
    throw std::invalid_argument("Money: cannot parse '" + original + "' as an exact decimal");
  };
  if (text.empty()) return fail();
  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) return fail();

  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_dot) return fail();
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') return fail();
    seen_digit = true;
    const int digit = c - '0';
    if (seen_dot) {
      if (++frac_digits > kDecimals) {
        // Trailing zeros beyond the sixth decimal are harmless.
        if (digit != 0) return fail();
        --frac_digits;
        continue;
      }
      frac = frac * 10 + digit;
    } else {
      whole = checked_add(checked_mul(whole, 10), digit);
    }
  }
  if (!seen_digit) return fail();
  for (int i = frac_digits; i < kDecimals; ++i) frac *= 10;
  std::int64_t micros = checked_add(checked_mul(whole, kScale), frac);
  return from_micros(negative ? -micros : micros);
}

Money Money::from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("Money: non-finite value");
  const double scaled = value * static_cast<double>(kScale);
  if (std::fabs(scaled) > 9.0e15) throw std::overflow_error("Money: value out of exact range");
  const double rounded = std::nearbyint(scaled);
  if (std::fabs(rounded - scaled) > 1e-9 * std::max(1.0, std::fabs(scaled)) + 1e-6) {
    throw std::invalid_argument("Money: value has more than six decimals");
  }
  return from_micros(static_cast<std::int64_t>(rounded));
}

std::string Money::to_string() const {
  const bool negative = micros_ < 0;
  // Unsigned magnitude avoids UB at INT64_MIN.
  const std::uint64_t mag =
      negative ? ~static_cast<std::uint64_t>(micros_) + 1 : static_cast<std::uint64_t>(micros_);
  std::string out = negative ? "-" : "";
  out += std::to_string(mag / kScale);
  std::uint64_t frac = mag % kScale;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, kDecimals - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += '.';
    out += digits;
  }
  return out;
}

Money Money::operator-() const {
  if (micros_ == std::numeric_limits<std::int64_t>::min()) throw std::overflow_error("Money: negation overflow");
  return from_micros(-micros_);
}

Money& Money::operator+=(Money other) {
  micros_ = checked_add(micros_, other.micros_);
  return *this;
}

Money& Money::operator-=(Money other) { return *this += -other; }

Money& Money::operator*=(std::int64_t factor) {
  micros_ = checked_mul(micros_, factor);
  return *this;
}

}  // namespace prodtrans
