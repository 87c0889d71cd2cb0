#pragma once

#include <compare>
#include <ostream>

#include "fbfkit/errors.hpp"

namespace fbfkit {

/// A value of R ∪ {-inf, +inf}. Infinity is a tag, never a float payload, so
/// it cannot leak into arithmetic on points. Subtraction follows the gap
/// convention (+inf) - (+inf) := +inf.
class ExtendedReal {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  constexpr ExtendedReal() = default;
  ExtendedReal(double v);  // NOLINT(google-explicit-constructor)

  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf); }
  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf); }

  constexpr Kind kind() const noexcept { return kind_; }
  constexpr bool is_finite() const noexcept { return kind_ == Kind::Finite; }
  constexpr bool is_pos_inf() const noexcept { return kind_ == Kind::PosInf; }
  constexpr bool is_neg_inf() const noexcept { return kind_ == Kind::NegInf; }

  /// The finite value; throws if infinite.
  double value() const;
  /// The value as an IEEE double (+-inf for the tags). For output only.
  double to_double() const noexcept;

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b);
  friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b);
  friend ExtendedReal operator-(ExtendedReal a);

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::Finite || a.value_ == b.value_);
  }
  friend std::strong_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b);

 private:
  constexpr explicit ExtendedReal(Kind k) : kind_(k) {}

  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

ExtendedReal max(ExtendedReal a, ExtendedReal b);
std::ostream& operator<<(std::ostream& os, const ExtendedReal& v);

}  // namespace fbfkit
