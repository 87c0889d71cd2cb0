#include "fbfkit/extended_real.hpp"

#include <cmath>
#include <limits>

namespace fbfkit {

ExtendedReal::ExtendedReal(double v) : value_(v) {
  if (std::isnan(v)) throw NonFiniteError("NaN is not an extended real");
  if (std::isinf(v)) {
    kind_ = v > 0 ? Kind::PosInf : Kind::NegInf;
    value_ = 0.0;
  }
}

double ExtendedReal::value() const {
  if (kind_ != Kind::Finite) throw NonFiniteError("extended real is infinite");
  return value_;
}

double ExtendedReal::to_double() const noexcept {
  switch (kind_) {
    case Kind::PosInf:
      return std::numeric_limits<double>::infinity();
    case Kind::NegInf:
      return -std::numeric_limits<double>::infinity();
    case Kind::Finite:
      break;
  }
  return value_;
}

ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
  if (a.is_pos_inf() || b.is_pos_inf()) return ExtendedReal::pos_inf();
  if (a.is_neg_inf() || b.is_neg_inf()) return ExtendedReal::neg_inf();
  return ExtendedReal(a.value_ + b.value_);
}

ExtendedReal operator-(ExtendedReal a) {
  switch (a.kind_) {
    case ExtendedReal::Kind::PosInf:
      return ExtendedReal::neg_inf();
    case ExtendedReal::Kind::NegInf:
      return ExtendedReal::pos_inf();
    case ExtendedReal::Kind::Finite:
      break;
  }
  return ExtendedReal(-a.value_);
}

ExtendedReal operator-(ExtendedReal a, ExtendedReal b) {
  // inf - inf is read as +inf.
  if (a.is_pos_inf() || b.is_neg_inf()) return ExtendedReal::pos_inf();
  if (a.is_neg_inf() || b.is_pos_inf()) return ExtendedReal::neg_inf();
  return ExtendedReal(a.value_ - b.value_);
}

std::strong_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
  if (a.kind_ != ExtendedReal::Kind::Finite) return std::strong_ordering::equal;
  if (a.value_ < b.value_) return std::strong_ordering::less;
  if (a.value_ > b.value_) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

ExtendedReal max(ExtendedReal a, ExtendedReal b) { return a < b ? b : a; }

std::ostream& operator<<(std::ostream& os, const ExtendedReal& v) {
  if (v.is_pos_inf()) return os << "+inf";
  if (v.is_neg_inf()) return os << "-inf";
  return os << v.value();
}

}  // namespace fbfkit
