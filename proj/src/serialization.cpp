#include "fbfkit/serialization.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace fbfkit {

namespace {

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string(what) + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Eigen::VectorXd vector_from(const json& j, const char* what) {
  const auto v = numbers(j, what);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::size_t size_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<std::int64_t>() < 0) {
    throw ConfigError(std::string("'") + key + "' must be a nonnegative integer");
  }
  return j.at(key).get<std::size_t>();
}

json numbers_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* context) {
  if (!j.is_object()) throw ConfigError(std::string(context) + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) {
      throw ConfigError(std::string("unknown field '") + item.key() + "' in " + context);
    }
  }
}

json to_json(const BilinearSaddleOperator& F) {
  const Eigen::MatrixXd& A = F.A();
  json a = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) a.push_back(A(i, j));
  }
  return json{{"d", A.rows()}, {"n", A.cols()}, {"A", a},
              {"b", numbers_json(F.b())}, {"c", numbers_json(F.c())}, {"L", F.lipschitz()}};
}

std::shared_ptr<const OperatorOracle> operator_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("operator must be a JSON object");
  const std::string type = j.value("type", std::string("bilinear"));
  try {
    if (type == "affine") {
      check_keys(j, {"type", "m", "M", "q", "L"}, "affine operator");
      const std::size_t m = size_field(j, "m");
      const auto flat = numbers(j.at("M"), "M");
      if (flat.size() != m * m) throw ConfigError("M must have m*m entries");
      Eigen::MatrixXd M(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < m; ++k) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = flat[i * m + k];
      }
      const Eigen::VectorXd q = j.contains("q") ? vector_from(j.at("q"), "q")
                                                : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
      std::optional<double> L;
      if (j.contains("L")) L = j.at("L").get<double>();
      return std::make_shared<AffineOperator>(M, q, L);
    }
    if (type != "bilinear") throw ConfigError("unknown operator type '" + type + "'");
    check_keys(j, {"type", "d", "n", "A", "b", "c", "L"}, "bilinear operator");
    const std::size_t d = size_field(j, "d");
    const std::size_t n = size_field(j, "n");
    const auto flat = numbers(j.at("A"), "A");
    if (flat.size() != d * n) throw ConfigError("A must have d*n entries in row-major order");
    Eigen::MatrixXd A(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < n; ++k) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = flat[i * n + k];
    }
    const Eigen::VectorXd b = j.contains("b") ? vector_from(j.at("b"), "b")
                                              : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    const Eigen::VectorXd c = j.contains("c") ? vector_from(j.at("c"), "c")
                                              : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::optional<double> L;
    if (j.contains("L")) L = j.at("L").get<double>();
    return std::make_shared<BilinearSaddleOperator>(A, b, c, L);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  }
}

json to_json(const Regularizer& r) {
  if (dynamic_cast<const ZeroRegularizer*>(&r)) return json{{"type", "zero"}};
  if (const auto* l1 = dynamic_cast<const L1Regularizer*>(&r)) {
    return json{{"type", "l1"}, {"kappa", l1->kappa()}};
  }
  if (const auto* box = dynamic_cast<const BoxIndicator*>(&r)) {
    json out = to_json(box->box());
    out["type"] = "box";
    return out;
  }
  if (const auto* sep = dynamic_cast<const SeparableSum*>(&r)) {
    return json{{"type", "separable"}, {"f", to_json(sep->f())}, {"h", to_json(sep->h())}};
  }
  throw CapabilityError("regularizer '" + r.name() + "' has no JSON form");
}

std::shared_ptr<const Regularizer> regularizer_from_json(const json& j,
                                                         std::optional<SaddleSplit> split) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ConfigError("regularizer must be an object with a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  try {
    if (type == "zero") {
      check_keys(j, {"type"}, "zero regularizer");
      return std::make_shared<ZeroRegularizer>();
    }
    if (type == "l1") {
      check_keys(j, {"type", "kappa"}, "l1 regularizer");
      return std::make_shared<L1Regularizer>(j.at("kappa").get<double>());
    }
    if (type == "box") {
      check_keys(j, {"type", "lower", "upper"}, "box regularizer");
      return std::make_shared<BoxIndicator>(box_from_json(json{{"lower", j.at("lower")},
                                                               {"upper", j.at("upper")}}));
    }
    if (type == "separable") {
      check_keys(j, {"type", "f", "h"}, "separable regularizer");
      if (!split) throw ConfigError("separable regularizer needs a saddle split");
      auto f = regularizer_from_json(j.at("f"), std::nullopt);
      auto h = regularizer_from_json(j.at("h"), std::nullopt);
      return std::make_shared<SeparableSum>(f, h, *split);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("regularizer: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("regularizer: ") + e.what());
  }
  throw ConfigError("unknown regularizer type '" + type + "'");
}

json to_json(const CompactBox& b) {
  return json{{"lower", to_json(b.lower())}, {"upper", to_json(b.upper())}};
}

CompactBox box_from_json(const json& j) {
  check_keys(j, {"lower", "upper"}, "box");
  if (!j.contains("lower") || !j.contains("upper")) {
    throw ConfigError("box needs 'lower' and 'upper'");
  }
  try {
    return CompactBox(point_from_json(j.at("lower")), point_from_json(j.at("upper")));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("box: ") + e.what());
  }
}

json to_json(const Point& p) { return numbers_json(p.vec()); }

Point point_from_json(const json& j) {
  try {
    return Point(vector_from(j, "point"));
  } catch (const NonFiniteError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace fbfkit
