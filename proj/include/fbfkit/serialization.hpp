#pragma once

#include <initializer_list>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fbfkit/core.hpp"
#include "fbfkit/operators.hpp"
#include "fbfkit/regularizers.hpp"

namespace fbfkit {

using json = nlohmann::json;

/// Throws ConfigError if `j` is not an object or has a key outside `allowed`.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* context);

/// {d, n, A (row-major), b, c, L}
json to_json(const BilinearSaddleOperator& F);
/// Bilinear by default; {"type": "affine", "M": [...], "q": [...], "L": ...}
/// describes an AffineOperator.
std::shared_ptr<const OperatorOracle> operator_from_json(const json& j);

/// {"type":"zero"}, {"type":"l1","kappa":k}, {"type":"box","lower":[..],"upper":[..]},
/// {"type":"separable","f":..,"h":..}. A separable regularizer takes its
/// block sizes from `split`.
json to_json(const Regularizer& r);
std::shared_ptr<const Regularizer> regularizer_from_json(const json& j,
                                                         std::optional<SaddleSplit> split);

json to_json(const CompactBox& b);
CompactBox box_from_json(const json& j);

json to_json(const Point& p);
Point point_from_json(const json& j);

}  // namespace fbfkit
