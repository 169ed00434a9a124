#pragma once

#include <complex>
#include <vector>

#include <nlohmann/json.hpp>

#include "jdiag/types.hpp"

namespace jdiag::cli {

using nlohmann::json;

inline json scalar_json(double x) { return x; }
inline json scalar_json(const std::complex<double>& x) { return json::array({x.real(), x.imag()}); }

template <typename Scalar>
json matrix_json(const Mat<Scalar>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(scalar_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
json list_json(const std::vector<T>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(scalar_json(x));
  return out;
}

inline json list_json(const std::vector<long long>& v) { return json(v); }
inline json list_json(const std::vector<int>& v) { return json(v); }

}  // namespace jdiag::cli
