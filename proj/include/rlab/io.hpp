#ifndef RLAB_IO_HPP
#define RLAB_IO_HPP

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlab/channels.hpp"
#include "rlab/montecarlo.hpp"
#include "rlab/quantum_core.hpp"

namespace rlab::io {

using json = nlohmann::json;

// Complex numbers are [re, im] pairs; matrices are row-major arrays of rows.

inline json to_json(const CVector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

inline json to_json(const CMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline cplx complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline CVector vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of [re, im] pairs");
  CVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i]);
  return v;
}

inline CMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw std::invalid_argument("ragged matrix rows");
    for (Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

/// { "N": int, "D": int, "weights": [...], "unitaries": [D x N x N of [re, im]] }
inline json to_json(const RandomUnitaryChannel& ch) {
  json j;
  j["N"] = ch.dim();
  j["D"] = ch.kraus_count();
  j["weights"] = std::vector<double>(ch.weights().values().begin(), ch.weights().values().end());
  json us = json::array();
  for (const auto& u : ch.unitaries()) us.push_back(to_json(u));
  j["unitaries"] = std::move(us);
  return j;
}

inline RandomUnitaryChannel channel_from_json(const json& j) {
  const auto n = j.at("N").get<Index>();
  const auto d = j.at("D").get<Index>();
  auto w = j.at("weights").get<std::vector<double>>();
  const json& us = j.at("unitaries");
  if (static_cast<Index>(w.size()) != d || static_cast<Index>(us.size()) != d)
    throw std::invalid_argument("channel file: weights/unitaries length does not match D");
  std::vector<CMatrix> mats;
  for (const auto& u : us) {
    CMatrix m = matrix_from_json(u);
    if (m.rows() != n || m.cols() != n) throw std::invalid_argument("channel file: unitary is not N x N");
    mats.push_back(std::move(m));
  }
  return RandomUnitaryChannel(std::move(mats), WeightVector(std::move(w)));
}

inline json to_json(const PureState& psi) {
  return json{{"dim", psi.dim()}, {"amplitudes", to_json(psi.amplitudes())}};
}

inline PureState state_from_json(const json& j) {
  CVector v = vector_from_json(j.at("amplitudes"));
  if (j.contains("dim") && j["dim"].get<Index>() != v.size()) throw std::invalid_argument("state file: dim mismatch");
  return PureState(std::move(v));
}

inline json to_json(const ConcentrationReport& r) {
  return json{{"D", r.D},
              {"N", r.N},
              {"trials", r.trials},
              {"deviations", r.deviations},
              {"median_deviation", r.median_deviation},
              {"scaled_median", r.scaled_median}};
}

inline json to_json(const NearEventReport& r) {
  return json{{"trials", r.trials},
              {"y0", r.y0},
              {"fitted_y", r.fitted_y},
              {"residuals", r.residuals},
              {"least_squares_y", r.least_squares_y},
              {"fraction_above_y0", r.fraction_above_y0},
              {"median_residual", r.median_residual}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return json::parse(in);
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << '\n';
}

}  // namespace rlab::io

#endif  // RLAB_IO_HPP
