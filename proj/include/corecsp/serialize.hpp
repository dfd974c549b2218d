#pragma once

#include <json.hpp>

#include "corecsp/coreset.hpp"
#include "corecsp/csp.hpp"
#include "corecsp/lda.hpp"

namespace corecsp {

namespace detail {

inline nlohmann::json matrix_row_major(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

inline Eigen::MatrixXd matrix_from_row_major(const nlohmann::json& j, Eigen::Index rows,
                                             Eigen::Index cols, const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows * cols))
    throw parse_error(std::string(what) + ": expected " + std::to_string(rows * cols) +
                      " numbers");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[i++].get<double>();
  return m;
}

}  // namespace detail

// Checkpoint schema: {"d", "sample_count", "k", "basis_scaled" (row-major d x k)}.
inline nlohmann::json coreset_to_json(const ScatterCoreset& coreset) {
  return {{"d", coreset.channels()},
          {"sample_count", coreset.sample_count()},
          {"k", coreset.column_count()},
          {"basis_scaled", detail::matrix_row_major(coreset.basis())}};
}

inline ScatterCoreset coreset_from_json(const nlohmann::json& j) {
  try {
    const auto d = j.at("d").get<Eigen::Index>();
    const auto k = j.at("k").get<Eigen::Index>();
    const auto samples = j.at("sample_count").get<std::int64_t>();
    if (d < 1) throw parse_error("coreset checkpoint: d must be >= 1");
    if (k < 0 || k > d + 1) throw parse_error("coreset checkpoint: k out of range");
    const Eigen::MatrixXd basis =
        detail::matrix_from_row_major(j.at("basis_scaled"), d, k, "coreset basis");
    return ScatterCoreset::restored(d, basis, samples);
  } catch (const nlohmann::json::exception& ex) {
    throw parse_error(std::string("coreset checkpoint: ") + ex.what());
  }
}

// Filter-bank export: {"d", "m", "eigenvalues", "filters" (row-major d x d)}.
inline nlohmann::json filter_bank_to_json(const SpatialFilterBank& bank) {
  nlohmann::json eigenvalues = nlohmann::json::array();
  for (Eigen::Index i = 0; i < bank.eigenvalues.size(); ++i)
    eigenvalues.push_back(bank.eigenvalues[i]);
  return {{"d", bank.channels()},
          {"m", bank.selected_per_side},
          {"eigenvalues", std::move(eigenvalues)},
          {"filters", detail::matrix_row_major(bank.filters)}};
}

inline SpatialFilterBank filter_bank_from_json(const nlohmann::json& j) {
  try {
    SpatialFilterBank bank;
    const auto d = j.at("d").get<Eigen::Index>();
    bank.selected_per_side = j.at("m").get<int>();
    bank.filters = detail::matrix_from_row_major(j.at("filters"), d, d, "filter bank");
    const auto& ev = j.at("eigenvalues");
    if (!ev.is_array() || ev.size() != static_cast<std::size_t>(d))
      throw parse_error("filter bank: eigenvalues must have d entries");
    bank.eigenvalues.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) bank.eigenvalues[i] = ev[static_cast<std::size_t>(i)].get<double>();
    return bank;
  } catch (const nlohmann::json::exception& ex) {
    throw parse_error(std::string("filter bank: ") + ex.what());
  }
}

// Classifier export: {"w", "c", "p"}.
inline nlohmann::json lda_model_to_json(const LdaModel& model) {
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) w.push_back(model.weights[i]);
  return {{"w", std::move(w)}, {"c", model.threshold}, {"p", model.dim()}};
}

inline LdaModel lda_model_from_json(const nlohmann::json& j) {
  try {
    LdaModel model;
    const auto p = j.at("p").get<Eigen::Index>();
    const auto& w = j.at("w");
    if (!w.is_array() || w.size() != static_cast<std::size_t>(p))
      throw parse_error("lda model: w must have p entries");
    model.weights.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) model.weights[i] = w[static_cast<std::size_t>(i)].get<double>();
    model.threshold = j.at("c").get<double>();
    return model;
  } catch (const nlohmann::json::exception& ex) {
    throw parse_error(std::string("lda model: ") + ex.what());
  }
}

}  // namespace corecsp
