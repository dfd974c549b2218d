#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corecsp/detail/strings.hpp"
#include "corecsp/trial.hpp"

namespace corecsp {

// Reads the trial CSV interchange format: rows are time samples, columns are
// channels, optional single header row, LF line endings. The returned matrix
// is transposed into the project's channel-major layout.
inline TrialRecording read_trial_csv(const std::filesystem::path& path, int label,
                                     double sample_rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open trial file: " + path.string());

  std::vector<std::vector<double>> rows;  // sample-major while parsing
  std::string line;
  std::size_t line_number = 0;
  std::size_t column_count = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (first_content_line) {
      first_content_line = false;
      // A non-numeric first cell marks a header row.
      if (!detail::parse_double(cells.front()).has_value()) continue;
    }
    if (column_count == 0) {
      column_count = cells.size();
    } else if (cells.size() != column_count) {
      throw parse_error(path.string() + ": ragged row at line " +
                        std::to_string(line_number) + " (" + std::to_string(cells.size()) +
                        " columns, expected " + std::to_string(column_count) + ")");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v.has_value()) {
        throw parse_error(path.string() + ": unparsable value at line " +
                          std::to_string(line_number) + ", column " + std::to_string(c + 1));
      }
      if (!std::isfinite(*v)) {
        throw value_error(path.string() + ": non-finite value at line " +
                          std::to_string(line_number) + ", column " + std::to_string(c + 1));
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw empty_input_error(path.string() + ": empty trial file");

  TrialRecording trial;
  trial.data.resize(static_cast<Eigen::Index>(column_count),
                    static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < column_count; ++c)
      trial.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = rows[t][c];
  trial.sample_rate_hz = sample_rate_hz;
  trial.label = label;
  trial.trial_id = path.stem().string();
  validate_trial(trial);
  return trial;
}

// One row per time sample, one column per channel, 17 significant digits,
// LF-terminated rows, no header.
inline void write_trial_csv(const TrialRecording& trial, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  std::string buffer;
  for (Eigen::Index t = 0; t < trial.samples(); ++t) {
    buffer.clear();
    for (Eigen::Index c = 0; c < trial.channels(); ++c) {
      if (c > 0) buffer.push_back(',');
      buffer += detail::format_g17(trial.data(c, t));
    }
    buffer.push_back('\n');
    out << buffer;
  }
  if (!out) throw io_error("write failed: " + path.string());
}

inline TrialManifest manifest_from_json(const nlohmann::json& j) {
  TrialManifest manifest;
  try {
    manifest.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.path = e.at("path").get<std::string>();
      entry.label = e.at("label").get<int>();
      entry.subject_id = e.value("subject_id", std::string{});
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw parse_error(std::string("malformed manifest: ") + ex.what());
  }
  validate_manifest(manifest);
  return manifest;
}

inline nlohmann::json manifest_to_json(const TrialManifest& manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"path", e.path}, {"label", e.label}, {"subject_id", e.subject_id}});
  }
  return {{"sample_rate_hz", manifest.sample_rate_hz}, {"entries", std::move(entries)}};
}

inline TrialManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw parse_error(path.string() + ": " + ex.what());
  }
  return manifest_from_json(j);
}

inline void save_manifest(const TrialManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) throw io_error("write failed: " + path.string());
}

// Loads every entry of a manifest; relative entry paths resolve against the
// manifest's own directory.
inline std::vector<TrialRecording> load_manifest_trials(const std::filesystem::path& path) {
  const TrialManifest manifest = load_manifest(path);
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::vector<TrialRecording> trials;
  trials.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) {
    std::filesystem::path p(entry.path);
    if (p.is_relative()) p = base / p;
    TrialRecording trial = read_trial_csv(p, entry.label, manifest.sample_rate_hz);
    trial.subject_id = entry.subject_id;
    trials.push_back(std::move(trial));
  }
  return trials;
}

}  // namespace corecsp
