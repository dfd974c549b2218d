#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corecsp/artifacts.hpp"
#include "corecsp/bandpass.hpp"
#include "corecsp/coreset.hpp"
#include "corecsp/csp.hpp"
#include "corecsp/detail/strings.hpp"
#include "corecsp/lda.hpp"
#include "corecsp/synthetic.hpp"
#include "corecsp/trial_io.hpp"
#include "corecsp/window_tree.hpp"

namespace corecsp {

enum class PipelineChoice { coreset, batch, both };

inline std::string pipeline_name(PipelineChoice p) {
  switch (p) {
    case PipelineChoice::coreset: return "coreset";
    case PipelineChoice::batch: return "batch";
    default: return "both";
  }
}

inline PipelineChoice pipeline_from_string(const std::string& s) {
  if (s == "coreset") return PipelineChoice::coreset;
  if (s == "batch") return PipelineChoice::batch;
  if (s == "both") return PipelineChoice::both;
  throw spec_error("pipeline must be one of coreset|batch|both, got '" + s + "'");
}

// Benchmark/evaluation run description, loadable from a JSON config file.
struct RunConfig {
  std::optional<std::filesystem::path> manifest_path;
  std::optional<SyntheticSpec> synthetic;
  std::optional<FilterSpec> filter;
  ArtifactPolicy artifact_policy{};
  int m_components = 2;
  double ridge = 0.0;
  double lda_shrinkage = 0.0;
  std::optional<std::int64_t> window_length;
  int machines = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
  PipelineChoice pipeline = PipelineChoice::both;
  std::int64_t stride = 1;
  double oracle_budget_seconds = 300.0;

  void validate() const {
    if (manifest_path.has_value() == synthetic.has_value()) {
      throw spec_error("config: input must name exactly one of manifest|synthetic");
    }
    if (m_components < 1) throw spec_error("config: m_components must be >= 1");
    if (ridge < 0.0) throw spec_error("config: ridge must be >= 0");
    if (lda_shrinkage < 0.0 || lda_shrinkage > 1.0)
      throw spec_error("config: lda_shrinkage must lie in [0, 1]");
    if (machines < 1) throw spec_error("config: machines must be >= 1");
    if (stride < 1) throw spec_error("config: stride must be >= 1");
    if (window_length && *window_length < 1)
      throw spec_error("config: window_length must be >= 1");
    if (filter) filter->validate();
    artifact_policy.validate();
    if (!(oracle_budget_seconds > 0)) throw spec_error("config: oracle budget must be positive");
  }
};

namespace detail {

inline Eigen::MatrixXd covariance_from_json(const nlohmann::json& j, Eigen::Index d,
                                            const char* what) {
  if (j.contains("diag")) {
    const auto& diag = j.at("diag");
    if (!diag.is_array() || diag.size() != static_cast<std::size_t>(d))
      throw spec_error(std::string(what) + ": diag needs exactly d entries");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) m(i, i) = diag[static_cast<std::size_t>(i)].get<double>();
    return m;
  }
  if (j.contains("dense")) {
    const auto& dense = j.at("dense");
    if (!dense.is_array() || dense.size() != static_cast<std::size_t>(d * d))
      throw spec_error(std::string(what) + ": dense needs d*d row-major entries");
    Eigen::MatrixXd m(d, d);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) m(r, c) = dense[i++].get<double>();
    return m;
  }
  throw spec_error(std::string(what) + ": covariance must be given as {\"diag\": [...]} or "
                   "{\"dense\": [...]}");
}

}  // namespace detail

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    spec.channels = j.at("channels").get<Eigen::Index>();
    spec.samples_per_trial = j.at("samples_per_trial").get<Eigen::Index>();
    spec.trials_per_class = j.at("trials_per_class").get<Eigen::Index>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.sample_rate_hz = j.value("sample_rate_hz", 160.0);
    const auto& covs = j.at("class_covariances");
    if (!covs.is_array() || covs.size() != 2)
      throw spec_error("synthetic: class_covariances must list exactly 2 matrices");
    spec.class_covariances[0] =
        detail::covariance_from_json(covs[0], spec.channels, "class 1 covariance");
    spec.class_covariances[1] =
        detail::covariance_from_json(covs[1], spec.channels, "class 2 covariance");
  } catch (const nlohmann::json::exception& ex) {
    throw spec_error(std::string("synthetic spec: ") + ex.what());
  }
  validate_synthetic_spec(spec);
  return spec;
}

inline SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open synthetic spec: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw parse_error(path.string() + ": " + ex.what());
  }
  return synthetic_spec_from_json(j);
}

inline RunConfig run_config_from_json(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir) {
  RunConfig config;
  try {
    const auto& input = j.at("input");
    if (input.contains("manifest")) {
      std::filesystem::path p = input.at("manifest").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      config.manifest_path = p;
    }
    if (input.contains("synthetic")) {
      config.synthetic = synthetic_spec_from_json(input.at("synthetic"));
    }
    if (j.contains("filter") && !j.at("filter").is_null()) {
      const auto& f = j.at("filter");
      FilterSpec spec;
      spec.low_cut_hz = f.at("low_cut_hz").get<double>();
      spec.high_cut_hz = f.at("high_cut_hz").get<double>();
      spec.order = f.value("order", 4);
      spec.sample_rate_hz = f.at("sample_rate_hz").get<double>();
      const std::string mode = f.value("mode", "zero_phase_offline");
      if (mode == "zero_phase_offline") {
        spec.mode = FilterMode::zero_phase_offline;
      } else if (mode == "causal_streaming") {
        spec.mode = FilterMode::causal_streaming;
      } else {
        throw spec_error("config: filter mode must be zero_phase_offline|causal_streaming");
      }
      config.filter = spec;
    }
    if (j.contains("artifact_policy") && !j.at("artifact_policy").is_null()) {
      const auto& a = j.at("artifact_policy");
      config.artifact_policy.amplitude_limit_uv =
          a.value("amplitude_limit_uv", config.artifact_policy.amplitude_limit_uv);
      config.artifact_policy.flatline_epsilon_uv =
          a.value("flatline_epsilon_uv", config.artifact_policy.flatline_epsilon_uv);
    }
    config.m_components = j.value("m_components", config.m_components);
    config.ridge = j.value("ridge", config.ridge);
    config.lda_shrinkage = j.value("lda_shrinkage", config.lda_shrinkage);
    if (j.contains("window_length") && !j.at("window_length").is_null())
      config.window_length = j.at("window_length").get<std::int64_t>();
    config.machines = j.value("machines", config.machines);
    config.seed = j.value("seed", config.seed);
    if (j.contains("output_dir")) {
      std::filesystem::path p = j.at("output_dir").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      config.output_dir = p;
    }
    if (j.contains("pipeline"))
      config.pipeline = pipeline_from_string(j.at("pipeline").get<std::string>());
    config.stride = j.value("stride", config.stride);
    config.oracle_budget_seconds = j.value("oracle_budget_seconds", config.oracle_budget_seconds);
  } catch (const nlohmann::json::exception& ex) {
    throw spec_error(std::string("config: ") + ex.what());
  }
  config.validate();
  return config;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw spec_error(path.string() + ": " + ex.what());
  }
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return run_config_from_json(j, base);
}

// Input trials after the shared preprocessing stage (band-pass + artifact
// screening). Both pipelines always consume this identical output.
struct PreparedInput {
  std::vector<TrialRecording> trials;
  double sample_rate_hz = 0.0;
  std::vector<ArtifactRejection> rejected;
};

inline PreparedInput prepare_input(const RunConfig& config) {
  config.validate();
  PreparedInput prepared;
  std::vector<TrialRecording> trials;
  if (config.manifest_path) {
    trials = load_manifest_trials(*config.manifest_path);
    prepared.sample_rate_hz = trials.empty() ? 0.0 : trials.front().sample_rate_hz;
  } else {
    SyntheticSpec spec = *config.synthetic;
    if (config.seed != 0) spec.seed = config.seed;
    trials = generate_synthetic(spec);
    prepared.sample_rate_hz = spec.sample_rate_hz;
  }
  if (trials.empty()) throw empty_input_error("prepare_input: no trials");
  if (config.filter) {
    for (auto& trial : trials) trial = bandpass(trial, *config.filter);
  }
  auto screened = reject_artifacts(std::move(trials), config.artifact_policy);
  prepared.trials = std::move(screened.kept);
  prepared.rejected = std::move(screened.rejected);
  if (prepared.trials.empty())
    throw empty_input_error("prepare_input: artifact screening rejected every trial");
  return prepared;
}

// ---------------------------------------------------------------------------
// stream-bench
// ---------------------------------------------------------------------------

struct StreamMetricsRow {
  std::int64_t sample_index = 0;
  double objective_ratio = 0.0;
  std::int64_t coreset_update_ns = 0;
  std::int64_t batch_update_ns = 0;
  std::int64_t coreset_resident_scalars = 0;
  std::int64_t batch_resident_scalars = 0;
};

inline constexpr const char* kStreamMetricsHeader =
    "sample_index,objective_ratio,coreset_update_ns,batch_update_ns,"
    "coreset_resident_scalars,batch_resident_scalars";

struct StreamBenchResult {
  std::vector<StreamMetricsRow> rows;
  Eigen::Index channels = 0;
  std::int64_t total_samples = 0;
  std::int64_t final_stride = 1;
  // Final per-class coresets, checkpointable as JSON.
  std::optional<ScatterCoreset> final_class1, final_class2;
};

namespace detail {

// Append-only sample store with doubling capacity. The resident-scalar count
// reports stored elements, not capacity, so it is allocator-independent.
class GrowingSampleMatrix {
 public:
  explicit GrowingSampleMatrix(Eigen::Index d) : buffer_(d, 16) {}

  void push(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (count_ == buffer_.cols()) {
      Eigen::MatrixXd bigger(buffer_.rows(), buffer_.cols() * 2);
      bigger.leftCols(count_) = buffer_.leftCols(count_);
      buffer_.swap(bigger);
    }
    buffer_.col(count_++) = x;
  }

  Eigen::MatrixXd::ConstColsBlockXpr view() const { return buffer_.leftCols(count_); }
  Eigen::Index count() const { return count_; }
  std::int64_t stored_scalars() const { return buffer_.rows() * count_; }

 private:
  Eigen::MatrixXd buffer_;
  Eigen::Index count_ = 0;
};

inline std::int64_t elapsed_ns(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                              start)
      .count();
}

}  // namespace detail

// Replays all samples in order; at every stride-th sample where both class
// covariances are full-rank-ready (>= d samples per class), computes the top
// filter of both pipelines and scores them on the raw data retained by the
// benchmark itself. objective_ratio is batch objective over coreset
// objective, so exact-coreset equivalence shows up as 1.
inline StreamBenchResult run_stream_bench(const RunConfig& config, const PreparedInput& input) {
  const Eigen::Index d = input.trials.front().channels();
  for (const auto& trial : input.trials) {
    if (trial.channels() != d)
      throw dimension_error("stream-bench: trials disagree on channel count");
  }

  ScatterCoreset c1(d), c2(d);
  detail::GrowingSampleMatrix x1(d), x2(d);

  StreamBenchResult result;
  result.channels = d;

  std::int64_t stride = config.stride;
  const std::int64_t budget_ns =
      static_cast<std::int64_t>(config.oracle_budget_seconds * 1e9);
  std::int64_t oracle_spent_ns = 0;
  std::int64_t next_budget_check = budget_ns;

  std::int64_t index = 0;
  for (const auto& trial : input.trials) {
    for (Eigen::Index t = 0; t < trial.samples(); ++t, ++index) {
      const Eigen::VectorXd x = trial.data.col(t);
      ScatterCoreset& own = trial.label == kClass1 ? c1 : c2;
      detail::GrowingSampleMatrix& raw = trial.label == kClass1 ? x1 : x2;

      const auto coreset_start = std::chrono::steady_clock::now();
      own.append_sample(x);
      std::int64_t coreset_ns = detail::elapsed_ns(coreset_start);
      raw.push(x);

      const bool ready = c1.sample_count() >= d && c2.sample_count() >= d;
      if (!ready || (index + 1) % stride != 0) continue;

      const auto coreset_bank_start = std::chrono::steady_clock::now();
      const SpatialFilterBank coreset_bank =
          csp_from_coresets(c1, c2, config.ridge, config.m_components);
      coreset_ns += detail::elapsed_ns(coreset_bank_start);

      const auto batch_start = std::chrono::steady_clock::now();
      const SpatialFilterBank batch_bank =
          csp_batch(x1.view(), x2.view(), config.ridge, config.m_components);
      const std::int64_t batch_ns = detail::elapsed_ns(batch_start);

      const double batch_obj =
          variance_ratio_objective(batch_bank.filters.col(0), x1.view(), x2.view());
      const double coreset_obj =
          variance_ratio_objective(coreset_bank.filters.col(0), x1.view(), x2.view());

      StreamMetricsRow row;
      row.sample_index = index;
      row.objective_ratio = batch_obj / coreset_obj;
      row.coreset_update_ns = coreset_ns;
      row.batch_update_ns = batch_ns;
      row.coreset_resident_scalars = c1.resident_scalars() + c2.resident_scalars();
      row.batch_resident_scalars = x1.stored_scalars() + x2.stored_scalars() + 4;
      result.rows.push_back(row);

      oracle_spent_ns += batch_ns;
      if (oracle_spent_ns > next_budget_check) {
        stride *= 2;
        next_budget_check *= 2;
        warn("stream-bench: batch oracle exceeded its time budget; stride increased to " +
             std::to_string(stride));
      }
    }
  }
  result.total_samples = index;
  result.final_stride = stride;
  result.final_class1 = std::move(c1);
  result.final_class2 = std::move(c2);
  return result;
}

inline void write_stream_metrics_csv(const std::vector<StreamMetricsRow>& rows,
                                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << kStreamMetricsHeader << '\n';
  for (const auto& row : rows) {
    out << row.sample_index << ',' << detail::format_g17(row.objective_ratio) << ','
        << row.coreset_update_ns << ',' << row.batch_update_ns << ','
        << row.coreset_resident_scalars << ',' << row.batch_resident_scalars << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct SubjectAccuracy {
  std::string subject_id;
  double accuracy = 0.0;
};

struct FoldPrediction {
  std::string subject_id;
  int fold_index = 0;
  std::string trial_id;
  int true_label = 0;
  int predicted_label = 0;
  double score = 0.0;
};

struct EvalReport {
  std::string pipeline;
  std::vector<SubjectAccuracy> per_subject;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  Eigen::Matrix2d confusion = Eigen::Matrix2d::Zero();  // rows: true label, normalized
  std::vector<FoldPrediction> predictions;
  std::vector<std::string> skipped_subjects;
};

namespace detail {

inline SpatialFilterBank train_csp(const std::vector<const TrialRecording*>& training,
                                   bool use_coreset, double ridge, int m) {
  const Eigen::Index d = training.front()->channels();
  if (use_coreset) {
    ScatterCoreset c1(d), c2(d);
    for (const auto* trial : training) {
      (trial->label == kClass1 ? c1 : c2).append_window(trial->data);
    }
    return csp_from_coresets(c1, c2, ridge, m);
  }
  Eigen::Index t1 = 0, t2 = 0;
  for (const auto* trial : training) {
    (trial->label == kClass1 ? t1 : t2) += trial->samples();
  }
  Eigen::MatrixXd x1(d, t1), x2(d, t2);
  Eigen::Index at1 = 0, at2 = 0;
  for (const auto* trial : training) {
    if (trial->label == kClass1) {
      x1.middleCols(at1, trial->samples()) = trial->data;
      at1 += trial->samples();
    } else {
      x2.middleCols(at2, trial->samples()) = trial->data;
      at2 += trial->samples();
    }
  }
  return csp_batch(x1, x2, ridge, m);
}

}  // namespace detail

// Leave-one-trial-out cross-validation per subject: each fold retrains CSP
// (per pipeline) and LDA on the remaining trials and predicts the held-out
// trial. Subjects without at least 3 trials per class are skipped (a fold
// must leave >= 2 training trials per class for the classifier).
inline EvalReport run_eval_pipeline(const RunConfig& config, const PreparedInput& input,
                                    bool use_coreset) {
  EvalReport report;
  report.pipeline = use_coreset ? "coreset" : "batch";

  std::vector<std::string> subject_order;
  std::map<std::string, std::vector<const TrialRecording*>> by_subject;
  for (const auto& trial : input.trials) {
    auto [it, inserted] = by_subject.try_emplace(trial.subject_id);
    if (inserted) subject_order.push_back(trial.subject_id);
    it->second.push_back(&trial);
  }

  Eigen::Matrix2d counts = Eigen::Matrix2d::Zero();
  for (const auto& subject : subject_order) {
    const auto& trials = by_subject[subject];
    std::int64_t n1 = 0, n2 = 0;
    for (const auto* trial : trials) (trial->label == kClass1 ? n1 : n2) += 1;
    if (n1 < 3 || n2 < 3) {
      warn("eval: skipping subject '" + subject + "' (" + std::to_string(n1) + " class-1 / " +
           std::to_string(n2) + " class-2 trials; leave-one-out needs 3 per class)");
      report.skipped_subjects.push_back(subject);
      continue;
    }

    std::int64_t correct = 0;
    for (std::size_t fold = 0; fold < trials.size(); ++fold) {
      std::vector<const TrialRecording*> training;
      training.reserve(trials.size() - 1);
      for (std::size_t i = 0; i < trials.size(); ++i) {
        if (i != fold) training.push_back(trials[i]);
      }
      const SpatialFilterBank bank =
          detail::train_csp(training, use_coreset, config.ridge, config.m_components);
      std::vector<Eigen::VectorXd> features;
      std::vector<int> labels;
      features.reserve(training.size());
      for (const auto* trial : training) {
        features.push_back(extract_features(trial->data, bank));
        labels.push_back(trial->label);
      }
      const LdaModel lda = lda_fit(features, labels, config.lda_shrinkage);
      const TrialRecording& held_out = *trials[fold];
      const auto [predicted, score] = lda_predict(lda, extract_features(held_out.data, bank));

      if (predicted == held_out.label) ++correct;
      counts(held_out.label - 1, predicted - 1) += 1.0;
      report.predictions.push_back({subject, static_cast<int>(fold), held_out.trial_id,
                                    held_out.label, predicted, score});
    }
    report.per_subject.push_back(
        {subject, static_cast<double>(correct) / static_cast<double>(trials.size())});
  }

  if (report.per_subject.empty())
    throw empty_input_error("eval: no subject had enough trials per class");

  double mean = 0.0;
  for (const auto& s : report.per_subject) mean += s.accuracy;
  mean /= static_cast<double>(report.per_subject.size());
  double var = 0.0;
  for (const auto& s : report.per_subject) var += (s.accuracy - mean) * (s.accuracy - mean);
  var /= static_cast<double>(report.per_subject.size());
  report.mean_accuracy = mean;
  report.std_accuracy = std::sqrt(var);

  for (int r = 0; r < 2; ++r) {
    const double row_total = counts.row(r).sum();
    if (row_total > 0.0) report.confusion.row(r) = counts.row(r) / row_total;
  }
  return report;
}

inline std::vector<EvalReport> run_eval(const RunConfig& config, const PreparedInput& input) {
  std::vector<EvalReport> reports;
  if (config.pipeline != PipelineChoice::batch)
    reports.push_back(run_eval_pipeline(config, input, /*use_coreset=*/true));
  if (config.pipeline != PipelineChoice::coreset)
    reports.push_back(run_eval_pipeline(config, input, /*use_coreset=*/false));
  return reports;
}

inline nlohmann::json eval_reports_to_json(const std::vector<EvalReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& report : reports) {
    nlohmann::json per_subject = nlohmann::json::array();
    for (const auto& s : report.per_subject)
      per_subject.push_back({{"subject_id", s.subject_id}, {"accuracy", s.accuracy}});
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : report.skipped_subjects) skipped.push_back(s);
    out.push_back({{"pipeline", report.pipeline},
                   {"mean_accuracy", report.mean_accuracy},
                   {"std_accuracy", report.std_accuracy},
                   {"per_subject_accuracy", std::move(per_subject)},
                   {"confusion",
                    {{report.confusion(0, 0), report.confusion(0, 1)},
                     {report.confusion(1, 0), report.confusion(1, 1)}}},
                   {"skipped_subjects", std::move(skipped)}});
  }
  return out;
}

inline void write_eval_report_json(const std::vector<EvalReport>& reports,
                                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << eval_reports_to_json(reports).dump(2) << '\n';
  if (!out) throw io_error("write failed: " + path.string());
}

inline void write_confusion_csv(const std::vector<EvalReport>& reports,
                                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "pipeline,true_label,predicted_1,predicted_2\n";
  for (const auto& report : reports) {
    for (int r = 0; r < 2; ++r) {
      out << report.pipeline << ',' << (r + 1) << ','
          << detail::format_g17(report.confusion(r, 0)) << ','
          << detail::format_g17(report.confusion(r, 1)) << '\n';
    }
  }
  if (!out) throw io_error("write failed: " + path.string());
}

inline void write_predictions_csv(const std::vector<EvalReport>& reports,
                                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "pipeline,subject_id,fold_index,trial_id,true_label,predicted_label,score\n";
  for (const auto& report : reports) {
    for (const auto& p : report.predictions) {
      out << report.pipeline << ',' << p.subject_id << ',' << p.fold_index << ',' << p.trial_id
          << ',' << p.true_label << ',' << p.predicted_label << ','
          << detail::format_g17(p.score) << '\n';
    }
  }
  if (!out) throw io_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// export-components
// ---------------------------------------------------------------------------

struct ComponentRow {
  std::string pipeline;
  int component_rank = 0;  // 1..2m: top m filters, then bottom m
  Eigen::Index channel_index = 0;
  double weight = 0.0;
};

struct ComponentExport {
  std::vector<ComponentRow> rows;
  std::vector<std::pair<std::string, SpatialFilterBank>> banks;  // per pipeline
};

inline ComponentExport run_export_components(const RunConfig& config,
                                             const PreparedInput& input) {
  std::vector<const TrialRecording*> all;
  all.reserve(input.trials.size());
  bool has1 = false, has2 = false;
  for (const auto& trial : input.trials) {
    all.push_back(&trial);
    (trial.label == kClass1 ? has1 : has2) = true;
  }
  if (!has1 || !has2)
    throw not_ready_error("export-components: both classes must be present");

  ComponentExport result;
  auto emit = [&](bool use_coreset) {
    const std::string name = use_coreset ? "coreset" : "batch";
    SpatialFilterBank bank =
        detail::train_csp(all, use_coreset, config.ridge, config.m_components);
    const Eigen::MatrixXd sel = bank.selected_filters();
    for (Eigen::Index j = 0; j < sel.cols(); ++j) {
      for (Eigen::Index c = 0; c < sel.rows(); ++c) {
        result.rows.push_back({name, static_cast<int>(j + 1), c, sel(c, j)});
      }
    }
    result.banks.emplace_back(name, std::move(bank));
  };
  if (config.pipeline != PipelineChoice::batch) emit(true);
  if (config.pipeline != PipelineChoice::coreset) emit(false);
  return result;
}

inline void write_components_csv(const std::vector<ComponentRow>& rows,
                                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "pipeline,component_rank,channel_index,weight\n";
  for (const auto& row : rows) {
    out << row.pipeline << ',' << row.component_rank << ',' << row.channel_index << ','
        << detail::format_g17(row.weight) << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// window-demo
// ---------------------------------------------------------------------------

struct WindowDemoRow {
  std::int64_t sample_index = 0;
  double max_rel_deviation = 0.0;
  std::int64_t live_span_class1 = 0;
  std::int64_t live_span_class2 = 0;
};

// Streams every sample through a per-class CoresetWindowTree with single-
// sample leaves and the configured window, and checks the root scatter against
// a naive recomputation over the retained window at every step.
inline std::vector<WindowDemoRow> run_window_demo(const RunConfig& config,
                                                  const PreparedInput& input) {
  if (!config.window_length)
    throw spec_error("window-demo: config must set window_length");
  const std::int64_t window = *config.window_length;
  const Eigen::Index d = input.trials.front().channels();
  if (window < d) {
    warn("window-demo: window shorter than channel count; windowed filters would be "
         "rank-deficient without a ridge");
  }

  CoresetWindowTree tree1(d, window), tree2(d, window);
  std::deque<Eigen::VectorXd> naive1, naive2;
  std::vector<WindowDemoRow> rows;

  std::int64_t index = 0;
  for (const auto& trial : input.trials) {
    if (trial.channels() != d)
      throw dimension_error("window-demo: trials disagree on channel count");
    for (Eigen::Index t = 0; t < trial.samples(); ++t, ++index) {
      const Eigen::VectorXd x = trial.data.col(t);
      CoresetWindowTree& tree = trial.label == kClass1 ? tree1 : tree2;
      std::deque<Eigen::VectorXd>& naive = trial.label == kClass1 ? naive1 : naive2;

      ScatterCoreset leaf(d);
      leaf.append_sample(x);
      tree.insert(std::move(leaf), 1);
      naive.push_back(x);
      while (static_cast<std::int64_t>(naive.size()) > window) naive.pop_front();

      double deviation = 0.0;
      for (int side = 0; side < 2; ++side) {
        const CoresetWindowTree& tr = side == 0 ? tree1 : tree2;
        const std::deque<Eigen::VectorXd>& nv = side == 0 ? naive1 : naive2;
        if (nv.empty()) continue;
        Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(d, d);
        for (const auto& v : nv) expected.noalias() += v * v.transpose();
        const double denom = std::max(expected.norm(), 1e-300);
        deviation = std::max(deviation, (tr.root_scatter() - expected).norm() / denom);
      }

      rows.push_back({index, deviation, tree1.live_span(), tree2.live_span()});
    }
  }
  return rows;
}

inline void write_window_trace_csv(const std::vector<WindowDemoRow>& rows,
                                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "sample_index,max_rel_deviation,live_span_class1,live_span_class2\n";
  for (const auto& row : rows) {
    out << row.sample_index << ',' << detail::format_g17(row.max_rel_deviation) << ','
        << row.live_span_class1 << ',' << row.live_span_class2 << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOutput {
  std::filesystem::path manifest_path;
  std::vector<std::filesystem::path> trial_paths;
};

// Materializes generate_synthetic output as trial CSVs plus a manifest.
// Byte-identical across runs with the same spec.
inline SynthOutput run_synth(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  const auto trials = generate_synthetic(spec);
  std::filesystem::create_directories(out_dir);

  SynthOutput output;
  TrialManifest manifest;
  manifest.sample_rate_hz = spec.sample_rate_hz;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "trial_%04zu_class%d.csv", i, trials[i].label);
    const auto path = out_dir / name;
    write_trial_csv(trials[i], path);
    manifest.entries.push_back({name, trials[i].label, trials[i].subject_id});
    output.trial_paths.push_back(path);
  }
  output.manifest_path = out_dir / "manifest.json";
  save_manifest(manifest, output.manifest_path);
  return output;
}

}  // namespace corecsp
