// corecsp command-line harness: stream-bench, eval, export-components,
// window-demo and synth subcommands over manifest or synthetic input.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "corecsp/bench.hpp"
#include "corecsp/serialize.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::optional<std::int64_t> seed;
  std::optional<std::string> pipeline;
  std::optional<std::int64_t> stride;
};

void add_common_options(CLI::App* sub, CommonArgs* args, bool config_required) {
  auto* config = sub->add_option("--config", args->config_path, "JSON run configuration");
  if (config_required) config->required();
  sub->add_option("--output", args->output_dir, "output directory (overrides config)");
  sub->add_option("--seed", args->seed, "RNG seed (overrides config)");
  sub->add_option("--pipeline", args->pipeline, "coreset|batch|both (overrides config)");
  sub->add_option("--stride", args->stride, "emit every stride-th sample (overrides config)");
}

corecsp::RunConfig resolve_config(const CommonArgs& args) {
  corecsp::RunConfig config = corecsp::load_run_config(args.config_path);
  if (!args.output_dir.empty()) config.output_dir = args.output_dir;
  if (args.seed) config.seed = static_cast<std::uint64_t>(*args.seed);
  if (args.pipeline) config.pipeline = corecsp::pipeline_from_string(*args.pipeline);
  if (args.stride) config.stride = *args.stride;
  config.validate();
  return config;
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const corecsp::spec_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const corecsp::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const corecsp::error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw corecsp::io_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_stream_bench(const CommonArgs& args) {
  const auto config = resolve_config(args);
  const auto input = corecsp::prepare_input(config);
  const auto result = corecsp::run_stream_bench(config, input);
  std::filesystem::create_directories(config.output_dir);
  const auto out = config.output_dir / "stream_metrics.csv";
  corecsp::write_stream_metrics_csv(result.rows, out);
  // Checkpoint the final stream state (one coreset per class).
  if (result.final_class1) {
    write_json_file(corecsp::coreset_to_json(*result.final_class1),
                    config.output_dir / "coreset_class1.json");
  }
  if (result.final_class2) {
    write_json_file(corecsp::coreset_to_json(*result.final_class2),
                    config.output_dir / "coreset_class2.json");
  }
  std::cout << "stream-bench: " << result.total_samples << " samples, " << result.rows.size()
            << " rows (stride " << result.final_stride << ") -> " << out.string() << '\n';
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  const auto config = resolve_config(args);
  const auto input = corecsp::prepare_input(config);
  const auto reports = corecsp::run_eval(config, input);
  std::filesystem::create_directories(config.output_dir);
  corecsp::write_eval_report_json(reports, config.output_dir / "eval_report.json");
  corecsp::write_confusion_csv(reports, config.output_dir / "confusion.csv");
  corecsp::write_predictions_csv(reports, config.output_dir / "predictions.csv");
  for (const auto& report : reports) {
    std::printf("eval[%s]: mean accuracy %.4f, std %.4f over %zu subject(s)\n",
                report.pipeline.c_str(), report.mean_accuracy, report.std_accuracy,
                report.per_subject.size());
  }
  std::cout << "eval: wrote eval_report.json, confusion.csv, predictions.csv in "
            << config.output_dir.string() << '\n';
  return 0;
}

int cmd_export_components(const CommonArgs& args) {
  const auto config = resolve_config(args);
  const auto input = corecsp::prepare_input(config);
  const auto result = corecsp::run_export_components(config, input);
  std::filesystem::create_directories(config.output_dir);
  const auto out = config.output_dir / "components.csv";
  corecsp::write_components_csv(result.rows, out);
  for (const auto& [name, bank] : result.banks) {
    write_json_file(corecsp::filter_bank_to_json(bank),
                    config.output_dir / ("filter_bank_" + name + ".json"));
  }
  std::cout << "export-components: " << result.rows.size() << " rows -> " << out.string()
            << '\n';
  return 0;
}

int cmd_window_demo(const CommonArgs& args) {
  const auto config = resolve_config(args);
  const auto input = corecsp::prepare_input(config);
  const auto rows = corecsp::run_window_demo(config, input);
  std::filesystem::create_directories(config.output_dir);
  const auto out = config.output_dir / "window_trace.csv";
  corecsp::write_window_trace_csv(rows, out);
  double worst = 0.0;
  for (const auto& row : rows) worst = std::max(worst, row.max_rel_deviation);
  std::printf("window-demo: %zu steps, worst relative deviation %.3e -> %s\n", rows.size(),
              worst, out.string().c_str());
  return 0;
}

int cmd_synth(const std::string& spec_path, const CommonArgs& args) {
  auto spec = corecsp::load_synthetic_spec(spec_path);
  std::filesystem::path out_dir = ".";
  if (!args.config_path.empty()) {
    const auto config = corecsp::load_run_config(args.config_path);
    out_dir = config.output_dir;
    if (config.seed != 0) spec.seed = config.seed;
  }
  if (args.seed) spec.seed = static_cast<std::uint64_t>(*args.seed);
  if (!args.output_dir.empty()) out_dir = args.output_dir;
  const auto output = corecsp::run_synth(spec, out_dir);
  std::cout << "synth: wrote " << output.trial_paths.size() << " trial files and "
            << output.manifest_path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming coreset CSP benchmark"};
  app.require_subcommand(1);

  CommonArgs bench_args, eval_args, export_args, window_args, synth_args;
  std::string synth_spec_path;

  auto* bench = app.add_subcommand("stream-bench",
                                   "replay a stream; emit per-sample time/memory/ratio rows");
  add_common_options(bench, &bench_args, /*config_required=*/true);

  auto* eval = app.add_subcommand("eval", "leave-one-out classification evaluation");
  add_common_options(eval, &eval_args, /*config_required=*/true);

  auto* exp = app.add_subcommand("export-components", "export the selected CSP filter columns");
  add_common_options(exp, &export_args, /*config_required=*/true);

  auto* window = app.add_subcommand("window-demo",
                                    "sliding-window tree versus naive windowed scatter");
  add_common_options(window, &window_args, /*config_required=*/true);

  auto* synth = app.add_subcommand("synth", "materialize synthetic trials and a manifest");
  synth->add_option("spec", synth_spec_path, "synthetic spec JSON")->required();
  add_common_options(synth, &synth_args, /*config_required=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (bench->parsed()) return cmd_stream_bench(bench_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (exp->parsed()) return cmd_export_components(export_args);
    if (window->parsed()) return cmd_window_demo(window_args);
    if (synth->parsed()) return cmd_synth(synth_spec_path, synth_args);
  } catch (...) {
    return exit_code_for_current_exception();
  }
  return 2;
}
