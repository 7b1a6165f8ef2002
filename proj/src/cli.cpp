#include "ccn/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"

#include "ccn/benchmark.hpp"
#include "ccn/care_controller.hpp"
#include "ccn/config.hpp"
#include "ccn/errors.hpp"
#include "ccn/eval_harness.hpp"
#include "ccn/gateway.hpp"

namespace ccn {
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop_requested{false};

extern "C" void handle_stop_signal(int) { g_stop_requested = true; }

struct GenBenchArgs {
  std::uint64_t seed = 1;
  std::string out;
  int total = 2000;
  std::string templates;
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::string report;
  double lr = 1e-3;
  int batch = 32;
  int epochs = 20;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";
  int embed_dim = 64;
  int hidden_dim = 64;
  std::uint64_t random_seed = 0;
};

struct EvalArgs {
  std::vector<std::string> systems{"baseline_greedy", "ccn_candidate_only", "reranked_full",
                                   "reranked_no_care"};
  std::string data;
  std::string split = "test";
  std::string config;
  std::string backend;
  std::string backend_url;
  std::string model;
  std::string controller;
  std::string out;
  int jobs = 4;
  int limit = 0;
  std::uint64_t seed = 0;
};

struct ServeArgs {
  std::string config;
  std::string listen;
};

struct ReportArgs {
  std::vector<std::string> records;
  std::string out;
};

fs::path split_file(const fs::path& data, const std::string& split) {
  return fs::is_directory(data) ? data / (split + ".jsonl") : data;
}

std::vector<BenchmarkExample> load_split(const fs::path& data, const std::string& split) {
  const auto path = split_file(data, split);
  if (!fs::exists(path)) throw DataError("dataset file not found: " + path.string());
  auto examples = read_jsonl(path);
  if (fs::is_directory(data)) return examples;
  // A single combined file: select by split label.
  return filter_split(examples, parse_split(split));
}

int cmd_gen_bench(const GenBenchArgs& a) {
  const auto library =
      a.templates.empty() ? TemplateLibrary::builtin() : TemplateLibrary::load(a.templates);
  auto examples = generate_benchmark(a.seed, a.total, library);
  examples = assign_splits(std::move(examples), a.seed, default_split_sizes(a.total));
  const fs::path out(a.out);
  write_jsonl(examples, out / "benchmark.jsonl");
  std::map<std::string, int> split_counts;
  for (const auto split : {Split::train, Split::val, Split::test}) {
    const auto part = filter_split(examples, split);
    write_jsonl(part, out / (std::string(to_string(split)) + ".jsonl"));
    split_counts[to_string(split)] = static_cast<int>(part.size());
  }
  std::cout << "wrote " << examples.size() << " examples to " << out.string() << " (train "
            << split_counts["train"] << ", val " << split_counts["val"] << ", test "
            << split_counts["test"] << ")\n";
  return kExitOk;
}

std::vector<RegressionSample> samples_of(const std::vector<BenchmarkExample>& examples,
                                         int vocab_size) {
  std::vector<DependentState> states;
  states.reserve(examples.size());
  for (const auto& e : examples) states.push_back(e.state);
  return samples_from_states(states, vocab_size);
}

int cmd_train(const TrainArgs& a) {
  TrainHyper hyper;
  hyper.learning_rate = a.lr;
  hyper.batch_size = a.batch;
  hyper.epochs = a.epochs;
  hyper.seed = a.seed;
  hyper.optimizer = a.optimizer == "sgd" ? Optimizer::sgd : Optimizer::adam;
  hyper.dims.embed_dim = a.embed_dim;
  hyper.dims.hidden_dim = a.hidden_dim;

  const fs::path data(a.data);
  const auto train = samples_of(load_split(data, "train"), hyper.dims.vocab_size);
  const auto val = samples_of(load_split(data, "val"), hyper.dims.vocab_size);
  const auto test = samples_of(load_split(data, "test"), hyper.dims.vocab_size);
  if (train.empty()) throw DataError("no training examples in " + a.data);

  const auto start = std::chrono::steady_clock::now();
  auto result = train_regressor(train, val, test, hyper);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  CareController::token_regressor(result.params, true).save(a.out);
  json report = report_to_json(result.report);
  report["train_seconds"] = seconds;
  report["optimizer"] = a.optimizer;
  if (!test.empty()) {
    report["random_baseline"] =
        report_to_json(random_controller_baseline(test, a.random_seed, hyper.dims));
    report["random_baseline"]["seed"] = a.random_seed;
  }
  const std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
  write_json_file(report_path, report);

  std::cout << "trained " << result.report.epochs_run << " epochs in " << seconds
            << " s; best epoch " << result.report.best_epoch << ", val MSE "
            << result.report.val_mse;
  if (result.report.test_r) std::cout << ", test r " << *result.report.test_r;
  std::cout << "\nparams: " << a.out << "\nreport: " << report_path << '\n';
  return kExitOk;
}

ServiceConfig resolve_config(const std::string& path) {
  std::string p = path;
  if (p.empty()) {
    if (const char* env = std::getenv("CCN_CONFIG"); env && *env) p = env;
  }
  ServiceConfig config = p.empty() ? ServiceConfig{} : load_service_config(p);
  apply_env(config);
  return config;
}

int cmd_run_eval(const EvalArgs& a) {
  ServiceConfig config = resolve_config(a.config);
  if (!a.backend.empty()) config.backend_kind = a.backend;
  if (!a.backend_url.empty()) config.backend.base_url = a.backend_url;
  if (!a.model.empty()) config.backend.model_name = a.model;
  if (!a.controller.empty()) config.controller_path = a.controller;
  const auto components = build_components(config);

  auto examples = load_split(a.data, a.split);
  if (examples.empty()) throw DataError("no examples for split '" + a.split + "'");
  if (a.limit > 0 && static_cast<std::size_t>(a.limit) < examples.size()) {
    examples.resize(static_cast<std::size_t>(a.limit));
  }

  EvalOptions options;
  options.jobs = a.jobs;
  options.seed = a.seed;
  std::vector<SystemRecords> all;
  for (const auto& name : a.systems) {
    const System system = parse_system(name);
    const auto start = std::chrono::steady_clock::now();
    auto records = run_system(system, examples, *components.pipeline, options);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path path = fs::path(a.out) / (name + ".records.jsonl");
    write_records(records, path);
    std::cout << name << ": " << records.size() << " records in " << seconds << " s -> "
              << path.string() << '\n';
    all.emplace_back(name, std::move(records));
  }
  if (!components.controller_loaded) {
    std::cerr << "warning: no controller parameters given; using an untrained controller\n";
  }
  std::cout << '\n'
            << format_table(summarize(all, config.pipeline.dir_threshold,
                                      config.pipeline.dir_inclusive));
  return kExitOk;
}

int cmd_serve(const ServeArgs& a) {
  ServiceConfig config = resolve_config(a.config);
  if (!a.listen.empty()) config.listen_addr = a.listen;
  const auto [host, port] = parse_listen_addr(config.listen_addr);
  const auto components = build_components(config);

  GatewayOptions options;
  options.session_ttl = std::chrono::seconds(config.session_ttl_seconds);
  options.snapshot_path = config.snapshot_path;
  Gateway gateway(components.pipeline, components.controller_loaded, options);
  const int bound = gateway.bind(host, port);
  std::cout << "listening on " << host << ':' << bound << " (backend "
            << components.pipeline->backend().name() << ")" << std::endl;

  g_stop_requested = false;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  std::atomic<bool> done{false};
  std::jthread watcher([&] {
    while (!done && !g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    gateway.stop();
  });
  gateway.serve();
  done = true;
  gateway.save_snapshot();
  return kExitOk;
}

int cmd_report(const ReportArgs& a) {
  std::vector<SystemRecords> systems;
  std::map<std::string, std::size_t> index;
  for (const auto& path : a.records) {
    for (auto& r : read_records(path)) {
      auto [it, inserted] = index.emplace(r.system, systems.size());
      if (inserted) systems.emplace_back(r.system, std::vector<EvalRecord>{});
      systems[it->second].second.push_back(std::move(r));
    }
  }
  if (systems.empty()) throw DataError("no records found in the given files");
  for (const auto& [name, records] : systems) {
    if (std::none_of(records.begin(), records.end(), [](const auto& r) { return r.ok(); })) {
      throw DataError("system '" + name + "' has no successful records");
    }
  }
  const auto report = summarize(systems);
  const std::string table = format_table(report);
  std::cout << table;
  if (!a.out.empty()) {
    const fs::path out(a.out);
    write_json_file(out / "report.json", to_json(report));
    write_text_file(out / "report.txt", table);
    write_text_file(out / "report.csv", to_csv(report));
    write_text_file(out / "plot_utility.csv", plot_csv(systems));
    std::cout << "\nwrote report.json, report.txt, report.csv, plot_utility.csv to "
              << out.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Care-conditioned response gateway: benchmark, training, evaluation, serving"};
  app.require_subcommand(1);

  GenBenchArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-bench", "Generate the synthetic benchmark and splits");
  gen_cmd->add_option("--seed", gen.seed, "Generation and split seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--total", gen.total, "Number of examples")
      ->capture_default_str()
      ->check(CLI::Range(6, 1000000));
  gen_cmd->add_option("--templates", gen.templates, "Template library JSON (default: builtin)")
      ->check(CLI::ExistingFile);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-controller", "Train the care-signal regressor");
  train_cmd->add_option("--data", train.data, "Benchmark directory with train/val/test.jsonl")
      ->required()
      ->check(CLI::ExistingPath);
  train_cmd->add_option("--out", train.out, "Parameter file to write")->required();
  train_cmd->add_option("--report", train.report, "TrainReport JSON (default: <out>.report.json)");
  train_cmd->add_option("--lr", train.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "Batch size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train.epochs, "Epochs")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", train.seed, "Init and shuffle seed")->capture_default_str();
  train_cmd->add_option("--optimizer", train.optimizer, "sgd or adam")
      ->capture_default_str()
      ->check(CLI::IsMember({"sgd", "adam"}));
  train_cmd->add_option("--embed-dim", train.embed_dim, "Token embedding width")
      ->capture_default_str()
      ->check(CLI::Range(2, 4096));
  train_cmd->add_option("--hidden-dim", train.hidden_dim, "MLP hidden width")
      ->capture_default_str()
      ->check(CLI::Range(1, 4096));
  train_cmd->add_option("--random-seed", train.random_seed, "Seed of the random baseline")
      ->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("run-eval", "Run systems over a benchmark split");
  eval_cmd->add_option("--system", eval.systems, "System(s) to run")
      ->capture_default_str()
      ->check(CLI::IsMember(
          {"baseline_greedy", "ccn_candidate_only", "reranked_full", "reranked_no_care"}));
  eval_cmd->add_option("--data", eval.data, "Benchmark directory or JSONL file")
      ->required()
      ->check(CLI::ExistingPath);
  eval_cmd->add_option("--split", eval.split, "Split to evaluate")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--config", eval.config, "Config JSON")->check(CLI::ExistingFile);
  eval_cmd->add_option("--backend", eval.backend, "mock or http")
      ->check(CLI::IsMember({"mock", "http"}));
  eval_cmd->add_option("--backend-url", eval.backend_url, "Chat-completions base URL");
  eval_cmd->add_option("--model", eval.model, "Model name for the http backend");
  eval_cmd->add_option("--controller", eval.controller, "Controller parameter file")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval.out, "Directory for per-system records")->required();
  eval_cmd->add_option("--jobs", eval.jobs, "Examples processed concurrently")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));
  eval_cmd->add_option("--limit", eval.limit, "Use only the first N examples (0: all)")
      ->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--seed", eval.seed, "Run seed")->capture_default_str();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP gateway");
  serve_cmd->add_option("--config", serve.config, "Config JSON (or CCN_CONFIG)")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--listen", serve.listen, "host:port (or CCN_LISTEN_ADDR)");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Summarize run-eval records");
  report_cmd->add_option("records", report.records, "Record JSONL files")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report.out, "Directory for report files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_bench(gen);
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_run_eval(eval);
    if (*serve_cmd) return cmd_serve(serve);
    if (*report_cmd) return cmd_report(report);
  } catch (const BackendError& e) {
    std::cerr << "backend error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kExitBackend;
  } catch (const EvalAborted& e) {
    std::cerr << "evaluation aborted: " << e.what() << '\n';
    return kExitBackend;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionMismatch& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const TrainingError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace ccn
