#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace seld::cli {

namespace fs = std::filesystem;

/// Flags shared by every verb.
struct GlobalOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  fs::path out;
};

struct SimulateOptions {
  std::optional<fs::path> script;  ///< JSON scene script replacing random generation
  int threads = 0;                 ///< 0 = hardware concurrency
};

struct TrainOptions {
  fs::path data;
  std::optional<fs::path> log;
  bool resume = false;
};

struct SupportOptions {
  std::optional<std::string> mode;
  std::vector<std::string> classes;
  std::optional<fs::path> class_file;
  std::optional<fs::path> clips;
  std::optional<int> shots;
};

struct InferOptions {
  fs::path checkpoint;
  fs::path support;
  fs::path audio;
  std::optional<fs::path> embeddings;
  std::optional<bool> clap_override;
};

struct EvaluateOptions {
  fs::path predictions;
  fs::path references;
};

int run_simulate(const GlobalOptions& global, const SimulateOptions& options);
int run_train(const GlobalOptions& global, const TrainOptions& options);
int run_support(const GlobalOptions& global, const SupportOptions& options);
int run_infer(const GlobalOptions& global, const InferOptions& options);
int run_evaluate(const GlobalOptions& global, const EvaluateOptions& options);

}  // namespace seld::cli
