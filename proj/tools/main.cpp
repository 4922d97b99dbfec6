#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "seld/error.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace seld::cli;

  CLI::App app{"Sound event localization and detection with language-audio embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "seld 0.1.0");

  GlobalOptions global;
  std::string config_path, out_path;
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Root seed, overriding the configuration");
  app.add_option("--out", out_path, "Output path (directory for simulate, file otherwise)");
  app.fallthrough();

  std::function<int()> action;

  SimulateOptions sim;
  std::string script;
  auto* simulate = app.add_subcommand("simulate", "Synthesize FOA scenes with annotations and embedding sidecars");
  auto* script_opt = simulate->add_option("--script", script, "JSON scene script used instead of random scenes")
                         ->check(CLI::ExistingFile);
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  simulate->callback([&] {
    if (*script_opt) sim.script = script;
    action = [&] { return run_simulate(global, sim); };
  });

  TrainOptions train;
  std::string log;
  auto* train_cmd = app.add_subcommand("train", "Train the network on a simulated dataset");
  train_cmd->add_option("--data", train.data, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);
  auto* log_opt = train_cmd->add_option("--log", log, "Loss CSV (default: checkpoint path with .loss.csv)");
  train_cmd->add_flag("--resume", train.resume, "Continue from the checkpoint at --out if it exists");
  train_cmd->callback([&] {
    if (*log_opt) train.log = log;
    action = [&] { return run_train(global, train); };
  });

  SupportOptions support;
  std::string mode, class_file, clips;
  int shots = 0;
  auto* support_cmd = app.add_subcommand("support", "Build class and noise support embeddings");
  auto* mode_opt = support_cmd->add_option("--mode", mode, "zero (text prompts) or few (audio prototypes)")
                       ->check(CLI::IsMember({"zero", "few"}));
  support_cmd->add_option("--classes", support.classes, "Class names, in order")->delimiter(',');
  auto* class_file_opt =
      support_cmd->add_option("--class-file", class_file, "File with one class name per line")->check(CLI::ExistingFile);
  auto* clips_opt = support_cmd->add_option("--clips", clips, "Few-shot clip list: <class>\\t<clip> per line")
                        ->check(CLI::ExistingFile);
  auto* shots_opt = support_cmd->add_option("--shots", shots, "Synthetic shots per class (stub provider)")
                        ->check(CLI::NonNegativeNumber);
  support_cmd->callback([&] {
    if (*mode_opt) support.mode = mode;
    if (*class_file_opt) support.class_file = class_file;
    if (*clips_opt) support.clips = clips;
    if (*shots_opt) support.shots = shots;
    action = [&] { return run_support(global, support); };
  });

  InferOptions infer;
  std::string embeddings;
  auto* infer_cmd = app.add_subcommand("infer", "Detect and localize events in a FOA recording");
  infer_cmd->add_option("--checkpoint", infer.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--support", infer.support, "Support set file")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--audio", infer.audio, "4-channel FOA WAV")->required()->check(CLI::ExistingFile);
  auto* emb_opt = infer_cmd->add_option("--embeddings", embeddings, "Segment embedding table for the CLAP override")
                      ->check(CLI::ExistingFile);
  auto* clap_opt = infer_cmd->add_flag("--clap-override,!--no-clap-override",
                                       "Relabel single-source frames with the segment audio embedding");
  infer_cmd->callback([&] {
    if (*emb_opt) infer.embeddings = embeddings;
    if (*clap_opt) infer.clap_override = clap_opt->as<bool>();
    action = [&] { return run_infer(global, infer); };
  });

  EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against references");
  evaluate_cmd->add_option("--pred", evaluate.predictions, "Prediction CSV")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--ref", evaluate.references, "Reference CSV")->required()->check(CLI::ExistingFile);
  evaluate_cmd->callback([&] { action = [&] { return run_evaluate(global, evaluate); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  if (*config_opt) global.config = config_path;
  if (*seed_opt) global.seed = seed;
  global.out = out_path;

  try {
    return action();
  } catch (const seld::Error& e) {
    std::fprintf(stderr, "seld: %s error: %s\n", seld::to_string(e.kind()), e.what());
    return seld::is_validation(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "seld: parse error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "seld: io error: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "seld: %s\n", e.what());
    return kExitRuntime;
  }
}
