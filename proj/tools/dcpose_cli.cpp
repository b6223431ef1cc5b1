#include <CLI11.hpp>
#include <iostream>

#include "dcpose/errors.hpp"
#include "dcpose/harness/ablate.hpp"
#include "dcpose/harness/config.hpp"
#include "dcpose/harness/eval.hpp"
#include "dcpose/harness/gen.hpp"
#include "dcpose/harness/train.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kNumericalAbort = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense-correspondence 6-DoF pose estimation of a wristed instrument"};
  app.require_subcommand(1);
  std::string config, data, out, ckpt;
  bool verbose = false, resume = false, oracle = false;

  auto* gen = app.add_subcommand("gen", "render a synthetic BOP dataset");
  gen->add_option("--config", config, "config file")->required();
  gen->add_option("--out", out, "output dataset directory")->required();

  auto* train = app.add_subcommand("train", "train the encoder and the latent field");
  train->add_option("--config", config, "config file")->required();
  train->add_option("--data", data, "training dataset directory")->required();
  train->add_option("--out", out, "checkpoint directory")->required();
  train->add_flag("--resume", resume, "continue from the latest step checkpoint in --out");
  train->add_flag("-v,--verbose", verbose, "print the loss every 50 steps");

  auto* eval = app.add_subcommand("eval", "estimate poses on a dataset and write the report");
  eval->add_option("--ckpt", ckpt, "checkpoint file or training directory");
  eval->add_option("--data", data, "dataset directory")->required();
  eval->add_option("--out", out, "report directory")->required();
  eval->add_flag("--oracle", oracle, "score the ground-truth poses instead of running inference");

  auto* ablate = app.add_subcommand("ablate", "train and compare the four loss variants");
  ablate->add_option("--config", config, "config file")->required();
  ablate->add_option("--out", out, "output directory")->required();
  ablate->add_flag("-v,--verbose", verbose, "report progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) {
      dcpose::cmd_gen(dcpose::ExperimentConfig::load(config), out);
    } else if (*train) {
      dcpose::TrainOptions opts;
      opts.resume = resume;
      opts.verbose = verbose;
      dcpose::cmd_train(dcpose::ExperimentConfig::load(config), data, out, opts);
    } else if (*eval) {
      if (!oracle && ckpt.empty()) throw dcpose::ConfigError("eval: --ckpt is required unless --oracle is given");
      dcpose::cmd_eval(ckpt, data, out, oracle);
    } else if (*ablate) {
      dcpose::cmd_ablate(dcpose::ExperimentConfig::load(config), out, verbose);
    }
  } catch (const dcpose::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const dcpose::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const dcpose::NumericalAbort& e) {
    std::cerr << "numerical abort at step " << e.step() << ": " << e.what() << '\n';
    return kNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
