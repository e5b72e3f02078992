#include <CLI11.hpp>

#include <array>
#include <iostream>
#include <sstream>
#include <string>

#include "commands.hpp"

namespace {

std::array<double, 3> parse_fractions(const std::string& text) {
  std::array<double, 3> out{};
  std::stringstream ss(text);
  std::string item;
  std::size_t k = 0;
  while (std::getline(ss, item, ',')) {
    if (k == 3) throw CLI::ValidationError("--fractions", "expected three values");
    try {
      out[k++] = std::stod(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--fractions", "cannot parse '" + item + "'");
    }
  }
  if (k != 3) throw CLI::ValidationError("--fractions", "expected three values");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nlse::cli;
  CLI::App app{"Simulate, generate, fit and evaluate NLSE parameter-estimation datasets"};
  app.require_subcommand(1);

  GenerateArgs gen;
  std::uint64_t gen_seed = 0;
  auto* generate = app.add_subcommand("generate", "Generate a labeled dataset");
  generate->add_option("--config", gen.config, "Manifest/config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out, "Output dataset directory")->required();
  auto* seed_opt = generate->add_option("--seed", gen_seed, "Override the master seed");
  generate->add_option("--threads", gen.threads, "Worker threads")->check(CLI::PositiveNumber);
  generate->add_flag("--quiet", gen.quiet, "No progress output");

  SplitArgs sp;
  std::string fractions = "0.8,0.1,0.1";
  auto* split = app.add_subcommand("split", "Assign train/validation/test splits");
  split->add_option("--dataset", sp.dataset)->required()->check(CLI::ExistingDirectory);
  split->add_option("--fractions", fractions, "train,validation,test");
  split->add_option("--seed", sp.seed, "Shuffle seed");

  OracleArgs orc;
  auto* oracle = app.add_subcommand("oracle", "Fit one sample by simulation in the loop");
  oracle->add_option("--dataset", orc.dataset)->required()->check(CLI::ExistingDirectory);
  oracle->add_option("--index", orc.index)->required();
  oracle->add_option("--method", orc.method)
      ->check(CLI::IsMember({"grid", "nelder-mead"}));
  oracle->add_option("--budget", orc.budget)->check(CLI::Range(27, 1000000));

  EvalArgs ev;
  std::string plot;
  auto* eval = app.add_subcommand("eval", "Score a predictions CSV against a dataset");
  eval->add_option("--pred", ev.predictions)->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", ev.out, "Metrics JSON output")->required();
  eval->add_option("--plot", plot, "Directory for predicted-vs-true SVGs");

  nlse::checks::SelftestOptions st;
  auto* selftest = app.add_subcommand("selftest", "Run the analytic self-checks");
  selftest->add_option("--inject-kinetic-sign", st.kinetic_sign)->group("");
  selftest->add_option("--strang-base-steps", st.strang_base_steps)->group("");

  try {
    app.parse(argc, argv);
    if (*split) sp.fractions = parse_fractions(fractions);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (*generate) {
    if (*seed_opt) gen.seed = gen_seed;
    return cmd_generate(gen);
  }
  if (*split) return cmd_split(sp);
  if (*oracle) return cmd_oracle(orc);
  if (*eval) {
    if (!plot.empty()) ev.plot = plot;
    return cmd_eval(ev);
  }
  return cmd_selftest(st);
}
