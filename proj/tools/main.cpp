#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using qml::cli::FlagValues;

void add_common_flags(CLI::App* cmd, FlagValues& flags) {
  cmd->add_option("--config", flags.config_path,
                  "JSON config file with flat dotted keys (flags win)");
  cmd->add_option("--data", flags.data, "digits CSV path (or set QMLLAB_DATA)");
  cmd->add_option("--out", flags.out, "output directory (default: out)");
  cmd->add_option("--seed", flags.seed, "seed for model init, training and search");
  cmd->add_option("--model", flags.model,
                  "qmlp|qff|qbp|baseline|classical-mlp|classical-ff");
  cmd->add_option("--qubits", flags.qubits, "qubit count (2..13)");
  cmd->add_option("--depth", flags.depth, "ansatz depth (entangling repetitions)");
  cmd->add_option("--epochs", flags.epochs, "training epochs");
  cmd->add_option("--batch", flags.batch, "batch size");
  cmd->add_option("--lr", flags.lr, "learning rate");
  cmd->add_option("--optimizer", flags.optimizer, "sgd|adam");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmllab: hybrid quantum-classical models, training and search"};
  app.require_subcommand(1);

  FlagValues train_flags, compare_flags, search_flags, gradcheck_flags;

  CLI::App* train = app.add_subcommand("train", "train one model and write its report");
  add_common_flags(train, train_flags);

  CLI::App* compare = app.add_subcommand(
      "compare", "train Baseline QNN, QMLP, QFF and QBP under one budget");
  add_common_flags(compare, compare_flags);

  CLI::App* search = app.add_subcommand(
      "search", "run the evolutionary model search and write the archive");
  add_common_flags(search, search_flags);
  search->add_option("--generator", search_flags.generator, "scripted|remote");
  search->add_option("--endpoint", search_flags.endpoint,
                     "remote generator URL, e.g. http://127.0.0.1:8080/generate");
  search->add_option("--population", search_flags.population, "population size");
  search->add_option("--generations", search_flags.generations, "generation count");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "compare analytic gradients against finite differences");
  add_common_flags(gradcheck, gradcheck_flags);
  gradcheck->add_flag("--corrupt-shift", gradcheck_flags.corrupt_shift,
                      "debug: corrupt the shift constant; the check must fail");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return qml::cli::run_command(qml::cli::cmd_train, train_flags);
  if (compare->parsed()) return qml::cli::run_command(qml::cli::cmd_compare, compare_flags);
  if (search->parsed()) return qml::cli::run_command(qml::cli::cmd_search, search_flags);
  if (gradcheck->parsed()) {
    return qml::cli::run_command(qml::cli::cmd_gradcheck, gradcheck_flags);
  }
  return 1;
}
