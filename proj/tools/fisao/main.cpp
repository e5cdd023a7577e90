#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fisao/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Token-level verifier rewards, clipped PPO, and the mixing-theorem lab"};
  app.require_subcommand(1);
  fisao::cli::add_synth(app);
  fisao::cli::add_lexicon(app);
  fisao::cli::add_baselines(app);
  fisao::cli::add_score(app);
  fisao::cli::add_train(app);
  fisao::cli::add_verify_theorem(app);
  fisao::cli::add_analyze(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const fisao::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fisao::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fisao::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fisao::cli::CheckFailed& e) {
    std::cerr << "check failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
