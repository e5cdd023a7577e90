#pragma once

#include <stdexcept>
#include <string>

#include <CLI11.hpp>

namespace fisao::cli {

/// A run that completed but whose check did not hold; exits with status 1.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_synth(CLI::App& root);
void add_lexicon(CLI::App& root);
void add_baselines(CLI::App& root);
void add_score(CLI::App& root);
void add_train(CLI::App& root);
void add_verify_theorem(CLI::App& root);
void add_analyze(CLI::App& root);

}  // namespace fisao::cli
