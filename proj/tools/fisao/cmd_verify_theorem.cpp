#include <iostream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "fisao/theory_lab.hpp"

namespace fisao::cli {
namespace {

struct TheoremState {
  CommonFlags common;
  Schema schema;
  theory::TheoryConfig cfg;
  std::size_t sweep_points = 10;
};

void run(TheoremState& st) {
  apply_config(st.common, st.schema);
  st.cfg.validate();
  const OutputDir out(st.common.out, st.common.force);
  out.claim({"theorem_report.json", "delta_mse.csv", "effective_config.json"});

  const auto report = theory::verify_theorem(st.cfg);
  nlohmann::json j = report;
  out.write_json("theorem_report.json", j);

  // gamma runs over multiples of kappa, out to 5 kappa (absolute steps when kappa = 0).
  const auto model = theory::make_model(st.cfg);
  const double unit = st.cfg.kappa > 0.0 ? st.cfg.kappa : 0.1;
  std::ostringstream csv;
  csv.precision(17);
  csv << "gamma,monte_carlo,closed_form,std_error,mean_sq_vision\n";
  for (std::size_t k = 1; k <= st.sweep_points; ++k) {
    const double gamma = 5.0 * unit * static_cast<double>(k) / static_cast<double>(st.sweep_points);
    const auto d = theory::delta_mse(gamma, st.cfg, model);
    csv << d.gamma << ',' << d.monte_carlo << ',' << d.closed_form << ',' << d.std_error << ',' << d.mean_sq_vision
        << '\n';
  }
  out.write_text("delta_mse.csv", csv.str());
  out.write_effective_config("verify-theorem", st.schema.dump());

  std::cout.precision(6);
  std::cout << "lambda_star " << report.lambda_star << '\n'
            << "loss_at_zero " << report.loss_at_zero << '\n'
            << "loss_at_star " << report.loss_at_star << '\n'
            << "stderr " << report.std_error << '\n'
            << "result " << (report.pass ? "PASS" : "FAIL") << '\n';
  if (!report.note.empty()) std::cout << "note " << report.note << '\n';
  if (!report.pass && !report.premise_absent) {
    throw CheckFailed("loss at the best lambda does not beat lambda = 0 by the required margin");
  }
}

}  // namespace

void add_verify_theorem(CLI::App& root) {
  auto* app = root.add_subcommand("verify-theorem", "Monte-Carlo check that some lambda > 0 lowers regression loss");
  auto st = std::make_shared<TheoremState>();
  auto& s = st->schema;
  auto& c = st->cfg;
  s.field("seed", c.seed, "Random seed");
  s.field("d_v", c.d_v, "Image dimension");
  s.field("d_t", c.d_t, "Text dimension");
  s.field("r", c.r, "Shared latent rank");
  s.field("kappa", c.kappa, "Weight of the vision-estimable noise component");
  s.field("lambda_mix", c.lambda_mix, "Mixing weight reported alongside the sweep");
  s.field("noise_v", c.noise_v, "Image noise scale");
  s.field("noise_t", c.noise_t, "Text noise scale");
  s.field("noise_eps", c.noise_eps, "Response noise scale");
  s.field("n_samples", c.n_samples, "Monte-Carlo samples");
  s.field("grid_cells", c.grid_cells, "Lambda grid resolution");
  s.field("pass_sigmas", c.pass_sigmas, "Required improvement in standard errors");
  s.field("threads", c.threads, "Sampling threads (results do not depend on it)");
  s.field("sweep_points", st->sweep_points, "Points in the delta-MSE sweep");
  s.bind(*app);
  add_common_flags(*app, st->common);
  app->callback([st] { run(*st); });
}

}  // namespace fisao::cli
