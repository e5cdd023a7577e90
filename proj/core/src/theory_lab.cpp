#include "fisao/theory_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "fisao/error.hpp"
#include "fisao/random.hpp"

namespace fisao::theory {
namespace {

constexpr Eigen::Index kBlock = 4096;
constexpr double kRidge = 1e-10;

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * n01(rng);
  }
  return m;
}

Eigen::MatrixXd orthonormal_columns(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  const Eigen::MatrixXd g = gaussian(rng, rows, cols, 1.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  // Fix column signs so diag(R) > 0; makes the factor unique.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (r(c, c) < 0) q.col(c) *= -1.0;
  }
  return q;
}

// Draw order per sample: z_v, z_t, xi_v, xi_t, eps.
void draw_column(Rng& rng, const TheoryConfig& cfg, const LatentModel& model, SamplePair& s) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto r = static_cast<Eigen::Index>(cfg.r);
  const auto dv = static_cast<Eigen::Index>(cfg.d_v);
  const auto dt = static_cast<Eigen::Index>(cfg.d_t);
  s.z_v.resize(r);
  s.z_t.resize(r);
  s.xi_v.resize(dv);
  s.xi_t.resize(dt);
  s.epsilon_tilde.resize(dt);
  for (Eigen::Index i = 0; i < r; ++i) s.z_v(i) = n01(rng);
  for (Eigen::Index i = 0; i < r; ++i) s.z_t(i) = n01(rng);
  for (Eigen::Index i = 0; i < dv; ++i) s.xi_v(i) = cfg.noise_v * n01(rng);
  for (Eigen::Index i = 0; i < dt; ++i) s.xi_t(i) = cfg.noise_t * n01(rng);
  for (Eigen::Index i = 0; i < dt; ++i) s.epsilon_tilde(i) = cfg.noise_eps * n01(rng);
  s.v = model.U_v * s.z_v + s.xi_v;
  s.t = model.U_t * s.z_t + s.xi_t;
}

double mean(const Eigen::VectorXd& x) { return x.mean(); }

double std_error(const Eigen::VectorXd& x) {
  const auto n = static_cast<double>(x.size());
  if (n < 2) return 0.0;
  const double m = x.mean();
  const double var = (x.array() - m).square().sum() / (n - 1.0);
  return std::sqrt(var / n);
}

}  // namespace

void TheoryConfig::validate() const {
  if (r < 1) throw ConfigError("theory: latent dimension r must be >= 1");
  if (r > std::min(d_v, d_t)) throw ConfigError("theory: r must not exceed min(d_v, d_t)");
  if (!(lambda_mix >= 0.0 && lambda_mix < 1.0)) throw ConfigError("theory: lambda_mix must lie in [0, 1)");
  if (!(noise_v >= 0.0 && noise_t >= 0.0 && noise_eps >= 0.0)) throw ConfigError("theory: noise scales must be >= 0");
  if (grid_cells < 2) throw ConfigError("theory: grid_cells must be >= 2");
  if (n_samples < 4 * (d_t + 1)) throw ConfigError("theory: n_samples too small for the regression split");
  if (threads < 1) throw ConfigError("theory: threads must be >= 1");
}

LatentModel make_model(const TheoryConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 0));
  const auto dv = static_cast<Eigen::Index>(cfg.d_v);
  const auto dt = static_cast<Eigen::Index>(cfg.d_t);
  const auto r = static_cast<Eigen::Index>(cfg.r);
  LatentModel m;
  m.U_v = orthonormal_columns(rng, dv, r);
  m.U_t = orthonormal_columns(rng, dt, r);
  m.V1_star = gaussian(rng, dt, dv, 1.0 / std::sqrt(static_cast<double>(dv)));
  m.V2_star = gaussian(rng, dt, dt, 1.0 / std::sqrt(static_cast<double>(dt)));
  m.beta_star = gaussian(rng, dt, 1, 1.0 / std::sqrt(static_cast<double>(dt)));
  return m;
}

SamplePair draw_pair(const TheoryConfig& cfg, const LatentModel& model, std::uint64_t seed) {
  Rng rng(seed);
  SamplePair s;
  draw_column(rng, cfg, model, s);
  return s;
}

SampleBatch draw_samples(const TheoryConfig& cfg, const LatentModel& model, std::size_t n, std::uint64_t seed) {
  const auto total = static_cast<Eigen::Index>(n);
  SampleBatch b;
  b.V.resize(static_cast<Eigen::Index>(cfg.d_v), total);
  b.T.resize(static_cast<Eigen::Index>(cfg.d_t), total);
  b.Eps.resize(static_cast<Eigen::Index>(cfg.d_t), total);
  const Eigen::Index blocks = (total + kBlock - 1) / kBlock;

  auto fill = [&](Eigen::Index first_block, Eigen::Index stride) {
    SamplePair s;
    for (Eigen::Index blk = first_block; blk < blocks; blk += stride) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(blk)));
      const Eigen::Index end = std::min(total, (blk + 1) * kBlock);
      for (Eigen::Index c = blk * kBlock; c < end; ++c) {
        draw_column(rng, cfg, model, s);
        b.V.col(c) = s.v;
        b.T.col(c) = s.t;
        b.Eps.col(c) = s.epsilon_tilde;
      }
    }
  };

  const auto workers = static_cast<Eigen::Index>(std::max<std::size_t>(1, cfg.threads));
  if (workers == 1 || blocks < 2) {
    fill(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (Eigen::Index w = 0; w < workers; ++w) pool.emplace_back(fill, w, workers);
    for (auto& th : pool) th.join();
  }
  return b;
}

Scores scores(const Eigen::VectorXd& y, const Eigen::VectorXd& v, const Eigen::VectorXd& t, const LatentModel& model,
              double lambda_mix) {
  if (y.size() != model.U_t.rows() || v.size() != model.U_v.rows() || t.size() != model.U_t.rows()) {
    throw DimensionError("theory scores: dimension mismatch");
  }
  const double r_sft = -(y - (model.V1_star * v + model.V2_star * t)).squaredNorm();
  const double r_i = (model.U_v.transpose() * v).dot(model.U_t.transpose() * y);
  return {r_sft, r_i, (1.0 - lambda_mix) * r_sft + lambda_mix * r_i};
}

Eigen::VectorXd optimal_response(const Eigen::VectorXd& v, const Eigen::VectorXd& t, double gamma,
                                 const LatentModel& model) {
  return model.V1_star * v + model.V2_star * t + (gamma / 2.0) * (model.U_t * (model.U_v.transpose() * v));
}

Eigen::VectorXd ground_truth(const Eigen::VectorXd& v, const Eigen::VectorXd& t, const LatentModel& model,
                             double kappa, const Eigen::VectorXd& epsilon_tilde) {
  return model.V1_star * v + model.V2_star * t + kappa * (model.U_t * (model.U_v.transpose() * v)) + epsilon_tilde;
}

Eigen::MatrixXd optimal_responses(const SampleBatch& batch, double gamma, const LatentModel& model) {
  const Eigen::MatrixXd A = model.V1_star + (gamma / 2.0) * model.vision_map();
  return A * batch.V + model.V2_star * batch.T;
}

Eigen::MatrixXd ground_truths(const SampleBatch& batch, const LatentModel& model, double kappa) {
  const Eigen::MatrixXd A = model.V1_star + kappa * model.vision_map();
  return A * batch.V + model.V2_star * batch.T + batch.Eps;
}

RegressionFit fit_regression(const Eigen::MatrixXd& ys, const Eigen::VectorXd& zs) {
  if (ys.cols() != zs.size()) throw DimensionError("regression: sample counts differ");
  if (ys.cols() <= ys.rows()) throw InputError("regression: need more samples than dimensions");
  const double n = static_cast<double>(ys.cols());
  Eigen::MatrixXd gram = (ys * ys.transpose()) / n;
  gram.diagonal().array() += kRidge;
  const Eigen::VectorXd rhs = (ys * zs) / n;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericError("regression: normal equations are not positive definite");
  }
  RegressionFit fit;
  fit.beta = ldlt.solve(rhs);
  if (!fit.beta.allFinite()) throw NumericError("regression: rank deficiency beyond ridge rescue");
  fit.loss = (zs - ys.transpose() * fit.beta).squaredNorm() / n;
  return fit;
}

double regression_loss(const Eigen::MatrixXd& ys, const Eigen::VectorXd& zs) { return fit_regression(ys, zs).loss; }

Eigen::VectorXd holdout_squared_residuals(const Eigen::MatrixXd& train_ys, const Eigen::VectorXd& train_zs,
                                          const Eigen::MatrixXd& eval_ys, const Eigen::VectorXd& eval_zs) {
  const auto fit = fit_regression(train_ys, train_zs);
  return (eval_zs - eval_ys.transpose() * fit.beta).array().square();
}

DeltaMse delta_mse(double gamma, const TheoryConfig& cfg, const LatentModel& model) {
  cfg.validate();
  const SampleBatch batch = draw_samples(cfg, model, cfg.n_samples, mix_seed(cfg.seed, 2));
  const Eigen::MatrixXd truth = ground_truths(batch, model, cfg.kappa);
  const Eigen::MatrixXd at_gamma = optimal_responses(batch, gamma, model) - truth;
  const Eigen::MatrixXd at_zero = optimal_responses(batch, 0.0, model) - truth;
  const Eigen::VectorXd diff = at_gamma.colwise().squaredNorm().transpose() - at_zero.colwise().squaredNorm().transpose();
  const Eigen::VectorXd vision_sq = (model.vision_map() * batch.V).colwise().squaredNorm().transpose();

  DeltaMse out;
  out.gamma = gamma;
  out.monte_carlo = mean(diff);
  out.std_error = std_error(diff);
  out.mean_sq_vision = mean(vision_sq);
  const double shift = gamma / 2.0 - cfg.kappa;
  out.closed_form = (shift * shift - cfg.kappa * cfg.kappa) * out.mean_sq_vision;
  return out;
}

void to_json(nlohmann::json& j, const TheoremReport& r) {
  j = nlohmann::json{{"kappa", r.kappa},
                     {"lambda_grid", r.lambda_grid},
                     {"losses", r.losses},
                     {"stderr", r.std_error},
                     {"lambda_star", r.lambda_star},
                     {"loss_at_star", r.loss_at_star},
                     {"loss_at_zero", r.loss_at_zero},
                     {"pass", r.pass},
                     {"premise_absent", r.premise_absent},
                     {"note", r.note}};
}

TheoremReport verify_theorem(const TheoryConfig& cfg) {
  cfg.validate();
  const LatentModel model = make_model(cfg);
  const SampleBatch batch = draw_samples(cfg, model, cfg.n_samples, mix_seed(cfg.seed, 1));
  const Eigen::VectorXd z = (model.beta_star.transpose() * ground_truths(batch, model, cfg.kappa)).transpose();

  const Eigen::Index n_train = batch.size() / 2;
  const Eigen::Index n_eval = batch.size() - n_train;
  auto residuals = [&](double gamma) {
    const Eigen::MatrixXd y = optimal_responses(batch, gamma, model);
    return holdout_squared_residuals(y.leftCols(n_train), z.head(n_train), y.rightCols(n_eval), z.tail(n_eval));
  };

  TheoremReport report;
  report.kappa = cfg.kappa;
  const Eigen::VectorXd res_zero = residuals(0.0);
  report.loss_at_zero = res_zero.mean();

  Eigen::VectorXd res_star;
  report.loss_at_star = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < cfg.grid_cells; ++k) {
    const double lambda = static_cast<double>(k) / static_cast<double>(cfg.grid_cells);
    Eigen::VectorXd res = residuals(TheoryConfig::gamma_for(lambda));
    const double loss = res.mean();
    report.lambda_grid.push_back(lambda);
    report.losses.push_back(loss);
    if (loss < report.loss_at_star) {
      report.loss_at_star = loss;
      report.lambda_star = lambda;
      res_star = std::move(res);
    }
  }
  report.std_error = std_error(res_star - res_zero);
  report.pass = (report.loss_at_zero - report.loss_at_star) > cfg.pass_sigmas * report.std_error;
  report.premise_absent = cfg.kappa == 0.0;
  if (report.premise_absent) {
    report.note = "premise absent: kappa = 0 leaves no vision-estimable noise, so no lambda > 0 is expected to help";
  } else if (report.pass) {
    report.note = "mixing vision feedback lowers the held-out regression loss";
  } else {
    report.note = "no lambda on the grid beats lambda = 0 beyond Monte-Carlo error";
  }
  return report;
}

}  // namespace fisao::theory
