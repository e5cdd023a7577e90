#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace fisao::theory {

/// Linear-Gaussian model of image input v, text input t, and response y:
///
///   v = U_v z_v + xi_v,   t = U_t z_t + xi_t,
///   y_truth = V1* v + V2* t + kappa U_t U_v^T v + eps,
///   z = beta*^T y_truth.
///
/// Mixing the supervised score with the vision score at weight lambda moves the
/// optimal response by (gamma / 2) U_t U_v^T v with gamma = lambda / (1 - lambda).
struct TheoryConfig {
  std::size_t d_v = 8;
  std::size_t d_t = 8;
  std::size_t r = 4;
  double kappa = 0.5;
  double lambda_mix = 0.5;
  double noise_v = 0.1;
  double noise_t = 0.1;
  double noise_eps = 0.1;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 2024;
  /// The lambda grid is k / grid_cells for k = 1 .. grid_cells - 1.
  std::size_t grid_cells = 20;
  /// Required improvement over lambda = 0, in Monte-Carlo standard errors.
  double pass_sigmas = 3.0;
  std::size_t threads = 1;

  void validate() const;
  double gamma_mix() const { return gamma_for(lambda_mix); }
  static double gamma_for(double lambda) { return lambda / (1.0 - lambda); }
};

struct LatentModel {
  Eigen::MatrixXd U_v;        // d_v x r, orthonormal columns
  Eigen::MatrixXd U_t;        // d_t x r, orthonormal columns
  Eigen::MatrixXd V1_star;    // d_t x d_v
  Eigen::MatrixXd V2_star;    // d_t x d_t
  Eigen::VectorXd beta_star;  // d_t

  /// U_t U_v^T, the direction the vision feedback pushes along.
  Eigen::MatrixXd vision_map() const { return U_t * U_v.transpose(); }
};

/// Orthonormal factors from QR of Gaussian matrices; V1*, V2*, beta* have
/// N(0, 1/dim) entries. Deterministic under cfg.seed.
LatentModel make_model(const TheoryConfig& cfg);

/// One draw with its noise kept for bookkeeping.
struct SamplePair {
  Eigen::VectorXd v, t;
  Eigen::VectorXd z_v, z_t;
  Eigen::VectorXd xi_v, xi_t;
  Eigen::VectorXd epsilon_tilde;
};

SamplePair draw_pair(const TheoryConfig& cfg, const LatentModel& model, std::uint64_t seed);

/// Column-major sample matrices (one column per draw).
struct SampleBatch {
  Eigen::MatrixXd V;    // d_v x n
  Eigen::MatrixXd T;    // d_t x n
  Eigen::MatrixXd Eps;  // d_t x n

  Eigen::Index size() const { return V.cols(); }
};

/// Draws n samples in fixed-size blocks whose seeds derive from `seed`, so the
/// result does not depend on cfg.threads.
SampleBatch draw_samples(const TheoryConfig& cfg, const LatentModel& model, std::size_t n, std::uint64_t seed);

struct Scores {
  double r_sft;
  double r_i;
  double merged;
};

/// R_sft(y) = -||y - (V1* v + V2* t)||^2, R_I(y) = <U_v^T v, U_t^T y>,
/// merged = (1 - lambda) R_sft + lambda R_I.
Scores scores(const Eigen::VectorXd& y, const Eigen::VectorXd& v, const Eigen::VectorXd& t, const LatentModel& model,
              double lambda_mix);

/// Closed-form maximizer of the merged score: (V1* v + V2* t) + (gamma / 2) U_t U_v^T v.
Eigen::VectorXd optimal_response(const Eigen::VectorXd& v, const Eigen::VectorXd& t, double gamma,
                                 const LatentModel& model);

Eigen::VectorXd ground_truth(const Eigen::VectorXd& v, const Eigen::VectorXd& t, const LatentModel& model,
                             double kappa, const Eigen::VectorXd& epsilon_tilde);

/// Batched forms over SampleBatch columns.
Eigen::MatrixXd optimal_responses(const SampleBatch& batch, double gamma, const LatentModel& model);
Eigen::MatrixXd ground_truths(const SampleBatch& batch, const LatentModel& model, double kappa);

struct RegressionFit {
  Eigen::VectorXd beta;
  double loss;
};

/// min_beta mean (z - beta^T y)^2 over the given samples (ys is d_t x n), via
/// normal equations with a 1e-10 ridge on the per-sample Gram matrix.
/// Throws InputError when n <= d_t and NumericError when the solve fails.
RegressionFit fit_regression(const Eigen::MatrixXd& ys, const Eigen::VectorXd& zs);
double regression_loss(const Eigen::MatrixXd& ys, const Eigen::VectorXd& zs);

/// Fits beta on one split and returns per-sample squared residuals on another.
Eigen::VectorXd holdout_squared_residuals(const Eigen::MatrixXd& train_ys, const Eigen::VectorXd& train_zs,
                                          const Eigen::MatrixXd& eval_ys, const Eigen::VectorXd& eval_zs);

struct DeltaMse {
  double gamma;
  double monte_carlo;
  double closed_form;
  /// Standard error of the Monte-Carlo estimate.
  double std_error;
  /// Sample mean of ||U_t U_v^T v||^2.
  double mean_sq_vision;
};

/// MSE(gamma) - MSE(0) by simulation, and [(gamma/2 - kappa)^2 - kappa^2] E||U_t U_v^T v||^2
/// with the expectation estimated on the same draws.
DeltaMse delta_mse(double gamma, const TheoryConfig& cfg, const LatentModel& model);

struct TheoremReport {
  double kappa = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> losses;
  double loss_at_zero = 0.0;
  double lambda_star = 0.0;
  double loss_at_star = 0.0;
  /// Standard error of loss(lambda*) - loss(0) on the evaluation split.
  double std_error = 0.0;
  bool pass = false;
  bool premise_absent = false;
  std::string note;
};

void to_json(nlohmann::json& j, const TheoremReport& r);

/// Sweeps lambda over the grid, evaluates the held-out regression loss of the
/// optimal response at each point, and passes when the best lambda beats
/// lambda = 0 by more than cfg.pass_sigmas standard errors.
TheoremReport verify_theorem(const TheoryConfig& cfg);

}  // namespace fisao::theory
