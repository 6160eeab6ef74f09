#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "nmf/errors.hpp"
#include "nmf/simulate.hpp"

using nmf::PriorSpec;

namespace {

nmf::ProblemSpec ridge_problem() {
  return nmf::ProblemSpec(PriorSpec::gaussian(1.0), PriorSpec::gaussian(1.0), 1.0, 2.0);
}

nmf::ProblemSpec spike_slab_problem() {
  const PriorSpec p = PriorSpec::spike_slab(0.5, 0.2);
  return nmf::ProblemSpec(p, p, 1.0, 2.0);
}

nmf::SimConfig small(std::size_t n, std::size_t p, std::uint64_t seed = 3) {
  nmf::SimConfig c;
  c.n = n;
  c.p = p;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(GenData, ShapesAndIdentity) {
  const auto ds = nmf::gen_data(spike_slab_problem(), small(100, 50));
  ASSERT_EQ(ds.X.rows(), 100);
  ASSERT_EQ(ds.X.cols(), 50);
  EXPECT_LT((ds.y - ds.X * ds.beta_star - ds.epsilon).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(ds.X.colwise().squaredNorm().mean(), 1.0, 0.3);
  EXPECT_GT(ds.d.minCoeff(), 0.0);
}

TEST(GenData, Deterministic) {
  const auto a = nmf::gen_data(spike_slab_problem(), small(60, 30, 9));
  const auto b = nmf::gen_data(spike_slab_problem(), small(60, 30, 9));
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.beta_star, b.beta_star);
  const auto c = nmf::gen_data(spike_slab_problem(), small(60, 30, 10));
  EXPECT_NE(a.X, c.X);
}

TEST(GenData, LaplaceEntryVariance) {
  auto cfg = small(10000, 20);
  cfg.design = nmf::Design::LaplaceIID;
  const auto ds = nmf::gen_data(spike_slab_problem(), cfg);
  const double var = ds.X.squaredNorm() / static_cast<double>(ds.X.size());
  EXPECT_NEAR(var * 10000.0, 1.0, 0.05);
  // excess kurtosis 3 for the Laplace law
  const double m4 = ds.X.array().pow(4).mean();
  EXPECT_NEAR(m4 / (var * var), 6.0, 0.5);
}

TEST(GenData, DesignNames) {
  EXPECT_EQ(nmf::design_from_string(nmf::to_string(nmf::Design::LaplaceIID)), nmf::Design::LaplaceIID);
  EXPECT_THROW(nmf::design_from_string("cauchy"), nmf::InvalidArgument);
}

TEST(DatasetIo, RoundTrip) {
  const auto ds = nmf::gen_data(spike_slab_problem(), small(30, 12));
  const auto path = std::filesystem::temp_directory_path() / "nmf_dataset_roundtrip.bin";
  nmf::save_dataset(path.string(), ds);
  EXPECT_EQ(std::filesystem::file_size(path), 5u + 8u + 8u * (30 * 12 + 30 + 12));
  const auto back = nmf::load_dataset(path.string(), 1.0);
  std::filesystem::remove(path);
  EXPECT_EQ(back.X, ds.X);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_EQ(back.beta_star, ds.beta_star);
  EXPECT_NEAR((back.epsilon - ds.epsilon).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_NEAR((back.d - ds.d).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_THROW(nmf::load_dataset("/nonexistent/file.bin", 1.0), nmf::InvalidArgument);
}

TEST(Objective, GaussianPenaltyIsRidge) {
  const auto pr = ridge_problem();
  const auto ds = nmf::gen_data(pr, small(40, 20));
  Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(20, -1.0, 1.5);
  const auto v = nmf::nmf_objective(pr, ds, u);
  const double fit = (ds.y - ds.X * u).squaredNorm() / 2.0;
  EXPECT_NEAR(v.value - fit, u.squaredNorm() / 2.0, 1e-10);
}

TEST(Objective, GradientAtZero) {
  const auto pr = spike_slab_problem();
  const auto ds = nmf::gen_data(pr, small(40, 20));
  const auto v = nmf::nmf_objective(pr, ds, Eigen::VectorXd::Zero(20));
  const Eigen::VectorXd expected = -(ds.X.transpose() * ds.y);
  EXPECT_LT((v.gradient - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Objective, BoundedSupportRejectsBoundary) {
  const PriorSpec tp = PriorSpec::three_point(0.8);
  const nmf::ProblemSpec pr(tp, tp, 1.0, 2.0);
  const auto ds = nmf::gen_data(pr, small(10, 5));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(5);
  u[2] = 1.0;
  EXPECT_THROW(nmf::nmf_objective(pr, ds, u), nmf::OutOfSupport);
  const nmf::NmfObjective obj(pr, ds);
  EXPECT_TRUE(std::isinf(obj.value_or_inf(u)));
}

TEST(Minimize, GaussianPriorGivesRidgeSolution) {
  const auto pr = ridge_problem();
  const auto ds = nmf::gen_data(pr, small(200, 100));
  const auto fit = nmf::minimize_nmf(pr, ds, {});
  ASSERT_TRUE(fit.converged);
  EXPECT_LT(fit.grad_norm, 1e-8);
  const Eigen::MatrixXd a = ds.X.transpose() * ds.X + Eigen::MatrixXd::Identity(100, 100);
  const Eigen::VectorXd ridge = a.llt().solve(ds.X.transpose() * ds.y);
  EXPECT_LT((fit.u - ridge).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(fit.objective_increases, 0);
}

TEST(Minimize, ZeroResponseGivesZero) {
  const auto pr = spike_slab_problem();
  auto ds = nmf::gen_data(pr, small(2, 2));
  ds.y.setZero();
  const auto fit = nmf::minimize_nmf(pr, ds, {});
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Wasserstein, OneDimensional) {
  EXPECT_EQ(nmf::w2_squared_1d({1.0, 3.0, 2.0}, {3.0, 1.0, 2.0}), 0.0);
  EXPECT_NEAR(nmf::w2_squared_1d({0.0, 1.0}, {1.0, 2.0}), 1.0, 1e-15);
  // unequal sizes: quantile coupling of {0, 1} with {0, 0.5, 1}
  EXPECT_NEAR(nmf::w2_squared_1d({0.0, 1.0}, {0.0, 0.5, 1.0}), 0.5 * 0.25 / 3.0 * 2.0, 1e-15);
}

TEST(Wasserstein, SlicedExamples) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  std::vector<double> x(20000), y(20000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = n01(rng);
    y[i] = n01(rng);
  }
  EXPECT_EQ(nmf::w2_sliced(x, y, x, y, 128, 1), 0.0);
  std::vector<double> xs = x;
  for (double& v : xs) v += 1.0;
  EXPECT_NEAR(nmf::w2_sliced(x, y, xs, y, 128, 1), 0.5, 0.05);
  EXPECT_EQ(nmf::w2_sliced(x, y, xs, y, 128, 1), nmf::w2_sliced(x, y, xs, y, 128, 1));
}

TEST(ExactEvidence, ScalarCase) {
  nmf::Dataset ds;
  ds.X = Eigen::MatrixXd::Ones(1, 1);
  ds.y = Eigen::VectorXd::Ones(1);
  EXPECT_NEAR(nmf::exact_logz_gaussian(ds, 1.0, 1.0), 0.25 + 0.5 * std::log(2.0), 1e-14);
  EXPECT_NEAR(nmf::exact_logz_gaussian(ds, 1.0, 1.0), 0.59657, 1e-5);
  EXPECT_THROW(nmf::exact_logz_gaussian(ds, PriorSpec::spike_slab(0.5, 1.0), 1.0), nmf::NotGaussianPrior);
}

TEST(ExactEvidence, ZeroDesign) {
  nmf::Dataset ds;
  ds.X = Eigen::MatrixXd::Zero(5, 3);
  ds.y = Eigen::VectorXd::LinSpaced(5, -1.0, 2.0);
  EXPECT_NEAR(nmf::exact_logz_gaussian(ds, 2.0, 0.5), ds.y.squaredNorm() / (2 * 0.5 * 3), 1e-13);
}

TEST(ExactEvidence, BelowNmfFreeEnergy) {
  const auto pr = ridge_problem();
  const auto ds = nmf::gen_data(pr, small(300, 150));
  const auto fit = nmf::minimize_nmf(pr, ds, {});
  const nmf::NmfObjective obj(pr, ds);
  const double elbo = (fit.value - obj.sum_c0()) / 150.0;
  EXPECT_LT(nmf::exact_logz_gaussian(ds, 1.0, 1.0), elbo);
}

TEST(Replicates, SmallRidgeRun) {
  const nmf::ScalarModel model(ridge_problem());
  const auto sol = nmf::solve(model);
  auto cfg = small(400, 200, 21);
  cfg.replicates = 2;
  cfg.channel_samples = 20000;
  cfg.projections = 32;
  const auto runs = nmf::run_replicates(model, sol, cfg);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].seed, 21u);
  EXPECT_EQ(runs[1].seed, 22u);
  for (const auto& r : runs) {
    EXPECT_TRUE(r.converged);
    EXPECT_LT(r.grad_norm_final, cfg.optimizer.grad_tol);
    EXPECT_TRUE(r.neg_log_z_exact_per_p.has_value());
    EXPECT_LE(*r.neg_log_z_exact_per_p, r.neg_log_z_nmf_per_p);
    EXPECT_GE(r.coverage_emp[0], 0.0);
    EXPECT_LE(r.coverage_emp[0], 1.0);
    EXPECT_NEAR(r.mse_emp, 0.5616, 0.15);
  }
  const auto again = nmf::run_replicates(model, sol, cfg);
  EXPECT_EQ(again[1].u_hat, runs[1].u_hat);
  EXPECT_EQ(again[1].w2_sliced, runs[1].w2_sliced);
  cfg.exact_evidence = false;
  cfg.replicates = 1;
  EXPECT_FALSE(nmf::run_replicates(model, sol, cfg)[0].neg_log_z_exact_per_p.has_value());
}
