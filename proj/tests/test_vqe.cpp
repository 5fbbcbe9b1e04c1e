#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "qbench/vqe.hpp"

using namespace qbench;

namespace {

// Independent oracle: project the dense matrix onto a sector by hand.
Eigen::VectorXd block_eigenvalues(const PauliSum& h, int n_e, int two_sz) {
  const ComplexMatrix full = dense_matrix(h);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < 16; ++i) {
    const auto u = static_cast<unsigned>(i);
    const int up = std::popcount(u >> 2), down = std::popcount(u & 3u);
    if (up + down == n_e && up - down == two_sz) idx.push_back(i);
  }
  Eigen::MatrixXd m(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) m(a, b) = full(idx[a], idx[b]).real();
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
}

StateVector triplet_oracle() {
  StateVector t = StateVector::Zero(16);
  t[0b1001] = 1.0 / std::sqrt(2.0);
  t[0b0110] = -1.0 / std::sqrt(2.0);
  return t;
}

// Middle eigenvalue among the three singlets of the N_e=2, s_z=0 block.
double middle_singlet(const PauliSum& h) {
  const Eigen::MatrixXd full = dense_matrix(h).real();
  const std::array<int, 4> basis = {0b0101, 0b0110, 0b1001, 0b1010};
  Eigen::Matrix4d m;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) m(a, b) = full(basis[a], basis[b]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m);
  const StateVector t = triplet_oracle();
  std::vector<double> singlets;
  for (int k = 0; k < 4; ++k) {
    double overlap = 0.0;
    for (int a = 0; a < 4; ++a) overlap += es.eigenvectors()(a, k) * t[basis[a]].real();
    if (overlap * overlap < 0.5) singlets.push_back(es.eigenvalues()[k]);
  }
  EXPECT_EQ(singlets.size(), 3u);
  return singlets[1];
}

OptimizerConfig method_config(OptimizerMethod m) {
  OptimizerConfig c;
  c.method = m;
  return c;
}

const std::array<SymmetrySector, 3> kSectors = {SymmetrySector::make(2, 0), SymmetrySector::make(1, 0.5),
                                                SymmetrySector::make(3, 0.5)};

}  // namespace

class VqeMethods : public ::testing::TestWithParam<OptimizerMethod> {};

TEST_P(VqeMethods, SectorExtremaMatchOracle) {
  const OptimizerConfig opt = method_config(GetParam());
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const QubitHamiltonian h = random_molecular_hamiltonian(seed);
    for (const auto& s : kSectors) {
      const Eigen::VectorXd ev = block_eigenvalues(h.terms, s.n_e, s.two_sz);
      const VqeResult lo = optimize(spc(s), h.terms, ObjectiveMode::minimize(), {}, opt, seed);
      const VqeResult hi = optimize(spc(s), h.terms, ObjectiveMode::maximize(), {}, opt, seed);
      EXPECT_NEAR(lo.energy.mean, ev.minCoeff(), 1e-8) << s.label() << " seed " << seed;
      EXPECT_NEAR(hi.energy.mean, ev.maxCoeff(), 1e-8) << s.label() << " seed " << seed;
      EXPECT_TRUE(lo.converged);
      EXPECT_TRUE(hi.converged);
    }
  }
}

TEST_P(VqeMethods, SingleQubitZ) {
  Circuit c(1);
  c.add(gates::ry(0, Angle::param(0)));
  PauliSum z(1);
  z.add("Z", 1.0);
  const VqeResult r = optimize(c, z, ObjectiveMode::minimize(), {}, method_config(GetParam()), 3);
  EXPECT_NEAR(r.energy.mean, -1.0, 1e-8);
  EXPECT_LE(r.evaluations, 200);
}

TEST_P(VqeMethods, MaximizeIsNegatedMinimizeOfNegatedH) {
  const OptimizerConfig opt = method_config(GetParam());
  const QubitHamiltonian h = random_molecular_hamiltonian(11);
  const Circuit a = spc_ne2();
  const VqeResult hi = optimize(a, h.terms, ObjectiveMode::maximize(), {}, opt, 5);
  const VqeResult lo = optimize(a, -h.terms, ObjectiveMode::minimize(), {}, opt, 5);
  EXPECT_NEAR(hi.energy.mean, -lo.energy.mean, 1e-12);
  ASSERT_EQ(hi.parameters.size(), lo.parameters.size());
  for (std::size_t i = 0; i < hi.parameters.size(); ++i) EXPECT_NEAR(hi.parameters[i], lo.parameters[i], 1e-12);
}

TEST_P(VqeMethods, EnergyIsReevaluatedObjective) {
  const QubitHamiltonian h = random_molecular_hamiltonian(4);
  const VqeResult r = optimize(spc_ne2(), h.terms, ObjectiveMode::minimize(), {}, method_config(GetParam()), 1);
  EXPECT_NEAR(r.energy.mean, r.objective, 1e-12);
  EXPECT_NEAR(r.energy.mean, expectation(run(spc_ne2().bind(r.parameters)), h.terms), 1e-12);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
}

TEST_P(VqeMethods, ThirdSinglet) {
  const OptimizerConfig opt = method_config(GetParam());
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const QubitHamiltonian h = random_molecular_hamiltonian(seed);
    const Circuit a = spc_ne2();
    const VqeResult g = optimize(a, h.terms, ObjectiveMode::minimize(), {}, opt, seed);
    const VqeResult r = third_singlet(a, h.terms, g.parameters, default_penalty_weight(h.terms), opt, seed);
    const Eigen::VectorXd ev = block_eigenvalues(h.terms, 2, 0);
    EXPECT_NEAR(r.energy.mean, middle_singlet(h.terms), 1e-6) << "seed " << seed;
    EXPECT_GE(r.energy.mean, ev.minCoeff() - 1e-8);
    const StateVector psi = run(a.bind(r.parameters));
    EXPECT_LT(std::norm(psi.dot(triplet_oracle())), 1e-3);
    // The singlet ground: the lowest block eigenvector orthogonal to the triplet.
    const VqeResult sg = singlet_ground(a, h.terms, default_penalty_weight(h.terms), opt, seed);
    EXPECT_LT(std::norm(psi.dot(run(a.bind(sg.parameters)))), 1e-3) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(All, VqeMethods,
                         ::testing::Values(OptimizerMethod::nelder_mead, OptimizerMethod::bobyqa_style_quadratic));

TEST(ThirdSinglet, ZeroPenaltyCollapsesToGround) {
  const QubitHamiltonian h = random_molecular_hamiltonian(8);
  const std::vector<double> ground = {0.0, 0.0, 0.0};
  const VqeResult r = third_singlet(spc_ne2(), h.terms, ground, 0.0, {}, 2);
  EXPECT_NEAR(r.energy.mean, block_eigenvalues(h.terms, 2, 0).minCoeff(), 1e-8);
}

TEST(ThirdSinglet, RejectsNegativePenaltyAndBadParameters) {
  const QubitHamiltonian h = random_molecular_hamiltonian(8);
  const std::vector<double> ground = {0.0, 0.0, 0.0};
  EXPECT_THROW(third_singlet(spc_ne2(), h.terms, ground, -1.0, {}, 2), ValidationError);
  const std::vector<double> short_params = {0.0};
  EXPECT_THROW(third_singlet(spc_ne2(), h.terms, short_params, 1.0, {}, 2), ShapeError);
}

TEST(Optimize, Preconditions) {
  const QubitHamiltonian h = random_molecular_hamiltonian(1);
  EXPECT_THROW(optimize(Circuit(4), h.terms, ObjectiveMode::minimize(), {}, {}, 0), ValidationError);
  PauliSum z(1);
  z.add("Z", 1.0);
  EXPECT_THROW(optimize(spc_ne2(), z, ObjectiveMode::minimize(), {}, {}, 0), ShapeError);
  EstimatorConfig shots;
  shots.shots = 1000;
  EXPECT_THROW(optimize(spc_ne2(), h.terms, ObjectiveMode::penalized({triplet_state()}, 1.0), shots, {}, 0),
               ValidationError);
}

TEST(Optimize, BudgetExhaustionKeepsBestSoFar) {
  const QubitHamiltonian h = random_molecular_hamiltonian(2);
  OptimizerConfig opt;
  opt.max_evaluations = 12;
  const VqeResult r = optimize(spc_ne2(), h.terms, ObjectiveMode::minimize(), {}, opt, 0);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.evaluations, 12);
  EXPECT_EQ(r.parameters.size(), 3u);
  EXPECT_GE(r.energy.mean, block_eigenvalues(h.terms, 2, 0).minCoeff() - 1e-12);
}

TEST(Optimize, ShotModeIsDeterministic) {
  const QubitHamiltonian h = random_molecular_hamiltonian(6);
  EstimatorConfig est;
  est.shots = 4096;
  OptimizerConfig opt;
  opt.max_evaluations = 120;
  opt.refine_rounds = 3;
  const VqeResult a = optimize(spc_ne2(), h.terms, ObjectiveMode::minimize(), est, opt, 9);
  const VqeResult b = optimize(spc_ne2(), h.terms, ObjectiveMode::minimize(), est, opt, 9);
  EXPECT_EQ(a.energy.mean, b.energy.mean);
  EXPECT_EQ(a.parameters, b.parameters);
  ASSERT_TRUE(a.model_energy.has_value());
  EXPECT_GT(a.model_energy->std_error, 0.0);
  EXPECT_NEAR(a.model_energy->mean, block_eigenvalues(h.terms, 2, 0).minCoeff(), 0.01);
}

TEST(Spc, Ne2ReachesEveryRealSectorState) {
  Rng rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::array<int, 4> basis = {0b0101, 0b0110, 0b1001, 0b1010};
  for (int k = 0; k < 50; ++k) {
    StateVector target = StateVector::Zero(16);
    for (int b : basis) target[b] = n(rng);
    target.normalize();
    // Minimizing -|target><target| maximizes the fidelity.
    const ComplexMatrix proj = -target * target.adjoint();
    const PauliSum h = decompose_hermitian(proj, 4);
    const VqeResult r = optimize(spc_ne2(), h, ObjectiveMode::minimize(), {}, {}, static_cast<std::uint64_t>(k));
    EXPECT_GT(fidelity(run(spc_ne2().bind(r.parameters)), target), 1.0 - 1e-6) << "sample " << k;
  }
}

TEST(Scan, ExactSweepMatchesOracle) {
  std::vector<QubitHamiltonian> hs;
  for (double d : {2.5, 0.5, 1.5, 1.0, 2.0}) hs.push_back(synthetic_dissociation_point(3, d, "XH"));
  ScanConfig cfg;
  cfg.seed = 1;
  const auto factory = [](const PauliSum& h) { return plain_evaluator(h, {}); };
  const std::vector<ScanRow> rows = scan_dissociation(hs, factory, cfg);
  ASSERT_EQ(rows.size(), 5u);
  int cells = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ScanRow& row = rows[i];
    EXPECT_DOUBLE_EQ(row.distance, 0.5 + 0.5 * static_cast<double>(i));
    const PauliSum& h = synthetic_dissociation_point(3, row.distance, "XH").terms;
    const Eigen::VectorXd b2 = block_eigenvalues(h, 2, 0), b1 = block_eigenvalues(h, 1, 1),
                          b3 = block_eigenvalues(h, 3, 1);
    const std::array<double, 7> oracle = {b2.minCoeff(), b1.minCoeff(), expectation(triplet_oracle(), h),
                                          b3.minCoeff(), b2.maxCoeff(), b1.maxCoeff(), b3.maxCoeff()};
    for (Target t : kAllTargets) {
      ASSERT_TRUE(row[t].has_value());
      const Cell& c = *row[t];
      EXPECT_TRUE(c.error.empty()) << c.error;
      EXPECT_NEAR(c.energy, oracle[target_index(t)], 1e-6) << target_spec(t).suffix << " d=" << row.distance;
      EXPECT_NEAR(c.exact, oracle[target_index(t)], 1e-10);
      ++cells;
    }
    EXPECT_EQ(csv_line(row).substr(csv_line(row).size() - 3), ",ok");
  }
  EXPECT_EQ(cells, 35);
}

TEST(Scan, TargetSelectionAndEmptyTable) {
  std::vector<QubitHamiltonian> hs = {synthetic_dissociation_point(3, 1.0, "XH")};
  const auto factory = [](const PauliSum& h) { return plain_evaluator(h, {}); };
  ScanConfig cfg;
  cfg.targets = parse_targets("none");
  EXPECT_TRUE(scan_dissociation(hs, factory, cfg).empty());
  cfg.targets = parse_targets("2,g");
  const auto rows = scan_dissociation(hs, factory, cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0][Target::g].has_value());
  EXPECT_TRUE(rows[0][Target::triplet].has_value());
  EXPECT_FALSE(rows[0][Target::ne1].has_value());
  EXPECT_THROW(parse_targets("g,4"), ValidationError);
}

TEST(Scan, CellFailureIsRecorded) {
  std::vector<QubitHamiltonian> hs = {synthetic_dissociation_point(3, 1.0, "XH")};
  const auto factory = [](const PauliSum&) -> EnergyEvaluator {
    return [](const Circuit&, std::uint64_t) -> EnergyEstimate { throw NumericalError("estimator failed"); };
  };
  ScanConfig cfg;
  cfg.targets = parse_targets("g,1");
  const auto rows = scan_dissociation(hs, factory, cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][Target::g]->error, "estimator failed");
  EXPECT_FALSE(std::isnan(rows[0][Target::g]->exact));
  EXPECT_NE(csv_line(rows[0]).find("g: estimator failed"), std::string::npos);
}

TEST(Csv, HeaderLayout) {
  const std::string h = csv_header();
  EXPECT_EQ(h.rfind("distance,energy_g,energy_1,energy_2,energy_3,energy_g_max,energy_1_max,energy_3_max,stderr_g,", 0),
            0u);
  EXPECT_NE(h.find(",exact_3_max,molecule,status"), std::string::npos);
}
