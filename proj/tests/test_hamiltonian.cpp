#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qbench/hamiltonian.hpp"

using namespace qbench;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qbench_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

RealVector sorted(RealVector v) {
  std::sort(v.data(), v.data() + v.size());
  return v;
}

}  // namespace

TEST(Sector, Labels) {
  EXPECT_EQ(sector_of("1010"), SymmetrySector::make(2, 0));
  EXPECT_EQ(sector_of("1100"), SymmetrySector::make(2, 1));
  EXPECT_EQ(sector_of("0000"), SymmetrySector::make(0, 0));
  EXPECT_EQ(sector_of("0001"), SymmetrySector::make(1, -0.5));
  EXPECT_THROW(sector_of("101"), ShapeError);
}

TEST(Sector, BlocksPartitionBasis) {
  int total = 0;
  std::map<int, int> by_ne;
  for (const auto& s : all_sectors()) {
    const int d = static_cast<int>(sector_basis(s).size());
    EXPECT_GT(d, 0);
    total += d;
    by_ne[s.n_e] += d;
  }
  EXPECT_EQ(total, 16);
  EXPECT_EQ(by_ne, (std::map<int, int>{{0, 1}, {1, 4}, {2, 6}, {3, 4}, {4, 1}}));
  EXPECT_EQ(sector_basis(SymmetrySector::make(2, 0)), (std::vector<std::string>{"0101", "0110", "1001", "1010"}));
}

TEST(Load, AcceptsConservingTerm) {
  const auto path = temp_file("ok.json");
  write_text(path, R"({"molecule":"X","bond_distance_angstrom":1.0,"n_qubits":4,
    "terms":[{"pauli":"ZIII","coeff":1.0}],"provenance":"test"})");
  QubitHamiltonian h = load_hamiltonian(path);
  EXPECT_EQ(h.terms.size(), 1U);
  EXPECT_EQ(h.molecule, "X");
}

TEST(Load, RejectsNumberBreakingTerm) {
  const auto path = temp_file("bad.json");
  write_text(path, R"({"molecule":"X","bond_distance_angstrom":1.0,"n_qubits":4,
    "terms":[{"pauli":"XIII","coeff":1.0}],"provenance":"test"})");
  try {
    load_hamiltonian(path);
    FAIL() << "expected rejection";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("XIII"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("particle-number"), std::string::npos);
  }
}

TEST(Load, RejectsSpinBreakingHopping) {
  // Hopping between spin-up orbital 0 and spin-down orbital 2 conserves N but not S_z.
  QubitHamiltonian h;
  h.terms.add("XZXI", 0.5).add("YZYI", 0.5);
  EXPECT_THROW(validate(h), SchemaError);
  QubitHamiltonian ok;
  ok.terms.add("XXII", 0.5).add("YYII", 0.5);
  EXPECT_NO_THROW(validate(ok));
}

TEST(Load, RejectsOddYAndMalformed) {
  QubitHamiltonian h;
  h.terms.add("XYII", 0.5);
  EXPECT_THROW(validate(h), SchemaError);
  const auto path = temp_file("malformed.json");
  write_text(path, R"({"molecule":"X","n_qubits":4,"terms":[],"provenance":"t"})");
  EXPECT_THROW(load_hamiltonian(path), SchemaError);
  write_text(path, R"({"molecule":"X","bond_distance_angstrom":1,"n_qubits":4,"terms":[{"pauli":"ZQII","coeff":1}],"provenance":"t"})");
  EXPECT_THROW(load_hamiltonian(path), SchemaError);
  write_text(path, "{ not json");
  EXPECT_THROW(load_hamiltonian(path), SchemaError);
  EXPECT_THROW(load_hamiltonian(temp_file("does_not_exist.json")), IoError);
}

TEST(Load, Roundtrip) {
  QubitHamiltonian h = random_molecular_hamiltonian(4);
  const auto path = temp_file("roundtrip.json");
  save_hamiltonian(h, path);
  QubitHamiltonian back = load_hamiltonian(path);
  EXPECT_EQ(back.terms, h.terms);
  EXPECT_EQ(back.molecule, h.molecule);
}

TEST(Generator, SymmetriesAndReproducibility) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    QubitHamiltonian h = random_molecular_hamiltonian(seed);
    EXPECT_NO_THROW(validate(h));
    const ComplexMatrix m = dense_matrix(h.terms);
    for (const auto& op : {number_operator(4), sz_operator(4)}) {
      const ComplexMatrix o = dense_matrix(op);
      EXPECT_LT((m * o - o * m).cwiseAbs().maxCoeff(), 1e-10);
    }
    const StateVector t = triplet_state();
    const StateVector ht = m * t;
    const double e = t.dot(ht).real();
    EXPECT_LT((ht - e * t).norm(), 1e-10);
  }
  EXPECT_EQ(random_molecular_hamiltonian(5).terms, random_molecular_hamiltonian(5).terms);
  EXPECT_NE(random_molecular_hamiltonian(5).terms, random_molecular_hamiltonian(6).terms);
}

TEST(Generator, UnadaptedStillConserves) {
  QubitHamiltonian h = random_molecular_hamiltonian(3, false);
  EXPECT_NO_THROW(validate(h));
}

TEST(Blocks, ShapesAndShift) {
  QubitHamiltonian h = random_molecular_hamiltonian(1);
  SectorBlock b2 = extract_block(h, SymmetrySector::make(2, 0));
  EXPECT_EQ(b2.dim(), 4);
  EXPECT_EQ(b2.reduced_qubits(), 2);
  SectorBlock b1 = extract_block(h, SymmetrySector::make(1, 0.5));
  EXPECT_EQ(b1.dim(), 2);
  EXPECT_EQ(b1.reduced_qubits(), 1);
  SectorBlock b0 = extract_block(h, SymmetrySector::make(0, 0));
  EXPECT_EQ(b0.dim(), 1);
  EXPECT_EQ(b0.reduced_qubits(), 0);
  EXPECT_NEAR(b0.unshift(b0.reduced.identity_coefficient()), b0.dense(0, 0), 1e-12);
  for (const auto& s : all_sectors()) {
    SectorBlock b = extract_block(h, s);
    if (b.dim() < 2) continue;
    EXPECT_NEAR(b.reduced.identity_coefficient(), 0.0, 1e-12);
    const RealMatrix back = real_matrix(b.reduced) - b.shift * RealMatrix::Identity(b.dim(), b.dim());
    EXPECT_LT((back - b.dense).cwiseAbs().maxCoeff(), 1e-10);
    const RealVector shifted = exact_spectrum(b.reduced).eigenvalues;
    const RealVector plain = exact_spectrum(b).eigenvalues;
    EXPECT_LT((shifted - (plain.array() + b.shift).matrix()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Blocks, EmptySectorRejected) {
  QubitHamiltonian h = random_molecular_hamiltonian(1);
  EXPECT_THROW(extract_block(h, SymmetrySector::make(2, 0.5)), ValidationError);
}

TEST(Blocks, TripletMapsToReducedAntisymmetricState) {
  QubitHamiltonian h = random_molecular_hamiltonian(2);
  SectorBlock b = extract_block(h, SymmetrySector::make(2, 0));
  StateVector t(4);
  t << 0, -1, 1, 0;
  t /= std::sqrt(2.0);
  EXPECT_NEAR(fidelity(embed_block_state(b, t), triplet_state()), 1.0, 1e-14);
}

TEST(Spectrum, SingleQubitZ) {
  PauliSum z(1);
  z.add("Z", 1.0);
  Spectrum s = exact_spectrum(z);
  EXPECT_DOUBLE_EQ(s.eigenvalues[0], -1.0);
  EXPECT_DOUBLE_EQ(s.eigenvalues[1], 1.0);
}

TEST(Spectrum, BlocksMatchFullDiagonalization) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    QubitHamiltonian h = random_molecular_hamiltonian(seed);
    // Independent oracle: diagonalize the whole 16x16 matrix directly.
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(real_matrix(h.terms));
    Spectrum s = exact_spectrum(h);
    EXPECT_LT((s.eigenvalues - es.eigenvalues()).cwiseAbs().maxCoeff(), 1e-9);
    RealVector from_blocks(16);
    int k = 0;
    for (const auto& sec : all_sectors()) {
      const RealVector ev = exact_spectrum(extract_block(h, sec)).eigenvalues;
      for (Eigen::Index i = 0; i < ev.size(); ++i) from_blocks[k++] = ev[i];
    }
    EXPECT_LT((sorted(from_blocks) - es.eigenvalues()).cwiseAbs().maxCoeff(), 1e-9);
    int triplets = 0, sz0_triplets = 0, singlets = 0;
    for (const auto& sec : s.sectors) {
      triplets += sec.two_s == 2;
      sz0_triplets += sec.two_s == 2 && sec.two_sz == 0;
      singlets += sec.n_e == 2 && sec.two_s == 0;
    }
    EXPECT_EQ(triplets, 3);
    EXPECT_EQ(sz0_triplets, 1);
    EXPECT_EQ(singlets, 3);
  }
}

TEST(Family, ContinuousInDistance) {
  for (double d : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    const double e0 = exact_spectrum(synthetic_dissociation_point(11, d, "toy")).eigenvalues[0];
    const double e1 = exact_spectrum(synthetic_dissociation_point(11, d + 1e-3, "toy")).eigenvalues[0];
    EXPECT_LT(std::abs(e1 - e0), 1e-2);
  }
}
