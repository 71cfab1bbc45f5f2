#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "heatrect/lindblad.hpp"
#include "heatrect/observables.hpp"
#include "heatrect/steady_state.hpp"
#include "support.hpp"

using namespace heatrect;
using heatrect::testing::max_abs;
using heatrect::testing::random_hermitian;
using heatrect::testing::uniform;

namespace {

DenseVector vec(const DenseMatrix& m) { return Eigen::Map<const DenseVector>(m.data(), m.size()); }

DenseMatrix unvec(const DenseVector& v, long d) { return Eigen::Map<const DenseMatrix>(v.data(), d, d); }

DenseMatrix dense_dissipator(const DenseMatrix& A, const DenseMatrix& rho) {
  const DenseMatrix AdA = A.adjoint() * A;
  return A * rho * A.adjoint() - 0.5 * (AdA * rho + rho * AdA);
}

// Superoperator column sums restricted to diagonal rows give d/dt tr(rho).
double trace_row_max(const Superoperator& s, long d) {
  DenseVector tr = DenseVector::Zero(d * d);
  for (long i = 0; i < d; ++i) tr(i + i * d) = 1.0;
  const Eigen::RowVectorXcd sums = tr.transpose() * s;
  return sums.size() ? sums.cwiseAbs().maxCoeff() : 0.0;
}

std::vector<CircuitSpec> small_specs() {
  std::vector<CircuitSpec> out;
  for (Topology t : {Topology::SingleDiode, Topology::Parallel, Topology::Series, Topology::Bridge}) {
    CircuitSpec s = CircuitSpec::defaults(t);
    s.ho_truncation = t == Topology::Bridge ? 2 : 3;
    if (t == Topology::Bridge) s.gamma_dec = 0.05;
    out.push_back(s);
  }
  return out;
}

CircuitModel left_only_qutrit(double n_L) {
  CircuitModel m;
  m.spec = CircuitSpec::defaults(Topology::SingleDiode);
  m.spec.left_bath = BathParams::with_occupation(n_L);
  m.modes = {Mode::qutrit("D1")};
  m.full_modes = m.modes;
  m.attachments = {{"D1", BathSide::Left, true}};
  m.has_coherent_part = false;
  return m;
}

std::map<std::string, double> jump_rates(const Liouvillian& gen) {
  std::map<std::string, double> out;
  for (const auto& j : gen.jumps()) out[j.description] = j.rate;
  return out;
}

}  // namespace

TEST(Dissipator, DecayOfExcitedTwoLevelState) {
  SparseMatrix A(2, 2);
  A.insert(0, 1) = 1.0;
  DenseMatrix rho = DenseMatrix::Zero(2, 2);
  rho(1, 1) = 1.0;
  DenseMatrix expect = DenseMatrix::Zero(2, 2);
  expect(0, 0) = 1.0;
  expect(1, 1) = -1.0;
  EXPECT_LT(max_abs(unvec(dissipator(A) * vec(rho), 2) - expect), 1e-15);
}

TEST(Dissipator, MatchesDenseFormula) {
  const SpaceLayout l({Mode::oscillator("A", 3)});
  const SparseMatrix a = lowering_op(l, "A").matrix();
  const DenseMatrix mixed = DenseMatrix::Identity(3, 3) / 3.0;
  EXPECT_LT(max_abs(unvec(dissipator(a) * vec(mixed), 3) - dense_dissipator(DenseMatrix(a), mixed)), 1e-15);
  for (int rep = 0; rep < 5; ++rep) {
    const DenseMatrix A = heatrect::testing::random_matrix(4);
    const DenseMatrix rho = heatrect::testing::random_state(SpaceLayout({Mode::oscillator("B", 4)})).data();
    const DenseMatrix got = unvec(dissipator(A.sparseView()) * vec(rho), 4);
    EXPECT_LT(max_abs(got - dense_dissipator(A, rho)), 1e-13);
    EXPECT_LT(std::abs(got.trace()), 1e-13);
  }
}

TEST(Commutator, MatchesDenseFormula) {
  const DenseMatrix H = random_hermitian(5);
  const DenseMatrix rho = random_hermitian(5);
  const DenseMatrix got = unvec(commutator_superop(H.sparseView()) * vec(rho), 5);
  EXPECT_LT(max_abs(got - cplx(0, -1) * (H * rho - rho * H)), 1e-13);
}

TEST(BathDissipator, ZeroOccupationIsPureDecay) {
  const SpaceLayout l({Mode::oscillator("A", 4), Mode::qutrit("Q")});
  const Superoperator s = bath_dissipator(l, "A", BathParams::with_occupation(0.0, 3.0));
  const Superoperator expect = 3.0 * dissipator(lowering_op(l, "A").matrix());
  EXPECT_LT(max_abs(DenseMatrix(s) - DenseMatrix(expect)), 1e-14);
  EXPECT_THROW(bath_dissipator(l, "Q", BathParams::with_occupation(0.0)), LayoutError);
}

TEST(BathDissipator, ThermalFixedPoint) {
  const SpaceLayout l({Mode::oscillator("A", 8)});
  Liouvillian gen(l, std::nullopt);
  const BathParams bath = BathParams::with_occupation(0.5, 10.0);
  gen.add_jump(bath.Gamma * 1.5, lowering_op(l, "A"));
  gen.add_jump(bath.Gamma * 0.5, lowering_op(l, "A").adjoint());
  EXPECT_LT(max_abs(DenseMatrix(gen.static_superop()) - DenseMatrix(bath_dissipator(l, "A", bath))), 1e-14);

  const DensityMatrix rho = steady_state_direct(gen);
  const double r = 0.5 / 1.5;
  double norm = 0.0, mean = 0.0;
  for (int k = 0; k < 8; ++k) norm += std::pow(r, k);
  for (int k = 0; k < 8; ++k) {
    EXPECT_NEAR(rho.data()(k, k).real(), std::pow(r, k) / norm, 1e-10);
    mean += k * std::pow(r, k) / norm;
  }
  const double n = rho.expectation(number_op(l, "A"));
  EXPECT_NEAR(n, mean, 1e-10);
  EXPECT_LT(std::abs(n - 0.5), 0.5 - mean + 1e-12);
}

TEST(BathDissipator, TwoLevelThermalStateIsAnnihilated) {
  const SpaceLayout l({Mode::oscillator("A", 2)});
  const double n = 0.3;
  const Superoperator s = bath_dissipator(l, "A", BathParams::with_occupation(n, 2.0));
  DenseMatrix rho = DenseMatrix::Zero(2, 2);
  rho(0, 0) = (1 + n) / (1 + 2 * n);
  rho(1, 1) = n / (1 + 2 * n);
  EXPECT_LT((s * vec(rho)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RateTable, DocumentedValues) {
  const DiodeParams p;
  const RateTable m = qutrit_rate_table(p, 0.5, 10.0, true);
  EXPECT_NEAR(m.up01, 0.0125 + 5.0 / 90025.0, 1e-16);
  EXPECT_NEAR(m.up01, 1.25556e-2, 1e-7);
  EXPECT_NEAR(m.up12, 0.4, 1e-15);
  const RateTable s = qutrit_rate_table(p, 0.0, 10.0, false);
  EXPECT_EQ(s.up01, 0.0);
  EXPECT_EQ(s.up12, 0.0);
  EXPECT_NEAR(s.down21, 0.8, 1e-15);
  EXPECT_EQ(qutrit_rate_table(p, 0.0, 10.0, true).up01, 0.0);
  EXPECT_THROW(qutrit_rate_table(p, -0.1, 10.0, true), std::invalid_argument);
}

TEST(RateTable, OnlyNeighbouringTransitions) {
  const RateTable t = qutrit_rate_table({}, 0.5, 10.0, true);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (std::abs(a - b) != 1) EXPECT_EQ(t.rate(a, b), 0.0);
}

TEST(RateTable, DetailedBalance) {
  for (int rep = 0; rep < 200; ++rep) {
    const DiodeParams p{uniform(20, 500), uniform(0.1, 2), uniform(0, 1)};
    const double n = uniform(1e-3, 3.0), Gamma = uniform(5, 40);
    for (bool modulated : {true, false}) {
      const RateTable t = qutrit_rate_table(p, n, Gamma, modulated);
      EXPECT_DOUBLE_EQ(t.up01 / t.down10, n / (1 + n));
      EXPECT_DOUBLE_EQ(t.up12 / t.down21, n / (1 + n));
    }
  }
}

TEST(Generator, TraceAndHermiticityPreservation) {
  for (const auto& spec : small_specs()) {
    const Liouvillian gen = build_generator(spec);
    const long d = gen.dim();
    EXPECT_LT(trace_row_max(gen.static_superop(), d), 1e-12) << to_string(spec.topology);
    for (const auto& [nu, s] : gen.drive_superops()) EXPECT_LT(trace_row_max(s, d), 1e-12);
    for (double t : {0.0, 0.123, 7.7}) {
      const DenseMatrix rho = random_hermitian(d);
      const DenseMatrix out = gen.apply(t, rho);
      EXPECT_LT(std::abs(out.trace()), 1e-10) << to_string(spec.topology);
      EXPECT_LT(max_abs(out - out.adjoint()), 1e-10) << to_string(spec.topology);
    }
  }
}

TEST(Generator, ActionMatchesSuperoperator) {
  for (const auto& spec : small_specs()) {
    const Liouvillian gen = build_generator(spec);
    const long d = gen.dim();
    if (d > 81) continue;
    for (double t : {0.0, 0.31, 2.2}) {
      const DenseMatrix rho = heatrect::testing::random_matrix(d);
      const DenseMatrix a = gen.apply(t, rho);
      const DenseMatrix b = unvec(gen.superop_at(t) * vec(rho), d);
      EXPECT_LT(max_abs(a - b), 1e-12 * std::max(1.0, max_abs(a))) << to_string(spec.topology);
    }
  }
}

TEST(Generator, ParallelFactorizes) {
  CircuitSpec spec = CircuitSpec::defaults(Topology::Parallel);
  spec.diodes["D2"].delta_omega = 120.0;
  const CircuitModel model = describe_circuit(spec);
  const Liouvillian gen = build_generator(model);
  EXPECT_FALSE(gen.hamiltonian().has_value());
  const Liouvillian g1 = build_generator(model, {"D1"});
  const Liouvillian g2 = build_generator(model, {"D2"});
  for (int rep = 0; rep < 4; ++rep) {
    const DenseMatrix a = random_hermitian(3), b = random_hermitian(3);
    const DenseMatrix lhs = gen.apply(0.0, heatrect::testing::kron_loops(a, b));
    const DenseMatrix rhs = heatrect::testing::kron_loops(g1.apply(0.0, a), b) +
                            heatrect::testing::kron_loops(a, g2.apply(0.0, b));
    EXPECT_LT(max_abs(lhs - rhs), 1e-14);
  }
}

TEST(Generator, ParallelPopulationsFollowRateEquation) {
  const CircuitSpec spec = CircuitSpec::defaults(Topology::Parallel);
  const Liouvillian gen = build_generator(spec);
  const RateTable L = qutrit_rate_table({}, 0.5, 10.0, true);
  const RateTable R = qutrit_rate_table({}, 0.0, 10.0, false);
  Eigen::Matrix3d W = Eigen::Matrix3d::Zero();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a != b) {
        const double r = L.rate(a, b) + R.rate(a, b);
        W(b, a) += r;
        W(a, a) -= r;
      }
  const Eigen::Vector3d p1(0.5, 0.3, 0.2), p2(0.1, 0.6, 0.3);
  DenseMatrix rho = DenseMatrix::Zero(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rho(i * 3 + j, i * 3 + j) = p1(i) * p2(j);
  const DenseMatrix out = gen.apply(0.0, rho);
  const Eigen::Vector3d d1 = W * p1, d2 = W * p2;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_NEAR(out(i * 3 + j, i * 3 + j).real(), d1(i) * p2(j) + p1(i) * d2(j), 1e-15);
}

TEST(Generator, SingleQutritLeftRatesFixedPoint) {
  const DensityMatrix rho = steady_state_direct(build_generator(left_only_qutrit(0.5)));
  EXPECT_NEAR(rho.population("D1", 0), 9.0 / 13.0, 1e-12);
  EXPECT_NEAR(rho.population("D1", 1), 3.0 / 13.0, 1e-12);
  EXPECT_NEAR(rho.population("D1", 2), 1.0 / 13.0, 1e-12);
}

TEST(Generator, SeriesRateAttachments) {
  CircuitSpec spec = CircuitSpec::defaults(Topology::Series);
  spec.diodes["D2"].delta_omega = 180.0;
  const auto rates = jump_rates(build_generator(spec));
  const RateTable L = qutrit_rate_table(spec.diodes["D1"], 0.5, 10.0, true);
  const RateTable R = qutrit_rate_table(spec.diodes["D2"], 0.0, 10.0, false);
  const std::map<std::string, double> expect = {{"D1 L 0->1", L.up01}, {"D1 L 1->0", L.down10},
                                                {"D1 L 1->2", L.up12}, {"D1 L 2->1", L.down21},
                                                {"D2 R 1->0", R.down10}, {"D2 R 2->1", R.down21}};
  EXPECT_EQ(rates, expect);
}

TEST(Generator, BridgeRateModesAndDecoherence) {
  CircuitSpec spec = CircuitSpec::defaults(Topology::Bridge);
  spec.ho_truncation = 2;
  const double nL = spec.left_bath.mean_occupation(), nR = spec.right_bath.mean_occupation();
  const DiodeParams p;
  for (RateMode mode : {RateMode::PhysicalModulated, RateMode::PaperLiteral}) {
    spec.bridge_rate_mode = mode;
    const auto rates = jump_rates(build_generator(spec));
    const RateTable d1 = qutrit_rate_table(p, nL, 10.0, true);
    const RateTable d2 = qutrit_rate_table(p, nR, 10.0, mode == RateMode::PhysicalModulated);
    const RateTable d3 = qutrit_rate_table(p, nL, 10.0, false);
    const RateTable d4 = qutrit_rate_table(p, nR, 10.0, false);
    EXPECT_DOUBLE_EQ(rates.at("D1 L 1->0"), d1.down10);
    EXPECT_DOUBLE_EQ(rates.at("D2 R 1->0"), d2.down10);
    EXPECT_DOUBLE_EQ(rates.at("D3 L 0->1"), d3.up01);
    EXPECT_DOUBLE_EQ(rates.at("D4 R 2->1"), d4.down21);
    for (const char* m : {"D1", "M1", "D2", "D3", "M2", "D4"}) {
      EXPECT_DOUBLE_EQ(rates.at(std::string(m) + " decoherence decay"), spec.gamma_dec);
      EXPECT_DOUBLE_EQ(rates.at(std::string(m) + " dephasing"), spec.gamma_dec);
    }
  }
}

TEST(Generator, BridgeDimension) {
  const CircuitSpec spec = CircuitSpec::defaults(Topology::Bridge);
  EXPECT_EQ(describe_circuit(spec).layout().dim(), 5184);
}

TEST(Generator, SingleDiodeEquilibriumStateIsStationaryAndCurrentFree) {
  CircuitSpec spec = CircuitSpec::defaults(Topology::SingleDiode);
  spec.left_bath = BathParams::with_occupation(0.4, 20.0);
  spec.right_bath = BathParams::with_occupation(0.4, 20.0);
  spec.ho_truncation = 3;
  const Liouvillian gen = build_generator(spec);
  // exp(-beta N_total) with e^-beta = n/(1+n).
  const SpaceLayout& l = gen.layout();
  SparseOperator ntot = SparseOperator::zero(l);
  for (const auto& m : l.modes()) ntot = ntot + number_op(l, m.label);
  DenseMatrix rho = DenseMatrix::Zero(l.dim(), l.dim());
  const DenseMatrix nd = ntot.dense();
  for (long i = 0; i < l.dim(); ++i) rho(i, i) = std::pow(0.4 / 1.4, nd(i, i).real());
  rho /= rho.trace();
  for (double t : {0.0, 0.01, 1.0}) EXPECT_LT(max_abs(gen.apply(t, rho)), 1e-14);
  const DensityMatrix state(l, rho);
  EXPECT_LT(std::abs(bath_exchange_current(state, "L", spec.left_bath)), 1e-13);
  EXPECT_LT(std::abs(bath_exchange_current(state, "R", spec.right_bath)), 1e-13);
}

TEST(Generator, ZeroRatesAreSkipped) {
  const SpaceLayout l({Mode::qutrit("Q")});
  Liouvillian gen(l, std::nullopt);
  gen.add_jump(0.0, lowering_op(l, "Q"));
  EXPECT_TRUE(gen.jumps().empty());
  EXPECT_THROW(gen.add_jump(-1.0, lowering_op(l, "Q")), std::invalid_argument);
}
