#include "heatrect/lindblad.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace heatrect {

double RateTable::rate(int from, int to) const {
  if (from == 0 && to == 1) return up01;
  if (from == 1 && to == 0) return down10;
  if (from == 1 && to == 2) return up12;
  if (from == 2 && to == 1) return down21;
  return 0.0;
}

RateTable qutrit_rate_table(const DiodeParams& p, double n, double Gamma, bool modulated) {
  if (!(n >= 0.0)) throw std::invalid_argument("qutrit_rate_table needs n >= 0");
  if (!(Gamma > 0.0)) throw std::invalid_argument("qutrit_rate_table needs Gamma > 0");
  const double J2 = p.J * p.J;
  const double lorentz = J2 * Gamma / (p.delta_omega * p.delta_omega + Gamma * Gamma / 4.0);
  const double mod = modulated ? p.J_prime * p.J_prime / Gamma : 0.0;
  RateTable t;
  t.up01 = n * mod + n * lorentz;
  t.down10 = (1.0 + n) * mod + (1.0 + n) * lorentz;
  t.up12 = 8.0 * n * J2 / Gamma;
  t.down21 = 8.0 * (1.0 + n) * J2 / Gamma;
  return t;
}

namespace {

SparseMatrix sparse_identity(long d) {
  SparseMatrix id(d, d);
  id.setIdentity();
  return id;
}

}  // namespace

Superoperator dissipator(const SparseMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("dissipator needs a square operator");
  const SparseMatrix id = sparse_identity(A.rows());
  const SparseMatrix AdA = A.adjoint() * A;
  const SparseMatrix AdAT = AdA.transpose();
  const SparseMatrix Aconj = A.conjugate();
  Superoperator s = Eigen::kroneckerProduct(Aconj, A);
  s -= 0.5 * Superoperator(Eigen::kroneckerProduct(id, AdA));
  s -= 0.5 * Superoperator(Eigen::kroneckerProduct(AdAT, id));
  s.prune(cplx(0.0, 0.0), 0.0);
  s.makeCompressed();
  return s;
}

Superoperator commutator_superop(const SparseMatrix& H) {
  const SparseMatrix id = sparse_identity(H.rows());
  const SparseMatrix HT = H.transpose();
  Superoperator s = Eigen::kroneckerProduct(id, H);
  s -= Superoperator(Eigen::kroneckerProduct(HT, id));
  s *= cplx(0.0, -1.0);
  s.prune(cplx(0.0, 0.0), 0.0);
  s.makeCompressed();
  return s;
}

// ---------------------------------------------------------------------------

Liouvillian::Liouvillian(SpaceLayout layout, std::optional<TimeDependentOperator> hamiltonian)
    : layout_(std::move(layout)), hamiltonian_(std::move(hamiltonian)) {
  if (hamiltonian_ && !(hamiltonian_->layout() == layout_))
    throw LayoutError("Hamiltonian lives on a different layout");
}

void Liouvillian::add_jump(double rate, const SparseOperator& op, std::string description) {
  if (!(op.layout() == layout_)) throw LayoutError("jump operator lives on a different layout");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::invalid_argument("jump rate must be >= 0");
  if (rate == 0.0) return;
  jumps_.push_back({rate, op, op.adjoint() * op, std::move(description)});
}

std::vector<double> Liouvillian::drive_frequencies() const {
  std::vector<double> f;
  if (hamiltonian_)
    for (const auto& d : hamiltonian_->drives()) f.push_back(d.frequency);
  return f;
}

DenseMatrix Liouvillian::apply(double t, const DenseMatrix& rho) const {
  DenseMatrix out = DenseMatrix::Zero(rho.rows(), rho.cols());
  if (hamiltonian_) {
    const SparseMatrix h = hamiltonian_->at(t).matrix();
    DenseMatrix hr = h * rho;
    DenseMatrix rh = rho * h;
    out += cplx(0.0, -1.0) * (hr - rh);
  }
  for (const auto& j : jumps_) {
    const SparseMatrix& L = j.op.matrix();
    const SparseMatrix& K = j.op_dag_op.matrix();
    DenseMatrix Lr = L * rho;
    DenseMatrix LrLd = Lr * SparseMatrix(L.adjoint());
    DenseMatrix Kr = K * rho;
    DenseMatrix rK = rho * K;
    out += j.rate * (LrLd - 0.5 * (Kr + rK));
  }
  return out;
}

Superoperator Liouvillian::static_superop() const {
  const long d2 = dim() * dim();
  Superoperator s(d2, d2);
  if (hamiltonian_) s += commutator_superop(hamiltonian_->static_part().matrix());
  for (const auto& j : jumps_) s += j.rate * dissipator(j.op.matrix());
  s.prune(cplx(0.0, 0.0), 0.0);
  s.makeCompressed();
  return s;
}

std::vector<std::pair<double, Superoperator>> Liouvillian::drive_superops() const {
  std::vector<std::pair<double, Superoperator>> out;
  if (hamiltonian_)
    for (const auto& d : hamiltonian_->drives()) out.emplace_back(d.frequency, commutator_superop(d.op.matrix()));
  return out;
}

Superoperator Liouvillian::superop_at(double t) const {
  Superoperator s = static_superop();
  for (const auto& [freq, sop] : drive_superops()) s += std::cos(freq * t) * sop;
  return s;
}

// ---------------------------------------------------------------------------

Superoperator bath_dissipator(const SpaceLayout& layout, const std::string& label, const BathParams& bath) {
  if (layout.mode(label).kind != ModeKind::HarmonicOscillator)
    throw LayoutError("bath_dissipator needs an oscillator mode, '" + label + "' is not one");
  const double n = bath.mean_occupation();
  const SparseMatrix a = lowering_op(layout, label).matrix();
  const SparseMatrix ad = a.adjoint();
  Superoperator s = bath.Gamma * (n + 1.0) * dissipator(a);
  if (n > 0.0) s += bath.Gamma * n * dissipator(ad);
  s.makeCompressed();
  return s;
}

std::vector<AttachmentRates> attachment_rates(const CircuitModel& model) {
  std::vector<AttachmentRates> out;
  for (const auto& att : model.attachments) {
    const BathParams& bath = att.side == BathSide::Left ? model.spec.left_bath : model.spec.right_bath;
    out.push_back({att, qutrit_rate_table(model.spec.diodes.at(att.qutrit), bath.mean_occupation(), bath.Gamma,
                                          att.modulated)});
  }
  return out;
}

Liouvillian build_generator(const CircuitSpec& spec) { return build_generator(describe_circuit(spec)); }

Liouvillian build_generator(const CircuitModel& model) {
  std::vector<std::string> all;
  for (const auto& m : model.modes) all.push_back(m.label);
  return build_generator(model, all);
}

Liouvillian build_generator(const CircuitModel& model, const std::vector<std::string>& modes) {
  const SpaceLayout layout = model.layout().sub_layout(modes);
  auto inside = [&](const std::string& l) { return layout.contains(l); };

  std::optional<TimeDependentOperator> h;
  if (model.has_coherent_part) {
    std::vector<OnsiteTerm> onsite;
    for (const auto& o : model.onsite)
      if (inside(o.label)) onsite.push_back(o);
    std::vector<Coupling> couplings;
    for (const auto& c : model.couplings) {
      if (model.reduced && c.bath_facing) continue;
      const bool ia = inside(c.a), ib = inside(c.b);
      if (ia != ib) throw LayoutError("mode group splits the coupling " + c.a + "-" + c.b);
      if (ia) couplings.push_back(c);
    }
    h = materialize(layout, onsite, couplings);
  }
  Liouvillian gen(layout, std::move(h));

  if (!model.reduced) {
    for (const auto& [label, bath] : {std::pair{std::string("L"), model.spec.left_bath},
                                      std::pair{std::string("R"), model.spec.right_bath}}) {
      if (!inside(label)) continue;
      const double n = bath.mean_occupation();
      const SparseOperator a = lowering_op(layout, label);
      gen.add_jump(bath.Gamma * (n + 1.0), a, label + " decay");
      gen.add_jump(bath.Gamma * n, a.adjoint(), label + " pump");
    }
  }

  for (const auto& ar : attachment_rates(model)) {
    const std::string& q = ar.attachment.qutrit;
    if (!inside(q)) continue;
    const std::string side = ar.attachment.side == BathSide::Left ? "L" : "R";
    for (const auto& [from, to] : {std::pair{0, 1}, std::pair{1, 0}, std::pair{1, 2}, std::pair{2, 1}}) {
      DenseMatrix jump = DenseMatrix::Zero(3, 3);
      jump(to, from) = 1.0;
      gen.add_jump(ar.table.rate(from, to), embed(layout, q, jump),
                   q + " " + side + " " + std::to_string(from) + "->" + std::to_string(to));
    }
  }

  for (const auto& label : model.decohered) {
    if (!inside(label) || model.spec.gamma_dec == 0.0) continue;
    const SparseOperator a = lowering_op(layout, label);
    gen.add_jump(model.spec.gamma_dec, a, label + " decoherence decay");
    gen.add_jump(model.spec.gamma_dec, number_op(layout, label), label + " dephasing");
  }
  return gen;
}

}  // namespace heatrect
