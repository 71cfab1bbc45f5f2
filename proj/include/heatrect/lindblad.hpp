#ifndef HEATRECT_LINDBLAD_HPP
#define HEATRECT_LINDBLAD_HPP

#include <optional>
#include <string>
#include <vector>

#include "heatrect/circuit.hpp"
#include "heatrect/tensor.hpp"

namespace heatrect {

/// Superoperators act on column-stacked density matrices:
/// vec(rho)[i + j*d] = rho(i, j), so vec(A rho B) = (B^T (x) A) vec(rho).
using Superoperator = SparseMatrix;

/// Markovian transition rates of one qutrit. Only 0<->1 and 1<->2 are nonzero.
struct RateTable {
  double up01 = 0.0;
  double down10 = 0.0;
  double up12 = 0.0;
  double down21 = 0.0;

  /// Rate for |from> -> |to>; zero for every transition not listed above.
  double rate(int from, int to) const;
};

/// Rates induced on a qutrit by a bath of occupation n seen through an
/// eliminated filter oscillator with damping Gamma. `modulated` selects the
/// form with the J'^2/Gamma contribution of a modulated coupling.
RateTable qutrit_rate_table(const DiodeParams& params, double n, double Gamma, bool modulated);

/// M[A, .] = A . A^dag - {A^dag A, .}/2
Superoperator dissipator(const SparseMatrix& A);
/// -i[H, .]
Superoperator commutator_superop(const SparseMatrix& H);

struct JumpTerm {
  double rate;
  SparseOperator op;
  SparseOperator op_dag_op;
  std::string description;
};

/// Generator d(rho)/dt = -i[H(t), rho] + sum_k rate_k M[L_k, rho].
class Liouvillian {
 public:
  Liouvillian() = default;
  Liouvillian(SpaceLayout layout, std::optional<TimeDependentOperator> hamiltonian);

  void add_jump(double rate, const SparseOperator& op, std::string description = {});

  const SpaceLayout& layout() const { return layout_; }
  long dim() const { return layout_.dim(); }
  const std::optional<TimeDependentOperator>& hamiltonian() const { return hamiltonian_; }
  const std::vector<JumpTerm>& jumps() const { return jumps_; }

  bool time_dependent() const { return hamiltonian_ && hamiltonian_->has_drives(); }
  std::vector<double> drive_frequencies() const;

  /// L(t) rho evaluated without forming the superoperator.
  DenseMatrix apply(double t, const DenseMatrix& rho) const;

  /// Time-independent part of the superoperator.
  Superoperator static_superop() const;
  /// (frequency, superoperator) pairs of the coherent drives.
  std::vector<std::pair<double, Superoperator>> drive_superops() const;
  /// Full superoperator at time t; only for small systems.
  Superoperator superop_at(double t) const;

 private:
  SpaceLayout layout_;
  std::optional<TimeDependentOperator> hamiltonian_;
  std::vector<JumpTerm> jumps_;
};

/// Gamma(n+1) M[a, .] + Gamma n M[a^dag, .] on an oscillator mode.
Superoperator bath_dissipator(const SpaceLayout& layout, const std::string& label, const BathParams& bath);

/// Rate table of one bath attachment of a reduced circuit.
struct AttachmentRates {
  BathAttachment attachment;
  RateTable table;
};

std::vector<AttachmentRates> attachment_rates(const CircuitModel& model);

/// Generator of the whole circuit on its simulated layout.
Liouvillian build_generator(const CircuitSpec& spec);
Liouvillian build_generator(const CircuitModel& model);
/// Generator restricted to a group of modes (see connected_components); every
/// term of the full generator acting inside the group is kept.
Liouvillian build_generator(const CircuitModel& model, const std::vector<std::string>& modes);

}  // namespace heatrect

#endif  // HEATRECT_LINDBLAD_HPP
