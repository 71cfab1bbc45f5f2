#ifndef HEATRECT_CIRCUIT_HPP
#define HEATRECT_CIRCUIT_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heatrect/tensor.hpp"

namespace heatrect {

/// Raised when a CircuitSpec is inconsistent. The message names the offending field.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mean thermal occupation 1/(exp(omega/T) - 1). Argument must be positive.
double bose_occupation(double omega_over_T);

/// Qutrit diode parameters in units of the static coupling J.
struct DiodeParams {
  double delta_omega = 300.0;  ///< anharmonicity of the qutrit ground state
  double J = 1.0;              ///< static coupling
  double J_prime = 0.5;        ///< modulation amplitude of the input coupling

  bool operator==(const DiodeParams&) const = default;
};

/// A thermal bath attached to one end of the circuit. Exactly one of
/// `occupation` and `temperature` (units of omega) must be set.
struct BathParams {
  double Gamma = 10.0;
  std::optional<double> occupation;
  std::optional<double> temperature;

  static BathParams with_occupation(double n, double Gamma = 10.0);
  static BathParams with_temperature(double T, double Gamma = 10.0);

  /// Mean occupation n; converts a temperature through the Bose function.
  double mean_occupation() const;
  void validate(const std::string& where) const;

  bool operator==(const BathParams&) const = default;
};

enum class Topology { SingleDiode, Parallel, Series, Bridge };
enum class RateMode { PhysicalModulated, PaperLiteral };

std::string to_string(Topology t);
std::string to_string(RateMode m);
Topology topology_from_string(const std::string& s);
RateMode rate_mode_from_string(const std::string& s);

struct CircuitSpec {
  Topology topology = Topology::Series;
  std::map<std::string, DiodeParams> diodes;
  BathParams left_bath = BathParams::with_occupation(0.5);
  BathParams right_bath = BathParams::with_occupation(0.0);
  double gamma_dec = 1e-3;  ///< bridge only
  int ho_truncation = 8;
  RateMode bridge_rate_mode = RateMode::PhysicalModulated;

  /// Spec with the right diode labels for the topology, all at default parameters.
  static CircuitSpec defaults(Topology topology);

  /// Throws SpecError on inconsistencies.
  void validate() const;
  /// Applicability notes that do not prevent a run (e.g. small anharmonicity).
  std::vector<std::string> warnings() const;

  bool operator==(const CircuitSpec&) const = default;
};

/// Diode labels a topology requires, in order.
std::vector<std::string> required_diodes(Topology topology);

/// H(t) = static + sum_k cos(nu_k t) V_k.
struct DriveTerm {
  double frequency;
  SparseOperator op;
};

class TimeDependentOperator {
 public:
  TimeDependentOperator() = default;
  explicit TimeDependentOperator(SparseOperator static_part, std::vector<DriveTerm> drives = {});

  const SpaceLayout& layout() const { return static_part_.layout(); }
  const SparseOperator& static_part() const { return static_part_; }
  const std::vector<DriveTerm>& drives() const { return drives_; }
  bool has_drives() const { return !drives_.empty(); }

  SparseOperator at(double t) const;

  TimeDependentOperator operator+(const TimeDependentOperator& rhs) const;
  TimeDependentOperator operator-(const TimeDependentOperator& rhs) const;

 private:
  SparseOperator static_part_;
  std::vector<DriveTerm> drives_;
};

/// Excitation-conserving exchange (a_a a_b^dag + a_a^dag a_b) with amplitude
/// J + J' cos(frequency t).
struct Coupling {
  std::string a;
  std::string b;
  double J;
  double J_prime;
  double frequency;
  bool bath_facing;  ///< eliminated into rates in the reduced models
};

/// shift * |level><level| on one mode.
struct OnsiteTerm {
  std::string label;
  int level;
  double shift;
};

enum class BathSide { Left, Right };

/// A qutrit attached to a bath through an eliminated oscillator.
struct BathAttachment {
  std::string qutrit;
  BathSide side;
  bool modulated;  ///< selects the rate form carrying the J' term
};

/// Structured, layout-independent description of a circuit. Everything the
/// Hamiltonian and generator builders need is here; materialization onto a
/// concrete layout happens later.
struct CircuitModel {
  CircuitSpec spec;
  std::vector<Mode> modes;       ///< modes kept in the simulated dynamics
  std::vector<Mode> full_modes;  ///< modes including the L and R oscillators
  std::vector<OnsiteTerm> onsite;
  std::vector<Coupling> couplings;
  std::vector<BathAttachment> attachments;
  std::vector<std::string> decohered;  ///< modes carrying gamma_dec terms
  bool reduced = true;                 ///< false for the full single-diode model
  bool has_coherent_part = true;

  SpaceLayout layout() const { return SpaceLayout(modes); }
  /// Layout with the L and R oscillators truncated to `bath_dim` levels.
  SpaceLayout full_layout(int bath_dim) const;
};

CircuitModel describe_circuit(const CircuitSpec& spec);

/// Hopping operator a_a a_b^dag + a_a^dag a_b on a layout.
SparseOperator exchange_op(const SpaceLayout& layout, const std::string& a, const std::string& b);

/// H^alpha_{A->B} in the frame rotating at omega for every mode.
TimeDependentOperator build_diode_hamiltonian(const SpaceLayout& layout, const std::string& diode,
                                              const std::string& input, const std::string& output,
                                              const DiodeParams& params);

/// Materialize the listed onsite terms and couplings on `layout`.
TimeDependentOperator materialize(const SpaceLayout& layout, const std::vector<OnsiteTerm>& onsite,
                                  const std::vector<Coupling>& couplings);

struct CircuitBuild {
  SpaceLayout layout;
  std::optional<TimeDependentOperator> coherent;  ///< H_Circuit - H_SB; absent for Parallel
  CircuitModel model;

  /// H_Circuit on a layout that also contains L and R.
  TimeDependentOperator h_circuit(const SpaceLayout& full) const;
  /// H_SB on a layout that also contains L and R; absent when nothing was eliminated.
  std::optional<TimeDependentOperator> h_sb(const SpaceLayout& full) const;
};

CircuitBuild build_circuit(const CircuitSpec& spec);

/// Groups of modes that are connected by couplings; the generator of a reduced
/// model is a sum of terms each acting inside one group.
std::vector<std::vector<std::string>> connected_components(const CircuitModel& model);

}  // namespace heatrect

#endif  // HEATRECT_CIRCUIT_HPP
