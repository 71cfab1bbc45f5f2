#ifndef HEATRECT_STEADY_STATE_HPP
#define HEATRECT_STEADY_STATE_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatrect/lindblad.hpp"
#include "heatrect/observables.hpp"
#include "heatrect/tensor.hpp"

namespace heatrect {

/// Diagnostic sink for non-fatal events (trace renormalization, chosen step
/// sizes). Defaults to std::clog; pass an empty function to silence.
void set_log_sink(std::function<void(const std::string&)> sink);
void log_note(const std::string& message);

class StepSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateSteadyStateError : public std::runtime_error {
 public:
  DegenerateSteadyStateError(int nullity);
  int nullity;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(int blocks, double previous, double last);
  int blocks;
  double previous;
  double last;
};

/// Windowed-average stopping rule for driven generators. Times in 1/J.
struct ConvergenceProtocol {
  double block_length = 5000.0;
  double average_window = 1000.0;
  double rel_tol = 1e-4;
  int max_blocks = 40;
  /// Absolute floor on |J_n - J_{n-1}|, needed when the current itself is zero.
  double abs_tol = 1e-14;
  /// Integrator steps per drive period (>= 20).
  int steps_per_period = 20;
  /// Step for generators without drives.
  double static_dt = 1e-2;

  void validate() const;
};

/// Largest step admitted for a generator: min(1e-2, period/20) when driven.
double default_dt(const Liouvillian& gen);

/// Fixed-step RK4 integration of d(rho)/dt = L(t) rho from t0 to t1.
/// The step is shrunk uniformly so that an integer number of steps fits.
DensityMatrix evolve(const Liouvillian& gen, const DensityMatrix& rho0, double t0, double t1, double dt);

/// Null vector of a time-independent generator, Hermitized and normalized.
DensityMatrix steady_state_direct(const Liouvillian& gen);

/// RK4 propagation of one generator on the subspace of vec(rho) reachable from
/// the initial state. When the generator is periodic and the step divides the
/// period, whole periods are applied through cached powers of the one-period
/// map; this is the same arithmetic as stepping, reordered.
class BlockPropagator {
 public:
  BlockPropagator(const Liouvillian& gen, const DensityMatrix& rho0, const LocalObservable& observable,
                  int steps_per_period = 20, double static_dt = 1e-2);

  double dt() const { return dt_; }
  long steps_per_period() const { return m_; }
  long step_index() const { return step_; }
  long subspace_dim() const { return static_cast<long>(kept_.size()); }
  bool fast_forward() const { return fast_; }

  /// Observable at the current state.
  double value() const;
  double value(const LocalObservable& other) const;
  DensityMatrix state() const;

  /// Advances `nsteps` integrator steps. Returns the sum of the observable over
  /// the visited step points, excluding the final one.
  double advance(long nsteps);

 private:
  DenseVector rk4_step(const DenseVector& x, long phase) const;
  DenseMatrix rk4_step(const DenseMatrix& x, long phase) const;
  void build_period_map();
  void ensure_level(std::size_t level);
  double value_of(const DenseVector& x) const;
  DenseVector observable_vector(const LocalObservable& obs) const;

  SpaceLayout layout_;
  long d_ = 0;
  std::vector<long> kept_;
  SparseMatrix static_;
  std::vector<std::pair<double, SparseMatrix>> drives_;
  DenseVector obs_;
  DenseVector x_;
  long m_ = 1;
  double dt_ = 0.0;
  long step_ = 0;
  bool fast_ = false;

  std::vector<DenseMatrix> pow2_;                        // P^(2^i)
  std::vector<Eigen::RowVectorXcd> sums_;                // w^T sum_{k<2^i} P^k
};

/// A generator together with its initial state and the current it contributes.
struct ComponentProblem {
  Liouvillian generator;
  DensityMatrix rho0;
  LocalObservable observable;
};

/// Tensor product of independent component states.
class ProductState {
 public:
  ProductState() = default;
  ProductState(std::vector<DensityMatrix> factors, SpaceLayout layout);

  const std::vector<DensityMatrix>& factors() const { return factors_; }
  const SpaceLayout& layout() const { return layout_; }

  DensityMatrix full() const;
  DensityMatrix reduced(const std::vector<std::string>& keep) const;
  double population(const std::string& label, int level) const;

 private:
  std::vector<DensityMatrix> factors_;
  SpaceLayout layout_;
};

struct TrajectorySample {
  double time;
  std::vector<double> values;
};

struct EvolutionResult {
  ProductState final_state;
  double converged_value = 0.0;
  int converged_block = -1;  ///< block index n at which the rule was met
  int blocks_used = 0;
  std::vector<double> block_averages;
  bool converged = false;
};

/// Evolves block by block; after block n the observable is averaged over the
/// last `average_window` of the block (trapezoidal at every step) and the run
/// stops at the first n >= 1 with |J_n - J_{n-1}| < rel_tol |J_{n-1}|.
EvolutionResult steady_state_averaged(const Liouvillian& gen, const DensityMatrix& rho0,
                                      const ConvergenceProtocol& protocol, const LocalObservable& current);

/// Runs the protocol without throwing; `converged` reports the outcome.
EvolutionResult run_convergence_protocol(const std::vector<ComponentProblem>& components,
                                         const SpaceLayout& layout, const ConvergenceProtocol& protocol,
                                         bool direct_static = true);

/// Same protocol for a sum of independent components; the current is the sum
/// of the component currents. Components without drives are solved directly
/// when `direct_static` is set and contribute a constant.
EvolutionResult steady_state_averaged(const std::vector<ComponentProblem>& components,
                                      const SpaceLayout& layout, const ConvergenceProtocol& protocol,
                                      bool direct_static = true);

/// Sum of the component currents sampled at t = k*stride, k*stride <= t_max.
/// Every component starts from its own rho0.
std::vector<TrajectorySample> sample_trajectory(const std::vector<ComponentProblem>& components, double t_max,
                                                double stride, int steps_per_period = 20, double static_dt = 1e-2);

/// Samples observables at t = k*stride up to t_max.
std::vector<TrajectorySample> sample_trajectory(const Liouvillian& gen, const DensityMatrix& rho0, double t_max,
                                                double stride, const std::vector<LocalObservable>& observables,
                                                int steps_per_period = 20);

}  // namespace heatrect

#endif  // HEATRECT_STEADY_STATE_HPP
