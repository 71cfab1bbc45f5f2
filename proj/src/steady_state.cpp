#include "heatrect/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>
#include <Eigen/SparseLU>

namespace heatrect {

namespace {

std::function<void(const std::string&)>& log_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& m) {
    std::clog << "heatrect: " << m << '\n';
  };
  return sink;
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

// Dense propagation is used up to this subspace size; beyond it, plain stepping.
constexpr long kMaxFastForwardDim = 1600;
constexpr long kMaxDenseDirectDim = 1500;
// RK4 is stable for |lambda dt| up to ~2.8 on both axes; stay below with margin.
constexpr double kStabilityLimit = 2.5;

double max_row_abs_sum(const SparseMatrix& a) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

double max_frequency(const Liouvillian& gen) {
  double f = 0.0;
  for (double nu : gen.drive_frequencies()) f = std::max(f, std::abs(nu));
  return f;
}

// Indices of vec(rho) reachable from `seed` through the nonzero pattern of the
// given superoperators.
std::vector<long> reachable(const std::vector<const SparseMatrix*>& ops, std::vector<long> seed, long n) {
  Eigen::SparseMatrix<cplx, Eigen::ColMajor> pattern(n, n);
  for (const auto* op : ops) pattern += Eigen::SparseMatrix<cplx, Eigen::ColMajor>(*op);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::deque<long> frontier;
  for (long s : seed)
    if (!seen[s]) {
      seen[s] = 1;
      frontier.push_back(s);
    }
  while (!frontier.empty()) {
    const long c = frontier.front();
    frontier.pop_front();
    for (Eigen::SparseMatrix<cplx, Eigen::ColMajor>::InnerIterator it(pattern, c); it; ++it) {
      const long r = it.row();
      if (!seen[r] && it.value() != cplx(0.0, 0.0)) {
        seen[r] = 1;
        frontier.push_back(r);
      }
    }
  }
  std::vector<long> out;
  for (long i = 0; i < n; ++i)
    if (seen[i]) out.push_back(i);
  return out;
}

SparseMatrix restrict_to(const SparseMatrix& a, const std::vector<long>& kept) {
  std::vector<long> pos(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t k = 0; k < kept.size(); ++k) pos[kept[k]] = static_cast<long>(k);
  std::vector<Eigen::Triplet<cplx>> trips;
  for (std::size_t k = 0; k < kept.size(); ++k)
    for (SparseMatrix::InnerIterator it(a, kept[k]); it; ++it) {
      const long c = pos[it.col()];
      if (c >= 0) trips.emplace_back(static_cast<int>(k), static_cast<int>(c), it.value());
    }
  SparseMatrix out(static_cast<long>(kept.size()), static_cast<long>(kept.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

std::vector<long> diagonal_indices(long d) {
  std::vector<long> idx;
  for (long i = 0; i < d; ++i) idx.push_back(i + i * d);
  return idx;
}

DenseMatrix unvec(const DenseVector& full, long d) {
  return Eigen::Map<const DenseMatrix>(full.data(), d, d);
}

}  // namespace

void set_log_sink(std::function<void(const std::string&)> sink) {
  std::lock_guard lock(log_mutex());
  log_sink() = std::move(sink);
}

void log_note(const std::string& message) {
  std::lock_guard lock(log_mutex());
  if (log_sink()) log_sink()(message);
}

DegenerateSteadyStateError::DegenerateSteadyStateError(int n)
    : std::runtime_error("steady state is not unique: null space dimension " + std::to_string(n)), nullity(n) {}

NonConvergenceError::NonConvergenceError(int b, double prev, double lst)
    : std::runtime_error([&] {
        std::ostringstream os;
        os.precision(12);
        os << "windowed current did not converge within " << b << " blocks (last two averages " << prev << ", "
           << lst << ")";
        return os.str();
      }()),
      blocks(b),
      previous(prev),
      last(lst) {}

void ConvergenceProtocol::validate() const {
  if (!(block_length > 0.0)) throw std::invalid_argument("block_length must be positive");
  if (!(average_window > 0.0) || average_window > block_length)
    throw std::invalid_argument("average_window must lie in (0, block_length]");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
  if (!(abs_tol >= 0.0)) throw std::invalid_argument("abs_tol must be >= 0");
  if (max_blocks < 2) throw std::invalid_argument("max_blocks must be at least 2");
  if (steps_per_period < 20) throw std::invalid_argument("steps_per_period must be at least 20");
  if (!(static_dt > 0.0)) throw std::invalid_argument("static_dt must be positive");
}

double default_dt(const Liouvillian& gen) {
  const double nu = max_frequency(gen);
  double dt = 1e-2;
  if (nu > 0.0) dt = std::min(dt, 2.0 * std::numbers::pi / nu / 20.0);
  return dt;
}

// ---------------------------------------------------------------------------

DensityMatrix evolve(const Liouvillian& gen, const DensityMatrix& rho0, double t0, double t1, double dt) {
  if (!(rho0.layout() == gen.layout())) throw LayoutError("initial state and generator layouts differ");
  if (!(dt > 0.0)) throw StepSizeError("dt must be positive");
  if (t1 < t0) throw StepSizeError("t1 must not precede t0");
  const double nu = max_frequency(gen);
  if (nu > 0.0 && dt > (2.0 * std::numbers::pi / nu / 20.0) * (1.0 + 1e-12))
    throw StepSizeError("dt does not resolve the fastest drive (need dt <= period/20)");

  const long nsteps = t1 == t0 ? 0 : static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  const double h = nsteps ? (t1 - t0) / static_cast<double>(nsteps) : 0.0;
  DenseMatrix rho = rho0.data();
  for (long s = 0; s < nsteps; ++s) {
    const double t = t0 + static_cast<double>(s) * h;
    const DenseMatrix k1 = gen.apply(t, rho);
    const DenseMatrix k2 = gen.apply(t + 0.5 * h, rho + 0.5 * h * k1);
    const DenseMatrix k3 = gen.apply(t + 0.5 * h, rho + 0.5 * h * k2);
    const DenseMatrix k4 = gen.apply(t + h, rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!rho.allFinite()) throw InstabilityError("state became non-finite at t = " + std::to_string(t + h));
  }
  const cplx tr0 = rho0.trace();
  const double drift = std::abs(rho.trace() - tr0);
  if (drift > 1e-10 && std::abs(rho.trace()) > 0.0) {
    log_note("evolve: trace drift " + std::to_string(drift) + ", renormalized");
    rho *= tr0 / rho.trace();
  }
  return DensityMatrix(rho0.layout(), std::move(rho));
}

DensityMatrix steady_state_direct(const Liouvillian& gen) {
  if (gen.time_dependent()) throw std::invalid_argument("steady_state_direct needs a time-independent generator");
  const long d = gen.dim();
  const long d2 = d * d;
  const SparseMatrix full = gen.static_superop();
  const std::vector<long> kept = reachable({&full}, diagonal_indices(d), d2);
  const SparseMatrix a = restrict_to(full, kept);
  const long n = static_cast<long>(kept.size());

  DenseVector x;
  if (n <= kMaxDenseDirectDim) {
    const DenseMatrix dense(a);
    Eigen::BDCSVD<DenseMatrix> svd(dense, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = 1e-10 * std::max(1.0, s(0));
    int nullity = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) <= cutoff) ++nullity;
    if (nullity > 1) throw DegenerateSteadyStateError(nullity);
    x = svd.matrixV().col(n - 1);
  } else {
    // Replace one population equation by the trace condition.
    std::vector<long> pos(static_cast<std::size_t>(d2), -1);
    for (long k = 0; k < n; ++k) pos[kept[k]] = k;
    const long pivot = pos[0];
    std::vector<Eigen::Triplet<cplx>> trips;
    for (long r = 0; r < n; ++r) {
      if (r == pivot) continue;
      for (SparseMatrix::InnerIterator it(a, r); it; ++it) trips.emplace_back(r, it.col(), it.value());
    }
    for (long i = 0; i < d; ++i) trips.emplace_back(pivot, pos[i + i * d], 1.0);
    Eigen::SparseMatrix<cplx, Eigen::ColMajor> sys(n, n);
    sys.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<cplx, Eigen::ColMajor>> lu(sys);
    if (lu.info() != Eigen::Success) throw DegenerateSteadyStateError(2);
    DenseVector rhs = DenseVector::Zero(n);
    rhs(pivot) = 1.0;
    x = lu.solve(rhs);
  }

  DenseVector v = DenseVector::Zero(d2);
  for (long k = 0; k < n; ++k) v(kept[k]) = x(k);
  DensityMatrix rho = DensityMatrix(gen.layout(), unvec(v, d)).normalized();

  DenseVector check = Eigen::Map<const DenseVector>(rho.data().data(), d2);
  const double residual = (full * check).cwiseAbs().maxCoeff();
  double scale = 1.0;
  for (long k = 0; k < full.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(full, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  if (residual > 1e-10 * scale)
    throw std::runtime_error("steady_state_direct: residual " + std::to_string(residual));
  return rho;
}

// ---------------------------------------------------------------------------

namespace {

template <class State>
State apply_restricted(const SparseMatrix& s, const std::vector<std::pair<double, SparseMatrix>>& drives,
                       double t, const State& x) {
  State y = s * x;
  for (const auto& [nu, op] : drives) y += std::cos(nu * t) * (op * x);
  return y;
}

template <class State>
State rk4(const SparseMatrix& s, const std::vector<std::pair<double, SparseMatrix>>& drives, double t, double h,
          const State& x) {
  const State k1 = apply_restricted(s, drives, t, x);
  const State k2 = apply_restricted(s, drives, t + 0.5 * h, State(x + (0.5 * h) * k1));
  const State k3 = apply_restricted(s, drives, t + 0.5 * h, State(x + (0.5 * h) * k2));
  const State k4 = apply_restricted(s, drives, t + h, State(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

BlockPropagator::BlockPropagator(const Liouvillian& gen, const DensityMatrix& rho0,
                                 const LocalObservable& observable, int steps_per_period, double static_dt)
    : layout_(gen.layout()), d_(gen.dim()) {
  if (!(rho0.layout() == gen.layout())) throw LayoutError("initial state and generator layouts differ");
  const long d2 = d_ * d_;
  const SparseMatrix full_static = gen.static_superop();
  const auto full_drives = gen.drive_superops();

  std::vector<const SparseMatrix*> ops{&full_static};
  for (const auto& dr : full_drives) ops.push_back(&dr.second);
  std::vector<long> seed = diagonal_indices(d_);
  const DenseVector v0 = Eigen::Map<const DenseVector>(rho0.data().data(), d2);
  for (long i = 0; i < d2; ++i)
    if (v0(i) != cplx(0.0, 0.0)) seed.push_back(i);
  kept_ = reachable(ops, seed, d2);

  static_ = restrict_to(full_static, kept_);
  double bound = max_row_abs_sum(static_);
  for (const auto& [nu, op] : full_drives) {
    drives_.emplace_back(nu, restrict_to(op, kept_));
    bound += max_row_abs_sum(drives_.back().second);
  }

  if (drives_.empty()) {
    m_ = 1;
    dt_ = static_dt;
    if (bound * dt_ > kStabilityLimit) {
      dt_ = kStabilityLimit / bound;
      log_note("static step reduced to " + std::to_string(dt_) + " for RK4 stability");
    }
  } else {
    double base = 0.0;
    for (const auto& dr : drives_) base = std::max(base, std::abs(dr.first));
    for (const auto& dr : drives_) {
      const double ratio = std::abs(dr.first) / base;
      if (std::abs(ratio - std::round(ratio)) > 1e-9 && std::abs(1.0 / ratio - std::round(1.0 / ratio)) > 1e-9)
        throw std::invalid_argument("drive frequencies are not commensurate");
    }
    // Common period of commensurate drives is set by the lowest frequency.
    for (const auto& dr : drives_) base = std::min(base, std::abs(dr.first));
    const double period = 2.0 * std::numbers::pi / base;
    const double nu_max = max_frequency(gen);
    m_ = std::max<long>(steps_per_period, static_cast<long>(std::ceil(20.0 * nu_max / base - 1e-9)));
    const long stable = static_cast<long>(std::ceil(period * bound / kStabilityLimit));
    if (stable > m_) {
      log_note("steps per period raised to " + std::to_string(stable) + " for RK4 stability");
      m_ = stable;
    }
    dt_ = period / static_cast<double>(m_);
  }

  DenseVector x(static_cast<long>(kept_.size()));
  for (std::size_t k = 0; k < kept_.size(); ++k) x(static_cast<long>(k)) = v0(kept_[k]);
  x_ = std::move(x);
  obs_ = observable_vector(observable);

  fast_ = subspace_dim() <= kMaxFastForwardDim;
  if (fast_) build_period_map();
}

DenseVector BlockPropagator::observable_vector(const LocalObservable& obs) const {
  const DenseMatrix op = obs.restricted(layout_).on(layout_).dense();
  DenseVector o(subspace_dim());
  // Tr(O rho) = sum_{ij} O(j, i) rho(i, j) with vec index i + j d.
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    const long i = kept_[k] % d_, j = kept_[k] / d_;
    o(static_cast<long>(k)) = op(j, i);
  }
  return o;
}

double BlockPropagator::value_of(const DenseVector& x) const { return obs_.transpose().dot(x).real(); }

double BlockPropagator::value() const { return value_of(x_); }

double BlockPropagator::value(const LocalObservable& other) const {
  return observable_vector(other).transpose().dot(x_).real();
}

DensityMatrix BlockPropagator::state() const {
  DenseVector v = DenseVector::Zero(d_ * d_);
  for (std::size_t k = 0; k < kept_.size(); ++k) v(kept_[k]) = x_(static_cast<long>(k));
  return DensityMatrix(layout_, unvec(v, d_));
}

DenseVector BlockPropagator::rk4_step(const DenseVector& x, long phase) const {
  return rk4(static_, drives_, static_cast<double>(phase) * dt_, dt_, x);
}

DenseMatrix BlockPropagator::rk4_step(const DenseMatrix& x, long phase) const {
  return rk4(static_, drives_, static_cast<double>(phase) * dt_, dt_, x);
}

void BlockPropagator::build_period_map() {
  const long n = subspace_dim();
  DenseMatrix X = DenseMatrix::Identity(n, n);
  Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(n);
  for (long j = 0; j < m_; ++j) {
    w += obs_.transpose() * X;
    X = rk4_step(X, j);
  }
  pow2_.push_back(std::move(X));
  sums_.push_back(std::move(w));
}

void BlockPropagator::ensure_level(std::size_t level) {
  while (pow2_.size() <= level) {
    sums_.push_back(sums_.back() + sums_.back() * pow2_.back());
    pow2_.push_back(pow2_.back() * pow2_.back());
  }
}

double BlockPropagator::advance(long nsteps) {
  if (nsteps < 0) throw std::invalid_argument("cannot advance a negative number of steps");
  double sum = 0.0;
  auto single = [&] {
    sum += value_of(x_);
    x_ = rk4_step(x_, step_ % m_);
    ++step_;
    --nsteps;
  };
  if (fast_) {
    while (nsteps > 0 && step_ % m_ != 0) single();
    const long periods = nsteps / m_;
    for (std::size_t bit = 0; (periods >> bit) != 0; ++bit) {
      if (((periods >> bit) & 1) == 0) continue;
      ensure_level(bit);
      sum += (sums_[bit] * x_)(0).real();
      x_ = pow2_[bit] * x_;
    }
    step_ += periods * m_;
    nsteps -= periods * m_;
  }
  while (nsteps > 0) single();
  if (!x_.allFinite()) throw InstabilityError("state became non-finite during propagation");
  return sum;
}

// ---------------------------------------------------------------------------

ProductState::ProductState(std::vector<DensityMatrix> factors, SpaceLayout layout)
    : factors_(std::move(factors)), layout_(std::move(layout)) {
  std::size_t modes = 0;
  for (const auto& f : factors_) {
    modes += f.layout().size();
    for (const auto& m : f.layout().modes())
      if (!(layout_.mode(m.label) == m)) throw LayoutError("factor mode differs from product layout");
  }
  if (modes != layout_.size()) throw LayoutError("factors do not cover the product layout");
}

DensityMatrix ProductState::full() const { return DensityMatrix::product(factors_, layout_); }

DensityMatrix ProductState::reduced(const std::vector<std::string>& keep) const {
  std::vector<DensityMatrix> pieces;
  std::vector<std::string> ordered;
  for (const auto& f : factors_) {
    std::vector<std::string> mine;
    for (const auto& l : keep)
      if (f.layout().contains(l)) mine.push_back(l);
    if (mine.empty()) continue;
    pieces.push_back(mine.size() == f.layout().size() ? f : partial_trace(f, mine));
    for (const auto& l : mine) ordered.push_back(l);
  }
  if (ordered.size() != keep.size()) throw LayoutError("unknown label in reduced()");
  return DensityMatrix::product(pieces, layout_.sub_layout(keep));
}

double ProductState::population(const std::string& label, int level) const {
  for (const auto& f : factors_)
    if (f.layout().contains(label)) return f.population(label, level);
  throw LayoutError("unknown mode label '" + label + "'");
}

// ---------------------------------------------------------------------------

EvolutionResult run_convergence_protocol(const std::vector<ComponentProblem>& components,
                                         const SpaceLayout& layout, const ConvergenceProtocol& protocol,
                                         bool direct_static) {
  protocol.validate();
  double constant = 0.0;
  std::vector<std::optional<DensityMatrix>> fixed(components.size());
  std::vector<std::optional<BlockPropagator>> props(components.size());
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& comp = components[c];
    if (direct_static && !comp.generator.time_dependent()) {
      fixed[c] = steady_state_direct(comp.generator);
      constant += comp.observable.restricted(fixed[c]->layout()).value(*fixed[c]);
    } else {
      props[c].emplace(comp.generator, comp.rho0, comp.observable, protocol.steps_per_period, protocol.static_dt);
    }
  }

  EvolutionResult result;
  for (int n = 0; n < protocol.max_blocks; ++n) {
    double total = constant;
    for (auto& p : props) {
      if (!p) continue;
      // Blocks and windows span whole drive periods so every block ends at the
      // same drive phase.
      const long m = p->steps_per_period();
      const double period = static_cast<double>(m) * p->dt();
      const long S = m * std::max<long>(1, std::llround(protocol.block_length / period));
      const long W = std::min(S, m * std::max<long>(1, std::llround(protocol.average_window / period)));
      const long end = static_cast<long>(n + 1) * S;
      p->advance(end - W - p->step_index());
      const double fa = p->value();
      const double sum = p->advance(W);
      const double fb = p->value();
      total += (sum - 0.5 * fa + 0.5 * fb) / static_cast<double>(W);
    }
    result.block_averages.push_back(total);
    result.blocks_used = n + 1;
    result.converged_value = total;
    if (n >= 1) {
      const double prev = result.block_averages[static_cast<std::size_t>(n - 1)];
      const double change = std::abs(total - prev);
      // Absolute values on both sides: reverse currents are negative.
      if (change < std::max(protocol.rel_tol * std::abs(prev), protocol.abs_tol)) {
        result.converged_block = n;
        result.converged = true;
        break;
      }
    }
  }

  std::vector<DensityMatrix> states;
  for (std::size_t c = 0; c < components.size(); ++c) states.push_back(fixed[c] ? *fixed[c] : props[c]->state());
  result.final_state = ProductState(std::move(states), layout);
  return result;
}

EvolutionResult steady_state_averaged(const std::vector<ComponentProblem>& components, const SpaceLayout& layout,
                                      const ConvergenceProtocol& protocol, bool direct_static) {
  EvolutionResult r = run_convergence_protocol(components, layout, protocol, direct_static);
  if (!r.converged) {
    const auto& a = r.block_averages;
    throw NonConvergenceError(r.blocks_used, a.size() > 1 ? a[a.size() - 2] : a.back(), a.back());
  }
  return r;
}

EvolutionResult steady_state_averaged(const Liouvillian& gen, const DensityMatrix& rho0,
                                      const ConvergenceProtocol& protocol, const LocalObservable& current) {
  return steady_state_averaged({ComponentProblem{gen, rho0, current}}, gen.layout(), protocol, false);
}

std::vector<TrajectorySample> sample_trajectory(const std::vector<ComponentProblem>& components, double t_max,
                                                double stride, int steps_per_period, double static_dt) {
  if (!(stride > 0.0)) throw std::invalid_argument("trajectory stride must be positive");
  if (!(t_max >= 0.0)) throw std::invalid_argument("trajectory t_max must be >= 0");
  std::vector<BlockPropagator> props;
  for (const auto& c : components) props.emplace_back(c.generator, c.rho0, c.observable, steps_per_period, static_dt);
  std::vector<TrajectorySample> out;
  const long samples = static_cast<long>(std::floor(t_max / stride * (1.0 + 1e-12)));
  for (long k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) * stride;
    double total = 0.0;
    for (auto& p : props) {
      p.advance(std::llround(t / p.dt()) - p.step_index());
      total += p.value();
    }
    out.push_back({t, {total}});
  }
  return out;
}

std::vector<TrajectorySample> sample_trajectory(const Liouvillian& gen, const DensityMatrix& rho0, double t_max,
                                                double stride, const std::vector<LocalObservable>& observables,
                                                int steps_per_period) {
  if (!(stride > 0.0)) throw std::invalid_argument("trajectory stride must be positive");
  if (!(t_max >= 0.0)) throw std::invalid_argument("trajectory t_max must be >= 0");
  BlockPropagator p(gen, rho0, LocalObservable{}, steps_per_period);
  std::vector<TrajectorySample> out;
  const long samples = static_cast<long>(std::floor(t_max / stride * (1.0 + 1e-12)));
  for (long k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) * stride;
    p.advance(std::llround(t / p.dt()) - p.step_index());
    TrajectorySample s{t, {}};
    for (const auto& o : observables) s.values.push_back(p.value(o));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace heatrect
