#include "heatrect/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace heatrect {

Mode Mode::oscillator(std::string label, int dim) {
  if (dim < 2) throw LayoutError("oscillator '" + label + "' needs dimension >= 2");
  return Mode{std::move(label), ModeKind::HarmonicOscillator, dim};
}

Mode Mode::qutrit(std::string label) { return Mode{std::move(label), ModeKind::Qutrit, 3}; }

SpaceLayout::SpaceLayout(std::vector<Mode> modes) : modes_(std::move(modes)) {
  std::set<std::string> seen;
  for (const auto& m : modes_) {
    if (!seen.insert(m.label).second) throw LayoutError("duplicate mode label '" + m.label + "'");
    if (m.kind == ModeKind::Qutrit && m.dim != 3)
      throw LayoutError("qutrit '" + m.label + "' must have dimension 3");
    if (m.dim < 2) throw LayoutError("mode '" + m.label + "' needs dimension >= 2");
  }
  strides_.assign(modes_.size(), 1);
  total_dim_ = 1;
  for (std::size_t k = modes_.size(); k-- > 0;) {
    strides_[k] = total_dim_;
    total_dim_ *= modes_[k].dim;
  }
}

std::size_t SpaceLayout::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < modes_.size(); ++i)
    if (modes_[i].label == label) return i;
  throw LayoutError("unknown mode label '" + label + "'");
}

bool SpaceLayout::contains(const std::string& label) const {
  return std::any_of(modes_.begin(), modes_.end(), [&](const Mode& m) { return m.label == label; });
}

SpaceLayout SpaceLayout::sub_layout(const std::vector<std::string>& labels) const {
  std::vector<bool> take(modes_.size(), false);
  for (const auto& l : labels) take[index_of(l)] = true;
  std::vector<Mode> out;
  for (std::size_t i = 0; i < modes_.size(); ++i)
    if (take[i]) out.push_back(modes_[i]);
  return SpaceLayout(std::move(out));
}

DenseMatrix local_lowering(const Mode& mode) {
  DenseMatrix a = DenseMatrix::Zero(mode.dim, mode.dim);
  // For the qutrit this is exactly |0><1| + sqrt(2)|1><2|.
  for (int n = 1; n < mode.dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

// ---------------------------------------------------------------------------

SparseOperator::SparseOperator(SpaceLayout layout, SparseMatrix matrix)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != layout_.dim() || matrix_.cols() != layout_.dim())
    throw LayoutError("operator shape does not match layout dimension");
  canonicalize();
}

SparseOperator SparseOperator::zero(const SpaceLayout& layout) {
  return SparseOperator(layout, SparseMatrix(layout.dim(), layout.dim()));
}

SparseOperator SparseOperator::identity(const SpaceLayout& layout) {
  SparseMatrix id(layout.dim(), layout.dim());
  id.setIdentity();
  return SparseOperator(layout, std::move(id));
}

void SparseOperator::canonicalize() {
  matrix_.prune(cplx(0.0, 0.0), 0.0);
  matrix_.makeCompressed();
}

void SparseOperator::require_same_layout(const SparseOperator& rhs) const {
  if (!(layout_ == rhs.layout_)) throw LayoutError("operators live on different layouts");
}

SparseOperator SparseOperator::adjoint() const {
  return SparseOperator(layout_, SparseMatrix(matrix_.adjoint()));
}

SparseOperator SparseOperator::operator+(const SparseOperator& rhs) const {
  require_same_layout(rhs);
  return SparseOperator(layout_, SparseMatrix(matrix_ + rhs.matrix_));
}

SparseOperator SparseOperator::operator-(const SparseOperator& rhs) const {
  require_same_layout(rhs);
  return SparseOperator(layout_, SparseMatrix(matrix_ - rhs.matrix_));
}

SparseOperator SparseOperator::operator*(const SparseOperator& rhs) const {
  require_same_layout(rhs);
  return SparseOperator(layout_, SparseMatrix(matrix_ * rhs.matrix_));
}

SparseOperator SparseOperator::operator*(cplx scale) const {
  return SparseOperator(layout_, SparseMatrix(matrix_ * scale));
}

// ---------------------------------------------------------------------------

SparseOperator embed_product(const SpaceLayout& layout,
                             const std::vector<std::pair<std::string, DenseMatrix>>& factors) {
  const std::size_t nmodes = layout.size();
  std::vector<const DenseMatrix*> local(nmodes, nullptr);
  for (const auto& [label, m] : factors) {
    const std::size_t k = layout.index_of(label);
    if (local[k]) throw LayoutError("mode '" + label + "' appears twice in a product");
    if (m.rows() != layout.mode(k).dim || m.cols() != layout.mode(k).dim)
      throw LayoutError("local operator on '" + label + "' has wrong dimension");
    local[k] = &m;
  }

  // Sparse pattern of each factor: list of (row, col, value); identity when absent.
  struct Entry {
    int r, c;
    cplx v;
  };
  std::vector<std::vector<Entry>> entries(nmodes);
  for (std::size_t k = 0; k < nmodes; ++k) {
    const int d = layout.mode(k).dim;
    if (!local[k]) {
      for (int i = 0; i < d; ++i) entries[k].push_back({i, i, 1.0});
      continue;
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if ((*local[k])(i, j) != cplx(0.0, 0.0)) entries[k].push_back({i, j, (*local[k])(i, j)});
  }

  std::vector<Eigen::Triplet<cplx>> trips;
  // Expand the Kronecker product mode by mode; leftmost mode is slowest.
  std::vector<Entry> acc{{0, 0, 1.0}};
  for (std::size_t k = 0; k < nmodes; ++k) {
    const int d = layout.mode(k).dim;
    std::vector<Entry> next;
    next.reserve(acc.size() * entries[k].size());
    for (const auto& a : acc)
      for (const auto& e : entries[k]) next.push_back({a.r * d + e.r, a.c * d + e.c, a.v * e.v});
    acc = std::move(next);
  }
  trips.reserve(acc.size());
  for (const auto& e : acc) trips.emplace_back(e.r, e.c, e.v);
  SparseMatrix m(layout.dim(), layout.dim());
  m.setFromTriplets(trips.begin(), trips.end());
  return SparseOperator(layout, std::move(m));
}

SparseOperator embed(const SpaceLayout& layout, const std::string& label, const DenseMatrix& local) {
  return embed_product(layout, {{label, local}});
}

SparseOperator lowering_op(const SpaceLayout& layout, const std::string& label) {
  return embed(layout, label, local_lowering(layout.mode(label)));
}

SparseOperator number_op(const SpaceLayout& layout, const std::string& label) {
  const Mode& m = layout.mode(label);
  DenseMatrix n = DenseMatrix::Zero(m.dim, m.dim);
  for (int k = 0; k < m.dim; ++k) n(k, k) = static_cast<double>(k);
  return embed(layout, label, n);
}

SparseOperator projector(const SpaceLayout& layout, const std::string& label, int level) {
  const Mode& m = layout.mode(label);
  if (level < 0 || level >= m.dim)
    throw LayoutError("level " + std::to_string(level) + " out of range for mode '" + label + "'");
  DenseMatrix p = DenseMatrix::Zero(m.dim, m.dim);
  p(level, level) = 1.0;
  return embed(layout, label, p);
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(SpaceLayout layout, DenseMatrix data)
    : layout_(std::move(layout)), data_(std::move(data)) {
  if (data_.rows() != layout_.dim() || data_.cols() != layout_.dim())
    throw LayoutError("density matrix shape does not match layout dimension");
}

DensityMatrix DensityMatrix::ground_state(const SpaceLayout& layout) {
  DenseMatrix d = DenseMatrix::Zero(layout.dim(), layout.dim());
  d(0, 0) = 1.0;
  return DensityMatrix(layout, std::move(d));
}

DensityMatrix DensityMatrix::maximally_mixed(const SpaceLayout& layout) {
  const double w = 1.0 / static_cast<double>(layout.dim());
  return DensityMatrix(layout, DenseMatrix::Identity(layout.dim(), layout.dim()) * w);
}

DensityMatrix DensityMatrix::product(const std::vector<DensityMatrix>& factors,
                                     const SpaceLayout& target) {
  std::vector<Mode> concat;
  DenseMatrix data = DenseMatrix::Ones(1, 1);
  for (const auto& f : factors) {
    for (const auto& m : f.layout().modes()) concat.push_back(m);
    data = kron(data, f.data());
  }
  SpaceLayout source(concat);
  if (source.size() != target.size()) throw LayoutError("product factors do not cover target layout");

  // Permute basis indices from the concatenated order into the target order.
  const long d = target.dim();
  std::vector<long> perm(static_cast<std::size_t>(d));
  std::vector<std::size_t> where(source.size());
  for (std::size_t k = 0; k < source.size(); ++k) {
    where[k] = target.index_of(source.mode(k).label);
    if (!(target.mode(where[k]) == source.mode(k))) throw LayoutError("mode mismatch in product");
  }
  for (long s = 0; s < d; ++s) {
    long t = 0;
    for (std::size_t k = 0; k < source.size(); ++k) t += source.level(s, k) * target.stride(where[k]);
    perm[static_cast<std::size_t>(s)] = t;
  }
  DenseMatrix out(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) out(perm[i], perm[j]) = data(i, j);
  return DensityMatrix(target, std::move(out));
}

double DensityMatrix::hermiticity_error() const {
  return (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  DenseMatrix h = 0.5 * (data_ + data_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DensityMatrix DensityMatrix::normalized() const {
  DenseMatrix h = 0.5 * (data_ + data_.adjoint());
  const double tr = h.trace().real();
  if (!(std::abs(tr) > 0.0) || !std::isfinite(tr)) throw std::domain_error("cannot normalize a traceless state");
  return DensityMatrix(layout_, h / tr);
}

double DensityMatrix::expectation(const SparseOperator& op) const {
  if (!(op.layout() == layout_)) throw LayoutError("operator and state live on different layouts");
  // Tr(A rho) = sum_ij A_ij rho_ji
  cplx acc = 0.0;
  const auto& m = op.matrix();
  for (Eigen::Index i = 0; i < m.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) acc += it.value() * data_(it.col(), it.row());
  return acc.real();
}

double DensityMatrix::population(const std::string& label, int level) const {
  const std::size_t k = layout_.index_of(label);
  if (level < 0 || level >= layout_.mode(k).dim) throw LayoutError("population level out of range");
  double p = 0.0;
  for (long i = 0; i < dim(); ++i)
    if (layout_.level(i, k) == level) p += data_(i, i).real();
  return p;
}

void DensityMatrix::validate(double hermitian_tol, double trace_tol, double positivity_tol) const {
  if (!data_.allFinite()) throw std::domain_error("density matrix has non-finite entries");
  if (hermiticity_error() > hermitian_tol) throw std::domain_error("density matrix is not Hermitian");
  if (std::abs(trace() - cplx(1.0, 0.0)) > trace_tol) throw std::domain_error("density matrix trace is not 1");
  if (min_eigenvalue() < -positivity_tol) throw std::domain_error("density matrix has negative eigenvalues");
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  if (keep.empty()) throw LayoutError("partial_trace needs at least one kept mode");
  const SpaceLayout& full = rho.layout();
  const SpaceLayout kept = full.sub_layout(keep);

  std::vector<bool> is_kept(full.size(), false);
  for (const auto& l : keep) is_kept[full.index_of(l)] = true;

  // Split every full index into (kept index, traced index).
  const long d = full.dim();
  std::vector<long> kidx(static_cast<std::size_t>(d)), tidx(static_cast<std::size_t>(d));
  for (long s = 0; s < d; ++s) {
    long ki = 0, ti = 0;
    for (std::size_t k = 0; k < full.size(); ++k) {
      const int lv = full.level(s, k);
      if (is_kept[k]) ki = ki * full.mode(k).dim + lv;
      else ti = ti * full.mode(k).dim + lv;
    }
    kidx[s] = ki;
    tidx[s] = ti;
  }

  DenseMatrix out = DenseMatrix::Zero(kept.dim(), kept.dim());
  const auto& data = rho.data();
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i)
      if (tidx[i] == tidx[j]) out(kidx[i], kidx[j]) += data(i, j);
  return DensityMatrix(kept, std::move(out));
}

}  // namespace heatrect
