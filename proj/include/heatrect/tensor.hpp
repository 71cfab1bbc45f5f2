#ifndef HEATRECT_TENSOR_HPP
#define HEATRECT_TENSOR_HPP

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace heatrect {

using cplx = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Raised for any violated precondition on labels, levels or shapes.
class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ModeKind { HarmonicOscillator, Qutrit };

struct Mode {
  std::string label;
  ModeKind kind;
  int dim;

  static Mode oscillator(std::string label, int dim);
  static Mode qutrit(std::string label);

  bool operator==(const Mode&) const = default;
};

/// Ordered list of modes spanning a tensor-product space.
///
/// The leftmost mode is the slowest-varying index of the Kronecker product,
/// i.e. basis index = sum_k level_k * stride(k) with stride of the last mode 1.
class SpaceLayout {
 public:
  SpaceLayout() = default;
  explicit SpaceLayout(std::vector<Mode> modes);

  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  const Mode& mode(std::size_t i) const { return modes_.at(i); }
  const Mode& mode(const std::string& label) const { return modes_[index_of(label)]; }

  /// Throws LayoutError naming the label when absent.
  std::size_t index_of(const std::string& label) const;
  bool contains(const std::string& label) const;

  long dim() const { return total_dim_; }
  long stride(std::size_t i) const { return strides_.at(i); }

  /// Level of mode i in basis state `index`.
  int level(long index, std::size_t i) const {
    return static_cast<int>((index / strides_[i]) % modes_[i].dim);
  }

  /// Layout of the listed modes, ordered as they appear in this layout.
  SpaceLayout sub_layout(const std::vector<std::string>& labels) const;

  bool operator==(const SpaceLayout& other) const { return modes_ == other.modes_; }

 private:
  std::vector<Mode> modes_;
  std::vector<long> strides_;
  long total_dim_ = 1;
};

/// Single-mode lowering operator in the mode's own basis.
///   oscillator: a|n> = sqrt(n)|n-1>
///   qutrit:     |0><1| + sqrt(2)|1><2|
DenseMatrix local_lowering(const Mode& mode);

/// Sparse operator on the full space of a layout.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(SpaceLayout layout, SparseMatrix matrix);

  static SparseOperator zero(const SpaceLayout& layout);
  static SparseOperator identity(const SpaceLayout& layout);

  const SpaceLayout& layout() const { return layout_; }
  const SparseMatrix& matrix() const { return matrix_; }
  long dim() const { return layout_.dim(); }
  long nonzeros() const { return matrix_.nonZeros(); }

  SparseOperator adjoint() const;
  DenseMatrix dense() const { return DenseMatrix(matrix_); }

  SparseOperator operator+(const SparseOperator& rhs) const;
  SparseOperator operator-(const SparseOperator& rhs) const;
  SparseOperator operator*(const SparseOperator& rhs) const;
  SparseOperator operator*(cplx scale) const;
  friend SparseOperator operator*(cplx scale, const SparseOperator& op) { return op * scale; }

 private:
  void canonicalize();
  void require_same_layout(const SparseOperator& rhs) const;

  SpaceLayout layout_;
  SparseMatrix matrix_;
};

/// Embeds a local single-mode matrix as identity (x) local (x) identity.
SparseOperator embed(const SpaceLayout& layout, const std::string& label, const DenseMatrix& local);

/// Embeds a product of local matrices acting on distinct modes.
SparseOperator embed_product(const SpaceLayout& layout,
                             const std::vector<std::pair<std::string, DenseMatrix>>& factors);

SparseOperator lowering_op(const SpaceLayout& layout, const std::string& label);
SparseOperator number_op(const SpaceLayout& layout, const std::string& label);
SparseOperator projector(const SpaceLayout& layout, const std::string& label, int level);

/// Dense Kronecker product, kept for small constructions and test oracles.
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

/// Density matrix on a layout. Stored as a dense d x d matrix; its column-stacked
/// vectorization is the state vector used by the Liouvillian.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(SpaceLayout layout, DenseMatrix data);

  static DensityMatrix ground_state(const SpaceLayout& layout);
  static DensityMatrix maximally_mixed(const SpaceLayout& layout);
  /// Tensor product of states on disjoint layouts, reordered into `target`.
  static DensityMatrix product(const std::vector<DensityMatrix>& factors, const SpaceLayout& target);

  const SpaceLayout& layout() const { return layout_; }
  const DenseMatrix& data() const { return data_; }
  DenseMatrix& data() { return data_; }
  long dim() const { return layout_.dim(); }

  cplx trace() const { return data_.trace(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;

  /// Hermitian part, normalized to unit trace.
  DensityMatrix normalized() const;
  /// Re Tr(op * rho).
  double expectation(const SparseOperator& op) const;
  /// <level| rho_mode |level> of one mode.
  double population(const std::string& label, int level) const;

  /// Throws std::domain_error when hermiticity, trace or positivity tolerances fail.
  void validate(double hermitian_tol = 1e-10, double trace_tol = 1e-10,
                double positivity_tol = 1e-8) const;

 private:
  SpaceLayout layout_;
  DenseMatrix data_;
};

/// Reduced state on the kept modes (order preserved). Errors on empty or unknown keep lists.
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);

}  // namespace heatrect

#endif  // HEATRECT_TENSOR_HPP
