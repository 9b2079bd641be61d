// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_LINALG_HPP
#define EGMD_LINALG_HPP

#include <memory>
#include <span>
#include <vector>

namespace egmd
{

//
// Compressed sparse row matrix with a fixed pattern. Columns within a row are sorted and
// unique; add() only touches existing entries.
//
class SparseMatrix
{
public:
  struct Triplet
  {
    int row, col;
    double value;
  };

  SparseMatrix() = default;

  // Pattern from per-row column lists (sorted and deduplicated here); values zero.
  static SparseMatrix from_pattern(int n_rows, int n_cols, std::vector<std::vector<int>> rows);
  // Duplicates are summed.
  static SparseMatrix from_triplets(int n_rows, int n_cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);

  int rows() const { return n_rows_; }
  int cols() const { return n_cols_; }
  std::size_t nnz() const { return col_.size(); }

  // Throws std::out_of_range if (r, c) is not in the pattern.
  void add(int r, int c, double v);
  void set(int r, int c, double v);
  double at(int r, int c) const;
  // Index into values() of (r, c), or -1.
  std::ptrdiff_t find(int r, int c) const;

  void set_zero();
  // Replaces row r by the unit row with `diag` on the diagonal.
  void make_unit_row(int r, double diag);

  std::span<const int> row_cols(int r) const;
  std::span<const double> row_values(int r) const;
  const std::vector<int> &offsets() const { return row_ptr_; }
  const std::vector<int> &columns() const { return col_; }
  const std::vector<double> &values() const { return val_; }
  std::vector<double> &values() { return val_; }

  std::vector<double> diagonal() const;

  // y = A x, dispatching to the OpenMP kernel when more than one thread is configured.
  void multiply(std::span<const double> x, std::span<double> y) const;

  // Square submatrix on the index range [begin, end).
  SparseMatrix block(int begin, int end) const;

private:
  int n_rows_ = 0, n_cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
};

namespace kernels
{
void spmv_serial(const SparseMatrix &a, std::span<const double> x, std::span<double> y);
void spmv_omp(const SparseMatrix &a, std::span<const double> x, std::span<double> y);
}  // namespace kernels

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

class Preconditioner
{
public:
  virtual ~Preconditioner() = default;
  // z = M^{-1} r
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner
{
public:
  void apply(std::span<const double> r, std::span<double> z) const override;
};

// Incomplete LU with zero fill on the pattern of A.
class Ilu0 final : public Preconditioner
{
public:
  explicit Ilu0(const SparseMatrix &a);
  void apply(std::span<const double> r, std::span<double> z) const override;

private:
  SparseMatrix lu_;
  std::vector<int> diag_;
};

struct IndexRange
{
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
};

// The (continuous, cell-constant) dof split of an EG system.
struct BlockPartition
{
  IndexRange cg;
  IndexRange constant;
};

// Applies ILU(0) of each diagonal block independently, ignoring the off-diagonal coupling.
class BlockDiagonalPreconditioner final : public Preconditioner
{
public:
  BlockDiagonalPreconditioner(const SparseMatrix &a, const BlockPartition &partition);
  void apply(std::span<const double> r, std::span<double> z) const override;

private:
  BlockPartition partition_;
  std::unique_ptr<Ilu0> cg_, constant_;
};

struct GmresOptions
{
  double tol = 1e-10;  // relative to ||b||
  int restart = 100;
  int max_iter = 2000;
  // Stop on the normwise backward error ||r|| / (||A||_inf ||x|| + ||b||) instead. Needed when
  // the solution is large compared with the data, e.g. a weakly compressible closed domain.
  bool backward_error = false;
};

struct GmresResult
{
  int iterations = 0;
  double residual = 0.0;  // final ||b - A x|| / ||b||
  bool converged = false;
  bool breakdown = false;
  // Relative residual estimate after every inner iteration.
  std::vector<double> history;
};

// Restarted GMRES with right preconditioning, so the minimized residual is the true one.
// x holds the initial guess on entry.
GmresResult gmres(const SparseMatrix &a, std::span<const double> b, std::span<double> x,
                  const GmresOptions &options = {}, const Preconditioner *precond = nullptr);

}  // namespace egmd

#endif  // EGMD_LINALG_HPP
