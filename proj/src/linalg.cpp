// SPDX-License-Identifier: Apache-2.0

#include "egmd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "egmd/parallel.hpp"

namespace egmd
{

SparseMatrix SparseMatrix::from_pattern(int n_rows, int n_cols, std::vector<std::vector<int>> rows)
{
  if (static_cast<int>(rows.size()) != n_rows)
  {
    throw std::invalid_argument("SparseMatrix::from_pattern: row count mismatch");
  }
  SparseMatrix m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.row_ptr_.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  for (int r = 0; r < n_rows; ++r)
  {
    auto &cols = rows[static_cast<std::size_t>(r)];
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    if (!cols.empty() && (cols.front() < 0 || cols.back() >= n_cols))
    {
      throw std::out_of_range("SparseMatrix::from_pattern: column index out of range");
    }
    m.row_ptr_[static_cast<std::size_t>(r) + 1] =
        m.row_ptr_[static_cast<std::size_t>(r)] + static_cast<int>(cols.size());
  }
  m.col_.reserve(static_cast<std::size_t>(m.row_ptr_.back()));
  for (const auto &cols : rows)
  {
    m.col_.insert(m.col_.end(), cols.begin(), cols.end());
  }
  m.val_.assign(m.col_.size(), 0.0);
  return m;
}

SparseMatrix SparseMatrix::from_triplets(int n_rows, int n_cols, std::vector<Triplet> triplets)
{
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n_rows));
  for (const auto &t : triplets)
  {
    if (t.row < 0 || t.row >= n_rows)
    {
      throw std::out_of_range("SparseMatrix::from_triplets: row index out of range");
    }
    rows[static_cast<std::size_t>(t.row)].push_back(t.col);
  }
  SparseMatrix m = from_pattern(n_rows, n_cols, std::move(rows));
  for (const auto &t : triplets)
  {
    m.add(t.row, t.col, t.value);
  }
  return m;
}

SparseMatrix SparseMatrix::identity(int n)
{
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
  {
    rows[static_cast<std::size_t>(i)] = {i};
  }
  SparseMatrix m = from_pattern(n, n, std::move(rows));
  std::fill(m.val_.begin(), m.val_.end(), 1.0);
  return m;
}

std::ptrdiff_t SparseMatrix::find(int r, int c) const
{
  if (r < 0 || r >= n_rows_)
  {
    return -1;
  }
  const auto b = col_.begin() + row_ptr_[static_cast<std::size_t>(r)];
  const auto e = col_.begin() + row_ptr_[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(b, e, c);
  if (it == e || *it != c)
  {
    return -1;
  }
  return it - col_.begin();
}

void SparseMatrix::add(int r, int c, double v)
{
  const auto k = find(r, c);
  if (k < 0)
  {
    throw std::out_of_range("SparseMatrix::add: entry (" + std::to_string(r) + ", " +
                            std::to_string(c) + ") not in pattern");
  }
  val_[static_cast<std::size_t>(k)] += v;
}

void SparseMatrix::set(int r, int c, double v)
{
  const auto k = find(r, c);
  if (k < 0)
  {
    throw std::out_of_range("SparseMatrix::set: entry not in pattern");
  }
  val_[static_cast<std::size_t>(k)] = v;
}

double SparseMatrix::at(int r, int c) const
{
  const auto k = find(r, c);
  return k < 0 ? 0.0 : val_[static_cast<std::size_t>(k)];
}

void SparseMatrix::set_zero() { std::fill(val_.begin(), val_.end(), 0.0); }

void SparseMatrix::make_unit_row(int r, double diag)
{
  for (int k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1];
       ++k)
  {
    val_[static_cast<std::size_t>(k)] = col_[static_cast<std::size_t>(k)] == r ? diag : 0.0;
  }
}

std::span<const int> SparseMatrix::row_cols(int r) const
{
  const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r)]);
  const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r) + 1]);
  return std::span<const int>(col_).subspan(b, e - b);
}

std::span<const double> SparseMatrix::row_values(int r) const
{
  const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r)]);
  const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r) + 1]);
  return std::span<const double>(val_).subspan(b, e - b);
}

std::vector<double> SparseMatrix::diagonal() const
{
  std::vector<double> d(static_cast<std::size_t>(n_rows_), 0.0);
  for (int r = 0; r < n_rows_; ++r)
  {
    d[static_cast<std::size_t>(r)] = at(r, r);
  }
  return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
  if (static_cast<int>(x.size()) != n_cols_ || static_cast<int>(y.size()) != n_rows_)
  {
    throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
  }
  if (parallel::threads() > 1)
  {
    kernels::spmv_omp(*this, x, y);
  }
  else
  {
    kernels::spmv_serial(*this, x, y);
  }
}

SparseMatrix SparseMatrix::block(int begin, int end) const
{
  const int n = end - begin;
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  for (int r = begin; r < end; ++r)
  {
    for (int c : row_cols(r))
    {
      if (c >= begin && c < end)
      {
        rows[static_cast<std::size_t>(r - begin)].push_back(c - begin);
      }
    }
  }
  SparseMatrix b = from_pattern(n, n, std::move(rows));
  for (int r = begin; r < end; ++r)
  {
    const auto cols = row_cols(r);
    const auto vals = row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k)
    {
      if (cols[k] >= begin && cols[k] < end)
      {
        b.add(r - begin, cols[k] - begin, vals[k]);
      }
    }
  }
  return b;
}

namespace kernels
{

void spmv_serial(const SparseMatrix &a, std::span<const double> x, std::span<double> y)
{
  const auto &rp = a.offsets();
  const auto &ci = a.columns();
  const auto &v = a.values();
  for (int r = 0; r < a.rows(); ++r)
  {
    double s = 0.0;
    for (int k = rp[static_cast<std::size_t>(r)]; k < rp[static_cast<std::size_t>(r) + 1]; ++k)
    {
      s += v[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(r)] = s;
  }
}

void spmv_omp(const SparseMatrix &a, std::span<const double> x, std::span<double> y)
{
  const int *rp = a.offsets().data();
  const int *ci = a.columns().data();
  const double *v = a.values().data();
  const double *xp = x.data();
  double *yp = y.data();
  const int n = a.rows();
#pragma omp parallel for schedule(static) num_threads(parallel::threads())
  for (int r = 0; r < n; ++r)
  {
    double s = 0.0;
    for (int k = rp[r]; k < rp[r + 1]; ++k)
    {
      s += v[k] * xp[ci[k]];
    }
    yp[r] = s;
  }
}

}  // namespace kernels

double dot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    s += a[i] * b[i];
  }
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const
{
  std::copy(r.begin(), r.end(), z.begin());
}

Ilu0::Ilu0(const SparseMatrix &a) : lu_(a)
{
  const int n = a.rows();
  if (a.cols() != n)
  {
    throw std::invalid_argument("Ilu0: matrix must be square");
  }
  diag_.assign(static_cast<std::size_t>(n), -1);
  for (int r = 0; r < n; ++r)
  {
    diag_[static_cast<std::size_t>(r)] = static_cast<int>(lu_.find(r, r));
    if (diag_[static_cast<std::size_t>(r)] < 0)
    {
      throw std::runtime_error("Ilu0: missing diagonal entry in row " + std::to_string(r));
    }
  }
  const auto &rp = lu_.offsets();
  const auto &ci = lu_.columns();
  auto &v = lu_.values();
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i)
  {
    const int b = rp[static_cast<std::size_t>(i)], e = rp[static_cast<std::size_t>(i) + 1];
    for (int k = b; k < e; ++k)
    {
      pos[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])] = k;
    }
    for (int k = b; k < e && ci[static_cast<std::size_t>(k)] < i; ++k)
    {
      const int col = ci[static_cast<std::size_t>(k)];
      const double pivot = v[static_cast<std::size_t>(diag_[static_cast<std::size_t>(col)])];
      if (pivot == 0.0)
      {
        throw std::runtime_error("Ilu0: zero pivot in row " + std::to_string(col) +
                                 " (singular diagonal block)");
      }
      const double l = v[static_cast<std::size_t>(k)] / pivot;
      v[static_cast<std::size_t>(k)] = l;
      for (int kk = diag_[static_cast<std::size_t>(col)] + 1; kk < rp[static_cast<std::size_t>(col) + 1];
           ++kk)
      {
        const int p = pos[static_cast<std::size_t>(ci[static_cast<std::size_t>(kk)])];
        if (p >= 0)
        {
          v[static_cast<std::size_t>(p)] -= l * v[static_cast<std::size_t>(kk)];
        }
      }
    }
    for (int k = b; k < e; ++k)
    {
      pos[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])] = -1;
    }
    if (v[static_cast<std::size_t>(diag_[static_cast<std::size_t>(i)])] == 0.0)
    {
      throw std::runtime_error("Ilu0: zero pivot in row " + std::to_string(i) +
                               " (singular diagonal block)");
    }
  }
}

void Ilu0::apply(std::span<const double> r, std::span<double> z) const
{
  const int n = lu_.rows();
  const auto &rp = lu_.offsets();
  const auto &ci = lu_.columns();
  const auto &v = lu_.values();
  for (int i = 0; i < n; ++i)
  {
    double s = r[static_cast<std::size_t>(i)];
    for (int k = rp[static_cast<std::size_t>(i)]; k < diag_[static_cast<std::size_t>(i)]; ++k)
    {
      s -= v[static_cast<std::size_t>(k)] * z[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])];
    }
    z[static_cast<std::size_t>(i)] = s;
  }
  for (int i = n - 1; i >= 0; --i)
  {
    double s = z[static_cast<std::size_t>(i)];
    for (int k = diag_[static_cast<std::size_t>(i)] + 1; k < rp[static_cast<std::size_t>(i) + 1]; ++k)
    {
      s -= v[static_cast<std::size_t>(k)] * z[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])];
    }
    z[static_cast<std::size_t>(i)] = s / v[static_cast<std::size_t>(diag_[static_cast<std::size_t>(i)])];
  }
}

BlockDiagonalPreconditioner::BlockDiagonalPreconditioner(const SparseMatrix &a,
                                                         const BlockPartition &partition)
  : partition_(partition)
{
  const auto &p = partition;
  if (p.cg.begin != 0 || p.cg.end != p.constant.begin || p.constant.end != a.rows() ||
      p.cg.size() < 0 || p.constant.size() < 0)
  {
    throw std::invalid_argument("BlockDiagonalPreconditioner: partition does not tile the system");
  }
  if (p.cg.size() > 0)
  {
    cg_ = std::make_unique<Ilu0>(a.block(p.cg.begin, p.cg.end));
  }
  if (p.constant.size() > 0)
  {
    constant_ = std::make_unique<Ilu0>(a.block(p.constant.begin, p.constant.end));
  }
}

void BlockDiagonalPreconditioner::apply(std::span<const double> r, std::span<double> z) const
{
  const auto n_cg = static_cast<std::size_t>(partition_.cg.size());
  const auto n_c = static_cast<std::size_t>(partition_.constant.size());
  if (cg_)
  {
    cg_->apply(r.subspan(0, n_cg), z.subspan(0, n_cg));
  }
  if (constant_)
  {
    constant_->apply(r.subspan(n_cg, n_c), z.subspan(n_cg, n_c));
  }
}

GmresResult gmres(const SparseMatrix &a, std::span<const double> b, std::span<double> x,
                  const GmresOptions &options, const Preconditioner *precond)
{
  const auto n = static_cast<std::size_t>(a.rows());
  if (a.rows() != a.cols() || b.size() != n || x.size() != n)
  {
    throw std::invalid_argument("gmres: dimension mismatch");
  }
  IdentityPreconditioner identity;
  const Preconditioner &M = precond ? *precond : identity;

  GmresResult result;
  const double bnorm = norm2(b);
  if (bnorm == 0.0)
  {
    std::fill(x.begin(), x.end(), 0.0);
    result.converged = true;
    return result;
  }

  const int m = std::max(1, options.restart);
  std::vector<double> r(n), w(n);
  auto residual = [&]
  {
    a.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i)
    {
      r[i] = b[i] - r[i];
    }
    return norm2(r);
  };

  double anorm = 0.0;
  if (options.backward_error)
  {
    for (int i = 0; i < a.rows(); ++i)
    {
      double row = 0.0;
      for (double v : a.row_values(i))
      {
        row += std::abs(v);
      }
      anorm = std::max(anorm, row);
    }
  }
  // Absolute residual norm that counts as converged for the current iterate.
  auto target = [&] { return options.tol * (bnorm + anorm * norm2(x)); };

  double beta = residual();
  result.residual = beta / bnorm;
  if (beta <= target())
  {
    result.converged = true;
    return result;
  }

  std::vector<std::vector<double>> V(static_cast<std::size_t>(m) + 1, std::vector<double>(n));
  std::vector<std::vector<double>> Z(static_cast<std::size_t>(m), std::vector<double>(n));
  std::vector<std::vector<double>> H(static_cast<std::size_t>(m) + 1,
                                     std::vector<double>(static_cast<std::size_t>(m), 0.0));
  std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m)),
      g(static_cast<std::size_t>(m) + 1);

  while (result.iterations < options.max_iter)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      V[0][i] = r[i] / beta;
    }
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    const double goal = target();
    int k = 0;
    bool lucky = false;
    for (int j = 0; j < m && result.iterations < options.max_iter; ++j)
    {
      const auto ju = static_cast<std::size_t>(j);
      M.apply(V[ju], Z[ju]);
      a.multiply(Z[ju], w);
      const double wnorm0 = norm2(w);
      for (std::size_t i = 0; i <= ju; ++i)
      {
        H[i][ju] = dot(w, V[i]);
        for (std::size_t t = 0; t < n; ++t)
        {
          w[t] -= H[i][ju] * V[i][t];
        }
      }
      const double hnext = norm2(w);
      H[ju + 1][ju] = hnext;
      for (std::size_t i = 0; i < ju; ++i)
      {
        const double t = cs[i] * H[i][ju] + sn[i] * H[i + 1][ju];
        H[i + 1][ju] = -sn[i] * H[i][ju] + cs[i] * H[i + 1][ju];
        H[i][ju] = t;
      }
      const double d = std::hypot(H[ju][ju], H[ju + 1][ju]);
      cs[ju] = d == 0.0 ? 1.0 : H[ju][ju] / d;
      sn[ju] = d == 0.0 ? 0.0 : H[ju + 1][ju] / d;
      H[ju][ju] = d;
      H[ju + 1][ju] = 0.0;
      g[ju + 1] = -sn[ju] * g[ju];
      g[ju] = cs[ju] * g[ju];

      ++result.iterations;
      k = j + 1;
      const double est = std::abs(g[ju + 1]) / bnorm;
      result.history.push_back(est);
      if (hnext <= 1e-14 * std::max(wnorm0, 1e-300))
      {
        lucky = true;
        break;
      }
      for (std::size_t t = 0; t < n; ++t)
      {
        V[ju + 1][t] = w[t] / hnext;
      }
      if (std::abs(g[ju + 1]) <= goal)
      {
        break;
      }
    }

    // Back substitution on the k x k triangle and update x += Z y.
    std::vector<double> y(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i)
    {
      const auto iu = static_cast<std::size_t>(i);
      double s = g[iu];
      for (int t = i + 1; t < k; ++t)
      {
        s -= H[iu][static_cast<std::size_t>(t)] * y[static_cast<std::size_t>(t)];
      }
      if (H[iu][iu] == 0.0)
      {
        result.breakdown = true;
        y[iu] = 0.0;
      }
      else
      {
        y[iu] = s / H[iu][iu];
      }
    }
    for (int i = 0; i < k; ++i)
    {
      for (std::size_t t = 0; t < n; ++t)
      {
        x[t] += y[static_cast<std::size_t>(i)] * Z[static_cast<std::size_t>(i)][t];
      }
    }
    beta = residual();
    result.residual = beta / bnorm;
    if (beta <= target())
    {
      result.converged = true;
      return result;
    }
    if (lucky || result.breakdown)
    {
      result.breakdown = true;
      return result;
    }
  }
  return result;
}

}  // namespace egmd
