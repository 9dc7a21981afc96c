#include "esfem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esfem {

SparsityPattern::SparsityPattern(int rows, std::vector<int> row_ptr, std::vector<int> cols)
    : rows_(rows), row_ptr_(std::move(row_ptr)), cols_(std::move(cols))
{
    if (static_cast<int>(row_ptr_.size()) != rows_ + 1 || row_ptr_.back() != static_cast<int>(cols_.size()))
        throw LinearAlgebraError("malformed sparsity pattern");
}

std::shared_ptr<const SparsityPattern> SparsityPattern::from_mesh(const SurfaceMesh& mesh)
{
    const int n = mesh.num_vertices();
    std::vector<int> row_ptr(n + 1, 0);
    std::vector<int> cols;
    for (int v = 0; v < n; ++v) {
        const auto nb = mesh.vertex_neighbors(v);
        bool placed = false;
        for (int w : nb) {
            if (!placed && w > v) {
                cols.push_back(v);
                placed = true;
            }
            cols.push_back(w);
        }
        if (!placed) cols.push_back(v);
        row_ptr[v + 1] = static_cast<int>(cols.size());
    }
    return std::make_shared<const SparsityPattern>(n, std::move(row_ptr), std::move(cols));
}

std::shared_ptr<const SparsityPattern> SparsityPattern::from_adjacency(const std::vector<std::vector<int>>& adjacency)
{
    const int n = static_cast<int>(adjacency.size());
    std::vector<int> row_ptr(n + 1, 0);
    std::vector<int> cols;
    for (int i = 0; i < n; ++i) {
        std::vector<int> row = adjacency[i];
        row.push_back(i);
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        for (int j : row) {
            if (j < 0 || j >= n) throw LinearAlgebraError("adjacency index out of range");
        }
        cols.insert(cols.end(), row.begin(), row.end());
        row_ptr[i + 1] = static_cast<int>(cols.size());
    }
    return std::make_shared<const SparsityPattern>(n, std::move(row_ptr), std::move(cols));
}

int SparsityPattern::find(int i, int j) const
{
    const auto first = cols_.begin() + row_ptr_[i];
    const auto last = cols_.begin() + row_ptr_[i + 1];
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return -1;
    return static_cast<int>(it - cols_.begin());
}

// ---------------------------------------------------------------------------

SparseMatrix::SparseMatrix(std::shared_ptr<const SparsityPattern> pattern)
    : pattern_(std::move(pattern)), values_(pattern_->nonzeros(), 0.0)
{
}

void SparseMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

void SparseMatrix::add(int i, int j, double value)
{
    const int k = pattern_->find(i, j);
    if (k < 0) throw LinearAlgebraError("entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside the pattern");
    values_[k] += value;
}

double SparseMatrix::coeff(int i, int j) const
{
    const int k = pattern_->find(i, j);
    return k < 0 ? 0.0 : values_[k];
}

void SparseMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const
{
    if (x.size() != rows()) throw LinearAlgebraError("matvec dimension mismatch");
    y.resize(rows());
    const auto rp = pattern_->row_ptr();
    const auto cols = pattern_->cols();
    for (int i = 0; i < rows(); ++i) {
        double s = 0.0;
        for (int k = rp[i]; k < rp[i + 1]; ++k) s += values_[k] * x[cols[k]];
        y[i] = s;
    }
}

Eigen::VectorXd SparseMatrix::operator*(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd y;
    multiply(x, y);
    return y;
}

Eigen::VectorXd SparseMatrix::diagonal() const
{
    Eigen::VectorXd d(rows());
    for (int i = 0; i < rows(); ++i) d[i] = coeff(i, i);
    return d;
}

// ---------------------------------------------------------------------------

BlockSparseMatrix::BlockSparseMatrix(std::shared_ptr<const SparsityPattern> pattern)
    : pattern_(std::move(pattern)), blocks_(pattern_->nonzeros(), Mat3::Zero())
{
}

BlockSparseMatrix BlockSparseMatrix::from_triplets(int block_rows, std::span<const BlockTriplet> triplets)
{
    std::vector<std::vector<int>> adjacency(block_rows);
    for (const BlockTriplet& t : triplets) {
        if (t.row < 0 || t.row >= block_rows || t.col < 0 || t.col >= block_rows)
            throw LinearAlgebraError("block triplet index out of range");
        adjacency[t.row].push_back(t.col);
        adjacency[t.col].push_back(t.row);
    }
    BlockSparseMatrix A(SparsityPattern::from_adjacency(adjacency));
    for (const BlockTriplet& t : triplets) A.add_block(t.row, t.col, t.block);
    A.finalize();
    return A;
}

void BlockSparseMatrix::set_zero()
{
    for (Mat3& b : blocks_) b.setZero();
}

void BlockSparseMatrix::add_block(int i, int j, const Mat3& block)
{
    const int k = pattern_->find(i, j);
    if (k < 0) throw LinearAlgebraError("block (" + std::to_string(i) + "," + std::to_string(j) + ") outside the pattern");
    blocks_[k] += block;
}

void BlockSparseMatrix::add_scalar(int i, int j, double value)
{
    const int k = pattern_->find(i, j);
    if (k < 0) throw LinearAlgebraError("block (" + std::to_string(i) + "," + std::to_string(j) + ") outside the pattern");
    blocks_[k].diagonal().array() += value;
}

Mat3 BlockSparseMatrix::block(int i, int j) const
{
    const int k = pattern_->find(i, j);
    return k < 0 ? Mat3::Zero() : blocks_[k];
}

void BlockSparseMatrix::finalize()
{
    const int n = block_rows();
    const auto rp = pattern_->row_ptr();
    const auto cols = pattern_->cols();
    std::vector<int> row_ptr(n + 1, 0);
    std::vector<int> new_cols;
    std::vector<Mat3> new_blocks;
    for (int i = 0; i < n; ++i) {
        for (int k = rp[i]; k < rp[i + 1]; ++k) {
            const int j = cols[k];
            bool keep = !blocks_[k].isZero(0.0) || i == j;
            if (!keep) {
                const int kt = pattern_->find(j, i);
                keep = kt >= 0 && !blocks_[kt].isZero(0.0);
            }
            if (keep) {
                new_cols.push_back(j);
                new_blocks.push_back(blocks_[k]);
            }
        }
        row_ptr[i + 1] = static_cast<int>(new_cols.size());
    }
    pattern_ = std::make_shared<const SparsityPattern>(n, std::move(row_ptr), std::move(new_cols));
    blocks_ = std::move(new_blocks);
}

void BlockSparseMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const
{
    if (x.size() != dim()) throw LinearAlgebraError("matvec dimension mismatch");
    y.resize(dim());
    const auto rp = pattern_->row_ptr();
    const auto cols = pattern_->cols();
    for (int i = 0; i < block_rows(); ++i) {
        Vec3 s = Vec3::Zero();
        for (int k = rp[i]; k < rp[i + 1]; ++k) s.noalias() += blocks_[k] * x.segment<3>(3 * cols[k]);
        y.segment<3>(3 * i) = s;
    }
}

Eigen::VectorXd BlockSparseMatrix::operator*(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd y;
    multiply(x, y);
    return y;
}

Eigen::VectorXd BlockSparseMatrix::diagonal() const
{
    Eigen::VectorXd d(dim());
    for (int i = 0; i < block_rows(); ++i) d.segment<3>(3 * i) = block(i, i).diagonal();
    return d;
}

bool BlockSparseMatrix::is_diagonal() const
{
    const auto rp = pattern_->row_ptr();
    const auto cols = pattern_->cols();
    for (int i = 0; i < block_rows(); ++i) {
        for (int k = rp[i]; k < rp[i + 1]; ++k) {
            Mat3 b = blocks_[k];
            if (cols[k] == i) b.diagonal().setZero();
            if (!b.isZero(0.0)) return false;
        }
    }
    return true;
}

Eigen::VectorXd matvec(const BlockSparseMatrix& A, const Eigen::VectorXd& x) { return A * x; }
Eigen::VectorXd matvec(const SparseMatrix& A, const Eigen::VectorXd& x) { return A * x; }

// ---------------------------------------------------------------------------

void apply_dirichlet(BlockSparseMatrix& A, Eigen::VectorXd& rhs, const std::vector<char>& mask, const Eigen::VectorXd& values)
{
    const int n = A.block_rows();
    if (static_cast<int>(mask.size()) != 3 * n || rhs.size() != 3 * n || values.size() != 3 * n)
        throw LinearAlgebraError("dirichlet data dimension mismatch");
    const auto rp = A.pattern().row_ptr();
    const auto cols = A.pattern().cols();
    auto blocks = A.blocks();
    for (int i = 0; i < n; ++i) {
        for (int k = rp[i]; k < rp[i + 1]; ++k) {
            const int j = cols[k];
            Mat3& b = blocks[k];
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    const bool row_fixed = mask[3 * i + r];
                    const bool col_fixed = mask[3 * j + c];
                    if (col_fixed && !row_fixed) rhs[3 * i + r] -= b(r, c) * values[3 * j + c];
                    if (row_fixed || col_fixed) b(r, c) = (3 * i + r == 3 * j + c) ? 1.0 : 0.0;
                }
            }
        }
    }
    for (int d = 0; d < 3 * n; ++d) {
        if (mask[d]) rhs[d] = values[d];
    }
}

void apply_dirichlet(SparseMatrix& A, Eigen::VectorXd& rhs, const std::vector<char>& mask, const Eigen::VectorXd& values)
{
    const int n = A.rows();
    if (static_cast<int>(mask.size()) != n || rhs.size() != n || values.size() != n)
        throw LinearAlgebraError("dirichlet data dimension mismatch");
    const auto rp = A.pattern().row_ptr();
    const auto cols = A.pattern().cols();
    auto vals = A.values();
    for (int i = 0; i < n; ++i) {
        for (int k = rp[i]; k < rp[i + 1]; ++k) {
            const int j = cols[k];
            if (mask[j] && !mask[i]) rhs[i] -= vals[k] * values[j];
            if (mask[i] || mask[j]) vals[k] = (i == j) ? 1.0 : 0.0;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (mask[i]) rhs[i] = values[i];
    }
}

// ---------------------------------------------------------------------------

namespace {

template <class Matrix>
SolveReport cg_impl(const Matrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolverOptions& opts)
{
    const int n = A.dim();
    if (b.size() != n) throw LinearAlgebraError("cg right-hand side dimension mismatch");
    if (x.size() != n) x = Eigen::VectorXd::Zero(n);
    SolveReport rep;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        rep.converged = true;
        return rep;
    }
    const int max_it = opts.max_iterations > 0 ? opts.max_iterations : 20 * std::max(n, 1);
    const double target = opts.rel_tol * bnorm;

    Eigen::VectorXd inv_diag;
    if (opts.jacobi) {
        inv_diag = A.diagonal();
        for (int i = 0; i < n; ++i) inv_diag[i] = inv_diag[i] > 0.0 ? 1.0 / inv_diag[i] : 1.0;
    }
    auto precondition = [&](const Eigen::VectorXd& r, Eigen::VectorXd& z) {
        if (opts.jacobi) z = inv_diag.cwiseProduct(r);
        else z = r;
    };

    Eigen::VectorXd r(n), z(n), p(n), q(n);
    A.multiply(x, q);
    r = b - q;
    double rnorm = r.norm();
    while (true) {
        if (rnorm <= target) break;
        precondition(r, z);
        p = z;
        double rz = r.dot(z);
        bool restart = false;
        bool breakdown = false;
        while (rep.iterations < max_it) {
            A.multiply(p, q);
            const double pq = p.dot(q);
            if (!(pq > 0.0)) {
                breakdown = true;
                break;
            }
            const double step = rz / pq;
            x.noalias() += step * p;
            r.noalias() -= step * q;
            ++rep.iterations;
            rnorm = r.norm();
            if (rnorm <= target) {
                // Guard against drift of the recursive residual.
                A.multiply(x, q);
                r = b - q;
                rnorm = r.norm();
                restart = rnorm > target;
                break;
            }
            precondition(r, z);
            const double rz_new = r.dot(z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        if (breakdown || !restart || rep.iterations >= max_it) break;
    }
    A.multiply(x, q);
    rep.residual = (b - q).norm() / bnorm;
    rep.converged = rep.residual <= opts.rel_tol;
    return rep;
}

}  // namespace

SolveReport cg_solve(const BlockSparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolverOptions& opts)
{
    return cg_impl(A, b, x, opts);
}

SolveReport cg_solve(const SparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolverOptions& opts)
{
    return cg_impl(A, b, x, opts);
}

SolveReport gmres_solve(const SparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolverOptions& opts)
{
    const int n = A.dim();
    if (b.size() != n) throw LinearAlgebraError("gmres right-hand side dimension mismatch");
    if (x.size() != n) x = Eigen::VectorXd::Zero(n);
    SolveReport rep;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        rep.converged = true;
        return rep;
    }
    const int max_it = opts.max_iterations > 0 ? opts.max_iterations : 20 * std::max(n, 1);
    const int m = std::max(1, std::min(opts.restart, n));
    const double target = opts.rel_tol * bnorm;

    // Right preconditioning keeps the monitored residual the true one.
    Eigen::VectorXd inv_diag = Eigen::VectorXd::Ones(n);
    if (opts.jacobi) {
        const Eigen::VectorXd d = A.diagonal();
        for (int i = 0; i < n; ++i) inv_diag[i] = d[i] != 0.0 ? 1.0 / d[i] : 1.0;
    }

    Eigen::MatrixXd V(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g(m + 1), w(n), r(n);

    while (rep.iterations < max_it) {
        A.multiply(x, w);
        r = b - w;
        double beta = r.norm();
        if (beta <= target) break;
        V.col(0) = r / beta;
        g.setZero();
        g[0] = beta;
        H.setZero();
        int k = 0;
        for (; k < m && rep.iterations < max_it; ++k) {
            A.multiply(inv_diag.cwiseProduct(V.col(k)), w);
            for (int i = 0; i <= k; ++i) {
                H(i, k) = w.dot(V.col(i));
                w.noalias() -= H(i, k) * V.col(i);
            }
            H(k + 1, k) = w.norm();
            if (H(k + 1, k) > 0.0) V.col(k + 1) = w / H(k + 1, k);
            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t;
            }
            const double denom = std::hypot(H(k, k), H(k + 1, k));
            cs[k] = denom == 0.0 ? 1.0 : H(k, k) / denom;
            sn[k] = denom == 0.0 ? 0.0 : H(k + 1, k) / denom;
            H(k, k) = denom;
            H(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            ++rep.iterations;
            if (std::abs(g[k + 1]) <= target) {
                ++k;
                break;
            }
        }
        const Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        x.noalias() += inv_diag.cwiseProduct(V.leftCols(k) * y);
        if (std::abs(g[k]) <= target) {
            A.multiply(x, w);
            if ((b - w).norm() <= target) break;
        }
    }
    A.multiply(x, w);
    rep.residual = (b - w).norm() / bnorm;
    rep.converged = rep.residual <= opts.rel_tol;
    return rep;
}

Eigen::VectorXd diag_solve(const BlockSparseMatrix& D, const Eigen::VectorXd& b)
{
    if (!D.is_diagonal()) throw LinearAlgebraError("diag_solve needs a diagonal matrix");
    return diag_solve(D.diagonal(), b);
}

Eigen::VectorXd diag_solve(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& b)
{
    if (diagonal.size() != b.size()) throw LinearAlgebraError("diag_solve dimension mismatch");
    Eigen::VectorXd x(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        if (!(diagonal[i] > 0.0)) throw LinearAlgebraError("non-positive diagonal entry at " + std::to_string(i));
        x[i] = b[i] / diagonal[i];
    }
    return x;
}

void require_converged(const SolveReport& report, const char* what)
{
    if (!report.converged) {
        throw LinearAlgebraError(std::string(what) + ": solver did not converge (residual " + std::to_string(report.residual) +
                                 " after " + std::to_string(report.iterations) + " iterations)");
    }
}

}  // namespace esfem
