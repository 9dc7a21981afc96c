#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "esfem/mesh.hpp"

namespace esfem {

class LinearAlgebraError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSR adjacency over vertices: row i holds i and its mesh neighbours, sorted.
class SparsityPattern {
public:
    SparsityPattern() = default;
    SparsityPattern(int rows, std::vector<int> row_ptr, std::vector<int> cols);

    static std::shared_ptr<const SparsityPattern> from_mesh(const SurfaceMesh& mesh);
    /// Row i contains i plus the listed neighbours.
    static std::shared_ptr<const SparsityPattern> from_adjacency(const std::vector<std::vector<int>>& adjacency);

    int rows() const noexcept { return rows_; }
    int nonzeros() const noexcept { return static_cast<int>(cols_.size()); }
    std::span<const int> row_ptr() const noexcept { return row_ptr_; }
    std::span<const int> cols() const noexcept { return cols_; }
    /// Position of (i, j) in the value arrays, or -1.
    int find(int i, int j) const;

private:
    int rows_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> cols_;
};

/// Scalar CSR matrix over a shared pattern.
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(std::shared_ptr<const SparsityPattern> pattern);

    int rows() const noexcept { return pattern_ ? pattern_->rows() : 0; }
    int dim() const noexcept { return rows(); }
    const SparsityPattern& pattern() const { return *pattern_; }

    void set_zero();
    void add(int i, int j, double value);
    double coeff(int i, int j) const;
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
    Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
    Eigen::VectorXd diagonal() const;

private:
    std::shared_ptr<const SparsityPattern> pattern_;
    std::vector<double> values_;
};

struct BlockTriplet {
    int row;
    int col;
    Mat3 block;
};

///
/// Vertex-pair indexed 3x3 blocks.  Dimension is 3 x (block rows); vectors use
/// the vertex-major layout x[3 i + c].
///
class BlockSparseMatrix {
public:
    BlockSparseMatrix() = default;
    explicit BlockSparseMatrix(std::shared_ptr<const SparsityPattern> pattern);

    /// Sums duplicate entries in input order and drops blocks that are exactly
    /// zero (keeping the pattern structurally symmetric).
    static BlockSparseMatrix from_triplets(int block_rows, std::span<const BlockTriplet> triplets);

    int block_rows() const noexcept { return pattern_ ? pattern_->rows() : 0; }
    int dim() const noexcept { return 3 * block_rows(); }
    const SparsityPattern& pattern() const { return *pattern_; }

    void set_zero();
    void add_block(int i, int j, const Mat3& block);
    /// Adds value * I_3 to block (i, j).
    void add_scalar(int i, int j, double value);
    Mat3 block(int i, int j) const;
    std::span<Mat3> blocks() noexcept { return blocks_; }
    std::span<const Mat3> blocks() const noexcept { return blocks_; }

    /// Removes blocks that are exactly zero where the transposed block is zero too.
    void finalize();

    void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
    Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
    Eigen::VectorXd diagonal() const;
    bool is_diagonal() const;

private:
    std::shared_ptr<const SparsityPattern> pattern_;
    std::vector<Mat3> blocks_;
};

/// Replaces the constrained rows and columns by the identity and moves the
/// known values to the right-hand side.  mask and values are per unknown.
void apply_dirichlet(BlockSparseMatrix& A, Eigen::VectorXd& rhs, const std::vector<char>& mask, const Eigen::VectorXd& values);
void apply_dirichlet(SparseMatrix& A, Eigen::VectorXd& rhs, const std::vector<char>& mask, const Eigen::VectorXd& values);

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;  // final ||Ax - b|| / ||b||
    bool converged = false;
};

struct SolverOptions {
    double rel_tol = 1e-10;
    int max_iterations = 0;  // 0: 20 x dimension
    bool jacobi = false;
    int restart = 50;        // GMRES only
};

Eigen::VectorXd matvec(const BlockSparseMatrix& A, const Eigen::VectorXd& x);
Eigen::VectorXd matvec(const SparseMatrix& A, const Eigen::VectorXd& x);

/// Conjugate gradients for symmetric positive (semi-)definite systems; x holds
/// the initial guess on entry.
SolveReport cg_solve(const BlockSparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolverOptions& opts = {});
SolveReport cg_solve(const SparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolverOptions& opts = {});

/// Restarted GMRES for general square systems.
SolveReport gmres_solve(const SparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolverOptions& opts = {});

/// Componentwise division by a positive diagonal.
Eigen::VectorXd diag_solve(const BlockSparseMatrix& D, const Eigen::VectorXd& b);
Eigen::VectorXd diag_solve(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& b);

/// Throws LinearAlgebraError when a solve did not converge.
void require_converged(const SolveReport& report, const char* what);

}  // namespace esfem
