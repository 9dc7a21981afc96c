#include <doctest.h>

#include <cstring>
#include <random>

#include "esfem/linalg.hpp"
#include "esfem/reference.hpp"

using namespace esfem;

namespace {

BlockSparseMatrix random_spd(const SurfaceMesh& mesh, std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(-1, 1);
    BlockSparseMatrix A(SparsityPattern::from_mesh(mesh));
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        for (int j : mesh.vertex_neighbors(i)) {
            if (j < i) continue;
            Mat3 B;
            for (int k = 0; k < 9; ++k) B.data()[k] = 0.1 * u(rng);
            A.add_block(i, j, B);
            A.add_block(j, i, B.transpose());
            A.add_scalar(i, i, 1.0);
            A.add_scalar(j, j, 1.0);
        }
    }
    return A;
}

}  // namespace

TEST_CASE("matvec")
{
    const std::vector<BlockTriplet> id{{0, 0, Mat3::Identity()}, {1, 1, Mat3::Identity()}};
    const auto I = BlockSparseMatrix::from_triplets(2, id);
    Eigen::VectorXd x(6);
    x << 1, 2, 3, 4, 5, 6;
    CHECK(matvec(I, x) == x);

    Mat3 B;
    B << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const std::vector<BlockTriplet> one{{0, 1, B}};
    const auto A = BlockSparseMatrix::from_triplets(2, one);
    const Eigen::VectorXd y = matvec(A, x);
    CHECK((y.head<3>() - B * x.tail<3>()).norm() == 0.0);
    CHECK(y.tail<3>().norm() == 0.0);
    // the zero transposed block is kept for structural symmetry
    CHECK(A.pattern().find(1, 0) >= 0);
    CHECK(A.pattern().find(1, 1) >= 0);
    CHECK_THROWS_AS(matvec(A, Eigen::VectorXd::Zero(5)), LinearAlgebraError);
}

TEST_CASE("finalize drops zero blocks")
{
    const auto mesh = build_half_sphere(1);
    BlockSparseMatrix A(SparsityPattern::from_mesh(mesh));
    for (int i = 0; i < mesh.num_vertices(); ++i) A.add_scalar(i, i, 2.0);
    const int before = A.pattern().nonzeros();
    A.finalize();
    CHECK(A.pattern().nonzeros() == mesh.num_vertices());
    CHECK(before > A.pattern().nonzeros());
    CHECK(A.is_diagonal());
}

TEST_CASE("matvec symmetry and determinism")
{
    std::mt19937 rng(5);
    const auto mesh = build_half_sphere(2);
    const auto A = random_spd(mesh, rng);
    std::normal_distribution<double> g;
    Eigen::VectorXd x(A.dim()), y(A.dim());
    for (int i = 0; i < A.dim(); ++i) {
        x[i] = g(rng);
        y[i] = g(rng);
    }
    const double lhs = x.dot(A * y);
    const double rhs = y.dot(A * x);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + 1));
    const Eigen::VectorXd a = A * x;
    const Eigen::VectorXd b = A * x;
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("cg oracles")
{
    const std::vector<BlockTriplet> id{{0, 0, Mat3::Identity()}, {1, 1, Mat3::Identity()}};
    const auto I = BlockSparseMatrix::from_triplets(2, id);
    Eigen::VectorXd b(6);
    b << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd x;
    auto rep = cg_solve(I, b, x);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    CHECK((x - b).norm() == 0.0);

    const std::vector<BlockTriplet> two{{0, 0, 2 * Mat3::Identity()}, {1, 1, 2 * Mat3::Identity()}};
    x.resize(0);
    rep = cg_solve(BlockSparseMatrix::from_triplets(2, two), b, x);
    CHECK((x - b / 2).norm() < 1e-15);

    // [[4,1],[1,3]] x = (1,2)  ->  (1/11, 7/11)
    auto pattern = SparsityPattern::from_adjacency({{1}, {0}});
    SparseMatrix S(pattern);
    S.add(0, 0, 4);
    S.add(0, 1, 1);
    S.add(1, 0, 1);
    S.add(1, 1, 3);
    Eigen::VectorXd rhs(2), sol;
    rhs << 1, 2;
    rep = cg_solve(S, rhs, sol);
    CHECK(rep.converged);
    CHECK(std::abs(sol[0] - 1.0 / 11) < 1e-14);
    CHECK(std::abs(sol[1] - 7.0 / 11) < 1e-14);

    Eigen::VectorXd zero_rhs = Eigen::VectorXd::Zero(2), z;
    rep = cg_solve(S, zero_rhs, z);
    CHECK(rep.converged);
    CHECK(z.norm() == 0.0);
}

TEST_CASE("cg on random SPD block systems")
{
    std::mt19937 rng(9);
    const auto mesh = build_half_sphere(3);
    const auto A = random_spd(mesh, rng);
    std::normal_distribution<double> g;
    Eigen::VectorXd b(A.dim());
    for (int i = 0; i < A.dim(); ++i) b[i] = g(rng);
    for (bool jacobi : {false, true}) {
        Eigen::VectorXd x;
        SolverOptions opts;
        opts.jacobi = jacobi;
        const auto rep = cg_solve(A, b, x, opts);
        CHECK(rep.converged);
        CHECK(rep.residual <= 1e-10);
        CHECK((A * x - b).norm() <= 1e-10 * b.norm());
    }
    Eigen::VectorXd x;
    SolverOptions tight;
    tight.max_iterations = 2;
    const auto rep = cg_solve(A, b, x, tight);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 2);
    CHECK_THROWS_AS(require_converged(rep, "test"), LinearAlgebraError);
}

TEST_CASE("gmres on a nonsymmetric system")
{
    const auto mesh = build_half_sphere(3);
    auto pattern = SparsityPattern::from_mesh(mesh);
    SparseMatrix A(pattern);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        A.add(i, i, 4.0);
        for (int j : mesh.vertex_neighbors(i)) A.add(i, j, -0.5 * u(rng));
    }
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(A.dim(), -1, 1), x;
    SolverOptions opts;
    opts.restart = 10;
    const auto rep = gmres_solve(A, b, x, opts);
    CHECK(rep.converged);
    CHECK((A * x - b).norm() <= 1e-10 * b.norm());
    opts.jacobi = true;
    Eigen::VectorXd x2;
    CHECK(gmres_solve(A, b, x2, opts).converged);
    CHECK((x2 - x).norm() < 1e-8);
}

TEST_CASE("dirichlet replacement keeps symmetry")
{
    auto pattern = SparsityPattern::from_adjacency({{1}, {0, 2}, {1}});
    SparseMatrix A(pattern);
    A.add(0, 0, 2);
    A.add(1, 1, 2);
    A.add(2, 2, 2);
    A.add(0, 1, -1);
    A.add(1, 0, -1);
    A.add(1, 2, -1);
    A.add(2, 1, -1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3), vals(3), x;
    vals << 1, 0, 3;
    apply_dirichlet(A, rhs, {1, 0, 1}, vals);
    CHECK(A.coeff(0, 1) == 0.0);
    CHECK(A.coeff(1, 0) == 0.0);
    CHECK(A.coeff(0, 0) == 1.0);
    CHECK(cg_solve(A, rhs, x).converged);
    CHECK(std::abs(x[1] - 2.0) < 1e-14);
    CHECK(x[0] == 1.0);
    CHECK(x[2] == 3.0);
}

TEST_CASE("diag_solve")
{
    std::vector<BlockTriplet> d;
    for (int i = 0; i < 3; ++i) d.push_back({i, i, 2 * Mat3::Identity()});
    const auto D = BlockSparseMatrix::from_triplets(3, d);
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(9, 2, 18);
    CHECK((diag_solve(D, b) - Eigen::VectorXd::LinSpaced(9, 1, 9)).norm() == 0.0);

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0.1, 10);
    Eigen::VectorXd diag(30), x(30);
    for (int i = 0; i < 30; ++i) {
        diag[i] = u(rng);
        x[i] = u(rng) - 5;
    }
    CHECK((diag_solve(diag, diag.cwiseProduct(x)) - x).norm() <= 1e-14 * x.norm());

    diag[4] = 0.0;
    CHECK_THROWS_AS(diag_solve(diag, x), LinearAlgebraError);
    const std::vector<BlockTriplet> off{{0, 1, Mat3::Identity()}};
    CHECK_THROWS_AS(diag_solve(BlockSparseMatrix::from_triplets(2, off), Eigen::VectorXd::Ones(6)), LinearAlgebraError);
}
