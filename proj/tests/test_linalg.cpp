#include <catch2/catch_amalgamated.hpp>

#include "irsdiag/linalg.hpp"
#include "irsdiag/rng.hpp"
#include "oracles.hpp"

using namespace irsdiag;

TEST_CASE("halfspace_indices matches the printed layout") {
  using P = std::pair<int, int>;
  CHECK(halfspace_indices(1, 1) == std::vector<P>{{0, 0}});
  CHECK(halfspace_indices(2, 2) == std::vector<P>{{0, 0}, {0, 1}, {1, -1}, {1, 0}, {1, 1}});
  CHECK(halfspace_indices(1, 4) == std::vector<P>{{0, 0}, {0, 1}, {0, 2}, {0, 3}});
  CHECK_THROWS_AS(halfspace_indices(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(halfspace_indices(2, 0), std::invalid_argument);
}

TEST_CASE("halfspace_indices has N_u unique pairs") {
  for (int H = 1; H <= 4; ++H)
    for (int W = 1; W <= 4; ++W) {
      const auto pairs = halfspace_indices(H, W);
      CHECK(static_cast<Eigen::Index>(pairs.size()) == ToeplitzVector::length(H, W));
      auto sorted = pairs;
      std::sort(sorted.begin(), sorted.end());
      CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
}

TEST_CASE("twofold_toeplitz trivial cases") {
  ComplexVector u1(1);
  u1 << Complex(3, 0);
  CHECK(twofold_toeplitz(ToeplitzVector(u1, 1, 1))(0, 0) == Complex(3, 0));

  ComplexVector u2 = ComplexVector::Zero(5);
  u2[0] = Complex(2.5, 0);
  const ComplexMatrix T = twofold_toeplitz(ToeplitzVector(u2, 2, 2));
  CHECK((T - 2.5 * ComplexMatrix::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("twofold_toeplitz 2x2 blocks against hand enumeration") {
  ComplexVector u(5);
  u << Complex(1, 0), Complex(2, 1), Complex(3, -1), Complex(4, 0), Complex(5, 2);
  const ComplexMatrix T = twofold_toeplitz(ToeplitzVector(u, 2, 2));
  ComplexMatrix expected(4, 4);
  expected << Complex(1, 0), Complex(2, -1), Complex(4, 0), Complex(5, -2),  //
      Complex(2, 1), Complex(1, 0), Complex(3, 1), Complex(4, 0),            //
      Complex(4, 0), Complex(3, -1), Complex(1, 0), Complex(2, -1),          //
      Complex(5, 2), Complex(4, 0), Complex(2, 1), Complex(1, 0);
  CHECK((T - expected).norm() < 1e-14);
}

TEST_CASE("twofold_toeplitz agrees with the placement oracle") {
  Rng rng(7);
  for (int H = 1; H <= 4; ++H)
    for (int W = 1; W <= 4; ++W) {
      ComplexVector u = oracles::random_vector(ToeplitzVector::length(H, W), rng);
      u[0] = Complex(u[0].real(), 0.0);
      const ComplexMatrix T = twofold_toeplitz(ToeplitzVector(u, H, W));
      const ComplexMatrix ref = oracles::toeplitz_placement(u, H, W);
      CHECK((T - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
      CHECK((T - T.adjoint()).norm() <= 1e-12 * std::max(1.0, T.norm()));
      CHECK(std::abs(T.trace() - Complex(H * W * u[0].real(), 0.0)) < 1e-12);
    }
}

TEST_CASE("twofold_toeplitz input validation") {
  ComplexVector bad(5);
  bad << Complex(1, 0.5), Complex(0, 0), Complex(0, 0), Complex(0, 0), Complex(0, 0);
  CHECK_THROWS_AS(twofold_toeplitz(ToeplitzVector(bad, 2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(ToeplitzVector(ComplexVector::Zero(4), 2, 2), std::invalid_argument);
}

TEST_CASE("toeplitz_adjoint on the identity and zero") {
  const ComplexVector a = toeplitz_adjoint(ComplexMatrix::Identity(4, 4), 2, 2);
  ComplexVector expected(5);
  expected << Complex(4, 0), Complex(0, 0), Complex(0, 0), Complex(0, 0), Complex(0, 0);
  CHECK((a - expected).norm() < 1e-14);
  CHECK(toeplitz_adjoint(ComplexMatrix::Zero(6, 6), 3, 2).norm() == 0.0);
  CHECK_THROWS_AS(toeplitz_adjoint(ComplexMatrix::Zero(4, 5), 2, 2), std::invalid_argument);
}

TEST_CASE("toeplitz_adjoint matches the Kronecker trace oracle") {
  Rng rng(11);
  for (auto [H, W] : {std::pair{3, 3}, {2, 4}, {4, 2}, {1, 5}}) {
    const ComplexMatrix Q = oracles::random_matrix(H * W, H * W, rng);
    const ComplexVector fast = toeplitz_adjoint(Q, H, W);
    const ComplexVector ref = oracles::adjoint_kron_trace(Q, H, W);
    CHECK((fast - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("psi_matrix values and multiplicity meaning") {
  RealVector p22(5);
  p22 << 4, 2, 1, 2, 1;
  CHECK((psi_matrix(2, 2) - p22).norm() == 0.0);
  RealVector p13(3);
  p13 << 3, 2, 1;
  CHECK((psi_matrix(1, 3) - p13).norm() == 0.0);

  // psi[k] counts how often diagonal pair k appears in T(u).
  for (auto [H, W] : {std::pair{3, 2}, {2, 3}, {4, 4}}) {
    const RealVector psi = psi_matrix(H, W);
    const auto n_u = ToeplitzVector::length(H, W);
    for (Eigen::Index k = 0; k < n_u; ++k) {
      ComplexVector e = ComplexVector::Zero(n_u);
      e[k] = Complex(1, 0);
      const ComplexVector back = toeplitz_adjoint(twofold_toeplitz(ToeplitzVector(e, H, W)), H, W);
      CHECK(std::abs(back[k].real() - psi[k]) < 1e-12);
    }
  }
}

TEST_CASE("psd_project clamps, fixes points, and is idempotent") {
  ComplexMatrix G = ComplexMatrix::Zero(2, 2);
  G(0, 0) = 2.0;
  G(1, 1) = -3.0;
  const ComplexMatrix P = psd_project(G);
  CHECK(std::abs(P(0, 0).real() - 2.0) < 1e-12);
  CHECK(std::abs(P(1, 1)) < 1e-12);

  Rng rng(3);
  const ComplexMatrix B = oracles::random_matrix(5, 5, rng);
  const ComplexMatrix psd = B * B.adjoint();
  CHECK((psd_project(psd) - psd).norm() < 1e-10 * psd.norm());

  const ComplexMatrix G2 = oracles::random_hermitian(6, rng);
  const ComplexMatrix once = psd_project(G2);
  CHECK((psd_project(once) - once).norm() < 1e-10 * std::max(1.0, once.norm()));

  CHECK_THROWS_AS(psd_project(oracles::random_matrix(4, 4, rng)), std::invalid_argument);
}

TEST_CASE("psd_project satisfies the projection optimality certificate") {
  Rng rng(19);
  const ComplexMatrix G = oracles::random_hermitian(6, rng);
  const ComplexMatrix Zstar = psd_project(G);
  for (int t = 0; t < 50; ++t) {
    const ComplexMatrix B = oracles::random_matrix(6, 6, rng);
    const ComplexMatrix Z = B * B.adjoint();  // arbitrary PSD candidate
    const double inner = ((G - Zstar).adjoint() * (Z - Zstar)).trace().real();
    CHECK(inner <= 1e-10 * std::max(1.0, G.norm() * Z.norm()));
  }
}

TEST_CASE("soft_threshold closed forms") {
  CHECK(std::abs(soft_threshold(Complex(2, 0), 1.0) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(soft_threshold(Complex(3, 4), 1.0) - Complex(2.4, 3.2)) < 1e-12);
  CHECK(std::abs(soft_threshold(Complex(1, 1), 2.0)) == 0.0);
  CHECK_THROWS_AS(soft_threshold(Complex(1, 0), -0.1), std::invalid_argument);
}

TEST_CASE("soft_threshold and row_group_shrink are non-expansive") {
  Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    const ComplexVector a = oracles::random_vector(8, rng);
    const ComplexVector b = oracles::random_vector(8, rng);
    const double kappa = rng.uniform(0.0, 2.0);
    CHECK((soft_threshold(a, kappa) - soft_threshold(b, kappa)).norm() <= (a - b).norm() + 1e-12);
    const ComplexMatrix A = oracles::random_matrix(5, 3, rng);
    const ComplexMatrix B = oracles::random_matrix(5, 3, rng);
    CHECK((row_group_shrink(A, kappa) - row_group_shrink(B, kappa)).norm() <=
          (A - B).norm() + 1e-12);
  }
}

TEST_CASE("singular_value_threshold shrinks the spectrum") {
  Rng rng(29);
  ComplexVector uvec = oracles::random_vector(4, rng);
  ComplexVector vvec = oracles::random_vector(3, rng);
  uvec.normalize();
  vvec.normalize();
  const ComplexMatrix M = 5.0 * uvec * vvec.adjoint();
  const ComplexMatrix S = singular_value_threshold(M, 2.0);
  CHECK((S - 3.0 * uvec * vvec.adjoint()).norm() < 1e-10);

  CHECK(singular_value_threshold(M, 5.0 + 1e-9).norm() < 1e-8);

  // local optimality of the prox objective on a random instance
  const ComplexMatrix M2 = oracles::random_matrix(4, 4, rng);
  const double kappa = 0.5;
  const ComplexMatrix X = singular_value_threshold(M2, kappa);
  const double obj_x = 0.5 * (X - M2).squaredNorm() + kappa * oracles::nuclear_norm(X);
  for (int t = 0; t < 200; ++t) {
    const ComplexMatrix P = X + 1e-3 * oracles::random_matrix(4, 4, rng);
    const double obj_p = 0.5 * (P - M2).squaredNorm() + kappa * oracles::nuclear_norm(P);
    CHECK(obj_x <= obj_p + 1e-12);
  }
}

TEST_CASE("row_group_shrink closed forms") {
  ComplexMatrix row(1, 2);
  row << Complex(3, 0), Complex(4, 0);
  const ComplexMatrix shrunk = row_group_shrink(row, 1.0);
  CHECK(std::abs(shrunk(0, 0) - Complex(2.4, 0)) < 1e-12);
  CHECK(std::abs(shrunk(0, 1) - Complex(3.2, 0)) < 1e-12);

  Rng rng(31);
  const ComplexMatrix D = oracles::random_matrix(6, 4, rng);
  CHECK((row_group_shrink(D, 0.0) - D).norm() == 0.0);

  const ComplexMatrix col = oracles::random_matrix(6, 1, rng);
  const ComplexVector via_soft = soft_threshold(ComplexVector(col.col(0)), 0.7);
  CHECK((row_group_shrink(col, 0.7).col(0) - via_soft).norm() < 1e-12);
}
