#include <doctest.h>

#include <cmath>

#include "bkg/extensions.hpp"
#include "support.hpp"

using namespace bkg;
using bkg::testing::max_abs;

namespace {

const cplx I1(0.0, 1.0);

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::ComputeError;
}

MetricGraph edge(double l = 1.0) { return make_interval(1.0, std::exp(l)); }

}  // namespace

TEST_CASE("validation accepts Dirichlet and Neumann types") {
    const cmat I2 = cmat::Identity(2, 2), Z2 = cmat::Zero(2, 2);
    CHECK_NOTHROW(validate_extension(I2, Z2, OperatorKind::BK2));
    CHECK_NOTHROW(validate_extension(Z2, I2, OperatorKind::BK2));
}

TEST_CASE("validation errors carry stable codes") {
    const cmat I2 = cmat::Identity(2, 2), Z2 = cmat::Zero(2, 2);
    CHECK(code_of([&] { validate_extension(I2, I1 * I2, OperatorKind::BK2); }) == ErrorCode::HermiticityViolation);
    cmat A = Z2;
    A(0, 0) = 1.0;
    cmat B = Z2;
    B(0, 1) = 1.0;
    CHECK(code_of([&] { validate_extension(A, Z2, OperatorKind::BK2); }) == ErrorCode::RankDeficient);
    CHECK(code_of([&] { validate_extension(I2, cmat::Zero(3, 3), OperatorKind::BK2); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { validate_extension(cmat::Identity(3, 3), cmat::Zero(3, 3), OperatorKind::BK2); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(std::string(code_name(ErrorCode::HermiticityViolation)) == "HERMITICITY_VIOLATION");
}

TEST_CASE("BK S-matrix examples") {
    const cmat I1x1 = cmat::Identity(1, 1), Z = cmat::Zero(1, 1);
    CHECK(std::abs(s_matrix_bk(validate_extension(I1x1, Z, OperatorKind::BK))(0, 0) - I1) < 1e-15);
    CHECK(std::abs(s_matrix_bk(validate_extension(Z, I1x1, OperatorKind::BK))(0, 0) + I1) < 1e-15);
    for (double c : {0.0, 0.25, 0.5, 0.9}) {
        BoundaryCondition bc;
        bc.kind = BoundaryCondition::Kind::RingPhase;
        bc.c = c;
        const auto g = make_ring(1.0, std::exp(1.0));
        const cmat S = s_matrix_bk(standard_bc(bc, g));
        CHECK(std::abs(S(0, 0) - std::exp(-2.0 * pi * I1 * c)) < 1e-14);
    }
}

TEST_CASE("spec_from_s_bk inverts s_matrix_bk") {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 5; ++n) {
        const cmat S = bkg::testing::random_unitary(n, rng);
        const auto spec = spec_from_s_bk(S);
        CHECK(max_abs(s_matrix_bk(validate_extension(spec.A, spec.B, OperatorKind::BK)) - S) < 1e-12);
    }
}

TEST_CASE("dilation matrices satisfy U (i I_pm) U^+ = J") {
    const MetricGraph g({{"e0", 1.0, 3.0, "u", "v"}, {"e1", 2.0, 9.0, "v", "u"}});
    const auto d = dilation_matrices(g);
    const int m = 4;
    cmat Ipm = cmat::Zero(m, m);
    for (int j = 0; j < m; ++j) Ipm(j, j) = d.I_pm[j];
    CHECK(max_abs(d.U * (I1 * Ipm) * d.U.adjoint() - d.J) < 1e-14);
    CHECK(d.D_ab.minCoeff() > 0.0);
    CHECK(d.D_ab[2] == doctest::Approx(3.0));
}

TEST_CASE("decomposition limits") {
    const auto g = edge();
    const auto d = dilation_matrices(g);
    const cmat I2 = cmat::Identity(2, 2), Z2 = cmat::Zero(2, 2);

    const auto inv = kuchment_decompose(validate_extension(Z2, I2, OperatorKind::BK2), d);
    CHECK(max_abs(inv.P_ker) < 1e-14);
    CHECK(max_abs(inv.P_perp - I2) < 1e-14);
    CHECK(max_abs(inv.B_dprime - I2) < 1e-14);

    const auto zero = kuchment_decompose(validate_extension(I2, Z2, OperatorKind::BK2), d);
    CHECK(max_abs(zero.P_ker - I2) < 1e-14);
    CHECK(max_abs(zero.P_perp) < 1e-14);
    CHECK(max_abs(zero.L_dprime) < 1e-14);
    CHECK(max_abs(zero.A_dprime - I2) < 1e-14);
    CHECK(max_abs(zero.B_dprime) < 1e-14);
}

TEST_CASE("decomposition invariants on random extensions") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 40; ++i) {
        const auto g = make_random_graph(1 + i % 3, i, 0.5, 2.0);
        const int m = 2 * g.num_edges();
        const auto dec = kuchment_decompose(bkg::testing::random_extension(m, OperatorKind::BK2, rng),
                                            dilation_matrices(g));
        const cmat Id = cmat::Identity(m, m);
        CHECK(max_abs(dec.P_ker + dec.P_perp - Id) < 1e-12);
        CHECK(max_abs(dec.P_ker * dec.P_ker - dec.P_ker) < 1e-12);
        CHECK(max_abs(dec.P_perp - dec.P_perp.adjoint()) < 1e-12);
        CHECK(max_abs(dec.L_dprime - dec.L_dprime.adjoint()) < 1e-12);
        CHECK(max_abs(dec.A_dprime - dec.P_ker - dec.L_dprime) < 1e-12);
        CHECK(max_abs(dec.B_dprime - dec.P_perp) < 1e-12);
        for (double k : {0.1, 1.0, 10.0, 100.0}) {
            const cmat S = s_matrix_bk2(dec, k);
            CHECK(max_abs(S.adjoint() * S - Id) < 1e-12);
            CHECK(max_abs(S - s_matrix_bk2_direct(dec, k)) < 1e-10);
            const double h = 1e-6;
            const cmat fd = (s_matrix_bk2(dec, k + h) - s_matrix_bk2(dec, k - h)) / (2.0 * h);
            CHECK(max_abs(fd - s_matrix_bk2_derivative(dec, k)) < 1e-6 * std::max(1.0, max_abs(fd)));
        }
    }
}

TEST_CASE("standard conditions give the tabulated S''") {
    const auto g = edge();
    const auto d = dilation_matrices(g);
    auto sdp = [&](BoundaryCondition bc, double k) {
        return s_matrix_bk2(kuchment_decompose(standard_bc(bc, g), d), k);
    };
    BoundaryCondition bc;
    CHECK(max_abs(standard_bc(bc, g).A - cmat::Identity(2, 2)) == 0.0);
    for (double k : {0.0, 0.5, 7.0}) {
        bc.kind = BoundaryCondition::Kind::Dirichlet;
        CHECK(max_abs(sdp(bc, k) + cmat::Identity(2, 2)) < 1e-14);
        bc.kind = BoundaryCondition::Kind::Neumann;
        CHECK(max_abs(sdp(bc, k) - cmat::Identity(2, 2)) < 1e-14);
        for (double rho : {0.0, 0.7, -1.3}) {
            bc.kind = BoundaryCondition::Kind::Robin;
            bc.rho = {rho};
            const cmat S = sdp(bc, k);
            const cplx expect = -(rho - I1 * k) / (rho + I1 * k);
            if (rho == 0.0 && k == 0.0) {
                CHECK(std::abs(S(0, 0) - 1.0) < 1e-14);
            } else {
                CHECK(std::abs(S(0, 0) - expect) < 1e-13);
                CHECK(std::abs(S(1, 1) - expect) < 1e-13);
            }
            CHECK(std::abs(S(0, 1)) < 1e-14);
        }
    }
    CHECK_THROWS_AS(standard_bc(BoundaryCondition{BoundaryCondition::Kind::RingPhase, {}, 1.0, false},
                                make_ring(1.0, 2.0)),
                    Error);
    CHECK_THROWS_AS(standard_bc(BoundaryCondition{BoundaryCondition::Kind::RingPhase, {}, 0.0, false}, g), Error);
    CHECK_THROWS_AS(standard_bc(BoundaryCondition{BoundaryCondition::Kind::Robin, {1.0, 2.0, 3.0}, 0.0, false}, g),
                    Error);
}

TEST_CASE("S'' at the singular point on the imaginary axis") {
    const auto g = edge();
    BoundaryCondition bc{BoundaryCondition::Kind::Robin, {1.0}, 0.0, false};
    const auto dec = kuchment_decompose(standard_bc(bc, g), dilation_matrices(g));
    CHECK(code_of([&] { s_matrix_bk2(dec, cplx(0.0, 1.0)); }) == ErrorCode::SingularAtK);
}

TEST_CASE("ambiguous rank is reported") {
    const auto g = edge();
    cmat B = cmat::Zero(2, 2);
    B(0, 0) = 1e-10;  // near the rank threshold
    B(1, 1) = 1.0;
    const auto spec = validate_extension(cmat::Identity(2, 2), B, OperatorKind::BK2);
    CHECK(code_of([&] { kuchment_decompose(spec, dilation_matrices(g)); }) == ErrorCode::RankAmbiguous);
    RankOptions loose;
    loose.strict = false;
    CHECK_NOTHROW(kuchment_decompose(spec, dilation_matrices(g), loose));
}

TEST_CASE("squared extension") {
    const auto ring = make_ring(1.0, std::exp(1.0));
    for (double c : {0.0, 0.3}) {
        cmat S(1, 1);
        S(0, 0) = std::exp(-2.0 * pi * I1 * c);
        const auto sq = squared_extension(S, ring);
        CHECK(std::abs(sq.S_tilde(0, 1) - S(0, 0)) < 1e-12);
        CHECK(std::abs(sq.S_tilde(1, 0) - std::conj(S(0, 0))) < 1e-12);
        CHECK(sq.block_residual < 1e-12);
        CHECK(sq.l_dprime_norm < 1e-12);
    }
    std::mt19937_64 rng(17);
    for (int E = 1; E <= 4; ++E) {
        std::vector<MetricEdge> edges;
        for (int e = 0; e < E; ++e)
            edges.push_back({"e" + std::to_string(e), 0.5 + e, (0.5 + e) * std::exp(1.0 + 0.2 * e),
                             "v" + std::to_string(e), "v" + std::to_string((e + 1) % E)});
        const MetricGraph g(edges);
        const auto sq = squared_extension(cmat::Identity(E, E), g);
        CHECK(sq.block_residual < 1e-12);
        const auto sr = squared_extension(bkg::testing::random_unitary(E, rng), g);
        CHECK(sr.block_residual < 1e-10);
        const auto dec = kuchment_decompose(sr.spec, dilation_matrices(g));
        CHECK(is_squared_form(dec));
    }
    const auto g = edge();
    const auto dir = kuchment_decompose(standard_bc(BoundaryCondition{}, g), dilation_matrices(g));
    CHECK_FALSE(is_squared_form(dir));
}

TEST_CASE("Kirchhoff and log-Laplacian conversion") {
    const auto star = make_star({{1.0, std::exp(1.0)}, {1.0, std::exp(1.5)}, {2.0, 2.0 * std::exp(2.0)}});
    BoundaryCondition bc{BoundaryCondition::Kind::Kirchhoff, {}, 0.0, false};
    const auto dec = kuchment_decompose(standard_bc(bc, star), dilation_matrices(star));
    CHECK(dec.k_independent());
    const cmat S = s_matrix_bk2(dec, 2.0);
    // centre block is the standard vertex matrix 2/3 J - I
    for (int i = 3; i < 6; ++i)
        for (int j = 3; j < 6; ++j) CHECK(std::abs(S(i, j) - ((i == j ? -1.0 : 0.0) + 2.0 / 3.0)) < 1e-12);
    CHECK(is_time_reversal_symmetric(S));
    CHECK(code_of([&] { bk2_from_log_laplacian(cmat::Identity(6, 6), I1 * cmat::Identity(6, 6), star); }) ==
          ErrorCode::HermiticityViolation);
}
