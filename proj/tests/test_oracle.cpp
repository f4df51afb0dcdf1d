#include "reference_data.hpp"

#include "nlrabi/oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace nlrabi;
using testdata::unified;

namespace {

std::vector<double> values(const SpectrumResult& s) {
    std::vector<double> out;
    for (const Level& l : s.levels) out.push_back(l.E);
    return out;
}

ModelParams native(Realization r, Rational k) {
    ModelParams p = unified(0.4, k);
    p.realization = r;
    if (r == Realization::TwoPhoton) {
        p.omega = 0.5;
        p.g = 0.2;
    } else if (r == Realization::TwoMode) {
        p.omega = 0.5;
    }
    return p;
}

}  // namespace

TEST_CASE("eigen_sym basics") {
    Eigen::MatrixXd m(2, 2);
    m << 0.3, -0.7, -0.7, 0.3;
    const auto ev = eigen_sym(m, 2);
    CHECK(ev[0] == doctest::Approx(-0.4));
    CHECK(ev[1] == doctest::Approx(1.0));
    const auto ones = eigen_sym(Eigen::MatrixXd::Identity(7, 7), 7);
    for (double v : ones) CHECK(v == doctest::Approx(1.0));
    CHECK_THROWS(eigen_sym(m, 3));
}

TEST_CASE("decoupled limit") {
    for (Rational k : {Rational{1, 4}, Rational{1, 2}, Rational{3, 2}}) {
        const ModelParams p = unified(0.0, k, 0.8, 1.3);
        const auto ev = eigen_sym(build_unified(p, 30), 20);
        std::vector<double> want;
        for (int m = 0; m < 30; ++m)
            for (double s : {-0.4, 0.4}) want.push_back(1.3 * (k.value() + m) + s);
        std::sort(want.begin(), want.end());
        for (int i = 0; i < 20; ++i) CHECK(ev[i] == doctest::Approx(want[i]).epsilon(1e-14));
        const SpectrumResult s = oracle_spectrum(p, 30, 20);
        CHECK(s.baselines.empty());
        const auto sv = values(s);
        for (int i = 0; i < 20; ++i) CHECK(sv[i] == doctest::Approx(ev[i]).epsilon(1e-14));
    }
}

TEST_CASE("eps = 0 tends to the doubly degenerate displaced ladder") {
    const ModelParams p = unified(0.3, {1, 2}, 0.0);
    const double beta = derive(p).beta;
    const auto ev = eigen_sym(build_unified(p, 400), 10);
    for (int i = 0; i < 10; ++i) CHECK(std::abs(ev[i] - beta * (0.5 + i / 2)) <= 1e-9);
}

TEST_CASE("sigma_x and sigma_z forms share a spectrum") {
    const ModelParams p = unified(0.37, {3, 4});
    const auto a = eigen_sym(build_unified(p, 150, SpinBasis::SigmaZ), 20);
    const auto b = eigen_sym(build_unified(p, 150, SpinBasis::SigmaX), 20);
    for (int i = 0; i < 20; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("truncation self-convergence") {
    const ModelParams p = unified(0.4, {1, 2});
    const ConvergenceReport rep = certify_convergence(p, 200, 10, 1e-9);
    CHECK(rep.converged);
    CHECK(rep.max_diff < 1e-9);
    const ConvergenceReport bad = certify_convergence(unified(0.49, {1, 2}), 50, 10, 1e-9);
    CHECK_FALSE(bad.converged);
}

TEST_CASE("realizations reproduce the unified spectrum") {
    const auto base14 = values(oracle_spectrum(unified(0.4, {1, 4}), 300, 10));
    const auto base12 = values(oracle_spectrum(unified(0.4, {1, 2}), 300, 10));
    const SpectrumResult tp = oracle_spectrum(native(Realization::TwoPhoton, {1, 4}), 300, 10);
    const SpectrumResult tm = oracle_spectrum(native(Realization::TwoMode, {1, 2}), 300, 10);
    const SpectrumResult id = oracle_spectrum(native(Realization::IntensityDependent, {1, 2}), 300, 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(std::abs(tp.levels[i].E + 0.25 - base14[i]) <= 1e-9);
        CHECK(std::abs(tm.levels[i].E + 0.5 - base12[i]) <= 1e-9);
        CHECK(std::abs(id.levels[i].E + 0.5 - base12[i]) <= 1e-9);
    }
    CHECK(tp.energy_shift == 0.25);
    CHECK(tm.energy_shift == 0.5);
}

TEST_CASE("odd two-photon sector") {
    const auto base = values(oracle_spectrum(unified(0.4, {3, 4}), 300, 10));
    const SpectrumResult tp = oracle_spectrum(native(Realization::TwoPhoton, {3, 4}), 300, 10);
    for (int i = 0; i < 10; ++i) CHECK(std::abs(tp.levels[i].E + 0.25 - base[i]) <= 1e-9);
}

TEST_CASE("matrices are exactly symmetric") {
    for (const TruncatedHamiltonian& h : {build_unified(unified(0.41, {1, 4}), 60),
                                          build_unified(unified(0.41, {1, 4}), 60, SpinBasis::SigmaX),
                                          build_realization(native(Realization::TwoPhoton, {1, 4}), 60),
                                          build_realization(native(Realization::TwoMode, {1, 2}), 60),
                                          build_realization(native(Realization::IntensityDependent, {1, 2}), 60)}) {
        CHECK((h.matrix - h.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("parity commutes with H") {
    const int N = 80;
    const TruncatedHamiltonian h = build_unified(unified(0.43, {1, 2}), N);
    const Eigen::MatrixXd pi = parity_diagonal(N).asDiagonal();
    const Eigen::MatrixXd diff = pi * h.matrix * pi.transpose() - h.matrix;
    CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
    CHECK((pi * pi - Eigen::MatrixXd::Identity(2 * N, 2 * N)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parity blocks partition the spectrum") {
    const TruncatedHamiltonian h = build_unified(unified(0.38, {1, 4}), 100);
    const ParityBlocks b = parity_project(h);
    CHECK(b.even.rows() == 100);
    CHECK(b.odd.rows() == 100);
    std::vector<double> all = eigen_sym(b.even, 100);
    const auto odd = eigen_sym(b.odd, 100);
    all.insert(all.end(), odd.begin(), odd.end());
    std::sort(all.begin(), all.end());
    const auto full = eigen_sym(h, 200);
    for (int i = 0; i < 200; ++i) CHECK(std::abs(all[i] - full[i]) <= 1e-12 * std::max(1.0, std::abs(full[i])));
    CHECK_THROWS(parity_project(build_unified(unified(0.38, {1, 4}), 10, SpinBasis::SigmaX)));
}

TEST_CASE("ground state is even, first excited odd near g = 0.3") {
    const SpectrumResult s = oracle_spectrum(unified(0.3, {1, 4}), 200, 4);
    CHECK(s.levels[0].parity == Parity::Even);
    CHECK(s.levels[1].parity == Parity::Odd);
}

TEST_CASE("variational monotonicity in N") {
    const ModelParams p = unified(0.45, {1, 2});
    auto prev = eigen_sym(build_unified(p, 25), 10);
    for (int N : {50, 100, 200}) {
        const auto next = eigen_sym(build_unified(p, N), 10);
        for (int i = 0; i < 10; ++i) CHECK(next[i] <= prev[i] + 1e-12);
        prev = next;
    }
}

namespace {

double mean_gap(double g) {
    const auto ev = eigen_sym(build_unified(unified(g, {1, 2}), 400), 16);
    return (ev[15] - ev[5]) / 10.0;
}

}  // namespace

TEST_CASE("level spacing shrinks toward collapse") {
    double prev = mean_gap(0.3);
    for (double g : {0.4, 0.45, 0.49, 0.499}) {
        const double gap = mean_gap(g);
        CAPTURE(g);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(mean_gap(0.499) < 0.2 * mean_gap(0.3));
}

TEST_CASE("level spacing at g = 0.49 is below a fifth of g = 0.3") {
    CHECK(mean_gap(0.49) < 0.2 * mean_gap(0.3));
}

TEST_CASE("Casimir commutes with H in the interior") {
    const int N = 60;
    const double k = 0.75;
    const TruncatedHamiltonian h = build_unified(unified(0.42, {3, 4}), N);
    const Su11Matrices s = truncated_generators(k, N);
    const Eigen::MatrixXd c1 = s.k0 * s.k0 - 0.5 * (s.kplus * s.kminus + s.kminus * s.kplus);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    C.topLeftCorner(N, N) = c1;
    C.bottomRightCorner(N, N) = c1;
    const Eigen::MatrixXd comm = h.matrix * C - C * h.matrix;
    double worst = 0.0;
    for (int i = 0; i < 2 * N; ++i) {
        if (i % N > N - 3) continue;
        worst = std::max(worst, comm.row(i).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-10 * h.matrix.norm());
}

TEST_CASE("realization builder rejects bad input") {
    CHECK_THROWS(build_realization(unified(0.4, {1, 2}), 10));
    CHECK_THROWS(build_realization(native(Realization::TwoPhoton, {1, 2}), 10));
    CHECK_THROWS(build_unified(unified(0.4, {1, 2}), 1));
}
