#include "nlrabi/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlrabi {

namespace {

// Single-mode creation operator on Fock states 0..dim-1.
Eigen::MatrixXd creation(int dim) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 0; n + 1 < dim; ++n) a(n + 1, n) = std::sqrt(n + 1.0);
    return a;
}

// Fills a spin-major sigma_z-basis matrix from per-level diagonal energies and
// a symmetric ladder coupling (sigma_x coupling between spins).
TruncatedHamiltonian assemble(const ModelParams& p, int N, const Eigen::VectorXd& boson, double eps,
                              const Eigen::MatrixXd& coupling) {
    TruncatedHamiltonian h;
    h.N = N;
    h.params = p;
    h.basis = SpinBasis::SigmaZ;
    h.matrix = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    for (int m = 0; m < N; ++m) {
        h.matrix(m, m) = 0.5 * eps + boson(m);
        h.matrix(N + m, N + m) = -0.5 * eps + boson(m);
    }
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const double v = coupling(i, j);
            if (v == 0.0) continue;
            h.matrix(i, N + j) = v;
            h.matrix(N + j, i) = v;
        }
    return h;
}

}  // namespace

TruncatedHamiltonian build_unified(const ModelParams& p, int N, SpinBasis basis) {
    if (N < 2) throw std::invalid_argument("build_unified: N must be >= 2");
    ModelParams u = map_realization(p).unified;
    const double k = u.kval();

    TruncatedHamiltonian h;
    h.N = N;
    h.params = u;
    h.basis = basis;
    h.matrix = Eigen::MatrixXd::Zero(2 * N, 2 * N);

    if (basis == SpinBasis::SigmaZ) {
        for (int m = 0; m < N; ++m) {
            const Su11Elements el = su11_elements({k, m});
            h.matrix(m, m) = 0.5 * u.epsilon + u.omega * el.k0_diag;
            h.matrix(N + m, N + m) = -0.5 * u.epsilon + u.omega * el.k0_diag;
            if (m + 1 < N) {
                const double v = u.g * el.kplus_coeff;
                // up,m+1 <-> down,m and up,m <-> down,m+1
                h.matrix(m + 1, N + m) = h.matrix(N + m, m + 1) = v;
                h.matrix(m, N + m + 1) = h.matrix(N + m + 1, m) = v;
            }
        }
    } else {
        for (int m = 0; m < N; ++m) {
            const Su11Elements el = su11_elements({k, m});
            h.matrix(m, m) = u.omega * el.k0_diag;
            h.matrix(N + m, N + m) = u.omega * el.k0_diag;
            h.matrix(m, N + m) = h.matrix(N + m, m) = -0.5 * u.epsilon;
            if (m + 1 < N) {
                const double v = u.g * el.kplus_coeff;
                h.matrix(m + 1, m) = h.matrix(m, m + 1) = v;
                h.matrix(N + m + 1, N + m) = h.matrix(N + m, N + m + 1) = -v;
            }
        }
    }
    return h;
}

TruncatedHamiltonian build_realization(const ModelParams& model, int N) {
    if (N < 2) throw std::invalid_argument("build_realization: N must be >= 2");
    validate(model);
    const Rational k = make_rational(model.k.num, model.k.den);
    Eigen::VectorXd boson(N);
    Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(N, N);

    switch (model.realization) {
    case Realization::Unified:
        throw std::invalid_argument("build_realization: use build_unified for the unified model");

    case Realization::TwoPhoton: {
        // |k,m> = |2m>_a for k = 1/4, |2m+1>_a for k = 3/4
        const int offset = k == Rational{3, 4} ? 1 : 0;
        const int dim = 2 * N + 2;
        const Eigen::MatrixXd ad = creation(dim);
        const Eigen::MatrixXd ad2 = ad * ad;
        for (int i = 0; i < N; ++i) {
            const int ni = 2 * i + offset;
            boson(i) = model.omega * ni;
            for (int j = 0; j < N; ++j) {
                const int nj = 2 * j + offset;
                coupling(i, j) = model.g * (ad2(ni, nj) + ad2(nj, ni));
            }
        }
        break;
    }

    case Realization::TwoMode: {
        // |k,m> = |m + 2k - 1>_a |m>_b
        const int diff = static_cast<int>(2 * k.num / k.den) - 1;
        const int dim = N + diff + 1;
        const Eigen::MatrixXd ad = creation(dim);
        for (int i = 0; i < N; ++i) {
            const int na = i + diff;
            const int nb = i;
            boson(i) = model.omega * (na + nb);
            if (i + 1 < N) {
                const double v = model.g * ad(na + 1, na) * ad(nb + 1, nb);
                coupling(i + 1, i) = v;
                coupling(i, i + 1) = v;
            }
        }
        break;
    }

    case Realization::IntensityDependent: {
        // K+ = sqrt(n + 2k - 1) a^dagger on Fock states |m>_a
        const int dim = N + 1;
        const double shift = 2.0 * k.value() - 1.0;
        Eigen::VectorXd root(dim);
        for (int n = 0; n < dim; ++n) root(n) = std::sqrt(n + shift);
        const Eigen::MatrixXd kplus = root.asDiagonal() * creation(dim);
        for (int i = 0; i < N; ++i) {
            boson(i) = model.omega * i;
            for (int j = 0; j < N; ++j) coupling(i, j) = model.g * (kplus(i, j) + kplus(j, i));
        }
        break;
    }
    }
    return assemble(model, N, boson, model.epsilon, coupling);
}

std::vector<double> eigen_sym(const Eigen::MatrixXd& h, int n_lowest) {
    if (n_lowest < 0 || n_lowest > h.rows()) throw std::invalid_argument("eigen_sym: n_lowest out of range");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigen_sym: eigensolver did not converge");
    const Eigen::VectorXd& ev = solver.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end());
    out.resize(n_lowest);
    return out;
}

std::vector<double> eigen_sym(const TruncatedHamiltonian& h, int n_lowest) { return eigen_sym(h.matrix, n_lowest); }

Eigen::VectorXd parity_diagonal(int N) {
    Eigen::VectorXd d(2 * N);
    for (int m = 0; m < N; ++m) {
        const double t = (m % 2 == 0) ? 1.0 : -1.0;
        d(m) = -t;
        d(N + m) = t;
    }
    return d;
}

ParityBlocks parity_project(const TruncatedHamiltonian& h) {
    if (h.basis != SpinBasis::SigmaZ) throw std::invalid_argument("parity_project: needs a sigma_z basis matrix");
    const Eigen::VectorXd pi = parity_diagonal(h.N);
    ParityBlocks out;
    for (int i = 0; i < 2 * h.N; ++i) (pi(i) > 0 ? out.even_index : out.odd_index).push_back(i);
    out.even = h.matrix(out.even_index, out.even_index);
    out.odd = h.matrix(out.odd_index, out.odd_index);
    return out;
}

Su11Matrices truncated_generators(double k, int N) {
    Su11Matrices s{Eigen::MatrixXd::Zero(N, N), Eigen::MatrixXd::Zero(N, N), Eigen::MatrixXd::Zero(N, N)};
    for (int m = 0; m < N; ++m) {
        const Su11Elements el = su11_elements({k, m});
        s.k0(m, m) = el.k0_diag;
        if (m + 1 < N) s.kplus(m + 1, m) = el.kplus_coeff;
        if (m > 0) s.kminus(m - 1, m) = el.kminus_coeff;
    }
    return s;
}

SpectrumResult oracle_spectrum(const ModelParams& p, int N, int n_levels) {
    const TruncatedHamiltonian h = p.realization == Realization::Unified ? build_unified(p, N) : build_realization(p, N);
    const ParityBlocks blocks = parity_project(h);
    const int n_even = std::min<int>(n_levels, blocks.even.rows());
    const int n_odd = std::min<int>(n_levels, blocks.odd.rows());

    SpectrumResult out;
    out.params = p;
    for (double E : eigen_sym(blocks.even, n_even)) out.levels.push_back({E, Parity::Even, LevelSource::Oracle, 0.0});
    for (double E : eigen_sym(blocks.odd, n_odd)) out.levels.push_back({E, Parity::Odd, LevelSource::Oracle, 0.0});
    // ties: value, then even block first
    std::stable_sort(out.levels.begin(), out.levels.end(), [](const Level& a, const Level& b) {
        if (a.E != b.E) return a.E < b.E;
        return static_cast<int>(a.parity) > static_cast<int>(b.parity);
    });
    if (static_cast<int>(out.levels.size()) > n_levels) out.levels.resize(n_levels);

    const MappedParams mp = map_realization(p);
    out.energy_shift = mp.energy_shift;
    if (mp.unified.g > 0.0 && 2.0 * mp.unified.g < mp.unified.omega) {
        const DerivedQuantities dq = derive(mp.unified);
        const double top = out.levels.empty() ? 0.0 : out.levels.back().E + mp.energy_shift;
        for (int m = 0; baseline(dq, mp.unified.kval(), m) <= top; ++m)
            out.baselines.push_back(baseline(dq, mp.unified.kval(), m) - mp.energy_shift);
    }
    return out;
}

ConvergenceReport certify_convergence(const ModelParams& p, int N, int n_levels, double tol) {
    ConvergenceReport rep;
    rep.N = N;
    auto levels = [&](int n) {
        std::vector<double> out;
        for (const Level& l : oracle_spectrum(p, n, n_levels).levels) out.push_back(l.E);
        return out;
    };
    rep.coarse = levels(N);
    rep.fine = levels(2 * N);
    for (std::size_t i = 0; i < rep.coarse.size() && i < rep.fine.size(); ++i)
        rep.max_diff = std::max(rep.max_diff, std::abs(rep.coarse[i] - rep.fine[i]));
    rep.converged = rep.max_diff <= tol;
    return rep;
}

}  // namespace nlrabi
