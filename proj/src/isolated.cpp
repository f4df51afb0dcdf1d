#include "nlrabi/isolated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nlrabi {

namespace {

ModelParams unified_params(double g, Rational k, double epsilon, double omega) {
    ModelParams p;
    p.epsilon = epsilon;
    p.omega = omega;
    p.g = g;
    p.k = k;
    p.realization = Realization::Unified;
    return p;
}

double bisect(const auto& f, double a, double b, double fa, double tol) {
    for (int it = 0; it < 400 && b - a > tol; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

double ScaledValue::value() const { return mantissa * std::exp(log_scale); }

double isolated_residual(double g, int M, Rational k, double epsilon, double omega) {
    if (M < 1) throw std::invalid_argument("isolated_residual: M must be >= 1");
    const ModelParams p = unified_params(g, k, epsilon, omega);
    const DerivedQuantities dq = derive(p);
    const CoefficientSequence seq = forward_d(baseline(dq, p.kval(), M), p, M);
    if (seq.size() <= M) return std::numeric_limits<double>::quiet_NaN();
    return seq.d[M] * std::exp(seq.log_scale[M]);
}

ScaledValue isolated_determinant(double g, int M, Rational k, double epsilon, double omega) {
    if (M < 1) throw std::invalid_argument("isolated_determinant: M must be >= 1");
    const ModelParams p = unified_params(g, k, epsilon, omega);
    const DerivedQuantities dq = derive(p);
    const double E = baseline(dq, p.kval(), M);

    double prev = 1.0;                       // P_{n-2}
    double cur = -t_coeff(0, E, p, dq);      // P_{n-1}
    double log_scale = 0.0;
    for (int n = 2; n <= M; ++n) {
        const double next = -t_coeff(n - 1, E, p, dq) * cur - r_coeff(n - 2, p.kval()) * prev;
        prev = cur;
        cur = next;
        const double big = std::max(std::abs(cur), std::abs(prev));
        if (big > 1e100) {
            prev /= big;
            cur /= big;
            log_scale += std::log(big);
        }
    }
    return {cur, log_scale};
}

IsolatedSearch find_isolated(int M, Rational k, double epsilon, double omega, const IsolatedOptions& opts) {
    if (M < 1) throw std::invalid_argument("find_isolated: M must be >= 1");
    if (opts.grid_n < 2) throw std::invalid_argument("find_isolated: grid_n must be >= 2");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("find_isolated: tol must be > 0");
    validate(unified_params(0.0, k, epsilon, omega));

    IsolatedSearch out;
    if (epsilon == 0.0) {
        out.diagnostics.push_back("epsilon = 0: spin and boson decouple, no isolated solutions");
        return out;
    }
    if (0.25 * epsilon * epsilon >= omega * omega)
        out.diagnostics.push_back("omega^2 <= epsilon^2/4: no M = 1 isolated solution exists");

    auto f = [&](double g) { return isolated_residual(g, M, k, epsilon, omega); };

    const double g_lo = opts.g_lo_frac * omega;
    const double g_hi = opts.g_hi_frac * omega;
    const int n = opts.grid_n;
    double ga = g_lo;
    double fa = f(ga);
    for (int i = 1; i < n; ++i) {
        const double gb = g_lo + (g_hi - g_lo) * i / (n - 1);
        const double fb = f(gb);
        if (std::isfinite(fa) && std::isfinite(fb) && ((fa < 0.0) != (fb < 0.0) || fb == 0.0)) {
            const double g_star = fb == 0.0 ? gb : bisect(f, ga, gb, fa, opts.tol);
            IsolatedSolution sol;
            sol.params = unified_params(g_star, k, epsilon, omega);
            sol.M = M;
            sol.g_star = g_star;
            sol.E_star = baseline(derive(sol.params), k.value(), M);
            sol.state = build_isolated_state(sol);
            if (out.solutions.empty() || std::abs(out.solutions.back().g_star - g_star) > opts.tol)
                out.solutions.push_back(std::move(sol));
        }
        ga = gb;
        fa = fb;
    }
    if (out.solutions.empty()) out.diagnostics.push_back("no sign change of d_M found for M = " + std::to_string(M));
    return out;
}

CoefficientSequence build_isolated_state(const IsolatedSolution& sol) {
    const ModelParams& p = sol.params;
    if (p.epsilon == 0.0) throw DomainError("isolated state undefined for epsilon = 0");
    const DerivedQuantities dq = derive(p);
    const double k = p.kval();
    const int M = sol.M;
    const double E = sol.E_star;

    const CoefficientSequence raw = forward_d(E, p, M);
    if (raw.size() <= M) throw std::runtime_error("isolated state: recurrence overflow");

    CoefficientSequence seq;
    seq.E = E;
    seq.params = p;
    seq.d.assign(M + 1, 0.0);
    seq.c.assign(M + 1, 0.0);
    seq.log_scale.assign(M + 1, 0.0);
    for (int m = 0; m < M; ++m) {
        seq.d[m] = raw.d[m] * std::exp(raw.log_scale[m]);
        seq.c[m] = 0.5 * p.epsilon * seq.d[m] / (baseline(dq, k, m) - E);
    }
    seq.d[M] = 0.0;
    seq.c[M] = -(dq.beta * dq.sinh2r * std::sqrt(M * (M + 2.0 * k - 1.0)) / p.epsilon) * seq.d[M - 1];

    double norm = 0.0;
    for (int m = 0; m <= M; ++m) norm += seq.c[m] * seq.c[m] + seq.d[m] * seq.d[m];
    norm = std::sqrt(norm);
    for (int m = 0; m <= M; ++m) {
        seq.c[m] /= norm;
        seq.d[m] /= norm;
    }
    return seq;
}

double finite_state_residual(const CoefficientSequence& seq) {
    const ModelParams& p = seq.params;
    const DerivedQuantities dq = derive(p);
    const double k = p.kval();
    const double E = seq.E;
    const int n = seq.size();
    auto d = [&](int m) { return (m < 0 || m >= n) ? 0.0 : seq.d_value(m); };
    auto c = [&](int m) { return (m < 0 || m >= n || seq.c.empty()) ? 0.0 : seq.c_value(m); };

    double worst = 0.0;
    for (int m = 0; m <= n + 1; ++m) {
        const double up = (baseline(dq, k, m) - E) * c(m) - 0.5 * p.epsilon * d(m);
        const double down = -0.5 * p.epsilon * c(m) + dq.beta * dq.cosh2r * (k + m) * d(m)
                          - 0.5 * dq.beta * dq.sinh2r
                                * (std::sqrt(m * (m + 2.0 * k - 1.0)) * d(m - 1) + std::sqrt((m + 1.0) * (m + 2.0 * k)) * d(m + 1))
                          - E * d(m);
        worst = std::max({worst, std::abs(up), std::abs(down)});
    }
    return worst / p.omega;
}

}  // namespace nlrabi
