// isolated.hpp - exact isolated (Juddian) solutions on the baselines
//
// E = beta (k + M) is an eigenvalue exactly when the recurrence started at
// d_0 = 1 gives d_M = 0.  The eigenvector is then finite: c_0..c_M, d_0..d_{M-1}.

#pragma once

#include "nlrabi/algebra.hpp"
#include "nlrabi/recurrence.hpp"

#include <string>
#include <vector>

namespace nlrabi {

struct IsolatedOptions {
    int grid_n = 400;
    double tol = 1e-12;        // bisection width in g
    double g_lo_frac = 0.001;  // scan window, in units of omega
    double g_hi_frac = 0.4999;
};

struct IsolatedSolution {
    ModelParams params;  // unified frame, g = g_star
    int M = 1;
    double g_star = 0.0;
    double E_star = 0.0;
    CoefficientSequence state;
};

struct IsolatedSearch {
    std::vector<IsolatedSolution> solutions;  // ascending in g
    std::vector<std::string> diagnostics;
};

/// d_M at E = beta (k + M); a zero in g is an isolated solution.
double isolated_residual(double g, int M, Rational k, double epsilon, double omega);

/// Leading principal minor P_M of the tridiagonal (-T, 1, R) matrix, as
/// mantissa * exp(log_scale).  P_M = (-1)^M d_M.
struct ScaledValue {
    double mantissa = 0.0;
    double log_scale = 0.0;
    double value() const;
};
ScaledValue isolated_determinant(double g, int M, Rational k, double epsilon, double omega);

IsolatedSearch find_isolated(int M, Rational k, double epsilon, double omega, const IsolatedOptions& opts = {});

/// Finite eigenvector normalized to sum(c^2 + d^2) = 1; throws DomainError for eps = 0.
CoefficientSequence build_isolated_state(const IsolatedSolution& sol);

/// max |(H - E) psi| / omega for a finite sequence, taking coefficients past
/// the end as zero.  Both Schrodinger rows are checked.
double finite_state_residual(const CoefficientSequence& seq);

}  // namespace nlrabi
