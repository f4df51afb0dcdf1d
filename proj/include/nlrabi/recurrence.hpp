// recurrence.hpp - expansion coefficients of the displaced-basis ansatz
//
// In the basis |k,m>_+ = S(-r)|k,m> the eigenvector is (c_m, d_m) with
//
//     c_m     = (eps/2) d_m / (beta (k+m) - E)
//     d_{m+1} = T_m d_m - R_{m-1} d_{m-1},   d_0 = 1,  d_1 = T_0
//
// The recurrence has a minimal solution decaying like (2g/omega)^m and a
// dominant one growing like (omega/2g)^m.  Forward iteration follows the
// dominant solution; minimal_solution() recovers the decaying one.
//
// Sequences carry a per-index log scale so that long runs neither overflow
// nor underflow: the true coefficient is d[m] * exp(log_scale[m]).

#pragma once

#include "nlrabi/algebra.hpp"

#include <vector>

namespace nlrabi {

struct RecurrenceOptions {
    double pole_guard = 1e-12;         // relative to omega
    double rescale_threshold = 1e250;
    double rescale_factor = 1e-200;
};

struct CoefficientSequence {
    double E = 0.0;
    ModelParams params;  // unified frame
    std::vector<double> d;
    std::vector<double> c;  // empty when only d was requested
    std::vector<double> log_scale;
    bool truncated = false;  // a non-finite entry stopped the run early

    int size() const { return static_cast<int>(d.size()); }
    double k() const { return params.kval(); }
    double d_value(int m) const;
    double c_value(int m) const;
    double log_abs_d(int m) const;
};

/// Absolute pole guard for these parameters.
double pole_guard_abs(const ModelParams& p, const RecurrenceOptions& opts);

/// Throws PoleError when |beta (k+m) - E| is below the pole guard and eps != 0.
double t_coeff(int m, double E, const ModelParams& p, const DerivedQuantities& dq, const RecurrenceOptions& opts = {});

double r_coeff(int m, double k);

/// d_0 .. d_{m_max} by forward iteration; c is left empty.  Only T_0 .. T_{m_max-1}
/// are evaluated, so E = beta (k + m_max) is allowed.
CoefficientSequence forward_d(double E, const ModelParams& p, int m_max, const RecurrenceOptions& opts = {});

/// Forward recurrence with c_m; indices 0 .. m_max.
CoefficientSequence run_recurrence(double E, const ModelParams& p, int m_max, const RecurrenceOptions& opts = {});

/// Minimal (decaying) solution of the recurrence for rows m >= 1, obtained by
/// backward iteration from far beyond m_max and normalized to d_0 = 1.  It
/// satisfies the m = 0 row only when E is an eigenvalue, so row_residuals()[0]
/// measures how close E is to the spectrum.
CoefficientSequence minimal_solution(double E, const ModelParams& p, int m_max, const RecurrenceOptions& opts = {});

/// Negated least-squares slope of ln|d_m| over m in [m_lo, m_hi].
double fit_decay_rate(const CoefficientSequence& seq, int m_lo, int m_hi);

/// Largest |c_m (beta(k+m) - E) - (eps/2) d_m| relative to its terms.
double c_relation_residual(const CoefficientSequence& seq);

/// Relative residual of the lower Schrodinger row for m = 0 .. size-2,
/// each normalized by the magnitude of its largest term.
std::vector<double> row_residuals(const CoefficientSequence& seq);

}  // namespace nlrabi
