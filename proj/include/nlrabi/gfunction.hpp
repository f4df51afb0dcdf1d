// gfunction.hpp - parity-resolved G-function and the regular spectrum
//
//     G^P(E) = sum_m (d_m - P c_m) <k,0|k,m>_+   ,   <k,0|k,m>_+ = (1-xi^2)^k sqrt(G(2k+m)/(m! G(2k))) xi^m
//
// with xi = tanh(r/2).  Zeros of G^P are the eigenvalues of parity P.  G has
// simple poles at the baselines beta (k+m); at an isolated (Juddian) coupling
// the residue at beta (k+M) vanishes and the baseline itself is an eigenvalue
// of both parities without being a zero of G.

#pragma once

#include "nlrabi/algebra.hpp"
#include "nlrabi/recurrence.hpp"

#include <vector>

namespace nlrabi {

double log_overlap_coeff(double k, int m, double xi);
double overlap_coeff(double k, int m, double xi);

struct GOptions {
    double series_tol = 1e-14;
    int M_max = 500;
    int min_terms = 20;
    RecurrenceOptions recurrence;
};

struct GEvaluation {
    double E = 0.0;
    Parity parity = Parity::Even;
    double value = 0.0;
    int terms_used = 0;
    double truncation_estimate = 0.0;  // largest of the last five |term| / reference sum
    bool converged = false;
};

/// Throws PoleError within the pole guard of a baseline.
GEvaluation g_eval(double E, Parity parity, const ModelParams& p, const GOptions& opts = {});

/// Both parities from a single pass of the recurrence.
struct GPair {
    GEvaluation even;
    GEvaluation odd;
};
GPair g_eval_both(double E, const ModelParams& p, const GOptions& opts = {});

/// Series terms (d_m - P c_m) <k,0|k,m>_+ for m = 0 .. n-1, without truncation.
std::vector<double> g_terms(double E, Parity parity, const ModelParams& p, int n, const RecurrenceOptions& opts = {});

struct ScanOptions {
    double grid_per_beta = 200.0;      // grid points per unit of beta
    int min_points_per_interval = 40;
    double root_tol = 1e-11;           // bisection width, relative to omega
    double pole_window = 10.0;         // half-width in units of the pole guard
    double exceptional_tol = 1e-8;     // |d_M| / max_{m<M} |d_m| for a lifted pole
    double exceptional_merge = 1e-6;   // relative to omega
    int jobs = 1;
    GOptions g;
};

struct Root {
    double E = 0.0;
    Parity parity = Parity::Even;
    double residual = 0.0;  // |G(E)|, or the relative d_M for an exceptional root
    bool exceptional = false;
};

/// Roots in [E_lo, E_hi] (unified frame), ascending.
std::vector<Root> scan_roots_detailed(double E_lo, double E_hi, Parity parity, const ModelParams& p, const ScanOptions& opts = {});
std::vector<double> scan_roots(double E_lo, double E_hi, Parity parity, const ModelParams& p, const ScanOptions& opts = {});

/// Both parities on a shared grid, merged and sorted.
std::vector<Root> scan_roots_both(double E_lo, double E_hi, const ModelParams& p, const ScanOptions& opts = {});

enum class LevelSource { GRoot, Exceptional, Oracle };
std::string_view to_string(LevelSource s);

struct Level {
    double E = 0.0;
    Parity parity = Parity::Even;
    LevelSource source = LevelSource::GRoot;
    double residual = 0.0;
};

struct SpectrumResult {
    std::vector<Level> levels;     // ascending, model frame
    ModelParams params;            // as given
    std::vector<double> baselines; // model frame
    double energy_shift = 0.0;
};

/// Lower edge of the default scan window, beta k - eps (unified frame).
double default_scan_floor(const ModelParams& p);

/// All levels up to E_max in the model frame of p.
SpectrumResult spectrum(const ModelParams& p, double E_max, const ScanOptions& opts = {});

/// The lowest n levels; scans up to beta (k + n) + eps.
SpectrumResult spectrum_lowest(const ModelParams& p, int n, const ScanOptions& opts = {});

}  // namespace nlrabi
