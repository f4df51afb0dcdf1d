#include "nlrabi/gfunction.hpp"

#include "nlrabi/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace nlrabi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SeriesState {
    double sum = 0.0;
    double max_term = 0.0;
    std::array<double, 5> recent{};  // |term| ring buffer
    int count = 0;

    void add(double term) {
        sum += term;
        max_term = std::max(max_term, std::abs(term));
        recent[count % recent.size()] = std::abs(term);
        ++count;
    }
    double reference() const { return std::max(std::abs(sum), max_term); }
    double tail_estimate() const {
        const double ref = reference();
        if (ref == 0.0) return 0.0;
        return *std::max_element(recent.begin(), recent.end()) / ref;
    }
};

// x * exp(log_w) without underflow of the weight alone
double scaled(double x, double log_w) {
    if (x == 0.0) return 0.0;
    return std::copysign(std::exp(std::log(std::abs(x)) + log_w), x);
}

// Evaluates the series for both parities in one forward pass.
GPair evaluate(double E, const ModelParams& p, const GOptions& opts) {
    const ModelParams u = map_realization(p).unified;
    const DerivedQuantities dq = derive(u);
    const double k = u.kval();
    const double eps = u.epsilon;
    const double guard = opts.recurrence.pole_guard * u.omega;

    // include every pole below E, plus a margin above it
    const int m_top = std::max(0, static_cast<int>(std::floor(E / dq.beta - k)));
    const int min_terms = std::min(opts.M_max, std::max(opts.min_terms, m_top + 6));

    const double log_ov0 = k * std::log1p(-dq.xi * dq.xi) - std::lgamma(2.0 * k);
    const double log_xi = std::log(dq.xi);
    const double log_step = -std::log(opts.recurrence.rescale_factor);

    SeriesState even, odd;
    double scale = 0.0, prev = 0.0, cur = 1.0;
    int m = 0;
    bool converged = false;
    for (; m < opts.M_max; ++m) {
        const double gap = baseline(dq, k, m) - E;
        if (eps != 0.0 && std::abs(gap) < guard)
            throw PoleError("G evaluated on baseline m=" + std::to_string(m), m);
        const double c = eps == 0.0 ? 0.0 : 0.5 * eps * cur / gap;
        const double log_w = scale + log_ov0 + 0.5 * (std::lgamma(2.0 * k + m) - std::lgamma(m + 1.0)) + m * log_xi;
        even.add(scaled(cur - c, log_w));
        odd.add(scaled(cur + c, log_w));

        if (m + 1 >= min_terms && even.tail_estimate() <= opts.series_tol && odd.tail_estimate() <= opts.series_tol) {
            converged = true;
            ++m;
            break;
        }

        const double t = 2.0 * (dq.beta * dq.cosh2r * (k + m) - (eps == 0.0 ? 0.0 : 0.25 * eps * eps / gap) - E)
                       / (dq.beta * dq.sinh2r * std::sqrt((m + 1.0) * (m + 2.0 * k)));
        const double next = t * cur - (m > 0 ? r_coeff(m - 1, k) * prev : 0.0);
        prev = cur;
        cur = next;
        if (std::abs(cur) > opts.recurrence.rescale_threshold) {
            cur *= opts.recurrence.rescale_factor;
            prev *= opts.recurrence.rescale_factor;
            scale += log_step;
        }
    }

    GPair out;
    out.even = {E, Parity::Even, even.sum, m, even.tail_estimate(), converged};
    out.odd = {E, Parity::Odd, odd.sum, m, odd.tail_estimate(), converged};
    return out;
}

double bisect_root(const auto& f, double a, double b, double fa, double tol) {
    for (int it = 0; it < 200 && b - a > tol; ++it) {
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

struct Interval {
    double lo, hi;
    bool pole_lo, pole_hi;
};

std::vector<double> interval_grid(const Interval& iv, double beta, const ScanOptions& opts) {
    const double width = iv.hi - iv.lo;
    const int n = std::max(opts.min_points_per_interval, static_cast<int>(std::ceil(width / beta * opts.grid_per_beta)) + 1);
    std::vector<double> pts;
    pts.reserve(n + 20);
    for (int i = 0; i < n; ++i) pts.push_back(iv.lo + width * i / (n - 1));
    // geometric points resolve roots hugging a pole
    for (int j = 2; j <= 10; ++j) {
        const double off = beta * std::pow(10.0, -j);
        if (iv.pole_lo && iv.lo + off < iv.hi) pts.push_back(iv.lo + off);
        if (iv.pole_hi && iv.hi - off > iv.lo) pts.push_back(iv.hi - off);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

std::vector<Root> scan_impl(double E_lo, double E_hi, const std::vector<Parity>& parities, const ModelParams& p,
                            const ScanOptions& opts) {
    if (!(E_hi > E_lo) || !std::isfinite(E_lo) || !std::isfinite(E_hi))
        throw std::invalid_argument("scan_roots: empty or non-finite energy range");
    const ModelParams u = map_realization(p).unified;
    const DerivedQuantities dq = derive(u);
    const double k = u.kval();
    const double guard = opts.g.recurrence.pole_guard * u.omega;
    const double window = u.epsilon == 0.0 ? 0.0 : opts.pole_window * guard;

    // split at every baseline inside the range
    std::vector<int> poles;
    for (int m = 0;; ++m) {
        const double b = baseline(dq, k, m);
        if (b >= E_hi) break;
        if (b > E_lo && u.epsilon != 0.0) poles.push_back(m);
    }
    std::vector<Interval> intervals;
    double left = E_lo;
    bool left_pole = false;
    for (int m : poles) {
        const double b = baseline(dq, k, m);
        if (b - window > left) intervals.push_back({left, b - window, left_pole, true});
        left = b + window;
        left_pole = true;
    }
    if (E_hi > left) intervals.push_back({left, E_hi, left_pole, false});

    std::vector<std::vector<double>> grids;
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (const auto& iv : intervals) {
        grids.push_back(interval_grid(iv, dq.beta, opts));
        offsets.push_back(total);
        total += grids.back().size();
    }
    std::vector<double> flat;
    flat.reserve(total);
    for (const auto& gpts : grids) flat.insert(flat.end(), gpts.begin(), gpts.end());

    std::vector<GPair> values(total);
    parallel_for(total, opts.jobs, [&](std::size_t i) {
        try {
            values[i] = evaluate(flat[i], u, opts.g);
        } catch (const PoleError&) {
            values[i].even.value = values[i].odd.value = kNaN;
        }
    });

    const double tol = opts.root_tol * u.omega;
    std::vector<Root> roots;
    for (Parity par : parities) {
        auto pick = [par](const GPair& v) { return par == Parity::Even ? v.even.value : v.odd.value; };
        auto f = [&](double E) {
            const GPair v = evaluate(E, u, opts.g);
            return pick(v);
        };
        for (std::size_t iv = 0; iv < grids.size(); ++iv) {
            const auto& gpts = grids[iv];
            for (std::size_t j = 0; j + 1 < gpts.size(); ++j) {
                const double fa = pick(values[offsets[iv] + j]);
                const double fb = pick(values[offsets[iv] + j + 1]);
                if (!std::isfinite(fa) || !std::isfinite(fb)) continue;
                if (fa == 0.0) {
                    roots.push_back({gpts[j], par, 0.0, false});
                    continue;
                }
                if ((fa < 0.0) == (fb < 0.0) || fb == 0.0) continue;
                const double E = bisect_root(f, gpts[j], gpts[j + 1], fa, tol);
                roots.push_back({E, par, std::abs(f(E)), false});
            }
        }
    }

    // lifted poles: the baseline is an eigenvalue of both parities
    for (int M : poles) {
        if (M < 1) continue;
        const double Eb = baseline(dq, k, M);
        const CoefficientSequence seq = forward_d(Eb, u, M, opts.g.recurrence);
        if (seq.size() <= M) continue;
        double ref = -std::numeric_limits<double>::infinity();
        for (int m = 0; m < M; ++m) ref = std::max(ref, seq.log_abs_d(m));
        const double rel = seq.d[M] == 0.0 ? 0.0 : std::exp(seq.log_abs_d(M) - ref);
        if (rel > opts.exceptional_tol) continue;
        for (Parity par : parities) {
            std::erase_if(roots, [&](const Root& r) {
                return r.parity == par && !r.exceptional && std::abs(r.E - Eb) <= opts.exceptional_merge * u.omega;
            });
            roots.push_back({Eb, par, rel, true});
        }
    }

    // eps = 0: every baseline is a doubly degenerate level with d_0 = 0, which
    // the d_0 = 1 series cannot represent
    if (u.epsilon == 0.0) {
        for (int m = 0; baseline(dq, k, m) < E_hi; ++m) {
            const double Eb = baseline(dq, k, m);
            if (Eb < E_lo) continue;
            for (Parity par : parities) roots.push_back({Eb, par, 0.0, true});
        }
    }

    std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
        if (a.E != b.E) return a.E < b.E;
        return static_cast<int>(a.parity) > static_cast<int>(b.parity);
    });
    return roots;
}

}  // namespace

double log_overlap_coeff(double k, int m, double xi) {
    if (m < 0) throw std::invalid_argument("overlap_coeff: m must be >= 0");
    if (!(xi > 0.0 && xi < 1.0)) throw DomainError("overlap_coeff: xi must lie in (0, 1)");
    return k * std::log1p(-xi * xi) + 0.5 * (std::lgamma(2.0 * k + m) - std::lgamma(m + 1.0) - std::lgamma(2.0 * k))
         + m * std::log(xi);
}

double overlap_coeff(double k, int m, double xi) { return std::exp(log_overlap_coeff(k, m, xi)); }

GEvaluation g_eval(double E, Parity parity, const ModelParams& p, const GOptions& opts) {
    const GPair both = evaluate(E, p, opts);
    return parity == Parity::Even ? both.even : both.odd;
}

GPair g_eval_both(double E, const ModelParams& p, const GOptions& opts) { return evaluate(E, p, opts); }

std::vector<double> g_terms(double E, Parity parity, const ModelParams& p, int n, const RecurrenceOptions& opts) {
    const CoefficientSequence seq = run_recurrence(E, p, std::max(n - 1, 1), opts);
    const DerivedQuantities dq = derive(seq.params);
    const double k = seq.k();
    std::vector<double> out;
    for (int m = 0; m < n && m < seq.size(); ++m) {
        out.push_back(scaled(seq.d[m] - sign_of(parity) * seq.c[m], seq.log_scale[m] + log_overlap_coeff(k, m, dq.xi)));
    }
    return out;
}

std::vector<Root> scan_roots_detailed(double E_lo, double E_hi, Parity parity, const ModelParams& p, const ScanOptions& opts) {
    return scan_impl(E_lo, E_hi, {parity}, p, opts);
}

std::vector<double> scan_roots(double E_lo, double E_hi, Parity parity, const ModelParams& p, const ScanOptions& opts) {
    std::vector<double> out;
    for (const Root& r : scan_roots_detailed(E_lo, E_hi, parity, p, opts)) out.push_back(r.E);
    return out;
}

std::vector<Root> scan_roots_both(double E_lo, double E_hi, const ModelParams& p, const ScanOptions& opts) {
    return scan_impl(E_lo, E_hi, {Parity::Even, Parity::Odd}, p, opts);
}

std::string_view to_string(LevelSource s) {
    switch (s) {
    case LevelSource::GRoot: return "groot";
    case LevelSource::Exceptional: return "exceptional";
    case LevelSource::Oracle: return "oracle";
    }
    return "unknown";
}

double default_scan_floor(const ModelParams& p) {
    const ModelParams u = map_realization(p).unified;
    return derive(u).beta * u.kval() - u.epsilon;
}

SpectrumResult spectrum(const ModelParams& p, double E_max, const ScanOptions& opts) {
    const MappedParams mp = map_realization(p);
    const DerivedQuantities dq = derive(mp.unified);
    const double k = mp.unified.kval();
    const double lo = default_scan_floor(p);
    const double hi = E_max + mp.energy_shift;

    SpectrumResult out;
    out.params = p;
    out.energy_shift = mp.energy_shift;
    if (hi <= lo) return out;
    for (const Root& r : scan_roots_both(lo, hi, mp.unified, opts))
        out.levels.push_back({r.E - mp.energy_shift, r.parity, r.exceptional ? LevelSource::Exceptional : LevelSource::GRoot,
                              r.residual});
    for (int m = 0; baseline(dq, k, m) <= hi; ++m) out.baselines.push_back(baseline(dq, k, m) - mp.energy_shift);
    return out;
}

SpectrumResult spectrum_lowest(const ModelParams& p, int n, const ScanOptions& opts) {
    if (n < 1) throw std::invalid_argument("spectrum_lowest: n must be >= 1");
    const MappedParams mp = map_realization(p);
    const DerivedQuantities dq = derive(mp.unified);
    const double hi = baseline(dq, mp.unified.kval(), n) + mp.unified.epsilon;
    SpectrumResult out = spectrum(p, hi - mp.energy_shift, opts);
    if (static_cast<int>(out.levels.size()) > n) out.levels.resize(n);
    return out;
}

}  // namespace nlrabi
