#include "nlrabi/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nlrabi {

namespace {

struct Context {
    ModelParams unified;
    DerivedQuantities dq;
    double k;
    double eps;
    double guard;
};

Context make_context(const ModelParams& p, const RecurrenceOptions& opts) {
    Context ctx;
    ctx.unified = map_realization(p).unified;
    ctx.dq = derive(ctx.unified);
    ctx.k = ctx.unified.kval();
    ctx.eps = ctx.unified.epsilon;
    ctx.guard = opts.pole_guard * ctx.unified.omega;
    return ctx;
}

void check_pole(const Context& ctx, int m, double E) {
    if (ctx.eps == 0.0) return;
    const double gap = baseline(ctx.dq, ctx.k, m) - E;
    if (std::abs(gap) < ctx.guard)
        throw PoleError("energy " + std::to_string(E) + " hits baseline m=" + std::to_string(m), m);
}

double t_raw(const Context& ctx, int m, double E) {
    check_pole(ctx, m, E);
    const double k = ctx.k;
    const DerivedQuantities& dq = ctx.dq;
    const double gap = baseline(dq, k, m) - E;
    const double pole_term = ctx.eps == 0.0 ? 0.0 : 0.25 * ctx.eps * ctx.eps / gap;
    const double num = 2.0 * (dq.beta * dq.cosh2r * (k + m) - pole_term - E);
    return num / (dq.beta * dq.sinh2r * std::sqrt((m + 1.0) * (m + 2.0 * k)));
}

double c_from_d(const Context& ctx, int m, double E, double d) {
    if (ctx.eps == 0.0) return 0.0;
    check_pole(ctx, m, E);
    return 0.5 * ctx.eps * d / (baseline(ctx.dq, ctx.k, m) - E);
}

CoefficientSequence forward_impl(const Context& ctx, double E, int m_max, const RecurrenceOptions& opts) {
    if (m_max < 1) throw std::invalid_argument("recurrence needs m_max >= 1");
    CoefficientSequence seq;
    seq.E = E;
    seq.params = ctx.unified;
    seq.d.reserve(m_max + 1);
    seq.log_scale.reserve(m_max + 1);

    double scale = 0.0;
    double prev = 0.0;
    double cur = 1.0;
    seq.d.push_back(cur);
    seq.log_scale.push_back(scale);
    const double log_step = -std::log(opts.rescale_factor);

    for (int m = 0; m < m_max; ++m) {
        const double next = t_raw(ctx, m, E) * cur - (m > 0 ? r_coeff(m - 1, ctx.k) * prev : 0.0);
        if (!std::isfinite(next)) {
            seq.truncated = true;
            break;
        }
        prev = cur;
        cur = next;
        seq.d.push_back(cur);
        seq.log_scale.push_back(scale);
        if (std::abs(cur) > opts.rescale_threshold) {
            cur *= opts.rescale_factor;
            prev *= opts.rescale_factor;
            scale += log_step;
        }
    }
    return seq;
}

void fill_c(const Context& ctx, CoefficientSequence& seq) {
    seq.c.resize(seq.d.size());
    for (int m = 0; m < seq.size(); ++m) seq.c[m] = c_from_d(ctx, m, seq.E, seq.d[m]);
}

}  // namespace

double CoefficientSequence::d_value(int m) const { return d.at(m) * std::exp(log_scale.at(m)); }

double CoefficientSequence::c_value(int m) const { return c.at(m) * std::exp(log_scale.at(m)); }

double CoefficientSequence::log_abs_d(int m) const { return std::log(std::abs(d.at(m))) + log_scale.at(m); }

double pole_guard_abs(const ModelParams& p, const RecurrenceOptions& opts) {
    return opts.pole_guard * map_realization(p).unified.omega;
}

double t_coeff(int m, double E, const ModelParams& p, const DerivedQuantities& dq, const RecurrenceOptions& opts) {
    if (m < 0) throw std::invalid_argument("t_coeff: m must be >= 0");
    Context ctx;
    ctx.unified = map_realization(p).unified;
    ctx.dq = dq;
    ctx.k = ctx.unified.kval();
    ctx.eps = ctx.unified.epsilon;
    ctx.guard = opts.pole_guard * ctx.unified.omega;
    return t_raw(ctx, m, E);
}

double r_coeff(int m, double k) {
    const double a = (m + 1.0) * (m + 2.0 * k);
    const double b = (m + 2.0) * (m + 2.0 * k + 1.0);
    return std::sqrt(a / b);
}

CoefficientSequence forward_d(double E, const ModelParams& p, int m_max, const RecurrenceOptions& opts) {
    return forward_impl(make_context(p, opts), E, m_max, opts);
}

CoefficientSequence run_recurrence(double E, const ModelParams& p, int m_max, const RecurrenceOptions& opts) {
    const Context ctx = make_context(p, opts);
    for (int m = 0; m <= m_max; ++m) check_pole(ctx, m, E);
    CoefficientSequence seq = forward_impl(ctx, E, m_max, opts);
    fill_c(ctx, seq);
    return seq;
}

CoefficientSequence minimal_solution(double E, const ModelParams& p, int m_max, const RecurrenceOptions& opts) {
    if (m_max < 1) throw std::invalid_argument("minimal_solution needs m_max >= 1");
    const Context ctx = make_context(p, opts);
    for (int m = 0; m <= m_max; ++m) check_pole(ctx, m, E);

    // Backward iteration damps the dominant component by (2g/omega)^(2 n)
    // over n steps; start far enough out for a 1e-17 contamination.
    const double extra = std::ceil(std::log(1e17) / (2.0 * ctx.dq.gamma_d)) + 20.0;
    const int start = m_max + static_cast<int>(std::min(extra, 200000.0));

    // Poles beyond m_max only enter through T_m; step around an exact hit.
    auto t_safe = [&](int m) {
        const double gap = baseline(ctx.dq, ctx.k, m) - E;
        if (ctx.eps != 0.0 && std::abs(gap) < ctx.guard) return t_raw(ctx, m, E + 2.0 * ctx.guard);
        return t_raw(ctx, m, E);
    };

    std::vector<double> mant(m_max + 1);
    std::vector<double> lscale(m_max + 1);
    const double log_step = -std::log(opts.rescale_factor);
    double scale = 0.0;
    double upper = 0.0;  // d_{m+1}
    double cur = 1.0;    // d_m
    for (int m = start; m >= 1; --m) {
        if (m <= m_max) {
            mant[m] = cur;
            lscale[m] = scale;
        }
        const double lower = (t_safe(m) * cur - upper) / r_coeff(m - 1, ctx.k);
        upper = cur;
        cur = lower;
        if (std::abs(cur) > opts.rescale_threshold) {
            cur *= opts.rescale_factor;
            upper *= opts.rescale_factor;
            scale += log_step;
        }
    }
    mant[0] = cur;
    lscale[0] = scale;

    if (cur == 0.0 || !std::isfinite(cur)) throw std::runtime_error("minimal_solution: degenerate d_0");
    const double shift = lscale[0] + std::log(std::abs(cur));
    const double sgn = cur < 0.0 ? -1.0 : 1.0;

    CoefficientSequence seq;
    seq.E = E;
    seq.params = ctx.unified;
    seq.d.resize(m_max + 1);
    seq.log_scale.resize(m_max + 1);
    for (int m = 0; m <= m_max; ++m) {
        // keep mantissas O(1) so downstream exp() stays in range
        const double la = std::log(std::abs(mant[m])) + lscale[m] - shift;
        seq.d[m] = mant[m] == 0.0 ? 0.0 : sgn * std::copysign(1.0, mant[m]);
        seq.log_scale[m] = mant[m] == 0.0 ? 0.0 : la;
    }
    fill_c(ctx, seq);
    return seq;
}

double fit_decay_rate(const CoefficientSequence& seq, int m_lo, int m_hi) {
    if (m_lo < 0 || m_hi >= seq.size()) throw DomainError("decay window outside the sequence");
    if (m_hi - m_lo < 10) throw DomainError("decay window shorter than 10 steps");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = m_hi - m_lo + 1;
    for (int m = m_lo; m <= m_hi; ++m) {
        if (seq.d[m] == 0.0) throw DomainError("decay window contains d_m = 0");
        const double y = seq.log_abs_d(m);
        sx += m;
        sy += y;
        sxx += double(m) * m;
        sxy += m * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

double c_relation_residual(const CoefficientSequence& seq) {
    const ModelParams& p = seq.params;
    const DerivedQuantities dq = derive(p);
    const double k = p.kval();
    double worst = 0.0;
    for (int m = 0; m < static_cast<int>(seq.c.size()); ++m) {
        const double a = seq.c[m] * (baseline(dq, k, m) - seq.E);
        const double b = 0.5 * p.epsilon * seq.d[m];
        const double ref = std::max(std::abs(a), std::abs(b));
        if (ref > 0.0) worst = std::max(worst, std::abs(a - b) / ref);
    }
    return worst;
}

std::vector<double> row_residuals(const CoefficientSequence& seq) {
    const ModelParams& p = seq.params;
    const DerivedQuantities dq = derive(p);
    const double k = p.kval();
    const double E = seq.E;
    const bool have_c = seq.c.size() == seq.d.size();

    std::vector<double> out;
    for (int m = 0; m + 1 < seq.size(); ++m) {
        // express neighbours in the log scale of index m
        const double dm = seq.d[m];
        const double up = seq.d[m + 1] * std::exp(seq.log_scale[m + 1] - seq.log_scale[m]);
        const double down = m > 0 ? seq.d[m - 1] * std::exp(seq.log_scale[m - 1] - seq.log_scale[m]) : 0.0;
        const double cm = have_c ? seq.c[m] : 0.5 * p.epsilon * dm / (baseline(dq, k, m) - E);

        const double t1 = -0.5 * p.epsilon * cm;
        const double t2 = dq.beta * dq.cosh2r * (k + m) * dm;
        const double t3 = -0.5 * dq.beta * dq.sinh2r * std::sqrt(m * (m + 2.0 * k - 1.0)) * down;
        const double t4 = -0.5 * dq.beta * dq.sinh2r * std::sqrt((m + 1.0) * (m + 2.0 * k)) * up;
        const double t5 = -E * dm;
        const double ref = std::max({std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4), std::abs(t5)});
        out.push_back(ref > 0.0 ? std::abs(t1 + t2 + t3 + t4 + t5) / ref : 0.0);
    }
    return out;
}

}  // namespace nlrabi
