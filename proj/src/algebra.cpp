#include "nlrabi/algebra.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace nlrabi {

namespace {

std::int64_t parse_int(std::string_view s, std::string_view whole) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw std::invalid_argument("invalid rational '" + std::string(whole) + "'");
    return v;
}

}  // namespace

Rational make_rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t d = std::gcd(num < 0 ? -num : num, den);
    return {num / d, den / d};
}

Rational parse_rational(std::string_view text) {
    if (auto slash = text.find('/'); slash != std::string_view::npos)
        return make_rational(parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text));

    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        std::string_view ip = text.substr(0, dot);
        std::string_view fp = text.substr(dot + 1);
        if (fp.size() > 12) throw std::invalid_argument("too many decimals in '" + std::string(text) + "'");
        bool neg = !ip.empty() && ip.front() == '-';
        if (neg || (!ip.empty() && ip.front() == '+')) ip.remove_prefix(1);
        std::int64_t den = 1;
        for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
        std::int64_t whole = ip.empty() ? 0 : parse_int(ip, text);
        std::int64_t frac = fp.empty() ? 0 : parse_int(fp, text);
        if (ip.empty() && fp.empty()) throw std::invalid_argument("invalid rational '" + std::string(text) + "'");
        std::int64_t num = whole * den + frac;
        return make_rational(neg ? -num : num, den);
    }
    return make_rational(parse_int(text, text), 1);
}

std::string to_string(const Rational& q) {
    if (q.den == 1) return std::to_string(q.num);
    return std::to_string(q.num) + "/" + std::to_string(q.den);
}

std::string_view to_string(Realization r) {
    switch (r) {
    case Realization::Unified: return "unified";
    case Realization::TwoPhoton: return "two-photon";
    case Realization::TwoMode: return "two-mode";
    case Realization::IntensityDependent: return "intensity-dependent";
    }
    return "unknown";
}

Realization parse_realization(std::string_view text) {
    if (text == "unified") return Realization::Unified;
    if (text == "two-photon" || text == "2p") return Realization::TwoPhoton;
    if (text == "two-mode" || text == "2m") return Realization::TwoMode;
    if (text == "intensity-dependent" || text == "intensity" || text == "hp") return Realization::IntensityDependent;
    throw std::invalid_argument("unknown realization '" + std::string(text) + "'");
}

std::string_view to_string(Parity p) { return p == Parity::Even ? "even" : "odd"; }

Parity parse_parity(std::string_view text) {
    if (text == "even" || text == "+1" || text == "+") return Parity::Even;
    if (text == "odd" || text == "-1" || text == "-") return Parity::Odd;
    throw std::invalid_argument("unknown parity '" + std::string(text) + "'");
}

void validate(const ModelParams& p) {
    if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon)) throw DomainError("epsilon must be finite and >= 0");
    if (!(p.omega > 0.0) || !std::isfinite(p.omega)) throw DomainError("omega must be finite and > 0");
    if (!(p.g >= 0.0) || !std::isfinite(p.g)) throw DomainError("g must be finite and >= 0");
    if (p.k.num <= 0 || p.k.den <= 0) throw DomainError("Bargmann index must be positive");

    const Rational k = make_rational(p.k.num, p.k.den);
    switch (p.realization) {
    case Realization::Unified:
        break;
    case Realization::TwoPhoton:
        if (!(k == Rational{1, 4} || k == Rational{3, 4}))
            throw DomainError("two-photon realization requires k = 1/4 or 3/4, got " + to_string(k));
        break;
    case Realization::TwoMode:
        if (k.den > 2) throw DomainError("two-mode realization requires k in {1/2, 1, 3/2, ...}, got " + to_string(k));
        break;
    case Realization::IntensityDependent:
        if (2 * k.num < k.den) throw DomainError("intensity-dependent realization requires 2k - 1 >= 0, got " + to_string(k));
        break;
    }
}

MappedParams map_realization(const ModelParams& p) {
    validate(p);
    MappedParams out{p, 0.0};
    out.unified.realization = Realization::Unified;
    switch (p.realization) {
    case Realization::Unified:
        break;
    case Realization::TwoPhoton:
        out.unified.omega = 2.0 * p.omega;
        out.unified.g = 2.0 * p.g;
        out.energy_shift = 0.5 * p.omega;
        break;
    case Realization::TwoMode:
        out.unified.omega = 2.0 * p.omega;
        out.energy_shift = p.omega;
        break;
    case Realization::IntensityDependent:
        out.energy_shift = p.kval() * p.omega;
        break;
    }
    return out;
}

DerivedQuantities derive(const ModelParams& p) {
    const ModelParams u = map_realization(p).unified;
    if (!(u.g > 0.0)) throw DomainError("coupling must satisfy g > 0");
    if (!(2.0 * u.g < u.omega)) throw DomainError("coupling must satisfy g < omega/2 (spectral collapse)");

    DerivedQuantities dq;
    const double t = 2.0 * u.g / u.omega;
    dq.beta = std::sqrt((u.omega - 2.0 * u.g) * (u.omega + 2.0 * u.g));
    dq.r = std::atanh(t);
    dq.cosh2r = std::cosh(2.0 * dq.r);
    dq.sinh2r = std::sinh(2.0 * dq.r);
    dq.xi = std::tanh(0.5 * dq.r);
    dq.gamma_d = -std::log(t);
    return dq;
}

Su11Elements su11_elements(const BasisLabel& label) {
    const double k = label.k;
    const double m = label.m;
    return {k + m, std::sqrt((m + 1.0) * (m + 2.0 * k)), label.m == 0 ? 0.0 : std::sqrt(m * (m + 2.0 * k - 1.0))};
}

}  // namespace nlrabi
