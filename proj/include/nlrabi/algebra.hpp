// algebra.hpp - model parameters, su(1,1) realizations and derived quantities
//
// The unified Hamiltonian is
//
//     H = (eps/2) sigma_z + omega K0 + g sigma_x (K+ + K-)
//
// acting on one irreducible representation |k, m> of su(1,1).  The two-photon,
// two-mode and intensity-dependent Rabi models are realizations of the same
// operator up to a parameter rescaling and a constant energy shift.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nlrabi {

/// Raised for parameters outside the regime an operation supports.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a trial energy collides with a baseline beta (k + m).
class PoleError : public std::runtime_error {
public:
    PoleError(const std::string& what, int index) : std::runtime_error(what), index_(index) {}
    int index() const noexcept { return index_; }

private:
    int index_;
};

// ----------------------------------------------------------------------------
// Exact rational Bargmann index

struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend constexpr bool operator==(const Rational&, const Rational&) = default;
};

/// Reduces to lowest terms with a positive denominator.
Rational make_rational(std::int64_t num, std::int64_t den);

/// Parses "p/q", an integer, or a finite decimal such as "0.25".
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& q);

// ----------------------------------------------------------------------------

enum class Realization { Unified, TwoPhoton, TwoMode, IntensityDependent };

std::string_view to_string(Realization r);
Realization parse_realization(std::string_view text);

enum class Parity : int { Even = +1, Odd = -1 };

constexpr double sign_of(Parity p) { return p == Parity::Even ? 1.0 : -1.0; }
std::string_view to_string(Parity p);
Parity parse_parity(std::string_view text);

/// Physical inputs. For a non-unified realization, omega and g are the
/// model's native frequency and coupling (omega_2p, g_2p, ...).
struct ModelParams {
    double epsilon = 1.0;
    double omega = 1.0;
    double g = 0.0;
    Rational k{1, 2};
    Realization realization = Realization::Unified;

    double kval() const { return k.value(); }
};

/// Throws DomainError if k is not admissible for the realization, or if
/// epsilon < 0, omega <= 0 or g < 0.
void validate(const ModelParams& p);

struct MappedParams {
    ModelParams unified;
    double energy_shift = 0.0;  // E_model = E_unified - energy_shift
};

/// Converts a realization to the unified frame.
MappedParams map_realization(const ModelParams& p);

/// Quantities that depend only on (omega, g) of the unified frame.
struct DerivedQuantities {
    double beta = 0.0;     // sqrt(omega^2 - 4 g^2)
    double r = 0.0;        // artanh(2g / omega)
    double cosh2r = 0.0;
    double sinh2r = 0.0;
    double xi = 0.0;       // tanh(r / 2)
    double gamma_d = 0.0;  // ln(omega / 2g)
};

/// Requires 0 < g < omega/2 in the unified frame; throws DomainError otherwise.
DerivedQuantities derive(const ModelParams& p);

/// Baseline energy beta (k + m) in the unified frame.
inline double baseline(const DerivedQuantities& dq, double k, int m) { return dq.beta * (k + m); }

struct BasisLabel {
    double k = 0.5;
    int m = 0;
};

struct Su11Elements {
    double k0_diag;      // <k,m| K0 |k,m>
    double kplus_coeff;  // <k,m+1| K+ |k,m>
    double kminus_coeff; // <k,m-1| K- |k,m>, zero at m = 0
};

Su11Elements su11_elements(const BasisLabel& label);

}  // namespace nlrabi
