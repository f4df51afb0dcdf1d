// cli.hpp - command-line front end: run configuration, subcommands, encoders

#pragma once

#include "nlrabi/algebra.hpp"
#include "nlrabi/oracle.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace nlrabi::cli {

inline constexpr const char* kToolName = "nlrabi";
inline constexpr const char* kToolVersion = "0.1.0";

enum class Format { Csv, Json };

/// "a:b:n" - n evenly spaced points from a to b inclusive.
struct Range {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
    double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

/// "a..b" or a single integer.
struct IntRange {
    int lo = 1;
    int hi = 1;
};

Range parse_range(std::string_view text);
IntRange parse_int_range(std::string_view text);

struct RunConfig {
    std::string command;
    double epsilon = 1.0;
    double omega = 1.0;
    double g = 0.4;
    std::optional<Range> g_range;
    Rational k{1, 2};
    Realization realization = Realization::Unified;
    std::string parity = "both";
    std::optional<Range> E_range;
    IntRange M{1, 3};
    int N = 400;
    std::optional<double> tol;
    Format format = Format::Csv;
    std::string out;
    int jobs = 1;

    int n_levels = 10;
    std::optional<double> E_max;
    std::optional<double> E;          // coeffs: explicit energy
    std::string select = "lowest-odd";
    std::string method;               // coeffs: forward | minimal (default by E source)
    int m_max = 100;
    int fit_lo = 20;
    int fit_hi = 60;
    SpinBasis basis = SpinBasis::SigmaZ;
    int grid = 400;                   // isolated: g grid points
    bool certify = true;              // diag: N vs 2N comparison

    ModelParams params() const;
};

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct Document {
    std::string command;
    std::vector<std::pair<std::string, std::string>> parameters;  // header, in order
    std::vector<std::pair<std::string, double>> summary;
    Table table;
    std::vector<std::pair<std::string, Table>> companions;  // e.g. the gfun root list
    std::vector<std::string> warnings;
};

Document cmd_isolated(const RunConfig& cfg);
Document cmd_spectrum(const RunConfig& cfg);
Document cmd_gfun(const RunConfig& cfg);
Document cmd_coeffs(const RunConfig& cfg);
Document cmd_diag(const RunConfig& cfg);

Document run_command(const RunConfig& cfg);

/// Fixed-precision writers.  Files use 17 significant digits, console tables 10.
void write_csv(const Document& doc, std::ostream& os, int digits = 17);
void write_csv_table(const Document& doc, const Table& table, std::ostream& os, int digits = 17);
void write_json(const Document& doc, std::ostream& os);
void write_console(const Document& doc, std::ostream& os);

std::string format_number(double x, int digits);

/// Full command-line entry point; returns the process exit code
/// (0 success, 1 usage error, 2 numerical failure).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nlrabi::cli
