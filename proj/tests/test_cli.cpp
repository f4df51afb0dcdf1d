#include "reference_data.hpp"

#include "nlrabi/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nlrabi;
using namespace nlrabi::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "nlrabi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "nlrabi_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Data rows of a CSV file, split on commas; header comments dropped.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("range parsing") {
    const Range r = parse_range("0.01:0.49:200");
    CHECK(r.n == 200);
    CHECK(r.at(0) == 0.01);
    CHECK(r.at(199) == doctest::Approx(0.49));
    CHECK(parse_range("1:1:1").at(0) == 1.0);
    CHECK_THROWS(parse_range("0:1"));
    CHECK_THROWS(parse_range("0:1:0"));
    CHECK_THROWS(parse_range("1:0:5"));
    CHECK_THROWS(parse_range("a:1:5"));
    const IntRange m = parse_int_range("1..3");
    CHECK(m.lo == 1);
    CHECK(m.hi == 3);
    CHECK(parse_int_range("4").hi == 4);
    CHECK_THROWS(parse_int_range("3..1"));
    CHECK_THROWS(parse_int_range("x"));
}

TEST_CASE("isolated reproduces the k = 1/4 table") {
    const fs::path out = scratch("iso.csv");
    const Outcome o = invoke({"isolated", "--k", "1/4", "--M", "1..3", "--epsilon", "1", "--omega", "1", "--out", out});
    REQUIRE(o.code == 0);
    const auto rows = csv_rows(out);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(std::stod(rows[i][2]) - testdata::kIsolatedTable[i].g) < 1e-8);
        CHECK(std::abs(std::stod(rows[i][3]) - testdata::kIsolatedTable[i].E) < 1e-8);
    }
}

TEST_CASE("isolated for k = 1/2, M = 1") {
    const fs::path out = scratch("iso12.csv");
    REQUIRE(invoke({"isolated", "--k", "1/2", "--M", "1", "--out", out}).code == 0);
    const auto rows = csv_rows(out);
    REQUIRE(rows.size() == 1);
    CHECK(std::stod(rows[0][2]) == doctest::Approx(0.3061862178).epsilon(1e-10));
}

TEST_CASE("isolated without an M = 1 solution warns") {
    const fs::path out = scratch("iso_empty.csv");
    const Outcome o = invoke({"isolated", "--k", "1/4", "--M", "1", "--epsilon", "2.1", "--omega", "1", "--out", out});
    CHECK(o.code == 0);
    CHECK(csv_rows(out).empty());
    CHECK(o.err.find("warning") != std::string::npos);
}

TEST_CASE("every file starts with a header") {
    const fs::path out = scratch("hdr.csv");
    REQUIRE(invoke({"diag", "--g", "0.3", "--N", "60", "--n-levels", "4", "--out", out}).code == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("# nlrabi 0.1.0 diag\n", 0) == 0);
    CHECK(text.find("# N=60") != std::string::npos);
    CHECK(text.find("# convergence_tol=1e-09") != std::string::npos);
    CHECK(text.find("# epsilon=1") != std::string::npos);
}

TEST_CASE("output is byte-identical across runs and thread counts") {
    const fs::path a = scratch("det_a.csv"), b = scratch("det_b.csv");
    REQUIRE(invoke({"spectrum", "--k", "1/2", "--g-range", "0.1:0.45:8", "--n-levels", "6", "--out", a}).code == 0);
    REQUIRE(invoke({"spectrum", "--k", "1/2", "--g-range", "0.1:0.45:8", "--n-levels", "6", "--jobs", "4", "--out", b})
                .code == 0);
    CHECK(slurp(a) == slurp(b));
    REQUIRE(invoke({"spectrum", "--k", "1/2", "--g-range", "0.1:0.45:8", "--n-levels", "6", "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("CSV and JSON carry the same numbers") {
    const fs::path c = scratch("same.csv"), j = scratch("same.json");
    const std::vector<std::string> base{"gfun", "--g", "0.4", "--E-range", "-0.2:1.4:33"};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> v = base;
        v.insert(v.end(), extra.begin(), extra.end());
        return v;
    };
    REQUIRE(invoke(with({"--out", c})).code == 0);
    REQUIRE(invoke(with({"--format", "json", "--out", j})).code == 0);
    const auto rows = csv_rows(c);
    const auto doc = nlohmann::json::parse(slurp(j));
    REQUIRE(doc["rows"].size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t col = 0; col < rows[i].size(); ++col) {
            const auto& v = doc["rows"][i][col];
            if (rows[i][col].empty()) {
                CHECK(v.is_null());
            } else {
                CHECK(std::stod(rows[i][col]) == v.get<double>());
            }
        }
    }
    const auto roots = csv_rows(scratch("same.roots.csv"));
    REQUIRE(doc["tables"]["roots"]["rows"].size() == roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i)
        CHECK(std::stod(roots[i][0]) == doc["tables"]["roots"]["rows"][i][0].get<double>());
}

TEST_CASE("gfun roots match the diagonalization") {
    const fs::path out = scratch("gfun.json");
    REQUIRE(invoke({"gfun", "--g", "0.4", "--k", "1/2", "--format", "json", "--out", out}).code == 0);
    const auto doc = nlohmann::json::parse(slurp(out));
    const auto& roots = doc["tables"]["roots"]["rows"];
    const SpectrumResult ora = oracle_spectrum(testdata::unified(0.4, {1, 2}), 400, 10);
    REQUIRE(roots.size() >= 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(std::abs(roots[i][0].get<double>() - ora.levels[i].E) <= 1e-7);
        CHECK(roots[i][1].get<std::string>() == std::string(to_string(ora.levels[i].parity)));
    }
}

TEST_CASE("gfun masks baseline windows and honors parity") {
    const fs::path out = scratch("mask.csv");
    // beta = 0.6, k = 1/2: baselines at 0.3, 0.9, 1.5
    REQUIRE(invoke({"gfun", "--g", "0.4", "--E-range", "0:1.5:16", "--parity", "even", "--out", out}).code == 0);
    const auto rows = csv_rows(out);
    REQUIRE(rows.size() == 16);
    for (const auto& r : rows) {
        REQUIRE(r.size() == 3);
        const double E = std::stod(r[0]);
        const bool pole = std::abs(E - 0.3) < 1e-9 || std::abs(E - 0.9) < 1e-9 || std::abs(E - 1.5) < 1e-9;
        CHECK(r[2] == (pole ? "1" : "0"));
        CHECK(r[1].empty() == pole);
    }
    CHECK(slurp(out).find("G_odd") == std::string::npos);
}

TEST_CASE("coeffs decay slope at the lowest odd level") {
    const fs::path out = scratch("coeffs.json");
    REQUIRE(invoke({"coeffs", "--g", "0.4", "--format", "json", "--out", out}).code == 0);
    const auto doc = nlohmann::json::parse(slurp(out));
    CHECK(doc["parameters"]["method"] == "minimal");
    CHECK(doc["summary"]["reference_slope"].get<double>() == doctest::Approx(-0.2231435513));
    CHECK(doc["summary"]["fitted_slope"].get<double>() == doctest::Approx(-0.2231).epsilon(0.025));
}

TEST_CASE("coeffs: weaker coupling decays faster") {
    auto gamma = [](const std::string& g) {
        const fs::path out = scratch("coeffs_" + g + ".json");
        REQUIRE(invoke({"coeffs", "--g", g, "--format", "json", "--out", out}).code == 0);
        return nlohmann::json::parse(slurp(out))["summary"]["gamma_fit"].get<double>();
    };
    CHECK(gamma("0.1") > gamma("0.45"));
}

TEST_CASE("coeffs: displaced energy turns to growth") {
    const SpectrumResult s = spectrum_lowest(testdata::unified(0.4, {1, 2}), 4);
    double E = 0.0;
    for (const Level& l : s.levels)
        if (l.parity == Parity::Odd) {
            E = l.E;
            break;
        }
    const fs::path out = scratch("coeffs_off.json");
    REQUIRE(invoke({"coeffs", "--g", "0.4", "--E", format_number(E + 1e-3, 17), "--m-max", "400", "--fit-lo", "200",
                    "--fit-hi", "400", "--format", "json", "--out", out})
                .code == 0);
    const auto doc = nlohmann::json::parse(slurp(out));
    CHECK(doc["parameters"]["method"] == "forward");
    CHECK(doc["summary"]["fitted_slope"].get<double>() == doctest::Approx(std::log(1.25)).epsilon(0.05));
}

TEST_CASE("spectrum in the two-photon frame is shifted") {
    const fs::path u = scratch("sp_u.csv"), t = scratch("sp_2p.csv");
    REQUIRE(invoke({"spectrum", "--k", "1/4", "--g-range", "0.1:0.4:4", "--n-levels", "5", "--out", u}).code == 0);
    REQUIRE(invoke({"spectrum", "--k", "1/4", "--realization", "two-photon", "--omega", "0.5", "--g-range", "0.05:0.2:4",
                    "--n-levels", "5", "--out", t})
                .code == 0);
    const auto a = csv_rows(u), b = csv_rows(t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::stod(b[i][1]) == doctest::Approx(std::stod(a[i][1]) - 0.25).epsilon(1e-12));
        CHECK(b[i][2] == a[i][2]);
    }
}

TEST_CASE("diag reports non-convergence near collapse") {
    const Outcome o = invoke({"diag", "--g", "0.495", "--N", "40", "--n-levels", "10"});
    CHECK(o.code == 0);
    CHECK(o.err.find("not converged") != std::string::npos);
}

TEST_CASE("console output uses ten digits") {
    const Outcome o = invoke({"diag", "--g", "0.4", "--N", "100", "--n-levels", "2", "--no-certify"});
    REQUIRE(o.code == 0);
    CHECK(o.out.find("0.3899113838") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"bogus"}).code == 1);
    CHECK(invoke({"spectrum"}).code == 1);
    CHECK(invoke({"gfun", "--g", "0.7"}).code == 1);
    CHECK(invoke({"isolated", "--k", "abc"}).code == 1);
    CHECK(invoke({"isolated", "--M", "3..1"}).code == 1);
    CHECK(invoke({"diag", "--realization", "two-photon", "--k", "1/2"}).code == 1);
    CHECK(invoke({"gfun", "--format", "xml"}).code == 1);
    CHECK(invoke({"isolated", "--tol", "-1"}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
    // a trial energy on a baseline has no finite coefficients
    CHECK(invoke({"coeffs", "--g", "0.4", "--E", "0.3"}).code == 2);
}

TEST_CASE("config file with flag precedence") {
    const fs::path cfg = scratch("run.cfg");
    {
        std::ofstream f(cfg);
        f << "# sample\nk = 1/4\nM = 1..2\nepsilon=1\n";
    }
    const fs::path a = scratch("cfg_a.csv"), b = scratch("cfg_b.csv");
    REQUIRE(invoke({"isolated", "--config", cfg, "--out", a}).code == 0);
    CHECK(csv_rows(a).size() == 3);
    REQUIRE(invoke({"isolated", "--config", cfg, "--M", "1", "--out", b}).code == 0);
    CHECK(csv_rows(b).size() == 1);
    CHECK(invoke({"isolated", "--config", scratch("missing.cfg")}).code == 1);
}

TEST_CASE("spectrum crossings at the isolated couplings") {
    const fs::path iso = scratch("cross_iso.csv");
    REQUIRE(invoke({"isolated", "--k", "1/4", "--M", "1..3", "--out", iso}).code == 0);
    for (const auto& row : csv_rows(iso)) {
        const fs::path out = scratch("cross_sp.csv");
        REQUIRE(invoke({"spectrum", "--k", "1/4", "--g-range", row[2] + ":" + row[2] + ":1", "--n-levels", "12", "--out", out})
                    .code == 0);
        const double E = std::stod(row[3]);
        bool even = false, odd = false;
        for (const auto& r : csv_rows(out)) {
            if (r[3] == "baseline" || std::abs(std::stod(r[1]) - E) > 1e-6) continue;
            (r[2] == "even" ? even : odd) = true;
        }
        CAPTURE(row[2]);
        CHECK(even);
        CHECK(odd);
    }
}

TEST_CASE("json goes to stdout without --out") {
    const Outcome o = invoke({"isolated", "--k", "1/2", "--M", "1", "--format", "json"});
    REQUIRE(o.code == 0);
    const auto doc = nlohmann::json::parse(o.out);
    CHECK(doc["command"] == "isolated");
    CHECK(doc["rows"][0][2].get<double>() == doctest::Approx(0.3061862178).epsilon(1e-10));
}
