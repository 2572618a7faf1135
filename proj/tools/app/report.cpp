#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace spraymet {

// ADL hooks for core types.
static void to_json(nlohmann::json& j, const Point& p) { j = nlohmann::json::array({p[0], p[1], p[2], p[3]}); }
static void from_json(const nlohmann::json& j, Point& p) {
    for (std::size_t k = 0; k < 4; ++k) p[k] = j.at(k).get<double>();
}

}  // namespace spraymet

namespace spraymet::app {

using nlohmann::json;

namespace {

// Non-finite residuals serialize as null and read back as NaN.
double number(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
    if (j.contains(key)) v = j[key].get<T>();
}

}  // namespace

static void to_json(json& j, const NamedResidual& r) {
    j = json{{"name", r.name}, {"residual", r.residual}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}
static void from_json(const json& j, NamedResidual& r) {
    r.name = j.at("name").get<std::string>();
    r.residual = number(j.at("residual"));
    r.tolerance = number(j.at("tolerance"));
    r.pass = j.at("pass").get<bool>();
}

static void to_json(json& j, const ClosednessEvidence& c) {
    j = json{{"kind", c.kind},
             {"max_residual", c.max_residual},
             {"fraction_above_1e-3", c.fraction_above_1e3},
             {"symbolically_zero", c.symbolically_zero}};
    put_optional(j, "witness", c.witness);
}
static void from_json(const json& j, ClosednessEvidence& c) {
    c.kind = j.at("kind").get<std::string>();
    c.max_residual = number(j.at("max_residual"));
    c.fraction_above_1e3 = number(j.at("fraction_above_1e-3"));
    c.symbolically_zero = j.at("symbolically_zero").get<bool>();
    get_optional(j, "witness", c.witness);
}

static void to_json(json& j, const RankEvidence& r) {
    j = json{{"kind", r.kind}, {"rank4_samples", r.rank4}, {"rank2_samples", r.rank2}, {"witnesses", r.witnesses}};
}
static void from_json(const json& j, RankEvidence& r) {
    r.kind = j.at("kind").get<std::string>();
    r.rank4 = j.at("rank4_samples").get<std::size_t>();
    r.rank2 = j.at("rank2_samples").get<std::size_t>();
    r.witnesses = j.at("witnesses").get<std::vector<Point>>();
}

static void to_json(json& j, const FramedSample& s) {
    j = json{{"point", s.point}, {"matrix", s.matrix}, {"rank", s.rank}};
}
static void from_json(const json& j, FramedSample& s) {
    s.point = j.at("point").get<Point>();
    s.matrix = j.at("matrix").get<FramedMatrix>();
    s.rank = j.at("rank").get<int>();
}

static void to_json(json& j, const GridRow& g) {
    j = json{{"point", g.point}, {"f", g.f}, {"F", g.F}};
    put_optional(j, "closed_form", g.closed_form);
}
static void from_json(const json& j, GridRow& g) {
    g.point = j.at("point").get<Point>();
    g.f = number(j.at("f"));
    g.F = number(j.at("F"));
    get_optional(j, "closed_form", g.closed_form);
}

static void to_json(json& j, const ReconstructionReport& r) {
    j = json{{"base_point", r.base_point},
             {"path_independence", {{"max_discrepancy", r.path_independence}, {"pairs", r.path_pairs}}},
             {"kappa", {{"min", r.kappa_min}, {"max", r.kappa_max}}},
             {"metric_rank", {{"min", r.metric_rank_min}, {"max", r.metric_rank_max}}},
             {"grid", r.grid},
             {"verification", r.verification},
             {"regular_frame", r.regular_frame}};
    put_optional(j, "closed_form", r.closed_form);
    put_optional(j, "main_scalar_max_abs", r.main_scalar_max_abs);
}
static void from_json(const json& j, ReconstructionReport& r) {
    r.base_point = j.at("base_point").get<Point>();
    r.path_independence = number(j.at("path_independence").at("max_discrepancy"));
    r.path_pairs = j.at("path_independence").at("pairs").get<std::size_t>();
    r.kappa_min = number(j.at("kappa").at("min"));
    r.kappa_max = number(j.at("kappa").at("max"));
    r.metric_rank_min = j.at("metric_rank").at("min").get<int>();
    r.metric_rank_max = j.at("metric_rank").at("max").get<int>();
    r.grid = j.at("grid").get<std::vector<GridRow>>();
    r.verification = j.at("verification").get<std::vector<NamedResidual>>();
    r.regular_frame = j.at("regular_frame").get<std::vector<NamedResidual>>();
    get_optional(j, "closed_form", r.closed_form);
    get_optional(j, "main_scalar_max_abs", r.main_scalar_max_abs);
}

static void to_json(json& j, const Provenance& p) {
    j = json{{"tool", p.tool},
             {"version", p.version},
             {"seed", p.seed},
             {"samples", p.samples},
             {"tolerances",
              {{"closed", p.tol_closed}, {"rank", p.tol_rank}, {"quadrature", p.tol_quadrature}, {"identity", p.tol_identity}}}};
}
static void from_json(const json& j, Provenance& p) {
    p.tool = j.at("tool").get<std::string>();
    p.version = j.at("version").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.samples = j.at("samples").get<std::size_t>();
    const json& t = j.at("tolerances");
    p.tol_closed = number(t.at("closed"));
    p.tol_rank = number(t.at("rank"));
    p.tol_quadrature = number(t.at("quadrature"));
    p.tol_identity = number(t.at("identity"));
}

std::string to_json(const Report& r) {
    json j{{"name", r.name},
           {"spray", {{"G1", r.g1}, {"G2", r.g2}}},
           {"verdict", r.verdict},
           {"reason", r.reason},
           {"flatness_min_ratio", r.flatness_min_ratio},
           {"identities", r.identities},
           {"omega_matrix", r.omega_matrix},
           {"provenance", r.provenance}};
    put_optional(j, "closedness", r.closedness);
    put_optional(j, "rank", r.rank);
    put_optional(j, "reconstruction", r.reconstruction);
    return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
    const json j = json::parse(text);
    Report r;
    r.name = j.at("name").get<std::string>();
    r.g1 = j.at("spray").at("G1").get<std::string>();
    r.g2 = j.at("spray").at("G2").get<std::string>();
    r.verdict = j.at("verdict").get<std::string>();
    r.reason = j.at("reason").get<std::string>();
    r.flatness_min_ratio = number(j.at("flatness_min_ratio"));
    r.identities = j.at("identities").get<std::vector<NamedResidual>>();
    r.omega_matrix = j.at("omega_matrix").get<std::vector<FramedSample>>();
    r.provenance = j.at("provenance").get<Provenance>();
    get_optional(j, "closedness", r.closedness);
    get_optional(j, "rank", r.rank);
    get_optional(j, "reconstruction", r.reconstruction);
    return r;
}

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.resize(width, ' ');
    return s;
}

std::string fmt_point(const Point& p) {
    return "(" + fmt(p[0]) + ", " + fmt(p[1]) + ", " + fmt(p[2]) + ", " + fmt(p[3]) + ")";
}

void residual_table(std::ostringstream& os, const std::vector<NamedResidual>& rows) {
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    for (const auto& r : rows) {
        os << "  " << r.name << std::string(width - r.name.size() + 2, ' ') << fmt(r.residual, "%-12.3e")
           << "  tol " << fmt(r.tolerance, "%-9.1e") << "  " << (r.pass ? "PASS" : "FAIL") << "\n";
    }
}

}  // namespace

std::string to_text(const Report& r) {
    std::ostringstream os;
    os << r.provenance.tool << " " << r.provenance.version << "  job: " << r.name << "\n";
    os << "G1 = " << r.g1 << "\nG2 = " << r.g2 << "\n";
    os << "samples: " << r.provenance.samples << "  seed: " << r.provenance.seed << "\n\n";
    os << "verdict: " << r.verdict;
    if (!r.reason.empty()) os << " (" << r.reason << ")";
    os << "\n";
    os << "flatness: min |rho| ratio " << fmt(r.flatness_min_ratio) << "\n";
    if (r.closedness) {
        os << "closedness: " << r.closedness->kind << ", max residual " << fmt(r.closedness->max_residual, "%.3e")
           << ", " << fmt(100.0 * r.closedness->fraction_above_1e3, "%.1f") << "% of samples above 1e-3";
        if (r.closedness->witness) os << ", witness " << fmt_point(*r.closedness->witness);
        os << "\n";
    }
    if (r.rank) {
        if (r.rank->kind == "Rank4") os << "rank(Omega) = 4\n";
        else if (r.rank->kind == "Rank2") os << "rank(Omega) = 2\n";
        else os << "rank(Omega) mixed: " << r.rank->rank4 << " samples of rank 4, " << r.rank->rank2 << " of rank 2\n";
    }
    if (!r.omega_matrix.empty()) {
        const FramedSample& s = r.omega_matrix.front();
        static constexpr const char* kNames[4] = {"H", "S", "V", "C"};
        os << "\nOmega in the frame (H, S, V, C) at " << fmt_point(s.point) << ":\n";
        os << "     ";
        for (const char* n : kNames) os << std::string(12, ' ') << n;
        os << "\n";
        for (std::size_t a = 0; a < 4; ++a) {
            os << "  " << kNames[a] << "  ";
            for (std::size_t b = 0; b < 4; ++b) {
                const double v = std::fabs(s.matrix[a][b]) < 5e-13 ? 0.0 : s.matrix[a][b];
                os << fmt(v, "%13.6g");
            }
            os << "\n";
        }
    }
    if (!r.identities.empty()) {
        os << "\nidentities:\n";
        residual_table(os, r.identities);
    }
    if (r.reconstruction) {
        const ReconstructionReport& c = *r.reconstruction;
        os << "\nreconstruction: F = exp(f), F = 1 at " << fmt_point(c.base_point) << "\n";
        if (c.closed_form) os << "closed form: F = " << *c.closed_form << "\n";
        os << "path independence: " << fmt(c.path_independence, "%.3e") << " over " << c.path_pairs << " pairs\n";
        os << "kappa = rho/F^2 in [" << fmt(c.kappa_min, "%.10g") << ", " << fmt(c.kappa_max, "%.10g") << "]\n";
        os << "metric rank in [" << c.metric_rank_min << ", " << c.metric_rank_max << "]\n";
        os << "\nverification:\n";
        residual_table(os, c.verification);
        if (!c.regular_frame.empty()) {
            os << "\nnormalized Berwald frame:\n";
            residual_table(os, c.regular_frame);
            if (c.main_scalar_max_abs) os << "main scalar: max |I| = " << fmt(*c.main_scalar_max_abs, "%.3e") << "\n";
        }
        if (!c.grid.empty()) {
            os << "\n" << pad("point", 52) << pad("F", 18) << "closed form\n";
            for (const GridRow& g : c.grid) {
                os << pad(fmt_point(g.point), 50) << "  " << fmt(g.F, "%-18.12g")
                   << (g.closed_form ? fmt(*g.closed_form, "%.12g") : "-") << "\n";
            }
        }
    }
    return os.str();
}

}  // namespace spraymet::app
