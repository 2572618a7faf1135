#include "job.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "spraymet/error.hpp"

namespace spraymet::app {

using nlohmann::json;

namespace {

Interval interval(const json& j, std::string_view key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw std::invalid_argument(std::string(key) + " must be a [lo, hi] pair of numbers");
    return Interval{j[0].get<double>(), j[1].get<double>()};
}

Point point(const json& j, std::string_view key) {
    if (!j.is_array() || j.size() != 4)
        throw std::invalid_argument(std::string(key) + " must be [x1, x2, y1, y2]");
    Point p;
    for (std::size_t k = 0; k < 4; ++k) {
        if (!j[k].is_number()) throw std::invalid_argument(std::string(key) + " entries must be numbers");
        p[k] = j[k].get<double>();
    }
    return p;
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (auto name : known) ok = ok || k == name;
        if (!ok) throw std::invalid_argument("unknown key '" + k + "' in " + std::string(where));
    }
}

double positive(const json& j, std::string_view key) {
    if (!j.is_number() || !(j.get<double>() > 0.0))
        throw std::invalid_argument(std::string(key) + " must be a positive number");
    return j.get<double>();
}

}  // namespace

Spray JobSpec::spray() const {
    Spray s;
    s.g1 = parse_expr(g1);
    s.g2 = parse_expr(g2);
    s.domain.x1 = x1;
    s.domain.x2 = x2;
    s.domain.radius = y_radius;
    s.domain.cone_deg = y_cone_deg;
    s.domain.margin = margin;
    for (const auto& c : constraints) s.domain.constraints.push_back(Constraint::parse(c));
    s.domain.validate();
    return s;
}

namespace {

JobSpec parse_document(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("job file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("job file must hold a JSON object");
    reject_unknown(doc, {"name", "spray", "domain", "sampling", "tolerances", "base_point", "grid", "reconstruct", "report"},
                   "job");

    JobSpec job;
    if (doc.contains("name")) job.name = doc["name"].get<std::string>();

    const json& spray = doc.at("spray");
    reject_unknown(spray, {"G1", "G2"}, "spray");
    job.g1 = spray.at("G1").get<std::string>();
    job.g2 = spray.at("G2").get<std::string>();

    const json dom = doc.value("domain", json::object());
    reject_unknown(dom, {"x1", "x2", "y_radius", "y_cone_deg", "constraints", "margin"}, "domain");
    if (dom.contains("x1")) job.x1 = interval(dom["x1"], "domain.x1");
    if (dom.contains("x2")) job.x2 = interval(dom["x2"], "domain.x2");
    if (dom.contains("y_radius")) job.y_radius = interval(dom["y_radius"], "domain.y_radius");
    if (dom.contains("y_cone_deg")) job.y_cone_deg = interval(dom["y_cone_deg"], "domain.y_cone_deg");
    if (dom.contains("constraints")) job.constraints = dom["constraints"].get<std::vector<std::string>>();
    if (dom.contains("margin")) job.margin = dom["margin"].get<double>();

    if (doc.contains("sampling")) {
        const json& s = doc["sampling"];
        reject_unknown(s, {"samples", "seed"}, "sampling");
        if (s.contains("samples")) job.run.samples = s["samples"].get<std::size_t>();
        if (s.contains("seed")) job.run.seed = s["seed"].get<std::uint64_t>();
    }
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        reject_unknown(t, {"closed", "rank", "quadrature", "identity"}, "tolerances");
        if (t.contains("closed")) job.run.tol.closed = positive(t["closed"], "tolerances.closed");
        if (t.contains("rank")) job.run.tol.rank = positive(t["rank"], "tolerances.rank");
        if (t.contains("quadrature")) job.run.tol.quadrature = positive(t["quadrature"], "tolerances.quadrature");
        if (t.contains("identity")) job.run.tol.identity = positive(t["identity"], "tolerances.identity");
    }
    if (doc.contains("base_point")) job.base_point = point(doc["base_point"], "base_point");
    if (doc.contains("grid")) {
        if (!doc["grid"].is_array()) throw std::invalid_argument("grid must be a list of points");
        for (const json& p : doc["grid"]) job.grid.push_back(point(p, "grid entry"));
    }
    if (doc.contains("reconstruct")) job.reconstruct = doc["reconstruct"].get<bool>();
    if (doc.contains("report")) {
        const auto r = doc["report"].get<std::string>();
        if (r == "json") job.report = ReportFormat::Json;
        else if (r == "text") job.report = ReportFormat::Text;
        else throw std::invalid_argument("report must be \"json\" or \"text\"");
    }
    if (job.run.samples == 0) throw std::invalid_argument("sampling.samples must be positive");

    return job;
}

}  // namespace

JobSpec parse_job(std::string_view text) {
    JobSpec job;
    try {
        job = parse_document(text);
    } catch (const json::exception& e) {
        // Missing keys and wrong value types.
        throw std::invalid_argument(std::string("malformed job: ") + e.what());
    }
    job.spray();  // surface expression and domain errors at load time
    return job;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

JobSpec load_job(const std::filesystem::path& path) { return parse_job(read_file(path)); }

std::vector<Point> parse_grid(std::string_view text) {
    std::vector<Point> out;
    std::istringstream in{std::string(text)};
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> v;
        for (double d; ls >> d;) v.push_back(d);
        if (!ls.eof()) throw std::invalid_argument("grid line " + std::to_string(lineno) + ": not a number");
        if (v.empty()) continue;
        if (v.size() != 4) throw std::invalid_argument("grid line " + std::to_string(lineno) + ": expected 4 numbers");
        out.emplace_back(v[0], v[1], v[2], v[3]);
    }
    return out;
}

std::vector<Point> load_grid(const std::filesystem::path& path) { return parse_grid(read_file(path)); }

}  // namespace spraymet::app
