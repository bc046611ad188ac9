#include "exchopt/model_io.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "exchopt/errors.hpp"

namespace exchopt {

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
    fail(ErrorCode::MalformedInput, fmt::format("field '{}': {}", path, what));
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) field_error(path.empty() ? "<root>" : path, "expected an object");
}

void require_keys(const json& j, const std::string& path,
                  std::initializer_list<std::string_view> keys) {
    for (auto k : keys)
        if (!j.contains(k)) field_error(path.empty() ? std::string(k) : path + "." + std::string(k), "missing");
    for (const auto& [k, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            field_error(path.empty() ? k : path + "." + k, "unknown field");
    }
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) field_error(path, fmt::format("expected a number, got {}", j.type_name()));
    return j.get<double>();
}

std::array<double, 2> pair(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) field_error(path, "expected an array of 2 numbers");
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

std::pair<int, int> line_and_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, std::max(1, col - 1)};
}

} // namespace

TwoAssetModel parse_model(const json& doc) {
    require_object(doc, "");
    require_keys(doc, "", {"sigma1", "sigma2", "rho", "q1", "q2", "r", "K", "T", "jumps"});
    TwoAssetModel m;
    m.sigma1 = number(doc["sigma1"], "sigma1");
    m.sigma2 = number(doc["sigma2"], "sigma2");
    m.rho = number(doc["rho"], "rho");
    m.q1 = number(doc["q1"], "q1");
    m.q2 = number(doc["q2"], "q2");
    m.r = number(doc["r"], "r");
    m.K = number(doc["K"], "K");
    m.T = number(doc["T"], "T");

    const json& jj = doc["jumps"];
    require_object(jj, "jumps");
    if (!jj.contains("type")) field_error("jumps.type", "missing");
    if (!jj["type"].is_string()) field_error("jumps.type", "expected a string");
    const auto type = jj["type"].get<std::string>();
    if (type == "none") {
        require_keys(jj, "jumps", {"type"});
        m.jumps = NoJumps{};
    } else if (type == "atoms") {
        require_keys(jj, "jumps", {"type", "points"});
        const json& pts = jj["points"];
        if (!pts.is_array()) field_error("jumps.points", "expected an array");
        AtomJumps atoms;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const std::string p = fmt::format("jumps.points[{}]", i);
            require_object(pts[i], p);
            require_keys(pts[i], p, {"y1", "y2", "lambda"});
            atoms.points.push_back({number(pts[i]["y1"], p + ".y1"), number(pts[i]["y2"], p + ".y2"),
                                    number(pts[i]["lambda"], p + ".lambda")});
        }
        m.jumps = std::move(atoms);
    } else if (type == "gaussian") {
        require_keys(jj, "jumps", {"type", "lambda", "mu", "cov"});
        GaussianJumps g;
        g.lambda = number(jj["lambda"], "jumps.lambda");
        g.mu = pair(jj["mu"], "jumps.mu");
        const json& cov = jj["cov"];
        if (!cov.is_array() || cov.size() != 2) field_error("jumps.cov", "expected a 2x2 array");
        g.cov[0] = pair(cov[0], "jumps.cov[0]");
        g.cov[1] = pair(cov[1], "jumps.cov[1]");
        m.jumps = g;
    } else {
        field_error("jumps.type", fmt::format("unknown jump type '{}'", type));
    }
    validate_model(m);
    return m;
}

TwoAssetModel parse_model_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_and_column(text, e.byte);
        fail(ErrorCode::MalformedInput,
             fmt::format("line {}, column {}: invalid JSON ({})", line, col, e.what()));
    }
    return parse_model(doc);
}

TwoAssetModel load_model(const std::string& path) { return parse_model_text(read_file(path)); }

json model_to_json(const TwoAssetModel& m) {
    json j;
    j["sigma1"] = m.sigma1;
    j["sigma2"] = m.sigma2;
    j["rho"] = m.rho;
    j["q1"] = m.q1;
    j["q2"] = m.q2;
    j["r"] = m.r;
    j["K"] = m.K;
    j["T"] = m.T;
    json jumps;
    if (const auto* a = std::get_if<AtomJumps>(&m.jumps)) {
        jumps["type"] = "atoms";
        jumps["points"] = json::array();
        for (const auto& p : a->points)
            jumps["points"].push_back({{"y1", p.y1}, {"y2", p.y2}, {"lambda", p.lambda}});
    } else if (const auto* g = std::get_if<GaussianJumps>(&m.jumps)) {
        jumps["type"] = "gaussian";
        jumps["lambda"] = g->lambda;
        jumps["mu"] = {g->mu[0], g->mu[1]};
        jumps["cov"] = {{g->cov[0][0], g->cov[0][1]}, {g->cov[1][0], g->cov[1][1]}};
    } else {
        jumps["type"] = "none";
    }
    j["jumps"] = jumps;
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MalformedInput, fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::InvalidParameter, fmt::format("cannot write '{}'", path));
    out << text;
    if (!out) fail(ErrorCode::InvalidParameter, fmt::format("write to '{}' failed", path));
}

} // namespace exchopt
