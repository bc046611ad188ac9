#include "exchopt/job.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "exchopt/american.hpp"
#include "exchopt/errors.hpp"
#include "exchopt/validation.hpp"

namespace exchopt {

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::PriceEuropean, "price-european"},
    {Command::PriceAmerican, "price-american"},
    {Command::Boundary, "boundary"},
    {Command::Decompose, "decompose"},
    {Command::Validate, "validate"},
};

std::string g17(double x) { return fmt::format("{:.17g}", x); }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_json(const json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [k, v] : j.items()) {
            if (!first) out += ",\n";
            first = false;
            out += inner + json(k).dump() + ": ";
            write_json(v, out, indent + 1);
        }
        out += "\n" + pad + "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",\n";
            out += inner;
            write_json(j[i], out, indent + 1);
        }
        out += "\n" + pad + "]";
        return;
    }
    case json::value_t::number_float: {
        const double x = j.get<double>();
        if (!std::isfinite(x)) {
            out += "null";
            return;
        }
        std::string s = g17(x);
        if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
        out += s;
        return;
    }
    default: out += j.dump(); return;
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::string scalar_text(const json& v) {
    if (v.is_number_float()) return std::isfinite(v.get<double>()) ? g17(v.get<double>()) : "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

void flatten(const json& j, const std::string& prefix, std::string& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], fmt::format("{}[{}]", prefix, i), out);
    } else if (j.is_array()) {
        std::string joined;
        for (std::size_t i = 0; i < j.size(); ++i) joined += (i ? ";" : "") + scalar_text(j[i]);
        out += csv_field(prefix) + "," + csv_field(joined) + "\n";
    } else {
        out += csv_field(prefix) + "," + csv_field(scalar_text(j)) + "\n";
    }
}

std::string key_value_csv(const json& report) {
    std::string out = "field,value\n";
    flatten(report, "", out);
    return out;
}

json boundary_json(const ApproxSolution& sol, const std::optional<double>& S0) {
    json b;
    b["t"] = sol.t;
    b["b"] = sol.b;
    b["alpha"] = sol.alpha_root.alpha;
    b["A"] = sol.A;
    b["h"] = sol.alpha_root.h;
    b["S0"] = S0 ? json(*S0) : json(nullptr);
    b["value_match_residual"] = sol.value_match_residual;
    b["smooth_paste_residual"] = sol.smooth_paste_residual;
    return b;
}

std::optional<double> try_terminal(const ReducedModel& rm, json& flags) {
    try {
        return terminal_boundary(rm);
    } catch (const PricingError& e) {
        flags.push_back(e.code() == ErrorCode::NoRootInInterval ? "terminal_boundary_no_root"
                                                                : "terminal_boundary_undefined");
        return std::nullopt;
    }
}

json report_skeleton(const JobConfig& job) {
    json r;
    r["inputs"] = inputs_echo(job);
    r["results"] = json::object();
    r["diagnostics"] = json::object();
    r["flags"] = json::array();
    return r;
}

JobOutput price_european(const JobConfig& job) {
    const auto rm = reduce(job.model);
    const auto& mk = job.market;
    const double r = ratio_from_spots(mk.S1, mk.S2, mk.t, rm);
    const double scale = numeraire_scale(mk.S2, mk.t, rm);
    const auto put = european_put_ratio(r, mk.t, rm, job.quadrature);
    const auto call = european_call_ratio(r, mk.t, rm, job.quadrature);
    json rep = report_skeleton(job);
    auto& res = rep["results"];
    res["ratio"] = r;
    res["european_put"] = scale * put.price;
    res["european_call"] = scale * call.price;
    res["delta_r"] = put.delta_r;
    res["pi1"] = put.pi1;
    res["pi2"] = put.pi2;
    auto& diag = rep["diagnostics"];
    diag["quadrature_panels"] = put.panels;
    diag["quadrature_error"] = put.quad_error;
    diag["truncation"] = put.truncation;
    return {0, job.format == Format::Json ? to_report_text(rep) : key_value_csv(rep)};
}

JobOutput price_american(const JobConfig& job) {
    const auto rm = reduce(job.model);
    const auto& mk = job.market;
    const auto q = american_price(mk.S1, mk.S2, mk.t, rm, job.quadrature);
    json rep = report_skeleton(job);
    auto& flags = rep["flags"];
    auto& res = rep["results"];
    res["ratio"] = q.ratio;
    res["european"] = q.european;
    res["american"] = q.price;
    res["premium_normalized"] = q.premium_normalized;
    res["in_stopping_region"] = q.in_stopping_region;
    if (q.exercise_never_optimal) {
        flags.push_back("exercise_never_optimal");
        flags.push_back("no_boundary_root");
    }
    if (rm.q1 > 0.0) {
        const auto S0 = try_terminal(rm, flags);
        if (q.boundary) res["boundary"] = boundary_json(*q.boundary, S0);
    }
    return {0, job.format == Format::Json ? to_report_text(rep) : key_value_csv(rep)};
}

JobOutput boundary(const JobConfig& job) {
    const auto rm = reduce(job.model);
    const auto curve = build_boundary_curve(rm, job.grid, job.quadrature);
    if (job.format == Format::Csv) {
        std::string out = "t,b,converged\n";
        for (const auto& p : curve.grid)
            out += fmt::format("{},{},{}\n", g17(p.t), p.converged ? g17(p.b) : "", p.converged ? 1 : 0);
        out += fmt::format("S0,{},{}\n", curve.S0 ? g17(*curve.S0) : "", curve.S0 ? 1 : 0);
        return {0, out};
    }
    json rep = report_skeleton(job);
    auto& pts = rep["results"]["points"] = json::array();
    for (const auto& p : curve.grid) {
        pts.push_back({{"t", p.t},
                       {"b", finite_or_null(p.b)},
                       {"alpha", finite_or_null(p.alpha)},
                       {"A", finite_or_null(p.A)},
                       {"converged", p.converged}});
    }
    rep["results"]["S0"] = curve.S0 ? json(*curve.S0) : json(nullptr);
    auto& diag = rep["diagnostics"];
    diag["max_adjacent_jump"] = curve.max_adjacent_jump;
    diag["non_decreasing"] = curve.non_decreasing;
    diag["monotonicity_violations"] = curve.monotonicity_violations;
    diag["gaps"] = curve.gaps;
    if (curve.gaps > 0) rep["flags"].push_back("no_boundary_root");
    if (!curve.S0) rep["flags"].push_back("terminal_boundary_no_root");
    return {0, to_report_text(rep)};
}

JobOutput decompose(const JobConfig& job) {
    const auto rm = reduce(job.model);
    const auto& mk = job.market;
    const auto pd = premium_decomposition(mk.S1, mk.S2, mk.t, rm, job.mc, job.quadrature);
    const auto q = american_price(mk.S1, mk.S2, mk.t, rm, job.quadrature);
    json rep = report_skeleton(job);
    auto& res = rep["results"];
    res["european"] = pd.european;
    res["dividend_term"] = pd.dividend_term;
    res["jump_term"] = pd.jump_term;
    res["total_american"] = pd.total_american;
    res["american_approximation"] = q.price;
    auto& diag = rep["diagnostics"];
    diag["dividend_stderr"] = pd.dividend_stderr;
    diag["jump_stderr"] = pd.jump_stderr;
    diag["total_stderr"] = pd.total_stderr;
    if (pd.exercise_never_optimal) {
        rep["flags"].push_back("exercise_never_optimal");
        rep["flags"].push_back("no_boundary_root");
    }
    return {0, job.format == Format::Json ? to_report_text(rep) : key_value_csv(rep)};
}

JobOutput validate_job(const JobConfig& job) {
    ValidationOptions opts;
    opts.seed = job.mc.seed;
    opts.n_paths = job.mc.n_paths;
    opts.n_steps = job.mc.n_steps;
    const auto checks = run_validation(opts);
    bool all = true;
    for (const auto& c : checks) all = all && c.passed;
    const int code = all ? 0 : 2;
    if (job.format == Format::Csv) {
        std::string out = "id,name,result,detail\n";
        for (const auto& c : checks)
            out += fmt::format("{},{},{},{}\n", c.id, c.name, c.passed ? "pass" : "fail",
                               csv_field(c.detail));
        return {code, out};
    }
    json rep = report_skeleton(job);
    auto& list = rep["results"]["checks"] = json::array();
    for (const auto& c : checks)
        list.push_back({{"id", c.id},
                        {"name", c.name},
                        {"result", c.passed ? "pass" : "fail"},
                        {"detail", c.detail}});
    rep["results"]["all_passed"] = all;
    return {code, to_report_text(rep)};
}

template <class T>
T get_as(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(ErrorCode::MalformedInput, fmt::format("field '{}.{}': missing", where, key));
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::MalformedInput, fmt::format("field '{}.{}': wrong type", where, key));
    }
}

} // namespace

std::optional<Command> parse_command(std::string_view name) {
    for (const auto& [c, n] : kCommands)
        if (n == name) return c;
    return std::nullopt;
}

std::string_view to_string(Command c) {
    for (const auto& [k, n] : kCommands)
        if (k == c) return n;
    return "unknown";
}

std::optional<Format> parse_format(std::string_view name) {
    if (name == "csv") return Format::Csv;
    if (name == "json") return Format::Json;
    return std::nullopt;
}

std::string_view to_string(Format f) { return f == Format::Csv ? "csv" : "json"; }

std::string to_report_text(const json& report) {
    std::string out;
    write_json(report, out, 0);
    out += "\n";
    return out;
}

json inputs_echo(const JobConfig& job) {
    json in;
    in["command"] = std::string(to_string(job.command));
    in["model"] = model_to_json(job.model);
    in["market"] = {{"S1", job.market.S1}, {"S2", job.market.S2}, {"t", job.market.t}};
    in["quadrature"] = {{"abs_tol", job.quadrature.abs_tol},
                        {"max_panels", job.quadrature.max_panels},
                        {"truncation_margin", job.quadrature.truncation_margin}};
    in["mc"] = {{"n_paths", job.mc.n_paths},
                {"n_steps", job.mc.n_steps},
                {"seed", job.mc.seed},
                {"antithetic", job.mc.antithetic},
                {"basis_degree", job.mc.basis_degree}};
    in["grid"] = job.grid;
    in["format"] = std::string(to_string(job.format));
    return in;
}

JobConfig job_from_inputs(const json& in) {
    if (!in.is_object()) fail(ErrorCode::MalformedInput, "field 'inputs': expected an object");
    JobConfig job;
    const auto cmd = parse_command(get_as<std::string>(in, "command", "inputs"));
    if (!cmd) fail(ErrorCode::MalformedInput, "field 'inputs.command': unknown command");
    job.command = *cmd;
    if (!in.contains("model")) fail(ErrorCode::MalformedInput, "field 'inputs.model': missing");
    job.model = parse_model(in.at("model"));
    const json mk = get_as<json>(in, "market", "inputs");
    job.market = {get_as<double>(mk, "S1", "inputs.market"), get_as<double>(mk, "S2", "inputs.market"),
                  get_as<double>(mk, "t", "inputs.market")};
    const json qd = get_as<json>(in, "quadrature", "inputs");
    job.quadrature.abs_tol = get_as<double>(qd, "abs_tol", "inputs.quadrature");
    job.quadrature.max_panels = get_as<int>(qd, "max_panels", "inputs.quadrature");
    job.quadrature.truncation_margin = get_as<double>(qd, "truncation_margin", "inputs.quadrature");
    const json mc = get_as<json>(in, "mc", "inputs");
    job.mc.n_paths = get_as<std::size_t>(mc, "n_paths", "inputs.mc");
    job.mc.n_steps = get_as<std::size_t>(mc, "n_steps", "inputs.mc");
    job.mc.seed = get_as<std::uint64_t>(mc, "seed", "inputs.mc");
    job.mc.antithetic = get_as<bool>(mc, "antithetic", "inputs.mc");
    job.mc.basis_degree = get_as<int>(mc, "basis_degree", "inputs.mc");
    job.grid = get_as<int>(in, "grid", "inputs");
    const auto fmt_ = parse_format(get_as<std::string>(in, "format", "inputs"));
    if (!fmt_) fail(ErrorCode::MalformedInput, "field 'inputs.format': expected csv or json");
    job.format = *fmt_;
    return job;
}

JobOutput run_job(const JobConfig& job) {
    validate(job.quadrature);
    switch (job.command) {
    case Command::PriceEuropean: return price_european(job);
    case Command::PriceAmerican: return price_american(job);
    case Command::Boundary: return boundary(job);
    case Command::Decompose: return decompose(job);
    case Command::Validate: return validate_job(job);
    }
    fail(ErrorCode::InvalidParameter, "unknown command");
}

} // namespace exchopt
