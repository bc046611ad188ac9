#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "exchopt/errors.hpp"
#include "exchopt/job.hpp"
#include "exchopt/model_io.hpp"

using namespace exchopt;

namespace {

struct Flags {
    std::string model;
    std::string command;
    std::optional<double> s1, s2, t;
    std::string out;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths, steps;
    std::optional<int> grid;
};

// A model file, or a previous JSON report whose inputs echo is reused.
JobConfig load_job(const Flags& f) {
    JobConfig job;
    if (!f.model.empty()) {
        const std::string text = read_file(f.model);
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error&) {
            job.model = parse_model_text(text); // reports line and column
        }
        if (doc.is_object() && doc.contains("inputs"))
            job = job_from_inputs(doc["inputs"]);
        else
            job.model = parse_model(doc);
        job.model_path = f.model;
    }
    if (!f.command.empty()) {
        const auto cmd = parse_command(f.command);
        if (!cmd) fail(ErrorCode::MalformedInput, "unknown command '" + f.command + "'");
        job.command = *cmd;
    } else if (f.model.empty()) {
        fail(ErrorCode::MalformedInput, "--command is required");
    }
    if (f.model.empty() && job.command != Command::Validate)
        fail(ErrorCode::MalformedInput, "--model is required for this command");
    if (f.s1) job.market.S1 = *f.s1;
    if (f.s2) job.market.S2 = *f.s2;
    if (f.t) job.market.t = *f.t;
    if (!f.format.empty()) job.format = *parse_format(f.format);
    if (f.seed) job.mc.seed = *f.seed;
    if (f.paths) job.mc.n_paths = *f.paths;
    if (f.steps) job.mc.n_steps = *f.steps;
    if (f.grid) job.grid = *f.grid;
    job.output_path = f.out;
    return job;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exchange option pricer: European and American exchange options under jump diffusions"};
    Flags f;
    app.add_option("--model", f.model, "Model JSON file, or a previous JSON report to rerun");
    app.add_option("--command", f.command, "price-european | price-american | boundary | decompose | validate");
    app.add_option("--s1", f.s1, "Spot of asset 1");
    app.add_option("--s2", f.s2, "Spot of asset 2");
    app.add_option("--t", f.t, "Valuation time in years");
    app.add_option("--out", f.out, "Report file (stdout when omitted)");
    app.add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", f.seed, "Monte Carlo seed");
    app.add_option("--paths", f.paths, "Monte Carlo paths");
    app.add_option("--steps", f.steps, "Monte Carlo time steps");
    app.add_option("--grid", f.grid, "Boundary grid points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    JobConfig job;
    try {
        job = load_job(f);
    } catch (const PricingError& e) {
        std::cerr << "error: " << (f.model.empty() ? "" : f.model + ": ") << e.what() << "\n";
        return 1;
    }

    JobOutput result;
    try {
        result = run_job(job);
    } catch (const PricingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (job.output_path.empty()) {
        std::cout << result.text;
    } else {
        try {
            write_file(job.output_path, result.text);
        } catch (const PricingError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return result.exit_code;
}
