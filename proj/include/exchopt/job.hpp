#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "exchopt/charfn.hpp"
#include "exchopt/mc.hpp"
#include "exchopt/model.hpp"
#include "exchopt/model_io.hpp"

namespace exchopt {

enum class Command { PriceEuropean, PriceAmerican, Boundary, Decompose, Validate };
enum class Format { Csv, Json };

std::optional<Command> parse_command(std::string_view name);
std::string_view to_string(Command c);
std::optional<Format> parse_format(std::string_view name);
std::string_view to_string(Format f);

struct Market {
    double S1 = 100.0;
    double S2 = 100.0;
    double t = 0.0;
};

struct JobConfig {
    Command command = Command::PriceEuropean;
    std::string model_path;
    TwoAssetModel model;
    Market market;
    QuadratureSpec quadrature;
    MCConfig mc;
    int grid = 64;
    std::string output_path;
    Format format = Format::Json;
};

/// Pretty-printed JSON with every double written to 17 significant digits.
std::string to_report_text(const json& report);

/// Inputs echo of a report: everything needed to rerun the job.
json inputs_echo(const JobConfig& job);

/// Rebuilds a job from a report's inputs echo (output path is left empty).
JobConfig job_from_inputs(const json& inputs);

struct JobOutput {
    int exit_code = 0; ///< 0 success, 2 validation failures
    std::string text;  ///< serialized report
};

/// Runs the job and serializes its report in the requested format.
JobOutput run_job(const JobConfig& job);

} // namespace exchopt
