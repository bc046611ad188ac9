#include <algorithm>
#include <cstring>
#include <string>

#include <gtest/gtest.h>

#include "exchopt/errors.hpp"
#include "exchopt/job.hpp"
#include "exchopt/model_io.hpp"
#include "exchopt/validation.hpp"

using namespace exchopt;

namespace {

std::string data(const char* name) { return std::string(EXCHOPT_TEST_DATA) + "/" + name; }

ErrorCode code_of(const std::string& text) {
    try {
        parse_model_text(text);
    } catch (const PricingError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for " << text;
    return ErrorCode::InvalidParameter;
}

std::string message_of(const std::string& text) {
    try {
        parse_model_text(text);
    } catch (const PricingError& e) {
        return e.what();
    }
    return {};
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const char* kBase = R"({"sigma1":0.2,"sigma2":0.3,"rho":0.5,"q1":0.05,"q2":0.05,"r":0.05,"K":1,"T":1,)";

} // namespace

TEST(ModelIo, LoadsEveryFixture) {
    for (const char* f : {"margrabe.json", "jump_free.json", "single_atom.json", "point_mass.json",
                          "gaussian.json", "no_carry.json"})
        EXPECT_NO_THROW(load_model(data(f))) << f;
}

TEST(ModelIo, FixturesMatchReferenceModels) {
    const auto rm = reduce(load_model(data("point_mass.json")));
    const auto ref = reduce(reference::point_mass());
    EXPECT_EQ(rm.sigma, ref.sigma);
    EXPECT_EQ(rm.kappa, ref.kappa);
}

TEST(ModelIo, RoundTripIsBitExact) {
    for (const auto& m : reference::corpus()) {
        const auto text = to_report_text(model_to_json(m));
        const auto back = parse_model_text(text);
        EXPECT_TRUE(same_bits(back.sigma1, m.sigma1));
        EXPECT_TRUE(same_bits(back.rho, m.rho));
        EXPECT_TRUE(same_bits(back.q2, m.q2));
        EXPECT_EQ(to_report_text(model_to_json(back)), text);
    }
    TwoAssetModel odd = reference::jump_free();
    odd.sigma1 = 0.1 + 0.2;
    odd.q1 = 1.0 / 3.0;
    const auto back = parse_model_text(to_report_text(model_to_json(odd)));
    EXPECT_TRUE(same_bits(back.sigma1, odd.sigma1));
    EXPECT_TRUE(same_bits(back.q1, odd.q1));
}

TEST(ModelIo, SyntaxErrorsNameTheLine) {
    const auto msg = message_of("{\"sigma1\": 0.2,\n \"sigma2\" 0.3}");
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_EQ(code_of("{"), ErrorCode::MalformedInput);
}

TEST(ModelIo, FieldErrors) {
    EXPECT_EQ(code_of(std::string(kBase) + R"("jumps":{"type":"none"},"extra":1})"),
              ErrorCode::MalformedInput);
    EXPECT_EQ(code_of(R"({"sigma1":0.2,"jumps":{"type":"none"}})"), ErrorCode::MalformedInput);
    EXPECT_EQ(code_of(std::string(kBase) + R"("jumps":{"type":"levy"}})"), ErrorCode::MalformedInput);
    EXPECT_EQ(code_of(std::string(kBase) + R"("jumps":{"type":"gaussian","lambda":1,"mu":[0],"cov":[[1,0],[0,1]]}})"),
              ErrorCode::MalformedInput);
    const auto msg = message_of(std::string(kBase) +
                                R"("jumps":{"type":"atoms","points":[{"y1":0,"y2":0,"lambda":"x"}]}})");
    EXPECT_NE(msg.find("jumps.points[0].lambda"), std::string::npos) << msg;
    const auto missing = message_of(R"({"sigma1":0.2})");
    EXPECT_NE(missing.find("sigma2"), std::string::npos) << missing;
}

TEST(ModelIo, ParameterErrorsKeepTheirCodes) {
    EXPECT_EQ(code_of(R"({"sigma1":0.2,"sigma2":0.3,"rho":2,"q1":0,"q2":0,"r":0,"K":1,"T":1,"jumps":{"type":"none"}})"),
              ErrorCode::InvalidCorrelation);
    EXPECT_EQ(code_of(std::string(kBase) + R"("jumps":{"type":"atoms","points":[{"y1":0,"y2":0,"lambda":-1}]}})"),
              ErrorCode::NegativeIntensity);
}

TEST(ModelIo, MissingFile) {
    try {
        load_model(data("does_not_exist.json"));
        FAIL();
    } catch (const PricingError& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
    }
}

TEST(ReportText, SeventeenDigits) {
    json j;
    j["x"] = 0.1;
    j["n"] = 3;
    j["one"] = 1.0;
    j["bad"] = std::nan("");
    const auto text = to_report_text(j);
    EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
    EXPECT_NE(text.find("\"n\": 3"), std::string::npos);
    EXPECT_NE(text.find("\"one\": 1.0"), std::string::npos);
    EXPECT_NE(text.find("\"bad\": null"), std::string::npos);
}

TEST(Job, CommandNames) {
    for (auto c : {Command::PriceEuropean, Command::PriceAmerican, Command::Boundary,
                   Command::Decompose, Command::Validate})
        EXPECT_EQ(parse_command(to_string(c)), c);
    EXPECT_FALSE(parse_command("price").has_value());
    EXPECT_EQ(parse_format("csv"), Format::Csv);
    EXPECT_FALSE(parse_format("xml").has_value());
}

TEST(Job, InputsRoundTrip) {
    JobConfig job;
    job.command = Command::Decompose;
    job.model = reference::gaussian();
    job.market = {101.5, 97.25, 0.125};
    job.mc.seed = 0xfeedfacecafebeefull;
    job.mc.n_paths = 12345;
    job.grid = 17;
    const auto echo = inputs_echo(job);
    const auto back = job_from_inputs(json::parse(to_report_text(echo)));
    EXPECT_EQ(to_report_text(inputs_echo(back)), to_report_text(echo));
    EXPECT_EQ(back.mc.seed, job.mc.seed);
    EXPECT_EQ(back.command, Command::Decompose);
}

TEST(Job, EuropeanReport) {
    JobConfig job;
    job.model = reference::margrabe();
    const auto out = run_job(job);
    EXPECT_EQ(out.exit_code, 0);
    const auto rep = json::parse(out.text);
    EXPECT_NEAR(rep["results"]["european_call"].get<double>(), 10.5243157811252542, 1e-6);
}

TEST(Job, BoundaryCsvShape) {
    JobConfig job;
    job.command = Command::Boundary;
    job.model = reference::jump_free();
    job.format = Format::Csv;
    job.grid = 64;
    const auto text = run_job(job).text;
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 66);
    EXPECT_TRUE(text.ends_with("\nS0,1,1\n"));
    EXPECT_EQ(text.substr(0, 14), "t,b,converged\n");
}

TEST(Job, NoCarryIsFlagged) {
    JobConfig job;
    job.command = Command::PriceAmerican;
    job.model = load_model(data("no_carry.json"));
    const auto out = run_job(job);
    EXPECT_EQ(out.exit_code, 0);
    const auto rep = json::parse(out.text);
    bool flagged = false;
    for (const auto& f : rep["flags"]) flagged = flagged || f == "exercise_never_optimal";
    EXPECT_TRUE(flagged);
    EXPECT_EQ(rep["results"]["american"], rep["results"]["european"]);
}

TEST(Job, DecomposeIsIdempotent) {
    JobConfig job;
    job.command = Command::Decompose;
    job.model = reference::point_mass();
    job.format = Format::Csv;
    job.mc.n_paths = 2000;
    job.mc.n_steps = 16;
    EXPECT_EQ(run_job(job).text, run_job(job).text);
}
