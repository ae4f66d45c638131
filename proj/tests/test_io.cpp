#include "pbvp/io.hpp"
#include "pbvp/linear.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace pbvp;

TEST(PathJson, EmptyAndNonEmpty) {
    EXPECT_EQ(path_to_json(JumpPath{}).dump(), "[]");
    EXPECT_EQ(path_to_json(JumpPath{0.3, 0.7}).dump(), "[0.3,0.7]");
    EXPECT_EQ(path_from_json(Json::parse("[0.3, 0.7]")).size(), 2u);
    EXPECT_TRUE(path_from_json(Json::parse("[]")).empty());
    EXPECT_THROW(path_from_json(Json::parse("[0.7, 0.3]")), ArgumentError);
    EXPECT_THROW(path_from_json(Json::parse("{\"t\": 1}")), ArgumentError);
    EXPECT_THROW(path_from_json(Json::parse("[\"x\"]")), ArgumentError);
}

TEST(TrajectoryJson, RoundTripIsIdentical) {
    Rng rng(90, 0);
    for (int i = 0; i < 30; ++i) {
        const auto lc = testkit::random_linear(rng, 2.0, -0.9, 2.0);
        const auto path = testkit::random_path(rng, 5);
        const auto record = solve_linear_bvp(lc, BoundaryMap::affine(rng.uniform(-2.0, 0.0), 1.0), path).record(41);
        const std::string text = pretty(record_to_json(record));
        const auto back = record_from_json(Json::parse(text));
        EXPECT_EQ(back, record);
        EXPECT_EQ(pretty(record_to_json(back)), text);
    }
}

TEST(TrajectoryJson, LayoutAndSortedKeys) {
    const auto traj = solve_linear_bvp(LinearCoefficients::constant(0, 0, 0, 0), BoundaryMap::affine(-1.0, 2.0),
                                       JumpPath{0.5});
    const auto j = record_to_json(traj.record(3));
    EXPECT_DOUBLE_EQ(j["x0"].get<double>(), 1.0);
    EXPECT_EQ(j["samples"].size(), 3u);
    EXPECT_EQ(j["jumps"][0]["t"].get<double>(), 0.5);
    const std::string text = j.dump();
    EXPECT_LT(text.find("\"backward\""), text.find("\"jump_times\""));
    EXPECT_LT(text.find("\"jumps\""), text.find("\"samples\""));
    EXPECT_LT(text.find("\"samples\""), text.find("\"x0\""));
    EXPECT_THROW(record_from_json(Json::parse("{\"x0\": 1}")), ArgumentError);
}

TEST(ChaosJson, RoundTripAndEvaluation) {
    const auto series = no_jump_series(1.0, 0.6, 12);
    const auto j = chaos_to_json(series);
    EXPECT_EQ(j[0]["kernel"]["indicator"].get<double>(), 0.6);
    const auto back = chaos_from_json(Json::parse(j.dump()));
    ASSERT_EQ(back.terms.size(), series.terms.size());
    for (const auto& omega : {JumpPath{}, JumpPath{0.2}, JumpPath{0.4, 0.9}}) {
        EXPECT_EQ(eval_chaos(back, omega), eval_chaos(series, omega));
    }
    ChaosSeries constant;
    constant.terms.push_back({0, 2.0, ChaosKernel::constant_one()});
    EXPECT_EQ(chaos_to_json(constant)[0]["kernel"], "const");
    ChaosSeries fn;
    fn.terms.push_back({1, 1.0, ChaosKernel::function([](double r) { return r; })});
    EXPECT_THROW(chaos_to_json(fn), CapabilityError);
    EXPECT_THROW(chaos_from_json(Json::parse("[{\"n\": 1, \"c_n\": 1, \"kernel\": \"sin\"}]")), ArgumentError);
}

TEST(Csv, EscapingFollowsRfc4180) {
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
    EXPECT_EQ(csv_escape(""), "");
}

TEST(Csv, WriterParserRoundTrip) {
    const std::vector<std::vector<std::string>> rows = {
        {"id", "label", "value"}, {"1", "a,b", "0.5"}, {"2", "quote \" inside", ""}, {"3", "multi\r\nline", "-1e-300"}};
    std::ostringstream out;
    CsvWriter csv(out, rows[0]);
    for (std::size_t i = 1; i < rows.size(); ++i) csv.row(rows[i]);
    EXPECT_EQ(parse_csv(out.str()), rows);
    EXPECT_THROW(csv.row({"only one"}), ArgumentError);
    EXPECT_THROW(parse_csv("\"open"), ArgumentError);
    EXPECT_EQ(parse_csv("a,b\nc,d\n"), (std::vector<std::vector<std::string>>{{"a", "b"}, {"c", "d"}}));
}

TEST(Csv, NumbersReadBackExactly) {
    Rng rng(91, 0);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-30.0, 30.0));
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(3.0), "3");
}

TEST(Csv, LawAndSensitivityHeaders) {
    LawEstimate est;
    est.samples.push_back({0, 1, 2, 0.25, false});
    est.samples.push_back({1, 0, 0, 1.5, true});
    std::ostringstream law;
    write_law_samples_csv(law, est);
    const auto rows = parse_csv(law.str());
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"path_id", "N_t", "N1", "X_t", "is_atom"}));
    EXPECT_EQ(rows[2], (std::vector<std::string>{"1", "0", "0", "1.5", "1"}));

    std::ostringstream sens;
    write_sensitivity_csv(sens, {{3, 0, 0.5, 1.25, 1.25, 0.0}});
    EXPECT_EQ(parse_csv(sens.str())[0], (std::vector<std::string>{"path_id", "j", "t", "analytic", "fd", "rel_err"}));
}

TEST(ReportJson, CiAndLawSummaries) {
    CiReport r;
    r.bins = 4;
    r.alpha = 0.01;
    r.samples = 10;
    r.cells.push_back({0, 1, 10, 0.2, 0.5, false});
    const auto j = ci_report_to_json(r);
    EXPECT_EQ(j["cells"][0]["p_value"].get<double>(), 0.5);
    EXPECT_FALSE(j["reject"].get<bool>());
    EXPECT_EQ(j["times"]["u"].get<double>(), 0.5);

    LawEstimate est;
    est.n_paths = 4;
    est.atom_mass_hat = 0.25;
    est.strata[{0, 0}].values = {1.0};
    est.strata[{0, 0}].atom = true;
    est.strata[{1, 0}].values = {0.1, 0.2, 0.3};
    const auto s = law_summary_to_json(est);
    EXPECT_EQ(s["strata"].size(), 2u);
    EXPECT_EQ(s["strata"][1]["weight"].get<double>(), 0.75);
    EXPECT_TRUE(s["strata"][0]["atom"].get<bool>());
}
