#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "elcp/cli/app.hpp"
#include "elcp/cli/csv.hpp"
#include "elcp/cli/report.hpp"
#include "elcp/study_config.hpp"

namespace elcp::cli {
namespace {

namespace fs = std::filesystem;

const std::string kSourceDir = ELCP_SOURCE_DIR;

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("elcp_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }

    std::string write(const std::string& name, const std::string& content) const {
        const fs::path p = path_ / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

ColumnData parse(const std::string& text, const CsvOptions& opt = {}) {
    std::istringstream in(text);
    return read_column(in, opt);
}

TEST(Csv, HeaderlessFirstColumn) {
    const ColumnData c = parse("1.5\n-2\n3e-1\n");
    EXPECT_FALSE(c.has_header);
    EXPECT_EQ(c.values, (std::vector<double>{1.5, -2.0, 0.3}));
    EXPECT_EQ(c.column_name, "0");
}

TEST(Csv, HeaderSelectByNameOrIndex) {
    const std::string text = "\xEF\xBB\xBF" "date,\"price\",volume\n2020-01,1.0,10\n2020-02,2.5,11\n";
    EXPECT_EQ(parse(text, {"price", false}).values, (std::vector<double>{1.0, 2.5}));
    EXPECT_EQ(parse(text, {"2", false}).values, (std::vector<double>{10.0, 11.0}));
    EXPECT_TRUE(parse(text, {"volume", false}).has_header);
    try {
        parse(text, {"nope", false});
        FAIL();
    } catch (const CsvError& e) {
        EXPECT_EQ(e.kind(), CsvFailure::BadColumn);
    }
    try {
        parse(text);  // column 0 holds dates
        FAIL();
    } catch (const CsvError& e) {
        EXPECT_EQ(e.kind(), CsvFailure::NonNumeric);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Csv, MissingValuesAbortUnlessDropped) {
    const std::string text = "x\n1\nNA\n3\n\n4\n,\n";
    try {
        parse(text);
        FAIL();
    } catch (const CsvError& e) {
        EXPECT_EQ(e.kind(), CsvFailure::MissingValues);
    }
    const ColumnData c = parse(text, {"", true});
    EXPECT_EQ(c.values, (std::vector<double>{1, 3, 4}));
    EXPECT_EQ(c.dropped, 2u);
    EXPECT_EQ(c.rows_read, 5u);
}

TEST(Csv, WriteReadRoundTrip) {
    const std::vector<double> v{0.1, -1e-300, 12345.678901234567, 1.0 / 3.0};
    EXPECT_EQ(parse(write_column(v)).values, v);
}

RunReport sample_report() {
    ScanResult s;
    s.n = 120;
    s.p = 1;
    s.profile = {{24, 1.25, 3.5, 2.25}, {25, 0.0, 1.0, 1.0}};
    s.failed_k = {26};
    s.z_star = 1.25;
    s.k_hat = 24;
    s.theta_hat = 0.2;
    s.trim = {24, 24};
    RunReport r;
    r.command = "detect";
    r.arguments = {"detect", "in.csv"};
    r.input = InputDigest{"in.csv", "x", 0, 120, 120, 0, fingerprint({1.0})};
    r.seed = 5;
    r.elapsed_seconds = 0.5;
    r.result["scan"] = s;
    r.result["bootstrap"] = nullptr;
    return r;
}

TEST(Report, JsonRoundTripIsLossless) {
    const RunReport r = sample_report();
    const std::string text = to_json_text(r);
    const RunReport back = parse_report(text);
    EXPECT_EQ(back, r);
    EXPECT_EQ(to_json_text(back), text);
    const ScanResult s = back.result.at("scan").get<ScanResult>();
    EXPECT_TRUE(std::isnan(s.t_normalized));
    EXPECT_EQ(s.failed_k, std::vector<std::size_t>{26});
    EXPECT_EQ(nlohmann::json(s), r.result.at("scan"));
}

TEST(Report, UnknownFieldsAreIgnoredAndNewerSchemasRejected) {
    nlohmann::json j = sample_report();
    j["added_later"] = {{"x", 1}};
    j["result"]["scan"]["extra"] = true;
    EXPECT_NO_THROW(parse_report(j.dump()));
    j["schema_version"] = kSchemaVersion + 1;
    EXPECT_THROW(parse_report(j.dump()), InputError);
    EXPECT_THROW(parse_report("{not json"), InputError);
}

TEST(Report, SegmentationAndPowerPayloadsRoundTrip) {
    SegmentationResult seg;
    seg.change_points = {100};
    SegmentNode root;
    root.interval = {1, 250};
    root.decision = NodeDecision::Reject;
    root.change_point = 100;
    root.scan = sample_report().result.at("scan").get<ScanResult>();
    SegmentNode leaf;
    leaf.interval = {1, 100};
    leaf.depth = 1;
    leaf.decision = NodeDecision::TooShort;
    leaf.note = "no further testable segment (shorter than min_len)";
    seg.tree = {root, leaf};
    const nlohmann::json js = seg;
    EXPECT_EQ(nlohmann::json(js.get<SegmentationResult>()), js);

    PowerTable t;
    t.reps = 10;
    t.seed = 3;
    t.cells = {PowerCell{100, 20, NoiseKind::ScaledT4, 0.5, 10, 1, false}};
    const nlohmann::json jt = t;
    EXPECT_EQ(jt.get<PowerTable>().to_csv(), t.to_csv());
}

TEST(Report, TextRenderingMentionsDecision) {
    const std::string text = to_text(sample_report());
    EXPECT_NE(text.find("Z_n* = 1.250000 at k_hat = 24"), std::string::npos);
    EXPECT_NE(text.find("too short for the asymptotic calibration"), std::string::npos);
}

PowerStudyConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_power_config(in);
}

std::size_t config_error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}

TEST(Config, ParsesAllKeys) {
    const PowerStudyConfig c = parse_config(
        "# comment\n"
        "n = 100, 150\n"
        "k = 20\n"
        "k@150 = 30, 120   # per-n override\n"
        "phi_pre = 0.1\nphi_post = 0.5\n"
        "noise = gaussian, t4\nreps = 7\nalpha = 0.1\nseed = 99\nburn_in = 50\nsigma2 = separate\n");
    EXPECT_EQ(c.n_values, (std::vector<std::size_t>{100, 150}));
    EXPECT_EQ(c.k_values.at(100), std::vector<std::size_t>{20});
    EXPECT_EQ(c.k_values.at(150), (std::vector<std::size_t>{30, 120}));
    EXPECT_EQ(c.noises, (std::vector<NoiseKind>{NoiseKind::Gaussian, NoiseKind::ScaledT4}));
    EXPECT_EQ(c.reps, 7u);
    EXPECT_DOUBLE_EQ(c.alpha, 0.1);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.burn_in, 50u);
    EXPECT_FALSE(c.solver.shared_sigma2);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(config_error_line("n = 100\nk = 20\nbogus = 1\n"), 3u);
    EXPECT_EQ(config_error_line("n = 100\n\nk = twenty\n"), 3u);
    EXPECT_EQ(config_error_line("n = 100\nk = 20\nreps = 5\nreps = 6\n"), 4u);
    EXPECT_EQ(config_error_line("n = 100\nk = 20\nnoise = cauchy\n"), 3u);
    EXPECT_EQ(config_error_line("k = 20\n"), 2u);             // missing n, reported past the end
    EXPECT_EQ(config_error_line("n = 100\nk = 5\n"), 1u);     // k outside the trim, reported at n
    EXPECT_EQ(config_error_line("n = 100\nk = 20\nk@90 = 30\n"), 3u);
    EXPECT_EQ(config_error_line("n = 100\nk 20\n"), 2u);
    EXPECT_EQ(config_error_line("n = 100\nk = 20\nalpha = 2\n"), 3u);
}

TEST(Cli, DetectSingleChangeFixture) {
    TempDir tmp;
    const std::string profile = tmp.file("profile.csv");
    const Outcome o = invoke({"detect", kSourceDir + "/data/single_change_n250_k100.csv", "--format", "json",
                              "--profile-out", profile});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    const RunReport rep = parse_report(o.out);
    const ScanResult s = rep.result.at("scan").get<ScanResult>();
    EXPECT_TRUE(s.reject);
    EXPECT_EQ(s.trim, std::make_pair(std::size_t{30}, std::size_t{30}));
    EXPECT_EQ(rep.input->rows_used, 250u);
    EXPECT_EQ(rep.seed, kDefaultSeed);
    std::ifstream in(profile);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "k,stat");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, s.profile.size());
}

TEST(Cli, SegmentFixtures) {
    Outcome o = invoke({"segment", kSourceDir + "/data/single_change_n250_k100.csv", "--format", "json"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    EXPECT_EQ(parse_report(o.out).result.at("change_points").size(), 1u);
    o = invoke({"segment", kSourceDir + "/data/no_change_n300.csv", "--format", "json"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    EXPECT_TRUE(parse_report(o.out).result.at("change_points").empty());
}

TEST(Cli, SoybeanSizedTrim) {
    TempDir tmp;
    const auto x = gen_ar(587, {0.3}, NoiseKind::Gaussian, kDefaultBurnIn, 1);
    const std::string path = tmp.write("long.csv", write_column({x.values().begin(), x.values().end()}));
    const Outcome o = invoke({"detect", path, "--format", "json"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    const ScanResult s = parse_report(o.out).result.at("scan").get<ScanResult>();
    EXPECT_EQ(s.trim, std::make_pair(std::size_t{48}, std::size_t{48}));
}

TEST(Cli, ExitCodes) {
    TempDir tmp;
    EXPECT_EQ(invoke({"detect", tmp.file("absent.csv")}).code, kExitUnreadable);
    EXPECT_EQ(invoke({"detect", tmp.write("text.csv", "x\n1\nfoo\n")}).code, kExitNonNumeric);
    EXPECT_EQ(invoke({"detect", tmp.write("gap.csv", "x\n1\n\n2\nNA\n")}).code, kExitMissing);
    const Outcome flat = invoke({"detect", tmp.write("flat.csv", write_column(std::vector<double>(100, 2.0)))});
    EXPECT_EQ(flat.code, kExitNumerical);
    EXPECT_NE(flat.err.find("degenerate"), std::string::npos);
    EXPECT_EQ(invoke({"detect", tmp.write("short.csv", "1\n2\n3\n-1\n")}).code, kExitInvalidInput);
    EXPECT_EQ(invoke({"detect", kSourceDir + "/data/no_change_n300.csv", "--column", "missing"}).code, kExitUsage);
    EXPECT_EQ(invoke({"detect"}).code, kExitUsage);
    EXPECT_EQ(invoke({"bogus"}).code, kExitUsage);
    EXPECT_EQ(invoke({"critval", "--alpha", "1.5"}).code, kExitUsage);
    EXPECT_EQ(invoke({"power", tmp.write("bad.cfg", "n = 100\nk = 20\nfoo = 1\n")}).code, kExitConfig);
    EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, DropMissingWarns) {
    TempDir tmp;
    const auto x = gen_ar(120, {0.3}, NoiseKind::Gaussian, kDefaultBurnIn, 2);
    std::string csv = write_column({x.values().begin(), x.values().end()});
    csv += "NA\n";
    const Outcome o = invoke({"detect", tmp.write("gap.csv", csv), "--drop-missing"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    EXPECT_NE(o.out.find("breaks the time structure"), std::string::npos);
}

TEST(Cli, CritvalTable) {
    const Outcome o = invoke({"critval", "--format", "json", "--n", "250"});
    ASSERT_EQ(o.code, kExitOk);
    const auto rows = parse_report(o.out).result.at("rows");
    ASSERT_EQ(rows.size(), 3u);
    const double expected[] = {4.600149, 2.970195, 2.250367};
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(rows[i].at("t_alpha").get<double>(), expected[i], 1e-6);
    EXPECT_GT(rows[0].at("raw_threshold").get<double>(), rows[1].at("raw_threshold").get<double>());
    EXPECT_GT(rows[1].at("raw_threshold").get<double>(), rows[2].at("raw_threshold").get<double>());
    const Outcome half = invoke({"critval", "--alpha", "0.5"});
    EXPECT_NE(half.out.find("0.366513"), std::string::npos);
}

TEST(Cli, PowerSmokeConfigIsDeterministic) {
    TempDir tmp;
    const std::string cfg = kSourceDir + "/configs/smoke.cfg";
    const Outcome a = invoke({"power", cfg, "--out", tmp.file("a.csv")});
    ASSERT_EQ(a.code, kExitOk) << a.err;
    const Outcome b = invoke({"power", cfg, "--jobs", "2"});
    ASSERT_EQ(b.code, kExitOk) << b.err;
    EXPECT_EQ(a.out, b.out);
    std::ifstream in(tmp.file("a.csv"));
    const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(file, a.out);
    const PowerTable t = parse_report(invoke({"power", cfg, "--format", "json"}).out).result.get<PowerTable>();
    for (const auto& c : t.cells) EXPECT_TRUE(c.power == 0.0 || c.power == 1.0);
}

TEST(Cli, SimulateMatchesLibrary) {
    const Outcome o = invoke({"simulate", "--n", "250", "--k", "100", "--phi-pre", "0.1", "--phi-post", "0.5",
                              "--seed", "7"});
    ASSERT_EQ(o.code, kExitOk);
    std::ifstream in(kSourceDir + "/data/single_change_n250_k100.csv");
    const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(o.out, file);
}

}  // namespace
}  // namespace elcp::cli
