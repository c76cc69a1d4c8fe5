#include <sage/sage.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace sage {
namespace {

const fs::path kFixtures = SAGE_FIXTURES_DIR;
const std::string kCli = SAGE_CLI_PATH;

struct Result {
    int code;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch() {
    static const auto dir = [] {
        auto d = fs::temp_directory_path() / "sage_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result sage(const std::string& args) {
    const auto out = scratch() / "stdout", err = scratch() / "stderr";
    const int status = std::system((kCli + " " + args + " >" + out.string() + " 2>" + err.string()).c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write(const fs::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

std::string cfg_arg() { return "--config " + (kFixtures / "config.json").string(); }

TEST(Cli, SmokeRunWritesReportAndSidecar) {
    const auto out = scratch() / "smoke.json";
    const auto r = sage("run " + cfg_arg() + " --subject jaccard --task robustness --task clustering --sample 8 --out " +
                        out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto reports = reports_from_json(slurp(out));
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(reports[0].category_scores.size(), 2u);
    EXPECT_NE(r.out.find("jaccard"), std::string::npos);
    EXPECT_TRUE(fs::exists(scratch() / "smoke.meta.json"));

    const auto again = scratch() / "smoke2.json";
    ASSERT_EQ(sage("run " + cfg_arg() + " --subject jaccard --task robustness --task clustering --sample 8 --out " +
                   again.string())
                  .code,
              0);
    EXPECT_EQ(slurp(out), slurp(again));

    const auto shown = sage("report show --in " + out.string());
    EXPECT_EQ(shown.code, 0);
    EXPECT_EQ(shown.out, reports_to_table(reports));
}

TEST(Cli, ConfigErrorsExitTwoAndNameTheKey) {
    auto j = nlohmann::json::parse(slurp(kFixtures / "config.json"));
    j["datasets"]["robustness"][0]["path"] = (kFixtures / "absent.jsonl").string();
    const auto bad = scratch() / "bad.json";
    write(bad, j.dump());
    const auto r = sage("run --config " + bad.string() + " --task robustness");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("datasets.robustness[0].path"), std::string::npos) << r.err;

    EXPECT_EQ(sage("run").code, 2);                                       // missing --config
    EXPECT_EQ(sage("run " + cfg_arg() + " --task speed").code, 2);        // unknown task
    EXPECT_EQ(sage("run " + cfg_arg() + " --format xml").code, 2);
    EXPECT_EQ(sage("frobnicate").code, 2);
}

TEST(Cli, RuntimeFailureExitsOne) {
    const auto broken = scratch() / "broken.jsonl";
    write(broken, "{\"id\": \"a\", \"text\": \"fine\"}\nnot json\n");
    EXPECT_EQ(sage("perturb --kind numerize --in " + broken.string()).code, 1);

    const auto garbage = scratch() / "garbage.json";
    write(garbage, "{}");
    EXPECT_EQ(sage("report show --in " + garbage.string()).code, 1);
}

TEST(Cli, PerturbNumerize) {
    const auto in = scratch() / "one.jsonl";
    write(in, "{\"id\": \"d1\", \"text\": \"time\"}\n");
    const auto r = sage("perturb --kind numerize --in " + in.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("text"), "t1m3");
    EXPECT_EQ(j.at("id"), "d1");
    EXPECT_EQ(j.at("perturbation").at("kind"), "numerize");
}

TEST(Cli, PerturbTokenRemoveHalvesTokenCount) {
    std::string text;
    for (int i = 0; i < 40; ++i) text += (i ? " " : "") + std::string("word") + char('a' + i % 26);
    const auto in = scratch() / "long.jsonl";
    write(in, nlohmann::json{{"id", "d"}, {"text", text}}.dump() + "\n");
    const auto r = sage("perturb --kind token_remove --p 0.5 --pos 0 --in " + in.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto tok = make_tokenizer(std::nullopt);
    const auto before = tok->encode(text).size();
    const auto after = tok->encode(nlohmann::json::parse(r.out).at("text").get<std::string>()).size();
    EXPECT_NEAR(static_cast<double>(after), before / 2.0, 1.0);
}

TEST(Cli, PerturbShuffleIsSeeded) {
    const auto in = scratch() / "sent.jsonl";
    write(in,
          "{\"id\": \"s\", \"text\": \"One goes here. Two follows. Three is next. Four ends it. Five is extra.\"}\n");
    const auto out1 = scratch() / "s1.jsonl", out2 = scratch() / "s2.jsonl";
    const std::string base = "perturb --kind sentence_shuffle --seed 7 --in " + in.string() + " --out ";
    ASSERT_EQ(sage(base + out1.string()).code, 0);
    ASSERT_EQ(sage(base + out2.string()).code, 0);
    EXPECT_EQ(slurp(out1), slurp(out2));
    EXPECT_EQ(sage("perturb --kind token_remove --p 1.5 --in " + in.string()).code, 2);
}

}  // namespace
}  // namespace sage
