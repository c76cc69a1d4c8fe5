#include <sage/datasets.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace sage {
namespace {

namespace fs = std::filesystem;

class DatasetFiles : public ::testing::Test {
protected:
    fs::path dir = fs::temp_directory_path() / ("sage_ds_" + std::to_string(::getpid()));
    void SetUp() override {
        fs::remove_all(dir);
        fs::create_directories(dir / "qrels");
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& content) {
        const auto p = dir / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }
    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    template <typename Fn>
    static std::string error_of(Fn fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            return e.what();
        }
        return "";
    }
};

TEST_F(DatasetFiles, PairsLoadAndRoundTrip) {
    const std::string content =
        "{\"id\":\"p1\",\"summary\":\"s1\",\"text\":\"t1\"}\n"
        "{\"id\":\"p2\",\"summary\":\"s2 \\\"q\\\"\",\"text\":\"naïve\\nline\"}\n"
        "{\"id\":\"p3\",\"summary\":\"s3\",\"text\":\"t3\"}\n";
    const auto pairs = load_pairs(write("pairs.jsonl", content));
    ASSERT_EQ(pairs.size(), 3u);
    EXPECT_EQ(pairs[1].text, "naïve\nline");
    EXPECT_EQ(to_jsonl(pairs), content);
}

TEST_F(DatasetFiles, MissingFieldNamesLine) {
    const auto p = write("bad.jsonl", "{\"id\":\"a\",\"text\":\"t\",\"summary\":\"s\"}\n\n{\"id\":\"b\",\"text\":\"t\"}\n");
    EXPECT_THROW(load_pairs(p), ParseError);
    const auto msg = error_of([&] { load_pairs(p); });
    EXPECT_NE(msg.find("bad.jsonl:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("summary"), std::string::npos);
}

TEST_F(DatasetFiles, ErrorsByKind) {
    EXPECT_THROW(load_pairs(dir / "absent.jsonl"), IoError);
    EXPECT_THROW(load_pairs(write("x.jsonl", "{not json}\n")), ParseError);
    EXPECT_THROW(load_pairs(write("y.jsonl", "{\"id\":\"a\",\"text\":\"\",\"summary\":\"s\"}\n")), ValidationError);
    EXPECT_THROW(load_pairs(write("z.jsonl", "{\"id\":\"a\",\"text\":\"t\",\"summary\":\"s\"}\n"
                                             "{\"id\":\"a\",\"text\":\"t\",\"summary\":\"s\"}\n")),
                 ValidationError);
}

TEST_F(DatasetFiles, Comparisons) {
    const std::string content =
        "{\"choice\":1,\"id\":\"c1\",\"post\":\"p\",\"subset\":\"tldr\",\"summary_a\":\"a\",\"summary_b\":\"b\"}\n"
        "{\"choice\":0,\"id\":\"c2\",\"post\":\"p\",\"summary_a\":\"a\",\"summary_b\":\"a\"}\n";
    const auto recs = load_comparisons(write("cmp.jsonl", content));
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].choice, 1);
    EXPECT_EQ(recs[0].subset, "tldr");
    EXPECT_EQ(to_jsonl(recs), content);
    EXPECT_THROW(load_comparisons(write("c2.jsonl",
                                        "{\"choice\":2,\"id\":\"c\",\"post\":\"p\",\"summary_a\":\"a\","
                                        "\"summary_b\":\"b\"}\n")),
                 ValidationError);
}

TEST_F(DatasetFiles, AxisEvals) {
    const std::string content =
        "{\"id\":\"e1\",\"ratings\":{\"accuracy\":7,\"coherence\":5,\"coverage\":4,\"overall\":6},"
        "\"summary\":\"s\",\"text\":\"t\"}\n";
    const auto recs = load_axis_evals(write("axis.jsonl", content));
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].ratings.at("coverage"), 4);
    EXPECT_EQ(to_jsonl(recs), content);
    EXPECT_THROW(load_axis_evals(write("a2.jsonl",
                                       "{\"id\":\"e\",\"ratings\":{\"accuracy\":8,\"coherence\":5,\"coverage\":4,"
                                       "\"overall\":6},\"summary\":\"s\",\"text\":\"t\"}\n")),
                 ValidationError);
    EXPECT_THROW(load_axis_evals(write("a3.jsonl",
                                       "{\"id\":\"e\",\"ratings\":{\"accuracy\":3,\"coherence\":5,\"overall\":6},"
                                       "\"summary\":\"s\",\"text\":\"t\"}\n")),
                 ParseError);
}

TEST_F(DatasetFiles, ClusteringSets) {
    const std::string content = "{\"labels\":[\"x\",\"y\",\"x\"],\"set_id\":\"s1\",\"texts\":[\"a\",\"b\",\"c\"]}\n";
    const auto sets = load_clustering_sets(write("cl.jsonl", content));
    ASSERT_EQ(sets.size(), 1u);
    EXPECT_EQ(sets[0].k, 2u);
    EXPECT_EQ(to_jsonl(sets), content);
    EXPECT_THROW(load_clustering_sets(write("c2.jsonl", "{\"labels\":[\"x\",\"x\"],\"set_id\":\"s\",\"texts\":[\"a\",\"b\"]}\n")),
                 ValidationError);
    EXPECT_THROW(load_clustering_sets(write("c3.jsonl", "{\"labels\":[\"x\",\"y\"],\"set_id\":\"s\",\"texts\":[\"a\"]}\n")),
                 ValidationError);
    EXPECT_THROW(load_clustering_sets(write("c4.jsonl",
                                            "{\"k\":3,\"labels\":[\"x\",\"y\"],\"set_id\":\"s\",\"texts\":[\"a\",\"b\"]}\n")),
                 ValidationError);
}

TEST_F(DatasetFiles, RetrievalBeirLayout) {
    write("corpus.jsonl", "{\"_id\":\"d1\",\"title\":\"T\",\"text\":\"one\"}\n{\"_id\":\"d2\",\"text\":\"two\"}\n");
    write("queries.jsonl", "{\"_id\":\"q1\",\"text\":\"one?\"}\n{\"_id\":\"q2\",\"text\":\"none\"}\n");
    write("qrels/test.tsv", "query-id\tcorpus-id\tscore\nq1\td1\t1\nq1\td2\t0\n");
    const auto ds = load_retrieval(dir);
    EXPECT_EQ(ds.corpus.size(), 2u);
    EXPECT_EQ(ds.corpus.at("d1").title, "T");
    EXPECT_EQ(ds.queries.size(), 2u);
    EXPECT_EQ(ds.qrels.at("q1").at("d1"), 1);

    write("qrels/test.tsv", "query-id\tcorpus-id\tscore\nq1\td9\t1\n");
    const auto msg = error_of([&] { load_retrieval(dir); });
    EXPECT_NE(msg.find("d9"), std::string::npos) << msg;
    EXPECT_THROW(load_retrieval(dir), ValidationError);

    write("qrels/test.tsv", "query-id\tcorpus-id\tscore\nq1\td1\tx\n");
    EXPECT_THROW(load_retrieval(dir), ParseError);
}

TEST(Sample, SubsetKeepsOrderAndIsDeterministic) {
    std::vector<int> items(50);
    for (int i = 0; i < 50; ++i) items[i] = i;
    EXPECT_EQ(sample(items, 50, 1), items);
    EXPECT_EQ(sample(items, 80, 1), items);
    const auto a = sample(items, 10, 7);
    EXPECT_EQ(a, sample(items, 10, 7));
    EXPECT_NE(a, sample(items, 10, 8));
    ASSERT_EQ(a.size(), 10u);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 10u);
    EXPECT_THROW(sample(items, 0, 1), InputError);
}

}  // namespace
}  // namespace sage
