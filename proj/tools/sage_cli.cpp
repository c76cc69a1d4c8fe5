// sage: command-line front end.
//
//   sage run --config fixtures/config.json [--task T]... [--subject S]... [--seed N]
//            [--sample N] [--out report.json] [--format json|table] [--jobs N]
//   sage perturb --in docs.jsonl --kind numerize [--p 0.5 --pos 0] [--seed N] [--out out.jsonl]
//   sage embed-cache warm --config fixtures/config.json [--subject S]...
//   sage report show --in report.json [--format table|json]
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

#include <sage/http_provider.hpp>
#include <sage/sage.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace sage;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out << content;
        if (!out) throw IoError("write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

fs::path sidecar_path(const fs::path& out) {
    auto p = out;
    p.replace_extension(".meta.json");
    return p;
}

struct RunArgs {
    std::string config;
    std::vector<std::string> tasks;
    std::vector<std::string> subjects;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> sample;
    std::optional<std::string> out;
    std::string format = "json";
    std::optional<std::size_t> jobs;
};

RunConfig resolve(const RunArgs& a) {
    RunConfig cfg = load_config(a.config);
    if (!a.tasks.empty()) cfg.tasks = a.tasks;
    if (!a.subjects.empty()) cfg.subjects = a.subjects;
    if (a.seed) cfg.seed = *a.seed;
    if (a.sample)
        for (auto c : kCategories) cfg.sample[std::string(c)] = *a.sample;
    if (a.out) cfg.output = *a.out;
    if (a.jobs) cfg.jobs = *a.jobs;
    cfg.validate();
    return cfg;
}

int cmd_run(const RunArgs& a) {
    if (a.format != "json" && a.format != "table") throw ConfigError("--format: expected json or table");
    const auto cfg = resolve(a);
    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    const auto env = make_environment(cfg, make_provider);
    const auto reports = run_benchmark(cfg, env);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_file(cfg.output, emit_reports(reports, a.format));
    nlohmann::json meta{{"started_at", started},
                        {"finished_at", utc_now()},
                        {"elapsed_seconds", elapsed},
                        {"config", fs::absolute(a.config).string()},
                        {"jobs", cfg.jobs}};
    write_file(sidecar_path(cfg.output), meta.dump(2) + "\n");
    std::cout << reports_to_table(reports);
    std::cerr << "wrote " << cfg.output.string() << "\n";
    return 0;
}

struct PerturbArgs {
    std::string in;
    std::optional<std::string> out;
    std::string kind;
    double p = 0.0;
    double pos = 0.0;
    std::uint64_t seed = kDefaultSeed;
    std::optional<std::string> config;
};

int cmd_perturb(const PerturbArgs& a) {
    PerturbationSpec spec;
    try {
        spec.kind = parse_perturbation_kind(a.kind);
        spec.position = a.pos;
        spec.proportion = a.p;
        spec.validate();
    } catch (const InputError& e) {
        throw ConfigError(std::string("--kind/--p/--pos: ") + e.what());
    }
    std::optional<fs::path> vocab, needle_path;
    if (a.config) {
        const auto cfg = load_config(*a.config);
        vocab = cfg.vocab_path;
        needle_path = cfg.needle_path;
    }
    const auto tok = make_tokenizer(vocab);
    NeedleSource needle;
    if (needle_path) {
        std::ifstream in(*needle_path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        needle = NeedleSource(ss.str());
    }
    const PerturbationContext ctx{*tok, needle};

    std::ifstream in(a.in, std::ios::binary);
    if (!in) throw ConfigError("--in: cannot open " + a.in);
    std::ostringstream out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(a.in + ":" + std::to_string(no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
            throw ParseError(a.in + ":" + std::to_string(no) + ": missing field 'text'");
        const std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                                        : "line-" + std::to_string(no);
        const auto seeded = seeded_for(spec, a.seed, id);
        j["text"] = apply(seeded, j["text"].get<std::string>(), ctx);
        j["perturbation"] = {{"kind", std::string(to_string(spec.kind))},
                             {"label", spec.label()},
                             {"seed", a.seed}};
        out << j.dump() << "\n";
    }
    if (a.out)
        write_file(*a.out, out.str());
    else
        std::cout << out.str();
    return 0;
}

int cmd_warm(const RunArgs& a) {
    const auto cfg = resolve(a);
    const auto env = make_environment(cfg, make_provider);
    const auto data = load_data(cfg);
    std::set<std::string> texts;
    for (const auto& c : data.comparisons) texts.insert({c.post, c.summary_a, c.summary_b});
    for (const auto& e : data.axis_evals) texts.insert({e.text, e.summary});
    for (const auto& ds : data.robustness)
        for (const auto& p : ds.pairs) texts.insert({p.text, p.summary});
    for (const auto& ds : data.sensitivity) texts.insert(ds.texts.begin(), ds.texts.end());
    for (const auto& ds : data.clustering)
        for (const auto& s : ds.sets) texts.insert(s.texts.begin(), s.texts.end());
    for (const auto& ds : data.retrieval) {
        for (const auto& [id, d] : ds.data.corpus) texts.insert(document_string(d));
        for (const auto& [id, q] : ds.data.queries) texts.insert(q);
    }
    const std::vector<std::string> list(texts.begin(), texts.end());
    int warmed = 0;
    for (const auto& name : cfg.subjects) {
        auto subject = make_subject(name, cfg, env);
        auto* es = dynamic_cast<EmbeddingSubject*>(subject.get());
        if (!es) continue;
        if (!list.empty()) es->client().embed_batch(list);
        std::cout << name << ": " << list.size() << " texts, " << es->client().provider_calls()
                  << " provider calls\n";
        ++warmed;
    }
    if (!warmed) std::cout << "no embedding subjects selected; nothing to warm\n";
    if (!cfg.cache_dir) std::cerr << "note: cache.dir is not set, vectors were kept in memory only\n";
    return 0;
}

int cmd_show(const std::string& in, const std::string& format) {
    if (format != "json" && format != "table") throw ConfigError("--format: expected json or table");
    std::ifstream f(in, std::ios::binary);
    if (!f) throw ConfigError("--in: cannot open " + in);
    std::stringstream ss;
    ss << f.rdbuf();
    std::cout << emit_reports(reports_from_json(ss.str()), format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Similarity metric and embedding benchmark"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto add_common = [](CLI::App* sub, RunArgs& a) {
        sub->add_option("--config", a.config, "JSON config file")->required();
        sub->add_option("--subject", a.subjects, "Metric or embedding model id (repeatable)");
        sub->add_option("--seed", a.seed, "Global seed");
        sub->add_option("--sample", a.sample, "Records per dataset for every task");
        sub->add_option("--jobs", a.jobs, "Worker threads");
    };
    auto* run = app.add_subcommand("run", "Run the selected tasks and write reports");
    add_common(run, run_args);
    run->add_option("--task", run_args.tasks, "Task to run (repeatable)");
    run->add_option("--out", run_args.out, "Report path");
    run->add_option("--format", run_args.format, "json or table");

    PerturbArgs pargs;
    auto* perturb = app.add_subcommand("perturb", "Apply one perturbation to the text field of a JSONL file");
    perturb->add_option("--in", pargs.in, "Input JSONL")->required();
    perturb->add_option("--out", pargs.out, "Output JSONL (default stdout)");
    perturb->add_option("--kind", pargs.kind, "Perturbation kind")->required();
    perturb->add_option("--p", pargs.p, "Proportion for needle_insert / token_remove");
    perturb->add_option("--pos", pargs.pos, "Position in [0, 1] for needle_insert / token_remove");
    perturb->add_option("--seed", pargs.seed, "Seed");
    perturb->add_option("--config", pargs.config, "Config supplying tokenizer and needle paths");

    RunArgs warm_args;
    auto* cache = app.add_subcommand("embed-cache", "Embedding cache maintenance");
    cache->require_subcommand(1);
    auto* warm = cache->add_subcommand("warm", "Embed every dataset text for the configured models");
    add_common(warm, warm_args);
    warm->add_option("--task", warm_args.tasks, "Restrict to these tasks' datasets");

    std::string show_in, show_format = "table";
    auto* report = app.add_subcommand("report", "Report utilities");
    report->require_subcommand(1);
    auto* show = report->add_subcommand("show", "Print a saved report");
    show->add_option("--in", show_in, "report.json")->required();
    show->add_option("--format", show_format, "table or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (perturb->parsed()) return cmd_perturb(pargs);
        if (warm->parsed()) return cmd_warm(warm_args);
        if (show->parsed()) return cmd_show(show_in, show_format);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
