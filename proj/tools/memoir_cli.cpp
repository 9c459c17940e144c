// memoir command line: replay transcripts, evaluate query suites, diff
// reports, and serve the REST API.

#include <memoir/engine.hpp>
#include <memoir/harness.hpp>
#include <memoir/service.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

memoir::EngineConfig load_config(const std::string& path) {
    if (path.empty()) return memoir::EngineConfig{};
    return memoir::EngineConfig::from_file(path);
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot read file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

struct ScopeFlags {
    std::string org = "default";
    std::string project = "default";
    std::string user = "user";
    std::string agent = "agent";

    memoir::ScopePrefix prefix() const { return {org, project, user, agent}; }

    void attach(CLI::App* cmd) {
        cmd->add_option("--org", org, "org_id for the replayed scope");
        cmd->add_option("--project", project, "project_id for the replayed scope");
        cmd->add_option("--user", user, "user_id for the replayed scope");
        cmd->add_option("--agent", agent, "agent_id for the replayed scope");
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"memoir: episodic memory engine harness"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    app.add_option("--config", config_path, "engine config JSON file")->configurable(false);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "replay a JSONL transcript into the engine");
    std::string ingest_transcript;
    std::string ingest_store;
    ScopeFlags ingest_scope;
    ingest->add_option("--transcript", ingest_transcript, "JSONL transcript file")->required();
    ingest->add_option("--store", ingest_store, "store file (overrides config store.path)");
    ingest_scope.attach(ingest);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "run a query suite and report metrics");
    std::string eval_transcript, eval_queries, eval_mode = "memory", eval_out, eval_table;
    std::size_t eval_parallel = 1;
    ScopeFlags eval_scope;
    evaluate->add_option("--transcript", eval_transcript, "JSONL transcript to ingest first")
        ->required();
    evaluate->add_option("--queries", eval_queries, "JSON array of query specs")->required();
    evaluate->add_option("--mode", eval_mode, "memory|agent")
        ->check(CLI::IsMember({"memory", "agent"}));
    evaluate->add_option("--out", eval_out, "write the JSON report here");
    evaluate->add_option("--table", eval_table, "write the text table here (default stdout)");
    evaluate->add_option("--parallel", eval_parallel, "concurrent query evaluation");
    eval_scope.attach(evaluate);

    // diff
    auto* diff = app.add_subcommand("diff", "ablation delta table between two reports");
    std::string diff_a, diff_b, diff_out;
    diff->add_option("--a", diff_a, "baseline report JSON")->required();
    diff->add_option("--b", diff_b, "candidate report JSON")->required();
    diff->add_option("--out", diff_out, "write the delta JSON here");

    // serve
    auto* serve = app.add_subcommand("serve", "launch the REST service");
    std::string serve_host;
    int serve_port = 0;
    auto* host_opt = serve->add_option("--host", serve_host, "bind address (overrides config)");
    auto* port_opt = serve->add_option("--port", serve_port, "bind port (overrides config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            auto cfg = load_config(config_path);
            if (!ingest_store.empty()) cfg.store_path = ingest_store;
            memoir::MemoryEngine engine(cfg);
            engine.replay();
            memoir::Harness harness(engine);
            auto report = harness.ingest_file(ingest_transcript, ingest_scope.prefix());
            std::cout << "episodes=" << report.episodes << " sentences=" << report.sentences
                      << " sessions=" << report.sessions << " parse_ms=" << report.parse_ms
                      << " ingest_ms=" << report.ingest_ms;
            if (!report.summary_tokens.zero() || !report.extraction_tokens.zero()) {
                std::cout << " summary_tokens=" << report.summary_tokens.input << "/"
                          << report.summary_tokens.output
                          << " extraction_tokens=" << report.extraction_tokens.input << "/"
                          << report.extraction_tokens.output;
            }
            std::cout << "\n";
            return 0;
        }

        if (evaluate->parsed()) {
            auto cfg = load_config(config_path);
            memoir::MemoryEngine engine(cfg);
            memoir::Harness harness(engine);
            auto ingest_report = harness.ingest_file(eval_transcript, eval_scope.prefix());
            std::cerr << "ingested episodes=" << ingest_report.episodes
                      << " sentences=" << ingest_report.sentences
                      << " in " << ingest_report.ingest_ms << " ms\n";
            auto queries = memoir::Harness::parse_queries(load_json_file(eval_queries));
            auto metrics = harness.evaluate(queries, eval_mode, eval_scope.prefix(), eval_parallel);
            std::string table = memoir::Harness::report_table(metrics);
            if (eval_table.empty()) {
                std::cout << table;
            } else {
                write_text_file(eval_table, table);
            }
            if (!eval_out.empty()) {
                write_text_file(eval_out, memoir::Harness::report_json(metrics).dump(2) + "\n");
            }
            return 0;
        }

        if (diff->parsed()) {
            auto delta = memoir::Harness::diff(load_json_file(diff_a), load_json_file(diff_b));
            std::cout << memoir::Harness::diff_table(delta);
            if (!diff_out.empty()) write_text_file(diff_out, delta.dump(2) + "\n");
            return 0;
        }

        if (serve->parsed()) {
            auto cfg = load_config(config_path);
            std::string host = host_opt->count() ? serve_host : cfg.service_host;
            int port = port_opt->count() ? serve_port : cfg.service_port;
            memoir::MemoryEngine engine(cfg);
            std::size_t replayed = engine.replay();
            if (replayed > 0) std::cerr << "replayed " << replayed << " episodes\n";
            memoir::MemoryService service(engine);
            std::cerr << "listening on " << host << ":" << port << "\n";
            if (!service.listen(host, port)) {
                std::cerr << "failed to bind " << host << ":" << port << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const memoir::Error& e) {
        std::cerr << "error (" << memoir::to_string(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
