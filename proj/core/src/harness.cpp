#include <memoir/error.hpp>
#include <memoir/harness.hpp>
#include <memoir/prompts.hpp>
#include <memoir/util.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace memoir {

namespace {

double ms_between(std::chrono::steady_clock::time_point a,
                  std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string gold_id(const std::string& session_id, SequenceNo seq) {
    return session_id + "#" + std::to_string(seq);
}

std::string fill_tag(std::string text, const std::string& tag, const std::string& value) {
    auto pos = text.find(tag);
    if (pos != std::string::npos) text.replace(pos, tag.size(), value);
    return text;
}

// Token-level F1 between candidate and reference (multiset overlap of
// whitespace tokens, lowercased).
double token_f1(const std::string& candidate, const std::string& reference) {
    auto bag = [](const std::string& s) {
        std::map<std::string, std::size_t> counts;
        std::string cur;
        for (char c : s) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!cur.empty()) ++counts[to_lower(cur)];
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) ++counts[to_lower(cur)];
        return counts;
    };
    auto cand = bag(candidate);
    auto ref = bag(reference);
    std::size_t cand_total = 0, ref_total = 0, common = 0;
    for (const auto& [tok, n] : cand) cand_total += n;
    for (const auto& [tok, n] : ref) ref_total += n;
    for (const auto& [tok, n] : cand) {
        auto it = ref.find(tok);
        if (it != ref.end()) common += std::min(n, it->second);
    }
    if (common == 0 || cand_total == 0 || ref_total == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(cand_total);
    double recall = static_cast<double>(common) / static_cast<double>(ref_total);
    return 2.0 * precision * recall / (precision + recall);
}

} // namespace

std::vector<TranscriptLine> Harness::parse_transcript(std::istream& in) {
    std::vector<TranscriptLine> lines;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (trim(raw).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::parse_error,
                  "transcript line " + std::to_string(line_no) + ": " + e.what());
        }
        TranscriptLine line;
        line.session_id = j.value("session_id", "");
        if (line.session_id.empty()) {
            raise(ErrorCode::parse_error,
                  "transcript line " + std::to_string(line_no) + ": session_id is required");
        }
        auto producer = producer_from_string(j.value("producer", "user"));
        if (!producer) {
            raise(ErrorCode::parse_error,
                  "transcript line " + std::to_string(line_no) + ": unknown producer");
        }
        line.producer = *producer;
        if (!j.contains("timestamp")) {
            raise(ErrorCode::parse_error,
                  "transcript line " + std::to_string(line_no) + ": timestamp is required");
        }
        const auto& ts = j.at("timestamp");
        if (ts.is_number()) {
            line.timestamp_ms = ts.get<std::int64_t>();
        } else if (ts.is_string()) {
            auto parsed = parse_iso8601_ms(ts.get<std::string>());
            if (!parsed) {
                raise(ErrorCode::parse_error,
                      "transcript line " + std::to_string(line_no) + ": bad timestamp");
            }
            line.timestamp_ms = *parsed;
        } else {
            raise(ErrorCode::parse_error,
                  "transcript line " + std::to_string(line_no) + ": bad timestamp");
        }
        line.content = j.value("content", "");
        if (trim(line.content).empty()) {
            raise(ErrorCode::parse_error,
                  "transcript line " + std::to_string(line_no) + ": content is empty");
        }
        if (j.contains("metadata")) {
            line.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

IngestReport Harness::ingest(std::istream& jsonl, const ScopePrefix& prefix) {
    IngestReport report;
    auto t0 = std::chrono::steady_clock::now();
    auto lines = parse_transcript(jsonl);  // parse errors abort before any write
    auto t1 = std::chrono::steady_clock::now();
    report.parse_ms = ms_between(t0, t1);

    std::size_t sentences_before = engine_.ltm().total_records();
    auto tokens_before = engine_.ingest_tokens();
    std::set<std::string> sessions;
    std::string current_session;
    try {
        for (const auto& line : lines) {
            current_session = line.session_id;
            sessions.insert(line.session_id);
            engine_.add_episode(prefix.scope_for(line.session_id), line.content, line.producer,
                                line.timestamp_ms, line.metadata);
            ++report.episodes;
        }
    } catch (const Error&) {
        // Session-atomic abort: roll back the partially ingested session.
        engine_.delete_session(prefix.scope_for(current_session));
        throw;
    }
    auto t2 = std::chrono::steady_clock::now();
    report.ingest_ms = ms_between(t1, t2);
    report.sessions = sessions.size();
    report.sentences = engine_.ltm().total_records() - sentences_before;
    auto tokens_after = engine_.ingest_tokens();
    report.summary_tokens = {tokens_after.summary.input - tokens_before.summary.input,
                             tokens_after.summary.output - tokens_before.summary.output};
    report.extraction_tokens = {
        tokens_after.profile_extraction.input - tokens_before.profile_extraction.input,
        tokens_after.profile_extraction.output - tokens_before.profile_extraction.output};
    return report;
}

IngestReport Harness::ingest_file(const std::string& path, const ScopePrefix& prefix) {
    std::ifstream in(path);
    if (!in) {
        raise(ErrorCode::parse_error, "cannot read transcript: " + path);
    }
    return ingest(in, prefix);
}

std::vector<QuerySpec> Harness::parse_queries(const nlohmann::json& j) {
    if (!j.is_array()) {
        raise(ErrorCode::parse_error, "queries file must be a JSON array");
    }
    std::vector<QuerySpec> out;
    for (const auto& q : j) {
        QuerySpec spec;
        spec.query = q.value("query", "");
        if (spec.query.empty()) {
            raise(ErrorCode::parse_error, "query entry without query text");
        }
        if (q.contains("gold")) {
            spec.gold_episode_ids = q.at("gold").get<std::vector<std::string>>();
        } else if (q.contains("gold_episode_ids")) {
            spec.gold_episode_ids = q.at("gold_episode_ids").get<std::vector<std::string>>();
        }
        spec.session_id = q.value("session_id", "");
        if (q.contains("agent_mode")) spec.agent_mode = q.at("agent_mode").get<bool>();
        if (q.contains("config")) spec.config_overrides = q.at("config");
        spec.reference_answer = q.value("reference_answer", "");
        out.push_back(std::move(spec));
    }
    return out;
}

MetricsReport Harness::evaluate(const std::vector<QuerySpec>& queries, const std::string& mode,
                                const ScopePrefix& prefix, std::size_t parallel) {
    MetricsReport report;
    report.mode = mode;
    report.config_echo = engine_.config().to_json();
    report.route_counts = {{"direct", 0}, {"split", 0}, {"chain", 0}, {"none", 0}};

    auto engine_sessions = engine_.store().sessions();
    std::string sole_session;
    if (engine_sessions.size() == 1) sole_session = engine_sessions.front().session_id;

    struct Slot {
        bool skipped = false;
        std::string warning;
        QueryResult result;
    };
    std::vector<Slot> slots(queries.size());

    auto run_one = [&](std::size_t i) {
        const QuerySpec& spec = queries[i];
        Slot& slot = slots[i];
        QueryResult& qr = slot.result;
        qr.query = spec.query;
        qr.gold = spec.gold_episode_ids;
        qr.agent_mode = spec.agent_mode.value_or(mode == "agent");

        std::string session = !spec.session_id.empty() ? spec.session_id : sole_session;
        if (session.empty()) {
            slot.skipped = true;
            slot.warning = "query '" + spec.query + "' skipped: ambiguous session";
            return;
        }
        qr.session_id = session;
        MemoryScope scope = prefix.scope_for(session);

        // Gold ids must exist in the ingested corpus.
        for (const auto& g : spec.gold_episode_ids) {
            auto hash_at = g.rfind('#');
            bool ok = hash_at != std::string::npos;
            if (ok) {
                std::string sid = g.substr(0, hash_at);
                SequenceNo seq = 0;
                try {
                    seq = std::stoull(g.substr(hash_at + 1));
                } catch (...) {
                    ok = false;
                }
                ok = ok && engine_.store().get_episode(prefix.scope_for(sid), seq).has_value();
            }
            if (!ok) {
                slot.skipped = true;
                slot.warning = "query '" + spec.query + "' skipped: missing gold id " + g;
                return;
            }
        }

        MemoryEngine::SearchRequest request;
        request.query = spec.query;
        request.agent_mode = qr.agent_mode;
        request.cfg = engine_.config().retrieval;
        if (spec.config_overrides) {
            const auto& c = *spec.config_overrides;
            request.cfg.nucleus_k = c.value("nucleus_k", request.cfg.nucleus_k);
            request.cfg.cluster_top_k = c.value("cluster_top_k", request.cfg.cluster_top_k);
            request.cfg.neighbors_before =
                c.value("neighbors_before", request.cfg.neighbors_before);
            request.cfg.neighbors_after = c.value("neighbors_after", request.cfg.neighbors_after);
            request.cfg.user_query_prefix =
                c.value("user_query_prefix", request.cfg.user_query_prefix);
            if (c.contains("format")) {
                auto f = context_format_from_string(c.at("format").get<std::string>());
                if (f) request.cfg.format = *f;
            }
        }

        auto result = engine_.search(scope, request);
        qr.ledger = result.outcome.ledger;
        if (result.route) qr.route = to_string(result.route->route);

        std::set<std::string> retrieved;
        for (const auto& ep : result.outcome.stm_episodes) {
            retrieved.insert(gold_id(ep.scope.session_id, ep.sequence));
        }
        for (const auto& cluster : result.outcome.ltm_clusters) {
            for (EpisodeId id : cluster.members) {
                if (auto ep = engine_.store().find_episode(id)) {
                    retrieved.insert(gold_id(ep->scope.session_id, ep->sequence));
                }
            }
        }
        qr.retrieved.assign(retrieved.begin(), retrieved.end());

        if (!qr.gold.empty()) {
            std::size_t found = 0;
            for (const auto& g : qr.gold) {
                if (retrieved.count(g)) ++found;
            }
            qr.recall = static_cast<double>(found) / static_cast<double>(qr.gold.size());
            qr.hit = found == qr.gold.size();
        }

        // Answer/judge hook: disabled without a chat provider or a reference.
        auto chat = engine_.chat_port();
        if (chat && !spec.reference_answer.empty()) {
            std::string answer_prompt = prompts::kAnswerV1;
            answer_prompt = fill_tag(answer_prompt, "{search_prompt}",
                                     engine_.config().search_prompt);
            answer_prompt =
                fill_tag(answer_prompt, "{context}", result.outcome.rendered_context);
            answer_prompt = fill_tag(answer_prompt, "{question}", spec.query);
            try {
                auto answered = chat->complete(answer_prompt);
                qr.judge_tokens += NodeTokens{answered.input_tokens, answered.output_tokens};
                qr.answer = trim(answered.text);

                std::string judge_prompt = prompts::kJudgeV1;
                judge_prompt = fill_tag(judge_prompt, "{question}", spec.query);
                judge_prompt = fill_tag(judge_prompt, "{reference}", spec.reference_answer);
                judge_prompt = fill_tag(judge_prompt, "{candidate}", qr.answer);
                auto judged = chat->complete(judge_prompt);
                qr.judge_tokens += NodeTokens{judged.input_tokens, judged.output_tokens};
                for (const auto& raw : split_lines(judged.text)) {
                    std::string line = trim(raw);
                    if (to_lower(line).rfind("score:", 0) == 0) {
                        qr.judge_score = trim(line.substr(6)).rfind('1', 0) == 0 ? 1 : 0;
                        qr.judged = true;
                    }
                }
                if (qr.judged) qr.answer_f1 = token_f1(qr.answer, spec.reference_answer);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::llm_unavailable &&
                    e.code() != ErrorCode::provider_unavailable) {
                    throw;
                }
                qr.judged = false;  // hook degrades silently, recall still stands
            }
        }
    };

    if (parallel <= 1) {
        for (std::size_t i = 0; i < queries.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> workers;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < parallel; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= queries.size()) return;
                    run_one(i);
                }
            });
        }
        for (auto& t : workers) t.join();
    }

    double recall_sum = 0.0;
    double in_sum = 0.0;
    double out_sum = 0.0;
    double judge_sum = 0.0;
    double f1_sum = 0.0;
    std::size_t hits = 0;
    for (auto& slot : slots) {
        if (slot.skipped) {
            ++report.skipped;
            report.warnings.push_back(slot.warning);
            continue;
        }
        ++report.evaluated;
        recall_sum += slot.result.recall;
        if (slot.result.hit) ++hits;
        auto total = slot.result.ledger.total();
        in_sum += static_cast<double>(total.input);
        out_sum += static_cast<double>(total.output);
        if (slot.result.judged) {
            ++report.judged;
            judge_sum += slot.result.judge_score;
            f1_sum += slot.result.answer_f1;
        }
        report.route_counts[slot.result.route.empty() ? "none" : slot.result.route] += 1;
        report.queries.push_back(std::move(slot.result));
    }
    if (report.evaluated > 0) {
        report.mean_recall = recall_sum / static_cast<double>(report.evaluated);
        report.hit_rate = static_cast<double>(hits) / static_cast<double>(report.evaluated);
        report.mean_input_tokens = in_sum / static_cast<double>(report.evaluated);
        report.mean_output_tokens = out_sum / static_cast<double>(report.evaluated);
    }
    if (report.judged > 0) {
        report.mean_judge_score = judge_sum / static_cast<double>(report.judged);
        report.mean_answer_f1 = f1_sum / static_cast<double>(report.judged);
    }
    return report;
}

nlohmann::json Harness::report_json(const MetricsReport& report) {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : report.queries) {
        nlohmann::json entry{{"query", q.query},
                             {"session_id", q.session_id},
                             {"agent_mode", q.agent_mode},
                             {"gold", q.gold},
                             {"retrieved", q.retrieved},
                             {"recall", q.recall},
                             {"hit", q.hit},
                             {"route", q.route},
                             {"ledger", ledger_to_json(q.ledger)}};
        if (q.judged) {
            entry["answer"] = q.answer;
            entry["judge_score"] = q.judge_score;
            entry["answer_f1"] = q.answer_f1;
            entry["judge_tokens"] = {{"input", q.judge_tokens.input},
                                     {"output", q.judge_tokens.output}};
        }
        queries.push_back(std::move(entry));
    }
    return {{"schema_version", report.schema_version},
            {"mode", report.mode},
            {"config", report.config_echo},
            {"queries", queries},
            {"warnings", report.warnings},
            {"aggregate",
             {{"evaluated", report.evaluated},
              {"skipped", report.skipped},
              {"mean_recall", report.mean_recall},
              {"hit_rate", report.hit_rate},
              {"mean_input_tokens", report.mean_input_tokens},
              {"mean_output_tokens", report.mean_output_tokens},
              {"judged", report.judged},
              {"mean_judge_score", report.mean_judge_score},
              {"mean_answer_f1", report.mean_answer_f1},
              {"route_counts", report.route_counts}}}};
}

std::string Harness::report_table(const MetricsReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-48s %8s %6s %10s %10s %-8s\n", "query", "recall", "hit",
                  "tok_in", "tok_out", "route");
    out << line;
    for (const auto& q : report.queries) {
        std::string label = q.query.size() > 48 ? q.query.substr(0, 45) + "..." : q.query;
        auto total = q.ledger.total();
        std::snprintf(line, sizeof(line), "%-48s %8.3f %6s %10llu %10llu %-8s\n", label.c_str(),
                      q.recall, q.hit ? "yes" : "no",
                      static_cast<unsigned long long>(total.input),
                      static_cast<unsigned long long>(total.output),
                      q.route.empty() ? "-" : q.route.c_str());
        out << line;
    }
    std::snprintf(line, sizeof(line),
                  "evaluated=%zu skipped=%zu mean_recall=%.4f hit_rate=%.4f "
                  "mean_tok_in=%.1f mean_tok_out=%.1f\n",
                  report.evaluated, report.skipped, report.mean_recall, report.hit_rate,
                  report.mean_input_tokens, report.mean_output_tokens);
    out << line;
    return out.str();
}

nlohmann::json Harness::diff(const nlohmann::json& a, const nlohmann::json& b) {
    auto names = [](const nlohmann::json& r) {
        std::vector<std::string> qs;
        for (const auto& q : r.at("queries")) qs.push_back(q.at("query").get<std::string>());
        return qs;
    };
    if (names(a) != names(b)) {
        raise(ErrorCode::parse_error, "reports cover different query sets");
    }

    static const char* kMetrics[] = {"mean_recall",        "hit_rate",
                                     "mean_input_tokens",  "mean_output_tokens",
                                     "mean_judge_score",   "mean_answer_f1"};
    nlohmann::json rows = nlohmann::json::array();
    for (const char* metric : kMetrics) {
        double va = a.at("aggregate").at(metric).get<double>();
        double vb = b.at("aggregate").at(metric).get<double>();
        rows.push_back({{"metric", metric}, {"a", va}, {"b", vb}, {"delta", vb - va}});
    }
    return {{"schema_version", 1}, {"metrics", rows}};
}

std::string Harness::diff_table(const nlohmann::json& delta) {
    std::ostringstream out;
    char line[120];
    std::snprintf(line, sizeof(line), "%-20s %14s %14s %14s\n", "metric", "a", "b", "delta");
    out << line;
    for (const auto& row : delta.at("metrics")) {
        std::snprintf(line, sizeof(line), "%-20s %14.4f %14.4f %+14.4f\n",
                      row.at("metric").get<std::string>().c_str(), row.at("a").get<double>(),
                      row.at("b").get<double>(), row.at("delta").get<double>());
        out << line;
    }
    return out.str();
}

} // namespace memoir
