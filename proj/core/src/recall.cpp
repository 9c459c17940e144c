#include <memoir/error.hpp>
#include <memoir/recall.hpp>
#include <memoir/util.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace memoir {

const char* to_string(ContextFormat f) {
    return f == ContextFormat::plain ? "plain" : "structured_lines";
}

std::optional<ContextFormat> context_format_from_string(const std::string& s) {
    if (s == "plain") return ContextFormat::plain;
    if (s == "structured_lines") return ContextFormat::structured_lines;
    return std::nullopt;
}

void RetrievalConfig::validate() const {
    if (nucleus_k == 0 || cluster_top_k == 0) {
        raise(ErrorCode::bad_config, "nucleus_k and cluster_top_k must be positive");
    }
    if (cluster_top_k > nucleus_k) {
        raise(ErrorCode::bad_config, "cluster_top_k must not exceed nucleus_k");
    }
}

RecallPipeline::RecallPipeline(const EpisodeStore& store, const LtmIndex& index,
                               const ShortTermMemory& stm,
                               std::shared_ptr<RerankerPort> reranker)
    : store_(store), index_(index), stm_(stm), reranker_(std::move(reranker)) {}

std::vector<EpisodeCluster> RecallPipeline::contextualize(
    const std::vector<ScoredSentence>& hits, const RetrievalConfig& cfg) const {
    // Nucleus episode id -> cluster under construction.
    std::map<EpisodeId, EpisodeCluster> by_nucleus;

    for (const auto& hit : hits) {
        auto parent = store_.find_episode(hit.record.parent_episode);
        if (!parent) continue;  // episode deleted since indexing

        auto it = by_nucleus.find(parent->id);
        if (it == by_nucleus.end()) {
            const SequenceNo seq = parent->sequence;
            const std::size_t n = store_.session_size(parent->scope);
            if (n == 0) continue;
            SequenceNo lo = seq >= cfg.neighbors_before ? seq - cfg.neighbors_before : 0;
            SequenceNo hi = std::min<SequenceNo>(n - 1, seq + cfg.neighbors_after);

            EpisodeCluster cluster;
            cluster.nucleus = parent->id;
            cluster.nucleus_sequence = seq;
            cluster.nucleus_timestamp_ms = parent->timestamp_ms;
            cluster.lo_sequence = lo;
            cluster.hi_sequence = hi;
            for (const auto& ep : store_.get_episodes(parent->scope, lo, hi)) {
                cluster.members.push_back(ep.id);
            }
            cluster.best_similarity = hit.similarity;
            cluster.matched_sentences.push_back(hit.record.id);
            by_nucleus.emplace(parent->id, std::move(cluster));
        } else {
            it->second.matched_sentences.push_back(hit.record.id);
            it->second.best_similarity =
                std::max(it->second.best_similarity, static_cast<double>(hit.similarity));
        }
    }

    std::vector<EpisodeCluster> out;
    out.reserve(by_nucleus.size());
    for (auto& [id, cluster] : by_nucleus) out.push_back(std::move(cluster));
    std::sort(out.begin(), out.end(), [](const EpisodeCluster& a, const EpisodeCluster& b) {
        return a.nucleus_sequence < b.nucleus_sequence;
    });
    return out;
}

std::vector<EpisodeCluster> RecallPipeline::dedup(std::vector<EpisodeCluster> clusters,
                                                  const std::vector<Episode>& stm_window) const {
    std::set<EpisodeId> stm_ids;
    for (const auto& ep : stm_window) stm_ids.insert(ep.id);

    // Decompose each cluster into maximal consecutive runs of surviving
    // members. With a suffix-shaped window this keeps one run per cluster,
    // but the operation stays total for arbitrary inputs.
    struct Run {
        SequenceNo lo = 0, hi = 0;
        EpisodeId nucleus = 0;
        SequenceNo nucleus_seq = 0;
        std::int64_t nucleus_ts = 0;
        double best_sim = 0.0;
        std::vector<EpisodeId> members;
        std::vector<SentenceId> matched;
    };
    std::vector<Run> runs;

    for (auto& cluster : clusters) {
        Run current;
        bool open = false;
        SequenceNo seq = cluster.lo_sequence;
        std::vector<Run> parts;
        for (std::size_t i = 0; i < cluster.members.size(); ++i, ++seq) {
            EpisodeId id = cluster.members[i];
            if (stm_ids.count(id)) {
                if (open) {
                    parts.push_back(std::move(current));
                    current = Run{};
                    open = false;
                }
                continue;
            }
            if (!open) {
                current = Run{};
                current.lo = seq;
                open = true;
            }
            current.hi = seq;
            current.members.push_back(id);
            if (id == cluster.nucleus) {
                current.nucleus = id;
                current.nucleus_seq = cluster.nucleus_sequence;
                current.nucleus_ts = cluster.nucleus_timestamp_ms;
            }
        }
        if (open) parts.push_back(std::move(current));
        if (parts.empty()) continue;

        for (auto& part : parts) {
            part.best_sim = cluster.best_similarity;
            if (part.nucleus == 0) {
                // The nucleus fell to the window; anchor on the first member.
                part.nucleus = part.members.front();
                part.nucleus_seq = part.lo;
                if (auto ep = store_.find_episode(part.nucleus)) {
                    part.nucleus_ts = ep->timestamp_ms;
                }
            }
            part.matched = cluster.matched_sentences;
            runs.push_back(std::move(part));
        }
    }

    // Merge overlapping runs (sharing at least one sequence); adjacency
    // alone does not merge.
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.hi < b.hi;
    });
    std::vector<Run> merged;
    for (auto& run : runs) {
        if (!merged.empty() && run.lo <= merged.back().hi) {
            Run& base = merged.back();
            base.hi = std::max(base.hi, run.hi);
            for (EpisodeId id : run.members) base.members.push_back(id);
            for (SentenceId sid : run.matched) base.matched.push_back(sid);
            if (run.best_sim > base.best_sim ||
                (run.best_sim == base.best_sim && run.nucleus_seq < base.nucleus_seq)) {
                base.nucleus = run.nucleus;
                base.nucleus_seq = run.nucleus_seq;
                base.nucleus_ts = run.nucleus_ts;
                base.best_sim = run.best_sim;
            }
        } else {
            merged.push_back(std::move(run));
        }
    }

    std::vector<EpisodeCluster> out;
    out.reserve(merged.size());
    for (auto& run : merged) {
        EpisodeCluster c;
        c.nucleus = run.nucleus;
        c.nucleus_sequence = run.nucleus_seq;
        c.nucleus_timestamp_ms = run.nucleus_ts;
        c.lo_sequence = run.lo;
        c.hi_sequence = run.hi;
        c.best_similarity = run.best_sim;

        std::set<EpisodeId> seen;
        for (EpisodeId id : run.members) {
            if (seen.insert(id).second) c.members.push_back(id);
        }
        std::sort(c.members.begin(), c.members.end(), [this](EpisodeId a, EpisodeId b) {
            auto ea = store_.find_episode(a);
            auto eb = store_.find_episode(b);
            SequenceNo sa = ea ? ea->sequence : 0;
            SequenceNo sb = eb ? eb->sequence : 0;
            return sa < sb;
        });

        std::set<SentenceId> seen_s;
        for (SentenceId sid : run.matched) {
            if (seen_s.insert(sid).second) c.matched_sentences.push_back(sid);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<EpisodeCluster> RecallPipeline::rerank(const std::vector<std::string>& query_texts,
                                                   std::vector<EpisodeCluster> clusters,
                                                   std::size_t top_k,
                                                   TokenLedger* ledger) const {
    if (query_texts.empty()) {
        throw std::invalid_argument("rerank requires at least one query text");
    }
    if (clusters.empty()) return clusters;

    std::string joined;
    for (std::size_t i = 0; i < query_texts.size(); ++i) {
        if (i > 0) joined += '\n';
        joined += query_texts[i];
    }

    bool fell_back = false;
    std::vector<double> scores;
    if (reranker_) {
        std::vector<std::string> passages;
        passages.reserve(clusters.size());
        for (const auto& c : clusters) passages.push_back(cluster_text(c));
        try {
            scores = reranker_->score(joined, passages);
            if (scores.size() != passages.size()) {
                raise(ErrorCode::reranker_unavailable, "reranker returned wrong score count");
            }
        } catch (const Error&) {
            fell_back = true;
        }
    } else {
        fell_back = true;
    }

    if (fell_back) {
        if (ledger) ledger->add_note("reranker_unavailable: nucleus similarity order");
        scores.clear();
        scores.reserve(clusters.size());
        for (const auto& c : clusters) scores.push_back(c.best_similarity);
    }

    for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].score = scores[i];

    std::sort(clusters.begin(), clusters.end(),
              [](const EpisodeCluster& a, const EpisodeCluster& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.nucleus_sequence != b.nucleus_sequence) {
                      return a.nucleus_sequence < b.nucleus_sequence;
                  }
                  return a.lo_sequence < b.lo_sequence;
              });
    if (clusters.size() > top_k) clusters.resize(top_k);
    return clusters;
}

void RecallPipeline::sort_chronological(std::vector<EpisodeCluster>& clusters) {
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const EpisodeCluster& a, const EpisodeCluster& b) {
                         if (a.nucleus_timestamp_ms != b.nucleus_timestamp_ms) {
                             return a.nucleus_timestamp_ms < b.nucleus_timestamp_ms;
                         }
                         return a.nucleus_sequence < b.nucleus_sequence;
                     });
}

std::string RecallPipeline::cluster_text(const EpisodeCluster& cluster) const {
    std::string text;
    for (EpisodeId id : cluster.members) {
        if (auto ep = store_.find_episode(id)) {
            if (!text.empty()) text += '\n';
            text += ep->content;
        }
    }
    return text;
}

std::string RecallPipeline::render_context(const RetrievalOutcome& outcome,
                                           ContextFormat format) const {
    std::ostringstream out;
    if (!outcome.stm_summary.empty()) {
        out << "SUMMARY:\n" << outcome.stm_summary << "\n";
    }
    auto line = [&](const Episode& ep) {
        out << '[' << ep.sequence << "] " << to_string(ep.producer) << " @ "
            << format_iso8601_ms(ep.timestamp_ms) << ": ";
        if (format == ContextFormat::structured_lines) {
            out << escape_linebreaks(ep.content);
        } else {
            out << ep.content;
        }
        out << '\n';
    };
    for (const auto& cluster : outcome.ltm_clusters) {
        for (EpisodeId id : cluster.members) {
            if (auto ep = store_.find_episode(id)) line(*ep);
        }
    }
    for (const auto& ep : outcome.stm_episodes) line(ep);
    return out.str();
}

RetrievalOutcome RecallPipeline::search(const MemoryScope& scope, const std::string& query,
                                        const RetrievalConfig& cfg,
                                        const SearchFilter& filter) const {
    cfg.validate();
    if (trim(query).empty()) {
        raise(ErrorCode::empty_content, "query is empty");
    }
    search_calls_.fetch_add(1);

    const std::string embed_text = cfg.user_query_prefix ? "user: " + query : query;
    auto query_vec = index_.embed_query(embed_text);
    auto hits = index_.knn_search(scope, query_vec, cfg.nucleus_k, filter);

    RetrievalOutcome outcome;
    auto [window, summary] = stm_.get_context(scope);
    outcome.stm_episodes = std::move(window);
    outcome.stm_summary = std::move(summary);

    auto clusters = contextualize(hits, cfg);
    clusters = dedup(std::move(clusters), outcome.stm_episodes);
    clusters = rerank({query}, std::move(clusters), cfg.cluster_top_k, &outcome.ledger);
    sort_chronological(clusters);
    outcome.ltm_clusters = std::move(clusters);
    outcome.rendered_context = render_context(outcome, cfg.format);
    return outcome;
}

} // namespace memoir
