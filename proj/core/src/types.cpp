#include <memoir/types.hpp>

namespace memoir {

namespace {
constexpr char kSep = '\x1f';
} // namespace

const char* to_string(Producer p) {
    switch (p) {
        case Producer::user: return "user";
        case Producer::agent: return "agent";
        case Producer::system: return "system";
    }
    return "user";
}

std::optional<Producer> producer_from_string(const std::string& s) {
    if (s == "user") return Producer::user;
    if (s == "agent") return Producer::agent;
    if (s == "system") return Producer::system;
    return std::nullopt;
}

bool MemoryScope::valid() const {
    return !org_id.empty() && !project_id.empty() && !user_id.empty() &&
           !agent_id.empty() && !session_id.empty();
}

std::string MemoryScope::session_key() const {
    std::string k;
    k.reserve(org_id.size() + project_id.size() + user_id.size() +
              agent_id.size() + session_id.size() + 4);
    k += org_id;
    k += kSep;
    k += project_id;
    k += kSep;
    k += user_id;
    k += kSep;
    k += agent_id;
    k += kSep;
    k += session_id;
    return k;
}

std::string MemoryScope::user_key() const {
    std::string k;
    k += org_id;
    k += kSep;
    k += project_id;
    k += kSep;
    k += user_id;
    return k;
}

} // namespace memoir
