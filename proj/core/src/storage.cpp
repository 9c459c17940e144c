#include <memoir/error.hpp>
#include <memoir/storage.hpp>

#include <json.hpp>

#include <cstring>
#include <filesystem>

namespace memoir {

namespace {

constexpr char kMagic[6] = {'E', 'P', 'L', 'O', 'G', '\0'};
constexpr std::uint16_t kVersion = 1;

nlohmann::json scope_to_json(const MemoryScope& s) {
    return {{"org_id", s.org_id},
            {"project_id", s.project_id},
            {"user_id", s.user_id},
            {"agent_id", s.agent_id},
            {"session_id", s.session_id}};
}

MemoryScope scope_from_json(const nlohmann::json& j) {
    MemoryScope s;
    s.org_id = j.value("org_id", "");
    s.project_id = j.value("project_id", "");
    s.user_id = j.value("user_id", "");
    s.agent_id = j.value("agent_id", "");
    s.session_id = j.value("session_id", "");
    return s;
}

} // namespace

std::string storage_event_to_json(const StorageEvent& ev) {
    nlohmann::json j;
    if (ev.kind == StorageEvent::Kind::episode) {
        const Episode& e = ev.episode;
        j["t"] = "ep";
        j["ep"] = {{"id", e.id},
                   {"content", e.content},
                   {"producer", to_string(e.producer)},
                   {"ts", e.timestamp_ms},
                   {"seq", e.sequence},
                   {"scope", scope_to_json(e.scope)},
                   {"meta", e.metadata}};
    } else {
        j["t"] = "del";
        j["scope"] = scope_to_json(ev.scope);
    }
    return j.dump();
}

StorageEvent storage_event_from_json(const std::string& payload) {
    nlohmann::json j = nlohmann::json::parse(payload);
    StorageEvent ev;
    std::string t = j.value("t", "");
    if (t == "ep") {
        ev.kind = StorageEvent::Kind::episode;
        const auto& je = j.at("ep");
        ev.episode.id = je.value("id", 0ULL);
        ev.episode.content = je.value("content", "");
        ev.episode.producer = producer_from_string(je.value("producer", "user")).value_or(Producer::user);
        ev.episode.timestamp_ms = je.value("ts", static_cast<std::int64_t>(0));
        ev.episode.sequence = je.value("seq", 0ULL);
        ev.episode.scope = scope_from_json(je.at("scope"));
        if (je.contains("meta")) {
            ev.episode.metadata = je.at("meta").get<std::map<std::string, std::string>>();
        }
    } else if (t == "del") {
        ev.kind = StorageEvent::Kind::delete_session;
        ev.scope = scope_from_json(j.at("scope"));
    } else {
        raise(ErrorCode::parse_error, "unknown storage event type: " + t);
    }
    return ev;
}

// ---------------------------------------------------------------------------
// MemoryStorage
// ---------------------------------------------------------------------------

void MemoryStorage::append(const StorageEvent& ev) {
    std::lock_guard<std::mutex> lock(mu_);
    events_.push_back(ev);
}

std::vector<StorageEvent> MemoryStorage::load() {
    std::lock_guard<std::mutex> lock(mu_);
    return events_;
}

// ---------------------------------------------------------------------------
// FileStorage
// ---------------------------------------------------------------------------

FileStorage::FileStorage(std::string path) : path_(std::move(path)) {}

FileStorage::~FileStorage() {
    std::lock_guard<std::mutex> lock(mu_);
    if (out_.is_open()) out_.close();
}

void FileStorage::open_for_append() {
    bool fresh = !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) {
        raise(ErrorCode::provider_unavailable, "cannot open store file: " + path_);
    }
    if (fresh) {
        out_.write(kMagic, sizeof(kMagic));
        std::uint16_t ver = kVersion;
        char vb[2] = {static_cast<char>(ver & 0xff), static_cast<char>(ver >> 8)};
        out_.write(vb, 2);
        out_.flush();
    }
}

void FileStorage::append(const StorageEvent& ev) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!out_.is_open()) open_for_append();
    std::string payload = storage_event_to_json(ev);
    std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    char lb[4] = {static_cast<char>(len & 0xff), static_cast<char>((len >> 8) & 0xff),
                  static_cast<char>((len >> 16) & 0xff), static_cast<char>((len >> 24) & 0xff)};
    out_.write(lb, 4);
    out_.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out_.flush();
}

std::vector<StorageEvent> FileStorage::load() {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<StorageEvent> events;
    std::ifstream in(path_, std::ios::binary);
    if (!in) return events;

    char header[8];
    if (!in.read(header, sizeof(header))) return events;
    if (std::memcmp(header, kMagic, sizeof(kMagic)) != 0) {
        raise(ErrorCode::parse_error, "not a memoir store file: " + path_);
    }
    std::uint16_t ver = static_cast<std::uint8_t>(header[6]) |
                        (static_cast<std::uint16_t>(static_cast<std::uint8_t>(header[7])) << 8);
    if (ver != kVersion) {
        raise(ErrorCode::parse_error, "unsupported store version " + std::to_string(ver));
    }

    for (;;) {
        char lb[4];
        if (!in.read(lb, 4)) break;
        std::uint32_t len = static_cast<std::uint8_t>(lb[0]) |
                            (static_cast<std::uint32_t>(static_cast<std::uint8_t>(lb[1])) << 8) |
                            (static_cast<std::uint32_t>(static_cast<std::uint8_t>(lb[2])) << 16) |
                            (static_cast<std::uint32_t>(static_cast<std::uint8_t>(lb[3])) << 24);
        std::string payload(len, '\0');
        if (!in.read(payload.data(), len)) break;  // truncated tail: stop
        events.push_back(storage_event_from_json(payload));
    }
    return events;
}

void FileStorage::flush() {
    std::lock_guard<std::mutex> lock(mu_);
    if (out_.is_open()) out_.flush();
}

} // namespace memoir
