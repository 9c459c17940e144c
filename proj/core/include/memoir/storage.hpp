#pragma once

#include <memoir/types.hpp>

#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace memoir {

/// Append-only storage event. The episode log is the ground truth; derived
/// state (sentence index, short-term windows, profiles) is rebuilt from it.
struct StorageEvent {
    enum class Kind { episode, delete_session };

    Kind kind = Kind::episode;
    Episode episode;    // kind == episode
    MemoryScope scope;  // kind == delete_session
};

/// Storage port behind the episode store. Implementations must persist
/// events in append order and replay them in the same order.
class StoragePort {
public:
    virtual ~StoragePort() = default;
    virtual void append(const StorageEvent& ev) = 0;
    virtual std::vector<StorageEvent> load() = 0;
    virtual void flush() {}
};

/// Keeps events in process memory. Default when no path is configured;
/// also the hermetic test backend.
class MemoryStorage final : public StoragePort {
public:
    void append(const StorageEvent& ev) override;
    std::vector<StorageEvent> load() override;

private:
    std::vector<StorageEvent> events_;
    std::mutex mu_;
};

/// Single-file append log.
///
/// Layout: an 8-byte header — magic "EPLOG" (5 bytes), a zero byte, and a
/// little-endian u16 format version — followed by length-prefixed records:
/// u32 little-endian payload size, then a JSON payload
///   {"t":"ep","ep":{...}}  or  {"t":"del","scope":{...}}.
/// A truncated trailing record is ignored on load.
class FileStorage final : public StoragePort {
public:
    explicit FileStorage(std::string path);
    ~FileStorage() override;

    void append(const StorageEvent& ev) override;
    std::vector<StorageEvent> load() override;
    void flush() override;

    const std::string& path() const { return path_; }

private:
    void open_for_append();

    std::string path_;
    std::ofstream out_;
    std::mutex mu_;
};

std::string storage_event_to_json(const StorageEvent& ev);
StorageEvent storage_event_from_json(const std::string& payload);

} // namespace memoir
