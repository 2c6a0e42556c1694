#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace muse::agent {

enum class MemoryKind { ModuleOutput, RetrievedFile, ModelResponse, UserMessage };

std::string_view to_string(MemoryKind kind);
std::optional<MemoryKind> memory_kind_from_string(std::string_view name);

struct MemoryEntry {
    int seq = 0;    // strictly increasing across the session
    int turn = 0;   // non-decreasing; several entries share a turn
    MemoryKind kind = MemoryKind::UserMessage;
    std::string label;     // section label, module output name or file path
    std::string content;   // empty when stored as an artifact
    std::string artifact;  // path relative to the session directory
    std::string timestamp;
};

nlohmann::ordered_json to_json(const MemoryEntry& e);
MemoryEntry memory_entry_from_json(const nlohmann::json& j);

/// Append-only store. With a directory, every append is written through to
/// memory.jsonl and payloads above `inline_limit` bytes go to artifacts/.
class MemoryBank {
public:
    explicit MemoryBank(std::filesystem::path directory = {}, size_t inline_limit = 16384);

    /// Reads an existing memory.jsonl back.
    static MemoryBank load(const std::filesystem::path& directory, size_t inline_limit = 16384);

    /// Fills seq and stores the payload; returns the stored entry.
    const MemoryEntry& append(MemoryEntry entry);

    /// Most recent first, optionally filtered by kind; limit 0 keeps all.
    std::vector<MemoryEntry> query(std::optional<MemoryKind> kind = std::nullopt, size_t limit = 0) const;

    /// Inline content or the artifact's contents.
    std::string payload(const MemoryEntry& e) const;

    size_t size() const { return entries_.size(); }
    int last_turn() const { return entries_.empty() ? 0 : entries_.back().turn; }
    const std::vector<MemoryEntry>& entries() const { return entries_; }
    const std::filesystem::path& directory() const { return directory_; }

private:
    std::filesystem::path directory_;
    size_t inline_limit_;
    std::vector<MemoryEntry> entries_;
    std::vector<std::string> artifacts_;  // in-memory payloads when there is no directory
};

}  // namespace muse::agent
