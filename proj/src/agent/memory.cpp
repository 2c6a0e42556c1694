#include "muse/agent/memory.hpp"

#include <fstream>

#include "muse/common/error.hpp"
#include "muse/common/file.hpp"

namespace muse::agent {

namespace fs = std::filesystem;

namespace {

constexpr std::pair<MemoryKind, std::string_view> kNames[] = {
    {MemoryKind::ModuleOutput, "module_output"},
    {MemoryKind::RetrievedFile, "retrieved_file"},
    {MemoryKind::ModelResponse, "model_response"},
    {MemoryKind::UserMessage, "user_message"},
};

}  // namespace

std::string_view to_string(MemoryKind kind) {
    for (const auto& [k, n] : kNames)
        if (k == kind) return n;
    return "user_message";
}

std::optional<MemoryKind> memory_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    return std::nullopt;
}

nlohmann::ordered_json to_json(const MemoryEntry& e) {
    nlohmann::ordered_json j;
    j["seq"] = e.seq;
    j["turn"] = e.turn;
    j["kind"] = to_string(e.kind);
    j["label"] = e.label;
    if (e.artifact.empty())
        j["content"] = e.content;
    else
        j["artifact"] = e.artifact;
    j["timestamp"] = e.timestamp;
    return j;
}

MemoryEntry memory_entry_from_json(const nlohmann::json& j) {
    try {
        MemoryEntry e;
        e.seq = j.at("seq");
        e.turn = j.at("turn");
        const auto kind = memory_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown memory kind " + j["kind"].dump());
        e.kind = *kind;
        e.label = j.value("label", "");
        e.content = j.value("content", "");
        e.artifact = j.value("artifact", "");
        e.timestamp = j.value("timestamp", "");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed memory entry: ") + ex.what());
    }
}

MemoryBank::MemoryBank(fs::path directory, size_t inline_limit)
    : directory_(std::move(directory)), inline_limit_(inline_limit) {
    if (!directory_.empty()) fs::create_directories(directory_ / "artifacts");
}

MemoryBank MemoryBank::load(const fs::path& directory, size_t inline_limit) {
    MemoryBank bank(directory, inline_limit);
    std::ifstream in(directory / "memory.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            bank.entries_.push_back(memory_entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "corrupt memory line: " + std::string(e.what()));
        }
    }
    return bank;
}

const MemoryEntry& MemoryBank::append(MemoryEntry entry) {
    entry.seq = entries_.empty() ? 1 : entries_.back().seq + 1;
    if (!entries_.empty() && entry.turn < entries_.back().turn)
        throw Error(ErrorCode::InvalidArgument, "memory turns must not decrease");
    if (entry.content.size() > inline_limit_) {
        entry.artifact = "artifacts/" + std::to_string(entry.seq) + ".txt";
        if (directory_.empty()) {
            artifacts_.push_back(std::move(entry.content));
            entry.artifact = "mem:" + std::to_string(artifacts_.size() - 1);
        } else {
            write_file(directory_ / entry.artifact, entry.content);
        }
        entry.content.clear();
    }
    if (!directory_.empty()) {
        std::ofstream out(directory_ / "memory.jsonl", std::ios::app | std::ios::binary);
        out << to_json(entry).dump() << "\n";
        if (!out) throw Error(ErrorCode::IoError, "cannot append to " + (directory_ / "memory.jsonl").string());
    }
    entries_.push_back(std::move(entry));
    return entries_.back();
}

std::vector<MemoryEntry> MemoryBank::query(std::optional<MemoryKind> kind, size_t limit) const {
    std::vector<MemoryEntry> out;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (kind && it->kind != *kind) continue;
        out.push_back(*it);
        if (limit != 0 && out.size() == limit) break;
    }
    return out;
}

std::string MemoryBank::payload(const MemoryEntry& e) const {
    if (e.artifact.empty()) return e.content;
    if (e.artifact.rfind("mem:", 0) == 0) return artifacts_.at(std::stoul(e.artifact.substr(4)));
    return read_file(directory_ / e.artifact);
}

}  // namespace muse::agent
