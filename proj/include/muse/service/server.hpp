#pragma once

#include <memory>

#include "muse/service/config.hpp"

namespace muse::service {

/// HTTP/JSON front of the engine. Endpoints:
///   GET  /health
///   POST /transcribe        multipart: audio (WAV)
///   POST /align             multipart: score, performance (WAV, MIDI or notes JSON), tempo_bpm?
///   POST /evaluate          multipart: score, performance, tempo_bpm?
///   GET  /library/search    ?q=&limit=
///   POST /library/match     JSON notes (array or {"notes": [...]})
///   POST /agent/session
///   POST /agent/message     JSON {session_id, text} or multipart with files
///   GET  /agent/memory      ?session_id=&kind=&limit=
/// Every non-2xx body is {code, message[, detail]}.
class Service {
public:
    explicit Service(ServiceConfig config);
    Service(ServiceConfig config, agent::AgentConfig agent);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds host:port (a free port when 0) and returns the port.
    int bind();
    /// Serves until stop(); call bind() first.
    void listen();
    void stop();
    /// Blocks until the listener accepts connections.
    void wait_until_ready();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace muse::service
